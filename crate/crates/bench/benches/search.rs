use conserva_bench::conservative_fixture;
use conserva_core::{
    certificate_search_general, certificate_search_reduced, classify, DEFAULT_RANK_TOL,
};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn searches(c: &mut Criterion) {
    let mut group = c.benchmark_group("certificate_search");
    for m in [2, 4, 8, 12] {
        let f = conservative_fixture(m, m as u64);
        group.bench_with_input(BenchmarkId::new("general", m), &f, |bench, f| {
            bench.iter(|| certificate_search_general(&f.b, &f.q, DEFAULT_RANK_TOL).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("reduced", m), &f, |bench, f| {
            bench.iter(|| {
                certificate_search_reduced(&f.system.sub_block(), &f.q, DEFAULT_RANK_TOL).unwrap()
            })
        });
    }
    group.finish();
}

fn classification(c: &mut Criterion) {
    let f = conservative_fixture(8, 8);
    let fam = certificate_search_general(&f.b, &f.q, DEFAULT_RANK_TOL).unwrap();
    let d = fam.representative(&f.q).unwrap();
    c.bench_function("classify/8", |bench| {
        bench.iter(|| classify(&f.b, &d, DEFAULT_RANK_TOL).unwrap())
    });
}

criterion_group!(benches, searches, classification);
criterion_main!(benches);
