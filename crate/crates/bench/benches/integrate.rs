use conserva_bench::{conservative_fixture, conservative_lv};
use conserva_core::{integrate, Flow, IntegratorConfig, RealVector};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn lotka_volterra(c: &mut Criterion) {
    let mut group = c.benchmark_group("integrate_lv");
    group.sample_size(20);
    for m in [2, 4, 8] {
        let (lv, qprime) = conservative_lv(m, 100 + m as u64);
        let y0 = qprime.map(|v| 1.2 * v);
        let flow = Flow::LotkaVolterra(lv);
        group.bench_with_input(BenchmarkId::new("rk45_1e-10", m), &(), |bench, _| {
            bench.iter(|| integrate(&flow, &y0, &IntegratorConfig::adaptive(1e-10, 20.0)).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("rk4_0.01", m), &(), |bench, _| {
            bench.iter(|| integrate(&flow, &y0, &IntegratorConfig::fixed(0.01, 20.0)).unwrap())
        });
    }
    group.finish();
}

fn chart_field(c: &mut Criterion) {
    let f = conservative_fixture(4, 7);
    let flow = Flow::XTilde { b: f.b, q: f.q };
    let u0 = RealVector::from_element(4, 0.3);
    c.bench_function("integrate_xtilde/4", |bench| {
        bench.iter(|| integrate(&flow, &u0, &IntegratorConfig::adaptive(1e-10, 20.0)).unwrap())
    });
}

criterion_group!(benches, lotka_volterra, chart_field);
criterion_main!(benches);
