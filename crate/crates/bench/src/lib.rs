//! Fixtures shared by the benchmarks in `benches/`.

use conserva_core::{
    normalize_lv_equilibrium, AffinePoint, LotkaVolterraSystem, RealMatrix, RealVector,
    ReplicatorSystem,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A replicator system with its equilibrium and chart matrix.
pub struct Fixture {
    pub system: ReplicatorSystem,
    pub q: AffinePoint,
    pub b: RealMatrix,
}

/// Skew-symmetrizable LV system in `m` species (`A' = S D'⁻¹`) with a
/// random interior equilibrium, so the certificate families are nonempty.
pub fn conservative_lv(m: usize, seed: u64) -> (LotkaVolterraSystem, RealVector) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = RealMatrix::zeros(m, m);
    for i in 0..m {
        for j in i + 1..m {
            let v = rng.gen_range(-1.0..1.0);
            s[(i, j)] = v;
            s[(j, i)] = -v;
        }
    }
    let dinv = RealVector::from_fn(m, |_, _| 1.0 / rng.gen_range(0.5..2.0));
    let qprime = RealVector::from_fn(m, |_, _| rng.gen_range(0.5..2.0));
    let a = s * RealMatrix::from_diagonal(&dinv);
    let r = -(&a * &qprime);
    (LotkaVolterraSystem::new(a, r).expect("finite"), qprime)
}

pub fn conservative_fixture(m: usize, seed: u64) -> Fixture {
    let (lv, qprime) = conservative_lv(m, seed);
    let system = lv.to_replicator();
    let b = system.b_matrix();
    Fixture {
        q: normalize_lv_equilibrium(&qprime).expect("positive equilibrium"),
        system,
        b,
    }
}
