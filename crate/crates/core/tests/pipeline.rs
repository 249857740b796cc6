//! End to end through the public API on predator-prey, against the
//! hand-derived integral `log y1 + log y2 − y1 − y2`.

use conserva_core::{
    certificate_search_general, certificate_search_reduced, classify, formal_equilibrium_lv,
    integrate, make_certificate, normalize_lv_equilibrium, Chart, ClassLabel, Flow,
    IntegratorConfig, LotkaVolterraSystem, RealMatrix, RealVector, DEFAULT_RANK_TOL,
};

fn predator_prey() -> LotkaVolterraSystem {
    LotkaVolterraSystem::from_parts(&[&[0.0, 1.0], &[-1.0, 0.0]], &[-1.0, 1.0]).unwrap()
}

#[test]
fn predator_prey_end_to_end() {
    let lv = predator_prey();
    let eq = formal_equilibrium_lv(&lv, DEFAULT_RANK_TOL).unwrap();
    assert!(eq.feasible);
    let q = normalize_lv_equilibrium(&eq.representative).unwrap();
    assert!((q.as_vector() - RealVector::from_element(3, 1.0 / 3.0)).amax() < 1e-15);

    let sys = lv.to_replicator();
    let b = sys.b_matrix();
    assert_eq!(b, RealMatrix::from_row_slice(2, 2, &[-1.0, -2.0, 2.0, 1.0]));

    let general = certificate_search_general(&b, &q, DEFAULT_RANK_TOL).unwrap();
    let reduced = certificate_search_reduced(&sys.sub_block(), &q, DEFAULT_RANK_TOL).unwrap();
    assert_eq!((general.dimension(), reduced.dimension()), (1, 1));

    let d = general.representative(&q).unwrap();
    let cert = make_certificate(&d, &q, &b).unwrap();
    let want_d = RealMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
    assert!((&cert.d - want_d).amax() < 1e-12);
    assert!((&cert.c - RealVector::from_element(2, 1.0)).amax() < 1e-12);
    assert!((&cert.g + RealVector::from_element(2, 1.0)).amax() < 1e-12);

    let cls = classify(&b, &cert.d, DEFAULT_RANK_TOL).unwrap();
    assert!(cls.has_label(ClassLabel::Poisson));

    let h = cert.constant_of_motion(Chart::Y);
    let y0 = RealVector::from_vec(vec![0.5, 1.5]);
    let mut traj = integrate(
        &Flow::LotkaVolterra(lv),
        &y0,
        &IntegratorConfig::adaptive(1e-10, 20.0),
    )
    .unwrap();
    assert!(traj.status.is_completed());
    let drift = traj.observe(&h).unwrap().drift;
    assert!(drift.max_rel < 1e-6, "{drift:?}");
    let want = 0.5f64.ln() + 1.5f64.ln() - 2.0;
    assert!((h.eval_y(&y0).unwrap() - want).abs() < 1e-12);
}
