mod common;

use chb::diagnostics::{
    apriori_monitor, balance_residuals, continuous_dependence_experiment, h1_dual_sq, h_minus1_sq, hdiv_dual_sq,
    inv_laplacian_pairing, inv_laplacian_pairing_dense, mixed_inv_laplacian_pairing, quadratic_seminorm, FieldSnapshot,
};
use chb::dynamics::{run, IntegratorKind, StepSettings};
use chb::rng::Stream;
use chb::ChbError;
use common::*;
use nalgebra::DVector;
use proptest::prelude::*;

fn zero_mean(rng: &mut Stream, k: usize) -> DVector<f64> {
    let mut f = random_vec(rng, k, 1.0);
    f[0] = 0.0;
    f
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn inverse_laplacian_pairing_is_an_inner_product(seed in any::<u64>(), w in 0.1f64..10.0, s in -3.0f64..3.0) {
        let d = disc(1.5, 1.0, 12);
        let mut rng = Stream::new(seed);
        let f = zero_mean(&mut rng, 12);
        let g = zero_mean(&mut rng, 12);
        let p = |v: &DVector<f64>| inv_laplacian_pairing(&d, w, v).unwrap();
        let (ff, gg) = (p(&f), p(&g));
        let fg = 0.25 * (p(&(&f + &g)) - p(&(&f - &g)));
        prop_assert!(ff >= 0.0);
        prop_assert!(fg * fg <= ff * gg * (1.0 + 1e-12));
        prop_assert!((p(&(&f * s)) - s * s * ff).abs() <= 1e-12 * ff.max(1e-300) * s * s + 1e-300);
        prop_assert!((inv_laplacian_pairing(&d, 2.0 * w, &f).unwrap() - 0.5 * ff).abs() <= 1e-13 * ff);
        // Same value from the dense weighted system and from the mixed flux form.
        let wv = DVector::from_element(d.grid.len(), w);
        prop_assert!((inv_laplacian_pairing_dense(&d, &wv, &f).unwrap() - ff).abs() <= 1e-10 * ff);
        prop_assert!((mixed_inv_laplacian_pairing(&d, &wv, &f).unwrap() - ff).abs() <= 1e-10 * ff);
    }

    #[test]
    fn quadratic_seminorm_is_nonnegative_and_quadratic(seed in any::<u64>(), s in -3.0f64..3.0) {
        let m = model(disc(1.0, 1.0, 8), preset("p3_continuity.toml").material);
        let mut rng = Stream::new(seed);
        let (a, c, d) = random_state(&m, &mut rng, 0.5, 2.0);
        let q = quadratic_seminorm(&m.disc, &m.params, &a, &c, &d).unwrap();
        prop_assert!(q >= 0.0);
        let qs = quadratic_seminorm(&m.disc, &m.params, &(&a * s), &(&c * s), &(&d * s)).unwrap();
        prop_assert!((qs - s * s * q).abs() <= 1e-12 * q * s * s + 1e-300);
    }
}

#[test]
fn quadratic_seminorm_vanishes_on_zero_and_constants() {
    let m = model(disc(1.0, 1.0, 8), preset("p3_continuity.toml").material);
    let z = DVector::zeros(8);
    assert_eq!(quadratic_seminorm(&m.disc, &m.params, &z, &z, &z).unwrap(), 0.0);
    // A constant phase with matching eigenstrain has no gradient but a residual strain.
    let mut a = z.clone();
    a[0] = 1.0;
    assert!(quadratic_seminorm(&m.disc, &m.params, &a, &z, &z).unwrap() > 0.0);
}

#[test]
fn dual_norms_of_single_modes() {
    let d = disc(2.0, 1.0, 10);
    for i in 1..10 {
        let mut e = DVector::zeros(10);
        e[i] = 1.0;
        let lam = d.scalar.eigenvalues[i];
        assert!((h1_dual_sq(&d, &e).unwrap() - 1.0 / (1.0 + lam)).abs() < 1e-12);
        assert!((hdiv_dual_sq(&d, &e).unwrap() - 1.0 / (lam * (1.0 + lam))).abs() < 1e-12);
        assert!((inv_laplacian_pairing(&d, 1.0, &e).unwrap() - 1.0 / lam).abs() < 1e-14);
        let lv = d.vector.eigenvalues[i];
        assert!((h_minus1_sq(&d, &e).unwrap() - 1.0 / (1.0 + lv)).abs() < 1e-12);
    }
    let mut e = DVector::zeros(10);
    e[0] = 1.0;
    assert!((h1_dual_sq(&d, &e).unwrap() - 1.0).abs() < 1e-12);
    assert_eq!(hdiv_dual_sq(&d, &e).unwrap(), 0.0);
}

#[test]
fn nonzero_mean_and_bad_weights_are_rejected() {
    let d = disc(1.0, 1.0, 6);
    let mut f = DVector::zeros(6);
    f[0] = 1e-3;
    f[2] = 1.0;
    assert!(matches!(inv_laplacian_pairing(&d, 1.0, &f), Err(ChbError::InvalidInput(_))));
    assert!(inv_laplacian_pairing_dense(&d, &DVector::from_element(d.grid.len(), 1.0), &f).is_err());
    f[0] = 0.0;
    for w in [0.0, -1.0, f64::NAN] {
        assert!(inv_laplacian_pairing(&d, w, &f).is_err());
    }
}

#[test]
fn run_diagnostics_are_consistent() {
    let m = model(disc(1.0, 1.0, 8), clamped_material(0.1));
    let mut rng = Stream::new(21);
    let (a, _, d) = random_state(&m, &mut rng, 0.3, 0.9);
    let s0 = m.initial_state(a, d).unwrap();
    let set = StepSettings { integrator: IntegratorKind::SemiImplicit, dt: 2e-3, t_final: 2e-2, ..StepSettings::default() };
    let traj = run(&m, s0, &set).unwrap();

    let recs: Vec<_> = traj.records.iter().map(|(_, r)| *r).collect();
    for w in recs.windows(2) {
        assert!(w[1].sup_psi_l1 >= w[0].sup_psi_l1);
        assert!(w[1].sup_phi_h1_sq >= w[0].sup_phi_h1_sq);
        assert!(w[1].sup_u_h1_sq >= w[0].sup_u_h1_sq);
        assert!(w[1].sup_theta_l2_sq >= w[0].sup_theta_l2_sq);
        assert!(w[1].int_dissipation >= w[0].int_dissipation);
        assert!(w[1].int_mu_h1_sq >= w[0].int_mu_h1_sq);
    }
    for r in &recs {
        assert_eq!(r.e_total, r.e_i + r.e_e + r.e_f);
        let want = r.e_total + r.int_dissipation - traj.origin.energy - r.int_work;
        assert!((r.identity_residual - want).abs() <= 1e-14 * traj.origin.energy.abs().max(1.0));
    }
    for (_, dphi, dth) in balance_residuals(&m, &traj) {
        assert!(dphi < 1e-10 && dth < 1e-10);
    }
    let mon = apriori_monitor(&traj).unwrap();
    let last = recs.last().unwrap();
    assert_eq!((mon.sup_phi_h1_sq, mon.int_q_sq), (last.sup_phi_h1_sq, last.int_q_sq));

    let (s, _) = traj.records.last().unwrap();
    let snap = FieldSnapshot::from_state(&m, s).unwrap();
    assert_eq!(snap.t, s.t);
    assert!((&snap.phi - &m.disc.scalar.values * &s.a).amax() < 1e-14);
    assert!((&snap.mu - &m.disc.scalar.values * &s.b).amax() < 1e-14);
}

#[test]
fn identical_data_pairs_have_zero_difference() {
    let mut cfg = preset("p3_continuity.toml");
    cfg.discretization.k = 8;
    cfg.time.t_final = 1e-2;
    cfg.continuity.epsilons = vec![0.0, 1e-2];
    let report = continuous_dependence_experiment(&cfg.continuity_inputs().unwrap()).unwrap();
    let zero = &report.rows[0];
    assert!(zero.lhs.iter().all(|v| *v == 0.0));
    assert_eq!(zero.ratio, 0.0);
    assert!(report.rows[1].lhs_total() > 0.0 && report.rows[1].ratio.is_finite());
    assert!(report.flux_bound_holds);

    let mut inp = cfg.continuity_inputs().unwrap();
    inp.epsilons = vec![-1e-2];
    assert!(continuous_dependence_experiment(&inp).is_err());
}
