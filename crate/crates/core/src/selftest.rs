//! Fast invariant checks behind the `selftest` command.

use nalgebra::{DVector, SymmetricEigen};

use crate::assembly::{assemble_flux_matrix, energy_gradient, ProjectedSources};
use crate::bases::{Discretization, RectDomain};
use crate::config::{FieldSpec, ModelConfig};
use crate::constitutive::{MaterialParams, ScalarLaw};
use crate::diagnostics::{inv_laplacian_pairing, inv_laplacian_pairing_dense};
use crate::dynamics::{run, Model, StepSettings};
use crate::error::Result;
use crate::output::timeseries_csv;
use crate::rng::Stream;

#[derive(Clone, Debug)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, r: Result<(bool, String)>) -> Check {
    match r {
        Ok((passed, detail)) => Check { name, passed, detail },
        Err(e) => Check { name, passed: false, detail: format!("error: {e}") },
    }
}

fn small_config() -> ModelConfig {
    let mut cfg = ModelConfig::default();
    cfg.discretization.k = 8;
    cfg.material = MaterialParams {
        eta: 0.05,
        mobility: ScalarLaw::Sigmoid { minus: 5e-3, plus: 1.5e-2, width: 0.5 },
        permeability: ScalarLaw::Constant(0.01),
        biot_willis: ScalarLaw::Constant(0.5),
        eigenstrain: crate::constitutive::Eigenstrain::Swelling { xi: 0.1, phi_bar: 0.0 },
        ..MaterialParams::default()
    };
    cfg.initial.phi = FieldSpec::Noise { mean: 0.0, amplitude: 0.3, seed: 5 };
    cfg.time.dt = 2e-3;
    cfg.time.t_final = 0.04;
    cfg
}

fn basis() -> Result<(bool, String)> {
    let d = Discretization::new(RectDomain::with_default_resolution(2.0, 1.0, 16)?, 16)?;
    let gram = (&d.scalar_gram - nalgebra::DMatrix::identity(16, 16)).amax();
    let lam = DVector::from_vec(d.scalar.eigenvalues.clone());
    let stiff = (&d.stiffness - nalgebra::DMatrix::from_diagonal(&lam)).amax() / lam.amax();
    let mut flux: f64 = 0.0;
    for i in 1..16 {
        let l = d.scalar.eigenvalues[i];
        for p in 0..d.grid.len() {
            flux = flux.max((l * d.flux.qx[(p, i)] + d.scalar.grad_x[(p, i)]).abs());
            flux = flux.max((l * d.flux.qy[(p, i)] + d.scalar.grad_y[(p, i)]).abs());
        }
    }
    Ok((gram < 1e-10 && stiff < 1e-8 && flux < 1e-13, format!("gram {gram:.1e}, stiffness {stiff:.1e}, flux {flux:.1e}")))
}

fn derivative() -> Result<(bool, String)> {
    let cfg = small_config();
    let s = cfg.setup()?;
    let m = &s.model;
    let k = m.k();
    let mut rng = Stream::new(77);
    let mut v = || DVector::from_fn(k, |_, _| 0.3 * rng.symmetric());
    let (a, c, d) = (v(), v(), v());
    let f = m.fields(&a, &c, &d)?;
    let g = energy_gradient(&m.disc, &m.params, &f, &a);
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for i in 0..k {
        let mut ap = a.clone();
        let mut am = a.clone();
        ap[i] += h;
        am[i] -= h;
        let fd = (m.total_energy(&ap, &c, &d)?.total() - m.total_energy(&am, &c, &d)?.total()) / (2.0 * h);
        worst = worst.max((fd - g.a[i]).abs() / g.a.amax().max(1.0));
    }
    Ok((worst < 1e-7, format!("relative difference {worst:.1e}")))
}

fn equilibrium() -> Result<(bool, String)> {
    let mut cfg = small_config();
    cfg.initial.phi = FieldSpec::Constant(0.0);
    let s = cfg.setup()?;
    let next = s.model.step(&s.initial, s.settings.dt, &s.settings)?;
    let drift = [(&next.a, &s.initial.a), (&next.c, &s.initial.c), (&next.d, &s.initial.d)]
        .iter()
        .map(|(x, y)| (*x - *y).amax())
        .fold(0.0, f64::max);
    Ok((drift < 1e-12, format!("drift {drift:.1e}")))
}

fn conservation_and_dissipation() -> Result<(bool, String)> {
    let cfg = small_config();
    let s = cfg.setup()?;
    let traj = run(&s.model, s.initial.clone(), &s.settings)?;
    let mass = traj.records.iter().map(|(_, r)| r.phi_mass_residual.max(r.theta_mass_residual)).fold(0.0, f64::max);
    let rise = traj.records.windows(2).map(|w| w[1].1.e_total - w[0].1.e_total).fold(f64::NEG_INFINITY, f64::max);
    Ok((mass < 1e-10 && rise <= 1e-10 && traj.is_complete(), format!("mass {mass:.1e}, largest energy change {rise:.1e}")))
}

fn injection() -> Result<(bool, String)> {
    let mut cfg = small_config();
    cfg.sources.r = FieldSpec::Constant(0.1);
    cfg.sources.s_f = FieldSpec::Constant(0.05);
    let s = cfg.setup()?;
    let traj = run(&s.model, s.initial.clone(), &s.settings)?;
    let dev = traj.records.iter().map(|(_, r)| r.phi_mass_residual.max(r.theta_mass_residual)).fold(0.0, f64::max);
    Ok((dev < 1e-10 && traj.is_complete(), format!("deviation from affine means {dev:.1e}")))
}

fn spd() -> Result<(bool, String)> {
    let cfg = small_config();
    let s = cfg.setup()?;
    let m = &s.model;
    let k = m.k();
    let mut rng = Stream::new(3);
    let a = DVector::from_fn(k, |_, _| 0.5 * rng.symmetric());
    let d = DVector::from_fn(k, |_, _| 0.5 * rng.symmetric());
    let es = m.elastic_system(&a, &d)?;
    let ef = SymmetricEigen::new(&es.e_eps + &es.f_eps).eigenvalues.min();
    let mk = assemble_flux_matrix(&m.disc, &m.params, &(&m.disc.scalar.values * &a));
    let mq = SymmetricEigen::new(mk.view((1, 1), (k - 1, k - 1)).into_owned()).eigenvalues.min();
    Ok((ef > 0.0 && mq > 0.0, format!("min eigenvalues {ef:.2e}, {mq:.2e}")))
}

fn dual_norm() -> Result<(bool, String)> {
    let d = Discretization::new(RectDomain::with_default_resolution(1.0, 1.0, 12)?, 12)?;
    let mut rng = Stream::new(9);
    let mut f = DVector::from_fn(12, |_, _| rng.symmetric());
    f[0] = 0.0;
    let w = 2.5;
    let spectral = inv_laplacian_pairing(&d, w, &f)?;
    let dense = inv_laplacian_pairing_dense(&d, &DVector::from_element(d.grid.len(), w), &f)?;
    let rel = (spectral - dense).abs() / spectral;
    Ok((rel < 1e-10, format!("relative difference {rel:.1e}")))
}

fn determinism() -> Result<(bool, String)> {
    let cfg = small_config();
    let csv = || -> Result<String> {
        let s = cfg.setup()?;
        Ok(timeseries_csv(&run(&s.model, s.initial.clone(), &s.settings)?))
    };
    let same = csv()? == csv()?;
    Ok((same, if same { "identical".into() } else { "outputs differ".into() }))
}

fn integrators_agree() -> Result<(bool, String)> {
    let cfg = small_config();
    let s = cfg.setup()?;
    let m = Model::new(s.model.disc.clone(), s.model.params.clone(), ProjectedSources::zero(s.model.k()))?;
    let mut gaps = Vec::new();
    for dt in [4e-3, 2e-3] {
        let base = StepSettings { dt, t_final: 0.02, output_every: 1000, ..s.settings };
        let semi = run(&m, s.initial.clone(), &base)?;
        let implicit = run(&m, s.initial.clone(), &StepSettings { integrator: crate::dynamics::IntegratorKind::ImplicitEulerNewton, ..base })?;
        gaps.push((&semi.terminal().a - &implicit.terminal().a).amax());
    }
    let order = (gaps[0] / gaps[1]).log2();
    Ok((order > 0.8, format!("gap {:.2e} -> {:.2e}, order {order:.2}", gaps[0], gaps[1])))
}

/// All checks, in a fixed order.
pub fn run_all() -> Vec<Check> {
    vec![
        check("basis", basis()),
        check("energy_gradient", derivative()),
        check("equilibrium", equilibrium()),
        check("conservation_and_dissipation", conservation_and_dissipation()),
        check("injection_balance", injection()),
        check("spd_structure", spd()),
        check("dual_norm", dual_norm()),
        check("determinism", determinism()),
        check("integrators_agree", integrators_agree()),
    ]
}
