//! Perturbation-pair experiment for continuous dependence on the data.

use nalgebra::DVector;
use rayon::prelude::*;

use super::dual::{h1_dual_sq, h_minus1_sq, hdiv_dual_sq, inv_laplacian_pairing};
use crate::assembly::ProjectedSources;
use crate::constitutive::{validate_continuity, DeclaredBounds};
use crate::dynamics::{run, Model, StepSettings, Trajectory};
use crate::error::{ChbError, Result};

/// Initial coefficients and projected sources of one run.
#[derive(Clone, Debug, PartialEq)]
pub struct DataSet {
    pub a0: DVector<f64>,
    pub d0: DVector<f64>,
    pub sources: ProjectedSources,
}

impl DataSet {
    pub fn zero(k: usize) -> Self {
        DataSet { a0: DVector::zeros(k), d0: DVector::zeros(k), sources: ProjectedSources::zero(k) }
    }

    /// `self + eps * other`.
    pub fn axpy(&self, eps: f64, other: &DataSet) -> DataSet {
        DataSet {
            a0: &self.a0 + &other.a0 * eps,
            d0: &self.d0 + &other.d0 * eps,
            sources: ProjectedSources {
                r_hat: &self.sources.r_hat + &other.sources.r_hat * eps,
                s_hat: &self.sources.s_hat + &other.sources.s_hat * eps,
                f_hat: &self.sources.f_hat + &other.sources.f_hat * eps,
            },
        }
    }
}

#[derive(Clone, Debug)]
pub struct ContinuityInputs {
    /// Discretization and laws; its sources are replaced by each data set's.
    pub model: Model,
    pub settings: StepSettings,
    pub base: DataSet,
    pub perturbation: DataSet,
    pub epsilons: Vec<f64>,
}

/// Left-hand-side terms, in the order of `ContinuityRow::lhs`.
pub const LHS_TERMS: [&str; 10] = [
    "sup_phi_dual_sq",
    "sup_theta_dual_sq",
    "int_phi_h1_sq",
    "int_mu_h1dual_sq",
    "int_theta_l2_sq",
    "int_u_h1_sq",
    "int_q_hdivdual_sq",
    "sup_phi_l2_sq",
    "int_mu_l2_sq",
    "sup_q_int_sq",
];

#[derive(Clone, Debug, PartialEq)]
pub struct ContinuityRow {
    pub epsilon: f64,
    pub lhs: [f64; 10],
    pub rhs: f64,
    /// `sum(lhs) / rhs`, or 0 when both vanish.
    pub ratio: f64,
    /// Largest `lhs / rhs` of the flux estimate over all output times.
    pub flux_bound_ratio: f64,
}

impl ContinuityRow {
    pub fn lhs_total(&self) -> f64 {
        self.lhs.iter().sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContinuityReport {
    pub rows: Vec<ContinuityRow>,
    /// Least-squares slope of `log lhs_j` against `log eps^2`, per term.
    pub slopes: [f64; 10],
    /// `max ratio / min ratio` over rows with `eps > 0`.
    pub ratio_spread: f64,
    /// The flux estimate holds at every output time of every pair.
    pub flux_bound_holds: bool,
}

fn with_sources(model: &Model, data: &DataSet) -> Result<Model> {
    Model::new(model.disc.clone(), model.params.clone(), data.sources.clone())
}

fn run_data(model: &Model, data: &DataSet, settings: &StepSettings) -> Result<Trajectory> {
    let m = with_sources(model, data)?;
    let s0 = m.initial_state(data.a0.clone(), data.d0.clone())?;
    let traj = run(&m, s0, settings)?;
    if let Some(f) = &traj.failure {
        return Err(ChbError::SolveFailed { t: f.t, detail: f.message.clone() });
    }
    Ok(traj)
}

fn without_mean(v: &DVector<f64>) -> DVector<f64> {
    let mut w = v.clone();
    w[0] = 0.0;
    w
}

fn trapezoid(t: &[f64], v: &[f64]) -> f64 {
    t.windows(2).zip(v.windows(2)).map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1])).sum()
}

fn compare(model: &Model, epsilon: f64, base: &DataSet, pert: &DataSet, t1: &Trajectory, t2: &Trajectory) -> Result<ContinuityRow> {
    let disc = &model.disc;
    let p = &model.params;
    let m = p.mobility.value(0.0);
    let kappa = p.permeability.value(0.0);
    let g = &disc.scalar_gram;
    let h1 = &disc.scalar_gram + &disc.stiffness;
    let flux_mass = &disc.flux_gram / kappa;
    let sq = |v: &DVector<f64>, mat: &nalgebra::DMatrix<f64>| v.dot(&(mat * v));

    let n = t1.records.len();
    let mut times = Vec::with_capacity(n);
    let mut rate = vec![[0.0; 6]; n];
    let mut sup = [0.0f64; 4];
    let mut q_int = DVector::zeros(model.k());
    let mut flux_ratio = 0.0f64;
    let mut sup_theta_dual = 0.0f64;

    let ds = &pert.sources.s_hat - &base.sources.s_hat;
    let s_sq = sq(&ds, g);
    let theta0_dual = inv_laplacian_pairing(disc, kappa, &without_mean(&(&t2.records[0].0.d - &t1.records[0].0.d)))?;

    for (j, ((s1, _), (s2, _))) in t1.records.iter().zip(&t2.records).enumerate() {
        if s1.step != s2.step {
            return Err(ChbError::InvalidInput("perturbation pair has mismatched output steps".into()));
        }
        let da = &s2.a - &s1.a;
        let db = &s2.b - &s1.b;
        let dc = &s2.c - &s1.c;
        let dd = &s2.d - &s1.d;
        let de = &s2.e - &s1.e;
        times.push(s1.t);
        let phi_dual = inv_laplacian_pairing(disc, m, &without_mean(&da))?;
        let theta_dual = inv_laplacian_pairing(disc, kappa, &without_mean(&dd))?;
        sup_theta_dual = sup_theta_dual.max(theta_dual);
        sup[0] = sup[0].max(phi_dual);
        sup[1] = sup[1].max(theta_dual);
        sup[2] = sup[2].max(sq(&da, g));
        rate[j] = [sq(&da, &h1), h1_dual_sq(disc, &db)?, sq(&dd, g), sq(&dc, &disc.vector_h1), hdiv_dual_sq(disc, &de)?, sq(&db, g)];

        // Right-endpoint sum, matching the implicit fluid update.
        if j > 0 {
            q_int += &de * (s1.t - times[j - 1]);
        }
        let lhs44 = sq(&q_int, &flux_mass);
        sup[3] = sup[3].max(lhs44);
        let rhs44 = 3.0 * (s1.t * s1.t * s_sq + sup_theta_dual + theta0_dual);
        if lhs44 > 0.0 {
            flux_ratio = flux_ratio.max(if rhs44 > 0.0 { lhs44 / rhs44 } else { f64::INFINITY });
        }
    }
    let int = |c: usize| trapezoid(&times, &rate.iter().map(|r| r[c]).collect::<Vec<_>>());
    let lhs = [sup[0], sup[1], int(0), int(1), int(2), int(3), int(4), sup[2], int(5), sup[3]];

    let t_end = *times.last().unwrap_or(&0.0);
    let dr = &pert.sources.r_hat - &base.sources.r_hat;
    let df = &pert.sources.f_hat - &base.sources.f_hat;
    let da0 = &t2.records[0].0.a - &t1.records[0].0.a;
    let mean0 = disc.mean(&da0);
    let mean_r = disc.mean(&dr);
    let area = disc.area();
    let mean_term = area * (mean0 * mean0 * t_end + mean0 * mean_r * t_end * t_end + mean_r * mean_r * t_end.powi(3) / 3.0);
    let rhs = t_end * (sq(&dr, g) + h_minus1_sq(disc, &df)? + s_sq) + mean_term + sq(&da0, g) + theta0_dual;
    let total: f64 = lhs.iter().sum();
    let ratio = if total == 0.0 { 0.0 } else { total / rhs };
    Ok(ContinuityRow { epsilon, lhs, rhs, ratio, flux_bound_ratio: flux_ratio })
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return f64::NAN;
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Runs the base data and each `base + eps * perturbation` (concurrently),
/// recording every step, and compares the pairs.
pub fn continuous_dependence_experiment(inp: &ContinuityInputs) -> Result<ContinuityReport> {
    let params = &inp.model.params;
    validate_continuity(params, &DeclaredBounds::default())?;
    let k = inp.model.k();
    for v in [&inp.base.a0, &inp.base.d0, &inp.perturbation.a0, &inp.perturbation.d0] {
        crate::bases::check_len(v, k)?;
    }
    if inp.epsilons.iter().any(|e| !e.is_finite() || *e < 0.0) {
        return Err(ChbError::InvalidInput("epsilons must be finite and non-negative".into()));
    }
    let settings = StepSettings { output_every: 1, ..inp.settings };
    let base = run_data(&inp.model, &inp.base, &settings)?;
    let rows = inp
        .epsilons
        .par_iter()
        .map(|&eps| {
            let data = inp.base.axpy(eps, &inp.perturbation);
            let traj = run_data(&inp.model, &data, &settings)?;
            compare(&inp.model, eps, &inp.base, &data, &base, &traj)
        })
        .collect::<Result<Vec<_>>>()?;

    let fit: Vec<&ContinuityRow> = rows.iter().filter(|r| r.epsilon > 0.0).collect();
    let mut slopes = [f64::NAN; 10];
    for (j, s) in slopes.iter_mut().enumerate() {
        let pts: Vec<(f64, f64)> =
            fit.iter().filter(|r| r.lhs[j] > 0.0).map(|r| ((r.epsilon * r.epsilon).ln(), r.lhs[j].ln())).collect();
        let (xs, ys): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
        *s = slope(&xs, &ys);
    }
    let ratios: Vec<f64> = fit.iter().map(|r| r.ratio).collect();
    let ratio_spread = if ratios.is_empty() {
        f64::NAN
    } else {
        ratios.iter().cloned().fold(f64::MIN, f64::max) / ratios.iter().cloned().fold(f64::MAX, f64::min)
    };
    let flux_bound_holds = rows.iter().all(|r| r.flux_bound_ratio <= 1.0);
    Ok(ContinuityReport { rows, slopes, ratio_spread, flux_bound_holds })
}
