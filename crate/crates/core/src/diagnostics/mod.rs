//! Energies, dissipation, work, balance laws and field snapshots.

mod continuity;
mod dual;

pub use continuity::{
    continuous_dependence_experiment, ContinuityInputs, ContinuityReport, ContinuityRow, DataSet, LHS_TERMS,
};
pub use dual::{
    h1_dual_sq, h_minus1_sq, hdiv_dual_sq, inv_laplacian_pairing, inv_laplacian_pairing_dense,
    mixed_inv_laplacian_pairing, quadratic_seminorm, zero_mean_tolerance,
};

use nalgebra::DVector;

use crate::assembly::{assemble_flux_matrix, assemble_mobility_stiffness, energy_gradient, laplacian};
use crate::constitutive::{energies, psi, Energies};
use crate::dynamics::{CoefficientState, Model, Trajectory};
use crate::error::Result;
use crate::quadrature::pairwise_sum_by;

/// Quantities that depend on one state only.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Instant {
    pub energies: Energies,
    /// `b^T A_m b = |m^(1/2) grad mu|^2`.
    pub d_mu: f64,
    /// `e^T M_kqq e = |kappa^(-1/2) q|^2`.
    pub d_q: f64,
    /// `(R, mu)`.
    pub w_r: f64,
    /// `(S_f, projected pressure)`.
    pub w_s: f64,
    pub grad_mu_sq: f64,
    pub q_sq: f64,
    pub mu_h1_sq: f64,
    pub psi_l1: f64,
    pub phi_h1_sq: f64,
    pub u_h1_sq: f64,
    pub theta_l2_sq: f64,
    pub phi_integral: f64,
    pub theta_integral: f64,
}

impl Instant {
    pub fn compute(model: &Model, s: &CoefficientState) -> Result<Instant> {
        let disc = &model.disc;
        let p = &model.params;
        let f = model.fields(&s.a, &s.c, &s.d)?;
        let am = assemble_mobility_stiffness(disc, p, &f.phi);
        let mk = assemble_flux_matrix(disc, p, &f.phi);
        let grad = energy_gradient(disc, p, &f, &s.a);
        let h1 = &disc.scalar_gram + &disc.stiffness;
        let g = &disc.grid.weights;
        Ok(Instant {
            energies: energies(p, &disc.grid, &f),
            d_mu: s.b.dot(&(&am * &s.b)),
            d_q: s.e.dot(&(&mk * &s.e)),
            w_r: model.sources.r_hat.dot(&s.b),
            w_s: model.sources.s_hat.dot(&grad.d),
            grad_mu_sq: s.b.dot(&(&disc.stiffness * &s.b)),
            q_sq: s.e.dot(&(&disc.flux_gram * &s.e)),
            mu_h1_sq: s.b.dot(&(&h1 * &s.b)),
            psi_l1: pairwise_sum_by(f.len(), |i| g[i] * psi(f.phi[i])),
            phi_h1_sq: s.a.dot(&(&h1 * &s.a)),
            u_h1_sq: s.c.dot(&(&disc.vector_h1 * &s.c)),
            theta_l2_sq: s.d.dot(&(&disc.scalar_gram * &s.d)),
            phi_integral: disc.integral(&s.a),
            theta_integral: disc.integral(&s.d),
        })
    }
}

/// One output row.
#[derive(Clone, Copy, Debug, Default, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DiagnosticsRecord {
    pub step: u64,
    pub t: f64,
    pub e_total: f64,
    pub e_i: f64,
    pub e_e: f64,
    pub e_f: f64,
    pub d_mu: f64,
    pub d_q: f64,
    /// `eta |d/dt div u|^2` over the last step.
    pub d_visc: f64,
    pub w_r: f64,
    /// `(f, d/dt u)` over the last step.
    pub w_f: f64,
    pub w_s: f64,
    /// Time integral of `d_mu + d_q + d_visc` since `t = 0`.
    pub int_dissipation: f64,
    /// Time integral of `w_r + w_f + w_s` since `t = 0`.
    pub int_work: f64,
    /// `E(t) + int_dissipation - E(0) - int_work`.
    pub identity_residual: f64,
    /// `|int phi(t) - int phi(0) - t int R|`.
    pub phi_mass_residual: f64,
    pub theta_mass_residual: f64,
    pub sup_psi_l1: f64,
    pub sup_phi_h1_sq: f64,
    pub sup_u_h1_sq: f64,
    pub sup_theta_l2_sq: f64,
    pub int_visc: f64,
    pub int_grad_mu_sq: f64,
    pub int_q_sq: f64,
    pub int_mu_h1_sq: f64,
}

impl DiagnosticsRecord {
    /// Column names of the time-series CSV, in order.
    pub const COLUMNS: [&'static str; 25] = [
        "step",
        "t",
        "E_total",
        "E_i",
        "E_e",
        "E_f",
        "D_mu",
        "D_q",
        "D_visc",
        "W_R",
        "W_f",
        "W_S",
        "int_dissipation",
        "int_work",
        "identity_residual",
        "phi_mass_residual",
        "theta_mass_residual",
        "sup_psi_l1",
        "sup_phi_h1_sq",
        "sup_u_h1_sq",
        "sup_theta_l2_sq",
        "int_visc",
        "int_grad_mu_sq",
        "int_q_sq",
        "int_mu_h1_sq",
    ];

    /// Values in column order after `step`.
    pub fn values(&self) -> [f64; 24] {
        [
            self.t,
            self.e_total,
            self.e_i,
            self.e_e,
            self.e_f,
            self.d_mu,
            self.d_q,
            self.d_visc,
            self.w_r,
            self.w_f,
            self.w_s,
            self.int_dissipation,
            self.int_work,
            self.identity_residual,
            self.phi_mass_residual,
            self.theta_mass_residual,
            self.sup_psi_l1,
            self.sup_phi_h1_sq,
            self.sup_u_h1_sq,
            self.sup_theta_l2_sq,
            self.int_visc,
            self.int_grad_mu_sq,
            self.int_q_sq,
            self.int_mu_h1_sq,
        ]
    }
}

/// Reference values at `t = 0` that later records are measured against.
#[derive(Clone, Copy, Debug, Default, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Origin {
    pub energy: f64,
    pub phi_integral: f64,
    pub theta_integral: f64,
}

/// Running time integrals over every step, trapezoidal in the state-only
/// rates and exact in the step increments of `c`.
#[derive(Clone, Debug)]
pub struct Accumulator {
    origin: Origin,
    prev: Instant,
    d_visc: f64,
    w_f: f64,
    int_dissipation: f64,
    int_work: f64,
    int_visc: f64,
    int_grad_mu_sq: f64,
    int_q_sq: f64,
    int_mu_h1_sq: f64,
    sup_psi_l1: f64,
    sup_phi_h1_sq: f64,
    sup_u_h1_sq: f64,
    sup_theta_l2_sq: f64,
    r_integral: f64,
    s_integral: f64,
}

impl Accumulator {
    pub fn new(model: &Model, s0: &CoefficientState) -> Result<Self> {
        let i0 = Instant::compute(model, s0)?;
        let origin = Origin { energy: i0.energies.total(), phi_integral: i0.phi_integral, theta_integral: i0.theta_integral };
        Ok(Accumulator {
            origin,
            prev: i0,
            d_visc: 0.0,
            w_f: 0.0,
            int_dissipation: 0.0,
            int_work: 0.0,
            int_visc: 0.0,
            int_grad_mu_sq: 0.0,
            int_q_sq: 0.0,
            int_mu_h1_sq: 0.0,
            sup_psi_l1: i0.psi_l1,
            sup_phi_h1_sq: i0.phi_h1_sq,
            sup_u_h1_sq: i0.u_h1_sq,
            sup_theta_l2_sq: i0.theta_l2_sq,
            r_integral: model.disc.integral(&model.sources.r_hat),
            s_integral: model.disc.integral(&model.sources.s_hat),
        })
    }

    /// Continues from a recorded state; bitwise equivalent to never stopping.
    pub fn resume(model: &Model, s: &CoefficientState, rec: &DiagnosticsRecord, origin: Origin) -> Result<Self> {
        Ok(Accumulator {
            origin,
            prev: Instant::compute(model, s)?,
            d_visc: rec.d_visc,
            w_f: rec.w_f,
            int_dissipation: rec.int_dissipation,
            int_work: rec.int_work,
            int_visc: rec.int_visc,
            int_grad_mu_sq: rec.int_grad_mu_sq,
            int_q_sq: rec.int_q_sq,
            int_mu_h1_sq: rec.int_mu_h1_sq,
            sup_psi_l1: rec.sup_psi_l1,
            sup_phi_h1_sq: rec.sup_phi_h1_sq,
            sup_u_h1_sq: rec.sup_u_h1_sq,
            sup_theta_l2_sq: rec.sup_theta_l2_sq,
            r_integral: model.disc.integral(&model.sources.r_hat),
            s_integral: model.disc.integral(&model.sources.s_hat),
        })
    }

    pub fn origin(&self) -> Origin {
        self.origin
    }

    pub fn advance(&mut self, model: &Model, old: &CoefficientState, new: &CoefficientState) -> Result<()> {
        let h = new.t - old.t;
        let cur = Instant::compute(model, new)?;
        let dc = &new.c - &old.c;
        let eta = model.params.eta;
        self.d_visc = if h > 0.0 { eta * dc.dot(&(&model.disc.div_gram * &dc)) / (h * h) } else { 0.0 };
        let wf_step = model.sources.f_hat.dot(&dc);
        self.w_f = if h > 0.0 { wf_step / h } else { 0.0 };
        let trap = |a: f64, b: f64| 0.5 * h * (a + b);
        let p = &self.prev;
        self.int_dissipation += trap(p.d_mu + p.d_q, cur.d_mu + cur.d_q) + h * self.d_visc;
        self.int_work += trap(p.w_r + p.w_s, cur.w_r + cur.w_s) + wf_step;
        self.int_visc += h * self.d_visc;
        self.int_grad_mu_sq += trap(p.grad_mu_sq, cur.grad_mu_sq);
        self.int_q_sq += trap(p.q_sq, cur.q_sq);
        self.int_mu_h1_sq += trap(p.mu_h1_sq, cur.mu_h1_sq);
        self.sup_psi_l1 = self.sup_psi_l1.max(cur.psi_l1);
        self.sup_phi_h1_sq = self.sup_phi_h1_sq.max(cur.phi_h1_sq);
        self.sup_u_h1_sq = self.sup_u_h1_sq.max(cur.u_h1_sq);
        self.sup_theta_l2_sq = self.sup_theta_l2_sq.max(cur.theta_l2_sq);
        self.prev = cur;
        Ok(())
    }

    pub fn record(&self, s: &CoefficientState) -> DiagnosticsRecord {
        let c = &self.prev;
        let e = c.energies;
        DiagnosticsRecord {
            step: s.step,
            t: s.t,
            e_total: e.total(),
            e_i: e.interface,
            e_e: e.elastic,
            e_f: e.fluid,
            d_mu: c.d_mu,
            d_q: c.d_q,
            d_visc: self.d_visc,
            w_r: c.w_r,
            w_f: self.w_f,
            w_s: c.w_s,
            int_dissipation: self.int_dissipation,
            int_work: self.int_work,
            identity_residual: e.total() + self.int_dissipation - self.origin.energy - self.int_work,
            phi_mass_residual: (c.phi_integral - self.origin.phi_integral - s.t * self.r_integral).abs(),
            theta_mass_residual: (c.theta_integral - self.origin.theta_integral - s.t * self.s_integral).abs(),
            sup_psi_l1: self.sup_psi_l1,
            sup_phi_h1_sq: self.sup_phi_h1_sq,
            sup_u_h1_sq: self.sup_u_h1_sq,
            sup_theta_l2_sq: self.sup_theta_l2_sq,
            int_visc: self.int_visc,
            int_grad_mu_sq: self.int_grad_mu_sq,
            int_q_sq: self.int_q_sq,
            int_mu_h1_sq: self.int_mu_h1_sq,
        }
    }
}

/// `(t, r(t))` for every output row.
pub fn energy_identity_residual(traj: &Trajectory) -> Vec<(f64, f64)> {
    traj.records.iter().map(|(_, r)| (r.t, r.identity_residual)).collect()
}

/// Mean balance defects between consecutive outputs, from the constant-mode
/// coefficients: `|d/dt int phi - int R|` and `|d/dt int theta - int S_f|`.
pub fn balance_residuals(model: &Model, traj: &Trajectory) -> Vec<(f64, f64, f64)> {
    let disc = &model.disc;
    let ri = disc.integral(&model.sources.r_hat);
    let si = disc.integral(&model.sources.s_hat);
    traj.records
        .windows(2)
        .map(|w| {
            let (s0, s1) = (&w[0].0, &w[1].0);
            let h = s1.t - s0.t;
            let dphi = (disc.integral(&s1.a) - disc.integral(&s0.a)) / h;
            let dth = (disc.integral(&s1.d) - disc.integral(&s0.d)) / h;
            (s1.t, (dphi - ri).abs(), (dth - si).abs())
        })
        .collect()
}

/// Sup-in-time and integrated norms tracked along a run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AprioriMonitor {
    pub sup_psi_l1: f64,
    pub sup_phi_h1_sq: f64,
    pub sup_u_h1_sq: f64,
    pub sup_theta_l2_sq: f64,
    pub int_visc: f64,
    pub int_grad_mu_sq: f64,
    pub int_q_sq: f64,
    pub int_mu_h1_sq: f64,
}

pub fn apriori_monitor(traj: &Trajectory) -> Option<AprioriMonitor> {
    traj.records.last().map(|(_, r)| AprioriMonitor {
        sup_psi_l1: r.sup_psi_l1,
        sup_phi_h1_sq: r.sup_phi_h1_sq,
        sup_u_h1_sq: r.sup_u_h1_sq,
        sup_theta_l2_sq: r.sup_theta_l2_sq,
        int_visc: r.int_visc,
        int_grad_mu_sq: r.int_grad_mu_sq,
        int_q_sq: r.int_q_sq,
        int_mu_h1_sq: r.int_mu_h1_sq,
    })
}

/// Primary and derived fields sampled on the quadrature grid.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldSnapshot {
    pub t: f64,
    pub x: DVector<f64>,
    pub y: DVector<f64>,
    pub phi: DVector<f64>,
    pub lap_phi: DVector<f64>,
    pub mu: DVector<f64>,
    pub theta: DVector<f64>,
    pub p: DVector<f64>,
    pub ux: DVector<f64>,
    pub uy: DVector<f64>,
    pub qx: DVector<f64>,
    pub qy: DVector<f64>,
    pub exx: DVector<f64>,
    pub eyy: DVector<f64>,
    pub exy: DVector<f64>,
}

impl FieldSnapshot {
    pub fn from_state(model: &Model, s: &CoefficientState) -> Result<FieldSnapshot> {
        let disc = &model.disc;
        let f = model.fields(&s.a, &s.c, &s.d)?;
        let p = DVector::from_fn(f.len(), |i, _| model.params.eval(&f.point(i)).pressure);
        let (ux, uy) = disc.vector.reconstruct(&s.c)?;
        let (qx, qy) = disc.flux.reconstruct(&s.e)?;
        let n = disc.grid.len();
        Ok(FieldSnapshot {
            t: s.t,
            x: DVector::from_fn(n, |i, _| disc.grid.point(i).0),
            y: DVector::from_fn(n, |i, _| disc.grid.point(i).1),
            lap_phi: laplacian(disc, &s.a),
            mu: disc.scalar.reconstruct(&s.b)?,
            phi: f.phi,
            theta: f.theta,
            p,
            ux,
            uy,
            qx,
            qy,
            exx: f.exx,
            eyy: f.eyy,
            exy: f.exy,
        })
    }
}
