//! Coefficient state, eliminations and time stepping.
//!
//! The semi-discrete system is
//! `da/dt + A_m(a) b = r`, `eta C dc/dt + dE/dc = f`, `dd/dt + B e = s`,
//! with `b = dE/da` and `M_kqq(a) e = (p, div q_j)`.

mod run;

pub use run::{canonical_time, resume, run, step_count, RunFailure, Trajectory};

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};

use crate::assembly::{
    assemble_elastic_system, assemble_flux_matrix, assemble_flux_system, assemble_mobility_stiffness,
    energy_gradient, energy_hessian, flux_matrix_derivative, grid_fields, mobility_derivative, ElasticSystem,
    ProjectedSources,
};
use crate::bases::{check_len, weighted_gram, Discretization};
use crate::constitutive::{energies, Energies, GridFields, MaterialParams};
use crate::error::{ChbError, Result};
use crate::quadrature::gauss_legendre;

/// Nodes of the line integral in the averaged gradient; exact for energies
/// of polynomial degree up to eight along the step.
const AVF_NODES: usize = 4;

/// Galerkin coefficients at time `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientState {
    pub step: u64,
    pub t: f64,
    pub a: DVector<f64>,
    pub b: DVector<f64>,
    pub c: DVector<f64>,
    pub d: DVector<f64>,
    pub e: DVector<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntegratorKind {
    /// Averaged-gradient midpoint step with explicitly predicted mobilities.
    SemiImplicit,
    /// First-order splitting: phase, then elasticity, then fluid.
    ConvexSplitting,
    ImplicitEulerNewton,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepSettings {
    pub integrator: IntegratorKind,
    pub dt: f64,
    pub t_final: f64,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    /// Added to `c_psi gamma / ell` in the convex splitting.
    pub convex_shift: f64,
    pub output_every: usize,
    /// Number of times a failed implicit step may be halved.
    pub max_halvings: u32,
}

impl Default for StepSettings {
    fn default() -> Self {
        StepSettings {
            integrator: IntegratorKind::SemiImplicit,
            dt: 1e-3,
            t_final: 0.1,
            newton_tol: 1e-10,
            newton_max_iter: 50,
            convex_shift: 0.0,
            output_every: 1,
            max_halvings: 6,
        }
    }
}

/// Discretization, laws and projected sources.
#[derive(Clone, Debug)]
pub struct Model {
    pub disc: Discretization,
    pub params: MaterialParams,
    pub sources: ProjectedSources,
}

fn sub_vec(v: &DVector<f64>) -> DVector<f64> {
    v.rows(1, v.len() - 1).into_owned()
}

fn sub_mat(m: &DMatrix<f64>) -> DMatrix<f64> {
    let k = m.nrows();
    m.view((1, 1), (k - 1, k - 1)).into_owned()
}

fn cholesky(m: DMatrix<f64>, what: &str) -> Result<Cholesky<f64, Dyn>> {
    Cholesky::new(m).ok_or_else(|| ChbError::NotPositiveDefinite(what.into()))
}

fn finite(v: &DVector<f64>) -> bool {
    v.iter().all(|x| x.is_finite())
}

impl Model {
    pub fn new(disc: Discretization, params: MaterialParams, sources: ProjectedSources) -> Result<Self> {
        let k = disc.k();
        check_len(&sources.r_hat, k)?;
        check_len(&sources.s_hat, k)?;
        check_len(&sources.f_hat, k)?;
        Ok(Model { disc, params, sources })
    }

    pub fn k(&self) -> usize {
        self.disc.k()
    }

    pub fn fields(&self, a: &DVector<f64>, c: &DVector<f64>, d: &DVector<f64>) -> Result<GridFields> {
        grid_fields(&self.disc, a, c, d)
    }

    pub fn total_energy(&self, a: &DVector<f64>, c: &DVector<f64>, d: &DVector<f64>) -> Result<Energies> {
        Ok(energies(&self.params, &self.disc.grid, &self.fields(a, c, d)?))
    }

    /// `b = gamma ell A a + gamma/ell psi' + E_dphi_e + E_dphi_f`.
    pub fn eliminate_chemical_potential(&self, a: &DVector<f64>, c: &DVector<f64>, d: &DVector<f64>) -> Result<DVector<f64>> {
        let f = self.fields(a, c, d)?;
        Ok(energy_gradient(&self.disc, &self.params, &f, a).a)
    }

    /// Solves `M_kqq e = E_dtheta_f` on the active modes; `e_0 = 0`.
    pub fn eliminate_flux(&self, a: &DVector<f64>, c: &DVector<f64>, d: &DVector<f64>) -> Result<DVector<f64>> {
        let f = self.fields(a, c, d)?;
        let fs = assemble_flux_system(&self.disc, &self.params, &f);
        let k = self.k();
        let mut e = DVector::zeros(k);
        if k > 1 {
            let ch = cholesky(sub_mat(&fs.m_kqq), "flux mass matrix")?;
            e.rows_mut(1, k - 1).copy_from(&ch.solve(&sub_vec(&fs.e_dtheta_f)));
        }
        Ok(e)
    }

    pub fn elastic_system(&self, a: &DVector<f64>, d: &DVector<f64>) -> Result<ElasticSystem> {
        let z = DVector::zeros(self.k());
        let f = self.fields(a, &z, d)?;
        Ok(assemble_elastic_system(&self.disc, &self.params, &self.sources.f_hat, &f))
    }

    /// One implicit Euler step of the momentum balance, or the static solve
    /// `(E + F) c = rhs` when `eta = 0`.
    pub fn solve_elasticity(&self, a: &DVector<f64>, d: &DVector<f64>, c_prev: &DVector<f64>, dt: f64) -> Result<DVector<f64>> {
        self.elastic_solve(a, d, c_prev, dt, self.params.eta)
    }

    fn elastic_solve(&self, a: &DVector<f64>, d: &DVector<f64>, c_prev: &DVector<f64>, dt: f64, eta: f64) -> Result<DVector<f64>> {
        let es = self.elastic_system(a, d)?;
        let mut m = &es.e_eps + &es.f_eps;
        let mut rhs = es.rhs.clone();
        if eta > 0.0 {
            if !(dt > 0.0) {
                return Err(ChbError::InvalidInput(format!("time step must be positive, got {dt}")));
            }
            m += &es.c_eps * (eta / dt);
            rhs += &es.c_eps * c_prev * (eta / dt);
        }
        Ok(cholesky(m, "elasticity system")?.solve(&rhs))
    }

    /// Initial state from `(a, d)`, with `c` minimizing the energy.
    pub fn initial_state(&self, a: DVector<f64>, d: DVector<f64>) -> Result<CoefficientState> {
        let k = self.k();
        check_len(&a, k)?;
        check_len(&d, k)?;
        let c = self.elastic_solve(&a, &d, &DVector::zeros(k), 1.0, 0.0)?;
        let b = self.eliminate_chemical_potential(&a, &c, &d)?;
        let e = self.eliminate_flux(&a, &c, &d)?;
        let en = self.total_energy(&a, &c, &d)?;
        if !en.total().is_finite() {
            return Err(ChbError::Assumption { code: "A6", detail: "initial energy is not finite".into() });
        }
        Ok(CoefficientState { step: 0, t: 0.0, a, b, c, d, e })
    }

    /// Projects sampled initial fields and builds the initial state.
    pub fn initial_coefficients(&self, phi0: &DVector<f64>, theta0: &DVector<f64>) -> Result<CoefficientState> {
        if !finite(phi0) || !finite(theta0) {
            return Err(ChbError::Assumption { code: "A6", detail: "initial data must be finite".into() });
        }
        let a = self.disc.scalar.project(phi0)?;
        let d = self.disc.scalar.project(theta0)?;
        self.initial_state(a, d)
    }

    fn finish(&self, step: u64, t: f64, a: DVector<f64>, c: DVector<f64>, d: DVector<f64>) -> Result<CoefficientState> {
        let b = self.eliminate_chemical_potential(&a, &c, &d)?;
        let e = self.eliminate_flux(&a, &c, &d)?;
        let st = CoefficientState { step, t, a, b, c, d, e };
        if ![&st.a, &st.b, &st.c, &st.d, &st.e].iter().all(|v| finite(v)) {
            return Err(ChbError::SolveFailed { t, detail: "non-finite coefficients".into() });
        }
        Ok(st)
    }

    /// Midpoint step with the averaged gradient
    /// `g = int_0^1 grad E(x^n + s (x - x^n)) ds`, so `g . (x - x^n) = E(x) - E(x^n)`.
    ///
    /// Mobility and flux matrices are frozen at the predicted midpoint
    /// `a^n + dt/2 (r - A_m(a^n) b^n)`; the energy gradient is implicit.
    /// With zero sources the energy cannot increase.
    pub fn step_semi_implicit(&self, s: &CoefficientState, dt: f64, set: &StepSettings) -> Result<CoefficientState> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(ChbError::InvalidInput(format!("time step must be positive, got {dt}")));
        }
        let k = self.k();
        let disc = &self.disc;
        let p = &self.params;
        let src = &self.sources;
        let am_n = assemble_mobility_stiffness(disc, p, &(&disc.scalar.values * &s.a));
        let a_mid = &s.a + (&src.r_hat - &am_n * &s.b) * (0.5 * dt);
        let phi_mid = &disc.scalar.values * &a_mid;
        let am = assemble_mobility_stiffness(disc, p, &phi_mid);
        // K_d = B_r M_rr^-1 B_r^T, the fluid block of the dissipation operator.
        let kd = if k > 1 {
            let mch = cholesky(sub_mat(&assemble_flux_matrix(disc, p, &phi_mid)), "flux mass matrix")?;
            let b_r = disc.flux_div.columns(1, k - 1).into_owned();
            &b_r * mch.solve(&b_r.transpose())
        } else {
            DMatrix::zeros(k, k)
        };
        let eta_dt = p.eta / dt;
        let (nodes, weights) = gauss_legendre(AVF_NODES);
        let x0 = stack(&s.a, &s.c, &s.d);
        let mut x = x0.clone();
        // Chord iteration: the factorized Jacobian is reused while the
        // residual contracts fast enough, and rebuilt otherwise.
        let mut lu = None;
        let mut last = f64::INFINITY;
        let mut iters = 0;
        loop {
            let dx = &x - &x0;
            let want_jac = lu.is_none();
            let mut g = DVector::zeros(3 * k);
            let mut gj = DMatrix::zeros(if want_jac { 3 * k } else { 0 }, if want_jac { 3 * k } else { 0 });
            for (xi, wi) in nodes.iter().zip(&weights) {
                let (t, w) = (0.5 * (1.0 + xi), 0.5 * wi);
                let y = &x0 + &dx * t;
                let (ya, yc, yd) = unstack(&y, k);
                let f = self.fields(&ya, &yc, &yd)?;
                let gr = energy_gradient(disc, p, &f, &ya);
                g += stack(&gr.a, &gr.c, &gr.d) * w;
                if want_jac {
                    gj += energy_hessian(disc, p, &f).full() * (w * t);
                }
            }
            let (da, dc, dd) = unstack(&dx, k);
            let (ga, gc, gd) = unstack(&g, k);
            let r = stack(
                &(&da - &src.r_hat * dt + &am * &ga * dt),
                &(&disc.div_gram * &dc * eta_dt + &gc - &src.f_hat),
                &(&dd - &src.s_hat * dt + &kd * &gd * dt),
            );
            let rn = r.amax();
            if !rn.is_finite() {
                break;
            }
            if rn <= set.newton_tol {
                let (a, c, d) = unstack(&x, k);
                return self.finish(s.step + 1, s.t + dt, a, c, d);
            }
            if iters >= set.newton_max_iter {
                break;
            }
            if !want_jac && rn > 0.25 * last {
                // Slow contraction: rebuild the Jacobian at the current iterate.
                lu = None;
                last = f64::INFINITY;
                continue;
            }
            last = rn;
            if want_jac {
                let mut jac = gj.clone();
                let top = &am * gj.rows(0, k) * dt;
                jac.rows_mut(0, k).copy_from(&top);
                let bottom = &kd * gj.rows(2 * k, k) * dt;
                jac.rows_mut(2 * k, k).copy_from(&bottom);
                let mut jcc = jac.view_mut((k, k), (k, k));
                jcc += &disc.div_gram * eta_dt;
                for i in 0..k {
                    jac[(i, i)] += 1.0;
                    jac[(2 * k + i, 2 * k + i)] += 1.0;
                }
                lu = Some(jac.lu());
            }
            let step = lu.as_ref().and_then(|l| l.solve(&(-r))).ok_or_else(|| ChbError::SolveFailed {
                t: s.t + dt,
                detail: "singular semi-implicit Newton matrix".into(),
            })?;
            x += step;
            iters += 1;
        }
        Err(ChbError::SolveFailed { t: s.t + dt, detail: format!("semi-implicit step did not converge in {iters} iterations") })
    }

    /// Convex-splitting step: phase update by minimizing movement at frozen
    /// mobility, then elasticity, then an implicit fluid update.
    pub fn step_convex_splitting(&self, s: &CoefficientState, dt: f64, set: &StepSettings) -> Result<CoefficientState> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(ChbError::InvalidInput(format!("time step must be positive, got {dt}")));
        }
        let a = self.phase_step(s, dt, set)?;
        let c = self.solve_elasticity(&a, &s.d, &s.c, dt)?;
        let d = self.fluid_step(&a, &c, &s.d, dt)?;
        self.finish(s.step + 1, s.t + dt, a, c, d)
    }

    /// Minimizes `E(a, c^n, d^n) + sigma/2 |a - a^n|^2 + 1/(2 dt) |a - a^n - dt r|^2_{A_m^-1}`
    /// over the non-constant modes; the constant mode follows `a_0 + dt r_0`.
    fn phase_step(&self, s: &CoefficientState, dt: f64, set: &StepSettings) -> Result<DVector<f64>> {
        let k = self.k();
        let p = &self.params;
        let mut a = s.a.clone();
        a[0] += dt * self.sources.r_hat[0];
        if k == 1 {
            return Ok(a);
        }
        let sigma = p.c_psi * p.gamma / p.ell + set.convex_shift;
        let phi_n = &self.disc.scalar.values * &s.a;
        let am = assemble_mobility_stiffness(&self.disc, p, &phi_n);
        let am_inv = cholesky(sub_mat(&am), "mobility stiffness")?.inverse() / dt;
        let target = &s.a + &self.sources.r_hat * dt;

        let objective = |a: &DVector<f64>| -> Result<(f64, DVector<f64>, GridFields)> {
            let f = self.fields(a, &s.c, &s.d)?;
            let en = energies(p, &self.disc.grid, &f).total();
            let da = a - &s.a;
            let delta = sub_vec(&(a - &target));
            let w = &am_inv * &delta;
            let j = en + 0.5 * sigma * da.norm_squared() + 0.5 * delta.dot(&w);
            let g = sub_vec(&(energy_gradient(&self.disc, p, &f, a).a + da * sigma)) + w;
            Ok((j, g, f))
        };

        let (mut j, mut g, mut f) = objective(&a)?;
        for _ in 0..set.newton_max_iter {
            if g.amax() <= set.newton_tol {
                return Ok(a);
            }
            let h = sub_mat(&energy_hessian(&self.disc, p, &f).aa) + &am_inv;
            let step = newton_direction(h, sigma, &g)?;
            let slope = g.dot(&step);
            let mut lam = 1.0;
            let mut accepted = false;
            for _ in 0..40 {
                let mut trial = a.clone();
                trial.rows_mut(1, k - 1).axpy(lam, &step, 1.0);
                let (jt, gt, ft) = objective(&trial)?;
                let flat = (jt - j).abs() <= 1e-14 * j.abs().max(1.0);
                if jt.is_finite() && (jt <= j + 1e-4 * lam * slope || (flat && gt.amax() < g.amax())) {
                    a = trial;
                    j = jt;
                    g = gt;
                    f = ft;
                    accepted = true;
                    break;
                }
                lam *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        if g.amax() <= set.newton_tol {
            Ok(a)
        } else {
            Err(ChbError::SolveFailed {
                t: s.t + dt,
                detail: format!("phase update did not converge, gradient norm {:.3e}", g.amax()),
            })
        }
    }

    /// Implicit Euler for `dd/dt + B e = s` with `e` eliminated at `(a, c)`.
    fn fluid_step(&self, a: &DVector<f64>, c: &DVector<f64>, d_prev: &DVector<f64>, dt: f64) -> Result<DVector<f64>> {
        let k = self.k();
        let p = &self.params;
        let mut rhs = d_prev + &self.sources.s_hat * dt;
        if k == 1 {
            return Ok(rhs);
        }
        let z = DVector::zeros(k);
        let f = self.fields(a, c, &z)?;
        let disc = &self.disc;
        let w = &disc.grid.weights;
        let mvals = DVector::from_fn(f.len(), |i, _| w[i] * p.biot_modulus.value(f.phi[i]));
        // With theta = 0 the pressure is the displacement-only part.
        let p0 = DVector::from_fn(f.len(), |i, _| w[i] * p.eval(&f.point(i)).pressure);
        let gq = weighted_gram(&disc.flux.div, &mvals, &disc.scalar.values);
        let p0q = disc.flux.div.tr_mul(&p0);
        let mch = cholesky(sub_mat(&assemble_flux_matrix(disc, p, &f.phi)), "flux mass matrix")?;
        let gq_r = gq.rows(1, k - 1).into_owned();
        let x = mch.solve(&gq_r);
        let y = mch.solve(&sub_vec(&p0q));
        let b_r = disc.flux_div.columns(1, k - 1).into_owned();
        let sys = DMatrix::identity(k, k) + &b_r * x * dt;
        rhs -= &b_r * y * dt;
        sys.lu().solve(&rhs).ok_or_else(|| ChbError::Singular("fluid update".into()))
    }

    /// Fully implicit Euler step solved by Newton in `(a, c, d)`.
    ///
    /// Returns the new state and the number of Newton updates.
    pub fn step_implicit_newton(&self, s: &CoefficientState, dt: f64, set: &StepSettings) -> Result<(CoefficientState, usize)> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(ChbError::InvalidInput(format!("time step must be positive, got {dt}")));
        }
        let k = self.k();
        let mut x = DVector::zeros(3 * k);
        x.rows_mut(0, k).copy_from(&s.a);
        x.rows_mut(k, k).copy_from(&s.c);
        x.rows_mut(2 * k, k).copy_from(&s.d);
        let mut iters = 0;
        loop {
            let (r, jac) = self.implicit_residual(s, &x, dt, iters < set.newton_max_iter)?;
            let rn = r.amax();
            if !rn.is_finite() {
                break;
            }
            if rn <= set.newton_tol {
                let a = x.rows(0, k).into_owned();
                let c = x.rows(k, k).into_owned();
                let d = x.rows(2 * k, k).into_owned();
                return Ok((self.finish(s.step + 1, s.t + dt, a, c, d)?, iters));
            }
            if iters >= set.newton_max_iter {
                break;
            }
            let jac = jac.expect("jacobian requested");
            let dx = jac.lu().solve(&(-r)).ok_or_else(|| ChbError::SolveFailed {
                t: s.t + dt,
                detail: "singular Newton matrix".into(),
            })?;
            x += dx;
            iters += 1;
        }
        Err(ChbError::SolveFailed { t: s.t + dt, detail: format!("Newton did not converge in {iters} iterations") })
    }

    fn implicit_residual(
        &self,
        s: &CoefficientState,
        x: &DVector<f64>,
        dt: f64,
        want_jac: bool,
    ) -> Result<(DVector<f64>, Option<DMatrix<f64>>)> {
        let k = self.k();
        let disc = &self.disc;
        let p = &self.params;
        let a = x.rows(0, k).into_owned();
        let c = x.rows(k, k).into_owned();
        let d = x.rows(2 * k, k).into_owned();
        let f = self.fields(&a, &c, &d)?;
        let grad = energy_gradient(disc, p, &f, &a);
        let am = assemble_mobility_stiffness(disc, p, &f.phi);
        let fs = assemble_flux_system(disc, p, &f);
        let mut e = DVector::zeros(k);
        let mch = if k > 1 {
            let ch = cholesky(sub_mat(&fs.m_kqq), "flux mass matrix")?;
            e.rows_mut(1, k - 1).copy_from(&ch.solve(&sub_vec(&fs.e_dtheta_f)));
            Some(ch)
        } else {
            None
        };
        let src = &self.sources;
        let eta_dt = p.eta / dt;
        let mut r = DVector::zeros(3 * k);
        r.rows_mut(0, k).copy_from(&(&a - &s.a - &src.r_hat * dt + &am * &grad.a * dt));
        r.rows_mut(k, k).copy_from(&(&disc.div_gram * (&c - &s.c) * eta_dt + &grad.c - &src.f_hat));
        r.rows_mut(2 * k, k).copy_from(&(&d - &s.d - &src.s_hat * dt + &disc.flux_div * &e * dt));
        if !want_jac {
            return Ok((r, None));
        }

        let h = energy_hessian(disc, p, &f);
        let hf = h.full();
        let mut jac = DMatrix::zeros(3 * k, 3 * k);
        // Phase rows.
        let kmob = mobility_derivative(disc, p, &f.phi, &grad.a);
        let top = &am * hf.rows(0, k) * dt;
        jac.rows_mut(0, k).copy_from(&top);
        let mut jaa = jac.view_mut((0, 0), (k, k));
        jaa += kmob * dt;
        for i in 0..k {
            jac[(i, i)] += 1.0;
        }
        // Momentum rows.
        jac.rows_mut(k, k).copy_from(&hf.rows(k, k));
        let mut jcc = jac.view_mut((k, k), (k, k));
        jcc += &disc.div_gram * eta_dt;
        // Fluid rows.
        if let Some(mch) = mch {
            let w = &disc.grid.weights;
            let hs: Vec<_> = (0..f.len()).map(|i| p.hessian(&f.point(i))).collect();
            let dv = &disc.flux.div;
            let vals = &disc.scalar.values;
            let wpt = DVector::from_fn(f.len(), |i, _| w[i] * hs[i].phi_theta);
            let wet = DVector::from_fn(f.len(), |i, _| w[i] * hs[i].eps_theta);
            let wtt = DVector::from_fn(f.len(), |i, _| w[i] * hs[i].theta_theta);
            let mut dp_da = weighted_gram(dv, &wpt, vals);
            dp_da -= flux_matrix_derivative(disc, p, &f.phi, &e);
            let dp_dc = weighted_gram(dv, &wet, &disc.vector.div);
            let dp_dd = weighted_gram(dv, &wtt, vals);
            let b_r = disc.flux_div.columns(1, k - 1).into_owned();
            for (blk, m) in [(0usize, dp_da), (1, dp_dc), (2, dp_dd)] {
                let de = mch.solve(&m.rows(1, k - 1).into_owned());
                let contrib = &b_r * de * dt;
                let mut v = jac.view_mut((2 * k, blk * k), (k, k));
                v += contrib;
            }
        }
        for i in 0..k {
            jac[(2 * k + i, 2 * k + i)] += 1.0;
        }
        Ok((r, Some(jac)))
    }

    /// Implicit step with recursive halving on failure.
    pub fn step_implicit_adaptive(&self, s: &CoefficientState, dt: f64, set: &StepSettings) -> Result<CoefficientState> {
        self.with_halving(s, dt, set, |m, s, dt| m.step_implicit_newton(s, dt, set).map(|(st, _)| st))
    }

    /// Retries a failed step as two half steps, at most `max_halvings` deep.
    fn with_halving<F>(&self, s: &CoefficientState, dt: f64, set: &StepSettings, step: F) -> Result<CoefficientState>
    where
        F: Fn(&Model, &CoefficientState, f64) -> Result<CoefficientState> + Copy,
    {
        fn go<F>(m: &Model, s: &CoefficientState, dt: f64, set: &StepSettings, depth: u32, step: F) -> Result<CoefficientState>
        where
            F: Fn(&Model, &CoefficientState, f64) -> Result<CoefficientState> + Copy,
        {
            match step(m, s, dt) {
                Ok(st) => Ok(st),
                Err(e) if depth < set.max_halvings && !e.is_validation() => {
                    let mid = go(m, s, 0.5 * dt, set, depth + 1, step)?;
                    let mut end = go(m, &mid, 0.5 * dt, set, depth + 1, step)?;
                    end.step = s.step + 1;
                    Ok(end)
                }
                Err(e) => Err(e),
            }
        }
        go(self, s, dt, set, 0, step)
    }

    pub fn step(&self, s: &CoefficientState, dt: f64, set: &StepSettings) -> Result<CoefficientState> {
        match set.integrator {
            IntegratorKind::SemiImplicit => self.with_halving(s, dt, set, |m, s, dt| m.step_semi_implicit(s, dt, set)),
            IntegratorKind::ConvexSplitting => self.step_convex_splitting(s, dt, set),
            IntegratorKind::ImplicitEulerNewton => self.step_implicit_adaptive(s, dt, set),
        }
    }
}

fn stack(a: &DVector<f64>, c: &DVector<f64>, d: &DVector<f64>) -> DVector<f64> {
    let k = a.len();
    let mut x = DVector::zeros(3 * k);
    x.rows_mut(0, k).copy_from(a);
    x.rows_mut(k, k).copy_from(c);
    x.rows_mut(2 * k, k).copy_from(d);
    x
}

fn unstack(x: &DVector<f64>, k: usize) -> (DVector<f64>, DVector<f64>, DVector<f64>) {
    (x.rows(0, k).into_owned(), x.rows(k, k).into_owned(), x.rows(2 * k, k).into_owned())
}

fn newton_direction(h: DMatrix<f64>, sigma: f64, g: &DVector<f64>) -> Result<DVector<f64>> {
    let n = h.nrows();
    let scale = h.diagonal().amax().max(1.0);
    let mut shift = 0.0;
    for _ in 0..60 {
        let mut m = h.clone();
        for i in 0..n {
            m[(i, i)] += sigma + shift;
        }
        if let Some(ch) = Cholesky::new(m) {
            return Ok(-ch.solve(g));
        }
        shift = if shift == 0.0 { 1e-10 * scale } else { 4.0 * shift };
    }
    Err(ChbError::NotPositiveDefinite("phase update Hessian".into()))
}

/// Elasticity step computed in the eigenbasis of the volumetric Gram.
///
/// Splits `C = Q diag(D) Q^T` into modes with `D > 0` and its kernel, then
/// eliminates the kernel block by a Schur complement.
pub fn solve_elasticity_spectral(es: &ElasticSystem, eta: f64, dt: f64, c_prev: &DVector<f64>) -> Result<DVector<f64>> {
    let k = es.c_eps.nrows();
    let eig = SymmetricEigen::new(es.c_eps.clone());
    let dmax = eig.eigenvalues.amax();
    let (vis, ker): (Vec<usize>, Vec<usize>) = (0..k).partition(|&i| eig.eigenvalues[i] > 1e-12 * dmax);
    let q = &eig.eigenvectors;
    let kq = q.transpose() * (&es.e_eps + &es.f_eps) * q;
    let rq = q.transpose() * &es.rhs;
    let pq = q.transpose() * c_prev;
    let pick = |rows: &[usize], cols: &[usize]| DMatrix::from_fn(rows.len(), cols.len(), |i, j| kq[(rows[i], cols[j])]);
    let vec_of = |v: &DVector<f64>, idx: &[usize]| DVector::from_fn(idx.len(), |i, _| v[idx[i]]);
    let rate = if eta > 0.0 { eta / dt } else { 0.0 };

    let mut a_vv = pick(&vis, &vis);
    let mut r_v = vec_of(&rq, &vis);
    for (i, &m) in vis.iter().enumerate() {
        a_vv[(i, i)] += rate * eig.eigenvalues[m];
        r_v[i] += rate * eig.eigenvalues[m] * pq[m];
    }
    let mut sol = DVector::zeros(k);
    if ker.is_empty() {
        let cv = cholesky(a_vv, "visible block")?.solve(&r_v);
        for (i, &m) in vis.iter().enumerate() {
            sol[m] = cv[i];
        }
    } else {
        let kdd = cholesky(pick(&ker, &ker), "kernel block")?;
        let kdv = pick(&ker, &vis);
        let r_d = vec_of(&rq, &ker);
        let schur = &a_vv - kdv.transpose() * kdd.solve(&kdv);
        let cv = cholesky(schur, "Schur complement")?.solve(&(&r_v - kdv.transpose() * kdd.solve(&r_d)));
        let cd = kdd.solve(&(&r_d - &kdv * &cv));
        for (i, &m) in vis.iter().enumerate() {
            sol[m] = cv[i];
        }
        for (i, &m) in ker.iter().enumerate() {
            sol[m] = cd[i];
        }
    }
    Ok(q * sol)
}
