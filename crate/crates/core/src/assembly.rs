//! Galerkin matrices and vectors, evaluated by quadrature on the shared grid.
//!
//! Conventions: entry `(j, i)` pairs trial mode `i` with test mode `j`.
//! Everything is a derivative of the quadrature energy, so the assembled
//! gradients are exact gradients of `total_energy` in coefficient space.

use nalgebra::{DMatrix, DVector};

use crate::bases::{check_len, symmetrize, weighted_gram, Discretization};
use crate::constitutive::{iso_apply, psi_prime, GridFields, MaterialParams, PointEval, PointHessian};
use crate::error::Result;

/// Projected sources `(R, eta_j)`, `(S_f, eta_j)`, `(f, eta_j)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectedSources {
    pub r_hat: DVector<f64>,
    pub s_hat: DVector<f64>,
    pub f_hat: DVector<f64>,
}

impl ProjectedSources {
    pub fn zero(k: usize) -> Self {
        ProjectedSources { r_hat: DVector::zeros(k), s_hat: DVector::zeros(k), f_hat: DVector::zeros(k) }
    }
}

/// Samples the fields with coefficients `(a, c, d)` on the grid.
pub fn grid_fields(
    disc: &Discretization,
    a: &DVector<f64>,
    c: &DVector<f64>,
    d: &DVector<f64>,
) -> Result<GridFields> {
    let k = disc.k();
    check_len(a, k)?;
    check_len(c, k)?;
    check_len(d, k)?;
    let s = &disc.scalar;
    let v = &disc.vector;
    Ok(GridFields {
        phi: &s.values * a,
        phi_x: &s.grad_x * a,
        phi_y: &s.grad_y * a,
        exx: &v.exx * c,
        eyy: &v.eyy * c,
        exy: &v.exy * c,
        theta: &s.values * d,
    })
}

/// Spectral Laplacian of the scalar field with coefficients `a`.
pub fn laplacian(disc: &Discretization, a: &DVector<f64>) -> DVector<f64> {
    let la = DVector::from_fn(a.len(), |i, _| -disc.scalar.eigenvalues[i] * a[i]);
    &disc.scalar.values * la
}

fn map_points<T>(params: &MaterialParams, f: &GridFields, g: impl Fn(&MaterialParams, usize) -> T) -> Vec<T> {
    (0..f.len()).map(|p| g(params, p)).collect()
}

fn weighted(disc: &Discretization, vals: impl Fn(usize) -> f64) -> DVector<f64> {
    DVector::from_fn(disc.grid.len(), |p, _| disc.grid.weights[p] * vals(p))
}

/// `A_m(phi)_{ji} = (m(phi) grad eta_i, grad eta_j)`.
pub fn assemble_mobility_stiffness(disc: &Discretization, params: &MaterialParams, phi: &DVector<f64>) -> DMatrix<f64> {
    let w = weighted(disc, |p| params.mobility.value(phi[p]));
    let s = &disc.scalar;
    let mut m = weighted_gram(&s.grad_x, &w, &s.grad_x);
    m += weighted_gram(&s.grad_y, &w, &s.grad_y);
    symmetrize(&mut m);
    m
}

/// Phase-field load vectors `(Psi'(phi), eta_j)` and the elastic and fluid
/// parts of `(d E / d phi, eta_j)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseVectors {
    pub psi_prime: DVector<f64>,
    pub e_dphi_e: DVector<f64>,
    pub e_dphi_f: DVector<f64>,
}

pub fn assemble_phase_vectors(disc: &Discretization, params: &MaterialParams, f: &GridFields) -> PhaseVectors {
    let ev = map_points(params, f, |m, p| m.eval(&f.point(p)));
    let vals = &disc.scalar.values;
    PhaseVectors {
        psi_prime: vals.tr_mul(&weighted(disc, |p| psi_prime(f.phi[p]))),
        e_dphi_e: vals.tr_mul(&weighted(disc, |p| ev[p].g_phi_elastic)),
        e_dphi_f: vals.tr_mul(&weighted(disc, |p| ev[p].g_phi_fluid)),
    }
}

/// Quasi-static momentum balance `eta C dc/dt + (E + F) c = rhs`.
#[derive(Clone, Debug, PartialEq)]
pub struct ElasticSystem {
    pub e_eps: DMatrix<f64>,
    pub f_eps: DMatrix<f64>,
    /// Volumetric Gram `(div eta_i, div eta_j)`.
    pub c_eps: DMatrix<f64>,
    /// `(C T(phi), eps(eta_j))`.
    pub t_eps: DVector<f64>,
    /// `(-alpha M theta I, eps(eta_j))`.
    pub u_eps: DVector<f64>,
    /// `f_hat + t_eps - u_eps`.
    pub rhs: DVector<f64>,
}

/// `sum_p w_p (2 mu_p eps_i : eps_j + lam_p div_i div_j)`.
fn iso_strain_gram(disc: &Discretization, lam: &DVector<f64>, two_mu: &DVector<f64>) -> DMatrix<f64> {
    let v = &disc.vector;
    let mut m = weighted_gram(&v.exx, two_mu, &v.exx);
    m += weighted_gram(&v.eyy, two_mu, &v.eyy);
    m += weighted_gram(&v.exy, two_mu, &v.exy) * 2.0;
    m += weighted_gram(&v.div, lam, &v.div);
    symmetrize(&mut m);
    m
}

/// `(sigma, eps(eta_j))` for a sampled symmetric tensor field.
fn strain_load(disc: &Discretization, sxx: &DVector<f64>, syy: &DVector<f64>, sxy: &DVector<f64>) -> DVector<f64> {
    let v = &disc.vector;
    let w = &disc.grid.weights;
    v.exx.tr_mul(&sxx.component_mul(w)) + v.eyy.tr_mul(&syy.component_mul(w)) + v.exy.tr_mul(&sxy.component_mul(w)) * 2.0
}

pub fn assemble_elastic_system(
    disc: &Discretization,
    params: &MaterialParams,
    f_hat: &DVector<f64>,
    f: &GridFields,
) -> ElasticSystem {
    let n = f.len();
    let mut lam = DVector::zeros(n);
    let mut two_mu = DVector::zeros(n);
    let mut ma2 = DVector::zeros(n);
    let mut ct = [DVector::zeros(n), DVector::zeros(n), DVector::zeros(n)];
    let mut u = DVector::zeros(n);
    for p in 0..n {
        let phi = f.phi[p];
        let w = disc.grid.weights[p];
        let (l, m) = params.lame(phi);
        let mm = params.biot_modulus.value(phi);
        let al = params.biot_willis.value(phi);
        lam[p] = w * l;
        two_mu[p] = w * 2.0 * m;
        ma2[p] = w * mm * al * al;
        let c_t = iso_apply(l, m, &params.eigenstrain.eval(phi).0);
        ct[0][p] = c_t.xx;
        ct[1][p] = c_t.yy;
        ct[2][p] = c_t.xy;
        u[p] = -al * mm * f.theta[p] * w;
    }
    let e_eps = iso_strain_gram(disc, &lam, &two_mu);
    let mut f_eps = weighted_gram(&disc.vector.div, &ma2, &disc.vector.div);
    symmetrize(&mut f_eps);
    let t_eps = strain_load(disc, &ct[0], &ct[1], &ct[2]);
    let u_eps = disc.vector.div.tr_mul(&u);
    let rhs = f_hat + &t_eps - &u_eps;
    ElasticSystem { e_eps, f_eps, c_eps: disc.div_gram.clone(), t_eps, u_eps, rhs }
}

/// Mixed Darcy system: `M_kqq e = E_dtheta_f`, with `M_kqq = (kappa^-1 q_i, q_j)`.
#[derive(Clone, Debug, PartialEq)]
pub struct FluxSystem {
    pub m_kqq: DMatrix<f64>,
    /// `(p, div q_j)`, zero for the inert constant mode.
    pub e_dtheta_f: DVector<f64>,
}

pub fn assemble_flux_matrix(disc: &Discretization, params: &MaterialParams, phi: &DVector<f64>) -> DMatrix<f64> {
    let w = weighted(disc, |p| 1.0 / params.permeability.value(phi[p]));
    let q = &disc.flux;
    let mut m = weighted_gram(&q.qx, &w, &q.qx);
    m += weighted_gram(&q.qy, &w, &q.qy);
    symmetrize(&mut m);
    m
}

pub fn assemble_flux_system(disc: &Discretization, params: &MaterialParams, f: &GridFields) -> FluxSystem {
    let m_kqq = assemble_flux_matrix(disc, params, &f.phi);
    let pw = weighted(disc, |p| params.eval(&f.point(p)).pressure);
    FluxSystem { m_kqq, e_dtheta_f: disc.flux.div.tr_mul(&pw) }
}

/// Coupling matrix `B_{ji} = (div q_i, eta_j)`.
pub fn assemble_flux_divergence(disc: &Discretization) -> DMatrix<f64> {
    disc.flux_div.clone()
}

/// Gradient of the quadrature energy in `(a, c, d)`.
#[derive(Clone, Debug, PartialEq)]
pub struct EnergyGradient {
    pub a: DVector<f64>,
    pub c: DVector<f64>,
    pub d: DVector<f64>,
}

pub fn energy_gradient(disc: &Discretization, params: &MaterialParams, f: &GridFields, a: &DVector<f64>) -> EnergyGradient {
    let ev: Vec<PointEval> = map_points(params, f, |m, p| m.eval(&f.point(p)));
    let vals = &disc.scalar.values;
    let ga = &disc.stiffness * a * (params.gamma * params.ell) + vals.tr_mul(&weighted(disc, |p| ev[p].g_phi));
    let sxx = DVector::from_fn(f.len(), |p, _| ev[p].stress.xx);
    let syy = DVector::from_fn(f.len(), |p, _| ev[p].stress.yy);
    let sxy = DVector::from_fn(f.len(), |p, _| ev[p].stress.xy);
    let gc = strain_load(disc, &sxx, &syy, &sxy);
    let gd = vals.tr_mul(&weighted(disc, |p| ev[p].pressure));
    EnergyGradient { a: ga, c: gc, d: gd }
}

/// Hessian blocks of the quadrature energy; row index is the test mode.
#[derive(Clone, Debug, PartialEq)]
pub struct EnergyHessian {
    pub aa: DMatrix<f64>,
    pub ac: DMatrix<f64>,
    pub ad: DMatrix<f64>,
    pub cc: DMatrix<f64>,
    pub cd: DMatrix<f64>,
    pub dd: DMatrix<f64>,
}

impl EnergyHessian {
    /// Dense symmetric matrix in the ordering `(a, c, d)`.
    pub fn full(&self) -> DMatrix<f64> {
        let k = self.aa.nrows();
        let mut h = DMatrix::zeros(3 * k, 3 * k);
        h.view_mut((0, 0), (k, k)).copy_from(&self.aa);
        h.view_mut((0, k), (k, k)).copy_from(&self.ac);
        h.view_mut((0, 2 * k), (k, k)).copy_from(&self.ad);
        h.view_mut((k, 0), (k, k)).copy_from(&self.ac.transpose());
        h.view_mut((k, k), (k, k)).copy_from(&self.cc);
        h.view_mut((k, 2 * k), (k, k)).copy_from(&self.cd);
        h.view_mut((2 * k, 0), (k, k)).copy_from(&self.ad.transpose());
        h.view_mut((2 * k, k), (k, k)).copy_from(&self.cd.transpose());
        h.view_mut((2 * k, 2 * k), (k, k)).copy_from(&self.dd);
        h
    }
}

pub fn energy_hessian(disc: &Discretization, params: &MaterialParams, f: &GridFields) -> EnergyHessian {
    let hs: Vec<PointHessian> = map_points(params, f, |m, p| m.hessian(&f.point(p)));
    let vals = &disc.scalar.values;
    let v = &disc.vector;
    let mut aa = weighted_gram(vals, &weighted(disc, |p| hs[p].phi_phi), vals);
    aa += &disc.stiffness * (params.gamma * params.ell);
    symmetrize(&mut aa);
    let mut ac = weighted_gram(vals, &weighted(disc, |p| hs[p].phi_eps.xx), &v.exx);
    ac += weighted_gram(vals, &weighted(disc, |p| hs[p].phi_eps.yy), &v.eyy);
    ac += weighted_gram(vals, &weighted(disc, |p| 2.0 * hs[p].phi_eps.xy), &v.exy);
    let mut ad = weighted_gram(vals, &weighted(disc, |p| hs[p].phi_theta), vals);
    symmetrize(&mut ad);
    let cc = iso_strain_gram(
        disc,
        &weighted(disc, |p| hs[p].lam_eff),
        &weighted(disc, |p| 2.0 * hs[p].mu_eff),
    );
    let cd = weighted_gram(&v.div, &weighted(disc, |p| hs[p].eps_theta), vals);
    let mut dd = weighted_gram(vals, &weighted(disc, |p| hs[p].theta_theta), vals);
    symmetrize(&mut dd);
    EnergyHessian { aa, ac, ad, cc, cd, dd }
}

/// `K_{jl} = d/da_l (A_m(a) b)_j` at fixed `b`.
pub fn mobility_derivative(disc: &Discretization, params: &MaterialParams, phi: &DVector<f64>, b: &DVector<f64>) -> DMatrix<f64> {
    let s = &disc.scalar;
    let mux = &s.grad_x * b;
    let muy = &s.grad_y * b;
    let dm = DVector::from_fn(phi.len(), |p, _| params.mobility.eval(phi[p]).1);
    let wx = weighted(disc, |p| dm[p] * mux[p]);
    let wy = weighted(disc, |p| dm[p] * muy[p]);
    weighted_gram(&s.grad_x, &wx, &s.values) + weighted_gram(&s.grad_y, &wy, &s.values)
}

/// `d/da_l (M_kqq(a) e)_j` at fixed `e`.
pub fn flux_matrix_derivative(disc: &Discretization, params: &MaterialParams, phi: &DVector<f64>, e: &DVector<f64>) -> DMatrix<f64> {
    let q = &disc.flux;
    let qex = &q.qx * e;
    let qey = &q.qy * e;
    let dk = DVector::from_fn(phi.len(), |p, _| {
        let (kv, kd, _) = params.permeability.eval(phi[p]);
        -kd / (kv * kv)
    });
    let wx = weighted(disc, |p| dk[p] * qex[p]);
    let wy = weighted(disc, |p| dk[p] * qey[p]);
    weighted_gram(&q.qx, &wx, &disc.scalar.values) + weighted_gram(&q.qy, &wy, &disc.scalar.values)
}
