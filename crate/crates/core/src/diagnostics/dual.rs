//! Negative norms on the Galerkin spaces.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::assembly::grid_fields;
use crate::bases::{symmetrize, weighted_gram, Discretization};
use crate::constitutive::{iso_apply, MaterialParams};
use crate::error::{ChbError, Result};
use crate::quadrature::pairwise_sum_by;

/// Largest admissible constant-mode coefficient for a "zero-mean" input.
pub fn zero_mean_tolerance(f: &DVector<f64>) -> f64 {
    1e-12 * f.amax().max(1.0)
}

fn check_zero_mean(f: &DVector<f64>) -> Result<()> {
    if f[0].abs() > zero_mean_tolerance(f) {
        return Err(ChbError::InvalidInput(format!(
            "inverse Laplacian needs a zero-mean input, constant coefficient is {:e}",
            f[0]
        )));
    }
    Ok(())
}

fn solve_spd(m: DMatrix<f64>, rhs: &DVector<f64>, what: &str) -> Result<DVector<f64>> {
    Cholesky::new(m).map(|c| c.solve(rhs)).ok_or_else(|| ChbError::NotPositiveDefinite(what.into()))
}

fn active(m: &DMatrix<f64>) -> DMatrix<f64> {
    let k = m.nrows();
    m.view((1, 1), (k - 1, k - 1)).into_owned()
}

fn active_vec(v: &DVector<f64>) -> DVector<f64> {
    v.rows(1, v.len() - 1).into_owned()
}

/// `(-Lap_w^-1 f, f) = sum_{i >= 1} f_i^2 / (w lambda_i)` for a constant weight.
pub fn inv_laplacian_pairing(disc: &Discretization, weight: f64, f: &DVector<f64>) -> Result<f64> {
    if !(weight > 0.0 && weight.is_finite()) {
        return Err(ChbError::InvalidInput(format!("weight must be positive, got {weight}")));
    }
    if f.len() != disc.k() {
        return Err(ChbError::InvalidInput("coefficient length mismatch".into()));
    }
    check_zero_mean(f)?;
    Ok((1..f.len()).map(|i| f[i] * f[i] / (weight * disc.scalar.eigenvalues[i])).sum())
}

/// Same pairing through a dense solve of the weighted stiffness system, for
/// weights sampled on the grid.
pub fn inv_laplacian_pairing_dense(disc: &Discretization, weight: &DVector<f64>, f: &DVector<f64>) -> Result<f64> {
    check_zero_mean(f)?;
    if f.len() < 2 {
        return Ok(0.0);
    }
    let w = weight.component_mul(&disc.grid.weights);
    let s = &disc.scalar;
    let mut a = weighted_gram(&s.grad_x, &w, &s.grad_x) + weighted_gram(&s.grad_y, &w, &s.grad_y);
    symmetrize(&mut a);
    let fr = active_vec(f);
    let x = solve_spd(active(&a), &fr, "weighted stiffness")?;
    Ok(fr.dot(&x))
}

/// Mixed form `(kappa^-1 q, q)` with `div q = f`, the flux of the auxiliary
/// problem, for permeability sampled on the grid.
pub fn mixed_inv_laplacian_pairing(disc: &Discretization, kappa: &DVector<f64>, f: &DVector<f64>) -> Result<f64> {
    check_zero_mean(f)?;
    if f.len() < 2 {
        return Ok(0.0);
    }
    let w = DVector::from_fn(kappa.len(), |i, _| disc.grid.weights[i] / kappa[i]);
    let q = &disc.flux;
    let mut m = weighted_gram(&q.qx, &w, &q.qx) + weighted_gram(&q.qy, &w, &q.qy);
    symmetrize(&mut m);
    let b = active(&disc.flux_div);
    let e = b.lu().solve(&active_vec(f)).ok_or_else(|| ChbError::Singular("flux divergence".into()))?;
    Ok(e.dot(&(active(&m) * &e)))
}

/// Squared `(H^1)'` norm of the scalar field with coefficients `m`.
pub fn h1_dual_sq(disc: &Discretization, m: &DVector<f64>) -> Result<f64> {
    let g = &disc.scalar_gram * m;
    let x = solve_spd(&disc.scalar_gram + &disc.stiffness, &g, "scalar H1 Gram")?;
    Ok(g.dot(&x))
}

/// Squared `H(div)'` norm of the flux with coefficients `e`.
pub fn hdiv_dual_sq(disc: &Discretization, e: &DVector<f64>) -> Result<f64> {
    if e.len() < 2 {
        return Ok(0.0);
    }
    let g = active_vec(&(&disc.flux_gram * e));
    let x = solve_spd(active(&(&disc.flux_gram + &disc.flux_div_gram)), &g, "flux H(div) Gram")?;
    Ok(g.dot(&x))
}

/// Squared `H^-1` norm of a vector load with coefficients `(f, eta_j)`.
pub fn h_minus1_sq(disc: &Discretization, f_hat: &DVector<f64>) -> Result<f64> {
    let x = solve_spd(disc.vector_h1.clone(), f_hat, "vector H1 Gram")?;
    Ok(f_hat.dot(&x))
}

/// `gamma ell |grad phi|^2 + (eps(u) - T' phi) : C (eps(u) - T' phi) + M |theta - alpha div u|^2`
/// for a difference state, with the laws evaluated at `phi = 0` (constant laws).
pub fn quadratic_seminorm(
    disc: &Discretization,
    params: &MaterialParams,
    da: &DVector<f64>,
    dc: &DVector<f64>,
    dd: &DVector<f64>,
) -> Result<f64> {
    let f = grid_fields(disc, da, dc, dd)?;
    let (lam, mu) = params.lame(0.0);
    let mm = params.biot_modulus.value(0.0);
    let al = params.biot_willis.value(0.0);
    let hat = params.eigenstrain.slope();
    let w = &disc.grid.weights;
    let gl = params.gamma * params.ell;
    Ok(pairwise_sum_by(f.len(), |p| {
        let pt = f.point(p);
        let e = pt.eps.sub(&hat.scale(pt.phi));
        let r = pt.theta - al * pt.eps.trace();
        let grad2 = f.phi_x[p] * f.phi_x[p] + f.phi_y[p] * f.phi_y[p];
        w[p] * (gl * grad2 + e.ddot(&iso_apply(lam, mu, &e)) + mm * r * r)
    }))
}
