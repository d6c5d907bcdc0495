//! Constitutive laws, energy densities and their derivatives.
//!
//! The energy is `E = E_i + E_e + E_f` with
//! `E_i = gamma * int(Psi(phi)/ell + ell/2 |grad phi|^2)`,
//! `E_e = 1/2 int (eps - T) : C (eps - T)` and
//! `E_f = int M/2 (theta - alpha div u)^2`.

mod assumptions;
mod laws;

pub use assumptions::{validate_continuity, validate_existence, Bounds, DeclaredBounds};
pub use laws::{iso_apply, psi, psi_prime, psi_second, Eigenstrain, ScalarLaw, SymTensor};

use nalgebra::DVector;

use crate::quadrature::{pairwise_sum_by, QuadratureGrid};

/// Material parameters and coefficient laws.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MaterialParams {
    pub gamma: f64,
    pub ell: f64,
    /// Viscous regularization of the volumetric strain rate.
    pub eta: f64,
    pub mobility: ScalarLaw,
    pub permeability: ScalarLaw,
    pub biot_modulus: ScalarLaw,
    pub biot_willis: ScalarLaw,
    pub lame_lambda: ScalarLaw,
    pub lame_mu: ScalarLaw,
    pub eigenstrain: Eigenstrain,
    /// Convexity shift: `Psi'' + c_psi >= 0`.
    pub c_psi: f64,
    /// Growth constant: `|Psi'| <= C_psi (Psi + s^2)`.
    pub big_c_psi: f64,
    /// Phase range over which laws are sampled by validators.
    pub phi_range: [f64; 2],
}

impl Default for MaterialParams {
    fn default() -> Self {
        MaterialParams {
            gamma: 1.0,
            ell: 0.1,
            eta: 0.0,
            mobility: ScalarLaw::Constant(1.0),
            permeability: ScalarLaw::Constant(1.0),
            biot_modulus: ScalarLaw::Constant(1.0),
            biot_willis: ScalarLaw::Constant(1.0),
            lame_lambda: ScalarLaw::Constant(1.0),
            lame_mu: ScalarLaw::Constant(1.0),
            eigenstrain: Eigenstrain::Swelling { xi: 0.0, phi_bar: 0.0 },
            c_psi: 4.0,
            big_c_psi: 2.0,
            phi_range: [-2.0, 2.0],
        }
    }
}

/// Pointwise primary variables.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Point {
    pub phi: f64,
    pub eps: SymTensor,
    pub theta: f64,
}

/// Pointwise energy densities and first derivatives.
///
/// `g_phi` excludes the gradient term `-gamma ell Lap(phi)`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PointEval {
    pub psi: f64,
    pub elastic: f64,
    pub fluid: f64,
    pub g_phi: f64,
    pub g_phi_elastic: f64,
    pub g_phi_fluid: f64,
    /// Effective stress `C (eps - T) - alpha p I`.
    pub stress: SymTensor,
    pub pressure: f64,
}

/// Pointwise second derivatives of the non-gradient energy density.
///
/// The strain-strain block is isotropic with Lame pair `(lam_eff, mu_eff)`;
/// the strain-theta block is `eps_theta * I`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PointHessian {
    pub phi_phi: f64,
    pub phi_eps: SymTensor,
    pub phi_theta: f64,
    pub lam_eff: f64,
    pub mu_eff: f64,
    pub eps_theta: f64,
    pub theta_theta: f64,
}

impl MaterialParams {
    /// Lame pair at `phi`.
    pub fn lame(&self, phi: f64) -> (f64, f64) {
        (self.lame_lambda.value(phi), self.lame_mu.value(phi))
    }

    pub fn eval(&self, pt: &Point) -> PointEval {
        let phi = pt.phi;
        let (lam, dlam, _) = self.lame_lambda.eval(phi);
        let (mu, dmu, _) = self.lame_mu.eval(phi);
        let (mm, dmm, _) = self.biot_modulus.eval(phi);
        let (al, dal, _) = self.biot_willis.eval(phi);
        let (t, dt) = self.eigenstrain.eval(phi);
        let e = pt.eps.sub(&t);
        let ce = iso_apply(lam, mu, &e);
        let div = pt.eps.trace();
        let r = pt.theta - al * div;
        let p = mm * r;

        let elastic = 0.5 * e.ddot(&ce);
        let fluid = 0.5 * mm * r * r;
        let g_phi_elastic = 0.5 * e.ddot(&iso_apply(dlam, dmu, &e)) - dt.ddot(&ce);
        let g_phi_fluid = 0.5 * dmm * r * r - dal * mm * r * div;
        let ps = psi(phi);
        let g_phi = self.gamma / self.ell * psi_prime(phi) + g_phi_elastic + g_phi_fluid;
        PointEval {
            psi: ps,
            elastic,
            fluid,
            g_phi,
            g_phi_elastic,
            g_phi_fluid,
            stress: ce.sub(&SymTensor::iso(al * p)),
            pressure: p,
        }
    }

    pub fn hessian(&self, pt: &Point) -> PointHessian {
        let phi = pt.phi;
        let (lam, dlam, d2lam) = self.lame_lambda.eval(phi);
        let (mu, dmu, d2mu) = self.lame_mu.eval(phi);
        let (mm, dmm, d2mm) = self.biot_modulus.eval(phi);
        let (al, dal, d2al) = self.biot_willis.eval(phi);
        let (t, dt) = self.eigenstrain.eval(phi);
        let e = pt.eps.sub(&t);
        let div = pt.eps.trace();
        let r = pt.theta - al * div;

        let c1e = iso_apply(dlam, dmu, &e);
        let c2e = iso_apply(d2lam, d2mu, &e);
        let cdt = iso_apply(lam, mu, &dt);

        let phi_phi = self.gamma / self.ell * psi_second(phi) + 0.5 * e.ddot(&c2e)
            - 2.0 * dt.ddot(&c1e)
            + dt.ddot(&cdt)
            + 0.5 * d2mm * r * r
            - 2.0 * dmm * dal * div * r
            - mm * d2al * div * r
            + mm * dal * dal * div * div;
        let phi_eps = c1e
            .sub(&cdt)
            .add(&SymTensor::iso(-(dmm * al + mm * dal) * r + mm * al * dal * div));
        let phi_theta = dmm * r - mm * dal * div;
        PointHessian {
            phi_phi,
            phi_eps,
            phi_theta,
            lam_eff: lam + mm * al * al,
            mu_eff: mu,
            eps_theta: -mm * al,
            theta_theta: mm,
        }
    }
}

/// Sampled primary fields on the quadrature grid.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFields {
    pub phi: DVector<f64>,
    pub phi_x: DVector<f64>,
    pub phi_y: DVector<f64>,
    pub exx: DVector<f64>,
    pub eyy: DVector<f64>,
    pub exy: DVector<f64>,
    pub theta: DVector<f64>,
}

impl GridFields {
    pub fn point(&self, p: usize) -> Point {
        Point {
            phi: self.phi[p],
            eps: SymTensor::new(self.exx[p], self.eyy[p], self.exy[p]),
            theta: self.theta[p],
        }
    }

    pub fn len(&self) -> usize {
        self.phi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phi.is_empty()
    }
}

/// Energy split into its three parts.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Energies {
    pub interface: f64,
    pub elastic: f64,
    pub fluid: f64,
}

impl Energies {
    pub fn total(&self) -> f64 {
        self.interface + self.elastic + self.fluid
    }
}

pub fn energy_interface(params: &MaterialParams, grid: &QuadratureGrid, f: &GridFields) -> f64 {
    let (g, l) = (params.gamma, params.ell);
    pairwise_sum_by(f.len(), |p| {
        let grad2 = f.phi_x[p] * f.phi_x[p] + f.phi_y[p] * f.phi_y[p];
        grid.weights[p] * g * (psi(f.phi[p]) / l + 0.5 * l * grad2)
    })
}

pub fn energy_elastic(params: &MaterialParams, grid: &QuadratureGrid, f: &GridFields) -> f64 {
    pairwise_sum_by(f.len(), |p| grid.weights[p] * params.eval(&f.point(p)).elastic)
}

pub fn energy_fluid(params: &MaterialParams, grid: &QuadratureGrid, f: &GridFields) -> f64 {
    pairwise_sum_by(f.len(), |p| grid.weights[p] * params.eval(&f.point(p)).fluid)
}

pub fn energies(params: &MaterialParams, grid: &QuadratureGrid, f: &GridFields) -> Energies {
    Energies {
        interface: energy_interface(params, grid, f),
        elastic: energy_elastic(params, grid, f),
        fluid: energy_fluid(params, grid, f),
    }
}

/// Variational derivative in `phi` given the sampled Laplacian of `phi`.
pub fn var_deriv_phi(params: &MaterialParams, f: &GridFields, lap_phi: &DVector<f64>) -> DVector<f64> {
    let gl = params.gamma * params.ell;
    DVector::from_fn(f.len(), |p, _| params.eval(&f.point(p)).g_phi - gl * lap_phi[p])
}

/// Effective stress `C (eps - T) - alpha p I`, the derivative in strain.
pub fn var_deriv_eps(params: &MaterialParams, f: &GridFields) -> Vec<SymTensor> {
    (0..f.len()).map(|p| params.eval(&f.point(p)).stress).collect()
}

/// Pressure `p = M (theta - alpha div u)`, the derivative in `theta`.
pub fn var_deriv_theta(params: &MaterialParams, f: &GridFields) -> DVector<f64> {
    DVector::from_fn(f.len(), |p, _| params.eval(&f.point(p)).pressure)
}

/// Total stress `eta d/dt(div u) I + C (eps - T) - alpha p I`.
pub fn cauchy_stress(params: &MaterialParams, pt: &Point, div_rate: f64) -> SymTensor {
    params.eval(pt).stress.add(&SymTensor::iso(params.eta * div_rate))
}
