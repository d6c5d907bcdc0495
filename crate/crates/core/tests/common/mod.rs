//! Test-side oracles shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;
use std::path::PathBuf;

use chb::assembly::ProjectedSources;
use chb::bases::{Discretization, RectDomain};
use chb::config::{parse_config, ModelConfig};
use chb::constitutive::{Eigenstrain, MaterialParams, ScalarLaw, SymTensor};
use chb::dynamics::Model;
use chb::rng::Stream;
use nalgebra::{DMatrix, DVector};

pub fn preset_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../presets").join(name)
}

pub fn preset(name: &str) -> ModelConfig {
    let text = std::fs::read_to_string(preset_path(name)).expect("preset is readable");
    parse_config(&text).expect("preset parses")
}

/// Gauss-Legendre nodes and weights on `[-1, 1]` by Newton iteration on `P_n`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for j in 2..=n {
                let p2 = ((2 * j - 1) as f64 * z * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            let (p, dp) = if n == 1 { (z, 1.0) } else { (p1, n as f64 * (z * p1 - p0) / (z * z - 1.0)) };
            let dz = p / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (mut p0, mut p1) = (1.0, z);
        for j in 2..=n {
            let p2 = ((2 * j - 1) as f64 * z * p1 - (j - 1) as f64 * p0) / j as f64;
            p0 = p1;
            p1 = p2;
        }
        let dp = if n == 1 { 1.0 } else { n as f64 * (z * p1 - p0) / (z * z - 1.0) };
        x[i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    (x, w)
}

/// Tensor rule on `[0, lx] x [0, ly]`: points and weights.
pub fn tensor_rule(lx: f64, ly: f64, n: usize) -> Vec<(f64, f64, f64)> {
    let (x, w) = gauss_legendre(n);
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let px = 0.5 * lx * (x[i] + 1.0);
            let py = 0.5 * ly * (x[j] + 1.0);
            out.push((px, py, 0.25 * lx * ly * w[i] * w[j]));
        }
    }
    out
}

/// Analytic L2-normalized Neumann cosine mode and its gradient.
pub fn cosine_mode(lx: f64, ly: f64, m: [usize; 2], x: f64, y: f64) -> (f64, f64, f64) {
    let nx = if m[0] == 0 { 1.0 / lx } else { 2.0 / lx };
    let ny = if m[1] == 0 { 1.0 / ly } else { 2.0 / ly };
    let c = (nx * ny).sqrt();
    let (ax, ay) = (m[0] as f64 * PI / lx, m[1] as f64 * PI / ly);
    (
        c * (ax * x).cos() * (ay * y).cos(),
        -c * ax * (ax * x).sin() * (ay * y).cos(),
        -c * ay * (ax * x).cos() * (ay * y).sin(),
    )
}

/// Analytic L2-normalized Dirichlet sine factor.
pub fn sine_mode(lx: f64, ly: f64, mx: usize, my: usize, x: f64, y: f64) -> f64 {
    let c = 2.0 / (lx * ly).sqrt();
    c * (mx as f64 * PI * x / lx).sin() * (my as f64 * PI * y / ly).sin()
}

pub fn disc(lx: f64, ly: f64, k: usize) -> Discretization {
    Discretization::new(RectDomain::with_default_resolution(lx, ly, k).unwrap(), k).unwrap()
}

pub fn affine(at_zero: f64, slope: f64, min: f64, max: f64) -> ScalarLaw {
    ScalarLaw::Affine { at_zero, slope, min, max }
}

/// Phase-dependent, clamped laws with analytically known bounds on `[-2, 2]`:
/// `2 mu` in `[1.4, 2.6]`, `2 mu + 2 lambda` in `[3.8, 4.2]`, `M >= 0.8`,
/// `alpha <= 0.6`, `|T(s)| = 0.1 sqrt(2) |s|`.
pub fn clamped_material(eta: f64) -> MaterialParams {
    MaterialParams {
        gamma: 1.0,
        ell: 0.1,
        eta,
        mobility: ScalarLaw::Sigmoid { minus: 5e-3, plus: 1.5e-2, width: 0.5 },
        permeability: ScalarLaw::Sigmoid { minus: 0.02, plus: 0.005, width: 0.4 },
        biot_modulus: affine(1.0, 0.2, 0.8, 1.2),
        biot_willis: affine(0.5, 0.1, 0.4, 0.6),
        lame_lambda: affine(1.0, 0.25, 0.6, 1.4),
        lame_mu: affine(1.0, -0.2, 0.7, 1.3),
        eigenstrain: Eigenstrain::Swelling { xi: 0.1, phi_bar: 0.0 },
        ..MaterialParams::default()
    }
}

/// Smooth phase-dependent laws, so every energy term is infinitely
/// differentiable in the phase.
pub fn smooth_material() -> MaterialParams {
    MaterialParams {
        gamma: 1.0,
        ell: 0.1,
        eta: 0.05,
        mobility: ScalarLaw::Sigmoid { minus: 5e-3, plus: 1.5e-2, width: 0.5 },
        permeability: ScalarLaw::Sigmoid { minus: 0.02, plus: 0.005, width: 0.4 },
        biot_modulus: ScalarLaw::Sigmoid { minus: 0.9, plus: 1.1, width: 0.5 },
        biot_willis: ScalarLaw::Sigmoid { minus: 0.45, plus: 0.55, width: 0.8 },
        lame_lambda: ScalarLaw::Sigmoid { minus: 0.8, plus: 1.2, width: 0.7 },
        lame_mu: ScalarLaw::Sigmoid { minus: 1.1, plus: 0.9, width: 0.6 },
        eigenstrain: Eigenstrain::Vegard { hat: SymTensor::new(0.1, 0.05, 0.02), star: SymTensor::ZERO },
        ..MaterialParams::default()
    }
}

pub fn model(d: Discretization, params: MaterialParams) -> Model {
    let k = d.k();
    Model::new(d, params, ProjectedSources::zero(k)).unwrap()
}

pub fn random_vec(rng: &mut Stream, k: usize, amp: f64) -> DVector<f64> {
    DVector::from_fn(k, |_, _| amp * rng.symmetric())
}

/// Random `(a, c, d)` with modal amplitudes decaying like `1 / sqrt(1 + lambda)`
/// and the phase rescaled into `|phi| <= phi_max` on the grid.
pub fn random_state(m: &Model, rng: &mut Stream, amp: f64, phi_max: f64) -> (DVector<f64>, DVector<f64>, DVector<f64>) {
    let k = m.k();
    let lam = &m.disc.scalar.eigenvalues;
    let mut a = DVector::from_fn(k, |i, _| amp * rng.symmetric() / (1.0 + lam[i]).sqrt() * 4.0);
    let c = DVector::from_fn(k, |i, _| amp * 0.2 * rng.symmetric() / (1.0 + m.disc.vector.eigenvalues[i]).sqrt() * 4.0);
    let d = DVector::from_fn(k, |i, _| amp * rng.symmetric() / (1.0 + lam[i]).sqrt() * 4.0);
    let peak = (&m.disc.scalar.values * &a).amax();
    if peak > phi_max {
        a *= phi_max / peak;
    }
    (a, c, d)
}

/// Grid samples of everything the energy needs, from the basis tables.
pub struct Samples {
    pub w: DVector<f64>,
    pub phi: DVector<f64>,
    pub phi_x: DVector<f64>,
    pub phi_y: DVector<f64>,
    pub exx: DVector<f64>,
    pub eyy: DVector<f64>,
    pub exy: DVector<f64>,
    pub theta: DVector<f64>,
}

pub fn samples(m: &Model, a: &DVector<f64>, c: &DVector<f64>, d: &DVector<f64>) -> Samples {
    let s = &m.disc.scalar;
    let v = &m.disc.vector;
    Samples {
        w: m.disc.grid.weights.clone(),
        phi: &s.values * a,
        phi_x: &s.grad_x * a,
        phi_y: &s.grad_y * a,
        exx: &v.exx * c,
        eyy: &v.eyy * c,
        exy: &v.exy * c,
        theta: &s.values * d,
    }
}

/// `[E_i, E_e, E_f]` summed directly from the pointwise densities.
pub fn energy_oracle(m: &Model, a: &DVector<f64>, c: &DVector<f64>, d: &DVector<f64>) -> [f64; 3] {
    let p = &m.params;
    let s = samples(m, a, c, d);
    let mut e = [0.0; 3];
    for i in 0..s.w.len() {
        let phi = s.phi[i];
        let w = s.w[i];
        let psi = (1.0 - phi * phi).powi(2);
        e[0] += w * p.gamma * (psi / p.ell + 0.5 * p.ell * (s.phi_x[i].powi(2) + s.phi_y[i].powi(2)));
        let t = p.eigenstrain.eval(phi).0;
        let (rxx, ryy, rxy) = (s.exx[i] - t.xx, s.eyy[i] - t.yy, s.exy[i] - t.xy);
        let (lam, mu) = (p.lame_lambda.value(phi), p.lame_mu.value(phi));
        e[1] += w * 0.5 * (2.0 * mu * (rxx * rxx + ryy * ryy + 2.0 * rxy * rxy) + lam * (rxx + ryy).powi(2));
        let r = s.theta[i] - p.biot_willis.value(phi) * (s.exx[i] + s.eyy[i]);
        e[2] += w * 0.5 * p.biot_modulus.value(phi) * r * r;
    }
    e
}

/// `int phi` by quadrature of the reconstructed field.
pub fn integral(m: &Model, a: &DVector<f64>) -> f64 {
    (&m.disc.scalar.values * a).dot(&m.disc.grid.weights)
}

/// `(-div(w grad)^-1 f, f)` from a dense stiffness assembled from the gradient
/// tables, on the non-constant modes.
pub fn dense_inverse_pairing(disc: &Discretization, w: f64, f: &DVector<f64>) -> f64 {
    let s = &disc.scalar;
    let k = s.len();
    let wt = &disc.grid.weights;
    let a = DMatrix::from_fn(k - 1, k - 1, |i, j| {
        let (gi, gj) = (i + 1, j + 1);
        let mut acc = 0.0;
        for p in 0..wt.len() {
            acc += wt[p] * w * (s.grad_x[(p, gi)] * s.grad_x[(p, gj)] + s.grad_y[(p, gi)] * s.grad_y[(p, gj)]);
        }
        acc
    });
    let fr = f.rows(1, k - 1).into_owned();
    let x = a.lu().solve(&fr).expect("stiffness is nonsingular on non-constant modes");
    fr.dot(&x)
}

/// Least-squares slope of `ys` against `xs`.
pub fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}
