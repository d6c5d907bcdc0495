//! Neumann cosine, Dirichlet sine and mixed flux bases on a rectangle.
//!
//! All bases are sampled on one shared Gauss-Legendre grid. Scalar and vector
//! modes are normalized to unit discrete L2 norm, so every inner product below
//! is the grid quadrature.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{ChbError, Result};
use crate::quadrature::QuadratureGrid;

/// Relative tolerance under which two eigenvalues count as tied.
const TIE_TOL: f64 = 1e-12;

/// Rectangle `[0, lx] x [0, ly]` with its quadrature resolution.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RectDomain {
    pub lx: f64,
    pub ly: f64,
    pub nq_x: usize,
    pub nq_y: usize,
}

impl RectDomain {
    pub fn new(lx: f64, ly: f64, nq_x: usize, nq_y: usize) -> Result<Self> {
        if !(lx.is_finite() && ly.is_finite() && lx > 0.0 && ly > 0.0) {
            return Err(ChbError::InvalidInput(format!(
                "domain lengths must be positive and finite, got ({lx}, {ly})"
            )));
        }
        if nq_x == 0 || nq_y == 0 {
            return Err(ChbError::InvalidInput("quadrature resolution must be positive".into()));
        }
        Ok(RectDomain { lx, ly, nq_x, nq_y })
    }

    /// Default resolution for `k` scalar and `k` vector modes.
    ///
    /// The hard floor is `2 m + 2` points for highest index `m`; Gauss rules at
    /// the floor integrate trigonometric products only to about `1e-3`, so the
    /// default uses `4 m + 8`, which keeps Gram deviations near `1e-15`.
    pub fn with_default_resolution(lx: f64, ly: f64, k: usize) -> Result<Self> {
        RectDomain::new(lx, ly, 1, 1)?;
        let (mx, my) = max_mode_indices(lx, ly, k);
        RectDomain::new(lx, ly, 4 * mx + 8, 4 * my + 8)
    }

    pub fn area(&self) -> f64 {
        self.lx * self.ly
    }

    pub fn grid(&self) -> QuadratureGrid {
        QuadratureGrid::new(self.lx, self.ly, self.nq_x, self.nq_y)
    }
}

fn eigenvalue(lx: f64, ly: f64, mx: usize, my: usize) -> f64 {
    let ax = mx as f64 * PI / lx;
    let ay = my as f64 * PI / ly;
    ax * ax + ay * ay
}

fn tied(a: f64, b: f64) -> bool {
    (a - b).abs() <= TIE_TOL * a.abs().max(b.abs())
}

/// First `k` cosine index pairs by ascending eigenvalue, ties by `(mx, my)`.
pub fn scalar_modes(lx: f64, ly: f64, k: usize) -> Vec<([usize; 2], f64)> {
    let mut cand = Vec::with_capacity((k + 1) * (k + 1));
    for mx in 0..=k {
        for my in 0..=k {
            cand.push(([mx, my], eigenvalue(lx, ly, mx, my)));
        }
    }
    cand.sort_by(|a, b| {
        if tied(a.1, b.1) {
            a.0.cmp(&b.0)
        } else {
            a.1.total_cmp(&b.1)
        }
    });
    cand.truncate(k);
    cand
}

/// First `k` sine modes `(mx, my, component)` by ascending eigenvalue, ties by
/// component then `(mx, my)`.
pub fn vector_modes(lx: f64, ly: f64, k: usize) -> Vec<([usize; 3], f64)> {
    let mut cand = Vec::with_capacity(2 * k * k);
    for mx in 1..=k {
        for my in 1..=k {
            let lam = eigenvalue(lx, ly, mx, my);
            cand.push(([mx, my, 0], lam));
            cand.push(([mx, my, 1], lam));
        }
    }
    cand.sort_by(|a, b| {
        if tied(a.1, b.1) {
            (a.0[2], a.0[0], a.0[1]).cmp(&(b.0[2], b.0[0], b.0[1]))
        } else {
            a.1.total_cmp(&b.1)
        }
    });
    cand.truncate(k);
    cand
}

/// Largest `x` and `y` indices used by `k` scalar plus `k` vector modes.
pub fn max_mode_indices(lx: f64, ly: f64, k: usize) -> (usize, usize) {
    let mut mx = 0;
    let mut my = 0;
    for (m, _) in scalar_modes(lx, ly, k) {
        mx = mx.max(m[0]);
        my = my.max(m[1]);
    }
    for (m, _) in vector_modes(lx, ly, k) {
        mx = mx.max(m[0]);
        my = my.max(m[1]);
    }
    (mx, my)
}

fn check_floor(grid: &QuadratureGrid, mx: usize, my: usize) -> Result<()> {
    let fx = 2 * mx + 2;
    let fy = 2 * my + 2;
    if grid.nx() < fx {
        return Err(ChbError::UnderResolved { axis: 'x', nq: grid.nx(), floor: fx });
    }
    if grid.ny() < fy {
        return Err(ChbError::UnderResolved { axis: 'y', nq: grid.ny(), floor: fy });
    }
    Ok(())
}

fn check_k(k: usize) -> Result<()> {
    if k == 0 {
        Err(ChbError::InvalidInput("number of modes k must be at least 1".into()))
    } else {
        Ok(())
    }
}

/// Fills an `N x k` matrix whose column `i` samples `cx_i(x) * cy_i(y)`.
fn separable(
    grid: &QuadratureGrid,
    k: usize,
    fx: impl Fn(usize, f64) -> f64,
    fy: impl Fn(usize, f64) -> f64,
) -> DMatrix<f64> {
    let ny = grid.ny();
    let mut m = DMatrix::zeros(grid.len(), k);
    for i in 0..k {
        let xs: Vec<f64> = grid.x.iter().map(|&x| fx(i, x)).collect();
        let ys: Vec<f64> = grid.y.iter().map(|&y| fy(i, y)).collect();
        let mut col = m.column_mut(i);
        for (ix, vx) in xs.iter().enumerate() {
            for (iy, vy) in ys.iter().enumerate() {
                col[ix * ny + iy] = vx * vy;
            }
        }
    }
    m
}

fn discrete_norms(grid: &QuadratureGrid, values: &DMatrix<f64>) -> Vec<f64> {
    (0..values.ncols())
        .map(|i| {
            let c = values.column(i);
            c.iter().zip(grid.weights.iter()).map(|(v, w)| w * v * v).sum::<f64>().sqrt()
        })
        .collect()
}

fn scale_columns(m: &mut DMatrix<f64>, s: &[f64]) {
    for (i, si) in s.iter().enumerate() {
        m.column_mut(i).scale_mut(*si);
    }
}

/// Cosine eigenfunctions of the Neumann Laplacian.
#[derive(Clone, Debug)]
pub struct ScalarBasis {
    pub grid: Arc<QuadratureGrid>,
    pub modes: Vec<[usize; 2]>,
    pub eigenvalues: Vec<f64>,
    /// Column `i` samples mode `i`.
    pub values: DMatrix<f64>,
    pub grad_x: DMatrix<f64>,
    pub grad_y: DMatrix<f64>,
}

impl ScalarBasis {
    pub fn new(domain: &RectDomain, k: usize) -> Result<Self> {
        ScalarBasis::on_grid(Arc::new(domain.grid()), k)
    }

    pub fn on_grid(grid: Arc<QuadratureGrid>, k: usize) -> Result<Self> {
        check_k(k)?;
        let sel = scalar_modes(grid.lx, grid.ly, k);
        let mxm = sel.iter().map(|s| s.0[0]).max().unwrap_or(0);
        let mym = sel.iter().map(|s| s.0[1]).max().unwrap_or(0);
        check_floor(&grid, mxm, mym)?;
        let modes: Vec<[usize; 2]> = sel.iter().map(|s| s.0).collect();
        let eigenvalues: Vec<f64> = sel.iter().map(|s| s.1).collect();
        let kx = |i: usize| modes[i][0] as f64 * PI / grid.lx;
        let ky = |i: usize| modes[i][1] as f64 * PI / grid.ly;

        let mut values = separable(&grid, k, |i, x| (kx(i) * x).cos(), |i, y| (ky(i) * y).cos());
        let mut grad_x =
            separable(&grid, k, |i, x| -kx(i) * (kx(i) * x).sin(), |i, y| (ky(i) * y).cos());
        let mut grad_y =
            separable(&grid, k, |i, x| (kx(i) * x).cos(), |i, y| -ky(i) * (ky(i) * y).sin());
        let scale: Vec<f64> = discrete_norms(&grid, &values).iter().map(|n| 1.0 / n).collect();
        scale_columns(&mut values, &scale);
        scale_columns(&mut grad_x, &scale);
        scale_columns(&mut grad_y, &scale);
        Ok(ScalarBasis { grid, modes, eigenvalues, values, grad_x, grad_y })
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    /// Coefficients `(f, eta_j)` of grid samples `f`.
    pub fn project(&self, samples: &DVector<f64>) -> Result<DVector<f64>> {
        check_len(samples, self.grid.len())?;
        Ok(self.values.tr_mul(&samples.component_mul(&self.grid.weights)))
    }

    pub fn reconstruct(&self, coeffs: &DVector<f64>) -> Result<DVector<f64>> {
        check_len(coeffs, self.len())?;
        Ok(&self.values * coeffs)
    }

    /// Discrete Gram matrix `(eta_i, eta_j)`.
    pub fn gram(&self) -> DMatrix<f64> {
        weighted_gram(&self.values, &self.grid.weights, &self.values)
    }

    /// Discrete stiffness `(grad eta_i, grad eta_j)`.
    pub fn stiffness(&self) -> DMatrix<f64> {
        let w = &self.grid.weights;
        let mut s = weighted_gram(&self.grad_x, w, &self.grad_x);
        s += weighted_gram(&self.grad_y, w, &self.grad_y);
        symmetrize(&mut s);
        s
    }
}

/// Sine eigenfunctions of the Dirichlet Laplacian times a unit vector.
#[derive(Clone, Debug)]
pub struct VectorBasis {
    pub grid: Arc<QuadratureGrid>,
    /// `[mx, my, component]`, component 0 is x.
    pub modes: Vec<[usize; 3]>,
    pub eigenvalues: Vec<f64>,
    /// Scalar factor of each mode and its partial derivatives.
    pub scalar: DMatrix<f64>,
    pub scalar_dx: DMatrix<f64>,
    pub scalar_dy: DMatrix<f64>,
    pub ux: DMatrix<f64>,
    pub uy: DMatrix<f64>,
    pub exx: DMatrix<f64>,
    pub eyy: DMatrix<f64>,
    pub exy: DMatrix<f64>,
    pub div: DMatrix<f64>,
}

impl VectorBasis {
    pub fn new(domain: &RectDomain, k: usize) -> Result<Self> {
        VectorBasis::on_grid(Arc::new(domain.grid()), k)
    }

    pub fn on_grid(grid: Arc<QuadratureGrid>, k: usize) -> Result<Self> {
        check_k(k)?;
        let sel = vector_modes(grid.lx, grid.ly, k);
        let mxm = sel.iter().map(|s| s.0[0]).max().unwrap_or(0);
        let mym = sel.iter().map(|s| s.0[1]).max().unwrap_or(0);
        check_floor(&grid, mxm, mym)?;
        let modes: Vec<[usize; 3]> = sel.iter().map(|s| s.0).collect();
        let eigenvalues: Vec<f64> = sel.iter().map(|s| s.1).collect();
        let kx = |i: usize| modes[i][0] as f64 * PI / grid.lx;
        let ky = |i: usize| modes[i][1] as f64 * PI / grid.ly;

        let mut scalar = separable(&grid, k, |i, x| (kx(i) * x).sin(), |i, y| (ky(i) * y).sin());
        let mut scalar_dx =
            separable(&grid, k, |i, x| kx(i) * (kx(i) * x).cos(), |i, y| (ky(i) * y).sin());
        let mut scalar_dy =
            separable(&grid, k, |i, x| (kx(i) * x).sin(), |i, y| ky(i) * (ky(i) * y).cos());
        let scale: Vec<f64> = discrete_norms(&grid, &scalar).iter().map(|n| 1.0 / n).collect();
        scale_columns(&mut scalar, &scale);
        scale_columns(&mut scalar_dx, &scale);
        scale_columns(&mut scalar_dy, &scale);

        let n = grid.len();
        let mut ux = DMatrix::zeros(n, k);
        let mut uy = DMatrix::zeros(n, k);
        let mut exx = DMatrix::zeros(n, k);
        let mut eyy = DMatrix::zeros(n, k);
        let mut exy = DMatrix::zeros(n, k);
        let mut div = DMatrix::zeros(n, k);
        for (i, m) in modes.iter().enumerate() {
            if m[2] == 0 {
                ux.set_column(i, &scalar.column(i));
                exx.set_column(i, &scalar_dx.column(i));
                exy.set_column(i, &(scalar_dy.column(i) * 0.5));
                div.set_column(i, &scalar_dx.column(i));
            } else {
                uy.set_column(i, &scalar.column(i));
                eyy.set_column(i, &scalar_dy.column(i));
                exy.set_column(i, &(scalar_dx.column(i) * 0.5));
                div.set_column(i, &scalar_dy.column(i));
            }
        }
        Ok(VectorBasis {
            grid,
            modes,
            eigenvalues,
            scalar,
            scalar_dx,
            scalar_dy,
            ux,
            uy,
            exx,
            eyy,
            exy,
            div,
        })
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    /// Coefficients `(f, eta_j)` of a sampled vector field.
    pub fn project(&self, fx: &DVector<f64>, fy: &DVector<f64>) -> Result<DVector<f64>> {
        check_len(fx, self.grid.len())?;
        check_len(fy, self.grid.len())?;
        let w = &self.grid.weights;
        Ok(self.ux.tr_mul(&fx.component_mul(w)) + self.uy.tr_mul(&fy.component_mul(w)))
    }

    pub fn reconstruct(&self, coeffs: &DVector<f64>) -> Result<(DVector<f64>, DVector<f64>)> {
        check_len(coeffs, self.len())?;
        Ok((&self.ux * coeffs, &self.uy * coeffs))
    }

    pub fn gram(&self) -> DMatrix<f64> {
        let w = &self.grid.weights;
        let mut g = weighted_gram(&self.ux, w, &self.ux);
        g += weighted_gram(&self.uy, w, &self.uy);
        symmetrize(&mut g);
        g
    }

    /// Full gradient stiffness `(grad eta_i, grad eta_j)`.
    pub fn stiffness(&self) -> DMatrix<f64> {
        let w = &self.grid.weights;
        let k = self.len();
        let sx = weighted_gram(&self.scalar_dx, w, &self.scalar_dx);
        let sy = weighted_gram(&self.scalar_dy, w, &self.scalar_dy);
        DMatrix::from_fn(k, k, |i, j| {
            if self.modes[i][2] == self.modes[j][2] {
                0.5 * (sx[(i, j)] + sx[(j, i)] + sy[(i, j)] + sy[(j, i)])
            } else {
                0.0
            }
        })
    }
}

/// Flux modes `q_i = -grad eta_i / lambda_i`, with the constant mode inert.
#[derive(Clone, Debug)]
pub struct FluxBasis {
    pub grid: Arc<QuadratureGrid>,
    pub eigenvalues: Vec<f64>,
    pub qx: DMatrix<f64>,
    pub qy: DMatrix<f64>,
    /// Divergence samples; equals `eta_i` for `i >= 1` and zero for mode 0.
    pub div: DMatrix<f64>,
}

impl FluxBasis {
    pub fn new(scalar: &ScalarBasis) -> Self {
        let k = scalar.len();
        let mut qx = scalar.grad_x.clone();
        let mut qy = scalar.grad_y.clone();
        let mut div = DMatrix::zeros(scalar.grid.len(), k);
        let mut s = vec![0.0; k];
        for i in 0..k {
            let lam = scalar.eigenvalues[i];
            if lam > 0.0 {
                s[i] = -1.0 / lam;
                let m = scalar.modes[i];
                let ax = m[0] as f64 * PI / scalar.grid.lx;
                let ay = m[1] as f64 * PI / scalar.grid.ly;
                // div q_i = -Lap(eta_i) / lambda_i with Lap eta_i = -(ax^2 + ay^2) eta_i.
                div.set_column(i, &(scalar.values.column(i) * ((ax * ax + ay * ay) / lam)));
            }
        }
        scale_columns(&mut qx, &s);
        scale_columns(&mut qy, &s);
        FluxBasis { grid: scalar.grid.clone(), eigenvalues: scalar.eigenvalues.clone(), qx, qy, div }
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn reconstruct(&self, coeffs: &DVector<f64>) -> Result<(DVector<f64>, DVector<f64>)> {
        check_len(coeffs, self.len())?;
        Ok((&self.qx * coeffs, &self.qy * coeffs))
    }

    /// Unweighted flux Gram `(q_i, q_j)`.
    pub fn gram(&self) -> DMatrix<f64> {
        let w = &self.grid.weights;
        let mut g = weighted_gram(&self.qx, w, &self.qx);
        g += weighted_gram(&self.qy, w, &self.qy);
        symmetrize(&mut g);
        g
    }
}

/// Everything the Galerkin system needs, on one grid.
#[derive(Clone, Debug)]
pub struct Discretization {
    pub domain: RectDomain,
    pub grid: Arc<QuadratureGrid>,
    pub scalar: ScalarBasis,
    pub vector: VectorBasis,
    pub flux: FluxBasis,
    /// `(grad eta_i, grad eta_j)` for the scalar basis.
    pub stiffness: DMatrix<f64>,
    /// `(div eta_i, div eta_j)` for the vector basis.
    pub div_gram: DMatrix<f64>,
    /// `(div q_i, eta_j)`, row `j`, column `i`.
    pub flux_div: DMatrix<f64>,
    /// Scalar Gram `(eta_i, eta_j)`.
    pub scalar_gram: DMatrix<f64>,
    /// Vector `H1` Gram `(eta_i, eta_j) + (grad eta_i, grad eta_j)`.
    pub vector_h1: DMatrix<f64>,
    /// Flux Gram `(q_i, q_j)`.
    pub flux_gram: DMatrix<f64>,
    /// `(div q_i, div q_j)`.
    pub flux_div_gram: DMatrix<f64>,
}

impl Discretization {
    pub fn new(domain: RectDomain, k: usize) -> Result<Self> {
        let grid = Arc::new(domain.grid());
        let scalar = ScalarBasis::on_grid(grid.clone(), k)?;
        let vector = VectorBasis::on_grid(grid.clone(), k)?;
        let flux = FluxBasis::new(&scalar);
        let stiffness = scalar.stiffness();
        let mut div_gram = weighted_gram(&vector.div, &grid.weights, &vector.div);
        symmetrize(&mut div_gram);
        let flux_div = weighted_gram(&scalar.values, &grid.weights, &flux.div);
        let scalar_gram = scalar.gram();
        let vector_h1 = vector.gram() + vector.stiffness();
        let flux_gram = flux.gram();
        let mut flux_div_gram = weighted_gram(&flux.div, &grid.weights, &flux.div);
        symmetrize(&mut flux_div_gram);
        Ok(Discretization {
            domain,
            grid,
            scalar,
            vector,
            flux,
            stiffness,
            div_gram,
            flux_div,
            scalar_gram,
            vector_h1,
            flux_gram,
            flux_div_gram,
        })
    }

    pub fn k(&self) -> usize {
        self.scalar.len()
    }

    pub fn area(&self) -> f64 {
        self.domain.area()
    }

    /// Spatial mean of the scalar field with coefficients `a`.
    pub fn mean(&self, a: &DVector<f64>) -> f64 {
        a[0] * self.scalar.values[(0, 0)]
    }

    /// Integral of the scalar field with coefficients `a`.
    pub fn integral(&self, a: &DVector<f64>) -> f64 {
        self.mean(a) * self.area()
    }
}

pub(crate) fn check_len(v: &DVector<f64>, n: usize) -> Result<()> {
    if v.len() != n {
        Err(ChbError::InvalidInput(format!("expected length {n}, got {}", v.len())))
    } else {
        Ok(())
    }
}

/// `A^T diag(w) B` for sample matrices `A`, `B` of shape `N x k`.
pub fn weighted_gram(a: &DMatrix<f64>, w: &DVector<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let mut wb = b.clone();
    for mut col in wb.column_iter_mut() {
        col.component_mul_assign(w);
    }
    a.tr_mul(&wb)
}

pub fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}
