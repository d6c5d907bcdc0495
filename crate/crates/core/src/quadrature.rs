//! Gauss-Legendre rules and the tensor-product grid on a rectangle.

use nalgebra::DVector;

/// Nodes (ascending) and weights of the `n`-point rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let half = n.div_ceil(2);
    for i in 0..half {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for j in 2..=n {
        let jf = j as f64;
        let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    let pn = if n == 0 { 1.0 } else { p1 };
    let pnm1 = if n == 0 { 0.0 } else { p0 };
    let nf = n as f64;
    (pn, nf * (x * pn - pnm1) / (x * x - 1.0))
}

/// Tensor-product Gauss-Legendre grid on `[0, lx] x [0, ly]`.
///
/// Point `p = ix * ny + iy` sits at `(x[ix], y[iy])`.
#[derive(Clone, Debug)]
pub struct QuadratureGrid {
    pub lx: f64,
    pub ly: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub wx: Vec<f64>,
    pub wy: Vec<f64>,
    pub weights: DVector<f64>,
}

impl QuadratureGrid {
    pub fn new(lx: f64, ly: f64, nx: usize, ny: usize) -> Self {
        let (gx, gwx) = gauss_legendre(nx);
        let (gy, gwy) = gauss_legendre(ny);
        let x: Vec<f64> = gx.iter().map(|t| 0.5 * lx * (t + 1.0)).collect();
        let y: Vec<f64> = gy.iter().map(|t| 0.5 * ly * (t + 1.0)).collect();
        let wx: Vec<f64> = gwx.iter().map(|w| 0.5 * lx * w).collect();
        let wy: Vec<f64> = gwy.iter().map(|w| 0.5 * ly * w).collect();
        let weights = DVector::from_fn(nx * ny, |p, _| wx[p / ny] * wy[p % ny]);
        QuadratureGrid { lx, ly, x, y, wx, wy, weights }
    }

    pub fn nx(&self) -> usize {
        self.x.len()
    }

    pub fn ny(&self) -> usize {
        self.y.len()
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn point(&self, p: usize) -> (f64, f64) {
        let ny = self.ny();
        (self.x[p / ny], self.y[p % ny])
    }

    pub fn area(&self) -> f64 {
        self.lx * self.ly
    }

    /// Samples `f(x, y)` at every grid point.
    pub fn sample(&self, f: impl Fn(f64, f64) -> f64) -> DVector<f64> {
        DVector::from_fn(self.len(), |p, _| {
            let (x, y) = self.point(p);
            f(x, y)
        })
    }

    /// Quadrature of the sampled field.
    pub fn integrate(&self, samples: &DVector<f64>) -> f64 {
        pairwise_sum_by(samples.len(), |p| self.weights[p] * samples[p])
    }
}

/// Pairwise summation of `term(0) + ... + term(n-1)` with a fixed reduction tree.
pub fn pairwise_sum_by(n: usize, term: impl Fn(usize) -> f64 + Copy) -> f64 {
    fn rec(lo: usize, hi: usize, term: &impl Fn(usize) -> f64) -> f64 {
        if hi - lo <= 16 {
            (lo..hi).map(term).sum()
        } else {
            let mid = lo + (hi - lo) / 2;
            rec(lo, mid, term) + rec(mid, hi, term)
        }
    }
    if n == 0 {
        0.0
    } else {
        rec(0, n, &term)
    }
}
