use serde::{Deserialize, Serialize};

/// Symmetric 2x2 tensor stored as `[xx, yy, xy]`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct SymTensor {
    pub xx: f64,
    pub yy: f64,
    pub xy: f64,
}

impl From<[f64; 3]> for SymTensor {
    fn from(v: [f64; 3]) -> Self {
        SymTensor { xx: v[0], yy: v[1], xy: v[2] }
    }
}

impl From<SymTensor> for [f64; 3] {
    fn from(t: SymTensor) -> Self {
        [t.xx, t.yy, t.xy]
    }
}

impl SymTensor {
    pub const ZERO: SymTensor = SymTensor { xx: 0.0, yy: 0.0, xy: 0.0 };

    pub fn new(xx: f64, yy: f64, xy: f64) -> Self {
        SymTensor { xx, yy, xy }
    }

    pub fn iso(s: f64) -> Self {
        SymTensor { xx: s, yy: s, xy: 0.0 }
    }

    pub fn trace(&self) -> f64 {
        self.xx + self.yy
    }

    /// Frobenius product `A : B`.
    pub fn ddot(&self, o: &SymTensor) -> f64 {
        self.xx * o.xx + self.yy * o.yy + 2.0 * self.xy * o.xy
    }

    pub fn norm_sq(&self) -> f64 {
        self.ddot(self)
    }

    pub fn scale(&self, s: f64) -> SymTensor {
        SymTensor { xx: s * self.xx, yy: s * self.yy, xy: s * self.xy }
    }

    pub fn add(&self, o: &SymTensor) -> SymTensor {
        SymTensor { xx: self.xx + o.xx, yy: self.yy + o.yy, xy: self.xy + o.xy }
    }

    pub fn sub(&self, o: &SymTensor) -> SymTensor {
        SymTensor { xx: self.xx - o.xx, yy: self.yy - o.yy, xy: self.xy - o.xy }
    }
}

/// Isotropic stiffness `C e = 2 mu e + lambda tr(e) I`.
pub fn iso_apply(lambda: f64, mu: f64, e: &SymTensor) -> SymTensor {
    let tr = lambda * e.trace();
    SymTensor { xx: 2.0 * mu * e.xx + tr, yy: 2.0 * mu * e.yy + tr, xy: 2.0 * mu * e.xy }
}

/// Scalar coefficient as a function of the phase field.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ScalarLaw {
    Constant(f64),
    /// `clamp(at_zero + slope * phi, min, max)`.
    Affine { at_zero: f64, slope: f64, min: f64, max: f64 },
    /// `minus + (plus - minus) * (1 + tanh(phi / width)) / 2`.
    Sigmoid { minus: f64, plus: f64, width: f64 },
}

impl ScalarLaw {
    /// Value, first and second derivative.
    pub fn eval(&self, phi: f64) -> (f64, f64, f64) {
        match *self {
            ScalarLaw::Constant(v) => (v, 0.0, 0.0),
            ScalarLaw::Affine { at_zero, slope, min, max } => {
                let v = at_zero + slope * phi;
                if v < min {
                    (min, 0.0, 0.0)
                } else if v > max {
                    (max, 0.0, 0.0)
                } else {
                    (v, slope, 0.0)
                }
            }
            ScalarLaw::Sigmoid { minus, plus, width } => {
                let t = (phi / width).tanh();
                let s = 1.0 - t * t;
                let h = 0.5 * (plus - minus);
                (minus + h * (1.0 + t), h * s / width, -2.0 * h * t * s / (width * width))
            }
        }
    }

    pub fn value(&self, phi: f64) -> f64 {
        self.eval(phi).0
    }

    pub fn is_constant(&self) -> bool {
        match *self {
            ScalarLaw::Constant(_) => true,
            ScalarLaw::Affine { slope, .. } => slope == 0.0,
            ScalarLaw::Sigmoid { minus, plus, .. } => minus == plus,
        }
    }

    pub fn is_finite(&self) -> bool {
        match *self {
            ScalarLaw::Constant(v) => v.is_finite(),
            ScalarLaw::Affine { at_zero, slope, min, max } => {
                at_zero.is_finite() && slope.is_finite() && min.is_finite() && max.is_finite() && min <= max
            }
            ScalarLaw::Sigmoid { minus, plus, width } => {
                minus.is_finite() && plus.is_finite() && width.is_finite() && width > 0.0
            }
        }
    }
}

/// Stress-free strain as a function of the phase field.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Eigenstrain {
    /// `xi * (phi - phi_bar) * I`.
    Swelling { xi: f64, phi_bar: f64 },
    /// `hat * phi + star`.
    Vegard { hat: SymTensor, star: SymTensor },
}

impl Eigenstrain {
    /// Value and derivative in `phi`; the second derivative vanishes.
    pub fn eval(&self, phi: f64) -> (SymTensor, SymTensor) {
        match *self {
            Eigenstrain::Swelling { xi, phi_bar } => {
                (SymTensor::iso(xi * (phi - phi_bar)), SymTensor::iso(xi))
            }
            Eigenstrain::Vegard { hat, star } => (hat.scale(phi).add(&star), hat),
        }
    }

    /// Slope tensor of the affine law.
    pub fn slope(&self) -> SymTensor {
        self.eval(0.0).1
    }

    pub fn offset(&self) -> SymTensor {
        self.eval(0.0).0
    }
}

/// Quartic double well `(1 - s^2)^2`.
pub fn psi(s: f64) -> f64 {
    let t = 1.0 - s * s;
    t * t
}

pub fn psi_prime(s: f64) -> f64 {
    -4.0 * s * (1.0 - s * s)
}

pub fn psi_second(s: f64) -> f64 {
    12.0 * s * s - 4.0
}
