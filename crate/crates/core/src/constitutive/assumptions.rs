//! Structural assumptions on the laws, checked by sampling the phase range.

use serde::{Deserialize, Serialize};

use super::laws::{psi, psi_prime, psi_second, ScalarLaw};
use super::MaterialParams;
use crate::error::{ChbError, Result};

const SAMPLES: usize = 4001;
const SLACK: f64 = 1e-12;

/// Bounds and Lipschitz constants of the laws over the sampled phase range.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub mobility: [f64; 2],
    pub permeability: [f64; 2],
    pub biot_modulus: [f64; 2],
    pub biot_willis: [f64; 2],
    /// Smallest and largest eigenvalue of the stiffness on symmetric tensors.
    pub stiffness: [f64; 2],
    /// `|T(s)| <= c_t |s|`.
    pub c_t: f64,
    pub lip_stiffness: f64,
    pub lip_eigenstrain: f64,
    pub lip_biot_modulus: f64,
    pub lip_biot_willis: f64,
    pub lip_psi_prime: f64,
}

/// Optional user-declared constants; missing entries fall back to sampled ones.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeclaredBounds {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mobility: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub permeability: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub biot_modulus: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub biot_willis: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stiffness: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_t: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lip_psi_prime: Option<f64>,
}

fn samples(range: [f64; 2]) -> impl Iterator<Item = f64> {
    let [lo, hi] = range;
    (0..SAMPLES).map(move |i| lo + (hi - lo) * i as f64 / (SAMPLES - 1) as f64)
}

fn law_range(law: &ScalarLaw, range: [f64; 2]) -> ([f64; 2], f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut lip: f64 = 0.0;
    for s in samples(range) {
        let (v, d, _) = law.eval(s);
        lo = lo.min(v);
        hi = hi.max(v);
        lip = lip.max(d.abs());
    }
    ([lo, hi], lip)
}

impl Bounds {
    pub fn sample(params: &MaterialParams) -> Bounds {
        let r = params.phi_range;
        let (mobility, _) = law_range(&params.mobility, r);
        let (permeability, _) = law_range(&params.permeability, r);
        let (biot_modulus, lip_biot_modulus) = law_range(&params.biot_modulus, r);
        let (biot_willis, lip_biot_willis) = law_range(&params.biot_willis, r);
        let mut c_lo = f64::INFINITY;
        let mut c_hi = f64::NEG_INFINITY;
        let mut lip_stiffness: f64 = 0.0;
        let mut c_t: f64 = 0.0;
        let mut lip_psi_prime: f64 = 0.0;
        for s in samples(r) {
            let (lam, dlam, _) = params.lame_lambda.eval(s);
            let (mu, dmu, _) = params.lame_mu.eval(s);
            // Eigenvalues on symmetric 2x2 tensors: 2 mu (deviatoric), 2 mu + 2 lambda (volumetric).
            let (a, b) = (2.0 * mu, 2.0 * mu + 2.0 * lam);
            c_lo = c_lo.min(a.min(b));
            c_hi = c_hi.max(a.max(b));
            lip_stiffness = lip_stiffness.max((2.0 * dmu).abs().max((2.0 * dmu + 2.0 * dlam).abs()));
            if s != 0.0 {
                let t = params.eigenstrain.eval(s).0;
                c_t = c_t.max(t.norm_sq().sqrt() / s.abs());
            }
            lip_psi_prime = lip_psi_prime.max(psi_second(s).abs());
        }
        Bounds {
            mobility,
            permeability,
            biot_modulus,
            biot_willis,
            stiffness: [c_lo, c_hi],
            c_t,
            lip_stiffness,
            lip_eigenstrain: params.eigenstrain.slope().norm_sq().sqrt(),
            lip_biot_modulus,
            lip_biot_willis,
            lip_psi_prime,
        }
    }

    /// Sampled bounds overridden by declared ones, after checking that each
    /// declared constant is consistent with the sampled laws.
    pub fn resolve(params: &MaterialParams, declared: &DeclaredBounds) -> Result<Bounds> {
        let mut b = Bounds::sample(params);
        let pairs: [(&str, &'static str, Option<[f64; 2]>, &mut [f64; 2]); 5] = [
            ("mobility", "A2", declared.mobility, &mut b.mobility),
            ("permeability", "A2", declared.permeability, &mut b.permeability),
            ("biot_modulus", "A2", declared.biot_modulus, &mut b.biot_modulus),
            ("biot_willis", "A2", declared.biot_willis, &mut b.biot_willis),
            ("stiffness", "A3", declared.stiffness, &mut b.stiffness),
        ];
        for (name, code, decl, slot) in pairs {
            if let Some([lo, hi]) = decl {
                if lo > slot[0] * (1.0 + SLACK) + SLACK || hi < slot[1] * (1.0 - SLACK) - SLACK {
                    return Err(ChbError::Assumption {
                        code,
                        detail: format!(
                            "declared {name} bounds [{lo}, {hi}] do not enclose sampled [{}, {}]",
                            slot[0], slot[1]
                        ),
                    });
                }
                *slot = [lo, hi];
            }
        }
        if let Some(ct) = declared.c_t {
            if ct < b.c_t * (1.0 - SLACK) {
                return Err(ChbError::Assumption {
                    code: "A4",
                    detail: format!("declared eigenstrain constant {ct} below sampled {}", b.c_t),
                });
            }
            b.c_t = ct;
        }
        if let Some(l) = declared.lip_psi_prime {
            if l < b.lip_psi_prime * (1.0 - SLACK) {
                return Err(ChbError::Assumption {
                    code: "B1",
                    detail: format!("declared Lipschitz constant {l} of Psi' below sampled {}", b.lip_psi_prime),
                });
            }
            b.lip_psi_prime = l;
        }
        Ok(b)
    }
}

fn fail(code: &'static str, detail: String) -> ChbError {
    ChbError::Assumption { code, detail }
}

fn check_range(params: &MaterialParams) -> Result<()> {
    let [lo, hi] = params.phi_range;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(ChbError::InvalidInput(format!("phase sampling range [{lo}, {hi}] is empty")));
    }
    Ok(())
}

fn check_finite_laws(params: &MaterialParams) -> Result<()> {
    let laws = [
        ("mobility", &params.mobility),
        ("permeability", &params.permeability),
        ("biot_modulus", &params.biot_modulus),
        ("biot_willis", &params.biot_willis),
        ("lame_lambda", &params.lame_lambda),
        ("lame_mu", &params.lame_mu),
    ];
    for (name, law) in laws {
        if !law.is_finite() {
            return Err(ChbError::InvalidInput(format!("law {name} has non-finite or inconsistent parameters")));
        }
    }
    Ok(())
}

fn check_double_well(params: &MaterialParams) -> Result<()> {
    if !(params.gamma > 0.0 && params.ell > 0.0 && params.gamma.is_finite() && params.ell.is_finite()) {
        return Err(fail("A1", format!("gamma = {} and ell = {} must be positive", params.gamma, params.ell)));
    }
    for s in samples(params.phi_range) {
        if psi_second(s) + params.c_psi < -SLACK {
            return Err(fail("A1", format!("Psi'' + c_psi < 0 at phi = {s} with c_psi = {}", params.c_psi)));
        }
        let lhs = psi_prime(s).abs();
        let rhs = params.big_c_psi * (psi(s) + s * s);
        if lhs > rhs * (1.0 + 1e-10) + SLACK {
            return Err(fail("A1", format!("|Psi'| > C_psi (Psi + phi^2) at phi = {s} with C_psi = {}", params.big_c_psi)));
        }
    }
    Ok(())
}

fn check_positive(code: &'static str, name: &str, b: [f64; 2]) -> Result<()> {
    if !(b[0] > 0.0 && b[1].is_finite()) {
        return Err(fail(code, format!("{name} must stay in (0, inf) on the phase range, sampled [{}, {}]", b[0], b[1])));
    }
    Ok(())
}

/// Checks (A1)-(A4) and (A7) on the laws; source autonomy and finite initial
/// energy are checked where those inputs are built.
pub fn validate_existence(params: &MaterialParams, declared: &DeclaredBounds) -> Result<Bounds> {
    check_range(params)?;
    check_finite_laws(params)?;
    check_double_well(params)?;
    let b = Bounds::resolve(params, declared)?;
    check_positive("A2", "mobility", b.mobility)?;
    check_positive("A2", "permeability", b.permeability)?;
    check_positive("A2", "Biot modulus", b.biot_modulus)?;
    check_positive("A2", "Biot-Willis coefficient", b.biot_willis)?;
    if !(b.stiffness[0] > 0.0 && b.stiffness[1].is_finite()) {
        return Err(fail("A3", format!("stiffness is not uniformly positive definite, sampled eigenvalue bounds [{}, {}]", b.stiffness[0], b.stiffness[1])));
    }
    let t0 = params.eigenstrain.offset();
    if t0.norm_sq() > 0.0 {
        return Err(fail("A4", format!("eigenstrain T(0) = {t0:?} is nonzero, so |T(phi)| <= C_T |phi| fails")));
    }
    if !(params.eta >= 0.0 && params.eta.is_finite()) {
        return Err(fail("A7", format!("viscosity eta = {} must be nonnegative", params.eta)));
    }
    Ok(b)
}

/// Checks (B1)-(B3) and the `eta = 0` regime; (B4) holds for both affine
/// eigenstrain variants by construction.
pub fn validate_continuity(params: &MaterialParams, declared: &DeclaredBounds) -> Result<Bounds> {
    check_range(params)?;
    check_finite_laws(params)?;
    check_double_well(params)?;
    let b = Bounds::resolve(params, declared)?;
    for (name, law) in [
        ("mobility", &params.mobility),
        ("permeability", &params.permeability),
        ("biot_modulus", &params.biot_modulus),
        ("biot_willis", &params.biot_willis),
    ] {
        if !law.is_constant() {
            return Err(fail("B2", format!("{name} must be constant")));
        }
    }
    check_positive("B2", "mobility", b.mobility)?;
    check_positive("B2", "permeability", b.permeability)?;
    check_positive("B2", "Biot modulus", b.biot_modulus)?;
    check_positive("B2", "Biot-Willis coefficient", b.biot_willis)?;
    if !(params.lame_lambda.is_constant() && params.lame_mu.is_constant()) {
        return Err(fail("B3", "stiffness must be constant".into()));
    }
    if !(b.stiffness[0] > 0.0) {
        return Err(fail("B3", "stiffness must be positive definite".into()));
    }
    if params.eta != 0.0 {
        return Err(ChbError::InvalidInput(format!(
            "continuous dependence runs require eta = 0, got {}",
            params.eta
        )));
    }
    Ok(b)
}
