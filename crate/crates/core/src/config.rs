//! Run configuration in TOML.
//!
//! Every section and key is optional; unknown keys are errors. Scalar
//! fields are given as tagged tables, for example
//! `phi = { noise = { mean = 0.0, amplitude = 0.1, seed = 1 } }`.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::assembly::ProjectedSources;
use crate::bases::{Discretization, RectDomain};
use crate::constitutive::{validate_continuity, validate_existence, DeclaredBounds, MaterialParams};
use crate::diagnostics::{ContinuityInputs, DataSet};
use crate::dynamics::{CoefficientState, IntegratorKind, Model, StepSettings};
use crate::error::{ChbError, Result};
use crate::rng;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// General laws, viscous regularization allowed.
    #[default]
    Existence,
    /// Constant laws and `eta = 0`, for perturbation studies.
    Continuity,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub mode: Mode,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DomainConfig {
    pub lx: f64,
    pub ly: f64,
}

impl Default for DomainConfig {
    fn default() -> Self {
        DomainConfig { lx: 1.0, ly: 1.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiscretizationConfig {
    /// Modes per family.
    pub k: usize,
    /// Quadrature points per direction; defaults to `4 m + 8` for the
    /// largest mode index `m`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nq_x: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nq_y: Option<usize>,
}

impl Default for DiscretizationConfig {
    fn default() -> Self {
        DiscretizationConfig { k: 16, nq_x: None, nq_y: None }
    }
}

/// A scalar field on the domain.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldSpec {
    Constant(f64),
    /// Mean plus uniform random coefficients on the non-constant modes,
    /// `a_i = amplitude * xi_i * sqrt(|Omega| / (k - 1))` with `xi_i` in `[-1, 1)`.
    Noise { mean: f64, amplitude: f64, seed: u64 },
    /// `mean + amplitude * cos(mx pi x / lx) cos(my pi y / ly)`.
    Cosine { mean: f64, amplitude: f64, mx: u32, my: u32 },
    /// Smoothed disk: `outside + (inside - outside) (1 - tanh((r - radius) / width)) / 2`.
    Disk { center: [f64; 2], radius: f64, width: f64, inside: f64, outside: f64 },
}

impl Default for FieldSpec {
    fn default() -> Self {
        FieldSpec::Constant(0.0)
    }
}

impl FieldSpec {
    fn check(&self, what: &str) -> Result<()> {
        let ok = match *self {
            FieldSpec::Constant(v) => v.is_finite(),
            FieldSpec::Noise { mean, amplitude, .. } => mean.is_finite() && amplitude.is_finite() && amplitude >= 0.0,
            FieldSpec::Cosine { mean, amplitude, .. } => mean.is_finite() && amplitude.is_finite(),
            FieldSpec::Disk { center, radius, width, inside, outside } => {
                center.iter().all(|c| c.is_finite())
                    && radius > 0.0
                    && width > 0.0
                    && inside.is_finite()
                    && outside.is_finite()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(ChbError::Assumption { code: "A6", detail: format!("{what}: field parameters must be finite with positive sizes") })
        }
    }

    /// Value at a point, for the deterministic shapes.
    fn at(&self, x: f64, y: f64, lx: f64, ly: f64) -> f64 {
        use std::f64::consts::PI;
        match *self {
            FieldSpec::Constant(v) => v,
            FieldSpec::Noise { mean, .. } => mean,
            FieldSpec::Cosine { mean, amplitude, mx, my } => {
                mean + amplitude * (mx as f64 * PI * x / lx).cos() * (my as f64 * PI * y / ly).cos()
            }
            FieldSpec::Disk { center, radius, width, inside, outside } => {
                let r = ((x - center[0]).powi(2) + (y - center[1]).powi(2)).sqrt();
                outside + (inside - outside) * 0.5 * (1.0 - ((r - radius) / width).tanh())
            }
        }
    }

    /// Galerkin coefficients of the field.
    pub fn coefficients(&self, disc: &Discretization) -> Result<DVector<f64>> {
        let k = disc.k();
        if let FieldSpec::Noise { mean, amplitude, seed } = *self {
            let mut a = DVector::zeros(k);
            a[0] = mean / disc.scalar.values[(0, 0)];
            if k > 1 {
                let scale = amplitude * (disc.area() / (k - 1) as f64).sqrt();
                for i in 1..k {
                    a[i] = scale * rng::symmetric(seed, i as u64);
                }
            }
            return Ok(a);
        }
        let (lx, ly) = (disc.domain.lx, disc.domain.ly);
        let samples = DVector::from_fn(disc.grid.len(), |p, _| {
            let (x, y) = disc.grid.point(p);
            self.at(x, y, lx, ly)
        });
        disc.scalar.project(&samples)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialConfig {
    pub phi: FieldSpec,
    pub theta: FieldSpec,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SourcesConfig {
    /// Sources are constant in time; `false` is rejected.
    pub autonomous: bool,
    pub r: FieldSpec,
    pub s_f: FieldSpec,
    /// Constant body force.
    pub force: [f64; 2],
}

impl Default for SourcesConfig {
    fn default() -> Self {
        SourcesConfig { autonomous: true, r: FieldSpec::default(), s_f: FieldSpec::default(), force: [0.0, 0.0] }
    }
}

impl SourcesConfig {
    fn check(&self) -> Result<()> {
        if !self.autonomous {
            return Err(ChbError::Assumption { code: "A5", detail: "time-dependent sources are not supported".into() });
        }
        self.r.check("sources.r")?;
        self.s_f.check("sources.s_f")?;
        if !self.force.iter().all(|f| f.is_finite()) {
            return Err(ChbError::Assumption { code: "A5", detail: "body force must be finite".into() });
        }
        Ok(())
    }

    pub fn project(&self, disc: &Discretization) -> Result<ProjectedSources> {
        let n = disc.grid.len();
        let fx = DVector::from_element(n, self.force[0]);
        let fy = DVector::from_element(n, self.force[1]);
        Ok(ProjectedSources {
            r_hat: self.r.coefficients(disc)?,
            s_hat: self.s_f.coefficients(disc)?,
            f_hat: disc.vector.project(&fx, &fy)?,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimeConfig {
    pub integrator: IntegratorKind,
    pub dt: f64,
    pub t_final: f64,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub convex_shift: f64,
    pub output_every: usize,
    pub max_halvings: u32,
}

impl Default for TimeConfig {
    fn default() -> Self {
        let s = StepSettings::default();
        TimeConfig {
            integrator: s.integrator,
            dt: s.dt,
            t_final: s.t_final,
            newton_tol: s.newton_tol,
            newton_max_iter: s.newton_max_iter,
            convex_shift: s.convex_shift,
            output_every: s.output_every,
            max_halvings: s.max_halvings,
        }
    }
}

impl TimeConfig {
    pub fn settings(&self) -> StepSettings {
        StepSettings {
            integrator: self.integrator,
            dt: self.dt,
            t_final: self.t_final,
            newton_tol: self.newton_tol,
            newton_max_iter: self.newton_max_iter,
            convex_shift: self.convex_shift,
            output_every: self.output_every,
            max_halvings: self.max_halvings,
        }
    }

    fn check(&self) -> Result<()> {
        let bad = |m: String| Err(ChbError::InvalidInput(m));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("time.dt must be positive, got {}", self.dt));
        }
        if !(self.t_final >= 0.0 && self.t_final.is_finite()) {
            return bad(format!("time.t_final must be non-negative, got {}", self.t_final));
        }
        if !(self.newton_tol > 0.0) || self.newton_max_iter == 0 {
            return bad("time.newton_tol and time.newton_max_iter must be positive".into());
        }
        if self.output_every == 0 {
            return bad("time.output_every must be at least 1".into());
        }
        if !(self.convex_shift >= 0.0 && self.convex_shift.is_finite()) {
            return bad(format!("time.convex_shift must be non-negative, got {}", self.convex_shift));
        }
        Ok(())
    }
}

/// Time steps of the dissipation study, largest first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudyConfig {
    pub dts: Vec<f64>,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig { dts: vec![4e-3, 2e-3, 1e-3] }
    }
}

/// Perturbation of the data for the continuity study.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContinuityConfig {
    pub epsilons: Vec<f64>,
    pub phi: FieldSpec,
    pub theta: FieldSpec,
    pub r: FieldSpec,
    pub s_f: FieldSpec,
    pub force: [f64; 2],
}

impl Default for ContinuityConfig {
    fn default() -> Self {
        ContinuityConfig {
            epsilons: vec![1e-1, 1e-2, 1e-3],
            phi: FieldSpec::default(),
            theta: FieldSpec::default(),
            r: FieldSpec::default(),
            s_f: FieldSpec::default(),
            force: [0.0, 0.0],
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub experiment: ExperimentConfig,
    pub domain: DomainConfig,
    pub discretization: DiscretizationConfig,
    pub material: MaterialParams,
    pub bounds: DeclaredBounds,
    pub initial: InitialConfig,
    pub sources: SourcesConfig,
    pub time: TimeConfig,
    pub study: StudyConfig,
    pub continuity: ContinuityConfig,
}

/// Model, initial state and step settings built from a configuration.
#[derive(Clone, Debug)]
pub struct Setup {
    pub model: Model,
    pub initial: CoefficientState,
    pub settings: StepSettings,
}

fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.chars().rev().take_while(|&c| c != '\n').count() + 1;
    (line, column)
}

/// Parses and validates a configuration.
pub fn parse_config(text: &str) -> Result<ModelConfig> {
    let cfg: ModelConfig = toml::from_str(text).map_err(|e| {
        let (line, column) = e.span().map(|s| line_column(text, s.start)).unwrap_or((0, 0));
        ChbError::Config { line, column, message: e.message().trim().to_string() }
    })?;
    cfg.validate()?;
    Ok(cfg)
}

/// Canonical TOML text; `parse_config(&emit_config(c)) == c`.
pub fn emit_config(cfg: &ModelConfig) -> Result<String> {
    toml::to_string(cfg).map_err(|e| ChbError::InvalidInput(format!("cannot serialize configuration: {e}")))
}

impl ModelConfig {
    /// Runs the assumption validators of the selected mode and the
    /// structural checks on every section.
    pub fn validate(&self) -> Result<()> {
        self.domain()?;
        if self.discretization.k == 0 {
            return Err(ChbError::InvalidInput("discretization.k must be at least 1".into()));
        }
        match self.experiment.mode {
            Mode::Existence => validate_existence(&self.material, &self.bounds).map(|_| ())?,
            Mode::Continuity => validate_continuity(&self.material, &self.bounds).map(|_| ())?,
        }
        self.initial.phi.check("initial.phi")?;
        self.initial.theta.check("initial.theta")?;
        self.sources.check()?;
        self.time.check()?;
        if self.study.dts.iter().any(|d| !(*d > 0.0 && d.is_finite())) {
            return Err(ChbError::InvalidInput("study.dts must be positive".into()));
        }
        let c = &self.continuity;
        if c.epsilons.iter().any(|e| !(*e >= 0.0 && e.is_finite())) {
            return Err(ChbError::InvalidInput("continuity.epsilons must be non-negative".into()));
        }
        for (f, name) in [(&c.phi, "continuity.phi"), (&c.theta, "continuity.theta"), (&c.r, "continuity.r"), (&c.s_f, "continuity.s_f")] {
            f.check(name)?;
        }
        Ok(())
    }

    pub fn domain(&self) -> Result<RectDomain> {
        let d = &self.discretization;
        match (d.nq_x, d.nq_y) {
            (None, None) => RectDomain::with_default_resolution(self.domain.lx, self.domain.ly, d.k),
            (x, y) => {
                let def = RectDomain::with_default_resolution(self.domain.lx, self.domain.ly, d.k)?;
                RectDomain::new(self.domain.lx, self.domain.ly, x.unwrap_or(def.nq_x), y.unwrap_or(def.nq_y))
            }
        }
    }

    pub fn discretization(&self) -> Result<Discretization> {
        Discretization::new(self.domain()?, self.discretization.k)
    }

    /// Builds the model, the initial state and the step settings.
    pub fn setup(&self) -> Result<Setup> {
        self.validate()?;
        let disc = self.discretization()?;
        let sources = self.sources.project(&disc)?;
        let a0 = self.initial.phi.coefficients(&disc)?;
        let d0 = self.initial.theta.coefficients(&disc)?;
        let model = Model::new(disc, self.material.clone(), sources)?;
        let initial = model.initial_state(a0, d0)?;
        Ok(Setup { model, initial, settings: self.time.settings() })
    }

    /// Base data, perturbation and sweep for the continuity study.
    pub fn continuity_inputs(&self) -> Result<ContinuityInputs> {
        if self.experiment.mode != Mode::Continuity {
            return Err(ChbError::InvalidInput("continuity study needs experiment.mode = \"continuity\"".into()));
        }
        self.validate()?;
        let disc = self.discretization()?;
        let sources = self.sources.project(&disc)?;
        let base = DataSet {
            a0: self.initial.phi.coefficients(&disc)?,
            d0: self.initial.theta.coefficients(&disc)?,
            sources: sources.clone(),
        };
        let c = &self.continuity;
        let pert_sources = SourcesConfig { autonomous: true, r: c.r, s_f: c.s_f, force: c.force };
        if !c.force.iter().all(|f| f.is_finite()) {
            return Err(ChbError::InvalidInput("continuity.force must be finite".into()));
        }
        let perturbation = DataSet {
            a0: c.phi.coefficients(&disc)?,
            d0: c.theta.coefficients(&disc)?,
            sources: pert_sources.project(&disc)?,
        };
        let model = Model::new(disc, self.material.clone(), sources)?;
        Ok(ContinuityInputs {
            model,
            settings: self.time.settings(),
            base,
            perturbation,
            epsilons: c.epsilons.clone(),
        })
    }
}
