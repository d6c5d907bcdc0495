use crate::diagnostics::{Accumulator, DiagnosticsRecord, Origin};
use crate::error::{ChbError, Result};

use super::{CoefficientState, Model, StepSettings};

/// Why a run stopped before `t_final`.
#[derive(Clone, Debug, PartialEq)]
pub struct RunFailure {
    pub step: u64,
    pub t: f64,
    pub message: String,
}

/// Output rows in increasing time; the first row is the starting state.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub records: Vec<(CoefficientState, DiagnosticsRecord)>,
    pub origin: Origin,
    pub failure: Option<RunFailure>,
}

impl Trajectory {
    pub fn terminal(&self) -> &CoefficientState {
        &self.records.last().expect("trajectory is never empty").0
    }

    pub fn is_complete(&self) -> bool {
        self.failure.is_none()
    }
}

/// Number of steps to reach `t_final`; the last one may be shorter than `dt`.
pub fn step_count(settings: &StepSettings) -> u64 {
    (settings.t_final / settings.dt - 1e-9).ceil().max(0.0) as u64
}

/// `t_n = min(n dt, t_final)`.
pub fn canonical_time(n: u64, settings: &StepSettings) -> f64 {
    (n as f64 * settings.dt).min(settings.t_final)
}

fn check_settings(set: &StepSettings) -> Result<()> {
    let bad = |m: String| Err(ChbError::InvalidInput(m));
    if !(set.dt > 0.0 && set.dt.is_finite()) {
        return bad(format!("dt must be positive, got {}", set.dt));
    }
    if !(set.t_final >= 0.0 && set.t_final.is_finite()) {
        return bad(format!("t_final must be non-negative, got {}", set.t_final));
    }
    if !(set.newton_tol > 0.0) || set.newton_max_iter == 0 {
        return bad("Newton tolerance and iteration limit must be positive".into());
    }
    if set.output_every == 0 {
        return bad("output_every must be at least 1".into());
    }
    if !(set.convex_shift >= 0.0) {
        return bad(format!("convex_shift must be non-negative, got {}", set.convex_shift));
    }
    Ok(())
}

/// Integrates from `initial` (normally step 0) to `t_final`.
///
/// Step failures end the run early with a partial trajectory; invalid
/// settings are returned as errors.
pub fn run(model: &Model, initial: CoefficientState, settings: &StepSettings) -> Result<Trajectory> {
    check_settings(settings)?;
    let acc = Accumulator::new(model, &initial)?;
    let rec = acc.record(&initial);
    integrate(model, initial, rec, acc, settings)
}

/// Continues a run from a saved state and its diagnostics row.
pub fn resume(
    model: &Model,
    state: CoefficientState,
    record: DiagnosticsRecord,
    origin: Origin,
    settings: &StepSettings,
) -> Result<Trajectory> {
    check_settings(settings)?;
    let acc = Accumulator::resume(model, &state, &record, origin)?;
    integrate(model, state, record, acc, settings)
}

fn integrate(
    model: &Model,
    start: CoefficientState,
    start_rec: DiagnosticsRecord,
    mut acc: Accumulator,
    settings: &StepSettings,
) -> Result<Trajectory> {
    let n_total = step_count(settings);
    let mut traj = Trajectory { records: vec![(start.clone(), start_rec)], origin: acc.origin(), failure: None };
    let mut cur = start;
    let every = settings.output_every as u64;
    while cur.step < n_total {
        let n = cur.step;
        let t_next = canonical_time(n + 1, settings);
        let h = t_next - canonical_time(n, settings);
        let next = model.step(&cur, h, settings).and_then(|mut s| {
            s.step = n + 1;
            s.t = t_next;
            acc.advance(model, &cur, &s)?;
            Ok(s)
        });
        match next {
            Ok(s) => {
                cur = s;
                if cur.step % every == 0 || cur.step == n_total {
                    let rec = acc.record(&cur);
                    if !rec.e_total.is_finite() {
                        traj.failure = Some(RunFailure { step: cur.step, t: cur.t, message: "energy is not finite".into() });
                        traj.records.push((cur, rec));
                        return Ok(traj);
                    }
                    traj.records.push((cur.clone(), rec));
                }
            }
            Err(e) if e.is_validation() => return Err(e),
            Err(e) => {
                traj.failure = Some(RunFailure { step: n, t: cur.t, message: e.to_string() });
                return Ok(traj);
            }
        }
    }
    Ok(traj)
}
