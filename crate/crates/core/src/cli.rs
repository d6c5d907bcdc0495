//! Command-line front end.
//!
//! Exit codes: 0 success, 1 invalid input or configuration, 2 runtime failure.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};

use crate::config::{emit_config, ModelConfig};
use crate::diagnostics::{continuous_dependence_experiment, ContinuityReport, LHS_TERMS};
use crate::dynamics::{resume, run, Trajectory};
use crate::error::{ChbError, Result};
use crate::output::{load_config, write_snapshot, write_timeseries, RunManifest, Sidecar};
use crate::selftest;

#[derive(Parser, Debug)]
#[command(name = "chb", version, about = "Phase-field poroelasticity solver")]
pub struct Cli {
    /// Worker threads for parallel studies (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Integrate a configuration and write time series, snapshot and manifest.
    Run {
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Continue from a snapshot sidecar (`*.coeffs`).
        #[arg(long)]
        restart: Option<PathBuf>,
    },
    /// Parse and validate a configuration, including the initial state.
    Validate { config: PathBuf },
    /// Repeat a run for each `study.dts` and report the identity residual.
    DissipationStudy {
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Perturbation sweep over `continuity.epsilons`.
    ContinuityStudy {
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run the built-in invariant checks.
    Selftest,
}

/// Runs the command line and returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return 1;
        }
        // Ignored if a pool already exists (repeated calls in one process).
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &ChbError) -> i32 {
    if e.is_validation() {
        1
    } else {
        2
    }
}

fn read_config(path: &Path) -> Result<ModelConfig> {
    let text = fs::read_to_string(path)
        .map_err(|e| ChbError::InvalidInput(format!("cannot read {}: {e}", path.display())))?;
    load_config(&text)
}

fn dispatch(cli: &Cli) -> Result<i32> {
    match &cli.command {
        Command::Run { config, out, restart } => cmd_run(config, out, restart.as_deref()),
        Command::Validate { config } => {
            let cfg = read_config(config)?;
            cfg.setup()?;
            println!("ok: {} ({:?} mode, k = {})", config.display(), cfg.experiment.mode, cfg.discretization.k);
            Ok(0)
        }
        Command::DissipationStudy { config, out } => cmd_dissipation(config, out),
        Command::ContinuityStudy { config, out } => cmd_continuity(config, out),
        Command::Selftest => {
            let checks = selftest::run_all();
            let mut ok = true;
            for c in &checks {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
                ok &= c.passed;
            }
            Ok(if ok { 0 } else { 2 })
        }
    }
}

fn unix_now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

fn rel(out: &Path, name: &str) -> (PathBuf, String) {
    (out.join(name), name.to_string())
}

fn cmd_run(config: &Path, out: &Path, restart: Option<&Path>) -> Result<i32> {
    let started = unix_now();
    let clock = Instant::now();
    let cfg = read_config(config)?;
    let setup = cfg.setup()?;
    let traj = match restart {
        None => run(&setup.model, setup.initial.clone(), &setup.settings)?,
        Some(p) => {
            let side = Sidecar::read(p).map_err(|e| match e {
                ChbError::Io(io) => ChbError::InvalidInput(format!("cannot read {}: {io}", p.display())),
                other => other,
            })?;
            resume(&setup.model, side.state(setup.model.k())?, side.record, side.origin, &setup.settings)?
        }
    };
    let mut files = Vec::new();
    let (ts, name) = rel(out, "timeseries.csv");
    write_timeseries(&traj, &ts)?;
    files.push(name);
    let (last_state, last_rec) = traj.records.last().expect("trajectory is never empty");
    let (snap, name) = rel(out, "snapshot_final.csv");
    write_snapshot(&setup.model, last_state, last_rec, traj.origin, &snap)?;
    files.push(name);
    files.push("snapshot_final.coeffs".into());
    let (cpath, name) = rel(out, "config.toml");
    fs::write(&cpath, emit_config(&cfg)?)?;
    files.push(name);
    files.push("manifest.toml".into());
    let manifest = RunManifest {
        program: "chb".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: "run".into(),
        started_unix: started,
        elapsed_seconds: clock.elapsed().as_secs_f64(),
        threads: rayon::current_num_threads(),
        completed: traj.is_complete(),
        failure: traj.failure.as_ref().map(|f| format!("step {} at t = {}: {}", f.step, f.t, f.message)),
        files,
        config: cfg,
    };
    manifest.write(&out.join("manifest.toml"))?;
    print_run_summary(&traj);
    match &traj.failure {
        None => Ok(0),
        Some(f) => {
            eprintln!("error: run stopped at step {} (t = {}): {}", f.step, f.t, f.message);
            Ok(2)
        }
    }
}

fn print_run_summary(traj: &Trajectory) {
    let first = &traj.records[0].1;
    let last = &traj.records.last().expect("trajectory is never empty").1;
    println!(
        "t = {:.6}  steps = {}  E = {:.10e} (E0 = {:.10e})  identity residual = {:.3e}",
        last.t, last.step, last.e_total, first.e_total, last.identity_residual
    );
}

/// One row of the time-step refinement study.
#[derive(Clone, Debug, PartialEq)]
pub struct DissipationRow {
    pub dt: f64,
    pub steps: u64,
    pub max_abs_residual: f64,
    /// Largest `E(t_{n+1}) - E(t_n)` over all steps.
    pub max_energy_increase: f64,
    pub final_energy: f64,
    /// Order against the previous row; NaN for the first.
    pub order: f64,
}

/// Runs the configuration for every time step, recording every step.
pub fn dissipation_study(cfg: &ModelConfig, dts: &[f64]) -> Result<(Vec<DissipationRow>, Vec<Trajectory>)> {
    let setup = cfg.setup()?;
    let mut rows: Vec<DissipationRow> = Vec::new();
    let mut trajs = Vec::new();
    for &dt in dts {
        let settings = crate::dynamics::StepSettings { dt, output_every: 1, ..setup.settings };
        let traj = run(&setup.model, setup.initial.clone(), &settings)?;
        if let Some(f) = &traj.failure {
            return Err(ChbError::SolveFailed { t: f.t, detail: f.message.clone() });
        }
        let max_abs_residual = traj.records.iter().map(|(_, r)| r.identity_residual.abs()).fold(0.0, f64::max);
        let max_energy_increase =
            traj.records.windows(2).map(|w| w[1].1.e_total - w[0].1.e_total).fold(f64::NEG_INFINITY, f64::max);
        let order = rows
            .last()
            .map(|p| (p.max_abs_residual / max_abs_residual).ln() / (p.dt / dt).ln())
            .unwrap_or(f64::NAN);
        rows.push(DissipationRow {
            dt,
            steps: traj.terminal().step,
            max_abs_residual,
            max_energy_increase,
            final_energy: traj.records.last().map(|(_, r)| r.e_total).unwrap_or(f64::NAN),
            order,
        });
        trajs.push(traj);
    }
    Ok((rows, trajs))
}

fn cmd_dissipation(config: &Path, out: &Path) -> Result<i32> {
    let cfg = read_config(config)?;
    if cfg.study.dts.is_empty() {
        return Err(ChbError::InvalidInput("study.dts is empty".into()));
    }
    let (rows, trajs) = dissipation_study(&cfg, &cfg.study.dts)?;
    fs::create_dir_all(out)?;
    let mut csv = String::from("dt,steps,max_abs_identity_residual,max_energy_increase,final_energy,order\n");
    for (i, (r, t)) in rows.iter().zip(&trajs).enumerate() {
        let _ = writeln!(
            csv,
            "{:.16e},{},{:.16e},{:.16e},{:.16e},{:.16e}",
            r.dt, r.steps, r.max_abs_residual, r.max_energy_increase, r.final_energy, r.order
        );
        write_timeseries(t, &out.join(format!("dissipation_dt{i}.csv")))?;
        println!(
            "dt = {:.3e}  max|r| = {:.3e}  max dE = {:.3e}  order = {:.3}",
            r.dt, r.max_abs_residual, r.max_energy_increase, r.order
        );
    }
    fs::write(out.join("dissipation_study.csv"), csv)?;
    Ok(0)
}

pub fn continuity_csv(rep: &ContinuityReport) -> String {
    let mut csv = String::from("epsilon");
    for n in LHS_TERMS {
        csv.push(',');
        csv.push_str(n);
    }
    csv.push_str(",lhs_total,rhs,ratio,flux_bound_ratio\n");
    for r in &rep.rows {
        let _ = write!(csv, "{:.16e}", r.epsilon);
        for v in r.lhs {
            let _ = write!(csv, ",{v:.16e}");
        }
        let _ = writeln!(csv, ",{:.16e},{:.16e},{:.16e},{:.16e}", r.lhs_total(), r.rhs, r.ratio, r.flux_bound_ratio);
    }
    csv
}

fn cmd_continuity(config: &Path, out: &Path) -> Result<i32> {
    let cfg = read_config(config)?;
    let rep = continuous_dependence_experiment(&cfg.continuity_inputs()?)?;
    fs::create_dir_all(out)?;
    fs::write(out.join("continuity_study.csv"), continuity_csv(&rep))?;
    for (n, s) in LHS_TERMS.iter().zip(rep.slopes) {
        println!("slope {n:<20} {s:.4}");
    }
    println!("ratio spread = {:.4}  flux estimate holds = {}", rep.ratio_spread, rep.flux_bound_holds);
    Ok(0)
}
