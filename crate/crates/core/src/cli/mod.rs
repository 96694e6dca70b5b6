//! `beamtrack` command-line front end.
//!
//! Each subcommand reads one TOML config, prints a short human-readable
//! report to stdout, optionally writes machine-readable CSV or JSON to
//! `--out`, and always leaves a [`RunManifest`] behind so the run can be
//! replayed with `beamtrack rerun`.

pub mod config;
pub mod output;

use std::ffi::OsString;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::beam_model::Vec2;
use crate::link_design::{design_rule, DesignRule, Interval};
use crate::sim_harness::{
    run_tracking_experiment, simulate_trajectory, sweep_link_curves, Curve, DEFAULT_TRIALS,
};
use crate::stochastic::NoiseSpec;
use crate::tracking::{theoretical_error, TrackingMethod};

pub use config::{ConfigError, LoadedConfig, CONFIG_DIR_ENV};
pub use output::{num, RunManifest};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;

pub const DEFAULT_STEPS: usize = 100_000;

#[derive(Debug, Parser)]
#[command(
    name = "beamtrack",
    version,
    about = "Spot-size design and beacon tracking for free-space optical mobile links"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum Command {
    /// Spot-size constraints and the matching divergence-angle range.
    Design(DesignArgs),
    /// Average-power or expected-outage curves over a width grid.
    Sweep(SweepArgs),
    /// Repeated tracking of a fixed target under measurement noise.
    Track(TrackArgs),
    /// Linearised tracking-error bound at a list of points.
    ErrorBound(ErrorBoundArgs),
    /// Main-beam link along a random target trajectory.
    Simulate(SimulateArgs),
    /// Replay a run from its manifest.
    Rerun(RerunArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Design(_) => "design",
            Command::Sweep(_) => "sweep",
            Command::Track(_) => "track",
            Command::ErrorBound(_) => "error-bound",
            Command::Simulate(_) => "simulate",
            Command::Rerun(_) => "rerun",
        }
    }

    fn common(&self) -> Option<&Common> {
        match self {
            Command::Design(a) => Some(&a.common),
            Command::Sweep(a) => Some(&a.common),
            Command::Track(a) => Some(&a.common),
            Command::ErrorBound(a) => Some(&a.common),
            Command::Simulate(a) => Some(&a.common),
            Command::Rerun(_) => None,
        }
    }

    fn common_mut(&mut self) -> Option<&mut Common> {
        match self {
            Command::Design(a) => Some(&mut a.common),
            Command::Sweep(a) => Some(&mut a.common),
            Command::Track(a) => Some(&mut a.common),
            Command::ErrorBound(a) => Some(&mut a.common),
            Command::Simulate(a) => Some(&mut a.common),
            Command::Rerun(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Default, Args, Serialize, Deserialize)]
pub struct Common {
    /// Config file; relative paths are also looked up under $BEAMTRACK_CONFIG_DIR.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Master seed (overrides `run.seed`).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Monte-Carlo trial count (overrides `run.trials`).
    #[arg(long)]
    pub trials: Option<usize>,
    /// Data output file.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Manifest path; defaults to `<out>.manifest.json`.
    #[arg(long, value_name = "PATH")]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct DesignArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CurveArg {
    AvgPower,
    ExpectedOutage,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SweepArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    #[arg(long, value_enum)]
    pub curve: CurveArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    MleGrid,
    Multilateration,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct TrackArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    #[arg(long, value_enum, default_value_t = Algorithm::Multilateration)]
    pub algorithm: Algorithm,
    /// Target as `x,y` (overrides `target` in the config).
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    pub target: Option<[f64; 2]>,
    /// Measure without noise; implies one trial unless --trials is given.
    #[arg(long)]
    pub noiseless: bool,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ErrorBoundArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    /// Evaluation point `x,y`; repeatable. Defaults to `points` in the config.
    #[arg(long = "point", value_parser = parse_point, allow_hyphen_values = true)]
    pub points: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SimulateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    /// Feedback intervals to simulate (overrides `run.steps`).
    #[arg(long)]
    pub steps: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct RerunArgs {
    #[arg(value_name = "MANIFEST")]
    pub manifest: PathBuf,
    /// Write the replayed output here instead of the original path.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

fn parse_point(s: &str) -> std::result::Result<[f64; 2], String> {
    let (x, y) = s
        .split_once(',')
        .ok_or_else(|| format!("expected `x,y`, got `{s}`"))?;
    let parse = |t: &str| {
        t.trim()
            .parse::<f64>()
            .map_err(|e| format!("bad coordinate `{t}`: {e}"))
    };
    let p = [parse(x)?, parse(y)?];
    if p.iter().all(|v| v.is_finite()) {
        Ok(p)
    } else {
        Err(format!("point `{s}` is not finite"))
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Usage(String),
    #[error("{context}: {source}")]
    Model {
        context: String,
        #[source]
        source: crate::Error,
    },
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(ConfigError::Read { .. }) | CliError::Io { .. } => EXIT_IO,
            CliError::Config(_) | CliError::Usage(_) => EXIT_USAGE,
            CliError::Model { source, .. } if source.is_numeric() => EXIT_NUMERIC,
            CliError::Model { .. } => EXIT_USAGE,
        }
    }
}

fn model(context: impl Into<String>) -> impl FnOnce(crate::Error) -> CliError {
    let context = context.into();
    move |source| CliError::Model { context, source }
}

fn io_err(context: impl Into<String>) -> impl FnOnce(io::Error) -> CliError {
    let context = context.into();
    move |source| CliError::Io { context, source }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> CliError + '_ {
    move |e| CliError::Io {
        context: format!("writing {}", path.display()),
        source: io::Error::other(e),
    }
}

/// How a command that ran to completion ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Ok,
    Infeasible,
    /// Some items failed numerically; the rest were reported.
    PartialFailure,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Ok => EXIT_OK,
            Outcome::Infeasible => EXIT_INFEASIBLE,
            Outcome::PartialFailure => EXIT_NUMERIC,
        }
    }
}

struct Ran {
    outcome: Outcome,
    seed: u64,
    resolved: serde_json::Value,
    outputs: Vec<PathBuf>,
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(stderr, "{text}");
                EXIT_USAGE
            } else {
                let _ = write!(stdout, "{text}");
                EXIT_OK
            };
        }
    };
    match dispatch(cli.command, stdout) {
        Ok(outcome) => outcome.exit_code(),
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

pub fn dispatch(command: Command, stdout: &mut dyn Write) -> Result<Outcome, CliError> {
    match command {
        Command::Rerun(r) => rerun(&r, stdout),
        cmd => {
            let common = cmd.common().expect("non-rerun commands carry common flags");
            let path = config::resolve_path(common.config.as_deref())?;
            let cfg = config::load(&path)?;
            execute(&cmd, &cfg, stdout)
        }
    }
}

fn rerun(args: &RerunArgs, stdout: &mut dyn Write) -> Result<Outcome, CliError> {
    let manifest = RunManifest::load(&args.manifest)
        .map_err(io_err(format!("reading manifest {}", args.manifest.display())))?;
    let mut cmd = manifest.invocation.clone();
    let common = cmd
        .common_mut()
        .ok_or_else(|| CliError::Usage("manifest records a rerun, not a command".into()))?;
    if let Some(out) = &args.out {
        common.out = Some(out.clone());
        common.manifest = None;
    }
    let cfg = config::parse(&manifest.config_path, &manifest.config_text)?;
    log::info!("replaying {} from {}", manifest.command, args.manifest.display());
    execute(&cmd, &cfg, stdout)
}

fn execute(cmd: &Command, cfg: &LoadedConfig, stdout: &mut dyn Write) -> Result<Outcome, CliError> {
    let ran = match cmd {
        Command::Design(a) => design(a, cfg, stdout)?,
        Command::Sweep(a) => sweep(a, cfg, stdout)?,
        Command::Track(a) => track(a, cfg, stdout)?,
        Command::ErrorBound(a) => error_bound(a, cfg, stdout)?,
        Command::Simulate(a) => simulate(a, cfg, stdout)?,
        Command::Rerun(_) => return Err(CliError::Usage("nested rerun".into())),
    };
    let common = cmd.common().expect("checked above");
    let manifest = RunManifest {
        command: cmd.name().to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        master_seed: ran.seed,
        config_path: cfg.path.clone(),
        config_text: cfg.text.clone(),
        resolved: ran.resolved,
        invocation: cmd.clone(),
        outputs: ran.outputs,
    };
    let path = output::manifest_path(common.manifest.as_deref(), common.out.as_deref(), cmd.name());
    output::write_json(&path, &manifest).map_err(io_err(format!("writing manifest {}", path.display())))?;
    log::info!("manifest written to {}", path.display());
    Ok(ran.outcome)
}

fn warn_unused(common: &Common, command: &str) {
    if common.trials.is_some() {
        log::warn!("--trials has no effect on `{command}`");
    }
}

fn short(x: f64) -> String {
    format!("{x:.4e}")
}

/// Interval in report form, e.g. `3.93 < w_z < 4.72` or `3.93e-2 < phi < 4.72e-2`.
fn interval_text(iv: &Interval, var: &str, sci: bool) -> String {
    let f = |x: f64| {
        if x == 0.0 {
            "0".to_string()
        } else if sci {
            format!("{x:.2e}")
        } else {
            format!("{x:.2}")
        }
    };
    match iv.bounds() {
        Some((lo, hi)) => format!("{} < {var} < {}", f(lo), f(hi)),
        None => "empty".to_string(),
    }
}

fn design(a: &DesignArgs, cfg: &LoadedConfig, out: &mut dyn Write) -> Result<Ran, CliError> {
    const BY: &str = "design";
    warn_unused(&a.common, BY);
    let a_a = cfg.a_a(BY)?;
    let z = cfg.z(BY)?;
    let (sigma_t, sigma_p) = cfg.spreads(BY)?;
    let thr = cfg.thresholds(BY)?;
    let rule = design_rule(a_a, sigma_t, sigma_p, &thr, z).map_err(model("design rule"))?;
    let feasible = rule.is_feasible();

    let w = io_err("writing report");
    let mut report = String::new();
    report.push_str(&format!(
        "design at z = {z} m, aA = {a_a}, sigma_t = {sigma_t}, sigma_p = {sigma_p}\n"
    ));
    report.push_str(&format!(
        "  average power >= {}:   {}\n",
        thr.eta(),
        interval_text(&rule.average_power, "w_z", false)
    ));
    report.push_str(&format!(
        "  expected outage <= {}: {}\n",
        thr.xi(),
        interval_text(&rule.outage, "w_z", false)
    ));
    if feasible {
        report.push_str(&format!("  spot size:        {}\n", interval_text(&rule.width, "w_z", false)));
        report.push_str(&format!("  divergence angle: {}\n", interval_text(&rule.divergence, "phi", true)));
    } else {
        report.push_str("  spot size:        infeasible\n");
    }
    report.push_str(&format!(
        "  optimal width {:.2} m gives the minimum attainable expected outage {}\n",
        rule.optimal_width,
        short(rule.min_expected_outage)
    ));
    out.write_all(report.as_bytes()).map_err(w)?;

    let resolved = json!({
        "z": z, "aA": a_a, "sigma_t": sigma_t, "sigma_p": sigma_p,
        "eta": thr.eta(), "gamma_th": thr.gamma_th(), "xi": thr.xi(),
    });
    let mut outputs = Vec::new();
    if let Some(path) = &a.common.out {
        match a.common.format {
            Format::Json => {
                let body = json!({ "inputs": resolved, "feasible": feasible, "rule": rule });
                output::write_json(path, &body).map_err(io_err(format!("writing {}", path.display())))?;
            }
            Format::Csv => write_design_csv(path, &rule, feasible)?,
        }
        outputs.push(path.clone());
    }
    Ok(Ran {
        outcome: if feasible { Outcome::Ok } else { Outcome::Infeasible },
        seed: cfg.seed(a.common.seed),
        resolved,
        outputs,
    })
}

fn write_design_csv(path: &Path, rule: &DesignRule, feasible: bool) -> Result<(), CliError> {
    let file = std::fs::File::create(path).map_err(io_err(format!("creating {}", path.display())))?;
    let mut w = output::csv_writer(file);
    let e = csv_err(path);
    let mut rows: Vec<(String, String)> = Vec::new();
    for (name, iv) in [
        ("average_power", &rule.average_power),
        ("outage", &rule.outage),
        ("width", &rule.width),
        ("divergence", &rule.divergence),
    ] {
        let (lo, hi) = iv
            .bounds()
            .map(|(l, h)| (num(l), num(h)))
            .unwrap_or_default();
        rows.push((format!("{name}_lower"), lo));
        rows.push((format!("{name}_upper"), hi));
    }
    rows.push(("optimal_width".into(), num(rule.optimal_width)));
    rows.push(("min_expected_outage".into(), num(rule.min_expected_outage)));
    rows.push(("feasible".into(), u8::from(feasible).to_string()));
    let res = (|| {
        w.write_record(["quantity", "value"])?;
        for (k, v) in &rows {
            w.write_record([k, v])?;
        }
        w.flush()?;
        Ok::<(), csv::Error>(())
    })();
    res.map_err(e)
}

fn sweep(a: &SweepArgs, cfg: &LoadedConfig, out: &mut dyn Write) -> Result<Ran, CliError> {
    warn_unused(&a.common, "sweep");
    let (exp, grid) = cfg.sweep_experiment()?;
    let curve = match a.curve {
        CurveArg::AvgPower => Curve::AvgPower,
        CurveArg::ExpectedOutage => Curve::ExpectedOutage,
    };
    let result = sweep_link_curves(&exp, curve, &grid).map_err(model("sweep"))?;
    if let Some(first) = result.skipped.first() {
        log::warn!(
            "{} grid points skipped, first at w_z = {} ({}): {}",
            result.skipped.len(),
            first.w_z,
            first.series,
            first.reason
        );
    }

    let write_csv = |sink: &mut dyn Write| -> Result<(), csv::Error> {
        let mut w = output::csv_writer(sink);
        w.write_record(["w_z", "value", "series", "method"])?;
        for p in &result.points {
            w.write_record([num(p.abscissa), num(p.ordinate), p.series.clone(), p.method.as_str().to_string()])?;
        }
        w.flush()?;
        Ok(())
    };
    let mut outputs = Vec::new();
    match (&a.common.out, a.common.format) {
        (Some(path), Format::Csv) => {
            let mut file = std::fs::File::create(path).map_err(io_err(format!("creating {}", path.display())))?;
            write_csv(&mut file).map_err(csv_err(path))?;
            outputs.push(path.clone());
        }
        (Some(path), Format::Json) => {
            output::write_json(path, &result).map_err(io_err(format!("writing {}", path.display())))?;
            outputs.push(path.clone());
        }
        (None, Format::Csv) => write_csv(out).map_err(csv_err(Path::new("<stdout>")))?,
        (None, Format::Json) => {
            let text = serde_json::to_string_pretty(&result).expect("sweep output serializes");
            writeln!(out, "{text}").map_err(io_err("writing stdout"))?;
        }
    }
    if a.common.out.is_some() {
        writeln!(
            out,
            "sweep {}: {} points over {} widths, {} skipped",
            a.curve.to_possible_value().expect("no skipped variants").get_name(),
            result.points.len(),
            grid.len(),
            result.skipped.len()
        )
        .map_err(io_err("writing report"))?;
    }
    Ok(Ran {
        outcome: Outcome::Ok,
        seed: cfg.seed(a.common.seed),
        resolved: json!({ "experiment": exp, "w_z": grid }),
        outputs,
    })
}

fn track(a: &TrackArgs, cfg: &LoadedConfig, out: &mut dyn Write) -> Result<Ran, CliError> {
    let method = match a.algorithm {
        Algorithm::MleGrid => TrackingMethod::GridMle,
        Algorithm::Multilateration => TrackingMethod::Multilateration,
    };
    let mut exp = cfg.tracking_experiment(method == TrackingMethod::GridMle)?;
    let target = a
        .target
        .or(cfg.file.target)
        .ok_or_else(|| CliError::Usage("no target: pass --target x,y or set `target` in the config".into()))?;
    let target = Vec2::new(target[0], target[1]);
    if a.noiseless {
        exp.environment.noise = Some(NoiseSpec::new(0.0).expect("zero noise is valid"));
    }
    // Noiseless trials are identical, so the config's trial count is not used.
    exp.trial_count = if a.noiseless {
        a.common.trials.unwrap_or(1)
    } else {
        cfg.trials(a.common.trials).unwrap_or(DEFAULT_TRIALS)
    };
    exp.master_seed = cfg.seed(a.common.seed);
    exp.keep_trials = true;
    exp.validate().map_err(model("track"))?;

    let method_name = match method {
        TrackingMethod::GridMle => "mle-grid",
        TrackingMethod::Multilateration => "multilateration",
    };
    log::info!("tracking ({method_name}) {} trials", exp.trial_count);
    let stats = run_tracking_experiment(&exp, target, method)
        .map_err(model(format!("track {method_name} with config {}", cfg.path)))?;

    let mut report = format!(
        "track {method_name} target ({}, {}), {} trials, seed {}\n",
        target.x, target.y, stats.trials, exp.master_seed
    );
    if let Some([first]) = stats.per_trial.as_deref() {
        report.push_str(&format!("  estimate:          ({}, {})\n", first.estimate.x, first.estimate.y));
    }
    report.push_str(&format!("  mean radial error: {} m\n", short(stats.mean_radial_error)));
    report.push_str(&format!("  rms error:         {} m\n", short(stats.rms_error)));
    report.push_str(&format!("  error angle:       {} rad\n", short(stats.error_angle)));
    report.push_str(&format!("  clamped trials:    {}\n", stats.clamped_trials));
    out.write_all(report.as_bytes()).map_err(io_err("writing report"))?;

    let mut outputs = Vec::new();
    if let Some(path) = &a.common.out {
        match a.common.format {
            Format::Json => {
                output::write_json(path, &stats).map_err(io_err(format!("writing {}", path.display())))?
            }
            Format::Csv => {
                let file = std::fs::File::create(path).map_err(io_err(format!("creating {}", path.display())))?;
                let mut w = output::csv_writer(file);
                let res = (|| {
                    w.write_record(["trial", "est_x", "est_y", "error"])?;
                    for r in stats.per_trial.iter().flatten() {
                        w.write_record([r.trial.to_string(), num(r.estimate.x), num(r.estimate.y), num(r.error)])?;
                    }
                    w.flush()?;
                    Ok::<(), csv::Error>(())
                })();
                res.map_err(csv_err(path))?;
            }
        }
        outputs.push(path.clone());
    }
    Ok(Ran {
        outcome: Outcome::Ok,
        seed: exp.master_seed,
        resolved: json!({ "experiment": exp, "target": [target.x, target.y], "algorithm": a.algorithm }),
        outputs,
    })
}

fn error_bound(a: &ErrorBoundArgs, cfg: &LoadedConfig, out: &mut dyn Write) -> Result<Ran, CliError> {
    const BY: &str = "error-bound";
    warn_unused(&a.common, BY);
    let array = cfg.beacon_array(BY)?;
    let noise = cfg.noise(BY)?;
    let points: Vec<[f64; 2]> = if a.points.is_empty() {
        cfg.file.points.clone().unwrap_or_default()
    } else {
        a.points.clone()
    };
    if points.is_empty() {
        return Err(CliError::Usage(
            "no points: pass --point x,y or set `points` in the config".into(),
        ));
    }
    if let Some(p) = points.iter().find(|p| !p.iter().all(|v| v.is_finite())) {
        return Err(CliError::Usage(format!("point {p:?} is not finite")));
    }

    let results: Vec<(Vec2, Result<f64, crate::Error>)> = points
        .iter()
        .map(|&[x, y]| {
            let p = Vec2::new(x, y);
            (p, theoretical_error(p, &array, &noise))
        })
        .collect();
    let mut report = format!("theoretical tracking error, sigma_n = {}\n", noise.sigma_n());
    for (p, r) in &results {
        match r {
            Ok(v) => report.push_str(&format!("  ({}, {}): {} m\n", p.x, p.y, short(*v))),
            Err(e) => report.push_str(&format!("  ({}, {}): error: {e}\n", p.x, p.y)),
        }
    }
    out.write_all(report.as_bytes()).map_err(io_err("writing report"))?;
    let failed = results.iter().filter(|(_, r)| r.is_err()).count();

    let mut outputs = Vec::new();
    if let Some(path) = &a.common.out {
        match a.common.format {
            Format::Json => {
                let rows: Vec<serde_json::Value> = results
                    .iter()
                    .map(|(p, r)| match r {
                        Ok(v) => json!({ "x": p.x, "y": p.y, "theoretical_error": v }),
                        Err(e) => json!({ "x": p.x, "y": p.y, "error": e.to_string() }),
                    })
                    .collect();
                output::write_json(path, &rows).map_err(io_err(format!("writing {}", path.display())))?;
            }
            Format::Csv => {
                let file = std::fs::File::create(path).map_err(io_err(format!("creating {}", path.display())))?;
                let mut w = output::csv_writer(file);
                let res = (|| {
                    w.write_record(["x", "y", "theoretical_error", "error"])?;
                    for (p, r) in &results {
                        let (v, e) = match r {
                            Ok(v) => (num(*v), String::new()),
                            Err(e) => (String::new(), e.to_string()),
                        };
                        w.write_record([num(p.x), num(p.y), v, e])?;
                    }
                    w.flush()?;
                    Ok::<(), csv::Error>(())
                })();
                res.map_err(csv_err(path))?;
            }
        }
        outputs.push(path.clone());
    }
    Ok(Ran {
        outcome: if failed > 0 {
            Outcome::PartialFailure
        } else {
            Outcome::Ok
        },
        seed: cfg.seed(a.common.seed),
        resolved: json!({ "array": array, "noise": noise, "points": points }),
        outputs,
    })
}

fn simulate(a: &SimulateArgs, cfg: &LoadedConfig, out: &mut dyn Write) -> Result<Ran, CliError> {
    warn_unused(&a.common, "simulate");
    let mut exp = cfg.trajectory_experiment()?;
    exp.master_seed = cfg.seed(a.common.seed);
    let steps = cfg.steps(a.steps).unwrap_or(DEFAULT_STEPS);
    let traj = simulate_trajectory(&exp, steps).map_err(model("simulate"))?;
    let s = &traj.summary;
    let w_z = exp.main_beam.and_then(|m| m.w_z).unwrap_or(f64::NAN);
    let report = format!(
        "trajectory of {} steps at w_z = {:.4} m, seed {}\n  outage rate:     {} (expected {}, standard error {})\n  mean power:      {} W (expected {} W)\n",
        s.steps,
        w_z,
        exp.master_seed,
        short(s.outage_rate),
        short(s.expected_outage),
        short(s.outage_std_error),
        short(s.mean_power),
        short(s.average_power),
    );
    out.write_all(report.as_bytes()).map_err(io_err("writing report"))?;

    let mut outputs = Vec::new();
    if let Some(path) = &a.common.out {
        match a.common.format {
            Format::Json => {
                output::write_json(path, &traj).map_err(io_err(format!("writing {}", path.display())))?
            }
            Format::Csv => {
                let file = std::fs::File::create(path).map_err(io_err(format!("creating {}", path.display())))?;
                let mut w = output::csv_writer(io::BufWriter::new(file));
                let res = (|| {
                    w.write_record(["index", "target_x", "target_y", "center_x", "center_y", "power", "outage"])?;
                    for t in &traj.samples {
                        w.write_record([
                            t.index.to_string(),
                            num(t.target.x),
                            num(t.target.y),
                            num(t.laser_center.x),
                            num(t.laser_center.y),
                            num(t.power),
                            u8::from(t.outage).to_string(),
                        ])?;
                    }
                    w.flush()?;
                    Ok::<(), csv::Error>(())
                })();
                res.map_err(csv_err(path))?;
            }
        }
        outputs.push(path.clone());
    }
    Ok(Ran {
        outcome: Outcome::Ok,
        seed: exp.master_seed,
        resolved: json!({ "experiment": exp, "steps": steps }),
        outputs,
    })
}
