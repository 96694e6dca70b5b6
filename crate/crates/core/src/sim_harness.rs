//! Monte-Carlo experiments: repeated noisy tracking of a fixed target, link
//! curves over a width grid, and main-beam trajectories under Brownian motion
//! and pointing error.
//!
//! Trials run in parallel. Each trial owns a stream seeded from the master seed
//! and its index, and per-trial results are reduced in index order by pairwise
//! summation, so output is bitwise reproducible regardless of thread count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::beam_model::{received_power, BeamSpec, ReceiverSpec, Vec2};
use crate::error::{ensure_positive, Error, Result};
use crate::link_design::{
    average_power, expected_outage, expected_outage_numeric, max_feasible_width, DesignThresholds,
};
use crate::stochastic::{
    sample_noise, sample_pointing_offset, sample_target_step, MobilitySpec, NoiseSpec,
    PointingSpec, RandomStream,
};
use crate::tracking::{
    track_mle_grid, BeaconArray, GridSearchConfig, MultilaterationSolver, PowerMeasurements,
    TrackingEstimate, TrackingMethod,
};

pub const DEFAULT_TRIALS: usize = 10_000;

type Estimator = dyn Fn(&PowerMeasurements) -> Result<TrackingEstimate> + Sync;

/// Random environment. Each part is optional; experiments that need a part
/// report its absence.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Environment {
    pub mobility: Option<MobilitySpec>,
    pub pointing: Option<PointingSpec>,
    pub noise: Option<NoiseSpec>,
}

/// The communication beam whose width is being designed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MainBeam {
    /// Product of power coefficient and receiver area.
    pub a_a: f64,
    /// Spot width; only trajectories need it.
    pub w_z: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepParameter {
    #[serde(rename = "aA")]
    AA,
    /// `sigma_t^2 + sigma_p^2`, split evenly between the two.
    #[serde(rename = "sigma_sum_sq")]
    SigmaSumSq,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub array: Option<BeaconArray>,
    pub environment: Environment,
    pub thresholds: Option<DesignThresholds>,
    pub main_beam: Option<MainBeam>,
    pub link_distance_z: f64,
    pub trial_count: usize,
    pub master_seed: u64,
    pub search: Option<GridSearchConfig>,
    pub sweep: Option<Sweep>,
    /// Keep per-trial estimates in [`TrialStats`].
    pub keep_trials: bool,
}

fn missing(what: &str) -> Error {
    Error::Invalid(format!("experiment config has no {what}"))
}

impl ExperimentConfig {
    /// Empty config at link distance `z` with the default trial count and seed 0.
    pub fn new(link_distance_z: f64) -> Self {
        Self {
            array: None,
            environment: Environment::default(),
            thresholds: None,
            main_beam: None,
            link_distance_z,
            trial_count: DEFAULT_TRIALS,
            master_seed: 0,
            search: None,
            sweep: None,
            keep_trials: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure_positive("z", self.link_distance_z)?;
        if let Some(main) = &self.main_beam {
            ensure_positive("main aA", main.a_a)?;
            if let Some(w) = main.w_z {
                ensure_positive("main w_z", w)?;
            }
        }
        if self.trial_count == 0 {
            return Err(Error::Invalid("trial_count must be at least 1".into()));
        }
        if let Some(sweep) = &self.sweep {
            if let Some(v) = sweep.values.iter().find(|v| !v.is_finite() || **v <= 0.0) {
                return Err(Error::Invalid(format!("sweep value {v} must be finite and > 0")));
            }
        }
        Ok(())
    }

    pub fn require_array(&self) -> Result<&BeaconArray> {
        self.array.as_ref().ok_or_else(|| missing("beacon array"))
    }

    pub fn require_thresholds(&self) -> Result<&DesignThresholds> {
        self.thresholds.as_ref().ok_or_else(|| missing("design thresholds"))
    }

    pub fn require_main_beam(&self) -> Result<&MainBeam> {
        self.main_beam.as_ref().ok_or_else(|| missing("main beam"))
    }

    pub fn require_mobility(&self) -> Result<&MobilitySpec> {
        self.environment.mobility.as_ref().ok_or_else(|| missing("mobility spread sigma_t"))
    }

    pub fn require_pointing(&self) -> Result<&PointingSpec> {
        self.environment.pointing.as_ref().ok_or_else(|| missing("pointing spread sigma_p"))
    }

    pub fn require_noise(&self) -> Result<&NoiseSpec> {
        self.environment.noise.as_ref().ok_or_else(|| missing("noise spread sigma_n"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub estimate: Vec2,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialStats {
    pub trials: usize,
    pub mean_radial_error: f64,
    pub rms_error: f64,
    /// `mean_radial_error / z`.
    pub error_angle: f64,
    /// Trials in which at least one beacon power had to be clamped.
    pub clamped_trials: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_trial: Option<Vec<TrialRecord>>,
}

/// Pairwise (cascade) summation in slice order.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Measured powers: noiseless model plus independent noise on each beacon,
/// drawn in beacon order.
pub fn noisy_measurements(
    array: &BeaconArray,
    target: Vec2,
    noise: &NoiseSpec,
    rng: &mut RandomStream,
) -> PowerMeasurements {
    let mut meas = array.noiseless_powers(target);
    for v in meas.0.iter_mut() {
        *v += sample_noise(noise, rng);
    }
    meas
}

/// Repeatedly measures a fixed target with fresh noise and runs one estimator.
pub fn run_tracking_experiment(
    cfg: &ExperimentConfig,
    target: Vec2,
    method: TrackingMethod,
) -> Result<TrialStats> {
    cfg.validate()?;
    if !target.is_finite() {
        return Err(Error::Invalid(format!("target {target:?} is not finite")));
    }
    let noise = *cfg.require_noise()?;
    let array = cfg.require_array()?;
    let estimator: Box<Estimator> = match method {
        TrackingMethod::Multilateration => {
            let solver = MultilaterationSolver::new(array)?;
            Box::new(move |m| solver.solve(m))
        }
        TrackingMethod::GridMle => {
            let search = cfg.search.ok_or_else(|| {
                Error::Invalid("grid MLE needs a search region and step".into())
            })?;
            // The grid argmax does not depend on the likelihood's sigma, so a
            // noiseless run scores with unit sigma.
            let scoring = if noise.sigma_n() > 0.0 {
                noise
            } else {
                NoiseSpec::new(1.0)?
            };
            let array = array.clone();
            Box::new(move |m| track_mle_grid(m, &array, &scoring, &search))
        }
    };

    let results: Vec<Result<(TrialRecord, bool)>> = (0..cfg.trial_count)
        .into_par_iter()
        .map(|trial| {
            let mut rng = RandomStream::for_trial(cfg.master_seed, trial as u64);
            let meas = noisy_measurements(array, target, &noise, &mut rng);
            let est = estimator(&meas).map_err(|e| Error::Trial {
                trial,
                source: Box::new(e),
            })?;
            Ok((
                TrialRecord {
                    trial,
                    estimate: est.point,
                    error: est.point.distance(target),
                },
                est.clamped > 0,
            ))
        })
        .collect();
    let mut records = Vec::with_capacity(results.len());
    let mut clamped_trials = 0;
    for r in results {
        let (rec, clamped) = r?;
        clamped_trials += usize::from(clamped);
        records.push(rec);
    }

    let n = records.len() as f64;
    let errors: Vec<f64> = records.iter().map(|r| r.error).collect();
    let squares: Vec<f64> = errors.iter().map(|e| e * e).collect();
    let mean = pairwise_sum(&errors) / n;
    let rms = (pairwise_sum(&squares) / n).sqrt();
    Ok(TrialStats {
        trials: records.len(),
        mean_radial_error: mean,
        rms_error: rms,
        error_angle: mean / cfg.link_distance_z,
        clamped_trials,
        per_trial: cfg.keep_trials.then_some(records),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Curve {
    AvgPower,
    ExpectedOutage,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveMethod {
    ClosedForm,
    NumericOracle,
}

impl CurveMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            CurveMethod::ClosedForm => "closed_form",
            CurveMethod::NumericOracle => "numeric_oracle",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub abscissa: f64,
    pub ordinate: f64,
    pub series: String,
    pub method: CurveMethod,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedPoint {
    pub series: String,
    pub w_z: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepOutput {
    pub points: Vec<CurvePoint>,
    pub skipped: Vec<SkippedPoint>,
}

#[derive(Debug, Clone, PartialEq)]
struct SeriesParams {
    label: String,
    a_a: f64,
    sigma_t: f64,
    sigma_p: f64,
}

fn fmt_value(v: f64) -> String {
    format!("{v}")
}

fn base_spreads(cfg: &ExperimentConfig) -> Result<(f64, f64)> {
    Ok((cfg.require_mobility()?.sigma_t(), cfg.require_pointing()?.sigma_p()))
}

fn series_for(cfg: &ExperimentConfig) -> Result<Vec<SeriesParams>> {
    Ok(match &cfg.sweep {
        None => {
            let a_a = cfg.require_main_beam()?.a_a;
            let (st, sp) = base_spreads(cfg)?;
            vec![SeriesParams {
                label: format!("aA={} s2={}", fmt_value(a_a), fmt_value(st * st + sp * sp)),
                a_a,
                sigma_t: st,
                sigma_p: sp,
            }]
        }
        Some(Sweep {
            parameter: SweepParameter::AA,
            values,
        }) => {
            let (st, sp) = base_spreads(cfg)?;
            values
                .iter()
                .map(|&v| SeriesParams {
                    label: format!("aA={}", fmt_value(v)),
                    a_a: v,
                    sigma_t: st,
                    sigma_p: sp,
                })
                .collect()
        }
        Some(Sweep {
            parameter: SweepParameter::SigmaSumSq,
            values,
        }) => {
            let a_a = cfg.require_main_beam()?.a_a;
            values
                .iter()
                .map(|&s2| SeriesParams {
                    label: format!("s2={}", fmt_value(s2)),
                    a_a,
                    sigma_t: (0.5 * s2).sqrt(),
                    sigma_p: (0.5 * s2).sqrt(),
                })
                .collect()
        }
    })
}

/// Link curves over a width grid, one series per sweep value.
///
/// Expected-outage series carry a numeric-integration companion. Widths where
/// the beam centre cannot clear `gamma_th` are skipped and reported.
pub fn sweep_link_curves(cfg: &ExperimentConfig, which: Curve, w_grid: &[f64]) -> Result<SweepOutput> {
    cfg.validate()?;
    if w_grid.is_empty() {
        return Err(Error::Invalid("width grid is empty".into()));
    }
    if let Some(w) = w_grid.iter().find(|w| !w.is_finite() || **w <= 0.0) {
        return Err(Error::Invalid(format!("grid width {w} must be finite and > 0")));
    }
    let gamma = cfg.require_thresholds()?.gamma_th();
    let series = series_for(cfg)?;

    let per_series: Vec<Result<(Vec<CurvePoint>, Vec<SkippedPoint>)>> = series
        .par_iter()
        .map(|s| {
            let mut points = Vec::new();
            let mut skipped = Vec::new();
            for &w in w_grid {
                let point = |ordinate, method| CurvePoint {
                    abscissa: w,
                    ordinate,
                    series: s.label.clone(),
                    method,
                };
                match which {
                    Curve::AvgPower => {
                        let v = average_power(s.a_a, s.sigma_p, s.sigma_t, w)?;
                        points.push(point(v, CurveMethod::ClosedForm));
                    }
                    Curve::ExpectedOutage => {
                        if w >= max_feasible_width(s.a_a, gamma) {
                            skipped.push(SkippedPoint {
                                series: s.label.clone(),
                                w_z: w,
                                reason: "beam centre power below gamma_th".into(),
                            });
                            continue;
                        }
                        let closed = expected_outage(w, s.a_a, gamma, s.sigma_t, s.sigma_p)?;
                        let numeric = expected_outage_numeric(w, s.a_a, gamma, s.sigma_t, s.sigma_p)?;
                        points.push(point(closed, CurveMethod::ClosedForm));
                        points.push(point(numeric, CurveMethod::NumericOracle));
                    }
                }
            }
            Ok((points, skipped))
        })
        .collect();

    let mut out = SweepOutput {
        points: Vec::new(),
        skipped: Vec::new(),
    };
    for r in per_series {
        let (p, s) = r?;
        out.points.extend(p);
        out.skipped.extend(s);
    }
    Ok(out)
}

/// `count` evenly spaced widths from `start` to `stop` inclusive.
pub fn linspace(start: f64, stop: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![start],
        _ => {
            let h = (stop - start) / (count - 1) as f64;
            (0..count).map(|i| start + h * i as f64).collect()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub index: usize,
    pub target: Vec2,
    pub laser_center: Vec2,
    pub power: f64,
    pub outage: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySummary {
    pub steps: usize,
    pub outage_rate: f64,
    /// Binomial standard error of `outage_rate` around the closed-form value.
    pub outage_std_error: f64,
    pub mean_power: f64,
    pub expected_outage: f64,
    pub average_power: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub samples: Vec<TrajectorySample>,
    pub summary: TrajectorySummary,
}

/// Main-beam link over `steps` feedback intervals with ideal tracking.
///
/// Each interval re-aims the beam at the previous true target position plus a
/// pointing offset, then moves the target one Brownian step and records the
/// power it receives at its new position.
pub fn simulate_trajectory(cfg: &ExperimentConfig, steps: usize) -> Result<Trajectory> {
    cfg.validate()?;
    if steps == 0 {
        return Err(Error::Invalid("steps must be at least 1".into()));
    }
    let main = cfg.require_main_beam()?;
    let a_a = main.a_a;
    let w_z = main
        .w_z
        .ok_or_else(|| missing("main beam width w_z"))?;
    let mobility = *cfg.require_mobility()?;
    let pointing = *cfg.require_pointing()?;
    let gamma = cfg.require_thresholds()?.gamma_th();
    let beam = BeamSpec::new(a_a, w_z, Vec2::ZERO)?;
    let rx = ReceiverSpec::new(1.0)?;
    let mut rng = RandomStream::new(cfg.master_seed);

    let mut prev = Vec2::ZERO;
    let mut samples = Vec::with_capacity(steps);
    for index in 0..steps {
        let laser_center = prev + sample_pointing_offset(&pointing, &mut rng);
        let target = sample_target_step(prev, &mobility, &mut rng);
        let power = received_power(&beam.with_center(laser_center), &rx, target);
        samples.push(TrajectorySample {
            index,
            target,
            laser_center,
            power,
            outage: power <= gamma,
        });
        prev = target;
    }

    let st = mobility.sigma_t();
    let sp = pointing.sigma_p();
    let expected = if w_z < max_feasible_width(a_a, gamma) {
        expected_outage(w_z, a_a, gamma, st, sp)?
    } else {
        1.0
    };
    let n = steps as f64;
    let outages = samples.iter().filter(|s| s.outage).count() as f64;
    let powers: Vec<f64> = samples.iter().map(|s| s.power).collect();
    let summary = TrajectorySummary {
        steps,
        outage_rate: outages / n,
        outage_std_error: (expected * (1.0 - expected) / n).sqrt(),
        mean_power: pairwise_sum(&powers) / n,
        expected_outage: expected,
        average_power: average_power(a_a, sp, st, w_z)?,
    };
    Ok(Trajectory { samples, summary })
}
