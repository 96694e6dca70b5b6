//! Python bindings for `beamtrack`.
//!
//! Points are `(x, y)` tuples and power vectors are lists of floats. Invalid
//! input raises `ValueError`; rank-deficient beacon geometry raises
//! `RankDeficientError`.

use beamtrack::link_design::{self, Interval};
use beamtrack::sim_harness::{self, Curve, Environment, MainBeam, Sweep, SweepParameter};
use beamtrack::specfun;
use beamtrack::tracking::{self, SearchRegion};
use beamtrack::{
    DesignThresholds, Error, ExperimentConfig, GridSearchConfig, LambertBranch, MobilitySpec,
    NoiseSpec, PointingSpec, PowerMeasurements, TrackingMethod, Vec2,
};
use pyo3::create_exception;
use pyo3::exceptions::{PyArithmeticError, PyValueError};
use pyo3::prelude::*;

create_exception!(beamtrack, RankDeficientError, PyArithmeticError);

fn py_err(e: Error) -> PyErr {
    if e.is_numeric() {
        RankDeficientError::new_err(e.to_string())
    } else {
        PyValueError::new_err(e.to_string())
    }
}

trait OrPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> OrPy<T> for beamtrack::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(py_err)
    }
}

fn vec2((x, y): (f64, f64)) -> Vec2 {
    Vec2::new(x, y)
}

fn tuple(v: Vec2) -> (f64, f64) {
    (v.x, v.y)
}

fn bounds(iv: &Interval) -> Option<(f64, f64)> {
    iv.bounds()
}

fn tracking_method(name: &str) -> PyResult<TrackingMethod> {
    match name {
        "multilateration" => Ok(TrackingMethod::Multilateration),
        "mle-grid" | "mle_grid" => Ok(TrackingMethod::GridMle),
        other => Err(PyValueError::new_err(format!(
            "unknown method {other:?}, expected \"multilateration\" or \"mle-grid\""
        ))),
    }
}

fn method_name(m: TrackingMethod) -> &'static str {
    match m {
        TrackingMethod::Multilateration => "multilateration",
        TrackingMethod::GridMle => "mle-grid",
    }
}

fn grid_search(region: (f64, f64, f64, f64), step: f64, refine: bool) -> PyResult<GridSearchConfig> {
    let (x_min, x_max, y_min, y_max) = region;
    let region = SearchRegion { x_min, x_max, y_min, y_max };
    Ok(GridSearchConfig::new(region, step).py()?.with_refinement(refine))
}

// ---------------------------------------------------------------- specfun

/// Marcum Q-function of order one.
#[pyfunction]
fn marcum_q1(a: f64, b: f64) -> PyResult<f64> {
    specfun::marcum_q1(a, b).py()
}

/// Lambert W on the real line. `branch` is 0 (principal) or -1.
#[pyfunction]
#[pyo3(signature = (x, branch = 0))]
fn lambert_w(x: f64, branch: i32) -> PyResult<f64> {
    let branch = match branch {
        0 => LambertBranch::Principal,
        -1 => LambertBranch::NegativeOne,
        b => return Err(PyValueError::new_err(format!("branch must be 0 or -1, got {b}"))),
    };
    specfun::lambert_w(x, branch).py()
}

// ------------------------------------------------------------ link design

#[pyfunction]
fn average_power(a_a: f64, sigma_p: f64, sigma_t: f64, w_z: f64) -> PyResult<f64> {
    link_design::average_power(a_a, sigma_p, sigma_t, w_z).py()
}

#[pyfunction]
fn expected_outage(w_z: f64, a_a: f64, gamma_th: f64, sigma_t: f64, sigma_p: f64) -> PyResult<f64> {
    link_design::expected_outage(w_z, a_a, gamma_th, sigma_t, sigma_p).py()
}

/// Expected outage by numeric integration over the pointing error.
#[pyfunction]
fn expected_outage_numeric(w_z: f64, a_a: f64, gamma_th: f64, sigma_t: f64, sigma_p: f64) -> PyResult<f64> {
    link_design::expected_outage_numeric(w_z, a_a, gamma_th, sigma_t, sigma_p).py()
}

#[pyfunction]
fn optimal_beam_width(a_a: f64, gamma_th: f64) -> PyResult<f64> {
    link_design::optimal_beam_width(a_a, gamma_th).py()
}

#[pyfunction]
fn min_expected_outage(a_a: f64, gamma_th: f64, sigma_t: f64, sigma_p: f64) -> PyResult<f64> {
    link_design::min_expected_outage(a_a, gamma_th, sigma_t, sigma_p).py()
}

/// Widths meeting the outage ceiling as `(lo, hi)`, or `None`.
#[pyfunction]
fn constraint_outage(a_a: f64, gamma_th: f64, sigma_t: f64, sigma_p: f64, xi: f64) -> PyResult<Option<(f64, f64)>> {
    Ok(bounds(&link_design::constraint_outage(a_a, gamma_th, sigma_t, sigma_p, xi).py()?))
}

/// Widths meeting the average-power floor as `(lo, hi)`, or `None`.
#[pyfunction]
fn constraint_average_power(a_a: f64, sigma_p: f64, sigma_t: f64, eta: f64) -> PyResult<Option<(f64, f64)>> {
    let thr = DesignThresholds::new(eta, 1.0, 0.5).py()?;
    Ok(bounds(&link_design::constraint_average_power(a_a, sigma_p, sigma_t, &thr).py()?))
}

/// Spot-size design rule. Interval fields are `(lo, hi)` or `None`.
#[pyclass(frozen, get_all, module = "beamtrack")]
struct DesignRule {
    average_power: Option<(f64, f64)>,
    outage: Option<(f64, f64)>,
    width: Option<(f64, f64)>,
    divergence: Option<(f64, f64)>,
    optimal_width: f64,
    min_expected_outage: f64,
    feasible: bool,
}

#[pymethods]
impl DesignRule {
    fn __repr__(&self) -> String {
        format!(
            "DesignRule(width={:?}, divergence={:?}, optimal_width={}, feasible={})",
            self.width, self.divergence, self.optimal_width, self.feasible
        )
    }
}

#[pyfunction]
#[pyo3(signature = (a_a, sigma_t, sigma_p, eta, gamma_th, xi, z))]
fn design_rule(a_a: f64, sigma_t: f64, sigma_p: f64, eta: f64, gamma_th: f64, xi: f64, z: f64) -> PyResult<DesignRule> {
    let thr = DesignThresholds::new(eta, gamma_th, xi).py()?;
    let r = link_design::design_rule(a_a, sigma_t, sigma_p, &thr, z).py()?;
    Ok(DesignRule {
        average_power: bounds(&r.average_power),
        outage: bounds(&r.outage),
        width: bounds(&r.width),
        divergence: bounds(&r.divergence),
        optimal_width: r.optimal_width,
        min_expected_outage: r.min_expected_outage,
        feasible: r.is_feasible(),
    })
}

// --------------------------------------------------------------- tracking

/// Beacon lasers sharing one power coefficient and width.
#[pyclass(frozen, module = "beamtrack")]
struct BeaconArray {
    inner: tracking::BeaconArray,
}

#[pymethods]
impl BeaconArray {
    #[new]
    #[pyo3(signature = (centers, w_z, a, area = 1.0))]
    fn new(centers: Vec<(f64, f64)>, w_z: f64, a: f64, area: f64) -> PyResult<Self> {
        let centers: Vec<Vec2> = centers.into_iter().map(vec2).collect();
        Ok(Self {
            inner: tracking::BeaconArray::uniform(a, w_z, &centers, area).py()?,
        })
    }

    #[getter]
    fn centers(&self) -> Vec<(f64, f64)> {
        self.inner.centers().into_iter().map(tuple).collect()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn noiseless_powers(&self, point: (f64, f64)) -> Vec<f64> {
        self.inner.noiseless_powers(vec2(point)).0
    }

    /// Gradient of each beacon's power with respect to the target position.
    fn jacobian(&self, point: (f64, f64)) -> Vec<(f64, f64)> {
        tracking::jacobian(vec2(point), &self.inner)
            .into_iter()
            .map(|[a, b]| (a, b))
            .collect()
    }

    fn __repr__(&self) -> String {
        format!("BeaconArray(n={})", self.inner.len())
    }
}

#[pyclass(frozen, get_all, module = "beamtrack")]
struct TrackingEstimate {
    point: (f64, f64),
    method: &'static str,
    log_likelihood: Option<f64>,
    clamped: usize,
}

#[pymethods]
impl TrackingEstimate {
    fn __repr__(&self) -> String {
        format!("TrackingEstimate(point={:?}, method={:?})", self.point, self.method)
    }
}

impl From<beamtrack::TrackingEstimate> for TrackingEstimate {
    fn from(e: beamtrack::TrackingEstimate) -> Self {
        Self {
            point: tuple(e.point),
            method: method_name(e.method),
            log_likelihood: e.log_likelihood,
            clamped: e.clamped,
        }
    }
}

#[pyfunction]
fn track_multilateration(powers: Vec<f64>, array: &BeaconArray) -> PyResult<TrackingEstimate> {
    Ok(tracking::track_multilateration(&PowerMeasurements(powers), &array.inner).py()?.into())
}

/// Grid maximum likelihood over `region = (x_min, x_max, y_min, y_max)`.
#[pyfunction]
#[pyo3(signature = (powers, array, sigma_n, region, step, refine = false))]
fn track_mle_grid(
    powers: Vec<f64>,
    array: &BeaconArray,
    sigma_n: f64,
    region: (f64, f64, f64, f64),
    step: f64,
    refine: bool,
) -> PyResult<TrackingEstimate> {
    let noise = NoiseSpec::new(sigma_n).py()?;
    let cfg = grid_search(region, step, refine)?;
    Ok(tracking::track_mle_grid(&PowerMeasurements(powers), &array.inner, &noise, &cfg).py()?.into())
}

/// Linearised RMS tracking error of multilateration at `point`.
#[pyfunction]
fn theoretical_error(point: (f64, f64), array: &BeaconArray, sigma_n: f64) -> PyResult<f64> {
    let noise = NoiseSpec::new(sigma_n).py()?;
    tracking::theoretical_error(vec2(point), &array.inner, &noise).py()
}

// ------------------------------------------------------------ experiments

#[pyclass(frozen, get_all, module = "beamtrack")]
struct TrialStats {
    trials: usize,
    mean_radial_error: f64,
    rms_error: f64,
    error_angle: f64,
    clamped_trials: usize,
    /// Per-trial `(x, y)` estimates, when requested.
    estimates: Option<Vec<(f64, f64)>>,
}

#[pymethods]
impl TrialStats {
    fn __repr__(&self) -> String {
        format!(
            "TrialStats(trials={}, mean_radial_error={}, rms_error={})",
            self.trials, self.mean_radial_error, self.rms_error
        )
    }
}

/// Monte-Carlo tracking of a fixed target with Gaussian power noise.
#[pyfunction]
#[pyo3(signature = (array, target, sigma_n, trials, seed, method = "multilateration", z = 100.0, region = None, step = 0.01, keep_trials = false))]
#[allow(clippy::too_many_arguments)]
fn run_tracking_experiment(
    py: Python<'_>,
    array: &BeaconArray,
    target: (f64, f64),
    sigma_n: f64,
    trials: usize,
    seed: u64,
    method: &str,
    z: f64,
    region: Option<(f64, f64, f64, f64)>,
    step: f64,
    keep_trials: bool,
) -> PyResult<TrialStats> {
    let method = tracking_method(method)?;
    let mut cfg = ExperimentConfig::new(z);
    cfg.array = Some(array.inner.clone());
    cfg.environment.noise = Some(NoiseSpec::new(sigma_n).py()?);
    cfg.trial_count = trials;
    cfg.master_seed = seed;
    cfg.keep_trials = keep_trials;
    if method == TrackingMethod::GridMle {
        let region = match region {
            Some(r) => r,
            None => {
                let b = SearchRegion::bounding(&array.inner.centers());
                (b.x_min, b.x_max, b.y_min, b.y_max)
            }
        };
        cfg.search = Some(grid_search(region, step, false)?);
    }
    let target = vec2(target);
    let s = py
        .detach(|| sim_harness::run_tracking_experiment(&cfg, target, method))
        .py()?;
    Ok(TrialStats {
        trials: s.trials,
        mean_radial_error: s.mean_radial_error,
        rms_error: s.rms_error,
        error_angle: s.error_angle,
        clamped_trials: s.clamped_trials,
        estimates: s.per_trial.map(|v| v.into_iter().map(|r| tuple(r.estimate)).collect()),
    })
}

fn link_config(a_a: f64, sigma_t: f64, sigma_p: f64, gamma_th: f64, w_z: Option<f64>) -> PyResult<ExperimentConfig> {
    let mut cfg = ExperimentConfig::new(1.0);
    cfg.main_beam = Some(MainBeam { a_a, w_z });
    cfg.environment = Environment {
        mobility: Some(MobilitySpec::new(sigma_t).py()?),
        pointing: Some(PointingSpec::new(sigma_p).py()?),
        noise: None,
    };
    cfg.thresholds = Some(DesignThresholds::new(1.0, gamma_th, 0.5).py()?);
    Ok(cfg)
}

/// Link curve over `w_grid`: `curve` is `"avg-power"` or `"expected-outage"`.
///
/// `sweep` optionally names `"aA"` or `"sigma_sum_sq"` with `values`, giving
/// one series per value. Returns `(points, skipped)` where each point is
/// `(w_z, value, series, method)` and each skipped entry `(w_z, series, reason)`.
#[pyfunction]
#[pyo3(signature = (curve, w_grid, a_a, sigma_t, sigma_p, gamma_th = 1.0, sweep = None, values = None))]
#[allow(clippy::too_many_arguments, clippy::type_complexity)]
fn sweep_link_curves(
    py: Python<'_>,
    curve: &str,
    w_grid: Vec<f64>,
    a_a: f64,
    sigma_t: f64,
    sigma_p: f64,
    gamma_th: f64,
    sweep: Option<&str>,
    values: Option<Vec<f64>>,
) -> PyResult<(Vec<(f64, f64, String, &'static str)>, Vec<(f64, String, String)>)> {
    let which = match curve {
        "avg-power" => Curve::AvgPower,
        "expected-outage" => Curve::ExpectedOutage,
        other => return Err(PyValueError::new_err(format!("unknown curve {other:?}"))),
    };
    let mut cfg = link_config(a_a, sigma_t, sigma_p, gamma_th, None)?;
    cfg.sweep = match (sweep, values) {
        (None, None) => None,
        (Some(name), Some(values)) => {
            let parameter = match name {
                "aA" => SweepParameter::AA,
                "sigma_sum_sq" => SweepParameter::SigmaSumSq,
                other => return Err(PyValueError::new_err(format!("unknown sweep parameter {other:?}"))),
            };
            Some(Sweep { parameter, values })
        }
        _ => return Err(PyValueError::new_err("sweep and values must be given together")),
    };
    let out = py.detach(|| sim_harness::sweep_link_curves(&cfg, which, &w_grid)).py()?;
    Ok((
        out.points
            .into_iter()
            .map(|p| (p.abscissa, p.ordinate, p.series, p.method.as_str()))
            .collect(),
        out.skipped.into_iter().map(|s| (s.w_z, s.series, s.reason)).collect(),
    ))
}

#[pyclass(frozen, get_all, module = "beamtrack")]
struct Trajectory {
    steps: usize,
    outage_rate: f64,
    outage_std_error: f64,
    mean_power: f64,
    expected_outage: f64,
    average_power: f64,
    targets: Vec<(f64, f64)>,
    centers: Vec<(f64, f64)>,
    powers: Vec<f64>,
    outages: Vec<bool>,
}

#[pymethods]
impl Trajectory {
    fn __repr__(&self) -> String {
        format!(
            "Trajectory(steps={}, outage_rate={}, expected_outage={})",
            self.steps, self.outage_rate, self.expected_outage
        )
    }
}

/// Main-beam link under Brownian target motion and pointing error.
#[pyfunction]
#[pyo3(signature = (a_a, w_z, sigma_t, sigma_p, steps, seed, gamma_th = 1.0))]
#[allow(clippy::too_many_arguments)]
fn simulate_trajectory(
    py: Python<'_>,
    a_a: f64,
    w_z: f64,
    sigma_t: f64,
    sigma_p: f64,
    steps: usize,
    seed: u64,
    gamma_th: f64,
) -> PyResult<Trajectory> {
    let mut cfg = link_config(a_a, sigma_t, sigma_p, gamma_th, Some(w_z))?;
    cfg.master_seed = seed;
    let t = py.detach(|| sim_harness::simulate_trajectory(&cfg, steps)).py()?;
    let s = t.summary;
    Ok(Trajectory {
        steps: s.steps,
        outage_rate: s.outage_rate,
        outage_std_error: s.outage_std_error,
        mean_power: s.mean_power,
        expected_outage: s.expected_outage,
        average_power: s.average_power,
        targets: t.samples.iter().map(|x| tuple(x.target)).collect(),
        centers: t.samples.iter().map(|x| tuple(x.laser_center)).collect(),
        powers: t.samples.iter().map(|x| x.power).collect(),
        outages: t.samples.iter().map(|x| x.outage).collect(),
    })
}

#[pymodule]
#[pyo3(name = "beamtrack")]
fn beamtrack_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("RankDeficientError", m.py().get_type::<RankDeficientError>())?;
    m.add_class::<BeaconArray>()?;
    m.add_class::<DesignRule>()?;
    m.add_class::<TrackingEstimate>()?;
    m.add_class::<TrialStats>()?;
    m.add_class::<Trajectory>()?;
    m.add_function(wrap_pyfunction!(marcum_q1, m)?)?;
    m.add_function(wrap_pyfunction!(lambert_w, m)?)?;
    m.add_function(wrap_pyfunction!(average_power, m)?)?;
    m.add_function(wrap_pyfunction!(expected_outage, m)?)?;
    m.add_function(wrap_pyfunction!(expected_outage_numeric, m)?)?;
    m.add_function(wrap_pyfunction!(optimal_beam_width, m)?)?;
    m.add_function(wrap_pyfunction!(min_expected_outage, m)?)?;
    m.add_function(wrap_pyfunction!(constraint_outage, m)?)?;
    m.add_function(wrap_pyfunction!(constraint_average_power, m)?)?;
    m.add_function(wrap_pyfunction!(design_rule, m)?)?;
    m.add_function(wrap_pyfunction!(track_multilateration, m)?)?;
    m.add_function(wrap_pyfunction!(track_mle_grid, m)?)?;
    m.add_function(wrap_pyfunction!(theoretical_error, m)?)?;
    m.add_function(wrap_pyfunction!(run_tracking_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(sweep_link_curves, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_trajectory, m)?)?;
    Ok(())
}
