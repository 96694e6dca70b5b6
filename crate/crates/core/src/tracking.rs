//! Target-position estimators driven by beacon-laser powers, and the
//! linearised tracking-error bound.
//!
//! Two estimators are provided:
//!
//! * [`track_mle_grid`] scans a rectangular grid on the reference plane and
//!   returns the point maximising the Gaussian log-likelihood of the measured
//!   powers. Exact up to the grid step but slow.
//! * [`track_multilateration`] inverts each power to a distance, subtracts the
//!   circle equations pairwise to get a linear system and solves it by
//!   pseudo-inverse. Fast, slightly biased under noise.
//!
//! [`theoretical_error`] propagates power noise through the pseudo-inverse of
//! the power Jacobian.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::beam_model::{received_power, BeamSpec, ReceiverSpec, Vec2};
use crate::error::{ensure_positive, Error, Result};
use crate::linalg::{full_column_rank_pinv, pseudo_inverse};
use crate::stochastic::NoiseSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeaconArray {
    beams: Vec<BeamSpec>,
    receiver: ReceiverSpec,
}

impl BeaconArray {
    pub fn new(beams: Vec<BeamSpec>, receiver: ReceiverSpec) -> Result<Self> {
        if beams.is_empty() {
            return Err(Error::Invalid("beacon array needs at least one beam".into()));
        }
        Ok(Self { beams, receiver })
    }

    /// Identical beams of width `w_z` at the given centres.
    pub fn uniform(power_coeff_a: f64, w_z: f64, centers: &[Vec2], area_a: f64) -> Result<Self> {
        let beams = centers
            .iter()
            .map(|&c| BeamSpec::new(power_coeff_a, w_z, c))
            .collect::<Result<Vec<_>>>()?;
        Self::new(beams, ReceiverSpec::new(area_a)?)
    }

    pub fn len(&self) -> usize {
        self.beams.len()
    }

    pub fn is_empty(&self) -> bool {
        self.beams.is_empty()
    }

    pub fn beams(&self) -> &[BeamSpec] {
        &self.beams
    }

    pub fn receiver(&self) -> &ReceiverSpec {
        &self.receiver
    }

    pub fn centers(&self) -> Vec<Vec2> {
        self.beams.iter().map(|b| b.center()).collect()
    }

    /// Noise-free beacon powers a receiver at `point` would see.
    pub fn noiseless_powers(&self, point: Vec2) -> PowerMeasurements {
        PowerMeasurements(
            self.beams
                .iter()
                .map(|b| received_power(b, &self.receiver, point))
                .collect(),
        )
    }

    /// Peak received power of beacon `i`, `2aA / (pi w^2)`.
    pub fn peak_power(&self, i: usize) -> f64 {
        self.receiver.area() * self.beams[i].peak_intensity()
    }
}

/// Measured beacon powers, one per beam in array order. Values may be negative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerMeasurements(pub Vec<f64>);

impl PowerMeasurements {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    fn check(&self, array: &BeaconArray) -> Result<()> {
        if self.0.len() != array.len() {
            return Err(Error::LengthMismatch {
                expected: array.len(),
                actual: self.0.len(),
            });
        }
        if let Some(v) = self.0.iter().find(|v| !v.is_finite()) {
            return Err(Error::Invalid(format!("non-finite power measurement {v}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchRegion {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl SearchRegion {
    /// Bounding box of a set of points.
    pub fn bounding(points: &[Vec2]) -> Self {
        let mut r = SearchRegion {
            x_min: f64::INFINITY,
            x_max: f64::NEG_INFINITY,
            y_min: f64::INFINITY,
            y_max: f64::NEG_INFINITY,
        };
        for p in points {
            r.x_min = r.x_min.min(p.x);
            r.x_max = r.x_max.max(p.x);
            r.y_min = r.y_min.min(p.y);
            r.y_max = r.y_max.max(p.y);
        }
        r
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSearchConfig {
    region: SearchRegion,
    step: f64,
    /// Parabolic sub-grid refinement of the maximiser.
    refine: bool,
}

impl GridSearchConfig {
    pub fn new(region: SearchRegion, step: f64) -> Result<Self> {
        ensure_positive("step", step)?;
        let SearchRegion {
            x_min,
            x_max,
            y_min,
            y_max,
        } = region;
        if ![x_min, x_max, y_min, y_max].iter().all(|v| v.is_finite())
            || x_max <= x_min
            || y_max <= y_min
        {
            return Err(Error::Invalid(format!("degenerate search region {region:?}")));
        }
        Ok(Self {
            region,
            step,
            refine: false,
        })
    }

    pub fn with_refinement(mut self, refine: bool) -> Self {
        self.refine = refine;
        self
    }

    pub fn region(&self) -> SearchRegion {
        self.region
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    fn counts(&self) -> (usize, usize) {
        let n = |lo: f64, hi: f64| ((hi - lo) / self.step + 1e-9).floor() as usize + 1;
        (
            n(self.region.x_min, self.region.x_max),
            n(self.region.y_min, self.region.y_max),
        )
    }

    fn point(&self, ix: usize, iy: usize) -> Vec2 {
        Vec2::new(
            self.region.x_min + ix as f64 * self.step,
            self.region.y_min + iy as f64 * self.step,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrackingMethod {
    GridMle,
    Multilateration,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackingEstimate {
    pub point: Vec2,
    pub method: TrackingMethod,
    pub log_likelihood: Option<f64>,
    /// Number of measurements clamped before distance inversion.
    pub clamped: usize,
}

/// Gaussian log-likelihood of the measurements if the target sat at `hyp`.
pub fn log_likelihood(
    meas: &PowerMeasurements,
    hyp: Vec2,
    array: &BeaconArray,
    noise: &NoiseSpec,
) -> Result<f64> {
    meas.check(array)?;
    ensure_positive("sigma_n", noise.sigma_n())?;
    Ok(LikelihoodModel::new(array, noise.sigma_n()).eval(meas.values(), hyp))
}

struct LikelihoodModel {
    peaks: Vec<f64>,
    centers: Vec<Vec2>,
    inv_w2: Vec<f64>,
    inv_two_var: f64,
    norm: f64,
}

impl LikelihoodModel {
    fn new(array: &BeaconArray, sigma_n: f64) -> Self {
        let n = array.len();
        Self {
            peaks: (0..n).map(|i| array.peak_power(i)).collect(),
            centers: array.centers(),
            inv_w2: array.beams().iter().map(|b| 1.0 / (b.width() * b.width())).collect(),
            inv_two_var: 1.0 / (2.0 * sigma_n * sigma_n),
            norm: n as f64 * ((2.0 * PI).sqrt() * sigma_n).ln(),
        }
    }

    fn eval(&self, meas: &[f64], hyp: Vec2) -> f64 {
        let sq: f64 = meas
            .iter()
            .enumerate()
            .map(|(i, &m)| {
                let model = self.peaks[i] * (-2.0 * (hyp - self.centers[i]).norm_sq() * self.inv_w2[i]).exp();
                let r = m - model;
                r * r
            })
            .sum();
        -sq * self.inv_two_var - self.norm
    }
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    ll: f64,
    ix: usize,
    iy: usize,
}

impl Candidate {
    /// Higher likelihood wins; ties go to the smaller x, then the smaller y.
    fn better(self, other: Candidate) -> Candidate {
        if self.ll > other.ll
            || (self.ll == other.ll && (self.ix, self.iy) < (other.ix, other.iy))
        {
            self
        } else {
            other
        }
    }
}

/// Exhaustive maximum-likelihood search over the configured grid.
pub fn track_mle_grid(
    meas: &PowerMeasurements,
    array: &BeaconArray,
    noise: &NoiseSpec,
    cfg: &GridSearchConfig,
) -> Result<TrackingEstimate> {
    meas.check(array)?;
    ensure_positive("sigma_n", noise.sigma_n())?;
    let model = LikelihoodModel::new(array, noise.sigma_n());
    let (nx, ny) = cfg.counts();
    let m = meas.values();

    let best = (0..nx)
        .into_par_iter()
        .map(|ix| {
            (0..ny)
                .map(|iy| Candidate {
                    ll: model.eval(m, cfg.point(ix, iy)),
                    ix,
                    iy,
                })
                .reduce(Candidate::better)
                .expect("grid has at least one row")
        })
        .reduce_with(Candidate::better)
        .expect("grid has at least one column");

    let mut point = cfg.point(best.ix, best.iy);
    if cfg.refine {
        let ll = |ix: usize, iy: usize| model.eval(m, cfg.point(ix, iy));
        if best.ix > 0 && best.ix + 1 < nx {
            point.x += cfg.step * parabola_offset(ll(best.ix - 1, best.iy), best.ll, ll(best.ix + 1, best.iy));
        }
        if best.iy > 0 && best.iy + 1 < ny {
            point.y += cfg.step * parabola_offset(ll(best.ix, best.iy - 1), best.ll, ll(best.ix, best.iy + 1));
        }
    }
    Ok(TrackingEstimate {
        point,
        method: TrackingMethod::GridMle,
        log_likelihood: Some(model.eval(m, point)),
        clamped: 0,
    })
}

/// Vertex of the parabola through three equally spaced samples, in units of
/// the spacing relative to the middle one.
fn parabola_offset(left: f64, mid: f64, right: f64) -> f64 {
    let denom = left - 2.0 * mid + right;
    if denom >= 0.0 {
        return 0.0;
    }
    (0.5 * (left - right) / denom).clamp(-0.5, 0.5)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Clamp {
    None,
    /// Measured power at or below the floor; distance saturates at its maximum.
    Floor,
    /// Measured power above the noiseless peak; distance is zero.
    Ceiling,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistanceEstimate {
    pub distance: f64,
    pub clamp: Clamp,
}

/// Lowest power accepted before inversion: `max(1e-12 W, 1e-6 * peak)`.
pub fn power_floor(peak: f64) -> f64 {
    (1e-6 * peak).max(1e-12)
}

/// Distance from a beacon's spot centre at which the noiseless model yields
/// `p_meas`. The measurement is clamped into `[floor, peak]` first.
pub fn estimate_distance(p_meas: f64, beam: &BeamSpec, area_a: f64) -> DistanceEstimate {
    let peak = area_a * beam.peak_intensity();
    let floor = power_floor(peak);
    let (p, clamp) = if p_meas.is_nan() || p_meas <= floor {
        (floor, Clamp::Floor)
    } else if p_meas > peak {
        (peak, Clamp::Ceiling)
    } else {
        (p_meas, Clamp::None)
    };
    if clamp != Clamp::None {
        log::debug!("clamped beacon power {p_meas} into [{floor}, {peak}]");
    }
    let w = beam.width();
    let distance = w * (0.5 * (peak / p).ln().max(0.0)).sqrt();
    DistanceEstimate { distance, clamp }
}

/// Linear system from pairwise-differenced circle equations, with its
/// pseudo-inverse cached so repeated trials on one array are cheap.
#[derive(Debug, Clone)]
pub struct MultilaterationSolver {
    array: BeaconArray,
    pairs: Vec<(usize, usize)>,
    pinv: DMatrix<f64>,
    /// Constant part of each right-hand side: `|c_j|^2 - |c_i|^2`.
    offsets: Vec<f64>,
}

impl MultilaterationSolver {
    pub fn new(array: &BeaconArray) -> Result<Self> {
        let n = array.len();
        if n < 3 {
            return Err(Error::Invalid(format!(
                "multilateration needs at least 3 beacons, got {n}"
            )));
        }
        let centers = array.centers();
        let pairs: Vec<(usize, usize)> = (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .collect();
        let mut f = DMatrix::zeros(pairs.len(), 2);
        let mut offsets = Vec::with_capacity(pairs.len());
        for (row, &(i, j)) in pairs.iter().enumerate() {
            let (ci, cj) = (centers[i], centers[j]);
            f[(row, 0)] = 2.0 * (cj.x - ci.x);
            f[(row, 1)] = 2.0 * (cj.y - ci.y);
            offsets.push(cj.norm_sq() - ci.norm_sq());
        }
        let pinv = full_column_rank_pinv(&f)?.matrix;
        Ok(Self {
            array: array.clone(),
            pairs,
            pinv,
            offsets,
        })
    }

    pub fn solve(&self, meas: &PowerMeasurements) -> Result<TrackingEstimate> {
        meas.check(&self.array)?;
        let area = self.array.receiver().area();
        let mut clamped = 0;
        let d2: Vec<f64> = self
            .array
            .beams()
            .iter()
            .zip(meas.values())
            .map(|(beam, &p)| {
                let d = estimate_distance(p, beam, area);
                if d.clamp != Clamp::None {
                    clamped += 1;
                }
                d.distance * d.distance
            })
            .collect();
        let h = DVector::from_iterator(
            self.pairs.len(),
            self.pairs
                .iter()
                .zip(&self.offsets)
                .map(|(&(i, j), off)| d2[i] - d2[j] + off),
        );
        let sol = &self.pinv * h;
        Ok(TrackingEstimate {
            point: Vec2::new(sol[0], sol[1]),
            method: TrackingMethod::Multilateration,
            log_likelihood: None,
            clamped,
        })
    }
}

/// One-shot multilateration; see [`MultilaterationSolver`] for repeated use.
pub fn track_multilateration(meas: &PowerMeasurements, array: &BeaconArray) -> Result<TrackingEstimate> {
    MultilaterationSolver::new(array)?.solve(meas)
}

/// Rows `(dP_i/dx, dP_i/dy)` of the received-power Jacobian at `point`.
pub fn jacobian(point: Vec2, array: &BeaconArray) -> Vec<[f64; 2]> {
    array
        .beams()
        .iter()
        .map(|b| {
            let w2 = b.width() * b.width();
            let d = point - b.center();
            let p = received_power(b, array.receiver(), point);
            let k = -4.0 * p / w2;
            [k * d.x, k * d.y]
        })
        .collect()
}

fn jacobian_matrix(point: Vec2, array: &BeaconArray) -> DMatrix<f64> {
    let rows = jacobian(point, array);
    DMatrix::from_fn(rows.len(), 2, |r, c| rows[r][c])
}

/// `trace((U+)^T U+)` for the Jacobian `U` at `point`, computed from the
/// pseudo-inverse entries and, independently, as the sum of `1/s^2` over the
/// singular values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceCheck {
    pub from_pinv: f64,
    pub from_singular_values: f64,
}

pub fn error_trace(point: Vec2, array: &BeaconArray) -> Result<TraceCheck> {
    let u = jacobian_matrix(point, array);
    let p = pseudo_inverse(&u);
    if p.rank < 2 {
        return Err(Error::RankDeficient { rank: p.rank });
    }
    let from_pinv = p.matrix.iter().map(|v| v * v).sum();
    let from_singular_values = p.singular_values.iter().take(2).map(|s| 1.0 / (s * s)).sum();
    Ok(TraceCheck {
        from_pinv,
        from_singular_values,
    })
}

/// Root-mean-square position error implied by independent power noise of
/// standard deviation `sigma_n`: `sigma_n * sqrt(trace((U+)^T U+))`.
pub fn theoretical_error(point: Vec2, array: &BeaconArray, noise: &NoiseSpec) -> Result<f64> {
    Ok(noise.sigma_n() * error_trace(point, array)?.from_pinv.sqrt())
}
