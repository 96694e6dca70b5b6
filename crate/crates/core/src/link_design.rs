//! Closed-form link budget for the main laser.
//!
//! Two constraints bound the spot size `w_z`: the average received power must
//! stay above `eta`, and the expected outage probability (received power below
//! `gamma_th`, averaged over target motion and pointing error) must stay below
//! `xi`. Every function takes the product `aA` of the source power coefficient
//! and the receiver area.
//!
//! Infeasibility is reported as an empty [`Interval`], never as an error, so
//! parameter sweeps run to completion.

use std::f64::consts::{E, PI};

use serde::{Deserialize, Serialize};

use crate::error::{ensure_nonneg, ensure_positive, Error, Result};
use crate::quadrature::GaussLegendre;
use crate::specfun::{lambert_w, marcum_q1, LambertBranch, BRANCH_POINT};

/// Widths closer than this count as a closed interval, i.e. infeasible.
pub const INTERVAL_EPS: f64 = 1e-9;

const BRANCH_SNAP: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesignThresholds {
    eta: f64,
    gamma_th: f64,
    xi: f64,
}

impl DesignThresholds {
    pub fn new(eta: f64, gamma_th: f64, xi: f64) -> Result<Self> {
        ensure_positive("eta", eta)?;
        ensure_positive("gamma_th", gamma_th)?;
        if !(xi > 0.0 && xi < 1.0) {
            return Err(Error::domain("xi", xi, "outage ceiling must lie in (0, 1)"));
        }
        Ok(Self { eta, gamma_th, xi })
    }

    /// Average-power floor.
    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// Received-power threshold defining the feasible region.
    pub fn gamma_th(&self) -> f64 {
        self.gamma_th
    }

    /// Expected-outage ceiling.
    pub fn xi(&self) -> f64 {
        self.xi
    }
}

/// Open interval of widths (or angles). `Empty` marks an infeasible constraint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Interval {
    Empty,
    Open { lo: f64, hi: f64 },
}

impl Interval {
    pub fn open(lo: f64, hi: f64) -> Self {
        if lo <= hi {
            Interval::Open { lo, hi }
        } else {
            Interval::Empty
        }
    }

    pub fn bounds(&self) -> Option<(f64, f64)> {
        match *self {
            Interval::Empty => None,
            Interval::Open { lo, hi } => Some((lo, hi)),
        }
    }

    /// True when no value satisfies the strict inequalities. Endpoints within
    /// [`INTERVAL_EPS`] of each other count as empty.
    pub fn is_empty(&self) -> bool {
        match *self {
            Interval::Empty => true,
            Interval::Open { lo, hi } => hi - lo <= INTERVAL_EPS,
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        match *self {
            Interval::Empty => false,
            Interval::Open { lo, hi } => lo < x && x < hi,
        }
    }

    pub fn intersect(&self, other: &Interval) -> Interval {
        match (self.bounds(), other.bounds()) {
            (Some((a, b)), Some((c, d))) => Interval::open(a.max(c), b.min(d)),
            _ => Interval::Empty,
        }
    }

    pub fn scale(&self, k: f64) -> Interval {
        match self.bounds() {
            Some((lo, hi)) if k >= 0.0 => Interval::open(lo * k, hi * k),
            Some((lo, hi)) => Interval::open(hi * k, lo * k),
            None => Interval::Empty,
        }
    }

    pub fn midpoint(&self) -> Option<f64> {
        self.bounds().map(|(lo, hi)| 0.5 * (lo + hi))
    }
}

/// Largest width for which the beam centre itself clears `gamma_th`:
/// `sqrt(2 aA / (pi gamma_th))`.
pub fn max_feasible_width(a_a: f64, gamma_th: f64) -> f64 {
    (2.0 * a_a / (PI * gamma_th)).sqrt()
}

/// Mean received power with Brownian target motion and Rayleigh pointing error.
pub fn average_power(a_a: f64, sigma_p: f64, sigma_t: f64, w_z: f64) -> Result<f64> {
    ensure_positive("aA", a_a)?;
    ensure_nonneg("sigma_p", sigma_p)?;
    ensure_nonneg("sigma_t", sigma_t)?;
    ensure_positive("w_z", w_z)?;
    Ok(2.0 * a_a / (PI * (4.0 * sigma_p * sigma_p + 4.0 * sigma_t * sigma_t + w_z * w_z)))
}

/// Widths keeping [`average_power`] above `eta`: `(0, sqrt(2aA/(pi eta) - 4 s2))`.
pub fn constraint_average_power(
    a_a: f64,
    sigma_p: f64,
    sigma_t: f64,
    thr: &DesignThresholds,
) -> Result<Interval> {
    ensure_positive("aA", a_a)?;
    ensure_nonneg("sigma_p", sigma_p)?;
    ensure_nonneg("sigma_t", sigma_t)?;
    let radicand = 2.0 * a_a / (PI * thr.eta) - 4.0 * (sigma_p * sigma_p + sigma_t * sigma_t);
    if radicand <= 0.0 {
        return Ok(Interval::Empty);
    }
    Ok(Interval::open(0.0, radicand.sqrt()))
}

/// Radius of the disk around the beam centre where received power exceeds
/// `gamma_th`.
pub fn feasible_radius(a_a: f64, gamma_th: f64, w_z: f64) -> Result<f64> {
    ensure_positive("aA", a_a)?;
    ensure_positive("gamma_th", gamma_th)?;
    ensure_positive("w_z", w_z)?;
    let log_ratio = (2.0 * a_a / (PI * w_z * w_z * gamma_th)).ln();
    if log_ratio < -1e-12 {
        return Err(Error::domain(
            "w_z",
            w_z,
            "spot too wide: peak power never exceeds gamma_th",
        ));
    }
    Ok(w_z * (0.5 * log_ratio.max(0.0)).sqrt())
}

/// Outage probability for a given pointing error `r`: `Q1(r/sigma_t, r_out/sigma_t)`.
pub fn outage_probability(r: f64, sigma_t: f64, w_z: f64, a_a: f64, gamma_th: f64) -> Result<f64> {
    ensure_nonneg("r", r)?;
    ensure_positive("sigma_t", sigma_t)?;
    let r_out = feasible_radius(a_a, gamma_th, w_z)?;
    marcum_q1(r / sigma_t, r_out / sigma_t)
}

/// Outage probability averaged over Rayleigh pointing error, closed form.
pub fn expected_outage(w_z: f64, a_a: f64, gamma_th: f64, sigma_t: f64, sigma_p: f64) -> Result<f64> {
    ensure_positive("w_z", w_z)?;
    ensure_positive("aA", a_a)?;
    ensure_positive("gamma_th", gamma_th)?;
    ensure_nonneg("sigma_t", sigma_t)?;
    ensure_nonneg("sigma_p", sigma_p)?;
    let s2 = sigma_t * sigma_t + sigma_p * sigma_p;
    let log_ratio = (PI * w_z * w_z * gamma_th / (2.0 * a_a)).ln();
    if log_ratio > 1e-12 {
        return Err(Error::domain(
            "w_z",
            w_z,
            "spot too wide: peak power never exceeds gamma_th",
        ));
    }
    if s2 == 0.0 {
        // A target pinned to the beam centre is in outage only on the boundary.
        return Ok(if log_ratio < 0.0 { 0.0 } else { 1.0 });
    }
    Ok((w_z * w_z / (4.0 * s2) * log_ratio.min(0.0)).exp())
}

/// The same expectation computed by integrating the Marcum-Q outage against
/// the Rayleigh pointing-error density. Independent of [`expected_outage`];
/// used as its validation route.
pub fn expected_outage_numeric(
    w_z: f64,
    a_a: f64,
    gamma_th: f64,
    sigma_t: f64,
    sigma_p: f64,
) -> Result<f64> {
    ensure_positive("sigma_t", sigma_t)?;
    ensure_nonneg("sigma_p", sigma_p)?;
    let r_out = feasible_radius(a_a, gamma_th, w_z)?;
    let b = r_out / sigma_t;
    if sigma_p == 0.0 {
        return marcum_q1(0.0, b);
    }
    let rule = GaussLegendre::new(20);
    let sp2 = sigma_p * sigma_p;
    let upper = 12.0 * sigma_p;
    let mut err = None;
    let total = rule.integrate_composite(
        |r| {
            let pdf = r / sp2 * (-r * r / (2.0 * sp2)).exp();
            match marcum_q1(r / sigma_t, b) {
                Ok(q) => pdf * q,
                Err(e) => {
                    err.get_or_insert(e);
                    0.0
                }
            }
        },
        0.0,
        upper,
        24,
    );
    match err {
        Some(e) => Err(e),
        None => Ok(total.clamp(0.0, 1.0)),
    }
}

/// Width minimising [`expected_outage`]: `sqrt(2 aA / (pi e gamma_th))`.
/// Does not depend on the mobility or pointing spreads.
pub fn optimal_beam_width(a_a: f64, gamma_th: f64) -> Result<f64> {
    ensure_positive("aA", a_a)?;
    ensure_positive("gamma_th", gamma_th)?;
    Ok((2.0 * a_a / (PI * E * gamma_th)).sqrt())
}

/// Smallest expected outage any width can reach.
pub fn min_expected_outage(a_a: f64, gamma_th: f64, sigma_t: f64, sigma_p: f64) -> Result<f64> {
    let w = optimal_beam_width(a_a, gamma_th)?;
    expected_outage(w, a_a, gamma_th, sigma_t, sigma_p)
}

/// Lambert-W argument of the outage constraint,
/// `2 pi gamma_th (sigma_t^2 + sigma_p^2) ln(xi) / aA`.
pub fn outage_branch_argument(a_a: f64, gamma_th: f64, sigma_t: f64, sigma_p: f64, xi: f64) -> f64 {
    2.0 * PI * gamma_th * (sigma_t * sigma_t + sigma_p * sigma_p) * xi.ln() / a_a
}

/// Widths keeping [`expected_outage`] below `xi`.
///
/// Empty when `xi` is below what even the optimal width attains.
pub fn constraint_outage(a_a: f64, gamma_th: f64, sigma_t: f64, sigma_p: f64, xi: f64) -> Result<Interval> {
    ensure_positive("aA", a_a)?;
    ensure_positive("gamma_th", gamma_th)?;
    ensure_nonneg("sigma_t", sigma_t)?;
    ensure_nonneg("sigma_p", sigma_p)?;
    if !(xi > 0.0 && xi < 1.0) {
        return Err(Error::domain("xi", xi, "outage ceiling must lie in (0, 1)"));
    }
    let scale = max_feasible_width(a_a, gamma_th);
    let mut u = outage_branch_argument(a_a, gamma_th, sigma_t, sigma_p, xi);
    if (u - BRANCH_POINT).abs() <= BRANCH_SNAP {
        u = BRANCH_POINT;
    } else if u < BRANCH_POINT {
        return Ok(Interval::Empty);
    }
    if u == 0.0 {
        return Ok(Interval::open(0.0, scale));
    }
    let lo = scale * (0.5 * lambert_w(u, LambertBranch::NegativeOne)?).exp();
    let hi = scale * (0.5 * lambert_w(u, LambertBranch::Principal)?).exp();
    Ok(Interval::open(lo, hi))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesignRule {
    /// Widths meeting the average-power floor.
    pub average_power: Interval,
    /// Widths meeting the outage ceiling.
    pub outage: Interval,
    /// Intersection of the two.
    pub width: Interval,
    /// `width` divided by the link distance.
    pub divergence: Interval,
    pub optimal_width: f64,
    pub min_expected_outage: f64,
}

impl DesignRule {
    pub fn is_feasible(&self) -> bool {
        !self.width.is_empty()
    }
}

/// Combined spot-size rule and the matching divergence-angle range at distance `z`.
pub fn design_rule(
    a_a: f64,
    sigma_t: f64,
    sigma_p: f64,
    thr: &DesignThresholds,
    z: f64,
) -> Result<DesignRule> {
    ensure_positive("z", z)?;
    let average_power = constraint_average_power(a_a, sigma_p, sigma_t, thr)?;
    let outage = constraint_outage(a_a, thr.gamma_th, sigma_t, sigma_p, thr.xi)?;
    let width = average_power.intersect(&outage);
    let width = if width.is_empty() { Interval::Empty } else { width };
    Ok(DesignRule {
        average_power,
        outage,
        width,
        divergence: width.scale(1.0 / z),
        optimal_width: optimal_beam_width(a_a, thr.gamma_th)?,
        min_expected_outage: min_expected_outage(a_a, thr.gamma_th, sigma_t, sigma_p)?,
    })
}
