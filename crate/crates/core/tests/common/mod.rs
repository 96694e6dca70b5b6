#![allow(dead_code)]

use std::f64::consts::PI;
use std::path::PathBuf;

use beamtrack::quadrature::GaussLegendre;
use beamtrack::sim_harness::{Environment, MainBeam};
use beamtrack::tracking::SearchRegion;
use beamtrack::{
    BeaconArray, DesignThresholds, ExperimentConfig, GridSearchConfig, MobilitySpec, NoiseSpec, PointingSpec, Vec2,
};

pub const Z: f64 = 100.0;
pub const AA: f64 = 80.0;

pub fn square(half: f64) -> Vec<Vec2> {
    vec![
        Vec2::new(half, half),
        Vec2::new(-half, half),
        Vec2::new(-half, -half),
        Vec2::new(half, -half),
    ]
}

pub fn table_one_thresholds() -> DesignThresholds {
    DesignThresholds::new(1.0, 1.0, 0.1).unwrap()
}

/// Four beacons on the unit square, narrow beams, exhaustive search.
pub fn grid_mle_array() -> BeaconArray {
    BeaconArray::uniform(AA, 2.0, &square(1.0), 1.0).unwrap()
}

pub fn grid_mle_search(array: &BeaconArray) -> GridSearchConfig {
    GridSearchConfig::new(SearchRegion::bounding(&array.centers()), 0.01).unwrap()
}

/// Four beacons on the unit square, wide beams, for multilateration.
pub fn multilateration_array() -> BeaconArray {
    BeaconArray::uniform(AA, 4.0, &square(1.0), 1.0).unwrap()
}

pub const TABLE_POINTS: [(f64, f64); 6] = [(0.0, 0.0), (-0.5, 0.5), (-1.0, -1.0), (0.0, -2.0), (2.0, -2.0), (1.0, 0.0)];

pub fn tracking_config(array: BeaconArray, sigma_n: f64, trials: usize, seed: u64) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(Z);
    cfg.array = Some(array);
    cfg.environment.noise = Some(NoiseSpec::new(sigma_n).unwrap());
    cfg.trial_count = trials;
    cfg.master_seed = seed;
    cfg
}

pub fn trajectory_config(a_a: f64, w_z: f64, sigma_t: f64, sigma_p: f64, seed: u64) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(Z);
    cfg.environment = Environment {
        mobility: Some(MobilitySpec::new(sigma_t).unwrap()),
        pointing: Some(PointingSpec::new(sigma_p).unwrap()),
        noise: None,
    };
    cfg.thresholds = Some(table_one_thresholds());
    cfg.main_beam = Some(MainBeam { a_a, w_z: Some(w_z) });
    cfg.master_seed = seed;
    cfg
}

pub fn configs_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs")
}

/// Integral of a product of the normal density N(mu, s^2) and the Gaussian
/// bump exp(-2 (x - c)^2 / w^2), done by quadrature over the window where
/// their product carries its mass.
fn gauss_bump_integral(rule: &GaussLegendre, mu: f64, s: f64, c: f64, w: f64) -> f64 {
    let prec_a = 1.0 / (s * s);
    let prec_b = 4.0 / (w * w);
    let centre = (mu * prec_a + c * prec_b) / (prec_a + prec_b);
    let spread = 1.0 / (prec_a + prec_b).sqrt();
    let f = |x: f64| {
        let density = (-(x - mu) * (x - mu) / (2.0 * s * s)).exp() / (s * (2.0 * PI).sqrt());
        density * (-2.0 * (x - c) * (x - c) / (w * w)).exp()
    };
    rule.integrate_composite(f, centre - 14.0 * spread, centre + 14.0 * spread, 8)
}

/// Mean received power by direct integration over the pointing radius and
/// the two displacement axes of the target. The pointing offset is placed on
/// the x axis; its angle does not matter by rotational symmetry.
pub fn average_power_oracle(a_a: f64, sigma_p: f64, sigma_t: f64, w: f64) -> f64 {
    let rule = GaussLegendre::new(24);
    let peak = 2.0 * a_a / (PI * w * w);
    let y_factor = gauss_bump_integral(&rule, 0.0, sigma_t, 0.0, w);
    if sigma_p == 0.0 {
        return peak * y_factor * y_factor;
    }
    let sp2 = sigma_p * sigma_p;
    let radial = rule.integrate_composite(
        |r| {
            let pdf = r / sp2 * (-r * r / (2.0 * sp2)).exp();
            pdf * gauss_bump_integral(&rule, 0.0, sigma_t, r, w)
        },
        0.0,
        14.0 * sigma_p,
        32,
    );
    peak * radial * y_factor
}

/// Minimiser of a unimodal function on `[lo, hi]` by golden-section search.
pub fn golden_section<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - g * (hi - lo);
    let mut b = lo + g * (hi - lo);
    let (mut fa, mut fb) = (f(a), f(b));
    while hi - lo > tol {
        if fa < fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - g * (hi - lo);
            fa = f(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + g * (hi - lo);
            fb = f(b);
        }
    }
    0.5 * (lo + hi)
}

/// Kolmogorov-Smirnov statistic of a sample against a continuous CDF.
pub fn ks_statistic<F: Fn(f64) -> f64>(mut xs: Vec<f64>, cdf: F) -> f64 {
    xs.sort_by(|a, b| a.total_cmp(b));
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let c = cdf(x);
            (c - i as f64 / n).abs().max(((i + 1) as f64 / n - c).abs())
        })
        .fold(0.0, f64::max)
}
