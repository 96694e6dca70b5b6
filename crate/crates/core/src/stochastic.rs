//! Random environment: Brownian target steps, Rayleigh pointing error and
//! additive Gaussian measurement noise, all drawn from a seeded stream.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::beam_model::Vec2;
use crate::error::{ensure_nonneg, ensure_positive, Result};

/// Per-axis spread of the target's position change over one feedback interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MobilitySpec {
    sigma_t: f64,
}

impl MobilitySpec {
    pub fn new(sigma_t: f64) -> Result<Self> {
        ensure_positive("sigma_t", sigma_t)?;
        Ok(Self { sigma_t })
    }

    pub fn sigma_t(&self) -> f64 {
        self.sigma_t
    }
}

/// Rayleigh scale of the main-beam pointing error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointingSpec {
    sigma_p: f64,
}

impl PointingSpec {
    pub fn new(sigma_p: f64) -> Result<Self> {
        ensure_nonneg("sigma_p", sigma_p)?;
        Ok(Self { sigma_p })
    }

    pub fn sigma_p(&self) -> f64 {
        self.sigma_p
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    sigma_n: f64,
}

impl NoiseSpec {
    pub fn new(sigma_n: f64) -> Result<Self> {
        ensure_nonneg("sigma_n", sigma_n)?;
        Ok(Self { sigma_n })
    }

    pub fn sigma_n(&self) -> f64 {
        self.sigma_n
    }

    pub fn scaled(&self, k: f64) -> Result<Self> {
        Self::new(self.sigma_n * k)
    }
}

/// Seeded, single-owner random stream.
///
/// Parallel trials never share a stream: each derives its own with
/// [`RandomStream::for_trial`], whose seed is
/// `splitmix64(master ^ splitmix64(trial_index))`.
#[derive(Debug, Clone)]
pub struct RandomStream {
    seed: u64,
    rng: ChaCha8Rng,
}

impl RandomStream {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn for_trial(master_seed: u64, trial_index: u64) -> Self {
        Self::new(trial_seed(master_seed, trial_index))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    /// Uniform on [0, 1).
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }
}

pub fn trial_seed(master_seed: u64, trial_index: u64) -> u64 {
    splitmix64(master_seed ^ splitmix64(trial_index))
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Brownian step: `prev` plus independent N(0, sigma_t^2) on each axis.
pub fn sample_target_step(prev: Vec2, mob: &MobilitySpec, rng: &mut RandomStream) -> Vec2 {
    let dx = rng.standard_normal() * mob.sigma_t;
    let dy = rng.standard_normal() * mob.sigma_t;
    prev + Vec2::new(dx, dy)
}

/// Pointing offset with Rayleigh(sigma_p) radius and uniform angle.
pub fn sample_pointing_offset(pt: &PointingSpec, rng: &mut RandomStream) -> Vec2 {
    let u = rng.uniform();
    let theta = 2.0 * PI * rng.uniform();
    let r = pt.sigma_p * (-2.0 * (1.0 - u).ln()).sqrt();
    Vec2::new(r * theta.cos(), r * theta.sin())
}

/// Additive measurement noise; may push a measured power below zero.
pub fn sample_noise(ns: &NoiseSpec, rng: &mut RandomStream) -> f64 {
    rng.standard_normal() * ns.sigma_n
}
