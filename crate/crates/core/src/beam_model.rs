//! Gaussian spot geometry on the reference plane.
//!
//! All lengths are meters and all powers watts. A beam is described by its
//! power coefficient `a`, its width `w_z` at the link distance and the spot
//! centre; the receiver by its collecting area `A`.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{ensure_positive, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn norm_sq(self) -> f64 {
        self.x * self.x + self.y * self.y
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: Vec2) -> f64 {
        (self - other).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, k: f64) -> Vec2 {
        Vec2::new(self.x * k, self.y * k)
    }
}

impl From<(f64, f64)> for Vec2 {
    fn from((x, y): (f64, f64)) -> Self {
        Vec2::new(x, y)
    }
}

/// One laser source as seen on the reference plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamSpec {
    power_coeff_a: f64,
    beam_width_wz: f64,
    center: Vec2,
}

impl BeamSpec {
    pub fn new(power_coeff_a: f64, beam_width_wz: f64, center: Vec2) -> Result<Self> {
        ensure_positive("power_coeff_a", power_coeff_a)?;
        ensure_positive("beam_width_wz", beam_width_wz)?;
        if !center.is_finite() {
            return Err(Error::Invalid(format!("beam center {center:?} is not finite")));
        }
        Ok(Self {
            power_coeff_a,
            beam_width_wz,
            center,
        })
    }

    pub fn power_coeff(&self) -> f64 {
        self.power_coeff_a
    }

    pub fn width(&self) -> f64 {
        self.beam_width_wz
    }

    pub fn center(&self) -> Vec2 {
        self.center
    }

    pub fn with_center(mut self, center: Vec2) -> Self {
        self.center = center;
        self
    }

    /// Intensity at the spot centre, `2a / (pi w^2)`.
    pub fn peak_intensity(&self) -> f64 {
        2.0 * self.power_coeff_a / (PI * self.beam_width_wz * self.beam_width_wz)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReceiverSpec {
    area_a: f64,
}

impl ReceiverSpec {
    pub fn new(area_a: f64) -> Result<Self> {
        ensure_positive("area_A", area_a)?;
        Ok(Self { area_a })
    }

    pub fn area(&self) -> f64 {
        self.area_a
    }

    /// The point-receiver approximation holds only when the aperture is small
    /// against the spot. Returns false when `A > w_z^2 / 100`.
    pub fn is_small_against(&self, beam: &BeamSpec) -> bool {
        self.area_a <= beam.width() * beam.width() / 100.0
    }
}

/// Beam width at distance `z` for divergence angle `phi`: `w_z = phi * z`.
pub fn beam_width_at(divergence_phi: f64, distance_z: f64) -> Result<f64> {
    ensure_positive("divergence_phi", divergence_phi)?;
    ensure_positive("distance_z", distance_z)?;
    Ok(divergence_phi * distance_z)
}

pub fn intensity(beam: &BeamSpec, point: Vec2) -> f64 {
    let w2 = beam.beam_width_wz * beam.beam_width_wz;
    beam.peak_intensity() * (-2.0 * (point - beam.center).norm_sq() / w2).exp()
}

pub fn received_power(beam: &BeamSpec, rx: &ReceiverSpec, point: Vec2) -> f64 {
    rx.area_a * intensity(beam, point)
}

/// Distance `l'` on the reference plane of a target that moved `l` metres at
/// elevation `angle` out of that plane, seen from a source at distance `z`.
pub fn project_to_reference(z: f64, l: f64, elevation_angle: f64) -> Result<f64> {
    ensure_positive("z", z)?;
    if !l.is_finite() || !elevation_angle.is_finite() {
        return Err(Error::domain("l", l, "l and angle must be finite"));
    }
    let denom = z + l * elevation_angle.sin();
    if denom <= 0.0 {
        return Err(Error::domain(
            "z + l sin(angle)",
            denom,
            "target is behind the source plane",
        ));
    }
    Ok(z * l * elevation_angle.cos() / denom)
}

/// Intensity at the moved target, on the target plane, relative to the
/// intensity at the previous (beam-centre) point. `w_z` is the width at `z`.
pub fn target_plane_ratio(z: f64, l: f64, angle: f64, w_z: f64) -> Result<f64> {
    ensure_positive("w_z", w_z)?;
    let scale = 1.0 + (l / z) * angle.sin();
    if scale <= 0.0 {
        return Err(Error::domain("z + l sin(angle)", z * scale, "target is behind the source plane"));
    }
    let phi = w_z / z;
    let spread = phi * (z + l * angle.sin());
    let lateral = l * angle.cos();
    Ok((-2.0 * lateral * lateral / (spread * spread)).exp() / (scale * scale))
}

/// Same ratio for the target's projection onto the reference plane.
pub fn reference_plane_ratio(z: f64, l: f64, angle: f64, w_z: f64) -> Result<f64> {
    ensure_positive("w_z", w_z)?;
    let l_ref = project_to_reference(z, l, angle)?;
    Ok((-2.0 * l_ref * l_ref / (w_z * w_z)).exp())
}

/// Far-field value both plane ratios approach as `z` grows.
pub fn far_field_ratio(l: f64, angle: f64, w_z: f64) -> f64 {
    let lateral = l * angle.cos();
    (-2.0 * lateral * lateral / (w_z * w_z)).exp()
}
