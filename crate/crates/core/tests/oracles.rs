mod common;

use std::f64::consts::PI;

use beamtrack::beam_model::{project_to_reference, reference_plane_ratio, target_plane_ratio};
use beamtrack::link_design::average_power;
use beamtrack::stochastic::sample_pointing_offset;
use beamtrack::{PointingSpec, RandomStream};

use common::*;

type V3 = [f64; 3];

fn sub(a: V3, b: V3) -> V3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn dot(a: V3, b: V3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn scale(a: V3, k: f64) -> V3 {
    [a[0] * k, a[1] * k, a[2] * k]
}

/// Where the ray from `origin` through `through` meets the plane with point
/// `p0` and normal `n`.
fn ray_plane(origin: V3, through: V3, p0: V3, n: V3) -> V3 {
    let d = sub(through, origin);
    let t = dot(n, sub(p0, origin)) / dot(n, d);
    let hit = scale(d, t);
    [origin[0] + hit[0], origin[1] + hit[1], origin[2] + hit[2]]
}

#[test]
fn projection_matches_ray_plane_geometry() {
    // Source at the origin looking along +z; reference plane z = const passes
    // through the previous target position on the axis.
    let mut rng = RandomStream::new(4);
    for _ in 0..500 {
        let z = 5.0 + 300.0 * rng.uniform();
        let l = 10.0 * rng.uniform();
        let elev = (rng.uniform() - 0.5) * PI * 0.98;
        let azimuth = 2.0 * PI * rng.uniform();
        let prev = [0.0, 0.0, z];
        // Move `l` metres: `l cos(elev)` within the plane, `l sin(elev)` away from the source.
        let lateral = l * elev.cos();
        let target = [lateral * azimuth.cos(), lateral * azimuth.sin(), z + l * elev.sin()];
        if target[2] <= 0.0 {
            continue;
        }
        let hit = ray_plane([0.0; 3], target, prev, [0.0, 0.0, 1.0]);
        let want = dot(sub(hit, prev), sub(hit, prev)).sqrt();
        let got = project_to_reference(z, l, elev).unwrap();
        assert!((got - want).abs() <= 1e-10 * want.max(1.0), "z={z} l={l} elev={elev}: {got} vs {want}");
    }
}

#[test]
fn plane_ratios_agree_when_target_stays_in_plane() {
    for &(z, l, w) in &[(100.0, 1.0, 2.0), (10.0, 3.0, 4.0)] {
        let a = reference_plane_ratio(z, l, 0.0, w).unwrap();
        let b = target_plane_ratio(z, l, 0.0, w).unwrap();
        assert!((a - b).abs() < 1e-14);
    }
    // Closer to the source the two planes disagree.
    let near = reference_plane_ratio(2.0, 1.5, 0.8, 1.0).unwrap();
    let near_t = target_plane_ratio(2.0, 1.5, 0.8, 1.0).unwrap();
    assert!((near - near_t).abs() > 1e-3);
}

#[test]
fn rayleigh_radius_passes_ks() {
    let n = 10_000;
    for (seed, sigma) in [(1u64, 1.0), (2, 0.3), (3, 2.5)] {
        let pt = PointingSpec::new(sigma).unwrap();
        let mut rng = RandomStream::new(seed);
        let offsets: Vec<_> = (0..n).map(|_| sample_pointing_offset(&pt, &mut rng)).collect();
        let crit = 1.628 / (n as f64).sqrt();

        let radii = offsets.iter().map(|o| o.norm()).collect();
        let d = ks_statistic(radii, |r| 1.0 - (-r * r / (2.0 * sigma * sigma)).exp());
        assert!(d < crit, "radius KS {d} >= {crit}");
    }
}

#[test]
fn pointing_angle_ks_rejections_stay_at_nominal_rate() {
    // 200 independent streams tested at the 5% level: about 10 rejections are
    // expected, and more than 20 would be a 3-sigma excess.
    let (streams, n) = (200, 2_000);
    let crit = 1.358 / (n as f64).sqrt();
    let pt = PointingSpec::new(1.0).unwrap();
    let rejected = (0..streams)
        .filter(|&seed| {
            let mut rng = RandomStream::new(1_000 + seed);
            let angles = (0..n)
                .map(|_| {
                    let o = sample_pointing_offset(&pt, &mut rng);
                    o.y.atan2(o.x) + PI
                })
                .collect();
            ks_statistic(angles, |t| t / (2.0 * PI)) >= crit
        })
        .count();
    assert!(rejected <= 20, "{rejected} of {streams} streams rejected");
}

#[test]
fn average_power_matches_triple_integral() {
    for &(a_a, sp, st, w) in &[(80.0, 1.0, 1.0, 4.33), (40.0, 0.2, 1.5, 0.3), (160.0, 2.0, 0.5, 9.0), (1.0, 0.0, 1.0, 1.0)] {
        let closed = average_power(a_a, sp, st, w).unwrap();
        let oracle = average_power_oracle(a_a, sp, st, w);
        assert!((closed / oracle - 1.0).abs() < 1e-9, "{closed} vs {oracle}");
    }
}

#[test]
fn golden_section_finds_parabola_minimum() {
    let x = golden_section(|x| (x - 1.234) * (x - 1.234), 0.0, 5.0, 1e-10);
    assert!((x - 1.234).abs() < 1e-8);
}
