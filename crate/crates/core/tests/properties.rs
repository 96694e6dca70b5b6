mod common;

use std::f64::consts::PI;

use beamtrack::beam_model::{intensity, received_power};
use beamtrack::link_design::{average_power, constraint_outage, expected_outage, max_feasible_width};
use beamtrack::sim_harness::run_tracking_experiment;
use beamtrack::specfun::{lambert_w, marcum_q1, BRANCH_POINT};
use beamtrack::tracking::{jacobian, track_mle_grid, track_multilateration, SearchRegion};
use beamtrack::{BeaconArray, BeamSpec, GridSearchConfig, LambertBranch, NoiseSpec, ReceiverSpec, TrackingMethod, Vec2};
use proptest::prelude::*;

use common::*;

fn residual(w: f64, x: f64) -> f64 {
    (w * w.exp() - x).abs() / x.abs().max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn intensity_is_radially_symmetric(
        a in 0.1f64..200.0,
        w in 0.1f64..10.0,
        cx in -5.0f64..5.0,
        cy in -5.0f64..5.0,
        r in 0.0f64..20.0,
        t1 in 0.0f64..(2.0 * PI),
        t2 in 0.0f64..(2.0 * PI),
    ) {
        let c = Vec2::new(cx, cy);
        let beam = BeamSpec::new(a, w, c).unwrap();
        let p1 = intensity(&beam, c + Vec2::new(r * t1.cos(), r * t1.sin()));
        let p2 = intensity(&beam, c + Vec2::new(r * t2.cos(), r * t2.sin()));
        prop_assert!((p1 - p2).abs() <= 1e-9 * p1.max(p2) + f64::MIN_POSITIVE);
        let rx = ReceiverSpec::new(0.5).unwrap();
        prop_assert!((received_power(&beam, &rx, c) - 0.5 * beam.peak_intensity()).abs() <= 1e-12 * beam.peak_intensity());
    }

    #[test]
    fn lambert_branches_invert_and_order(t in 1e-9f64..1.0) {
        let x = BRANCH_POINT * (1.0 - t);
        let w0 = lambert_w(x, LambertBranch::Principal).unwrap();
        let wm1 = lambert_w(x, LambertBranch::NegativeOne).unwrap();
        prop_assert!(residual(w0, x) <= 1e-12, "W0 residual at {}", x);
        prop_assert!(residual(wm1, x) <= 1e-12, "W-1 residual at {}", x);
        prop_assert!(w0 >= -1.0 && wm1 <= -1.0);
        prop_assert!(w0 >= wm1);
    }

    #[test]
    fn lambert_principal_on_positive_axis(e in -8.0f64..8.0) {
        let x = 10f64.powf(e);
        let w = lambert_w(x, LambertBranch::Principal).unwrap();
        prop_assert!(residual(w, x) <= 1e-12);
        prop_assert!(lambert_w(x, LambertBranch::NegativeOne).is_err());
    }

    #[test]
    fn marcum_q_is_monotone(a in 0.0f64..15.0, b in 0.0f64..15.0, da in 0.01f64..2.0, db in 0.01f64..2.0) {
        let q = marcum_q1(a, b).unwrap();
        prop_assert!((0.0..=1.0).contains(&q));
        prop_assert!(marcum_q1(a + da, b).unwrap() >= q - 1e-15);
        prop_assert!(marcum_q1(a, b + db).unwrap() <= q + 1e-15);
    }

    #[test]
    fn noiseless_multilateration_recovers_targets_in_hull(
        half in 0.5f64..3.0,
        wk in 1.5f64..4.0,
        a in 10.0f64..200.0,
        u in -1.0f64..1.0,
        v in -1.0f64..1.0,
    ) {
        let array = BeaconArray::uniform(a, wk * half, &square(half), 1.0).unwrap();
        let t = Vec2::new(u * half, v * half);
        let est = track_multilateration(&array.noiseless_powers(t), &array).unwrap();
        prop_assert!(est.point.distance(t) <= 1e-9, "{:?} vs {:?}", est.point, t);
        prop_assert_eq!(est.clamped, 0);
    }

    #[test]
    fn jacobian_matches_central_differences(
        cs in proptest::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 3..6),
        w in 1.0f64..5.0,
        px in -2.0f64..2.0,
        py in -2.0f64..2.0,
    ) {
        let centers: Vec<Vec2> = cs.iter().map(|&(x, y)| Vec2::new(x, y)).collect();
        let array = BeaconArray::uniform(80.0, w, &centers, 1.0).unwrap();
        let p = Vec2::new(px, py);
        let h = 1e-6;
        for (i, row) in jacobian(p, &array).iter().enumerate() {
            let f = |q: Vec2| array.noiseless_powers(q).0[i];
            let fx = (f(p + Vec2::new(h, 0.0)) - f(p - Vec2::new(h, 0.0))) / (2.0 * h);
            let fy = (f(p + Vec2::new(0.0, h)) - f(p - Vec2::new(0.0, h))) / (2.0 * h);
            let scale = row[0].hypot(row[1]);
            prop_assume!(scale > 1e-6);
            prop_assert!((row[0] - fx).hypot(row[1] - fy) <= 1e-4 * scale);
        }
    }

    #[test]
    fn outage_interval_meets_ceiling(a_a in 20.0f64..200.0, s2 in 0.5f64..4.0, xi in 0.05f64..0.6, t in 0.01f64..0.99) {
        let s = (0.5 * s2).sqrt();
        let iv = constraint_outage(a_a, 1.0, s, s, xi).unwrap();
        if let Some((lo, hi)) = iv.bounds() {
            let w = lo + t * (hi - lo);
            prop_assert!(expected_outage(w, a_a, 1.0, s, s).unwrap() <= xi * (1.0 + 1e-9));
            prop_assert!(hi <= max_feasible_width(a_a, 1.0) * (1.0 + 1e-12));
        }
    }

    #[test]
    fn average_power_falls_with_spread(a_a in 1.0f64..200.0, w in 0.1f64..10.0, st in 0.1f64..3.0, sp in 0.0f64..3.0, d in 0.01f64..1.0) {
        let p = average_power(a_a, sp, st, w).unwrap();
        prop_assert!(average_power(a_a, sp + d, st, w).unwrap() < p);
        prop_assert!(average_power(a_a, sp, st + d, w).unwrap() < p);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn grid_mle_recovers_grid_nodes(ix in 0usize..=40, iy in 0usize..=40, w in 1.5f64..3.0) {
        let array = BeaconArray::uniform(80.0, w, &square(1.0), 1.0).unwrap();
        let region = SearchRegion { x_min: -1.0, x_max: 1.0, y_min: -1.0, y_max: 1.0 };
        let cfg = GridSearchConfig::new(region, 0.05).unwrap();
        let t = Vec2::new(-1.0 + ix as f64 * 0.05, -1.0 + iy as f64 * 0.05);
        let est = track_mle_grid(&array.noiseless_powers(t), &array, &NoiseSpec::new(0.01).unwrap(), &cfg).unwrap();
        prop_assert!(est.point.distance(t) < 1e-9, "{:?} vs {:?}", est.point, t);
    }

    #[test]
    fn seeded_experiments_are_bitwise_stable(seed in any::<u64>(), x in -1.0f64..1.0, y in -1.0f64..1.0) {
        let cfg = tracking_config(multilateration_array(), 0.01, 200, seed);
        let a = run_tracking_experiment(&cfg, Vec2::new(x, y), TrackingMethod::Multilateration).unwrap();
        let b = run_tracking_experiment(&cfg, Vec2::new(x, y), TrackingMethod::Multilateration).unwrap();
        prop_assert_eq!(a.mean_radial_error.to_bits(), b.mean_radial_error.to_bits());
        prop_assert_eq!(a.rms_error.to_bits(), b.rms_error.to_bits());
    }
}
