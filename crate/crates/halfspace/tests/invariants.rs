//! Property-based invariants: metric axioms, isometry invariance, bound
//! shapes, determinism of the samplers, and growth-rate recovery on
//! synthetic data.

use num_complex::Complex64;
use proptest::collection::vec;
use proptest::prelude::*;

use halfspace::group_orbits::{critical_exponent_estimate, orbital_count};
use halfspace::groups::bundled_group;
use halfspace::hyperbolic_core::{
    ball_volume, hyperbolic_distance, sample_ball, spectral_param, theta,
};
use halfspace::{Isometry, Point};

/// Random point with moderate horizontal extent and log-uniform height.
fn point_strategy(dim: usize) -> impl Strategy<Value = Point> {
    (-5.0..5.0_f64, -5.0..5.0_f64, -3.0..3.0_f64).prop_map(move |(u, v, w)| {
        let height = w.exp();
        match dim {
            2 => Point::new(&[u, height]).unwrap(),
            _ => Point::new(&[u, v, height]).unwrap(),
        }
    })
}

/// Random unit-determinant isometry: draw `a, b, c` and solve for `d`.
fn isometry_strategy(dim: usize) -> impl Strategy<Value = Isometry> {
    let entry = || -2.0..2.0_f64;
    (entry(), entry(), entry(), entry(), entry(), entry()).prop_filter_map(
        "|a| bounded away from zero",
        move |(ar, ai, br, bi, cr, ci)| {
            let (a, b, c) = if dim == 2 {
                (
                    Complex64::new(ar, 0.0),
                    Complex64::new(br, 0.0),
                    Complex64::new(cr, 0.0),
                )
            } else {
                (
                    Complex64::new(ar, ai),
                    Complex64::new(br, bi),
                    Complex64::new(cr, ci),
                )
            };
            if a.norm() < 0.3 {
                return None;
            }
            let d = (Complex64::new(1.0, 0.0) + b * c) / a;
            Isometry::new(dim, [a, b, c, d]).ok()
        },
    )
}

/// A dimension together with points and isometries drawn in it.
fn scene(
    n_points: usize,
    n_isometries: usize,
) -> impl Strategy<Value = (usize, Vec<Point>, Vec<Isometry>)> {
    (2usize..=3).prop_flat_map(move |dim| {
        (
            Just(dim),
            vec(point_strategy(dim), n_points),
            vec(isometry_strategy(dim), n_isometries),
        )
    })
}

fn max_coord_diff(p: &Point, q: &Point) -> f64 {
    p.coords()
        .iter()
        .zip(q.coords())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

proptest! {
    #[test]
    fn distance_is_symmetric_and_triangular((_dim, pts, _) in scene(3, 0)) {
        let (p, q, r) = (&pts[0], &pts[1], &pts[2]);
        let dpq = hyperbolic_distance(p, q).unwrap();
        let dqp = hyperbolic_distance(q, p).unwrap();
        prop_assert!((dpq - dqp).abs() <= 1e-12 * dpq.max(1.0));
        let dpr = hyperbolic_distance(p, r).unwrap();
        let dqr = hyperbolic_distance(q, r).unwrap();
        prop_assert!(dpr <= dpq + dqr + 1e-9);
        prop_assert!(dpq >= 0.0);
    }

    #[test]
    fn distance_is_isometry_invariant((_dim, pts, gs) in scene(2, 1)) {
        let g = &gs[0];
        let before = hyperbolic_distance(&pts[0], &pts[1]).unwrap();
        let after = hyperbolic_distance(
            &g.apply(&pts[0]).unwrap(),
            &g.apply(&pts[1]).unwrap(),
        )
        .unwrap();
        prop_assert!(
            (before - after).abs() <= 1e-8 * before.max(1.0),
            "distance moved from {before} to {after}"
        );
    }

    #[test]
    fn composition_matches_successive_application((_dim, pts, gs) in scene(1, 2)) {
        let (g, h, p) = (&gs[0], &gs[1], &pts[0]);
        let composed = g.compose(h).unwrap().apply(p).unwrap();
        let successive = g.apply(&h.apply(p).unwrap()).unwrap();
        prop_assert!(
            max_coord_diff(&composed, &successive) <= 1e-8 * (1.0 + composed.height()),
            "composition disagrees with successive application"
        );
        let round_trip = g.compose(&g.inverse()).unwrap().apply(p).unwrap();
        prop_assert!(max_coord_diff(&round_trip, p) <= 1e-8 * (1.0 + p.height()));
    }

    #[test]
    fn annulus_ratio_stays_within_bounds(
        dim in 2usize..=3,
        rho in 0.02..30.0_f64,
        fraction in 0.001..1.0_f64,
    ) {
        let r = (fraction * rho).max(1e-6);
        let value = theta(dim, rho, r).unwrap();
        let cap = 2.0_f64.powf((dim as f64 - 1.0) / 2.0);
        prop_assert!((0.0..=cap).contains(&value), "θ = {value} exceeds {cap}");
    }

    #[test]
    fn spectral_parameter_solves_its_quadratic(
        dim in 2usize..=3,
        lambda in 0.0..30.0_f64,
    ) {
        let n = dim as f64 - 1.0;
        let param = spectral_param(dim, lambda).unwrap();
        prop_assert!(param.residual() <= 1e-12 * lambda.max(1.0));
        prop_assert!(param.s.im <= 0.0);
        if lambda <= n * n / 4.0 {
            prop_assert!(param.s.im == 0.0);
            prop_assert!((0.0..=n / 2.0).contains(&param.s.re));
        }
    }

    #[test]
    fn ball_volume_is_monotone(
        dim in 2usize..=6,
        rho in 0.1..30.0_f64,
        bump in 0.01..5.0_f64,
    ) {
        let small = ball_volume(dim, rho).unwrap();
        let large = ball_volume(dim, rho + bump).unwrap();
        prop_assert!(small > 0.0);
        prop_assert!(large > small);
    }

    #[test]
    fn orbit_count_obeys_the_packing_bound(rho in 0.5..6.0_f64) {
        let group = bundled_group("cyclic-one").unwrap();
        let o = Point::basepoint(3).unwrap();
        let count = orbital_count(&group, &o, &o, rho).unwrap() as f64;
        // Disjoint balls of radius r = half the minimal displacement around
        // each orbit point pack into the ball of radius ρ + r.
        let bound = ball_volume(3, rho + 0.5).unwrap() / ball_volume(3, 0.5).unwrap();
        prop_assert!(count <= bound, "count {count} exceeds packing bound {bound}");
    }

    #[test]
    fn ball_sampler_is_deterministic_and_in_range(
        seed in any::<u64>(),
        rho in 0.05..4.0_f64,
    ) {
        let center = Point::new(&[0.3, -0.4, 1.3]).unwrap();
        let first = sample_ball(&center, rho, seed, 40).unwrap();
        let second = sample_ball(&center, rho, seed, 40).unwrap();
        for (a, b) in first.iter().zip(&second) {
            prop_assert!(max_coord_diff(a, b) == 0.0, "sampler must be reproducible");
        }
        for p in &first {
            let d = hyperbolic_distance(&center, p).unwrap();
            prop_assert!(d <= rho + 1e-9, "sample at distance {d} outside ball {rho}");
        }
    }

    #[test]
    fn growth_rate_is_recovered_from_synthetic_counts(delta in 0.2..1.5_f64) {
        let samples: Vec<(f64, usize)> = (1..=10)
            .map(|k| {
                let rho = k as f64;
                (rho, (1000.0 * (delta * rho).exp()).round() as usize)
            })
            .collect();
        let estimate = critical_exponent_estimate(&samples).unwrap();
        prop_assert!(
            (estimate - delta).abs() <= 0.01,
            "estimate {estimate} for true rate {delta}"
        );
    }
}
