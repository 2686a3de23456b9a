use proptest::prelude::*;
use rand::Rng;

use rde_core::analysis::{monotonicity_window, pliss_times, pliss_times_linear, truncated_distance, IntervalSet};
use rde_core::combinatorics::{component_census, monotone_partition};
use rde_core::decomposition::cluster_components;
use rde_core::fixtures;
use rde_core::measures::Histogram;
use rde_core::orbits::{backward_composition, forward_orbit, LOG_FLOOR};
use rde_core::rng::task_rng;
use rde_core::systems::{BaseState, CirclePoint, FiberPoint, SkewSystem};

fn fixture(i: usize) -> SkewSystem {
    match i {
        0 => fixtures::doubling(),
        1 => fixtures::logistic(),
        2 => fixtures::quadratic_skew(),
        3 => fixtures::intermittent(),
        4 => fixtures::rescaled_t(6).unwrap(),
        _ => fixtures::torus(),
    }
}

fn start(sys: &SkewSystem, seed: u64, u: f64, v: f64) -> (BaseState, FiberPoint) {
    let theta = if sys.base().is_circle() {
        BaseState::Circle(CirclePoint(seed))
    } else {
        sys.base().sample_invariant(&mut task_rng(seed, 0))
    };
    let x = match sys.interval() {
        Some((lo, hi)) => FiberPoint::Line(lo + (hi - lo) * u),
        None => FiberPoint::Torus([u, v]),
    };
    (theta, x)
}

fn brute_pliss(a: &[f64], c1: f64) -> Vec<usize> {
    (1..=a.len())
        .filter(|&m| (0..m).all(|n| a[n..m].iter().sum::<f64>() >= c1 * (m - n) as f64 - 1e-12))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn cocycle_slices_match_restarted_orbits(f in 0usize..6, seed in any::<u64>(), u in 0.0f64..1.0, v in 0.0f64..1.0) {
        let sys = fixture(f);
        let (theta, x) = start(&sys, seed, u, v);
        let full = forward_orbit(&sys, &theta, &x, 64).unwrap();
        for m in [1usize, 7, 32] {
            let tail = forward_orbit(&sys, &full.theta_path[m], &full.x_path[m], 64 - m).unwrap();
            prop_assert_eq!(&tail.x_path[..], &full.x_path[m..]);
            prop_assert_eq!(&tail.log_deriv[..], &full.log_deriv[m..]);
            prop_assert_eq!(tail.log_sum_fixed(0, 64 - m), full.log_sum_fixed(m, 64));
            prop_assert_eq!(full.log_sum_fixed(0, m) + full.log_sum_fixed(m, 64), full.log_sum_fixed(0, 64));
        }
    }

    #[test]
    fn log_derivatives_respect_bounds(f in 0usize..6, seed in any::<u64>(), u in 0.0f64..1.0, v in 0.0f64..1.0) {
        let sys = fixture(f);
        let (theta, x) = start(&sys, seed, u, v);
        let rec = forward_orbit(&sys, &theta, &x, 200).unwrap();
        let cap = sys.gamma().ln() + 1e-12;
        for &ld in &rec.log_deriv {
            prop_assert!(ld >= LOG_FLOOR && ld <= cap, "{} outside [{}, {}]", ld, LOG_FLOOR, cap);
        }
    }

    #[test]
    fn fiber_domain_is_invariant(f in 0usize..6, seed in any::<u64>(), u in 0.0f64..1.0, v in 0.0f64..1.0) {
        let sys = fixture(f);
        let (theta, x) = start(&sys, seed, u, v);
        let e = sys.fiber_eval(&theta, &x).unwrap();
        prop_assert!(sys.contains(&e.value));
    }

    #[test]
    fn preimage_then_advance_is_identity(f in 0usize..3, seed in any::<u64>()) {
        let sys = fixture(f);
        let (theta, _) = start(&sys, seed, 0.5, 0.5);
        let mut rng = task_rng(seed, 1);
        let (pre, _) = sys.base_preimage_sample(&theta, &mut rng);
        let back = sys.base_advance(&pre);
        match (&back, &theta) {
            (BaseState::Circle(a), BaseState::Circle(b)) => prop_assert!(a.0.abs_diff(b.0) <= 4),
            _ => prop_assert_eq!(back.as_word().unwrap().prefix(16), theta.as_word().unwrap().prefix(16)),
        }
    }

    #[test]
    fn invertible_backward_composition_ignores_the_seed(seed in any::<u64>(), u in 0.0f64..1.0, j in 0usize..40) {
        let sys = fixtures::logistic();
        let (theta, x) = start(&sys, seed, u, 0.0);
        let a = backward_composition(&sys, &theta, j, &x, &mut task_rng(1, 0)).unwrap();
        let b = backward_composition(&sys, &theta, j, &x, &mut task_rng(2, 0)).unwrap();
        prop_assert_eq!(a.value, b.value);
        prop_assert_eq!(a.branch_log_weight, b.branch_log_weight);
    }

    #[test]
    fn pliss_matches_exhaustive_check(seed in any::<u64>()) {
        let mut rng = task_rng(seed, 0);
        let n = rng.random_range(1..=12);
        let big_a = rng.random_range(1.0..3.0);
        let a: Vec<f64> = (0..n).map(|_| rng.random_range(-big_a..=big_a)).collect();
        let mean = a.iter().sum::<f64>() / n as f64;
        prop_assume!(mean > 0.02);
        let c2 = mean * rng.random_range(0.5..1.0);
        let c1 = c2 * rng.random_range(0.1..0.9);
        let r = pliss_times(&a, big_a, c1, c2).unwrap();
        prop_assert_eq!(&r.indices, &brute_pliss(&a, c1));
        prop_assert_eq!(&pliss_times_linear(&a, big_a, c1, c2).unwrap().indices, &r.indices);
        prop_assert!(r.hypothesis_holds);
        prop_assert!(r.indices.len() as f64 > r.xi * n as f64);
    }

    #[test]
    fn truncated_distance_range(x in -2.0f64..2.0, c in proptest::collection::vec(-2.0f64..2.0, 0..6), delta in 1e-6f64..1.0) {
        let d = truncated_distance(x, &c, delta);
        prop_assert!((0.0..=1.0).contains(&d));
        let raw = c.iter().fold(f64::INFINITY, |m, &q| m.min((x - q).abs()));
        prop_assert_eq!(d == 1.0, raw >= delta);
    }

    #[test]
    fn interval_sets_are_ordered_and_disjoint(raw in proptest::collection::vec((0.0f64..1.0, 0.0f64..0.3), 0..20), probe in 0.0f64..1.3) {
        let v: Vec<(f64, f64)> = raw.iter().map(|&(a, l)| (a, a + l)).collect();
        let s = IntervalSet::from_intervals(v.clone());
        for w in s.intervals().windows(2) {
            prop_assert!(w[0].1 <= w[1].0);
        }
        prop_assert!(s.total_length() <= v.iter().map(|(a, b)| b - a).sum::<f64>() + 1e-12);
        let inside = v.iter().any(|&(a, b)| a < probe && probe < b);
        if inside {
            prop_assert!(s.contains(probe));
        }
        prop_assert!(IntervalSet::from_intervals(v).is_subset_of(&s, 0.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn partitions_refine_and_grow_boundedly(f in prop_oneof![Just(0usize), Just(2usize)], seed in any::<u64>(), n in 1usize..8) {
        let sys = fixture(f);
        let (theta, _) = start(&sys, seed, 0.5, 0.5);
        let coarse = monotone_partition(&sys, &theta, n).unwrap();
        let fine = monotone_partition(&sys, &theta, n + 1).unwrap();
        prop_assert!(fine.cells.len() <= (sys.p() + 1) * coarse.cells.len());
        for c in &fine.cells {
            prop_assert!(c.lo < c.hi);
            let k = coarse.locate(0.5 * (c.lo + c.hi)).unwrap();
            prop_assert!(coarse.cells[k].lo <= c.lo && c.hi <= coarse.cells[k].hi);
        }
        let (lo, hi) = sys.interval().unwrap();
        prop_assert_eq!(fine.cells.first().unwrap().lo, lo);
        prop_assert_eq!(fine.cells.last().unwrap().hi, hi);
        for w in fine.cells.windows(2) {
            prop_assert_eq!(w[0].hi, w[1].lo);
        }
    }

    #[test]
    fn census_covers_the_fiber(f in prop_oneof![Just(0usize), Just(2usize)], seed in any::<u64>(), n in 1usize..7, di in 0usize..3) {
        let sys = fixture(f);
        let (theta, _) = start(&sys, seed, 0.5, 0.5);
        let delta = [0.1, 0.2, 0.3][di];
        let c = component_census(&sys, &theta, n, delta).unwrap();
        let (lo, hi) = sys.interval().unwrap();
        prop_assert!((c.covered_length - (hi - lo)).abs() < 1e-6);
        prop_assert_eq!(c.counts.values().sum::<usize>(), c.components.len());
        for w in c.components.windows(2) {
            prop_assert!(w[0].hi <= w[1].lo);
        }
    }

    #[test]
    fn windows_are_monotone(f in prop_oneof![Just(0usize), Just(1usize), Just(2usize), Just(3usize)], seed in any::<u64>(), u in 0.01f64..0.99, i in 1usize..12) {
        let sys = fixture(f);
        let (theta, x) = start(&sys, seed, u, 0.0);
        let x = x.as_line().unwrap();
        let w = match monotonicity_window(&sys, &theta, x, i) {
            Ok(w) => w,
            Err(_) => return Ok(()),
        };
        prop_assume!(w.hi > w.lo);
        prop_assert!(w.lo < x && x < w.hi);
        prop_assert!(w.r <= w.image_len / 2.0 + 1e-9);
        let mut vals = Vec::with_capacity(128);
        for k in 0..128 {
            let z = w.lo + (w.hi - w.lo) * (k as f64 + 0.5) / 128.0;
            let mut th = theta.clone();
            let mut y = z;
            for _ in 0..i {
                y = sys.interval_map_at(&th).eval_plain(y);
                th = sys.base_advance(&th);
            }
            vals.push(y);
        }
        let up = vals.windows(2).all(|p| p[1] > p[0]);
        let down = vals.windows(2).all(|p| p[1] < p[0]);
        prop_assert!(up || down, "not monotone on [{}, {}]", w.lo, w.hi);
    }

    #[test]
    fn clustering_ignores_order_when_separated(perm in Just((0..12usize).collect::<Vec<_>>()).prop_shuffle()) {
        let spike = |b: usize| {
            let mut h = Histogram::new(0.0, 1.0, 16).unwrap();
            h.weights[b] = 1.0;
            h.weights[(b + 1) % 16] = 0.05;
            h.renormalize_total();
            h
        };
        let base: Vec<Histogram> = (0..12).map(|i| spike(4 * (i % 3))).collect();
        let shuffled: Vec<Histogram> = perm.iter().map(|&i| base[i].clone()).collect();
        let a = cluster_components(&base, 0.5).unwrap();
        let b = cluster_components(&shuffled, 0.5).unwrap();
        prop_assert_eq!(a.cluster_count, 3);
        prop_assert_eq!(b.cluster_count, 3);
        let mut ma = a.basin_masses.clone();
        let mut mb = b.basin_masses.clone();
        ma.sort_by(f64::total_cmp);
        mb.sort_by(f64::total_cmp);
        prop_assert_eq!(ma, mb);
        prop_assert!((b.basin_masses.iter().sum::<f64>() + b.unassigned_mass - 1.0).abs() < 1e-9);
    }

    #[test]
    fn histogram_mass_matches_weights(xs in proptest::collection::vec(0.0f64..1.0, 1..200), bins in 1usize..64) {
        let mut h = Histogram::new(0.0, 1.0, bins).unwrap();
        for &x in &xs {
            h.deposit(x, 1.0 / xs.len() as f64);
        }
        let s: f64 = h.weights.iter().sum();
        prop_assert!((s - h.total_mass).abs() <= 1e-12 * h.total_mass.max(1.0));
        prop_assert!(h.total_mass <= 1.0 + 1e-12);
    }
}
