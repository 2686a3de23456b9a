use rand::Rng;

use rde_core::analysis::{distortion_ratio, koebe_window, monotonicity_window};
use rde_core::ensemble::ensemble;
use rde_core::fixtures;
use rde_core::measures::{eta_n_estimate, mu_n_estimate, MuParams};
use rde_core::rng::task_rng;
use rde_core::LabError;
use rde_core::systems::SkewSystem;

const DELTA0: f64 = 0.05;

fn max_distortion(sys: &SkewSystem, seed: u64, orbits: usize) -> (f64, usize) {
    let (lo, hi) = sys.interval().unwrap();
    let per_orbit = ensemble(seed, orbits, |_, rng| {
        let theta = sys.base().sample_invariant(rng);
        let x = rng.random_range(lo..hi);
        let mut worst = 1.0f64;
        let mut windows = 0;
        for i in 1..=60 {
            let w = monotonicity_window(sys, &theta, x, i).unwrap();
            if w.r <= DELTA0 {
                continue;
            }
            let j = koebe_window(sys, &theta, x, i, DELTA0 / 2.0).unwrap();
            match distortion_ratio(sys, &theta, &j, i, 16) {
                Ok(k) => {
                    worst = worst.max(k);
                    windows += 1;
                }
                // deep windows run out of f64 resolution
                Err(LabError::Degenerate(_)) => {}
                Err(e) => panic!("{e}"),
            }
        }
        (worst, windows)
    });
    per_orbit.iter().fold((1.0, 0), |(k, c), &(w, n)| (k.max(w), c + n))
}

#[test]
fn quadratic_distortion_is_bounded_and_stable_across_seeds() {
    let sys = fixtures::quadratic_skew();
    let (k1, n1) = max_distortion(&sys, 1, 1000);
    let (k2, n2) = max_distortion(&sys, 2, 1000);
    assert!(n1 > 10_000 && n2 > 10_000, "too few windows: {n1}, {n2}");
    // negative Schwarzian with collars of half the radius: Koebe gives 9
    assert!(k1 <= 9.0 && k2 <= 9.0, "K_obs {k1}, {k2}");
    assert!(k1.is_finite() && k2.is_finite());
    let ratio = k1.max(k2) / k1.min(k2);
    assert!(ratio <= 1.5, "K_obs {k1} vs {k2}");
}

#[test]
fn doubling_mu_is_uniform_on_the_delta_core() {
    // every dyadic cylinder maps onto (0, 1), so r_j > delta cuts out the
    // pushforward of Lebesgue on (delta, 1 - delta)
    let sys = fixtures::doubling();
    let mut rng = task_rng(3, 0);
    let theta = sys.base().sample_invariant(&mut rng);
    let delta = 0.125;
    let samples = 400_000;
    let est = mu_n_estimate(&sys, &theta, 20, MuParams { delta, lambda: 0.3, burn: 50 }, samples, 64, &mut rng).unwrap();
    let h = &est.histogram;
    let noise = 4.0 * (0.75 * 0.25 / samples as f64).sqrt();
    assert!((h.total_mass - 0.75).abs() < noise, "mass {}", h.total_mass);
    let raw = h.raw_density();
    for (b, d) in raw.iter().enumerate() {
        if !(8..56).contains(&b) {
            assert_eq!(*d, 0.0, "bin {b}");
        } else {
            // per-bin counts ~ samples/64, density 1
            let sd = (64.0 / samples as f64).sqrt();
            assert!((d - 1.0).abs() < 5.0 * sd, "bin {b}: {d}");
        }
    }
}

#[test]
fn doubling_mu_is_empty_when_the_core_is_too_thin() {
    let sys = fixtures::doubling();
    let mut rng = task_rng(4, 0);
    let theta = sys.base().sample_invariant(&mut rng);
    // |f^j(T_j)| = 1 <= 3 delta
    let est = mu_n_estimate(&sys, &theta, 10, MuParams { delta: 0.34, lambda: 0.3, burn: 0 }, 10_000, 32, &mut rng).unwrap();
    assert_eq!(est.histogram.total_mass, 0.0);
}

#[test]
fn quadratic_eta_keeps_mass_and_matches_across_base_points() {
    // the base is an i.i.d. shift, so the law of the backward branch does not
    // depend on theta
    let sys = fixtures::quadratic_skew();
    let mut rng = task_rng(5, 0);
    let a = sys.base().sample_invariant(&mut rng);
    let b = sys.base().sample_invariant(&mut rng);
    let ea = eta_n_estimate(&sys, &a, 50, 200_000, 16, &mut rng).unwrap();
    let eb = eta_n_estimate(&sys, &b, 50, 200_000, 16, &mut rng).unwrap();
    assert!((ea.histogram.total_mass - 1.0).abs() < 1e-9);
    assert!((eb.histogram.total_mass - 1.0).abs() < 1e-9);
    let d = ea.histogram.l1_distance(&eb.histogram).unwrap();
    assert!(d < 0.03, "L1 {d}");
}
