//! Scenario runners. Each returns its artifacts in memory; the caller writes
//! them and the manifest.

use std::f64::consts::PI;
use std::fmt::Write as _;

use anyhow::{bail, Result};
use rand::Rng;
use serde_json::{json, Value};

use rde_core::analysis::{hyperbolic_like_set_with_cap, hyperbolic_times, pliss_times};
use rde_core::combinatorics::{census_sweep, verify_counting_bounds, DEFAULT_CELL_CAP};
use rde_core::decomposition::{basin_masses, cluster_components};
use rde_core::ensemble::ensemble;
use rde_core::measures::{birkhoff_measure, eta_n_estimate, invariance_residual, mu_n_estimate, MuParams, DEFAULT_BURN};
use rde_core::orbits::forward_orbit;
use rde_core::rng::{task_rng, LabRng};
use rde_core::systems::{BaseState, FiberPoint, IntervalMap, SkewSystem};

use crate::config::{ExperimentConfig, Params, Scenario};

/// Stream reserved for scenario-level draws, away from per-task streams.
const SCENARIO_STREAM: u64 = u64::MAX;

pub struct Artifacts {
    pub files: Vec<(String, Vec<u8>)>,
    pub summary: Value,
    pub invalid_orbits: u64,
}

pub fn run(cfg: &ExperimentConfig) -> Result<Artifacts> {
    let sys = cfg.system.build()?;
    let p = &cfg.params;
    match cfg.scenario {
        Scenario::Lyapunov => lyapunov(&sys, p, cfg.seed),
        Scenario::Density => density(&sys, p, cfg.seed),
        Scenario::Pliss => pliss(&sys, p, cfg.seed),
        Scenario::HyperbolicTimes => hyperbolic(&sys, p, cfg.seed),
        Scenario::Windows => windows(&sys, p, cfg.seed),
        Scenario::EtaMu => eta_mu(&sys, p, cfg.seed),
        Scenario::SrbCount => srb_count(&sys, p, cfg.seed),
        Scenario::Census => census(&sys, p, cfg.seed),
    }
}

fn req<T: Copy>(v: Option<T>, name: &str) -> Result<T> {
    match v {
        Some(x) => Ok(x),
        None => bail!("missing parameter {name}"),
    }
}

fn scenario_rng(seed: u64) -> LabRng {
    task_rng(seed, SCENARIO_STREAM)
}

fn theta0(sys: &SkewSystem, p: &Params, rng: &mut LabRng) -> BaseState {
    match p.theta0 {
        Some(t) => BaseState::circle(t),
        None => sys.base().sample_invariant(rng),
    }
}

fn random_start(sys: &SkewSystem, rng: &mut LabRng) -> (BaseState, FiberPoint) {
    let th = sys.base().sample_invariant(rng);
    let x = match sys.interval() {
        Some((lo, hi)) => FiberPoint::Line(lo + (hi - lo) * rng.random::<f64>()),
        None => FiberPoint::Torus([rng.random(), rng.random()]),
    };
    (th, x)
}

fn fmt_point(x: &FiberPoint) -> String {
    match x {
        FiberPoint::Line(v) => format!("{v}"),
        FiberPoint::Torus([a, b]) => format!("{a} {b}"),
    }
}

fn mean_min_max(v: &[f64]) -> Value {
    if v.is_empty() {
        return json!({"count": 0});
    }
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    let min = v.iter().copied().fold(f64::INFINITY, f64::min);
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    json!({"count": v.len(), "mean": mean, "min": min, "max": max})
}

fn lyapunov(sys: &SkewSystem, p: &Params, seed: u64) -> Result<Artifacts> {
    let (orbits, n) = (req(p.orbits, "orbits")?, req(p.n, "n")?);
    let rows = ensemble(seed, orbits, |_, rng| {
        let (th, x) = random_start(sys, rng);
        let rec = forward_orbit(sys, &th, &x, n).expect("start drawn inside the domain");
        (th, x, rec.exponent(), rec.valid)
    });
    let mut csv = String::from("orbit_id,theta0,x0,exponent,valid\n");
    for (i, (th, x, e, v)) in rows.iter().enumerate() {
        writeln!(csv, "{i},{th},{},{e},{v}", fmt_point(x))?;
    }
    let valid: Vec<f64> = rows.iter().filter(|r| r.3).map(|r| r.2).collect();
    let invalid = (rows.len() - valid.len()) as u64;
    Ok(Artifacts {
        files: vec![("lyapunov.csv".into(), csv.into_bytes())],
        summary: json!({"n": n, "orbits": orbits, "exponent": mean_min_max(&valid), "invalid_orbits": invalid}),
        invalid_orbits: invalid,
    })
}

// Reference density when the fiber map is fixed and has a closed-form acim.
fn reference_masses(sys: &SkewSystem, th: &BaseState, edges: &[f64]) -> Option<(&'static str, Vec<f64>)> {
    let same = |f: IntervalMap| {
        let mut t = th.clone();
        (0..16).all(|_| {
            let ok = sys.interval_map_at(&t) == f;
            t = sys.base_advance(&t);
            ok
        })
    };
    let f = sys.interval_map_at(th);
    match f {
        IntervalMap::Logistic { r } if r == 4.0 && same(f) => Some((
            "arcsine",
            edges.windows(2).map(|w| 2.0 / PI * (w[1].sqrt().asin() - w[0].sqrt().asin())).collect(),
        )),
        IntervalMap::Expanding { .. } if same(f) => Some(("uniform", edges.windows(2).map(|w| w[1] - w[0]).collect())),
        _ => None,
    }
}

fn density(sys: &SkewSystem, p: &Params, seed: u64) -> Result<Artifacts> {
    let (n, bins) = (req(p.n, "n")?, req(p.bins, "bins")?);
    let mut rng = scenario_rng(seed);
    let th = theta0(sys, p, &mut rng);
    let (lo, hi) = sys.interval().expect("validated interval fiber");
    let x0 = p.x0.unwrap_or_else(|| lo + (hi - lo) * rng.random::<f64>());
    let h = birkhoff_measure(sys, &th, x0, n, bins)?;
    let edges: Vec<f64> = (0..=bins).map(|i| h.edge(i)).collect();
    let mut summary = json!({"n": n, "bins": bins, "theta0": th.to_string(), "x0": x0, "total_mass": h.total_mass});
    if let Some((name, masses)) = reference_masses(sys, &th, &edges) {
        summary["reference"] = json!(name);
        summary["l1_to_reference"] = json!(h.l1_to_masses(&masses)?);
    }
    Ok(Artifacts { files: vec![("density.csv".into(), h.to_csv().into_bytes())], summary, invalid_orbits: 0 })
}

fn pliss(sys: &SkewSystem, p: &Params, seed: u64) -> Result<Artifacts> {
    let (orbits, n, c1, c2) = (req(p.orbits, "orbits")?, req(p.n, "n")?, req(p.c1, "c1")?, req(p.c2, "c2")?);
    let big_a = sys.gamma().ln();
    let reports = ensemble(seed, orbits, |_, rng| {
        let (th, x) = random_start(sys, rng);
        let rec = forward_orbit(sys, &th, &x, n).expect("start drawn inside the domain");
        rec.valid.then(|| pliss_times(&rec.log_deriv, big_a, c1, c2))
    });
    let mut csv = String::from("orbit_id,n\n");
    let mut densities = Vec::new();
    let mut holds = 0;
    let mut invalid = 0u64;
    let mut xi = None;
    for (i, r) in reports.into_iter().enumerate() {
        let Some(r) = r else {
            invalid += 1;
            continue;
        };
        let r = r?;
        for k in &r.indices {
            writeln!(csv, "{i},{k}")?;
        }
        densities.push(r.density);
        holds += r.hypothesis_holds as usize;
        xi = Some(r.xi);
    }
    Ok(Artifacts {
        files: vec![("pliss.csv".into(), csv.into_bytes())],
        summary: json!({
            "n": n, "c1": c1, "c2": c2, "A": big_a, "xi": xi,
            "density": mean_min_max(&densities), "hypothesis_holds": holds, "invalid_orbits": invalid,
        }),
        invalid_orbits: invalid,
    })
}

fn hyperbolic(sys: &SkewSystem, p: &Params, seed: u64) -> Result<Artifacts> {
    let (orbits, n) = (req(p.orbits, "orbits")?, req(p.n, "n")?);
    let (sigma, delta, b) = (req(p.sigma, "sigma")?, req(p.delta, "delta")?, req(p.b, "b")?);
    let found = ensemble(seed, orbits, |_, rng| {
        let (th, x) = random_start(sys, rng);
        let rec = forward_orbit(sys, &th, &x, n).expect("start drawn inside the domain");
        rec.valid.then(|| hyperbolic_times(&rec, sigma, delta, b))
    });
    let mut csv = String::from("orbit_id,n\n");
    let mut freq = Vec::new();
    let mut invalid = 0u64;
    for (i, r) in found.into_iter().enumerate() {
        let Some(r) = r else {
            invalid += 1;
            continue;
        };
        let times = r?;
        for k in &times {
            writeln!(csv, "{i},{k}")?;
        }
        freq.push(times.len() as f64 / n as f64);
    }
    Ok(Artifacts {
        files: vec![("hyperbolic_times.csv".into(), csv.into_bytes())],
        summary: json!({
            "n": n, "sigma": sigma, "delta": delta, "b": b,
            "frequency": mean_min_max(&freq), "invalid_orbits": invalid,
        }),
        invalid_orbits: invalid,
    })
}

fn windows(sys: &SkewSystem, p: &Params, seed: u64) -> Result<Artifacts> {
    let (depth, delta) = (req(p.depth, "depth")?, req(p.delta, "delta")?);
    let grid = p.grid.unwrap_or(8);
    let cap = p.cell_cap.unwrap_or(DEFAULT_CELL_CAP);
    let mut rng = scenario_rng(seed);
    let th = theta0(sys, p, &mut rng);
    let mut csv = String::from("i,delta,set,lo,hi\n");
    let mut levels = Vec::new();
    let mut all_nested = true;
    for i in 1..=depth {
        let one = hyperbolic_like_set_with_cap(sys, &th, i, delta, grid, cap)?;
        let two = hyperbolic_like_set_with_cap(sys, &th, i, 2.0 * delta, grid, cap)?;
        for (name, set) in [("hcal", &one.hcal), ("h", &one.h)] {
            for (a, b) in set.intervals() {
                writeln!(csv, "{i},{delta},{name},{a},{b}")?;
            }
        }
        let nested = two.hcal.is_subset_of(&one.h, 1e-12) && one.h.is_subset_of(&one.hcal, 1e-12);
        all_nested &= nested;
        levels.push(json!({
            "i": i,
            "hcal_length": one.hcal.total_length(),
            "h_length": one.h.total_length(),
            "hcal_2delta_length": two.hcal.total_length(),
            "nested": nested,
        }));
    }
    Ok(Artifacts {
        files: vec![("windows.csv".into(), csv.into_bytes())],
        summary: json!({"theta0": th.to_string(), "delta": delta, "levels": levels, "all_nested": all_nested}),
        invalid_orbits: 0,
    })
}

fn eta_mu(sys: &SkewSystem, p: &Params, seed: u64) -> Result<Artifacts> {
    let (n, samples, bins) = (req(p.n, "n")?, req(p.samples, "samples")?, req(p.bins, "bins")?);
    let params = MuParams { delta: req(p.delta, "delta")?, lambda: req(p.lambda, "lambda")?, burn: p.burn.unwrap_or(DEFAULT_BURN) };
    let steps = p.steps.unwrap_or(20);
    let ens = p.ensemble.unwrap_or(10_000);
    let mut rng = scenario_rng(seed);
    let th = theta0(sys, p, &mut rng);
    let thetas: Vec<BaseState> = (0..ens).map(|_| sys.base().sample_invariant(&mut rng)).collect();
    let eta = eta_n_estimate(sys, &th, n, samples, bins, &mut task_rng(seed, 0))?;
    let mu = mu_n_estimate(sys, &th, n, params, samples, bins, &mut task_rng(seed, 1))?;
    let residual = invariance_residual(sys, &eta.histogram, &thetas, steps, samples, &mut task_rng(seed, 2))?;
    let invalid = (eta.invalid_dropped + mu.invalid_dropped) as u64;
    let envelope = |e: &rde_core::measures::MeasureEstimate| {
        json!({
            "samples": e.samples, "accepted": e.accepted, "total_mass": e.histogram.total_mass,
            "sup_raw_density": e.histogram.sup_raw_density(),
            "invalid_redraws": e.invalid_redraws, "invalid_dropped": e.invalid_dropped,
        })
    };
    Ok(Artifacts {
        files: vec![("eta.csv".into(), eta.histogram.to_csv().into_bytes()), ("mu.csv".into(), mu.histogram.to_csv().into_bytes())],
        summary: json!({
            "theta0": th.to_string(), "n": n, "bins": bins,
            "mu_params": params, "residual": {"value": residual, "steps": steps, "ensemble": ens},
            "eta": envelope(&eta), "mu": envelope(&mu),
        }),
        invalid_orbits: invalid,
    })
}

fn srb_count(sys: &SkewSystem, p: &Params, seed: u64) -> Result<Artifacts> {
    let (orbits, n, bins, threshold) = (req(p.orbits, "orbits")?, req(p.n, "n")?, req(p.bins, "bins")?, req(p.threshold, "threshold")?);
    let (dlo, dhi) = sys.interval().expect("validated interval fiber");
    let lo = p.starts_lo.unwrap_or(dlo);
    let hi = p.starts_hi.unwrap_or(dhi);
    if !(dlo <= lo && lo < hi && hi <= dhi) {
        bail!("start interval [{lo}, {hi}] must lie inside the fiber [{dlo}, {dhi}]");
    }
    // stratified starts, one per orbit
    let hs = ensemble(seed, orbits, |k, rng| {
        let th = sys.base().sample_invariant(rng);
        let x = lo + (hi - lo) * (k as f64 + 0.5) / orbits as f64;
        birkhoff_measure(sys, &th, x, n, bins)
    });
    let hs: Vec<_> = hs.into_iter().collect::<std::result::Result<_, _>>()?;
    let report = cluster_components(&hs, threshold)?;
    let (min_mass, masses) = basin_masses(&report)?;
    let mut files = Vec::new();
    let mut clusters = Vec::new();
    for (k, (rep, mass)) in report.representatives.iter().zip(&masses).enumerate() {
        let name = format!("cluster_{k}.csv");
        files.push((name.clone(), rep.to_csv().into_bytes()));
        clusters.push(json!({"mass": mass, "histogram_ref": name}));
    }
    let floor_ok = p.b_floor.map(|f| min_mass > f);
    let doc = json!({
        "cluster_count": report.cluster_count,
        "clusters": clusters,
        "min_mass": min_mass,
        "unassigned_mass": report.unassigned_mass,
        "pairwise_min_distance": if report.pairwise_min_distance.is_finite() { json!(report.pairwise_min_distance) } else { Value::Null },
        "threshold": threshold,
        "seed": seed,
        "b_floor_ok": floor_ok,
    });
    files.push(("clusters.json".into(), serde_json::to_vec_pretty(&doc)?));
    Ok(Artifacts {
        files,
        summary: json!({"cluster_count": report.cluster_count, "min_mass": min_mass, "b_floor_ok": floor_ok}),
        invalid_orbits: 0,
    })
}

fn census(sys: &SkewSystem, p: &Params, seed: u64) -> Result<Artifacts> {
    let (depth, delta, lambda) = (req(p.depth, "depth")?, req(p.delta, "delta")?, req(p.lambda, "lambda")?);
    if depth < 2 {
        bail!("census needs depth >= 2 to compare consecutive depths");
    }
    let mut rng = scenario_rng(seed);
    let th = theta0(sys, p, &mut rng);
    let sweep = census_sweep(sys, &th, depth, delta)?;
    let mut checks = Vec::new();
    for s in 1..depth {
        checks.push(verify_counting_bounds(&sweep[s - 1], &sweep[s], lambda)?);
    }
    let all_hold = checks.iter().all(|c| c.all_hold);
    let last = sweep.last().unwrap();
    let bounds = json!({
        "theta0": th.to_string(), "delta": delta, "lambda": lambda, "depth": depth,
        "all_hold": all_hold, "checks": checks,
        "totals": last.totals, "components": last.components.len(),
    });
    Ok(Artifacts {
        files: vec![("census.csv".into(), last.to_csv().into_bytes()), ("bounds.json".into(), serde_json::to_vec_pretty(&bounds)?)],
        summary: json!({"depth": depth, "delta": delta, "all_hold": all_hold, "words": last.counts.len()}),
        invalid_orbits: 0,
    })
}
