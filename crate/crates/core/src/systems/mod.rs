//! Base maps, fiber families and the skew products built from them.

mod base;
mod fiber;
mod params;

use std::sync::Arc;

pub use base::{BaseKind, BaseState, BaseSystem, CirclePoint, ShiftWord};
pub use fiber::{singular_values, Domain, FiberFamily, FiberMap, FiberPoint, IntervalMap, TorusFamily, TorusMap};
pub use params::{CircleArc, ParamMap};

use crate::error::{domain, LabError, Result};
use rand::Rng;

/// Default breakpoint proximity tolerance.
pub const TOL_BP: f64 = 1e-12;

/// Default truncation depth of the rescaled doubling map.
pub const DEFAULT_T_DEPTH: u32 = 8;

/// Value and one-sided derivatives of a fiber map at a point.
///
/// For torus fibers both derivative slots hold the smallest singular value
/// of the Jacobian, i.e. `1 / |Df^{-1}|`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FiberEval {
    pub value: FiberPoint,
    pub left_deriv: f64,
    pub right_deriv: f64,
}

/// The skew product φ(θ, x) = (α(θ), f_θ(x)).
#[derive(Clone, Debug)]
pub struct SkewSystem {
    base: BaseSystem,
    fibers: FiberFamily,
    domain: Domain,
    breakpoints: Arc<[f64]>,
    gamma: f64,
}

impl SkewSystem {
    pub fn new(base: BaseSystem, fibers: FiberFamily) -> Result<Self> {
        let domain = validate_family(&base, &fibers)?;
        let breakpoints: Arc<[f64]> = Arc::from(family_breakpoints(&fibers));
        let gamma = derivative_bound(&fibers);
        Ok(SkewSystem { base, fibers, domain, breakpoints, gamma })
    }

    pub fn base(&self) -> &BaseSystem {
        &self.base
    }

    pub fn fibers(&self) -> &FiberFamily {
        &self.fibers
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    /// Interval bounds, or `None` for torus fibers.
    pub fn interval(&self) -> Option<(f64, f64)> {
        match self.domain {
            Domain::Interval { lo, hi } => Some((lo, hi)),
            Domain::Torus => None,
        }
    }

    pub fn is_interval(&self) -> bool {
        matches!(self.domain, Domain::Interval { .. })
    }

    /// Upper bound Γ on |∂ₓf| over all fibers.
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Maximal number of critical points and discontinuities per fiber.
    pub fn p(&self) -> usize {
        self.breakpoints.len()
    }

    /// Breakpoints of the interval fibers. They do not depend on θ for any
    /// of the supported families.
    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    /// The fiber map over θ.
    pub fn map_at(&self, theta: &BaseState) -> FiberMap {
        match &self.fibers {
            FiberFamily::Torus(fam) => {
                let inside = match theta {
                    BaseState::Circle(p) => fam.arc.contains(p.to_f64()),
                    BaseState::Word(_) => true,
                };
                FiberMap::Torus(if inside { fam.inside } else { fam.outside })
            }
            _ => FiberMap::Interval(self.interval_map_at(theta)),
        }
    }

    /// The interval fiber map over θ.
    ///
    /// # Panics
    /// On torus families.
    #[inline]
    pub fn interval_map_at(&self, theta: &BaseState) -> IntervalMap {
        self.interval_map_by(|p| p.eval(theta))
    }

    /// The interval fiber map over any shift state whose current symbol is `s`.
    #[inline]
    pub(crate) fn interval_map_for_symbol(&self, s: u32) -> IntervalMap {
        self.interval_map_by(|p| p.eval_symbol(s))
    }

    #[inline]
    fn interval_map_by(&self, param: impl Fn(&ParamMap) -> f64) -> IntervalMap {
        match &self.fibers {
            FiberFamily::ExpandingInterval { k } => IntervalMap::Expanding { k: *k },
            FiberFamily::Quadratic { a, .. } => IntervalMap::Quadratic { a: param(a) },
            FiberFamily::Logistic { r } => IntervalMap::Logistic { r: param(r) },
            FiberFamily::Intermittent { beta, t } => IntervalMap::intermittent(param(t), *beta),
            FiberFamily::RescaledDoubling { depth } => IntervalMap::Rescaled { depth: *depth },
            FiberFamily::Torus(_) => panic!("interval map requested from a torus family"),
        }
    }

    pub fn contains(&self, x: &FiberPoint) -> bool {
        match (self.domain, x) {
            (Domain::Interval { lo, hi }, FiberPoint::Line(v)) => *v >= lo && *v <= hi,
            (Domain::Torus, FiberPoint::Torus([a, b])) => (0.0..1.0).contains(a) && (0.0..1.0).contains(b),
            _ => false,
        }
    }

    fn check_point(&self, x: &FiberPoint) -> Result<()> {
        if self.contains(x) {
            Ok(())
        } else {
            domain(format!("fiber point {x:?} outside the fiber domain"))
        }
    }

    /// f_θ(x) with one-sided derivatives.
    pub fn fiber_eval(&self, theta: &BaseState, x: &FiberPoint) -> Result<FiberEval> {
        self.base.check_state(theta)?;
        self.check_point(x)?;
        Ok(match (self.map_at(theta), x) {
            (FiberMap::Interval(f), FiberPoint::Line(v)) => {
                let (l, r) = f.deriv(*v);
                FiberEval { value: FiberPoint::Line(f.eval(*v)), left_deriv: l, right_deriv: r }
            }
            (FiberMap::Torus(g), FiberPoint::Torus(p)) => {
                let (s, _) = g.singular_values(*p);
                FiberEval { value: FiberPoint::Torus(g.eval(*p)), left_deriv: s, right_deriv: s }
            }
            _ => unreachable!("checked by check_point"),
        })
    }

    /// Limit of f_θ(y) as y increases to x.
    pub fn fiber_left_limit(&self, theta: &BaseState, x: f64) -> Result<f64> {
        self.check_point(&FiberPoint::Line(x))?;
        Ok(self.interval_map_at(theta).left_limit(x))
    }

    /// Critical points and discontinuities of f_θ, sorted.
    pub fn fiber_breakpoints(&self, _theta: &BaseState) -> Vec<f64> {
        self.breakpoints.to_vec()
    }

    pub fn base_advance(&self, theta: &BaseState) -> BaseState {
        self.base.advance(theta)
    }

    /// Sample θ₋₁ with α(θ₋₁) = θ. Returns the preimage and the log-probability
    /// of the chosen branch.
    pub fn base_preimage_sample<R: Rng + ?Sized>(&self, theta: &BaseState, rng: &mut R) -> (BaseState, f64) {
        self.base.preimage_sample(theta, rng)
    }

    /// Schwarzian derivative f'''/f' − 3/2 (f''/f')² of f_θ at x.
    pub fn schwarzian_at(&self, theta: &BaseState, x: f64) -> Result<f64> {
        if !self.is_interval() {
            return domain("the Schwarzian is defined for interval fibers only");
        }
        self.check_point(&FiberPoint::Line(x))?;
        if let Some(&bp) = self.breakpoints.iter().find(|&&b| (x - b).abs() <= TOL_BP) {
            return Err(LabError::Proximity { x, breakpoint: bp, tol: TOL_BP });
        }
        let (d1, d2, d3) = self.interval_map_at(theta).derivs3(x);
        let q = d2 / d1;
        Ok(d3 / d1 - 1.5 * q * q)
    }

    /// Distance from x to the nearest breakpoint; `f64::INFINITY` if there are none.
    #[inline]
    pub fn breakpoint_distance(&self, x: f64) -> f64 {
        nearest_distance(&self.breakpoints, x)
    }
}

/// Distance to the nearest entry of a sorted list.
#[inline]
pub fn nearest_distance(sorted: &[f64], x: f64) -> f64 {
    match sorted.len() {
        0 => f64::INFINITY,
        1..=4 => sorted.iter().fold(f64::INFINITY, |m, &b| m.min((x - b).abs())),
        _ => {
            let i = sorted.partition_point(|&b| b < x);
            let mut d = f64::INFINITY;
            if i < sorted.len() {
                d = d.min(sorted[i] - x);
            }
            if i > 0 {
                d = d.min(x - sorted[i - 1]);
            }
            d
        }
    }
}

fn validate_family(base: &BaseSystem, fibers: &FiberFamily) -> Result<Domain> {
    match fibers {
        FiberFamily::ExpandingInterval { k } => {
            if *k < 2 {
                return domain(format!("expanding fiber needs k >= 2, got {k}"));
            }
            Ok(Domain::Interval { lo: 0.0, hi: 1.0 })
        }
        FiberFamily::Quadratic { a, lo, hi } => {
            a.check_base(base, "a")?;
            if !(lo < hi) || *lo > 0.0 || *hi < 0.0 {
                return domain(format!("quadratic domain [{lo}, {hi}] must contain 0"));
            }
            let (amin, amax) = a.range();
            let top = lo.abs().max(hi.abs());
            if amax > *hi || amin - top * top < *lo {
                return domain(format!("a in [{amin}, {amax}] does not keep [{lo}, {hi}] invariant"));
            }
            Ok(Domain::Interval { lo: *lo, hi: *hi })
        }
        FiberFamily::Logistic { r } => {
            r.check_base(base, "r")?;
            let (rmin, rmax) = r.range();
            if rmin <= 0.0 || rmax > 4.0 {
                return domain(format!("logistic parameter must lie in (0, 4], got [{rmin}, {rmax}]"));
            }
            Ok(Domain::Interval { lo: 0.0, hi: 1.0 })
        }
        FiberFamily::Intermittent { beta, t } => {
            t.check_base(base, "t")?;
            if !(*beta > 0.0 && *beta < 1.0) {
                return domain(format!("intermittent exponent must lie in (0, 1), got {beta}"));
            }
            let (tmin, tmax) = t.range();
            if tmin <= 0.5 || tmax >= 1.5 {
                return domain(format!("intermittent parameter must lie in (1/2, 3/2), got [{tmin}, {tmax}]"));
            }
            Ok(Domain::Interval { lo: 0.0, hi: 1.0 })
        }
        FiberFamily::RescaledDoubling { depth } => {
            if *depth < 1 || *depth > 60 {
                return domain(format!("truncation depth must lie in 1..=60, got {depth}"));
            }
            Ok(Domain::Interval { lo: 0.0, hi: 1.0 })
        }
        FiberFamily::Torus(fam) => {
            if fam.arc.length > 0.0 && fam.arc.length < 1.0 && !base.is_circle() {
                return domain("torus arc needs a circle base");
            }
            for (name, m) in [("inside", &fam.inside), ("outside", &fam.outside)] {
                if !m.matrix_is_integral() {
                    return domain(format!("{name} torus matrix must have integer entries"));
                }
                let a = &m.matrix;
                let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
                let e = m.eps.abs();
                // det J = det A − ε(a01 cos 2πx + a10 cos 2πy) − ε² cos cos
                if det.abs() <= e * (a[0][1].abs() + a[1][0].abs()) + e * e {
                    return domain(format!("{name} torus map may have a singular Jacobian"));
                }
            }
            Ok(Domain::Torus)
        }
    }
}

fn family_breakpoints(fibers: &FiberFamily) -> Vec<f64> {
    match fibers {
        FiberFamily::ExpandingInterval { k } => (1..*k).map(|j| j as f64 / *k as f64).collect(),
        FiberFamily::Quadratic { .. } => vec![0.0],
        FiberFamily::Logistic { .. } | FiberFamily::Intermittent { .. } => vec![0.5],
        FiberFamily::RescaledDoubling { depth } => {
            let mut v = vec![0.0];
            for n in 1..=*depth as i32 {
                let s = (-n as f64).exp2();
                v.push(s);
                v.push(s + s / 2.0);
            }
            v.sort_by(f64::total_cmp);
            v
        }
        FiberFamily::Torus(_) => Vec::new(),
    }
}

fn derivative_bound(fibers: &FiberFamily) -> f64 {
    match fibers {
        FiberFamily::ExpandingInterval { k } => *k as f64,
        FiberFamily::Quadratic { lo, hi, .. } => 2.0 * lo.abs().max(hi.abs()),
        FiberFamily::Logistic { r } => r.range().1,
        FiberFamily::Intermittent { beta, t } => {
            // t + (2 − t)(1 + β) decreases in t
            let tmin = t.range().0;
            tmin + (2.0 - tmin) * (1.0 + beta)
        }
        FiberFamily::RescaledDoubling { .. } => 2.0,
        FiberFamily::Torus(fam) => {
            let bound = |m: &TorusMap| {
                let a = &m.matrix;
                let e = m.eps.abs();
                let j = [[a[0][0].abs(), a[0][1].abs() + e], [a[1][0].abs() + e, a[1][1].abs()]];
                singular_values(j).1
            };
            bound(&fam.inside).max(bound(&fam.outside))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::task_rng;
    use rand::Rng;

    fn doubling_on(base: BaseSystem) -> SkewSystem {
        SkewSystem::new(base, FiberFamily::ExpandingInterval { k: 2 }).unwrap()
    }

    fn intermittent(t: ParamMap) -> SkewSystem {
        SkewSystem::new(BaseSystem::rotation(0.3).unwrap(), FiberFamily::Intermittent { beta: 0.5, t }).unwrap()
    }

    fn quadratic(a: f64) -> SkewSystem {
        // [-L, L] with L the positive fixed point of x ↦ x² − a is invariant
        let l = (1.0 + (1.0 + 4.0 * a).sqrt()) / 2.0;
        let fam = FiberFamily::Quadratic { a: ParamMap::Constant(a), lo: -l, hi: l };
        SkewSystem::new(BaseSystem::rotation(0.1).unwrap(), fam).unwrap()
    }

    fn line(x: f64) -> FiberPoint {
        FiberPoint::Line(x)
    }

    #[test]
    fn intermittent_origin_is_fixed() {
        let sys = intermittent(ParamMap::Constant(1.0));
        let ev = sys.fiber_eval(&BaseState::circle(0.0), &line(0.0)).unwrap();
        assert_eq!(ev.value, line(0.0));
    }

    #[test]
    fn quadratic_critical_value() {
        let sys = quadratic(2.0);
        let ev = sys.fiber_eval(&BaseState::circle(0.4), &line(0.0)).unwrap();
        assert_eq!(ev.value, line(2.0));
        assert_eq!((ev.left_deriv, ev.right_deriv), (0.0, 0.0));
    }

    #[test]
    fn discontinuity_uses_right_limit() {
        let sys = intermittent(ParamMap::Constant(0.8));
        let th = BaseState::circle(0.0);
        let ev = sys.fiber_eval(&th, &line(0.5)).unwrap();
        assert!(ev.value.as_line().unwrap().abs() < 1e-15);
        assert!((sys.fiber_left_limit(&th, 0.5).unwrap() - 1.0).abs() < 1e-15);
        assert!(ev.left_deriv != ev.right_deriv || (ev.left_deriv - ev.right_deriv).abs() < 1e-12);
    }

    #[test]
    fn out_of_domain_point_is_rejected() {
        let sys = quadratic(2.0);
        assert!(matches!(sys.fiber_eval(&BaseState::circle(0.0), &line(2.5)), Err(LabError::Domain(_))));
        assert!(sys.fiber_eval(&BaseState::circle(0.0), &FiberPoint::Torus([0.1, 0.1])).is_err());
    }

    #[test]
    fn breakpoint_lists() {
        assert_eq!(quadratic(1.5).fiber_breakpoints(&BaseState::circle(0.0)), vec![0.0]);
        assert_eq!(intermittent(ParamMap::Constant(1.0)).breakpoints(), &[0.5]);
        let t = SkewSystem::new(BaseSystem::rotation(0.0).unwrap(), FiberFamily::RescaledDoubling { depth: 2 }).unwrap();
        assert_eq!(t.breakpoints(), &[0.0, 0.25, 0.375, 0.5, 0.75]);
        assert_eq!(t.p(), 5);
    }

    #[test]
    fn schwarzian_values() {
        let sys = quadratic(1.7);
        let s = sys.schwarzian_at(&BaseState::circle(0.0), 1.0).unwrap();
        assert!((s + 1.5).abs() < 1e-15);
        assert!(matches!(sys.schwarzian_at(&BaseState::circle(0.0), 1e-13), Err(LabError::Proximity { .. })));
        let t = SkewSystem::new(BaseSystem::rotation(0.0).unwrap(), FiberFamily::RescaledDoubling { depth: 8 }).unwrap();
        assert_eq!(t.schwarzian_at(&BaseState::circle(0.0), 0.3).unwrap(), 0.0);
        let sys = intermittent(ParamMap::Constant(1.2));
        for i in 0..100 {
            let x = (i as f64 + 0.5) / 100.0;
            if (x - 0.5).abs() > 1e-9 {
                assert!(sys.schwarzian_at(&BaseState::circle(0.0), x).unwrap() <= 1e-8);
            }
        }
    }

    #[test]
    fn schwarzian_matches_finite_differences() {
        let sys = intermittent(ParamMap::Constant(0.9));
        let f = sys.interval_map_at(&BaseState::circle(0.0));
        let h = 1e-3;
        for &x in &[0.2, 0.35, 0.7] {
            let (d1, d2, d3) = f.derivs3(x);
            let fd1 = (f.eval(x + h) - f.eval(x - h)) / (2.0 * h);
            let fd2 = (f.eval(x + h) - 2.0 * f.eval(x) + f.eval(x - h)) / (h * h);
            let fd3 = (f.eval(x + 2.0 * h) - 2.0 * f.eval(x + h) + 2.0 * f.eval(x - h) - f.eval(x - 2.0 * h)) / (2.0 * h * h * h);
            assert!((d1 - fd1).abs() < 1e-5, "{x}");
            assert!((d2 - fd2).abs() < 1e-4, "{x}");
            assert!((d3 - fd3).abs() < 1e-2 * d3.abs().max(1.0), "{x}");
        }
    }

    #[test]
    fn validation() {
        let rot = BaseSystem::rotation(0.1).unwrap();
        let bad_t = FiberFamily::Intermittent { beta: 0.5, t: ParamMap::Constant(1.6) };
        assert!(SkewSystem::new(rot.clone(), bad_t).is_err());
        let bad_beta = FiberFamily::Intermittent { beta: 1.0, t: ParamMap::Constant(1.0) };
        assert!(SkewSystem::new(rot.clone(), bad_beta).is_err());
        let escape = FiberFamily::Quadratic { a: ParamMap::Constant(2.1), lo: -2.0, hi: 2.0 };
        assert!(SkewSystem::new(rot.clone(), escape).is_err());
        let shift = BaseSystem::full_shift(vec![0.5, 0.5]).unwrap();
        let sine = FiberFamily::Logistic { r: ParamMap::Sine { mean: 3.8, amplitude: 0.1 } };
        assert!(SkewSystem::new(shift.clone(), sine).is_err());
        let per = FiberFamily::Logistic { r: ParamMap::PerSymbol(vec![3.9, 4.0]) };
        assert!(SkewSystem::new(shift, per).is_ok());
        let singular = TorusFamily::identity_patch(TorusMap::new([[1, 1], [1, 1]], 0.0), CircleArc::new(0.0, 0.5).unwrap());
        assert!(SkewSystem::new(rot, FiberFamily::Torus(singular)).is_err());
    }

    #[test]
    fn identity_patch_switches_on_the_arc() {
        let fam = TorusFamily::identity_patch(TorusMap::new([[2, 1], [1, 1]], 0.05), CircleArc::new(0.0, 0.5).unwrap());
        let sys = SkewSystem::new(BaseSystem::rotation(0.1).unwrap(), FiberFamily::Torus(fam)).unwrap();
        let p = FiberPoint::Torus([0.3, 0.7]);
        let out = sys.fiber_eval(&BaseState::circle(0.75), &p).unwrap();
        assert_eq!(out.value, p);
        assert!((out.right_deriv - 1.0).abs() < 1e-15);
        let inside = sys.fiber_eval(&BaseState::circle(0.25), &p).unwrap();
        assert_ne!(inside.value, p);
    }

    fn all_fixtures() -> Vec<SkewSystem> {
        let rot = BaseSystem::rotation(0.618_033_988_749_894_9).unwrap();
        let arc = CircleArc::new(0.0, 0.9).unwrap();
        vec![
            doubling_on(BaseSystem::expanding(3).unwrap()),
            SkewSystem::new(
                BaseSystem::expanding(4).unwrap(),
                FiberFamily::Quadratic { a: ParamMap::Sine { mean: 1.9, amplitude: 0.04 }, lo: -1.94, hi: 1.94 },
            )
            .unwrap(),
            SkewSystem::new(rot.clone(), FiberFamily::Logistic { r: ParamMap::Sine { mean: 3.9, amplitude: 0.1 } }).unwrap(),
            SkewSystem::new(
                rot.clone(),
                FiberFamily::Intermittent { beta: 0.5, t: ParamMap::Arc { arc, inside: 1.4, outside: 0.9 } },
            )
            .unwrap(),
            SkewSystem::new(rot.clone(), FiberFamily::RescaledDoubling { depth: 6 }).unwrap(),
            SkewSystem::new(
                rot,
                FiberFamily::Torus(TorusFamily::identity_patch(TorusMap::new([[3, 1], [1, 2]], 0.05), arc)),
            )
            .unwrap(),
        ]
    }

    #[test]
    fn fibers_preserve_their_domain() {
        let mut rng = task_rng(11, 0);
        for sys in all_fixtures() {
            for _ in 0..1000 {
                let th = sys.base().sample_invariant(&mut rng);
                let x = match sys.domain() {
                    Domain::Interval { lo, hi } => line(lo + (hi - lo) * rng.random::<f64>()),
                    Domain::Torus => FiberPoint::Torus([rng.random(), rng.random()]),
                };
                let ev = sys.fiber_eval(&th, &x).unwrap();
                assert!(sys.contains(&ev.value), "{:?} -> {:?}", x, ev.value);
                assert!(ev.right_deriv.abs() <= sys.gamma() + 1e-12);
            }
        }
    }

    #[test]
    fn intermittent_fixes_both_ends() {
        let mut rng = task_rng(5, 0);
        for _ in 0..100 {
            let t = 0.5 + 1e-9 + (1.0 - 2e-9) * rng.random::<f64>();
            let f = IntervalMap::intermittent(t, 0.5);
            assert!(f.eval(0.0).abs() <= 1e-15);
            assert!((f.eval(1.0) - 1.0).abs() <= 1e-15);
        }
    }

    #[test]
    fn derivative_sign_is_constant_between_breakpoints() {
        let th = BaseState::circle(0.37);
        for sys in all_fixtures().into_iter().filter(|s| s.is_interval()) {
            let (lo, hi) = sys.interval().unwrap();
            let mut edges = vec![lo];
            edges.extend(sys.breakpoints().iter().copied().filter(|&b| b > lo && b < hi));
            edges.push(hi);
            let f = sys.interval_map_at(&th);
            for w in edges.windows(2) {
                let signs: Vec<bool> = (0..512)
                    .map(|i| w[0] + (w[1] - w[0]) * (i as f64 + 0.5) / 512.0)
                    .map(|x| f.deriv_right(x) > 0.0)
                    .collect();
                assert!(signs.iter().all(|&s| s == signs[0]));
            }
        }
    }

    #[test]
    fn preimage_then_advance_is_identity() {
        let mut rng = task_rng(9, 0);
        let bases = [
            BaseSystem::expanding(2).unwrap(),
            BaseSystem::expanding(3).unwrap(),
            BaseSystem::rotation(0.37).unwrap(),
            BaseSystem::full_shift(vec![0.2, 0.3, 0.5]).unwrap(),
        ];
        for b in bases {
            let sys = doubling_on(b);
            for _ in 0..1000 {
                let th = sys.base().sample_invariant(&mut rng);
                let (pre, _) = sys.base_preimage_sample(&th, &mut rng);
                let back = sys.base_advance(&pre);
                match (&th, &back) {
                    (BaseState::Circle(a), BaseState::Circle(b)) => {
                        // within a few units of 2^-64
                        assert!(a.0.wrapping_sub(b.0).min(b.0.wrapping_sub(a.0)) < 4);
                    }
                    _ => assert_eq!(th, back),
                }
            }
        }
    }
}
