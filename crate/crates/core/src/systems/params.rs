use std::f64::consts::TAU;

use super::base::{BaseState, BaseSystem};
use crate::error::{domain, Result};

/// An arc `[start, start + length)` of the circle, taken mod 1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CircleArc {
    pub start: f64,
    pub length: f64,
}

impl CircleArc {
    pub fn new(start: f64, length: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&length) || !start.is_finite() {
            return domain(format!("invalid arc start={start} length={length}"));
        }
        Ok(CircleArc { start: start.rem_euclid(1.0), length })
    }

    pub fn contains(&self, t: f64) -> bool {
        (t - self.start).rem_euclid(1.0) < self.length
    }
}

/// How a fiber parameter depends on the base point.
#[derive(Clone, Debug, PartialEq)]
pub enum ParamMap {
    Constant(f64),
    /// `mean + amplitude * sin(2πθ)` on circle bases.
    Sine { mean: f64, amplitude: f64 },
    /// Piecewise constant on a circle arc.
    Arc { arc: CircleArc, inside: f64, outside: f64 },
    /// Indexed by the current symbol of a shift base.
    PerSymbol(Vec<f64>),
}

impl ParamMap {
    pub fn eval(&self, theta: &BaseState) -> f64 {
        match (self, theta) {
            (ParamMap::Constant(c), _) => *c,
            (ParamMap::Sine { mean, amplitude }, BaseState::Circle(p)) => mean + amplitude * (TAU * p.to_f64()).sin(),
            (ParamMap::Arc { arc, inside, outside }, BaseState::Circle(p)) => {
                if arc.contains(p.to_f64()) {
                    *inside
                } else {
                    *outside
                }
            }
            (ParamMap::PerSymbol(v), BaseState::Word(w)) => v[w.first() as usize],
            // combinations rejected by `check_base`
            (ParamMap::Sine { mean, .. }, _) => *mean,
            (ParamMap::Arc { inside, .. }, _) => *inside,
            (ParamMap::PerSymbol(v), _) => v[0],
        }
    }

    /// Value over a shift state with current symbol `s`.
    pub(crate) fn eval_symbol(&self, s: u32) -> f64 {
        match self {
            ParamMap::PerSymbol(v) => v[s as usize],
            ParamMap::Constant(c) => *c,
            ParamMap::Sine { mean, .. } => *mean,
            ParamMap::Arc { inside, .. } => *inside,
        }
    }

    /// Closed range of values the map can take.
    pub fn range(&self) -> (f64, f64) {
        match self {
            ParamMap::Constant(c) => (*c, *c),
            ParamMap::Sine { mean, amplitude } => (mean - amplitude.abs(), mean + amplitude.abs()),
            ParamMap::Arc { arc, inside, outside } => {
                if arc.length >= 1.0 {
                    (*inside, *inside)
                } else if arc.length <= 0.0 {
                    (*outside, *outside)
                } else {
                    (inside.min(*outside), inside.max(*outside))
                }
            }
            ParamMap::PerSymbol(v) => v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x))),
        }
    }

    pub(crate) fn check_base(&self, base: &BaseSystem, name: &str) -> Result<()> {
        let (lo, hi) = self.range();
        if !lo.is_finite() || !hi.is_finite() {
            return domain(format!("parameter {name} has non-finite values"));
        }
        match self {
            ParamMap::Constant(_) => Ok(()),
            ParamMap::Sine { .. } | ParamMap::Arc { .. } if base.is_circle() => Ok(()),
            ParamMap::PerSymbol(v) if base.alphabet_size() == Some(v.len()) => Ok(()),
            _ => domain(format!("parameter map for {name} does not match the base space")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arc_wraps_around_zero() {
        let arc = CircleArc::new(0.95, 0.1).unwrap();
        assert!(arc.contains(0.97));
        assert!(arc.contains(0.02));
        assert!(!arc.contains(0.06));
    }

    #[test]
    fn ranges() {
        assert_eq!(ParamMap::Sine { mean: 1.9, amplitude: 0.04 }.range(), (1.9 - 0.04, 1.9 + 0.04));
        assert_eq!(ParamMap::PerSymbol(vec![0.7, 1.2, 0.9]).range(), (0.7, 1.2));
    }
}
