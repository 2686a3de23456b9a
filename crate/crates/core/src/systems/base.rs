//! Base dynamics: points of the base space and the maps acting on them.

use std::fmt;
use std::sync::Arc;

use rand::Rng;

use crate::error::{domain, LabError, Result};
use crate::rng::{splitmix64, unit_from_bits};

const TWO_POW_64: f64 = 18_446_744_073_709_551_616.0;

/// A point of the circle `[0, 1)` stored as a 64-bit binary fraction.
///
/// Every map acting on it reduces mod 1 through wrapping integer arithmetic,
/// so no angle accumulates rounding error over long orbits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CirclePoint(pub u64);

impl CirclePoint {
    pub fn from_f64(t: f64) -> Self {
        let t = t.rem_euclid(1.0);
        // saturating cast: t just below 1 maps to the last representable fraction
        CirclePoint((t * TWO_POW_64) as u64)
    }

    pub fn to_f64(self) -> f64 {
        (self.0 >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Arc-length distance on the circle.
    pub fn distance(self, other: CirclePoint) -> f64 {
        let d = self.0.wrapping_sub(other.0);
        d.min(d.wrapping_neg()) as f64 / TWO_POW_64
    }
}

#[derive(Debug)]
struct Node {
    symbol: u32,
    next: Option<Arc<Node>>,
}

impl Drop for Node {
    // long prepend chains would otherwise drop recursively
    fn drop(&mut self) {
        let mut next = self.next.take();
        while let Some(arc) = next {
            match Arc::try_unwrap(arc) {
                Ok(mut node) => next = node.next.take(),
                Err(_) => break,
            }
        }
    }
}

/// A one-sided symbol sequence: an explicit prefix followed by a lazily
/// generated tail.
///
/// The prefix is a persistent list, so shifting and prepending are O(1) and
/// never disturb other states sharing the same suffix. Tail symbols are a
/// pure function of `(tail_seed, position)` drawn from the shift's marginal
/// weights.
#[derive(Clone)]
pub struct ShiftWord {
    head: Option<Arc<Node>>,
    len: usize,
    tail_seed: u64,
    tail_pos: u64,
    cdf: Arc<[f64]>,
}

impl ShiftWord {
    fn new(prefix: &[u32], tail_seed: u64, cdf: Arc<[f64]>) -> Self {
        let mut head = None;
        for &symbol in prefix.iter().rev() {
            head = Some(Arc::new(Node { symbol, next: head }));
        }
        ShiftWord { head, len: prefix.len(), tail_seed, tail_pos: 0, cdf }
    }

    fn tail_symbol(&self, offset: u64) -> u32 {
        let pos = self.tail_pos + offset;
        let u = unit_from_bits(splitmix64(self.tail_seed ^ splitmix64(pos)));
        sample_cdf(&self.cdf, u)
    }

    /// The symbol at position `i` (0 is the current symbol).
    pub fn symbol(&self, i: usize) -> u32 {
        let mut node = self.head.as_deref();
        let mut k = 0;
        while let Some(n) = node {
            if k == i {
                return n.symbol;
            }
            k += 1;
            node = n.next.as_deref();
        }
        self.tail_symbol((i - self.len) as u64)
    }

    pub fn first(&self) -> u32 {
        match &self.head {
            Some(n) => n.symbol,
            None => self.tail_symbol(0),
        }
    }

    /// The first `k` symbols, materializing tail symbols as needed.
    pub fn prefix(&self, k: usize) -> Vec<u32> {
        let mut out = Vec::with_capacity(k);
        let mut node = self.head.as_deref();
        while let Some(n) = node {
            if out.len() == k {
                return out;
            }
            out.push(n.symbol);
            node = n.next.as_deref();
        }
        let mut offset = 0;
        while out.len() < k {
            out.push(self.tail_symbol(offset));
            offset += 1;
        }
        out
    }

    pub fn alphabet_size(&self) -> usize {
        self.cdf.len()
    }

    fn shifted(&self) -> ShiftWord {
        let mut w = self.clone();
        match &self.head {
            Some(n) => {
                w.head = n.next.clone();
                w.len -= 1;
            }
            None => w.tail_pos += 1,
        }
        w
    }

    fn prepended(&self, symbol: u32) -> ShiftWord {
        let mut w = self.clone();
        w.head = Some(Arc::new(Node { symbol, next: self.head.clone() }));
        w.len += 1;
        w
    }
}

impl PartialEq for ShiftWord {
    fn eq(&self, other: &Self) -> bool {
        if self.len != other.len
            || self.tail_seed != other.tail_seed
            || self.tail_pos != other.tail_pos
            || self.cdf != other.cdf
        {
            return false;
        }
        let (mut a, mut b) = (self.head.as_deref(), other.head.as_deref());
        while let (Some(x), Some(y)) = (a, b) {
            if x.symbol != y.symbol {
                return false;
            }
            if let (Some(p), Some(q)) = (&x.next, &y.next) {
                if Arc::ptr_eq(p, q) {
                    return true;
                }
            }
            a = x.next.as_deref();
            b = y.next.as_deref();
        }
        true
    }
}

impl fmt::Debug for ShiftWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ShiftWord({:?}.., seed={:#x}+{})", self.prefix(8), self.tail_seed, self.tail_pos)
    }
}

fn sample_cdf(cdf: &[f64], u: f64) -> u32 {
    let i = cdf.partition_point(|&c| c <= u);
    i.min(cdf.len() - 1) as u32
}

/// A point of the base space.
#[derive(Clone, Debug, PartialEq)]
pub enum BaseState {
    Circle(CirclePoint),
    Word(ShiftWord),
}

impl BaseState {
    pub fn circle(t: f64) -> Self {
        BaseState::Circle(CirclePoint::from_f64(t))
    }

    /// The circle coordinate, if this is a circle point.
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            BaseState::Circle(p) => Some(p.to_f64()),
            BaseState::Word(_) => None,
        }
    }

    pub fn as_word(&self) -> Option<&ShiftWord> {
        match self {
            BaseState::Word(w) => Some(w),
            BaseState::Circle(_) => None,
        }
    }
}

impl fmt::Display for BaseState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BaseState::Circle(p) => write!(f, "{}", p.to_f64()),
            BaseState::Word(w) => {
                let s: Vec<String> = w.prefix(8).iter().map(|s| s.to_string()).collect();
                write!(f, "{}", s.join("."))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum BaseKind {
    /// θ ↦ kθ mod 1 on the circle, preserving Lebesgue measure.
    ExpandingTimesK { k: u32 },
    /// θ ↦ θ + ω mod 1.
    Rotation { omega: f64 },
    /// Left shift on one-sided sequences with a Bernoulli measure.
    FullShift { weights: Vec<f64> },
}

/// Base transformation together with its invariant measure.
#[derive(Clone, Debug, PartialEq)]
pub struct BaseSystem {
    kind: BaseKind,
    step: u64,
    cdf: Arc<[f64]>,
}

impl BaseSystem {
    pub fn expanding(k: u32) -> Result<Self> {
        if k < 2 {
            return domain(format!("expanding base needs k >= 2, got {k}"));
        }
        Ok(BaseSystem { kind: BaseKind::ExpandingTimesK { k }, step: 0, cdf: Arc::from(Vec::new()) })
    }

    pub fn rotation(omega: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&omega) {
            return domain(format!("rotation angle must lie in [0,1), got {omega}"));
        }
        Ok(BaseSystem {
            kind: BaseKind::Rotation { omega },
            step: CirclePoint::from_f64(omega).0,
            cdf: Arc::from(Vec::new()),
        })
    }

    pub fn full_shift(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() || weights.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
            return domain("shift weights must be positive and finite");
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return domain(format!("shift weights must sum to 1, got {total}"));
        }
        let mut acc = 0.0;
        let mut cdf: Vec<f64> = weights
            .iter()
            .map(|w| {
                acc += w;
                acc
            })
            .collect();
        *cdf.last_mut().unwrap() = 1.0;
        Ok(BaseSystem { kind: BaseKind::FullShift { weights }, step: 0, cdf: Arc::from(cdf) })
    }

    pub fn kind(&self) -> &BaseKind {
        &self.kind
    }

    pub fn is_invertible(&self) -> bool {
        matches!(self.kind, BaseKind::Rotation { .. })
    }

    pub fn is_circle(&self) -> bool {
        !matches!(self.kind, BaseKind::FullShift { .. })
    }

    pub fn alphabet_size(&self) -> Option<usize> {
        match &self.kind {
            BaseKind::FullShift { weights } => Some(weights.len()),
            _ => None,
        }
    }

    /// A shift-space state with the given explicit prefix.
    pub fn word(&self, prefix: &[u32], tail_seed: u64) -> Result<BaseState> {
        let n = match self.alphabet_size() {
            Some(n) => n,
            None => return domain("symbol words need a full-shift base"),
        };
        if let Some(s) = prefix.iter().find(|&&s| s as usize >= n) {
            return domain(format!("symbol {s} outside alphabet of size {n}"));
        }
        Ok(BaseState::Word(ShiftWord::new(prefix, tail_seed, self.cdf.clone())))
    }

    pub fn check_state(&self, theta: &BaseState) -> Result<()> {
        match (theta, self.is_circle()) {
            (BaseState::Circle(_), true) => Ok(()),
            (BaseState::Word(w), false) if w.alphabet_size() == self.cdf.len() => Ok(()),
            _ => Err(LabError::Domain("base state does not match the base system".into())),
        }
    }

    /// One step of the base map.
    pub fn advance(&self, theta: &BaseState) -> BaseState {
        match (&self.kind, theta) {
            (BaseKind::ExpandingTimesK { k }, BaseState::Circle(p)) => {
                let k = *k as u64;
                // kθ exactly mod 1; the digit shifted in from below the stored
                // precision is a fixed hash of the state
                let refill = splitmix64(p.0) % k;
                BaseState::Circle(CirclePoint(p.0.wrapping_mul(k).wrapping_add(refill)))
            }
            (BaseKind::Rotation { .. }, BaseState::Circle(p)) => {
                BaseState::Circle(CirclePoint(p.0.wrapping_add(self.step)))
            }
            (BaseKind::FullShift { .. }, BaseState::Word(w)) => BaseState::Word(w.shifted()),
            _ => theta.clone(),
        }
    }

    /// Sample one preimage with the conditional weights of the invariant
    /// measure. Returns the preimage and the log-probability of the branch.
    pub fn preimage_sample<R: Rng + ?Sized>(&self, theta: &BaseState, rng: &mut R) -> (BaseState, f64) {
        match (&self.kind, theta) {
            (BaseKind::ExpandingTimesK { k }, BaseState::Circle(p)) => {
                let b = rng.random_range(0..*k) as u128;
                let wide = (b << 64) | p.0 as u128;
                let pre = if k.is_power_of_two() {
                    (wide >> k.trailing_zeros()) as u64
                } else {
                    (wide / *k as u128) as u64
                };
                (BaseState::Circle(CirclePoint(pre)), -(*k as f64).ln())
            }
            (BaseKind::Rotation { .. }, BaseState::Circle(p)) => {
                (BaseState::Circle(CirclePoint(p.0.wrapping_sub(self.step))), 0.0)
            }
            (BaseKind::FullShift { weights }, BaseState::Word(w)) => {
                let s = sample_cdf(&self.cdf, rng.random::<f64>());
                (BaseState::Word(w.prepended(s)), weights[s as usize].ln())
            }
            _ => (theta.clone(), 0.0),
        }
    }

    /// For a full shift, draw the symbol a preimage would prepend. Consumes
    /// the random source exactly as [`BaseSystem::preimage_sample`] does.
    pub(crate) fn preimage_symbol<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<u32> {
        match self.kind {
            BaseKind::FullShift { .. } => Some(sample_cdf(&self.cdf, rng.random::<f64>())),
            _ => None,
        }
    }

    /// Draw a state from the invariant measure.
    pub fn sample_invariant<R: Rng + ?Sized>(&self, rng: &mut R) -> BaseState {
        match &self.kind {
            BaseKind::FullShift { .. } => BaseState::Word(ShiftWord::new(&[], rng.random(), self.cdf.clone())),
            _ => BaseState::Circle(CirclePoint(rng.random())),
        }
    }
}
