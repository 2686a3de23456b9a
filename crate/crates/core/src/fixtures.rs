//! Reference systems used by the tests, the acceptance suite and the CLI.

use crate::error::Result;
use crate::systems::{BaseSystem, CircleArc, FiberFamily, ParamMap, SkewSystem, TorusFamily, TorusMap};

/// Golden rotation number (√5 − 1)/2.
pub fn golden() -> f64 {
    (5f64.sqrt() - 1.0) / 2.0
}

/// x ↦ 2x mod 1 on [0, 1) over the golden rotation.
pub fn doubling() -> SkewSystem {
    SkewSystem::new(BaseSystem::rotation(golden()).unwrap(), FiberFamily::ExpandingInterval { k: 2 }).unwrap()
}

/// 4x(1 − x) over the golden rotation.
pub fn logistic() -> SkewSystem {
    SkewSystem::new(BaseSystem::rotation(golden()).unwrap(), FiberFamily::Logistic { r: ParamMap::Constant(4.0) })
        .unwrap()
}

/// Per-symbol parameters of the quadratic skew: 1.9 + 0.04 sin(2πs/4).
pub const QUADRATIC_A: [f64; 4] = [1.9, 1.94, 1.9, 1.86];

/// Half-width of the quadratic skew domain.
pub const QUADRATIC_L: f64 = 1.94;

/// a_s − x² on [−1.94, 1.94] over the uniform full shift on four symbols.
pub fn quadratic_skew() -> SkewSystem {
    let base = BaseSystem::full_shift(vec![0.25; 4]).unwrap();
    let fibers = FiberFamily::Quadratic { a: ParamMap::PerSymbol(QUADRATIC_A.to_vec()), lo: -QUADRATIC_L, hi: QUADRATIC_L };
    SkewSystem::new(base, fibers).unwrap()
}

/// Intermittent maps over the golden rotation: slope e^{0.4} at the neutral
/// end on an arc of length 0.9, slope e^{−0.05} off it.
pub fn intermittent() -> SkewSystem {
    let arc = CircleArc::new(0.0, 0.9).unwrap();
    let t = ParamMap::Arc { arc, inside: 0.4f64.exp(), outside: (-0.05f64).exp() };
    SkewSystem::new(BaseSystem::rotation(golden()).unwrap(), FiberFamily::Intermittent { beta: 0.5, t }).unwrap()
}

/// Rescaled doubling map with `depth` dyadic bands over the golden rotation.
pub fn rescaled_t(depth: u32) -> Result<SkewSystem> {
    SkewSystem::new(BaseSystem::rotation(golden())?, FiberFamily::RescaledDoubling { depth })
}

/// Cat-like torus map [[3,1],[1,2]] with a 0.05 sine perturbation on an arc
/// of length 0.9, a 0.02 perturbation of the identity off it.
pub fn torus() -> SkewSystem {
    let fam = TorusFamily {
        inside: TorusMap::new([[3, 1], [1, 2]], 0.05),
        outside: TorusMap::new([[1, 0], [0, 1]], 0.02),
        arc: CircleArc::new(0.0, 0.9).unwrap(),
    };
    SkewSystem::new(BaseSystem::rotation(golden()).unwrap(), FiberFamily::Torus(fam)).unwrap()
}

/// Constant expansion 2·Id on the torus for every base point.
pub fn torus_constant() -> SkewSystem {
    let fam = TorusFamily::identity_patch(TorusMap::new([[2, 0], [0, 2]], 0.0), CircleArc::new(0.0, 1.0).unwrap());
    SkewSystem::new(BaseSystem::rotation(golden()).unwrap(), FiberFamily::Torus(fam)).unwrap()
}

/// Look up a fixture by name.
pub fn by_name(name: &str) -> Option<SkewSystem> {
    Some(match name {
        "doubling" => doubling(),
        "logistic" => logistic(),
        "quadratic_skew" => quadratic_skew(),
        "intermittent" => intermittent(),
        "rescaled_t" => rescaled_t(6).unwrap(),
        "torus" => torus(),
        "torus_constant" => torus_constant(),
        _ => return None,
    })
}

pub const NAMES: [&str; 7] =
    ["doubling", "logistic", "quadratic_skew", "intermittent", "rescaled_t", "torus", "torus_constant"];
