//! Experiment configuration, read from TOML. Unknown keys are errors.

use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use rde_core::fixtures;
use rde_core::systems::{BaseSystem, CircleArc, FiberFamily, ParamMap, SkewSystem, TorusFamily, TorusMap};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Lyapunov,
    Density,
    Pliss,
    HyperbolicTimes,
    Windows,
    EtaMu,
    SrbCount,
    Census,
}

impl Scenario {
    pub const ALL: [Scenario; 8] = [
        Scenario::Lyapunov,
        Scenario::Density,
        Scenario::Pliss,
        Scenario::HyperbolicTimes,
        Scenario::Windows,
        Scenario::EtaMu,
        Scenario::SrbCount,
        Scenario::Census,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Lyapunov => "lyapunov",
            Scenario::Density => "density",
            Scenario::Pliss => "pliss",
            Scenario::HyperbolicTimes => "hyperbolic_times",
            Scenario::Windows => "windows",
            Scenario::EtaMu => "eta_mu",
            Scenario::SrbCount => "srb_count",
            Scenario::Census => "census",
        }
    }

    pub fn describe(self) -> &'static str {
        match self {
            Scenario::Lyapunov => "finite-time vertical exponents of an orbit ensemble",
            Scenario::Density => "Birkhoff histogram of one forward orbit",
            Scenario::Pliss => "Pliss times of log-derivative sequences along orbits",
            Scenario::HyperbolicTimes => "(sigma, delta, b) hyperbolic times along orbits",
            Scenario::Windows => "hyperbolic-like sets H_i and their nesting",
            Scenario::EtaMu => "eta_n and mu_n estimates with invariance residual",
            Scenario::SrbCount => "cluster Birkhoff measures into ergodic components",
            Scenario::Census => "monotone-branch census and counting bounds",
        }
    }

    /// Parameters that must be present in `[params]`.
    pub fn required(self) -> &'static [&'static str] {
        match self {
            Scenario::Lyapunov => &["orbits", "n"],
            Scenario::Density => &["n", "bins"],
            Scenario::Pliss => &["orbits", "n", "c1", "c2"],
            Scenario::HyperbolicTimes => &["orbits", "n", "sigma", "delta", "b"],
            Scenario::Windows => &["depth", "delta"],
            Scenario::EtaMu => &["n", "samples", "bins", "delta", "lambda"],
            Scenario::SrbCount => &["orbits", "n", "bins", "threshold"],
            Scenario::Census => &["depth", "delta", "lambda"],
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub seed: u64,
    /// Output directory; the command line may override it.
    pub output: Option<PathBuf>,
    pub system: SystemConfig,
    #[serde(default)]
    pub params: Params,
}

/// Either a named fixture or an explicit base and fiber family.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub fixture: Option<String>,
    /// Band depth for the `rescaled_t` fixture.
    pub depth: Option<u32>,
    pub base: Option<BaseConfig>,
    pub fiber: Option<FiberConfig>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BaseConfig {
    ExpandingTimesK { k: u32 },
    Rotation { omega: f64 },
    FullShift { weights: Vec<f64> },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FiberConfig {
    ExpandingInterval { k: u32 },
    Quadratic { a: ParamConfig, lo: f64, hi: f64 },
    Logistic { r: ParamConfig },
    Intermittent { beta: f64, t: ParamConfig },
    RescaledDoubling { depth: u32 },
    Torus { inside: TorusMapConfig, outside: Option<TorusMapConfig>, arc_start: f64, arc_length: f64 },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TorusMapConfig {
    pub matrix: [[i64; 2]; 2],
    #[serde(default)]
    pub eps: f64,
}

/// A number, a per-symbol list, or a table describing θ-dependence.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamConfig {
    Constant(f64),
    PerSymbol(Vec<f64>),
    Sine(SineConfig),
    Arc(ArcConfig),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SineConfig {
    pub mean: f64,
    pub amplitude: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArcConfig {
    pub arc_start: f64,
    pub arc_length: f64,
    pub inside: f64,
    pub outside: f64,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    pub orbits: Option<usize>,
    pub n: Option<usize>,
    pub samples: Option<usize>,
    pub bins: Option<usize>,
    pub delta: Option<f64>,
    pub lambda: Option<f64>,
    pub sigma: Option<f64>,
    pub b: Option<f64>,
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    pub threshold: Option<f64>,
    pub burn: Option<usize>,
    pub depth: Option<usize>,
    pub cell_cap: Option<usize>,
    pub steps: Option<usize>,
    pub ensemble: Option<usize>,
    pub grid: Option<usize>,
    /// Start point for single-orbit scenarios.
    pub x0: Option<f64>,
    /// Base point for single-fiber scenarios, circle bases only.
    pub theta0: Option<f64>,
    /// Start interval for srb_count seeds.
    pub starts_lo: Option<f64>,
    pub starts_hi: Option<f64>,
    /// Minimum basin mass asserted by srb_count.
    pub b_floor: Option<f64>,
}

impl Params {
    fn has(&self, key: &str) -> bool {
        let v = serde_json::to_value(self).expect("params serialize");
        v.get(key).is_some_and(|x| !x.is_null())
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let missing: Vec<&str> = self.scenario.required().iter().copied().filter(|k| !self.params.has(k)).collect();
        if !missing.is_empty() {
            bail!("scenario {} needs params: {}", self.scenario, missing.join(", "));
        }
        let sys = self.system.build()?;
        let needs_interval = matches!(
            self.scenario,
            Scenario::Density | Scenario::Windows | Scenario::EtaMu | Scenario::SrbCount | Scenario::Census
        );
        if needs_interval && !sys.is_interval() {
            bail!("scenario {} needs an interval fiber", self.scenario);
        }
        if self.params.theta0.is_some() && !sys.base().is_circle() {
            bail!("theta0 applies to circle bases only");
        }
        Ok(())
    }
}

impl SystemConfig {
    pub fn build(&self) -> Result<SkewSystem> {
        match (&self.fixture, &self.base, &self.fiber) {
            (Some(name), None, None) => {
                if name == "rescaled_t" {
                    return Ok(fixtures::rescaled_t(self.depth.unwrap_or(6))?);
                }
                if self.depth.is_some() {
                    bail!("system.depth applies to the rescaled_t fixture only");
                }
                fixtures::by_name(name)
                    .with_context(|| format!("unknown fixture {name:?}; known: {}", fixtures::NAMES.join(", ")))
            }
            (None, Some(base), Some(fiber)) => {
                if self.depth.is_some() {
                    bail!("system.depth applies to the rescaled_t fixture only");
                }
                Ok(SkewSystem::new(base.build()?, fiber.build()?)?)
            }
            _ => bail!("system needs either `fixture` or both `base` and `fiber`"),
        }
    }
}

impl BaseConfig {
    fn build(&self) -> Result<BaseSystem> {
        Ok(match self {
            BaseConfig::ExpandingTimesK { k } => BaseSystem::expanding(*k)?,
            BaseConfig::Rotation { omega } => BaseSystem::rotation(*omega)?,
            BaseConfig::FullShift { weights } => BaseSystem::full_shift(weights.clone())?,
        })
    }
}

impl ParamConfig {
    fn build(&self) -> Result<ParamMap> {
        Ok(match self {
            ParamConfig::Constant(c) => ParamMap::Constant(*c),
            ParamConfig::PerSymbol(v) => ParamMap::PerSymbol(v.clone()),
            ParamConfig::Sine(s) => ParamMap::Sine { mean: s.mean, amplitude: s.amplitude },
            ParamConfig::Arc(a) => ParamMap::Arc {
                arc: CircleArc::new(a.arc_start, a.arc_length)?,
                inside: a.inside,
                outside: a.outside,
            },
        })
    }
}

impl TorusMapConfig {
    fn build(&self) -> TorusMap {
        TorusMap::new(self.matrix, self.eps)
    }
}

impl FiberConfig {
    fn build(&self) -> Result<FiberFamily> {
        Ok(match self {
            FiberConfig::ExpandingInterval { k } => FiberFamily::ExpandingInterval { k: *k },
            FiberConfig::Quadratic { a, lo, hi } => FiberFamily::Quadratic { a: a.build()?, lo: *lo, hi: *hi },
            FiberConfig::Logistic { r } => FiberFamily::Logistic { r: r.build()? },
            FiberConfig::Intermittent { beta, t } => FiberFamily::Intermittent { beta: *beta, t: t.build()? },
            FiberConfig::RescaledDoubling { depth } => FiberFamily::RescaledDoubling { depth: *depth },
            FiberConfig::Torus { inside, outside, arc_start, arc_length } => FiberFamily::Torus(TorusFamily {
                inside: inside.build(),
                outside: outside.as_ref().map_or_else(TorusMap::identity, TorusMapConfig::build),
                arc: CircleArc::new(*arc_start, *arc_length)?,
            }),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const DOUBLING: &str = r#"
scenario = "lyapunov"
seed = 1
[system]
fixture = "doubling"
[params]
orbits = 4
n = 100
"#;

    #[test]
    fn parses_fixture_config() {
        let c = ExperimentConfig::parse(DOUBLING).unwrap();
        assert_eq!(c.scenario, Scenario::Lyapunov);
        assert_eq!(c.params.orbits, Some(4));
    }

    #[test]
    fn rejects_unknown_keys() {
        let bad = DOUBLING.replace("n = 100", "n = 100\nnn = 3");
        assert!(ExperimentConfig::parse(&bad).is_err());
        let bad_top = format!("colour = 1\n{DOUBLING}");
        assert!(ExperimentConfig::parse(&bad_top).is_err());
    }

    #[test]
    fn rejects_missing_params_and_seed() {
        assert!(ExperimentConfig::parse(&DOUBLING.replace("n = 100", "")).is_err());
        assert!(ExperimentConfig::parse(&DOUBLING.replace("seed = 1", "")).is_err());
        assert!(ExperimentConfig::parse(&DOUBLING.replace("lyapunov", "nope")).is_err());
    }

    #[test]
    fn explicit_system_tables() {
        let text = r#"
scenario = "density"
seed = 3
[system.base]
kind = "rotation"
omega = 0.3
[system.fiber]
kind = "quadratic"
a = { mean = 1.9, amplitude = 0.04 }
lo = -1.94
hi = 1.94
[params]
n = 10
bins = 8
"#;
        let c = ExperimentConfig::parse(text).unwrap();
        let sys = c.system.build().unwrap();
        assert!(sys.is_interval());
        let typo = text.replace("omega", "omegaa");
        assert!(ExperimentConfig::parse(&typo).is_err());
    }
}
