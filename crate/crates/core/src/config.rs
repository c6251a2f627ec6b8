//! JSON run configuration with `scenario`, `integrator`, `safety` and
//! `bifurcation` sections, plus dotted `key=value` overrides.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::bifurcation::{BifurcationProblem, ContinuationSettings};
use crate::environment::EfficiencyConfig;
use crate::error::{Error, Result};
use crate::integrator::{Event, IntegratorConfig};
use crate::model::{AgentParams, Param, Patch};
use crate::safety::SafetyConfig;
use crate::scenarios;
use crate::sim::{AgentSpec, Scenario, TrashSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    #[serde(default)]
    pub name: String,
    pub patches: [Patch; 2],
    pub agents: Vec<AgentSpec>,
    #[serde(default)]
    pub trash: TrashSpec,
    #[serde(default)]
    pub events: Vec<Event>,
    #[serde(default)]
    pub efficiency: EfficiencyConfig,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub param: Param,
    pub values: Vec<f64>,
    /// `b` interval each grid point is continued over.
    pub b_range: (f64, f64),
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            param: Param::U,
            values: (0..10).map(|i| f64::from(105 + 5 * i) / 100.0).collect(),
            b_range: (-1.0, 1.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BifurcationSection {
    pub params: AgentParams,
    pub rho: f64,
    pub free: Param,
    pub range: (f64, f64),
    pub continuation: ContinuationSettings,
    pub sweep: SweepSection,
}

impl Default for BifurcationSection {
    fn default() -> Self {
        Self {
            params: AgentParams {
                d: 1.0,
                u: 1.3,
                b: 0.0,
                k_z: 2.0,
                k_x: 3.0,
                k_y: 3.0,
                k: 10.0,
                sigma: 0.1,
                l: 1.0,
            },
            rho: 0.5,
            free: Param::B,
            range: (-0.6, 0.6),
            continuation: ContinuationSettings::default(),
            sweep: SweepSection::default(),
        }
    }
}

impl BifurcationSection {
    pub fn problem(&self) -> Result<BifurcationProblem> {
        BifurcationProblem::new(self.params, self.rho, self.free, self.range)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub scenario: ScenarioSection,
    pub integrator: IntegratorConfig,
    /// `null` disables collision avoidance.
    pub safety: Option<SafetyConfig>,
    pub bifurcation: BifurcationSection,
}

impl Default for Config {
    fn default() -> Self {
        Config::from_scenario(&scenarios::fast_vs_slow(0))
    }
}

impl Config {
    pub fn from_scenario(s: &Scenario) -> Self {
        Self {
            scenario: ScenarioSection {
                name: s.name.clone(),
                patches: s.patches,
                agents: s.agents.clone(),
                trash: s.trash.clone(),
                events: s.events.clone(),
                efficiency: s.efficiency,
                seed: s.seed,
            },
            integrator: s.integrator,
            safety: s.safety,
            bifurcation: BifurcationSection::default(),
        }
    }

    pub fn to_scenario(&self) -> Scenario {
        let s = &self.scenario;
        Scenario {
            name: s.name.clone(),
            patches: s.patches,
            agents: s.agents.clone(),
            trash: s.trash.clone(),
            events: s.events.clone(),
            integrator: self.integrator,
            safety: self.safety,
            efficiency: s.efficiency,
            seed: s.seed,
        }
    }

    /// Parses a config document and applies `key=value` overrides.
    ///
    /// Errors name the offending field path; without overrides they also
    /// carry the line and column.
    pub fn parse(text: &str, overrides: &[String]) -> Result<Self> {
        if overrides.is_empty() {
            let de = &mut serde_json::Deserializer::from_str(text);
            return serde_path_to_error::deserialize(de).map_err(|e| {
                let path = e.path().to_string();
                let inner = e.into_inner();
                Error::Config(format!("at `{path}`: {inner}"))
            });
        }
        let mut doc: Value = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        for o in overrides {
            apply_override(&mut doc, o)?;
        }
        serde_path_to_error::deserialize(doc).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            Error::Config(format!("at `{path}`: {inner}"))
        })
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config always serialises")
    }
}

/// Sets `a.b.c=value` in a JSON document. The value is read as JSON when it
/// parses and as a string otherwise; numeric segments index arrays.
/// Missing object keys are created.
pub fn apply_override(doc: &mut Value, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override `{assignment}` is not key=value")))?;
    let key = key.trim();
    if key.is_empty() {
        return Err(Error::Config(format!("override `{assignment}` has an empty key")));
    }
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = doc;
    for seg in key.split('.') {
        if node.is_null() {
            *node = Value::Object(Default::default());
        }
        node = match node {
            Value::Object(map) => map.entry(seg.to_string()).or_insert(Value::Null),
            Value::Array(items) => {
                let len = items.len();
                let idx: usize = seg
                    .parse()
                    .map_err(|_| Error::Config(format!("`{seg}` in `{key}` is not an array index")))?;
                items
                    .get_mut(idx)
                    .ok_or_else(|| Error::Config(format!("index {idx} in `{key}` is out of range ({len} items)")))?
            }
            _ => return Err(Error::Config(format!("`{key}` descends into a scalar at `{seg}`"))),
        };
    }
    *node = value;
    Ok(())
}
