//! JSON configuration of a measure set.
//!
//! ```json
//! {"d": 2,
//!  "rho_change": [[1, 2, 0.5], [2, 1, 1.0]],
//!  "rho_pair": [1.0, 0.0],
//!  "q": [{"target": 1, "atoms": [[1.0, [0.5, 0.5]]]}],
//!  "family": [{"target": 2, "kind": "beta", "a": 0.5, "b": 1.5, "nodes": 32}]}
//! ```
//!
//! Types are numbered from 1. `family` may be a single object or a list.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::measures::{Atom, Family, FiniteMeasureOnCube, MergerMeasureSet, QuadratureRule};
use crate::{Error, Result, SCHEMA_VERSION};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema_version: Option<u32>,
    pub d: usize,
    /// Entries `[j, i, ρ_{j→i}]`.
    #[serde(default)]
    pub rho_change: Vec<(usize, usize, f64)>,
    /// `ρ_{ii→i}` per type; empty means all zero.
    #[serde(default)]
    pub rho_pair: Vec<f64>,
    #[serde(default)]
    pub q: Vec<QConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<OneOrMany<FamilyConfig>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QConfig {
    pub target: usize,
    /// Atoms `[weight, [s_1, ..., s_d]]`.
    pub atoms: Vec<(f64, Vec<f64>)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T> OneOrMany<T> {
    pub fn as_slice(&self) -> &[T] {
        match self {
            OneOrMany::One(t) => std::slice::from_ref(t),
            OneOrMany::Many(v) => v,
        }
    }
}

/// A within-type parametric density, discretized on the target's axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyConfig {
    pub target: usize,
    /// `"beta"` (needs `a`, `b`, optional `mass`) or `"power"` (needs `c`, `theta`).
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mass: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(default = "default_rule")]
    pub rule: QuadratureRule,
    #[serde(default = "default_nodes")]
    pub nodes: usize,
}

fn default_rule() -> QuadratureRule {
    QuadratureRule::GaussLegendre
}

fn default_nodes() -> usize {
    32
}

impl FamilyConfig {
    fn family(&self) -> Result<Family> {
        let need = |v: Option<f64>, name: &str| {
            v.ok_or_else(|| Error::Malformed(format!("family '{}' needs field '{name}'", self.kind)))
        };
        match self.kind.as_str() {
            "beta" => Ok(Family::Beta { a: need(self.a, "a")?, b: need(self.b, "b")?, mass: self.mass.unwrap_or(1.0) }),
            "power" => Ok(Family::Power { c: need(self.c, "c")?, theta: need(self.theta, "theta")? }),
            other => Err(Error::Malformed(format!("unknown family kind '{other}'"))),
        }
    }

    fn from_tag(target: usize, tag: &crate::measures::FamilyTag) -> Self {
        let mut cfg = FamilyConfig {
            target,
            kind: String::new(),
            a: None,
            b: None,
            mass: None,
            c: None,
            theta: None,
            rule: tag.rule,
            nodes: tag.nodes,
        };
        match tag.family {
            Family::Beta { a, b, mass } => {
                cfg.kind = "beta".into();
                cfg.a = Some(a);
                cfg.b = Some(b);
                cfg.mass = Some(mass);
            }
            Family::Power { c, theta } => {
                cfg.kind = "power".into();
                cfg.c = Some(c);
                cfg.theta = Some(theta);
            }
        }
        cfg
    }
}

fn type_index(t: usize, d: usize) -> Result<usize> {
    if (1..=d).contains(&t) {
        Ok(t - 1)
    } else {
        Err(Error::Malformed(format!("type {t} outside 1..={d}")))
    }
}

impl MeasureConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: MeasureConfig = serde_json::from_str(text)?;
        if let Some(v) = cfg.schema_version {
            if v != SCHEMA_VERSION {
                return Err(Error::Malformed(format!("unsupported schema_version {v}")));
            }
        }
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| Error::Malformed(format!("cannot read {}: {e}", path.as_ref().display())))?;
        Self::from_json(&text)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Validates the configuration and discretizes any families.
    pub fn build(&self) -> Result<MergerMeasureSet> {
        let d = self.d;
        if d == 0 {
            return Err(Error::Malformed("d must be at least 1".into()));
        }
        let mut rho_change = vec![vec![0.0; d]; d];
        let mut seen = vec![vec![false; d]; d];
        for &(j, i, rate) in &self.rho_change {
            let (j0, i0) = (type_index(j, d)?, type_index(i, d)?);
            if j0 == i0 {
                return Err(Error::Malformed(format!("rho_change entry {j}->{i} is on the diagonal")));
            }
            if std::mem::replace(&mut seen[j0][i0], true) {
                return Err(Error::Malformed(format!("duplicate rho_change entry {j}->{i}")));
            }
            rho_change[j0][i0] = rate;
        }
        let rho_pair = match self.rho_pair.len() {
            0 => vec![0.0; d],
            n if n == d => self.rho_pair.clone(),
            n => return Err(Error::Malformed(format!("rho_pair has {n} entries, expected {d}"))),
        };
        let mut atoms: Vec<Vec<Atom>> = vec![Vec::new(); d];
        for entry in &self.q {
            let t = type_index(entry.target, d)?;
            atoms[t].extend(entry.atoms.iter().map(|(w, s)| Atom::new(*w, s.clone())));
        }
        let mut q = atoms
            .into_iter()
            .map(|a| FiniteMeasureOnCube::new(d, a))
            .collect::<Result<Vec<_>>>()?;
        if let Some(families) = &self.family {
            for fam in families.as_slice() {
                let t = type_index(fam.target, d)?;
                let measure = std::mem::replace(&mut q[t], FiniteMeasureOnCube::zero(d));
                q[t] = measure.with_family(t, fam.family()?, fam.rule, fam.nodes)?;
            }
        }
        MergerMeasureSet::new(d, rho_change, rho_pair, q)
    }

    /// The configuration describing `m`, with families kept symbolic.
    pub fn from_measure_set(m: &MergerMeasureSet) -> Self {
        let d = m.dim();
        let mut rho_change = Vec::new();
        for j in 0..d {
            for i in 0..d {
                let r = m.rho_change(j, i);
                if i != j && r > 0.0 {
                    rho_change.push((j + 1, i + 1, r));
                }
            }
        }
        let mut q = Vec::new();
        let mut families = Vec::new();
        for (i, measure) in m.q_measures().iter().enumerate() {
            let explicit = measure.explicit_atoms();
            if !explicit.is_empty() {
                q.push(QConfig {
                    target: i + 1,
                    atoms: explicit.iter().map(|a| (a.weight, a.point.clone())).collect(),
                });
            }
            if let Some(tag) = measure.family() {
                families.push(FamilyConfig::from_tag(i + 1, tag));
            }
        }
        MeasureConfig {
            schema_version: Some(SCHEMA_VERSION),
            d,
            rho_change,
            rho_pair: m.rho_pairs().to_vec(),
            q,
            family: (!families.is_empty()).then_some(OneOrMany::Many(families)),
        }
    }
}

/// Parses and validates a measure set from JSON text.
pub fn build_measure_set(json: &str) -> Result<MergerMeasureSet> {
    MeasureConfig::from_json(json)?.build()
}
