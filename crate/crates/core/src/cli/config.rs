//! Experiment configuration: one `key = value` pair per line, dotted keys,
//! `#` comments. Values are kept as text and typed on access; numbers may
//! use `pi` (`4pi`, `2*pi/3`, `pi/2`). Serialisation sorts the keys, so
//! parsing a serialised config and serialising it again is the identity.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Flow,
    Geodesics,
    Relation,
    NormalForm,
    Solve,
    Fundamental,
    Regularity,
    Commutators,
    Validate,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 9] = [
        ExperimentKind::Flow,
        ExperimentKind::Geodesics,
        ExperimentKind::Relation,
        ExperimentKind::NormalForm,
        ExperimentKind::Solve,
        ExperimentKind::Fundamental,
        ExperimentKind::Regularity,
        ExperimentKind::Commutators,
        ExperimentKind::Validate,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::Flow => "flow",
            ExperimentKind::Geodesics => "geodesics",
            ExperimentKind::Relation => "relation",
            ExperimentKind::NormalForm => "normal-form",
            ExperimentKind::Solve => "solve",
            ExperimentKind::Fundamental => "fundamental",
            ExperimentKind::Regularity => "regularity",
            ExperimentKind::Commutators => "commutators",
            ExperimentKind::Validate => "validate",
        }
    }

    /// Keys accepted by this kind, besides `kind` and `output.*`.
    fn keys(self) -> &'static [&'static str] {
        const CONE: [&str; 2] = ["metric.circumference", "metric.x_max"];
        match self {
            ExperimentKind::Flow => &["metric.circumference", "flow.rays", "flow.samples", "flow.tol", "check.max_error"],
            ExperimentKind::Geodesics => &[
                "geodesics.circumferences",
                "geodesics.samples",
                "near_miss.y",
                "near_miss.eps",
                "near_miss.circumferences",
                "check.max_deviation",
                "check.max_exit_error",
            ],
            ExperimentKind::Relation => &["metric.circumference", "relation.rays", "relation.t_tip", "check.max_defect"],
            ExperimentKind::NormalForm => &[
                "collar.family",
                "collar.a",
                "collar.c",
                "collar.power",
                "collar.period",
                "collar.rho_max",
                "normal_form.points",
                "check.max_cross_term",
                "check.max_recovery",
            ],
            ExperimentKind::Solve => &[
                CONE[0],
                CONE[1],
                "initial.x",
                "initial.theta",
                "initial.width",
                "projection.m_max",
                "projection.mu_max",
                "output.times",
                "grid.nx",
                "grid.ntheta",
                "check.max_energy_drift",
            ],
            ExperimentKind::Fundamental => &[
                CONE[0],
                CONE[1],
                "source.x",
                "source.theta",
                "source.sigma",
                "solver.t_final",
                "solver.tol",
                "output.times",
                "grid.nx",
                "grid.ntheta",
                "check.max_energy_drift",
                "check.max_mass_error",
            ],
            ExperimentKind::Regularity => &[
                CONE[0],
                CONE[1],
                "source.x",
                "source.theta",
                "source.sigma",
                "solver.t_final",
                "solver.tol",
                "probes.points",
                "scan.t_start",
                "scan.t_end",
                "scan.dt",
                "scan.half_width",
                "scan.stride",
                "scan.threshold",
                "check.max_anomalies",
            ],
            ExperimentKind::Commutators => &["commutators.sizes", "perturbation.a", "perturbation.m", "check.order_tol"],
            ExperimentKind::Validate => &["validate.criteria"],
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ExperimentKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown experiment kind `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            _ => Err(Error::Config(format!("unknown output format `{s}` (csv or json)"))),
        }
    }
}

const COMMON_KEYS: [&str; 3] = ["kind", "output.dir", "output.format"];

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ExperimentConfig {
    entries: BTreeMap<String, String>,
}

fn valid_key(k: &str) -> bool {
    !k.is_empty()
        && k.split('.').all(|part| {
            !part.is_empty() && part.chars().all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_')
        })
}

/// Evaluates `a`, `a*pi`, `api`, `pi/b`, `a*pi/b` and plain floats.
pub fn parse_number(text: &str) -> Result<f64> {
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || Error::Parse(format!("not a number: `{text}`"));
    if let Ok(v) = s.parse::<f64>() {
        return Ok(v);
    }
    let (num, den) = match s.split_once('/') {
        Some((a, b)) => (a, Some(b.parse::<f64>().map_err(|_| bad())?)),
        None => (s.as_str(), None),
    };
    let value = if let Some(coef) = num.strip_suffix("pi") {
        let coef = coef.strip_suffix('*').unwrap_or(coef);
        let c = match coef {
            "" => 1.0,
            "-" => -1.0,
            c => c.parse::<f64>().map_err(|_| bad())?,
        };
        c * std::f64::consts::PI
    } else {
        num.parse::<f64>().map_err(|_| bad())?
    };
    Ok(match den {
        Some(d) => value / d,
        None => value,
    })
}

impl ExperimentConfig {
    pub fn new(kind: ExperimentKind) -> Self {
        let mut c = Self::default();
        c.set("kind", kind.as_str());
        c
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected `key = value`", no + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            if !valid_key(k) {
                return Err(Error::Parse(format!("line {}: invalid key `{k}`", no + 1)));
            }
            if v.is_empty() {
                return Err(Error::Parse(format!("line {}: empty value for `{k}`", no + 1)));
            }
            if entries.insert(k.to_string(), v.to_string()).is_some() {
                return Err(Error::Parse(format!("line {}: duplicate key `{k}`", no + 1)));
            }
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_text(&self) -> String {
        self.entries.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    /// Hex SHA-256 of the canonical text.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_text().as_bytes()))
    }

    pub fn set(&mut self, key: &str, value: &str) {
        self.entries.insert(key.to_string(), value.trim().to_string());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn kind(&self) -> Result<ExperimentKind> {
        self.get("kind").ok_or_else(|| Error::Config("missing `kind`".into()))?.parse()
    }

    pub fn format(&self) -> Result<OutputFormat> {
        self.get("output.format").map_or(Ok(OutputFormat::Csv), str::parse)
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        self.get(key).map_or(Ok(default), parse_number)
    }

    pub fn f64_req(&self, key: &str) -> Result<f64> {
        parse_number(self.get(key).ok_or_else(|| Error::Config(format!("missing `{key}`")))?)
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| Error::Parse(format!("`{key}` must be a non-negative integer (got `{v}`)"))),
        }
    }

    /// Comma-separated numbers; an empty list is written `none`.
    pub fn list_or(&self, key: &str, default: &[f64]) -> Result<Vec<f64>> {
        match self.get(key) {
            None => Ok(default.to_vec()),
            Some("none") => Ok(Vec::new()),
            Some(v) => v.split(',').map(parse_number).collect(),
        }
    }

    /// Comma-separated `a:b` pairs; an empty list is written `none`.
    pub fn pairs_or(&self, key: &str, default: &[(f64, f64)]) -> Result<Vec<(f64, f64)>> {
        match self.get(key) {
            None => Ok(default.to_vec()),
            Some("none") => Ok(Vec::new()),
            Some(v) => v
                .split(',')
                .map(|p| {
                    let (a, b) = p
                        .split_once(':')
                        .ok_or_else(|| Error::Parse(format!("`{key}`: expected `a:b`, got `{}`", p.trim())))?;
                    Ok((parse_number(a)?, parse_number(b)?))
                })
                .collect(),
        }
    }

    /// Schema check: known keys only, values of the right type, tolerances
    /// and sizes positive.
    pub fn validate(&self) -> Result<ExperimentKind> {
        let kind = self.kind()?;
        for k in self.entries.keys() {
            if !COMMON_KEYS.contains(&k.as_str()) && !kind.keys().contains(&k.as_str()) {
                return Err(Error::Config(format!("key `{k}` is not used by `{kind}` experiments")));
            }
        }
        self.format()?;
        for (k, v) in &self.entries {
            let leaf = k.rsplit('.').next().unwrap_or(k);
            let numeric = k.starts_with("check.")
                || matches!(
                    leaf,
                    "circumference" | "x_max" | "tol" | "sigma" | "t_final" | "width" | "t_tip" | "y" | "x" | "theta"
                        | "a" | "c" | "period" | "rho_max" | "mu_max" | "t_start" | "t_end" | "dt" | "half_width"
                        | "stride" | "threshold"
                );
            if numeric {
                let x = parse_number(v)?;
                if !x.is_finite() {
                    return Err(Error::Config(format!("`{k}` must be finite")));
                }
                let positive = (k.starts_with("check.") && k != "check.max_anomalies")
                    || matches!(leaf, "circumference" | "x_max" | "tol" | "sigma" | "width" | "period" | "rho_max"
                        | "mu_max" | "dt" | "half_width" | "stride");
                if positive && !(x > 0.0) {
                    return Err(Error::Config(format!("`{k}` must be positive (got {v})")));
                }
                if !(x >= 0.0) && k == "check.max_anomalies" {
                    return Err(Error::Config(format!("`{k}` must be non-negative (got {v})")));
                }
            }
        }
        for k in ["flow.rays", "flow.samples", "geodesics.samples", "relation.rays", "projection.m_max", "grid.nx", "grid.ntheta"] {
            if self.get(k).is_some() && self.usize_or(k, 0)? == 0 {
                return Err(Error::Config(format!("`{k}` must be positive")));
            }
        }
        Ok(kind)
    }
}
