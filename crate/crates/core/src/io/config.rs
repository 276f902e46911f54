//! Experiment configuration (TOML) and its content hash.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::induction::InductionConstants;
use crate::kernel::make_uniform_kernel;
use crate::model::ModelParams;

pub const CODE_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Simulate,
    Exact,
    Invert,
    Diagrams,
    Induct,
    Critical,
    Fit,
    Rw,
    Continuum,
    ScaledRange,
    Triangle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum BackendKind {
    Mc,
    #[default]
    Exact,
    /// `pi = delta`; not a contact-process backend, but the reference walk.
    RandomWalk,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelBlock {
    pub d: usize,
    #[serde(rename = "L")]
    pub range: usize,
    pub eps: f64,
    pub lambda: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_grid: Option<Vec<f64>>,
    pub n_max: usize,
    /// Window half-width; `L n_max` when absent.
    #[serde(rename = "R", default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<usize>,
}

impl ModelBlock {
    pub fn radius(&self) -> usize {
        self.radius.unwrap_or(self.range * self.n_max)
    }

    pub fn params(&self) -> Result<ModelParams> {
        self.params_at(self.lambda)
    }

    pub fn params_at(&self, lambda: f64) -> Result<ModelParams> {
        let k = make_uniform_kernel(self.d, self.range)?;
        ModelParams::with_radius(k, self.eps, lambda, self.n_max, self.radius())
    }

    /// The configured `lambda` grid, or the single `lambda`.
    pub fn lambdas(&self) -> Vec<f64> {
        self.lambda_grid.clone().unwrap_or_else(|| vec![self.lambda])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateBlock {
    pub pi0: bool,
}

impl Default for SimulateBlock {
    fn default() -> Self {
        SimulateBlock { pi0: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct ExactBlock {
    /// Cross-check against bond enumeration.
    pub brute_force: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InvertBlock {
    /// Field file holding `tau`.
    pub input: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiagramsBlock {
    pub order: usize,
    pub tilde: bool,
}

impl Default for DiagramsBlock {
    fn default() -> Self {
        DiagramsBlock {
            order: 2,
            tilde: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InductBlock {
    /// Hypotheses are checked for `m <= n`; `n_max` when absent.
    pub n: Option<usize>,
    pub side: usize,
    /// Length of the `lambda_n` sequence; skipped when 0.
    pub lambda_steps: usize,
}

impl Default for InductBlock {
    fn default() -> Self {
        InductBlock {
            n: None,
            side: 16,
            lambda_steps: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CriticalBlock {
    pub lo: f64,
    pub hi: f64,
    pub tol: f64,
}

impl Default for CriticalBlock {
    fn default() -> Self {
        CriticalBlock {
            lo: 0.5,
            hi: 1.2,
            tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitBlock {
    /// Slices entering the Gaussian fit; the last half of the horizon when
    /// empty.
    pub slices: Vec<usize>,
    pub k_count: usize,
    pub smallness: f64,
    /// Enables the susceptibility fit over `lambda_grid`.
    pub lambda_c: Option<f64>,
    /// Field files of `tau` used instead of the backend; they must share
    /// one config hash.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub inputs: Vec<PathBuf>,
}

impl Default for FitBlock {
    fn default() -> Self {
        FitBlock {
            slices: Vec::new(),
            k_count: 6,
            smallness: 0.2,
            lambda_c: None,
            inputs: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ContinuumBlock {
    pub t: f64,
    pub eps: Vec<f64>,
}

impl Default for ContinuumBlock {
    fn default() -> Self {
        ContinuumBlock {
            t: 2.0,
            eps: vec![1.0, 0.5, 0.25, 0.125],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScaledRangeBlock {
    pub b: f64,
    pub l1: f64,
    pub big_t: f64,
    pub times: Vec<f64>,
    pub k_count: usize,
    pub mu: Option<f64>,
}

impl Default for ScaledRangeBlock {
    fn default() -> Self {
        ScaledRangeBlock {
            b: 1.0,
            l1: 1.0,
            big_t: 8.0,
            times: vec![0.5, 1.0, 2.0],
            k_count: 4,
            mu: None,
        }
    }
}

/// One experiment. Only `output` is excluded from the content hash.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: Kind,
    #[serde(default)]
    pub backend: BackendKind,
    #[serde(default = "default_samples")]
    pub samples: u64,
    #[serde(default)]
    pub seed: u64,
    pub model: ModelBlock,
    #[serde(default)]
    pub constants: InductionConstants,
    #[serde(default)]
    pub output: OutputBlock,
    #[serde(default)]
    pub simulate: SimulateBlock,
    #[serde(default)]
    pub exact: ExactBlock,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub invert: Option<InvertBlock>,
    #[serde(default)]
    pub diagrams: DiagramsBlock,
    #[serde(default)]
    pub induct: InductBlock,
    #[serde(default)]
    pub critical: CriticalBlock,
    #[serde(default)]
    pub fit: FitBlock,
    #[serde(default)]
    pub continuum: ContinuumBlock,
    #[serde(default)]
    pub scaled_range: ScaledRangeBlock,
}

fn default_samples() -> u64 {
    10_000
}

fn toml_error(path: &Path, text: &str, e: toml::de::Error) -> Error {
    let line = e
        .span()
        .map(|s| text[..s.start.min(text.len())].lines().count().max(1))
        .unwrap_or(0);
    Error::Parse {
        path: path.to_path_buf(),
        line,
        reason: e.message().to_string(),
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str, path: &Path) -> Result<Self> {
        toml::from_str(text).map_err(|e| toml_error(path, text, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text, path)
    }

    /// Loads with `key.path=value` overrides applied to the TOML tree.
    pub fn load_with_overrides(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut tree: toml::Table = text.parse().map_err(|e| toml_error(path, &text, e))?;
        for o in overrides {
            apply_override(&mut tree, o)?;
        }
        let merged = toml::to_string(&tree).map_err(|e| Error::validation("override", e.to_string()))?;
        Self::from_toml_str(&merged, path)
    }

    /// Hex SHA-256 of the canonical JSON form, without the output block.
    pub fn hash(&self) -> String {
        let mut v = serde_json::to_value(self).expect("config serializes");
        if let Some(m) = v.as_object_mut() {
            m.remove("output");
        }
        let mut h = Sha256::new();
        h.update(v.to_string().as_bytes());
        hex(&h.finalize())
    }

    pub fn validate(&self) -> Result<()> {
        let m = &self.model;
        if m.d == 0 {
            return Err(Error::validation("model.d", "must be >= 1"));
        }
        if m.range == 0 {
            return Err(Error::validation("model.L", "must be >= 1"));
        }
        if !(m.eps > 0.0 && m.eps <= 1.0) {
            return Err(Error::validation("model.eps", "must lie in (0, 1]"));
        }
        for l in m.lambdas() {
            if !(l >= 0.0 && l.is_finite()) {
                return Err(Error::validation("model.lambda", format!("{l} must be >= 0")));
            }
        }
        if self.backend == BackendKind::Mc && self.samples == 0 {
            return Err(Error::validation("samples", "must be positive"));
        }
        match self.kind {
            Kind::Invert if self.invert.is_none() => {
                return Err(Error::validation("invert.input", "missing"));
            }
            Kind::Diagrams if self.backend == BackendKind::RandomWalk => {
                return Err(Error::validation("backend", "diagrams need a contact-process backend"));
            }
            Kind::Induct => {
                self.constants.validate(m.d).map_err(|e| match e {
                    Error::Validation { key, reason } => {
                        Error::validation(format!("constants.{key}"), reason)
                    }
                    other => other,
                })?;
            }
            Kind::Critical if !(self.critical.lo < self.critical.hi) => {
                return Err(Error::validation("critical.lo", "bracket must satisfy lo < hi"));
            }
            Kind::Continuum => {
                let c = &self.continuum;
                if c.eps.len() < 3 {
                    return Err(Error::validation("continuum.eps", "need at least three steps"));
                }
                if let Some(e) = c.eps.iter().find(|e| ((c.t / **e) - (c.t / **e).round()).abs() > 1e-9) {
                    return Err(Error::validation("continuum.eps", format!("t / {e} is not an integer")));
                }
            }
            Kind::ScaledRange => self.scaled_range_config().validate().map_err(|e| match e {
                Error::Validation { key, reason } => {
                    Error::validation(format!("scaled_range.{key}"), reason)
                }
                other => other,
            })?,
            _ => {}
        }
        Ok(())
    }

    pub fn scaled_range_config(&self) -> crate::analysis::ScaledRangeConfig {
        let s = &self.scaled_range;
        crate::analysis::ScaledRangeConfig {
            d: self.model.d,
            b: s.b,
            l1: s.l1,
            big_t: s.big_t,
            eps: self.model.eps,
            lambda: self.model.lambda,
            mu: s.mu,
            delta: self.constants.delta,
            times: s.times.clone(),
            k_count: s.k_count,
        }
    }
}

fn apply_override(tree: &mut toml::Table, spec: &str) -> Result<()> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| Error::validation("override", format!("`{spec}` is not key=value")))?;
    let parts: Vec<&str> = key.trim().split('.').collect();
    // parse the value as TOML, falling back to a bare string
    let value: toml::Value = format!("v = {}", raw.trim())
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.trim().to_string()));
    let mut cur = tree;
    for p in &parts[..parts.len() - 1] {
        cur = cur
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| Error::validation(key, "not a table"))?;
    }
    cur.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
kind = "rw"
seed = 3
[model]
d = 1
L = 1
eps = 0.5
lambda = 1.0
n_max = 8
[output]
dir = "out/a"
"#;

    fn parse(s: &str) -> Result<ExperimentConfig> {
        ExperimentConfig::from_toml_str(s, Path::new("test.toml"))
    }

    #[test]
    fn output_path_does_not_enter_hash() {
        let a = parse(BASE).unwrap();
        let b = parse(&BASE.replace("out/a", "elsewhere")).unwrap();
        assert_eq!(a.hash(), b.hash());
        let c = parse(&BASE.replace("seed = 3", "seed = 4")).unwrap();
        assert_ne!(a.hash(), c.hash());
    }

    #[test]
    fn bad_key_is_named() {
        let e = parse(&BASE.replace("eps = 0.5", "eps = 1.5")).unwrap().validate().unwrap_err();
        assert!(matches!(e, Error::Validation { ref key, .. } if key == "model.eps"));
        let e = parse(&BASE.replace("n_max = 8", "n_max = 8\nbogus = 1")).unwrap_err();
        assert!(matches!(e, Error::Parse { line, .. } if line > 0), "{e:?}");
    }

    #[test]
    fn overrides_apply() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.toml");
        std::fs::write(&p, BASE).unwrap();
        let c = ExperimentConfig::load_with_overrides(
            &p,
            &["model.lambda=0.7".into(), "kind=triangle".into()],
        )
        .unwrap();
        assert_eq!(c.model.lambda, 0.7);
        assert_eq!(c.kind, Kind::Triangle);
    }

    #[test]
    fn scaled_range_alpha_checked() {
        let s = BASE.replace("kind = \"rw\"", "kind = \"scaled-range\"").replace("d = 1", "d = 4");
        let mut c = parse(&s).unwrap();
        c.scaled_range.b = 0.0;
        let e = c.validate().unwrap_err();
        assert!(matches!(e, Error::Validation { ref key, .. } if key == "scaled_range.b"));
    }
}
