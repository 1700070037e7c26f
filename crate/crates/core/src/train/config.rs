use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ModelConfig, ModelKind};

/// A full experiment description. Parsed from TOML; every table and key is
/// optional and unknown keys are rejected.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub data: DataConfig,
    pub model: ModelConfig,
    pub train: OptimConfig,
    pub sweep: SweepConfig,
    pub ablation: AblationConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataConfig {
    /// Dataset package directory.
    pub path: PathBuf,
    pub row_normalize: bool,
    /// Number of splits to run.
    pub splits: usize,
    pub fractions: [f64; 3],
    /// Use the package's `splits.json` instead of drawing random splits.
    pub use_dataset_splits: bool,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            path: PathBuf::from("data/cora"),
            row_normalize: true,
            splits: 10,
            fractions: [0.6, 0.2, 0.2],
            use_dataset_splits: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimConfig {
    pub lr: f64,
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub epochs: usize,
    /// Epochs without a validation improvement before stopping.
    pub patience: usize,
    pub seed: u64,
}

impl Default for OptimConfig {
    fn default() -> Self {
        Self {
            lr: 0.01,
            weight_decay: 5e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            epochs: 1000,
            patience: 100,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub depths: Vec<usize>,
    pub models: Vec<ModelKind>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            depths: vec![2, 4, 6, 8, 10],
            models: vec![ModelKind::Mbagcn],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AblationConfig {
    pub variants: Vec<Variant>,
}

impl Default for AblationConfig {
    fn default() -> Self {
        Self {
            variants: Variant::ALL.to_vec(),
        }
    }
}

/// Model switch turned off by an ablation run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    None,
    NoNspl,
    NoHl,
    NoIr,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::None, Variant::NoNspl, Variant::NoHl, Variant::NoIr];

    pub fn name(self) -> &'static str {
        match self {
            Self::None => "none",
            Self::NoNspl => "no_nspl",
            Self::NoHl => "no_hl",
            Self::NoIr => "no_ir",
        }
    }

    pub fn apply(self, model: &ModelConfig) -> ModelConfig {
        let mut m = model.clone();
        match self {
            Self::None => {}
            Self::NoNspl => m.nspl = false,
            Self::NoHl => m.hippo = false,
            Self::NoIr => m.input_related = false,
        }
        m
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown ablation variant {s:?}")))
    }
}

impl TrainConfig {
    /// Parses TOML text and applies `key.path=value` overrides in order.
    pub fn parse(text: &str, overrides: &[String]) -> Result<Self> {
        let mut root: toml::Table =
            toml::from_str(text).map_err(|e| Error::Config(format!("invalid TOML: {}", e.message())))?;
        for o in overrides {
            apply_override(&mut root, o)?;
        }
        let cfg: TrainConfig = toml::Value::Table(root)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>, overrides: &[String]) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text, overrides).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        self.model.validate()?;
        let t = &self.train;
        if !(t.lr > 0.0 && t.lr.is_finite()) {
            return bad(format!("train.lr must be positive, got {}", t.lr));
        }
        if !(t.weight_decay >= 0.0 && t.weight_decay.is_finite()) {
            return bad(format!(
                "train.weight_decay must be non-negative, got {}",
                t.weight_decay
            ));
        }
        if !((0.0..1.0).contains(&t.beta1) && (0.0..1.0).contains(&t.beta2)) {
            return bad("train.beta1 and train.beta2 must lie in [0, 1)".into());
        }
        if !(t.eps > 0.0) {
            return bad("train.eps must be positive".into());
        }
        if t.epochs == 0 {
            return bad("train.epochs must be at least 1".into());
        }
        if t.patience == 0 {
            return bad("train.patience must be at least 1".into());
        }
        if self.data.splits == 0 {
            return bad("data.splits must be at least 1".into());
        }
        if self.data.fractions.iter().any(|&f| !(f > 0.0)) || self.data.fractions.iter().sum::<f64>() > 1.0 + 1e-9 {
            return bad(format!(
                "data.fractions must be positive and sum to at most 1, got {:?}",
                self.data.fractions
            ));
        }
        if self.sweep.depths.is_empty() {
            return bad("sweep.depths is empty".into());
        }
        if self.sweep.models.is_empty() {
            return bad("sweep.models is empty".into());
        }
        if self.ablation.variants.is_empty() {
            return bad("ablation.variants is empty".into());
        }
        Ok(())
    }

    /// TOML rendering used as the config echo.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }
}

/// `a.b.c=value`. The value is read as a TOML literal when it parses as one
/// and as a bare string otherwise.
fn apply_override(root: &mut toml::Table, spec: &str) -> Result<()> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override {spec:?} is not KEY=VALUE")))?;
    let parts: Vec<&str> = key.trim().split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::Config(format!("override key {key:?} is malformed")));
    }
    let raw = raw.trim();
    let value = match toml::from_str::<toml::Table>(&format!("v = {raw}")) {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => toml::Value::String(raw.to_string()),
    };
    let (last, tables) = parts.split_last().expect("non-empty key");
    let mut cur = root;
    for p in tables {
        let entry = cur
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("override {key:?}: {p:?} is not a table")))?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}
