use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::encoder::{read_config, TrainConfig};
use crate::graph::{NoiseKind, SbmParams};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetSource {
    /// Directory in the plain-text bundle format; must carry `splits.json`.
    Bundle(PathBuf),
    /// Freshly generated per seed.
    Sbm(SbmParams),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    pub rate: f64,
    /// Fraction of attribute coordinates shuffled within each corrupted row.
    pub attribute_ratio: f64,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self {
            kind: NoiseKind::Symmetric,
            rate: 0.0,
            attribute_ratio: 0.0,
        }
    }
}

/// Size of the labeled set for generated graphs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitChoice {
    Count(usize),
    Fraction(f64),
}

impl SplitChoice {
    pub fn labeled_count(self, n: usize) -> usize {
        match self {
            Self::Count(m) => m,
            Self::Fraction(f) => crate::linalg::ceil_count(f, n),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifierSpec {
    /// `η = step_factor / λ̂₁` unless `step_size` is given.
    pub step_factor: f64,
    pub step_size: Option<f64>,
    pub epochs: usize,
}

impl Default for ClassifierSpec {
    fn default() -> Self {
        Self {
            step_factor: 0.9,
            step_size: None,
            epochs: 500,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundSpec {
    pub c0: f64,
    pub x: f64,
    /// Gradient-descent steps `t` of the squared-loss classifier.
    pub steps: usize,
}

impl Default for BoundSpec {
    fn default() -> Self {
        Self {
            c0: 1.0,
            x: 1.0,
            steps: 100,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// The GCN backbone at its seeded initialization, no contrastive training.
    GcnOnly,
    GclLrr,
    /// GCL-LRR embeddings passed through the LR-Attention layer.
    GclLrAttention,
    /// GCL-LRR trained with the TNN weight set to zero.
    GclNoTnn,
}

impl Variant {
    pub const ALL: [Variant; 4] = [
        Variant::GcnOnly,
        Variant::GclLrr,
        Variant::GclLrAttention,
        Variant::GclNoTnn,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::GcnOnly => "gcn-only",
            Self::GclLrr => "gcl-lrr",
            Self::GclLrAttention => "gcl-lr-attention",
            Self::GclNoTnn => "gcl-no-tnn",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::Param(format!("unknown variant {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetSource,
    #[serde(default)]
    pub noise: NoiseSpec,
    #[serde(default = "default_split")]
    pub split: SplitChoice,
    /// Share of the labeled set held out for classifier early stopping.
    #[serde(default = "default_validation")]
    pub validation_fraction: f64,
    #[serde(default)]
    pub encoder: TrainConfig,
    #[serde(default)]
    pub classifier: ClassifierSpec,
    #[serde(default = "default_variants")]
    pub variants: Vec<Variant>,
    #[serde(default)]
    pub bound: BoundSpec,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    /// Not part of the config hash.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

fn default_split() -> SplitChoice {
    SplitChoice::Fraction(0.2)
}

fn default_validation() -> f64 {
    0.2
}

fn default_variants() -> Vec<Variant> {
    Variant::ALL.to_vec()
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

impl ExperimentConfig {
    pub fn new(dataset: DatasetSource) -> Self {
        Self {
            dataset,
            noise: NoiseSpec::default(),
            split: default_split(),
            validation_fraction: default_validation(),
            encoder: TrainConfig::default(),
            classifier: ClassifierSpec::default(),
            variants: default_variants(),
            bound: BoundSpec::default(),
            seeds: default_seeds(),
            output: None,
        }
    }

    /// TOML when the extension is `.toml`, JSON otherwise.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let config: Self = read_config(path.as_ref())?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.variants.is_empty() {
            return Err(Error::Param("at least one variant is required".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::Param("at least one seed is required".into()));
        }
        for (name, v) in [
            ("noise rate", self.noise.rate),
            ("attribute ratio", self.noise.attribute_ratio),
            ("validation fraction", self.validation_fraction),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Param(format!("{name} {v} outside [0, 1]")));
            }
        }
        match self.split {
            SplitChoice::Fraction(f) if !(f > 0.0 && f < 1.0) => {
                return Err(Error::Param(format!("labeled fraction {f} outside (0, 1)")));
            }
            SplitChoice::Count(0) => return Err(Error::Param("labeled count must be positive".into())),
            _ => {}
        }
        if !(self.classifier.step_factor > 0.0 && self.classifier.step_factor < 1.0) {
            return Err(Error::Param(format!(
                "classifier step factor {} outside (0, 1)",
                self.classifier.step_factor
            )));
        }
        if !(self.bound.c0 > 0.0) || !(self.bound.x > 0.0) {
            return Err(Error::Param("bound constants c0 and x must be positive".into()));
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form, output directory excluded.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.output = None;
        let json = serde_json::to_string(&canonical).expect("config serializes");
        Sha256::digest(json.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}
