use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::AugmentationSpec;
use crate::linalg::ceil_count;
use crate::{Error, Result};

/// Deserialize TOML (by extension) or JSON, reporting the failing line.
pub(crate) fn read_config<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    if path.extension().is_some_and(|e| e == "toml") {
        toml::from_str(&text).map_err(|e| {
            let line = e
                .span()
                .map(|s| text[..s.start].lines().count().max(1))
                .unwrap_or(0);
            Error::parse(path, line, e.message().to_string())
        })
    } else {
        serde_json::from_str(&text).map_err(|e| Error::parse(path, e.line(), e.to_string()))
    }
}

/// Hyperparameters of encoder training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub hidden_width: usize,
    pub embed_width: usize,
    /// Weight of the truncated nuclear norm term; 0 disables it.
    pub tnn_weight: f64,
    /// `γ`; the truncation rank is `r0 = ⌈γ · min(N, d)⌉`.
    pub rank_ratio: f64,
    pub node_temperature: f64,
    pub proto_temperature: f64,
    /// Number of k-means prototypes; defaults to the number of classes.
    pub num_clusters: Option<usize>,
    pub epochs: usize,
    pub step_size: f64,
    pub edge_perturb_ratio: f64,
    pub feature_mask_ratio: f64,
    pub node_drop_ratio: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            hidden_width: 32,
            embed_width: 16,
            tnn_weight: 0.10,
            rank_ratio: 0.2,
            node_temperature: 0.5,
            proto_temperature: 0.5,
            num_clusters: None,
            epochs: 100,
            step_size: 1e-2,
            edge_perturb_ratio: 0.2,
            feature_mask_ratio: 0.2,
            node_drop_ratio: 0.0,
            seed: 0,
        }
    }
}

impl TrainConfig {
    /// Read a config from a `.toml` file, or JSON for any other extension.
    /// Missing fields take their defaults.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        read_config(path.as_ref())
    }

    /// Truncation rank for a graph with `num_nodes` nodes.
    pub fn rank(&self, num_nodes: usize) -> usize {
        ceil_count(self.rank_ratio, num_nodes.min(self.embed_width)).max(1)
    }

    pub fn clusters(&self, num_classes: usize) -> usize {
        self.num_clusters.unwrap_or(num_classes)
    }

    pub fn augmentation(&self, seed: u64) -> AugmentationSpec {
        AugmentationSpec {
            edge_perturb_ratio: self.edge_perturb_ratio,
            feature_mask_ratio: self.feature_mask_ratio,
            node_drop_ratio: self.node_drop_ratio,
            seed,
        }
    }

    /// Check the config against a graph of `num_nodes` nodes and `num_classes` classes.
    pub fn validate(&self, num_nodes: usize, num_classes: usize) -> Result<()> {
        let positive = [
            ("hidden_width", self.hidden_width as f64),
            ("embed_width", self.embed_width as f64),
            ("node_temperature", self.node_temperature),
            ("proto_temperature", self.proto_temperature),
            ("step_size", self.step_size),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Param(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.tnn_weight >= 0.0) || !self.tnn_weight.is_finite() {
            return Err(Error::Param(format!(
                "tnn_weight must be nonnegative, got {}",
                self.tnn_weight
            )));
        }
        if !(self.rank_ratio > 0.0 && self.rank_ratio <= 1.0) {
            return Err(Error::Param(format!(
                "rank_ratio must lie in (0, 1], got {}",
                self.rank_ratio
            )));
        }
        let limit = num_nodes.min(self.embed_width);
        let r0 = self.rank(num_nodes);
        if r0 >= limit {
            return Err(Error::Param(format!(
                "truncation rank r0 = {r0} must be below min(N, d) = {limit}"
            )));
        }
        let k = self.clusters(num_classes);
        if k == 0 || k > num_nodes {
            return Err(Error::Param(format!(
                "cluster count {k} must lie in [1, {num_nodes}]"
            )));
        }
        self.augmentation(0).validate()
    }
}
