use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::contrastive::node_loss_allow_zero;
use super::{
    augment_view, cluster_prototypes, contrastive_loss_proto, EncoderParams, ForwardPass,
    PrototypeSet, TrainConfig,
};
use crate::graph::{normalize_adjacency, GraphBundle, NormalizedAdjacency};
use crate::linalg::derive_seed;
use crate::spectral::tnn_gradient;
use crate::Result;

const FIRST_VIEW: u64 = 1;
const SECOND_VIEW: u64 = 2;
const CLUSTERING: u64 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossComponents {
    pub node: f64,
    pub proto: f64,
    /// `‖H Hᵀ‖_{r0}`, before weighting.
    pub tnn: f64,
}

#[derive(Debug, Clone)]
pub struct LossEvaluation {
    /// `node + proto + τ_tnn · tnn`
    pub total: f64,
    pub components: LossComponents,
    pub grad: EncoderParams,
    /// Embedding of the un-augmented graph at the evaluated parameters.
    pub embedding: Array2<f64>,
    pub prototypes: PrototypeSet,
    /// The TNN gradient was taken at a repeated eigenvalue.
    pub degenerate_gap: bool,
}

/// The GCL-LRR training objective for one graph, with the clean normalized
/// adjacency cached.
#[derive(Debug, Clone)]
pub struct Objective<'a> {
    bundle: &'a GraphBundle,
    adjacency: NormalizedAdjacency,
    config: &'a TrainConfig,
}

impl<'a> Objective<'a> {
    pub fn new(bundle: &'a GraphBundle, config: &'a TrainConfig) -> Result<Self> {
        config.validate(bundle.num_nodes(), bundle.num_classes())?;
        Ok(Self {
            bundle,
            adjacency: normalize_adjacency(bundle),
            config,
        })
    }

    pub fn adjacency(&self) -> &NormalizedAdjacency {
        &self.adjacency
    }

    /// Loss and exact parameter gradient. `epoch_seed` fixes both augmented
    /// views and the k-means initialization.
    pub fn evaluate(&self, params: &EncoderParams, epoch_seed: u64) -> Result<LossEvaluation> {
        self.evaluate_with(params, epoch_seed, None)
    }

    /// As [`evaluate`](Self::evaluate), optionally reusing a fixed prototype
    /// set instead of re-clustering. Prototypes are constants of the
    /// objective either way.
    pub fn evaluate_with(
        &self,
        params: &EncoderParams,
        epoch_seed: u64,
        prototypes: Option<&PrototypeSet>,
    ) -> Result<LossEvaluation> {
        let cfg = self.config;
        let clean = ForwardPass::run(params, self.bundle.features().view(), &self.adjacency)?;
        let h = &clean.embedding;

        let views = [FIRST_VIEW, SECOND_VIEW].map(|stream| {
            augment_view(
                self.bundle,
                &cfg.augmentation(derive_seed(epoch_seed, stream)),
            )
        });
        let [first, second] = views;
        let (first, second) = (first?, second?);
        let f1 = ForwardPass::run(params, first.features.view(), &first.adjacency)?;
        let f2 = ForwardPass::run(params, second.features.view(), &second.adjacency)?;
        let node = node_loss_allow_zero(
            f1.embedding.view(),
            f2.embedding.view(),
            cfg.node_temperature,
        )?;

        let prototypes = match prototypes {
            Some(p) => p.clone(),
            None => cluster_prototypes(
                h.view(),
                cfg.clusters(self.bundle.num_classes()),
                derive_seed(epoch_seed, CLUSTERING),
            )?,
        };
        let proto = contrastive_loss_proto(h.view(), &prototypes, cfg.proto_temperature)?;

        let r0 = cfg.rank(self.bundle.num_nodes());
        let tnn = tnn_gradient(h.view(), r0)?;

        let mut grad_clean = proto.grad;
        if cfg.tnn_weight > 0.0 {
            grad_clean.scaled_add(cfg.tnn_weight, &tnn.gradient);
        }
        let mut grad = clean.backward(params, &self.adjacency, &grad_clean);
        grad.accumulate(&f1.backward(params, &first.adjacency, &node.grad_first));
        grad.accumulate(&f2.backward(params, &second.adjacency, &node.grad_second));

        let components = LossComponents {
            node: node.loss,
            proto: proto.loss,
            tnn: tnn.value,
        };
        Ok(LossEvaluation {
            total: node.loss + proto.loss + cfg.tnn_weight * tnn.value,
            components,
            grad,
            embedding: clean.embedding,
            prototypes,
            degenerate_gap: tnn.degenerate,
        })
    }
}

/// One-shot evaluation of the GCL-LRR loss and its gradient.
pub fn gcl_lrr_loss(
    bundle: &GraphBundle,
    params: &EncoderParams,
    config: &TrainConfig,
    epoch_seed: u64,
) -> Result<LossEvaluation> {
    Objective::new(bundle, config)?.evaluate(params, epoch_seed)
}
