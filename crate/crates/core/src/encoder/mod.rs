//! GCL-LRR encoder: a two-layer GCN trained with node-level InfoNCE,
//! prototype contrast and a truncated-nuclear-norm penalty on `H Hᵀ`.

mod augment;
mod config;
mod contrastive;
mod gcn;
mod kmeans;
mod objective;
mod train;

pub use augment::{augment_view, AugmentationSpec, AugmentedView};
pub(crate) use config::read_config;
pub use config::TrainConfig;
pub use contrastive::{contrastive_loss_node, contrastive_loss_proto, NodeLoss, ProtoLoss};
pub use gcn::{gcn_forward, EncoderParams, ForwardPass};
pub use kmeans::{cluster_prototypes, PrototypeSet};
pub use objective::{gcl_lrr_loss, LossComponents, LossEvaluation, Objective};
pub use train::{initial_params, train_encoder, write_loss_trace, TrainedEncoder};
