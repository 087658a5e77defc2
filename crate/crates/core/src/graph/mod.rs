//! Attributed graphs, corruption protocols, and node splits.

mod adjacency;
mod bundle;
mod noise;
mod sbm;
mod split;

pub use adjacency::{normalize_adjacency, normalize_edges, NormalizedAdjacency};
pub use bundle::{load_bundle, read_matrix_csv, save_bundle, write_matrix_csv, GraphBundle};
pub(crate) use bundle::fmt_f64;
pub use noise::{
    build_transition_matrix, inject_attribute_noise, inject_attribute_noise_rows,
    inject_label_noise, inject_label_noise_rows, NoiseKind, NoisyLabels, TransitionMatrix,
};
pub use sbm::{generate_sbm, SbmParams};
pub use split::{sample_split, SplitSpec};
