//! Gram-matrix spectra and everything computed from them.

mod attention;
mod complexity;
mod eigen;
mod projection;
mod tnn;

pub use attention::{lr_attention, AttentionTransform};
pub use complexity::{kernel_complexity, KernelComplexity};
pub use eigen::{embedding_spectrum, gram, sym_eig, SpectralDecomposition};
pub use projection::{eigen_projection, ProjectionReport};
pub use tnn::{tnn_embedding, tnn_gradient, tnn_gram, tnn_spectrum, TnnGradient};
