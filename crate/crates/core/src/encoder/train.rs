use std::fmt::Write as _;
use std::path::Path;

use super::{EncoderParams, LossComponents, Objective, TrainConfig};
use crate::graph::{fmt_f64, GraphBundle};
use crate::linalg::derive_seed;
use crate::{Error, Result};

const INIT_STREAM: u64 = 0x1417;

#[derive(Debug, Clone)]
pub struct TrainedEncoder {
    pub params: EncoderParams,
    /// Loss before each gradient step: `(total, components)`.
    pub trace: Vec<(f64, LossComponents)>,
    /// Epochs whose TNN gradient was taken at a repeated eigenvalue.
    pub degenerate_epochs: usize,
}

/// The seeded starting point of [`train_encoder`].
pub fn initial_params(num_features: usize, config: &TrainConfig) -> EncoderParams {
    EncoderParams::init(
        num_features,
        config.hidden_width,
        config.embed_width,
        derive_seed(config.seed, INIT_STREAM),
    )
}

/// Full-batch gradient descent on the GCL-LRR objective for `config.epochs`
/// epochs. Every epoch recomputes prototypes and draws fresh augmented views.
pub fn train_encoder(bundle: &GraphBundle, config: &TrainConfig) -> Result<TrainedEncoder> {
    let objective = Objective::new(bundle, config)?;
    let mut params = initial_params(bundle.num_features(), config);
    let mut trace = Vec::with_capacity(config.epochs);
    let mut degenerate_epochs = 0;
    for epoch in 0..config.epochs {
        let eval = objective.evaluate(&params, derive_seed(config.seed, epoch as u64))?;
        if !eval.total.is_finite() || !eval.grad.is_finite() {
            return Err(Error::NonFinite {
                epoch,
                message: format!("loss {} or its gradient is not finite", eval.total),
            });
        }
        degenerate_epochs += usize::from(eval.degenerate_gap);
        trace.push((eval.total, eval.components));
        params.descend(&eval.grad, config.step_size);
        if !params.is_finite() {
            return Err(Error::NonFinite {
                epoch,
                message: "parameters diverged".into(),
            });
        }
    }
    if degenerate_epochs > 0 {
        log::warn!("{degenerate_epochs} epochs used a TNN subgradient at a repeated eigenvalue");
    }
    Ok(TrainedEncoder {
        params,
        trace,
        degenerate_epochs,
    })
}

/// CSV with columns `epoch,total,node,proto,tnn`.
pub fn write_loss_trace(trace: &[(f64, LossComponents)], path: impl AsRef<Path>) -> Result<()> {
    let mut out = String::from("epoch,total,node,proto,tnn\n");
    for (epoch, (total, c)) in trace.iter().enumerate() {
        writeln!(
            out,
            "{epoch},{},{},{},{}",
            fmt_f64(*total),
            fmt_f64(c.node),
            fmt_f64(c.proto),
            fmt_f64(c.tnn)
        )
        .expect("writing to a String");
    }
    let path = path.as_ref();
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}
