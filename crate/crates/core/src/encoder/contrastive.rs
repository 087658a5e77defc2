use ndarray::{Array1, Array2, ArrayView2, Axis};

use super::PrototypeSet;
use crate::{Error, Result};

/// Node-level InfoNCE loss between two index-aligned views.
#[derive(Debug, Clone)]
pub struct NodeLoss {
    pub loss: f64,
    pub grad_first: Array2<f64>,
    pub grad_second: Array2<f64>,
}

/// Prototype contrastive loss; prototypes are held fixed.
#[derive(Debug, Clone)]
pub struct ProtoLoss {
    pub loss: f64,
    pub grad: Array2<f64>,
}

/// Row-normalize; zero rows stay zero. Returns the normalized rows and norms.
fn normalize_rows(h: ArrayView2<'_, f64>) -> (Array2<f64>, Array1<f64>) {
    let norms = h.map_axis(Axis(1), |r| r.dot(&r).sqrt());
    let mut out = h.to_owned();
    for (mut row, &n) in out.rows_mut().into_iter().zip(&norms) {
        if n > 0.0 {
            row /= n;
        }
    }
    (out, norms)
}

/// Pull a gradient w.r.t. normalized rows back through `h ↦ h / ‖h‖`.
/// Zero rows get a zero gradient.
fn normalize_backward(grad_unit: Array2<f64>, unit: &Array2<f64>, norms: &Array1<f64>) -> Array2<f64> {
    let mut g = grad_unit;
    for ((mut gr, ur), &n) in g.rows_mut().into_iter().zip(unit.rows()).zip(norms) {
        if n > 0.0 {
            let radial = gr.dot(&ur);
            gr.scaled_add(-radial, &ur);
            gr /= n;
        } else {
            gr.fill(0.0);
        }
    }
    g
}

/// Softmax of each row and its log-sum-exp.
fn row_softmax(logits: &Array2<f64>) -> (Array2<f64>, Array1<f64>) {
    let mut probs = logits.clone();
    let mut lse = Array1::zeros(logits.nrows());
    for (mut row, out) in probs.rows_mut().into_iter().zip(lse.iter_mut()) {
        let max = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row /= sum;
        *out = max + sum.ln();
    }
    (probs, lse)
}

/// InfoNCE over cosine similarities, allowing zero rows (treated as having
/// similarity 0 with everything and receiving no gradient). Used inside
/// training, where ReLU outputs can vanish and carry no gradient anyway.
pub(crate) fn node_loss_allow_zero(
    first: ArrayView2<'_, f64>,
    second: ArrayView2<'_, f64>,
    temperature: f64,
) -> Result<NodeLoss> {
    if first.dim() != second.dim() {
        return Err(Error::Contract(format!(
            "views have shapes {:?} and {:?}",
            first.dim(),
            second.dim()
        )));
    }
    if !(temperature > 0.0) {
        return Err(Error::Param(format!("temperature must be positive, got {temperature}")));
    }
    let n = first.nrows();
    if n == 0 {
        return Err(Error::Degenerate("InfoNCE over zero nodes".into()));
    }
    let (u1, n1) = normalize_rows(first);
    let (u2, n2) = normalize_rows(second);
    let logits = u1.dot(&u2.t()) / temperature;
    let (probs, lse) = row_softmax(&logits);
    let loss = (0..n).map(|i| lse[i] - logits[[i, i]]).sum::<f64>() / n as f64;

    // ∂L/∂S for S = U₁U₂ᵀ: (softmax − I) / (N τ)
    let mut ds = probs;
    for i in 0..n {
        ds[[i, i]] -= 1.0;
    }
    ds /= n as f64 * temperature;
    let g1 = ds.dot(&u2);
    let g2 = ds.t().dot(&u1);
    Ok(NodeLoss {
        loss,
        grad_first: normalize_backward(g1, &u1, &n1),
        grad_second: normalize_backward(g2, &u2, &n2),
    })
}

/// `−(1/N) Σ_i log[ exp(s(h¹_i, h²_i)/τ) / Σ_j exp(s(h¹_i, h²_j)/τ) ]` with
/// cosine similarity `s`, and its gradients with respect to both views.
pub fn contrastive_loss_node(
    first: ArrayView2<'_, f64>,
    second: ArrayView2<'_, f64>,
    temperature: f64,
) -> Result<NodeLoss> {
    for (name, view) in [("first", first), ("second", second)] {
        if let Some(i) = view.rows().into_iter().position(|r| r.iter().all(|&v| v == 0.0)) {
            return Err(Error::Degenerate(format!(
                "row {i} of the {name} view is zero; cosine similarity is undefined"
            )));
        }
    }
    node_loss_allow_zero(first, second, temperature)
}

/// `−(1/N) Σ_i log[ exp(h_i·c_{k(i)}/τ) / Σ_k exp(h_i·c_k/τ) ]`.
pub fn contrastive_loss_proto(
    h: ArrayView2<'_, f64>,
    prototypes: &PrototypeSet,
    temperature: f64,
) -> Result<ProtoLoss> {
    let n = h.nrows();
    if prototypes.assignments.len() != n {
        return Err(Error::Contract(format!(
            "{} assignments for {n} nodes",
            prototypes.assignments.len()
        )));
    }
    if prototypes.prototypes.ncols() != h.ncols() {
        return Err(Error::Contract("prototype width differs from embedding width".into()));
    }
    if let Some(k) = prototypes.cluster_sizes.iter().position(|&s| s == 0) {
        return Err(Error::Contract(format!("cluster {k} is empty")));
    }
    let k = prototypes.num_clusters();
    if prototypes.assignments.iter().any(|&a| a >= k) {
        return Err(Error::Contract("assignment refers to a missing cluster".into()));
    }
    if !(temperature > 0.0) {
        return Err(Error::Param(format!("temperature must be positive, got {temperature}")));
    }
    if n == 0 {
        return Err(Error::Degenerate("prototype loss over zero nodes".into()));
    }

    let c = &prototypes.prototypes;
    let logits = h.dot(&c.t()) / temperature;
    let (mut probs, lse) = row_softmax(&logits);
    let loss = prototypes
        .assignments
        .iter()
        .enumerate()
        .map(|(i, &a)| lse[i] - logits[[i, a]])
        .sum::<f64>()
        / n as f64;
    for (i, &a) in prototypes.assignments.iter().enumerate() {
        probs[[i, a]] -= 1.0;
    }
    let grad = probs.dot(c) / (n as f64 * temperature);
    Ok(ProtoLoss { loss, grad })
}
