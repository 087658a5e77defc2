use std::path::Path;

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::linalg::{ceil_count, one_hot};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseKind {
    /// Uniform flips to every other class.
    Symmetric,
    /// Pairwise flips `c → (c + 1) mod C`.
    Asymmetric,
}

impl std::str::FromStr for NoiseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "symmetric" => Ok(NoiseKind::Symmetric),
            "asymmetric" => Ok(NoiseKind::Asymmetric),
            other => Err(Error::Param(format!("unknown noise kind {other:?}"))),
        }
    }
}

/// Row-stochastic `C × C` matrix with `T[i][j] = P(observed = j | clean = i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    matrix: Array2<f64>,
    kind: NoiseKind,
    rate: f64,
}

impl TransitionMatrix {
    pub fn matrix(&self) -> &Array2<f64> {
        &self.matrix
    }

    pub fn kind(&self) -> NoiseKind {
        self.kind
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn num_classes(&self) -> usize {
        self.matrix.nrows()
    }

    fn sample_row(&self, class: usize, u: f64) -> usize {
        let row = self.matrix.row(class);
        let mut acc = 0.0;
        let mut last = class;
        for (j, &p) in row.iter().enumerate() {
            if p > 0.0 {
                last = j;
            }
            acc += p;
            if u < acc {
                return j;
            }
        }
        last
    }
}

pub fn build_transition_matrix(
    kind: NoiseKind,
    rate: f64,
    num_classes: usize,
) -> Result<TransitionMatrix> {
    if num_classes < 2 {
        return Err(Error::Param(format!(
            "transition matrix needs at least 2 classes, got {num_classes}"
        )));
    }
    if !(0.0..=1.0).contains(&rate) {
        return Err(Error::Param(format!("noise rate {rate} outside [0, 1]")));
    }
    let c = num_classes;
    let mut matrix = Array2::zeros((c, c));
    for i in 0..c {
        matrix[[i, i]] = 1.0 - rate;
        match kind {
            NoiseKind::Symmetric => {
                let off = rate / (c - 1) as f64;
                for j in (0..c).filter(|&j| j != i) {
                    matrix[[i, j]] = off;
                }
            }
            NoiseKind::Asymmetric => matrix[[i, (i + 1) % c]] = rate,
        }
    }
    Ok(TransitionMatrix { matrix, kind, rate })
}

/// Observed labels together with the clean labels they were derived from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NoisyLabels {
    observed: Vec<usize>,
    clean: Vec<usize>,
    num_classes: usize,
}

impl NoisyLabels {
    pub fn new(observed: Vec<usize>, clean: Vec<usize>, num_classes: usize) -> Result<Self> {
        if observed.len() != clean.len() {
            return Err(Error::Contract(format!(
                "{} observed labels for {} clean labels",
                observed.len(),
                clean.len()
            )));
        }
        if observed.iter().chain(&clean).any(|&c| c >= num_classes) {
            return Err(Error::Param("class index out of range".into()));
        }
        Ok(Self {
            observed,
            clean,
            num_classes,
        })
    }

    /// Labels without corruption.
    pub fn noiseless(clean: &[usize], num_classes: usize) -> Result<Self> {
        Self::new(clean.to_vec(), clean.to_vec(), num_classes)
    }

    pub fn observed(&self) -> &[usize] {
        &self.observed
    }

    pub fn clean(&self) -> &[usize] {
        &self.clean
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn num_nodes(&self) -> usize {
        self.observed.len()
    }

    /// `Y`
    pub fn observed_one_hot(&self) -> Array2<f64> {
        one_hot(&self.observed, self.num_classes)
    }

    /// `Ỹ`
    pub fn clean_one_hot(&self) -> Array2<f64> {
        one_hot(&self.clean, self.num_classes)
    }

    /// `N = Y − Ỹ`
    pub fn noise(&self) -> Array2<f64> {
        self.observed_one_hot() - self.clean_one_hot()
    }

    /// CSV with columns `node,observed,clean`.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = String::from("node,observed,clean\n");
        for (i, (o, c)) in self.observed.iter().zip(&self.clean).enumerate() {
            out.push_str(&format!("{i},{o},{c}\n"));
        }
        let path = path.as_ref();
        std::fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    /// Inverse of [`write_csv`](Self::write_csv). Rows must list nodes
    /// `0..N` in order.
    pub fn read_csv(path: impl AsRef<Path>, num_classes: usize) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        match lines.next() {
            Some((_, h)) if h.trim() == "node,observed,clean" => {}
            _ => return Err(Error::parse(path, 1, "expected header \"node,observed,clean\"")),
        }
        let (mut observed, mut clean) = (Vec::new(), Vec::new());
        for (lineno, line) in lines.filter(|(_, l)| !l.trim().is_empty()) {
            let fields: Vec<usize> = line
                .split(',')
                .map(|f| f.trim().parse())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::parse(path, lineno, "expected three integer fields"))?;
            let [node, o, c] = fields[..] else {
                return Err(Error::parse(path, lineno, "expected three integer fields"));
            };
            if node != observed.len() {
                return Err(Error::parse(path, lineno, format!("expected node {}", observed.len())));
            }
            if o >= num_classes || c >= num_classes {
                return Err(Error::parse(path, lineno, "class index out of range"));
            }
            observed.push(o);
            clean.push(c);
        }
        Self::new(observed, clean, num_classes)
    }

    /// Indices whose observed label differs from the clean one.
    pub fn flipped(&self) -> Vec<usize> {
        (0..self.observed.len())
            .filter(|&i| self.observed[i] != self.clean[i])
            .collect()
    }
}

/// Resample every node's label from `T[clean_i]`.
pub fn inject_label_noise(
    clean: &[usize],
    transition: &TransitionMatrix,
    seed: u64,
) -> Result<NoisyLabels> {
    let all: Vec<usize> = (0..clean.len()).collect();
    inject_label_noise_rows(clean, transition, &all, seed)
}

/// Resample only the listed nodes; all other nodes keep their clean label.
pub fn inject_label_noise_rows(
    clean: &[usize],
    transition: &TransitionMatrix,
    rows: &[usize],
    seed: u64,
) -> Result<NoisyLabels> {
    let c = transition.num_classes();
    let mut observed = clean.to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for &i in rows {
        let y = *clean
            .get(i)
            .ok_or_else(|| Error::Contract(format!("row {i} outside label vector")))?;
        if y >= c {
            return Err(Error::Param(format!("class index {y} out of range for T")));
        }
        observed[i] = transition.sample_row(y, rng.random::<f64>());
    }
    NoisyLabels::new(observed, clean.to_vec(), c)
}

/// Shuffle `⌈ratio·D⌉` randomly chosen coordinates within every row.
pub fn inject_attribute_noise(features: &Array2<f64>, ratio: f64, seed: u64) -> Result<Array2<f64>> {
    let all: Vec<usize> = (0..features.nrows()).collect();
    inject_attribute_noise_rows(features, ratio, &all, seed)
}

/// Attribute shuffling restricted to the listed rows.
pub fn inject_attribute_noise_rows(
    features: &Array2<f64>,
    ratio: f64,
    rows: &[usize],
    seed: u64,
) -> Result<Array2<f64>> {
    if !(0.0..=1.0).contains(&ratio) {
        return Err(Error::Param(format!("attribute noise ratio {ratio} outside [0, 1]")));
    }
    let d = features.ncols();
    let k = ceil_count(ratio, d);
    let mut out = features.clone();
    if k == 0 {
        return Ok(out);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for &i in rows {
        if i >= out.nrows() {
            return Err(Error::Contract(format!("row {i} outside feature matrix")));
        }
        let picked = rand::seq::index::sample(&mut rng, d, k).into_vec();
        let mut values: Vec<f64> = picked.iter().map(|&j| out[[i, j]]).collect();
        values.shuffle(&mut rng);
        for (&j, v) in picked.iter().zip(values) {
            out[[i, j]] = v;
        }
    }
    Ok(out)
}
