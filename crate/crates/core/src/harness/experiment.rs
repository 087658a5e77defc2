use std::fmt::Write as _;
use std::path::Path;

use ndarray::{Array2, ArrayView2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{DatasetSource, ExperimentConfig, Variant};
use crate::bound::{evaluate_bound, BoundReport};
use crate::classifier::{
    accuracy, predict_labels, scaled_step_size, train_transductive, TransductiveOptions,
};
use crate::encoder::{gcn_forward, initial_params, train_encoder, TrainConfig};
use crate::graph::{
    build_transition_matrix, generate_sbm, inject_attribute_noise_rows, inject_label_noise_rows,
    load_bundle, normalize_adjacency, sample_split, GraphBundle, NoisyLabels, SplitSpec,
};
use crate::linalg::{ceil_count, derive_seed};
use crate::spectral::{eigen_projection, gram, lr_attention, sym_eig, ProjectionReport};
use crate::{Error, Result};

/// JSON schema every line of `records.jsonl` conforms to.
pub const RUN_RECORD_SCHEMA: &str = include_str!("../../schema/run_record.schema.json");

const DATA: u64 = 0xDA7A;
const SPLIT: u64 = 0x5B17;
const VALIDATION: u64 = 0x7A1D;
const LABEL_NOISE: u64 = 0x1AB1;
const ATTRIBUTE_NOISE: u64 = 0xA77B;
const ENCODER: u64 = 0xE0C0;

/// Graph, labels and split of one seed, shared by every variant.
#[derive(Debug, Clone)]
pub struct PreparedRun {
    /// Features carry attribute noise on labeled rows only.
    pub bundle: GraphBundle,
    /// Label noise is applied to labeled nodes only; test labels stay clean.
    pub labels: NoisyLabels,
    pub split: SplitSpec,
    /// Labeled nodes held out for early stopping.
    pub validation: Vec<usize>,
    /// Encoder settings with the per-run seed folded in.
    pub encoder: TrainConfig,
}

pub fn prepare_run(config: &ExperimentConfig, seed: u64) -> Result<PreparedRun> {
    let base = match &config.dataset {
        DatasetSource::Sbm(params) => {
            let bundle = generate_sbm(params, derive_seed(seed, DATA))?;
            let m = config.split.labeled_count(bundle.num_nodes());
            let split = sample_split(bundle.num_nodes(), m, derive_seed(seed, SPLIT))?;
            bundle.with_split(split)?
        }
        DatasetSource::Bundle(path) => {
            let bundle = load_bundle(path)?;
            if bundle.split().is_none() {
                return Err(Error::Param(format!(
                    "bundle {} has no splits.json; real-data runs need an explicit split",
                    path.display()
                )));
            }
            bundle
        }
    };
    let split = base.split().expect("split attached above").clone();
    let labeled = split.labeled();

    let validation = validation_subset(labeled, config.validation_fraction, seed);

    let transition =
        build_transition_matrix(config.noise.kind, config.noise.rate, base.num_classes())?;
    let labels =
        inject_label_noise_rows(base.labels(), &transition, labeled, derive_seed(seed, LABEL_NOISE))?;
    let features = inject_attribute_noise_rows(
        base.features(),
        config.noise.attribute_ratio,
        labeled,
        derive_seed(seed, ATTRIBUTE_NOISE),
    )?;
    let bundle = base.with_features(features)?;

    let encoder = TrainConfig {
        seed: derive_seed(derive_seed(config.encoder.seed, seed), ENCODER),
        ..config.encoder.clone()
    };
    Ok(PreparedRun {
        bundle,
        labels,
        split,
        validation,
        encoder,
    })
}

/// `⌈fraction · m⌉` labeled nodes (at most `m − 1`) held out for early
/// stopping, sorted.
pub fn validation_subset(labeled: &[usize], fraction: f64, seed: u64) -> Vec<usize> {
    let held = ceil_count(fraction, labeled.len()).min(labeled.len().saturating_sub(1));
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, VALIDATION));
    let mut subset: Vec<usize> = rand::seq::index::sample(&mut rng, labeled.len(), held)
        .into_iter()
        .map(|k| labeled[k])
        .collect();
    subset.sort_unstable();
    subset
}

/// Embedding of one variant and, for trained variants, the final encoder loss.
#[derive(Debug, Clone)]
pub struct VariantEmbedding {
    pub embedding: Array2<f64>,
    pub final_loss: Option<f64>,
}

/// Embeddings for each requested variant. `gcl-lr-attention` reuses the
/// `gcl-lrr` encoder, so it is trained at most once.
pub fn embed_variants(
    run: &PreparedRun,
    variants: &[Variant],
) -> Vec<(Variant, Result<VariantEmbedding>)> {
    let mut lrr: Option<Result<VariantEmbedding>> = None;
    let mut train_lrr = |run: &PreparedRun| -> Result<VariantEmbedding> {
        lrr.get_or_insert_with(|| train_variant(run, &run.encoder))
            .as_ref()
            .map(Clone::clone)
            .map_err(Error::duplicate)
    };
    variants
        .iter()
        .map(|&v| {
            let out = match v {
                Variant::GcnOnly => untrained(run),
                Variant::GclLrr => train_lrr(run),
                Variant::GclNoTnn => train_variant(
                    run,
                    &TrainConfig {
                        tnn_weight: 0.0,
                        ..run.encoder.clone()
                    },
                ),
                Variant::GclLrAttention => train_lrr(run).and_then(|e| {
                    Ok(VariantEmbedding {
                        embedding: lr_attention(e.embedding.view())?.features,
                        final_loss: e.final_loss,
                    })
                }),
            };
            (v, out)
        })
        .collect()
}

fn untrained(run: &PreparedRun) -> Result<VariantEmbedding> {
    let params = initial_params(run.bundle.num_features(), &run.encoder);
    let adj = normalize_adjacency(&run.bundle);
    Ok(VariantEmbedding {
        embedding: gcn_forward(&params, run.bundle.features().view(), &adj)?,
        final_loss: None,
    })
}

fn train_variant(run: &PreparedRun, config: &TrainConfig) -> Result<VariantEmbedding> {
    let trained = train_encoder(&run.bundle, config)?;
    let adj = normalize_adjacency(&run.bundle);
    Ok(VariantEmbedding {
        embedding: gcn_forward(&trained.params, run.bundle.features().view(), &adj)?,
        final_loss: trained.trace.last().map(|(total, _)| *total),
    })
}

/// One line of `records.jsonl`. Failed cells keep their identity fields and
/// carry the error message; every other field is null.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config_hash: String,
    pub seed: u64,
    pub variant: Variant,
    pub test_accuracy: Option<f64>,
    /// Share of labeled nodes whose observed label differs from the clean one.
    pub labeled_noise_rate: Option<f64>,
    pub step_size: Option<f64>,
    pub classifier_iterations: Option<usize>,
    pub final_encoder_loss: Option<f64>,
    pub bound: Option<BoundReport>,
    pub error: Option<String>,
}

impl RunRecord {
    fn failed(config_hash: &str, seed: u64, variant: Variant, error: &Error) -> Self {
        Self {
            config_hash: config_hash.to_owned(),
            seed,
            variant,
            test_accuracy: None,
            labeled_noise_rate: None,
            step_size: None,
            classifier_iterations: None,
            final_encoder_loss: None,
            bound: None,
            error: Some(error.to_string()),
        }
    }
}

/// Classifier accuracy and bound diagnostics for a fixed embedding.
pub fn evaluate_embedding(
    config: &ExperimentConfig,
    run: &PreparedRun,
    embedding: ArrayView2<'_, f64>,
) -> Result<(f64, f64, usize, BoundReport)> {
    let eta = match config.classifier.step_size {
        Some(eta) => eta,
        None => scaled_step_size(embedding, config.classifier.step_factor)?,
    };
    let mut options = TransductiveOptions::new(eta, config.classifier.epochs);
    if !run.validation.is_empty() {
        options.validation = Some(run.validation.clone());
    }
    let fit = train_transductive(embedding, &run.labels, &run.split, &options)?;
    let all: Vec<usize> = (0..embedding.nrows()).collect();
    let predicted = predict_labels(&fit.probabilities, &all);
    let acc = accuracy(&predicted, run.labels.clean(), run.split.unlabeled());
    let bound = evaluate_bound(
        embedding,
        &run.labels,
        &run.split,
        eta,
        config.bound.steps,
        config.bound.c0,
        config.bound.x,
    )?;
    Ok((acc, eta, fit.state.iterations, bound))
}

/// Every seed × variant cell of the experiment. Cell failures become records
/// with the `error` field set; configuration errors abort the whole run.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<RunRecord>> {
    config.validate()?;
    let hash = config.hash();
    let mut records = Vec::with_capacity(config.seeds.len() * config.variants.len());
    for &seed in &config.seeds {
        let run = match prepare_run(config, seed) {
            Ok(run) => run,
            Err(e) => {
                log::warn!("seed {seed}: {e}");
                records.extend(
                    config
                        .variants
                        .iter()
                        .map(|&v| RunRecord::failed(&hash, seed, v, &e)),
                );
                continue;
            }
        };
        let labeled = run.split.labeled();
        let flipped = labeled
            .iter()
            .filter(|&&i| run.labels.observed()[i] != run.labels.clean()[i])
            .count();
        let noise_rate = flipped as f64 / labeled.len() as f64;

        for (variant, embedded) in embed_variants(&run, &config.variants) {
            let outcome = embedded.and_then(|e| {
                evaluate_embedding(config, &run, e.embedding.view()).map(|r| (e.final_loss, r))
            });
            let record = match outcome {
                Ok((final_loss, (acc, eta, iterations, bound))) => RunRecord {
                    config_hash: hash.clone(),
                    seed,
                    variant,
                    test_accuracy: Some(acc),
                    labeled_noise_rate: Some(noise_rate),
                    step_size: Some(eta),
                    classifier_iterations: Some(iterations),
                    final_encoder_loss: final_loss,
                    bound: Some(bound),
                    error: None,
                },
                Err(e) => {
                    log::warn!("seed {seed}, {variant}: {e}");
                    RunRecord::failed(&hash, seed, variant, &e)
                }
            };
            log::info!(
                "seed {seed} {variant}: accuracy {:?}, KC {:?}",
                record.test_accuracy,
                record.bound.as_ref().map(|b| b.kc)
            );
            records.push(record);
        }
    }
    Ok(records)
}

pub fn records_to_jsonl(records: &[RunRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("records serialize"));
        out.push('\n');
    }
    out
}

/// Bound components per run, one row per seed × variant.
pub fn bound_table_csv(records: &[RunRecord]) -> String {
    let mut out =
        String::from("seed,variant,l1,l2,kc,kc_argmin_r0,tau0_sq,combined,test_mse,test_accuracy\n");
    for r in records {
        match (&r.bound, r.test_accuracy) {
            (Some(b), Some(acc)) => writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                r.seed, r.variant, b.l1, b.l2, b.kc, b.kc_argmin_r0, b.tau0_sq, b.combined, b.test_mse, acc
            ),
            _ => writeln!(out, "{},{},,,,,,,,", r.seed, r.variant),
        }
        .expect("writing to a String");
    }
    out
}

/// Write `records.jsonl` and `bounds.csv` into `dir`, creating it if needed.
pub fn write_experiment(records: &[RunRecord], dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (name, body) in [
        ("records.jsonl", records_to_jsonl(records)),
        ("bounds.csv", bound_table_csv(records)),
    ] {
        let path = dir.join(name);
        std::fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

/// Eigen-projection and signal-concentration curves of `K = H Hᵀ` for the
/// clean labels and, when given, the label noise.
pub fn emit_projection_csv(
    h: ArrayView2<'_, f64>,
    clean: ArrayView2<'_, f64>,
    noise: Option<ArrayView2<'_, f64>>,
    path: impl AsRef<Path>,
) -> Result<ProjectionReport> {
    let decomposition = sym_eig(gram(h).view())?;
    let report = eigen_projection(&decomposition, clean, noise)?;
    report.write_csv(path)?;
    Ok(report)
}
