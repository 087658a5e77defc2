use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gcl_lrr::bound::evaluate_bound;
use gcl_lrr::classifier::{
    accuracy, predict_labels, scaled_step_size, train_transductive, write_predictions,
    ClassifierState, TransductiveOptions,
};
use gcl_lrr::encoder::{gcn_forward, train_encoder, write_loss_trace, EncoderParams, TrainConfig};
use gcl_lrr::graph::{
    build_transition_matrix, generate_sbm, inject_attribute_noise_rows, inject_label_noise_rows,
    load_bundle, normalize_adjacency, read_matrix_csv, sample_split, save_bundle,
    write_matrix_csv, GraphBundle, NoiseKind, NoisyLabels, SbmParams, SplitSpec,
};
use gcl_lrr::harness::{
    cross_validate, emit_projection_csv, run_experiment, validation_subset, write_experiment,
    ExperimentConfig,
};
use gcl_lrr::linalg::derive_seed;
use gcl_lrr::spectral::lr_attention;
use gcl_lrr::{Error, Result};
use serde_json::json;

/// Graph contrastive learning with low-rank regularization: data preparation,
/// encoder training, transductive classification and bound diagnostics.
#[derive(Parser)]
#[command(name = "gcl-lrr", version)]
struct Cli {
    /// Seed for every random stream of the command. For `experiment` and `cv`
    /// it replaces the config's seed list.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Log more (repeat for debug output).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a stochastic block model graph into a bundle with a split.
    Generate(GenerateArgs),
    /// Inject label and attribute noise into the labeled nodes of a bundle.
    Corrupt(CorruptArgs),
    /// Train the GCL-LRR encoder.
    Train(TrainArgs),
    /// Compute node embeddings with trained encoder parameters.
    Embed(EmbedArgs),
    /// Train the transductive softmax classifier on embeddings.
    Classify(ClassifyArgs),
    /// Report the test-loss bound components for embeddings.
    Bound(BoundArgs),
    /// Export eigen-projection and signal-concentration curves.
    Project(ProjectArgs),
    /// Cross-validate the truncation ratio and TNN weight.
    Cv(CvArgs),
    /// Run every seed × variant cell of an experiment config.
    Experiment(ExperimentArgs),
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, default_value_t = 3)]
    blocks: usize,
    #[arg(long, default_value_t = 100)]
    per_block: usize,
    #[arg(long, default_value_t = 0.1)]
    p_in: f64,
    #[arg(long, default_value_t = 0.01)]
    p_out: f64,
    #[arg(long, default_value_t = 20)]
    feature_dim: usize,
    /// Offset added to the feature coordinate of each node's class.
    #[arg(long, default_value_t = 1.0)]
    feature_shift: f64,
    /// Share of nodes in the labeled set.
    #[arg(long, default_value_t = 0.2)]
    labeled_fraction: f64,
}

#[derive(Args)]
struct CorruptArgs {
    #[arg(long)]
    bundle: PathBuf,
    #[arg(long, default_value = "symmetric")]
    kind: NoiseKind,
    #[arg(long, default_value_t = 0.0)]
    rate: f64,
    /// Fraction of feature coordinates shuffled within each labeled row.
    #[arg(long, default_value_t = 0.0)]
    attribute_ratio: f64,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    bundle: PathBuf,
    /// Encoder config (TOML or JSON); flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    tnn_weight: Option<f64>,
    #[arg(long)]
    rank_ratio: Option<f64>,
    #[arg(long)]
    step_size: Option<f64>,
}

#[derive(Args)]
struct EmbedArgs {
    #[arg(long)]
    bundle: PathBuf,
    /// `params.json` written by `train`.
    #[arg(long)]
    params: PathBuf,
    /// Apply the LR-Attention layer to the embeddings.
    #[arg(long)]
    attention: bool,
}

#[derive(Args)]
struct LabelInputs {
    #[arg(long)]
    bundle: PathBuf,
    /// Headerless CSV of embeddings, one row per node.
    #[arg(long)]
    embedding: PathBuf,
    /// `noisy_labels.csv` from `corrupt`; defaults to the bundle's clean labels.
    #[arg(long)]
    labels: Option<PathBuf>,
}

#[derive(Args)]
struct ClassifyArgs {
    #[command(flatten)]
    inputs: LabelInputs,
    /// Step size as a fraction of `1/λ̂₁`.
    #[arg(long, default_value_t = 0.9)]
    step_factor: f64,
    #[arg(long, default_value_t = 500)]
    epochs: usize,
    /// Share of labeled nodes held out for early stopping.
    #[arg(long, default_value_t = 0.2)]
    validation_fraction: f64,
}

#[derive(Args)]
struct BoundArgs {
    #[command(flatten)]
    inputs: LabelInputs,
    #[arg(long, default_value_t = 0.9)]
    step_factor: f64,
    /// Gradient-descent steps of the squared-loss classifier.
    #[arg(long, default_value_t = 100)]
    steps: usize,
    #[arg(long, default_value_t = 1.0)]
    c0: f64,
    #[arg(long, default_value_t = 1.0)]
    x: f64,
}

#[derive(Args)]
struct ProjectArgs {
    #[command(flatten)]
    inputs: LabelInputs,
}

#[derive(Args)]
struct CvArgs {
    /// Experiment config (TOML or JSON).
    #[arg(long)]
    config: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9")]
    gamma_grid: Vec<f64>,
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "0.05,0.1,0.15,0.2,0.25,0.3,0.35,0.4,0.45,0.5"
    )]
    tau_grid: Vec<f64>,
    #[arg(long, default_value_t = 5)]
    folds: usize,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Experiment config (TOML or JSON).
    #[arg(long)]
    config: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    if e.is_config() {
        2
    } else if e.is_numeric() {
        3
    } else {
        1
    }
}

fn run(cli: Cli) -> Result<()> {
    let out = cli
        .out
        .ok_or_else(|| Error::Param("--out is required".into()))?;
    std::fs::create_dir_all(&out).map_err(|e| io_error(&out, e))?;
    let seed = cli.seed;
    match cli.command {
        Command::Generate(a) => generate(a, seed.unwrap_or(0), &out),
        Command::Corrupt(a) => corrupt(a, seed.unwrap_or(0), &out),
        Command::Train(a) => train(a, seed.unwrap_or(0), &out),
        Command::Embed(a) => embed(a, &out),
        Command::Classify(a) => classify(a, seed.unwrap_or(0), &out),
        Command::Bound(a) => bound(a, &out),
        Command::Project(a) => project(a, &out),
        Command::Cv(a) => cv(a, seed, &out),
        Command::Experiment(a) => experiment(a, seed, &out),
    }
}

fn io_error(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_json(path: PathBuf, value: &impl serde::Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("output serializes") + "\n";
    std::fs::write(&path, text).map_err(|e| io_error(&path, e))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        file: path.to_path_buf(),
        line: e.line(),
        message: e.to_string(),
    })
}

fn generate(a: GenerateArgs, seed: u64, out: &Path) -> Result<()> {
    let params = SbmParams {
        blocks: a.blocks,
        per_block: a.per_block,
        p_in: a.p_in,
        p_out: a.p_out,
        feature_dim: a.feature_dim,
        feature_shift: a.feature_shift,
    };
    if !(a.labeled_fraction > 0.0 && a.labeled_fraction < 1.0) {
        return Err(Error::Param(format!(
            "labeled fraction {} outside (0, 1)",
            a.labeled_fraction
        )));
    }
    let bundle = generate_sbm(&params, seed)?;
    let n = bundle.num_nodes();
    let m = gcl_lrr::linalg::ceil_count(a.labeled_fraction, n);
    let split = sample_split(n, m, derive_seed(seed, 1))?;
    save_bundle(&bundle.with_split(split)?, out)
}

fn split_of(bundle: &GraphBundle) -> Result<SplitSpec> {
    bundle
        .split()
        .cloned()
        .ok_or_else(|| Error::Param("bundle has no splits.json".into()))
}

fn corrupt(a: CorruptArgs, seed: u64, out: &Path) -> Result<()> {
    let bundle = load_bundle(&a.bundle)?;
    let split = split_of(&bundle)?;
    let transition = build_transition_matrix(a.kind, a.rate, bundle.num_classes())?;
    let labels = inject_label_noise_rows(
        bundle.labels(),
        &transition,
        split.labeled(),
        derive_seed(seed, 1),
    )?;
    let features = inject_attribute_noise_rows(
        bundle.features(),
        a.attribute_ratio,
        split.labeled(),
        derive_seed(seed, 2),
    )?;
    save_bundle(&bundle.with_features(features)?, out)?;
    labels.write_csv(out.join("noisy_labels.csv"))
}

fn train(a: TrainArgs, seed: u64, out: &Path) -> Result<()> {
    let bundle = load_bundle(&a.bundle)?;
    let mut config = match &a.config {
        Some(path) => TrainConfig::from_file(path)?,
        None => TrainConfig::default(),
    };
    config.seed = seed;
    if let Some(v) = a.epochs {
        config.epochs = v;
    }
    if let Some(v) = a.tnn_weight {
        config.tnn_weight = v;
    }
    if let Some(v) = a.rank_ratio {
        config.rank_ratio = v;
    }
    if let Some(v) = a.step_size {
        config.step_size = v;
    }
    let trained = train_encoder(&bundle, &config)?;
    write_json(out.join("params.json"), &trained.params)?;
    write_json(out.join("train_config.json"), &config)?;
    write_loss_trace(&trained.trace, out.join("loss_trace.csv"))
}

fn embed(a: EmbedArgs, out: &Path) -> Result<()> {
    let bundle = load_bundle(&a.bundle)?;
    let params: EncoderParams = read_json(&a.params)?;
    let adj = normalize_adjacency(&bundle);
    let mut h = gcn_forward(&params, bundle.features().view(), &adj)?;
    if a.attention {
        h = lr_attention(h.view())?.features;
    }
    write_matrix_csv(h.view(), out.join("embedding.csv"))
}

struct Loaded {
    bundle: GraphBundle,
    embedding: ndarray::Array2<f64>,
    labels: NoisyLabels,
}

fn load_inputs(a: &LabelInputs) -> Result<Loaded> {
    let bundle = load_bundle(&a.bundle)?;
    let embedding = read_matrix_csv(&a.embedding)?;
    if embedding.nrows() != bundle.num_nodes() {
        return Err(Error::Contract(format!(
            "embedding has {} rows for {} nodes",
            embedding.nrows(),
            bundle.num_nodes()
        )));
    }
    let labels = match &a.labels {
        Some(path) => NoisyLabels::read_csv(path, bundle.num_classes())?,
        None => NoisyLabels::noiseless(bundle.labels(), bundle.num_classes())?,
    };
    if labels.clean() != bundle.labels() {
        return Err(Error::Contract(
            "clean labels in the label file differ from the bundle".into(),
        ));
    }
    Ok(Loaded {
        bundle,
        embedding,
        labels,
    })
}

fn classify(a: ClassifyArgs, seed: u64, out: &Path) -> Result<()> {
    let input = load_inputs(&a.inputs)?;
    let split = split_of(&input.bundle)?;
    let h = input.embedding.view();
    let eta = scaled_step_size(h, a.step_factor)?;
    let mut options = TransductiveOptions::new(eta, a.epochs);
    let validation = validation_subset(split.labeled(), a.validation_fraction, seed);
    if !validation.is_empty() {
        options.validation = Some(validation);
    }
    let fit = train_transductive(h, &input.labels, &split, &options)?;
    let all: Vec<usize> = (0..h.nrows()).collect();
    let predicted = predict_labels(&fit.probabilities, &all);
    let test_accuracy = accuracy(&predicted, input.labels.clean(), split.unlabeled());
    write_predictions(
        out.join("predictions.csv"),
        &predicted,
        &input.labels,
        split.unlabeled(),
    )?;
    let ClassifierState {
        weights,
        step_size,
        iterations,
    } = fit.state;
    write_json(
        out.join("classifier.json"),
        &json!({
            "test_accuracy": test_accuracy,
            "step_size": step_size,
            "iterations": iterations,
            "weights": weights,
        }),
    )
}

fn bound(a: BoundArgs, out: &Path) -> Result<()> {
    let input = load_inputs(&a.inputs)?;
    let split = split_of(&input.bundle)?;
    let h = input.embedding.view();
    let eta = scaled_step_size(h, a.step_factor)?;
    let report = evaluate_bound(h, &input.labels, &split, eta, a.steps, a.c0, a.x)?;
    write_json(out.join("bound.json"), &report)
}

fn project(a: ProjectArgs, out: &Path) -> Result<()> {
    let input = load_inputs(&a.inputs)?;
    let noise = input.labels.noise();
    let noisy = noise.iter().any(|&v| v != 0.0);
    emit_projection_csv(
        input.embedding.view(),
        input.labels.clean_one_hot().view(),
        noisy.then(|| noise.view()),
        out.join("projection.csv"),
    )?;
    Ok(())
}

fn load_experiment(path: &Path, seed: Option<u64>) -> Result<ExperimentConfig> {
    let mut config = ExperimentConfig::from_file(path)?;
    if let Some(s) = seed {
        config.seeds = vec![s];
    }
    Ok(config)
}

fn cv(a: CvArgs, seed: Option<u64>, out: &Path) -> Result<()> {
    let config = load_experiment(&a.config, seed)?;
    let result = cross_validate(&config, &a.gamma_grid, &a.tau_grid, a.folds)?;
    write_json(out.join("cv.json"), &result)
}

fn experiment(a: ExperimentArgs, seed: Option<u64>, out: &Path) -> Result<()> {
    let config = load_experiment(&a.config, seed)?;
    let records = run_experiment(&config)?;
    let failed = records.iter().filter(|r| r.error.is_some()).count();
    if failed > 0 {
        log::warn!("{failed} of {} cells failed; see the error field", records.len());
    }
    write_experiment(&records, out)
}
