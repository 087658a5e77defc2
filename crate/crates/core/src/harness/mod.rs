//! Experiment orchestration: per-seed data preparation and corruption,
//! variant embeddings, classification, bound diagnostics, and `(γ, τ_tnn)`
//! cross-validation.

mod config;
mod cv;
mod experiment;

pub use config::{
    BoundSpec, ClassifierSpec, DatasetSource, ExperimentConfig, NoiseSpec, SplitChoice, Variant,
};
pub use cv::{cross_validate, fold_assignment, CvCell, CvResult};
pub use experiment::{
    bound_table_csv, embed_variants, emit_projection_csv, evaluate_embedding, prepare_run,
    records_to_jsonl, run_experiment, validation_subset, write_experiment, PreparedRun, RunRecord, VariantEmbedding,
    RUN_RECORD_SCHEMA,
};
