//! Experiment plumbing: datasets, reports, and the runner behind the CLI.

pub mod data;
pub mod experiment;
pub mod report;

pub use data::{encode_mushroom, generate_synthetic, load_mushroom, partition, Dataset, LabeledSet, MUSHROOM_FEATURES, MUSHROOM_TRAIN};
pub use experiment::{
    build_network, exit_code, random_quadratics, run_experiment, Algorithm, ExperimentConfig, ExperimentOutcome, Problem,
    Topology,
};
pub use report::{evaluate_classifier, write_trace_csv, ClassificationReport, TRACE_HEADER};
