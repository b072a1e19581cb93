//! Datasets, baseline production and the noise-recovery experiment.

mod baseline;
mod dataset;
mod experiment;
mod idx;
mod synth;

pub use baseline::{layer_scale_exp, quantize_model, train_baseline, BaselineConfig};
pub use dataset::{inject_noise, split, Dataset};
pub use experiment::{
    evaluate_accuracy, run_recovery_experiment, run_recovery_experiment_with, summarize, ExperimentConfig,
    ExperimentReport, ReportRow, RunResult, REPORT_HEADER, RUNS_HEADER,
};
pub use idx::{load_idx, load_mnist_dir, parse_images, parse_labels, pool_mnist, IMAGES_MAGIC, LABELS_MAGIC, MNIST_CLASSES};
pub use synth::{generate_synthetic, generate_synthetic_with, synthetic_desk, SyntheticParams};
