//! Adaptive structural learning of Deep Belief Networks.
//!
//! The stack self-organizes during training: hidden neurons are generated
//! when the Walking Distance of their parameter updates stays large and
//! annihilated when their activations degenerate, and whole RBM layers are
//! appended while the trained stack's total WD and energy both remain large.
//! On top of that sits a parent/child re-learning pipeline: the trained
//! parent's focus-class data is partitioned by correctness, child models are
//! trained per partition, and per-sample KL divergence between parent and
//! child softmax outputs selects the re-learning subset.
//!
//! Modules:
//! - [`numerics`] — seeded RNG, dense matrices, sigmoid/softmax/Bernoulli
//! - [`rbm`] — contrastive divergence plus neuron generation/annihilation
//! - [`dbn`] — greedy layer stacking, layer generation, softmax head
//! - [`data`] — CSV/IDX loaders, splits, the synthetic overlap fixture
//! - [`metrics`] — confusion matrix, precision/recall/F1, KL histograms
//! - [`relearn`] — Set 0/1/2 partitioning, child training, KL threshold sweep
//! - [`cli`] — config file handling and the command implementations

pub mod cli;
pub mod data;
pub mod dbn;
pub mod error;
pub mod metrics;
pub mod numerics;
pub mod rbm;
pub mod relearn;

pub use data::{LabeledDataset, LabeledSample};
pub use dbn::{train_dbn, Dbn, DbnTrainConfig, TrainLog};
pub use error::{Error, Result};
pub use metrics::{class_report, confusion, kl_histogram, ClassReport, ConfusionMatrix};
pub use numerics::{sample_bernoulli, sigmoid, softmax, DenseMatrix, SeededRng};
pub use rbm::{Rbm, RbmTrainConfig, WdTracker};
pub use relearn::{
    build_plan, kl_divergence, partition_by_threshold, relearn_sweep, train_child, ChildSet,
    KlReport, KlThreshold, RelearnPlan, SweepEvalSet,
};
