//! Linear classifier probes: a softmax layer over flattened, downsampled
//! activations, trained to tell the intersectional groups apart.

mod dataset;
mod errors;
mod model;
mod train;

pub use dataset::{assemble_probe_dataset, validation_count, ProbeDataset, Split};
pub use errors::{error_table, error_table_from_pairs, ErrorRecord};
pub use model::{loss_and_grad, softmax, AdamState, Gradients, ProbeModel, Regularization};
pub use train::{evaluate, layer_sweep, predict, train_probe, LearningCurves, ProbeConfig, SweepRow};
