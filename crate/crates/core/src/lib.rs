//! Sparse quantized Hopfield network: a tree of discrete hidden nodes with
//! one-hot values, trained online by growing neurons and keeping each
//! column a running mean of the inputs assigned to it.
//!
//! ```
//! use sqhn_core::{recall, train_step, Architecture, InputShape, LearnConfig, ModelState, Pattern};
//!
//! let shape = InputShape::new(1, 2, 2);
//! let mut state = ModelState::build(Architecture::single_layer(shape, 8)).unwrap();
//! let p = Pattern::new(shape, vec![1.0, 0.0, 0.5, 0.25]).unwrap();
//! train_step(&mut state, &p, &LearnConfig::default()).unwrap();
//! assert_eq!(recall(&state, &p, None, 0.5).unwrap(), p);
//! ```

pub mod arch;
pub mod checkpoint;
pub mod corruption;
pub mod datasets;
pub mod energy;
pub mod error;
pub mod inference;
pub mod learning;
pub mod metrics;
pub mod mhn;
pub mod pattern;
pub mod recognition;
pub mod state;

pub use arch::{Architecture, LayerSpec, Topology};
pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint};
pub use corruption::{item_rng, Corrupted, Corruption, OcclusionFill};
pub use datasets::PatternBatch;
pub use energy::energy;
pub use error::{Result, SqhnError};
pub use inference::{
    encode_ml, fb_sweep, ff_sweep, recall, recall_with, NodeActivations, RecallOptions,
};
pub use learning::{
    growth_threshold, train_step, train_stream, GrowthMode, LearnConfig, LrMode, StepSummary,
    ThresholdForm, Trainer,
};
pub use metrics::{forgetting_oracle, recall_accuracy, recall_mse, ForgettingCurve, MetricSeries};
pub use mhn::{Mhn, MissingPolicy, Similarity};
pub use pattern::{InputShape, MissingMask, Pattern};
pub use recognition::{judge, update_mu, Judgment};
pub use state::ModelState;
