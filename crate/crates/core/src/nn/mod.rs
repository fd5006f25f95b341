//! A small convolutional network, written directly against f64 slices: an
//! inception-flavored backbone shared by a multi-label tag head and the
//! seven-output perceptual head, with Adam, checkpointing, and a
//! central-difference gradient checker.

mod adam;
mod checkpoint;
mod gradcheck;
mod layers;
mod network;
mod synth;
mod tensor;
mod train;

pub use adam::AdamState;
pub use checkpoint::{load_checkpoint, save_checkpoint};
pub use gradcheck::gradient_check;
pub use network::{
    ForwardCache, Grads, Head, InceptionSpec, Network, NetworkSpec, Node,
};
pub use synth::{synthetic_midlevel_data, synthetic_tag_data};
pub use tensor::Tensor;
pub use train::{
    eval_mse, finetune, metrics_csv, train_midlevel, train_tags, EpochMetric,
    FinetuneReport, TrainConfig, TrainReport,
};

#[derive(Debug, thiserror::Error)]
pub enum NnError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("forward cache is stale: parameters changed since the forward pass")]
    StaleCache,
    #[error("empty dataset: {0}")]
    EmptyDataset(String),
    #[error("missing head: {0}")]
    MissingHead(String),
    #[error("bad checkpoint: {0}")]
    Checkpoint(String),
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad configuration: {0}")]
    InvalidConfig(String),
}
