//! Minimal dense neural-network substrate: matrices, layers, losses,
//! max-pool aggregation, Adam, checkpoints, and a finite-difference
//! gradient checker. Everything is f64 and bit-reproducible; parallel
//! kernels never change accumulation order (see [`tensor`]).

pub mod adam;
pub mod checkpoint;
pub mod gradcheck;
pub mod layers;
pub mod loss;
pub mod pool;
pub mod tensor;

pub use adam::{adam_step, Adam, AdamMoments};
pub use checkpoint::{Checkpoint, CheckpointTensor, TensorData};
pub use gradcheck::{max_relative_error, Differentiable};
pub use layers::{Layer, LayerSpec, Mode, Stack};
pub use loss::{binary_cross_entropy_logits, sigmoid, softmax_cross_entropy};
pub use pool::{maxpool_rows, maxpool_rows_backward, maxpool_segments, maxpool_segments_backward};
pub use tensor::Tensor2;
