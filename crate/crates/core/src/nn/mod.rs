//! Hand-written reverse-mode building blocks: dense layers, tanh, an LSTM cell,
//! Adam, gradient-norm clipping and text checkpoints. Everything is `f64`.

mod adam;
mod checkpoint;
mod clip;
mod dense;
mod lstm;
mod param;
mod tensor;

pub use adam::{adam_step, Adam, AdamConfig};
pub use checkpoint::{decode_checkpoint, encode_checkpoint, Checkpoint, CHECKPOINT_HEADER};
pub use clip::{clip_grad_norm, global_grad_norm};
pub use dense::{sigmoid, tanh_backward, tanh_forward, Dense};
pub use lstm::{LstmCache, LstmCell, LstmState};
pub use param::{ParamBlock, Params};
pub use tensor::Tensor2;
