//! Dense tensors, parameter storage, layer kernels and the two execution
//! backends (recording tape for training, cached runner for inference).

mod backend;
pub mod kernels;
mod param;
mod runner;
mod tape;
#[allow(clippy::module_inception)]
mod tensor;

pub use backend::{Backend, LstmIds, NormIds};
pub use param::{
    Init, LayerKind, LayerSpec, ParamEntry, ParamId, ParamKind, ParamLayout, ParamStore,
};
pub use runner::{NormMode, Runner, RunnerCache};
pub use tape::{Gradients, NodeId, NormStat, Tape};
pub use tensor::Tensor;
