//! Forward and reverse-mode kernels. Temporal kernels are causal: a
//! missing `history` means zero padding on the left of the time axis.

pub mod activation;
pub mod conv1d;
pub mod conv2d;
pub mod deconv2d;
pub mod lstm;
pub mod norm;

use super::Tensor;
use crate::error::shape_err;
use crate::Result;

/// `[history | x]` along time; `history` defaults to `frames` zero frames.
pub(crate) fn with_history(x: &Tensor, history: Option<&Tensor>, frames: usize) -> Result<Tensor> {
    if frames == 0 {
        return Ok(x.clone());
    }
    match history {
        Some(h) => {
            if h.frames() != frames {
                return Err(shape_err!(
                    "history has {} frames, layer needs {frames}",
                    h.frames()
                ));
            }
            Tensor::concat_time(h, x)
        }
        None => {
            let mut shape = x.shape().to_vec();
            shape[1] = frames;
            Tensor::concat_time(&Tensor::zeros(&shape), x)
        }
    }
}

/// Drop the first `frames` time steps of a padded gradient.
pub(crate) fn strip_history(padded: &Tensor, frames: usize) -> Tensor {
    let t = padded.frames() - frames;
    padded.tail_time(t)
}
