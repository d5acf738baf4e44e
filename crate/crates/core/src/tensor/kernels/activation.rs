//! Pointwise nonlinearities. PReLU slopes are per channel (axis 0), or a
//! single shared slope.

use crate::error::shape_err;
use crate::math;
use crate::tensor::Tensor;
use crate::Result;

fn slope_len(x: &Tensor, a: &Tensor) -> Result<usize> {
    match a.shape() {
        [1] => Ok(1),
        [c] if *c == x.dim(0) => Ok(*c),
        s => Err(shape_err!("prelu slope {s:?} for input {:?}", x.shape())),
    }
}

pub fn prelu(x: &Tensor, a: &Tensor) -> Result<Tensor> {
    let n = slope_len(x, a)?;
    let row = x.row_len();
    let mut y = x.clone();
    for (k, v) in y.data_mut().iter_mut().enumerate() {
        if *v < 0.0 {
            *v *= a.data()[if n == 1 { 0 } else { k / row }];
        }
    }
    Ok(y)
}

/// Returns `(dx, da)`.
pub fn prelu_backward(x: &Tensor, a: &Tensor, dy: &Tensor) -> Result<(Tensor, Tensor)> {
    let n = slope_len(x, a)?;
    let row = x.row_len();
    let mut dx = dy.clone();
    let mut da = Tensor::zeros(a.shape());
    for k in 0..x.len() {
        let ch = if n == 1 { 0 } else { k / row };
        let xv = x.data()[k];
        if xv < 0.0 {
            dx.data_mut()[k] *= a.data()[ch];
            da.data_mut()[ch] += xv * dy.data()[k];
        }
    }
    Ok((dx, da))
}

pub fn sigmoid(x: &Tensor) -> Tensor {
    x.map(math::sigmoid)
}

pub fn tanh(x: &Tensor) -> Tensor {
    x.map(math::tanh)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn prelu_scales_negatives_per_channel() {
        let x = Tensor::from_vec(&[2, 2], vec![-1.0, 2.0, -4.0, 3.0]).unwrap();
        let a = Tensor::from_vec(&[2], vec![0.25, 0.5]).unwrap();
        assert_eq!(prelu(&x, &a).unwrap().data(), &[-0.25, 2.0, -2.0, 3.0]);
        let (dx, da) = prelu_backward(&x, &a, &Tensor::full(&[2, 2], 1.0)).unwrap();
        assert_eq!(dx.data(), &[0.25, 1.0, 0.5, 1.0]);
        assert_eq!(da.data(), &[-1.0, -4.0]);
    }
}
