//! Dilated causal 1-D convolution over `[C, T]`:
//! `y[o, t] = b[o] + sum_{i, j} w[o, i, j] * x[i, t - j*d]`.

use super::{strip_history, with_history};
use crate::error::shape_err;
use crate::tensor::Tensor;
use crate::Result;

fn check(x: &Tensor, w: &Tensor, b: &Tensor) -> Result<(usize, usize, usize, usize)> {
    let [ci, t] = x.dims2()?;
    let (co, wci, k) = match w.shape() {
        &[co, wci, k] => (co, wci, k),
        s => return Err(shape_err!("conv1d weight must be [Co, Ci, K], got {s:?}")),
    };
    if wci != ci {
        return Err(shape_err!("conv1d expects {wci} input channels, got {ci}"));
    }
    if b.shape() != [co] {
        return Err(shape_err!("conv1d bias {:?} for {co} outputs", b.shape()));
    }
    Ok((ci, co, k, t))
}

pub fn forward(
    x: &Tensor,
    history: Option<&Tensor>,
    w: &Tensor,
    b: &Tensor,
    dilation: usize,
) -> Result<Tensor> {
    let (ci, co, k, t) = check(x, w, b)?;
    let h = (k - 1) * dilation;
    let xin = with_history(x, history, h)?;
    let tin = h + t;
    let xd = xin.data();
    let wd = w.data();
    let mut y = Tensor::zeros(&[co, t]);
    let yd = y.data_mut();
    for o in 0..co {
        let row = &mut yd[o * t..(o + 1) * t];
        row.fill(b.data()[o]);
        for i in 0..ci {
            let xrow = &xd[i * tin..(i + 1) * tin];
            for j in 0..k {
                let wv = wd[(o * ci + i) * k + j];
                if wv == 0.0 {
                    continue;
                }
                let src = &xrow[h - j * dilation..h - j * dilation + t];
                for (yv, &xv) in row.iter_mut().zip(src) {
                    *yv += wv * xv;
                }
            }
        }
    }
    Ok(y)
}

pub struct Conv1dGrads {
    pub dx: Tensor,
    pub dw: Tensor,
    pub db: Tensor,
}

/// Gradients for a zero-history forward pass.
pub fn backward(x: &Tensor, w: &Tensor, dy: &Tensor, dilation: usize) -> Result<Conv1dGrads> {
    let [ci, t] = x.dims2()?;
    let (co, k) = (w.dim(0), w.dim(2));
    if dy.shape() != [co, t] {
        return Err(shape_err!(
            "conv1d upstream {:?}, expected [{co}, {t}]",
            dy.shape()
        ));
    }
    let h = (k - 1) * dilation;
    let xin = with_history(x, None, h)?;
    let tin = h + t;
    let mut dxin = Tensor::zeros(&[ci, tin]);
    let mut dw = Tensor::zeros(w.shape());
    let mut db = Tensor::zeros(&[co]);
    let (xd, wd, gd) = (xin.data(), w.data(), dy.data());
    for o in 0..co {
        let grow = &gd[o * t..(o + 1) * t];
        db.data_mut()[o] = grow.iter().sum();
        for i in 0..ci {
            let xrow = &xd[i * tin..(i + 1) * tin];
            for j in 0..k {
                let off = h - j * dilation;
                let idx = (o * ci + i) * k + j;
                dw.data_mut()[idx] = grow
                    .iter()
                    .zip(&xrow[off..off + t])
                    .map(|(g, x)| g * x)
                    .sum();
                let wv = wd[idx];
                let dxrow = &mut dxin.data_mut()[i * tin + off..i * tin + off + t];
                for (d, &g) in dxrow.iter_mut().zip(grow) {
                    *d += wv * g;
                }
            }
        }
    }
    Ok(Conv1dGrads {
        dx: strip_history(&dxin, h),
        dw,
        db,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use alloc::vec;

    fn naive(x: &Tensor, w: &Tensor, b: &Tensor, d: usize) -> Tensor {
        let [ci, t] = x.dims2().unwrap();
        let (co, k) = (w.dim(0), w.dim(2));
        let mut y = Tensor::zeros(&[co, t]);
        for o in 0..co {
            for tt in 0..t {
                let mut acc = b.data()[o];
                for i in 0..ci {
                    for j in 0..k {
                        if tt >= j * d {
                            acc += w.data()[(o * ci + i) * k + j] * x.data()[i * t + tt - j * d];
                        }
                    }
                }
                y.data_mut()[o * t + tt] = acc;
            }
        }
        y
    }

    #[test]
    fn identity_kernel() {
        let x = Tensor::from_vec(&[2, 3], vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let w = Tensor::from_vec(&[2, 2, 1], vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let y = forward(&x, None, &w, &Tensor::zeros(&[2]), 1).unwrap();
        assert_eq!(y, x);
    }

    #[test]
    fn impulse_response_is_dilated() {
        let mut x = Tensor::zeros(&[1, 8]);
        x.data_mut()[0] = 1.0;
        let w = Tensor::from_vec(&[1, 1, 3], vec![0.5, 0.25, 0.125]).unwrap();
        let y = forward(&x, None, &w, &Tensor::zeros(&[1]), 2).unwrap();
        assert_eq!(y.data(), &[0.5, 0.0, 0.25, 0.0, 0.125, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn matches_nested_loop_oracle() {
        let mut r = rng::seeded(21, 0);
        let x = Tensor::from_vec(&[3, 40], rng::uniform_vec(&mut r, 120, 1.0)).unwrap();
        let w = Tensor::from_vec(&[4, 3, 3], rng::uniform_vec(&mut r, 36, 1.0)).unwrap();
        let b = Tensor::from_vec(&[4], rng::uniform_vec(&mut r, 4, 1.0)).unwrap();
        let y = forward(&x, None, &w, &b, 5).unwrap();
        assert!(y.max_abs_diff(&naive(&x, &w, &b, 5)) <= 1e-10);
    }

    #[test]
    fn history_continues_stream() {
        let mut r = rng::seeded(22, 0);
        let x = Tensor::from_vec(&[2, 10], rng::uniform_vec(&mut r, 20, 1.0)).unwrap();
        let w = Tensor::from_vec(&[1, 2, 3], rng::uniform_vec(&mut r, 6, 1.0)).unwrap();
        let b = Tensor::zeros(&[1]);
        let full = forward(&x, None, &w, &b, 2).unwrap();
        let mut hist = Tensor::zeros(&[2, 4]);
        let mut out = alloc::vec::Vec::new();
        for t in 0..10 {
            let frame = x.narrow_last_time(t);
            out.push(forward(&frame, Some(&hist), &w, &b, 2).unwrap().data()[0]);
            hist = Tensor::concat_time(&hist, &frame).unwrap().tail_time(4);
        }
        assert_eq!(out, full.data());
    }

    #[test]
    fn channel_mismatch() {
        let x = Tensor::zeros(&[2, 4]);
        let w = Tensor::zeros(&[1, 3, 1]);
        assert!(forward(&x, None, &w, &Tensor::zeros(&[1]), 1).is_err());
    }

    impl Tensor {
        fn narrow_last_time(&self, t: usize) -> Tensor {
            let [c, tt] = self.dims2().unwrap();
            Tensor::from_vec(&[c, 1], (0..c).map(|i| self.data()[i * tt + t]).collect()).unwrap()
        }
    }
}
