//! Transposed 2-D convolution: causal in time, strided in frequency.
//! The natural width `(F_in - 1) * s + K_f` is trimmed or extended to the
//! requested `out_f`; extension bins carry only the bias.

use super::{strip_history, with_history};
use crate::error::shape_err;
use crate::tensor::Tensor;
use crate::Result;

pub fn natural_freq(f_in: usize, kf: usize, stride: usize) -> usize {
    (f_in.max(1) - 1) * stride + kf
}

struct Dims {
    ci: usize,
    co: usize,
    kt: usize,
    kf: usize,
    t: usize,
    fi: usize,
}

fn dims(x: &Tensor, w: &Tensor, stride: usize, out_f: usize) -> Result<Dims> {
    let [ci, t, fi] = x.dims3()?;
    let (wci, co, kt, kf) = match w.shape() {
        &[a, b, c, d] => (a, b, c, d),
        s => {
            return Err(shape_err!(
                "deconv2d weight must be [Ci, Co, Kt, Kf], got {s:?}"
            ))
        }
    };
    if wci != ci {
        return Err(shape_err!(
            "deconv2d expects {wci} input channels, got {ci}"
        ));
    }
    let nat = natural_freq(fi, kf, stride);
    if out_f == 0 || out_f >= nat + stride {
        return Err(shape_err!(
            "deconv2d cannot produce {out_f} bins from {fi} (natural {nat})"
        ));
    }
    Ok(Dims {
        ci,
        co,
        kt,
        kf,
        t,
        fi,
    })
}

pub fn forward(
    x: &Tensor,
    history: Option<&Tensor>,
    w: &Tensor,
    b: &Tensor,
    stride: usize,
    out_f: usize,
) -> Result<Tensor> {
    let Dims {
        ci,
        co,
        kt,
        kf,
        t,
        fi,
    } = dims(x, w, stride, out_f)?;
    if b.shape() != [co] {
        return Err(shape_err!("deconv2d bias {:?} for {co} outputs", b.shape()));
    }
    let h = kt - 1;
    let xin = with_history(x, history, h)?;
    let tin = h + t;
    let (xd, wd) = (xin.data(), w.data());
    let mut y = Tensor::zeros(&[co, t, out_f]);
    let yd = y.data_mut();
    for o in 0..co {
        yd[o * t * out_f..(o + 1) * t * out_f].fill(b.data()[o]);
        for i in 0..ci {
            for a in 0..kt {
                for c in 0..kf {
                    let wv = wd[((i * co + o) * kt + a) * kf + c];
                    if wv == 0.0 {
                        continue;
                    }
                    for tt in 0..t {
                        let src = &xd[(i * tin + h + tt - a) * fi..][..fi];
                        let dst = &mut yd[(o * t + tt) * out_f..][..out_f];
                        for (q, &xv) in src.iter().enumerate() {
                            let p = q * stride + c;
                            if p < out_f {
                                dst[p] += wv * xv;
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(y)
}

pub struct Deconv2dGrads {
    pub dx: Tensor,
    pub dw: Tensor,
    pub db: Tensor,
}

pub fn backward(x: &Tensor, w: &Tensor, dy: &Tensor, stride: usize) -> Result<Deconv2dGrads> {
    let out_f = dy.shape().last().copied().unwrap_or(0);
    let Dims {
        ci,
        co,
        kt,
        kf,
        t,
        fi,
    } = dims(x, w, stride, out_f)?;
    if dy.shape() != [co, t, out_f] {
        return Err(shape_err!(
            "deconv2d upstream {:?}, expected [{co}, {t}, {out_f}]",
            dy.shape()
        ));
    }
    let h = kt - 1;
    let xin = with_history(x, None, h)?;
    let tin = h + t;
    let mut dxin = Tensor::zeros(xin.shape());
    let mut dw = Tensor::zeros(w.shape());
    let mut db = Tensor::zeros(&[co]);
    let (xd, wd, gd) = (xin.data(), w.data(), dy.data());
    for o in 0..co {
        db.data_mut()[o] = gd[o * t * out_f..(o + 1) * t * out_f].iter().sum();
        for i in 0..ci {
            for a in 0..kt {
                for c in 0..kf {
                    let idx = ((i * co + o) * kt + a) * kf + c;
                    let wv = wd[idx];
                    let mut acc = 0.0;
                    for tt in 0..t {
                        let base = (i * tin + h + tt - a) * fi;
                        let g = &gd[(o * t + tt) * out_f..][..out_f];
                        for q in 0..fi {
                            let p = q * stride + c;
                            if p < out_f {
                                acc += g[p] * xd[base + q];
                                dxin.data_mut()[base + q] += wv * g[p];
                            }
                        }
                    }
                    dw.data_mut()[idx] = acc;
                }
            }
        }
    }
    Ok(Deconv2dGrads {
        dx: strip_history(&dxin, h),
        dw,
        db,
    })
}
