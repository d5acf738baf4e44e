//! Causal-in-time, strided-in-frequency 2-D convolution over `[C, T, F]`.
//! No frequency padding: `F_out = (F_in - K_f) / s + 1`.

use super::{strip_history, with_history};
use crate::error::shape_err;
use crate::tensor::Tensor;
use crate::Result;

pub fn out_freq(f_in: usize, kf: usize, stride: usize) -> Option<usize> {
    (f_in >= kf).then(|| (f_in - kf) / stride + 1)
}

struct Dims {
    ci: usize,
    co: usize,
    kt: usize,
    kf: usize,
    t: usize,
    fi: usize,
    fo: usize,
}

fn dims(x: &Tensor, w: &Tensor, stride: usize) -> Result<Dims> {
    let [ci, t, fi] = x.dims3()?;
    let (co, wci, kt, kf) = match w.shape() {
        &[a, b, c, d] => (a, b, c, d),
        s => {
            return Err(shape_err!(
                "conv2d weight must be [Co, Ci, Kt, Kf], got {s:?}"
            ))
        }
    };
    if wci != ci {
        return Err(shape_err!("conv2d expects {wci} input channels, got {ci}"));
    }
    let fo = out_freq(fi, kf, stride)
        .ok_or_else(|| shape_err!("conv2d kernel {kf} wider than {fi} bins"))?;
    Ok(Dims {
        ci,
        co,
        kt,
        kf,
        t,
        fi,
        fo,
    })
}

pub fn forward(
    x: &Tensor,
    history: Option<&Tensor>,
    w: &Tensor,
    b: &Tensor,
    stride: usize,
) -> Result<Tensor> {
    let Dims {
        ci,
        co,
        kt,
        kf,
        t,
        fi,
        fo,
    } = dims(x, w, stride)?;
    if b.shape() != [co] {
        return Err(shape_err!("conv2d bias {:?} for {co} outputs", b.shape()));
    }
    let h = kt - 1;
    let xin = with_history(x, history, h)?;
    let tin = h + t;
    let (xd, wd) = (xin.data(), w.data());
    let mut y = Tensor::zeros(&[co, t, fo]);
    let yd = y.data_mut();
    for o in 0..co {
        yd[o * t * fo..(o + 1) * t * fo].fill(b.data()[o]);
        for i in 0..ci {
            for a in 0..kt {
                for c in 0..kf {
                    let wv = wd[((o * ci + i) * kt + a) * kf + c];
                    if wv == 0.0 {
                        continue;
                    }
                    for tt in 0..t {
                        let src = &xd[(i * tin + h + tt - a) * fi..][..fi];
                        let dst = &mut yd[(o * t + tt) * fo..][..fo];
                        for (q, v) in dst.iter_mut().enumerate() {
                            *v += wv * src[q * stride + c];
                        }
                    }
                }
            }
        }
    }
    Ok(y)
}

pub struct Conv2dGrads {
    pub dx: Tensor,
    pub dw: Tensor,
    pub db: Tensor,
}

pub fn backward(x: &Tensor, w: &Tensor, dy: &Tensor, stride: usize) -> Result<Conv2dGrads> {
    let Dims {
        ci,
        co,
        kt,
        kf,
        t,
        fi,
        fo,
    } = dims(x, w, stride)?;
    if dy.shape() != [co, t, fo] {
        return Err(shape_err!(
            "conv2d upstream {:?}, expected [{co}, {t}, {fo}]",
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
        db.data_mut()[o] = gd[o * t * fo..(o + 1) * t * fo].iter().sum();
        for i in 0..ci {
            for a in 0..kt {
                for c in 0..kf {
                    let idx = ((o * ci + i) * kt + a) * kf + c;
                    let wv = wd[idx];
                    let mut acc = 0.0;
                    for tt in 0..t {
                        let base = (i * tin + h + tt - a) * fi;
                        let g = &gd[(o * t + tt) * fo..][..fo];
                        let dxr = &mut dxin.data_mut()[base..base + fi];
                        for (q, &gv) in g.iter().enumerate() {
                            acc += gv * xd[base + q * stride + c];
                            dxr[q * stride + c] += wv * gv;
                        }
                    }
                    dw.data_mut()[idx] = acc;
                }
            }
        }
    }
    Ok(Conv2dGrads {
        dx: strip_history(&dxin, h),
        dw,
        db,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    pub(crate) fn naive(x: &Tensor, w: &Tensor, b: &Tensor, s: usize) -> Tensor {
        let [ci, t, fi] = x.dims3().unwrap();
        let (co, kt, kf) = (w.dim(0), w.dim(2), w.dim(3));
        let fo = (fi - kf) / s + 1;
        let mut y = Tensor::zeros(&[co, t, fo]);
        for o in 0..co {
            for tt in 0..t {
                for q in 0..fo {
                    let mut acc = b.data()[o];
                    for i in 0..ci {
                        for a in 0..kt {
                            if tt < a {
                                continue;
                            }
                            for c in 0..kf {
                                acc += w.data()[((o * ci + i) * kt + a) * kf + c]
                                    * x.data()[(i * t + tt - a) * fi + q * s + c];
                            }
                        }
                    }
                    y.data_mut()[(o * t + tt) * fo + q] = acc;
                }
            }
        }
        y
    }

    #[test]
    fn matches_naive_oracle() {
        let mut r = rng::seeded(31, 0);
        let x = Tensor::from_vec(&[3, 6, 17], rng::uniform_vec(&mut r, 3 * 6 * 17, 1.0)).unwrap();
        let w = Tensor::from_vec(&[2, 3, 2, 5], rng::uniform_vec(&mut r, 60, 1.0)).unwrap();
        let b = Tensor::from_vec(&[2], rng::uniform_vec(&mut r, 2, 1.0)).unwrap();
        let y = forward(&x, None, &w, &b, 2).unwrap();
        assert_eq!(y.shape(), &[2, 6, 7]);
        assert!(y.max_abs_diff(&naive(&x, &w, &b, 2)) <= 1e-10);
    }

    #[test]
    fn out_sizes_for_161_bins() {
        assert_eq!(out_freq(161, 5, 2), Some(79));
        assert_eq!(out_freq(79, 3, 2), Some(39));
        assert_eq!(out_freq(39, 3, 2), Some(19));
        assert_eq!(out_freq(19, 3, 2), Some(9));
        assert_eq!(out_freq(2, 3, 2), None);
    }
}
