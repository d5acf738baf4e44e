//! Combined MSE over compressed real/imaginary parts and compressed
//! magnitudes, averaged over sub-channels, frames and bins.

use crate::dsp::{ComplexSpectrum, Domain, ZERO_MAGNITUDE};
use crate::error::shape_err;
use crate::tensor::Tensor;
use crate::{math, Error, Result};
use alloc::vec::Vec;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LossConfig {
    /// Weight on the complex (RI) error.
    pub lambda: f64,
    /// Weight on the magnitude error.
    pub beta: f64,
    /// Compression exponent.
    pub c: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self {
            lambda: 0.3,
            beta: 0.7,
            c: 0.3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LossValue {
    pub loss: f64,
    /// Gradient with respect to the estimate.
    pub grad: Tensor,
}

/// Loss on `[2n, T, F]` planes that are already compressed
/// (`[re.., im..]` layout).
pub fn cmse_compressed(est: &Tensor, target: &Tensor, cfg: &LossConfig) -> Result<LossValue> {
    if est.shape() != target.shape() {
        return Err(shape_err!(
            "loss estimate {:?} vs target {:?}",
            est.shape(),
            target.shape()
        ));
    }
    let [c, t, f] = est.dims3()?;
    if c % 2 != 0 {
        return Err(shape_err!("odd plane count {c}"));
    }
    let half = c / 2 * t * f;
    if half == 0 {
        return Err(Error::EmptyInput);
    }
    let n = half as f64;
    let (e, r) = (est.data(), target.data());
    let mut grad = Tensor::zeros(est.shape());
    let mut total = 0.0;
    for k in 0..half {
        let (er, ei, rr, ri) = (e[k], e[half + k], r[k], r[half + k]);
        let (em, rm) = (math::hypot(er, ei), math::hypot(rr, ri));
        let (dr, di, dm) = (er - rr, ei - ri, em - rm);
        total += cfg.lambda * (dr * dr + di * di) + cfg.beta * dm * dm;
        let (mr, mi) = if em > 0.0 {
            (er / em, ei / em)
        } else {
            (0.0, 0.0)
        };
        let g = grad.data_mut();
        g[k] = (2.0 * cfg.lambda * dr + 2.0 * cfg.beta * dm * mr) / n;
        g[half + k] = (2.0 * cfg.lambda * di + 2.0 * cfg.beta * dm * mi) / n;
    }
    Ok(LossValue {
        loss: total / n,
        grad,
    })
}

/// Loss on linear-domain spectra, with gradients per sub-channel
/// `(d/d re, d/d im)`.
#[derive(Debug, Clone)]
pub struct LinearLoss {
    pub loss: f64,
    pub grads: Vec<(Vec<f64>, Vec<f64>)>,
}

/// Compresses both sides with `cfg.c`, then evaluates [`cmse_compressed`].
/// The derivative of the power law at a zero-magnitude bin is taken as 0.
pub fn cmse_loss(
    est: &[ComplexSpectrum],
    target: &[ComplexSpectrum],
    cfg: &LossConfig,
) -> Result<LinearLoss> {
    if est.len() != target.len() || est.is_empty() {
        return Err(shape_err!(
            "{} estimate vs {} target sub-channels",
            est.len(),
            target.len()
        ));
    }
    for (a, b) in est.iter().zip(target) {
        if !a.same_shape(b) {
            return Err(shape_err!("sub-channel spectra differ in shape"));
        }
        if a.domain != Domain::Linear || b.domain != Domain::Linear {
            return Err(Error::DomainError("cmse_loss takes linear-domain spectra"));
        }
    }
    let planes = |s: &[ComplexSpectrum]| -> Result<Tensor> {
        let c = s
            .iter()
            .map(|x| crate::dsp::compress(x, cfg.c))
            .collect::<Result<Vec<_>>>()?;
        crate::model::spectra_to_planes(&c)
    };
    let lv = cmse_compressed(&planes(est)?, &planes(target)?, cfg)?;
    let half = lv.grad.len() / 2;
    let g = lv.grad.data();
    let per = est[0].real.len();
    let grads = est
        .iter()
        .enumerate()
        .map(|(j, s)| {
            let mut gr = alloc::vec![0.0; per];
            let mut gi = alloc::vec![0.0; per];
            for k in 0..per {
                let (x, y) = (s.real[k], s.imag[k]);
                let m = math::hypot(x, y);
                if m < ZERO_MAGNITUDE {
                    continue;
                }
                let (gwr, gwi) = (g[j * per + k], g[half + j * per + k]);
                let p = math::powf(m, cfg.c - 1.0);
                let q = (cfg.c - 1.0) * p / (m * m);
                gr[k] = gwr * (p + q * x * x) + gwi * q * x * y;
                gi[k] = gwr * q * x * y + gwi * (p + q * y * y);
            }
            (gr, gi)
        })
        .collect();
    Ok(LinearLoss {
        loss: lv.loss,
        grads,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(frames: usize, bins: usize, bin: Option<(usize, f64, f64)>) -> ComplexSpectrum {
        let mut s = ComplexSpectrum::zeros(frames, bins, Domain::Linear);
        if let Some((k, re, im)) = bin {
            s.real[k] = re;
            s.imag[k] = im;
        }
        s
    }

    #[test]
    fn identical_inputs_give_zero() {
        let a: Vec<_> = (0..3).map(|j| spec(2, 4, Some((j, 0.5, -0.25)))).collect();
        let l = cmse_loss(&a, &a, &LossConfig::default()).unwrap();
        assert_eq!(l.loss, 0.0);
        assert!(l
            .grads
            .iter()
            .all(|(r, i)| r.iter().chain(i).all(|v| *v == 0.0)));
    }

    #[test]
    fn single_unit_bin_against_silence() {
        let (t, f) = (2, 5);
        let mut est: Vec<_> = (0..3).map(|_| spec(t, f, None)).collect();
        est[0] = spec(t, f, Some((3, 1.0, 0.0)));
        let zero: Vec<_> = (0..3).map(|_| spec(t, f, None)).collect();
        let l = cmse_loss(&est, &zero, &LossConfig::default()).unwrap();
        let expect = (0.3 * 1.0 + 0.7 * 1.0) / (3 * t * f) as f64;
        assert!((l.loss - expect).abs() < 1e-15);
    }

    #[test]
    fn rejects_mismatch_and_compressed_input() {
        let a = [spec(2, 4, None)];
        let b = [spec(3, 4, None)];
        assert!(matches!(
            cmse_loss(&a, &b, &LossConfig::default()),
            Err(Error::ShapeMismatch(_))
        ));
        let mut c = spec(2, 4, None);
        c.domain = Domain::Compressed(0.3);
        assert!(matches!(
            cmse_loss(&[c], &a, &LossConfig::default()),
            Err(Error::DomainError(_))
        ));
    }

    #[test]
    fn defaults_sum_to_one() {
        let c = LossConfig::default();
        assert_eq!(c.lambda + c.beta, 1.0);
    }
}
