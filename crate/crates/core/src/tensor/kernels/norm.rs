//! Per-channel instance normalisation over `[C, T, F]`.

use crate::error::shape_err;
use crate::math;
use crate::tensor::Tensor;
use crate::Result;
use alloc::vec::Vec;

pub const EPS: f64 = 1e-5;

/// Saved statistics from an utterance-mode forward pass.
#[derive(Debug, Clone)]
pub struct NormCache {
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
    pub x_hat: Tensor,
}

fn check(x: &Tensor, p: &[&Tensor]) -> Result<usize> {
    if x.rank() != 3 {
        return Err(shape_err!(
            "instance norm expects [C, T, F], got {:?}",
            x.shape()
        ));
    }
    let c = x.dim(0);
    for t in p {
        if t.shape() != [c] {
            return Err(shape_err!(
                "norm parameter {:?} for {c} channels",
                t.shape()
            ));
        }
    }
    Ok(c)
}

fn affine(
    x: &Tensor,
    mean: &[f64],
    var: &[f64],
    gamma: &Tensor,
    beta: &Tensor,
) -> (Tensor, Tensor) {
    let c = x.dim(0);
    let row = x.row_len();
    let mut x_hat = Tensor::zeros(x.shape());
    let mut y = Tensor::zeros(x.shape());
    for ch in 0..c {
        let inv = 1.0 / math::sqrt(var[ch] + EPS);
        let (g, b) = (gamma.data()[ch], beta.data()[ch]);
        for k in ch * row..(ch + 1) * row {
            let h = (x.data()[k] - mean[ch]) * inv;
            x_hat.data_mut()[k] = h;
            y.data_mut()[k] = g * h + b;
        }
    }
    (y, x_hat)
}

/// Statistics over the `T*F` elements of each channel.
pub fn forward_utterance(x: &Tensor, gamma: &Tensor, beta: &Tensor) -> Result<(Tensor, NormCache)> {
    let c = check(x, &[gamma, beta])?;
    let row = x.row_len();
    if row == 0 {
        return Err(crate::Error::EmptyInput);
    }
    let mut mean = alloc::vec![0.0; c];
    let mut var = alloc::vec![0.0; c];
    for ch in 0..c {
        let s = &x.data()[ch * row..(ch + 1) * row];
        let m = s.iter().sum::<f64>() / row as f64;
        mean[ch] = m;
        var[ch] = s.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / row as f64;
    }
    let (y, x_hat) = affine(x, &mean, &var, gamma, beta);
    Ok((y, NormCache { mean, var, x_hat }))
}

/// Frozen statistics; frame-local and therefore stream-safe.
pub fn forward_running(
    x: &Tensor,
    gamma: &Tensor,
    beta: &Tensor,
    mean: &Tensor,
    var: &Tensor,
) -> Result<Tensor> {
    check(x, &[gamma, beta, mean, var])?;
    Ok(affine(x, mean.data(), var.data(), gamma, beta).0)
}

pub struct NormGrads {
    pub dx: Tensor,
    pub dgamma: Tensor,
    pub dbeta: Tensor,
}

pub fn backward_utterance(cache: &NormCache, gamma: &Tensor, dy: &Tensor) -> Result<NormGrads> {
    if dy.shape() != cache.x_hat.shape() {
        return Err(shape_err!("norm upstream {:?}", dy.shape()));
    }
    let c = dy.dim(0);
    let row = dy.row_len();
    let n = row as f64;
    let mut dx = Tensor::zeros(dy.shape());
    let mut dgamma = Tensor::zeros(&[c]);
    let mut dbeta = Tensor::zeros(&[c]);
    for ch in 0..c {
        let r = ch * row..(ch + 1) * row;
        let g = &dy.data()[r.clone()];
        let h = &cache.x_hat.data()[r.clone()];
        let sum_g: f64 = g.iter().sum();
        let sum_gh: f64 = g.iter().zip(h).map(|(a, b)| a * b).sum();
        dbeta.data_mut()[ch] = sum_g;
        dgamma.data_mut()[ch] = sum_gh;
        let k = gamma.data()[ch] / math::sqrt(cache.var[ch] + EPS);
        for (j, idx) in r.enumerate() {
            dx.data_mut()[idx] = k * (g[j] - sum_g / n - h[j] * sum_gh / n);
        }
    }
    Ok(NormGrads { dx, dgamma, dbeta })
}

pub fn backward_running(
    x: &Tensor,
    gamma: &Tensor,
    mean: &Tensor,
    var: &Tensor,
    dy: &Tensor,
) -> Result<NormGrads> {
    let c = check(x, &[gamma, var, mean])?;
    let row = x.row_len();
    let mut dx = Tensor::zeros(x.shape());
    let mut dgamma = Tensor::zeros(&[c]);
    let mut dbeta = Tensor::zeros(&[c]);
    for ch in 0..c {
        let inv = 1.0 / math::sqrt(var.data()[ch] + EPS);
        for k in ch * row..(ch + 1) * row {
            let g = dy.data()[k];
            dx.data_mut()[k] = gamma.data()[ch] * inv * g;
            dgamma.data_mut()[ch] += g * (x.data()[k] - mean.data()[ch]) * inv;
            dbeta.data_mut()[ch] += g;
        }
    }
    Ok(NormGrads { dx, dgamma, dbeta })
}
