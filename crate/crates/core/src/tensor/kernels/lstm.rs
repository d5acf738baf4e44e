//! Single-layer unidirectional LSTM over `[D, T]` with gate order
//! `i, f, g, o`.

use crate::error::shape_err;
use crate::math;
use crate::tensor::Tensor;
use crate::Result;
use alloc::vec;
use alloc::vec::Vec;

#[derive(Debug, Clone, PartialEq)]
pub struct LstmState {
    pub h: Vec<f64>,
    pub c: Vec<f64>,
}

impl LstmState {
    pub fn zeros(hidden: usize) -> Self {
        Self {
            h: vec![0.0; hidden],
            c: vec![0.0; hidden],
        }
    }
}

/// Per-step activations kept for backpropagation through time.
#[derive(Debug, Clone)]
pub struct LstmCache {
    xs: Vec<Vec<f64>>,
    gates: Vec<Vec<f64>>,
    cs: Vec<Vec<f64>>,
    hs: Vec<Vec<f64>>,
}

fn dims(x: &Tensor, w_ih: &Tensor, w_hh: &Tensor, b: &Tensor) -> Result<(usize, usize, usize)> {
    let [d, t] = x.dims2()?;
    let h = w_hh.dim(1);
    if w_ih.shape() != [4 * h, d] || w_hh.shape() != [4 * h, h] || b.shape() != [4 * h] {
        return Err(shape_err!(
            "lstm weights {:?} {:?} {:?} for input {:?}",
            w_ih.shape(),
            w_hh.shape(),
            b.shape(),
            x.shape()
        ));
    }
    Ok((d, h, t))
}

fn columns(x: &Tensor) -> Vec<Vec<f64>> {
    let [d, t] = [x.dim(0), x.dim(1)];
    (0..t)
        .map(|tt| (0..d).map(|i| x.data()[i * t + tt]).collect())
        .collect()
}

fn matvec_add(out: &mut [f64], w: &[f64], v: &[f64]) {
    let n = v.len();
    for (r, o) in out.iter_mut().enumerate() {
        *o += w[r * n..(r + 1) * n]
            .iter()
            .zip(v)
            .map(|(a, b)| a * b)
            .sum::<f64>();
    }
}

fn step(w_ih: &[f64], w_hh: &[f64], b: &[f64], x: &[f64], st: &mut LstmState) -> Vec<f64> {
    let h = st.h.len();
    let mut z = b.to_vec();
    matvec_add(&mut z, w_ih, x);
    matvec_add(&mut z, w_hh, &st.h);
    for k in 0..h {
        z[k] = math::sigmoid(z[k]);
        z[h + k] = math::sigmoid(z[h + k]);
        z[2 * h + k] = math::tanh(z[2 * h + k]);
        z[3 * h + k] = math::sigmoid(z[3 * h + k]);
        st.c[k] = z[h + k] * st.c[k] + z[k] * z[2 * h + k];
        st.h[k] = z[3 * h + k] * math::tanh(st.c[k]);
    }
    z
}

fn to_tensor(hs: &[Vec<f64>], h: usize) -> Tensor {
    let t = hs.len();
    let mut y = Tensor::zeros(&[h, t]);
    for (tt, col) in hs.iter().enumerate() {
        for (k, &v) in col.iter().enumerate().take(h) {
            y.data_mut()[k * t + tt] = v;
        }
    }
    y
}

/// Runs from `state` (zeros if `None`); returns outputs `[H, T]` and the
/// final state.
pub fn forward(
    x: &Tensor,
    state: Option<&LstmState>,
    w_ih: &Tensor,
    w_hh: &Tensor,
    b: &Tensor,
) -> Result<(Tensor, LstmState)> {
    let (_, h, _) = dims(x, w_ih, w_hh, b)?;
    let mut st = state.cloned().unwrap_or_else(|| LstmState::zeros(h));
    if st.h.len() != h || st.c.len() != h {
        return Err(shape_err!("lstm state width {} for hidden {h}", st.h.len()));
    }
    let hs: Vec<Vec<f64>> = columns(x)
        .iter()
        .map(|col| {
            step(w_ih.data(), w_hh.data(), b.data(), col, &mut st);
            st.h.clone()
        })
        .collect();
    Ok((to_tensor(&hs, h), st))
}

/// Zero-initial-state forward that keeps what BPTT needs.
pub fn forward_cached(
    x: &Tensor,
    w_ih: &Tensor,
    w_hh: &Tensor,
    b: &Tensor,
) -> Result<(Tensor, LstmCache)> {
    let (_, h, _) = dims(x, w_ih, w_hh, b)?;
    let xs = columns(x);
    let mut st = LstmState::zeros(h);
    let mut cache = LstmCache {
        gates: Vec::with_capacity(xs.len()),
        cs: vec![st.c.clone()],
        hs: vec![st.h.clone()],
        xs: Vec::new(),
    };
    for col in &xs {
        cache
            .gates
            .push(step(w_ih.data(), w_hh.data(), b.data(), col, &mut st));
        cache.cs.push(st.c.clone());
        cache.hs.push(st.h.clone());
    }
    cache.xs = xs;
    Ok((to_tensor(&cache.hs[1..], h), cache))
}

pub struct LstmGrads {
    pub dx: Tensor,
    pub dw_ih: Tensor,
    pub dw_hh: Tensor,
    pub db: Tensor,
}

pub fn backward(cache: &LstmCache, w_ih: &Tensor, w_hh: &Tensor, dy: &Tensor) -> Result<LstmGrads> {
    let h = w_hh.dim(1);
    let d = w_ih.dim(1);
    let t = cache.xs.len();
    if dy.shape() != [h, t] {
        return Err(shape_err!(
            "lstm upstream {:?}, expected [{h}, {t}]",
            dy.shape()
        ));
    }
    let mut dw_ih = Tensor::zeros(w_ih.shape());
    let mut dw_hh = Tensor::zeros(w_hh.shape());
    let mut db = Tensor::zeros(&[4 * h]);
    let mut dx = Tensor::zeros(&[d, t]);
    let mut dh_next = vec![0.0; h];
    let mut dc_next = vec![0.0; h];
    let mut dz = vec![0.0; 4 * h];
    for tt in (0..t).rev() {
        let g = &cache.gates[tt];
        let (c_prev, c) = (&cache.cs[tt], &cache.cs[tt + 1]);
        for k in 0..h {
            let dh = dy.data()[k * t + tt] + dh_next[k];
            let (i, f, gg, o) = (g[k], g[h + k], g[2 * h + k], g[3 * h + k]);
            let tc = math::tanh(c[k]);
            let dc = dc_next[k] + dh * o * (1.0 - tc * tc);
            dz[k] = dc * gg * i * (1.0 - i);
            dz[h + k] = dc * c_prev[k] * f * (1.0 - f);
            dz[2 * h + k] = dc * i * (1.0 - gg * gg);
            dz[3 * h + k] = dh * tc * o * (1.0 - o);
            dc_next[k] = dc * f;
        }
        let (x, h_prev) = (&cache.xs[tt], &cache.hs[tt]);
        dh_next.fill(0.0);
        for (r, &z) in dz.iter().enumerate() {
            if z == 0.0 {
                continue;
            }
            db.data_mut()[r] += z;
            for (j, &xv) in x.iter().enumerate() {
                dw_ih.data_mut()[r * d + j] += z * xv;
                dx.data_mut()[j * t + tt] += z * w_ih.data()[r * d + j];
            }
            for (j, &hv) in h_prev.iter().enumerate() {
                dw_hh.data_mut()[r * h + j] += z * hv;
                dh_next[j] += z * w_hh.data()[r * h + j];
            }
        }
    }
    Ok(LstmGrads {
        dx,
        dw_ih,
        dw_hh,
        db,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn weights(d: usize, h: usize, seed: u64) -> (Tensor, Tensor, Tensor) {
        let mut r = rng::seeded(seed, 0);
        (
            Tensor::from_vec(&[4 * h, d], rng::uniform_vec(&mut r, 4 * h * d, 0.5)).unwrap(),
            Tensor::from_vec(&[4 * h, h], rng::uniform_vec(&mut r, 4 * h * h, 0.5)).unwrap(),
            Tensor::from_vec(&[4 * h], rng::uniform_vec(&mut r, 4 * h, 0.5)).unwrap(),
        )
    }

    #[test]
    fn zero_weights_give_zero_output() {
        let x = Tensor::full(&[3, 4], 1.0);
        let (y, st) = forward(
            &x,
            None,
            &Tensor::zeros(&[8, 3]),
            &Tensor::zeros(&[8, 2]),
            &Tensor::zeros(&[8]),
        )
        .unwrap();
        assert_eq!(y.max_abs(), 0.0);
        assert_eq!(st, LstmState::zeros(2));
    }

    #[test]
    fn stepwise_equals_sequence() {
        let (wi, wh, b) = weights(3, 4, 61);
        let mut r = rng::seeded(62, 0);
        let x = Tensor::from_vec(&[3, 9], rng::uniform_vec(&mut r, 27, 1.0)).unwrap();
        let (full, _) = forward(&x, None, &wi, &wh, &b).unwrap();
        let mut st = LstmState::zeros(4);
        for t in 0..9 {
            let col =
                Tensor::from_vec(&[3, 1], (0..3).map(|i| x.data()[i * 9 + t]).collect()).unwrap();
            let (y, s) = forward(&col, Some(&st), &wi, &wh, &b).unwrap();
            st = s;
            for k in 0..4 {
                assert_eq!(y.data()[k], full.data()[k * 9 + t]);
            }
        }
        let (cached, _) = forward_cached(&x, &wi, &wh, &b).unwrap();
        assert_eq!(cached, full);
    }
}
