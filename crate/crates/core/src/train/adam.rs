//! Bias-corrected Adam with per-parameter step counts, so parameters that
//! join training late (after a freeze) start their correction afresh.

use crate::tensor::{Gradients, ParamId, ParamKind, ParamStore};
use alloc::collections::BTreeMap;
use alloc::vec::Vec;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Debug, Clone)]
struct Moments {
    t: i32,
    m: Vec<f64>,
    v: Vec<f64>,
}

#[derive(Debug, Clone, Default)]
pub struct Adam {
    cfg: AdamConfig,
    state: BTreeMap<ParamId, Moments>,
}

impl Adam {
    pub fn new(cfg: AdamConfig) -> Self {
        Self {
            cfg,
            state: BTreeMap::new(),
        }
    }

    /// Update every trainable parameter that has a gradient, with the rate
    /// `lr(id)`; a rate of 0 leaves the parameter and its moments untouched.
    pub fn step(&mut self, store: &mut ParamStore, grads: &Gradients, lr: impl Fn(ParamId) -> f64) {
        let AdamConfig { beta1, beta2, eps } = self.cfg;
        for (id, g) in grads.params() {
            let rate = lr(id);
            if rate == 0.0 || store.entry(id).kind != ParamKind::Trainable {
                continue;
            }
            let n = g.len();
            let st = self.state.entry(id).or_insert_with(|| Moments {
                t: 0,
                m: alloc::vec![0.0; n],
                v: alloc::vec![0.0; n],
            });
            st.t += 1;
            let c1 = 1.0 - libm::pow(beta1, st.t as f64);
            let c2 = 1.0 - libm::pow(beta2, st.t as f64);
            let p = store.get_mut(id).data_mut();
            for (((pk, &gk), m), v) in p.iter_mut().zip(g.data()).zip(&mut st.m).zip(&mut st.v) {
                *m = beta1 * *m + (1.0 - beta1) * gk;
                *v = beta2 * *v + (1.0 - beta2) * gk * gk;
                *pk -= rate * (*m / c1) / (crate::math::sqrt(*v / c2) + eps);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{Backend, Init, ParamLayout, Tape, Tensor};

    /// Gradient of `(p - 1)^2` routed through a tape: a PReLU with slope
    /// `p` on input -1 outputs `-p`, so the seed is `-2 (p - 1)`.
    fn quad_grads(store: &ParamStore, id: ParamId) -> Gradients {
        let p = store.get(id).data()[0];
        let mut tape = Tape::new(store);
        let neg = tape.input(Tensor::full(&[1, 1], -1.0));
        let y = tape.prelu(&neg, id).unwrap();
        tape.backward(y, Tensor::full(&[1, 1], -2.0 * (p - 1.0)))
            .unwrap()
    }

    #[test]
    fn converges_on_scalar_quadratic() {
        let mut layout = ParamLayout::new();
        let id = layout.add("p", &[1], Init::Const(0.0));
        let mut store = layout.init(0);
        let mut adam = Adam::new(AdamConfig::default());
        for _ in 0..500 {
            let g = quad_grads(&store, id);
            adam.step(&mut store, &g, |_| 0.01);
        }
        let p = store.get(id).data()[0];
        assert!((p - 1.0).abs() < 1e-3, "p = {p}");
    }

    #[test]
    fn zero_grads_leave_params() {
        let mut layout = ParamLayout::new();
        let id = layout.add("p", &[1], Init::Const(1.0));
        let mut store = layout.init(0);
        let before = store.clone();
        let mut adam = Adam::new(AdamConfig::default());
        for _ in 0..5 {
            let g = quad_grads(&store, id);
            adam.step(&mut store, &g, |_| 0.1);
        }
        assert_eq!(store, before);
    }
}
