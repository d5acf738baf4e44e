//! Central finite-difference checks of every reverse-mode rule.
//!
//! Each layer is evaluated on a small random instance under a random
//! linear read-out `L = <r, y>`; the tape gradient of `L` is compared with
//! `(L(p + h) - L(p - h)) / 2h` for every parameter and input element.

use crate::dsp::{ComplexSpectrum, Domain};
use crate::model::layers::{Conv1d, GatedConv2d, GatedDeconv2d, InstanceNorm, LstmStack, Prelu};
use crate::model::{Model, ModelConfig};
use crate::tensor::kernels::deconv2d;
use crate::tensor::{
    Backend, LayerSpec, NodeId, ParamId, ParamKind, ParamLayout, ParamStore, Tape, Tensor,
};
use crate::train::{cmse_loss, LossConfig};
use crate::{math, rng, Result};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use rand::Rng;

/// Finite-difference step.
pub const STEP: f64 = 1e-5;
/// Largest accepted relative error.
pub const TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    Conv1d,
    Pointwise,
    GConv2d,
    GDeconv2d,
    InstanceNorm,
    Lstm,
    Prelu,
    Loss,
    /// Whole two-stage network, on sampled elements.
    Model,
}

impl Target {
    pub const LAYERS: [Target; 7] = [
        Target::Conv1d,
        Target::Pointwise,
        Target::GConv2d,
        Target::GDeconv2d,
        Target::InstanceNorm,
        Target::Lstm,
        Target::Prelu,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Target::Conv1d => "conv1d",
            Target::Pointwise => "pointwise",
            Target::GConv2d => "gconv2d",
            Target::GDeconv2d => "gdeconv2d",
            Target::InstanceNorm => "instance_norm",
            Target::Lstm => "lstm",
            Target::Prelu => "prelu",
            Target::Loss => "cmse_loss",
            Target::Model => "model",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub target: Target,
    pub seed: u64,
    /// Relative error per checked tensor.
    pub tensors: Vec<(String, f64)>,
}

impl CheckResult {
    pub fn worst(&self) -> f64 {
        self.tensors.iter().map(|t| t.1).fold(0.0, f64::max)
    }

    pub fn passed(&self) -> bool {
        !self.tensors.is_empty() && self.worst() <= TOLERANCE
    }
}

/// `|a - n| / max(|a|, |n|, 1e-12)` in the Euclidean norm.
pub fn rel_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    let norm = |v: &mut dyn Iterator<Item = f64>| math::sqrt(v.map(|x| x * x).sum());
    let diff = norm(&mut analytic.iter().zip(numeric).map(|(a, b)| a - b));
    let scale = norm(&mut analytic.iter().copied())
        .max(norm(&mut numeric.iter().copied()))
        .max(1e-12);
    diff / scale
}

type Forward<'f> = dyn for<'a> Fn(&mut Tape<'a>, &[NodeId]) -> Result<NodeId> + 'f;

struct Problem<'f> {
    store: ParamStore,
    inputs: Vec<Tensor>,
    forward: &'f Forward<'f>,
}

impl Problem<'_> {
    fn eval(&self, store: &ParamStore, inputs: &[Tensor], r: &Tensor) -> Result<f64> {
        let mut tape = Tape::new(store);
        let ids: Vec<NodeId> = inputs.iter().map(|t| tape.input(t.clone())).collect();
        let y = (self.forward)(&mut tape, &ids)?;
        Ok(tape.get(y).dot(r))
    }

    /// Checks every element, or `sample` random elements per tensor.
    fn run(&self, seed: u64, sample: Option<usize>) -> Result<Vec<(String, f64)>> {
        let mut tape = Tape::new(&self.store);
        let ids: Vec<NodeId> = self.inputs.iter().map(|t| tape.input(t.clone())).collect();
        let y = (self.forward)(&mut tape, &ids)?;
        let mut rr = rng::seeded(seed, 1 << 32);
        let r = Tensor::from_vec(
            tape.get(y).shape(),
            rng::uniform_vec(&mut rr, tape.get(y).len(), 1.0),
        )?;
        let grads = tape.backward(y, r.clone())?;

        let mut picks = |n: usize| -> Vec<usize> {
            match sample {
                Some(k) if k < n => (0..k).map(|_| rr.gen_range(0..n)).collect(),
                _ => (0..n).collect(),
            }
        };
        let mut out = Vec::new();
        let mut all_a = Vec::new();
        let mut all_n = Vec::new();
        for id in self.store.ids() {
            let e = self.store.entry(id);
            if e.kind != ParamKind::Trainable {
                continue;
            }
            let zeros = Tensor::zeros(e.tensor.shape());
            let g = grads.param(id).unwrap_or(&zeros);
            let (mut a, mut n) = (Vec::new(), Vec::new());
            for k in picks(e.tensor.len()) {
                let mut s = self.store.clone();
                let base = s.get(id).data()[k];
                s.get_mut(id).data_mut()[k] = base + STEP;
                let up = self.eval(&s, &self.inputs, &r)?;
                s.get_mut(id).data_mut()[k] = base - STEP;
                let down = self.eval(&s, &self.inputs, &r)?;
                a.push(g.data()[k]);
                n.push((up - down) / (2.0 * STEP));
            }
            if sample.is_some() {
                all_a.extend(a);
                all_n.extend(n);
            } else {
                out.push((e.name.clone(), rel_error(&a, &n)));
            }
        }
        for (i, x) in self.inputs.iter().enumerate() {
            let zeros = Tensor::zeros(x.shape());
            let g = grads.input(ids[i]).unwrap_or(&zeros);
            let (mut a, mut n) = (Vec::new(), Vec::new());
            for k in picks(x.len()) {
                let mut inp = self.inputs.clone();
                let base = inp[i].data()[k];
                inp[i].data_mut()[k] = base + STEP;
                let up = self.eval(&self.store, &inp, &r)?;
                inp[i].data_mut()[k] = base - STEP;
                let down = self.eval(&self.store, &inp, &r)?;
                a.push(g.data()[k]);
                n.push((up - down) / (2.0 * STEP));
            }
            if sample.is_some() {
                all_a.extend(a);
                all_n.extend(n);
            } else {
                out.push((alloc::format!("input{i}"), rel_error(&a, &n)));
            }
        }
        if sample.is_some() {
            out.push(("sampled".to_string(), rel_error(&all_a, &all_n)));
        }
        Ok(out)
    }
}

/// Fresh random values for every trainable tensor (biases included).
fn randomize(layout: &ParamLayout, seed: u64, amp: f64) -> ParamStore {
    let mut store = layout.init(seed);
    let mut r = rng::seeded(seed, 7);
    for id in store.ids().collect::<Vec<_>>() {
        if store.entry(id).kind == ParamKind::Trainable {
            for v in store.get_mut(id).data_mut() {
                *v = r.gen_range(-amp..amp);
            }
        }
    }
    store
}

fn rand_tensor(r: &mut rng::SeededRng, shape: &[usize], amp: f64) -> Tensor {
    let n = shape.iter().product();
    Tensor::from_vec(shape, rng::uniform_vec(r, n, amp)).expect("shape")
}

/// Random values bounded away from zero (PReLU kink).
fn rand_away_from_zero(r: &mut rng::SeededRng, shape: &[usize]) -> Tensor {
    let n = shape.iter().product();
    let data = (0..n)
        .map(|_| {
            let m: f64 = r.gen_range(0.1..1.0);
            if r.gen_bool(0.5) {
                m
            } else {
                -m
            }
        })
        .collect();
    Tensor::from_vec(shape, data).expect("shape")
}

fn loss_check(seed: u64) -> Result<Vec<(String, f64)>> {
    let mut r = rng::seeded(seed, 0);
    let (t, f) = (r.gen_range(2..4), r.gen_range(3..6));
    let cfg = LossConfig::default();
    let spec = |r: &mut rng::SeededRng| -> Result<ComplexSpectrum> {
        let n = t * f;
        let (mut re, mut im) = (Vec::with_capacity(n), Vec::with_capacity(n));
        for _ in 0..n {
            let m: f64 = r.gen_range(0.05..1.5);
            let a: f64 = r.gen_range(-core::f64::consts::PI..core::f64::consts::PI);
            re.push(m * math::cos(a));
            im.push(m * math::sin(a));
        }
        ComplexSpectrum::from_parts(t, f, re, im, Domain::Linear)
    };
    let est: Vec<_> = (0..3).map(|_| spec(&mut r)).collect::<Result<_>>()?;
    let target: Vec<_> = (0..3).map(|_| spec(&mut r)).collect::<Result<_>>()?;
    let analytic = cmse_loss(&est, &target, &cfg)?;
    let (mut a, mut n) = (Vec::new(), Vec::new());
    for j in 0..3 {
        for part in 0..2 {
            for k in 0..t * f {
                let perturbed = |d: f64| -> Result<f64> {
                    let mut e = est.clone();
                    let v = if part == 0 {
                        &mut e[j].real[k]
                    } else {
                        &mut e[j].imag[k]
                    };
                    *v += d;
                    Ok(cmse_loss(&e, &target, &cfg)?.loss)
                };
                let (up, down) = (perturbed(STEP)?, perturbed(-STEP)?);
                let g = &analytic.grads[j];
                a.push(if part == 0 { g.0[k] } else { g.1[k] });
                n.push((up - down) / (2.0 * STEP));
            }
        }
    }
    Ok(alloc::vec![("est".to_string(), rel_error(&a, &n))])
}

/// Run one check.
pub fn check(target: Target, seed: u64) -> Result<CheckResult> {
    let mut r = rng::seeded(seed, 0);
    let mut layout = ParamLayout::new();
    let tensors = match target {
        Target::Loss => loss_check(seed)?,
        Target::Conv1d | Target::Pointwise => {
            let (ci, co, t) = (r.gen_range(1..4), r.gen_range(1..4), r.gen_range(4..9));
            let spec = if target == Target::Pointwise {
                LayerSpec::pointwise(ci, co)
            } else {
                LayerSpec::conv1d(ci, co, r.gen_range(2..4), r.gen_range(1..4))
            };
            let layer = Conv1d::new(&mut layout, "layer", spec);
            let f = move |tp: &mut Tape<'_>, x: &[NodeId]| layer.forward(tp, &x[0]);
            Problem {
                store: randomize(&layout, seed, 1.0),
                inputs: alloc::vec![rand_tensor(&mut r, &[ci, t], 1.0)],
                forward: &f,
            }
            .run(seed, None)?
        }
        Target::GConv2d => {
            let (ci, co, t, fi) = (
                r.gen_range(1..3),
                r.gen_range(1..3),
                r.gen_range(2..5),
                r.gen_range(6..10),
            );
            let layer =
                GatedConv2d::new(&mut layout, "layer", LayerSpec::gconv2d(ci, co, (2, 3), 2));
            let f = move |tp: &mut Tape<'_>, x: &[NodeId]| layer.forward(tp, &x[0]);
            Problem {
                store: randomize(&layout, seed, 1.0),
                inputs: alloc::vec![rand_tensor(&mut r, &[ci, t, fi], 1.0)],
                forward: &f,
            }
            .run(seed, None)?
        }
        Target::GDeconv2d => {
            let (ci, co, t, fi) = (
                r.gen_range(1..3),
                r.gen_range(1..3),
                r.gen_range(2..5),
                r.gen_range(3..6),
            );
            let kernel = (2, 3);
            let out_f = deconv2d::natural_freq(fi, kernel.1, 2) + r.gen_range(0..3) - 1;
            let layer = GatedDeconv2d::new(
                &mut layout,
                "layer",
                LayerSpec::gdeconv2d(ci, co, kernel, 2),
            );
            let f = move |tp: &mut Tape<'_>, x: &[NodeId]| layer.forward(tp, &x[0], out_f);
            Problem {
                store: randomize(&layout, seed, 1.0),
                inputs: alloc::vec![rand_tensor(&mut r, &[ci, t, fi], 1.0)],
                forward: &f,
            }
            .run(seed, None)?
        }
        Target::InstanceNorm => {
            let (c, t, fi) = (r.gen_range(1..4), r.gen_range(2..5), r.gen_range(2..6));
            let layer = InstanceNorm::new(&mut layout, "layer", c);
            let f = move |tp: &mut Tape<'_>, x: &[NodeId]| layer.forward(tp, &x[0]);
            Problem {
                store: randomize(&layout, seed, 1.0),
                inputs: alloc::vec![rand_tensor(&mut r, &[c, t, fi], 2.0)],
                forward: &f,
            }
            .run(seed, None)?
        }
        Target::Lstm => {
            let (d, h, t) = (r.gen_range(1..4), r.gen_range(1..4), r.gen_range(2..6));
            let layer = LstmStack::new(&mut layout, "layer", d, h, 2);
            let f = move |tp: &mut Tape<'_>, x: &[NodeId]| layer.forward(tp, &x[0]);
            Problem {
                store: randomize(&layout, seed, 1.0),
                inputs: alloc::vec![rand_tensor(&mut r, &[d, t], 1.0)],
                forward: &f,
            }
            .run(seed, None)?
        }
        Target::Prelu => {
            let (c, t) = (r.gen_range(1..4), r.gen_range(2..6));
            let layer = Prelu::new(&mut layout, "layer", c);
            let f = move |tp: &mut Tape<'_>, x: &[NodeId]| layer.forward(tp, &x[0]);
            Problem {
                store: randomize(&layout, seed, 1.0),
                inputs: alloc::vec![rand_away_from_zero(&mut r, &[c, t])],
                forward: &f,
            }
            .run(seed, None)?
        }
        Target::Model => {
            let model = Model::new(ModelConfig::tiny())?;
            let t = r.gen_range(2..4);
            let bins = crate::dsp::WindowSpec::default().bins();
            let cri = rand_tensor(&mut r, &[6, t, bins], 1.0);
            let feats = crate::model::Features::from_planes(cri)?;
            let f =
                |tp: &mut Tape<'_>, x: &[NodeId]| Ok(model.spectral(tp, &x[0], &x[1])?.enhanced);
            Problem {
                store: randomize(model.layout(), seed, 0.5),
                inputs: alloc::vec![feats.mag, feats.cri],
                forward: &f,
            }
            .run(seed, Some(2))?
        }
    };
    Ok(CheckResult {
        target,
        seed,
        tensors,
    })
}

/// Parameter id lookup helper for callers that build their own problems.
pub fn trainable_ids(store: &ParamStore) -> Vec<ParamId> {
    store
        .ids()
        .filter(|&id| store.entry(id).kind == ParamKind::Trainable)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_layer_passes_a_few_seeds() {
        for t in Target::LAYERS.into_iter().chain([Target::Loss]) {
            for seed in 0..3 {
                let r = check(t, seed).unwrap();
                assert!(r.passed(), "{} seed {seed}: {:?}", t.name(), r.tensors);
            }
        }
    }

    #[test]
    fn rel_error_metric() {
        assert_eq!(rel_error(&[1.0, 2.0], &[1.0, 2.0]), 0.0);
        assert!((rel_error(&[1.0, 0.0], &[0.0, 0.0]) - 1.0).abs() < 1e-15);
        assert_eq!(rel_error(&[0.0], &[0.0]), 0.0);
    }
}
