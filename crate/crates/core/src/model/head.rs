//! Complex ratio mask head and its application in the compressed domain.
//! Plane order everywhere is `[re0, re1, re2, im0, im1, im2]`.

use super::layers::Conv1d;
use crate::error::shape_err;
use crate::tensor::{Backend, ParamLayout, Tensor};
use crate::{Result, NUM_SUBCHANNELS};
use alloc::format;
use alloc::vec::Vec;

#[derive(Debug, Clone)]
pub struct MaskHead {
    pub convs: Vec<Conv1d>,
    pub bins: usize,
}

impl MaskHead {
    pub fn new(
        layout: &mut ParamLayout,
        name: &str,
        features: usize,
        convs: usize,
        kernel: usize,
    ) -> Self {
        let bins = crate::dsp::WindowSpec::default().bins();
        let convs = (0..convs)
            .map(|p| {
                Conv1d::new(
                    layout,
                    &format!("{name}.plane{p}"),
                    crate::tensor::LayerSpec::conv1d(features, bins, kernel, 1),
                )
            })
            .collect();
        Self { convs, bins }
    }

    /// `[D, T]` features -> `[6, T, F]` mask planes in `[-1, 1]`.
    pub fn forward<B: Backend>(&self, bk: &mut B, feats: &B::Value) -> Result<B::Value> {
        let mut planes = Vec::with_capacity(self.convs.len());
        for c in &self.convs {
            let p = c.forward(bk, feats)?;
            planes.push(bk.tanh(&p));
        }
        let refs: Vec<&B::Value> = planes.iter().collect();
        let flat = bk.concat(&refs)?;
        bk.unflatten_freq(&flat, self.convs.len())
    }
}

/// Complex multiply of `[6, T, F]` spectra planes by `[6, T, F]` masks.
pub fn apply_crm<B: Backend>(bk: &mut B, noisy: &B::Value, mask: &B::Value) -> Result<B::Value> {
    let (ns, ms) = (bk.shape(noisy), bk.shape(mask));
    if ns != ms || ns.first() != Some(&(2 * NUM_SUBCHANNELS)) {
        return Err(shape_err!("apply_crm on {ns:?} with mask {ms:?}"));
    }
    let n = NUM_SUBCHANNELS;
    let (yr, yi) = (bk.narrow(noisy, 0, n)?, bk.narrow(noisy, n, n)?);
    let (mr, mi) = (bk.narrow(mask, 0, n)?, bk.narrow(mask, n, n)?);
    let rr = bk.mul(&yr, &mr)?;
    let ii = bk.mul(&yi, &mi)?;
    let ri = bk.mul(&yr, &mi)?;
    let ir = bk.mul(&yi, &mr)?;
    let re = bk.sub(&rr, &ii)?;
    let im = bk.add(&ri, &ir)?;
    bk.concat(&[&re, &im])
}

/// Mask planes split by part.
#[derive(Debug, Clone, PartialEq)]
pub struct CrmMask {
    pub real: Tensor,
    pub imag: Tensor,
    pub bounded: bool,
}

impl CrmMask {
    pub fn from_planes(planes: &Tensor, bounded: bool) -> Result<Self> {
        let n = NUM_SUBCHANNELS;
        if planes.rank() != 3 || planes.dim(0) != 2 * n {
            return Err(shape_err!("mask planes {:?}", planes.shape()));
        }
        Ok(Self {
            real: planes.narrow(0, n)?,
            imag: planes.narrow(n, n)?,
            bounded,
        })
    }

    pub fn planes(&self) -> Result<Tensor> {
        Tensor::concat(&[&self.real, &self.imag])
    }

    /// Complex 1 everywhere.
    pub fn identity(frames: usize, bins: usize) -> Self {
        let n = NUM_SUBCHANNELS;
        Self {
            real: Tensor::full(&[n, frames, bins], 1.0),
            imag: Tensor::zeros(&[n, frames, bins]),
            bounded: true,
        }
    }

    pub fn in_bounds(&self) -> bool {
        self.real
            .data()
            .iter()
            .chain(self.imag.data())
            .all(|v| (-1.0..=1.0).contains(v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use crate::tensor::Runner;

    #[test]
    fn crm_matches_scalar_complex_product() {
        let mut r = rng::seeded(71, 0);
        let n = Tensor::from_vec(&[6, 4, 5], rng::uniform_vec(&mut r, 120, 2.0)).unwrap();
        let m = Tensor::from_vec(&[6, 4, 5], rng::uniform_vec(&mut r, 120, 1.0)).unwrap();
        let store = ParamLayout::new().init(0);
        let out = apply_crm(&mut Runner::new(&store), &n, &m).unwrap();
        let half = 60;
        for k in 0..half {
            let (a, b) = (n.data()[k], n.data()[half + k]);
            let (c, d) = (m.data()[k], m.data()[half + k]);
            assert!((out.data()[k] - (a * c - b * d)).abs() <= 1e-10);
            assert!((out.data()[half + k] - (a * d + b * c)).abs() <= 1e-10);
        }
    }

    #[test]
    fn identity_and_null_masks() {
        let mut r = rng::seeded(72, 0);
        let n = Tensor::from_vec(&[6, 3, 7], rng::uniform_vec(&mut r, 126, 2.0)).unwrap();
        let store = ParamLayout::new().init(0);
        let id = CrmMask::identity(3, 7).planes().unwrap();
        let mut run = Runner::new(&store);
        assert_eq!(apply_crm(&mut run, &n, &id).unwrap(), n);
        let zero = apply_crm(&mut run, &n, &Tensor::zeros(&[6, 3, 7])).unwrap();
        assert_eq!(zero.max_abs(), 0.0);
    }

    #[test]
    fn head_has_six_bounded_planes() {
        let mut layout = ParamLayout::new();
        let head = MaskHead::new(&mut layout, "head", 12, 6, 1);
        let store = layout.init(3);
        let mut r = rng::seeded(73, 0);
        let x = Tensor::from_vec(&[12, 5], rng::uniform_vec(&mut r, 60, 50.0)).unwrap();
        let planes = head.forward(&mut Runner::new(&store), &x).unwrap();
        assert_eq!(planes.shape(), &[6, 5, 161]);
        let mask = CrmMask::from_planes(&planes, true).unwrap();
        assert!(mask.in_bounds());
        let zero = head
            .forward(&mut Runner::new(&store), &Tensor::zeros(&[12, 5]))
            .unwrap();
        assert_eq!(zero.max_abs(), 0.0);
    }
}
