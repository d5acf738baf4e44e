//! Second stage: an additive correction of the masked spectrum, predicted
//! from the noisy and masked compressed planes.

use super::config::ModelConfig;
use super::layers::Conv1d;
use super::u2lstm::U2Lstm;
use crate::tensor::{Backend, ParamLayout};
use crate::Result;
use alloc::format;
use alloc::vec::Vec;

#[derive(Debug, Clone)]
pub struct Compensation {
    pub net: U2Lstm,
    /// One `k = 1` conv per output plane, over the frequency bins.
    pub plane_convs: Vec<Conv1d>,
}

impl Compensation {
    pub fn new(layout: &mut ParamLayout, name: &str, cfg: &ModelConfig) -> Self {
        let bins = crate::dsp::WindowSpec::default().bins();
        let net = U2Lstm::new(
            layout,
            &format!("{name}.u2"),
            cfg,
            cfg.comp.in_channels,
            cfg.comp.out_channels,
        );
        let plane_convs = (0..cfg.comp.out_channels)
            .map(|p| Conv1d::pointwise(layout, &format!("{name}.plane{p}"), bins, bins))
            .collect();
        Self { net, plane_convs }
    }

    /// Returns the `[6, T, F]` compensation term.
    pub fn forward<B: Backend>(
        &self,
        bk: &mut B,
        noisy: &B::Value,
        masked: &B::Value,
    ) -> Result<B::Value> {
        let x = bk.concat(&[noisy, masked])?;
        let y = self.net.forward(bk, &x)?;
        let mut planes = Vec::with_capacity(self.plane_convs.len());
        for (p, conv) in self.plane_convs.iter().enumerate() {
            let plane = bk.narrow(&y, p, 1)?;
            let plane = bk.flatten_freq(&plane)?;
            planes.push(conv.forward(bk, &plane)?);
        }
        let refs: Vec<&B::Value> = planes.iter().collect();
        let flat = bk.concat(&refs)?;
        bk.unflatten_freq(&flat, self.plane_convs.len())
    }
}
