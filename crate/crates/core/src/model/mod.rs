//! The two-stage masking + compensation network and the audio pipeline
//! around it.

pub mod compensation;
pub mod complexity;
mod config;
pub mod gtcm;
pub mod head;
pub mod layers;
pub mod mstcn;
mod pipeline;
pub mod u2lstm;

pub use complexity::{count_macs_per_second, count_params, ComplexityReport, LayerCost};
pub use config::{CompConfig, GtcmConfig, MaskHeadConfig, ModelConfig, MstcnConfig, U2LstmConfig};
pub use head::{apply_crm, CrmMask};
pub use pipeline::{
    features, planes_to_spectra, spectra_to_planes, synthesize, Enhancement, Features, StageOutput,
};

use crate::tensor::{Backend, ParamLayout, ParamStore, Tensor};
use crate::{Result, NUM_SUBCHANNELS};
use compensation::Compensation;
use gtcm::Gtcm;
use head::MaskHead;
use mstcn::{BandProbe, Mstcn};
use u2lstm::U2Lstm;

/// Parameter-name prefix of the masking stage.
pub const STAGE1: &str = "stage1.";
/// Parameter-name prefix of the compensation stage.
pub const STAGE2: &str = "stage2.";

/// Every intermediate produced by one pass of the spectral network.
#[derive(Debug, Clone)]
pub struct StageValues<V> {
    pub fixed: V,
    pub dynamic: V,
    pub mask: V,
    pub masked: V,
    pub compensation: Option<V>,
    pub enhanced: V,
}

#[derive(Debug, Clone)]
pub struct Model {
    cfg: ModelConfig,
    layout: ParamLayout,
    pub gtcm: Gtcm,
    pub embed: U2Lstm,
    pub mstcn: Mstcn,
    pub head: MaskHead,
    pub comp: Option<Compensation>,
}

impl Model {
    pub fn new(cfg: ModelConfig) -> Result<Self> {
        cfg.validate()?;
        let mut layout = ParamLayout::new();
        let n = 2 * NUM_SUBCHANNELS;
        let gtcm = Gtcm::new(&mut layout, "stage1.gtcm", &cfg);
        let embed = U2Lstm::new(
            &mut layout,
            "stage1.embed",
            &cfg,
            n,
            cfg.u2lstm.out_channels,
        );
        let mstcn = Mstcn::new(
            &mut layout,
            "stage1.mstcn",
            &cfg,
            cfg.gtcm.channels,
            cfg.u2lstm.out_channels,
        );
        let head = MaskHead::new(
            &mut layout,
            "stage1.head",
            mstcn.out_dim(),
            cfg.mask_head.convs,
            cfg.mask_head.kernel,
        );
        let comp = cfg
            .comp
            .enabled
            .then(|| Compensation::new(&mut layout, "stage2.comp", &cfg));
        Ok(Self {
            cfg,
            layout,
            gtcm,
            embed,
            mstcn,
            head,
            comp,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.cfg
    }

    pub fn layout(&self) -> &ParamLayout {
        &self.layout
    }

    pub fn init_params(&self, seed: u64) -> ParamStore {
        self.layout.init(seed)
    }

    pub fn two_stage(&self) -> bool {
        self.comp.is_some()
    }

    /// `mag [3, T, F]`, `cri [6, T, F]` (compressed planes).
    pub fn spectral<B: Backend>(
        &self,
        bk: &mut B,
        mag: &B::Value,
        cri: &B::Value,
    ) -> Result<StageValues<B::Value>> {
        self.spectral_probe(bk, mag, cri, BandProbe::default())
    }

    pub fn spectral_probe<B: Backend>(
        &self,
        bk: &mut B,
        mag: &B::Value,
        cri: &B::Value,
        probe: BandProbe,
    ) -> Result<StageValues<B::Value>> {
        let fixed = self.gtcm.forward(bk, mag)?;
        let dynamic = self.embed.forward(bk, cri)?;
        let feats = self.mstcn.forward_probe(bk, &fixed, &dynamic, probe)?;
        let mask = self.head.forward(bk, &feats)?;
        let masked = apply_crm(bk, cri, &mask)?;
        let (compensation, enhanced) = match &self.comp {
            Some(c) => {
                let comp = c.forward(bk, cri, &masked)?;
                let enhanced = bk.add(&masked, &comp)?;
                (Some(comp), enhanced)
            }
            None => (None, masked.clone()),
        };
        Ok(StageValues {
            fixed,
            dynamic,
            mask,
            masked,
            compensation,
            enhanced,
        })
    }

    /// Every layer with temporal memory: `(weight id, frames of history)`.
    pub fn temporal_layers(&self) -> alloc::vec::Vec<(crate::tensor::ParamId, usize)> {
        let mut out = alloc::vec::Vec::new();
        let mut conv = |c: &layers::Conv1d| {
            let h = c.spec.history();
            if h > 0 {
                out.push((c.w, h));
            }
        };
        for b in &self.gtcm.blocks {
            conv(&b.conv);
            conv(&b.gate);
        }
        for blk in &self.mstcn.blocks {
            for band in &blk.bands {
                conv(&band.conv);
            }
        }
        for c in &self.head.convs {
            conv(c);
        }
        let mut u2 = |u: &U2Lstm| {
            for l in &u.encoder {
                let h = l.conv.spec.history();
                out.extend(
                    l.conv
                        .weight_ids()
                        .into_iter()
                        .filter(|_| h > 0)
                        .map(|w| (w, h)),
                );
            }
            for l in &u.decoder {
                let h = l.conv.spec.history();
                out.extend(
                    l.conv
                        .weight_ids()
                        .into_iter()
                        .filter(|_| h > 0)
                        .map(|w| (w, h)),
                );
            }
        };
        u2(&self.embed);
        if let Some(c) = &self.comp {
            u2(&c.net);
        }
        out
    }

    /// Recurrent layers, keyed by input weight id.
    pub fn recurrent_layers(&self) -> alloc::vec::Vec<crate::tensor::ParamId> {
        let mut out: alloc::vec::Vec<_> = self.embed.lstm.layers.iter().map(|l| l.w_ih).collect();
        if let Some(c) = &self.comp {
            out.extend(c.net.lstm.layers.iter().map(|l| l.w_ih));
        }
        out
    }

    /// Convenience: the enhanced compressed planes for already computed
    /// features, evaluated with a fresh runner.
    pub fn enhance_planes(&self, store: &ParamStore, feats: &Features) -> Result<Tensor> {
        let mut run = crate::tensor::Runner::new(store);
        Ok(self.spectral(&mut run, &feats.mag, &feats.cri)?.enhanced)
    }
}
