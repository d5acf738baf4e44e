//! Closed-form parameter and multiply-accumulate accounting.
//!
//! MACs cover weight multiplies of convolutions and LSTMs only. Transposed
//! convolutions are charged per output element.

use super::config::ModelConfig;
use crate::dsp::WindowSpec;
use crate::NUM_SUBCHANNELS;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

/// Frames per second at a 10 ms hop.
pub const FRAMES_PER_SECOND: usize = 100;
/// Analysis window plus one hop of overlap-add.
pub const ALGORITHMIC_LATENCY_MS: f64 = 30.0;

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct LayerCost {
    pub module: &'static str,
    pub name: String,
    pub params: usize,
    pub macs_per_frame: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ModuleCost {
    pub module: &'static str,
    pub params: usize,
    pub macs_per_second: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexityReport {
    pub layers: Vec<LayerCost>,
}

impl ComplexityReport {
    pub fn total_params(&self) -> usize {
        self.layers.iter().map(|l| l.params).sum()
    }

    pub fn total_macs_per_second(&self) -> usize {
        self.layers.iter().map(|l| l.macs_per_frame).sum::<usize>() * FRAMES_PER_SECOND
    }

    pub fn algorithmic_latency_ms(&self) -> f64 {
        ALGORITHMIC_LATENCY_MS
    }

    /// Totals per module, in first-appearance order.
    pub fn modules(&self) -> Vec<ModuleCost> {
        let mut out: Vec<ModuleCost> = Vec::new();
        for l in &self.layers {
            let m = match out.iter_mut().find(|m| m.module == l.module) {
                Some(m) => m,
                None => {
                    out.push(ModuleCost {
                        module: l.module,
                        params: 0,
                        macs_per_second: 0,
                    });
                    out.last_mut().expect("just pushed")
                }
            };
            m.params += l.params;
            m.macs_per_second += l.macs_per_frame * FRAMES_PER_SECOND;
        }
        out
    }
}

struct Acc {
    module: &'static str,
    layers: Vec<LayerCost>,
}

impl Acc {
    fn push(&mut self, name: String, params: usize, macs: usize) {
        self.layers.push(LayerCost {
            module: self.module,
            name,
            params,
            macs_per_frame: macs,
        });
    }

    /// Dense 1-D conv, `k` taps.
    fn conv1d(&mut self, name: String, ci: usize, co: usize, k: usize) {
        self.push(name, co * ci * k + co, co * ci * k);
    }

    fn prelu(&mut self, name: String, c: usize) {
        self.push(name, c, 0);
    }

    fn norm(&mut self, name: String, c: usize) {
        self.push(name, 2 * c, 0);
    }
}

fn u2lstm(acc: &mut Acc, cfg: &ModelConfig, prefix: &str, ci: usize, co: usize) {
    let u = &cfg.u2lstm;
    let ch = u.channels;
    let freqs = cfg.encoder_freqs();
    let kernel = |l: usize| {
        if l == 0 {
            u.first_kernel
        } else {
            u.other_kernel
        }
    };
    for l in 0..u.enc_layers {
        let (kt, kf) = kernel(l);
        let cin = if l == 0 { ci } else { ch };
        let w = ch * cin * kt * kf;
        acc.push(
            format!("{prefix}.enc{l}"),
            2 * (w + ch),
            2 * w * freqs[l + 1],
        );
        acc.norm(format!("{prefix}.enc{l}.norm"), ch);
        acc.prelu(format!("{prefix}.enc{l}.act"), ch);
    }
    let width = ch * freqs[u.enc_layers];
    for l in 0..u.lstm_layers {
        let per = 4 * width * (width + width);
        acc.push(format!("{prefix}.lstm.{l}"), per + 4 * width, per);
    }
    for l in (0..u.enc_layers).rev() {
        let (kt, kf) = kernel(l);
        let w = 2 * ch * ch * kt * kf;
        acc.push(format!("{prefix}.dec{l}"), 2 * (w + ch), 2 * w * freqs[l]);
        acc.norm(format!("{prefix}.dec{l}.norm"), ch);
        acc.prelu(format!("{prefix}.dec{l}.act"), ch);
    }
    acc.push(format!("{prefix}.head"), ch * co + co, ch * co * freqs[0]);
}

/// Per-layer cost table of `cfg`.
pub fn analyze(cfg: &ModelConfig) -> ComplexityReport {
    let bins = WindowSpec::default().bins();
    let mut acc = Acc {
        module: "gtcm",
        layers: Vec::new(),
    };
    let g = &cfg.gtcm;
    acc.conv1d("gtcm.proj".into(), NUM_SUBCHANNELS * bins, g.channels, 1);
    for grp in 0..g.groups {
        for i in 0..g.dilations.len() {
            let n = format!("gtcm.g{grp}.b{i}");
            acc.conv1d(format!("{n}.in"), g.channels, g.hidden, 1);
            acc.prelu(format!("{n}.act"), g.hidden);
            acc.conv1d(format!("{n}.conv"), g.hidden, g.hidden, g.kernel);
            acc.conv1d(format!("{n}.gate"), g.hidden, g.hidden, g.kernel);
            acc.conv1d(format!("{n}.out"), g.hidden, g.channels, 1);
        }
    }

    acc.module = "embed";
    u2lstm(
        &mut acc,
        cfg,
        "embed",
        2 * NUM_SUBCHANNELS,
        cfg.u2lstm.out_channels,
    );

    acc.module = "mstcn";
    let m = &cfg.mstcn;
    let d = m.band_dim;
    let ranges = cfg.band_ranges();
    for (b, &(_, len)) in ranges.iter().enumerate() {
        acc.conv1d(
            format!("mstcn.proj{b}"),
            cfg.u2lstm.out_channels * len,
            d,
            1,
        );
    }
    for b in 0..ranges.len() {
        acc.conv1d(format!("mstcn.fuse{b}"), g.channels + d, d, 1);
    }
    for grp in 0..m.groups {
        for i in 0..m.dilations.len() {
            for b in 0..ranges.len() {
                let n = format!("mstcn.g{grp}.b{i}.band{b}");
                let ci = if b == 0 { d } else { 2 * d };
                acc.conv1d(format!("{n}.conv"), ci, m.hidden, m.kernel);
                acc.prelu(format!("{n}.act"), m.hidden);
                acc.conv1d(format!("{n}.out"), m.hidden, d, 1);
            }
        }
    }

    acc.module = "mask_head";
    for p in 0..cfg.mask_head.convs {
        acc.conv1d(
            format!("head.plane{p}"),
            d * ranges.len(),
            bins,
            cfg.mask_head.kernel,
        );
    }

    if cfg.comp.enabled {
        acc.module = "comp";
        u2lstm(
            &mut acc,
            cfg,
            "comp.u2",
            cfg.comp.in_channels,
            cfg.comp.out_channels,
        );
        for p in 0..cfg.comp.out_channels {
            acc.conv1d(format!("comp.plane{p}"), bins, bins, 1);
        }
    }
    ComplexityReport { layers: acc.layers }
}

pub fn count_params(cfg: &ModelConfig) -> usize {
    analyze(cfg).total_params()
}

pub fn count_macs_per_second(cfg: &ModelConfig) -> usize {
    analyze(cfg).total_macs_per_second()
}
