//! Command reports, rendered as JSON or aligned text.

use fbmstcn_core::model::complexity::ModuleCost;
use fbmstcn_core::stream::LatencyReport;
use fbmstcn_core::train::Phase;
use serde::Serialize;
use std::fmt::Write;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    #[default]
    Text,
    Json,
}

pub trait Report: Serialize {
    fn text(&self) -> String;

    fn render(&self, format: Format) -> String {
        match format {
            Format::Json => serde_json::to_string_pretty(self).expect("report serialises"),
            Format::Text => self.text(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalyzeReport {
    pub total_params: usize,
    pub total_macs_per_second: usize,
    pub algorithmic_latency_ms: f64,
    pub modules: Vec<ModuleCost>,
}

impl Report for AnalyzeReport {
    fn text(&self) -> String {
        let mut s = format!("{:<10} {:>14} {:>18}\n", "module", "params", "MAC/s");
        for m in &self.modules {
            let _ = writeln!(
                s,
                "{:<10} {:>14} {:>18}",
                m.module, m.params, m.macs_per_second
            );
        }
        let _ = writeln!(
            s,
            "{:<10} {:>14} {:>18}",
            "total", self.total_params, self.total_macs_per_second
        );
        let _ = writeln!(
            s,
            "{:.2} M params, {:.2} G MAC/s, algorithmic latency {} ms",
            self.total_params as f64 / 1e6,
            self.total_macs_per_second as f64 / 1e9,
            self.algorithmic_latency_ms
        );
        s
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EnhanceReport {
    pub input: String,
    pub output: String,
    pub streaming: bool,
    pub samples: usize,
    pub duration_s: f64,
    pub wall_ms: f64,
    pub per_frame_ms: f64,
    pub rtf: f64,
    /// Output scored against the unprocessed input.
    pub sdr_vs_input_db: f64,
    pub latency: Option<LatencyReport>,
}

impl Report for EnhanceReport {
    fn text(&self) -> String {
        let mut s = format!(
            "{} -> {} ({} samples, {:.2} s, {})\n",
            self.input,
            self.output,
            self.samples,
            self.duration_s,
            if self.streaming {
                "streaming"
            } else {
                "offline"
            }
        );
        let _ = writeln!(
            s,
            "wall {:.1} ms, {:.3} ms/frame, RTF {:.3}",
            self.wall_ms, self.per_frame_ms, self.rtf
        );
        let _ = writeln!(s, "SDR vs input {:.2} dB", self.sdr_vs_input_db);
        if let Some(l) = &self.latency {
            let _ = writeln!(
                s,
                "algorithmic latency {} ms over {} timed frames",
                l.algorithmic_ms, l.frames
            );
            for (name, ms) in &l.stages {
                let _ = writeln!(s, "  {name:<12} {ms:.4} ms/frame");
            }
        }
        s
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GradRow {
    pub target: &'static str,
    pub seeds: usize,
    pub worst_rel_error: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct GradcheckReport {
    pub seed: u64,
    pub tolerance: f64,
    pub rows: Vec<GradRow>,
    pub passed: bool,
}

impl Report for GradcheckReport {
    fn text(&self) -> String {
        let mut s = format!("{:<14} {:>6} {:>12}  result\n", "layer", "seeds", "worst");
        for r in &self.rows {
            let verdict = if r.passed { "pass" } else { "FAIL" };
            let _ = writeln!(
                s,
                "{:<14} {:>6} {:>12.3e}  {verdict}",
                r.target, r.seeds, r.worst_rel_error
            );
        }
        let _ = writeln!(
            s,
            "tolerance {:e}: {}",
            self.tolerance,
            if self.passed { "all passed" } else { "FAILED" }
        );
        s
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MixReport {
    pub output: String,
    pub requested_snr_db: f64,
    pub measured_snr_db: f64,
    pub peak_gain: f64,
}

impl Report for MixReport {
    fn text(&self) -> String {
        format!(
            "{}: SNR {:.3} dB (requested {:.3} dB), peak gain {:.4}\n",
            self.output, self.measured_snr_db, self.requested_snr_db, self.peak_gain
        )
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SdrReport {
    pub sdr_db: f64,
}

impl Report for SdrReport {
    fn text(&self) -> String {
        format!("SDR {:.3} dB\n", self.sdr_db)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Criterion {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl Criterion {
    pub fn line(&self) -> String {
        format!(
            "criterion {:>2} {:<26} {}  ({:.1} s) {}",
            self.id,
            self.name,
            if self.passed { "PASS" } else { "FAIL" },
            self.seconds,
            self.detail
        )
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SelftestReport {
    pub criteria: Vec<Criterion>,
    pub passed: bool,
}

impl Report for SelftestReport {
    fn text(&self) -> String {
        let mut s: String = self.criteria.iter().map(|c| c.line() + "\n").collect();
        let n = self.criteria.iter().filter(|c| c.passed).count();
        let _ = writeln!(s, "{n}/{} criteria passed", self.criteria.len());
        s
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EpochRow {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub phase: Phase,
    pub lr_stage1: f64,
    pub lr_stage2: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrainReport {
    pub checkpoint: String,
    pub examples: usize,
    pub validation: usize,
    pub epochs: Vec<EpochRow>,
}

impl Report for TrainReport {
    fn text(&self) -> String {
        let mut s = format!(
            "{} training, {} validation examples\n",
            self.examples, self.validation
        );
        for e in &self.epochs {
            let _ = writeln!(
                s,
                "epoch {:>3}  train {:.5e}  val {:.5e}  {:?}  lr {:.2e}/{:.2e}",
                e.epoch, e.train_loss, e.val_loss, e.phase, e.lr_stage1, e.lr_stage2
            );
        }
        let _ = writeln!(s, "saved {}", self.checkpoint);
        s
    }
}
