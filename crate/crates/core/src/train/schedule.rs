//! Three-phase learning-rate machine: stage 1 alone, then stage 2 with
//! stage 1 frozen, then both. Every phase halves its rate(s) after
//! `patience` epochs without a new best validation loss, and moves on
//! once its rate has fallen to `handoff_lr`.

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Phase {
    Stage1Only,
    Stage2Frozen1,
    Joint,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ScheduleConfig {
    pub initial_lr: f64,
    pub handoff_lr: f64,
    pub patience: usize,
    pub factor: f64,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        Self {
            initial_lr: 0.001,
            handoff_lr: 0.0005,
            patience: 3,
            factor: 0.5,
        }
    }
}

/// What a tick did, besides bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transition {
    None,
    Halved,
    Entered(Phase),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleState {
    pub cfg: ScheduleConfig,
    pub phase: Phase,
    pub lr_stage1: f64,
    pub lr_stage2: f64,
    pub plateau_counter: usize,
    pub best: f64,
    pub epoch: usize,
}

impl ScheduleState {
    pub fn new(cfg: ScheduleConfig) -> Self {
        Self {
            cfg,
            phase: Phase::Stage1Only,
            lr_stage1: cfg.initial_lr,
            lr_stage2: cfg.initial_lr,
            plateau_counter: 0,
            best: f64::INFINITY,
            epoch: 0,
        }
    }

    /// Rates actually applied to `(stage 1, stage 2)` in the current phase.
    pub fn effective_lrs(&self) -> (f64, f64) {
        match self.phase {
            Phase::Stage1Only => (self.lr_stage1, 0.0),
            Phase::Stage2Frozen1 => (0.0, self.lr_stage2),
            Phase::Joint => (self.lr_stage1, self.lr_stage2),
        }
    }

    /// Record one epoch's validation loss.
    pub fn tick(&mut self, val_loss: f64) -> Transition {
        self.epoch += 1;
        if val_loss < self.best {
            self.best = val_loss;
            self.plateau_counter = 0;
            return Transition::None;
        }
        self.plateau_counter += 1;
        if self.plateau_counter < self.cfg.patience {
            return Transition::None;
        }
        self.plateau_counter = 0;
        let f = self.cfg.factor;
        match self.phase {
            Phase::Stage1Only => self.lr_stage1 *= f,
            Phase::Stage2Frozen1 => self.lr_stage2 *= f,
            Phase::Joint => {
                self.lr_stage1 *= f;
                self.lr_stage2 *= f;
            }
        }
        let next = match self.phase {
            Phase::Stage1Only if self.lr_stage1 <= self.cfg.handoff_lr => {
                Some(Phase::Stage2Frozen1)
            }
            Phase::Stage2Frozen1 if self.lr_stage2 <= self.cfg.handoff_lr => Some(Phase::Joint),
            _ => None,
        };
        match next {
            Some(p) => {
                self.phase = p;
                self.best = f64::INFINITY;
                Transition::Entered(p)
            }
            None => Transition::Halved,
        }
    }
}

impl Default for ScheduleState {
    fn default() -> Self {
        Self::new(ScheduleConfig::default())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn improving_losses_change_nothing() {
        let mut s = ScheduleState::default();
        for k in 0..20 {
            assert_eq!(s.tick(1.0 - k as f64 * 0.01), Transition::None);
        }
        assert_eq!(s.phase, Phase::Stage1Only);
        assert_eq!(s.lr_stage1, 0.001);
    }

    #[test]
    fn three_flat_epochs_halve_then_hand_off() {
        let mut s = ScheduleState::default();
        assert_eq!(s.tick(1.0), Transition::None);
        assert_eq!(s.tick(1.0), Transition::None);
        assert_eq!(s.tick(1.0), Transition::None);
        assert_eq!(s.tick(1.0), Transition::Entered(Phase::Stage2Frozen1));
        assert_eq!(s.lr_stage1, 0.0005);
        assert_eq!(s.effective_lrs(), (0.0, 0.001));
    }
}
