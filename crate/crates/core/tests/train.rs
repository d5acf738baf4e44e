use fbmstcn_core::model::ModelConfig;
use fbmstcn_core::train::{overfit_pair, Phase, ScheduleConfig, ScheduleState, Transition};

#[test]
fn tiny_model_overfits_one_pair() {
    let cfg = ModelConfig::tiny().single_stage();
    let report = overfit_pair(cfg, 0, 2.0, 300, 0.01).unwrap();
    assert!(report.params <= 50_000, "{} params", report.params);
    eprintln!(
        "loss {:.4e} -> {:.4e} ({:.1}%)",
        report.initial(),
        report.final_loss(),
        100.0 * report.reduction()
    );
    assert!(report.reduction() >= 0.9);
}

/// Plateau of length `n` at the current best.
fn flat(s: &mut ScheduleState, n: usize) -> Vec<Transition> {
    let v = s.best;
    (0..n).map(|_| s.tick(v)).collect()
}

#[test]
fn scripted_schedule_trace() {
    let mut s = ScheduleState::new(ScheduleConfig::default());
    assert_eq!(s.effective_lrs(), (0.001, 0.0));

    // improving: nothing changes
    for v in [1.0, 0.9, 0.8] {
        assert_eq!(s.tick(v), Transition::None);
    }
    assert_eq!((s.phase, s.lr_stage1), (Phase::Stage1Only, 0.001));

    // third stale epoch halves 0.001 to 0.0005, which hands over to stage 2
    assert_eq!(
        flat(&mut s, 3),
        [
            Transition::None,
            Transition::None,
            Transition::Entered(Phase::Stage2Frozen1)
        ]
    );
    assert_eq!(s.lr_stage1, 0.0005);
    assert_eq!(s.effective_lrs(), (0.0, 0.001));

    // new best resets the plateau counter
    assert_eq!(s.tick(0.7), Transition::None);
    assert_eq!(flat(&mut s, 2), [Transition::None, Transition::None]);
    assert_eq!(s.tick(0.6), Transition::None);
    assert_eq!(flat(&mut s, 3)[2], Transition::Entered(Phase::Joint));
    assert_eq!(s.effective_lrs(), (0.0005, 0.0005));

    // joint keeps halving both on plateaus
    s.tick(0.5);
    assert_eq!(flat(&mut s, 3)[2], Transition::Halved);
    assert_eq!(s.effective_lrs(), (0.00025, 0.00025));
    assert_eq!(s.phase, Phase::Joint);
}
