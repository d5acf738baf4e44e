use fbmstcn_core::gradcheck::{check, Target, TOLERANCE};

fn sweep(target: Target, seeds: u64) {
    for seed in 0..seeds {
        let r = check(target, seed).unwrap();
        assert!(
            r.passed(),
            "{} seed {seed}: worst {:.3e} > {TOLERANCE:e} in {:?}",
            target.name(),
            r.worst(),
            r.tensors
        );
    }
}

#[test]
fn layers_twenty_seeds() {
    for t in Target::LAYERS {
        sweep(t, 20);
    }
}

#[test]
fn loss_twenty_seeds() {
    sweep(Target::Loss, 20);
}

#[test]
fn whole_model_sampled() {
    sweep(Target::Model, 3);
}
