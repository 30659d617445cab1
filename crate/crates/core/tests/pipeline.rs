use std::sync::Arc;

use assist_core::corpus::{generate_corpus, inject_noise, NoiseSpec};
use assist_core::dialogue::{Corpus, Ontology, SoftLabelSet, Vocabulary};
use assist_core::pipeline::{
    build_examples, combine_labels, generate_pseudo, train, train_auxiliary, train_primary, Composition, LabelBundle, PseudoPrevious, Target, TrainOptions,
    TrainPlan,
};
use assist_core::tracker::{TrackerConfig, TrackerModel};
use assist_core::Execution;

fn ontology() -> Arc<Ontology> {
    let v = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    Arc::new(
        Ontology::new(vec![
            ("hotel-area".into(), v(&["none", "dontcare", "north", "south", "east"])),
            ("hotel-stars".into(), v(&["none", "dontcare", "3", "4"])),
            ("taxi-leaveat".into(), v(&["none", "dontcare", "09:00", "17:30"])),
            ("taxi-destination".into(), v(&["none", "dontcare", "airport", "station"])),
        ])
        .unwrap(),
    )
}

struct Fixture {
    clean: Corpus,
    noisy: Corpus,
    dev: Corpus,
    vocab: Vocabulary,
}

fn fixture() -> Fixture {
    let o = ontology();
    let clean = generate_corpus(&o, 16, 4, 11).unwrap();
    let (noisy, _) = inject_noise(&clean, &NoiseSpec::high_noise(12)).unwrap();
    let dev = generate_corpus(&o, 6, 4, 13).unwrap();
    let vocab = Vocabulary::build(&o, [&clean, &dev]);
    Fixture { clean, noisy, dev, vocab }
}

fn model(f: &Fixture, seed: u64) -> TrackerModel {
    let cfg = TrackerConfig {
        d_model: 16,
        n_layers: 1,
        n_heads_encoder: 2,
        d_ff: 32,
        max_len: 48,
        seed,
        ..TrackerConfig::default()
    };
    TrackerModel::new(cfg, f.clean.ontology.clone(), f.vocab.clone()).unwrap()
}

fn plan(c: Composition, alpha: f64, epochs: usize) -> TrainPlan {
    TrainPlan { peak_lr: 3e-3, ..TrainPlan::new(c, alpha, epochs, 5) }
}

fn bundle(f: &Fixture) -> LabelBundle {
    let mut aux = model(f, 1);
    train_auxiliary(&mut aux, &f.clean, &f.dev, &plan(Composition::T, 0.0, 2), Execution::Sequential).unwrap();
    let pseudo = generate_pseudo(&aux, &f.noisy, PseudoPrevious::Predicted, Execution::Sequential).unwrap();
    LabelBundle::new(&f.noisy, pseudo, Some(&f.clean)).unwrap()
}

#[test]
fn combined_loss_equals_weighted_hard_losses_on_every_batch() {
    let f = fixture();
    let b = bundle(&f);
    let alpha = 0.37;
    let mut m = model(&f, 2);
    let opts = TrainOptions { exec: Execution::Sequential, verify_decomposition: true };
    let report = train_primary(&mut m, &f.noisy, Some(&b), None, &f.dev, &plan(Composition::TP, alpha, 2), opts).unwrap();
    assert_eq!(report.epochs.len(), 2);
    assert!(!report.steps.is_empty());
    for s in &report.steps {
        let (lp, lv) = s.decomposition.expect("every batch is combined");
        assert_eq!(s.alpha, Some(alpha));
        let rhs = alpha * lp + (1.0 - alpha) * lv;
        assert!((s.loss - rhs).abs() <= 1e-9 * s.loss.abs().max(1.0), "step {}: {} vs {}", s.step, s.loss, rhs);
    }
}

#[test]
fn alpha_zero_reproduces_vanilla_training() {
    let f = fixture();
    let b = bundle(&f);
    let opts = TrainOptions { exec: Execution::Sequential, verify_decomposition: false };
    let mut a = model(&f, 3);
    let ra = train_primary(&mut a, &f.noisy, None, None, &f.dev, &plan(Composition::T, 0.0, 2), opts).unwrap();
    let mut c = model(&f, 3);
    let rc = train_primary(&mut c, &f.noisy, Some(&b), None, &f.dev, &plan(Composition::TP, 0.0, 2), opts).unwrap();
    assert_eq!(ra.steps.len(), rc.steps.len());
    for (x, y) in ra.steps.iter().zip(&rc.steps) {
        assert_eq!(x.loss, y.loss);
    }
    assert_eq!(a.store.snapshot(), c.store.snapshot());
}

#[test]
fn training_reduces_loss_and_reruns_are_identical() {
    let f = fixture();
    let run = |exec| {
        let mut m = model(&f, 4);
        let r = train_auxiliary(&mut m, &f.clean, &f.dev, &plan(Composition::T, 0.0, 6), exec).unwrap();
        (r, m.store.snapshot())
    };
    let (r1, s1) = run(Execution::Sequential);
    let (r2, s2) = run(Execution::Sequential);
    assert_eq!(r1, r2);
    assert_eq!(s1, s2);
    let first = r1.epochs.first().unwrap().mean_loss;
    let last = r1.epochs.last().unwrap().mean_loss;
    assert!(last < 0.9 * first, "{first} -> {last}");
    let (r3, s3) = run(Execution::Parallel);
    assert_eq!(r1, r3);
    assert_eq!(s1, s3);
}

#[test]
fn returned_checkpoint_is_the_selected_epoch() {
    let f = fixture();
    let mut m = model(&f, 6);
    let r = train_auxiliary(&mut m, &f.clean, &f.dev, &plan(Composition::T, 0.0, 4), Execution::Sequential).unwrap();
    let key = |e: &assist_core::pipeline::EpochRecord| (e.selection_jga.unwrap(), e.selection_slot_accuracy.unwrap());
    let best = r.epochs.iter().map(key).fold((f64::NEG_INFINITY, f64::NEG_INFINITY), |a, b| if b > a { b } else { a });
    let first_best = r.epochs.iter().position(|e| key(e) == best).unwrap();
    assert_eq!(r.best_epoch, first_best);
    assert_eq!(r.best_selection_jga, best.0);
    let again = assist_core::pipeline::evaluate_model(&m, &f.dev, Execution::Sequential).unwrap();
    assert_eq!(again.joint_goal_accuracy, best.0);
    assert_eq!(again.slot_accuracy, best.1);
}

#[test]
fn example_streams_follow_the_composition() {
    let f = fixture();
    let b = bundle(&f);
    let turns = f.noisy.num_turns();
    let n = |c, bundle: Option<&LabelBundle>, clean: Option<&Corpus>| build_examples(&f.noisy, bundle, clean, &plan(c, 0.5, 1)).map(|e| e.len());
    assert_eq!(n(Composition::T, None, None).unwrap(), turns);
    assert_eq!(n(Composition::P, Some(&b), None).unwrap(), turns);
    assert_eq!(n(Composition::TP, Some(&b), None).unwrap(), turns);
    assert_eq!(n(Composition::TC, None, Some(&f.dev)).unwrap(), turns + f.dev.num_turns());
    assert_eq!(n(Composition::TCP, Some(&b), Some(&f.dev)).unwrap(), turns + f.dev.num_turns());
    assert!(n(Composition::P, None, None).is_err());
    assert!(n(Composition::TC, None, None).is_err());
    let empty = f.dev.with_dialogues(Vec::new());
    assert!(n(Composition::TC, None, Some(&empty)).is_err());
    let none = Composition { t: false, c: false, p: false };
    assert!(n(none, None, None).is_err());

    // P alone conditions on the pseudo previous state; T+P on the vanilla one.
    let p = build_examples(&f.noisy, Some(&b), None, &plan(Composition::P, 0.5, 1)).unwrap();
    let tp = build_examples(&f.noisy, Some(&b), None, &plan(Composition::TP, 0.5, 1)).unwrap();
    let mut k = 0;
    for (i, d) in f.noisy.dialogues.iter().enumerate() {
        let vanilla = d.states();
        for t in 1..=d.turns.len() {
            if t > 1 {
                assert_eq!(p[k].previous_state, b.dialogues[i].pseudo[t - 2]);
                assert_eq!(tp[k].previous_state, vanilla[t - 2]);
            }
            assert_eq!(p[k].target, Target::Hard(b.dialogues[i].pseudo[t - 1].clone()));
            assert_eq!(
                tp[k].target,
                Target::Mixed { pseudo: b.dialogues[i].pseudo[t - 1].clone(), vanilla: vanilla[t - 1].clone(), alpha: 0.5 }
            );
            k += 1;
        }
    }
}

#[test]
fn bundle_round_trips_and_rejects_misalignment() {
    let f = fixture();
    let b = bundle(&f);
    let back = LabelBundle::from_jsonl(&b.to_jsonl().unwrap()).unwrap();
    assert_eq!(back, b);
    back.check_covers(&f.noisy).unwrap();
    assert!(back.check_covers(&f.dev).is_err());
    let short = vec![Vec::new(); f.noisy.dialogues.len()];
    assert!(LabelBundle::new(&f.noisy, short, None).is_err());
}

#[test]
fn combine_labels_is_the_convex_mix() {
    let o = ontology();
    let p = SoftLabelSet::from_state(&o, &[2, 0, 3, 1]).unwrap();
    let v = SoftLabelSet::from_state(&o, &[2, 2, 0, 1]).unwrap();
    let c = combine_labels(&p, &v, 0.25, &o).unwrap();
    assert_eq!(c.slot(0), &[0.0, 0.0, 1.0, 0.0, 0.0]);
    assert_eq!(c.slot(1), &[0.25, 0.0, 0.75, 0.0]);
    assert_eq!(c.slot(2), &[0.75, 0.0, 0.0, 0.25]);
    assert!(combine_labels(&p, &v, 1.5, &o).is_err());
}

#[test]
fn invalid_plans_are_rejected() {
    let f = fixture();
    let mut m = model(&f, 9);
    let ex = build_examples(&f.noisy, None, None, &plan(Composition::T, 0.0, 1)).unwrap();
    let opts = TrainOptions::default();
    for bad in [
        TrainPlan { epochs: 0, ..plan(Composition::T, 0.0, 1) },
        TrainPlan { batch_size: 0, ..plan(Composition::T, 0.0, 1) },
        TrainPlan { alpha: -0.1, ..plan(Composition::T, 0.0, 1) },
        TrainPlan { peak_lr: 0.0, ..plan(Composition::T, 0.0, 1) },
    ] {
        assert!(train(&mut m, &ex, &f.dev, &bad, opts).is_err());
    }
    assert!(train(&mut m, &[], &f.dev, &plan(Composition::T, 0.0, 1), opts).is_err());
    assert!(train_auxiliary(&mut m, &f.dev.with_dialogues(Vec::new()), &f.dev, &plan(Composition::T, 0.0, 1), Execution::Sequential).is_err());
}
