//! Sequential vs rayon execution of the hot loops: one training epoch,
//! corpus evaluation and Monte Carlo theorem draws. On a single core the
//! two should be close; the point is that they compute the same thing.

use std::sync::Arc;

use assist_core::corpus::{default_ontology, generate_corpus};
use assist_core::dialogue::Vocabulary;
use assist_core::pipeline::{clean_examples, evaluate_model, train, Composition, TrainOptions, TrainPlan};
use assist_core::theory::{verify_theorem, TheoremConfig};
use assist_core::tracker::{TrackerConfig, TrackerModel};
use assist_core::Execution;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn tracker_loops(c: &mut Criterion) {
    let o = Arc::new(default_ontology());
    let corpus = generate_corpus(&o, 16, 4, 1).unwrap();
    let vocab = Vocabulary::build(&o, [&corpus]);
    let cfg = TrackerConfig { d_model: 32, n_layers: 1, d_ff: 64, max_len: 64, ..TrackerConfig::default() };
    let model = TrackerModel::new(cfg, o.clone(), vocab).unwrap();
    let examples = clean_examples(&corpus);
    let plan = TrainPlan::new(Composition::T, 0.0, 1, 0);

    let mut group = c.benchmark_group("train_epoch");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| {
                let mut m = model.clone();
                train(&mut m, &examples, &corpus, &plan, TrainOptions { exec, verify_decomposition: false }).unwrap()
            })
        });
    }
    group.finish();

    let mut group = c.benchmark_group("evaluate");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| b.iter(|| evaluate_model(&model, &corpus, exec).unwrap()));
    }
    group.finish();
}

fn theorem_draws(c: &mut Criterion) {
    let o = default_ontology();
    let cfg = TheoremConfig { draws: 50, ..TheoremConfig::independent(3) };
    let mut group = c.benchmark_group("theorem_draws");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| b.iter(|| verify_theorem(&cfg, &o, exec).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, tracker_loops, theorem_draws);
criterion_main!(benches);
