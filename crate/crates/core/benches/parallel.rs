use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use fedsent_core::corpus::{preprocess_all, PreprocessConfig};
use fedsent_core::dataset::synthetic_task;
use fedsent_core::fednet::{run_federated, FedConfig};
use fedsent_core::sentilex::{label_corpus, SentimentLabel};
use fedsent_core::shapx::{explain, Method};
use fedsent_core::synth;
use fedsent_core::textclf::{evaluate, train, TrainParams};
use fedsent_core::Exec;

const MODES: [(&str, Exec); 2] = [
    ("sequential", Exec::Sequential),
    ("parallel", Exec::Parallel),
];

fn text_stages(c: &mut Criterion) {
    let raw = synth::comments(2000, 1);
    let cfg = PreprocessConfig::bundled();
    let lex = fedsent_core::sentilex::Lexicon::bundled();
    let mut g = c.benchmark_group("text");
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::new("preprocess", name), &exec, |b, &e| {
            b.iter(|| preprocess_all(black_box(&raw), &cfg, e))
        });
        g.bench_with_input(BenchmarkId::new("label", name), &exec, |b, &e| {
            b.iter(|| label_corpus(black_box(&raw), &lex, e))
        });
    }
    g.finish();
}

fn model_stages(c: &mut Criterion) {
    let task = synthetic_task(3000, 1, Exec::default()).unwrap();
    let dim = task.space.dim();
    let model = train(&task.train, dim, TrainParams::default()).unwrap();
    let mut g = c.benchmark_group("model");
    g.sample_size(20);
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::new("evaluate", name), &exec, |b, &e| {
            b.iter(|| evaluate(&model, black_box(&task.train), e).unwrap())
        });
        g.bench_with_input(
            BenchmarkId::new("federated_round_n6", name),
            &exec,
            |b, &e| {
                let cfg = FedConfig::new(6, 1, 2, 1);
                b.iter(|| run_federated(black_box(&task.train), &task.val, dim, &cfg, e).unwrap())
            },
        );
        g.bench_with_input(BenchmarkId::new("shapley_sampled", name), &exec, |b, &e| {
            let subset = &task.val[..64];
            b.iter(|| {
                explain(
                    &model,
                    black_box(subset),
                    &task.space.vocab,
                    &[SentimentLabel::Positive],
                    Method::Sampled,
                    200,
                    1,
                    e,
                )
                .unwrap()
            })
        });
    }
    g.finish();
}

criterion_group!(benches, text_stages, model_stages);
criterion_main!(benches);
