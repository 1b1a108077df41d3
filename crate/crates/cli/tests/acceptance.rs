//! Acceptance checks, one line per criterion. Run with
//! `cargo test -p fedsent-cli --test acceptance`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use fedsent_core::corpus::RawComment;
use fedsent_core::dataset::{task_from_comments, SyntheticTask};
use fedsent_core::fednet::{fedavg, run_federated, FedConfig};
use fedsent_core::sentilex::{
    compound_score, label_from_score, Lexicon, SentimentLabel, SentimentScore,
};
use fedsent_core::shapx::{explain, shapley_exact_linear, shapley_sampled, Method};
use fedsent_core::synth::{planted_groups, planted_two_topic};
use fedsent_core::textclf::{
    evaluate, loss_and_grad, majority_baseline, train, EvalReport, FeatureVector, LinearModel,
    TrainParams,
};
use fedsent_core::topicmodel::{build_vocab, fit_lda_observed, LdaParams};
use fedsent_core::{io, Exec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, u64, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn bundled_task(file: &str) -> Result<SyntheticTask, String> {
    let raw: Vec<RawComment> =
        io::read_jsonl(&root().join("data").join(file)).map_err(|e| e.to_string())?;
    task_from_comments(&raw, 42, Exec::default()).map_err(|e| e.to_string())
}

fn dense(values: &[f64]) -> FeatureVector {
    let (indices, values) = values
        .iter()
        .enumerate()
        .filter(|(_, v)| **v != 0.0)
        .map(|(i, &v)| (i as u32, v))
        .unzip();
    FeatureVector {
        id: "x".into(),
        label: None,
        indices,
        values,
    }
}

fn random_model(rng: &mut ChaCha8Rng, dim: usize) -> LinearModel {
    let mut m = LinearModel::zeros(dim, TrainParams::default());
    m.weights
        .iter_mut()
        .for_each(|w| *w = rng.gen_range(-3.0..3.0));
    m.bias
        .iter_mut()
        .for_each(|b| *b = rng.gen_range(-1.0..1.0));
    m
}

/// Shapley values by enumerating all coalitions.
#[allow(clippy::needless_range_loop)]
fn brute_force(d: usize, v: impl Fn(&[bool]) -> f64) -> Vec<f64> {
    let mut fact = vec![1.0f64; d + 1];
    for i in 1..=d {
        fact[i] = fact[i - 1] * i as f64;
    }
    let mut phi = vec![0.0; d];
    let mut mask = vec![false; d];
    for s in 0u32..(1 << d) {
        for (j, m) in mask.iter_mut().enumerate() {
            *m = s & (1 << j) != 0;
        }
        let size = mask.iter().filter(|&&m| m).count();
        let without = v(&mask);
        for j in 0..d {
            if !mask[j] {
                mask[j] = true;
                phi[j] += fact[size] * fact[d - size - 1] / fact[d] * (v(&mask) - without);
                mask[j] = false;
            }
        }
    }
    phi
}

fn metrics_oracle() -> Outcome {
    let r = EvalReport::from_confusion([[1543, 16, 77], [64, 658, 54], [88, 14, 1090]])
        .map_err(|e| e.to_string())?;
    ensure!(
        (r.accuracy - 0.9132).abs() <= 1e-4,
        "accuracy {}",
        r.accuracy
    );
    Ok(format!("accuracy {:.4}", r.accuracy))
}

fn label_thresholds() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut compounds: Vec<f64> = (0..10_000).map(|_| rng.gen_range(-1.0..=1.0)).collect();
    compounds.extend([-1.0, -0.05, -0.0499999, 0.0, 0.0499999, 0.05, 1.0]);
    for c in compounds {
        let s = SentimentScore {
            compound: c,
            pos_share: 0.0,
            neg_share: 0.0,
            neu_share: 1.0,
        };
        let want = if c >= 0.05 {
            SentimentLabel::Positive
        } else if c <= -0.05 {
            SentimentLabel::Negative
        } else {
            SentimentLabel::Neutral
        };
        ensure!(label_from_score(&s) == want, "compound {c}");
    }
    Ok("10007 compounds".into())
}

fn vader_parity() -> Outcome {
    let path = root().join("crates/core/tests/fixtures/vader_reference.jsonl");
    let refs: Vec<serde_json::Value> = io::read_jsonl(&path).map_err(|e| e.to_string())?;
    let lex = Lexicon::bundled();
    let mut agree = 0;
    let mut worst: f64 = 0.0;
    for r in &refs {
        let s = compound_score(r["text"].as_str().unwrap_or_default(), &lex);
        worst = worst.max((s.compound - r["compound"].as_f64().unwrap_or(f64::NAN)).abs());
        if label_from_score(&s).as_str() == r["label"].as_str().unwrap_or_default() {
            agree += 1;
        }
    }
    let rate = agree as f64 / refs.len() as f64;
    ensure!(worst <= 1e-3, "max compound gap {worst}");
    ensure!(rate >= 0.99, "label agreement {rate}");
    Ok(format!(
        "{} sentences, max gap {worst:.1e}, agreement {rate:.3}",
        refs.len()
    ))
}

fn lda_invariants() -> Outcome {
    let corpus = planted_two_topic(40, 7);
    let vocab = build_vocab(&corpus, 2).map_err(|e| e.to_string())?;
    let fit = |seed| {
        let mut ok = true;
        let m = fit_lda_observed(&corpus, &vocab, LdaParams::new(2, 500, seed), |s| {
            ok &= s.counts_consistent()
        });
        m.map(|m| (m, ok)).map_err(|e| e.to_string())
    };
    let (model, conserved) = fit(42)?;
    ensure!(conserved, "count tables drifted");
    for row in model.phi.iter().chain(&model.theta) {
        let sum: f64 = row.iter().sum();
        ensure!((sum - 1.0).abs() <= 1e-9, "row sums to {sum}");
    }
    let (again, _) = fit(42)?;
    ensure!(
        again.phi == model.phi && again.theta == model.theta,
        "same seed gave different fits"
    );
    let (a, b) = planted_groups();
    let mut hits = 0;
    for t in 0..2 {
        let top = model.top_keywords(t, 10).map_err(|e| e.to_string())?;
        let in_a = top.iter().filter(|w| a.contains(&w.as_str())).count();
        let in_b = top.iter().filter(|w| b.contains(&w.as_str())).count();
        hits += in_a.max(in_b);
    }
    let purity = hits as f64 / 20.0;
    ensure!(purity >= 0.9, "purity {purity}");
    Ok(format!("purity {purity:.2}"))
}

fn fedavg_algebra() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let avg = |ms: &[LinearModel], sizes: &[usize]| fedavg(ms, sizes).map_err(|e| e.to_string());
    for _ in 0..200 {
        let dim = rng.gen_range(1..8);
        let a = random_model(&mut rng, dim);
        let b = random_model(&mut rng, dim);
        let copies = rng.gen_range(1..6);
        let sizes: Vec<usize> = (0..copies).map(|_| rng.gen_range(1..100)).collect();
        let same = avg(&vec![a.clone(); copies], &sizes)?;
        let close = |x: &[f64], y: &[f64]| x.iter().zip(y).all(|(p, q)| (p - q).abs() <= 1e-12);
        ensure!(
            close(&same.weights, &a.weights) && close(&same.bias, &a.bias),
            "not idempotent"
        );

        // avg(a + c*b) == avg(a) + c*avg(b), client by client
        let c: f64 = rng.gen_range(-5.0..5.0);
        let sizes = [rng.gen_range(1..50), rng.gen_range(1..50)];
        let a2 = random_model(&mut rng, dim);
        let b2 = random_model(&mut rng, dim);
        let mix = |x: &LinearModel, y: &LinearModel| {
            let mut m = x.clone();
            m.weights
                .iter_mut()
                .zip(&y.weights)
                .for_each(|(p, q)| *p += c * q);
            m.bias
                .iter_mut()
                .zip(&y.bias)
                .for_each(|(p, q)| *p += c * q);
            m
        };
        let lhs = avg(&[mix(&a, &b), mix(&a2, &b2)], &sizes)?;
        let rhs = mix(&avg(&[a, a2], &sizes)?, &avg(&[b, b2], &sizes)?);
        ensure!(
            close(&lhs.weights, &rhs.weights) && close(&lhs.bias, &rhs.bias),
            "not linear"
        );
    }
    let zero = LinearModel::zeros(2, TrainParams::default());
    let mut four = zero.clone();
    four.weights
        .iter_mut()
        .chain(four.bias.iter_mut())
        .for_each(|v| *v = 4.0);
    let m = avg(&[zero, four], &[1, 3])?;
    ensure!(
        m.weights
            .iter()
            .chain(&m.bias)
            .all(|v| (v - 3.0).abs() <= 1e-12),
        "weighted mean {:?}",
        m.weights
    );
    Ok("idempotent, linear, weighted mean".into())
}

fn single_client_equivalence() -> Outcome {
    let t = bundled_task("synthetic_1k.jsonl")?;
    let dim = t.space.dim();
    let cfg = FedConfig::new(1, 1, 10, 42);
    let fed =
        run_federated(&t.train, &t.val, dim, &cfg, Exec::default()).map_err(|e| e.to_string())?;
    let central = train(
        &t.train,
        dim,
        TrainParams {
            epochs: 10,
            seed: 42,
            ..TrainParams::default()
        },
    )
    .map_err(|e| e.to_string())?;
    let fm = fed.model.ok_or("no federated model")?;
    ensure!(
        fm.weights == central.weights && fm.bias == central.bias,
        "parameters differ"
    );
    let report = evaluate(&central, &t.val, Exec::Sequential).map_err(|e| e.to_string())?;
    ensure!(fed.final_report == report, "metrics differ");
    Ok(format!("bit-identical, accuracy {:.4}", report.accuracy))
}

fn client_trend() -> Outcome {
    let t = bundled_task("synthetic_3k.jsonl")?;
    let mut acc = Vec::new();
    for n in [2, 4, 6] {
        let mut cfg = FedConfig::new(n, 10, 2, 42);
        cfg.train.learning_rate = 1.0;
        let run = run_federated(&t.train, &t.val, t.space.dim(), &cfg, Exec::default())
            .map_err(|e| e.to_string())?;
        acc.push(run.final_report.accuracy);
    }
    let base = majority_baseline(&t.val);
    ensure!(
        acc[0] >= acc[1] - 0.005 && acc[1] >= acc[2] - 0.005,
        "accuracies {acc:?}"
    );
    ensure!(acc[0] > base, "N=2 {} not above baseline {base}", acc[0]);
    Ok(format!(
        "N=2,4,6 -> {:.3} {:.3} {:.3} (baseline {base:.3})",
        acc[0], acc[1], acc[2]
    ))
}

fn shapley_checks() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for d in 1..=12 {
        let model = random_model(&mut rng, d);
        let xs: Vec<f64> = (0..d).map(|_| rng.gen_range(0.05..1.0)).collect();
        let x = dense(&xs);
        let zero = FeatureVector::zeros();
        for class in SentimentLabel::ALL {
            let exact =
                shapley_exact_linear(&model, &x, class, &zero).map_err(|e| e.to_string())?;
            let c = class.index();
            let oracle = brute_force(d, |mask| {
                model.bias[c]
                    + (0..d)
                        .filter(|&j| mask[j])
                        .map(|j| model.weight(c, j) * xs[j])
                        .sum::<f64>()
            });
            for (a, b) in exact.phi.iter().zip(&oracle) {
                ensure!(
                    (a - b).abs() <= 1e-12,
                    "d={d}: exact {a} vs brute force {b}"
                );
            }
        }
    }

    let d = 10;
    let model = random_model(&mut rng, d);
    let xs: Vec<f64> = (0..d).map(|_| rng.gen_range(0.05..1.0)).collect();
    let value = |mask: &[bool]| {
        let masked: Vec<f64> = (0..d).map(|j| if mask[j] { xs[j] } else { 0.0 }).collect();
        model
            .predict(&dense(&masked))
            .map(|p| p.probs[2])
            .unwrap_or(f64::NAN)
    };
    let oracle = brute_force(d, value);
    let est = shapley_sampled(value, d, 2000, 99, Exec::default()).map_err(|e| e.to_string())?;
    let worst = est
        .phi
        .iter()
        .zip(&oracle)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    ensure!(worst <= 0.05, "sampled error {worst}");

    let t = bundled_task("synthetic_1k.jsonl")?;
    let trained =
        train(&t.train, t.space.dim(), TrainParams::default()).map_err(|e| e.to_string())?;
    let subset = &t.val[..t.val.len().min(60)];
    let mut emitted = 0;
    for method in [Method::Exact, Method::Sampled] {
        let attrs = explain(
            &trained,
            subset,
            &t.space.vocab,
            &SentimentLabel::ALL,
            method,
            300,
            42,
            Exec::default(),
        )
        .map_err(|e| e.to_string())?;
        for a in &attrs {
            ensure!(
                a.efficiency_gap() <= 1e-6,
                "{} efficiency gap {}",
                a.id,
                a.efficiency_gap()
            );
        }
        emitted += attrs.len();
    }
    Ok(format!(
        "brute force d<=12, sampled error {worst:.3}, {emitted} attributions efficient"
    ))
}

fn gradient_check() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let dim = rng.gen_range(1..=6);
        let mut model = random_model(&mut rng, dim);
        let n = rng.gen_range(1..=5);
        let data: Vec<FeatureVector> = (0..n)
            .map(|_| {
                let xs: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.5..1.5)).collect();
                let mut x = dense(&xs);
                x.label = SentimentLabel::from_index(rng.gen_range(0..3));
                x
            })
            .collect();
        let l2 = rng.gen_range(0.0..0.1);
        let batch: Vec<&FeatureVector> = data.iter().collect();
        let loss = |m: &LinearModel| {
            loss_and_grad(m, &batch, l2)
                .map(|r| r.0)
                .unwrap_or(f64::NAN)
        };
        let (_, grad) = loss_and_grad(&model, &batch, l2).map_err(|e| e.to_string())?;
        let mut check = |analytic: f64, numeric: f64| {
            let scale = analytic.abs().max(numeric.abs());
            let err = (analytic - numeric).abs() / if scale < 1e-6 { 1.0 } else { scale };
            worst = worst.max(err);
        };
        for i in 0..model.weights.len() {
            let w = model.weights[i];
            model.weights[i] = w + h;
            let up = loss(&model);
            model.weights[i] = w - h;
            let down = loss(&model);
            model.weights[i] = w;
            check(grad.weights[i], (up - down) / (2.0 * h));
        }
        for c in 0..3 {
            let b = model.bias[c];
            model.bias[c] = b + h;
            let up = loss(&model);
            model.bias[c] = b - h;
            let down = loss(&model);
            model.bias[c] = b;
            check(grad.bias[c], (up - down) / (2.0 * h));
        }
    }
    ensure!(worst <= 1e-4, "worst relative error {worst:.2e}");
    Ok(format!("100 instances, worst relative error {worst:.1e}"))
}

fn end_to_end() -> Outcome {
    let config = root().join("data/pipeline.toml");
    let dirs = [
        tempfile::tempdir().map_err(|e| e.to_string())?,
        tempfile::tempdir().map_err(|e| e.to_string())?,
    ];
    let mut slowest = Duration::ZERO;
    for dir in &dirs {
        let start = Instant::now();
        let out = Command::new(env!("CARGO_BIN_EXE_fedsent"))
            .arg("pipeline")
            .arg("--config")
            .arg(&config)
            .arg("--out")
            .arg(dir.path())
            .output()
            .map_err(|e| e.to_string())?;
        slowest = slowest.max(start.elapsed());
        ensure!(
            out.status.success(),
            "pipeline failed: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    ensure!(
        slowest < Duration::from_secs(60),
        "pipeline took {slowest:?}"
    );

    let manifests = |dir: &Path| -> Result<Vec<(PathBuf, Vec<u8>)>, String> {
        let mut found = Vec::new();
        for entry in std::fs::read_dir(dir).map_err(|e| e.to_string())? {
            let path = entry.map_err(|e| e.to_string())?.path();
            if path.to_string_lossy().ends_with(".manifest.json") {
                let bytes = std::fs::read(&path).map_err(|e| e.to_string())?;
                found.push((path.file_name().unwrap_or_default().into(), bytes));
            }
        }
        found.sort();
        Ok(found)
    };
    let first = manifests(dirs[0].path())?;
    ensure!(
        first.len() == 11,
        "expected 11 manifests, found {}",
        first.len()
    );
    ensure!(
        first == manifests(dirs[1].path())?,
        "manifests differ between runs"
    );

    let summary: serde_json::Value =
        io::read_json(&dirs[0].path().join("pipeline.manifest.json")).map_err(|e| e.to_string())?;
    let acc = summary["summary"]["centralized_accuracy"]
        .as_f64()
        .unwrap_or(f64::NAN);
    let base = summary["summary"]["majority_baseline"]
        .as_f64()
        .unwrap_or(f64::NAN);
    ensure!(acc >= base + 0.10, "accuracy {acc} vs baseline {base}");
    Ok(format!(
        "accuracy {acc:.3} vs baseline {base:.3}, slowest run {:.1}s",
        slowest.as_secs_f64()
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("metrics from confusion matrix", 1, metrics_oracle),
        ("label thresholds", 1, label_thresholds),
        ("sentiment reference parity", 5, vader_parity),
        ("topic model invariants", 30, lda_invariants),
        ("fedavg algebra", 1, fedavg_algebra),
        (
            "single client equals centralized",
            30,
            single_client_equivalence,
        ),
        ("accuracy versus client count", 300, client_trend),
        ("shapley correctness", 60, shapley_checks),
        ("gradient check", 10, gradient_check),
        ("end-to-end determinism", 120, end_to_end),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, budget, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .unwrap_or_else(|| "panicked".into()))
        });
        let secs = start.elapsed().as_secs_f64();
        let outcome = match outcome {
            Ok(_) if secs > *budget as f64 => Err(format!("took {secs:.1}s, budget {budget}s")),
            o => o,
        };
        let (tag, detail) = match outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("{tag} {:>2} {name:<34} {secs:>7.2}s  {detail}", i + 1);
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
