use std::sync::OnceLock;

use fedsent_core::dataset::{synthetic_task, SyntheticTask};
use fedsent_core::fednet::{fedavg, partition_stratified, run_federated, FedConfig};
use fedsent_core::textclf::{evaluate, majority_baseline, train, LinearModel, TrainParams};
use fedsent_core::Exec;
use proptest::prelude::*;

fn task() -> &'static SyntheticTask {
    static TASK: OnceLock<SyntheticTask> = OnceLock::new();
    TASK.get_or_init(|| synthetic_task(3000, 42, Exec::default()).unwrap())
}

fn model_from(weights: Vec<f64>, bias: [f64; 3]) -> LinearModel {
    let mut m = LinearModel::zeros(weights.len() / 3, TrainParams::default());
    m.weights = weights;
    m.bias = bias;
    m
}

fn params() -> impl Strategy<Value = (Vec<f64>, [f64; 3])> {
    (
        prop::collection::vec(-10.0f64..10.0, 6),
        prop::array::uniform3(-10.0f64..10.0),
    )
}

proptest! {
    #[test]
    fn fedavg_is_idempotent((w, b) in params(), sizes in prop::collection::vec(1usize..100, 1..6)) {
        let m = model_from(w, b);
        let models = vec![m.clone(); sizes.len()];
        let avg = fedavg(&models, &sizes).unwrap();
        for (x, y) in avg.weights.iter().zip(&m.weights) {
            prop_assert!((x - y).abs() <= 1e-12);
        }
        for (x, y) in avg.bias.iter().zip(&m.bias) {
            prop_assert!((x - y).abs() <= 1e-12);
        }
    }

    #[test]
    fn fedavg_is_linear(a in params(), b in params(), c in -5.0f64..5.0, s1 in 1usize..50, s2 in 1usize..50) {
        let models = [model_from(a.0.clone(), a.1), model_from(b.0.clone(), b.1)];
        let scaled = [
            model_from(a.0.iter().map(|v| v * c).collect(), a.1.map(|v| v * c)),
            model_from(b.0.iter().map(|v| v * c).collect(), b.1.map(|v| v * c)),
        ];
        let lhs = fedavg(&scaled, &[s1, s2]).unwrap();
        let rhs = fedavg(&models, &[s1, s2]).unwrap();
        for (x, y) in lhs.weights.iter().zip(&rhs.weights) {
            prop_assert!((x - c * y).abs() <= 1e-12);
        }
        for (x, y) in lhs.bias.iter().zip(&rhs.bias) {
            prop_assert!((x - c * y).abs() <= 1e-12);
        }
    }
}

#[test]
fn fedavg_weighted_mean() {
    let zero = model_from(vec![0.0; 3], [0.0; 3]);
    let four = model_from(vec![4.0; 3], [4.0; 3]);
    let avg = fedavg(&[zero.clone(), four.clone()], &[1, 3]).unwrap();
    assert!(avg
        .weights
        .iter()
        .chain(&avg.bias)
        .all(|&v| (v - 3.0).abs() <= 1e-12));
    let avg = fedavg(&[zero, four], &[2, 2]).unwrap();
    assert!(avg.weights.iter().all(|&v| (v - 2.0).abs() <= 1e-12));
}

#[test]
fn partition_invariants_on_corpus() {
    let data = &task().train;
    for n in [1, 2, 4, 6] {
        let shards = partition_stratified(data, n, 42).unwrap();
        let mut ids: Vec<&str> = shards
            .iter()
            .flat_map(|s| s.examples.iter().map(|x| x.id.as_str()))
            .collect();
        assert_eq!(ids.len(), data.len());
        ids.sort_unstable();
        ids.dedup();
        assert_eq!(ids.len(), data.len());
        for c in 0..3 {
            let counts: Vec<usize> = shards.iter().map(|s| s.class_counts[c]).collect();
            assert!(counts.iter().max().unwrap() - counts.iter().min().unwrap() <= 1);
        }
    }
}

#[test]
fn single_client_equals_centralized() {
    let t = task();
    let dim = t.space.dim();
    let mut cfg = FedConfig::new(1, 1, 10, 42);
    cfg.train.epochs = 10;
    let fed = run_federated(&t.train, &t.val, dim, &cfg, Exec::default()).unwrap();
    let central = train(
        &t.train,
        dim,
        TrainParams {
            epochs: 10,
            seed: 42,
            ..TrainParams::default()
        },
    )
    .unwrap();
    let fed_model = fed.model.clone().unwrap();
    assert_eq!(fed_model.weights, central.weights);
    assert_eq!(fed_model.bias, central.bias);
    assert_eq!(
        fed.final_report,
        evaluate(&central, &t.val, Exec::Sequential).unwrap()
    );
}

#[test]
fn zero_rounds_keeps_initialization() {
    let t = task();
    let run = run_federated(
        &t.train,
        &t.val,
        t.space.dim(),
        &FedConfig::new(3, 0, 1, 1),
        Exec::Sequential,
    )
    .unwrap();
    let model = run.model.unwrap();
    assert!(model.weights.iter().all(|&w| w == 0.0));
    assert!(run.round_logs.is_empty());
    assert_eq!(run.final_report.total as usize, t.val.len());
}

#[test]
fn run_is_deterministic_and_order_free() {
    let t = task();
    let cfg = FedConfig::new(4, 2, 1, 7);
    let a = run_federated(&t.train, &t.val, t.space.dim(), &cfg, Exec::Sequential).unwrap();
    let b = run_federated(&t.train, &t.val, t.space.dim(), &cfg, Exec::Parallel).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.model, b.model);
    assert_eq!(a.round_logs.len(), 2);
    assert!(a.round_logs.iter().all(|r| r.clients.len() == 4));
    assert_eq!(a.manifest_name(), "fedrun_N4_R2.json");
}

#[test]
fn more_clients_do_not_help() {
    let t = task();
    let acc: Vec<f64> = [2, 4, 6]
        .iter()
        .map(|&n| {
            let mut cfg = FedConfig::new(n, 10, 2, 42);
            cfg.train.learning_rate = 1.0;
            let run =
                run_federated(&t.train, &t.val, t.space.dim(), &cfg, Exec::default()).unwrap();
            run.final_report.accuracy
        })
        .collect();
    assert!(acc[0] >= acc[1] - 0.005, "{acc:?}");
    assert!(acc[1] >= acc[2] - 0.010, "{acc:?}");
    assert!(acc[0] > majority_baseline(&t.val), "{acc:?}");
}
