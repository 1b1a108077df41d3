//! In-process federated training: stratified client shards, local epochs
//! from the current global model, and size-weighted FedAvg aggregation.
//!
//! The server side only ever sees `(parameters, shard size)` pairs; shard
//! contents stay inside [`local_train`].

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::sentilex::SentimentLabel;
use crate::textclf::{
    evaluate, fit_epochs, loss_and_grad, training_rng, EvalReport, FeatureVector, LinearModel,
    TrainParams, NUM_CLASSES,
};

pub const DEFAULT_ROUNDS: usize = 5;
pub const DEFAULT_LOCAL_EPOCHS: usize = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct ClientShard {
    pub client_id: usize,
    pub examples: Vec<FeatureVector>,
    pub class_counts: [usize; NUM_CLASSES],
}

impl ClientShard {
    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }
}

/// Splits `data` into `n` shards. Within each class the examples are
/// shuffled with `seed` and dealt round-robin starting at client 0, so
/// per-class counts differ by at most one between clients. Each shard
/// keeps its examples in their original relative order.
pub fn partition_stratified(
    data: &[FeatureVector],
    n: usize,
    seed: u64,
) -> Result<Vec<ClientShard>> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "number of clients must be >= 1".into(),
        ));
    }
    let mut by_class: [Vec<usize>; NUM_CLASSES] = Default::default();
    for (i, x) in data.iter().enumerate() {
        let label = x
            .label
            .ok_or_else(|| Error::InvalidArgument(format!("example `{}` has no label", x.id)))?;
        by_class[label.index()].push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut owner = vec![0usize; data.len()];
    for (c, members) in by_class.iter_mut().enumerate() {
        if members.len() < n {
            log::warn!(
                "class {} has {} examples for {n} clients; some shards will lack it",
                SentimentLabel::ALL[c],
                members.len()
            );
        }
        members.shuffle(&mut rng);
        for (j, &i) in members.iter().enumerate() {
            owner[i] = j % n;
        }
    }
    let mut shards: Vec<ClientShard> = (0..n)
        .map(|client_id| ClientShard {
            client_id,
            examples: Vec::new(),
            class_counts: [0; NUM_CLASSES],
        })
        .collect();
    for (i, x) in data.iter().enumerate() {
        let shard = &mut shards[owner[i]];
        shard.class_counts[x.label.expect("checked above").index()] += 1;
        shard.examples.push(x.clone());
    }
    Ok(shards)
}

/// Aggregated model after `round` completed communication rounds.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalModel {
    pub model: LinearModel,
    pub round: usize,
}

/// What a client sends back: parameters and summary numbers only.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalUpdate {
    pub client_id: usize,
    pub model: LinearModel,
    pub size: usize,
    pub loss: f64,
    pub accuracy: f64,
}

/// Fine-tunes a copy of the global model on one shard for `epochs` epochs.
/// The shuffle stream is keyed by `seed ^ client_id` and the round index,
/// so results do not depend on execution order. Returns `None` for an
/// empty shard.
pub fn local_train(
    global: &GlobalModel,
    shard: &ClientShard,
    epochs: usize,
    seed: u64,
) -> Result<Option<LocalUpdate>> {
    if shard.is_empty() {
        log::warn!(
            "client {} has an empty shard; skipped this round",
            shard.client_id
        );
        return Ok(None);
    }
    let mut model = global.model.clone();
    let mut rng = training_rng(seed ^ shard.client_id as u64, global.round as u64);
    fit_epochs(&mut model, &shard.examples, epochs, &mut rng)?;
    let batch: Vec<&FeatureVector> = shard.examples.iter().collect();
    let (loss, _) = loss_and_grad(&model, &batch, model.params.l2)?;
    let mut correct = 0usize;
    for x in &shard.examples {
        if Some(model.predict(x)?.label) == x.label {
            correct += 1;
        }
    }
    Ok(Some(LocalUpdate {
        client_id: shard.client_id,
        size: shard.len(),
        loss,
        accuracy: correct as f64 / shard.len() as f64,
        model,
    }))
}

/// Parameter-wise mean weighted by `sizes`, summed in index order.
pub fn fedavg(models: &[LinearModel], sizes: &[usize]) -> Result<LinearModel> {
    let first = models
        .first()
        .ok_or_else(|| Error::InvalidArgument("fedavg needs at least one model".into()))?;
    if sizes.len() != models.len() {
        return Err(Error::DimensionMismatch {
            expected: models.len(),
            actual: sizes.len(),
        });
    }
    if let Some(m) = models.iter().find(|m| m.dim != first.dim) {
        return Err(Error::DimensionMismatch {
            expected: first.dim,
            actual: m.dim,
        });
    }
    let total: usize = sizes.iter().sum();
    if total == 0 {
        return Err(Error::InvalidArgument("fedavg sizes are all zero".into()));
    }
    let mut out = LinearModel::zeros(first.dim, first.params);
    out.vocab_hash = first.vocab_hash.clone();
    for (m, &size) in models.iter().zip(sizes) {
        let w = size as f64 / total as f64;
        for (acc, v) in out.weights.iter_mut().zip(&m.weights) {
            *acc += w * v;
        }
        for (acc, v) in out.bias.iter_mut().zip(&m.bias) {
            *acc += w * v;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FedConfig {
    pub clients: usize,
    pub rounds: usize,
    pub local_epochs: usize,
    pub seed: u64,
    pub train: TrainParams,
}

impl FedConfig {
    pub fn new(clients: usize, rounds: usize, local_epochs: usize, seed: u64) -> Self {
        Self {
            clients,
            rounds,
            local_epochs,
            seed,
            train: TrainParams {
                seed,
                ..TrainParams::default()
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClientLog {
    pub client_id: usize,
    pub size: usize,
    pub loss: f64,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundLog {
    pub round: usize,
    pub clients: Vec<ClientLog>,
    pub val_accuracy: f64,
    pub val_macro_f1: f64,
    pub val_weighted_f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FederatedRun {
    pub clients: usize,
    pub rounds: usize,
    pub local_epochs: usize,
    pub seed: u64,
    pub shard_sizes: Vec<usize>,
    pub shard_class_counts: Vec<[usize; NUM_CLASSES]>,
    pub round_logs: Vec<RoundLog>,
    pub final_report: EvalReport,
    #[serde(skip)]
    pub model: Option<LinearModel>,
}

impl FederatedRun {
    pub fn manifest_name(&self) -> String {
        format!("fedrun_N{}_R{}.json", self.clients, self.rounds)
    }
}

/// Full simulation: partition, then `rounds` x (local training on every
/// client, FedAvg), evaluating the global model on `val` after each round.
pub fn run_federated(
    train: &[FeatureVector],
    val: &[FeatureVector],
    dim: usize,
    cfg: &FedConfig,
    exec: Exec,
) -> Result<FederatedRun> {
    let shards = partition_stratified(train, cfg.clients, cfg.seed)?;
    let params = TrainParams {
        seed: cfg.seed,
        ..cfg.train
    };
    let mut global = GlobalModel {
        model: LinearModel::zeros(dim, params),
        round: 0,
    };
    let mut logs = Vec::with_capacity(cfg.rounds);
    for _ in 0..cfg.rounds {
        let updates = exec.map(&shards, |s| {
            local_train(&global, s, cfg.local_epochs, cfg.seed)
        });
        let updates: Vec<LocalUpdate> = updates
            .into_iter()
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .flatten()
            .collect();
        if updates.is_empty() {
            return Err(Error::InvalidArgument("every client shard is empty".into()));
        }
        let (models, sizes): (Vec<LinearModel>, Vec<usize>) =
            updates.iter().map(|u| (u.model.clone(), u.size)).unzip();
        let mut next = fedavg(&models, &sizes)?;
        next.vocab_hash = global.model.vocab_hash.clone();
        if !next.is_finite() {
            return Err(Error::Numeric(format!(
                "non-finite global model after round {}",
                global.round + 1
            )));
        }
        global = GlobalModel {
            model: next,
            round: global.round + 1,
        };
        let report = evaluate(&global.model, val, exec)?;
        logs.push(RoundLog {
            round: global.round,
            clients: updates
                .iter()
                .map(|u| ClientLog {
                    client_id: u.client_id,
                    size: u.size,
                    loss: u.loss,
                    accuracy: u.accuracy,
                })
                .collect(),
            val_accuracy: report.accuracy,
            val_macro_f1: report.macro_f1,
            val_weighted_f1: report.weighted_f1,
        });
    }
    let final_report = evaluate(&global.model, val, exec)?;
    Ok(FederatedRun {
        clients: cfg.clients,
        rounds: cfg.rounds,
        local_epochs: cfg.local_epochs,
        seed: cfg.seed,
        shard_sizes: shards.iter().map(ClientShard::len).collect(),
        shard_class_counts: shards.iter().map(|s| s.class_counts).collect(),
        round_logs: logs,
        final_report,
        model: Some(global.model),
    })
}
