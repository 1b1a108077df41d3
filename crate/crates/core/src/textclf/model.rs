use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::features::FeatureVector;
use crate::error::{Error, Result};
use crate::io;
use crate::sentilex::SentimentLabel;
use crate::topicmodel::argmax;

pub const NUM_CLASSES: usize = 3;
pub const SNAPSHOT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainParams {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub l2: f64,
    pub seed: u64,
}

impl Default for TrainParams {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            epochs: 10,
            batch_size: 32,
            l2: 1e-4,
            seed: 42,
        }
    }
}

/// Softmax regression over a fixed Negative/Neutral/Positive class order.
/// `weights` is row-major, one row of length `dim` per class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub version: u32,
    pub classes: [SentimentLabel; NUM_CLASSES],
    pub dim: usize,
    pub weights: Vec<f64>,
    pub bias: [f64; NUM_CLASSES],
    pub params: TrainParams,
    #[serde(default)]
    pub vocab_hash: String,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub label: SentimentLabel,
    pub probs: [f64; NUM_CLASSES],
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub weights: Vec<f64>,
    pub bias: [f64; NUM_CLASSES],
}

fn softmax(logits: [f64; NUM_CLASSES]) -> [f64; NUM_CLASSES] {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps = logits.map(|z| (z - max).exp());
    let total: f64 = exps.iter().sum();
    exps.map(|e| e / total)
}

impl LinearModel {
    pub fn zeros(dim: usize, params: TrainParams) -> Self {
        Self {
            version: SNAPSHOT_VERSION,
            classes: SentimentLabel::ALL,
            dim,
            weights: vec![0.0; NUM_CLASSES * dim],
            bias: [0.0; NUM_CLASSES],
            params,
            vocab_hash: String::new(),
        }
    }

    pub fn row(&self, class: usize) -> &[f64] {
        &self.weights[class * self.dim..(class + 1) * self.dim]
    }

    pub fn weight(&self, class: usize, feature: usize) -> f64 {
        self.weights[class * self.dim + feature]
    }

    fn check_dim(&self, x: &FeatureVector) -> Result<()> {
        match x.indices.last() {
            Some(&i) if i as usize >= self.dim => Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: i as usize + 1,
            }),
            _ => Ok(()),
        }
    }

    fn logits_unchecked(&self, x: &FeatureVector) -> [f64; NUM_CLASSES] {
        let mut z = self.bias;
        for (c, zc) in z.iter_mut().enumerate() {
            let row = self.row(c);
            *zc += x.iter().map(|(i, v)| row[i] * v).sum::<f64>();
        }
        z
    }

    pub fn logits(&self, x: &FeatureVector) -> Result<[f64; NUM_CLASSES]> {
        self.check_dim(x)?;
        Ok(self.logits_unchecked(x))
    }

    /// Logit of one class; the value function used for attributions.
    pub fn class_logit(&self, x: &FeatureVector, class: SentimentLabel) -> Result<f64> {
        Ok(self.logits(x)?[class.index()])
    }

    pub fn predict(&self, x: &FeatureVector) -> Result<Prediction> {
        let z = self.logits(x)?;
        let probs = softmax(z);
        let label = SentimentLabel::from_index(argmax(&z)).expect("three classes");
        Ok(Prediction { label, probs })
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().chain(&self.bias).all(|v| v.is_finite())
    }

    pub fn num_params(&self) -> usize {
        self.weights.len() + NUM_CLASSES
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        io::write_json(path, self)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let m: Self = io::read_json(path)?;
        if m.version != SNAPSHOT_VERSION {
            return Err(Error::InvalidArgument(format!(
                "unsupported model version {}",
                m.version
            )));
        }
        if m.classes != SentimentLabel::ALL {
            return Err(Error::InvalidArgument(format!(
                "unexpected class order {:?}",
                m.classes
            )));
        }
        if m.weights.len() != NUM_CLASSES * m.dim {
            return Err(Error::DimensionMismatch {
                expected: NUM_CLASSES * m.dim,
                actual: m.weights.len(),
            });
        }
        Ok(m)
    }
}

fn label_of(x: &FeatureVector) -> Result<SentimentLabel> {
    x.label
        .ok_or_else(|| Error::InvalidArgument(format!("example `{}` has no label", x.id)))
}

/// Mean cross-entropy over `batch` plus `l2 / 2 * ||W||^2`, with its
/// gradient. The bias is not penalized.
pub fn loss_and_grad(
    model: &LinearModel,
    batch: &[&FeatureVector],
    l2: f64,
) -> Result<(f64, Gradient)> {
    let mut grad = Gradient {
        weights: vec![0.0; model.weights.len()],
        bias: [0.0; NUM_CLASSES],
    };
    let loss = accumulate(model, batch, l2, &mut grad)?;
    Ok((loss, grad))
}

fn accumulate(
    model: &LinearModel,
    batch: &[&FeatureVector],
    l2: f64,
    grad: &mut Gradient,
) -> Result<f64> {
    grad.weights.iter_mut().for_each(|g| *g = 0.0);
    grad.bias = [0.0; NUM_CLASSES];
    let scale = 1.0 / batch.len() as f64;
    let mut loss = 0.0;
    for x in batch {
        model.check_dim(x)?;
        let y = label_of(x)?.index();
        let p = softmax(model.logits_unchecked(x));
        loss -= p[y].max(f64::MIN_POSITIVE).ln();
        for (c, &pc) in p.iter().enumerate() {
            let delta = (pc - if c == y { 1.0 } else { 0.0 }) * scale;
            grad.bias[c] += delta;
            let row = &mut grad.weights[c * model.dim..(c + 1) * model.dim];
            for (i, v) in x.iter() {
                row[i] += delta * v;
            }
        }
    }
    let mut penalty = 0.0;
    if l2 != 0.0 {
        for (g, w) in grad.weights.iter_mut().zip(&model.weights) {
            *g += l2 * w;
            penalty += w * w;
        }
    }
    Ok(loss * scale + 0.5 * l2 * penalty)
}

/// Shuffle RNG of one training run. Centralized training uses stream 0.
pub fn training_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Runs `epochs` passes of shuffled mini-batch gradient descent in place.
/// Returns the mean batch loss of the last epoch (0 when `epochs == 0`).
pub fn fit_epochs(
    model: &mut LinearModel,
    data: &[FeatureVector],
    epochs: usize,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    let params = model.params;
    if params.batch_size == 0 {
        return Err(Error::InvalidArgument("batch_size must be >= 1".into()));
    }
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut grad = Gradient {
        weights: vec![0.0; model.weights.len()],
        bias: [0.0; NUM_CLASSES],
    };
    let mut last = 0.0;
    for _ in 0..epochs {
        order.shuffle(rng);
        let mut total = 0.0;
        let mut batches = 0;
        for chunk in order.chunks(params.batch_size) {
            let batch: Vec<&FeatureVector> = chunk.iter().map(|&i| &data[i]).collect();
            total += accumulate(model, &batch, params.l2, &mut grad)?;
            batches += 1;
            for (w, g) in model.weights.iter_mut().zip(&grad.weights) {
                *w -= params.learning_rate * g;
            }
            for (b, g) in model.bias.iter_mut().zip(&grad.bias) {
                *b -= params.learning_rate * g;
            }
        }
        last = if batches > 0 {
            total / batches as f64
        } else {
            0.0
        };
        if !model.is_finite() {
            return Err(Error::Numeric(
                "non-finite parameters during training".into(),
            ));
        }
    }
    Ok(last)
}

pub fn class_counts(data: &[FeatureVector]) -> [usize; NUM_CLASSES] {
    let mut counts = [0; NUM_CLASSES];
    for x in data {
        if let Some(l) = x.label {
            counts[l.index()] += 1;
        }
    }
    counts
}

/// Trains from zero initialization. Every class needs at least one example.
pub fn train(data: &[FeatureVector], dim: usize, params: TrainParams) -> Result<LinearModel> {
    let counts = class_counts(data);
    if counts.contains(&0) {
        return Err(Error::MissingClass(counts));
    }
    let mut model = LinearModel::zeros(dim, params);
    let mut rng = training_rng(params.seed, 0);
    fit_epochs(&mut model, data, params.epochs, &mut rng)?;
    Ok(model)
}
