//! Shapley token attributions for classifier logits.
//!
//! For the linear model the attribution is exact and closed form. The
//! permutation-sampling estimator works for any coalition value function
//! and is used to cross-check the exact path.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::sentilex::SentimentLabel;
use crate::textclf::{FeatureVector, LinearModel};
use crate::topicmodel::Vocabulary;

pub const DEFAULT_SAMPLES: usize = 2000;
pub const DEFAULT_SUBSET: usize = 500;
pub const EFFICIENCY_TOL: f64 = 1e-6;
const BLOCK: usize = 64;

/// Attribution over feature indices. `std_err` is empty for exact results.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureAttribution {
    pub features: Vec<usize>,
    pub phi: Vec<f64>,
    pub std_err: Vec<f64>,
    pub baseline_value: f64,
    pub prediction_value: f64,
}

impl FeatureAttribution {
    /// `|sum(phi) - (f(x) - f(baseline))|`
    pub fn efficiency_gap(&self) -> f64 {
        let total: f64 = self.phi.iter().sum();
        (total - (self.prediction_value - self.baseline_value)).abs()
    }

    pub fn phi_of(&self, feature: usize) -> Option<f64> {
        self.features
            .iter()
            .position(|&f| f == feature)
            .map(|k| self.phi[k])
    }

    pub fn into_attribution(
        self,
        id: &str,
        class: SentimentLabel,
        vocab: &Vocabulary,
    ) -> Attribution {
        Attribution {
            id: id.to_string(),
            class,
            tokens: self
                .features
                .iter()
                .zip(&self.phi)
                .map(|(&f, &phi)| TokenPhi {
                    token: vocab.token(f).to_string(),
                    phi,
                })
                .collect(),
            baseline_value: self.baseline_value,
            prediction_value: self.prediction_value,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenPhi {
    pub token: String,
    pub phi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attribution {
    pub id: String,
    pub class: SentimentLabel,
    pub tokens: Vec<TokenPhi>,
    pub baseline_value: f64,
    pub prediction_value: f64,
}

impl Attribution {
    pub fn efficiency_gap(&self) -> f64 {
        let total: f64 = self.tokens.iter().map(|t| t.phi).sum();
        (total - (self.prediction_value - self.baseline_value)).abs()
    }
}

/// Features that are nonzero in `x` or `baseline`, ascending.
fn players(x: &FeatureVector, baseline: &FeatureVector) -> Vec<usize> {
    let mut f: Vec<usize> = x
        .indices
        .iter()
        .chain(&baseline.indices)
        .map(|&i| i as usize)
        .collect();
    f.sort_unstable();
    f.dedup();
    f
}

/// Exact Shapley values of the class logit: `phi_j = W[class, j] * (x_j - b_j)`.
pub fn shapley_exact_linear(
    model: &LinearModel,
    x: &FeatureVector,
    class: SentimentLabel,
    baseline: &FeatureVector,
) -> Result<FeatureAttribution> {
    let prediction_value = model.class_logit(x, class)?;
    let baseline_value = model.class_logit(baseline, class)?;
    let features = players(x, baseline);
    let c = class.index();
    let phi = features
        .iter()
        .map(|&j| model.weight(c, j) * (x.get(j) - baseline.get(j)))
        .collect();
    Ok(FeatureAttribution {
        features,
        phi,
        std_err: Vec::new(),
        baseline_value,
        prediction_value,
    })
}

/// Class-logit value function over coalitions of `features`: members take
/// their value from `x`, the rest from `baseline`.
pub fn linear_value_fn<'a>(
    model: &'a LinearModel,
    class: SentimentLabel,
    x: &'a FeatureVector,
    baseline: &'a FeatureVector,
    features: &'a [usize],
) -> impl Fn(&[bool]) -> f64 + Sync + 'a {
    let c = class.index();
    let base = model.class_logit(baseline, class).unwrap_or(f64::NAN);
    move |coalition: &[bool]| {
        let mut v = base;
        for (&j, &on) in features.iter().zip(coalition) {
            if on {
                v += model.weight(c, j) * (x.get(j) - baseline.get(j));
            }
        }
        v
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: usize,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    fn merge(self, other: Moments) -> Moments {
        if self.n == 0 {
            return other;
        }
        if other.n == 0 {
            return self;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        Moments {
            n,
            mean: self.mean + delta * (other.n as f64 / n as f64),
            m2: self.m2 + other.m2 + delta * delta * (self.n as f64 * other.n as f64 / n as f64),
        }
    }

    fn std_err(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            (self.m2 / (self.n - 1) as f64 / self.n as f64).sqrt()
        }
    }
}

/// Monte Carlo permutation estimator. Permutations are drawn in fixed
/// blocks of 64, each with its own RNG stream, so the estimate is the same
/// whether blocks run sequentially or in parallel.
pub fn shapley_sampled<F>(
    value_fn: F,
    d: usize,
    samples: usize,
    seed: u64,
    exec: Exec,
) -> Result<FeatureAttribution>
where
    F: Fn(&[bool]) -> f64 + Sync,
{
    if d == 0 || samples == 0 {
        return Err(Error::InvalidArgument(
            "need d >= 1 and samples >= 1".into(),
        ));
    }
    let empty = value_fn(&vec![false; d]);
    let full = value_fn(&vec![true; d]);
    let blocks = samples.div_ceil(BLOCK);
    let per_block = exec.map_range(blocks, |b| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(b as u64);
        let count = BLOCK.min(samples - b * BLOCK);
        let mut moments = vec![Moments::default(); d];
        let mut order: Vec<usize> = (0..d).collect();
        let mut mask = vec![false; d];
        for _ in 0..count {
            order.shuffle(&mut rng);
            mask.iter_mut().for_each(|m| *m = false);
            let mut prev = empty;
            for &j in &order {
                mask[j] = true;
                let v = value_fn(&mask);
                moments[j].push(v - prev);
                prev = v;
            }
        }
        moments
    });
    let mut total = vec![Moments::default(); d];
    for block in per_block {
        for (t, m) in total.iter_mut().zip(block) {
            *t = t.merge(m);
        }
    }
    Ok(FeatureAttribution {
        features: (0..d).collect(),
        phi: total.iter().map(|m| m.mean).collect(),
        std_err: total.iter().map(Moments::std_err).collect(),
        baseline_value: empty,
        prediction_value: full,
    })
}

/// Sampled attribution of a linear model's class logit over the
/// non-baseline features of `x`.
pub fn shapley_sampled_linear(
    model: &LinearModel,
    x: &FeatureVector,
    class: SentimentLabel,
    baseline: &FeatureVector,
    samples: usize,
    seed: u64,
    exec: Exec,
) -> Result<FeatureAttribution> {
    model.class_logit(x, class)?;
    model.class_logit(baseline, class)?;
    let features = players(x, baseline);
    if features.is_empty() {
        let v = model.class_logit(x, class)?;
        return Ok(FeatureAttribution {
            features,
            phi: vec![],
            std_err: vec![],
            baseline_value: v,
            prediction_value: v,
        });
    }
    let f = linear_value_fn(model, class, x, baseline, &features);
    let mut out = shapley_sampled(f, features.len(), samples, seed, exec)?;
    out.features = features;
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Exact,
    Sampled,
}

/// Stable 64-bit FNV-1a, used to derive per-comment seeds.
fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

pub fn comment_seed(seed: u64, id: &str) -> u64 {
    seed ^ fnv1a(id.as_bytes())
}

/// Picks `size` example indices with `seed` (all of them when fewer exist),
/// returned in ascending order.
pub fn select_subset(n: usize, size: usize, seed: u64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    if size < n {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        idx.shuffle(&mut rng);
        idx.truncate(size);
        idx.sort_unstable();
    }
    idx
}

/// Attributes every example for each class in `classes` against the zero
/// baseline. Fails if any attribution violates efficiency.
#[allow(clippy::too_many_arguments)]
pub fn explain(
    model: &LinearModel,
    data: &[FeatureVector],
    vocab: &Vocabulary,
    classes: &[SentimentLabel],
    method: Method,
    samples: usize,
    seed: u64,
    exec: Exec,
) -> Result<Vec<Attribution>> {
    let baseline = FeatureVector::zeros();
    let per_example = exec.map(data, |x| -> Result<Vec<Attribution>> {
        classes
            .iter()
            .map(|&class| {
                let fa = match method {
                    Method::Exact => shapley_exact_linear(model, x, class, &baseline)?,
                    Method::Sampled => shapley_sampled_linear(
                        model,
                        x,
                        class,
                        &baseline,
                        samples,
                        comment_seed(seed, &x.id),
                        Exec::Sequential,
                    )?,
                };
                let gap = fa.efficiency_gap();
                if gap > EFFICIENCY_TOL {
                    return Err(Error::Numeric(format!(
                        "attribution for `{}` misses efficiency by {gap:e}",
                        x.id
                    )));
                }
                Ok(fa.into_attribution(&x.id, class, vocab))
            })
            .collect()
    });
    let mut out = Vec::new();
    for r in per_example {
        out.extend(r?);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassSummary {
    pub class: SentimentLabel,
    /// Tokens that raise the class logit: (token, mean phi), largest first.
    pub top_positive: Vec<(String, f64)>,
    /// Tokens that lower it: (token, mean phi), largest magnitude first.
    pub top_negative: Vec<(String, f64)>,
}

/// Corpus-level ranking of tokens by mean signed contribution to `class`,
/// averaged over the attributions in which each token appears.
pub fn class_summary(
    attributions: &[Attribution],
    class: SentimentLabel,
    k: usize,
) -> ClassSummary {
    let mut acc: BTreeMap<&str, (f64, usize)> = BTreeMap::new();
    for a in attributions.iter().filter(|a| a.class == class) {
        for t in &a.tokens {
            let e = acc.entry(&t.token).or_default();
            e.0 += t.phi;
            e.1 += 1;
        }
    }
    let means: Vec<(String, f64)> = acc
        .into_iter()
        .map(|(t, (s, n))| (t.to_string(), s / n as f64))
        .collect();
    let ranked = |keep: fn(f64) -> bool| {
        let mut v: Vec<(String, f64)> = means.iter().filter(|(_, m)| keep(*m)).cloned().collect();
        v.sort_by(|a, b| b.1.abs().total_cmp(&a.1.abs()).then_with(|| a.0.cmp(&b.0)));
        v.truncate(k);
        v
    };
    ClassSummary {
        class,
        top_positive: ranked(|m| m > 0.0),
        top_negative: ranked(|m| m < 0.0),
    }
}
