//! Glue between cleaned comments, labels and classifier inputs.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{clean_corpus, CleanComment, CorpusCounts, PreprocessConfig, RawComment};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::sentilex::{label_corpus, Lexicon, SentimentLabel};
use crate::synth;
use crate::textclf::{FeatureSpace, FeatureVector, DEFAULT_MAX_TOKENS, NUM_CLASSES};
use crate::topicmodel::DEFAULT_MIN_DF;

pub const DEFAULT_VAL_FRACTION: f64 = 0.2;

/// Labeled feature vectors for every comment in `corpus`, in corpus order.
/// Comments without a label are an error; `keywords` (by comment id) are
/// appended to the token stream when present.
pub fn labeled_features(
    space: &FeatureSpace,
    corpus: &[CleanComment],
    labels: &HashMap<String, SentimentLabel>,
    keywords: Option<&HashMap<String, Vec<String>>>,
    exec: Exec,
) -> Result<Vec<FeatureVector>> {
    let empty = Vec::new();
    exec.map(corpus, |c| {
        let label = *labels
            .get(&c.id)
            .ok_or_else(|| Error::InvalidArgument(format!("comment `{}` has no label", c.id)))?;
        let kw = keywords.and_then(|k| k.get(&c.id)).unwrap_or(&empty);
        Ok(space.featurize_comment(c, kw).with_label(label))
    })
    .into_iter()
    .collect()
}

/// Per-class holdout: each class is shuffled with `seed` and its first
/// `round(n_c * val_fraction)` members go to validation. Both halves keep
/// the original relative order.
pub fn stratified_split(
    data: &[FeatureVector],
    val_fraction: f64,
    seed: u64,
) -> Result<(Vec<FeatureVector>, Vec<FeatureVector>)> {
    if !(0.0..1.0).contains(&val_fraction) {
        return Err(Error::InvalidArgument(format!(
            "validation fraction must be in [0, 1), got {val_fraction}"
        )));
    }
    let mut by_class: [Vec<usize>; NUM_CLASSES] = Default::default();
    for (i, x) in data.iter().enumerate() {
        let label = x
            .label
            .ok_or_else(|| Error::InvalidArgument(format!("example `{}` has no label", x.id)))?;
        by_class[label.index()].push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut in_val = vec![false; data.len()];
    for members in by_class.iter_mut() {
        members.shuffle(&mut rng);
        let take = (members.len() as f64 * val_fraction).round() as usize;
        for &i in &members[..take] {
            in_val[i] = true;
        }
    }
    let (val, train): (Vec<_>, Vec<_>) = data.iter().cloned().zip(in_val).partition(|(_, v)| *v);
    Ok((
        train.into_iter().map(|(x, _)| x).collect(),
        val.into_iter().map(|(x, _)| x).collect(),
    ))
}

/// A fully prepared synthetic classification task.
pub struct SyntheticTask {
    pub counts: CorpusCounts,
    pub space: FeatureSpace,
    pub corpus: Vec<CleanComment>,
    pub train: Vec<FeatureVector>,
    pub val: Vec<FeatureVector>,
}

/// Generates `n` synthetic comments, cleans and labels them with the bundled
/// tables, and splits tf-idf vectors 80/20. Topic keywords are not used.
pub fn synthetic_task(n: usize, seed: u64, exec: Exec) -> Result<SyntheticTask> {
    task_from_comments(&synth::comments(n, seed), seed, exec)
}

/// Same preparation as [`synthetic_task`] for comments obtained elsewhere.
pub fn task_from_comments(raw: &[RawComment], seed: u64, exec: Exec) -> Result<SyntheticTask> {
    let (corpus, counts) = clean_corpus(raw, &PreprocessConfig::bundled(), exec);
    let labels: HashMap<String, SentimentLabel> = label_corpus(raw, &Lexicon::bundled(), exec)
        .into_iter()
        .map(|(id, _, l)| (id, l))
        .collect();
    let space = FeatureSpace::fit(&corpus, DEFAULT_MIN_DF, DEFAULT_MAX_TOKENS)?;
    let data = labeled_features(&space, &corpus, &labels, None, exec)?;
    let (train, val) = stratified_split(&data, DEFAULT_VAL_FRACTION, seed)?;
    Ok(SyntheticTask {
        counts,
        space,
        corpus,
        train,
        val,
    })
}
