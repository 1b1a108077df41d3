//! Latent Dirichlet Allocation fitted by collapsed Gibbs sampling.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::CleanComment;
use crate::error::{Error, Result};
use crate::io;

pub const DEFAULT_K: usize = 10;
pub const DEFAULT_BETA: f64 = 0.01;
pub const DEFAULT_ITERATIONS: usize = 500;
pub const DEFAULT_MIN_DF: usize = 2;
pub const DEFAULT_KEYWORDS: usize = 10;
pub const SNAPSHOT_VERSION: u32 = 1;

pub fn default_alpha(k: usize) -> f64 {
    50.0 / k as f64
}

/// Dense token index, sorted lexicographically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "VocabRepr", into = "VocabRepr")]
pub struct Vocabulary {
    tokens: Vec<String>,
    doc_freq: Vec<usize>,
    index: HashMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
struct VocabRepr {
    tokens: Vec<String>,
    doc_freq: Vec<usize>,
}

impl From<VocabRepr> for Vocabulary {
    fn from(r: VocabRepr) -> Self {
        Vocabulary::from_parts(r.tokens, r.doc_freq)
    }
}

impl From<Vocabulary> for VocabRepr {
    fn from(v: Vocabulary) -> Self {
        VocabRepr {
            tokens: v.tokens,
            doc_freq: v.doc_freq,
        }
    }
}

impl Vocabulary {
    pub fn from_parts(tokens: Vec<String>, doc_freq: Vec<usize>) -> Self {
        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Self {
            tokens,
            doc_freq,
            index,
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn get(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn token(&self, index: usize) -> &str {
        &self.tokens[index]
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn doc_freq(&self, index: usize) -> usize {
        self.doc_freq[index]
    }

    /// Maps tokens to indices, dropping out-of-vocabulary ones.
    pub fn encode<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<usize> {
        tokens.iter().filter_map(|t| self.get(t.as_ref())).collect()
    }
}

/// Indexes every token whose document frequency is at least `min_df`.
/// Dropped comments are ignored.
pub fn build_vocab(corpus: &[CleanComment], min_df: usize) -> Result<Vocabulary> {
    let docs: Vec<&CleanComment> = corpus.iter().filter(|c| !c.dropped).collect();
    if docs.is_empty() {
        return Err(Error::EmptyVocabulary("corpus has no documents".into()));
    }
    let mut df: BTreeMap<&str, usize> = BTreeMap::new();
    for doc in &docs {
        let mut uniq: Vec<&str> = doc.tokens.iter().map(String::as_str).collect();
        uniq.sort_unstable();
        uniq.dedup();
        for t in uniq {
            *df.entry(t).or_default() += 1;
        }
    }
    let (tokens, doc_freq): (Vec<String>, Vec<usize>) = df
        .into_iter()
        .filter(|&(_, n)| n >= min_df)
        .map(|(t, n)| (t.to_string(), n))
        .unzip();
    if tokens.is_empty() {
        return Err(Error::EmptyVocabulary(format!(
            "no token occurs in at least {min_df} of {} documents",
            docs.len()
        )));
    }
    Ok(Vocabulary::from_parts(tokens, doc_freq))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LdaParams {
    pub k: usize,
    pub alpha: f64,
    pub beta: f64,
    pub iterations: usize,
    pub seed: u64,
}

impl LdaParams {
    pub fn new(k: usize, iterations: usize, seed: u64) -> Self {
        Self {
            k,
            alpha: default_alpha(k),
            beta: DEFAULT_BETA,
            iterations,
            seed,
        }
    }
}

impl Default for LdaParams {
    fn default() -> Self {
        Self::new(DEFAULT_K, DEFAULT_ITERATIONS, 42)
    }
}

/// Collapsed Gibbs sampler state. Exposed so callers can observe the count
/// tables between sweeps; [`fit_lda`] drives it to completion.
pub struct LdaSampler {
    params: LdaParams,
    vocab_size: usize,
    docs: Vec<Vec<usize>>,
    assignments: Vec<Vec<usize>>,
    doc_topic: Vec<Vec<u32>>,
    topic_word: Vec<Vec<u32>>,
    topic_total: Vec<u32>,
    rng: ChaCha8Rng,
    sweeps: usize,
}

impl LdaSampler {
    /// `docs` holds vocabulary indices; every doc must be non-empty.
    pub fn new(docs: Vec<Vec<usize>>, vocab_size: usize, params: LdaParams) -> Result<Self> {
        if params.k == 0 {
            return Err(Error::InvalidArgument("K must be >= 1".into()));
        }
        if !(params.alpha > 0.0 && params.beta > 0.0) {
            return Err(Error::InvalidArgument(
                "alpha and beta must be positive".into(),
            ));
        }
        if let Some(d) = docs.iter().position(Vec::is_empty) {
            return Err(Error::InvalidArgument(format!(
                "document {d} has no tokens"
            )));
        }
        if let Some(&w) = docs.iter().flatten().find(|&&w| w >= vocab_size) {
            return Err(Error::OutOfRange {
                index: w,
                len: vocab_size,
            });
        }
        let k = params.k;
        let total_tokens: usize = docs.iter().map(Vec::len).sum();
        if k > total_tokens {
            log::warn!("K = {k} exceeds the {total_tokens} token occurrences in the corpus");
        }
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        let mut doc_topic = vec![vec![0u32; k]; docs.len()];
        let mut topic_word = vec![vec![0u32; vocab_size]; k];
        let mut topic_total = vec![0u32; k];
        let assignments: Vec<Vec<usize>> = docs
            .iter()
            .enumerate()
            .map(|(d, doc)| {
                doc.iter()
                    .map(|&w| {
                        let z = rng.gen_range(0..k);
                        doc_topic[d][z] += 1;
                        topic_word[z][w] += 1;
                        topic_total[z] += 1;
                        z
                    })
                    .collect()
            })
            .collect();
        Ok(Self {
            params,
            vocab_size,
            docs,
            assignments,
            doc_topic,
            topic_word,
            topic_total,
            rng,
            sweeps: 0,
        })
    }

    /// One full pass resampling every token's topic.
    pub fn sweep(&mut self) {
        let k = self.params.k;
        let alpha = self.params.alpha;
        let beta = self.params.beta;
        let vbeta = self.vocab_size as f64 * beta;
        let mut weights = vec![0.0; k];
        for d in 0..self.docs.len() {
            for n in 0..self.docs[d].len() {
                let w = self.docs[d][n];
                let old = self.assignments[d][n];
                self.doc_topic[d][old] -= 1;
                self.topic_word[old][w] -= 1;
                self.topic_total[old] -= 1;

                let mut total = 0.0;
                for (t, wt) in weights.iter_mut().enumerate() {
                    let p = (self.doc_topic[d][t] as f64 + alpha)
                        * (self.topic_word[t][w] as f64 + beta)
                        / (self.topic_total[t] as f64 + vbeta);
                    total += p;
                    *wt = total;
                }
                let u = self.rng.gen::<f64>() * total;
                let new = weights.iter().position(|&c| u < c).unwrap_or(k - 1);

                self.assignments[d][n] = new;
                self.doc_topic[d][new] += 1;
                self.topic_word[new][w] += 1;
                self.topic_total[new] += 1;
            }
        }
        self.sweeps += 1;
    }

    pub fn sweeps(&self) -> usize {
        self.sweeps
    }

    pub fn total_tokens(&self) -> usize {
        self.docs.iter().map(Vec::len).sum()
    }

    /// True when every count table agrees with the per-token assignments.
    pub fn counts_consistent(&self) -> bool {
        let n = self.total_tokens() as u64;
        let topic_sum: u64 = self.topic_total.iter().map(|&c| c as u64).sum();
        let word_sum: u64 = self.topic_word.iter().flatten().map(|&c| c as u64).sum();
        let doc_sum: u64 = self.doc_topic.iter().flatten().map(|&c| c as u64).sum();
        if topic_sum != n || word_sum != n || doc_sum != n {
            return false;
        }
        let rows_ok = self
            .topic_word
            .iter()
            .zip(&self.topic_total)
            .all(|(row, &tot)| row.iter().map(|&c| c as u64).sum::<u64>() == tot as u64);
        let docs_ok = self
            .doc_topic
            .iter()
            .zip(&self.docs)
            .all(|(row, doc)| row.iter().map(|&c| c as usize).sum::<usize>() == doc.len());
        rows_ok && docs_ok
    }

    pub fn phi(&self) -> Vec<Vec<f64>> {
        let beta = self.params.beta;
        let vbeta = self.vocab_size as f64 * beta;
        self.topic_word
            .iter()
            .zip(&self.topic_total)
            .map(|(row, &tot)| {
                let denom = tot as f64 + vbeta;
                row.iter().map(|&c| (c as f64 + beta) / denom).collect()
            })
            .collect()
    }

    pub fn theta(&self) -> Vec<Vec<f64>> {
        let alpha = self.params.alpha;
        let kalpha = self.params.k as f64 * alpha;
        self.doc_topic
            .iter()
            .zip(&self.docs)
            .map(|(row, doc)| {
                let denom = doc.len() as f64 + kalpha;
                row.iter().map(|&c| (c as f64 + alpha) / denom).collect()
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicModel {
    pub version: u32,
    pub k: usize,
    pub alpha: f64,
    pub beta: f64,
    pub seed: u64,
    pub iterations: usize,
    pub vocab: Vocabulary,
    /// Ids of the documents the model was fitted on, row order of `theta`.
    pub doc_ids: Vec<String>,
    /// Documents left out because none of their tokens is in the vocabulary.
    pub skipped: Vec<String>,
    pub phi: Vec<Vec<f64>>,
    pub theta: Vec<Vec<f64>>,
    /// Vocabulary indices of each fitted document.
    pub docs: Vec<Vec<u32>>,
    /// Final topic of every token, parallel to `docs`.
    pub assignments: Vec<Vec<u32>>,
}

/// Fits LDA on the non-dropped comments of `corpus`. Documents with no
/// in-vocabulary token are skipped and listed in `skipped`.
pub fn fit_lda(
    corpus: &[CleanComment],
    vocab: &Vocabulary,
    params: LdaParams,
) -> Result<TopicModel> {
    fit_lda_observed(corpus, vocab, params, |_| {})
}

/// Same as [`fit_lda`], calling `observe` after every sweep.
pub fn fit_lda_observed<F: FnMut(&LdaSampler)>(
    corpus: &[CleanComment],
    vocab: &Vocabulary,
    params: LdaParams,
    mut observe: F,
) -> Result<TopicModel> {
    if params.iterations == 0 {
        return Err(Error::InvalidArgument("iterations must be >= 1".into()));
    }
    let mut doc_ids = Vec::new();
    let mut skipped = Vec::new();
    let mut docs = Vec::new();
    for c in corpus.iter().filter(|c| !c.dropped) {
        let encoded = vocab.encode(&c.tokens);
        if encoded.is_empty() {
            skipped.push(c.id.clone());
        } else {
            doc_ids.push(c.id.clone());
            docs.push(encoded);
        }
    }
    if !skipped.is_empty() {
        log::info!(
            "{} documents without in-vocabulary tokens skipped",
            skipped.len()
        );
    }
    if docs.is_empty() {
        return Err(Error::InvalidArgument(
            "no document has an in-vocabulary token".into(),
        ));
    }
    let mut sampler = LdaSampler::new(docs, vocab.len(), params)?;
    for _ in 0..params.iterations {
        sampler.sweep();
        observe(&sampler);
    }
    Ok(TopicModel {
        version: SNAPSHOT_VERSION,
        k: params.k,
        alpha: params.alpha,
        beta: params.beta,
        seed: params.seed,
        iterations: params.iterations,
        vocab: vocab.clone(),
        doc_ids,
        skipped,
        phi: sampler.phi(),
        theta: sampler.theta(),
        docs: sampler
            .docs
            .iter()
            .map(|d| d.iter().map(|&w| w as u32).collect())
            .collect(),
        assignments: sampler
            .assignments
            .iter()
            .map(|a| a.iter().map(|&z| z as u32).collect())
            .collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicAssignment {
    pub id: String,
    pub dominant_topic: usize,
    pub topic_keywords: Vec<String>,
}

/// Index of the largest entry, lowest index on ties.
pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = i;
        }
    }
    best
}

impl TopicModel {
    pub fn num_docs(&self) -> usize {
        self.theta.len()
    }

    pub fn top_keywords(&self, topic: usize, m: usize) -> Result<Vec<String>> {
        let row = self.phi.get(topic).ok_or(Error::OutOfRange {
            index: topic,
            len: self.k,
        })?;
        let mut idx: Vec<usize> = (0..row.len()).collect();
        idx.sort_by(|&a, &b| {
            row[b]
                .total_cmp(&row[a])
                .then_with(|| self.vocab.token(a).cmp(self.vocab.token(b)))
        });
        Ok(idx
            .into_iter()
            .take(m)
            .map(|i| self.vocab.token(i).to_string())
            .collect())
    }

    pub fn dominant_topic(&self, doc_index: usize, m: usize) -> Result<TopicAssignment> {
        let row = self.theta.get(doc_index).ok_or(Error::OutOfRange {
            index: doc_index,
            len: self.num_docs(),
        })?;
        let topic = argmax(row);
        Ok(TopicAssignment {
            id: self.doc_ids[doc_index].clone(),
            dominant_topic: topic,
            topic_keywords: self.top_keywords(topic, m)?,
        })
    }

    pub fn assign_all(&self, m: usize) -> Result<Vec<TopicAssignment>> {
        (0..self.num_docs())
            .map(|d| self.dominant_topic(d, m))
            .collect()
    }

    /// Per-token log likelihood `sum log sum_k theta_dk phi_kw` over the
    /// fitted documents.
    pub fn log_likelihood(&self) -> f64 {
        let mut ll = 0.0;
        for (theta, doc) in self.theta.iter().zip(&self.docs) {
            for &w in doc {
                let p: f64 = (0..self.k)
                    .map(|t| theta[t] * self.phi[t][w as usize])
                    .sum();
                ll += p.ln();
            }
        }
        ll
    }

    /// Topic-token count table rebuilt from the stored assignments.
    pub fn topic_word_counts(&self) -> Vec<Vec<u32>> {
        let mut counts = vec![vec![0u32; self.vocab.len()]; self.k];
        for (doc, z) in self.docs.iter().zip(&self.assignments) {
            for (&w, &t) in doc.iter().zip(z) {
                counts[t as usize][w as usize] += 1;
            }
        }
        counts
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        io::write_json(path, self)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let model: Self = io::read_json(path)?;
        if model.version != SNAPSHOT_VERSION {
            return Err(Error::InvalidArgument(format!(
                "unsupported topic model version {}",
                model.version
            )));
        }
        Ok(model)
    }
}
