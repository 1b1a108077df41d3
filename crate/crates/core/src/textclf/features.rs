use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::CleanComment;
use crate::error::{Error, Result};
use crate::io;
use crate::sentilex::SentimentLabel;
use crate::topicmodel::{build_vocab, Vocabulary};

pub const DEFAULT_MAX_TOKENS: usize = 256;

/// Vocabulary plus smoothed idf weights `ln((1 + D) / (1 + df)) + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpace {
    pub vocab: Vocabulary,
    pub idf: Vec<f64>,
    pub max_tokens: usize,
    pub num_docs: usize,
}

/// Sparse feature vector; `indices` strictly increasing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    #[serde(default)]
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<SentimentLabel>,
    pub indices: Vec<u32>,
    pub values: Vec<f64>,
}

impl FeatureVector {
    pub fn zeros() -> Self {
        Self {
            id: String::new(),
            label: None,
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices
            .iter()
            .map(|&i| i as usize)
            .zip(self.values.iter().copied())
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn get(&self, index: usize) -> f64 {
        self.indices
            .binary_search(&(index as u32))
            .map_or(0.0, |k| self.values[k])
    }

    pub fn to_dense(&self, dim: usize) -> Vec<f64> {
        let mut out = vec![0.0; dim];
        for (i, v) in self.iter() {
            out[i] = v;
        }
        out
    }

    pub fn with_label(mut self, label: SentimentLabel) -> Self {
        self.label = Some(label);
        self
    }
}

impl FeatureSpace {
    pub fn new(vocab: Vocabulary, num_docs: usize, max_tokens: usize) -> Result<Self> {
        if max_tokens == 0 {
            return Err(Error::InvalidArgument("max_tokens must be >= 1".into()));
        }
        let idf = (0..vocab.len())
            .map(|i| ((1.0 + num_docs as f64) / (1.0 + vocab.doc_freq(i) as f64)).ln() + 1.0)
            .collect();
        Ok(Self {
            vocab,
            idf,
            max_tokens,
            num_docs,
        })
    }

    /// Builds the vocabulary and idf table from the given documents.
    pub fn fit(corpus: &[CleanComment], min_df: usize, max_tokens: usize) -> Result<Self> {
        let vocab = build_vocab(corpus, min_df)?;
        let n = corpus.iter().filter(|c| !c.dropped).count();
        Self::new(vocab, n, max_tokens)
    }

    pub fn dim(&self) -> usize {
        self.vocab.len()
    }

    /// Hex SHA-256 over the vocabulary tokens in index order.
    pub fn vocab_hash(&self) -> String {
        let mut h = Sha256::new();
        for t in self.vocab.tokens() {
            h.update(t.as_bytes());
            h.update([0u8]);
        }
        hex::encode(h.finalize())
    }

    /// Unnormalized tf-idf over the first `max_tokens` of
    /// `tokens ++ keywords`; out-of-vocabulary tokens are ignored.
    pub fn tfidf<S: AsRef<str>, K: AsRef<str>>(
        &self,
        tokens: &[S],
        keywords: &[K],
    ) -> BTreeMap<usize, f64> {
        let mut tf: BTreeMap<usize, u32> = BTreeMap::new();
        let stream = tokens
            .iter()
            .map(AsRef::as_ref)
            .chain(keywords.iter().map(AsRef::as_ref))
            .take(self.max_tokens);
        for t in stream {
            if let Some(i) = self.vocab.get(t) {
                *tf.entry(i).or_default() += 1;
            }
        }
        tf.into_iter()
            .map(|(i, n)| (i, n as f64 * self.idf[i]))
            .collect()
    }

    /// L2-normalized tf-idf vector. All-OOV input gives the zero vector.
    pub fn featurize<S: AsRef<str>, K: AsRef<str>>(
        &self,
        tokens: &[S],
        keywords: &[K],
    ) -> FeatureVector {
        let raw = self.tfidf(tokens, keywords);
        let norm = raw.values().map(|v| v * v).sum::<f64>().sqrt();
        let (indices, values) = raw
            .into_iter()
            .map(|(i, v)| (i as u32, if norm > 0.0 { v / norm } else { 0.0 }))
            .unzip();
        FeatureVector {
            id: String::new(),
            label: None,
            indices,
            values,
        }
    }

    pub fn featurize_comment<K: AsRef<str>>(
        &self,
        c: &CleanComment,
        keywords: &[K],
    ) -> FeatureVector {
        let mut fv = self.featurize(&c.tokens, keywords);
        fv.id = c.id.clone();
        fv
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        io::write_json(path, self)
    }

    pub fn load(path: &Path) -> Result<Self> {
        io::read_json(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(id: &str, toks: &[&str]) -> CleanComment {
        CleanComment {
            id: id.into(),
            text: toks.join(" "),
            tokens: toks.iter().map(|s| s.to_string()).collect(),
            dropped: false,
            drop_reason: None,
        }
    }

    fn fixture() -> FeatureSpace {
        let corpus = [
            doc("1", &["war", "peace", "talks"]),
            doc("2", &["war", "missile"]),
            doc("3", &["peace", "prayer"]),
        ];
        FeatureSpace::fit(&corpus, 1, DEFAULT_MAX_TOKENS).unwrap()
    }

    #[test]
    fn all_oov_is_zero_vector() {
        let fv = fixture().featurize(&["zzz", "qqq"], &[] as &[&str]);
        assert_eq!(fv.nnz(), 0);
        assert_eq!(fv.norm(), 0.0);
    }

    #[test]
    fn single_token_has_unit_weight() {
        let fv = fixture().featurize(&["talks"], &[] as &[&str]);
        assert_eq!(fv.values, [1.0]);
    }

    #[test]
    fn hand_computed_tfidf() {
        // D = 3; df(war) = 2, df(peace) = 2, df(talks) = 1, df(missile) = 1
        let space = fixture();
        let idf2 = (4.0f64 / 3.0).ln() + 1.0;
        let idf1 = 2.0f64.ln() + 1.0;
        let war = space.vocab.get("war").unwrap();
        let talks = space.vocab.get("talks").unwrap();
        let missile = space.vocab.get("missile").unwrap();
        assert!((space.idf[war] - idf2).abs() < 1e-15);
        assert!((space.idf[talks] - idf1).abs() < 1e-15);

        let without = space.tfidf(&["war", "war", "talks"], &[] as &[&str]);
        let with = space.tfidf(&["war", "war", "talks"], &["missile", "war"]);
        assert!((without[&war] - 2.0 * idf2).abs() < 1e-15);
        assert!((with[&war] - 3.0 * idf2).abs() < 1e-15);
        assert!((with[&missile] - idf1).abs() < 1e-15);
        assert_eq!(with[&talks], without[&talks]);
        // the raw vectors differ exactly on the keyword indices
        let differing: Vec<usize> = with
            .keys()
            .filter(|k| without.get(k) != with.get(k))
            .copied()
            .collect();
        let mut expected = vec![war, missile];
        expected.sort();
        assert_eq!(differing, expected);

        let fv = space.featurize(&["war", "war", "talks"], &["missile", "war"]);
        assert!((fv.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn max_tokens_truncates_stream() {
        let mut space = fixture();
        space.max_tokens = 2;
        let fv = space.featurize(&["war", "peace"], &["missile"]);
        assert_eq!(fv.nnz(), 2);
        assert_eq!(fv.get(space.vocab.get("missile").unwrap()), 0.0);
        assert!(FeatureSpace::new(space.vocab.clone(), 3, 0).is_err());
    }
}
