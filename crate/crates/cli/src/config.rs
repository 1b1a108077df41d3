//! Pipeline configuration: a TOML file whose values command-line flags can
//! override. Relative paths in the file resolve against the file's directory.

use std::path::{Path, PathBuf};

use fedsent_core::dataset::DEFAULT_VAL_FRACTION;
use fedsent_core::fednet::{DEFAULT_LOCAL_EPOCHS, DEFAULT_ROUNDS};
use fedsent_core::shapx::{Method, DEFAULT_SAMPLES, DEFAULT_SUBSET};
use fedsent_core::textclf::{TrainParams, DEFAULT_MAX_TOKENS};
use fedsent_core::topicmodel::{
    default_alpha, DEFAULT_BETA, DEFAULT_ITERATIONS, DEFAULT_K, DEFAULT_KEYWORDS, DEFAULT_MIN_DF,
};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub input: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub assets: AssetPaths,
    pub preprocess: PreprocessSection,
    pub topics: TopicSection,
    pub classifier: ClassifierSection,
    pub federation: FederationSection,
    pub explain: ExplainSection,
    pub report: ReportSection,
}

/// Table overrides; `None` uses the copy compiled into the binary.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AssetPaths {
    pub lexicon: Option<PathBuf>,
    pub boosters: Option<PathBuf>,
    pub negations: Option<PathBuf>,
    pub stopwords: Option<PathBuf>,
    pub negation_whitelist: Option<PathBuf>,
    pub emoji: Option<PathBuf>,
    pub lemmas: Option<PathBuf>,
    pub topic_names: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PreprocessSection {
    pub min_tokens: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TopicSection {
    pub k: usize,
    pub iterations: usize,
    pub min_df: usize,
    pub keywords: usize,
    pub alpha: Option<f64>,
    pub beta: f64,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifierSection {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub l2: f64,
    pub max_tokens: usize,
    pub val_fraction: f64,
    /// How many of the dominant topic's keywords to append to each comment
    /// before featurizing; 0 disables.
    pub topic_keywords: usize,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FederationSection {
    pub clients: Vec<usize>,
    pub rounds: usize,
    pub local_epochs: usize,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExplainSection {
    pub method: Method,
    pub samples: usize,
    pub subset: usize,
    pub top: usize,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportSection {
    pub svg: bool,
    pub wordfreq_top: Option<usize>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seed: DEFAULT_SEED,
            input: None,
            out: None,
            assets: AssetPaths::default(),
            preprocess: PreprocessSection::default(),
            topics: TopicSection::default(),
            classifier: ClassifierSection::default(),
            federation: FederationSection::default(),
            explain: ExplainSection::default(),
            report: ReportSection::default(),
        }
    }
}

impl Default for PreprocessSection {
    fn default() -> Self {
        Self { min_tokens: 1 }
    }
}

impl Default for TopicSection {
    fn default() -> Self {
        Self {
            k: DEFAULT_K,
            iterations: DEFAULT_ITERATIONS,
            min_df: DEFAULT_MIN_DF,
            keywords: DEFAULT_KEYWORDS,
            alpha: None,
            beta: DEFAULT_BETA,
            seed: None,
        }
    }
}

impl Default for ClassifierSection {
    fn default() -> Self {
        let p = TrainParams::default();
        Self {
            learning_rate: p.learning_rate,
            epochs: p.epochs,
            batch_size: p.batch_size,
            l2: p.l2,
            max_tokens: DEFAULT_MAX_TOKENS,
            val_fraction: DEFAULT_VAL_FRACTION,
            topic_keywords: DEFAULT_KEYWORDS,
            seed: None,
        }
    }
}

impl Default for FederationSection {
    fn default() -> Self {
        Self {
            clients: vec![2, 4, 6],
            rounds: DEFAULT_ROUNDS,
            local_epochs: DEFAULT_LOCAL_EPOCHS,
            seed: None,
        }
    }
}

impl Default for ExplainSection {
    fn default() -> Self {
        Self {
            method: Method::Exact,
            samples: DEFAULT_SAMPLES,
            subset: DEFAULT_SUBSET,
            top: 15,
            seed: None,
        }
    }
}

impl Default for ReportSection {
    fn default() -> Self {
        Self {
            svg: true,
            wordfreq_top: None,
        }
    }
}

/// Every seed a run uses, after falling back to the global seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Seeds {
    pub global: u64,
    pub topics: u64,
    pub split: u64,
    pub classifier: u64,
    pub federation: u64,
    pub explain: u64,
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|_| CliError::MissingPath(path.to_path_buf()))?;
        let mut cfg: Self = toml::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.rebase(base);
        Ok(cfg)
    }

    /// Config from `--config` if given, defaults otherwise.
    pub fn load_or_default(path: Option<&Path>) -> Result<Self> {
        path.map_or_else(|| Ok(Self::default()), Self::load)
    }

    fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(p) = p {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        };
        fix(&mut self.input);
        fix(&mut self.out);
        let a = &mut self.assets;
        for p in [
            &mut a.lexicon,
            &mut a.boosters,
            &mut a.negations,
            &mut a.stopwords,
            &mut a.negation_whitelist,
            &mut a.emoji,
            &mut a.lemmas,
            &mut a.topic_names,
        ] {
            fix(p);
        }
    }

    pub fn seeds(&self) -> Seeds {
        let g = self.seed;
        Seeds {
            global: g,
            topics: self.topics.seed.unwrap_or(g),
            split: g,
            classifier: self.classifier.seed.unwrap_or(g),
            federation: self.federation.seed.unwrap_or(g),
            explain: self.explain.seed.unwrap_or(g),
        }
    }

    pub fn alpha(&self) -> f64 {
        self.topics
            .alpha
            .unwrap_or_else(|| default_alpha(self.topics.k))
    }

    pub fn train_params(&self) -> TrainParams {
        let c = &self.classifier;
        TrainParams {
            learning_rate: c.learning_rate,
            epochs: c.epochs,
            batch_size: c.batch_size,
            l2: c.l2,
            seed: self.seeds().classifier,
        }
    }

    /// SHA-256 of the canonical JSON form, ignoring the output directory so
    /// that reruns into a fresh directory hash the same.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.out = None;
        let json = serde_json::to_vec(&c).expect("config serializes");
        hex::encode(Sha256::digest(&json))
    }

    /// Checks values and that every referenced path exists.
    pub fn validate(&self) -> Result<()> {
        let a = &self.assets;
        for p in [
            &a.lexicon,
            &a.boosters,
            &a.negations,
            &a.stopwords,
            &a.negation_whitelist,
            &a.emoji,
            &a.lemmas,
            &a.topic_names,
            &self.input,
        ]
        .into_iter()
        .flatten()
        {
            if !p.is_file() {
                return Err(CliError::MissingPath(p.clone()));
            }
        }
        let bad = |msg: &str| Err(CliError::Config(msg.to_string()));
        if self.topics.k == 0 {
            return bad("topics.k must be >= 1");
        }
        if self.topics.iterations == 0 {
            return bad("topics.iterations must be >= 1");
        }
        if !(self.topics.beta > 0.0 && self.alpha() > 0.0) {
            return bad("topics.alpha and topics.beta must be positive");
        }
        let c = &self.classifier;
        if !(c.learning_rate > 0.0 && c.learning_rate.is_finite()) {
            return bad("classifier.learning_rate must be positive");
        }
        if c.batch_size == 0 || c.max_tokens == 0 {
            return bad("classifier.batch_size and classifier.max_tokens must be >= 1");
        }
        if c.l2.is_nan() || c.l2 < 0.0 {
            return bad("classifier.l2 must be >= 0");
        }
        if !(0.0..1.0).contains(&c.val_fraction) {
            return bad("classifier.val_fraction must be in [0, 1)");
        }
        if self.federation.clients.contains(&0) {
            return bad("federation.clients entries must be >= 1");
        }
        if self.explain.samples == 0 {
            return bad("explain.samples must be >= 1");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_all_defaults() {
        let cfg: PipelineConfig = toml::from_str("").unwrap();
        assert_eq!(cfg, PipelineConfig::default());
        assert_eq!(cfg.seeds().topics, DEFAULT_SEED);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<PipelineConfig>("[topics]\nkk = 3\n").is_err());
    }

    #[test]
    fn stage_seeds_fall_back_to_global() {
        let cfg: PipelineConfig = toml::from_str("seed = 7\n[explain]\nseed = 9\n").unwrap();
        let s = cfg.seeds();
        assert_eq!((s.global, s.topics, s.explain), (7, 7, 9));
    }

    #[test]
    fn hash_ignores_out_dir() {
        let a = PipelineConfig::default();
        let mut b = a.clone();
        b.out = Some("elsewhere".into());
        assert_eq!(a.hash(), b.hash());
        b.seed = 1;
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn missing_asset_names_the_path() {
        let mut cfg = PipelineConfig::default();
        cfg.assets.lexicon = Some("/nonexistent/lexicon.tsv".into());
        let err = cfg.validate().unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("/nonexistent/lexicon.tsv"));
    }
}
