//! Comment ingestion and the cleaning pipeline.
//!
//! Cleaning runs in a fixed order: translation hook, emoji to phrase,
//! lowercase with URL / number / punctuation removal, stopword removal
//! (negations kept), table lemmatization, and finally the length check.

use std::borrow::Cow;
use std::collections::{HashMap, HashSet};
use std::path::Path;
use std::sync::OnceLock;

use chrono::{DateTime, Utc};
use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::assets;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::io;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawComment {
    pub id: String,
    pub channel: String,
    pub video_id: String,
    pub published_at: DateTime<Utc>,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lang: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DropReason {
    /// Nothing left after cleaning.
    Empty,
    /// Fewer tokens than `min_tokens`.
    TooShort,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CleanComment {
    pub id: String,
    pub text: String,
    pub tokens: Vec<String>,
    pub dropped: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drop_reason: Option<DropReason>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputFormat {
    Jsonl,
    Csv,
}

impl InputFormat {
    /// Guesses the format from the file extension, defaulting to JSONL.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => InputFormat::Csv,
            _ => InputFormat::Jsonl,
        }
    }
}

/// A record that could not be turned into a [`RawComment`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowError {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, Default)]
pub struct Ingested {
    pub comments: Vec<RawComment>,
    pub errors: Vec<RowError>,
}

/// Reads raw comments in file order. Malformed rows and duplicate or empty
/// ids become [`RowError`]s; only an unreadable file is fatal.
pub fn ingest(path: &Path, format: InputFormat) -> Result<Ingested> {
    let text = io::read_to_string(path)?;
    let rows: Vec<(usize, std::result::Result<RawComment, String>)> = match format {
        InputFormat::Jsonl => text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(n, l)| (n + 1, serde_json::from_str(l).map_err(|e| e.to_string())))
            .collect(),
        InputFormat::Csv => {
            let mut rdr = csv::ReaderBuilder::new()
                .has_headers(true)
                .from_reader(text.as_bytes());
            let headers = rdr
                .headers()
                .map_err(|e| Error::Parse {
                    path: path.to_path_buf(),
                    line: 1,
                    msg: e.to_string(),
                })?
                .clone();
            rdr.records()
                .map(|rec| match rec {
                    Ok(rec) => {
                        let line = rec.position().map_or(0, |p| p.line() as usize);
                        let parsed = rec
                            .deserialize::<CsvRow>(Some(&headers))
                            .map_err(|e| e.to_string())
                            .and_then(CsvRow::into_raw);
                        (line, parsed)
                    }
                    Err(e) => {
                        let line = e.position().map_or(0, |p| p.line() as usize);
                        (line, Err(e.to_string()))
                    }
                })
                .collect()
        }
    };

    let mut out = Ingested::default();
    let mut seen = HashSet::new();
    for (line, row) in rows {
        match row {
            Ok(c) if c.id.is_empty() => out.errors.push(RowError {
                line,
                message: "empty id".into(),
            }),
            Ok(c) if !seen.insert(c.id.clone()) => out.errors.push(RowError {
                line,
                message: format!("duplicate id `{}`", c.id),
            }),
            Ok(c) => out.comments.push(c),
            Err(message) => out.errors.push(RowError { line, message }),
        }
    }
    Ok(out)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CsvRow {
    id: String,
    channel: String,
    video_id: String,
    published_at: String,
    text: Option<String>,
    #[serde(default)]
    lang: Option<String>,
}

impl CsvRow {
    fn into_raw(self) -> std::result::Result<RawComment, String> {
        let published_at = DateTime::parse_from_rfc3339(&self.published_at)
            .map_err(|e| format!("published_at: {e}"))?
            .with_timezone(&Utc);
        let text = self.text.ok_or("missing field `text`")?;
        Ok(RawComment {
            id: self.id,
            channel: self.channel,
            video_id: self.video_id,
            published_at,
            text,
            lang: self.lang.filter(|l| !l.is_empty()),
        })
    }
}

#[derive(Debug, Clone)]
pub struct PreprocessConfig {
    pub stopword_list: HashSet<String>,
    pub negation_whitelist: HashSet<String>,
    pub emoji_map: HashMap<String, String>,
    pub lemma_table: HashMap<String, String>,
    pub min_tokens: usize,
    emoji_max_chars: usize,
}

impl PreprocessConfig {
    pub fn new(
        stopwords: impl IntoIterator<Item = String>,
        negation_whitelist: impl IntoIterator<Item = String>,
        emoji_map: HashMap<String, String>,
        lemma_table: HashMap<String, String>,
        min_tokens: usize,
    ) -> Result<Self> {
        let norm = |w: String| normalize_word(&w);
        let stopword_list: HashSet<String> = stopwords.into_iter().map(norm).collect();
        let negation_whitelist: HashSet<String> =
            negation_whitelist.into_iter().map(norm).collect();
        let mut stray: Vec<&String> = negation_whitelist
            .iter()
            .filter(|w| !stopword_list.contains(*w))
            .collect();
        if !stray.is_empty() {
            stray.sort();
            return Err(Error::InvalidArgument(format!(
                "negation whitelist entries are not stopwords: {stray:?}"
            )));
        }
        let emoji_max_chars = emoji_map
            .keys()
            .map(|k| k.chars().count())
            .max()
            .unwrap_or(0);
        Ok(Self {
            stopword_list,
            negation_whitelist,
            emoji_map,
            lemma_table,
            min_tokens,
            emoji_max_chars,
        })
    }

    /// Builds a config from table text in the documented file formats.
    pub fn from_tables(
        stopwords: &str,
        negation_whitelist: &str,
        emoji_tsv: &str,
        lemma_tsv: &str,
        min_tokens: usize,
    ) -> Result<Self> {
        let emoji = io::parse_tsv_pairs(emoji_tsv, "emoji map")?
            .into_iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        let lemmas = io::parse_tsv_pairs(lemma_tsv, "lemma table")?
            .into_iter()
            .map(|(k, v)| (normalize_word(k), normalize_word(v)))
            .collect();
        Self::new(
            io::parse_lines(stopwords).map(String::from),
            io::parse_lines(negation_whitelist).map(String::from),
            emoji,
            lemmas,
            min_tokens,
        )
    }

    pub fn bundled() -> Self {
        Self::from_tables(
            assets::STOPWORDS,
            assets::NEGATION_WHITELIST,
            assets::EMOJI,
            assets::LEMMAS,
            1,
        )
        .expect("bundled preprocessing tables are valid")
    }

    /// Loads tables from files, falling back to the bundled copy for any
    /// path that is `None`.
    pub fn load(
        stopwords: Option<&Path>,
        negation_whitelist: Option<&Path>,
        emoji_map: Option<&Path>,
        lemma_table: Option<&Path>,
        min_tokens: usize,
    ) -> Result<Self> {
        let read = |p: Option<&Path>, fallback: &'static str| -> Result<Cow<'static, str>> {
            match p {
                Some(p) => io::read_to_string(p).map(Cow::Owned),
                None => Ok(Cow::Borrowed(fallback)),
            }
        };
        Self::from_tables(
            &read(stopwords, assets::STOPWORDS)?,
            &read(negation_whitelist, assets::NEGATION_WHITELIST)?,
            &read(emoji_map, assets::EMOJI)?,
            &read(lemma_table, assets::LEMMAS)?,
            min_tokens,
        )
    }

    fn is_removed_stopword(&self, tok: &str) -> bool {
        self.stopword_list.contains(tok) && !self.negation_whitelist.contains(tok)
    }
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self::bundled()
    }
}

fn url_pattern() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)\b(?:https?://|www\.)\S*").expect("valid regex"))
}

fn is_apostrophe(c: char) -> bool {
    matches!(c, '\'' | '\u{2019}' | '\u{2018}' | '`' | '\u{02bc}')
}

/// Lowercases and keeps only letters and whitespace. Apostrophes are
/// deleted so contractions collapse (`don't` -> `dont`); every other
/// non-letter becomes a space.
fn normalize_text(text: &str) -> String {
    let lowered = text.to_lowercase();
    let no_urls = url_pattern().replace_all(&lowered, " ");
    no_urls
        .chars()
        .filter(|c| !is_apostrophe(*c))
        .map(|c| if c.is_alphabetic() { c } else { ' ' })
        .collect()
}

fn normalize_word(w: &str) -> String {
    normalize_text(w)
        .split_whitespace()
        .collect::<Vec<_>>()
        .join("")
}

fn is_english(lang: &str) -> bool {
    let primary = lang.split(['-', '_']).next().unwrap_or("");
    primary.eq_ignore_ascii_case("en")
}

/// Stage 1. Translation is not performed; non-English input is flagged.
fn translation_hook<'a>(id: &str, text: &'a str, lang: Option<&str>) -> &'a str {
    if let Some(lang) = lang {
        if !is_english(lang) {
            log::debug!("comment {id}: lang `{lang}` passed through untranslated");
        }
    }
    text
}

fn substitute_emoji(text: &str, cfg: &PreprocessConfig) -> String {
    if cfg.emoji_map.is_empty() {
        return text.to_string();
    }
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut out = String::with_capacity(text.len());
    let mut i = 0;
    'outer: while i < chars.len() {
        let longest = cfg.emoji_max_chars.min(chars.len() - i);
        for len in (1..=longest).rev() {
            let start = chars[i].0;
            let end = chars.get(i + len).map_or(text.len(), |c| c.0);
            if let Some(phrase) = cfg.emoji_map.get(&text[start..end]) {
                out.push(' ');
                out.push_str(phrase);
                out.push(' ');
                i += len;
                continue 'outer;
            }
        }
        out.push(chars[i].1);
        i += 1;
    }
    out
}

/// Runs the full cleaning pipeline on one comment. Never fails; degenerate
/// input comes back with `dropped` set.
pub fn preprocess(c: &RawComment, cfg: &PreprocessConfig) -> CleanComment {
    let text = translation_hook(&c.id, &c.text, c.lang.as_deref());
    let text = substitute_emoji(text, cfg);
    let text = normalize_text(&text);
    let tokens: Vec<String> = text
        .split_whitespace()
        .filter(|t| !cfg.is_removed_stopword(t))
        .map(|t| cfg.lemma_table.get(t).map_or(t, String::as_str))
        .filter(|t| !cfg.is_removed_stopword(t))
        .map(String::from)
        .collect();

    let drop_reason = if tokens.is_empty() {
        Some(DropReason::Empty)
    } else if tokens.len() < cfg.min_tokens {
        Some(DropReason::TooShort)
    } else {
        None
    };
    CleanComment {
        id: c.id.clone(),
        text: tokens.join(" "),
        tokens,
        dropped: drop_reason.is_some(),
        drop_reason,
    }
}

pub fn preprocess_all(
    comments: &[RawComment],
    cfg: &PreprocessConfig,
    exec: Exec,
) -> Vec<CleanComment> {
    exec.map(comments, |c| preprocess(c, cfg))
}

/// Keeps the first occurrence of each normalized text among kept comments.
/// Dropped comments pass through untouched.
pub fn dedupe(corpus: Vec<CleanComment>) -> Vec<CleanComment> {
    let mut seen = HashSet::new();
    corpus
        .into_iter()
        .filter(|c| c.dropped || seen.insert(c.text.clone()))
        .collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusCounts {
    pub raw: usize,
    pub dropped: usize,
    pub duplicates: usize,
    pub retained: usize,
}

/// Preprocess + dedupe, returning the surviving (non-dropped) comments in
/// order along with bookkeeping counts.
pub fn clean_corpus(
    comments: &[RawComment],
    cfg: &PreprocessConfig,
    exec: Exec,
) -> (Vec<CleanComment>, CorpusCounts) {
    let foreign = comments
        .iter()
        .filter(|c| c.lang.as_deref().is_some_and(|l| !is_english(l)))
        .count();
    if foreign > 0 {
        log::warn!("{foreign} non-English comments passed through untranslated");
    }
    let cleaned = preprocess_all(comments, cfg, exec);
    let dropped = cleaned.iter().filter(|c| c.dropped).count();
    let before = cleaned.len();
    let deduped = dedupe(cleaned);
    let duplicates = before - deduped.len();
    let kept: Vec<CleanComment> = deduped.into_iter().filter(|c| !c.dropped).collect();
    let counts = CorpusCounts {
        raw: comments.len(),
        dropped,
        duplicates,
        retained: kept.len(),
    };
    (kept, counts)
}
