//! Lexicon and rule based compound sentiment scoring.
//!
//! The scorer follows the VADER reference rules closely enough to agree
//! with it label for label: per-token lexicon valences, adjusted by
//! boosters/dampeners (distance-damped), negation in a three-token left
//! window, ALL-CAPS emphasis, the `least` / `no` / idiom special cases,
//! contrastive `but` reweighting and `!`/`?` amplification, then squashed
//! into [-1, 1] with `x / sqrt(x^2 + 15)`.

use std::borrow::Cow;
use std::collections::{HashMap, HashSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::assets;
use crate::corpus::RawComment;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::io;

/// Normalization constant of the compound score.
pub const ALPHA: f64 = 15.0;
/// Labeling threshold: `>= POS_THRESHOLD` is positive, `<= -POS_THRESHOLD` negative.
pub const POS_THRESHOLD: f64 = 0.05;

const CAPS_INCR: f64 = 0.733;
const NEGATION_SCALAR: f64 = -0.74;
const EXCLAMATION_INCR: f64 = 0.292;
const MAX_EXCLAMATIONS: usize = 4;
const QUESTION_INCR: f64 = 0.18;
const QUESTION_CAP: f64 = 0.96;
const BUT_BEFORE: f64 = 0.5;
const BUT_AFTER: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SentimentLabel {
    Negative,
    Neutral,
    Positive,
}

impl SentimentLabel {
    /// Fixed class order used by every model and matrix.
    pub const ALL: [SentimentLabel; 3] = [
        SentimentLabel::Negative,
        SentimentLabel::Neutral,
        SentimentLabel::Positive,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn from_compound(compound: f64) -> Self {
        if compound >= POS_THRESHOLD {
            SentimentLabel::Positive
        } else if compound <= -POS_THRESHOLD {
            SentimentLabel::Negative
        } else {
            SentimentLabel::Neutral
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SentimentLabel::Negative => "negative",
            SentimentLabel::Neutral => "neutral",
            SentimentLabel::Positive => "positive",
        }
    }
}

impl fmt::Display for SentimentLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for SentimentLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "negative" | "neg" => Ok(SentimentLabel::Negative),
            "neutral" | "neu" => Ok(SentimentLabel::Neutral),
            "positive" | "pos" => Ok(SentimentLabel::Positive),
            _ => Err(Error::InvalidArgument(format!(
                "unknown sentiment label `{s}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SentimentScore {
    pub compound: f64,
    pub pos_share: f64,
    pub neg_share: f64,
    pub neu_share: f64,
}

#[derive(Debug, Clone)]
pub struct Lexicon {
    pub entries: HashMap<String, f64>,
    pub boosters: HashMap<String, f64>,
    pub negations: HashSet<String>,
    /// Multi-word phrases whose valence replaces the computed one.
    pub special_cases: HashMap<String, f64>,
    /// Single-character emoji replaced by their description before scoring.
    pub emoji: HashMap<char, String>,
}

fn parse_valences(text: &str, what: &str) -> Result<HashMap<String, f64>> {
    io::parse_tsv_pairs(text, what)?
        .into_iter()
        .map(|(k, v)| {
            let val: f64 = v.parse().map_err(|_| {
                Error::InvalidArgument(format!("{what}: `{k}` has non-numeric valence `{v}`"))
            })?;
            if !val.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "{what}: `{k}` valence not finite"
                )));
            }
            Ok((k.to_string(), val))
        })
        .collect()
}

impl Lexicon {
    pub fn new(
        entries: HashMap<String, f64>,
        boosters: HashMap<String, f64>,
        negations: HashSet<String>,
    ) -> Result<Self> {
        let mut both: Vec<&String> = entries
            .keys()
            .filter(|k| boosters.contains_key(*k))
            .collect();
        if !both.is_empty() {
            both.sort();
            return Err(Error::InvalidArgument(format!(
                "tokens present in both lexicon and boosters: {both:?}"
            )));
        }
        Ok(Self {
            entries,
            boosters,
            negations,
            special_cases: HashMap::new(),
            emoji: HashMap::new(),
        })
    }

    pub fn from_tables(lexicon_tsv: &str, booster_tsv: &str, negations: &str) -> Result<Self> {
        let mut lex = Self::new(
            parse_valences(lexicon_tsv, "lexicon")?,
            parse_valences(booster_tsv, "boosters")?,
            io::parse_lines(negations).map(String::from).collect(),
        )?;
        lex.special_cases = parse_valences(assets::SPECIAL_CASES, "special cases")?;
        lex.emoji = io::parse_tsv_pairs(assets::EMOJI, "emoji map")?
            .into_iter()
            .filter_map(|(k, v)| {
                let mut cs = k.chars();
                match (cs.next(), cs.next()) {
                    (Some(c), None) => Some((c, v.to_string())),
                    _ => None,
                }
            })
            .collect();
        Ok(lex)
    }

    pub fn bundled() -> Self {
        Self::from_tables(assets::VADER_LEXICON, assets::BOOSTERS, assets::NEGATIONS)
            .expect("bundled lexicon tables are valid")
    }

    /// Loads the lexicon TSV from disk; boosters and negations fall back
    /// to the bundled tables when not given.
    pub fn load(lexicon: &Path, boosters: Option<&Path>, negations: Option<&Path>) -> Result<Self> {
        let read = |p: Option<&Path>, fallback: &'static str| -> Result<Cow<'static, str>> {
            match p {
                Some(p) => io::read_to_string(p).map(Cow::Owned),
                None => Ok(Cow::Borrowed(fallback)),
            }
        };
        Self::from_tables(
            &io::read_to_string(lexicon)?,
            &read(boosters, assets::BOOSTERS)?,
            &read(negations, assets::NEGATIONS)?,
        )
    }

    fn has(&self, w: &str) -> bool {
        self.entries.contains_key(w)
    }

    fn negated(&self, w: &str) -> bool {
        self.negations.contains(w) || w.contains("n't")
    }
}

impl Default for Lexicon {
    fn default() -> Self {
        Self::bundled()
    }
}

/// Python-style `str.isupper`: at least one cased char, none lowercase.
fn is_upper(w: &str) -> bool {
    w.chars().any(char::is_uppercase) && !w.chars().any(char::is_lowercase)
}

fn is_ascii_punct(c: char) -> bool {
    c.is_ascii_punctuation()
}

/// Strips surrounding punctuation unless that would leave two or fewer
/// characters, which keeps emoticons such as `:)` intact.
fn strip_punct_if_word(token: &str) -> &str {
    let stripped = token.trim_matches(is_ascii_punct);
    if stripped.chars().count() <= 2 {
        token
    } else {
        stripped
    }
}

fn replace_emoji(text: &str, lex: &Lexicon) -> String {
    if lex.emoji.is_empty() {
        return text.trim().to_string();
    }
    let mut out = String::with_capacity(text.len());
    let mut prev_space = true;
    for c in text.chars() {
        if let Some(desc) = lex.emoji.get(&c) {
            if !prev_space {
                out.push(' ');
            }
            out.push_str(desc);
            prev_space = false;
        } else {
            out.push(c);
            prev_space = c == ' ';
        }
    }
    out.trim().to_string()
}

struct Sentence<'a> {
    words: Vec<&'a str>,
    lower: Vec<String>,
    cap_diff: bool,
}

impl<'a> Sentence<'a> {
    fn new(text: &'a str) -> Self {
        let words: Vec<&str> = text.split_whitespace().map(strip_punct_if_word).collect();
        let lower = words.iter().map(|w| w.to_lowercase()).collect();
        let all_caps = words.iter().filter(|w| is_upper(w)).count();
        let diff = words.len() - all_caps;
        Sentence {
            cap_diff: diff > 0 && diff < words.len(),
            words,
            lower,
        }
    }
}

fn scalar_inc_dec(word: &str, lower: &str, valence: f64, cap_diff: bool, lex: &Lexicon) -> f64 {
    let Some(&b) = lex.boosters.get(lower) else {
        return 0.0;
    };
    let mut scalar = if valence < 0.0 { -b } else { b };
    if is_upper(word) && cap_diff {
        if valence > 0.0 {
            scalar += CAPS_INCR;
        } else {
            scalar -= CAPS_INCR;
        }
    }
    scalar
}

fn negation_check(mut valence: f64, lw: &[String], start: usize, i: usize, lex: &Lexicon) -> f64 {
    let w = |k: usize| lw[i - k].as_str();
    match start {
        0 => {
            if lex.negated(w(1)) {
                valence *= NEGATION_SCALAR;
            }
        }
        1 => {
            if w(2) == "never" && (w(1) == "so" || w(1) == "this") {
                valence *= 1.25;
            } else if w(2) == "without" && w(1) == "doubt" {
            } else if lex.negated(w(2)) {
                valence *= NEGATION_SCALAR;
            }
        }
        _ => {
            if (w(3) == "never" && (w(2) == "so" || w(2) == "this"))
                || (w(1) == "so" || w(1) == "this")
            {
                valence *= 1.25;
            } else if w(3) == "without" && (w(2) == "doubt" || w(1) == "doubt") {
            } else if lex.negated(w(3)) {
                valence *= NEGATION_SCALAR;
            }
        }
    }
    valence
}

fn special_idioms_check(mut valence: f64, lw: &[String], i: usize, lex: &Lexicon) -> f64 {
    let one_zero = format!("{} {}", lw[i - 1], lw[i]);
    let two_one_zero = format!("{} {} {}", lw[i - 2], lw[i - 1], lw[i]);
    let two_one = format!("{} {}", lw[i - 2], lw[i - 1]);
    let three_two_one = format!("{} {} {}", lw[i - 3], lw[i - 2], lw[i - 1]);
    let three_two = format!("{} {}", lw[i - 3], lw[i - 2]);

    for seq in [
        &one_zero,
        &two_one_zero,
        &two_one,
        &three_two_one,
        &three_two,
    ] {
        if let Some(&v) = lex.special_cases.get(seq.as_str()) {
            valence = v;
            break;
        }
    }
    if lw.len() - 1 > i {
        if let Some(&v) = lex.special_cases.get(&format!("{} {}", lw[i], lw[i + 1])) {
            valence = v;
        }
    }
    if lw.len() - 1 > i + 1 {
        let zero_one_two = format!("{} {} {}", lw[i], lw[i + 1], lw[i + 2]);
        if let Some(&v) = lex.special_cases.get(&zero_one_two) {
            valence = v;
        }
    }
    for ngram in [&three_two_one, &three_two, &two_one] {
        if let Some(&b) = lex.boosters.get(ngram.as_str()) {
            valence += b;
        }
    }
    valence
}

fn least_check(valence: f64, lw: &[String], i: usize, lex: &Lexicon) -> f64 {
    if i > 1 && !lex.has(&lw[i - 1]) && lw[i - 1] == "least" {
        if lw[i - 2] != "at" && lw[i - 2] != "very" {
            return valence * NEGATION_SCALAR;
        }
    } else if i > 0 && !lex.has(&lw[i - 1]) && lw[i - 1] == "least" {
        return valence * NEGATION_SCALAR;
    }
    valence
}

fn token_valence(s: &Sentence<'_>, i: usize, lex: &Lexicon) -> f64 {
    let lw = &s.lower;
    let Some(&base) = lex.entries.get(&lw[i]) else {
        return 0.0;
    };
    let mut valence = base;
    // "no" directly before another lexicon word acts as a negator, not a word
    if lw[i] == "no" && i != lw.len() - 1 && lex.has(&lw[i + 1]) {
        valence = 0.0;
    }
    if (i > 0 && lw[i - 1] == "no")
        || (i > 1 && lw[i - 2] == "no")
        || (i > 2 && lw[i - 3] == "no" && (lw[i - 1] == "or" || lw[i - 1] == "nor"))
    {
        valence = base * NEGATION_SCALAR;
    }
    if is_upper(s.words[i]) && s.cap_diff {
        if valence > 0.0 {
            valence += CAPS_INCR;
        } else {
            valence -= CAPS_INCR;
        }
    }
    for start in 0..3 {
        let k = start + 1;
        if i > start && !lex.has(&lw[i - k]) {
            let mut scalar = scalar_inc_dec(s.words[i - k], &lw[i - k], valence, s.cap_diff, lex);
            if start == 1 && scalar != 0.0 {
                scalar *= 0.95;
            }
            if start == 2 && scalar != 0.0 {
                scalar *= 0.9;
            }
            valence += scalar;
            valence = negation_check(valence, lw, start, i, lex);
            if start == 2 {
                valence = special_idioms_check(valence, lw, i, lex);
            }
        }
    }
    least_check(valence, lw, i, lex)
}

/// Contrastive conjunction weighting. Mirrors the reference tool exactly,
/// including its lookup of each value by first equal element.
fn but_check(lw: &[String], sentiments: &mut [f64]) {
    let Some(bi) = lw.iter().position(|w| w == "but") else {
        return;
    };
    for k in 0..sentiments.len() {
        let v = sentiments[k];
        let si = sentiments.iter().position(|&x| x == v).unwrap_or(k);
        if si < bi {
            sentiments[si] = v * BUT_BEFORE;
        } else if si > bi {
            sentiments[si] = v * BUT_AFTER;
        }
    }
}

fn punctuation_emphasis(text: &str) -> f64 {
    let ep = text.matches('!').count().min(MAX_EXCLAMATIONS) as f64 * EXCLAMATION_INCR;
    let qm_count = text.matches('?').count();
    let qm = match qm_count {
        0 | 1 => 0.0,
        2 | 3 => qm_count as f64 * QUESTION_INCR,
        _ => QUESTION_CAP,
    };
    ep + qm
}

/// `x / sqrt(x^2 + alpha)`, clamped to [-1, 1].
pub fn normalize(score: f64, alpha: f64) -> f64 {
    (score / (score * score + alpha).sqrt()).clamp(-1.0, 1.0)
}

pub fn compound_score(text: &str, lex: &Lexicon) -> SentimentScore {
    let text = replace_emoji(text, lex);
    let sentence = Sentence::new(&text);
    let lw = &sentence.lower;

    let mut sentiments = Vec::with_capacity(lw.len());
    for i in 0..lw.len() {
        if lex.boosters.contains_key(&lw[i])
            || (i + 1 < lw.len() && lw[i] == "kind" && lw[i + 1] == "of")
        {
            sentiments.push(0.0);
            continue;
        }
        sentiments.push(token_valence(&sentence, i, lex));
    }
    but_check(lw, &mut sentiments);

    if sentiments.is_empty() {
        return SentimentScore {
            compound: 0.0,
            pos_share: 0.0,
            neg_share: 0.0,
            neu_share: 1.0,
        };
    }

    let mut sum: f64 = sentiments.iter().sum();
    let amp = punctuation_emphasis(&text);
    if sum > 0.0 {
        sum += amp;
    } else if sum < 0.0 {
        sum -= amp;
    }
    let compound = normalize(sum, ALPHA);

    let (mut pos, mut neg, mut neu) = (0.0_f64, 0.0_f64, 0usize);
    for &s in &sentiments {
        if s > 0.0 {
            pos += s + 1.0;
        }
        if s < 0.0 {
            neg += s - 1.0;
        }
        if s == 0.0 {
            neu += 1;
        }
    }
    if pos > neg.abs() {
        pos += amp;
    } else if pos < neg.abs() {
        neg -= amp;
    }
    let total = pos + neg.abs() + neu as f64;
    SentimentScore {
        compound,
        pos_share: (pos / total).abs(),
        neg_share: (neg / total).abs(),
        neu_share: (neu as f64 / total).abs(),
    }
}

pub fn label_from_score(s: &SentimentScore) -> SentimentLabel {
    SentimentLabel::from_compound(s.compound)
}

/// Output row of the labeling stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelRecord {
    pub id: String,
    pub compound: f64,
    pub label: SentimentLabel,
}

/// Scores and labels every comment, in input order.
pub fn label_corpus(
    corpus: &[RawComment],
    lex: &Lexicon,
    exec: Exec,
) -> Vec<(String, SentimentScore, SentimentLabel)> {
    exec.map(corpus, |c| {
        let score = compound_score(&c.text, lex);
        (c.id.clone(), score, label_from_score(&score))
    })
}

pub fn to_records(scored: &[(String, SentimentScore, SentimentLabel)]) -> Vec<LabelRecord> {
    scored
        .iter()
        .map(|(id, s, l)| LabelRecord {
            id: id.clone(),
            compound: s.compound,
            label: *l,
        })
        .collect()
}
