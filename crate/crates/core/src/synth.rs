//! Deterministic synthetic corpora used by tests, benches and the bundled
//! demo data.

use chrono::{Duration, TimeZone, Utc};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{CleanComment, RawComment};

/// Ten discussion themes, each with its own content vocabulary and a
/// (negative, neutral, positive) mix.
const TOPICS: [(&str, &str, [f64; 3]); 10] = [
    ("media", "media news spin narrative channel journalist coverage headline anchor broadcast editorial footage", [0.55, 0.25, 0.20]),
    ("military", "missile drone army base airstrike navy fleet troops artillery radar jets commander", [0.60, 0.25, 0.15]),
    ("religion", "prayer mosque church religion believers scripture imam clergy shrine sermon pilgrims quran", [0.20, 0.25, 0.55]),
    ("nuclear", "nuclear uranium enrichment reactor inspectors program centrifuge treaty warhead sanctions facility scientists", [0.45, 0.35, 0.20]),
    ("politics", "president election congress senate parliament policy minister campaign vote administration regime cabinet", [0.55, 0.20, 0.25]),
    ("economy", "oil prices market economy inflation trade dollar exports barrel currency stocks tariffs", [0.35, 0.40, 0.25]),
    ("region", "israel iran gulf region neighbors border saudi iraq syria lebanon yemen strait", [0.45, 0.30, 0.25]),
    ("leaders", "leader diplomacy summit talks envoy negotiation ceasefire mediator statement ambassador dialogue meeting", [0.20, 0.30, 0.50]),
    ("civilians", "civilians children families refugees hospital city streets homes shelters evacuation water doctors", [0.50, 0.20, 0.30]),
    ("history", "history revolution century empire generations ancestors decades archive persia dynasty memory past", [0.25, 0.45, 0.30]),
];

/// Relative topic frequencies.
const TOPIC_WEIGHTS: [f64; 10] = [15.8, 13.0, 12.5, 11.2, 10.3, 9.6, 7.8, 6.9, 6.7, 6.2];

const POSITIVE: &[&str] = &[
    "good",
    "great",
    "love",
    "peace",
    "hope",
    "brave",
    "wonderful",
    "respect",
    "support",
    "thank",
    "excellent",
    "happy",
    "best",
    "proud",
    "wise",
    "safe",
    "calm",
    "win",
    "strong",
    "agree",
];
const NEGATIVE: &[&str] = &[
    "bad", "hate", "terrible", "war", "kill", "fear", "sad", "worst", "evil", "ugly", "stupid",
    "angry", "disaster", "crisis", "destroy", "horrible", "shame", "pain", "threat", "crazy",
];
const FILLER: &[&str] = &[
    "the",
    "is",
    "this",
    "about",
    "they",
    "what",
    "today",
    "people",
    "country",
    "government",
    "video",
    "world",
    "just",
    "again",
    "everyone",
    "now",
    "here",
    "their",
    "all",
    "of",
];
const BOOSTERS: &[&str] = &["very", "so", "really", "extremely", "totally"];
const CHANNELS: &[&str] = &[
    "GlobalNews",
    "WorldReport",
    "EastWestTV",
    "DailyBrief",
    "NewsHour",
];
const EMOJI_POS: &[&str] = &["😀", "👍", "🙏", "❤"];
const EMOJI_NEG: &[&str] = &["😡", "😢", "💔"];

fn pick<'a, R: Rng>(rng: &mut R, xs: &[&'a str]) -> &'a str {
    xs.choose(rng).copied().expect("non-empty word list")
}

fn weighted<R: Rng>(rng: &mut R, weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.gen::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        if u < *w {
            return i;
        }
        u -= w;
    }
    weights.len() - 1
}

/// Names of the built-in themes, in topic-generation order.
pub fn theme_names() -> Vec<&'static str> {
    TOPICS.iter().map(|t| t.0).collect()
}

fn sentiment_phrase<R: Rng>(rng: &mut R, polarity: usize) -> Vec<String> {
    let mut words = Vec::new();
    let n = if rng.gen_bool(0.3) { 2 } else { 1 };
    for _ in 0..n {
        if rng.gen_bool(0.25) {
            words.push(pick(rng, BOOSTERS).to_string());
        }
        // a negated word from the opposite pool keeps the intended polarity
        if rng.gen_bool(0.1) {
            words.push("not".to_string());
            let pool = if polarity == 2 { NEGATIVE } else { POSITIVE };
            words.push(pick(rng, pool).to_string());
        } else {
            let pool = if polarity == 2 { POSITIVE } else { NEGATIVE };
            words.push(pick(rng, pool).to_string());
        }
    }
    words
}

/// `n` raw comments with a fixed seed. Text mixes theme words, filler
/// stopwords and sentiment phrases, plus occasional URLs, numbers, emoji,
/// ALL-CAPS, exclamation marks, exact duplicates and non-English tags.
pub fn comments(n: usize, seed: u64) -> Vec<RawComment> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = Utc
        .with_ymd_and_hms(2025, 6, 13, 0, 0, 0)
        .single()
        .expect("valid date");
    let mut out: Vec<RawComment> = Vec::with_capacity(n);
    for i in 0..n {
        let id = format!("c{i:05}");
        let channel = pick(&mut rng, CHANNELS).to_string();
        let video_id = format!("v{:03}", rng.gen_range(0..40));
        let published_at = start + Duration::minutes(rng.gen_range(0..60 * 24 * 30));
        let lang = match rng.gen_range(0..100) {
            0..=2 => Some("fa".to_string()),
            3..=89 => Some("en".to_string()),
            _ => None,
        };

        if i > 0 && rng.gen_bool(0.02) {
            let prev = &out[rng.gen_range(0..i)];
            let text = prev.text.clone();
            out.push(RawComment {
                id,
                channel,
                video_id,
                published_at,
                text,
                lang,
            });
            continue;
        }
        if rng.gen_bool(0.01) {
            let text = if rng.gen_bool(0.5) {
                format!("https://youtu.be/{}", rng.gen_range(1000..9999))
            } else {
                "!!! ??".to_string()
            };
            out.push(RawComment {
                id,
                channel,
                video_id,
                published_at,
                text,
                lang,
            });
            continue;
        }

        let topic = weighted(&mut rng, &TOPIC_WEIGHTS);
        let (_, vocab, mix) = TOPICS[topic];
        let theme: Vec<&str> = vocab.split(' ').collect();
        let polarity = weighted(&mut rng, &mix);

        let mut words: Vec<String> = Vec::new();
        for _ in 0..rng.gen_range(2..=5) {
            words.push(pick(&mut rng, &theme).to_string());
        }
        for _ in 0..rng.gen_range(1..=4) {
            words.push(pick(&mut rng, FILLER).to_string());
        }
        if polarity != 1 {
            words.extend(sentiment_phrase(&mut rng, polarity));
        }
        words.shuffle(&mut rng);
        if polarity != 1 && rng.gen_bool(0.1) {
            if let Some(w) = words
                .iter_mut()
                .find(|w| POSITIVE.contains(&w.as_str()) || NEGATIVE.contains(&w.as_str()))
            {
                *w = w.to_uppercase();
            }
        }
        let mut text = words.join(" ");
        if rng.gen_bool(0.15) {
            text.push_str(&format!(" {}", rng.gen_range(2..2026)));
        }
        if rng.gen_bool(0.1) {
            text.push_str(" https://example.org/watch");
        }
        if polarity != 1 && rng.gen_bool(0.2) {
            text.push_str(if rng.gen_bool(0.5) { "!" } else { "!!!" });
        } else if rng.gen_bool(0.3) {
            text.push('.');
        }
        if polarity != 1 && rng.gen_bool(0.1) {
            let pool = if polarity == 2 { EMOJI_POS } else { EMOJI_NEG };
            text.push(' ');
            text.push_str(pick(&mut rng, pool));
        }
        let mut chars = text.chars();
        if let Some(first) = chars.next() {
            text = first.to_uppercase().chain(chars).collect();
        }
        out.push(RawComment {
            id,
            channel,
            video_id,
            published_at,
            text,
            lang,
        });
    }
    out
}

const PLANTED_A: &[&str] = &[
    "apple", "banana", "cherry", "grape", "lemon", "mango", "melon", "orange", "peach", "plum",
];
const PLANTED_B: &[&str] = &[
    "anvil", "bolt", "chisel", "drill", "hammer", "lathe", "pliers", "saw", "wrench", "vise",
];

/// The two vocabulary groups of [`planted_two_topic`].
pub fn planted_groups() -> (&'static [&'static str], &'static [&'static str]) {
    (PLANTED_A, PLANTED_B)
}

/// `n_docs` already-clean documents of 20 tokens each; even documents draw
/// only from group A, odd ones only from group B.
pub fn planted_two_topic(n_docs: usize, seed: u64) -> Vec<CleanComment> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n_docs)
        .map(|d| {
            let group = if d % 2 == 0 { PLANTED_A } else { PLANTED_B };
            let tokens: Vec<String> = (0..20).map(|_| pick(&mut rng, group).to_string()).collect();
            CleanComment {
                id: format!("p{d:03}"),
                text: tokens.join(" "),
                tokens,
                dropped: false,
                drop_reason: None,
            }
        })
        .collect()
}
