//! Descriptive tables: topic shares, topic x sentiment counts and per-class
//! word frequencies, plus a small SVG bar chart writer.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::CleanComment;
use crate::error::{Error, Result};
use crate::io;
use crate::sentilex::{LabelRecord, SentimentLabel};
use crate::topicmodel::TopicAssignment;

/// Optional human names for topics; unnamed topics render as `Topic k`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TopicNames(HashMap<usize, String>);

impl TopicNames {
    /// Parses `topic_id<TAB>name` lines.
    pub fn parse(text: &str) -> Result<Self> {
        let mut map = HashMap::new();
        for (k, v) in io::parse_tsv_pairs(text, "topic names")? {
            let id: usize = k
                .trim()
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("topic names: bad topic id `{k}`")))?;
            map.insert(id, v.to_string());
        }
        Ok(Self(map))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&io::read_to_string(path)?)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn name(&self, topic: usize) -> String {
        self.0
            .get(&topic)
            .cloned()
            .unwrap_or_else(|| format!("Topic {topic}"))
    }
}

impl FromIterator<(usize, String)> for TopicNames {
    fn from_iter<I: IntoIterator<Item = (usize, String)>>(iter: I) -> Self {
        Self(iter.into_iter().collect())
    }
}

/// Percentages rounded half-up to one decimal. If the rounded values do not
/// total exactly 100.0, the entries with the largest rounding error absorb
/// the difference one tenth at a time.
pub fn rounded_shares(counts: &[u64]) -> Vec<f64> {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return vec![0.0; counts.len()];
    }
    let mut tenths: Vec<i64> = counts
        .iter()
        .map(|&c| ((2 * 1000 * c + total) / (2 * total)) as i64)
        .collect();
    // rounding error scaled by `total`: exact - rounded
    let residual = |i: usize, t: &[i64]| 1000 * counts[i] as i64 - t[i] * total as i64;
    let mut diff = 1000 - tenths.iter().sum::<i64>();
    while diff != 0 {
        let step = diff.signum();
        let pick = (0..counts.len())
            .filter(|&i| counts[i] > 0)
            .max_by(|&a, &b| {
                (step * residual(a, &tenths))
                    .cmp(&(step * residual(b, &tenths)))
                    .then(b.cmp(&a))
            })
            .expect("at least one non-zero count");
        tenths[pick] += step;
        diff -= step;
    }
    tenths.into_iter().map(|t| t as f64 / 10.0).collect()
}

/// Share of comments per dominant topic, in percent.
pub fn topic_distribution(topics: &[usize]) -> Result<BTreeMap<usize, f64>> {
    if topics.is_empty() {
        return Err(Error::InvalidArgument("no topic assignments".into()));
    }
    let mut counts: BTreeMap<usize, u64> = BTreeMap::new();
    for &t in topics {
        *counts.entry(t).or_default() += 1;
    }
    let shares = rounded_shares(&counts.values().copied().collect::<Vec<_>>());
    Ok(counts.into_keys().zip(shares).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicRow {
    pub topic: usize,
    pub name: String,
    pub negative: u64,
    pub neutral: u64,
    pub positive: u64,
    pub share_pct: f64,
}

impl TopicRow {
    pub fn total(&self) -> u64 {
        self.negative + self.neutral + self.positive
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TopicSentimentTable {
    pub rows: Vec<TopicRow>,
    /// Ids present on only one side of the join.
    pub unmatched: Vec<String>,
}

impl TopicSentimentTable {
    pub fn total(&self) -> u64 {
        self.rows.iter().map(TopicRow::total).sum()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
        w.write_record([
            "topic",
            "name",
            "negative",
            "neutral",
            "positive",
            "share_pct",
        ])
        .map_err(|e| csv_err(path, e))?;
        for r in &self.rows {
            w.write_record([
                r.topic.to_string(),
                r.name.clone(),
                r.negative.to_string(),
                r.neutral.to_string(),
                r.positive.to_string(),
                format!("{:.1}", r.share_pct),
            ])
            .map_err(|e| csv_err(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line: e.position().map_or(0, |p| p.line() as usize),
        msg: e.to_string(),
    }
}

/// Joins topic assignments with sentiment labels by comment id and counts
/// each (topic, label) cell. Rows cover topics `0..k` (or up to the largest
/// assigned topic when `k` is `None`).
pub fn crosstab(
    assignments: &[TopicAssignment],
    labels: &[LabelRecord],
    names: &TopicNames,
    k: Option<usize>,
) -> TopicSentimentTable {
    let by_id: HashMap<&str, SentimentLabel> =
        labels.iter().map(|l| (l.id.as_str(), l.label)).collect();
    let assigned: HashMap<&str, usize> = assignments
        .iter()
        .map(|a| (a.id.as_str(), a.dominant_topic))
        .collect();
    let mut unmatched: Vec<String> = assignments
        .iter()
        .filter(|a| !by_id.contains_key(a.id.as_str()))
        .map(|a| a.id.clone())
        .chain(
            labels
                .iter()
                .filter(|l| !assigned.contains_key(l.id.as_str()))
                .map(|l| l.id.clone()),
        )
        .collect();
    unmatched.sort();
    unmatched.dedup();

    let joined: Vec<(usize, SentimentLabel)> = assignments
        .iter()
        .filter_map(|a| by_id.get(a.id.as_str()).map(|&l| (a.dominant_topic, l)))
        .collect();
    if joined.is_empty() {
        log::warn!("topic/label join is empty");
        return TopicSentimentTable {
            rows: Vec::new(),
            unmatched,
        };
    }
    if !unmatched.is_empty() {
        log::warn!("{} ids could not be joined", unmatched.len());
    }
    let k = k.unwrap_or_else(|| joined.iter().map(|j| j.0).max().unwrap_or(0) + 1);
    let mut cells = vec![[0u64; 3]; k.max(joined.iter().map(|j| j.0 + 1).max().unwrap_or(0))];
    for (t, l) in joined {
        cells[t][l.index()] += 1;
    }
    let totals: Vec<u64> = cells.iter().map(|c| c.iter().sum()).collect();
    let shares = rounded_shares(&totals);
    TopicSentimentTable {
        rows: cells
            .iter()
            .zip(shares)
            .enumerate()
            .map(|(t, (c, share))| TopicRow {
                topic: t,
                name: names.name(t),
                negative: c[0],
                neutral: c[1],
                positive: c[2],
                share_pct: share,
            })
            .collect(),
        unmatched,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyTable {
    pub class: SentimentLabel,
    pub entries: Vec<(String, u64)>,
}

impl FrequencyTable {
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
        w.write_record(["token", "count"])
            .map_err(|e| csv_err(path, e))?;
        for (t, c) in &self.entries {
            w.write_record([t.as_str(), &c.to_string()])
                .map_err(|e| csv_err(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

/// Token counts over the comments labeled `class`, most frequent first with
/// lexicographic tie-break. `top = None` keeps every token.
pub fn word_frequencies(
    corpus: &[CleanComment],
    labels: &[LabelRecord],
    class: SentimentLabel,
    top: Option<usize>,
) -> FrequencyTable {
    let by_id: HashMap<&str, SentimentLabel> =
        labels.iter().map(|l| (l.id.as_str(), l.label)).collect();
    let mut counts: HashMap<&str, u64> = HashMap::new();
    for c in corpus.iter().filter(|c| !c.dropped) {
        if by_id.get(c.id.as_str()) == Some(&class) {
            for t in &c.tokens {
                *counts.entry(t).or_default() += 1;
            }
        }
    }
    let mut entries: Vec<(String, u64)> = counts
        .into_iter()
        .map(|(t, n)| (t.to_string(), n))
        .collect();
    entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    if let Some(top) = top {
        entries.truncate(top);
    }
    FrequencyTable { class, entries }
}

fn escape_xml(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Horizontal bar chart as a standalone SVG document.
pub fn bar_chart_svg(title: &str, bars: &[(String, f64)]) -> String {
    let width = 720.0;
    let label_w = 260.0;
    let bar_h = 22.0;
    let height = 50.0 + bars.len() as f64 * (bar_h + 6.0);
    let max = bars
        .iter()
        .map(|b| b.1)
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        svg,
        r#"<text x="10" y="20" font-size="15">{}</text>"#,
        escape_xml(title)
    );
    for (i, (label, value)) in bars.iter().enumerate() {
        let y = 36.0 + i as f64 * (bar_h + 6.0);
        let w = (width - label_w - 70.0) * value / max;
        let _ = writeln!(
            svg,
            r##"<text x="10" y="{:.1}">{}</text><rect x="{label_w}" y="{y:.1}" width="{w:.1}" height="{bar_h}" fill="#4a7ab5"/><text x="{:.1}" y="{:.1}">{value}</text>"##,
            y + 15.0,
            escape_xml(label),
            label_w + w + 6.0,
            y + 15.0
        );
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assign(id: &str, t: usize) -> TopicAssignment {
        TopicAssignment {
            id: id.into(),
            dominant_topic: t,
            topic_keywords: vec![],
        }
    }

    fn label(id: &str, l: SentimentLabel) -> LabelRecord {
        LabelRecord {
            id: id.into(),
            compound: 0.0,
            label: l,
        }
    }

    #[test]
    fn distribution_basics() {
        assert_eq!(topic_distribution(&[0; 10]).unwrap()[&0], 100.0);
        let d = topic_distribution(&[0, 1, 0, 1]).unwrap();
        assert_eq!((d[&0], d[&1]), (50.0, 50.0));
        assert!(topic_distribution(&[]).is_err());
    }

    #[test]
    fn published_share_vector_is_reproduced() {
        let counts = [158, 130, 125, 112, 103, 96, 78, 69, 67, 62];
        let shares = rounded_shares(&counts);
        assert_eq!(
            shares,
            [15.8, 13.0, 12.5, 11.2, 10.3, 9.6, 7.8, 6.9, 6.7, 6.2]
        );
        assert!((shares.iter().sum::<f64>() - 100.0).abs() < 1e-9);
    }

    #[test]
    fn half_up_rounding_is_repaired_to_100() {
        // nine topics at 10.25 % and one at 7.75 %: naive half-up gives 100.5
        let mut counts = vec![41u64; 9];
        counts.push(31);
        let shares = rounded_shares(&counts);
        assert!((shares.iter().sum::<f64>() - 100.0).abs() < 1e-9);
        for (s, c) in shares.iter().zip(&counts) {
            assert!((s - *c as f64 / 4.0).abs() <= 0.1 + 1e-9);
        }
        // 1/3 each: 33.3 x 3 = 99.9 -> first topic takes the extra tenth
        assert_eq!(rounded_shares(&[1, 1, 1]), [33.4, 33.3, 33.3]);
    }

    #[test]
    fn crosstab_one_per_label() {
        let a = [assign("1", 0), assign("2", 0), assign("3", 0)];
        let l = [
            label("1", SentimentLabel::Negative),
            label("2", SentimentLabel::Neutral),
            label("3", SentimentLabel::Positive),
        ];
        let t = crosstab(&a, &l, &TopicNames::default(), None);
        assert_eq!(t.rows.len(), 1);
        assert_eq!(
            (t.rows[0].negative, t.rows[0].neutral, t.rows[0].positive),
            (1, 1, 1)
        );
        assert_eq!(t.rows[0].name, "Topic 0");
    }

    #[test]
    fn crosstab_empty_join() {
        let t = crosstab(
            &[assign("1", 0)],
            &[label("2", SentimentLabel::Neutral)],
            &TopicNames::default(),
            None,
        );
        assert!(t.rows.is_empty());
        assert_eq!(t.unmatched, ["1", "2"]);
    }

    #[test]
    fn word_frequency_counts() {
        let c = CleanComment {
            id: "1".into(),
            text: "war war peace".into(),
            tokens: vec!["war".into(), "war".into(), "peace".into()],
            dropped: false,
            drop_reason: None,
        };
        let l = [label("1", SentimentLabel::Negative)];
        let f = word_frequencies(std::slice::from_ref(&c), &l, SentimentLabel::Negative, None);
        assert_eq!(
            f.entries,
            [("war".to_string(), 2), ("peace".to_string(), 1)]
        );
        let f = word_frequencies(&[c], &l, SentimentLabel::Positive, None);
        assert!(f.entries.is_empty());
    }

    #[test]
    fn names_file() {
        let names = TopicNames::parse("0\tWar Media Narratives\n3\tEconomy\n").unwrap();
        assert_eq!(names.name(0), "War Media Narratives");
        assert_eq!(names.name(1), "Topic 1");
        assert!(TopicNames::parse("x\ty\n").is_err());
    }

    #[test]
    fn svg_escapes_labels() {
        let svg = bar_chart_svg("Shares", &[("A & B".into(), 10.0)]);
        assert!(svg.contains("A &amp; B"));
        assert!(svg.starts_with("<svg"));
    }
}
