//! One function per pipeline stage. Each reads its inputs from files,
//! writes its outputs through [`Staged`] and returns the stage manifest.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use fedsent_core::corpus::{
    clean_corpus, ingest as read_input, CleanComment, InputFormat, PreprocessConfig, RawComment,
};
use fedsent_core::dataset::{labeled_features, stratified_split};
use fedsent_core::fednet::{run_federated, FedConfig};
use fedsent_core::report::{bar_chart_svg, crosstab, word_frequencies, TopicNames};
use fedsent_core::sentilex::{label_corpus, to_records, LabelRecord, Lexicon, SentimentLabel};
use fedsent_core::shapx::{class_summary, explain as attribute, select_subset, ClassSummary};
use fedsent_core::textclf::{
    evaluate, majority_baseline, train as fit, EvalReport, FeatureSpace, FeatureVector, LinearModel,
};
use fedsent_core::topicmodel::{build_vocab, fit_lda, LdaParams, TopicAssignment, TopicModel};
use fedsent_core::{assets, io, Exec};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::PipelineConfig;
use crate::error::{CliError, Result};
use crate::manifest::{manifest_path, Manifest, Staged};

pub struct Ctx {
    pub cfg: PipelineConfig,
    pub hash: String,
    pub exec: Exec,
}

impl Ctx {
    pub fn new(cfg: PipelineConfig, exec: Exec) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            hash: cfg.hash(),
            cfg,
            exec,
        })
    }

    fn manifest(
        &self,
        stage: &str,
        params: serde_json::Value,
        summary: serde_json::Value,
    ) -> Manifest {
        Manifest {
            stage: stage.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash: self.hash.clone(),
            seeds: self.cfg.seeds(),
            params,
            inputs: Vec::new(),
            outputs: Vec::new(),
            summary,
        }
    }
}

fn dir_of(path: &Path) -> PathBuf {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    }
}

fn require(path: &Path) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::MissingPath(path.to_path_buf()))
    }
}

fn read_jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    require(path)?;
    Ok(io::read_jsonl(path)?)
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    require(path)?;
    Ok(io::read_json(path)?)
}

fn class_counts<'a>(labels: impl Iterator<Item = &'a SentimentLabel>) -> serde_json::Value {
    let mut counts = [0usize; 3];
    for l in labels {
        counts[l.index()] += 1;
    }
    json!({"negative": counts[0], "neutral": counts[1], "positive": counts[2]})
}

pub fn ingest(
    ctx: &Ctx,
    input: &Path,
    format: Option<InputFormat>,
    out: &Path,
) -> Result<Manifest> {
    require(input)?;
    let format = format.unwrap_or_else(|| InputFormat::from_path(input));
    let got = read_input(input, format)?;
    for e in &got.errors {
        log::warn!("{}:{}: {}", input.display(), e.line, e.message);
    }
    let dir = dir_of(out);
    let errors_path = dir.join("ingest_errors.jsonl");
    let mut staged = Staged::new();
    io::write_jsonl(&staged.partial(out)?, &got.comments)?;
    io::write_jsonl(&staged.partial(&errors_path)?, &got.errors)?;
    let m = ctx.manifest(
        "ingest",
        json!({"format": format!("{format:?}").to_lowercase()}),
        json!({"comments": got.comments.len(), "row_errors": got.errors.len()}),
    );
    staged.commit(&manifest_path(&dir, "ingest"), m, &[input])
}

fn preprocess_config(cfg: &PipelineConfig) -> Result<PreprocessConfig> {
    let a = &cfg.assets;
    Ok(PreprocessConfig::load(
        a.stopwords.as_deref(),
        a.negation_whitelist.as_deref(),
        a.emoji.as_deref(),
        a.lemmas.as_deref(),
        cfg.preprocess.min_tokens,
    )?)
}

pub fn preprocess(ctx: &Ctx, comments: &Path, out: &Path) -> Result<Manifest> {
    let raw: Vec<RawComment> = read_jsonl(comments)?;
    let pcfg = preprocess_config(&ctx.cfg)?;
    let (clean, counts) = clean_corpus(&raw, &pcfg, ctx.exec);
    let mut staged = Staged::new();
    io::write_jsonl(&staged.partial(out)?, &clean)?;
    let m = ctx.manifest(
        "preprocess",
        json!({"min_tokens": ctx.cfg.preprocess.min_tokens}),
        serde_json::to_value(counts).expect("counts serialize"),
    );
    staged.commit(&manifest_path(&dir_of(out), "preprocess"), m, &[comments])
}

fn lexicon(cfg: &PipelineConfig) -> Result<Lexicon> {
    let a = &cfg.assets;
    if a.lexicon.is_none() && a.boosters.is_none() && a.negations.is_none() {
        return Ok(Lexicon::bundled());
    }
    let read = |p: &Option<PathBuf>, fallback: &'static str| -> Result<String> {
        match p {
            Some(p) => Ok(io::read_to_string(p)?),
            None => Ok(fallback.to_string()),
        }
    };
    Ok(Lexicon::from_tables(
        &read(&a.lexicon, assets::VADER_LEXICON)?,
        &read(&a.boosters, assets::BOOSTERS)?,
        &read(&a.negations, assets::NEGATIONS)?,
    )?)
}

pub fn label(ctx: &Ctx, comments: &Path, out: &Path) -> Result<Manifest> {
    let raw: Vec<RawComment> = read_jsonl(comments)?;
    let lex = lexicon(&ctx.cfg)?;
    let records = to_records(&label_corpus(&raw, &lex, ctx.exec));
    let mut staged = Staged::new();
    io::write_jsonl(&staged.partial(out)?, &records)?;
    let m = ctx.manifest(
        "label",
        json!({"lexicon_entries": lex.entries.len()}),
        class_counts(records.iter().map(|r| &r.label)),
    );
    staged.commit(&manifest_path(&dir_of(out), "label"), m, &[comments])
}

pub fn topics(
    ctx: &Ctx,
    clean: &Path,
    model_out: &Path,
    assignments_out: &Path,
) -> Result<Manifest> {
    let corpus: Vec<CleanComment> = read_jsonl(clean)?;
    let t = &ctx.cfg.topics;
    let vocab = build_vocab(&corpus, t.min_df)?;
    let params = LdaParams {
        k: t.k,
        alpha: ctx.cfg.alpha(),
        beta: t.beta,
        iterations: t.iterations,
        seed: ctx.cfg.seeds().topics,
    };
    let model = fit_lda(&corpus, &vocab, params)?;
    let assignments = model.assign_all(t.keywords)?;
    let dominant: Vec<usize> = assignments.iter().map(|a| a.dominant_topic).collect();
    let keywords: Vec<Vec<String>> = (0..t.k)
        .map(|k| model.top_keywords(k, t.keywords))
        .collect::<std::result::Result<_, _>>()?;
    let mut staged = Staged::new();
    model.save(&staged.partial(model_out)?)?;
    io::write_jsonl(&staged.partial(assignments_out)?, &assignments)?;
    let m = ctx.manifest(
        "topics",
        serde_json::to_value(params).expect("params serialize"),
        json!({
            "documents": model.num_docs(),
            "skipped": model.skipped.len(),
            "vocabulary": vocab.len(),
            "log_likelihood": model.log_likelihood(),
            "distribution": fedsent_core::report::topic_distribution(&dominant)?,
            "keywords": keywords,
        }),
    );
    staged.commit(&manifest_path(&dir_of(model_out), "topics"), m, &[clean])
}

fn labels_by_id(records: &[LabelRecord]) -> HashMap<String, SentimentLabel> {
    records.iter().map(|r| (r.id.clone(), r.label)).collect()
}

pub fn featurize(
    ctx: &Ctx,
    clean: &Path,
    labels: &Path,
    assignments: Option<&Path>,
    out_dir: &Path,
) -> Result<Manifest> {
    let corpus: Vec<CleanComment> = read_jsonl(clean)?;
    let records: Vec<LabelRecord> = read_jsonl(labels)?;
    let c = &ctx.cfg.classifier;
    let keywords: Option<HashMap<String, Vec<String>>> = match assignments {
        Some(p) if c.topic_keywords > 0 => {
            let a: Vec<TopicAssignment> = read_jsonl(p)?;
            Some(
                a.into_iter()
                    .map(|mut a| {
                        a.topic_keywords.truncate(c.topic_keywords);
                        (a.id, a.topic_keywords)
                    })
                    .collect(),
            )
        }
        _ => None,
    };
    let space = FeatureSpace::fit(&corpus, ctx.cfg.topics.min_df, c.max_tokens)?;
    let data = labeled_features(
        &space,
        &corpus,
        &labels_by_id(&records),
        keywords.as_ref(),
        ctx.exec,
    )?;
    let (train, val) = stratified_split(&data, c.val_fraction, ctx.cfg.seeds().split)?;
    let mut staged = Staged::new();
    space.save(&staged.partial(&out_dir.join("feature_space.json"))?)?;
    io::write_jsonl(
        &staged.partial(&out_dir.join("features_train.jsonl"))?,
        &train,
    )?;
    io::write_jsonl(&staged.partial(&out_dir.join("features_val.jsonl"))?, &val)?;
    let m = ctx.manifest(
        "featurize",
        json!({
            "min_df": ctx.cfg.topics.min_df,
            "max_tokens": c.max_tokens,
            "val_fraction": c.val_fraction,
            "topic_keywords": if keywords.is_some() { c.topic_keywords } else { 0 },
        }),
        json!({
            "dim": space.dim(),
            "vocab_hash": space.vocab_hash(),
            "train": train.len(),
            "val": val.len(),
            "train_classes": class_counts(train.iter().filter_map(|x| x.label.as_ref())),
            "val_classes": class_counts(val.iter().filter_map(|x| x.label.as_ref())),
        }),
    );
    let mut inputs = vec![clean, labels];
    inputs.extend(assignments.filter(|_| keywords.is_some()));
    staged.commit(&manifest_path(out_dir, "featurize"), m, &inputs)
}

pub fn train(ctx: &Ctx, data: &Path, space: &Path, out: &Path) -> Result<Manifest> {
    let train: Vec<FeatureVector> = read_jsonl(data)?;
    let space: FeatureSpace = read_json(space)?;
    let params = ctx.cfg.train_params();
    let mut model = fit(&train, space.dim(), params)?;
    model.vocab_hash = space.vocab_hash();
    let train_report = evaluate(&model, &train, ctx.exec)?;
    let mut staged = Staged::new();
    model.save(&staged.partial(out)?)?;
    let m = ctx.manifest(
        "train",
        serde_json::to_value(params).expect("params serialize"),
        json!({"examples": train.len(), "dim": space.dim(), "train_accuracy": train_report.accuracy}),
    );
    staged.commit(&manifest_path(&dir_of(out), "train"), m, &[data])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalOutput {
    #[serde(flatten)]
    pub report: EvalReport,
    pub majority_baseline: f64,
}

pub fn eval(ctx: &Ctx, model: &Path, data: &Path, report_out: &Path) -> Result<Manifest> {
    require(model)?;
    let m = LinearModel::load(model)?;
    let examples: Vec<FeatureVector> = read_jsonl(data)?;
    let report = evaluate(&m, &examples, ctx.exec)?;
    let out = EvalOutput {
        majority_baseline: majority_baseline(&examples),
        report,
    };
    let mut staged = Staged::new();
    io::write_json(&staged.partial(report_out)?, &out)?;
    let man = ctx.manifest(
        "eval",
        json!({}),
        json!({
            "examples": out.report.total,
            "accuracy": out.report.accuracy,
            "macro_f1": out.report.macro_f1,
            "weighted_f1": out.report.weighted_f1,
            "majority_baseline": out.majority_baseline,
        }),
    );
    staged.commit(
        &manifest_path(&dir_of(report_out), "eval"),
        man,
        &[model, data],
    )
}

pub fn federate(
    ctx: &Ctx,
    train: &Path,
    val: &Path,
    space: &Path,
    out_dir: &Path,
) -> Result<Manifest> {
    let train_data: Vec<FeatureVector> = read_jsonl(train)?;
    let val_data: Vec<FeatureVector> = read_jsonl(val)?;
    let space: FeatureSpace = read_json(space)?;
    let f = &ctx.cfg.federation;
    let seed = ctx.cfg.seeds().federation;
    let mut staged = Staged::new();
    let mut rows = Vec::new();
    for &n in &f.clients {
        let cfg = FedConfig {
            clients: n,
            rounds: f.rounds,
            local_epochs: f.local_epochs,
            seed,
            train: ctx.cfg.train_params(),
        };
        let run = run_federated(&train_data, &val_data, space.dim(), &cfg, ctx.exec)?;
        io::write_json(&staged.partial(&out_dir.join(run.manifest_name()))?, &run)?;
        rows.push(json!({
            "clients": n,
            "accuracy": run.final_report.accuracy,
            "macro_f1": run.final_report.macro_f1,
            "weighted_f1": run.final_report.weighted_f1,
        }));
    }
    let m = ctx.manifest(
        "federate",
        json!({
            "clients": f.clients,
            "rounds": f.rounds,
            "local_epochs": f.local_epochs,
            "train": ctx.cfg.train_params(),
        }),
        json!({"runs": rows}),
    );
    staged.commit(&manifest_path(out_dir, "federate"), m, &[train, val])
}

pub fn parse_classes(arg: &str) -> Result<Vec<SentimentLabel>> {
    if arg.eq_ignore_ascii_case("all") {
        return Ok(SentimentLabel::ALL.to_vec());
    }
    arg.split(',')
        .map(|s| {
            s.trim().parse().map_err(|_| {
                CliError::Config(format!(
                    "unknown class `{s}` (expected negative, neutral, positive or all)"
                ))
            })
        })
        .collect()
}

pub fn explain(
    ctx: &Ctx,
    model: &Path,
    data: &Path,
    space: &Path,
    classes: &[SentimentLabel],
    out: &Path,
) -> Result<Manifest> {
    require(model)?;
    let m = LinearModel::load(model)?;
    let examples: Vec<FeatureVector> = read_jsonl(data)?;
    let space: FeatureSpace = read_json(space)?;
    if !m.vocab_hash.is_empty() && m.vocab_hash != space.vocab_hash() {
        return Err(CliError::Data(
            "model and feature space use different vocabularies".into(),
        ));
    }
    let e = &ctx.cfg.explain;
    let seed = ctx.cfg.seeds().explain;
    let subset: Vec<FeatureVector> = select_subset(examples.len(), e.subset, seed)
        .into_iter()
        .map(|i| examples[i].clone())
        .collect();
    let attributions = attribute(
        &m,
        &subset,
        &space.vocab,
        classes,
        e.method,
        e.samples,
        seed,
        ctx.exec,
    )?;
    let summaries: Vec<ClassSummary> = classes
        .iter()
        .map(|&c| class_summary(&attributions, c, e.top))
        .collect();
    let dir = dir_of(out);
    let mut staged = Staged::new();
    io::write_jsonl(&staged.partial(out)?, &attributions)?;
    io::write_json(&staged.partial(&dir.join("shap_summary.json"))?, &summaries)?;
    let worst = attributions
        .iter()
        .map(|a| a.efficiency_gap())
        .fold(0.0, f64::max);
    let man = ctx.manifest(
        "explain",
        json!({
            "method": e.method,
            "samples": e.samples,
            "subset": e.subset,
            "top": e.top,
            "classes": classes,
        }),
        json!({"explained": subset.len(), "attributions": attributions.len(), "max_efficiency_gap": worst}),
    );
    staged.commit(&manifest_path(&dir, "explain"), man, &[model, data])
}

/// Topic display names: the configured names file, else the leading
/// keywords of each topic when a topic model is at hand.
fn topic_names(cfg: &PipelineConfig, model: Option<&TopicModel>) -> Result<TopicNames> {
    if let Some(p) = &cfg.assets.topic_names {
        return Ok(TopicNames::load(p)?);
    }
    let Some(model) = model else {
        return Ok(TopicNames::default());
    };
    (0..model.k)
        .map(|k| Ok((k, model.top_keywords(k, 3)?.join(" "))))
        .collect()
}

pub fn report(
    ctx: &Ctx,
    labels: &Path,
    assignments: &Path,
    clean: &Path,
    topic_model: Option<&Path>,
    out_dir: &Path,
) -> Result<Manifest> {
    let records: Vec<LabelRecord> = read_jsonl(labels)?;
    let assigned: Vec<TopicAssignment> = read_jsonl(assignments)?;
    let corpus: Vec<CleanComment> = read_jsonl(clean)?;
    let model = topic_model.map(read_json::<TopicModel>).transpose()?;
    let names = topic_names(&ctx.cfg, model.as_ref())?;
    let k = model.as_ref().map(|m| m.k);
    // only comments that made it through cleaning take part
    let kept: std::collections::HashSet<&str> = corpus.iter().map(|c| c.id.as_str()).collect();
    let records: Vec<LabelRecord> = records
        .into_iter()
        .filter(|r| kept.contains(r.id.as_str()))
        .collect();
    let table = crosstab(&assigned, &records, &names, k);

    let mut staged = Staged::new();
    table.write_csv(&staged.partial(&out_dir.join("topic_sentiment.csv"))?)?;
    let mut freq_summary = serde_json::Map::new();
    for class in SentimentLabel::ALL {
        let freq = word_frequencies(&corpus, &records, class, ctx.cfg.report.wordfreq_top);
        freq.write_csv(&staged.partial(&out_dir.join(format!("wordfreq_{class}.csv")))?)?;
        if ctx.cfg.report.svg {
            let bars: Vec<(String, f64)> = freq
                .entries
                .iter()
                .take(20)
                .map(|(t, c)| (t.clone(), *c as f64))
                .collect();
            let svg = bar_chart_svg(&format!("Most frequent words: {class}"), &bars);
            write_text(
                &staged.partial(&out_dir.join(format!("wordfreq_{class}.svg")))?,
                &svg,
            )?;
        }
        freq_summary.insert(
            class.to_string(),
            json!(freq
                .entries
                .iter()
                .take(10)
                .map(|e| e.0.clone())
                .collect::<Vec<_>>()),
        );
    }
    if ctx.cfg.report.svg {
        let bars: Vec<(String, f64)> = table
            .rows
            .iter()
            .map(|r| (r.name.clone(), r.share_pct))
            .collect();
        write_text(
            &staged.partial(&out_dir.join("topic_shares.svg"))?,
            &bar_chart_svg("Topic share (%)", &bars),
        )?;
    }
    let m = ctx.manifest(
        "report",
        json!({"svg": ctx.cfg.report.svg, "wordfreq_top": ctx.cfg.report.wordfreq_top}),
        json!({
            "joined": table.total(),
            "unmatched": table.unmatched.len(),
            "shares": table.rows.iter().map(|r| json!({"topic": r.topic, "name": r.name, "share_pct": r.share_pct})).collect::<Vec<_>>(),
            "top_words": freq_summary,
        }),
    );
    let mut inputs = vec![labels, assignments, clean];
    inputs.extend(topic_model);
    staged.commit(&manifest_path(out_dir, "report"), m, &inputs)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}
