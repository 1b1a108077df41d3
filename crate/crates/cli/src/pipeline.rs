use std::path::Path;
use std::time::Instant;

use fedsent_core::fednet::FederatedRun;
use serde_json::json;

use crate::error::{Result, StageContext};
use crate::manifest::{manifest_path, write_json, FileDigest, Manifest};
use crate::stages::{self, Ctx, EvalOutput};

/// Runs every stage in order inside `out`, each reading the files the
/// previous ones wrote.
pub fn run(ctx: &Ctx, input: &Path, out: &Path) -> Result<Manifest> {
    let started = chrono::Utc::now();
    let clock = Instant::now();
    std::fs::create_dir_all(out).map_err(|e| crate::error::CliError::io(out, e))?;
    let p = |name: &str| out.join(name);

    stages::ingest(ctx, input, None, &p("comments.jsonl")).stage("ingest")?;
    stages::preprocess(ctx, &p("comments.jsonl"), &p("clean.jsonl")).stage("preprocess")?;
    stages::label(ctx, &p("comments.jsonl"), &p("labels.jsonl")).stage("label")?;
    stages::topics(
        ctx,
        &p("clean.jsonl"),
        &p("topics.json"),
        &p("topic_assignments.jsonl"),
    )
    .stage("topics")?;
    stages::featurize(
        ctx,
        &p("clean.jsonl"),
        &p("labels.jsonl"),
        Some(&p("topic_assignments.jsonl")),
        out,
    )
    .stage("featurize")?;
    stages::train(
        ctx,
        &p("features_train.jsonl"),
        &p("feature_space.json"),
        &p("model.json"),
    )
    .stage("train")?;
    stages::eval(
        ctx,
        &p("model.json"),
        &p("features_val.jsonl"),
        &p("eval_report.json"),
    )
    .stage("eval")?;
    stages::federate(
        ctx,
        &p("features_train.jsonl"),
        &p("features_val.jsonl"),
        &p("feature_space.json"),
        out,
    )
    .stage("federate")?;
    stages::explain(
        ctx,
        &p("model.json"),
        &p("features_val.jsonl"),
        &p("feature_space.json"),
        &fedsent_core::SentimentLabel::ALL,
        &p("attributions.jsonl"),
    )
    .stage("explain")?;
    stages::report(
        ctx,
        &p("labels.jsonl"),
        &p("topic_assignments.jsonl"),
        &p("clean.jsonl"),
        Some(&p("topics.json")),
        out,
    )
    .stage("report")?;

    let eval: EvalOutput = fedsent_core::io::read_json(&p("eval_report.json")).stage("pipeline")?;
    let mut federated = Vec::new();
    for &n in &ctx.cfg.federation.clients {
        let name = format!("fedrun_N{n}_R{}.json", ctx.cfg.federation.rounds);
        let run: FederatedRun = fedsent_core::io::read_json(&p(&name)).stage("pipeline")?;
        federated.push(json!({"clients": n, "accuracy": run.final_report.accuracy}));
    }
    let stage_manifests = [
        "ingest",
        "preprocess",
        "label",
        "topics",
        "featurize",
        "train",
        "eval",
        "federate",
        "explain",
        "report",
    ]
    .iter()
    .map(|s| FileDigest::of(&manifest_path(out, s)))
    .collect::<Result<Vec<_>>>()?;
    let manifest = Manifest {
        stage: "pipeline".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config_hash: ctx.hash.clone(),
        seeds: ctx.cfg.seeds(),
        params: serde_json::to_value(&ctx.cfg.federation).expect("config serializes"),
        inputs: vec![FileDigest::of(input)?],
        outputs: stage_manifests,
        summary: json!({
            "centralized_accuracy": eval.report.accuracy,
            "centralized_macro_f1": eval.report.macro_f1,
            "centralized_weighted_f1": eval.report.weighted_f1,
            "majority_baseline": eval.majority_baseline,
            "federated": federated,
        }),
    };
    write_json(&manifest_path(out, "pipeline"), &manifest)?;
    // wall-clock facts live apart from the manifests so reruns compare equal
    write_json(
        &out.join("run_metadata.json"),
        &json!({
            "started_at": started.to_rfc3339(),
            "finished_at": chrono::Utc::now().to_rfc3339(),
            "elapsed_seconds": clock.elapsed().as_secs_f64(),
            "config_hash": ctx.hash,
            "parallel": ctx.exec.is_parallel(),
        }),
    )?;
    Ok(manifest)
}
