//! `fedsent`: stage-by-stage or end-to-end topic-wise sentiment analysis
//! with centralized and federated classifiers.

mod config;
mod error;
mod manifest;
mod pipeline;
mod stages;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use fedsent_core::corpus::InputFormat;
use fedsent_core::shapx::Method;
use fedsent_core::{io, synth, Exec};

use crate::config::PipelineConfig;
use crate::error::{CliError, Result};
use crate::stages::Ctx;

#[derive(Parser)]
#[command(
    name = "fedsent",
    version,
    about = "Topic-wise sentiment analysis with federated training"
)]
struct Cli {
    /// Global seed; stage seeds not set in the config fall back to it.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// TOML config file. Flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output file or directory, depending on the subcommand.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Run every stage single-threaded (results are identical).
    #[arg(long, global = true)]
    sequential: bool,

    /// More logging (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Jsonl,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Exact,
    Sampled,
}

#[derive(Subcommand)]
enum Command {
    /// Validate raw comments (JSONL or CSV) into comments.jsonl.
    Ingest {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
    /// Clean, tokenize and deduplicate comments into clean.jsonl.
    Preprocess {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Score raw comments with the sentiment lexicon into labels.jsonl.
    Label {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        lexicon: Option<PathBuf>,
    },
    /// Fit LDA on clean comments; writes the model and per-comment topics.
    Topics {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        iters: Option<usize>,
        /// Where to write dominant-topic assignments (default: next to --out).
        #[arg(long)]
        assignments: Option<PathBuf>,
    },
    /// Build tf-idf vectors and a stratified train/validation split.
    Featurize {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        /// Topic assignments whose keywords are appended to each comment.
        #[arg(long)]
        assignments: Option<PathBuf>,
    },
    /// Train the centralized classifier.
    Train {
        #[arg(long = "in")]
        input: PathBuf,
        /// Feature space (default: feature_space.json next to --in).
        #[arg(long)]
        space: Option<PathBuf>,
    },
    /// Evaluate a model on labeled feature vectors.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Simulate federated training for one or more client counts.
    Federate {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        val: PathBuf,
        #[arg(long)]
        space: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        clients: Option<Vec<usize>>,
        #[arg(long)]
        rounds: Option<usize>,
        #[arg(long)]
        epochs: Option<usize>,
    },
    /// Shapley token attributions for a seed-selected subset.
    Explain {
        #[arg(long)]
        model: PathBuf,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        space: Option<PathBuf>,
        /// negative, neutral, positive, a comma list, or all.
        #[arg(long, default_value = "all")]
        class: String,
        #[arg(long)]
        top: Option<usize>,
        #[arg(long, value_enum)]
        method: Option<MethodArg>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        subset: Option<usize>,
    },
    /// Topic x sentiment table, word frequencies and charts.
    Report {
        #[arg(long)]
        labels: PathBuf,
        /// Topic assignments JSONL.
        #[arg(long)]
        topics: PathBuf,
        /// Clean comments, for word frequencies.
        #[arg(long)]
        clean: PathBuf,
        /// Topic model, used to name topics by their keywords.
        #[arg(long)]
        topic_model: Option<PathBuf>,
    },
    /// Every stage end to end.
    Pipeline {
        #[arg(long = "in")]
        input: Option<PathBuf>,
    },
    /// Write a deterministic synthetic comment corpus.
    Synth {
        #[arg(long, default_value_t = 1000)]
        n: usize,
    },
}

fn sibling(path: &Path, name: &str) -> PathBuf {
    path.parent().unwrap_or(Path::new(".")).join(name)
}

impl Cli {
    fn out_or(&self, cfg: &PipelineConfig, default: &str) -> PathBuf {
        self.out.clone().unwrap_or_else(|| {
            cfg.out
                .clone()
                .unwrap_or_else(|| PathBuf::from("."))
                .join(default)
        })
    }

    fn out_dir(&self, cfg: &PipelineConfig) -> PathBuf {
        self.out
            .clone()
            .or_else(|| cfg.out.clone())
            .unwrap_or_else(|| PathBuf::from("."))
    }
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = PipelineConfig::load_or_default(cli.config.as_deref())?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    match &cli.command {
        Command::Label {
            lexicon: Some(p), ..
        } => cfg.assets.lexicon = Some(p.clone()),
        Command::Topics { k, iters, .. } => {
            if let Some(k) = k {
                cfg.topics.k = *k;
            }
            if let Some(i) = iters {
                cfg.topics.iterations = *i;
            }
        }
        Command::Federate {
            clients,
            rounds,
            epochs,
            ..
        } => {
            if let Some(c) = clients {
                cfg.federation.clients = c.clone();
            }
            if let Some(r) = rounds {
                cfg.federation.rounds = *r;
            }
            if let Some(e) = epochs {
                cfg.federation.local_epochs = *e;
            }
        }
        Command::Explain {
            top,
            method,
            samples,
            subset,
            ..
        } => {
            if let Some(t) = top {
                cfg.explain.top = *t;
            }
            if let Some(m) = method {
                cfg.explain.method = match m {
                    MethodArg::Exact => Method::Exact,
                    MethodArg::Sampled => Method::Sampled,
                };
            }
            if let Some(s) = samples {
                cfg.explain.samples = *s;
            }
            if let Some(s) = subset {
                cfg.explain.subset = *s;
            }
        }
        Command::Pipeline { input: Some(p) } => cfg.input = Some(p.clone()),
        _ => {}
    }
    let exec = if cli.sequential {
        Exec::Sequential
    } else {
        Exec::default()
    };

    if let Command::Synth { n } = cli.command {
        let out = cli.out_or(&cfg, "synthetic.jsonl");
        io::write_jsonl(&out, &synth::comments(n, cfg.seed))?;
        return Ok(());
    }

    let ctx = Ctx::new(cfg, exec)?;
    let cfg = &ctx.cfg;
    let manifest = match &cli.command {
        Command::Ingest { input, format } => {
            let format = format.map(|f| match f {
                Format::Jsonl => InputFormat::Jsonl,
                Format::Csv => InputFormat::Csv,
            });
            stages::ingest(&ctx, input, format, &cli.out_or(cfg, "comments.jsonl"))?
        }
        Command::Preprocess { input } => {
            stages::preprocess(&ctx, input, &cli.out_or(cfg, "clean.jsonl"))?
        }
        Command::Label { input, .. } => {
            stages::label(&ctx, input, &cli.out_or(cfg, "labels.jsonl"))?
        }
        Command::Topics {
            input, assignments, ..
        } => {
            let out = cli.out_or(cfg, "topics.json");
            let assignments = assignments
                .clone()
                .unwrap_or_else(|| sibling(&out, "topic_assignments.jsonl"));
            stages::topics(&ctx, input, &out, &assignments)?
        }
        Command::Featurize {
            input,
            labels,
            assignments,
        } => stages::featurize(
            &ctx,
            input,
            labels,
            assignments.as_deref(),
            &cli.out_dir(cfg),
        )?,
        Command::Train { input, space } => {
            let space = space
                .clone()
                .unwrap_or_else(|| sibling(input, "feature_space.json"));
            stages::train(&ctx, input, &space, &cli.out_or(cfg, "model.json"))?
        }
        Command::Eval {
            model,
            input,
            report,
        } => {
            let report = report
                .clone()
                .unwrap_or_else(|| cli.out_or(cfg, "eval_report.json"));
            stages::eval(&ctx, model, input, &report)?
        }
        Command::Federate {
            input, val, space, ..
        } => {
            let space = space
                .clone()
                .unwrap_or_else(|| sibling(input, "feature_space.json"));
            stages::federate(&ctx, input, val, &space, &cli.out_dir(cfg))?
        }
        Command::Explain {
            model,
            input,
            space,
            class,
            ..
        } => {
            let space = space
                .clone()
                .unwrap_or_else(|| sibling(input, "feature_space.json"));
            let classes = stages::parse_classes(class)?;
            stages::explain(
                &ctx,
                model,
                input,
                &space,
                &classes,
                &cli.out_or(cfg, "attributions.jsonl"),
            )?
        }
        Command::Report {
            labels,
            topics,
            clean,
            topic_model,
        } => stages::report(
            &ctx,
            labels,
            topics,
            clean,
            topic_model.as_deref(),
            &cli.out_dir(cfg),
        )?,
        Command::Pipeline { .. } => {
            let input = cfg.input.clone().ok_or_else(|| {
                CliError::Config(
                    "pipeline needs an input corpus (--in or `input` in the config)".into(),
                )
            })?;
            pipeline::run(&ctx, &input, &cli.out_dir(cfg))?
        }
        Command::Synth { .. } => unreachable!("handled above"),
    };
    log::info!("{} done: {}", manifest.stage, manifest.summary);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let mut msg = e.to_string();
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                if !msg.ends_with(&s.to_string()) {
                    msg.push_str(&format!(": {s}"));
                }
                source = s.source();
            }
            eprintln!("error: {msg}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
