//! Topic-wise sentiment analysis toolkit.
//!
//! The crate covers the whole analysis path for a corpus of short comments:
//!
//! - [`corpus`]: ingestion and the text cleaning pipeline
//! - [`sentilex`]: rule-based compound sentiment scoring and 3-way labeling
//! - [`topicmodel`]: LDA fitted by collapsed Gibbs sampling
//! - [`textclf`]: tf-idf features, a softmax classifier and evaluation metrics
//! - [`fednet`]: stratified client partitioning and FedAvg training rounds
//! - [`shapx`]: Shapley token attributions (exact for linear models, sampled in general)
//! - [`dataset`]: labeled feature vectors and stratified train/validation splits
//! - [`report`]: topic shares, topic x sentiment tables and word frequencies
//!
//! Data-parallel loops go through [`exec::Exec`]; with the `parallel` feature
//! disabled every path runs sequentially and produces identical results.

pub mod assets;
pub mod corpus;
pub mod dataset;
pub mod error;
pub mod exec;
pub mod fednet;
pub mod io;
pub mod report;
pub mod sentilex;
pub mod shapx;
pub mod synth;
pub mod textclf;
pub mod topicmodel;

pub use error::{Error, Result};
pub use exec::Exec;
pub use sentilex::SentimentLabel;
