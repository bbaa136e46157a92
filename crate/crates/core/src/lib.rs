//! Two-stage weekly stock-index trend prediction from financial news.
//!
//! A sentiment *extractor* scores individual articles from a text encoding
//! combined with polarity-over-time (POT) word features, and is trained with
//! an auxiliary worthiness head. A *summarizer* averages article scores over
//! a Monday-to-Monday week and maps the result to next week's index
//! direction with a linear hinge-loss classifier.
//!
//! Module map:
//!
//! - [`corpus`]: news ingestion, cleaning, tokenization, worthiness proxies,
//!   POT vocabulary selection.
//! - [`calendar`]: Monday anchors, weekly percent changes, binning policies,
//!   news-to-week assignment, weekday autocorrelation.
//! - [`lexicon`]: TF-IDF, TF-IDF-difference ranking, POT scores and matrices.
//! - [`extractor`]: encoder interface, POT attention, dual-head model,
//!   masked multitask loss, training and gradient checking.
//! - [`summarizer`]: weekly aggregation with the leakage guard, hinge-loss
//!   classifier.
//! - [`metrics`]: accuracy, F1, MCC, Pearson correlation, reports.
//! - [`pipeline`]: workdir stages with manifests, driven by the `potrend`
//!   binary.

pub mod calendar;
pub mod config;
pub mod corpus;
pub mod error;
pub mod extractor;
pub mod lexicon;
pub mod metrics;
pub mod pipeline;
pub mod summarizer;
pub mod synth;

mod util;

pub use error::{Error, Result, Undefined};
