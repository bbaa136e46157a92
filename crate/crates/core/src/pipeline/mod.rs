//! Workdir stages. Each stage reads the artifacts of earlier stages, writes
//! its own under fixed names, and records a manifest in `manifests/`.
//! A stage refuses to run on upstream artifacts whose configuration or
//! content no longer matches their manifest unless forced.

mod manifest;
mod stages;

use std::path::{Path, PathBuf};

use serde_json::json;

pub use manifest::{Manifest, WorkdirLock};
pub use stages::{write_synthetic, SynthSummary, TrajectoryRequest};

use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::util;

/// Stage names in run order.
pub const STAGES: [&str; 8] = [
    "ingest",
    "label",
    "pot",
    "train-extractor",
    "score",
    "train-summarizer",
    "evaluate",
    "export-plot-data",
];

pub const NEWS: &str = "news.jsonl";
pub const REJECTIONS: &str = "rejections.csv";
pub const WEEKS: &str = "weeks.csv";
pub const AUTOCORRELATION: &str = "autocorrelation.csv";
pub const POT_VOCAB: &str = "pot_vocab.txt";
pub const POT_DIR: &str = "pot";
pub const EXTRACTOR: &str = "extractor.model";
pub const TRAINING_LOG: &str = "training_log.csv";
pub const EXTRACTOR_WEEKS: &str = "extractor_weeks.csv";
pub const WEEKLY_SCORES: &str = "weekly_scores.jsonl";
pub const ARTICLE_SCORES: &str = "article_scores.csv";
pub const SUMMARIZER: &str = "summarizer.json";
pub const WEEKLY_SENTIMENT: &str = "weekly_sentiment.csv";
pub const REPORT_TXT: &str = "report.txt";
pub const REPORT_CSV: &str = "report.csv";
pub const EVALUATION: &str = "evaluation.json";
pub const PLOTS_DIR: &str = "plots";

/// A locked work directory and the configuration its stages run with.
#[derive(Debug)]
pub struct Pipeline {
    config: PipelineConfig,
    workdir: PathBuf,
    force: bool,
    _lock: WorkdirLock,
}

impl Pipeline {
    /// Creates the work directory if needed and locks it.
    pub fn open(config: PipelineConfig, force: bool) -> Result<Self> {
        config.validate()?;
        let workdir = config.paths.workdir.clone();
        let lock = WorkdirLock::acquire(&workdir)?;
        Ok(Self { config, workdir, force, _lock: lock })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn workdir(&self) -> &Path {
        &self.workdir
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.workdir.join(rel)
    }

    pub fn manifest_path(&self, stage: &str) -> PathBuf {
        self.workdir.join("manifests").join(format!("{stage}.json"))
    }

    /// The configuration sections a stage depends on.
    pub fn stage_config(&self, stage: &str) -> serde_json::Value {
        let c = &self.config;
        match stage {
            "ingest" => json!({ "news": c.paths.news, "corpus": c.corpus }),
            "label" => json!({ "prices": c.paths.prices, "calendar": c.calendar }),
            "pot" => json!({ "pot": c.pot, "max_tokens": c.corpus.max_tokens }),
            "train-extractor" => json!({ "extractor": c.extractor }),
            "score" => json!({ "dataset": c.summarizer.dataset() }),
            "train-summarizer" => json!({ "summarizer": c.summarizer }),
            _ => json!({}),
        }
    }

    /// Reads the manifest of `stage` and checks it against the current
    /// configuration and the files it lists.
    fn upstream(&self, stage: &'static str) -> Result<Manifest> {
        let path = self.manifest_path(stage);
        if !path.exists() {
            return Err(Error::MissingArtifact { stage, path });
        }
        let m = Manifest::read(&path)?;
        let mut config_changed = false;
        let mut problems = Vec::new();
        if m.config != self.stage_config(stage) {
            config_changed = true;
            problems.push(format!("configuration of `{stage}` changed since it ran"));
        }
        for (rel, hash) in &m.outputs {
            let p = self.path(rel);
            if !p.exists() {
                return Err(Error::MissingArtifact { stage, path: p });
            }
            if util::sha256_file(&p)? != *hash {
                problems.push(format!("{rel} changed since `{stage}` wrote it"));
            }
        }
        for (rel, hash) in &m.inputs {
            let p = self.path(rel);
            if !p.exists() || util::sha256_file(&p)? != *hash {
                problems.push(format!("{rel} changed since `{stage}` read it"));
            }
        }
        if problems.is_empty() {
            return Ok(m);
        }
        for p in &problems {
            log::warn!("{p}");
        }
        if self.force {
            log::warn!("continuing on stale `{stage}` artifacts (--force)");
            return Ok(m);
        }
        let msg = format!("{}; rerun `{stage}` or pass --force", problems.join("; "));
        Err(if config_changed { Error::config(msg) } else { Error::data(msg) })
    }

    /// Checks every listed upstream stage and records its manifest as an
    /// input of `m`.
    fn upstreams(&self, m: &mut Manifest, stages: &[&'static str]) -> Result<()> {
        for s in stages {
            self.upstream(s)?;
            let rel = format!("manifests/{s}.json");
            m.inputs.insert(rel.clone(), util::sha256_file(&self.path(&rel))?);
        }
        Ok(())
    }

    fn manifest(&self, stage: &str) -> Manifest {
        Manifest::new(stage, self.stage_config(stage))
    }

    fn record_inputs(&self, m: &mut Manifest, rels: &[&str]) -> Result<()> {
        for rel in rels {
            m.inputs.insert(rel.to_string(), util::sha256_file(&self.path(rel))?);
        }
        Ok(())
    }

    fn record_source(&self, m: &mut Manifest, path: &Path) -> Result<()> {
        m.sources.insert(path.display().to_string(), util::sha256_file(path)?);
        Ok(())
    }

    fn finish(&self, mut m: Manifest, outputs: &[String]) -> Result<()> {
        for rel in outputs {
            m.outputs.insert(rel.clone(), util::sha256_file(&self.path(rel))?);
        }
        m.write(&self.manifest_path(&m.stage))
    }

    /// Runs every stage in order.
    pub fn run_all(&self) -> Result<Vec<String>> {
        Ok(vec![
            self.ingest()?,
            self.label()?,
            self.pot(None)?,
            self.train_extractor()?,
            self.score()?,
            self.train_summarizer()?,
            self.evaluate()?,
            self.export_plot_data(&[])?,
        ])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(dir: &Path) -> PipelineConfig {
        let mut c = PipelineConfig::default();
        c.paths.workdir = dir.join("work");
        c
    }

    #[test]
    fn missing_upstream_manifest_names_the_stage() {
        let dir = tempfile::tempdir().unwrap();
        let p = Pipeline::open(config(dir.path()), false).unwrap();
        let err = p.label().unwrap_err();
        assert!(matches!(err, Error::MissingArtifact { stage: "ingest", .. }), "{err}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn second_open_fails_while_locked() {
        let dir = tempfile::tempdir().unwrap();
        let _p = Pipeline::open(config(dir.path()), false).unwrap();
        assert!(Pipeline::open(config(dir.path()), false).is_err());
    }

    #[test]
    fn stage_configs_cover_known_stages() {
        let dir = tempfile::tempdir().unwrap();
        let p = Pipeline::open(config(dir.path()), false).unwrap();
        for s in &STAGES[..6] {
            assert_ne!(p.stage_config(s), json!({}), "{s}");
        }
    }
}
