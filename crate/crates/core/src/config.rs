//! Pipeline configuration: a TOML file of sections with dotted keys, plus
//! `key=value` overrides applied on top.

use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::calendar::{BinningPolicy, LabelConfig, WeekBoundary};
use crate::corpus::{FilterRules, ProxyPolicy};
use crate::error::{Error, Result};
use crate::extractor::ExtractorConfig;
use crate::lexicon::PotParams;
use crate::summarizer::SummarizerConfig;
use crate::synth::SynthConfig;
use crate::util;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    pub news: PathBuf,
    pub prices: PathBuf,
    pub workdir: PathBuf,
}

impl Default for PathsConfig {
    fn default() -> Self {
        Self { news: "news.jsonl".into(), prices: "prices.csv".into(), workdir: "work".into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusConfig {
    /// Tokens kept per article, title first.
    pub max_tokens: usize,
    pub filter: FilterRules,
    pub proxy: ProxyPolicy,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        Self { max_tokens: 180, filter: FilterRules::default(), proxy: ProxyPolicy::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalendarConfig {
    pub boundary: WeekBoundary,
    /// First and last anchor considered; default the whole price series.
    pub from: Option<NaiveDate>,
    pub to: Option<NaiveDate>,
    /// Weeks between a news week and the week whose change labels it for
    /// extractor training.
    pub extractor_offset: usize,
    pub labels: LabelConfig,
    pub policy: BinningPolicy,
}

impl Default for CalendarConfig {
    fn default() -> Self {
        Self {
            boundary: WeekBoundary::Ending,
            from: None,
            to: None,
            extractor_offset: 0,
            labels: LabelConfig::default(),
            policy: BinningPolicy::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PotConfig {
    /// POT vocabulary size V.
    pub vocab_size: usize,
    /// Lag columns L.
    pub lags: usize,
    pub window_weeks: usize,
    pub alpha: f64,
}

impl Default for PotConfig {
    fn default() -> Self {
        let p = PotParams::default();
        Self { vocab_size: 512, lags: 4, window_weeks: p.window_weeks, alpha: p.alpha }
    }
}

impl PotConfig {
    pub fn params(&self) -> PotParams {
        PotParams { window_weeks: self.window_weeks, alpha: self.alpha }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub paths: PathsConfig,
    pub corpus: CorpusConfig,
    pub calendar: CalendarConfig,
    pub pot: PotConfig,
    pub extractor: ExtractorConfig,
    pub summarizer: SummarizerConfig,
    pub synth: SynthConfig,
}

/// Dates written bare in TOML parse as datetimes; the config types expect
/// ISO date strings.
fn dates_to_strings(value: &mut toml::Value) {
    match value {
        toml::Value::Datetime(d) => *value = toml::Value::String(d.to_string()),
        toml::Value::Array(items) => items.iter_mut().for_each(dates_to_strings),
        toml::Value::Table(t) => t.iter_mut().for_each(|(_, v)| dates_to_strings(v)),
        _ => {}
    }
}

fn parse_value(raw: &str) -> toml::Value {
    match toml::from_str::<toml::Table>(&format!("v = {raw}")) {
        Ok(mut t) => t.remove("v").expect("key present"),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

/// Sets `a.b.c = value` in `root`, creating tables on the way.
fn set_dotted(root: &mut toml::Table, key: &str, value: toml::Value) -> Result<()> {
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::config(format!("bad config key {key:?}")));
    }
    let mut table = root;
    for part in &parts[..parts.len() - 1] {
        let entry = table.entry(part.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = match entry {
            toml::Value::Table(t) => t,
            _ => return Err(Error::config(format!("config key {key:?}: {part} is not a section"))),
        };
    }
    table.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

impl PipelineConfig {
    /// Parses TOML text and applies `key=value` overrides in order.
    pub fn from_toml(text: &str, overrides: &[String]) -> Result<Self> {
        let mut root: toml::Table = toml::from_str(text).map_err(|e| Error::config(format!("config: {e}")))?;
        for o in overrides {
            let (key, raw) = o
                .split_once('=')
                .ok_or_else(|| Error::config(format!("override {o:?} is not key=value")))?;
            set_dotted(&mut root, key.trim(), parse_value(raw.trim()))?;
        }
        let mut value = toml::Value::Table(root);
        dates_to_strings(&mut value);
        let config: PipelineConfig = value.try_into().map_err(|e| Error::config(format!("config: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    /// Loads `path` if given, else starts from defaults.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let text = match path {
            Some(p) if !p.exists() => return Err(Error::config(format!("config file {} not found", p.display()))),
            Some(p) => util::read_to_string(p)?,
            None => String::new(),
        };
        Self::from_toml(&text, overrides)
    }

    pub fn validate(&self) -> Result<()> {
        if self.corpus.max_tokens == 0 {
            return Err(Error::config("corpus.max_tokens must be at least 1"));
        }
        self.corpus.proxy.validate()?;
        self.calendar.policy.validate()?;
        if let (Some(from), Some(to)) = (self.calendar.from, self.calendar.to) {
            if from > to {
                return Err(Error::config(format!("calendar.from {from} is after calendar.to {to}")));
            }
        }
        if self.pot.vocab_size == 0 || self.pot.lags == 0 {
            return Err(Error::config("pot.vocab_size and pot.lags must be at least 1"));
        }
        self.pot.params().validate()?;
        self.extractor.validate()?;
        self.summarizer.validate()?;
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Canonical JSON echo, used in manifests.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calendar::Trend;

    #[test]
    fn defaults_follow_the_reference_setup() {
        let c = PipelineConfig::from_toml("", &[]).unwrap();
        assert_eq!(c.pot.vocab_size, 512);
        assert_eq!(c.pot.lags, 4);
        assert_eq!(c.pot.alpha, 0.5);
        assert_eq!(c.extractor.lambda, 0.5);
        assert_eq!(c.extractor.batch_size, 32);
        assert_eq!(c.corpus.max_tokens, 180);
        assert_eq!(c.summarizer.n_articles, 100);
        assert_eq!(c.summarizer.train_weeks, 250);
        assert_eq!(c.calendar.policy.classes(), &[Trend::Down, Trend::Preserve, Trend::Up]);
    }

    #[test]
    fn file_then_overrides() {
        let text = "[pot]\nlags = 2\n\n[extractor]\nhidden = 32\n";
        let c = PipelineConfig::from_toml(
            text,
            &[
                "pot.lags=3".into(),
                "calendar.from=2016-01-04".into(),
                "paths.workdir = out/run".into(),
                "calendar.policy = { kind = \"binary\", up = 0.0, down = 0.0 }".into(),
            ],
        )
        .unwrap();
        assert_eq!(c.pot.lags, 3);
        assert_eq!(c.extractor.hidden, 32);
        assert_eq!(c.calendar.from, NaiveDate::from_ymd_opt(2016, 1, 4));
        assert_eq!(c.paths.workdir, PathBuf::from("out/run"));
        assert_eq!(c.calendar.policy, BinningPolicy::binary_asymmetric());
    }

    #[test]
    fn unknown_keys_and_bad_values_are_config_errors() {
        for (text, o) in [
            ("", "pot.lagz=3"),
            ("", "pot.lags=-1"),
            ("", "extractor.lambda=2.0"),
            ("", "nosuchkey"),
            ("[pot]\nlags = \"four\"\n", "pot.alpha=0.5"),
        ] {
            let err = PipelineConfig::from_toml(text, &[o.to_string()]).unwrap_err();
            assert_eq!(err.exit_code(), 1, "{o}: {err}");
        }
    }

    #[test]
    fn round_trips_through_toml() {
        let c = PipelineConfig::from_toml("", &["calendar.to=2020-06-01".into(), "synth.rho=0.0".into()]).unwrap();
        assert_eq!(PipelineConfig::from_toml(&c.to_toml(), &[]).unwrap(), c);
    }
}
