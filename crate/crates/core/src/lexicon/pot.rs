use std::collections::{BTreeMap, BTreeSet};

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tfidf::{ClassCorpus, ClassTerms, DocFreq};
use crate::calendar::PotClass;
use crate::corpus::{TokenizedDoc, Vocabulary};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PotParams {
    /// Trailing window length in week anchors, including the current week.
    pub window_weeks: usize,
    /// Discount on the mild (pos/neg) classes.
    pub alpha: f64,
}

impl Default for PotParams {
    fn default() -> Self {
        Self { window_weeks: 13, alpha: 0.5 }
    }
}

impl PotParams {
    pub fn validate(&self) -> Result<()> {
        if self.window_weeks == 0 {
            return Err(Error::config("pot.window_weeks must be at least 1"));
        }
        if !self.alpha.is_finite() {
            return Err(Error::config(format!("pot.alpha must be finite, got {}", self.alpha)));
        }
        Ok(())
    }
}

/// Term statistics of one week's news.
#[derive(Debug, Clone)]
pub struct WeekTerms {
    pub anchor: NaiveDate,
    pub class: PotClass,
    terms: ClassTerms,
    df: DocFreq,
}

impl WeekTerms {
    pub fn new<'a>(anchor: NaiveDate, class: PotClass, docs: impl IntoIterator<Item = &'a TokenizedDoc> + Clone) -> Self {
        Self {
            anchor,
            class,
            terms: ClassTerms::from_docs(docs.clone()),
            df: DocFreq::from_docs(docs),
        }
    }
}

/// Pooled class statistics and IDF universe of one scoring window.
#[derive(Debug, Clone, Default)]
pub struct PotWindow {
    idf: DocFreq,
    classes: [ClassTerms; 5],
}

impl PotWindow {
    pub fn from_classes(classes: &[ClassCorpus<'_>]) -> Self {
        let mut out = PotWindow::default();
        for c in classes {
            out.idf.merge(&DocFreq::from_docs(c.docs.iter().copied()));
            out.classes[c.class.index()].merge(&ClassTerms::from_docs(c.docs.iter().copied()));
        }
        out
    }

    pub fn from_weeks<'a>(weeks: impl IntoIterator<Item = &'a WeekTerms>) -> Self {
        let mut out = PotWindow::default();
        for w in weeks {
            out.idf.merge(&w.df);
            out.classes[w.class.index()].merge(&w.terms);
        }
        out
    }

    pub fn n_docs(&self, class: PotClass) -> usize {
        self.classes[class.index()].n_docs()
    }

    pub fn score(&self, word: &str, alpha: f64) -> f64 {
        let w = |c: PotClass| self.classes[c.index()].normalized_weight(&self.idf, word);
        (w(PotClass::VeryPositive) - w(PotClass::VeryNegative))
            + alpha * (w(PotClass::Positive) - w(PotClass::Negative))
    }

    /// Every word occurring in the window, sorted.
    pub fn words(&self) -> BTreeSet<&str> {
        self.idf.words().collect()
    }
}

pub fn pot_score(word: &str, window: &PotWindow, alpha: f64) -> f64 {
    window.score(word, alpha)
}

/// POT scores of one week.
#[derive(Debug, Clone, PartialEq)]
pub struct PotModel {
    pub anchor: NaiveDate,
    /// Anchors of the window, oldest first; the last one is `anchor`.
    pub window: Vec<NaiveDate>,
    pub alpha: f64,
    pub scores: BTreeMap<String, f64>,
}

impl PotModel {
    /// Score of `word`; 0 for words outside the window.
    pub fn score(&self, word: &str) -> f64 {
        self.scores.get(word).copied().unwrap_or(0.0)
    }
}

/// Computes a model for every week in `weeks` (chronological, consecutive).
/// With `words` the models hold only those words; otherwise every word
/// of the window.
pub fn pot_models(weeks: &[WeekTerms], params: &PotParams, words: Option<&[String]>) -> Result<Vec<PotModel>> {
    params.validate()?;
    if let Some(pair) = weeks.windows(2).find(|p| p[0].anchor >= p[1].anchor) {
        return Err(Error::data(format!("week anchors out of order at {}", pair[1].anchor)));
    }
    Ok((0..weeks.len())
        .into_par_iter()
        .map(|i| {
            let start = (i + 1).saturating_sub(params.window_weeks);
            let span = &weeks[start..=i];
            let window = PotWindow::from_weeks(span);
            let scores = match words {
                Some(ws) => ws.iter().map(|w| (w.clone(), window.score(w, params.alpha))).collect(),
                None => window
                    .words()
                    .into_iter()
                    .map(|w| (w.to_string(), window.score(w, params.alpha)))
                    .collect(),
            };
            PotModel {
                anchor: weeks[i].anchor,
                window: span.iter().map(|w| w.anchor).collect(),
                alpha: params.alpha,
                scores,
            }
        })
        .collect())
}

/// Week models keyed by anchor, with the full week order so lags can be
/// resolved across holidays.
#[derive(Debug, Clone, Default)]
pub struct PotHistory {
    anchors: Vec<NaiveDate>,
    models: BTreeMap<NaiveDate, PotModel>,
}

impl PotHistory {
    pub fn new(anchors: Vec<NaiveDate>, models: impl IntoIterator<Item = PotModel>) -> Self {
        Self {
            anchors,
            models: models.into_iter().map(|m| (m.anchor, m)).collect(),
        }
    }

    pub fn get(&self, anchor: NaiveDate) -> Option<&PotModel> {
        self.models.get(&anchor)
    }

    pub fn models(&self) -> impl Iterator<Item = &PotModel> {
        self.models.values()
    }

    pub fn anchors(&self) -> &[NaiveDate] {
        &self.anchors
    }

    /// Anchor `lag` weeks before `anchor`.
    pub fn lagged(&self, anchor: NaiveDate, lag: usize) -> Result<NaiveDate> {
        let pos = self
            .anchors
            .binary_search(&anchor)
            .map_err(|_| Error::data(format!("{anchor} is not a week anchor")))?;
        pos.checked_sub(lag)
            .map(|p| self.anchors[p])
            .ok_or_else(|| Error::data(format!("no POT model: week {anchor} has fewer than {lag} predecessors")))
    }
}

/// V x L matrix of POT scores, row-major; column `l` holds week `t - l`.
#[derive(Debug, Clone, PartialEq)]
pub struct PotMatrix {
    pub anchor: NaiveDate,
    pub rows: usize,
    pub lags: usize,
    pub values: Vec<f64>,
}

impl PotMatrix {
    pub fn get(&self, row: usize, lag: usize) -> f64 {
        self.values[row * self.lags + lag]
    }

    pub fn column(&self, lag: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, lag)).collect()
    }

    pub fn scale(&mut self, factor: f64) {
        self.values.iter_mut().for_each(|v| *v *= factor);
    }
}

pub fn pot_matrix(vocab: &Vocabulary, anchor: NaiveDate, history: &PotHistory, lags: usize) -> Result<PotMatrix> {
    if lags == 0 {
        return Err(Error::config("pot.lags must be at least 1"));
    }
    let models = (0..lags)
        .map(|l| {
            let a = history.lagged(anchor, l)?;
            history.get(a).ok_or_else(|| Error::MissingArtifact {
                stage: "pot",
                path: format!("POT model for week {a}").into(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut values = Vec::with_capacity(vocab.len() * lags);
    for word in vocab.words() {
        values.extend(models.iter().map(|m| m.score(word)));
    }
    Ok(PotMatrix { anchor, rows: vocab.len(), lags, values })
}

/// Weekly score series of `word` over `[from, to]`.
pub fn pot_trajectory(history: &PotHistory, word: &str, from: NaiveDate, to: NaiveDate) -> Vec<(NaiveDate, f64)> {
    history
        .models
        .range(from..=to)
        .map(|(a, m)| (*a, m.score(word)))
        .collect()
}
