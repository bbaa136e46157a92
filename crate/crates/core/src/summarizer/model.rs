use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::dataset::{DatasetConfig, WeeklySentiment};
use crate::calendar::Trend;
use crate::error::{Error, Result};
use crate::util;

/// Which weekly aggregates feed the classifier.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeatureSpec {
    /// The mean article sentiment alone.
    #[default]
    ScalarMean,
    /// Mean, standard deviation, fraction above 0.5, mean worthiness.
    Extended,
}

impl FeatureSpec {
    pub fn dim(self) -> usize {
        match self {
            FeatureSpec::ScalarMean => 1,
            FeatureSpec::Extended => 4,
        }
    }

    pub fn features(self, w: &WeeklySentiment) -> Vec<f64> {
        match self {
            FeatureSpec::ScalarMean => vec![w.overall_score],
            FeatureSpec::Extended => vec![w.overall_score, w.score_std, w.frac_positive, w.mean_worthiness],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SummarizerConfig {
    /// Articles sampled per week.
    pub n_articles: usize,
    /// Weeks between the news week and the week whose change is its target.
    pub offset: usize,
    pub seed: u64,
    /// Earliest labeled weeks used for training; the rest are test weeks.
    pub train_weeks: usize,
    /// Inverse regularization strength; `lambda = 1 / (C n)`.
    pub c: f64,
    pub epochs: usize,
    /// Initial step size of `eta_t = eta0 / (1 + lambda eta0 t)`.
    pub eta0: f64,
    pub features: FeatureSpec,
}

impl Default for SummarizerConfig {
    fn default() -> Self {
        Self {
            n_articles: 100,
            offset: 1,
            seed: 42,
            train_weeks: 250,
            c: 1.0,
            epochs: 200,
            eta0: 0.1,
            features: FeatureSpec::ScalarMean,
        }
    }
}

impl SummarizerConfig {
    pub fn dataset(&self) -> DatasetConfig {
        DatasetConfig { n_articles: self.n_articles, offset: self.offset, seed: self.seed }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::config(format!("summarizer: {msg}")));
        if self.n_articles == 0 {
            return bad("n_articles must be at least 1");
        }
        if self.train_weeks == 0 {
            return bad("train_weeks must be at least 1");
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            return bad("c must be positive");
        }
        if self.epochs == 0 {
            return bad("epochs must be at least 1");
        }
        if !(self.eta0 > 0.0 && self.eta0.is_finite()) {
            return bad("eta0 must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SummarizerKind {
    BinaryHinge,
    OneVsRestHinge,
}

/// One affine scoring function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearUnit {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LinearUnit {
    fn score(&self, x: &[f64]) -> f64 {
        self.bias + self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
    }
}

/// Linear classifier over standardized weekly features. A binary model has
/// one unit scoring the second class against the first; a one-vs-rest model
/// has one unit per class. Ties go to the class with the lower index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SummarizerModel {
    pub kind: SummarizerKind,
    pub classes: Vec<Trend>,
    pub feature_spec: FeatureSpec,
    pub feature_mean: Vec<f64>,
    pub feature_std: Vec<f64>,
    pub units: Vec<LinearUnit>,
}

impl SummarizerModel {
    fn standardize(&self, raw: &[f64]) -> Vec<f64> {
        raw.iter()
            .zip(self.feature_mean.iter().zip(&self.feature_std))
            .map(|(x, (m, s))| (x - m) / s)
            .collect()
    }

    /// Class scores in class order; for a binary model `[0, s]`.
    pub fn decision(&self, w: &WeeklySentiment) -> Vec<f64> {
        let x = self.standardize(&self.feature_spec.features(w));
        match self.kind {
            SummarizerKind::BinaryHinge => vec![0.0, self.units[0].score(&x)],
            SummarizerKind::OneVsRestHinge => self.units.iter().map(|u| u.score(&x)).collect(),
        }
    }

    fn check(&self) -> Result<()> {
        let d = self.feature_spec.dim();
        let units = match self.kind {
            SummarizerKind::BinaryHinge => 1,
            SummarizerKind::OneVsRestHinge => self.classes.len(),
        };
        let ok = self.classes.len() >= 2
            && (self.kind == SummarizerKind::OneVsRestHinge || self.classes.len() == 2)
            && self.feature_mean.len() == d
            && self.feature_std.len() == d
            && self.feature_std.iter().all(|s| *s > 0.0)
            && self.units.len() == units
            && self.units.iter().all(|u| u.weights.len() == d);
        if ok {
            Ok(())
        } else {
            Err(Error::data("summarizer model has inconsistent shapes"))
        }
    }
}

pub fn predict_week(model: &SummarizerModel, w: &WeeklySentiment) -> Trend {
    let scores = model.decision(w);
    let mut best = 0;
    for (k, s) in scores.iter().enumerate() {
        if *s > scores[best] {
            best = k;
        }
    }
    model.classes[best]
}

/// Averaged stochastic subgradient descent on the L2-regularized hinge loss
/// `lambda/2 |w|^2 + mean(max(0, 1 - y (w.x + b)))`. The bias is not
/// regularized. Returns the average of all iterates.
fn fit_hinge(xs: &[Vec<f64>], ys: &[f64], config: &SummarizerConfig, stream: u64) -> LinearUnit {
    let n = xs.len();
    let d = xs[0].len();
    let lambda = 1.0 / (config.c * n as f64);
    let mut rng = util::rng(config.seed, stream);
    let mut order: Vec<usize> = (0..n).collect();
    let (mut w, mut b) = (vec![0.0; d], 0.0);
    let (mut w_avg, mut b_avg) = (vec![0.0; d], 0.0);
    let mut t = 0usize;
    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            t += 1;
            let eta = config.eta0 / (1.0 + lambda * config.eta0 * t as f64);
            let margin = ys[i] * (b + w.iter().zip(&xs[i]).map(|(a, x)| a * x).sum::<f64>());
            w.iter_mut().for_each(|a| *a *= 1.0 - eta * lambda);
            if margin < 1.0 {
                w.iter_mut().zip(&xs[i]).for_each(|(a, x)| *a += eta * ys[i] * x);
                b += eta * ys[i];
            }
            let r = 1.0 / t as f64;
            w_avg.iter_mut().zip(&w).for_each(|(m, a)| *m += (a - *m) * r);
            b_avg += (b - b_avg) * r;
        }
    }
    LinearUnit { weights: w_avg, bias: b_avg }
}

/// Trains on the labeled rows of `train`. `classes` fixes the class order;
/// two classes give a binary model, more give one-vs-rest.
pub fn train_summarizer(train: &[WeeklySentiment], classes: &[Trend], config: &SummarizerConfig) -> Result<SummarizerModel> {
    config.validate()?;
    if classes.len() < 2 {
        return Err(Error::config("summarizer needs at least two classes"));
    }
    let labeled: Vec<(&WeeklySentiment, usize)> = train
        .iter()
        .filter_map(|w| {
            let label = w.label?;
            Some(classes.iter().position(|c| *c == label).map(|k| (w, k)).ok_or_else(|| {
                Error::data(format!("week {} has class {label} outside the policy", w.anchor))
            }))
        })
        .collect::<Result<_>>()?;
    let mut present: Vec<usize> = labeled.iter().map(|(_, k)| *k).collect();
    present.sort_unstable();
    present.dedup();
    if present.len() < 2 {
        return Err(Error::data(format!(
            "summarizer training data holds {} class(es); at least two are needed",
            present.len()
        )));
    }

    let spec = config.features;
    let raw: Vec<Vec<f64>> = labeled.iter().map(|(w, _)| spec.features(w)).collect();
    let n = raw.len() as f64;
    let mean: Vec<f64> = (0..spec.dim()).map(|j| raw.iter().map(|x| x[j]).sum::<f64>() / n).collect();
    let std: Vec<f64> = (0..spec.dim())
        .map(|j| {
            let var = raw.iter().map(|x| (x[j] - mean[j]).powi(2)).sum::<f64>() / n;
            if var > 1e-24 { var.sqrt() } else { 1.0 }
        })
        .collect();
    let xs: Vec<Vec<f64>> = raw
        .iter()
        .map(|x| x.iter().zip(mean.iter().zip(&std)).map(|(v, (m, s))| (v - m) / s).collect())
        .collect();
    let target = |k: usize| -> Vec<f64> { labeled.iter().map(|(_, c)| if *c == k { 1.0 } else { -1.0 }).collect() };

    let (kind, units) = if classes.len() == 2 {
        (SummarizerKind::BinaryHinge, vec![fit_hinge(&xs, &target(1), config, 0x5C0)])
    } else {
        let units = (0..classes.len()).map(|k| fit_hinge(&xs, &target(k), config, 0x5C0 + k as u64)).collect();
        (SummarizerKind::OneVsRestHinge, units)
    };
    let model = SummarizerModel {
        kind,
        classes: classes.to_vec(),
        feature_spec: spec,
        feature_mean: mean,
        feature_std: std,
        units,
    };
    if model.units.iter().any(|u| !u.bias.is_finite() || u.weights.iter().any(|w| !w.is_finite())) {
        return Err(Error::Numeric("summarizer weights diverged".into()));
    }
    Ok(model)
}

pub fn save_summarizer(path: &Path, model: &SummarizerModel) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(model).expect("model serializes");
    bytes.push(b'\n');
    util::write_all(path, &bytes)
}

pub fn load_summarizer(path: &Path) -> Result<SummarizerModel> {
    if !path.exists() {
        return Err(Error::MissingArtifact { stage: "train-summarizer", path: path.to_path_buf() });
    }
    let model: SummarizerModel = serde_json::from_str(&util::read_to_string(path)?)
        .map_err(|e| Error::data(format!("{}: {e}", path.display())))?;
    model.check()?;
    Ok(model)
}
