use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use chrono::NaiveDate;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::encoder::{ReferenceEncoder, TextEncoder};
use super::model::{multitask_loss, PROB_FLOOR, ExtractorModel, Gradients, PotScaling, PreparedPot, TrainingExample};
use crate::error::{Error, Result};
use crate::util;

/// Text encoder implementation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EncoderKind {
    /// Mean word embedding followed by a tanh dense layer.
    #[default]
    Reference,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtractorConfig {
    pub encoder: EncoderKind,
    /// Encoder vocabulary size (most frequent training words).
    pub encoder_vocab: usize,
    pub emb_dim: usize,
    /// Encoder output width D.
    pub enc_dim: usize,
    /// Dense layer width H.
    pub hidden: usize,
    pub lambda: f64,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub batch_size: usize,
    pub epochs: usize,
    /// Fraction of training weeks held out for model selection.
    pub dev_fraction: f64,
    /// Standardize POT rows with training-week statistics.
    pub standardize_pot: bool,
    pub seed: u64,
}

impl Default for ExtractorConfig {
    fn default() -> Self {
        Self {
            encoder: EncoderKind::Reference,
            encoder_vocab: 5000,
            emb_dim: 64,
            enc_dim: 64,
            hidden: 512,
            lambda: 0.5,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            batch_size: 32,
            epochs: 10,
            dev_fraction: 0.1,
            standardize_pot: true,
            seed: 42,
        }
    }
}

impl ExtractorConfig {
    pub fn validate(&self) -> Result<()> {
        let checks: [(bool, &str); 8] = [
            (self.encoder_vocab > 0, "extractor.encoder_vocab must be positive"),
            (self.emb_dim > 0 && self.enc_dim > 0 && self.hidden > 0, "extractor dimensions must be positive"),
            ((0.0..=1.0).contains(&self.lambda), "extractor.lambda must lie in [0, 1]"),
            (self.learning_rate > 0.0 && self.learning_rate.is_finite(), "extractor.learning_rate must be positive"),
            ((0.0..1.0).contains(&self.beta1) && (0.0..1.0).contains(&self.beta2), "Adam betas must lie in [0, 1)"),
            (self.epsilon > 0.0, "extractor.epsilon must be positive"),
            (self.batch_size > 0 && self.epochs > 0, "extractor.batch_size and extractor.epochs must be positive"),
            ((0.0..1.0).contains(&self.dev_fraction), "extractor.dev_fraction must lie in [0, 1)"),
        ];
        match checks.iter().find(|(ok, _)| !ok) {
            Some((_, msg)) => Err(Error::config(*msg)),
            None => Ok(()),
        }
    }
}

/// Holds out `round(fraction * n)` whole weeks, chosen with a seeded shuffle.
pub fn split_dev_weeks(weeks: &BTreeSet<NaiveDate>, fraction: f64, seed: u64) -> BTreeSet<NaiveDate> {
    let mut all: Vec<NaiveDate> = weeks.iter().copied().collect();
    let n_dev = (fraction * all.len() as f64).round() as usize;
    all.shuffle(&mut util::rng(seed, 0xDE7));
    all.into_iter().take(n_dev).collect()
}

/// Holds out whole weeks separately within each label, so both classes
/// reach dev when they can: `round(fraction * n)` weeks per class, at least
/// one for a class with two or more weeks when `fraction > 0`.
pub fn split_dev_weeks_by_label(
    weeks: &BTreeMap<NaiveDate, bool>,
    fraction: f64,
    seed: u64,
) -> BTreeSet<NaiveDate> {
    let mut dev = BTreeSet::new();
    for label in [false, true] {
        let mut class: Vec<NaiveDate> = weeks.iter().filter(|(_, l)| **l == label).map(|(a, _)| *a).collect();
        let mut n_dev = (fraction * class.len() as f64).round() as usize;
        if fraction > 0.0 && class.len() >= 2 {
            n_dev = n_dev.max(1);
        }
        class.shuffle(&mut util::rng(seed, 0xDE7 + u64::from(label)));
        dev.extend(class.into_iter().take(n_dev));
    }
    dev
}

/// Adam with bias correction.
#[derive(Debug, Clone)]
pub struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    t: i32,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(sizes: &[usize], lr: f64, beta1: f64, beta2: f64, eps: f64) -> Self {
        Self {
            lr,
            beta1,
            beta2,
            eps,
            t: 0,
            m: sizes.iter().map(|&n| vec![0.0; n]).collect(),
            v: sizes.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    pub fn step<'a>(&mut self, params: impl IntoIterator<Item = &'a mut [f64]>, grads: impl IntoIterator<Item = &'a [f64]>) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        for (((p, g), m), v) in params.into_iter().zip(grads).zip(&mut self.m).zip(&mut self.v) {
            for i in 0..p.len() {
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * g[i];
                v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * g[i] * g[i];
                p[i] -= self.lr * (m[i] / c1) / ((v[i] / c2).sqrt() + self.eps);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    pub dev_acc_senti: Option<f64>,
    /// Mean sentiment cross-entropy on dev.
    pub dev_loss_senti: Option<f64>,
    pub dev_acc_worth: Option<f64>,
}

pub fn write_training_log(path: &Path, log: &[EpochLog]) -> Result<()> {
    let mut w = csv::Writer::from_writer(util::create(path)?);
    w.write_record(["epoch", "train_loss", "dev_acc_senti", "dev_loss_senti", "dev_acc_worth"])?;
    let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
    for e in log {
        w.write_record([
            e.epoch.to_string(),
            e.train_loss.to_string(),
            opt(e.dev_acc_senti),
            opt(e.dev_loss_senti),
            opt(e.dev_acc_worth),
        ])?;
    }
    w.flush().map_err(|e| Error::io(format!("cannot write {}", path.display()), e))
}

pub struct TrainOutcome<E> {
    pub model: ExtractorModel<E>,
    pub log: Vec<EpochLog>,
    /// 1-based epoch of the returned model.
    pub best_epoch: usize,
}

struct Prepared<I> {
    input: I,
    week: usize,
    sentiment: bool,
    worthiness: Option<bool>,
}

/// Builds the reference encoder and model from `config` and trains it.
pub fn train_extractor(
    train: &[TrainingExample],
    dev: &[TrainingExample],
    pot_rows: usize,
    lags: usize,
    config: &ExtractorConfig,
) -> Result<TrainOutcome<ReferenceEncoder>> {
    config.validate()?;
    let vocab = crate::corpus::most_frequent(train.iter().map(|e| e.doc.tokens.as_slice()), config.encoder_vocab);
    let mut rng = util::rng(config.seed, 0x1A17);
    let encoder = ReferenceEncoder::new(vocab, config.emb_dim, config.enc_dim, &mut rng);
    let model = ExtractorModel::new(encoder, pot_rows, lags, config.hidden, config.lambda, &mut rng);
    train_model(model, train, dev, config)
}

/// Trains `model` with mini-batch Adam; returns the epoch with the best dev
/// sentiment accuracy (lower dev sentiment loss, then earliest, on ties), or
/// the last epoch without dev data.
pub fn train_model<E: TextEncoder + Clone>(
    mut model: ExtractorModel<E>,
    train: &[TrainingExample],
    dev: &[TrainingExample],
    config: &ExtractorConfig,
) -> Result<TrainOutcome<E>> {
    config.validate()?;
    model.lambda = config.lambda;
    let positives = train.iter().filter(|e| e.sentiment).count();
    if positives == 0 || positives == train.len() {
        return Err(Error::data(format!(
            "extractor training needs both sentiment classes ({positives} positive of {})",
            train.len()
        )));
    }

    let mut week_index = BTreeMap::new();
    let mut matrices = Vec::new();
    for ex in train {
        week_index.entry(ex.pot.anchor).or_insert_with(|| {
            matrices.push(ex.pot.clone());
            matrices.len() - 1
        });
    }
    model.scaling = if config.standardize_pot {
        PotScaling::fit(model.pot_rows(), matrices.iter().map(|m| m.as_ref()))?
    } else {
        PotScaling::identity(model.pot_rows())
    };
    let pots = matrices.iter().map(|m| model.prepare_pot(m)).collect::<Result<Vec<_>>>()?;
    let prepared: Vec<Prepared<E::Input>> = train
        .iter()
        .map(|ex| Prepared {
            input: model.encoder.prepare(&ex.doc),
            week: week_index[&ex.pot.anchor],
            sentiment: ex.sentiment,
            worthiness: ex.worthiness,
        })
        .collect();

    let sizes: Vec<usize> = model.blocks().iter().map(|(_, b)| b.len()).collect();
    let mut adam = Adam::new(&sizes, config.learning_rate, config.beta1, config.beta2, config.epsilon);
    let mut grads = model.zero_gradients();
    let mut order: Vec<usize> = (0..prepared.len()).collect();
    let mut rng = util::rng(config.seed, 0x5EED);
    let mut log = Vec::with_capacity(config.epochs);
    let mut best: Option<(DevMetrics, usize, ExtractorModel<E>)> = None;

    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for (b, batch) in order.chunks(config.batch_size).enumerate() {
            grads.clear();
            let loss = batch_step(&model, &prepared, &pots, batch, &mut grads);
            if !loss.is_finite() {
                return Err(Error::Numeric(format!(
                    "extractor loss diverged at epoch {epoch}, batch {b}: loss {loss}, learning rate {}",
                    config.learning_rate
                )));
            }
            loss_sum += loss;
            let params: Vec<&mut [f64]> = model.blocks_mut().into_iter().map(|(_, p)| p).collect();
            let grad_refs: Vec<&[f64]> = grads.encoder.iter().chain(grads.head.blocks()).map(Vec::as_slice).collect();
            adam.step(params, grad_refs);
        }
        let d = dev_metrics(&model, dev)?;
        log.push(EpochLog {
            epoch,
            train_loss: loss_sum / prepared.len() as f64,
            dev_acc_senti: d.senti_acc,
            dev_loss_senti: d.senti_loss,
            dev_acc_worth: d.worth_acc,
        });
        log::info!(
            "epoch {epoch}: train loss {:.4}, dev accuracy {:?}",
            loss_sum / prepared.len() as f64,
            d.senti_acc
        );
        let improves = match (&best, d.senti_acc, d.senti_loss) {
            (Some((b, _, _)), Some(acc), Some(loss)) => {
                let (b_acc, b_loss) = (b.senti_acc.unwrap_or(f64::NEG_INFINITY), b.senti_loss.unwrap_or(f64::INFINITY));
                acc > b_acc || (acc == b_acc && loss < b_loss)
            }
            _ => true,
        };
        if improves {
            best = Some((d, epoch, model.clone()));
        }
    }
    let (_, best_epoch, model) = best.expect("at least one epoch");
    Ok(TrainOutcome { model, log, best_epoch })
}

/// Accumulates the mean gradient of one batch; returns the summed loss.
fn batch_step<E: TextEncoder>(
    model: &ExtractorModel<E>,
    prepared: &[Prepared<E::Input>],
    pots: &[PreparedPot],
    batch: &[usize],
    grads: &mut Gradients,
) -> f64 {
    let scale = 1.0 / batch.len() as f64;
    let mut by_week: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for &i in batch {
        by_week.entry(prepared[i].week).or_default().push(i);
    }
    let mut loss = 0.0;
    for (week, members) in by_week {
        let att = model.attention(&pots[week]);
        let mut g_pooled = vec![0.0; model.pot_rows()];
        for i in members {
            let ex = &prepared[i];
            let acts = model.forward_with(&ex.input, &att);
            loss += multitask_loss(&acts.p_senti, &acts.p_worth, ex.sentiment, ex.worthiness, model.lambda).total;
            model.backward_with(&ex.input, &acts, ex.sentiment, ex.worthiness, scale, grads, &mut g_pooled);
        }
        model.attention_backward(&pots[week], &att, &g_pooled, grads);
    }
    loss
}

struct DevMetrics {
    senti_acc: Option<f64>,
    senti_loss: Option<f64>,
    worth_acc: Option<f64>,
}

/// Sentiment accuracy and worthiness accuracy (labeled examples only).
pub fn evaluate<E: TextEncoder>(model: &ExtractorModel<E>, examples: &[TrainingExample]) -> Result<(Option<f64>, Option<f64>)> {
    let d = dev_metrics(model, examples)?;
    Ok((d.senti_acc, d.worth_acc))
}

fn dev_metrics<E: TextEncoder>(model: &ExtractorModel<E>, examples: &[TrainingExample]) -> Result<DevMetrics> {
    if examples.is_empty() {
        return Ok(DevMetrics { senti_acc: None, senti_loss: None, worth_acc: None });
    }
    let mut by_week: BTreeMap<NaiveDate, Vec<&TrainingExample>> = BTreeMap::new();
    for ex in examples {
        by_week.entry(ex.pot.anchor).or_default().push(ex);
    }
    let (mut senti_ok, mut worth_ok, mut worth_n) = (0usize, 0usize, 0usize);
    let mut senti_loss = 0.0;
    for members in by_week.values() {
        let pot = model.prepare_pot(&members[0].pot)?;
        let att = model.attention(&pot);
        for ex in members {
            let acts = model.forward_with(&model.encoder.prepare(&ex.doc), &att);
            senti_ok += usize::from((acts.p_senti[1] > acts.p_senti[0]) == ex.sentiment);
            senti_loss -= acts.p_senti[usize::from(ex.sentiment)].max(PROB_FLOOR).ln();
            if let Some(w) = ex.worthiness {
                worth_n += 1;
                worth_ok += usize::from((acts.p_worth[1] > acts.p_worth[0]) == w);
            }
        }
    }
    let n = examples.len() as f64;
    Ok(DevMetrics {
        senti_acc: Some(senti_ok as f64 / n),
        senti_loss: Some(senti_loss / n),
        worth_acc: (worth_n > 0).then(|| worth_ok as f64 / worth_n as f64),
    })
}
