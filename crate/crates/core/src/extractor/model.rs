use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use super::attention::{attend, attend_backward, softmax, Attention};
use super::encoder::{ReferenceEncoder, TextEncoder};
use crate::corpus::TokenizedDoc;
use crate::error::{Error, Result};
use crate::lexicon::PotMatrix;

/// Probabilities below this are clamped before taking the log.
pub const PROB_FLOOR: f64 = 1e-12;

/// One article with its week's POT matrix and labels. Class index 1 is
/// positive sentiment and worthy news.
#[derive(Debug, Clone)]
pub struct TrainingExample {
    pub doc: TokenizedDoc,
    pub pot: Arc<PotMatrix>,
    pub sentiment: bool,
    pub worthiness: Option<bool>,
}

/// Attention, dense and head parameters; every block is row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadParams {
    /// V x V
    pub att_w: Vec<f64>,
    /// V
    pub att_v: Vec<f64>,
    /// H x (D + V)
    pub dense_w: Vec<f64>,
    pub dense_b: Vec<f64>,
    /// 2 x H
    pub senti_w: Vec<f64>,
    pub senti_b: Vec<f64>,
    /// 2 x H
    pub worth_w: Vec<f64>,
    pub worth_b: Vec<f64>,
}

pub const HEAD_BLOCKS: [&str; 8] = [
    "attention_w",
    "attention_v",
    "dense_w",
    "dense_b",
    "sentiment_w",
    "sentiment_b",
    "worthiness_w",
    "worthiness_b",
];

impl HeadParams {
    fn zeros(enc_dim: usize, pot_rows: usize, hidden: usize) -> Self {
        Self {
            att_w: vec![0.0; pot_rows * pot_rows],
            att_v: vec![0.0; pot_rows],
            dense_w: vec![0.0; hidden * (enc_dim + pot_rows)],
            dense_b: vec![0.0; hidden],
            senti_w: vec![0.0; 2 * hidden],
            senti_b: vec![0.0; 2],
            worth_w: vec![0.0; 2 * hidden],
            worth_b: vec![0.0; 2],
        }
    }

    pub fn blocks(&self) -> [&Vec<f64>; 8] {
        [
            &self.att_w,
            &self.att_v,
            &self.dense_w,
            &self.dense_b,
            &self.senti_w,
            &self.senti_b,
            &self.worth_w,
            &self.worth_b,
        ]
    }

    pub fn blocks_mut(&mut self) -> [&mut Vec<f64>; 8] {
        [
            &mut self.att_w,
            &mut self.att_v,
            &mut self.dense_w,
            &mut self.dense_b,
            &mut self.senti_w,
            &mut self.senti_b,
            &mut self.worth_w,
            &mut self.worth_b,
        ]
    }
}

/// Per-row standardization of POT matrices, fitted on training weeks.
#[derive(Debug, Clone, PartialEq)]
pub struct PotScaling {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl PotScaling {
    pub fn identity(rows: usize) -> Self {
        Self { mean: vec![0.0; rows], std: vec![1.0; rows] }
    }

    /// Mean and population standard deviation of each row over every lag
    /// of every matrix; rows without spread keep a unit scale.
    pub fn fit<'a>(rows: usize, matrices: impl IntoIterator<Item = &'a PotMatrix>) -> Result<Self> {
        let mut sum = vec![0.0; rows];
        let mut sq = vec![0.0; rows];
        let mut n = 0usize;
        for m in matrices {
            check_matrix(m, rows, m.lags)?;
            for i in 0..rows {
                for &x in &m.values[i * m.lags..(i + 1) * m.lags] {
                    sum[i] += x;
                    sq[i] += x * x;
                }
            }
            n += m.lags;
        }
        if n == 0 {
            return Ok(Self::identity(rows));
        }
        let n = n as f64;
        let mean: Vec<f64> = sum.iter().map(|s| s / n).collect();
        let std = sq
            .iter()
            .zip(&mean)
            .map(|(q, m)| {
                let var = (q / n - m * m).max(0.0);
                if var > 1e-24 {
                    var.sqrt()
                } else {
                    1.0
                }
            })
            .collect();
        Ok(Self { mean, std })
    }

    fn apply(&self, m: &PotMatrix) -> Vec<f64> {
        let mut out = m.values.clone();
        for (i, row) in out.chunks_mut(m.lags).enumerate() {
            row.iter_mut().for_each(|x| *x = (*x - self.mean[i]) / self.std[i]);
        }
        out
    }
}

fn check_matrix(m: &PotMatrix, rows: usize, lags: usize) -> Result<()> {
    if m.rows != rows || m.lags != lags || m.values.len() != rows * lags {
        return Err(Error::Shape(format!(
            "POT matrix for {} is {}x{} ({} values), model expects {rows}x{lags}",
            m.anchor,
            m.rows,
            m.lags,
            m.values.len()
        )));
    }
    Ok(())
}

/// A POT matrix after scaling, ready for attention.
#[derive(Debug, Clone)]
pub struct PreparedPot {
    values: Vec<f64>,
}

/// Probabilities and attention weights of one forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub p_senti: [f64; 2],
    pub p_worth: [f64; 2],
    pub attention: Vec<f64>,
}

pub(crate) struct Activations<C> {
    enc: C,
    x: Vec<f64>,
    z: Vec<f64>,
    h: Vec<f64>,
    pub(crate) p_senti: [f64; 2],
    pub(crate) p_worth: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossBreakdown {
    pub total: f64,
    pub ce_senti: f64,
    /// `None` when the worthiness label is missing and the term is dropped.
    pub ce_worth: Option<f64>,
    /// A true-class probability fell below [`PROB_FLOOR`].
    pub clamped: bool,
}

fn cross_entropy(p: &[f64; 2], label: usize) -> (f64, bool) {
    let q = p[label];
    if q < PROB_FLOOR {
        (-PROB_FLOOR.ln(), true)
    } else {
        (-q.ln(), false)
    }
}

/// `lambda * CE_senti + (1 - lambda) * CE_worth` for labeled worthiness,
/// plain `CE_senti` otherwise.
pub fn multitask_loss(
    p_senti: &[f64; 2],
    p_worth: &[f64; 2],
    sentiment: bool,
    worthiness: Option<bool>,
    lambda: f64,
) -> LossBreakdown {
    let (ce_s, clamp_s) = cross_entropy(p_senti, sentiment as usize);
    match worthiness {
        Some(w) => {
            let (ce_w, clamp_w) = cross_entropy(p_worth, w as usize);
            LossBreakdown {
                total: lambda * ce_s + (1.0 - lambda) * ce_w,
                ce_senti: ce_s,
                ce_worth: Some(ce_w),
                clamped: clamp_s || clamp_w,
            }
        }
        None => LossBreakdown { total: ce_s, ce_senti: ce_s, ce_worth: None, clamped: clamp_s },
    }
}

/// Loss gradient with respect to one head's logits; zero for a clamped term.
fn logit_grad(p: &[f64; 2], label: usize, weight: f64) -> [f64; 2] {
    if p[label] < PROB_FLOOR || weight == 0.0 {
        return [0.0; 2];
    }
    let mut g = [weight * p[0], weight * p[1]];
    g[label] -= weight;
    g
}

/// Gradient buffers shaped like the model parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub encoder: Vec<Vec<f64>>,
    pub head: HeadParams,
}

impl Gradients {
    /// `(name, values)` in model block order.
    pub fn blocks<'a>(&'a self, names: &[&'static str]) -> Vec<(&'static str, &'a [f64])> {
        names
            .iter()
            .copied()
            .zip(self.encoder.iter().map(Vec::as_slice).chain(self.head.blocks().map(Vec::as_slice)))
            .collect()
    }

    pub fn values_mut(&mut self) -> impl Iterator<Item = &mut Vec<f64>> {
        self.encoder.iter_mut().chain(self.head.blocks_mut())
    }

    pub fn clear(&mut self) {
        self.values_mut().for_each(|b| b.iter_mut().for_each(|x| *x = 0.0));
    }
}

/// Encoder output concatenated with attended POT features, a rectified
/// dense layer, and sentiment and worthiness softmax heads.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtractorModel<E = ReferenceEncoder> {
    pub encoder: E,
    pub head: HeadParams,
    pub scaling: PotScaling,
    pot_rows: usize,
    lags: usize,
    hidden: usize,
    pub lambda: f64,
}

impl<E: TextEncoder> ExtractorModel<E> {
    /// Dense weights uniform in `±1/sqrt(fan_in)`, `W = I + N(0, 0.01^2)`,
    /// `v = 0`, heads and biases 0.
    pub fn new(encoder: E, pot_rows: usize, lags: usize, hidden: usize, lambda: f64, rng: &mut impl Rng) -> Self {
        assert!(pot_rows > 0 && lags > 0 && hidden > 0, "model dimensions must be positive");
        let d = encoder.output_dim();
        let mut head = HeadParams::zeros(d, pot_rows, hidden);
        let noise = Normal::new(0.0, 0.01).expect("valid normal");
        for i in 0..pot_rows {
            for j in 0..pot_rows {
                head.att_w[i * pot_rows + j] = noise.sample(rng) + if i == j { 1.0 } else { 0.0 };
            }
        }
        let bound = 1.0 / ((d + pot_rows) as f64).sqrt();
        head.dense_w.iter_mut().for_each(|w| *w = rng.gen_range(-bound..bound));
        Self {
            encoder,
            head,
            scaling: PotScaling::identity(pot_rows),
            pot_rows,
            lags,
            hidden,
            lambda,
        }
    }

    pub fn from_parts(
        encoder: E,
        head: HeadParams,
        scaling: PotScaling,
        lags: usize,
        lambda: f64,
    ) -> Result<Self> {
        let pot_rows = head.att_v.len();
        let hidden = head.dense_b.len();
        let zeros = HeadParams::zeros(encoder.output_dim(), pot_rows, hidden);
        let shapes_match = head.blocks().iter().zip(zeros.blocks()).all(|(a, b)| a.len() == b.len())
            && scaling.mean.len() == pot_rows
            && scaling.std.len() == pot_rows
            && lags > 0;
        if !shapes_match {
            return Err(Error::Shape("extractor parameter blocks have inconsistent sizes".into()));
        }
        Ok(Self { encoder, head, scaling, pot_rows, lags, hidden, lambda })
    }

    pub fn pot_rows(&self) -> usize {
        self.pot_rows
    }

    pub fn lags(&self) -> usize {
        self.lags
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn block_names(&self) -> Vec<&'static str> {
        self.encoder.blocks().into_iter().map(|(n, _)| n).chain(HEAD_BLOCKS).collect()
    }

    /// Every parameter block, encoder first, in a fixed order.
    pub fn blocks(&self) -> Vec<(&'static str, &[f64])> {
        let mut out = self.encoder.blocks();
        out.extend(HEAD_BLOCKS.into_iter().zip(self.head.blocks().map(Vec::as_slice)));
        out
    }

    pub fn blocks_mut(&mut self) -> Vec<(&'static str, &mut [f64])> {
        let mut out = self.encoder.blocks_mut();
        out.extend(HEAD_BLOCKS.into_iter().zip(self.head.blocks_mut().map(Vec::as_mut_slice)));
        out
    }

    pub fn zero_gradients(&self) -> Gradients {
        Gradients {
            encoder: self.encoder.blocks().iter().map(|(_, b)| vec![0.0; b.len()]).collect(),
            head: HeadParams::zeros(self.encoder.output_dim(), self.pot_rows, self.hidden),
        }
    }

    pub fn prepare_pot(&self, m: &PotMatrix) -> Result<PreparedPot> {
        check_matrix(m, self.pot_rows, self.lags)?;
        Ok(PreparedPot { values: self.scaling.apply(m) })
    }

    pub(crate) fn attention(&self, pot: &PreparedPot) -> Attention {
        attend(&pot.values, self.pot_rows, self.lags, &self.head.att_w, &self.head.att_v)
    }

    pub(crate) fn forward_with(&self, input: &E::Input, att: &Attention) -> Activations<E::Cache> {
        let (cls, enc) = self.encoder.forward(input);
        let mut x = cls;
        x.extend_from_slice(&att.pooled);
        let width = x.len();
        let z: Vec<f64> = (0..self.hidden)
            .map(|k| {
                let w = &self.head.dense_w[k * width..(k + 1) * width];
                self.head.dense_b[k] + w.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>()
            })
            .collect();
        let h: Vec<f64> = z.iter().map(|v| v.max(0.0)).collect();
        let logits = |w: &[f64], b: &[f64]| -> [f64; 2] {
            let mut out = [b[0], b[1]];
            for (c, o) in out.iter_mut().enumerate() {
                *o += w[c * self.hidden..(c + 1) * self.hidden].iter().zip(&h).map(|(a, b)| a * b).sum::<f64>();
            }
            out
        };
        let ps = softmax(&logits(&self.head.senti_w, &self.head.senti_b));
        let pw = softmax(&logits(&self.head.worth_w, &self.head.worth_b));
        Activations {
            enc,
            x,
            z,
            h,
            p_senti: [ps[0], ps[1]],
            p_worth: [pw[0], pw[1]],
        }
    }

    /// Backpropagates one example to every block except attention; the
    /// gradient of the pooled POT vector is added to `g_pooled`.
    pub(crate) fn backward_with(
        &self,
        input: &E::Input,
        acts: &Activations<E::Cache>,
        sentiment: bool,
        worthiness: Option<bool>,
        scale: f64,
        grads: &mut Gradients,
        g_pooled: &mut [f64],
    ) {
        let (ws, ww) = match worthiness {
            Some(_) => (self.lambda * scale, (1.0 - self.lambda) * scale),
            None => (scale, 0.0),
        };
        let gs = logit_grad(&acts.p_senti, sentiment as usize, ws);
        let gw = worthiness.map_or([0.0; 2], |w| logit_grad(&acts.p_worth, w as usize, ww));
        let hd = self.hidden;
        let g = &mut grads.head;
        let mut dh = vec![0.0; hd];
        for c in 0..2 {
            g.senti_b[c] += gs[c];
            g.worth_b[c] += gw[c];
            for k in 0..hd {
                g.senti_w[c * hd + k] += gs[c] * acts.h[k];
                g.worth_w[c * hd + k] += gw[c] * acts.h[k];
                dh[k] += gs[c] * self.head.senti_w[c * hd + k] + gw[c] * self.head.worth_w[c * hd + k];
            }
        }
        let width = acts.x.len();
        let mut dx = vec![0.0; width];
        for k in 0..hd {
            if acts.z[k] <= 0.0 || dh[k] == 0.0 {
                continue;
            }
            let dz = dh[k];
            g.dense_b[k] += dz;
            let w = &self.head.dense_w[k * width..(k + 1) * width];
            let gw_row = &mut g.dense_w[k * width..(k + 1) * width];
            for j in 0..width {
                gw_row[j] += dz * acts.x[j];
                dx[j] += dz * w[j];
            }
        }
        let d = self.encoder.output_dim();
        self.encoder.backward(input, &acts.enc, &dx[..d], &mut grads.encoder);
        g_pooled.iter_mut().zip(&dx[d..]).for_each(|(p, x)| *p += x);
    }

    pub(crate) fn attention_backward(
        &self,
        pot: &PreparedPot,
        att: &Attention,
        g_pooled: &[f64],
        grads: &mut Gradients,
    ) {
        attend_backward(
            &pot.values,
            self.pot_rows,
            self.lags,
            &self.head.att_v,
            att,
            g_pooled,
            &mut grads.head.att_w,
            &mut grads.head.att_v,
        );
    }

    pub fn forward(&self, doc: &TokenizedDoc, pot: &PotMatrix) -> Result<Output> {
        let prepared = self.prepare_pot(pot)?;
        let att = self.attention(&prepared);
        let acts = self.forward_with(&self.encoder.prepare(doc), &att);
        Ok(Output { p_senti: acts.p_senti, p_worth: acts.p_worth, attention: att.weights })
    }

    pub fn loss(&self, ex: &TrainingExample) -> Result<LossBreakdown> {
        let out = self.forward(&ex.doc, &ex.pot)?;
        Ok(multitask_loss(&out.p_senti, &out.p_worth, ex.sentiment, ex.worthiness, self.lambda))
    }

    /// Loss and full parameter gradient of a single example.
    pub fn gradients(&self, ex: &TrainingExample) -> Result<(LossBreakdown, Gradients)> {
        let prepared = self.prepare_pot(&ex.pot)?;
        let att = self.attention(&prepared);
        let input = self.encoder.prepare(&ex.doc);
        let acts = self.forward_with(&input, &att);
        let loss = multitask_loss(&acts.p_senti, &acts.p_worth, ex.sentiment, ex.worthiness, self.lambda);
        let mut grads = self.zero_gradients();
        let mut g_pooled = vec![0.0; self.pot_rows];
        self.backward_with(&input, &acts, ex.sentiment, ex.worthiness, 1.0, &mut grads, &mut g_pooled);
        self.attention_backward(&prepared, &att, &g_pooled, &mut grads);
        Ok((loss, grads))
    }

    /// Positive-sentiment probability of every document of one week, in order.
    pub fn score_docs(&self, docs: &[TokenizedDoc], pot: &PotMatrix) -> Result<Vec<f64>> {
        let prepared = self.prepare_pot(pot)?;
        let att = self.attention(&prepared);
        Ok(docs
            .par_iter()
            .map(|d| self.forward_with(&self.encoder.prepare(d), &att).p_senti[1])
            .collect())
    }

    /// Positive-sentiment and worthiness probabilities of every document of
    /// one week, in order.
    pub fn probabilities(&self, docs: &[&TokenizedDoc], pot: &PotMatrix) -> Result<Vec<(f64, f64)>> {
        let prepared = self.prepare_pot(pot)?;
        let att = self.attention(&prepared);
        Ok(docs
            .par_iter()
            .map(|d| {
                let acts = self.forward_with(&self.encoder.prepare(d), &att);
                (acts.p_senti[1], acts.p_worth[1])
            })
            .collect())
    }
}

/// Positive-sentiment probability of `doc`.
pub fn sentiment_score<E: TextEncoder>(model: &ExtractorModel<E>, doc: &TokenizedDoc, pot: &PotMatrix) -> Result<f64> {
    Ok(model.forward(doc, pot)?.p_senti[1])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Vocabulary;
    use chrono::NaiveDate;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn doc(tokens: &[&str]) -> TokenizedDoc {
        TokenizedDoc { record_id: "d".into(), tokens: tokens.iter().map(|s| s.to_string()).collect() }
    }

    fn pot(values: Vec<f64>) -> Arc<PotMatrix> {
        Arc::new(PotMatrix { anchor: NaiveDate::from_ymd_opt(2020, 1, 6).unwrap(), rows: 2, lags: 2, values })
    }

    fn model(seed: u64) -> ExtractorModel {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let vocab = Vocabulary::new(vec!["gain".into(), "fell".into(), "market".into()]).unwrap();
        let enc = ReferenceEncoder::new(vocab, 3, 2, &mut rng);
        ExtractorModel::new(enc, 2, 2, 4, 0.5, &mut rng)
    }

    #[test]
    fn zero_heads_give_even_odds() {
        let m = model(0);
        let out = m.forward(&doc(&["gain", "market"]), &pot(vec![0.1, -0.2, 0.3, 0.0])).unwrap();
        assert_eq!(out.p_senti, [0.5, 0.5]);
        assert_eq!(out.p_worth, [0.5, 0.5]);
        assert_eq!(sentiment_score(&m, &doc(&[]), &pot(vec![0.0; 4])).unwrap(), 0.5);
    }

    #[test]
    fn outputs_are_distributions() {
        let mut m = model(3);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for (_, b) in m.blocks_mut() {
            b.iter_mut().for_each(|x| *x += rng.gen_range(-1.0..1.0));
        }
        let out = m.forward(&doc(&["fell", "x"]), &pot(vec![1.0, -2.0, 0.5, 0.7])).unwrap();
        assert!((out.p_senti.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!((out.p_worth.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!((out.attention.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn initialization() {
        let m = model(1);
        assert!(m.head.att_v.iter().all(|x| *x == 0.0));
        assert!(m.head.senti_w.iter().chain(&m.head.worth_w).all(|x| *x == 0.0));
        for i in 0..2 {
            for j in 0..2 {
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((m.head.att_w[i * 2 + j] - expected).abs() < 0.05);
            }
        }
        let bound = 1.0 / 4f64.sqrt();
        assert!(m.head.dense_w.iter().all(|w| w.abs() < bound));
    }

    #[test]
    fn loss_examples() {
        let unlabeled = multitask_loss(&[0.5, 0.5], &[0.9, 0.1], true, None, 0.5);
        assert_eq!(unlabeled.total, 2f64.ln());
        assert_eq!(unlabeled.ce_worth, None);
        let lambda_one = multitask_loss(&[0.2, 0.8], &[0.3, 0.7], true, Some(false), 1.0);
        assert_eq!(lambda_one.total, lambda_one.ce_senti);
        let mixed = multitask_loss(&[0.2, 0.8], &[0.3, 0.7], true, Some(false), 0.5);
        assert!((mixed.total - 0.5 * (-(0.8f64).ln()) - 0.5 * (-(0.3f64).ln())).abs() < 1e-15);
        let clamped = multitask_loss(&[1.0, 0.0], &[0.5, 0.5], true, None, 0.5);
        assert!(clamped.clamped);
        assert_eq!(clamped.total, -PROB_FLOOR.ln());
    }

    #[test]
    fn unlabeled_worthiness_leaves_head_untouched() {
        let mut m = model(2);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for (_, b) in m.blocks_mut() {
            b.iter_mut().for_each(|x| *x += rng.gen_range(-1.0..1.0));
        }
        let ex = TrainingExample {
            doc: doc(&["gain", "gain", "market"]),
            pot: pot(vec![0.4, 0.1, -0.3, 0.8]),
            sentiment: true,
            worthiness: None,
        };
        let (_, g) = m.gradients(&ex).unwrap();
        assert!(g.head.worth_w.iter().chain(&g.head.worth_b).all(|x| *x == 0.0));
        assert!(g.head.senti_w.iter().any(|x| *x != 0.0));
    }

    #[test]
    fn pot_scaling_standardizes_rows() {
        let a = pot(vec![1.0, 3.0, 10.0, 10.0]);
        let s = PotScaling::fit(2, [a.as_ref()]).unwrap();
        assert_eq!(s.mean, [2.0, 10.0]);
        assert_eq!(s.std, [1.0, 1.0]);
        assert_eq!(s.apply(&a), [-1.0, 1.0, 0.0, 0.0]);
        let b = pot(vec![0.0, 4.0, 0.0, 0.0]);
        let s = PotScaling::fit(2, [b.as_ref()]).unwrap();
        assert_eq!(s.std, [2.0, 1.0]);
    }

    #[test]
    fn wrong_matrix_shape_is_rejected() {
        let m = model(0);
        let bad = PotMatrix { anchor: NaiveDate::from_ymd_opt(2020, 1, 6).unwrap(), rows: 3, lags: 2, values: vec![0.0; 6] };
        assert_eq!(m.forward(&doc(&["gain"]), &bad).unwrap_err().exit_code(), 2);
    }
}
