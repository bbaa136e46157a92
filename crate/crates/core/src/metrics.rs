//! Classification and correlation metrics, and the evaluation report.

use std::fmt::Write as _;
use std::path::Path;

use chrono::NaiveDate;

use crate::calendar::{BinningPolicy, Trend};
use crate::error::{Error, Result, Undefined};
use crate::util;

/// K x K count table; rows are true classes, columns predictions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    k: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(k: usize) -> Self {
        assert!(k >= 2, "a confusion matrix needs at least two classes");
        Self { k, counts: vec![0; k * k] }
    }

    /// Builds a matrix from rows of counts.
    pub fn from_rows(rows: &[&[u64]]) -> Result<Self> {
        let k = rows.len();
        if k < 2 || rows.iter().any(|r| r.len() != k) {
            return Err(Error::Shape(format!("confusion matrix rows must be square with k >= 2, got {k} rows")));
        }
        Ok(Self { k, counts: rows.iter().flat_map(|r| r.iter().copied()).collect() })
    }

    pub fn from_labels(k: usize, truths: &[usize], predictions: &[usize]) -> Result<Self> {
        if truths.len() != predictions.len() {
            return Err(Error::Shape(format!(
                "{} truths but {} predictions",
                truths.len(),
                predictions.len()
            )));
        }
        let mut cm = Self::new(k);
        for (&t, &p) in truths.iter().zip(predictions) {
            if t >= k || p >= k {
                return Err(Error::data(format!("class index out of range for {k} classes: ({t}, {p})")));
            }
            cm.add(t, p);
        }
        Ok(cm)
    }

    pub fn add(&mut self, truth: usize, predicted: usize) {
        self.counts[truth * self.k + predicted] += 1;
    }

    pub fn classes(&self) -> usize {
        self.k
    }

    pub fn get(&self, truth: usize, predicted: usize) -> u64 {
        self.counts[truth * self.k + predicted]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.k).map(|i| self.get(i, i)).sum()
    }

    pub fn true_count(&self, class: usize) -> u64 {
        (0..self.k).map(|p| self.get(class, p)).sum()
    }

    pub fn predicted_count(&self, class: usize) -> u64 {
        (0..self.k).map(|t| self.get(t, class)).sum()
    }
}

pub fn accuracy(cm: &ConfusionMatrix) -> Result<f64, Undefined> {
    match cm.total() {
        0 => Err(Undefined::new("accuracy", "no evaluated items")),
        n => Ok(cm.trace() as f64 / n as f64),
    }
}

/// MCC value; `degenerate` marks a zero denominator, where the value is 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mcc {
    pub value: f64,
    pub degenerate: bool,
}

/// Matthews correlation in the K-class form
/// `(c*s - sum p_k t_k) / sqrt((s^2 - sum p_k^2)(s^2 - sum t_k^2))`,
/// which reduces to the usual binary formula for K = 2.
pub fn mcc(cm: &ConfusionMatrix) -> Result<Mcc, Undefined> {
    let s = cm.total() as i128;
    if s == 0 {
        return Err(Undefined::new("MCC", "no evaluated items"));
    }
    let c = cm.trace() as i128;
    let (mut pt, mut pp, mut tt) = (0i128, 0i128, 0i128);
    for k in 0..cm.classes() {
        let p = cm.predicted_count(k) as i128;
        let t = cm.true_count(k) as i128;
        pt += p * t;
        pp += p * p;
        tt += t * t;
    }
    let num = c * s - pt;
    let den = (s * s - pp) as f64 * (s * s - tt) as f64;
    if den == 0.0 {
        return Ok(Mcc { value: 0.0, degenerate: true });
    }
    Ok(Mcc { value: num as f64 / den.sqrt(), degenerate: false })
}

/// F1 of `positive`; 0 when precision and recall are both 0.
pub fn f1(cm: &ConfusionMatrix, positive: usize) -> Result<f64, Undefined> {
    if cm.total() == 0 {
        return Err(Undefined::new("F1", "no evaluated items"));
    }
    let tp = cm.get(positive, positive) as f64;
    let predicted = cm.predicted_count(positive) as f64;
    let actual = cm.true_count(positive) as f64;
    let precision = if predicted > 0.0 { tp / predicted } else { 0.0 };
    let recall = if actual > 0.0 { tp / actual } else { 0.0 };
    if precision + recall == 0.0 {
        return Ok(0.0);
    }
    Ok(2.0 * precision * recall / (precision + recall))
}

/// Sample Pearson correlation.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::Shape(format!("{} xs but {} ys", xs.len(), ys.len())));
    }
    if xs.len() < 2 {
        return Err(Undefined::new("Pearson correlation", "fewer than two points").into());
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Undefined::new("Pearson correlation", "zero variance").into());
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// One evaluated week.
#[derive(Debug, Clone, PartialEq)]
pub struct WeekOutcome {
    pub anchor: NaiveDate,
    /// Anchor of the week whose change is predicted.
    pub target: NaiveDate,
    pub sentiment: f64,
    pub pct_change: f64,
    pub truth: Trend,
    pub predicted: Trend,
}

#[derive(Debug, Clone)]
pub struct Report {
    pub policy: BinningPolicy,
    pub confusion: ConfusionMatrix,
    pub accuracy: Result<f64, Undefined>,
    pub mcc: Result<Mcc, Undefined>,
    /// F1 of the Up class.
    pub f1_up: Result<f64, Undefined>,
    /// Correlation between weekly sentiment and the target week's change.
    pub correlation: Result<f64, Undefined>,
    pub weeks: Vec<WeekOutcome>,
}

pub fn report(weeks: Vec<WeekOutcome>, policy: &BinningPolicy) -> Result<Report> {
    if weeks.is_empty() {
        return Err(Error::data("no evaluation weeks"));
    }
    let classes = policy.classes();
    let index = |t: Trend| {
        classes
            .iter()
            .position(|c| *c == t)
            .ok_or_else(|| Error::data(format!("class {t} is not part of policy {}", policy.describe())))
    };
    let truths = weeks.iter().map(|w| index(w.truth)).collect::<Result<Vec<_>>>()?;
    let predictions = weeks.iter().map(|w| index(w.predicted)).collect::<Result<Vec<_>>>()?;
    let confusion = ConfusionMatrix::from_labels(classes.len(), &truths, &predictions)?;
    let sentiments: Vec<f64> = weeks.iter().map(|w| w.sentiment).collect();
    let changes: Vec<f64> = weeks.iter().map(|w| w.pct_change).collect();
    let correlation = match pearson(&sentiments, &changes) {
        Ok(r) => Ok(r),
        Err(Error::Undefined(u)) => Err(u),
        Err(e) => return Err(e),
    };
    Ok(Report {
        policy: *policy,
        accuracy: accuracy(&confusion),
        mcc: mcc(&confusion),
        f1_up: f1(&confusion, index(Trend::Up)?),
        correlation,
        confusion,
        weeks,
    })
}

impl Report {
    /// The first undefined metric, if any.
    pub fn undefined(&self) -> Option<Undefined> {
        [
            self.accuracy.as_ref().err(),
            self.mcc.as_ref().err(),
            self.f1_up.as_ref().err(),
            self.correlation.as_ref().err(),
        ]
        .into_iter()
        .flatten()
        .next()
        .cloned()
    }

    pub fn to_text(&self) -> String {
        let fmt = |r: &Result<f64, Undefined>| match r {
            Ok(v) => format!("{v:.4}"),
            Err(u) => format!("undefined ({})", u.reason),
        };
        let mut s = String::new();
        let _ = writeln!(s, "policy: {}", self.policy.describe());
        let _ = writeln!(s, "weeks: {}", self.weeks.len());
        let _ = writeln!(s, "accuracy: {}", fmt(&self.accuracy));
        match &self.mcc {
            Ok(m) if m.degenerate => {
                let _ = writeln!(s, "mcc: 0.0000 (degenerate: a row or column sum is zero)");
            }
            Ok(m) => {
                let _ = writeln!(s, "mcc: {:.4}", m.value);
            }
            Err(u) => {
                let _ = writeln!(s, "mcc: undefined ({})", u.reason);
            }
        }
        let _ = writeln!(s, "f1(up): {}", fmt(&self.f1_up));
        let _ = writeln!(s, "pearson(sentiment, pct_change): {}", fmt(&self.correlation));
        let classes = self.policy.classes();
        let _ = writeln!(s, "confusion (rows = truth, columns = predicted):");
        let header: Vec<String> = classes.iter().map(|c| format!("{c:>9}")).collect();
        let _ = writeln!(s, "{:>9}{}", "", header.join(""));
        for (i, c) in classes.iter().enumerate() {
            let row: Vec<String> = (0..classes.len()).map(|j| format!("{:>9}", self.confusion.get(i, j))).collect();
            let _ = writeln!(s, "{c:>9}{}", row.join(""));
        }
        s
    }

    /// Summary rows (`metric,value`) followed by one row per week.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let value = |r: &Result<f64, Undefined>| r.as_ref().map(|v| v.to_string()).unwrap_or_default();
        let mut w = csv::WriterBuilder::new().flexible(true).from_writer(util::create(path)?);
        w.write_record(["metric", "value"])?;
        w.write_record(["policy", &self.policy.describe()])?;
        w.write_record(["weeks", &self.weeks.len().to_string()])?;
        w.write_record(["accuracy", &value(&self.accuracy)])?;
        w.write_record(["mcc", &value(&self.mcc.as_ref().map(|m| m.value).map_err(Clone::clone))])?;
        w.write_record(["mcc_degenerate", &self.mcc.as_ref().map(|m| m.degenerate.to_string()).unwrap_or_default()])?;
        w.write_record(["f1_up", &value(&self.f1_up)])?;
        w.write_record(["pearson", &value(&self.correlation)])?;
        w.write_record(["anchor", "target", "sentiment", "pct_change", "truth", "predicted"])?;
        for wk in &self.weeks {
            w.write_record([
                wk.anchor.to_string(),
                wk.target.to_string(),
                wk.sentiment.to_string(),
                wk.pct_change.to_string(),
                wk.truth.to_string(),
                wk.predicted.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io(format!("cannot write {}", path.display()), e))
    }
}
