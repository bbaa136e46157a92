use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::path::Path;
use std::sync::Arc;

use chrono::{Datelike, NaiveDate};
use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calendar::{BinningPolicy, TradingWeek, Trend};
use crate::corpus::TokenizedDoc;
use crate::error::{Error, Result};
use crate::extractor::{ExtractorModel, TextEncoder};
use crate::lexicon::PotMatrix;
use crate::util;

/// Scores of one article.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArticleScore {
    /// Probability of positive sentiment.
    pub sentiment: f64,
    /// Probability that the article is market-relevant.
    pub worthiness: f64,
}

/// Anything that can score the articles of one week.
pub trait ArticleScorer: Sync {
    fn score_week(&self, anchor: NaiveDate, docs: &[&TokenizedDoc]) -> Result<Vec<ArticleScore>>;
}

impl<F> ArticleScorer for F
where
    F: Fn(NaiveDate, &TokenizedDoc) -> ArticleScore + Sync,
{
    fn score_week(&self, anchor: NaiveDate, docs: &[&TokenizedDoc]) -> Result<Vec<ArticleScore>> {
        Ok(docs.par_iter().map(|d| self(anchor, d)).collect())
    }
}

/// Scores articles with a trained extractor and the POT matrix of their week.
pub struct ExtractorScorer<'a, E: TextEncoder> {
    pub model: &'a ExtractorModel<E>,
    pub pots: &'a BTreeMap<NaiveDate, Arc<PotMatrix>>,
}

impl<E: TextEncoder> ArticleScorer for ExtractorScorer<'_, E> {
    fn score_week(&self, anchor: NaiveDate, docs: &[&TokenizedDoc]) -> Result<Vec<ArticleScore>> {
        let pot = self
            .pots
            .get(&anchor)
            .ok_or_else(|| Error::data(format!("no POT matrix for week {anchor}")))?;
        Ok(self
            .model
            .probabilities(docs, pot)?
            .into_iter()
            .map(|(sentiment, worthiness)| ArticleScore { sentiment, worthiness })
            .collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetConfig {
    /// Articles sampled per week.
    pub n_articles: usize,
    /// Weeks between the news week and the week whose change is its target.
    pub offset: usize,
    pub seed: u64,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self { n_articles: 100, offset: 1, seed: 42 }
    }
}

/// Aggregated sentiment of one news week and the trend it is paired with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeeklySentiment {
    pub anchor: NaiveDate,
    /// Week whose change is the target; `None` past the end of the data.
    pub target: Option<NaiveDate>,
    pub target_pct: Option<f64>,
    /// `None` without a target or when the target change falls in a binary
    /// policy's gap.
    pub label: Option<Trend>,
    pub n_sampled: usize,
    pub overall_score: f64,
    pub score_std: f64,
    /// Fraction of sampled articles scored above 0.5.
    pub frac_positive: f64,
    pub mean_worthiness: f64,
    pub sampled_ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummarizerDataset {
    pub rows: Vec<WeeklySentiment>,
    /// Weeks dropped because their articles trained the extractor.
    pub excluded: Vec<NaiveDate>,
    /// Weeks dropped for having no articles.
    pub empty: Vec<NaiveDate>,
}

fn week_rng_stream(anchor: NaiveDate) -> u64 {
    0x5A4D_0000_0000 ^ anchor.num_days_from_ce() as u64
}

/// Builds one row per usable week: weeks whose articles trained the
/// extractor are dropped, as is any article id seen in those weeks, and up to
/// `n_articles` of the remaining articles are sampled, scored and averaged.
pub fn build_summarizer_dataset(
    weeks: &[TradingWeek],
    policy: &BinningPolicy,
    extractor_weeks: &BTreeSet<NaiveDate>,
    docs: &HashMap<String, TokenizedDoc>,
    scorer: &dyn ArticleScorer,
    config: &DatasetConfig,
) -> Result<SummarizerDataset> {
    if config.n_articles == 0 {
        return Err(Error::config("summarizer.n_articles must be at least 1"));
    }
    let leaked: HashSet<&str> = weeks
        .iter()
        .filter(|w| extractor_weeks.contains(&w.anchor))
        .flat_map(|w| w.news_ids.iter().map(String::as_str))
        .collect();
    let mut out = SummarizerDataset { rows: Vec::new(), excluded: Vec::new(), empty: Vec::new() };
    for (i, week) in weeks.iter().enumerate() {
        if extractor_weeks.contains(&week.anchor) {
            out.excluded.push(week.anchor);
            continue;
        }
        let available: Vec<&str> =
            week.news_ids.iter().map(String::as_str).filter(|id| !leaked.contains(id)).collect();
        if available.is_empty() {
            out.empty.push(week.anchor);
            continue;
        }
        let k = config.n_articles.min(available.len());
        let mut rng = util::rng(config.seed, week_rng_stream(week.anchor));
        let mut picks = index::sample(&mut rng, available.len(), k).into_vec();
        picks.sort_unstable();
        let sampled: Vec<&TokenizedDoc> = picks
            .iter()
            .map(|&p| {
                docs.get(available[p])
                    .ok_or_else(|| Error::data(format!("week {} lists unknown article {}", week.anchor, available[p])))
            })
            .collect::<Result<_>>()?;
        let scores = scorer.score_week(week.anchor, &sampled)?;
        if scores.len() != sampled.len() {
            return Err(Error::Shape(format!("scorer returned {} scores for {} articles", scores.len(), k)));
        }
        let n = k as f64;
        let mean = scores.iter().map(|s| s.sentiment).sum::<f64>() / n;
        let var = scores.iter().map(|s| (s.sentiment - mean).powi(2)).sum::<f64>() / n;
        let target = weeks.get(i + config.offset);
        out.rows.push(WeeklySentiment {
            anchor: week.anchor,
            target: target.map(|t| t.anchor),
            target_pct: target.map(|t| t.pct_change),
            label: target.and_then(|t| policy.classify(t.pct_change)),
            n_sampled: k,
            overall_score: mean,
            score_std: var.sqrt(),
            frac_positive: scores.iter().filter(|s| s.sentiment > 0.5).count() as f64 / n,
            mean_worthiness: scores.iter().map(|s| s.worthiness).sum::<f64>() / n,
            sampled_ids: picks.iter().map(|&p| available[p].to_string()).collect(),
        });
    }
    Ok(out)
}

/// Labeled rows in anchor order: the first `train_weeks` train, the rest test.
pub fn chronological_split(
    rows: &[WeeklySentiment],
    train_weeks: usize,
) -> Result<(Vec<WeeklySentiment>, Vec<WeeklySentiment>)> {
    let mut labeled: Vec<WeeklySentiment> = rows.iter().filter(|r| r.label.is_some()).cloned().collect();
    labeled.sort_by_key(|r| r.anchor);
    if train_weeks == 0 || labeled.len() <= train_weeks {
        return Err(Error::data(format!(
            "{} labeled weeks cannot be split into {train_weeks} training weeks and a non-empty test set",
            labeled.len()
        )));
    }
    let test = labeled.split_off(train_weeks);
    Ok((labeled, test))
}

pub fn write_weekly_rows(path: &Path, rows: &[WeeklySentiment]) -> Result<()> {
    let mut out = Vec::new();
    for r in rows {
        serde_json::to_writer(&mut out, r).expect("row serializes");
        out.push(b'\n');
    }
    util::write_all(path, &out)
}

pub fn read_weekly_rows(path: &Path) -> Result<Vec<WeeklySentiment>> {
    if !path.exists() {
        return Err(Error::MissingArtifact { stage: "score", path: path.to_path_buf() });
    }
    util::read_to_string(path)?
        .lines()
        .enumerate()
        .map(|(i, line)| {
            serde_json::from_str(line).map_err(|e| Error::data(format!("{}:{}: {e}", path.display(), i + 1)))
        })
        .collect()
}

/// `anchor,n_sampled,overall_score,true_class,predicted_class`; unlabeled
/// weeks have an empty true class.
pub fn write_weekly_sentiment_csv(path: &Path, rows: &[WeeklySentiment], predicted: &[Trend]) -> Result<()> {
    if rows.len() != predicted.len() {
        return Err(Error::Shape(format!("{} weeks but {} predictions", rows.len(), predicted.len())));
    }
    let mut w = csv::Writer::from_writer(util::create(path)?);
    w.write_record(["anchor", "n_sampled", "overall_score", "true_class", "predicted_class"])?;
    for (r, p) in rows.iter().zip(predicted) {
        w.write_record([
            r.anchor.to_string(),
            r.n_sampled.to_string(),
            r.overall_score.to_string(),
            r.label.map(|t| t.to_string()).unwrap_or_default(),
            p.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(format!("cannot write {}", path.display()), e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::Days;
    use proptest::prelude::*;

    fn monday(i: u64) -> NaiveDate {
        NaiveDate::from_ymd_opt(2012, 1, 2).unwrap() + Days::new(7 * i)
    }

    fn corpus(n_weeks: usize, per_week: impl Fn(usize) -> usize) -> (Vec<TradingWeek>, HashMap<String, TokenizedDoc>) {
        let mut docs = HashMap::new();
        let weeks = (0..n_weeks)
            .map(|i| {
                let ids: Vec<String> = (0..per_week(i)).map(|j| format!("w{i}a{j}")).collect();
                for id in &ids {
                    docs.insert(id.clone(), TokenizedDoc { record_id: id.clone(), tokens: vec![id.clone()] });
                }
                TradingWeek {
                    anchor: monday(i as u64 + 1),
                    prev_anchor: monday(i as u64),
                    pct_change: if i % 2 == 0 { 1.0 } else { -1.0 },
                    news_ids: ids,
                }
            })
            .collect();
        (weeks, docs)
    }

    /// Deterministic pseudo-score in [0, 1] derived from the article id.
    fn hashed(_: NaiveDate, d: &TokenizedDoc) -> ArticleScore {
        let h = util::mix_seed(0, d.record_id.bytes().fold(0u64, |a, b| a.wrapping_mul(31).wrapping_add(b as u64)));
        ArticleScore { sentiment: (h % 1000) as f64 / 999.0, worthiness: 1.0 }
    }

    #[test]
    fn constant_scores_average_to_the_constant() {
        let (weeks, docs) = corpus(3, |_| 7);
        let half = |_: NaiveDate, _: &TokenizedDoc| ArticleScore { sentiment: 0.5, worthiness: 0.2 };
        let ds = build_summarizer_dataset(
            &weeks,
            &BinningPolicy::binary_asymmetric(),
            &BTreeSet::new(),
            &docs,
            &half,
            &DatasetConfig::default(),
        )
        .unwrap();
        assert!(ds.rows.iter().all(|r| r.overall_score == 0.5 && r.score_std == 0.0));
        assert!((ds.rows[0].mean_worthiness - 0.2).abs() < 1e-15);
    }

    #[test]
    fn small_weeks_use_every_article() {
        let (weeks, docs) = corpus(2, |_| 40);
        let ds = build_summarizer_dataset(
            &weeks,
            &BinningPolicy::three_way(),
            &BTreeSet::new(),
            &docs,
            &hashed,
            &DatasetConfig::default(),
        )
        .unwrap();
        assert_eq!(ds.rows[0].n_sampled, 40);
        let (big_weeks, big_docs) = corpus(1, |_| 150);
        let ds = build_summarizer_dataset(
            &big_weeks,
            &BinningPolicy::three_way(),
            &BTreeSet::new(),
            &big_docs,
            &hashed,
            &DatasetConfig::default(),
        )
        .unwrap();
        let r = &ds.rows[0];
        assert_eq!(r.n_sampled, 100);
        assert_eq!(r.sampled_ids.iter().collect::<BTreeSet<_>>().len(), 100);
    }

    #[test]
    fn targets_are_the_following_week() {
        let (weeks, docs) = corpus(4, |_| 3);
        let ds = build_summarizer_dataset(
            &weeks,
            &BinningPolicy::binary_asymmetric(),
            &[weeks[1].anchor].into(),
            &docs,
            &hashed,
            &DatasetConfig::default(),
        )
        .unwrap();
        let anchors: Vec<_> = ds.rows.iter().map(|r| r.anchor).collect();
        assert_eq!(anchors, vec![weeks[0].anchor, weeks[2].anchor, weeks[3].anchor]);
        assert_eq!(ds.rows[0].target, Some(weeks[1].anchor));
        assert_eq!(ds.rows[0].label, Some(Trend::Down));
        assert_eq!(ds.rows[1].label, Some(Trend::Down));
        assert_eq!(ds.rows[2].target, None);
        assert_eq!(ds.rows[2].label, None);
        assert_eq!(ds.excluded, vec![weeks[1].anchor]);
    }

    #[test]
    fn empty_weeks_are_reported() {
        let (weeks, docs) = corpus(3, |i| if i == 1 { 0 } else { 2 });
        let ds = build_summarizer_dataset(
            &weeks,
            &BinningPolicy::three_way(),
            &BTreeSet::new(),
            &docs,
            &hashed,
            &DatasetConfig::default(),
        )
        .unwrap();
        assert_eq!(ds.empty, vec![weeks[1].anchor]);
        assert_eq!(ds.rows.len(), 2);
    }

    #[test]
    fn split_is_chronological() {
        let (weeks, docs) = corpus(10, |_| 1);
        let ds = build_summarizer_dataset(
            &weeks,
            &BinningPolicy::three_way(),
            &BTreeSet::new(),
            &docs,
            &hashed,
            &DatasetConfig::default(),
        )
        .unwrap();
        let mut shuffled = ds.rows.clone();
        shuffled.reverse();
        let (train, test) = chronological_split(&shuffled, 6).unwrap();
        assert_eq!(train.len(), 6);
        assert_eq!(test.len(), 3);
        assert!(train.last().unwrap().anchor < test[0].anchor);
        assert!(chronological_split(&ds.rows, 9).is_err());
    }

    #[test]
    fn rows_round_trip_through_jsonl() {
        let (weeks, docs) = corpus(3, |_| 4);
        let ds = build_summarizer_dataset(
            &weeks,
            &BinningPolicy::three_way(),
            &BTreeSet::new(),
            &docs,
            &hashed,
            &DatasetConfig::default(),
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rows.jsonl");
        write_weekly_rows(&path, &ds.rows).unwrap();
        assert_eq!(read_weekly_rows(&path).unwrap(), ds.rows);
    }

    proptest! {
        #[test]
        fn no_extractor_article_reaches_the_summarizer(
            n_weeks in 2usize..30,
            counts in proptest::collection::vec(0usize..12, 30),
            mask in proptest::collection::vec(any::<bool>(), 30),
            shared in proptest::collection::vec((0usize..30, 0usize..30), 0..10),
            seed in 0u64..1000,
        ) {
            let (mut weeks, docs) = corpus(n_weeks, |i| counts[i]);
            // Duplicate some ids across weeks, as re-published wire stories do.
            for (from, to) in shared {
                let (from, to) = (from % n_weeks, to % n_weeks);
                if let Some(id) = weeks[from].news_ids.first().cloned() {
                    weeks[to].news_ids.push(id);
                }
            }
            let extractor: BTreeSet<NaiveDate> =
                weeks.iter().zip(&mask).filter(|(_, m)| **m).map(|(w, _)| w.anchor).collect();
            let config = DatasetConfig { n_articles: 5, seed, ..Default::default() };
            let ds = build_summarizer_dataset(&weeks, &BinningPolicy::three_way(), &extractor, &docs, &hashed, &config)
                .unwrap();
            let used: HashSet<&String> =
                weeks.iter().filter(|w| extractor.contains(&w.anchor)).flat_map(|w| &w.news_ids).collect();
            for r in &ds.rows {
                prop_assert!(!extractor.contains(&r.anchor));
                prop_assert!(r.sampled_ids.iter().all(|id| !used.contains(id)));
            }
            prop_assert_eq!(ds.rows.len() + ds.excluded.len() + ds.empty.len(), n_weeks);
        }

        #[test]
        fn sampling_stays_within_the_week_range(seed_a in 0u64..500, seed_b in 500u64..1000) {
            let (weeks, docs) = corpus(3, |_| 30);
            let build = |seed| {
                let config = DatasetConfig { n_articles: 10, seed, ..Default::default() };
                build_summarizer_dataset(&weeks, &BinningPolicy::three_way(), &BTreeSet::new(), &docs, &hashed, &config)
                    .unwrap()
            };
            let (a, b) = (build(seed_a), build(seed_b));
            prop_assert_eq!(&a, &build(seed_a));
            for (week, (ra, rb)) in weeks.iter().zip(a.rows.iter().zip(&b.rows)) {
                let all: Vec<f64> = week.news_ids.iter().map(|id| hashed(week.anchor, &docs[id]).sentiment).collect();
                let lo = all.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = all.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                for r in [ra, rb] {
                    prop_assert!(lo <= r.overall_score && r.overall_score <= hi);
                    prop_assert!((0.0..=1.0).contains(&r.overall_score));
                }
            }
        }
    }

    #[test]
    fn seeds_change_the_sample() {
        let (weeks, docs) = corpus(3, |_| 30);
        let build = |seed| {
            let config = DatasetConfig { n_articles: 10, seed, ..Default::default() };
            build_summarizer_dataset(&weeks, &BinningPolicy::three_way(), &BTreeSet::new(), &docs, &hashed, &config)
                .unwrap()
        };
        assert_ne!(build(1).rows[0].sampled_ids, build(2).rows[0].sampled_ids);
    }
}
