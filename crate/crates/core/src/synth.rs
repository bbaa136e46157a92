//! Planted-signal synthetic corpus.
//!
//! Each week has a latent regime, bullish or bearish, that flips from one
//! week to the next with probability `switch_prob` (0.5 makes weeks
//! independent). Articles of the week carry polar words of the regime (with
//! probability `follow_prob`, otherwise of the opposite regime); a small
//! fraction are irrelevant and carry none. News leads prices by `lead_weeks`:
//! the change of week `t + lead_weeks` is `scale * z` with
//! `z = rho * r + sqrt(1 - rho^2) * e`, `r = +-1` the regime of week `t` and
//! `e` standard normal, so `rho` sets how strongly prices follow the text.

use std::collections::BTreeSet;
use std::path::Path;

use chrono::{Datelike, Days, NaiveDate, TimeZone, Utc, Weekday};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::calendar::{PricePoint, PriceSeries};
use crate::corpus::NewsRecord;
use crate::error::{Error, Result};
use crate::util;

pub const POSITIVE_WORDS: &[&str] = &[
    "surge", "rally", "gain", "soar", "upbeat", "record", "boost", "rebound", "beat", "strong", "optimism", "growth",
    "upgrade", "jump", "recovery", "profit",
];

pub const NEGATIVE_WORDS: &[&str] = &[
    "slump", "plunge", "loss", "tumble", "fear", "selloff", "downgrade", "weak", "crisis", "slowdown", "miss", "drop",
    "recession", "default", "layoffs", "warning",
];

const FILLER: &[&str] = &[
    "the", "market", "company", "said", "shares", "investors", "analysts", "quarter", "report", "percent",
    "trading", "index", "stocks", "week", "board", "executive", "statement", "according", "people", "familiar",
    "officials", "data", "year", "month", "price", "bond", "yield", "dollar", "economy", "bank", "central",
    "policy", "rate", "meeting", "sector", "earnings", "revenue", "forecast", "outlook", "chief", "deal",
    "merger", "government", "federal", "exchange", "fund", "capital", "credit", "oil", "energy", "consumer",
    "retail", "technology", "results", "expected", "plans", "after", "before", "while", "also", "from", "with",
    "that", "this", "into", "over", "under", "about", "their", "since", "later", "early", "announced", "client",
    "sources", "filing", "shareholders", "session", "futures", "currency", "commodity", "asset", "holdings",
    "management", "strategy", "pricing", "volume", "supply", "demand", "production", "contract",
];

const RELEVANT_TAGS: &[&str] = &[
    "company:apple",
    "company:jpmorgan",
    "company:microsoft",
    "sector:financials",
    "region:us",
    "sector:technology",
    "sector:energy",
];

const IRRELEVANT_TAGS: &[&str] =
    &["sector:healthcare", "region:europe", "sector:cyclicals", "sector:basic-materials", "sector:utilities"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub seed: u64,
    pub weeks: usize,
    pub articles_per_week: usize,
    /// Correlation between a week's regime and the price change it leads.
    pub rho: f64,
    /// Probability that the regime flips from one week to the next.
    pub switch_prob: f64,
    /// Weeks between the news and the price change it drives.
    pub lead_weeks: usize,
    /// Percent-point scale of weekly changes.
    pub change_scale: f64,
    /// Polar words per side drawn from the built-in lists.
    pub polar_words: usize,
    pub polar_per_article: usize,
    /// Probability that a relevant article's polar words match the regime.
    pub follow_prob: f64,
    pub irrelevant_fraction: f64,
    pub filler_tokens: usize,
    /// Probability that a Monday is a market holiday.
    pub holiday_rate: f64,
    /// First anchor Monday; the price series starts one week earlier.
    pub start: NaiveDate,
    /// Word planted in the relevant articles of bearish weeks from
    /// `event_week` on.
    pub event_word: String,
    pub event_week: Option<usize>,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            weeks: 120,
            articles_per_week: 50,
            rho: 0.9,
            switch_prob: 0.5,
            lead_weeks: 1,
            change_scale: 1.5,
            polar_words: 12,
            polar_per_article: 3,
            follow_prob: 0.99,
            irrelevant_fraction: 0.02,
            filler_tokens: 40,
            holiday_rate: 0.04,
            start: NaiveDate::from_ymd_opt(2015, 1, 5).expect("valid date"),
            event_word: "coronavirus".into(),
            event_week: Some(80),
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::config(format!("synth: {msg}")));
        let prob = |name: &str, p: f64| -> Result<()> {
            if (0.0..=1.0).contains(&p) {
                Ok(())
            } else {
                Err(Error::config(format!("synth: {name} must be in [0, 1], got {p}")))
            }
        };
        if self.weeks < 2 || self.lead_weeks >= self.weeks {
            return bad(format!("need at least 2 weeks and more weeks than lead_weeks, got {}", self.weeks));
        }
        if self.articles_per_week == 0 {
            return bad("articles_per_week must be at least 1".into());
        }
        prob("rho", self.rho.abs())?;
        prob("switch_prob", self.switch_prob)?;
        prob("follow_prob", self.follow_prob)?;
        prob("irrelevant_fraction", self.irrelevant_fraction)?;
        prob("holiday_rate", self.holiday_rate)?;
        if !(self.change_scale > 0.0 && self.change_scale.is_finite()) {
            return bad("change_scale must be positive".into());
        }
        if self.polar_words == 0 || self.polar_words > POSITIVE_WORDS.len().min(NEGATIVE_WORDS.len()) {
            return bad(format!("polar_words must be in 1..={}", POSITIVE_WORDS.len().min(NEGATIVE_WORDS.len())));
        }
        if self.start.weekday() != Weekday::Mon {
            return bad(format!("start {} is not a Monday", self.start));
        }
        if self.filler_tokens < 30 {
            return bad("filler_tokens must be at least 30 so articles pass the length filter".into());
        }
        Ok(())
    }
}

/// Ground truth of one generated week.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeekTruth {
    pub anchor: NaiveDate,
    /// Regime of the week's news.
    pub bullish: bool,
    /// Index change over the week, driven by the news `lead_weeks` earlier.
    pub pct_change: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCorpus {
    pub records: Vec<NewsRecord>,
    pub prices: PriceSeries,
    pub truth: Vec<WeekTruth>,
}

fn words(rng: &mut impl Rng, pool: &[&'static str], n: usize) -> Vec<&'static str> {
    (0..n).map(|_| *pool.choose(rng).expect("non-empty pool")).collect()
}

pub fn generate(config: &SynthConfig) -> Result<SyntheticCorpus> {
    config.validate()?;
    let mut rng = util::rng(config.seed, 0x5EC7);
    let pos = &POSITIVE_WORDS[..config.polar_words];
    let neg = &NEGATIVE_WORDS[..config.polar_words];

    // Calendar: one base week, then `weeks` anchor weeks.
    let mondays: Vec<NaiveDate> =
        (0..=config.weeks as u64).map(|i| config.start - Days::new(7) + Days::new(7 * i)).collect();
    let anchors: Vec<NaiveDate> = mondays
        .iter()
        .enumerate()
        .map(|(i, m)| if i > 0 && rng.gen_bool(config.holiday_rate) { *m + Days::new(1) } else { *m })
        .collect();

    // Regimes for `lead_weeks` weeks before the first anchor drive the
    // first changes.
    let mut bullish = rng.gen_bool(0.5);
    let mut regimes = Vec::with_capacity(config.weeks + config.lead_weeks);
    for i in 0..config.weeks + config.lead_weeks {
        if i > 0 && rng.gen_bool(config.switch_prob) {
            bullish = !bullish;
        }
        regimes.push(bullish);
    }
    let noise = (1.0 - config.rho * config.rho).sqrt();
    let truth: Vec<WeekTruth> = anchors[1..]
        .iter()
        .enumerate()
        .map(|(i, &anchor)| {
            let r = if regimes[i] { 1.0 } else { -1.0 };
            let e: f64 = rng.sample(StandardNormal);
            WeekTruth {
                anchor,
                bullish: regimes[i + config.lead_weeks],
                pct_change: config.change_scale * (config.rho * r + noise * e),
            }
        })
        .collect();

    // Prices: exact closes on anchors, wandering closes in between.
    let mut points = Vec::new();
    let mut close = 1000.0;
    for (i, &anchor) in anchors.iter().enumerate() {
        points.push(PricePoint { date: anchor, close });
        let next = truth.get(i).map(|t| close * (1.0 + t.pct_change / 100.0));
        let week_end = mondays[i] + Days::new(4);
        let mut day = anchor + Days::new(1);
        while day <= week_end {
            let base = next.map_or(close, |n| close + (n - close) * (day - anchor).num_days() as f64 / 7.0);
            let jitter: f64 = rng.sample(StandardNormal);
            points.push(PricePoint { date: day, close: base * (1.0 + 0.002 * jitter) });
            day = day + Days::new(1);
        }
        if let Some(n) = next {
            close = n;
        }
    }
    let prices = PriceSeries::new(points)?;

    // News: week i's articles are published strictly between its previous
    // anchor and its anchor (Wednesday to Sunday of the preceding week).
    let mut records = Vec::with_capacity(config.weeks * config.articles_per_week);
    for (w, t) in truth.iter().enumerate() {
        let event = config.event_week.is_some_and(|e| w >= e) && !t.bullish;
        for j in 0..config.articles_per_week {
            let irrelevant = rng.gen_bool(config.irrelevant_fraction);
            let mut body = words(&mut rng, FILLER, config.filler_tokens);
            let mut title = words(&mut rng, FILLER, 5);
            if !irrelevant {
                let follows = rng.gen_bool(config.follow_prob);
                let polar = if t.bullish == follows { pos } else { neg };
                for _ in 0..config.polar_per_article {
                    let at = rng.gen_range(0..=body.len());
                    body.insert(at, *polar.choose(&mut rng).expect("non-empty"));
                }
                title.push(polar.choose(&mut rng).expect("non-empty"));
                if event {
                    let at = rng.gen_range(0..=body.len());
                    body.insert(at, &config.event_word);
                }
            }
            let tag = if irrelevant { IRRELEVANT_TAGS } else { RELEVANT_TAGS }.choose(&mut rng).expect("non-empty");
            let day = mondays[w] + Days::new(2 + rng.gen_range(0..5));
            let secs = rng.gen_range(0..86_400);
            let published = Utc
                .from_utc_datetime(&day.and_hms_opt(0, 0, 0).expect("midnight"))
                + chrono::Duration::seconds(secs);
            let id = format!("syn-{:04}-{:03}", w, j);
            title.push(&id);
            let mut content = body.join(" ");
            content.push('.');
            records.push(NewsRecord {
                url: format!("https://news.example.com/markets/{id}"),
                title: title.join(" "),
                content,
                published,
                categories: BTreeSet::from([tag.to_string()]),
                worthiness: None,
                id,
            });
        }
    }
    Ok(SyntheticCorpus { records, prices, truth })
}

pub fn write_truth_csv(path: &Path, truth: &[WeekTruth]) -> Result<()> {
    let mut w = csv::Writer::from_writer(util::create(path)?);
    w.write_record(["anchor", "regime", "pct_change"])?;
    for t in truth {
        w.write_record([
            t.anchor.to_string(),
            if t.bullish { "bullish" } else { "bearish" }.to_string(),
            t.pct_change.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(format!("cannot write {}", path.display()), e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calendar::{attach_news, monday_anchors, weekly_changes, WeekBoundary};
    use crate::corpus::{clean_filter, tokenize, FilterRules};

    fn small() -> SynthConfig {
        SynthConfig { weeks: 30, articles_per_week: 10, ..Default::default() }
    }

    #[test]
    fn same_seed_same_corpus() {
        let a = generate(&small()).unwrap();
        assert_eq!(a, generate(&small()).unwrap());
        assert_ne!(a.records, generate(&SynthConfig { seed: 8, ..small() }).unwrap().records);
    }

    #[test]
    fn calendar_recovers_planted_changes() {
        let c = generate(&small()).unwrap();
        let anchors = monday_anchors(&c.prices, c.prices.first_date().unwrap(), c.prices.last_date().unwrap());
        let mut weeks = weekly_changes(&c.prices, &anchors).unwrap();
        assert_eq!(weeks.len(), c.truth.len());
        for (w, t) in weeks.iter().zip(&c.truth) {
            assert_eq!(w.anchor, t.anchor);
            assert!((w.pct_change - t.pct_change).abs() < 1e-9);
        }
        assert_eq!(attach_news(&mut weeks, &c.records, WeekBoundary::Ending), 0);
        assert!(weeks.iter().all(|w| w.news_ids.len() == 10));
        assert!(weeks[3].news_ids.iter().all(|id| id.starts_with("syn-0003-")));
    }

    #[test]
    fn articles_survive_cleaning() {
        let c = generate(&small()).unwrap();
        let n = c.records.len();
        let (kept, stats) = clean_filter(c.records, &FilterRules::default());
        assert_eq!(kept.len(), n, "{stats:?}");
    }

    #[test]
    fn text_follows_the_regime() {
        let c = generate(&SynthConfig { weeks: 10, articles_per_week: 40, ..Default::default() }).unwrap();
        for (w, t) in c.truth.iter().enumerate() {
            let mut balance = 0i64;
            for r in &c.records[w * 40..(w + 1) * 40] {
                for tok in tokenize(r, 1000).tokens {
                    balance += POSITIVE_WORDS.contains(&tok.as_str()) as i64;
                    balance -= NEGATIVE_WORDS.contains(&tok.as_str()) as i64;
                }
            }
            assert_eq!(balance > 0, t.bullish, "week {w}");
        }
    }

    #[test]
    fn rho_controls_price_agreement() {
        let agree = |rho: f64, lead: usize| {
            let config = SynthConfig { weeks: 400, articles_per_week: 1, rho, lead_weeks: lead, ..Default::default() };
            let c = generate(&config).unwrap();
            let n = c.truth.len() - lead;
            (0..n).filter(|&i| (c.truth[i + lead].pct_change > 0.0) == c.truth[i].bullish).count() as f64 / n as f64
        };
        assert!(agree(0.9, 1) > 0.95);
        assert!(agree(0.9, 0) > 0.95);
        assert!((agree(0.0, 1) - 0.5).abs() < 0.1);
        assert_eq!(agree(1.0, 1), 1.0);
        assert_eq!(agree(1.0, 2), 1.0);
    }

    #[test]
    fn independent_weeks_do_not_predict_their_own_change() {
        let c = generate(&SynthConfig { weeks: 400, articles_per_week: 1, rho: 1.0, ..Default::default() }).unwrap();
        let same = c.truth.iter().filter(|t| (t.pct_change > 0.0) == t.bullish).count() as f64 / 400.0;
        assert!((same - 0.5).abs() < 0.1, "{same}");
    }

    #[test]
    fn event_word_marks_negative_weeks_only() {
        let config = SynthConfig {
            weeks: 60,
            articles_per_week: 5,
            switch_prob: 0.3,
            event_week: Some(20),
            ..Default::default()
        };
        let c = generate(&config).unwrap();
        for (w, t) in c.truth.iter().enumerate() {
            let has = c.records[w * 5..(w + 1) * 5].iter().any(|r| r.content.contains("coronavirus"));
            if has {
                assert!(w >= 20 && !t.bullish);
            }
        }
        assert!(c.records.iter().any(|r| r.content.contains("coronavirus")));
    }

    #[test]
    fn bad_configs_are_rejected() {
        for config in [
            SynthConfig { weeks: 1, ..Default::default() },
            SynthConfig { weeks: 3, lead_weeks: 3, ..Default::default() },
            SynthConfig { rho: 1.5, ..Default::default() },
            SynthConfig { start: NaiveDate::from_ymd_opt(2015, 1, 6).unwrap(), ..Default::default() },
            SynthConfig { polar_words: 99, ..Default::default() },
        ] {
            assert_eq!(generate(&config).unwrap_err().exit_code(), 1);
        }
    }
}
