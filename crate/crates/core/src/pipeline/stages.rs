use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::Deserialize;
use serde_json::json;

use super::*;
use crate::calendar::{
    attach_news, autocorrelation_table, label_weeks, load_prices, monday_anchors, read_weeks_csv, weekly_changes,
    write_prices_csv, write_weeks_csv, ExtractorClass, PotClass, TradingWeek, Trend, WeeklyLabel,
};
use crate::corpus::{
    assign_worthiness_proxy, build_vocabulary, clean_filter, ingest_news, tokenize, write_news_jsonl,
    write_rejections_csv, NewsRecord, TokenizedDoc, Vocabulary,
};
use crate::extractor::{
    load_extractor, save_extractor, split_dev_weeks_by_label, train_extractor, write_training_log, ExtractorArtifact,
    TrainingExample,
};
use crate::lexicon::{
    model_path, pot_matrix, pot_models, pot_trajectory, read_pot_cache, tfidf_difference_ranking,
    write_pot_cache, write_trajectory_csv, ClassCorpus, PotHistory, PotMatrix, WeekTerms,
};
use crate::metrics::{report, WeekOutcome};
use crate::summarizer::{
    build_summarizer_dataset, chronological_split, load_summarizer, predict_week, read_weekly_rows,
    save_summarizer, train_summarizer, write_weekly_rows, write_weekly_sentiment_csv, ArticleScore, ArticleScorer,
    ExtractorScorer,
};
use crate::synth::{generate, write_truth_csv, SynthConfig};

const AUTOCORR_LAGS: [usize; 5] = [1, 5, 10, 20, 40];
const DEFAULT_PLOT_WORDS: usize = 5;

/// POT score series of one word over a date range.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRequest {
    pub word: String,
    pub from: NaiveDate,
    pub to: NaiveDate,
}

struct Loaded {
    records: Vec<NewsRecord>,
    docs: HashMap<String, TokenizedDoc>,
    weeks: Vec<TradingWeek>,
    labels: Vec<WeeklyLabel>,
}

/// One scored week: anchor, record ids and their scores.
type ScoredWeek = (NaiveDate, Vec<String>, Vec<ArticleScore>);

/// Records every scored week so article scores can be written out.
struct Recording<'a> {
    inner: &'a dyn ArticleScorer,
    log: Mutex<Vec<ScoredWeek>>,
}

impl ArticleScorer for Recording<'_> {
    fn score_week(&self, anchor: NaiveDate, docs: &[&TokenizedDoc]) -> Result<Vec<ArticleScore>> {
        let scores = self.inner.score_week(anchor, docs)?;
        let ids = docs.iter().map(|d| d.record_id.clone()).collect();
        self.log.lock().expect("score log").push((anchor, ids, scores.clone()));
        Ok(scores)
    }
}

#[derive(Deserialize)]
struct ArticleRow {
    label_pct: Option<f64>,
    sentiment: f64,
}

fn file_name_word(word: &str) -> String {
    word.chars().map(|c| if c.is_alphanumeric() { c } else { '_' }).collect()
}

fn reset_dir(dir: &Path) -> Result<()> {
    if dir.exists() {
        std::fs::remove_dir_all(dir).map_err(|e| Error::io(format!("cannot clear {}", dir.display()), e))?;
    }
    std::fs::create_dir_all(dir).map_err(|e| Error::io(format!("cannot create {}", dir.display()), e))
}

fn flush<W: std::io::Write>(w: &mut csv::Writer<W>, path: &Path) -> Result<()> {
    w.flush().map_err(|e| Error::io(format!("cannot write {}", path.display()), e))
}

impl Pipeline {
    fn load_records(&self) -> Result<Vec<NewsRecord>> {
        let path = self.path(NEWS);
        let ingested = ingest_news(&path)?;
        if let Some(r) = ingested.rejected.first() {
            return Err(Error::data(format!("{}:{}: {}", path.display(), r.line_number, r.reason)));
        }
        Ok(ingested.records)
    }

    fn load(&self) -> Result<Loaded> {
        let c = &self.config;
        let records = self.load_records()?;
        let docs = records
            .par_iter()
            .map(|r| (r.id.clone(), tokenize(r, c.corpus.max_tokens)))
            .collect();
        let mut weeks = read_weeks_csv(&self.path(WEEKS))?;
        attach_news(&mut weeks, &records, c.calendar.boundary);
        let labels = label_weeks(&weeks, &c.calendar.labels, &c.calendar.policy)?;
        Ok(Loaded { records, docs, weeks, labels })
    }

    /// Weeks that train the extractor, with their sentiment label, and the
    /// number of labeled weeks skipped for lack of POT history.
    fn extractor_weeks(&self, labels: &[WeeklyLabel]) -> (BTreeMap<NaiveDate, bool>, usize) {
        let offset = self.config.calendar.extractor_offset;
        let first = self.config.pot.lags - 1;
        let mut weeks = BTreeMap::new();
        let mut skipped = 0;
        for (i, week) in labels.iter().enumerate() {
            let class = match labels.get(i + offset).map(|l| l.extractor) {
                Some(ExtractorClass::Positive) => true,
                Some(ExtractorClass::Negative) => false,
                _ => continue,
            };
            if i < first {
                skipped += 1;
            } else {
                weeks.insert(week.anchor, class);
            }
        }
        (weeks, skipped)
    }

    fn read_vocab(&self) -> Result<Vocabulary> {
        let words = util::read_to_string(&self.path(POT_VOCAB))?
            .lines()
            .filter(|l| !l.is_empty())
            .map(str::to_string)
            .collect();
        Vocabulary::new(words)
    }

    fn history(&self, weeks: &[TradingWeek]) -> Result<PotHistory> {
        let anchors: Vec<NaiveDate> = weeks.iter().map(|w| w.anchor).collect();
        let models = read_pot_cache(&self.path(POT_DIR), &anchors)?;
        Ok(PotHistory::new(anchors, models))
    }

    fn read_extractor_weeks(&self) -> Result<BTreeSet<NaiveDate>> {
        let path = self.path(EXTRACTOR_WEEKS);
        let mut reader = csv::Reader::from_reader(util::open(&path)?);
        let mut out = BTreeSet::new();
        for row in reader.records() {
            let row = row?;
            let anchor = row
                .get(0)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::data(format!("{}: bad anchor", path.display())))?;
            out.insert(anchor);
        }
        Ok(out)
    }

    pub fn ingest(&self) -> Result<String> {
        let c = &self.config;
        let src = &c.paths.news;
        if !src.exists() {
            return Err(Error::data(format!("news file {} not found", src.display())));
        }
        let ingested = ingest_news(src)?;
        for r in &ingested.rejected {
            log::debug!("{}:{}: {}", src.display(), r.line_number, r.reason);
        }
        if !ingested.rejected.is_empty() {
            log::warn!("{} malformed news lines skipped (see {REJECTIONS})", ingested.rejected.len());
        }
        let (total, parsed) = (ingested.total, ingested.parsed());
        let (mut kept, filter) = clean_filter(ingested.records, &c.corpus.filter);
        let proxy = assign_worthiness_proxy(&mut kept, &c.corpus.proxy)?;
        write_news_jsonl(&self.path(NEWS), &kept)?;
        write_rejections_csv(&self.path(REJECTIONS), &ingested.rejected)?;

        let labeled = kept.iter().filter(|r| r.worthiness.is_some()).count();
        let mut m = self.manifest("ingest");
        self.record_source(&mut m, src)?;
        m.stats = json!({
            "lines": total,
            "parsed": parsed,
            "rejected": ingested.rejected.len(),
            "too_short": filter.too_short,
            "too_long": filter.too_long,
            "blocked_url": filter.blocked_url,
            "duplicate": filter.duplicate,
            "kept": kept.len(),
            "manual_labels": proxy.manual,
            "proxy_labels": proxy.per_rule.iter().cloned().collect::<BTreeMap<_, _>>(),
            "unlabeled": kept.len() - labeled,
        });
        self.finish(m, &[NEWS.into(), REJECTIONS.into()])?;
        Ok(format!(
            "ingest: {parsed} of {total} lines parsed, {} kept after cleaning, {labeled} with a worthiness label",
            kept.len()
        ))
    }

    pub fn label(&self) -> Result<String> {
        let c = &self.config;
        let mut m = self.manifest("label");
        self.upstreams(&mut m, &["ingest"])?;
        let src = &c.paths.prices;
        if !src.exists() {
            return Err(Error::data(format!("price file {} not found", src.display())));
        }
        let prices = load_prices(src)?;
        let (Some(first), Some(last)) = (prices.first_date(), prices.last_date()) else {
            return Err(Error::data(format!("{} has no prices", src.display())));
        };
        let anchors = monday_anchors(&prices, c.calendar.from.unwrap_or(first), c.calendar.to.unwrap_or(last));
        let mut weeks = weekly_changes(&prices, &anchors)?;
        let records = self.load_records()?;
        let unassigned = attach_news(&mut weeks, &records, c.calendar.boundary);
        let labels = label_weeks(&weeks, &c.calendar.labels, &c.calendar.policy)?;
        write_weeks_csv(&self.path(WEEKS), &weeks, &labels)?;
        let mut outputs = vec![WEEKS.to_string()];

        let acf_path = self.path(AUTOCORRELATION);
        let acf_note = match autocorrelation_table(&prices, &AUTOCORR_LAGS) {
            Ok(table) => {
                let mut w = csv::Writer::from_writer(util::create(&acf_path)?);
                w.write_record(["lag", "mon", "tue", "wed", "thu", "fri"])?;
                for (lag, row) in AUTOCORR_LAGS.iter().zip(&table) {
                    let mut rec = vec![lag.to_string()];
                    rec.extend(row.iter().map(|v| v.to_string()));
                    w.write_record(&rec)?;
                }
                flush(&mut w, &acf_path)?;
                outputs.push(AUTOCORRELATION.to_string());
                "written".to_string()
            }
            Err(e) => {
                log::warn!("autocorrelation skipped: {e}");
                let _ = std::fs::remove_file(&acf_path);
                format!("skipped: {e}")
            }
        };

        let mut classes: BTreeMap<String, usize> = BTreeMap::new();
        for l in &labels {
            *classes.entry(l.summarizer.map_or("unlabeled".into(), |t| t.to_string())).or_default() += 1;
        }
        let count = |class| labels.iter().filter(|l| l.extractor == class).count();
        m.stats = json!({
            "weeks": weeks.len(),
            "first_anchor": weeks.first().map(|w| w.anchor),
            "last_anchor": weeks.last().map(|w| w.anchor),
            "news_outside_weeks": unassigned,
            "extractor_positive": count(ExtractorClass::Positive),
            "extractor_negative": count(ExtractorClass::Negative),
            "summarizer_classes": classes,
            "autocorrelation": acf_note,
        });
        self.record_source(&mut m, src)?;
        self.finish(m, &outputs)?;
        Ok(format!(
            "label: {} weeks, {} articles outside every week",
            weeks.len(),
            unassigned
        ))
    }

    pub fn pot(&self, trajectory: Option<&TrajectoryRequest>) -> Result<String> {
        let c = &self.config;
        let mut m = self.manifest("pot");
        self.upstreams(&mut m, &["ingest", "label"])?;
        let d = self.load()?;
        let terms: Vec<WeekTerms> = d
            .weeks
            .par_iter()
            .zip(&d.labels)
            .map(|(w, l)| WeekTerms::new(w.anchor, l.pot, w.news_ids.iter().map(|id| &d.docs[id])))
            .collect();

        let (ext, skipped) = self.extractor_weeks(&d.labels);
        let (mut pos, mut neg) = (Vec::new(), Vec::new());
        for w in d.weeks.iter().filter(|w| ext.contains_key(&w.anchor)) {
            let side = if ext[&w.anchor] { &mut pos } else { &mut neg };
            side.extend(w.news_ids.iter().map(|id| &d.docs[id]));
        }
        let universe: Vec<&TokenizedDoc> = pos.iter().chain(&neg).copied().collect();
        let ranking = tfidf_difference_ranking(
            &ClassCorpus::new(PotClass::Positive, pos.iter().copied()),
            &ClassCorpus::new(PotClass::Negative, neg.iter().copied()),
            &universe,
        )?;
        let vocab = build_vocabulary(&ranking, c.pot.vocab_size)?;
        let mut text = vocab.words().join("\n");
        text.push('\n');
        util::write_all(&self.path(POT_VOCAB), text.as_bytes())?;

        let models = pot_models(&terms, &c.pot.params(), Some(vocab.words()))?;
        let dir = self.path(POT_DIR);
        reset_dir(&dir)?;
        write_pot_cache(&dir, &models)?;
        let mut outputs = vec![POT_VOCAB.to_string()];
        outputs.extend(models.iter().map(|m| format!("{POT_DIR}/{}", model_path(Path::new(""), m.anchor).display())));

        let mut note = String::new();
        if let Some(t) = trajectory {
            let word = t.word.to_lowercase();
            let anchors: Vec<NaiveDate> = d.weeks.iter().map(|w| w.anchor).collect();
            let history = if vocab.get(&word).is_some() {
                PotHistory::new(anchors, models)
            } else {
                PotHistory::new(anchors, pot_models(&terms, &c.pot.params(), Some(std::slice::from_ref(&word)))?)
            };
            let series = pot_trajectory(&history, &word, t.from, t.to);
            if series.is_empty() {
                return Err(Error::data(format!("no weeks between {} and {}", t.from, t.to)));
            }
            let rel = format!("trajectory_{}.csv", file_name_word(&word));
            write_trajectory_csv(&self.path(&rel), &word, &series)?;
            note = format!(", trajectory of {word:?} over {} weeks in {rel}", series.len());
            outputs.push(rel);
        }

        m.stats = json!({
            "vocab_size": vocab.len(),
            "vocab_sha256": vocab.hash(),
            "weeks": terms.len(),
            "extractor_weeks": ext.len(),
            "extractor_weeks_without_history": skipped,
            "positive_docs": pos.len(),
            "negative_docs": neg.len(),
        });
        self.finish(m, &outputs)?;
        Ok(format!("pot: {} words from {} extractor weeks, {} week models{note}", vocab.len(), ext.len(), terms.len()))
    }

    pub fn train_extractor(&self) -> Result<String> {
        let c = &self.config;
        let cfg = &c.extractor;
        let lags = c.pot.lags;
        let mut m = self.manifest("train-extractor");
        self.upstreams(&mut m, &["ingest", "label", "pot"])?;
        let d = self.load()?;
        let vocab = self.read_vocab()?;
        let history = self.history(&d.weeks)?;
        let (ext, skipped) = self.extractor_weeks(&d.labels);
        if ext.is_empty() {
            return Err(Error::data("no weeks qualify for extractor training"));
        }
        if skipped > 0 {
            log::warn!("{skipped} extractor weeks skipped: fewer than {} earlier weeks of POT history", lags - 1);
        }
        let dev_weeks = split_dev_weeks_by_label(&ext, cfg.dev_fraction, cfg.seed);
        let worthiness: HashMap<&str, Option<bool>> = d.records.iter().map(|r| (r.id.as_str(), r.worthiness)).collect();

        let (mut train, mut dev) = (Vec::new(), Vec::new());
        for w in d.weeks.iter().filter(|w| ext.contains_key(&w.anchor)) {
            let pot = Arc::new(pot_matrix(&vocab, w.anchor, &history, lags)?);
            let target = if dev_weeks.contains(&w.anchor) { &mut dev } else { &mut train };
            target.extend(w.news_ids.iter().map(|id| TrainingExample {
                doc: d.docs[id].clone(),
                pot: Arc::clone(&pot),
                sentiment: ext[&w.anchor],
                worthiness: worthiness[id.as_str()],
            }));
        }
        let (n_train, n_dev) = (train.len(), dev.len());
        let outcome = train_extractor(&train, &dev, vocab.len(), lags, cfg)?;
        let best = outcome.log[outcome.best_epoch - 1].clone();
        write_training_log(&self.path(TRAINING_LOG), &outcome.log)?;
        save_extractor(
            &self.path(EXTRACTOR),
            &ExtractorArtifact { model: outcome.model, pot_vocab: vocab, config: cfg.clone() },
        )?;

        let weeks_path = self.path(EXTRACTOR_WEEKS);
        let mut w = csv::Writer::from_writer(util::create(&weeks_path)?);
        w.write_record(["anchor", "label", "split"])?;
        for (anchor, positive) in &ext {
            let split = if dev_weeks.contains(anchor) { "dev" } else { "train" };
            w.write_record([anchor.to_string().as_str(), if *positive { "positive" } else { "negative" }, split])?;
        }
        flush(&mut w, &weeks_path)?;

        self.record_inputs(&mut m, &[POT_VOCAB])?;
        m.stats = json!({
            "weeks_train": ext.len() - dev_weeks.len(),
            "weeks_dev": dev_weeks.len(),
            "weeks_without_history": skipped,
            "examples_train": n_train,
            "examples_dev": n_dev,
            "best_epoch": outcome.best_epoch,
            "best_train_loss": best.train_loss,
            "best_dev_acc_senti": best.dev_acc_senti,
            "best_dev_acc_worth": best.dev_acc_worth,
        });
        self.finish(m, &[EXTRACTOR.into(), TRAINING_LOG.into(), EXTRACTOR_WEEKS.into()])?;
        let dev_acc = best.dev_acc_senti.map_or("n/a".to_string(), |a| format!("{a:.4}"));
        Ok(format!(
            "train-extractor: {n_train} training and {n_dev} dev articles, best epoch {} (dev sentiment accuracy {dev_acc})",
            outcome.best_epoch
        ))
    }

    pub fn score(&self) -> Result<String> {
        let c = &self.config;
        let lags = c.pot.lags;
        let mut m = self.manifest("score");
        self.upstreams(&mut m, &["ingest", "label", "pot", "train-extractor"])?;
        let d = self.load()?;
        let artifact = load_extractor(&self.path(EXTRACTOR))?;
        let vocab = self.read_vocab()?;
        if artifact.pot_vocab.hash() != vocab.hash() || artifact.model.lags() != lags {
            return Err(Error::data(
                "the extractor was trained on a different POT vocabulary or lag count; rerun train-extractor",
            ));
        }
        let excluded = self.read_extractor_weeks()?;
        let history = self.history(&d.weeks)?;
        let start = (lags - 1).min(d.weeks.len());
        let scored = &d.weeks[start..];
        let pots = scored
            .par_iter()
            .filter(|w| !excluded.contains(&w.anchor))
            .map(|w| Ok((w.anchor, Arc::new(pot_matrix(&vocab, w.anchor, &history, lags)?))))
            .collect::<Result<BTreeMap<NaiveDate, Arc<PotMatrix>>>>()?;
        let scorer = ExtractorScorer { model: &artifact.model, pots: &pots };
        let recording = Recording { inner: &scorer, log: Mutex::new(Vec::new()) };
        let dataset = build_summarizer_dataset(
            scored,
            &c.calendar.policy,
            &excluded,
            &d.docs,
            &recording,
            &c.summarizer.dataset(),
        )?;
        write_weekly_rows(&self.path(WEEKLY_SCORES), &dataset.rows)?;

        // Change of the week that labels each news week for the extractor.
        let offset = c.calendar.extractor_offset;
        let label_pct: HashMap<NaiveDate, Option<f64>> = d
            .weeks
            .iter()
            .enumerate()
            .map(|(i, w)| (w.anchor, d.weeks.get(i + offset).map(|t| t.pct_change)))
            .collect();
        let mut log = recording.log.into_inner().expect("score log");
        log.sort_by_key(|(anchor, ..)| *anchor);
        let path = self.path(ARTICLE_SCORES);
        let mut w = csv::Writer::from_writer(util::create(&path)?);
        w.write_record(["anchor", "record_id", "label_pct", "sentiment", "worthiness"])?;
        let mut n_articles = 0;
        for (anchor, ids, scores) in &log {
            for (id, s) in ids.iter().zip(scores) {
                w.write_record([
                    anchor.to_string(),
                    id.clone(),
                    label_pct[anchor].map(|p| p.to_string()).unwrap_or_default(),
                    s.sentiment.to_string(),
                    s.worthiness.to_string(),
                ])?;
                n_articles += 1;
            }
        }
        flush(&mut w, &path)?;

        let labeled = dataset.rows.iter().filter(|r| r.label.is_some()).count();
        m.stats = json!({
            "weeks_scored": dataset.rows.len(),
            "weeks_labeled": labeled,
            "weeks_without_history": start,
            "weeks_excluded": dataset.excluded.len(),
            "weeks_empty": dataset.empty.len(),
            "articles_scored": n_articles,
        });
        self.finish(m, &[WEEKLY_SCORES.into(), ARTICLE_SCORES.into()])?;
        Ok(format!(
            "score: {} weeks scored ({labeled} labeled), {} extractor weeks excluded, {} empty",
            dataset.rows.len(),
            dataset.excluded.len(),
            dataset.empty.len()
        ))
    }

    pub fn train_summarizer(&self) -> Result<String> {
        let c = &self.config;
        let mut m = self.manifest("train-summarizer");
        self.upstreams(&mut m, &["label", "score"])?;
        let rows = read_weekly_rows(&self.path(WEEKLY_SCORES))?;
        let (train, test) = chronological_split(&rows, c.summarizer.train_weeks)?;
        let model = train_summarizer(&train, c.calendar.policy.classes(), &c.summarizer)?;
        save_summarizer(&self.path(SUMMARIZER), &model)?;
        m.stats = json!({
            "weeks_train": train.len(),
            "weeks_test": test.len(),
            "first_test_anchor": test[0].anchor,
        });
        self.finish(m, &[SUMMARIZER.into()])?;
        Ok(format!(
            "train-summarizer: {} training weeks, test from {}",
            train.len(),
            test[0].anchor
        ))
    }

    /// Per-article accuracy of the extractor on weeks it never trained on,
    /// against the sign of the change that would have labeled them.
    fn extractor_accuracy(&self) -> Result<(usize, Option<f64>)> {
        let path = self.path(ARTICLE_SCORES);
        let mut reader = csv::Reader::from_reader(util::open(&path)?);
        let (mut n, mut correct) = (0usize, 0usize);
        for row in reader.deserialize() {
            let row: ArticleRow = row?;
            let pct = match row.label_pct {
                Some(p) if p != 0.0 => p,
                _ => continue,
            };
            n += 1;
            if (row.sentiment > 0.5) == (pct > 0.0) {
                correct += 1;
            }
        }
        Ok((n, (n > 0).then(|| correct as f64 / n as f64)))
    }

    pub fn evaluate(&self) -> Result<String> {
        let c = &self.config;
        let policy = &c.calendar.policy;
        let mut m = self.manifest("evaluate");
        self.upstreams(&mut m, &["label", "score", "train-summarizer"])?;
        let rows = read_weekly_rows(&self.path(WEEKLY_SCORES))?;
        let model = load_summarizer(&self.path(SUMMARIZER))?;
        if model.classes != policy.classes() {
            return Err(Error::data("the summarizer was trained for other classes; rerun train-summarizer"));
        }
        let predicted: Vec<Trend> = rows.iter().map(|r| predict_week(&model, r)).collect();
        write_weekly_sentiment_csv(&self.path(WEEKLY_SENTIMENT), &rows, &predicted)?;

        let (_, test) = chronological_split(&rows, c.summarizer.train_weeks)?;
        let outcomes = test
            .iter()
            .map(|r| match (r.target, r.target_pct, r.label) {
                (Some(target), Some(pct), Some(truth)) => Ok(WeekOutcome {
                    anchor: r.anchor,
                    target,
                    sentiment: r.overall_score,
                    pct_change: pct,
                    truth,
                    predicted: predict_week(&model, r),
                }),
                _ => Err(Error::data(format!("week {} has no target", r.anchor))),
            })
            .collect::<Result<Vec<_>>>()?;
        let rep = report(outcomes, policy)?;
        rep.write_csv(&self.path(REPORT_CSV))?;
        let (n_articles, ext_acc) = self.extractor_accuracy()?;

        let mut text = rep.to_text();
        if !text.ends_with('\n') {
            text.push('\n');
        }
        text.push_str(&format!(
            "extractor accuracy on {n_articles} unseen articles: {}\n",
            ext_acc.map_or("undefined (no articles)".to_string(), |a| format!("{a:.4}"))
        ));
        util::write_all(&self.path(REPORT_TXT), text.as_bytes())?;

        let ok = |r: &std::result::Result<f64, crate::Undefined>| r.as_ref().ok().copied();
        let evaluation = json!({
            "policy": policy.describe(),
            "summarizer": {
                "weeks_test": rep.weeks.len(),
                "accuracy": ok(&rep.accuracy),
                "mcc": rep.mcc.as_ref().ok().map(|m| m.value),
                "mcc_degenerate": rep.mcc.as_ref().ok().map(|m| m.degenerate),
                "f1_up": ok(&rep.f1_up),
                "correlation": ok(&rep.correlation),
            },
            "extractor": { "articles": n_articles, "accuracy": ext_acc },
        });
        let mut bytes = serde_json::to_vec_pretty(&evaluation).expect("evaluation serializes");
        bytes.push(b'\n');
        util::write_all(&self.path(EVALUATION), &bytes)?;
        if let Some(u) = rep.undefined() {
            log::warn!("{u}");
        }

        self.record_inputs(&mut m, &[WEEKLY_SCORES, SUMMARIZER, ARTICLE_SCORES])?;
        m.stats = evaluation.clone();
        self.finish(m, &[WEEKLY_SENTIMENT.into(), REPORT_TXT.into(), REPORT_CSV.into(), EVALUATION.into()])?;
        let fmt = |v: Option<f64>| v.map_or("undefined".to_string(), |v| format!("{v:.4}"));
        Ok(format!(
            "evaluate: {} test weeks, accuracy {}, MCC {}; extractor accuracy {}",
            rep.weeks.len(),
            fmt(ok(&rep.accuracy)),
            fmt(rep.mcc.as_ref().ok().map(|m| m.value)),
            fmt(ext_acc)
        ))
    }

    /// Writes plot-ready CSVs from existing artifacts. `words` selects POT
    /// trajectories; empty means the top of the POT vocabulary.
    pub fn export_plot_data(&self, words: &[String]) -> Result<String> {
        let mut m = self.manifest("export-plot-data");
        self.upstreams(&mut m, &["label", "pot", "score", "evaluate"])?;
        let dir = self.path(PLOTS_DIR);
        reset_dir(&dir)?;
        let mut outputs = Vec::new();

        let rows = read_weekly_rows(&self.path(WEEKLY_SCORES))?;
        let mut predicted = HashMap::new();
        let mut reader = csv::Reader::from_reader(util::open(&self.path(WEEKLY_SENTIMENT))?);
        for row in reader.records() {
            let row = row?;
            predicted.insert(row[0].to_string(), row[4].to_string());
        }
        let rel = format!("{PLOTS_DIR}/weekly_overlay.csv");
        let path = self.path(&rel);
        let mut w = csv::Writer::from_writer(util::create(&path)?);
        w.write_record(["anchor", "target", "overall_score", "target_pct", "true_class", "predicted_class"])?;
        for r in &rows {
            let anchor = r.anchor.to_string();
            w.write_record([
                anchor.clone(),
                r.target.map(|t| t.to_string()).unwrap_or_default(),
                r.overall_score.to_string(),
                r.target_pct.map(|p| p.to_string()).unwrap_or_default(),
                r.label.map(|t| t.to_string()).unwrap_or_default(),
                predicted.get(&anchor).cloned().unwrap_or_default(),
            ])?;
        }
        flush(&mut w, &path)?;
        outputs.push(rel);

        let vocab = self.read_vocab()?;
        let chosen: Vec<String> = if words.is_empty() {
            vocab.words().iter().take(DEFAULT_PLOT_WORDS).cloned().collect()
        } else {
            words.iter().map(|w| w.to_lowercase()).collect()
        };
        if let Some(missing) = chosen.iter().find(|w| vocab.get(w).is_none()) {
            return Err(Error::data(format!(
                "{missing:?} is not in the POT vocabulary; use `pot --word {missing}` for words outside it"
            )));
        }
        let weeks = read_weeks_csv(&self.path(WEEKS))?;
        let history = self.history(&weeks)?;
        if let (Some(first), Some(last)) = (weeks.first(), weeks.last()) {
            for word in &chosen {
                let rel = format!("{PLOTS_DIR}/pot_{}.csv", file_name_word(word));
                write_trajectory_csv(&self.path(&rel), word, &pot_trajectory(&history, word, first.anchor, last.anchor))?;
                outputs.push(rel);
            }
        }
        self.record_inputs(&mut m, &[WEEKLY_SCORES, WEEKLY_SENTIMENT, POT_VOCAB])?;
        m.stats = json!({ "words": chosen });
        self.finish(m, &outputs)?;
        Ok(format!("export-plot-data: {} files in {}", outputs.len(), dir.display()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSummary {
    pub articles: usize,
    pub weeks: usize,
    /// Suggested pipeline configuration for the generated files.
    pub config_path: PathBuf,
}

/// Generates a synthetic corpus into `out`: `news.jsonl`, `prices.csv`,
/// `truth.csv` and a `pipeline.toml` sized for it.
pub fn write_synthetic(config: &SynthConfig, out: &Path) -> Result<SynthSummary> {
    let corpus = generate(config)?;
    std::fs::create_dir_all(out).map_err(|e| Error::io(format!("cannot create {}", out.display()), e))?;
    write_news_jsonl(&out.join("news.jsonl"), &corpus.records)?;
    write_prices_csv(&out.join("prices.csv"), &corpus.prices)?;
    write_truth_csv(&out.join("truth.csv"), &corpus.truth)?;

    let mut p = PipelineConfig::default();
    p.paths.news = out.join("news.jsonl");
    p.paths.prices = out.join("prices.csv");
    p.paths.workdir = out.join("work");
    p.calendar.extractor_offset = config.lead_weeks;
    p.summarizer.offset = config.lead_weeks;
    p.calendar.policy = crate::calendar::BinningPolicy::binary_asymmetric();
    p.pot.vocab_size = 64;
    p.extractor.encoder_vocab = 500;
    p.extractor.emb_dim = 32;
    p.extractor.enc_dim = 32;
    p.extractor.hidden = 64;
    // Week-level POT noise, scaled to unit variance, lets the extractor
    // memorize the few training weeks of a corpus this small.
    p.extractor.standardize_pot = false;
    let threshold = p.calendar.labels.extractor_threshold;
    let extractor_weeks = corpus.truth.iter().filter(|t| t.pct_change.abs() > threshold).count();
    let usable = corpus.truth.len().saturating_sub(extractor_weeks + p.pot.lags + 1);
    p.summarizer.train_weeks = (usable * 3 / 5).max(1);
    p.synth = config.clone();
    let config_path = out.join("pipeline.toml");
    util::write_all(&config_path, p.to_toml().as_bytes())?;
    Ok(SynthSummary { articles: corpus.records.len(), weeks: corpus.truth.len(), config_path })
}
