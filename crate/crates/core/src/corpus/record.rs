use std::collections::BTreeSet;
use std::io::{BufRead, Write};
use std::path::Path;

use chrono::{DateTime, NaiveDate, NaiveDateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::util;

const TIMESTAMP_FORMAT: &str = "%Y-%m-%dT%H:%M:%SZ";

/// One news article.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NewsRecord {
    pub id: String,
    pub url: String,
    pub title: String,
    pub content: String,
    pub published: DateTime<Utc>,
    pub categories: BTreeSet<String>,
    /// `Some(true)` market-relevant, `Some(false)` irrelevant, `None` unknown.
    pub worthiness: Option<bool>,
}

impl NewsRecord {
    pub fn published_date(&self) -> NaiveDate {
        self.published.date_naive()
    }

    pub fn has_category(&self, tag: &str) -> bool {
        self.categories.contains(tag)
    }
}

/// Wire shape of one JSONL line.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRecord {
    id: String,
    url: String,
    title: String,
    content: String,
    published: String,
    #[serde(default)]
    categories: Vec<String>,
    #[serde(default)]
    worthiness: Option<i64>,
}

pub fn parse_timestamp(s: &str) -> Result<DateTime<Utc>> {
    NaiveDateTime::parse_from_str(s, TIMESTAMP_FORMAT)
        .map(|naive| naive.and_utc())
        .map_err(|e| Error::data(format!("invalid timestamp {s:?}: {e}")))
}

pub fn format_timestamp(ts: &DateTime<Utc>) -> String {
    ts.format(TIMESTAMP_FORMAT).to_string()
}

impl TryFrom<RawRecord> for NewsRecord {
    type Error = Error;

    fn try_from(raw: RawRecord) -> Result<Self> {
        if raw.id.is_empty() {
            return Err(Error::data("empty id"));
        }
        let worthiness = match raw.worthiness {
            None => None,
            Some(0) => Some(false),
            Some(1) => Some(true),
            Some(other) => return Err(Error::data(format!("worthiness must be 0, 1 or null, got {other}"))),
        };
        Ok(NewsRecord {
            id: raw.id,
            url: raw.url,
            title: raw.title,
            content: raw.content,
            published: parse_timestamp(&raw.published)?,
            categories: raw.categories.into_iter().collect(),
            worthiness,
        })
    }
}

impl From<&NewsRecord> for RawRecord {
    fn from(r: &NewsRecord) -> Self {
        RawRecord {
            id: r.id.clone(),
            url: r.url.clone(),
            title: r.title.clone(),
            content: r.content.clone(),
            published: format_timestamp(&r.published),
            categories: r.categories.iter().cloned().collect(),
            worthiness: r.worthiness.map(i64::from),
        }
    }
}

pub fn parse_record_line(line: &str) -> Result<NewsRecord> {
    let raw: RawRecord = serde_json::from_str(line).map_err(|e| Error::data(format!("malformed JSON: {e}")))?;
    NewsRecord::try_from(raw)
}

pub fn record_to_json(record: &NewsRecord) -> String {
    serde_json::to_string(&RawRecord::from(record)).expect("record serialization is infallible")
}

/// A line that could not be turned into a [`NewsRecord`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rejection {
    /// 1-based line number in the source file.
    pub line_number: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct Ingested {
    pub records: Vec<NewsRecord>,
    pub rejected: Vec<Rejection>,
    /// Non-blank lines seen.
    pub total: usize,
}

impl Ingested {
    pub fn parsed(&self) -> usize {
        self.records.len()
    }
}

/// Reads a news JSONL file. Malformed lines are skipped and reported in
/// [`Ingested::rejected`]; blank lines are ignored and not counted.
pub fn ingest_news(path: &Path) -> Result<Ingested> {
    let reader = util::open(path)?;
    let mut out = Ingested::default();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(format!("cannot read {}", path.display()), e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.total += 1;
        match parse_record_line(&line) {
            Ok(record) => out.records.push(record),
            Err(err) => out.rejected.push(Rejection {
                line_number: idx + 1,
                reason: err.to_string(),
            }),
        }
    }
    Ok(out)
}

pub fn write_news_jsonl(path: &Path, records: &[NewsRecord]) -> Result<()> {
    let mut out = util::create(path)?;
    for record in records {
        writeln!(out, "{}", record_to_json(record))
            .map_err(|e| Error::io(format!("cannot write {}", path.display()), e))?;
    }
    out.flush()
        .map_err(|e| Error::io(format!("cannot write {}", path.display()), e))
}

pub fn write_rejections_csv(path: &Path, rejected: &[Rejection]) -> Result<()> {
    let mut writer = csv::Writer::from_writer(util::create(path)?);
    writer.write_record(["line_number", "reason"])?;
    for r in rejected {
        writer.write_record([r.line_number.to_string(), r.reason.clone()])?;
    }
    writer
        .flush()
        .map_err(|e| Error::io(format!("cannot write {}", path.display()), e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(id: &str) -> String {
        format!(
            r#"{{"id":"{id}","url":"https://x/{id}","title":"T","content":"C","published":"2019-03-04T10:00:00Z","categories":["region:us"],"worthiness":null}}"#
        )
    }

    #[test]
    fn empty_file_ingests_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("news.jsonl");
        std::fs::write(&path, "").unwrap();
        let got = ingest_news(&path).unwrap();
        assert!(got.records.is_empty());
        assert!(got.rejected.is_empty());
        assert_eq!(got.total, 0);
    }

    #[test]
    fn malformed_line_is_counted_not_dropped() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("news.jsonl");
        std::fs::write(&path, format!("{}\n{{not json\n{}\n", line("a"), line("b"))).unwrap();
        let got = ingest_news(&path).unwrap();
        assert_eq!(got.parsed(), 2);
        assert_eq!(got.rejected.len(), 1);
        assert_eq!(got.rejected[0].line_number, 2);
        assert_eq!(got.total, 3);
        assert_eq!(got.records[0].id, "a");
        assert_eq!(got.records[1].id, "b");
    }

    #[test]
    fn unreadable_file_is_fatal() {
        let err = ingest_news(Path::new("/nonexistent/news.jsonl")).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }

    #[test]
    fn worthiness_outside_zero_one_is_rejected() {
        let bad = line("a").replace("\"worthiness\":null", "\"worthiness\":2");
        assert!(parse_record_line(&bad).is_err());
        let ok = line("a").replace("\"worthiness\":null", "\"worthiness\":1");
        assert_eq!(parse_record_line(&ok).unwrap().worthiness, Some(true));
    }

    #[test]
    fn bad_timestamp_is_rejected() {
        let bad = line("a").replace("2019-03-04T10:00:00Z", "2019-02-30T10:00:00Z");
        assert!(parse_record_line(&bad).is_err());
        let bad = line("a").replace("2019-03-04T10:00:00Z", "2019-03-04 10:00");
        assert!(parse_record_line(&bad).is_err());
    }
}
