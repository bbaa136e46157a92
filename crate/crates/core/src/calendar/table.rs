use std::path::Path;

use chrono::NaiveDate;

use super::{TradingWeek, WeeklyLabel};
use crate::error::{Error, Result};
use crate::util;

const HEADER: [&str; 7] = [
    "anchor",
    "prev_anchor",
    "pct_change",
    "extractor_class",
    "pot_class",
    "summarizer_class",
    "n_news",
];

/// Writes the week table. An unlabeled summarizer class is written empty.
pub fn write_weeks_csv(path: &Path, weeks: &[TradingWeek], labels: &[WeeklyLabel]) -> Result<()> {
    if weeks.len() != labels.len() {
        return Err(Error::Shape(format!("{} weeks but {} labels", weeks.len(), labels.len())));
    }
    let mut w = csv::Writer::from_writer(util::create(path)?);
    w.write_record(HEADER)?;
    for (week, label) in weeks.iter().zip(labels) {
        w.write_record([
            week.anchor.to_string(),
            week.prev_anchor.to_string(),
            week.pct_change.to_string(),
            label.extractor.to_string(),
            label.pot.to_string(),
            label.summarizer.map(|t| t.to_string()).unwrap_or_default(),
            week.news_ids.len().to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(format!("cannot write {}", path.display()), e))
}

/// Reads back anchors and percent changes; `news_ids` come back empty.
pub fn read_weeks_csv(path: &Path) -> Result<Vec<TradingWeek>> {
    let mut reader = csv::Reader::from_reader(util::open(path)?);
    let mut weeks = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row?;
        let field = |k: usize| row.get(k).unwrap_or("");
        let date = |k: usize| {
            NaiveDate::parse_from_str(field(k), "%Y-%m-%d")
                .map_err(|e| Error::data(format!("{} row {}: {e}", path.display(), i + 2)))
        };
        weeks.push(TradingWeek {
            anchor: date(0)?,
            prev_anchor: date(1)?,
            pct_change: field(2)
                .parse()
                .map_err(|e| Error::data(format!("{} row {}: {e}", path.display(), i + 2)))?,
            news_ids: Vec::new(),
        });
    }
    Ok(weeks)
}
