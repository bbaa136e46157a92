use std::io::Write;
use std::path::Path;

use chrono::NaiveDate;

use crate::error::{Error, Result};
use crate::util;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PricePoint {
    pub date: NaiveDate,
    pub close: f64,
}

/// Daily closes with strictly increasing dates and positive prices.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries {
    entries: Vec<PricePoint>,
}

impl PriceSeries {
    pub fn new(entries: Vec<PricePoint>) -> Result<Self> {
        for (i, p) in entries.iter().enumerate() {
            if !(p.close.is_finite() && p.close > 0.0) {
                return Err(Error::data(format!("entry {}: close {} is not a positive price", i + 1, p.close)));
            }
            if i > 0 && entries[i - 1].date >= p.date {
                return Err(Error::data(format!(
                    "entry {}: date {} does not follow {}",
                    i + 1,
                    p.date,
                    entries[i - 1].date
                )));
            }
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[PricePoint] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn first_date(&self) -> Option<NaiveDate> {
        self.entries.first().map(|p| p.date)
    }

    pub fn last_date(&self) -> Option<NaiveDate> {
        self.entries.last().map(|p| p.date)
    }

    pub fn close_on(&self, date: NaiveDate) -> Option<f64> {
        self.entries
            .binary_search_by(|p| p.date.cmp(&date))
            .ok()
            .map(|i| self.entries[i].close)
    }

    pub fn is_trading_day(&self, date: NaiveDate) -> bool {
        self.close_on(date).is_some()
    }

    /// Every close multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(
            self.entries
                .iter()
                .map(|p| PricePoint { date: p.date, close: p.close * factor })
                .collect(),
        )
    }
}

/// Reads a `date,close` CSV. Row numbers in errors count the header as row 1.
pub fn load_prices(path: &Path) -> Result<PriceSeries> {
    let mut reader = csv::Reader::from_reader(util::open(path)?);
    let headers = reader.headers()?.clone();
    if headers.len() < 2 || &headers[0] != "date" || &headers[1] != "close" {
        return Err(Error::data(format!(
            "{}: expected header `date,close`, found `{}`",
            path.display(),
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut entries: Vec<PricePoint> = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row_no = i + 2;
        let row = row?;
        let date = NaiveDate::parse_from_str(row.get(0).unwrap_or(""), "%Y-%m-%d")
            .map_err(|e| Error::data(format!("{} row {row_no}: bad date: {e}", path.display())))?;
        let close: f64 = row
            .get(1)
            .unwrap_or("")
            .trim()
            .parse()
            .map_err(|e| Error::data(format!("{} row {row_no}: bad close: {e}", path.display())))?;
        if !(close.is_finite() && close > 0.0) {
            return Err(Error::data(format!("{} row {row_no}: close {close} is not positive", path.display())));
        }
        if let Some(prev) = entries.last() {
            if prev.date >= date {
                return Err(Error::data(format!(
                    "{} row {row_no}: date {date} is not after {}",
                    path.display(),
                    prev.date
                )));
            }
        }
        entries.push(PricePoint { date, close });
    }
    PriceSeries::new(entries)
}

pub fn write_prices_csv(path: &Path, prices: &PriceSeries) -> Result<()> {
    let mut out = util::create(path)?;
    let io = |e| Error::io(format!("cannot write {}", path.display()), e);
    writeln!(out, "date,close").map_err(io)?;
    for p in prices.entries() {
        writeln!(out, "{},{}", p.date.format("%Y-%m-%d"), p.close).map_err(io)?;
    }
    out.flush().map_err(io)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(content: &str) -> (tempfile::TempDir, std::path::PathBuf) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("prices.csv");
        std::fs::write(&path, content).unwrap();
        (dir, path)
    }

    #[test]
    fn two_rows() {
        let (_d, p) = write("date,close\n2020-01-06,3246.28\n2020-01-07,3237.18\n");
        let s = load_prices(&p).unwrap();
        assert_eq!(s.len(), 2);
        assert!(s.entries()[0].date < s.entries()[1].date);
    }

    #[test]
    fn duplicate_date_is_fatal() {
        let (_d, p) = write("date,close\n2020-01-06,1\n2020-01-06,2\n");
        let err = load_prices(&p).unwrap_err().to_string();
        assert!(err.contains("row 3"), "{err}");
    }

    #[test]
    fn non_positive_close_is_fatal() {
        let (_d, p) = write("date,close\n2020-01-06,0\n");
        assert!(load_prices(&p).unwrap_err().to_string().contains("row 2"));
    }

    #[test]
    fn wrong_header() {
        let (_d, p) = write("Date,Close\n2020-01-06,1\n");
        assert!(load_prices(&p).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let (dir, p) = write("date,close\n2020-01-06,3246.28\n2020-01-07,3237.18\n");
        let s = load_prices(&p).unwrap();
        let out = dir.path().join("out.csv");
        write_prices_csv(&out, &s).unwrap();
        assert_eq!(load_prices(&out).unwrap(), s);
    }
}
