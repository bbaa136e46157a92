use chrono::{Datelike, Days, NaiveDate, Weekday};
use serde::{Deserialize, Serialize};

use super::PriceSeries;
use crate::corpus::NewsRecord;
use crate::error::{Error, Result};

/// One Monday-to-Monday interval.
#[derive(Debug, Clone, PartialEq)]
pub struct TradingWeek {
    pub anchor: NaiveDate,
    pub prev_anchor: NaiveDate,
    /// `100 * (close[anchor] - close[prev]) / close[prev]`.
    pub pct_change: f64,
    pub news_ids: Vec<String>,
}

/// Which week owns news published on an anchor date.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeekBoundary {
    /// `(prev_anchor, anchor]`: anchor-day news belongs to the week ending there.
    #[default]
    Ending,
    /// `[prev_anchor, anchor)`: anchor-day news belongs to the week starting there.
    Starting,
}

fn monday_of(date: NaiveDate) -> NaiveDate {
    date - Days::new(date.weekday().num_days_from_monday() as u64)
}

/// First trading day of the calendar week that starts on `monday`, looking at
/// weekdays from `start_offset` (0 = Monday) through Friday.
pub(crate) fn first_trading_day(prices: &PriceSeries, monday: NaiveDate, start_offset: u64) -> Option<NaiveDate> {
    (start_offset..5)
        .map(|d| monday + Days::new(d))
        .find(|d| prices.is_trading_day(*d))
}

/// One anchor per calendar Monday in `[from, to]`: the Monday itself if it
/// trades, otherwise the next trading day of the same week.
pub fn monday_anchors(prices: &PriceSeries, from: NaiveDate, to: NaiveDate) -> Vec<NaiveDate> {
    let mut monday = monday_of(from);
    if monday < from {
        monday = monday + Days::new(7);
    }
    let mut anchors = Vec::new();
    while monday <= to {
        if let Some(day) = first_trading_day(prices, monday, 0) {
            anchors.push(day);
        }
        monday = monday + Days::new(7);
    }
    anchors
}

/// Percent changes between consecutive anchors; yields `anchors.len() - 1`
/// weeks.
pub fn weekly_changes(prices: &PriceSeries, anchors: &[NaiveDate]) -> Result<Vec<TradingWeek>> {
    if anchors.len() < 2 {
        return Err(Error::data(format!("need at least 2 anchors, got {}", anchors.len())));
    }
    let close = |d: NaiveDate| {
        prices
            .close_on(d)
            .ok_or_else(|| Error::data(format!("no close price on anchor {d}")))
    };
    anchors
        .windows(2)
        .map(|pair| {
            let (prev, cur) = (pair[0], pair[1]);
            if cur <= prev {
                return Err(Error::data(format!("anchors out of order: {prev} then {cur}")));
            }
            let (c0, c1) = (close(prev)?, close(cur)?);
            Ok(TradingWeek {
                anchor: cur,
                prev_anchor: prev,
                pct_change: 100.0 * (c1 - c0) / c0,
                news_ids: Vec::new(),
            })
        })
        .collect()
}

/// Index of the week owning `date`, if any. `weeks` must be sorted and
/// contiguous.
pub fn week_index_for(weeks: &[TradingWeek], date: NaiveDate, boundary: WeekBoundary) -> Option<usize> {
    let idx = match boundary {
        WeekBoundary::Ending => weeks.partition_point(|w| w.anchor < date),
        WeekBoundary::Starting => weeks.partition_point(|w| w.anchor <= date),
    };
    let week = weeks.get(idx)?;
    let inside = match boundary {
        WeekBoundary::Ending => week.prev_anchor < date && date <= week.anchor,
        WeekBoundary::Starting => week.prev_anchor <= date && date < week.anchor,
    };
    inside.then_some(idx)
}

/// Fills each week's `news_ids` by publication date (UTC). Returns the
/// number of records that fall outside every week.
pub fn attach_news(weeks: &mut [TradingWeek], records: &[NewsRecord], boundary: WeekBoundary) -> usize {
    let mut unassigned = 0;
    for week in weeks.iter_mut() {
        week.news_ids.clear();
    }
    for record in records {
        match week_index_for(weeks, record.published_date(), boundary) {
            Some(i) => weeks[i].news_ids.push(record.id.clone()),
            None => unassigned += 1,
        }
    }
    unassigned
}

pub(crate) fn weekday_offset(day: Weekday) -> u64 {
    day.num_days_from_monday() as u64
}

pub(crate) fn mondays_between(first: NaiveDate, last: NaiveDate) -> impl Iterator<Item = NaiveDate> {
    let start = monday_of(first);
    (0..)
        .map(move |k| start + Days::new(7 * k))
        .take_while(move |m| *m <= last)
}
