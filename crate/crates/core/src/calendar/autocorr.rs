use chrono::Weekday;

use super::weeks::{first_trading_day, mondays_between, weekday_offset};
use super::PriceSeries;
use crate::error::{Error, Result, Undefined};

/// Closes on `day` for every calendar week of the series; a holiday is
/// replaced by the next trading day of the same week, and weeks with none
/// are skipped.
pub fn weekday_series(prices: &PriceSeries, day: Weekday) -> Vec<f64> {
    let (Some(first), Some(last)) = (prices.first_date(), prices.last_date()) else {
        return Vec::new();
    };
    let offset = weekday_offset(day);
    if offset >= 5 {
        return Vec::new();
    }
    mondays_between(first, last)
        .filter_map(|monday| first_trading_day(prices, monday, offset))
        .filter_map(|date| prices.close_on(date))
        .collect()
}

/// Sample autocorrelation with the global mean:
/// `sum (x_t - m)(x_{t+k} - m) / sum (x_t - m)^2`.
pub fn acf(series: &[f64], lag: usize) -> Result<f64, Undefined> {
    let n = series.len();
    if n == 0 {
        return Err(Undefined::new("autocorrelation", "empty series"));
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let denom: f64 = series.iter().map(|x| (x - mean).powi(2)).sum();
    if denom == 0.0 {
        return Err(Undefined::new("autocorrelation", "constant series"));
    }
    if lag >= n {
        return Ok(0.0);
    }
    let num: f64 = series
        .iter()
        .zip(&series[lag..])
        .map(|(a, b)| (a - mean) * (b - mean))
        .sum();
    Ok(num / denom)
}

/// Autocorrelation of the `day` close series at `lag` weeks.
pub fn autocorrelation(prices: &PriceSeries, day: Weekday, lag: usize) -> Result<f64> {
    let series = weekday_series(prices, day);
    if series.len() <= lag + 1 {
        return Err(Error::data(format!(
            "{day} series has {} points, need more than {} for lag {lag}",
            series.len(),
            lag + 1
        )));
    }
    Ok(acf(&series, lag)?)
}

pub const TRADING_WEEKDAYS: [Weekday; 5] = [Weekday::Mon, Weekday::Tue, Weekday::Wed, Weekday::Thu, Weekday::Fri];

/// Autocorrelation for every weekday at every lag; rows follow `lags`,
/// columns Monday through Friday.
pub fn autocorrelation_table(prices: &PriceSeries, lags: &[usize]) -> Result<Vec<[f64; 5]>> {
    let series: Vec<Vec<f64>> = TRADING_WEEKDAYS.iter().map(|d| weekday_series(prices, *d)).collect();
    lags.iter()
        .map(|&lag| {
            let mut row = [0.0; 5];
            for (slot, s) in row.iter_mut().zip(&series) {
                if s.len() <= lag + 1 {
                    return Err(Error::data(format!("series too short for lag {lag}")));
                }
                *slot = acf(s, lag)?;
            }
            Ok(row)
        })
        .collect()
}
