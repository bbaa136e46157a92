//! The weekly-Monday framework: anchors, weekly changes, labels, and
//! weekday autocorrelation analysis.

mod autocorr;
mod labels;
mod prices;
mod table;
mod weeks;

pub use autocorr::{acf, autocorrelation, autocorrelation_table, weekday_series, TRADING_WEEKDAYS};
pub use labels::{label_weeks, BinningPolicy, ExtractorClass, LabelConfig, PotClass, PotThresholds, Trend, WeeklyLabel};
pub use prices::{load_prices, write_prices_csv, PricePoint, PriceSeries};
pub use table::{read_weeks_csv, write_weeks_csv};
pub use weeks::{attach_news, monday_anchors, week_index_for, weekly_changes, TradingWeek, WeekBoundary};
