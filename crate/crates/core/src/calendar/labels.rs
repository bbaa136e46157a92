use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::TradingWeek;
use crate::error::{Error, Result};

/// Week selection for extractor training.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ExtractorClass {
    Positive,
    Negative,
    Excluded,
}

/// Five-way week class used to pool POT text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PotClass {
    VeryPositive,
    Positive,
    Neutral,
    Negative,
    VeryNegative,
}

impl PotClass {
    pub const ALL: [PotClass; 5] = [
        PotClass::VeryPositive,
        PotClass::Positive,
        PotClass::Neutral,
        PotClass::Negative,
        PotClass::VeryNegative,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    /// The class with polarity reversed.
    pub fn mirrored(self) -> Self {
        match self {
            PotClass::VeryPositive => PotClass::VeryNegative,
            PotClass::Positive => PotClass::Negative,
            PotClass::Neutral => PotClass::Neutral,
            PotClass::Negative => PotClass::Positive,
            PotClass::VeryNegative => PotClass::VeryPositive,
        }
    }
}

/// Index direction class predicted by the summarizer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Trend {
    Down,
    Preserve,
    Up,
}

macro_rules! string_enum {
    ($ty:ty { $($variant:ident => $name:literal),+ $(,)? }) => {
        impl $ty {
            pub fn as_str(self) -> &'static str {
                match self { $(<$ty>::$variant => $name),+ }
            }
        }

        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $ty {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($name => Ok(<$ty>::$variant),)+
                    other => Err(Error::data(format!(concat!("unknown ", stringify!($ty), " {:?}"), other))),
                }
            }
        }
    };
}

string_enum!(ExtractorClass { Positive => "positive", Negative => "negative", Excluded => "excluded" });
string_enum!(PotClass {
    VeryPositive => "vpos",
    Positive => "pos",
    Neutral => "neutral",
    Negative => "neg",
    VeryNegative => "vneg",
});
string_enum!(Trend { Down => "down", Preserve => "preserve", Up => "up" });

/// Thresholds (percent points) for the five POT classes: `|p| >= strong` is
/// very positive/negative, `mild <= |p| < strong` positive/negative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotThresholds {
    pub strong: f64,
    pub mild: f64,
}

impl Default for PotThresholds {
    fn default() -> Self {
        Self { strong: 2.0, mild: 0.5 }
    }
}

impl PotThresholds {
    pub fn classify(&self, pct: f64) -> PotClass {
        if pct >= self.strong {
            PotClass::VeryPositive
        } else if pct >= self.mild {
            PotClass::Positive
        } else if pct <= -self.strong {
            PotClass::VeryNegative
        } else if pct <= -self.mild {
            PotClass::Negative
        } else {
            PotClass::Neutral
        }
    }
}

/// Converts a weekly percent change into a summarizer class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BinningPolicy {
    /// Up if `p > up`, Down if `p < down`, Preserve otherwise.
    ThreeWay { up: f64, down: f64 },
    /// Up if `p > up`, Down if `p < down`; weeks in between get no label.
    Binary { up: f64, down: f64 },
}

impl Default for BinningPolicy {
    fn default() -> Self {
        Self::three_way()
    }
}

impl BinningPolicy {
    pub fn three_way() -> Self {
        BinningPolicy::ThreeWay { up: 0.79, down: -0.21 }
    }

    pub fn binary_asymmetric() -> Self {
        BinningPolicy::Binary { up: 0.0, down: 0.0 }
    }

    pub fn binary_symmetric() -> Self {
        BinningPolicy::Binary { up: 0.6, down: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            BinningPolicy::ThreeWay { up, down } if up <= down => Err(Error::config(format!(
                "three-way policy needs up > down, got up={up} down={down}"
            ))),
            BinningPolicy::Binary { up, down } if up < down => Err(Error::config(format!(
                "binary policy needs up >= down, got up={up} down={down}"
            ))),
            _ => Ok(()),
        }
    }

    /// Classes in index order; the lowest index wins decision ties.
    pub fn classes(&self) -> &'static [Trend] {
        match self {
            BinningPolicy::ThreeWay { .. } => &[Trend::Down, Trend::Preserve, Trend::Up],
            BinningPolicy::Binary { .. } => &[Trend::Down, Trend::Up],
        }
    }

    pub fn classify(&self, pct: f64) -> Option<Trend> {
        match *self {
            BinningPolicy::ThreeWay { up, down } => Some(if pct > up {
                Trend::Up
            } else if pct < down {
                Trend::Down
            } else {
                Trend::Preserve
            }),
            BinningPolicy::Binary { up, down } => {
                if pct > up {
                    Some(Trend::Up)
                } else if pct < down {
                    Some(Trend::Down)
                } else {
                    None
                }
            }
        }
    }

    pub fn describe(&self) -> String {
        match *self {
            BinningPolicy::ThreeWay { up, down } => {
                format!("3 categories: Up p% > {up}; Down p% < {down}; otherwise Preserve")
            }
            BinningPolicy::Binary { up, down } => format!("binary: Up p% > {up}; Down p% < {down}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LabelConfig {
    /// Weeks with `|p| >` this many percent points train the extractor.
    pub extractor_threshold: f64,
    pub pot: PotThresholds,
}

impl Default for LabelConfig {
    fn default() -> Self {
        Self { extractor_threshold: 2.0, pot: PotThresholds::default() }
    }
}

impl LabelConfig {
    pub fn extractor_class(&self, pct: f64) -> ExtractorClass {
        if pct > self.extractor_threshold {
            ExtractorClass::Positive
        } else if pct < -self.extractor_threshold {
            ExtractorClass::Negative
        } else {
            ExtractorClass::Excluded
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeeklyLabel {
    pub anchor: NaiveDate,
    pub extractor: ExtractorClass,
    pub pot: PotClass,
    pub summarizer: Option<Trend>,
}

pub fn label_weeks(weeks: &[TradingWeek], config: &LabelConfig, policy: &BinningPolicy) -> Result<Vec<WeeklyLabel>> {
    policy.validate()?;
    Ok(weeks
        .iter()
        .map(|w| WeeklyLabel {
            anchor: w.anchor,
            extractor: config.extractor_class(w.pct_change),
            pot: config.pot.classify(w.pct_change),
            summarizer: policy.classify(w.pct_change),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn three_way_defaults() {
        let p = BinningPolicy::three_way();
        assert_eq!(p.classify(1.0), Some(Trend::Up));
        assert_eq!(p.classify(0.0), Some(Trend::Preserve));
        assert_eq!(p.classify(-0.5), Some(Trend::Down));
        assert_eq!(p.classify(0.79), Some(Trend::Preserve));
    }

    #[test]
    fn extractor_threshold() {
        let c = LabelConfig::default();
        assert_eq!(c.extractor_class(2.5), ExtractorClass::Positive);
        assert_eq!(c.extractor_class(-2.01), ExtractorClass::Negative);
        assert_eq!(c.extractor_class(2.0), ExtractorClass::Excluded);
    }

    #[test]
    fn pot_classes() {
        let t = PotThresholds::default();
        assert_eq!(t.classify(2.0), PotClass::VeryPositive);
        assert_eq!(t.classify(0.5), PotClass::Positive);
        assert_eq!(t.classify(0.49), PotClass::Neutral);
        assert_eq!(t.classify(-0.5), PotClass::Negative);
        assert_eq!(t.classify(-3.0), PotClass::VeryNegative);
    }

    #[test]
    fn binary_policies() {
        let asym = BinningPolicy::binary_asymmetric();
        assert_eq!(asym.classify(0.1), Some(Trend::Up));
        assert_eq!(asym.classify(-0.1), Some(Trend::Down));
        assert_eq!(asym.classify(0.0), None);
        let sym = BinningPolicy::binary_symmetric();
        assert_eq!(sym.classify(0.3), None);
        assert_eq!(sym.classify(0.7), Some(Trend::Up));
    }

    #[test]
    fn inverted_thresholds_rejected() {
        let bad = BinningPolicy::ThreeWay { up: -1.0, down: 1.0 };
        assert_eq!(label_weeks(&[], &LabelConfig::default(), &bad).unwrap_err().exit_code(), 1);
        assert!(BinningPolicy::ThreeWay { up: 0.0, down: 0.0 }.validate().is_err());
        assert!(BinningPolicy::Binary { up: 0.0, down: 0.0 }.validate().is_ok());
    }

    #[test]
    fn names_round_trip() {
        for c in PotClass::ALL {
            assert_eq!(c.as_str().parse::<PotClass>().unwrap(), c);
        }
        assert_eq!("up".parse::<Trend>().unwrap(), Trend::Up);
        assert!("sideways".parse::<Trend>().is_err());
    }

    proptest! {
        #[test]
        fn extractor_partition_is_total(pcts in prop::collection::vec(-15.0f64..15.0, 0..200)) {
            let weeks: Vec<TradingWeek> = pcts.iter().enumerate().map(|(i, &p)| TradingWeek {
                anchor: NaiveDate::from_ymd_opt(2010, 1, 4).unwrap() + chrono::Days::new(7 * (i as u64 + 1)),
                prev_anchor: NaiveDate::from_ymd_opt(2010, 1, 4).unwrap() + chrono::Days::new(7 * i as u64),
                pct_change: p,
                news_ids: vec![],
            }).collect();
            let labels = label_weeks(&weeks, &LabelConfig::default(), &BinningPolicy::three_way()).unwrap();
            let count = |c| labels.iter().filter(|l| l.extractor == c).count();
            prop_assert_eq!(
                count(ExtractorClass::Positive) + count(ExtractorClass::Negative) + count(ExtractorClass::Excluded),
                weeks.len()
            );
            for (l, p) in labels.iter().zip(&pcts) {
                prop_assert_eq!(l.extractor == ExtractorClass::Positive, *p > 2.0);
                prop_assert_eq!(l.extractor == ExtractorClass::Negative, *p < -2.0);
                prop_assert!(l.summarizer.is_some());
            }
        }
    }
}
