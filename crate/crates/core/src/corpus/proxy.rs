//! Worthiness labels derived from category tags.

use serde::{Deserialize, Serialize};

use super::NewsRecord;
use crate::error::{Error, Result};

pub const REGIONS: &[&str] = &["us", "europe", "asia"];

pub const SECTORS: &[&str] = &[
    "financials",
    "technology",
    "industrials",
    "energy",
    "healthcare",
    "telecoms",
    "utilities",
    "basic-materials",
    "cyclicals",
    "non-cyclicals",
];

/// Largest S&P 500 constituents by index weight, as `company:` tags.
pub const TOP20_COMPANIES: &[&str] = &[
    "company:apple",
    "company:microsoft",
    "company:amazon",
    "company:facebook",
    "company:alphabet",
    "company:berkshire-hathaway",
    "company:johnson-johnson",
    "company:jpmorgan",
    "company:visa",
    "company:procter-gamble",
    "company:exxon-mobil",
    "company:unitedhealth",
    "company:mastercard",
    "company:intel",
    "company:verizon",
    "company:home-depot",
    "company:at-t",
    "company:bank-of-america",
    "company:walt-disney",
    "company:chevron",
];

/// Whether `tag` is a known category tag: `region:<r>`, `sector:<s>` or
/// `company:<name>`.
pub fn is_known_tag(tag: &str) -> bool {
    match tag.split_once(':') {
        Some(("region", r)) => REGIONS.contains(&r),
        Some(("sector", s)) => SECTORS.contains(&s),
        Some(("company", name)) => !name.is_empty(),
        _ => false,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProxyRule {
    pub name: String,
    /// A record matches when it carries any of these tags.
    pub tags: Vec<String>,
    /// 0 or 1.
    pub worthiness: u8,
    /// Maximum number of records this rule may label.
    pub cap: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProxyPolicy {
    pub rules: Vec<ProxyRule>,
}

impl Default for ProxyPolicy {
    fn default() -> Self {
        let rule = |name: &str, tags: &[&str], worthiness, cap| ProxyRule {
            name: name.into(),
            tags: tags.iter().map(|t| t.to_string()).collect(),
            worthiness,
            cap,
        };
        ProxyPolicy {
            rules: vec![
                rule("top20-companies", TOP20_COMPANIES, 1, 750),
                rule("financials", &["sector:financials"], 1, 500),
                rule("us", &["region:us"], 1, 250),
                rule("technology", &["sector:technology"], 1, 250),
                rule("basic-materials", &["sector:basic-materials"], 0, 250),
                rule("cyclicals", &["sector:cyclicals"], 0, 250),
                rule("non-cyclicals", &["sector:non-cyclicals"], 0, 250),
                rule("healthcare", &["sector:healthcare"], 0, 250),
                rule("europe", &["region:europe"], 0, 250),
            ],
        }
    }
}

impl ProxyPolicy {
    pub fn validate(&self) -> Result<()> {
        for rule in &self.rules {
            if rule.worthiness > 1 {
                return Err(Error::config(format!(
                    "proxy rule {:?}: worthiness must be 0 or 1, got {}",
                    rule.name, rule.worthiness
                )));
            }
            if let Some(tag) = rule.tags.iter().find(|t| !is_known_tag(t)) {
                return Err(Error::config(format!(
                    "proxy rule {:?} references unknown category tag {tag:?}",
                    rule.name
                )));
            }
        }
        Ok(())
    }
}

/// Labels applied per rule, in rule order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProxyStats {
    pub per_rule: Vec<(String, usize)>,
    pub manual: usize,
}

/// Gives unlabeled records the worthiness of the first matching rule that
/// still has capacity. Records that already carry a label keep it.
pub fn assign_worthiness_proxy(records: &mut [NewsRecord], policy: &ProxyPolicy) -> Result<ProxyStats> {
    policy.validate()?;
    let mut used = vec![0usize; policy.rules.len()];
    let mut manual = 0;
    for record in records.iter_mut() {
        if record.worthiness.is_some() {
            manual += 1;
            continue;
        }
        let hit = policy.rules.iter().enumerate().find(|(i, rule)| {
            used[*i] < rule.cap && rule.tags.iter().any(|t| record.has_category(t))
        });
        if let Some((i, rule)) = hit {
            used[i] += 1;
            record.worthiness = Some(rule.worthiness == 1);
        }
    }
    Ok(ProxyStats {
        per_rule: policy.rules.iter().map(|r| r.name.clone()).zip(used).collect(),
        manual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::record::parse_timestamp;

    fn rec(id: &str, tags: &[&str], worthiness: Option<bool>) -> NewsRecord {
        NewsRecord {
            id: id.into(),
            url: String::new(),
            title: String::new(),
            content: String::new(),
            published: parse_timestamp("2020-01-06T12:00:00Z").unwrap(),
            categories: tags.iter().map(|t| t.to_string()).collect(),
            worthiness,
        }
    }

    #[test]
    fn basic_materials_is_negative() {
        let mut rs = vec![rec("a", &["sector:basic-materials"], None)];
        assign_worthiness_proxy(&mut rs, &ProxyPolicy::default()).unwrap();
        assert_eq!(rs[0].worthiness, Some(false));
    }

    #[test]
    fn top20_company_is_positive() {
        let mut rs = vec![rec("a", &["company:apple", "sector:technology"], None)];
        assign_worthiness_proxy(&mut rs, &ProxyPolicy::default()).unwrap();
        assert_eq!(rs[0].worthiness, Some(true));
    }

    #[test]
    fn manual_label_wins() {
        let mut rs = vec![rec("a", &["sector:financials"], Some(false))];
        let stats = assign_worthiness_proxy(&mut rs, &ProxyPolicy::default()).unwrap();
        assert_eq!(rs[0].worthiness, Some(false));
        assert_eq!(stats.manual, 1);
    }

    #[test]
    fn caps_are_respected() {
        let policy = ProxyPolicy {
            rules: vec![ProxyRule {
                name: "us".into(),
                tags: vec!["region:us".into()],
                worthiness: 1,
                cap: 2,
            }],
        };
        let mut rs: Vec<_> = (0..5).map(|i| rec(&i.to_string(), &["region:us"], None)).collect();
        let stats = assign_worthiness_proxy(&mut rs, &policy).unwrap();
        assert_eq!(stats.per_rule, vec![("us".to_string(), 2)]);
        assert_eq!(rs.iter().filter(|r| r.worthiness.is_some()).count(), 2);
        assert!(rs[2..].iter().all(|r| r.worthiness.is_none()));
    }

    #[test]
    fn full_rule_falls_through_to_next() {
        let policy = ProxyPolicy {
            rules: vec![
                ProxyRule { name: "a".into(), tags: vec!["region:us".into()], worthiness: 1, cap: 1 },
                ProxyRule { name: "b".into(), tags: vec!["sector:energy".into()], worthiness: 0, cap: 5 },
            ],
        };
        let mut rs = vec![rec("1", &["region:us", "sector:energy"], None), rec("2", &["region:us", "sector:energy"], None)];
        assign_worthiness_proxy(&mut rs, &policy).unwrap();
        assert_eq!(rs[0].worthiness, Some(true));
        assert_eq!(rs[1].worthiness, Some(false));
    }

    #[test]
    fn unknown_tag_is_config_error() {
        let policy = ProxyPolicy {
            rules: vec![ProxyRule { name: "x".into(), tags: vec!["sector:crypto".into()], worthiness: 1, cap: 1 }],
        };
        let err = assign_worthiness_proxy(&mut [], &policy).unwrap_err();
        assert_eq!(err.exit_code(), 1);
    }
}
