use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::NewsRecord;

/// Record-level cleaning rules.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterRules {
    /// Minimum content length in characters (inclusive).
    pub min_content_chars: usize,
    /// Maximum content length in characters (inclusive).
    pub max_content_chars: usize,
    /// Records whose URL contains any of these substrings are dropped.
    pub url_blocklist: Vec<String>,
}

impl Default for FilterRules {
    fn default() -> Self {
        Self {
            min_content_chars: 200,
            max_content_chars: 20_000,
            url_blocklist: vec!["/video/".into(), "/pictures/".into(), "/advertising/".into()],
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FilterStats {
    pub too_short: usize,
    pub too_long: usize,
    pub blocked_url: usize,
    pub duplicate: usize,
}

impl FilterStats {
    pub fn removed(&self) -> usize {
        self.too_short + self.too_long + self.blocked_url + self.duplicate
    }
}

/// Drops records failing the length or URL rules, then duplicates by id or
/// by (title, publication date). The first occurrence wins.
pub fn clean_filter(records: Vec<NewsRecord>, rules: &FilterRules) -> (Vec<NewsRecord>, FilterStats) {
    let mut stats = FilterStats::default();
    let mut seen_ids = HashSet::new();
    let mut seen_titles = HashSet::new();
    let mut kept = Vec::with_capacity(records.len());
    for record in records {
        let len = record.content.chars().count();
        if len < rules.min_content_chars {
            stats.too_short += 1;
            continue;
        }
        if len > rules.max_content_chars {
            stats.too_long += 1;
            continue;
        }
        if rules.url_blocklist.iter().any(|p| record.url.contains(p.as_str())) {
            stats.blocked_url += 1;
            continue;
        }
        let title_key = (record.title.clone(), record.published_date());
        if seen_ids.contains(&record.id) || seen_titles.contains(&title_key) {
            stats.duplicate += 1;
            continue;
        }
        seen_ids.insert(record.id.clone());
        seen_titles.insert(title_key);
        kept.push(record);
    }
    (kept, stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::record::parse_timestamp;

    fn rec(id: &str, title: &str, content_len: usize) -> NewsRecord {
        NewsRecord {
            id: id.into(),
            url: format!("https://news/{id}"),
            title: title.into(),
            content: "x".repeat(content_len),
            published: parse_timestamp("2020-01-06T12:00:00Z").unwrap(),
            categories: Default::default(),
            worthiness: None,
        }
    }

    #[test]
    fn duplicate_record_keeps_one() {
        let r = rec("a", "Stocks", 300);
        let (kept, stats) = clean_filter(vec![r.clone(), r], &FilterRules::default());
        assert_eq!(kept.len(), 1);
        assert_eq!(stats.duplicate, 1);
    }

    #[test]
    fn same_title_same_day_is_duplicate() {
        let (kept, _) = clean_filter(vec![rec("a", "Stocks", 300), rec("b", "Stocks", 400)], &FilterRules::default());
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].id, "a");
    }

    #[test]
    fn empty_and_overlong_content_removed() {
        let (kept, stats) = clean_filter(
            vec![rec("a", "A", 0), rec("b", "B", 20_001), rec("c", "C", 200)],
            &FilterRules::default(),
        );
        assert_eq!(kept.iter().map(|r| r.id.as_str()).collect::<Vec<_>>(), ["c"]);
        assert_eq!((stats.too_short, stats.too_long), (1, 1));
    }

    #[test]
    fn blocked_url_removed() {
        let mut r = rec("a", "A", 300);
        r.url = "https://reuters.com/video/abc".into();
        let (kept, stats) = clean_filter(vec![r], &FilterRules::default());
        assert!(kept.is_empty());
        assert_eq!(stats.blocked_url, 1);
    }
}
