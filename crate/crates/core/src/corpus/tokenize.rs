use serde::{Deserialize, Serialize};

use super::NewsRecord;

/// Lowercase word tokens of one article, title first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizedDoc {
    pub record_id: String,
    pub tokens: Vec<String>,
}

/// Splits `text` on non-alphanumeric boundaries, lowercases, and drops
/// tokens made only of digits.
pub fn tokenize_text(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric()).filter_map(|piece| {
        if piece.is_empty() {
            return None;
        }
        // Lowercasing can introduce combining marks (e.g. 'İ'); keep only
        // alphanumerics so every token re-tokenizes to itself.
        let token: String = piece.to_lowercase().chars().filter(|c| c.is_alphanumeric()).collect();
        if token.is_empty() || token.chars().all(char::is_numeric) {
            None
        } else {
            Some(token)
        }
    })
}

pub fn tokenize(record: &NewsRecord, max_tokens: usize) -> TokenizedDoc {
    assert!(max_tokens >= 1, "max_tokens must be at least 1");
    let tokens = tokenize_text(&record.title)
        .chain(tokenize_text(&record.content))
        .take(max_tokens)
        .collect();
    TokenizedDoc {
        record_id: record.id.clone(),
        tokens,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::record::parse_timestamp;
    use proptest::prelude::*;

    fn rec(title: &str, content: &str) -> NewsRecord {
        NewsRecord {
            id: "r".into(),
            url: String::new(),
            title: title.into(),
            content: content.into(),
            published: parse_timestamp("2020-01-06T12:00:00Z").unwrap(),
            categories: Default::default(),
            worthiness: None,
        }
    }

    #[test]
    fn title_only() {
        assert_eq!(tokenize(&rec("Stocks Rise!", ""), 180).tokens, ["stocks", "rise"]);
    }

    #[test]
    fn digits_dropped() {
        let doc = tokenize(&rec("COVID-19 fears", "Markets slide 3.5% in 2020"), 180);
        assert_eq!(doc.tokens[..2], ["covid", "fears"]);
        assert_eq!(doc.tokens[2..], ["markets", "slide", "in"]);
    }

    #[test]
    fn truncates_preserving_prefix() {
        let content: Vec<String> = (0..500).map(|i| format!("w{i}")).collect();
        let doc = tokenize(&rec("", &content.join(" ")), 180);
        assert_eq!(doc.tokens.len(), 180);
        assert_eq!(doc.tokens, content[..180]);
    }

    #[test]
    fn title_precedes_content() {
        let doc = tokenize(&rec("Alpha beta", "gamma"), 2);
        assert_eq!(doc.tokens, ["alpha", "beta"]);
    }

    proptest! {
        #[test]
        fn tokens_are_clean_and_stable(
            title in "[A-Za-z0-9 ,.!?'éÉßİ-]{0,40}",
            content in "[A-Za-z0-9 ,.!?'éÉßİ\n-]{0,400}",
            max in 1usize..60,
        ) {
            let doc = tokenize(&rec(&title, &content), max);
            prop_assert!(doc.tokens.len() <= max);
            for t in &doc.tokens {
                prop_assert!(!t.is_empty());
                prop_assert!(t.chars().all(char::is_alphanumeric));
                prop_assert_eq!(t.to_lowercase(), t.clone());
            }
            let rejoined = tokenize(&rec(&doc.tokens.join(" "), ""), max);
            prop_assert_eq!(rejoined.tokens, doc.tokens);
        }
    }
}
