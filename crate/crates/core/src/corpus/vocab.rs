use std::cmp::Ordering;
use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::util;

/// An ordered list of distinct words with a reverse index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    words: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    pub fn new(words: Vec<String>) -> Result<Self> {
        let mut index = HashMap::with_capacity(words.len());
        for (i, w) in words.iter().enumerate() {
            if index.insert(w.clone(), i).is_some() {
                return Err(Error::data(format!("duplicate vocabulary word {w:?}")));
            }
        }
        Ok(Self { words, index })
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn get(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    /// SHA-256 of the newline-joined words.
    pub fn hash(&self) -> String {
        util::sha256_hex(self.words.join("\n").as_bytes())
    }
}

/// Orders by descending absolute score, then lexicographically.
fn by_magnitude(a: &(String, f64), b: &(String, f64)) -> Ordering {
    b.1.abs()
        .partial_cmp(&a.1.abs())
        .unwrap_or(Ordering::Equal)
        .then_with(|| a.0.cmp(&b.0))
}

/// Picks the `size` most polar words of a signed ranking, strongest first.
pub fn build_vocabulary(ranking: &[(String, f64)], size: usize) -> Result<Vocabulary> {
    if ranking.len() < size {
        return Err(Error::data(format!(
            "only {} candidate words for a POT vocabulary of {size}; lower pot.vocab_size or supply more training news",
            ranking.len()
        )));
    }
    let mut sorted = ranking.to_vec();
    sorted.sort_by(by_magnitude);
    Vocabulary::new(sorted.into_iter().take(size).map(|(w, _)| w).collect())
}

/// The `k` most frequent tokens, ties broken lexicographically.
pub fn most_frequent<'a>(docs: impl IntoIterator<Item = &'a [String]>, k: usize) -> Vocabulary {
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for tokens in docs {
        for t in tokens {
            *counts.entry(t.as_str()).or_default() += 1;
        }
    }
    let mut pairs: Vec<(&str, usize)> = counts.into_iter().collect();
    pairs.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    Vocabulary::new(pairs.into_iter().take(k).map(|(w, _)| w.to_string()).collect())
        .expect("counted words are distinct")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ranking(pairs: &[(&str, f64)]) -> Vec<(String, f64)> {
        pairs.iter().map(|(w, s)| (w.to_string(), *s)).collect()
    }

    #[test]
    fn top_one() {
        let v = build_vocabulary(&ranking(&[("gain", 0.9), ("the", 0.0), ("fell", -0.5)]), 1).unwrap();
        assert_eq!(v.words(), ["gain"]);
    }

    #[test]
    fn negative_polarity_counts_by_magnitude() {
        let v = build_vocabulary(&ranking(&[("gain", 0.3), ("fell", -0.5), ("the", 0.0)]), 2).unwrap();
        assert_eq!(v.words(), ["fell", "gain"]);
    }

    #[test]
    fn ties_are_lexicographic() {
        let r = ranking(&[("zeta", 0.5), ("alpha", -0.5), ("mid", 0.5)]);
        let v = build_vocabulary(&r, 3).unwrap();
        assert_eq!(v.words(), ["alpha", "mid", "zeta"]);
        let mut reversed = r.clone();
        reversed.reverse();
        assert_eq!(build_vocabulary(&reversed, 3).unwrap(), v);
    }

    #[test]
    fn too_few_candidates() {
        let err = build_vocabulary(&ranking(&[("a", 1.0)]), 2).unwrap_err();
        assert!(err.to_string().contains("pot.vocab_size"));
    }

    #[test]
    fn index_is_bijection() {
        let v = Vocabulary::new(vec!["a".into(), "b".into(), "c".into()]).unwrap();
        for (i, w) in v.words().iter().enumerate() {
            assert_eq!(v.get(w), Some(i));
        }
        assert!(Vocabulary::new(vec!["a".into(), "a".into()]).is_err());
    }

    #[test]
    fn frequency_ranking() {
        let docs = [vec!["b".to_string(), "a".into(), "b".into()], vec!["c".into(), "a".into()]];
        let v = most_frequent(docs.iter().map(|d| d.as_slice()), 2);
        assert_eq!(v.words(), ["a", "b"]);
    }
}
