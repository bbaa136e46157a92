use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap, HashSet};

use crate::calendar::PotClass;
use crate::corpus::TokenizedDoc;
use crate::error::{Error, Result};

/// Document frequencies over an IDF universe of individual documents.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DocFreq {
    n_docs: usize,
    df: HashMap<String, usize>,
}

impl DocFreq {
    pub fn from_docs<'a>(docs: impl IntoIterator<Item = &'a TokenizedDoc>) -> Self {
        let mut out = DocFreq::default();
        for doc in docs {
            out.n_docs += 1;
            let distinct: HashSet<&str> = doc.tokens.iter().map(String::as_str).collect();
            for w in distinct {
                *out.df.entry(w.to_string()).or_default() += 1;
            }
        }
        out
    }

    pub fn merge(&mut self, other: &DocFreq) {
        self.n_docs += other.n_docs;
        for (w, c) in &other.df {
            *self.df.entry(w.clone()).or_default() += c;
        }
    }

    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    pub fn df(&self, word: &str) -> usize {
        self.df.get(word).copied().unwrap_or(0)
    }

    /// Smoothed IDF: `ln((1 + N) / (1 + df)) + 1`.
    pub fn idf(&self, word: &str) -> f64 {
        ((1.0 + self.n_docs as f64) / (1.0 + self.df(word) as f64)).ln() + 1.0
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.df.keys().map(String::as_str)
    }
}

/// Token counts of a class's documents pooled into one text.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ClassTerms {
    n_docs: usize,
    total_tokens: usize,
    counts: HashMap<String, usize>,
}

impl ClassTerms {
    pub fn from_docs<'a>(docs: impl IntoIterator<Item = &'a TokenizedDoc>) -> Self {
        let mut out = ClassTerms::default();
        for doc in docs {
            out.n_docs += 1;
            out.total_tokens += doc.tokens.len();
            for t in &doc.tokens {
                *out.counts.entry(t.clone()).or_default() += 1;
            }
        }
        out
    }

    pub fn merge(&mut self, other: &ClassTerms) {
        self.n_docs += other.n_docs;
        self.total_tokens += other.total_tokens;
        for (w, c) in &other.counts {
            *self.counts.entry(w.clone()).or_default() += c;
        }
    }

    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    /// Count of `word` divided by the pooled token total; 0 for an empty class.
    pub fn tf(&self, word: &str) -> f64 {
        if self.total_tokens == 0 {
            return 0.0;
        }
        self.counts.get(word).copied().unwrap_or(0) as f64 / self.total_tokens as f64
    }

    /// `W / sqrt(N)` for this class, or 0 when the class has no documents.
    pub fn normalized_weight(&self, idf: &DocFreq, word: &str) -> f64 {
        if self.n_docs == 0 {
            return 0.0;
        }
        self.tf(word) * idf.idf(word) / (self.n_docs as f64).sqrt()
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.counts.keys().map(String::as_str)
    }
}

/// Documents of one week class.
#[derive(Debug, Clone)]
pub struct ClassCorpus<'a> {
    pub class: PotClass,
    pub docs: Vec<&'a TokenizedDoc>,
}

impl<'a> ClassCorpus<'a> {
    pub fn new(class: PotClass, docs: impl IntoIterator<Item = &'a TokenizedDoc>) -> Self {
        Self { class, docs: docs.into_iter().collect() }
    }

    pub fn n_docs(&self) -> usize {
        self.docs.len()
    }
}

/// TF-IDF of `word` in the pooled text of `class`, with IDF taken over the
/// individual documents of `universe`.
pub fn tfidf(universe: &[&TokenizedDoc], class: &ClassCorpus<'_>, word: &str) -> f64 {
    let idf = DocFreq::from_docs(universe.iter().copied());
    ClassTerms::from_docs(class.docs.iter().copied()).tf(word) * idf.idf(word)
}

/// Scores every word by `W_pos / sqrt(N_pos) - W_neg / sqrt(N_neg)`, highest
/// first, ties broken lexicographically.
pub fn tfidf_difference_ranking(
    pos: &ClassCorpus<'_>,
    neg: &ClassCorpus<'_>,
    universe: &[&TokenizedDoc],
) -> Result<Vec<(String, f64)>> {
    if pos.docs.is_empty() || neg.docs.is_empty() {
        return Err(Error::data(format!(
            "TF-IDF difference needs documents in both classes (positive: {}, negative: {})",
            pos.n_docs(),
            neg.n_docs()
        )));
    }
    let idf = DocFreq::from_docs(universe.iter().copied());
    let pos_terms = ClassTerms::from_docs(pos.docs.iter().copied());
    let neg_terms = ClassTerms::from_docs(neg.docs.iter().copied());
    let words: BTreeSet<&str> = idf.words().chain(pos_terms.words()).chain(neg_terms.words()).collect();
    let mut ranking: Vec<(String, f64)> = words
        .into_iter()
        .map(|w| {
            let score = pos_terms.normalized_weight(&idf, w) - neg_terms.normalized_weight(&idf, w);
            (w.to_string(), score)
        })
        .collect();
    ranking.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(Ordering::Equal).then_with(|| a.0.cmp(&b.0)));
    Ok(ranking)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(text: &str) -> TokenizedDoc {
        TokenizedDoc {
            record_id: text.into(),
            tokens: text.split_whitespace().map(String::from).collect(),
        }
    }

    #[test]
    fn absent_word_scores_zero() {
        let d = [doc("a b"), doc("c")];
        let universe: Vec<_> = d.iter().collect();
        assert_eq!(tfidf(&universe, &ClassCorpus::new(PotClass::Neutral, [&d[0]]), "c"), 0.0);
    }

    #[test]
    fn single_doc_universe() {
        let d = doc("gain gain gain");
        assert_eq!(tfidf(&[&d], &ClassCorpus::new(PotClass::Neutral, [&d]), "gain"), 1.0);
    }

    #[test]
    fn four_doc_window() {
        // Universe of 4 docs, "gain" in 2: idf = ln(5/3) + 1.
        // Pooled class = docs 0 and 1: 7 tokens, "gain" 3 times.
        let d = [doc("gain gain up"), doc("gain x y z"), doc("fell"), doc("fell down")];
        let universe: Vec<_> = d.iter().collect();
        let class = ClassCorpus::new(PotClass::VeryPositive, [&d[0], &d[1]]);
        let expected = (3.0 / 7.0) * ((5.0f64 / 3.0).ln() + 1.0);
        assert!((tfidf(&universe, &class, "gain") - expected).abs() < 1e-15);
    }

    #[test]
    fn positive_only_word_scores_positive() {
        let d = [doc("gain rise the"), doc("fell the")];
        let universe: Vec<_> = d.iter().collect();
        let ranking = tfidf_difference_ranking(
            &ClassCorpus::new(PotClass::VeryPositive, [&d[0]]),
            &ClassCorpus::new(PotClass::VeryNegative, [&d[1]]),
            &universe,
        )
        .unwrap();
        let score = |w: &str| ranking.iter().find(|(x, _)| x == w).unwrap().1;
        assert!(score("gain") > 0.0);
        assert!(score("fell") < 0.0);
        assert_eq!(ranking.first().unwrap().0, "gain");
        assert_eq!(ranking.last().unwrap().0, "fell");
    }

    #[test]
    fn identical_classes_score_zero() {
        let d = [doc("a b c a"), doc("b d")];
        let universe: Vec<_> = d.iter().collect();
        let pos = ClassCorpus::new(PotClass::VeryPositive, d.iter());
        let neg = ClassCorpus::new(PotClass::VeryNegative, d.iter());
        let ranking = tfidf_difference_ranking(&pos, &neg, &universe).unwrap();
        assert!(ranking.iter().all(|(_, s)| *s == 0.0));
        let words: Vec<_> = ranking.iter().map(|(w, _)| w.as_str()).collect();
        assert_eq!(words, ["a", "b", "c", "d"]);
    }

    #[test]
    fn empty_class_is_fatal() {
        let d = doc("a");
        let err = tfidf_difference_ranking(
            &ClassCorpus::new(PotClass::VeryPositive, [&d]),
            &ClassCorpus::new(PotClass::VeryNegative, []),
            &[&d],
        );
        assert!(err.is_err());
    }
}
