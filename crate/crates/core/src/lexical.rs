//! Lexical similarity measures over stemmed views: cosine over word n-grams,
//! character trigrams and tf-idf weights, plus the word, noun and n-gram
//! overlap ratios. Every measure is symmetric and lands in [0, 1].

use std::collections::{BTreeMap, HashSet};
use std::hash::Hash;

use crate::error::{Error, Result};
use crate::preprocess::{tag_nouns, LexResources, TextView};

/// Document frequencies for tf-idf weighting.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct IdfTable {
    pub doc_count: usize,
    pub df: BTreeMap<String, usize>,
}

impl IdfTable {
    /// Smoothed idf: ln((N + 1) / (df + 1)) + 1, with df = 0 for unseen terms.
    pub fn idf(&self, term: &str) -> f64 {
        let df = self.df.get(term).copied().unwrap_or(0) as f64;
        ((self.doc_count as f64 + 1.0) / (df + 1.0)).ln() + 1.0
    }
}

/// One view is one document.
pub fn build_idf<'a, I>(corpus: I) -> Result<IdfTable>
where
    I: IntoIterator<Item = &'a TextView>,
{
    let mut doc_count = 0;
    let mut df: BTreeMap<String, usize> = BTreeMap::new();
    for view in corpus {
        doc_count += 1;
        let distinct: HashSet<&str> = view.tokens.iter().map(String::as_str).collect();
        for t in distinct {
            *df.entry(t.to_string()).or_insert(0) += 1;
        }
    }
    if doc_count == 0 {
        return Err(Error::EmptyCorpus);
    }
    Ok(IdfTable { doc_count, df })
}

// Ordered maps keep floating-point summation order independent of the
// process's hash seed.
fn counts<K: Ord, I: IntoIterator<Item = K>>(items: I) -> BTreeMap<K, f64> {
    let mut m = BTreeMap::new();
    for k in items {
        *m.entry(k).or_insert(0.0) += 1.0;
    }
    m
}

/// Cosine of two sparse non-negative vectors; 0 when either is zero.
pub(crate) fn sparse_cosine<K: Ord>(u: &BTreeMap<K, f64>, v: &BTreeMap<K, f64>) -> f64 {
    let (small, large) = if u.len() <= v.len() { (u, v) } else { (v, u) };
    let dot: f64 = small
        .iter()
        .filter_map(|(k, x)| large.get(k).map(|y| x * y))
        .sum();
    let nu: f64 = u.values().map(|x| x * x).sum::<f64>().sqrt();
    let nv: f64 = v.values().map(|x| x * x).sum::<f64>().sqrt();
    if nu == 0.0 || nv == 0.0 {
        return 0.0;
    }
    (dot / (nu * nv)).clamp(0.0, 1.0)
}

fn word_ngrams(tokens: &[String], n: usize) -> impl Iterator<Item = &[String]> {
    tokens.windows(n.max(1)).filter(move |_| n > 0)
}

/// Cosine over word n-gram counts for a single order `n`.
pub fn cosine_word_ngrams(a: &TextView, b: &TextView, n: usize) -> f64 {
    cosine_word_ngram_range(a, b, n, n)
}

/// Cosine over the joint count vector of all word n-grams with
/// `min_n <= n <= max_n`.
pub fn cosine_word_ngram_range(a: &TextView, b: &TextView, min_n: usize, max_n: usize) -> f64 {
    fn grams(v: &TextView, min_n: usize, max_n: usize) -> BTreeMap<&[String], f64> {
        counts((min_n..=max_n).flat_map(|n| word_ngrams(&v.tokens, n).collect::<Vec<_>>()))
    }
    sparse_cosine(&grams(a, min_n, max_n), &grams(b, min_n, max_n))
}

fn char_trigrams(view: &TextView) -> BTreeMap<[char; 3], f64> {
    let joined: Vec<char> = view.tokens.join(" ").chars().collect();
    counts(joined.windows(3).map(|w| [w[0], w[1], w[2]]))
}

/// Cosine over character trigrams of the space-joined token sequence.
pub fn cosine_char_3grams(a: &TextView, b: &TextView) -> f64 {
    sparse_cosine(&char_trigrams(a), &char_trigrams(b))
}

fn tfidf_vector<'a>(view: &'a TextView, idf: &IdfTable) -> BTreeMap<&'a str, f64> {
    let mut v = counts(view.tokens.iter().map(String::as_str));
    for (t, w) in v.iter_mut() {
        *w *= idf.idf(t);
    }
    v
}

pub fn cosine_tfidf(a: &TextView, b: &TextView, idf: &IdfTable) -> f64 {
    sparse_cosine(&tfidf_vector(a, idf), &tfidf_vector(b, idf))
}

/// |A ∩ B| / ((|A| + |B|) / 2), 0 when both sets are empty.
pub(crate) fn mean_size_overlap<K: Eq + Hash>(a: &HashSet<K>, b: &HashSet<K>) -> f64 {
    let denom = (a.len() + b.len()) as f64 / 2.0;
    if denom == 0.0 {
        return 0.0;
    }
    let common = a.intersection(b).count() as f64;
    (common / denom).min(1.0)
}

pub fn word_overlap(a: &TextView, b: &TextView) -> f64 {
    let sa: HashSet<&str> = a.tokens.iter().map(String::as_str).collect();
    let sb: HashSet<&str> = b.tokens.iter().map(String::as_str).collect();
    mean_size_overlap(&sa, &sb)
}

pub fn noun_overlap(a: &TextView, b: &TextView, res: &LexResources) -> f64 {
    let na: HashSet<String> = tag_nouns(a, res).into_iter().collect();
    let nb: HashSet<String> = tag_nouns(b, res).into_iter().collect();
    mean_size_overlap(&na, &nb)
}

/// Overlap of distinct word n-grams of order `n`.
pub fn ngram_overlap(a: &TextView, b: &TextView, n: usize) -> f64 {
    ngram_overlap_range(a, b, n, n, false)
}

/// Overlap of word n-grams with `min_n <= n <= max_n` pooled together.
/// With `multiset` the intersection counts repeated n-grams (min of counts)
/// and the sizes are total n-gram counts.
pub fn ngram_overlap_range(
    a: &TextView,
    b: &TextView,
    min_n: usize,
    max_n: usize,
    multiset: bool,
) -> f64 {
    let grams = |v: &'_ TextView| -> Vec<Vec<String>> {
        (min_n..=max_n)
            .flat_map(|n| {
                word_ngrams(&v.tokens, n)
                    .map(<[String]>::to_vec)
                    .collect::<Vec<_>>()
            })
            .collect()
    };
    let (ga, gb) = (grams(a), grams(b));
    if !multiset {
        let sa: HashSet<&Vec<String>> = ga.iter().collect();
        let sb: HashSet<&Vec<String>> = gb.iter().collect();
        return mean_size_overlap(&sa, &sb);
    }
    let ca = counts(ga.iter());
    let cb = counts(gb.iter());
    let denom = (ga.len() + gb.len()) as f64 / 2.0;
    if denom == 0.0 {
        return 0.0;
    }
    let common: f64 = ca
        .iter()
        .filter_map(|(k, x)| cb.get(k).map(|y| x.min(*y)))
        .sum();
    (common / denom).min(1.0)
}
