//! Word-vector store and the two distributed-representation measures:
//! centroid cosine and bidirectional best-match alignment (CWASA).

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::preprocess::TextView;

/// Unit-normalized word vectors.
#[derive(Debug, Clone, Default)]
pub struct VectorStore {
    dim: usize,
    index: HashMap<String, usize>,
    data: Vec<f64>,
    /// Words that appeared more than once in the source file (last wins).
    pub duplicates: usize,
}

impl VectorStore {
    /// Builds a store from raw vectors, normalizing each one.
    pub fn from_vectors<I, S>(dim: usize, vectors: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, Vec<f64>)>,
        S: Into<String>,
    {
        let mut store = VectorStore {
            dim,
            ..Default::default()
        };
        for (word, v) in vectors {
            let word = word.into();
            if v.len() != dim {
                return Err(Error::Invalid(format!(
                    "vector for {word} has {} components, expected {dim}",
                    v.len()
                )));
            }
            store.insert(word, v)?;
        }
        Ok(store)
    }

    fn insert(&mut self, word: String, mut v: Vec<f64>) -> Result<()> {
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::Invalid(format!("non-finite component for {word}")));
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::Invalid(format!("zero vector for {word}")));
        }
        v.iter_mut().for_each(|x| *x /= norm);
        match self.index.get(&word) {
            Some(&slot) => {
                self.data[slot * self.dim..(slot + 1) * self.dim].copy_from_slice(&v);
                self.duplicates += 1;
            }
            None => {
                self.index.insert(word, self.index.len());
                self.data.extend_from_slice(&v);
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.index
            .get(word)
            .map(|&i| &self.data[i * self.dim..(i + 1) * self.dim])
    }
}

/// Reads the textual word2vec format: a `<vocab> <dim>` header followed by
/// one `<word> <v1> ... <vd>` line per word.
pub fn load_vectors(path: impl AsRef<Path>) -> Result<VectorStore> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_vectors(BufReader::new(file), &path.display().to_string())
}

pub fn parse_vectors<R: BufRead>(reader: R, name: &str) -> Result<VectorStore> {
    let mut lines = reader.lines().enumerate();
    let header = loop {
        match lines.next() {
            Some((_, l)) => {
                let l = l.map_err(|e| Error::io(name, e))?;
                if !l.trim().is_empty() {
                    break l;
                }
            }
            None => return Err(Error::parse(name, 1, "missing header")),
        }
    };
    let head: Vec<&str> = header.split_whitespace().collect();
    let (vocab, dim) = match head.as_slice() {
        [v, d] => match (v.parse::<usize>(), d.parse::<usize>()) {
            (Ok(v), Ok(d)) if d > 0 => (v, d),
            _ => return Err(Error::parse(name, 1, "header must be <vocab_size> <dim>")),
        },
        _ => return Err(Error::parse(name, 1, "header must be <vocab_size> <dim>")),
    };
    let mut store = VectorStore {
        dim,
        ..Default::default()
    };
    let mut rows = 0;
    for (idx, line) in lines {
        let no = idx + 1;
        let line = line.map_err(|e| Error::io(name, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let word = parts.next().unwrap_or_default().to_string();
        let comps: Vec<&str> = parts.collect();
        if comps.len() != dim {
            return Err(Error::parse(
                name,
                no,
                format!("expected {dim} components, found {}", comps.len()),
            ));
        }
        let mut v = Vec::with_capacity(dim);
        for c in comps {
            let x: f64 = c
                .parse()
                .map_err(|_| Error::parse(name, no, format!("non-numeric component {c:?}")))?;
            v.push(x);
        }
        store
            .insert(word, v)
            .map_err(|e| Error::parse(name, no, e.to_string()))?;
        rows += 1;
    }
    if rows != vocab {
        return Err(Error::parse(
            name,
            1,
            format!("header declares {vocab} vectors, found {rows}"),
        ));
    }
    if store.duplicates > 0 {
        log::warn!(
            "{name}: {} duplicate words, last occurrence kept",
            store.duplicates
        );
    }
    Ok(store)
}

/// How a centroid cosine in [-1, 1] is reported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CentroidMapping {
    /// Negative cosines become 0.
    #[default]
    Clip,
    /// (cos + 1) / 2.
    Rescale,
    /// Raw cosine in [-1, 1].
    Raw,
}

/// Which tokens count in the alignment denominator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CwasaDenominator {
    #[default]
    Invocab,
    All,
}

fn in_vocab<'a>(view: &'a TextView, store: &'a VectorStore) -> Vec<(&'a str, &'a [f64])> {
    view.lemmas
        .iter()
        .filter_map(|l| store.get(l).map(|v| (l.as_str(), v)))
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Cosine between the mean vectors of the in-vocabulary lemmas.
pub fn centroid_similarity(
    a: &TextView,
    b: &TextView,
    store: &VectorStore,
    mapping: CentroidMapping,
) -> f64 {
    let centroid = |view: &TextView| -> Option<Vec<f64>> {
        let words = in_vocab(view, store);
        if words.is_empty() {
            return None;
        }
        let mut c = vec![0.0; store.dim()];
        for (_, v) in &words {
            c.iter_mut().zip(*v).for_each(|(s, x)| *s += x);
        }
        let n = words.len() as f64;
        c.iter_mut().for_each(|s| *s /= n);
        Some(c)
    };
    let (Some(ca), Some(cb)) = (centroid(a), centroid(b)) else {
        return 0.0;
    };
    let na = dot(&ca, &ca).sqrt();
    let nb = dot(&cb, &cb).sqrt();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    let cos = if ca == cb {
        1.0
    } else {
        (dot(&ca, &cb) / (na * nb)).clamp(-1.0, 1.0)
    };
    match mapping {
        CentroidMapping::Clip => cos.max(0.0),
        CentroidMapping::Rescale => (cos + 1.0) / 2.0,
        CentroidMapping::Raw => cos,
    }
}

fn word_cosine(a: (&str, &[f64]), b: (&str, &[f64])) -> f64 {
    if a.0 == b.0 {
        1.0
    } else {
        dot(a.1, b.1).clamp(-1.0, 1.0)
    }
}

/// Best non-negative alignment score of every word of `from` against `to`.
pub fn best_matches(from: &TextView, to: &TextView, store: &VectorStore) -> Vec<f64> {
    let wa = in_vocab(from, store);
    let wb = in_vocab(to, store);
    if wb.is_empty() {
        return vec![0.0; wa.len()];
    }
    wa.iter()
        .map(|&w| {
            wb.iter()
                .map(|&v| word_cosine(w, v))
                .fold(f64::NEG_INFINITY, f64::max)
                .max(0.0)
        })
        .collect()
}

/// Mean of the best-match scores in both directions.
pub fn cwasa_similarity(
    a: &TextView,
    b: &TextView,
    store: &VectorStore,
    denominator: CwasaDenominator,
) -> f64 {
    let fwd = best_matches(a, b, store);
    let bwd = best_matches(b, a, store);
    if fwd.is_empty() || bwd.is_empty() {
        return 0.0;
    }
    let total: f64 = fwd.iter().sum::<f64>() + bwd.iter().sum::<f64>();
    let count = match denominator {
        CwasaDenominator::Invocab => fwd.len() + bwd.len(),
        CwasaDenominator::All => a.lemmas.len() + b.lemmas.len(),
    };
    (total / count as f64).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn view(tokens: &[&str]) -> TextView {
        TextView::from_tokens(tokens, false)
    }

    // u·v = 0.5, u·x = 0.9, u·y = 0.1
    fn store() -> VectorStore {
        let s3 = 3.0f64.sqrt() / 2.0;
        VectorStore::from_vectors(
            3,
            vec![
                ("u", vec![1.0, 0.0, 0.0]),
                ("v", vec![0.5, s3, 0.0]),
                ("x", vec![0.9, (1.0 - 0.81f64).sqrt(), 0.0]),
                ("y", vec![0.1, 0.0, (1.0 - 0.01f64).sqrt()]),
                ("neg", vec![-1.0, 0.0, 0.0]),
            ],
        )
        .unwrap()
    }

    #[test]
    fn load_header_and_normalize() {
        let text = "2 3\na 3 0 4\nb 0 2 0\n";
        let s = parse_vectors(text.as_bytes(), "v").unwrap();
        assert_eq!(s.dim(), 3);
        assert_eq!(s.len(), 2);
        for w in ["a", "b"] {
            let n: f64 = s.get(w).unwrap().iter().map(|x| x * x).sum();
            assert!((n - 1.0).abs() < 1e-12);
        }
        assert_eq!(s.get("a").unwrap(), &[0.6, 0.0, 0.8]);
    }

    #[test]
    fn load_arity_mismatch() {
        let err = parse_vectors("2 3\na 1 2\nb 1 2 3\n".as_bytes(), "v").unwrap_err();
        assert!(
            err.to_string()
                .ends_with("line 2: expected 3 components, found 2"),
            "{err}"
        );
    }

    #[test]
    fn load_duplicate_keeps_last() {
        let s = parse_vectors("2 2\na 1 0\na 0 1\n".as_bytes(), "v").unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s.duplicates, 1);
        assert_eq!(s.get("a").unwrap(), &[0.0, 1.0]);
    }

    #[test]
    fn load_rejects_bad_input() {
        assert!(parse_vectors("1 2\na 1 x\n".as_bytes(), "v").is_err());
        let err = parse_vectors("1 2\nzero 0 0\n".as_bytes(), "v").unwrap_err();
        assert!(err.to_string().contains("zero"), "{err}");
        assert!(parse_vectors("3 2\na 1 0\n".as_bytes(), "v").is_err());
        assert!(parse_vectors("".as_bytes(), "v").is_err());
    }

    #[test]
    fn centroid_examples() {
        let s = store();
        let a = view(&["u", "v", "u"]);
        assert!((centroid_similarity(&a, &a, &s, CentroidMapping::Clip) - 1.0).abs() < 1e-12);
        assert_eq!(
            centroid_similarity(&a, &view(&["oov"]), &s, CentroidMapping::Clip),
            0.0
        );
        let c = centroid_similarity(&view(&["u"]), &view(&["v"]), &s, CentroidMapping::Clip);
        assert!((c - 0.5).abs() < 1e-12);
    }

    #[test]
    fn centroid_mappings() {
        let s = store();
        let (a, b) = (view(&["u"]), view(&["neg"]));
        assert_eq!(centroid_similarity(&a, &b, &s, CentroidMapping::Clip), 0.0);
        assert!((centroid_similarity(&a, &b, &s, CentroidMapping::Raw) + 1.0).abs() < 1e-12);
        assert!(centroid_similarity(&a, &b, &s, CentroidMapping::Rescale).abs() < 1e-12);
    }

    #[test]
    fn cwasa_examples() {
        let s = store();
        let d = CwasaDenominator::Invocab;
        let a = view(&["u", "v", "x"]);
        assert_eq!(cwasa_similarity(&a, &a, &s, d), 1.0);
        assert_eq!(cwasa_similarity(&a, &view(&["oov"]), &s, d), 0.0);
        // best(u)=0.9, best(x)=0.9, best(y)=0.1 -> 1.9 / 3
        let got = cwasa_similarity(&view(&["u"]), &view(&["x", "y"]), &s, d);
        assert!((got - 1.9 / 3.0).abs() < 1e-12, "{got}");
    }

    #[test]
    fn cwasa_clips_negative_alignments() {
        let s = store();
        let got = cwasa_similarity(
            &view(&["u"]),
            &view(&["neg"]),
            &s,
            CwasaDenominator::Invocab,
        );
        assert_eq!(got, 0.0);
    }

    #[test]
    fn cwasa_all_denominator_counts_oov() {
        let s = store();
        let a = view(&["u", "oov"]);
        let inv = cwasa_similarity(&a, &a, &s, CwasaDenominator::Invocab);
        let all = cwasa_similarity(&a, &a, &s, CwasaDenominator::All);
        assert_eq!(inv, 1.0);
        assert!((all - 0.5).abs() < 1e-12);
    }
}
