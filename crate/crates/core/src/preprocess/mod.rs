//! Tokenization, stopword removal, table lemmatization, stemming and
//! lexicon-based noun tagging.
//!
//! Two renderings of each text field are produced: a stemmed view feeding
//! the lexical measures and an unstemmed view feeding the embedding, graph
//! and frame measures. Stopwords are removed from both.

mod porter;

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use crate::error::{Error, Result};

pub use porter::porter_stem;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    Stemmed,
    Unstemmed,
}

/// A preprocessed text field.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TextView {
    /// Final token forms: lemmas, stemmed when `stemmed` is set.
    pub tokens: Vec<String>,
    /// Lemmas, parallel to `tokens`.
    pub lemmas: Vec<String>,
    pub stemmed: bool,
    pub stopwords_removed: bool,
}

impl TextView {
    /// Builds a view whose tokens double as lemmas.
    pub fn from_tokens<S: AsRef<str>>(tokens: &[S], stemmed: bool) -> Self {
        let tokens: Vec<String> = tokens.iter().map(|t| t.as_ref().to_string()).collect();
        TextView {
            lemmas: tokens.clone(),
            tokens,
            stemmed,
            stopwords_removed: true,
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

#[derive(Debug, Clone, Default)]
pub struct LexResources {
    pub stopwords: HashSet<String>,
    pub lemma_table: HashMap<String, String>,
    pub noun_lexicon: HashSet<String>,
}

impl LexResources {
    pub fn load(
        stopwords: impl AsRef<Path>,
        lemma_table: impl AsRef<Path>,
        noun_lexicon: impl AsRef<Path>,
    ) -> Result<Self> {
        Ok(LexResources {
            stopwords: read_word_list(stopwords.as_ref())?,
            lemma_table: read_lemma_table(lemma_table.as_ref())?,
            noun_lexicon: read_word_list(noun_lexicon.as_ref())?,
        })
    }
}

fn open_lines(path: &Path) -> Result<impl Iterator<Item = (usize, Result<String>)>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let owned = path.to_path_buf();
    Ok(BufReader::new(file)
        .lines()
        .enumerate()
        .map(move |(i, l)| (i + 1, l.map_err(|e| Error::io(&owned, e)))))
}

fn read_word_list(path: &Path) -> Result<HashSet<String>> {
    let mut out = HashSet::new();
    for (_, line) in open_lines(path)? {
        let line = line?;
        let w = line.trim();
        if !w.is_empty() {
            out.insert(w.to_lowercase());
        }
    }
    Ok(out)
}

fn read_lemma_table(path: &Path) -> Result<HashMap<String, String>> {
    let mut out = HashMap::new();
    let name = path.display().to_string();
    for (no, line) in open_lines(path)? {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 2 || cols[0].trim().is_empty() || cols[1].trim().is_empty() {
            return Err(Error::parse(&name, no, "expected token<TAB>lemma"));
        }
        out.insert(cols[0].trim().to_lowercase(), cols[1].trim().to_lowercase());
    }
    Ok(out)
}

fn is_apostrophe(c: char) -> bool {
    c == '\'' || c == '\u{2019}'
}

/// Lowercases and splits on everything except letters, digits and
/// apostrophes. Apostrophes at the edge of a token are dropped.
pub fn tokenize(raw: &str) -> Vec<String> {
    let lower = raw.to_lowercase();
    lower
        .split(|c: char| !(c.is_alphanumeric() || is_apostrophe(c)))
        .map(|t| t.trim_matches(is_apostrophe))
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

/// tokenize → stopword removal → lemma lookup → optional Porter stemming.
pub fn build_views(raw: &str, res: &LexResources, variant: Variant) -> TextView {
    let mut tokens = Vec::new();
    let mut lemmas = Vec::new();
    for tok in tokenize(raw) {
        if res.stopwords.contains(&tok) {
            continue;
        }
        let lemma = res.lemma_table.get(&tok).cloned().unwrap_or(tok);
        let form = match variant {
            Variant::Stemmed => porter_stem(&lemma),
            Variant::Unstemmed => lemma.clone(),
        };
        tokens.push(form);
        lemmas.push(lemma);
    }
    TextView {
        tokens,
        lemmas,
        stemmed: variant == Variant::Stemmed,
        stopwords_removed: true,
    }
}

/// Lemmas of the view that the noun lexicon lists.
pub fn tag_nouns(view: &TextView, res: &LexResources) -> BTreeSet<String> {
    view.lemmas
        .iter()
        .filter(|l| res.noun_lexicon.contains(*l))
        .cloned()
        .collect()
}
