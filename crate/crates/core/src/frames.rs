//! Frame lookup from a lemma→frame lexicon and the common-frame overlap
//! measure.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use crate::error::{Error, Result};
use crate::preprocess::TextView;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FrameLexicon {
    pub evokes: BTreeMap<String, BTreeSet<String>>,
}

impl FrameLexicon {
    pub fn insert(&mut self, lemma: &str, frame: &str) {
        self.evokes
            .entry(lemma.to_lowercase())
            .or_default()
            .insert(frame.to_string());
    }
}

/// Reads `lemma<TAB>frame` rows; repeated rows collapse.
pub fn load_frame_lexicon(path: impl AsRef<Path>) -> Result<FrameLexicon> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_frame_lexicon(BufReader::new(file), &path.display().to_string())
}

pub fn parse_frame_lexicon<R: BufRead>(reader: R, name: &str) -> Result<FrameLexicon> {
    let mut lex = FrameLexicon::default();
    for (idx, line) in reader.lines().enumerate() {
        let no = idx + 1;
        let line = line.map_err(|e| Error::io(name, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').map(str::trim).collect();
        if cols.len() != 2 {
            return Err(Error::parse(name, no, "expected 2 columns"));
        }
        if cols[0].is_empty() || cols[1].is_empty() {
            return Err(Error::parse(name, no, "blank lemma or frame"));
        }
        lex.insert(cols[0], cols[1]);
    }
    Ok(lex)
}

/// Frame → lemmas of the view evoking it.
pub fn extract_frames(view: &TextView, lex: &FrameLexicon) -> BTreeMap<String, BTreeSet<String>> {
    let mut out: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for lemma in &view.lemmas {
        if let Some(frames) = lex.evokes.get(lemma) {
            for f in frames {
                out.entry(f.clone()).or_default().insert(lemma.clone());
            }
        }
    }
    out
}

/// Over the shared frames F: Σ|E_f(a) ∩ E_f(b)| / Σ|E_f(a) ∪ E_f(b)|.
pub fn frame_overlap_similarity(a: &TextView, b: &TextView, lex: &FrameLexicon) -> f64 {
    let fa = extract_frames(a, lex);
    let fb = extract_frames(b, lex);
    let mut common = 0usize;
    let mut union = 0usize;
    for (frame, ea) in &fa {
        if let Some(eb) = fb.get(frame) {
            common += ea.intersection(eb).count();
            union += ea.union(eb).count();
        }
    }
    if union == 0 {
        0.0
    } else {
        common as f64 / union as f64
    }
}
