//! TOML run configuration. Relative paths resolve against the directory of
//! the config file.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::embeddings::{load_vectors, CentroidMapping, CwasaDenominator};
use crate::error::{Error, Result};
use crate::features::{FeatureSettings, Measure, Resources};
use crate::frames::load_frame_lexicon;
use crate::knowledge_graph::{load_network, MAX_DEPTH};
use crate::preprocess::LexResources;
use crate::ranker::{ThresholdMetric, TrainOptions};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    cwasa_denominator: CwasaDenominator,
    resources: RawResources,
    embeddings: RawEmbeddings,
    kg: RawKg,
    frames: RawFrames,
    #[serde(default)]
    ranker: RawRanker,
    #[serde(default)]
    measures: RawMeasures,
    #[serde(default)]
    lexical: RawLexical,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawResources {
    stopwords: PathBuf,
    lemmas: PathBuf,
    nouns: PathBuf,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEmbeddings {
    path: PathBuf,
    #[serde(default)]
    centroid_mapping: CentroidMapping,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawKg {
    edges_path: PathBuf,
    senses_path: PathBuf,
    #[serde(default = "default_depth")]
    depth: usize,
    #[serde(default = "default_decay")]
    decay: f64,
}

fn default_depth() -> usize {
    2
}

fn default_decay() -> f64 {
    0.5
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFrames {
    lexicon_path: PathBuf,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawRanker {
    grid: Option<Vec<f64>>,
    epochs: usize,
    seed: u64,
    threshold_metric: ThresholdMetric,
}

impl Default for RawRanker {
    fn default() -> Self {
        let opts = TrainOptions::default();
        RawRanker {
            grid: None,
            epochs: opts.epochs,
            seed: opts.seed,
            threshold_metric: ThresholdMetric::F1,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawMeasures {
    cos_word: bool,
    cos_char3: bool,
    cos_tfidf: bool,
    word_ovl: bool,
    noun_ovl: bool,
    ngram_ovl: bool,
    centroid: bool,
    cwasa: bool,
    kga: bool,
    frames: bool,
}

impl Default for RawMeasures {
    fn default() -> Self {
        RawMeasures {
            cos_word: true,
            cos_char3: true,
            cos_tfidf: true,
            word_ovl: true,
            noun_ovl: true,
            ngram_ovl: true,
            centroid: true,
            cwasa: true,
            kga: true,
            frames: true,
        }
    }
}

impl RawMeasures {
    fn enabled(&self) -> BTreeSet<Measure> {
        [
            (Measure::CosWord, self.cos_word),
            (Measure::CosChar3, self.cos_char3),
            (Measure::CosTfidf, self.cos_tfidf),
            (Measure::WordOverlap, self.word_ovl),
            (Measure::NounOverlap, self.noun_ovl),
            (Measure::NgramOverlap, self.ngram_ovl),
            (Measure::Centroid, self.centroid),
            (Measure::Cwasa, self.cwasa),
            (Measure::Kga, self.kga),
            (Measure::Frames, self.frames),
        ]
        .into_iter()
        .filter_map(|(m, on)| on.then_some(m))
        .collect()
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLexical {
    #[serde(default)]
    ngram_multiset: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResourcePaths {
    pub stopwords: PathBuf,
    pub lemmas: PathBuf,
    pub nouns: PathBuf,
    pub embeddings: PathBuf,
    pub kg_edges: PathBuf,
    pub kg_senses: PathBuf,
    pub frame_lexicon: PathBuf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankerConfig {
    pub grid: Vec<f64>,
    pub train: TrainOptions,
    pub threshold_metric: ThresholdMetric,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub paths: ResourcePaths,
    pub features: FeatureSettings,
    pub ranker: RankerConfig,
}

/// 2^-8 .. 2^8.
pub fn default_grid() -> Vec<f64> {
    (-8..=8).map(|k| 2f64.powi(k)).collect()
}

impl Config {
    pub fn load(path: impl AsRef<Path>) -> Result<Config> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or_else(|| Path::new(""));
        Config::parse(&text, base)
    }

    pub fn parse(text: &str, base: &Path) -> Result<Config> {
        let raw: RawConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        let resolve = |p: &Path| -> Result<PathBuf> {
            let full = if p.is_absolute() {
                p.to_path_buf()
            } else {
                base.join(p)
            };
            if full.is_file() {
                Ok(full)
            } else {
                Err(Error::MissingResource(full))
            }
        };
        let paths = ResourcePaths {
            stopwords: resolve(&raw.resources.stopwords)?,
            lemmas: resolve(&raw.resources.lemmas)?,
            nouns: resolve(&raw.resources.nouns)?,
            embeddings: resolve(&raw.embeddings.path)?,
            kg_edges: resolve(&raw.kg.edges_path)?,
            kg_senses: resolve(&raw.kg.senses_path)?,
            frame_lexicon: resolve(&raw.frames.lexicon_path)?,
        };
        if raw.kg.depth > MAX_DEPTH {
            return Err(Error::Config(format!(
                "kg.depth must be at most {MAX_DEPTH}"
            )));
        }
        if !(raw.kg.decay > 0.0 && raw.kg.decay <= 1.0) {
            return Err(Error::Config("kg.decay must be in (0, 1]".into()));
        }
        if raw.ranker.epochs == 0 {
            return Err(Error::Config("ranker.epochs must be positive".into()));
        }
        let grid = raw.ranker.grid.unwrap_or_else(default_grid);
        if grid.is_empty() || grid.iter().any(|c| !(c.is_finite() && *c > 0.0)) {
            return Err(Error::Config("ranker.grid must hold positive costs".into()));
        }
        let enabled = raw.measures.enabled();
        if enabled.is_empty() {
            return Err(Error::Config("no similarity measure enabled".into()));
        }
        Ok(Config {
            paths,
            features: FeatureSettings {
                enabled,
                kg_depth: raw.kg.depth,
                kg_decay: raw.kg.decay,
                cwasa_denominator: raw.cwasa_denominator,
                centroid_mapping: raw.embeddings.centroid_mapping,
                ngram_multiset: raw.lexical.ngram_multiset,
            },
            ranker: RankerConfig {
                grid,
                train: TrainOptions {
                    epochs: raw.ranker.epochs,
                    seed: raw.ranker.seed,
                },
                threshold_metric: raw.ranker.threshold_metric,
            },
        })
    }

    /// Reads every resource file.
    pub fn load_resources(&self) -> Result<Resources> {
        let p = &self.paths;
        Ok(Resources {
            lex: LexResources::load(&p.stopwords, &p.lemmas, &p.nouns)?,
            vectors: load_vectors(&p.embeddings)?,
            network: load_network(&p.kg_edges, &p.kg_senses)?,
            frames: load_frame_lexicon(&p.frame_lexicon)?,
            settings: self.features.clone(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture() -> tempfile::TempDir {
        let dir = tempfile::tempdir().unwrap();
        for f in [
            "stop.txt",
            "lemmas.tsv",
            "nouns.txt",
            "vec.txt",
            "edges.tsv",
            "senses.tsv",
            "frames.tsv",
        ] {
            fs::write(dir.path().join(f), "").unwrap();
        }
        dir
    }

    const BASE: &str = r#"
[resources]
stopwords = "stop.txt"
lemmas = "lemmas.tsv"
nouns = "nouns.txt"
[embeddings]
path = "vec.txt"
[kg]
edges_path = "edges.tsv"
senses_path = "senses.tsv"
[frames]
lexicon_path = "frames.tsv"
"#;

    #[test]
    fn defaults() {
        let dir = fixture();
        let c = Config::parse(BASE, dir.path()).unwrap();
        assert_eq!(c.ranker.grid.len(), 17);
        assert_eq!(c.ranker.train, TrainOptions::default());
        assert_eq!(c.features, FeatureSettings::default());
        assert_eq!(c.paths.embeddings, dir.path().join("vec.txt"));
    }

    #[test]
    fn overrides() {
        let dir = fixture();
        let text = format!(
            "cwasa_denominator = \"all\"\n{}[ranker]\ngrid = [0.5, 2.0]\nepochs = 5\nseed = 9\nthreshold_metric = \"accuracy\"\n[measures]\nkga = false\n",
            BASE.replace("[frames]", "depth = 1\n[frames]")
        );
        let c = Config::parse(&text, dir.path()).unwrap();
        assert_eq!(c.features.kg_depth, 1);
        assert_eq!(c.features.cwasa_denominator, CwasaDenominator::All);
        assert_eq!(c.ranker.grid, vec![0.5, 2.0]);
        assert_eq!(c.ranker.threshold_metric, ThresholdMetric::Accuracy);
        assert_eq!(c.features.enabled.len(), 9);
    }

    #[test]
    fn rejects_bad_values() {
        let dir = fixture();
        let deep = BASE.replace("[frames]", "depth = 4\n[frames]");
        assert!(matches!(
            Config::parse(&deep, dir.path()),
            Err(Error::Config(_))
        ));
        let decay = BASE.replace("[frames]", "decay = 0.0\n[frames]");
        assert!(matches!(
            Config::parse(&decay, dir.path()),
            Err(Error::Config(_))
        ));
        let typo = format!("{BASE}[ranker]\nepoch = 3\n");
        assert!(matches!(
            Config::parse(&typo, dir.path()),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn missing_file_is_named() {
        let dir = fixture();
        fs::remove_file(dir.path().join("vec.txt")).unwrap();
        let err = Config::parse(BASE, dir.path()).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("vec.txt"), "{err}");
    }
}
