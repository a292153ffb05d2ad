//! Per-instance similarity feature vectors and z-score normalization.
//!
//! Every (query field, candidate field) pair of a subtask is scored by each
//! enabled measure, giving features named `<measure>:<query>~<candidate>`,
//! e.g. `cos_word:relq.subject~comment`. Subtasks A and C add a
//! `search_rank` feature (reciprocal rank of the related question, 0 when
//! unknown).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Write;

use rayon::prelude::*;

use crate::corpus::{thread_instances, Instance, Subtask, Thread};
use crate::embeddings::{
    centroid_similarity, cwasa_similarity, CentroidMapping, CwasaDenominator, VectorStore,
};
use crate::error::{Error, Result};
use crate::frames::{frame_overlap_similarity, FrameLexicon};
use crate::knowledge_graph::{build_graph, kga_similarity, KnowledgeGraph, SemanticNetwork};
use crate::lexical::{
    build_idf, cosine_char_3grams, cosine_tfidf, cosine_word_ngram_range, ngram_overlap_range,
    noun_overlap, word_overlap, IdfTable,
};
use crate::preprocess::{build_views, LexResources, TextView, Variant};

pub const SEARCH_RANK: &str = "search_rank";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Measure {
    /// Cosine over pooled word 1- and 2-grams.
    CosWord,
    CosChar3,
    CosTfidf,
    WordOverlap,
    NounOverlap,
    /// Overlap of pooled word 1-, 2- and 3-grams.
    NgramOverlap,
    Centroid,
    Cwasa,
    Kga,
    Frames,
}

impl Measure {
    pub const ALL: [Measure; 10] = [
        Measure::CosWord,
        Measure::CosChar3,
        Measure::CosTfidf,
        Measure::WordOverlap,
        Measure::NounOverlap,
        Measure::NgramOverlap,
        Measure::Centroid,
        Measure::Cwasa,
        Measure::Kga,
        Measure::Frames,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Measure::CosWord => "cos_word",
            Measure::CosChar3 => "cos_char3",
            Measure::CosTfidf => "cos_tfidf",
            Measure::WordOverlap => "word_ovl",
            Measure::NounOverlap => "noun_ovl",
            Measure::NgramOverlap => "ngram_ovl",
            Measure::Centroid => "centroid",
            Measure::Cwasa => "cwasa",
            Measure::Kga => "kga",
            Measure::Frames => "frames",
        }
    }

    pub fn from_name(name: &str) -> Option<Measure> {
        Measure::ALL.into_iter().find(|m| m.name() == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    OrgQ,
    RelQ,
    Comment,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    Subject,
    Body,
    Full,
}

const LEVELS: [Level; 3] = [Level::Subject, Level::Body, Level::Full];

/// A text field of a question (at some level) or a comment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Field {
    pub source: Source,
    pub level: Option<Level>,
}

impl Field {
    fn question(source: Source, level: Level) -> Self {
        Field {
            source,
            level: Some(level),
        }
    }

    const COMMENT: Field = Field {
        source: Source::Comment,
        level: None,
    };
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let src = match self.source {
            Source::OrgQ => "orgq",
            Source::RelQ => "relq",
            Source::Comment => "comment",
        };
        match self.level {
            None => f.write_str(src),
            Some(Level::Subject) => write!(f, "{src}.subject"),
            Some(Level::Body) => write!(f, "{src}.body"),
            Some(Level::Full) => write!(f, "{src}.full"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FieldPair {
    pub query: Field,
    pub candidate: Field,
}

impl fmt::Display for FieldPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}~{}", self.query, self.candidate)
    }
}

pub fn field_pairs_for_subtask(subtask: Subtask) -> Vec<FieldPair> {
    let question_vs_comment = |src: Source| {
        LEVELS.map(|l| FieldPair {
            query: Field::question(src, l),
            candidate: Field::COMMENT,
        })
    };
    let orgq_vs_relq = LEVELS.map(|l| FieldPair {
        query: Field::question(Source::OrgQ, l),
        candidate: Field::question(Source::RelQ, l),
    });
    match subtask {
        Subtask::A => question_vs_comment(Source::RelQ).to_vec(),
        Subtask::B => orgq_vs_relq.to_vec(),
        Subtask::C => {
            let mut pairs = question_vs_comment(Source::RelQ).to_vec();
            pairs.extend(orgq_vs_relq);
            pairs.extend(question_vs_comment(Source::OrgQ));
            pairs
        }
    }
}

/// Measure switches and hyperparameters of the feature extractor.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSettings {
    pub enabled: BTreeSet<Measure>,
    pub kg_depth: usize,
    pub kg_decay: f64,
    pub cwasa_denominator: CwasaDenominator,
    pub centroid_mapping: CentroidMapping,
    pub ngram_multiset: bool,
}

impl Default for FeatureSettings {
    fn default() -> Self {
        FeatureSettings {
            enabled: Measure::ALL.into_iter().collect(),
            kg_depth: 2,
            kg_decay: 0.5,
            cwasa_denominator: CwasaDenominator::Invocab,
            centroid_mapping: CentroidMapping::Clip,
            ngram_multiset: false,
        }
    }
}

/// Everything the extractor reads besides the corpus itself.
#[derive(Debug, Clone, Default)]
pub struct Resources {
    pub lex: LexResources,
    pub vectors: VectorStore,
    pub network: SemanticNetwork,
    pub frames: FrameLexicon,
    pub settings: FeatureSettings,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub instance: Instance,
    pub values: BTreeMap<String, f64>,
}

/// Both views of one text field, plus its knowledge graph when needed.
#[derive(Debug, Clone)]
pub struct PreparedField {
    pub stemmed: TextView,
    pub unstemmed: TextView,
    pub graph: Option<KnowledgeGraph>,
}

impl PreparedField {
    pub fn new(raw: &str, res: &Resources) -> Self {
        let unstemmed = build_views(raw, &res.lex, Variant::Unstemmed);
        let graph = res.settings.enabled.contains(&Measure::Kga).then(|| {
            build_graph(
                &unstemmed,
                &res.network,
                res.settings.kg_depth,
                res.settings.kg_decay,
            )
        });
        PreparedField {
            stemmed: build_views(raw, &res.lex, Variant::Stemmed),
            unstemmed,
            graph,
        }
    }
}

struct PreparedQuestion {
    fields: [PreparedField; 3],
}

impl PreparedQuestion {
    fn new(subject: &str, body: &str, res: &Resources) -> Self {
        let full = format!("{subject} {body}");
        PreparedQuestion {
            fields: [
                PreparedField::new(subject, res),
                PreparedField::new(body, res),
                PreparedField::new(&full, res),
            ],
        }
    }

    fn get(&self, level: Level) -> &PreparedField {
        match level {
            Level::Subject => &self.fields[0],
            Level::Body => &self.fields[1],
            Level::Full => &self.fields[2],
        }
    }
}

/// Scores one field pair with one measure.
pub fn measure_value(
    measure: Measure,
    q: &PreparedField,
    c: &PreparedField,
    res: &Resources,
    idf: &IdfTable,
) -> f64 {
    let s = &res.settings;
    match measure {
        Measure::CosWord => cosine_word_ngram_range(&q.stemmed, &c.stemmed, 1, 2),
        Measure::CosChar3 => cosine_char_3grams(&q.stemmed, &c.stemmed),
        Measure::CosTfidf => cosine_tfidf(&q.stemmed, &c.stemmed, idf),
        Measure::WordOverlap => word_overlap(&q.stemmed, &c.stemmed),
        Measure::NounOverlap => noun_overlap(&q.stemmed, &c.stemmed, &res.lex),
        Measure::NgramOverlap => {
            ngram_overlap_range(&q.stemmed, &c.stemmed, 1, 3, s.ngram_multiset)
        }
        Measure::Centroid => {
            centroid_similarity(&q.unstemmed, &c.unstemmed, &res.vectors, s.centroid_mapping)
        }
        Measure::Cwasa => cwasa_similarity(
            &q.unstemmed,
            &c.unstemmed,
            &res.vectors,
            s.cwasa_denominator,
        ),
        Measure::Kga => match (&q.graph, &c.graph) {
            (Some(a), Some(b)) => kga_similarity(a, b),
            _ => kga_similarity(
                &build_graph(&q.unstemmed, &res.network, s.kg_depth, s.kg_decay),
                &build_graph(&c.unstemmed, &res.network, s.kg_depth, s.kg_decay),
            ),
        },
        Measure::Frames => frame_overlap_similarity(&q.unstemmed, &c.unstemmed, &res.frames),
    }
}

/// Builds the idf table from every text field of a corpus, stemmed.
pub fn corpus_idf(threads: &[Thread], res: &Resources) -> Result<IdfTable> {
    let stem = |raw: &str| build_views(raw, &res.lex, Variant::Stemmed);
    let mut docs = Vec::new();
    for t in threads {
        docs.push(stem(&t.subject));
        docs.push(stem(&t.body));
        for r in &t.related {
            docs.push(stem(&r.subject));
            docs.push(stem(&r.body));
            docs.extend(r.comments.iter().map(|c| stem(&c.text)));
        }
    }
    build_idf(&docs)
}

/// Feature extraction bound to a resource bundle and an idf table.
#[derive(Clone, Copy)]
pub struct Extractor<'a> {
    pub resources: &'a Resources,
    pub idf: &'a IdfTable,
}

impl<'a> Extractor<'a> {
    pub fn new(resources: &'a Resources, idf: &'a IdfTable) -> Self {
        Extractor { resources, idf }
    }

    /// Feature names produced for every instance of `subtask`, sorted.
    pub fn feature_names(&self, subtask: Subtask) -> Vec<String> {
        let mut names: Vec<String> = field_pairs_for_subtask(subtask)
            .iter()
            .flat_map(|p| {
                self.enabled()
                    .map(move |m| format!("{}:{}", m.name(), p))
                    .collect::<Vec<_>>()
            })
            .collect();
        if subtask.has_search_rank() {
            names.push(SEARCH_RANK.to_string());
        }
        names.sort();
        names
    }

    fn enabled(&self) -> impl Iterator<Item = Measure> + '_ {
        self.resources.settings.enabled.iter().copied()
    }

    /// Feature vectors for all instances of one thread, in instance order.
    pub fn extract_thread(&self, thread: &Thread, subtask: Subtask) -> Vec<FeatureVector> {
        let res = self.resources;
        let insts = thread_instances(thread, subtask);
        if insts.is_empty() {
            return Vec::new();
        }
        let orgq = matches!(subtask, Subtask::B | Subtask::C)
            .then(|| PreparedQuestion::new(&thread.subject, &thread.body, res));
        let related: Vec<PreparedQuestion> = thread
            .related
            .iter()
            .map(|r| PreparedQuestion::new(&r.subject, &r.body, res))
            .collect();
        let pairs = field_pairs_for_subtask(subtask);
        insts
            .into_iter()
            .map(|(instance, slot)| {
                let rel = &thread.related[slot.related];
                let comment = slot
                    .comment
                    .map(|ci| PreparedField::new(&rel.comments[ci].text, res));
                let lookup = |field: Field| -> &PreparedField {
                    match (field.source, field.level) {
                        (Source::OrgQ, Some(l)) => orgq.as_ref().expect("orgq prepared").get(l),
                        (Source::RelQ, Some(l)) => related[slot.related].get(l),
                        _ => comment.as_ref().expect("comment prepared"),
                    }
                };
                let mut values = BTreeMap::new();
                for pair in &pairs {
                    let (q, c) = (lookup(pair.query), lookup(pair.candidate));
                    for m in self.enabled() {
                        values.insert(
                            format!("{}:{}", m.name(), pair),
                            measure_value(m, q, c, res, self.idf),
                        );
                    }
                }
                if subtask.has_search_rank() {
                    let rank = rel.search_rank.map_or(0.0, |r| 1.0 / r as f64);
                    values.insert(SEARCH_RANK.to_string(), rank);
                }
                FeatureVector { instance, values }
            })
            .collect()
    }

    /// Feature vectors for a whole corpus, in instance order. `jobs` worker
    /// threads share the work; the output does not depend on `jobs`.
    pub fn extract_corpus(
        &self,
        threads: &[Thread],
        subtask: Subtask,
        jobs: usize,
    ) -> Result<Vec<FeatureVector>> {
        crate::corpus::instances(threads, subtask)?;
        let run = || -> Vec<FeatureVector> {
            threads
                .par_iter()
                .map(|t| self.extract_thread(t, subtask))
                .collect::<Vec<_>>()
                .into_iter()
                .flatten()
                .collect()
        };
        if jobs <= 1 {
            return Ok(threads
                .iter()
                .flat_map(|t| self.extract_thread(t, subtask))
                .collect());
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::Config(e.to_string()))?;
        Ok(pool.install(run))
    }

    /// Features of a single instance, looked up by ids.
    pub fn extract_features(
        &self,
        threads: &[Thread],
        query_id: &str,
        candidate_id: &str,
        subtask: Subtask,
    ) -> Result<FeatureVector> {
        for thread in threads {
            let hit = thread_instances(thread, subtask)
                .iter()
                .any(|(i, _)| i.query_id == query_id && i.candidate_id == candidate_id);
            if hit {
                return Ok(self
                    .extract_thread(thread, subtask)
                    .into_iter()
                    .find(|v| {
                        v.instance.query_id == query_id && v.instance.candidate_id == candidate_id
                    })
                    .expect("instance present"));
            }
        }
        let known_query = threads.iter().any(|t| {
            thread_instances(t, subtask)
                .iter()
                .any(|(i, _)| i.query_id == query_id)
        });
        Err(Error::UnknownId(if known_query {
            candidate_id.to_string()
        } else {
            query_id.to_string()
        }))
    }
}

/// Canonical feature order with training-set statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSchema {
    pub names: Vec<String>,
    pub means: Vec<f64>,
    pub stddevs: Vec<f64>,
}

impl FeatureSchema {
    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    /// Fails unless `names` is exactly this schema's name set.
    pub fn check_names<'n, I: IntoIterator<Item = &'n String>>(&self, names: I) -> Result<()> {
        let have: BTreeSet<&String> = names.into_iter().collect();
        let want: BTreeSet<&String> = self.names.iter().collect();
        if have == want {
            return Ok(());
        }
        let diff: Vec<&str> = have
            .symmetric_difference(&want)
            .take(5)
            .map(|s| s.as_str())
            .collect();
        Err(Error::SchemaMismatch(diff.join(", ")))
    }
}

/// Lexicographic name order, population mean and standard deviation.
pub fn fit_schema(train: &[FeatureVector]) -> Result<FeatureSchema> {
    let first = train
        .first()
        .ok_or_else(|| Error::Invalid("empty training set".into()))?;
    let names: Vec<String> = first.values.keys().cloned().collect();
    let reference: BTreeSet<&String> = names.iter().collect();
    for v in &train[1..] {
        let keys: BTreeSet<&String> = v.values.keys().collect();
        if keys != reference {
            let diff: Vec<&str> = keys
                .symmetric_difference(&reference)
                .map(|s| s.as_str())
                .collect();
            return Err(Error::InconsistentFeatures(diff.join(", ")));
        }
    }
    let n = train.len() as f64;
    let mut means = Vec::with_capacity(names.len());
    let mut stddevs = Vec::with_capacity(names.len());
    for name in &names {
        let mean = train.iter().map(|v| v.values[name]).sum::<f64>() / n;
        let var = train
            .iter()
            .map(|v| (v.values[name] - mean).powi(2))
            .sum::<f64>()
            / n;
        means.push(mean);
        stddevs.push(var.sqrt());
    }
    Ok(FeatureSchema {
        names,
        means,
        stddevs,
    })
}

/// Z-scores in schema order. Features unknown to the schema are ignored and
/// schema features absent from `values` count as raw 0.
pub fn normalize_values(values: &BTreeMap<String, f64>, schema: &FeatureSchema) -> Vec<f64> {
    schema
        .names
        .iter()
        .zip(schema.means.iter().zip(&schema.stddevs))
        .map(|(name, (mean, sd))| {
            let x = values.get(name).copied().unwrap_or(0.0);
            if *sd == 0.0 {
                0.0
            } else {
                (x - mean) / sd
            }
        })
        .collect()
}

pub fn normalize(v: &FeatureVector, schema: &FeatureSchema) -> Vec<f64> {
    normalize_values(&v.values, schema)
}

/// `query_id<TAB>candidate_id<TAB>feature<TAB>value`, one line per feature.
pub fn write_feature_dump<W: Write>(vectors: &[FeatureVector], mut out: W) -> Result<()> {
    for v in vectors {
        for (name, value) in &v.values {
            writeln!(
                out,
                "{}\t{}\t{}\t{}",
                v.instance.query_id, v.instance.candidate_id, name, value
            )
            .map_err(|e| Error::io("<features>", e))?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Comment, RelatedQuestion};

    fn fv(pairs: &[(&str, f64)]) -> FeatureVector {
        FeatureVector {
            instance: Instance {
                query_id: "q".into(),
                candidate_id: "c".into(),
                subtask: Subtask::B,
                gold_label: None,
            },
            values: pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        }
    }

    fn thread() -> Thread {
        Thread {
            id: "Q1".into(),
            subject: "visa renewal".into(),
            body: "how do I renew my visa".into(),
            related: vec![RelatedQuestion {
                id: "Q1_R1".into(),
                subject: "renew visa".into(),
                body: "visa renewal process".into(),
                relevance_to_orgq: None,
                search_rank: Some(4),
                comments: vec![Comment {
                    id: "Q1_R1_C1".into(),
                    text: "go to the office".into(),
                    relevance_to_relq: None,
                    relevance_to_orgq: None,
                }],
            }],
        }
    }

    #[test]
    fn field_pair_counts() {
        assert_eq!(field_pairs_for_subtask(Subtask::A).len(), 3);
        assert_eq!(field_pairs_for_subtask(Subtask::B).len(), 3);
        let c = field_pairs_for_subtask(Subtask::C);
        assert_eq!(c.len(), 9);
        let names: Vec<String> = c.iter().map(|p| p.to_string()).collect();
        assert!(names.contains(&"relq.subject~comment".to_string()));
        assert!(names.contains(&"orgq.body~relq.body".to_string()));
        assert!(names.contains(&"orgq.full~comment".to_string()));
    }

    #[test]
    fn feature_counts_per_subtask() {
        let res = Resources::default();
        let t = vec![thread()];
        let idf = corpus_idf(&t, &res).unwrap();
        let ext = Extractor::new(&res, &idf);
        for (subtask, count) in [(Subtask::A, 31), (Subtask::B, 30), (Subtask::C, 91)] {
            let vs = ext.extract_corpus(&t, subtask, 1).unwrap();
            assert!(!vs.is_empty());
            for v in &vs {
                assert_eq!(v.values.len(), count, "{subtask}");
                assert!(v.values.values().all(|x| x.is_finite()));
            }
            assert_eq!(ext.feature_names(subtask).len(), count);
        }
        let a = ext.extract_corpus(&t, Subtask::A, 1).unwrap();
        assert_eq!(a[0].values[SEARCH_RANK], 0.25);
    }

    #[test]
    fn absent_rank_is_zero() {
        let res = Resources::default();
        let mut t = thread();
        t.related[0].search_rank = None;
        let idf = corpus_idf(std::slice::from_ref(&t), &res).unwrap();
        let v = Extractor::new(&res, &idf)
            .extract_corpus(&[t], Subtask::C, 1)
            .unwrap();
        assert_eq!(v[0].values[SEARCH_RANK], 0.0);
    }

    #[test]
    fn disabling_a_measure_shrinks_vectors() {
        let mut res = Resources::default();
        res.settings.enabled.remove(&Measure::Frames);
        let t = vec![thread()];
        let idf = corpus_idf(&t, &res).unwrap();
        let ext = Extractor::new(&res, &idf);
        let v = ext.extract_corpus(&t, Subtask::B, 1).unwrap();
        assert_eq!(v[0].values.len(), 27);
        assert_eq!(
            ext.feature_names(Subtask::B),
            v[0].values.keys().cloned().collect::<Vec<_>>()
        );
    }

    #[test]
    fn single_instance_lookup() {
        let res = Resources::default();
        let t = vec![thread()];
        let idf = corpus_idf(&t, &res).unwrap();
        let ext = Extractor::new(&res, &idf);
        let v = ext.extract_features(&t, "Q1", "Q1_R1", Subtask::B).unwrap();
        assert_eq!(v.values.len(), 30);
        match ext
            .extract_features(&t, "Q1", "nope", Subtask::B)
            .unwrap_err()
        {
            Error::UnknownId(id) => assert_eq!(id, "nope"),
            e => panic!("{e}"),
        }
        match ext
            .extract_features(&t, "Q9", "Q1_R1", Subtask::B)
            .unwrap_err()
        {
            Error::UnknownId(id) => assert_eq!(id, "Q9"),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn fit_schema_examples() {
        let s = fit_schema(&[fv(&[("f", 0.0)]), fv(&[("f", 2.0)])]).unwrap();
        assert_eq!(s.means, vec![1.0]);
        assert_eq!(s.stddevs, vec![1.0]);
        let s = fit_schema(&[fv(&[("a", 3.0), ("b", 1.0)])]).unwrap();
        assert_eq!(s.stddevs, vec![0.0, 0.0]);
        let err = fit_schema(&[fv(&[("a", 1.0)]), fv(&[("b", 1.0)])]).unwrap_err();
        assert!(
            err.to_string().contains('a') && err.to_string().contains('b'),
            "{err}"
        );
    }

    #[test]
    fn normalize_examples() {
        let schema = FeatureSchema {
            names: vec!["a".into(), "b".into(), "c".into()],
            means: vec![1.0, 2.0, 5.0],
            stddevs: vec![2.0, 0.0, 1.0],
        };
        let v = fv(&[("a", 1.0), ("b", 7.0), ("extra", 9.0)]);
        assert_eq!(normalize(&v, &schema), vec![0.0, 0.0, -5.0]);
        let v = fv(&[("a", 3.0), ("b", 2.0), ("c", 5.0)]);
        assert_eq!(normalize(&v, &schema), vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn normalized_training_set_is_standardized() {
        let train: Vec<FeatureVector> = (0..37)
            .map(|i| {
                let x = i as f64;
                fv(&[
                    ("a", (x * 0.37).sin() * 4.0 + 2.0),
                    ("b", x * x),
                    ("k", 3.0),
                ])
            })
            .collect();
        let schema = fit_schema(&train).unwrap();
        let rows: Vec<Vec<f64>> = train.iter().map(|v| normalize(v, &schema)).collect();
        for j in 0..2 {
            let n = rows.len() as f64;
            let mean = rows.iter().map(|r| r[j]).sum::<f64>() / n;
            let sd = (rows.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / n).sqrt();
            assert!(mean.abs() < 1e-9 && (sd - 1.0).abs() < 1e-9);
        }
        assert!(rows.iter().all(|r| r[2] == 0.0));
    }

    #[test]
    fn dump_format() {
        let mut buf = Vec::new();
        write_feature_dump(&[fv(&[("f", 0.5)])], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "q\tc\tf\t0.5\n");
    }
}
