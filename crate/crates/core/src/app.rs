//! The four pipeline stages behind the command-line tool.

use std::collections::HashMap;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use log::info;

use crate::config::Config;
use crate::corpus::{
    binarize_label, export_predictions, grade_label, instances, load_corpus, Prediction, Subtask,
    Thread,
};
use crate::error::{Error, Result};
use crate::evaluation::{evaluate_run, EvalReport};
use crate::features::{
    corpus_idf, fit_schema, normalize, write_feature_dump, Extractor, FeatureSchema, FeatureVector,
};
use crate::ranker::{
    calibrate_threshold, load_model, save_model, tune_cost, Member, QueryGroup, RankModel,
};

/// Names of the written runs, best first.
pub const RUN_NAMES: [&str; 3] = ["primary", "contr1", "contr2"];

#[derive(Debug, Clone, PartialEq)]
pub struct ExtractSummary {
    pub instances: usize,
    pub features: usize,
}

pub fn run_extract(
    config: &Config,
    corpus: &Path,
    subtask: Subtask,
    out: &Path,
    jobs: usize,
) -> Result<ExtractSummary> {
    let resources = config.load_resources()?;
    let threads = load_corpus(corpus)?;
    let vectors = if instances(&threads, subtask)?.is_empty() {
        Vec::new()
    } else {
        let idf = corpus_idf(&threads, &resources)?;
        Extractor::new(&resources, &idf).extract_corpus(&threads, subtask, jobs)?
    };
    let file = File::create(out).map_err(|e| Error::io(out, e))?;
    write_feature_dump(&vectors, BufWriter::new(file))?;
    Ok(ExtractSummary {
        instances: vectors.len(),
        features: vectors.first().map_or(0, |v| v.values.len()),
    })
}

/// Query groups in order of first appearance, normalized by `schema`.
pub fn build_groups(vectors: &[FeatureVector], schema: &FeatureSchema) -> Result<Vec<QueryGroup>> {
    let mut index: HashMap<&str, usize> = HashMap::new();
    let mut groups: Vec<QueryGroup> = Vec::new();
    for v in vectors {
        let label = v
            .instance
            .gold_label
            .ok_or_else(|| Error::Unlabeled(v.instance.candidate_id.clone()))?;
        let gi = *index.entry(&v.instance.query_id).or_insert_with(|| {
            groups.push(QueryGroup {
                query_id: v.instance.query_id.clone(),
                members: Vec::new(),
            });
            groups.len() - 1
        });
        groups[gi].members.push(Member {
            candidate_id: v.instance.candidate_id.clone(),
            features: normalize(v, schema),
            target: grade_label(label),
            relevant: binarize_label(label),
        });
    }
    Ok(groups)
}

fn require_labels(threads: &[Thread], subtask: Subtask) -> Result<()> {
    match instances(threads, subtask)?
        .into_iter()
        .find(|i| i.gold_label.is_none())
    {
        Some(i) => Err(Error::Unlabeled(i.candidate_id)),
        None => Ok(()),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainSummary {
    pub name: &'static str,
    pub path: PathBuf,
    pub cost: f64,
    pub dev_map: f64,
    pub threshold: f64,
}

pub fn model_path(prefix: &Path, run: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(".");
    s.push(run);
    PathBuf::from(s)
}

pub fn run_train(
    config: &Config,
    train: &Path,
    dev: &Path,
    subtask: Subtask,
    out: &Path,
    jobs: usize,
) -> Result<Vec<TrainSummary>> {
    let resources = config.load_resources()?;
    let train_threads = load_corpus(train)?;
    let dev_threads = load_corpus(dev)?;
    require_labels(&train_threads, subtask)?;
    require_labels(&dev_threads, subtask)?;
    if instances(&train_threads, subtask)?.is_empty() {
        return Err(Error::EmptyCorpus);
    }

    let idf = corpus_idf(&train_threads, &resources)?;
    let extractor = Extractor::new(&resources, &idf);
    let train_vecs = extractor.extract_corpus(&train_threads, subtask, jobs)?;
    let dev_vecs = extractor.extract_corpus(&dev_threads, subtask, jobs)?;
    info!(
        "extracted {} train and {} dev instances",
        train_vecs.len(),
        dev_vecs.len()
    );

    let schema = fit_schema(&train_vecs)?;
    let train_groups = build_groups(&train_vecs, &schema)?;
    let dev_groups = build_groups(&dev_vecs, &schema)?;
    let opts = config.ranker.train;
    let runs = tune_cost(&train_groups, &dev_groups, &config.ranker.grid, opts)?;

    let dev_gold: Vec<bool> = dev_groups
        .iter()
        .flat_map(|g| g.members.iter().map(|m| m.relevant))
        .collect();
    let mut out_runs = Vec::with_capacity(runs.len());
    for (run, name) in runs.into_iter().zip(RUN_NAMES) {
        let w = run.trained.weights;
        let dev_scores: Vec<f64> = dev_groups
            .iter()
            .flat_map(|g| g.members.iter())
            .map(|m| crate::ranker::score(&w, &m.features))
            .collect::<Result<_>>()?;
        let cal = calibrate_threshold(&dev_scores, &dev_gold, config.ranker.threshold_metric)?;
        let model = RankModel {
            subtask,
            weights: w,
            schema: schema.clone(),
            cost: run.trained.cost,
            threshold: cal.threshold,
            seed: opts.seed,
            idf: idf.clone(),
        };
        let path = model_path(out, name);
        save_model(&model, &path)?;
        out_runs.push(TrainSummary {
            name,
            path,
            cost: model.cost,
            dev_map: run.dev_map,
            threshold: model.threshold,
        });
    }
    Ok(out_runs)
}

/// Scores a corpus, grouping predictions by query (first appearance) and
/// ordering each group by score descending, ties by candidate id.
pub fn predict(
    model: &RankModel,
    config: &Config,
    threads: &[Thread],
    subtask: Subtask,
    jobs: usize,
) -> Result<Vec<Prediction>> {
    let resources = config.load_resources()?;
    let extractor = Extractor::new(&resources, &model.idf);
    model
        .schema
        .check_names(&extractor.feature_names(subtask))?;
    if model.subtask != subtask {
        return Err(Error::SchemaMismatch(format!(
            "model is for subtask {}, not {subtask}",
            model.subtask
        )));
    }
    let vectors = extractor.extract_corpus(threads, subtask, jobs)?;
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut groups: Vec<Vec<Prediction>> = Vec::new();
    for v in &vectors {
        let s = model.score(&normalize(v, &model.schema))?;
        if !s.is_finite() {
            return Err(Error::NonFiniteScore(v.instance.candidate_id.clone()));
        }
        let gi = *index.entry(v.instance.query_id.clone()).or_insert_with(|| {
            groups.push(Vec::new());
            groups.len() - 1
        });
        groups[gi].push(Prediction {
            query_id: v.instance.query_id.clone(),
            candidate_id: v.instance.candidate_id.clone(),
            score: s,
            label: model.label(s),
        });
    }
    for g in &mut groups {
        g.sort_by(|a, b| {
            b.score
                .total_cmp(&a.score)
                .then_with(|| a.candidate_id.cmp(&b.candidate_id))
        });
    }
    Ok(groups.into_iter().flatten().collect())
}

pub fn run_predict(
    config: &Config,
    model: &Path,
    corpus: &Path,
    subtask: Subtask,
    out: &Path,
    jobs: usize,
) -> Result<usize> {
    let model = load_model(model)?;
    let threads = load_corpus(corpus)?;
    let preds = predict(&model, config, &threads, subtask, jobs)?;
    export_predictions(&preds, out)?;
    Ok(preds.len())
}

pub fn run_evaluate(gold: &Path, predictions: &Path, subtask: Subtask) -> Result<EvalReport> {
    evaluate_run(gold, predictions, subtask)
}
