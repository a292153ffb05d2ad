//! Pairwise linear ranking SVM trained by stochastic subgradient descent,
//! cost selection over a grid, threshold calibration and the model file.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use log::warn;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::Subtask;
use crate::error::{Error, Result};
use crate::evaluation::{ranking_metrics, Confusion, RankedCandidate, RankedQuery};
use crate::features::FeatureSchema;
use crate::lexical::IdfTable;

pub const MODEL_VERSION: &str = "1";
const MAGIC: &str = "cqarank-model";

/// Minimum ratio between any two selected cost values.
pub const COST_SEPARATION: f64 = 4.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Member {
    pub candidate_id: String,
    pub features: Vec<f64>,
    /// Graded relevance; pairs are formed across distinct grades.
    pub target: i32,
    /// Binary gold relevance, used for MAP and threshold calibration.
    pub relevant: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryGroup {
    pub query_id: String,
    pub members: Vec<Member>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrainOptions {
    pub epochs: usize,
    pub seed: u64,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions {
            epochs: 200,
            seed: 42,
        }
    }
}

/// Learned weights and the objective value they reach.
#[derive(Debug, Clone, PartialEq)]
pub struct Trained {
    pub cost: f64,
    pub weights: Vec<f64>,
    pub objective: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn dimension(groups: &[QueryGroup]) -> Result<usize> {
    let dim = groups
        .iter()
        .flat_map(|g| g.members.first())
        .map(|m| m.features.len())
        .next()
        .unwrap_or(0);
    for m in groups.iter().flat_map(|g| &g.members) {
        if m.features.len() != dim {
            return Err(Error::LengthMismatch {
                expected: dim,
                found: m.features.len(),
            });
        }
    }
    Ok(dim)
}

/// Differences x_i − x_j over within-group pairs with target_i > target_j.
pub fn pair_differences(groups: &[QueryGroup]) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    for g in groups {
        for a in &g.members {
            for b in &g.members {
                if a.target > b.target {
                    out.push(
                        a.features
                            .iter()
                            .zip(&b.features)
                            .map(|(x, y)| x - y)
                            .collect(),
                    );
                }
            }
        }
    }
    out
}

/// ½‖w‖² + C Σ max(0, 1 − w·d).
pub fn objective(weights: &[f64], pairs: &[Vec<f64>], cost: f64) -> f64 {
    let hinge: f64 = pairs.iter().map(|d| (1.0 - dot(weights, d)).max(0.0)).sum();
    0.5 * dot(weights, weights) + cost * hinge
}

/// Minimizes the pairwise hinge objective. Each step visits one pair with
/// rate η = 1 / (1 + t/|P|); the iterate with the lowest objective among
/// the epoch ends (and w = 0) is returned.
pub fn train(groups: &[QueryGroup], cost: f64, opts: TrainOptions) -> Result<Trained> {
    if !(cost.is_finite() && cost > 0.0) {
        return Err(Error::Invalid(format!("cost must be positive, got {cost}")));
    }
    let dim = dimension(groups)?;
    let pairs = pair_differences(groups);
    if pairs.is_empty() {
        return Err(Error::NoRankingSignal);
    }
    let n = pairs.len() as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    let mut w = vec![0.0; dim];
    let mut best = (objective(&w, &pairs, cost), w.clone());
    let mut t = 0u64;
    for _ in 0..opts.epochs {
        order.shuffle(&mut rng);
        for &p in &order {
            let eta = 1.0 / (1.0 + t as f64 / n);
            let d = &pairs[p];
            let violated = 1.0 - dot(&w, d) > 0.0;
            let shrink = 1.0 - eta / n;
            for (k, wk) in w.iter_mut().enumerate() {
                *wk *= shrink;
                if violated {
                    *wk += eta * cost * d[k];
                }
            }
            t += 1;
        }
        let j = objective(&w, &pairs, cost);
        if j < best.0 {
            best = (j, w.clone());
        }
    }
    Ok(Trained {
        cost,
        weights: best.1,
        objective: best.0,
    })
}

/// Fraction of ordered pairs (target_i > target_j) scored strictly in order.
pub fn pairwise_accuracy(weights: &[f64], groups: &[QueryGroup]) -> f64 {
    let pairs = pair_differences(groups);
    if pairs.is_empty() {
        return 1.0;
    }
    pairs.iter().filter(|d| dot(weights, d) > 0.0).count() as f64 / pairs.len() as f64
}

/// Ranked queries built from linear scores and the members' binary gold.
pub fn rank_groups(weights: &[f64], groups: &[QueryGroup]) -> Vec<RankedQuery> {
    groups
        .iter()
        .map(|g| {
            RankedQuery::new(
                g.query_id.clone(),
                g.members
                    .iter()
                    .map(|m| RankedCandidate {
                        candidate_id: m.candidate_id.clone(),
                        score: dot(weights, &m.features),
                        gold: m.relevant,
                    })
                    .collect(),
            )
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TunedRun {
    pub trained: Trained,
    pub dev_map: f64,
}

/// Trains one model per grid value and keeps up to three by dev MAP
/// (ties to the smaller cost), each at least a factor of 4 away from every
/// cost already kept.
pub fn tune_cost(
    train_groups: &[QueryGroup],
    dev_groups: &[QueryGroup],
    grid: &[f64],
    opts: TrainOptions,
) -> Result<Vec<TunedRun>> {
    if grid.is_empty() {
        return Err(Error::Config("empty cost grid".into()));
    }
    let mut runs = grid
        .par_iter()
        .map(|&c| {
            let trained = train(train_groups, c, opts)?;
            let dev_map = ranking_metrics(&rank_groups(&trained.weights, dev_groups))?.map;
            Ok(TunedRun { trained, dev_map })
        })
        .collect::<Result<Vec<_>>>()?;
    runs.sort_by(|a, b| {
        b.dev_map
            .total_cmp(&a.dev_map)
            .then(a.trained.cost.total_cmp(&b.trained.cost))
    });
    let mut chosen: Vec<TunedRun> = Vec::new();
    for run in runs {
        let c = run.trained.cost;
        let far = chosen.iter().all(|s| {
            let s = s.trained.cost;
            c.max(s) / c.min(s) >= COST_SEPARATION
        });
        if far {
            chosen.push(run);
            if chosen.len() == 3 {
                break;
            }
        }
    }
    if chosen.len() < 3 {
        warn!(
            "cost grid yields only {} well-separated value(s); writing {} model(s)",
            chosen.len(),
            chosen.len()
        );
    }
    Ok(chosen)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThresholdMetric {
    #[default]
    F1,
    Accuracy,
}

impl ThresholdMetric {
    pub fn value(self, c: &Confusion) -> f64 {
        match self {
            ThresholdMetric::F1 => c.f1(),
            ThresholdMetric::Accuracy => c.accuracy(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    pub threshold: f64,
    pub value: f64,
}

/// Candidate thresholds: min − 1, midpoints of consecutive distinct scores,
/// max + 1, ascending.
pub fn threshold_candidates(scores: &[f64]) -> Vec<f64> {
    let mut s: Vec<f64> = scores.to_vec();
    s.sort_by(f64::total_cmp);
    s.dedup();
    let mut out = Vec::with_capacity(s.len() + 1);
    if let (Some(&lo), Some(&hi)) = (s.first(), s.last()) {
        out.push(lo - 1.0);
        out.extend(s.windows(2).map(|w| w[0] + (w[1] - w[0]) / 2.0));
        out.push(hi + 1.0);
    }
    out
}

/// The candidate threshold maximizing the metric for labels `score ≥ θ`,
/// smallest on ties. Without any positive gold the threshold lies above
/// every score.
pub fn calibrate_threshold(
    scores: &[f64],
    gold: &[bool],
    metric: ThresholdMetric,
) -> Result<Calibration> {
    if scores.len() != gold.len() {
        return Err(Error::LengthMismatch {
            expected: scores.len(),
            found: gold.len(),
        });
    }
    if scores.is_empty() {
        return Err(Error::Invalid("no dev scores to calibrate on".into()));
    }
    if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
        return Err(Error::NonFiniteScore(format!("dev instance {i}")));
    }
    let mut pairs: Vec<(f64, bool)> = scores.iter().copied().zip(gold.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total_pos = gold.iter().filter(|g| **g).count();
    let candidates = threshold_candidates(scores);
    if total_pos == 0 {
        warn!("no positive dev instance; threshold set above every score");
        let threshold = *candidates.last().expect("non-empty");
        let c = Confusion {
            tn: pairs.len(),
            ..Confusion::default()
        };
        return Ok(Calibration {
            threshold,
            value: metric.value(&c),
        });
    }
    // suffix_pos[i] = positives among pairs[i..]
    let mut suffix_pos = vec![0usize; pairs.len() + 1];
    for i in (0..pairs.len()).rev() {
        suffix_pos[i] = suffix_pos[i + 1] + usize::from(pairs[i].1);
    }
    let mut best: Option<Calibration> = None;
    for theta in candidates {
        let first = pairs.partition_point(|p| p.0 < theta);
        let predicted = pairs.len() - first;
        let tp = suffix_pos[first];
        let c = Confusion {
            tp,
            fp: predicted - tp,
            fn_: total_pos - tp,
            tn: first - (total_pos - tp),
        };
        let value = metric.value(&c);
        if best.is_none_or(|b| value > b.value) {
            best = Some(Calibration {
                threshold: theta,
                value,
            });
        }
    }
    Ok(best.expect("at least two candidates"))
}

/// A trained ranker with everything needed to score new instances.
#[derive(Debug, Clone, PartialEq)]
pub struct RankModel {
    pub subtask: Subtask,
    pub weights: Vec<f64>,
    pub schema: FeatureSchema,
    pub cost: f64,
    pub threshold: f64,
    pub seed: u64,
    pub idf: IdfTable,
}

impl RankModel {
    pub fn score(&self, x: &[f64]) -> Result<f64> {
        score(&self.weights, x)
    }

    pub fn label(&self, score: f64) -> bool {
        score >= self.threshold
    }
}

pub fn score(weights: &[f64], x: &[f64]) -> Result<f64> {
    if weights.len() != x.len() {
        return Err(Error::LengthMismatch {
            expected: weights.len(),
            found: x.len(),
        });
    }
    Ok(dot(weights, x))
}

pub fn save_model(model: &RankModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, model_to_string(model)).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<RankModel> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_model(&text)
}

pub fn model_to_string(m: &RankModel) -> String {
    let mut s = format!("{MAGIC} {MODEL_VERSION}\n[meta]\n");
    s += &format!(
        "subtask\t{}\ncost\t{}\nthreshold\t{}\nseed\t{}\n",
        m.subtask, m.cost, m.threshold, m.seed
    );
    s += &format!("features\t{}\n[schema]\n", m.schema.len());
    for i in 0..m.schema.len() {
        s += &format!(
            "{}\t{}\t{}\n",
            m.schema.names[i], m.schema.means[i], m.schema.stddevs[i]
        );
    }
    s += "[weights]\n";
    for (name, w) in m.schema.names.iter().zip(&m.weights) {
        s += &format!("{name}\t{w}\n");
    }
    s += &format!(
        "[idf]\ndocuments\t{}\nterms\t{}\n",
        m.idf.doc_count,
        m.idf.df.len()
    );
    for (term, df) in &m.idf.df {
        s += &format!("{term}\t{df}\n");
    }
    s += "[end]\n";
    s
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn next(&mut self) -> Result<&'a str> {
        match self.inner.next() {
            Some((i, l)) => {
                self.last = i + 1;
                Ok(l)
            }
            None => Err(self.err(self.last + 1, "unexpected end of file")),
        }
    }

    fn err(&self, line: usize, message: impl Into<String>) -> Error {
        Error::ModelFormat {
            line,
            message: message.into(),
        }
    }

    fn expect(&mut self, header: &str) -> Result<()> {
        let l = self.next()?;
        if l != header {
            return Err(self.err(self.last, format!("expected {header}")));
        }
        Ok(())
    }

    fn columns(&mut self, n: usize) -> Result<Vec<&'a str>> {
        let l = self.next()?;
        let cols: Vec<&str> = l.split('\t').collect();
        if cols.len() != n {
            return Err(self.err(
                self.last,
                format!("expected {n} columns, found {}", cols.len()),
            ));
        }
        Ok(cols)
    }

    fn keyed(&mut self, key: &str) -> Result<&'a str> {
        let cols = self.columns(2)?;
        if cols[0] != key {
            return Err(self.err(self.last, format!("expected key {key}")));
        }
        Ok(cols[1])
    }

    fn number<T: std::str::FromStr>(&self, s: &str) -> Result<T> {
        s.parse()
            .map_err(|_| self.err(self.last, format!("invalid number {s:?}")))
    }

    fn finite(&self, s: &str) -> Result<f64> {
        let x: f64 = self.number(s)?;
        if !x.is_finite() {
            return Err(self.err(self.last, format!("non-finite value {s:?}")));
        }
        Ok(x)
    }
}

pub fn parse_model(text: &str) -> Result<RankModel> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
        last: 0,
    };
    let header = lines.next()?;
    match header.split_once(' ') {
        Some((MAGIC, MODEL_VERSION)) => {}
        Some((MAGIC, found)) => {
            return Err(Error::ModelVersion {
                expected: MODEL_VERSION.into(),
                found: found.into(),
            })
        }
        _ => return Err(lines.err(1, "not a model file")),
    }
    lines.expect("[meta]")?;
    let subtask: Subtask = {
        let v = lines.keyed("subtask")?;
        v.parse()
            .map_err(|_| lines.err(lines.last, format!("invalid subtask {v:?}")))?
    };
    let cost = {
        let v = lines.keyed("cost")?;
        lines.finite(v)?
    };
    let threshold = {
        let v = lines.keyed("threshold")?;
        lines.finite(v)?
    };
    let seed: u64 = {
        let v = lines.keyed("seed")?;
        lines.number(v)?
    };
    let n: usize = {
        let v = lines.keyed("features")?;
        lines.number(v)?
    };

    lines.expect("[schema]")?;
    let mut schema = FeatureSchema {
        names: Vec::with_capacity(n),
        means: Vec::with_capacity(n),
        stddevs: Vec::with_capacity(n),
    };
    for _ in 0..n {
        let cols = lines.columns(3)?;
        schema.names.push(cols[0].to_string());
        schema.means.push(lines.finite(cols[1])?);
        schema.stddevs.push(lines.finite(cols[2])?);
    }

    lines.expect("[weights]")?;
    let mut weights = Vec::with_capacity(n);
    for name in &schema.names {
        let cols = lines.columns(2)?;
        if cols[0] != name {
            return Err(lines.err(lines.last, format!("expected weight for {name}")));
        }
        weights.push(lines.finite(cols[1])?);
    }

    lines.expect("[idf]")?;
    let doc_count: usize = {
        let v = lines.keyed("documents")?;
        lines.number(v)?
    };
    let terms: usize = {
        let v = lines.keyed("terms")?;
        lines.number(v)?
    };
    let mut df = BTreeMap::new();
    for _ in 0..terms {
        let cols = lines.columns(2)?;
        df.insert(cols[0].to_string(), lines.number(cols[1])?);
    }
    lines.expect("[end]")?;

    Ok(RankModel {
        subtask,
        weights,
        schema,
        cost,
        threshold,
        seed,
        idf: IdfTable { doc_count, df },
    })
}
