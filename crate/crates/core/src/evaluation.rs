//! Ranking measures under a top-10 cutoff (MAP, AvgRec, MRR) and
//! classification measures over all instances.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;

use serde::Serialize;

use crate::corpus::{
    binarize_label, instances, load_corpus, read_predictions, Prediction, Subtask, Thread,
};
use crate::error::{Error, Result};

/// Ranks considered by the ranking measures.
pub const CUTOFF: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct RankedCandidate {
    pub candidate_id: String,
    pub score: f64,
    pub gold: bool,
}

/// Candidates of one query, by score descending, ties by candidate id.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedQuery {
    pub query_id: String,
    pub candidates: Vec<RankedCandidate>,
}

impl RankedQuery {
    pub fn new(query_id: impl Into<String>, mut candidates: Vec<RankedCandidate>) -> Self {
        candidates.sort_by(|a, b| {
            b.score
                .total_cmp(&a.score)
                .then_with(|| a.candidate_id.cmp(&b.candidate_id))
        });
        RankedQuery {
            query_id: query_id.into(),
            candidates,
        }
    }

    pub fn relevant_count(&self) -> usize {
        self.candidates.iter().filter(|c| c.gold).count()
    }

    fn gold_at(&self, k: usize) -> impl Iterator<Item = bool> + '_ {
        self.candidates.iter().take(k).map(|c| c.gold)
    }
}

/// Truncated average precision with denominator min(R, k); 0 when R = 0.
pub fn average_precision(q: &RankedQuery, k: usize) -> f64 {
    let r = q.relevant_count();
    if r == 0 || k == 0 {
        return 0.0;
    }
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (i, gold) in q.gold_at(k).enumerate() {
        if gold {
            hits += 1;
            sum += hits as f64 / (i + 1) as f64;
        }
    }
    sum / r.min(k) as f64
}

/// Mean of recall@1..recall@k with denominator R.
pub fn average_recall(q: &RankedQuery, k: usize) -> f64 {
    let r = q.relevant_count();
    if r == 0 || k == 0 {
        return 0.0;
    }
    let mut hits = 0usize;
    let mut sum = 0.0;
    for i in 0..k {
        if q.candidates.get(i).is_some_and(|c| c.gold) {
            hits += 1;
        }
        sum += hits as f64 / r as f64;
    }
    sum / k as f64
}

/// 1 / rank of the first relevant candidate within the top k, else 0.
pub fn reciprocal_rank(q: &RankedQuery, k: usize) -> f64 {
    q.gold_at(k)
        .position(|g| g)
        .map_or(0.0, |i| 1.0 / (i + 1) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RankingScores {
    pub map: f64,
    pub avg_rec: f64,
    pub mrr: f64,
    /// Queries with at least one relevant candidate.
    pub query_count: usize,
    pub skipped_queries: usize,
}

pub fn ranking_metrics(queries: &[RankedQuery]) -> Result<RankingScores> {
    let (mut ap, mut ar, mut rr) = (0.0, 0.0, 0.0);
    let mut n = 0usize;
    for q in queries.iter().filter(|q| q.relevant_count() > 0) {
        ap += average_precision(q, CUTOFF);
        ar += average_recall(q, CUTOFF);
        rr += reciprocal_rank(q, CUTOFF);
        n += 1;
    }
    if n == 0 {
        return Err(Error::NoEvaluableQueries);
    }
    let n_f = n as f64;
    Ok(RankingScores {
        map: ap / n_f,
        avg_rec: ar / n_f,
        mrr: rr / n_f,
        query_count: n,
        skipped_queries: queries.len() - n,
    })
}

pub fn map_score(queries: &[RankedQuery]) -> Result<f64> {
    ranking_metrics(queries).map(|s| s.map)
}

pub fn avg_rec(queries: &[RankedQuery]) -> Result<f64> {
    ranking_metrics(queries).map(|s| s.avg_rec)
}

pub fn mrr(queries: &[RankedQuery]) -> Result<f64> {
    ranking_metrics(queries).map(|s| s.mrr)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
}

impl Confusion {
    /// From (predicted, gold) pairs.
    pub fn from_pairs<I: IntoIterator<Item = (bool, bool)>>(pairs: I) -> Self {
        let mut c = Confusion::default();
        for (p, g) in pairs {
            match (p, g) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, true) => c.fn_ += 1,
                (false, false) => c.tn += 1,
            }
        }
        c
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn accuracy(&self) -> f64 {
        ratio(self.tp + self.tn, self.total())
    }

    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    pub fn f1(&self) -> f64 {
        let (p, r) = (self.precision(), self.recall());
        if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        }
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassificationScores {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

pub fn classification_metrics(pairs: &[(bool, bool)]) -> Result<ClassificationScores> {
    if pairs.is_empty() {
        return Err(Error::Invalid("no instances to classify".into()));
    }
    let c = Confusion::from_pairs(pairs.iter().copied());
    Ok(ClassificationScores {
        accuracy: c.accuracy(),
        precision: c.precision(),
        recall: c.recall(),
        f1: c.f1(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EvalReport {
    pub map: f64,
    pub avg_rec: f64,
    pub mrr: f64,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub query_count: usize,
    pub skipped_queries: usize,
}

impl EvalReport {
    pub fn to_text(&self) -> String {
        format!(
            "MAP\t{:.4}\nAvgRec\t{:.4}\nMRR\t{:.4}\nAcc\t{:.4}\nP\t{:.4}\nR\t{:.4}\nF1\t{:.4}\nqueries\t{}\nskipped\t{}\n",
            self.map,
            self.avg_rec,
            self.mrr,
            self.accuracy,
            self.precision,
            self.recall,
            self.f1,
            self.query_count,
            self.skipped_queries
        )
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}

/// Scores a prediction set against the gold labels of a corpus. Every gold
/// instance must be predicted exactly once.
pub fn evaluate_predictions(
    threads: &[Thread],
    predictions: &[Prediction],
    subtask: Subtask,
) -> Result<EvalReport> {
    let gold = instances(threads, subtask)?;
    let mut by_key: HashMap<(&str, &str), &Prediction> = HashMap::with_capacity(predictions.len());
    let known: HashSet<(&str, &str)> = gold
        .iter()
        .map(|i| (i.query_id.as_str(), i.candidate_id.as_str()))
        .collect();
    for p in predictions {
        let key = (p.query_id.as_str(), p.candidate_id.as_str());
        if !known.contains(&key) || by_key.insert(key, p).is_some() {
            return Err(Error::ExtraPrediction(format!(
                "{}/{}",
                p.query_id, p.candidate_id
            )));
        }
        if !p.score.is_finite() {
            return Err(Error::NonFiniteScore(format!(
                "{}/{}",
                p.query_id, p.candidate_id
            )));
        }
    }

    let mut groups: BTreeMap<&str, Vec<RankedCandidate>> = BTreeMap::new();
    let mut pairs = Vec::with_capacity(gold.len());
    for inst in &gold {
        let label = inst
            .gold_label
            .ok_or_else(|| Error::Unlabeled(inst.candidate_id.clone()))?;
        let p = by_key
            .get(&(inst.query_id.as_str(), inst.candidate_id.as_str()))
            .ok_or_else(|| {
                Error::MissingPrediction(format!("{}/{}", inst.query_id, inst.candidate_id))
            })?;
        let g = binarize_label(label);
        pairs.push((p.label, g));
        groups
            .entry(&inst.query_id)
            .or_default()
            .push(RankedCandidate {
                candidate_id: inst.candidate_id.clone(),
                score: p.score,
                gold: g,
            });
    }
    let queries: Vec<RankedQuery> = groups
        .into_iter()
        .map(|(q, cands)| RankedQuery::new(q, cands))
        .collect();
    let ranking = ranking_metrics(&queries)?;
    let class = classification_metrics(&pairs)?;
    Ok(EvalReport {
        map: ranking.map,
        avg_rec: ranking.avg_rec,
        mrr: ranking.mrr,
        accuracy: class.accuracy,
        precision: class.precision,
        recall: class.recall,
        f1: class.f1,
        query_count: ranking.query_count,
        skipped_queries: ranking.skipped_queries,
    })
}

pub fn evaluate_run(
    gold: impl AsRef<Path>,
    predictions: impl AsRef<Path>,
    subtask: Subtask,
) -> Result<EvalReport> {
    let threads = load_corpus(gold)?;
    let preds = read_predictions(predictions)?;
    evaluate_predictions(&threads, &preds, subtask)
}
