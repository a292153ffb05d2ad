//! Forum threads, relevance labels, and the prediction file format.
//!
//! A corpus is stored as JSON Lines, one [`Thread`] per line. Each thread is
//! an original question together with the related questions retrieved for it
//! and the comments posted under every related question.

use std::collections::HashSet;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Thread {
    pub id: String,
    pub subject: String,
    pub body: String,
    pub related: Vec<RelatedQuestion>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelatedQuestion {
    pub id: String,
    pub subject: String,
    pub body: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relevance_to_orgq: Option<QuestionLabel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub search_rank: Option<u32>,
    pub comments: Vec<Comment>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comment {
    pub id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relevance_to_relq: Option<CommentLabel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relevance_to_orgq: Option<CommentLabel>,
}

/// Relevance of a related question to the original question.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum QuestionLabel {
    PerfectMatch,
    Relevant,
    Irrelevant,
}

/// Relevance of a comment to a question.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CommentLabel {
    Good,
    PotentiallyUseful,
    Bad,
}

/// Both graded scales folded into one enum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    PerfectMatch,
    Relevant,
    Irrelevant,
    Good,
    PotentiallyUseful,
    Bad,
}

impl Label {
    pub const ALL: [Label; 6] = [
        Label::PerfectMatch,
        Label::Relevant,
        Label::Irrelevant,
        Label::Good,
        Label::PotentiallyUseful,
        Label::Bad,
    ];
}

impl From<QuestionLabel> for Label {
    fn from(l: QuestionLabel) -> Self {
        match l {
            QuestionLabel::PerfectMatch => Label::PerfectMatch,
            QuestionLabel::Relevant => Label::Relevant,
            QuestionLabel::Irrelevant => Label::Irrelevant,
        }
    }
}

impl From<CommentLabel> for Label {
    fn from(l: CommentLabel) -> Self {
        match l {
            CommentLabel::Good => Label::Good,
            CommentLabel::PotentiallyUseful => Label::PotentiallyUseful,
            CommentLabel::Bad => Label::Bad,
        }
    }
}

/// Binary relevance used at evaluation time: PerfectMatch, Relevant and Good
/// count as relevant, everything else does not.
pub fn binarize_label(label: Label) -> bool {
    match label {
        Label::PerfectMatch | Label::Relevant | Label::Good => true,
        Label::Irrelevant | Label::PotentiallyUseful | Label::Bad => false,
    }
}

/// Ordinal training target.
pub fn grade_label(label: Label) -> i32 {
    match label {
        Label::PerfectMatch | Label::Good => 2,
        Label::Relevant | Label::PotentiallyUseful => 1,
        Label::Irrelevant | Label::Bad => 0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Subtask {
    /// Related question vs. its own comments.
    A,
    /// Original question vs. related questions.
    B,
    /// Original question vs. comments of related questions.
    C,
}

impl Subtask {
    pub fn has_search_rank(self) -> bool {
        matches!(self, Subtask::A | Subtask::C)
    }
}

impl fmt::Display for Subtask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Subtask::A => "A",
            Subtask::B => "B",
            Subtask::C => "C",
        };
        f.write_str(s)
    }
}

impl FromStr for Subtask {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "A" | "a" => Ok(Subtask::A),
            "B" | "b" => Ok(Subtask::B),
            "C" | "c" => Ok(Subtask::C),
            other => Err(Error::Invalid(format!("unknown subtask {other:?}"))),
        }
    }
}

/// One (query, candidate) pair to be ranked.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub query_id: String,
    pub candidate_id: String,
    pub subtask: Subtask,
    pub gold_label: Option<Label>,
}

/// Position of an instance's candidate inside its thread.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Slot {
    pub related: usize,
    pub comment: Option<usize>,
}

/// Instances contributed by one thread, in file order.
pub fn thread_instances(thread: &Thread, subtask: Subtask) -> Vec<(Instance, Slot)> {
    let mut out = Vec::new();
    for (ri, rel) in thread.related.iter().enumerate() {
        match subtask {
            Subtask::B => out.push((
                Instance {
                    query_id: thread.id.clone(),
                    candidate_id: rel.id.clone(),
                    subtask,
                    gold_label: rel.relevance_to_orgq.map(Label::from),
                },
                Slot {
                    related: ri,
                    comment: None,
                },
            )),
            Subtask::A | Subtask::C => {
                for (ci, c) in rel.comments.iter().enumerate() {
                    let (query_id, gold) = if subtask == Subtask::A {
                        (rel.id.clone(), c.relevance_to_relq)
                    } else {
                        (thread.id.clone(), c.relevance_to_orgq)
                    };
                    out.push((
                        Instance {
                            query_id,
                            candidate_id: c.id.clone(),
                            subtask,
                            gold_label: gold.map(Label::from),
                        },
                        Slot {
                            related: ri,
                            comment: Some(ci),
                        },
                    ));
                }
            }
        }
    }
    out
}

/// All instances of a corpus for one subtask. Fails on a repeated
/// (query, candidate) pair.
pub fn instances(threads: &[Thread], subtask: Subtask) -> Result<Vec<Instance>> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for thread in threads {
        for (inst, _) in thread_instances(thread, subtask) {
            if !seen.insert((inst.query_id.clone(), inst.candidate_id.clone())) {
                return Err(Error::DuplicateId(format!(
                    "{}/{}",
                    inst.query_id, inst.candidate_id
                )));
            }
            out.push(inst);
        }
    }
    Ok(out)
}

/// Reads a JSON Lines corpus file.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<Vec<Thread>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_corpus(BufReader::new(file), &path.display().to_string())
}

pub fn parse_corpus<R: BufRead>(reader: R, name: &str) -> Result<Vec<Thread>> {
    let mut threads = Vec::new();
    let mut ids = HashSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::io(name, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let thread: Thread = serde_json::from_str(&line)
            .map_err(|e| Error::parse(name, lineno, clean_serde_message(&e)))?;
        validate_thread(&thread, name, lineno)?;
        if !ids.insert(thread.id.clone()) {
            return Err(Error::DuplicateId(thread.id));
        }
        threads.push(thread);
    }
    Ok(threads)
}

// serde_json appends its own position ("at line 1 column 17"), which is
// meaningless for a single JSONL record.
fn clean_serde_message(e: &serde_json::Error) -> String {
    let msg = e.to_string();
    let msg = match msg.rfind(" at line ") {
        Some(pos) => &msg[..pos],
        None => &msg[..],
    };
    msg.replace('`', "")
}

fn validate_thread(thread: &Thread, name: &str, line: usize) -> Result<()> {
    if thread.id.is_empty() {
        return Err(Error::parse(name, line, "empty field id"));
    }
    let mut rel_ids = HashSet::new();
    for rel in &thread.related {
        if rel.id.is_empty() {
            return Err(Error::parse(name, line, "empty related question id"));
        }
        if !rel_ids.insert(rel.id.as_str()) {
            return Err(Error::DuplicateId(rel.id.clone()));
        }
        if rel.search_rank == Some(0) {
            return Err(Error::parse(
                name,
                line,
                format!("search_rank of {} must be >= 1", rel.id),
            ));
        }
        let mut comment_ids = HashSet::new();
        for c in &rel.comments {
            if c.id.is_empty() {
                return Err(Error::parse(name, line, "empty comment id"));
            }
            if !comment_ids.insert(c.id.as_str()) {
                return Err(Error::DuplicateId(c.id.clone()));
            }
        }
    }
    Ok(())
}

pub fn write_corpus<W: Write>(threads: &[Thread], mut out: W) -> Result<()> {
    for t in threads {
        let line = serde_json::to_string(t).map_err(|e| Error::Invalid(e.to_string()))?;
        writeln!(out, "{line}").map_err(|e| Error::io("<corpus>", e))?;
    }
    Ok(())
}

/// One line of a prediction file.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub query_id: String,
    pub candidate_id: String,
    pub score: f64,
    pub label: bool,
}

/// Fixed-point rendering with at least six significant digits.
pub fn format_score(score: f64) -> String {
    if score == 0.0 {
        return "0.000000".to_string();
    }
    let magnitude = score.abs().log10().floor() as i64;
    let decimals = (5 - magnitude).max(6) as usize;
    format!("{score:.decimals$}")
}

pub fn write_predictions<W: Write>(predictions: &[Prediction], mut out: W) -> Result<()> {
    for p in predictions {
        if !p.score.is_finite() {
            return Err(Error::NonFiniteScore(p.candidate_id.clone()));
        }
    }
    for p in predictions {
        writeln!(
            out,
            "{}\t{}\t0\t{}\t{}",
            p.query_id,
            p.candidate_id,
            format_score(p.score),
            p.label
        )
        .map_err(|e| Error::io("<predictions>", e))?;
    }
    Ok(())
}

/// Writes the SemEval-style prediction file; nothing is written when any
/// score is non-finite.
pub fn export_predictions(predictions: &[Prediction], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if let Some(bad) = predictions.iter().find(|p| !p.score.is_finite()) {
        return Err(Error::NonFiniteScore(bad.candidate_id.clone()));
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    write_predictions(predictions, &mut out)?;
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn read_predictions(path: impl AsRef<Path>) -> Result<Vec<Prediction>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_predictions(BufReader::new(file))
}

pub fn parse_predictions<R: BufRead>(reader: R) -> Result<Vec<Prediction>> {
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::io("<predictions>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |message: String| Error::PredictionFormat {
            line: line_no,
            message,
        };
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 5 {
            return Err(bad(format!("expected 5 columns, found {}", cols.len())));
        }
        let score: f64 = cols[3]
            .trim()
            .parse()
            .map_err(|_| bad(format!("invalid score {:?}", cols[3])))?;
        if !score.is_finite() {
            return Err(bad(format!("non-finite score {:?}", cols[3])));
        }
        let label = match cols[4].trim() {
            "true" => true,
            "false" => false,
            other => return Err(bad(format!("invalid label {other:?}"))),
        };
        out.push(Prediction {
            query_id: cols[0].to_string(),
            candidate_id: cols[1].to_string(),
            score,
            label,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const T1: &str = r#"{"id":"Q1","subject":"s","body":"b","related":[{"id":"Q1_R1","subject":"rs","body":"rb","relevance_to_orgq":"Relevant","search_rank":1,"comments":[{"id":"Q1_R1_C1","text":"t","relevance_to_relq":"Good","relevance_to_orgq":"Bad"}]}]}"#;
    const T2: &str = r#"{"id":"Q2","subject":"s2","body":"b2","related":[]}"#;

    #[test]
    fn loads_lines_in_order() {
        let input = format!("{T1}\n{T2}\n");
        let threads = parse_corpus(input.as_bytes(), "c").unwrap();
        assert_eq!(threads.len(), 2);
        assert_eq!(threads[0].id, "Q1");
        assert_eq!(threads[1].id, "Q2");
        let rel = &threads[0].related[0];
        assert_eq!(rel.relevance_to_orgq, Some(QuestionLabel::Relevant));
        assert_eq!(rel.search_rank, Some(1));
        assert_eq!(rel.comments[0].relevance_to_relq, Some(CommentLabel::Good));
    }

    #[test]
    fn missing_id_names_line_and_field() {
        let input = format!("{T1}\n{T2}\n{{\"subject\":\"x\",\"body\":\"y\",\"related\":[]}}\n");
        let err = parse_corpus(input.as_bytes(), "c").unwrap_err();
        assert!(
            err.to_string().ends_with("line 3: missing field id"),
            "{err}"
        );
    }

    #[test]
    fn duplicate_thread_id_is_rejected() {
        let input = format!("{T1}\n{T2}\n{T2}\n");
        match parse_corpus(input.as_bytes(), "c").unwrap_err() {
            Error::DuplicateId(id) => assert_eq!(id, "Q2"),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn zero_search_rank_is_rejected() {
        let input = T1.replace("\"search_rank\":1", "\"search_rank\":0");
        assert!(parse_corpus(input.as_bytes(), "c").is_err());
    }

    #[test]
    fn comment_label_on_question_scale_is_rejected() {
        let input = T1.replace("\"Relevant\"", "\"Good\"");
        let err = parse_corpus(input.as_bytes(), "c").unwrap_err();
        assert!(err.to_string().contains("line 1"), "{err}");
    }

    #[test]
    fn label_tables() {
        use Label::*;
        let bin: Vec<bool> = Label::ALL.iter().map(|&l| binarize_label(l)).collect();
        assert_eq!(bin, vec![true, true, false, true, false, false]);
        let grades: Vec<i32> = Label::ALL.iter().map(|&l| grade_label(l)).collect();
        assert_eq!(grades, vec![2, 1, 0, 2, 1, 0]);
        assert_eq!(grade_label(Relevant), 1);
        assert_eq!(grade_label(Bad), 0);
        assert_eq!(grade_label(Good), 2);
    }

    #[test]
    fn instances_per_subtask() {
        let threads = parse_corpus(T1.as_bytes(), "c").unwrap();
        let a = instances(&threads, Subtask::A).unwrap();
        assert_eq!(a[0].query_id, "Q1_R1");
        assert_eq!(a[0].candidate_id, "Q1_R1_C1");
        assert_eq!(a[0].gold_label, Some(Label::Good));
        let b = instances(&threads, Subtask::B).unwrap();
        assert_eq!(b[0].query_id, "Q1");
        assert_eq!(b[0].gold_label, Some(Label::Relevant));
        let c = instances(&threads, Subtask::C).unwrap();
        assert_eq!(c[0].query_id, "Q1");
        assert_eq!(c[0].gold_label, Some(Label::Bad));
    }

    #[test]
    fn prediction_line_format() {
        let p = Prediction {
            query_id: "Q1".into(),
            candidate_id: "Q1_R1".into(),
            score: 0.5,
            label: true,
        };
        let mut buf = Vec::new();
        write_predictions(&[p], &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "Q1\tQ1_R1\t0\t0.500000\ttrue\n"
        );
    }

    #[test]
    fn empty_predictions_give_empty_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.tsv");
        export_predictions(&[], &path).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "");
    }

    #[test]
    fn nan_score_is_rejected() {
        let p = Prediction {
            query_id: "Q1".into(),
            candidate_id: "Q1_R1".into(),
            score: f64::NAN,
            label: true,
        };
        let dir = tempfile::tempdir().unwrap();
        let err = export_predictions(&[p], dir.path().join("p.tsv")).unwrap_err();
        assert_eq!(err.to_string(), "non-finite score for Q1_R1");
    }

    #[test]
    fn malformed_prediction_line_reports_line() {
        let input = "Q1\tR1\t0\t0.5\ttrue\nQ1\tR2\t0\tabc\tfalse\n";
        match parse_predictions(input.as_bytes()).unwrap_err() {
            Error::PredictionFormat { line, .. } => assert_eq!(line, 2),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn small_scores_keep_six_significant_digits() {
        assert_eq!(format_score(0.5), "0.500000");
        assert_eq!(format_score(0.0123456789), "0.0123457");
        assert_eq!(format_score(-2.5), "-2.500000");
        assert_eq!(format_score(123.456), "123.456000");
    }

    fn arb_text() -> impl Strategy<Value = String> {
        "[a-zA-Z0-9 \"\\\\é'\n]{0,12}"
    }

    fn arb_comment() -> impl Strategy<Value = Comment> {
        (
            "[A-Z][0-9]{1,3}",
            arb_text(),
            prop::option::of(prop::sample::select(vec![
                CommentLabel::Good,
                CommentLabel::PotentiallyUseful,
                CommentLabel::Bad,
            ])),
            prop::option::of(prop::sample::select(vec![
                CommentLabel::Good,
                CommentLabel::Bad,
            ])),
        )
            .prop_map(|(id, text, r, o)| Comment {
                id,
                text,
                relevance_to_relq: r,
                relevance_to_orgq: o,
            })
    }

    fn arb_related() -> impl Strategy<Value = RelatedQuestion> {
        (
            "[A-Z][0-9]{1,3}",
            arb_text(),
            arb_text(),
            prop::option::of(prop::sample::select(vec![
                QuestionLabel::PerfectMatch,
                QuestionLabel::Relevant,
                QuestionLabel::Irrelevant,
            ])),
            prop::option::of(1u32..100),
            prop::collection::vec(arb_comment(), 0..4),
        )
            .prop_map(|(id, subject, body, rel, rank, mut comments)| {
                let mut seen = HashSet::new();
                comments.retain(|c| seen.insert(c.id.clone()));
                RelatedQuestion {
                    id,
                    subject,
                    body,
                    relevance_to_orgq: rel,
                    search_rank: rank,
                    comments,
                }
            })
    }

    fn arb_thread() -> impl Strategy<Value = Thread> {
        (
            "Q[0-9]{1,4}",
            arb_text(),
            arb_text(),
            prop::collection::vec(arb_related(), 0..4),
        )
            .prop_map(|(id, subject, body, mut related)| {
                let mut seen = HashSet::new();
                related.retain(|r| seen.insert(r.id.clone()));
                Thread {
                    id,
                    subject,
                    body,
                    related,
                }
            })
    }

    proptest! {
        #[test]
        fn corpus_round_trip(mut threads in prop::collection::vec(arb_thread(), 0..5)) {
            let mut seen = HashSet::new();
            threads.retain(|t| seen.insert(t.id.clone()));
            let mut buf = Vec::new();
            write_corpus(&threads, &mut buf).unwrap();
            let back = parse_corpus(buf.as_slice(), "mem").unwrap();
            prop_assert_eq!(back, threads);
        }

        #[test]
        fn prediction_lines_parse_back(
            rows in prop::collection::vec(("[A-Z][0-9]{1,3}", "[a-z][0-9]{1,3}", -1e3f64..1e3, any::<bool>()), 0..20)
        ) {
            let preds: Vec<Prediction> = rows
                .into_iter()
                .map(|(q, c, s, l)| Prediction { query_id: q, candidate_id: c, score: s, label: l })
                .collect();
            let mut buf = Vec::new();
            write_predictions(&preds, &mut buf).unwrap();
            prop_assert_eq!(buf.iter().filter(|&&b| b == b'\n').count(), preds.len());
            let back = parse_predictions(buf.as_slice()).unwrap();
            prop_assert_eq!(back.len(), preds.len());
            for (a, b) in preds.iter().zip(&back) {
                prop_assert_eq!(&a.query_id, &b.query_id);
                prop_assert_eq!(&a.candidate_id, &b.candidate_id);
                prop_assert_eq!(a.label, b.label);
                let tol = a.score.abs() * 5e-6 + 1e-12;
                prop_assert!((a.score - b.score).abs() <= tol, "{} vs {}", a.score, b.score);
            }
        }
    }
}
