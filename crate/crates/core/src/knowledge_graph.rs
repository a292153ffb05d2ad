//! File-backed semantic network and activation-weighted knowledge graphs.
//!
//! Each lemma with k candidate senses seeds each sense with 1/k. Activation
//! then flows along directed edges for up to `depth` hops; a walk through
//! edges w1..wj adds `seed * decay^j * w1 * ... * wj` to its end concept.
//! Walks may revisit concepts. Two texts are compared by the cosine of their
//! activation vectors.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use crate::error::{Error, Result};
use crate::preprocess::TextView;

/// Longest walk considered during expansion.
pub const MAX_DEPTH: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub target: String,
    pub relation: String,
    pub weight: f64,
}

#[derive(Debug, Clone, Default)]
pub struct SemanticNetwork {
    pub concepts: BTreeSet<String>,
    pub edges: HashMap<String, Vec<Edge>>,
    pub senses: HashMap<String, Vec<String>>,
}

impl SemanticNetwork {
    pub fn add_edge(&mut self, src: &str, relation: &str, dst: &str, weight: f64) -> Result<()> {
        if !(weight > 0.0 && weight <= 1.0) {
            return Err(Error::Invalid("weight must be in (0,1]".into()));
        }
        self.concepts.insert(src.to_string());
        self.concepts.insert(dst.to_string());
        self.edges.entry(src.to_string()).or_default().push(Edge {
            target: dst.to_string(),
            relation: relation.to_string(),
            weight,
        });
        Ok(())
    }

    pub fn add_sense(&mut self, lemma: &str, concept: &str) {
        self.concepts.insert(concept.to_string());
        self.senses
            .entry(lemma.to_string())
            .or_default()
            .push(concept.to_string());
    }
}

fn tsv_rows(path: &Path, columns: usize) -> Result<Vec<(usize, Vec<String>)>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let name = path.display().to_string();
    let mut rows = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let no = idx + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<String> = line.split('\t').map(|c| c.trim().to_string()).collect();
        if cols.len() != columns || cols.iter().any(String::is_empty) {
            return Err(Error::parse(
                &name,
                no,
                format!("expected {columns} columns"),
            ));
        }
        rows.push((no, cols));
    }
    Ok(rows)
}

/// Loads `src<TAB>relation<TAB>dst<TAB>weight` edges and
/// `lemma<TAB>concept` senses.
pub fn load_network(
    edges_path: impl AsRef<Path>,
    senses_path: impl AsRef<Path>,
) -> Result<SemanticNetwork> {
    let edges_path = edges_path.as_ref();
    let mut net = SemanticNetwork::default();
    let name = edges_path.display().to_string();
    for (no, cols) in tsv_rows(edges_path, 4)? {
        let weight: f64 = cols[3]
            .parse()
            .map_err(|_| Error::parse(&name, no, format!("invalid weight {:?}", cols[3])))?;
        net.add_edge(&cols[0], &cols[1], &cols[2], weight)
            .map_err(|e| Error::parse(&name, no, e.to_string()))?;
    }
    for (_, cols) in tsv_rows(senses_path.as_ref(), 2)? {
        net.add_sense(&cols[0].to_lowercase(), &cols[1]);
    }
    Ok(net)
}

/// Concept activations of one text. Only positive activations are stored.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct KnowledgeGraph {
    pub weights: BTreeMap<String, f64>,
    pub source_text_id: String,
}

impl KnowledgeGraph {
    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

pub fn build_graph(
    view: &TextView,
    net: &SemanticNetwork,
    depth: usize,
    decay: f64,
) -> KnowledgeGraph {
    build_graph_for(view, net, depth, decay, "")
}

pub fn build_graph_for(
    view: &TextView,
    net: &SemanticNetwork,
    depth: usize,
    decay: f64,
    source_text_id: &str,
) -> KnowledgeGraph {
    let depth = depth.min(MAX_DEPTH);
    let mut frontier: BTreeMap<&str, f64> = BTreeMap::new();
    for lemma in &view.lemmas {
        if let Some(senses) = net.senses.get(lemma) {
            let seed = 1.0 / senses.len() as f64;
            for c in senses {
                *frontier.entry(c.as_str()).or_insert(0.0) += seed;
            }
        }
    }
    let mut total: BTreeMap<String, f64> =
        frontier.iter().map(|(c, w)| (c.to_string(), *w)).collect();
    // Summing walk contributions level by level: the mass arriving at a
    // concept after j hops is the sum over all length-j walks ending there.
    for _ in 0..depth {
        let mut next: BTreeMap<&str, f64> = BTreeMap::new();
        for (c, mass) in &frontier {
            if let Some(out) = net.edges.get(*c) {
                for e in out {
                    *next.entry(e.target.as_str()).or_insert(0.0) += mass * decay * e.weight;
                }
            }
        }
        for (c, w) in &next {
            *total.entry(c.to_string()).or_insert(0.0) += w;
        }
        frontier = next;
    }
    total.retain(|_, w| *w > 0.0);
    KnowledgeGraph {
        weights: total,
        source_text_id: source_text_id.to_string(),
    }
}

/// Cosine of the activation vectors over the union of concepts.
pub fn kga_similarity(g1: &KnowledgeGraph, g2: &KnowledgeGraph) -> f64 {
    if g1.is_empty() || g2.is_empty() {
        return 0.0;
    }
    let (small, large) = if g1.weights.len() <= g2.weights.len() {
        (g1, g2)
    } else {
        (g2, g1)
    };
    let dot: f64 = small
        .weights
        .iter()
        .filter_map(|(c, x)| large.weights.get(c).map(|y| x * y))
        .sum();
    let n1 = g1.weights.values().map(|x| x * x).sum::<f64>().sqrt();
    let n2 = g2.weights.values().map(|x| x * x).sum::<f64>().sqrt();
    if n1 == 0.0 || n2 == 0.0 {
        return 0.0;
    }
    (dot / (n1 * n2)).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn view(lemmas: &[&str]) -> TextView {
        TextView::from_tokens(lemmas, false)
    }

    fn graph(pairs: &[(&str, f64)]) -> KnowledgeGraph {
        KnowledgeGraph {
            weights: pairs.iter().map(|(c, w)| (c.to_string(), *w)).collect(),
            source_text_id: String::new(),
        }
    }

    #[test]
    fn load_network_files() {
        let dir = tempfile::tempdir().unwrap();
        let e = dir.path().join("edges.tsv");
        let s = dir.path().join("senses.tsv");
        std::fs::write(&e, "c1\tis_a\tc2\t0.8\nc2\tis_a\tc3\t1\nc1\trel\tc3\t0.2\n").unwrap();
        std::fs::write(&s, "bank\tc1\nbank\tc4\n").unwrap();
        let net = load_network(&e, &s).unwrap();
        assert_eq!(net.edges["c1"].len(), 2);
        assert_eq!(net.edges["c1"][0].target, "c2");
        assert_eq!(net.edges["c1"][0].relation, "is_a");
        assert_eq!(net.edges["c2"][0].weight, 1.0);
        assert_eq!(net.senses["bank"], vec!["c1", "c4"]);
        assert!(net.concepts.contains("c4"));

        std::fs::write(&e, "c1\tis_a\tc2\t0.5\nc1\tis_a\tc2\t0\n").unwrap();
        let err = load_network(&e, &s).unwrap_err();
        assert!(
            err.to_string().ends_with("line 2: weight must be in (0,1]"),
            "{err}"
        );
    }

    #[test]
    fn build_graph_examples() {
        let mut net = SemanticNetwork::default();
        net.add_sense("cat", "c1");
        net.add_sense("feline", "c1");
        net.add_edge("c1", "is_a", "c2", 0.8).unwrap();

        let g = build_graph(&view(&["cat"]), &net, 0, 0.5);
        assert_eq!(g.weights, BTreeMap::from([("c1".to_string(), 1.0)]));

        let g = build_graph(&view(&["cat"]), &net, 1, 0.5);
        assert_eq!(g.weights["c1"], 1.0);
        assert!((g.weights["c2"] - 0.4).abs() < 1e-15);

        let g = build_graph(&view(&["cat", "feline"]), &net, 0, 0.5);
        assert_eq!(g.weights, BTreeMap::from([("c1".to_string(), 2.0)]));

        assert!(build_graph(&view(&[]), &net, 2, 0.5).is_empty());
    }

    #[test]
    fn senses_split_seed() {
        let mut net = SemanticNetwork::default();
        net.add_sense("bank", "river");
        net.add_sense("bank", "money");
        let g = build_graph(&view(&["bank"]), &net, 0, 0.5);
        assert_eq!(g.weights["river"], 0.5);
        assert_eq!(g.weights["money"], 0.5);
    }

    #[test]
    fn cycles_count_every_walk() {
        let mut net = SemanticNetwork::default();
        net.add_sense("a", "x");
        net.add_edge("x", "r", "y", 1.0).unwrap();
        net.add_edge("y", "r", "x", 1.0).unwrap();
        let g = build_graph(&view(&["a"]), &net, 2, 0.5);
        // x: seed 1 + back via y at depth 2 (0.25); y: 0.5 at depth 1
        assert!((g.weights["x"] - 1.25).abs() < 1e-15);
        assert!((g.weights["y"] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn kga_examples() {
        let g = graph(&[("c1", 1.0), ("c2", 0.3)]);
        assert!((kga_similarity(&g, &g) - 1.0).abs() < 1e-12);
        assert_eq!(
            kga_similarity(&graph(&[("c1", 1.0)]), &graph(&[("c2", 1.0)])),
            0.0
        );
        let got = kga_similarity(&graph(&[("c1", 1.0)]), &graph(&[("c1", 1.0), ("c2", 1.0)]));
        assert!((got - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        assert_eq!(kga_similarity(&graph(&[]), &g), 0.0);
    }

    fn chain_net() -> SemanticNetwork {
        // c0 -> c1 -> c2 -> c3 -> c4, lemma "w" seeds c0
        let mut net = SemanticNetwork::default();
        net.add_sense("w", "c0");
        for i in 0..4 {
            net.add_edge(&format!("c{i}"), "r", &format!("c{}", i + 1), 0.9)
                .unwrap();
        }
        net
    }

    #[test]
    fn depth_bound_is_respected() {
        let net = chain_net();
        for depth in 0..=3 {
            let g = build_graph(&view(&["w"]), &net, depth, 0.5);
            assert_eq!(g.weights.len(), depth + 1);
            assert!(!g.weights.contains_key(&format!("c{}", depth + 1)));
        }
        // depths beyond the cap behave like the cap
        let capped = build_graph(&view(&["w"]), &net, 7, 0.5);
        assert_eq!(capped.weights.len(), MAX_DEPTH + 1);
    }

    fn arb_net() -> impl Strategy<Value = SemanticNetwork> {
        (
            prop::collection::vec((0usize..6, 0usize..6, 0.05f64..=1.0), 0..14),
            prop::collection::vec((0usize..4, 0usize..6), 1..8),
        )
            .prop_map(|(edges, senses)| {
                let mut net = SemanticNetwork::default();
                for (s, d, w) in edges {
                    net.add_edge(&format!("c{s}"), "r", &format!("c{d}"), w)
                        .unwrap();
                }
                for (l, c) in senses {
                    net.add_sense(&format!("l{l}"), &format!("c{c}"));
                }
                net
            })
    }

    proptest! {
        #[test]
        fn activations_ignore_lemma_order(
            net in arb_net(),
            lemmas in prop::collection::vec(0usize..5, 0..6),
            depth in 0usize..=3,
        ) {
            let names: Vec<String> = lemmas.iter().map(|i| format!("l{i}")).collect();
            let mut rev = names.clone();
            rev.reverse();
            let g1 = build_graph(&TextView::from_tokens(&names, false), &net, depth, 0.5);
            let g2 = build_graph(&TextView::from_tokens(&rev, false), &net, depth, 0.5);
            prop_assert_eq!(g1.weights.keys().collect::<Vec<_>>(), g2.weights.keys().collect::<Vec<_>>());
            for (c, w) in &g1.weights {
                prop_assert!((w - g2.weights[c]).abs() <= 1e-12 * w.max(1.0));
            }
        }

        #[test]
        fn activations_monotone_in_decay(
            net in arb_net(),
            lemmas in prop::collection::vec(0usize..5, 1..6),
            depth in 1usize..=3,
            lo in 0.05f64..=1.0,
            bump in 0.0f64..0.5,
        ) {
            let hi = (lo + bump).min(1.0);
            let names: Vec<String> = lemmas.iter().map(|i| format!("l{i}")).collect();
            let v = TextView::from_tokens(&names, false);
            let g_lo = build_graph(&v, &net, depth, lo);
            let g_hi = build_graph(&v, &net, depth, hi);
            for (c, w) in &g_lo.weights {
                let h = g_hi.weights.get(c).copied().unwrap_or(0.0);
                prop_assert!(h + 1e-12 >= *w, "{} {} -> {}", c, w, h);
            }
        }

        #[test]
        fn kga_symmetric_and_bounded(
            net in arb_net(),
            a in prop::collection::vec(0usize..5, 0..6),
            b in prop::collection::vec(0usize..5, 0..6),
        ) {
            let va = TextView::from_tokens(&a.iter().map(|i| format!("l{i}")).collect::<Vec<_>>(), false);
            let vb = TextView::from_tokens(&b.iter().map(|i| format!("l{i}")).collect::<Vec<_>>(), false);
            let ga = build_graph(&va, &net, 2, 0.5);
            let gb = build_graph(&vb, &net, 2, 0.5);
            let s = kga_similarity(&ga, &gb);
            prop_assert_eq!(s, kga_similarity(&gb, &ga));
            prop_assert!((0.0..=1.0).contains(&s));
        }
    }
}
