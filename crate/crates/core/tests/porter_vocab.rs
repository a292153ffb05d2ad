//! Reference stems for the original Porter algorithm.

use cqarank::preprocess::porter_stem;

#[test]
fn matches_reference_vocabulary() {
    let table = include_str!("data/porter_vocab.tsv");
    let mut mismatches = Vec::new();
    let mut n = 0;
    for line in table.lines().filter(|l| !l.is_empty()) {
        let (word, stem) = line.split_once('\t').expect("word<TAB>stem");
        n += 1;
        let got = porter_stem(word);
        if got != stem {
            mismatches.push(format!("{word}: expected {stem}, got {got}"));
        }
    }
    assert!(n >= 100, "only {n} reference entries");
    assert!(
        mismatches.is_empty(),
        "{} mismatches:\n{}",
        mismatches.len(),
        mismatches.join("\n")
    );
}
