//! Porter (1980) suffix-stripping stemmer, steps 1a through 5b.
//!
//! Words of one or two characters are returned unchanged, as in Porter's own
//! reference implementation. Rule lists are scanned in order and the first
//! matching suffix decides the outcome, whether or not its condition holds.

type Cond = fn(&[char]) -> bool;

struct Rule {
    suffix: &'static str,
    replacement: &'static str,
    cond: Option<Cond>,
}

const fn rule(suffix: &'static str, replacement: &'static str, cond: Option<Cond>) -> Rule {
    Rule {
        suffix,
        replacement,
        cond,
    }
}

fn consonant_flags(w: &[char]) -> Vec<bool> {
    let mut flags: Vec<bool> = Vec::with_capacity(w.len());
    for (i, &ch) in w.iter().enumerate() {
        let c = match ch {
            'a' | 'e' | 'i' | 'o' | 'u' => false,
            'y' => i == 0 || !flags[i - 1],
            _ => true,
        };
        flags.push(c);
    }
    flags
}

fn is_consonant(w: &[char], i: usize) -> bool {
    consonant_flags(&w[..=i])[i]
}

/// Number of VC sequences in `[C](VC){m}[V]`.
fn measure(w: &[char]) -> usize {
    let flags = consonant_flags(w);
    flags.windows(2).filter(|p| !p[0] && p[1]).count()
}

fn m_gt0(s: &[char]) -> bool {
    measure(s) > 0
}

fn m_gt1(s: &[char]) -> bool {
    measure(s) > 1
}

fn contains_vowel(w: &[char]) -> bool {
    consonant_flags(w).iter().any(|&c| !c)
}

fn ends_double_consonant(w: &[char]) -> bool {
    let n = w.len();
    n >= 2 && w[n - 1] == w[n - 2] && is_consonant(w, n - 1)
}

/// `*o`: ends consonant-vowel-consonant, last consonant not w, x or y.
fn ends_cvc(w: &[char]) -> bool {
    let n = w.len();
    if n < 3 {
        return false;
    }
    let f = consonant_flags(w);
    f[n - 3] && !f[n - 2] && f[n - 1] && !matches!(w[n - 1], 'w' | 'x' | 'y')
}

fn ends_with(w: &[char], suffix: &str) -> bool {
    let n = suffix.chars().count();
    n <= w.len() && w[w.len() - n..].iter().copied().eq(suffix.chars())
}

fn strip(w: &[char], suffix: &str) -> Vec<char> {
    w[..w.len() - suffix.chars().count()].to_vec()
}

fn apply_rules(w: Vec<char>, rules: &[Rule]) -> Vec<char> {
    for r in rules {
        if ends_with(&w, r.suffix) {
            let mut stem = strip(&w, r.suffix);
            if r.cond.is_none_or(|c| c(&stem)) {
                stem.extend(r.replacement.chars());
                return stem;
            }
            return w;
        }
    }
    w
}

fn step1a(w: Vec<char>) -> Vec<char> {
    apply_rules(
        w,
        &[
            rule("sses", "ss", None),
            rule("ies", "i", None),
            rule("ss", "ss", None),
            rule("s", "", None),
        ],
    )
}

fn step1b(w: Vec<char>) -> Vec<char> {
    if ends_with(&w, "eed") {
        let stem = strip(&w, "eed");
        if measure(&stem) > 0 {
            let mut out = stem;
            out.extend("ee".chars());
            return out;
        }
        return w;
    }
    let mut stem = None;
    for suffix in ["ed", "ing"] {
        if ends_with(&w, suffix) {
            let s = strip(&w, suffix);
            if contains_vowel(&s) {
                stem = Some(s);
                break;
            }
        }
    }
    let Some(mut stem) = stem else {
        return w;
    };
    for (suf, rep) in [("at", "ate"), ("bl", "ble"), ("iz", "ize")] {
        if ends_with(&stem, suf) {
            stem.truncate(stem.len() - suf.len());
            stem.extend(rep.chars());
            return stem;
        }
    }
    if ends_double_consonant(&stem) {
        let last = stem[stem.len() - 1];
        if !matches!(last, 'l' | 's' | 'z') {
            stem.pop();
        }
        return stem;
    }
    if measure(&stem) == 1 && ends_cvc(&stem) {
        stem.push('e');
    }
    stem
}

fn step1c(w: Vec<char>) -> Vec<char> {
    apply_rules(w, &[rule("y", "i", Some(contains_vowel))])
}

fn step2(w: Vec<char>) -> Vec<char> {
    const P: Option<Cond> = Some(m_gt0);
    apply_rules(
        w,
        &[
            rule("ational", "ate", P),
            rule("tional", "tion", P),
            rule("enci", "ence", P),
            rule("anci", "ance", P),
            rule("izer", "ize", P),
            rule("abli", "able", P),
            rule("alli", "al", P),
            rule("entli", "ent", P),
            rule("eli", "e", P),
            rule("ousli", "ous", P),
            rule("ization", "ize", P),
            rule("ation", "ate", P),
            rule("ator", "ate", P),
            rule("alism", "al", P),
            rule("iveness", "ive", P),
            rule("fulness", "ful", P),
            rule("ousness", "ous", P),
            rule("aliti", "al", P),
            rule("iviti", "ive", P),
            rule("biliti", "ble", P),
        ],
    )
}

fn step3(w: Vec<char>) -> Vec<char> {
    const P: Option<Cond> = Some(m_gt0);
    apply_rules(
        w,
        &[
            rule("icate", "ic", P),
            rule("ative", "", P),
            rule("alize", "al", P),
            rule("iciti", "ic", P),
            rule("ical", "ic", P),
            rule("ful", "", P),
            rule("ness", "", P),
        ],
    )
}

fn ion_cond(s: &[char]) -> bool {
    measure(s) > 1 && matches!(s.last(), Some('s' | 't'))
}

fn step4(w: Vec<char>) -> Vec<char> {
    const Q: Option<Cond> = Some(m_gt1);
    apply_rules(
        w,
        &[
            rule("al", "", Q),
            rule("ance", "", Q),
            rule("ence", "", Q),
            rule("er", "", Q),
            rule("ic", "", Q),
            rule("able", "", Q),
            rule("ible", "", Q),
            rule("ant", "", Q),
            rule("ement", "", Q),
            rule("ment", "", Q),
            rule("ent", "", Q),
            rule("ion", "", Some(ion_cond)),
            rule("ou", "", Q),
            rule("ism", "", Q),
            rule("ate", "", Q),
            rule("iti", "", Q),
            rule("ous", "", Q),
            rule("ive", "", Q),
            rule("ize", "", Q),
        ],
    )
}

fn step5a(w: Vec<char>) -> Vec<char> {
    if w.last() == Some(&'e') {
        let stem = strip(&w, "e");
        let m = measure(&stem);
        if m > 1 || (m == 1 && !ends_cvc(&stem)) {
            return stem;
        }
    }
    w
}

fn step5b(mut w: Vec<char>) -> Vec<char> {
    if ends_with(&w, "ll") && measure(&w[..w.len() - 1]) > 1 {
        w.pop();
    }
    w
}

/// Stems one lowercase token.
pub fn porter_stem(token: &str) -> String {
    let w: Vec<char> = token.chars().collect();
    if w.len() <= 2 {
        return token.to_string();
    }
    let w = step1a(w);
    let w = step1b(w);
    let w = step1c(w);
    let w = step2(w);
    let w = step3(w);
    let w = step4(w);
    let w = step5a(w);
    let w = step5b(w);
    w.into_iter().collect()
}
