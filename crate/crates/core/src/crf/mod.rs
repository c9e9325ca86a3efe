//! Supervised surface segmentation as BMES character tagging with a
//! linear-chain CRF.
//!
//! Allowed label transitions:
//!
//! ```text
//! B -> M, E     M -> M, E     E -> B, S     S -> B, S
//! ```
//!
//! A word starts with B or S and ends with E or S. Forbidden transitions hold
//! `-inf` weight and never change during training.

mod features;
mod train;

use std::collections::BTreeMap;
use std::fmt;
use std::fmt::Write as _;

pub use features::{extract_features, BOS, EOS};
pub use train::{
    log_likelihood_and_gradient, train_crf, train_crf_with, CrfGradient, CrfTrainConfig, CrfTrace, Objective,
};

use crate::corpus::SegmentedWord;
use crate::error::{Error, Result};

pub const DEFAULT_DELTA: usize = 3;
pub const DEFAULT_L2: f64 = 0.01;

/// Labels in tie-break order `B < E < M < S`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Label {
    B = 0,
    E = 1,
    M = 2,
    S = 3,
}

pub const LABELS: [Label; 4] = [Label::B, Label::E, Label::M, Label::S];

impl Label {
    pub fn from_index(i: usize) -> Label {
        LABELS[i]
    }

    pub fn can_start(self) -> bool {
        matches!(self, Label::B | Label::S)
    }

    pub fn can_end(self) -> bool {
        matches!(self, Label::E | Label::S)
    }

    pub fn can_follow(self, prev: Label) -> bool {
        use Label::*;
        matches!((prev, self), (B | M, M | E) | (E | S, B | S))
    }

    fn parse(s: &str) -> Option<Label> {
        Some(match s {
            "B" => Label::B,
            "E" => Label::E,
            "M" => Label::M,
            "S" => Label::S,
            _ => return None,
        })
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

pub(crate) fn start_weight(y: usize) -> f64 {
    if LABELS[y].can_start() {
        0.0
    } else {
        f64::NEG_INFINITY
    }
}

pub(crate) fn end_weight(y: usize) -> f64 {
    if LABELS[y].can_end() {
        0.0
    } else {
        f64::NEG_INFINITY
    }
}

/// Whether a label sequence is a well-formed BMES tagging.
pub fn is_well_formed(labels: &[Label]) -> bool {
    match (labels.first(), labels.last()) {
        (Some(f), Some(l)) => {
            f.can_start() && l.can_end() && labels.windows(2).all(|p| p[1].can_follow(p[0]))
        }
        _ => false,
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BmesSequence {
    pub chars: Vec<char>,
    pub labels: Vec<Label>,
}

impl BmesSequence {
    pub fn from_word(word: &SegmentedWord) -> Self {
        let mut chars = Vec::new();
        let mut labels = Vec::new();
        for m in &word.morphs {
            let mc: Vec<char> = m.chars().collect();
            let n = mc.len();
            for (k, c) in mc.into_iter().enumerate() {
                chars.push(c);
                labels.push(match (n, k) {
                    (1, _) => Label::S,
                    (_, 0) => Label::B,
                    (n, k) if k + 1 == n => Label::E,
                    _ => Label::M,
                });
            }
        }
        BmesSequence { chars, labels }
    }

    pub fn validate(&self, index: usize) -> Result<()> {
        if self.chars.len() != self.labels.len() {
            return Err(Error::Data {
                index,
                message: "label count differs from character count".into(),
            });
        }
        if !is_well_formed(&self.labels) {
            let tags: String = self.labels.iter().map(|l| l.to_string()).collect();
            return Err(Error::Data {
                index,
                message: format!("malformed BMES labels {tags:?}"),
            });
        }
        Ok(())
    }

    /// Split after every E and S.
    pub fn to_morphs(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut cur = String::new();
        for (c, l) in self.chars.iter().zip(&self.labels) {
            cur.push(*c);
            if matches!(l, Label::E | Label::S) {
                out.push(std::mem::take(&mut cur));
            }
        }
        if !cur.is_empty() {
            out.push(cur);
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CrfModel {
    pub delta: usize,
    pub l2: f64,
    /// Per-feature weights indexed by label.
    pub weights: BTreeMap<String, [f64; 4]>,
    /// `transitions[prev][next]`; `-inf` on forbidden pairs.
    pub transitions: [[f64; 4]; 4],
}

pub(crate) fn forbidden_mask() -> [[f64; 4]; 4] {
    let mut t = [[0.0; 4]; 4];
    for p in 0..4 {
        for n in 0..4 {
            if !LABELS[n].can_follow(LABELS[p]) {
                t[p][n] = f64::NEG_INFINITY;
            }
        }
    }
    t
}

impl CrfModel {
    /// All-zero weights.
    pub fn zero(delta: usize, l2: f64) -> Self {
        CrfModel {
            delta,
            l2,
            weights: BTreeMap::new(),
            transitions: forbidden_mask(),
        }
    }

    /// Per-position label scores.
    pub fn emissions(&self, chars: &[char]) -> Vec<[f64; 4]> {
        (0..chars.len())
            .map(|i| {
                let mut e = [0.0; 4];
                for f in extract_features(chars, i, self.delta) {
                    if let Some(w) = self.weights.get(&f) {
                        for y in 0..4 {
                            e[y] += w[y];
                        }
                    }
                }
                e
            })
            .collect()
    }

    /// Unnormalized score of a labeling.
    pub fn score(&self, chars: &[char], labels: &[Label]) -> f64 {
        score_with(&self.emissions(chars), &self.transitions, labels)
    }

    /// Highest-scoring well-formed labeling; ties go to the lexicographically
    /// smallest sequence under `B < E < M < S`.
    pub fn viterbi(&self, chars: &[char]) -> Vec<Label> {
        let n = chars.len();
        if n == 0 {
            return Vec::new();
        }
        let em = self.emissions(chars);
        // suffix[i][y]: best score of positions i.. given label y at i
        let mut suffix = vec![[f64::NEG_INFINITY; 4]; n];
        for y in 0..4 {
            suffix[n - 1][y] = em[n - 1][y] + end_weight(y);
        }
        for i in (0..n - 1).rev() {
            for y in 0..4 {
                let best = (0..4)
                    .map(|nx| self.transitions[y][nx] + suffix[i + 1][nx])
                    .fold(f64::NEG_INFINITY, f64::max);
                suffix[i][y] = em[i][y] + best;
            }
        }
        let pick = |vals: [f64; 4]| -> usize {
            let best = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            vals.iter().position(|&v| v == best).expect("non-empty")
        };
        let mut labels = Vec::with_capacity(n);
        let mut prev = pick(std::array::from_fn(|y| start_weight(y) + suffix[0][y]));
        labels.push(LABELS[prev]);
        for row in suffix.iter().skip(1) {
            prev = pick(std::array::from_fn(|y| self.transitions[prev][y] + row[y]));
            labels.push(LABELS[prev]);
        }
        labels
    }

    pub fn decode(&self, word: &str) -> SegmentedWord {
        let chars: Vec<char> = word.chars().collect();
        let labels = self.viterbi(&chars);
        let morphs = BmesSequence { chars, labels }.to_morphs();
        SegmentedWord::surface(word, morphs).expect("BMES decoding preserves the surface form")
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("crf v1 {} {}\n", self.delta, self.l2);
        for (f, w) in &self.weights {
            let key = features::escape(f);
            for (y, v) in w.iter().enumerate() {
                if *v != 0.0 {
                    let _ = writeln!(out, "{key}\t{}\t{v}", LABELS[y]);
                }
            }
        }
        out.push_str("transitions:\n");
        for p in 0..4 {
            for n in 0..4 {
                if LABELS[n].can_follow(LABELS[p]) {
                    let _ = writeln!(out, "{}\t{}\t{}", LABELS[p], LABELS[n], self.transitions[p][n]);
                }
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<CrfModel> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or_else(|| Error::parse(1, "empty model file"))?;
        let h: Vec<&str> = header.split(' ').collect();
        if h.len() != 4 || h[0] != "crf" || h[1] != "v1" {
            return Err(Error::parse(1, format!("bad crf header {header:?}")));
        }
        let delta: usize = h[2].parse().map_err(|_| Error::parse(1, "bad delta"))?;
        let l2: f64 = h[3].parse().map_err(|_| Error::parse(1, "bad l2"))?;
        let mut model = CrfModel::zero(delta, l2);
        let mut in_transitions = false;
        for (i, line) in lines {
            let lineno = i + 1;
            if line == "transitions:" {
                in_transitions = true;
                continue;
            }
            let f: Vec<&str> = line.split('\t').collect();
            if f.len() != 3 {
                return Err(Error::parse(lineno, "expected three TAB-separated fields"));
            }
            let v: f64 = f[2].parse().map_err(|_| Error::parse(lineno, "bad weight"))?;
            if in_transitions {
                let (p, n) = Label::parse(f[0])
                    .zip(Label::parse(f[1]))
                    .ok_or_else(|| Error::parse(lineno, "bad label"))?;
                if !n.can_follow(p) {
                    return Err(Error::parse(lineno, "forbidden transition"));
                }
                model.transitions[p as usize][n as usize] = v;
            } else {
                let key = features::unescape(f[0]).ok_or_else(|| Error::parse(lineno, "bad feature escape"))?;
                let y = Label::parse(f[1]).ok_or_else(|| Error::parse(lineno, "bad label"))?;
                model.weights.entry(key).or_insert([0.0; 4])[y as usize] = v;
            }
        }
        Ok(model)
    }
}

pub(crate) fn score_with(em: &[[f64; 4]], trans: &[[f64; 4]; 4], labels: &[Label]) -> f64 {
    let mut s = 0.0;
    for (i, &y) in labels.iter().enumerate() {
        let yi = y as usize;
        s += em[i][yi];
        if i == 0 {
            s += start_weight(yi);
        } else {
            s += trans[labels[i - 1] as usize][yi];
        }
    }
    if let Some(&last) = labels.last() {
        s += end_weight(last as usize);
    }
    s
}
