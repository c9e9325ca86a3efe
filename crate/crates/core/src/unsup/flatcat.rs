//! Category HMM over morph sequences, refined with EM on top of a baseline
//! segmentation.
//!
//! Hidden states are PRE, STM, SUF and NON, plus a word-boundary state. The
//! word grammar is `(PRE* STM SUF*)+` with NON allowed at word edges and
//! between groups:
//!
//! ```text
//! from \ to   PRE STM SUF NON  #
//! #            x   x       x
//! PRE          x   x
//! STM          x   x   x   x   x
//! SUF          x   x   x   x   x
//! NON          x   x       x   x
//! ```

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::iter::Peekable;

use super::{MorfModel, Variant};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Category {
    Pre = 0,
    Stm = 1,
    Suf = 2,
    Non = 3,
}

pub const CATEGORIES: [Category; 4] = [Category::Pre, Category::Stm, Category::Suf, Category::Non];

/// Row/column index of the word-boundary state in the transition table.
pub const BOUNDARY: usize = 4;

const ALLOWED: [[bool; 5]; 5] = [
    // PRE
    [true, true, false, false, false],
    // STM
    [true, true, true, true, true],
    // SUF
    [true, true, true, true, true],
    // NON
    [true, true, false, true, true],
    // boundary (word start)
    [true, true, false, true, false],
];

const NAMES: [&str; 5] = ["PRE", "STM", "SUF", "NON", "#"];

fn state_from_name(s: &str) -> Option<usize> {
    NAMES.iter().position(|n| *n == s)
}

impl Category {
    pub fn name(self) -> &'static str {
        NAMES[self as usize]
    }
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

#[derive(Clone, Debug, PartialEq)]
pub struct CategoryModel {
    /// `transitions[from][to]` = log P(to | from); index 4 is the boundary.
    pub transitions: [[f64; 5]; 5],
    /// `emissions[c][morph]` = log P(morph | c). Missing entries of a known
    /// morph have probability zero.
    pub emissions: [BTreeMap<String, f64>; 4],
}

impl CategoryModel {
    pub fn allowed(from: usize, to: usize) -> bool {
        ALLOWED[from][to]
    }

    /// Degenerate parameters: every morph is a stem emitted with its
    /// baseline unigram probability and all stem transitions cost nothing.
    /// Not a normalized model; joint decoding with it reproduces the
    /// baseline's Viterbi segmentation.
    pub fn single_stem(baseline: &MorfModel) -> Self {
        let mut transitions = [[f64::NEG_INFINITY; 5]; 5];
        let stm = Category::Stm as usize;
        transitions[BOUNDARY][stm] = 0.0;
        transitions[stm][stm] = 0.0;
        transitions[stm][BOUNDARY] = 0.0;
        let mut emissions: [BTreeMap<String, f64>; 4] = Default::default();
        emissions[stm] = baseline
            .lexicon
            .keys()
            .map(|m| (m.clone(), -baseline.morph_cost(m)))
            .collect();
        CategoryModel {
            transitions,
            emissions,
        }
    }

    fn is_known(&self, morph: &str) -> bool {
        self.emissions.iter().any(|e| e.contains_key(morph))
    }

    /// log P(morph | c); unseen morphs fall back to the lexicon's unseen cost.
    pub fn emission(&self, model: &MorfModel, c: Category, morph: &str) -> f64 {
        match self.emissions[c as usize].get(morph) {
            Some(&lp) => lp,
            None if self.is_known(morph) => f64::NEG_INFINITY,
            None => -model.unseen_cost(morph.chars().count()),
        }
    }

    /// Joint log-probability of a morph sequence and a category sequence.
    pub fn joint_log_prob(&self, morphs: &[String], cats: &[Category]) -> f64 {
        let mut lp = 0.0;
        let mut prev = BOUNDARY;
        for (m, &c) in morphs.iter().zip(cats) {
            lp += self.transitions[prev][c as usize];
            lp += self.emissions[c as usize].get(m).copied().unwrap_or(f64::NEG_INFINITY);
            prev = c as usize;
        }
        lp + self.transitions[prev][BOUNDARY]
    }

    /// Per-position category posteriors for a morph sequence (forward-backward).
    pub fn posteriors(&self, morphs: &[String]) -> Vec<[f64; 4]> {
        let emit: Vec<[f64; 4]> = morphs
            .iter()
            .map(|m| {
                let mut e = [f64::NEG_INFINITY; 4];
                for c in 0..4 {
                    e[c] = self.emissions[c].get(m).copied().unwrap_or(f64::NEG_INFINITY);
                }
                e
            })
            .collect();
        let fb = forward_backward(&self.transitions, &emit);
        fb.gamma
    }

    /// Best joint (split point, category) analysis of `word`.
    pub fn segment(&self, model: &MorfModel, word: &str) -> Vec<String> {
        let chars: Vec<char> = word.chars().collect();
        let n = chars.len();
        if n == 0 {
            return Vec::new();
        }
        // score[j][c]: best log score of chars[..j] whose last morph has category c
        let mut score = vec![[f64::NEG_INFINITY; 4]; n + 1];
        let mut back = vec![[(0usize, BOUNDARY); 4]; n + 1];
        let mut buf = String::new();
        for end in 1..=n {
            for start in 0..end {
                buf.clear();
                buf.extend(&chars[start..end]);
                for c in CATEGORIES {
                    let e = self.emission(model, c, &buf);
                    if e == f64::NEG_INFINITY {
                        continue;
                    }
                    let ci = c as usize;
                    if start == 0 {
                        let s = self.transitions[BOUNDARY][ci] + e;
                        if s > score[end][ci] {
                            score[end][ci] = s;
                            back[end][ci] = (0, BOUNDARY);
                        }
                    } else {
                        for p in 0..4 {
                            let s = score[start][p] + self.transitions[p][ci] + e;
                            if s > score[end][ci] {
                                score[end][ci] = s;
                                back[end][ci] = (start, p);
                            }
                        }
                    }
                }
            }
        }
        let mut best = (f64::NEG_INFINITY, BOUNDARY);
        for c in 0..4 {
            let s = score[n][c] + self.transitions[c][BOUNDARY];
            if s > best.0 {
                best = (s, c);
            }
        }
        if best.0 == f64::NEG_INFINITY {
            return model.viterbi_segment(word);
        }
        let mut morphs = Vec::new();
        let (mut end, mut c) = (n, best.1);
        while end > 0 {
            let (start, prev) = back[end][c];
            morphs.push(chars[start..end].iter().collect());
            end = start;
            c = prev;
        }
        morphs.reverse();
        morphs
    }

    /// Largest deviation from 1 of any transition row or emission distribution.
    pub fn normalization_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (from, row) in self.transitions.iter().enumerate() {
            let s: f64 = (0..5).filter(|&to| ALLOWED[from][to]).map(|to| row[to].exp()).sum();
            worst = worst.max((s - 1.0).abs());
        }
        for e in &self.emissions {
            let s: f64 = e.values().map(|lp| lp.exp()).sum();
            worst = worst.max((s - 1.0).abs());
        }
        worst
    }

    pub(crate) fn write_block(&self, out: &mut String) {
        out.push_str("transitions:\n");
        for from in 0..5 {
            for to in 0..5 {
                if ALLOWED[from][to] {
                    let _ = writeln!(out, "{}\t{}\t{}", NAMES[from], NAMES[to], self.transitions[from][to]);
                }
            }
        }
        out.push_str("emissions:\n");
        for c in CATEGORIES {
            for (m, lp) in &self.emissions[c as usize] {
                let _ = writeln!(out, "{}\t{m}\t{lp}", c.name());
            }
        }
    }

    pub(crate) fn read_block<'a, I>(lines: &mut Peekable<I>) -> Result<Self>
    where
        I: Iterator<Item = (usize, &'a str)>,
    {
        let mut transitions = [[f64::NEG_INFINITY; 5]; 5];
        let mut emissions: [BTreeMap<String, f64>; 4] = Default::default();
        let mut section = "";
        for (i, line) in lines {
            let lineno = i + 1;
            match line {
                "transitions:" | "emissions:" => {
                    section = line;
                    continue;
                }
                _ => {}
            }
            let f: Vec<&str> = line.split('\t').collect();
            if f.len() != 3 {
                return Err(Error::parse(lineno, "expected three TAB-separated fields"));
            }
            let lp: f64 = f[2].parse().map_err(|_| Error::parse(lineno, "bad log-probability"))?;
            match section {
                "transitions:" => {
                    let from = state_from_name(f[0]).ok_or_else(|| Error::parse(lineno, "bad state"))?;
                    let to = state_from_name(f[1]).ok_or_else(|| Error::parse(lineno, "bad state"))?;
                    if !ALLOWED[from][to] {
                        return Err(Error::parse(lineno, "forbidden transition"));
                    }
                    transitions[from][to] = lp;
                }
                "emissions:" => {
                    let c = state_from_name(f[0])
                        .filter(|&c| c < 4)
                        .ok_or_else(|| Error::parse(lineno, "bad category"))?;
                    emissions[c].insert(f[1].to_owned(), lp);
                }
                _ => return Err(Error::parse(lineno, "category block without section header")),
            }
        }
        Ok(CategoryModel {
            transitions,
            emissions,
        })
    }
}

struct ForwardBackward {
    log_z: f64,
    gamma: Vec<[f64; 4]>,
    /// Expected transition counts between consecutive morphs.
    xi: [[f64; 4]; 4],
}

fn forward_backward(trans: &[[f64; 5]; 5], emit: &[[f64; 4]]) -> ForwardBackward {
    let n = emit.len();
    let mut alpha = vec![[f64::NEG_INFINITY; 4]; n];
    let mut beta = vec![[f64::NEG_INFINITY; 4]; n];
    for c in 0..4 {
        alpha[0][c] = trans[BOUNDARY][c] + emit[0][c];
    }
    for t in 1..n {
        for c in 0..4 {
            let terms: Vec<f64> = (0..4).map(|p| alpha[t - 1][p] + trans[p][c]).collect();
            alpha[t][c] = log_sum_exp(&terms) + emit[t][c];
        }
    }
    let end: Vec<f64> = (0..4).map(|c| alpha[n - 1][c] + trans[c][BOUNDARY]).collect();
    let log_z = log_sum_exp(&end);
    for c in 0..4 {
        beta[n - 1][c] = trans[c][BOUNDARY];
    }
    for t in (0..n - 1).rev() {
        for c in 0..4 {
            let terms: Vec<f64> = (0..4)
                .map(|nx| trans[c][nx] + emit[t + 1][nx] + beta[t + 1][nx])
                .collect();
            beta[t][c] = log_sum_exp(&terms);
        }
    }
    let mut gamma = vec![[0.0; 4]; n];
    let mut xi = [[0.0; 4]; 4];
    if log_z == f64::NEG_INFINITY {
        return ForwardBackward { log_z, gamma, xi };
    }
    for t in 0..n {
        for c in 0..4 {
            gamma[t][c] = (alpha[t][c] + beta[t][c] - log_z).exp();
        }
        if t + 1 < n {
            for p in 0..4 {
                for c in 0..4 {
                    xi[p][c] += (alpha[t][p] + trans[p][c] + emit[t + 1][c] + beta[t + 1][c] - log_z).exp();
                }
            }
        }
    }
    ForwardBackward { log_z, gamma, xi }
}

#[derive(Clone, Debug)]
pub struct FlatCatConfig {
    pub max_iters: usize,
    /// Stop once an EM iteration improves the log-likelihood by less than this.
    pub epsilon: f64,
    /// Distinct neighbours needed before a morph looks like an affix.
    pub diversity_threshold: f64,
    /// Length (in characters) around which a morph starts to look like a stem.
    pub stem_length: f64,
}

impl Default for FlatCatConfig {
    fn default() -> Self {
        FlatCatConfig {
            max_iters: 20,
            epsilon: 1e-6,
            diversity_threshold: 3.0,
            stem_length: 3.0,
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct FlatCatTrace {
    /// Data log-likelihood of the initial parameters and after each EM update.
    pub log_likelihoods: Vec<f64>,
    /// Category model right after heuristic initialization.
    pub initial: Option<CategoryModel>,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

struct EmState {
    trans: [[f64; 5]; 5],
    /// Per morph id, log P(morph | c).
    emit: Vec<[f64; 4]>,
}

impl EmState {
    fn e_step(&self, seqs: &[Vec<usize>]) -> Result<(f64, [[f64; 5]; 5], Vec<[f64; 4]>)> {
        let mut ll = 0.0;
        let mut tc = [[0.0; 5]; 5];
        let mut ec = vec![[0.0; 4]; self.emit.len()];
        for seq in seqs {
            let emit: Vec<[f64; 4]> = seq.iter().map(|&m| self.emit[m]).collect();
            let fb = forward_backward(&self.trans, &emit);
            if fb.log_z == f64::NEG_INFINITY {
                return Err(Error::Numeric("a training word has zero probability".into()));
            }
            ll += fb.log_z;
            for c in 0..4 {
                tc[BOUNDARY][c] += fb.gamma[0][c];
                tc[c][BOUNDARY] += fb.gamma[seq.len() - 1][c];
                for p in 0..4 {
                    tc[p][c] += fb.xi[p][c];
                }
            }
            for (t, &m) in seq.iter().enumerate() {
                for c in 0..4 {
                    ec[m][c] += fb.gamma[t][c];
                }
            }
        }
        Ok((ll, tc, ec))
    }

    fn m_step(&mut self, tc: &[[f64; 5]; 5], ec: &[[f64; 4]]) {
        for from in 0..5 {
            let s: f64 = (0..5).filter(|&to| ALLOWED[from][to]).map(|to| tc[from][to]).sum();
            if s > 0.0 {
                for to in 0..5 {
                    if ALLOWED[from][to] {
                        self.trans[from][to] = (tc[from][to] / s).ln();
                    }
                }
            }
        }
        for c in 0..4 {
            let s: f64 = ec.iter().map(|e| e[c]).sum();
            if s > 0.0 {
                for (m, e) in self.emit.iter_mut().enumerate() {
                    e[c] = (ec[m][c] / s).ln();
                }
            }
        }
    }

    fn to_model(&self, morphs: &[String]) -> CategoryModel {
        let mut emissions: [BTreeMap<String, f64>; 4] = Default::default();
        for (m, e) in morphs.iter().zip(&self.emit) {
            for c in 0..4 {
                if e[c] > f64::NEG_INFINITY {
                    emissions[c].insert(m.clone(), e[c]);
                }
            }
        }
        CategoryModel {
            transitions: self.trans,
            emissions,
        }
    }
}

pub fn train_flatcat(word_counts: &BTreeMap<String, u64>, baseline: &MorfModel, epsilon: f64) -> Result<MorfModel> {
    let config = FlatCatConfig {
        epsilon,
        ..FlatCatConfig::default()
    };
    Ok(train_flatcat_with(word_counts, baseline, &config)?.0)
}

/// Heuristic initialization, EM over the baseline segmentation, then joint
/// re-segmentation of every training word type.
pub fn train_flatcat_with(
    word_counts: &BTreeMap<String, u64>,
    baseline: &MorfModel,
    config: &FlatCatConfig,
) -> Result<(MorfModel, FlatCatTrace)> {
    let words: Vec<&str> = word_counts
        .iter()
        .filter(|(w, c)| **c > 0 && !w.is_empty())
        .map(|(w, _)| w.as_str())
        .collect();
    if words.is_empty() {
        return Err(Error::Empty("no words to train on".into()));
    }

    let mut ids: HashMap<String, usize> = HashMap::new();
    let mut morphs: Vec<String> = Vec::new();
    let seqs: Vec<Vec<usize>> = words
        .iter()
        .map(|w| {
            baseline
                .viterbi_segment(w)
                .into_iter()
                .map(|m| {
                    *ids.entry(m.clone()).or_insert_with(|| {
                        morphs.push(m);
                        morphs.len() - 1
                    })
                })
                .collect()
        })
        .collect();

    // neighbour diversity; usize::MAX stands for the word boundary
    let mut left: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); morphs.len()];
    let mut right: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); morphs.len()];
    let mut freq = vec![0.0; morphs.len()];
    for seq in &seqs {
        for (t, &m) in seq.iter().enumerate() {
            freq[m] += 1.0;
            left[m].insert(if t == 0 { usize::MAX } else { seq[t - 1] });
            right[m].insert(seq.get(t + 1).copied().unwrap_or(usize::MAX));
        }
    }
    let mut emit_prob = vec![[0.0; 4]; morphs.len()];
    for (m, morph) in morphs.iter().enumerate() {
        let pre = sigmoid(right[m].len() as f64 - config.diversity_threshold);
        let suf = sigmoid(left[m].len() as f64 - config.diversity_threshold);
        let stm = sigmoid(morph.chars().count() as f64 - config.stem_length);
        let non = (1.0 - pre) * (1.0 - suf) * (1.0 - stm);
        let raw = [pre + 1e-3, stm + 1e-3, suf + 1e-3, non + 1e-3];
        let z: f64 = raw.iter().sum();
        for c in 0..4 {
            emit_prob[m][c] = freq[m] * raw[c] / z;
        }
    }
    let mut state = EmState {
        trans: [[f64::NEG_INFINITY; 5]; 5],
        emit: vec![[0.0; 4]; morphs.len()],
    };
    for (from, row) in ALLOWED.iter().enumerate() {
        let k = row.iter().filter(|&&a| a).count() as f64;
        for (to, &a) in row.iter().enumerate() {
            if a {
                state.trans[from][to] = -(k.ln());
            }
        }
    }
    for c in 0..4 {
        let z: f64 = emit_prob.iter().map(|p| p[c]).sum();
        for (m, p) in emit_prob.iter().enumerate() {
            state.emit[m][c] = (p[c] / z).ln();
        }
    }
    let initial = state.to_model(&morphs);

    let mut lls = Vec::new();
    for _ in 0..config.max_iters {
        let (ll, tc, ec) = state.e_step(&seqs)?;
        if let Some(&prev) = lls.last() {
            if ll - prev < config.epsilon {
                lls.push(ll);
                break;
            }
        }
        lls.push(ll);
        state.m_step(&tc, &ec);
    }
    if lls.len() == config.max_iters {
        lls.push(state.e_step(&seqs)?.0);
    }

    let cats = state.to_model(&morphs);
    let mut lexicon: BTreeMap<String, u64> = BTreeMap::new();
    for w in &words {
        for m in cats.segment(baseline, w) {
            *lexicon.entry(m).or_insert(0) += 1;
        }
    }
    let mut model = MorfModel::from_lexicon(lexicon, baseline.alpha, Variant::FlatCat);
    model.categories = Some(cats);
    Ok((
        model,
        FlatCatTrace {
            log_likelihoods: lls,
            initial: Some(initial),
        },
    ))
}
