//! Unsupervised morph segmentation under a two-part description-length
//! objective.
//!
//! The cost of a model is `corpus + alpha * lexicon`, in nats:
//!
//! * corpus: `-sum_m count(m) * ln(count(m) / total)`, the ML code length of
//!   the morph tokens;
//! * lexicon: every morph type is spelled out with a uniform code over the
//!   alphabet plus an end-of-morph symbol, `(|m| + 1) * ln(|alphabet| + 1)`.
//!
//! The lexicon-ordering correction (`-ln M!`) is left out.

mod cost;
mod flatcat;
mod train;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

pub use cost::CostState;
pub use flatcat::{
    train_flatcat, train_flatcat_with, Category, CategoryModel, CATEGORIES, FlatCatConfig, FlatCatTrace, BOUNDARY,
};
pub use train::{train_baseline, train_lmvr, train_morf, CountMode, MorfConfig, TrainTrace};

use crate::corpus::{Sentence, SegmentedWord};
use crate::error::{Error, Result};
use crate::exec::Exec;

pub const DEFAULT_ALPHA: f64 = 1.0;
pub const DEFAULT_EPSILON: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variant {
    Baseline,
    Lmvr,
    FlatCat,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Baseline => "baseline",
            Variant::Lmvr => "lmvr",
            Variant::FlatCat => "flatcat",
        })
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "baseline" => Ok(Variant::Baseline),
            "lmvr" => Ok(Variant::Lmvr),
            "flatcat" => Ok(Variant::FlatCat),
            other => Err(Error::Config(format!("unknown morf variant {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MdlCost {
    pub corpus_cost: f64,
    pub lexicon_cost: f64,
    pub alpha: f64,
}

impl MdlCost {
    pub fn total(&self) -> f64 {
        self.corpus_cost + self.alpha * self.lexicon_cost
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MorfModel {
    pub lexicon: BTreeMap<String, u64>,
    pub total_tokens: u64,
    pub alphabet: BTreeSet<char>,
    pub alpha: f64,
    pub variant: Variant,
    pub max_lexicon_size: Option<usize>,
    pub categories: Option<CategoryModel>,
}

/// Cost of spelling `len` characters plus the end-of-morph symbol.
pub(crate) fn spelling_cost(len: usize, alphabet_size: usize) -> f64 {
    (len as f64 + 1.0) * ((alphabet_size + 1) as f64).ln()
}

impl MorfModel {
    /// Build a model from a morph lexicon; the alphabet is read off the morphs.
    pub fn from_lexicon(lexicon: BTreeMap<String, u64>, alpha: f64, variant: Variant) -> Self {
        let lexicon: BTreeMap<String, u64> = lexicon.into_iter().filter(|(_, c)| *c > 0).collect();
        let alphabet = lexicon.keys().flat_map(|m| m.chars()).collect();
        MorfModel {
            total_tokens: lexicon.values().sum(),
            lexicon,
            alphabet,
            alpha,
            variant,
            max_lexicon_size: None,
            categories: None,
        }
    }

    /// Code length of `morph` as used by Viterbi inference. Unseen morphs pay
    /// the cost of adding them to the lexicon plus a one-token corpus cost.
    pub fn morph_cost(&self, morph: &str) -> f64 {
        match self.lexicon.get(morph) {
            Some(&c) => (self.total_tokens as f64).ln() - (c as f64).ln(),
            None => self.unseen_cost(morph.chars().count()),
        }
    }

    pub(crate) fn unseen_cost(&self, len: usize) -> f64 {
        self.alpha * spelling_cost(len, self.alphabet.len()) + ((self.total_tokens + 1) as f64).ln()
    }

    /// Minimum-cost segmentation under the morph lexicon alone.
    pub fn viterbi_segment(&self, word: &str) -> Vec<String> {
        let chars: Vec<char> = word.chars().collect();
        let n = chars.len();
        if n == 0 {
            return Vec::new();
        }
        let mut best = vec![f64::INFINITY; n + 1];
        let mut back = vec![0usize; n + 1];
        best[0] = 0.0;
        let mut buf = String::new();
        for end in 1..=n {
            for start in 0..end {
                buf.clear();
                buf.extend(&chars[start..end]);
                let c = best[start] + self.morph_cost(&buf);
                if c < best[end] {
                    best[end] = c;
                    back[end] = start;
                }
            }
        }
        let mut morphs = Vec::new();
        let mut end = n;
        while end > 0 {
            let start = back[end];
            morphs.push(chars[start..end].iter().collect());
            end = start;
        }
        morphs.reverse();
        morphs
    }

    /// Segment one word with the full model (category lattice when present).
    pub fn segment(&self, word: &str) -> Vec<String> {
        match &self.categories {
            Some(cats) => cats.segment(self, word),
            None => self.viterbi_segment(word),
        }
    }

    pub fn segment_word(&self, word: &str) -> SegmentedWord {
        SegmentedWord::surface(word, self.segment(word))
            .expect("segmentation preserves the surface form")
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("morf v1 {} {}", self.variant, self.alpha);
        if let Some(cap) = self.max_lexicon_size {
            let _ = write!(out, " {cap}");
        }
        out.push('\n');
        for (m, c) in &self.lexicon {
            let _ = writeln!(out, "{m}\t{c}");
        }
        if let Some(cats) = &self.categories {
            cats.write_block(&mut out);
        }
        out
    }

    pub fn from_text(text: &str) -> Result<MorfModel> {
        let mut lines = text.lines().enumerate().peekable();
        let (_, header) = lines.next().ok_or_else(|| Error::parse(1, "empty model file"))?;
        let fields: Vec<&str> = header.split(' ').collect();
        if !(4..=5).contains(&fields.len()) || fields[0] != "morf" || fields[1] != "v1" {
            return Err(Error::parse(1, format!("bad morf header {header:?}")));
        }
        let variant: Variant = fields[2].parse()?;
        let alpha: f64 = fields[3].parse().map_err(|_| Error::parse(1, "bad alpha"))?;
        let cap = match fields.get(4) {
            Some(c) => Some(c.parse::<usize>().map_err(|_| Error::parse(1, "bad lexicon cap"))?),
            None => None,
        };
        let mut lexicon = BTreeMap::new();
        while let Some(&(i, line)) = lines.peek() {
            if line == "transitions:" {
                break;
            }
            lines.next();
            let (m, c) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(i + 1, "expected morph<TAB>count"))?;
            let c: u64 = c.parse().map_err(|_| Error::parse(i + 1, "bad count"))?;
            if m.is_empty() {
                return Err(Error::parse(i + 1, "empty morph"));
            }
            lexicon.insert(m.to_owned(), c);
        }
        let mut model = MorfModel::from_lexicon(lexicon, alpha, variant);
        model.max_lexicon_size = cap;
        if lines.peek().is_some() {
            model.categories = Some(CategoryModel::read_block(&mut lines)?);
        }
        Ok(model)
    }
}

/// Closed-form description length of a model state.
pub fn mdl_cost(model: &MorfModel) -> MdlCost {
    let total = model.total_tokens as f64;
    let corpus_cost = -model
        .lexicon
        .values()
        .map(|&c| c as f64 * (c as f64 / total).ln())
        .sum::<f64>();
    let lexicon_cost = model
        .lexicon
        .keys()
        .map(|m| spelling_cost(m.chars().count(), model.alphabet.len()))
        .sum();
    MdlCost {
        corpus_cost,
        lexicon_cost,
        alpha: model.alpha,
    }
}

/// Segment every token of every sentence, preserving order.
pub fn segment_corpus(model: &MorfModel, sentences: &[Sentence], exec: Exec) -> Vec<Vec<SegmentedWord>> {
    exec.map(sentences, |s| s.tokens().iter().map(|t| model.segment_word(t)).collect())
}
