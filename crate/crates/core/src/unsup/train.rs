//! Greedy recursive-splitting search shared by the baseline and the
//! lexicon-capped variant.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::cost::CostState;
use super::{mdl_cost, MorfModel, Variant, DEFAULT_ALPHA, DEFAULT_EPSILON};
use crate::error::{Error, Result};

/// How corpus counts enter the corpus cost.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CountMode {
    /// Every word type counts once.
    Types,
    /// Word token frequencies.
    Tokens,
}

#[derive(Clone, Debug)]
pub struct MorfConfig {
    pub alpha: f64,
    pub seed: u64,
    pub epsilon: f64,
    pub counts: CountMode,
    pub max_lexicon_size: Option<usize>,
    pub max_epochs: usize,
}

impl Default for MorfConfig {
    fn default() -> Self {
        MorfConfig {
            alpha: DEFAULT_ALPHA,
            seed: 1917,
            epsilon: DEFAULT_EPSILON,
            counts: CountMode::Types,
            max_lexicon_size: None,
            max_epochs: 100,
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct TrainTrace {
    /// Total cost of the initial state followed by the cost after each epoch.
    pub epoch_costs: Vec<f64>,
    /// Final analysis of each training word type.
    pub analyses: BTreeMap<String, Vec<String>>,
    /// Largest lexicon size observed in any accepted state.
    pub max_lexicon_seen: usize,
}

pub fn train_baseline(word_counts: &BTreeMap<String, u64>, alpha: f64, seed: u64, epsilon: f64) -> Result<MorfModel> {
    let config = MorfConfig {
        alpha,
        seed,
        epsilon,
        ..MorfConfig::default()
    };
    Ok(train_morf(word_counts, &config)?.0)
}

/// Token-count corpus cost with a hard cap on the number of morph types.
pub fn train_lmvr(
    word_counts: &BTreeMap<String, u64>,
    alpha: f64,
    max_lexicon_size: usize,
    seed: u64,
    epsilon: f64,
) -> Result<MorfModel> {
    let config = MorfConfig {
        alpha,
        seed,
        epsilon,
        counts: CountMode::Tokens,
        max_lexicon_size: Some(max_lexicon_size),
        ..MorfConfig::default()
    };
    Ok(train_morf(word_counts, &config)?.0)
}

/// Re-analyses must lower the cost by more than rounding noise.
const MIN_GAIN: f64 = 1e-9;

struct Trainer {
    state: CostState,
    cap: Option<usize>,
    max_seen: usize,
}

impl Trainer {
    fn admissible(&self) -> bool {
        self.cap.is_none_or(|cap| self.state.lexicon_size() <= cap)
    }

    fn add_all(&mut self, morphs: &[String], w: u64) {
        for m in morphs {
            self.state.add(m, w);
        }
    }

    fn remove_all(&mut self, morphs: &[String], w: u64) {
        for m in morphs {
            self.state.remove(m, w);
        }
    }

    fn accept(&mut self) {
        let size = self.state.lexicon_size();
        if let Some(cap) = self.cap {
            assert!(size <= cap, "lexicon size {size} exceeds cap {cap}");
        }
        self.max_seen = self.max_seen.max(size);
    }

    /// Find an analysis for `morph` (not currently counted) by testing it
    /// whole and at every binary split point, then recursing into the halves
    /// of the best split. Leaves the chosen analysis counted. Returns `None`
    /// (with nothing counted) when no option respects the lexicon cap.
    fn optimize(&mut self, morph: &str, w: u64) -> Option<Vec<String>> {
        let chars: Vec<char> = morph.chars().collect();
        let mut best: Option<(f64, usize)> = None;

        self.state.add(morph, w);
        if self.admissible() {
            best = Some((self.state.total_cost(), 0));
        }
        self.state.remove(morph, w);

        for i in 1..chars.len() {
            let prefix: String = chars[..i].iter().collect();
            let suffix: String = chars[i..].iter().collect();
            self.state.add(&prefix, w);
            self.state.add(&suffix, w);
            let cost = self.state.total_cost();
            if self.admissible() && best.is_none_or(|(b, _)| cost < b) {
                best = Some((cost, i));
            }
            self.state.remove(&prefix, w);
            self.state.remove(&suffix, w);
        }

        match best? {
            (_, 0) => {
                self.state.add(morph, w);
                self.accept();
                Some(vec![morph.to_owned()])
            }
            (_, i) => {
                let prefix: String = chars[..i].iter().collect();
                let suffix: String = chars[i..].iter().collect();
                self.state.add(&prefix, w);
                self.state.add(&suffix, w);
                self.accept();
                self.state.remove(&prefix, w);
                let mut left = self.optimize(&prefix, w).expect("prefix kept whole is admissible");
                self.state.remove(&suffix, w);
                let right = self.optimize(&suffix, w).expect("suffix kept whole is admissible");
                left.extend(right);
                Some(left)
            }
        }
    }
}

/// Train with an explicit configuration, returning the per-epoch trace.
pub fn train_morf(word_counts: &BTreeMap<String, u64>, config: &MorfConfig) -> Result<(MorfModel, TrainTrace)> {
    let words: Vec<(&str, u64)> = word_counts
        .iter()
        .filter(|(w, c)| **c > 0 && !w.is_empty())
        .map(|(w, &c)| {
            let weight = match config.counts {
                CountMode::Types => 1,
                CountMode::Tokens => c,
            };
            (w.as_str(), weight)
        })
        .collect();
    if words.is_empty() {
        return Err(Error::Empty("no words to train on".into()));
    }
    if !(config.alpha > 0.0 && config.alpha.is_finite()) {
        return Err(Error::Config(format!("alpha must be positive, got {}", config.alpha)));
    }
    let alphabet: BTreeSet<char> = words.iter().flat_map(|(w, _)| w.chars()).collect();
    if let Some(cap) = config.max_lexicon_size {
        if cap < alphabet.len() {
            return Err(Error::Config(format!(
                "lexicon cap {cap} cannot cover the {} alphabet characters",
                alphabet.len()
            )));
        }
    }

    let mut trainer = Trainer {
        state: CostState::new(alphabet.len(), config.alpha),
        cap: config.max_lexicon_size,
        max_seen: 0,
    };
    let whole_fits = config.max_lexicon_size.is_none_or(|cap| words.len() <= cap);
    let mut analyses: Vec<Vec<String>> = words
        .iter()
        .map(|(w, _)| {
            if whole_fits {
                vec![w.to_string()]
            } else {
                w.chars().map(String::from).collect()
            }
        })
        .collect();
    for (a, (_, weight)) in analyses.iter().zip(&words) {
        trainer.add_all(a, *weight);
    }
    trainer.accept();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..words.len()).collect();
    let mut epoch_costs = vec![trainer.state.exact_total_cost()];
    for _ in 0..config.max_epochs {
        order.shuffle(&mut rng);
        for &idx in &order {
            let (word, weight) = words[idx];
            let before = trainer.state.total_cost();
            let old = std::mem::take(&mut analyses[idx]);
            trainer.remove_all(&old, weight);
            match trainer.optimize(word, weight) {
                Some(new) if trainer.state.total_cost() < before - MIN_GAIN => analyses[idx] = new,
                Some(new) => {
                    trainer.remove_all(&new, weight);
                    trainer.add_all(&old, weight);
                    analyses[idx] = old;
                }
                None => {
                    trainer.add_all(&old, weight);
                    analyses[idx] = old;
                }
            }
        }
        let cost = trainer.state.exact_total_cost();
        let prev = *epoch_costs.last().expect("initial cost recorded");
        epoch_costs.push(cost);
        if prev - cost < config.epsilon {
            break;
        }
    }

    let variant = if config.max_lexicon_size.is_some() || config.counts == CountMode::Tokens {
        Variant::Lmvr
    } else {
        Variant::Baseline
    };
    let mut model = MorfModel::from_lexicon(trainer.state.lexicon(), config.alpha, variant);
    model.max_lexicon_size = config.max_lexicon_size;
    let recomputed = mdl_cost(&model).total();
    let tracked = trainer.state.total_cost();
    if (recomputed - tracked).abs() > 1e-6 * tracked.abs().max(1.0) {
        return Err(Error::Numeric(format!(
            "tracked cost {tracked} drifted from recomputed {recomputed}"
        )));
    }
    let trace = TrainTrace {
        epoch_costs,
        analyses: words
            .iter()
            .zip(analyses)
            .map(|((w, _), a)| (w.to_string(), a))
            .collect(),
        max_lexicon_seen: trainer.max_seen,
    };
    Ok((model, trace))
}
