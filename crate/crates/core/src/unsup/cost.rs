use std::collections::{BTreeMap, HashMap};

use super::spelling_cost;

/// Morph counts with the description length tracked incrementally.
///
/// `corpus = T ln T - sum c ln c`, so only `sum c ln c`, `T` and the number of
/// spelled characters need updating on each add/remove.
#[derive(Clone, Debug)]
pub struct CostState {
    counts: HashMap<String, u64>,
    total: u64,
    sum_c_ln_c: f64,
    /// Sum of `|m| + 1` over morph types present.
    spelled: u64,
    char_cost: f64,
    alpha: f64,
}

fn c_ln_c(c: u64) -> f64 {
    if c == 0 {
        0.0
    } else {
        c as f64 * (c as f64).ln()
    }
}

impl CostState {
    pub fn new(alphabet_size: usize, alpha: f64) -> Self {
        CostState {
            counts: HashMap::new(),
            total: 0,
            sum_c_ln_c: 0.0,
            spelled: 0,
            char_cost: spelling_cost(0, alphabet_size),
            alpha,
        }
    }

    pub fn add(&mut self, morph: &str, k: u64) {
        if k == 0 {
            return;
        }
        let c = self.counts.entry(morph.to_owned()).or_insert(0);
        if *c == 0 {
            self.spelled += morph.chars().count() as u64 + 1;
        }
        self.sum_c_ln_c += c_ln_c(*c + k) - c_ln_c(*c);
        *c += k;
        self.total += k;
    }

    pub fn remove(&mut self, morph: &str, k: u64) {
        if k == 0 {
            return;
        }
        let c = self
            .counts
            .get_mut(morph)
            .filter(|c| **c >= k)
            .unwrap_or_else(|| panic!("removing {k} of {morph:?} not in lexicon"));
        self.sum_c_ln_c += c_ln_c(*c - k) - c_ln_c(*c);
        *c -= k;
        self.total -= k;
        if *c == 0 {
            self.counts.remove(morph);
            self.spelled -= morph.chars().count() as u64 + 1;
        }
    }

    pub fn corpus_cost(&self) -> f64 {
        c_ln_c(self.total) - self.sum_c_ln_c
    }

    pub fn lexicon_cost(&self) -> f64 {
        self.spelled as f64 * self.char_cost
    }

    pub fn total_cost(&self) -> f64 {
        self.corpus_cost() + self.alpha * self.lexicon_cost()
    }

    /// Total cost recomputed from the counts alone, independent of the
    /// add/remove history.
    pub fn exact_total_cost(&self) -> f64 {
        let mut counts: Vec<u64> = self.counts.values().copied().collect();
        counts.sort_unstable();
        let sum: f64 = counts.iter().map(|&c| c_ln_c(c)).sum();
        c_ln_c(self.total) - sum + self.alpha * self.lexicon_cost()
    }

    pub fn lexicon_size(&self) -> usize {
        self.counts.len()
    }

    pub fn count(&self, morph: &str) -> u64 {
        self.counts.get(morph).copied().unwrap_or(0)
    }

    pub fn lexicon(&self) -> BTreeMap<String, u64> {
        self.counts.iter().map(|(m, &c)| (m.clone(), c)).collect()
    }
}
