//! Paired approximate randomization over per-sentence sufficient statistics.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{check_lengths, Metric};
use crate::error::{Error, Result};
use crate::exec::Exec;

pub const DEFAULT_TRIALS: usize = 10_000;
pub const SIGNIFICANCE_LEVEL: f64 = 0.05;
/// Largest corpus accepted by exhaustive enumeration.
pub const MAX_EXACT_SENTENCES: usize = 20;

#[derive(Clone, Debug, PartialEq)]
pub struct SignifResult {
    pub metric: Metric,
    pub score_a: f64,
    pub score_b: f64,
    /// `score_a - score_b`
    pub delta: f64,
    pub p_value: f64,
    pub trials: usize,
}

impl SignifResult {
    pub fn significant(&self) -> bool {
        is_significant(self.p_value)
    }
}

pub fn is_significant(p: f64) -> bool {
    p <= SIGNIFICANCE_LEVEL
}

struct Paired {
    metric: Metric,
    sum_a: Vec<i64>,
    sum_b: Vec<i64>,
    /// `b_i - a_i` for every sentence.
    diffs: Vec<Vec<i64>>,
    observed: f64,
    score_a: f64,
    score_b: f64,
}

impl Paired {
    fn new<S: AsRef<str>>(sys_a: &[S], sys_b: &[S], refs: &[S], metric: Metric) -> Result<Self> {
        check_lengths(sys_a.len(), refs.len())?;
        check_lengths(sys_b.len(), refs.len())?;
        let a = metric.sentence_stats(sys_a, refs);
        let b = metric.sentence_stats(sys_b, refs);
        let dim = metric.stats_len();
        let mut sum_a = vec![0i64; dim];
        let mut sum_b = vec![0i64; dim];
        let mut diffs = Vec::with_capacity(a.len());
        for (x, y) in a.iter().zip(&b) {
            for k in 0..dim {
                sum_a[k] += x[k];
                sum_b[k] += y[k];
            }
            diffs.push(y.iter().zip(x).map(|(p, q)| p - q).collect());
        }
        let score_a = metric.score(&sum_a);
        let score_b = metric.score(&sum_b);
        Ok(Paired {
            metric,
            observed: score_a - score_b,
            sum_a,
            sum_b,
            diffs,
            score_a,
            score_b,
        })
    }

    /// Whether the pattern with sentence `i` swapped iff `flip(i)` is at
    /// least as extreme as the observed difference.
    fn extreme(&self, flip: impl Fn(usize) -> bool) -> bool {
        let mut a = self.sum_a.clone();
        let mut b = self.sum_b.clone();
        for (i, d) in self.diffs.iter().enumerate() {
            if flip(i) {
                for k in 0..d.len() {
                    a[k] += d[k];
                    b[k] -= d[k];
                }
            }
        }
        let delta = self.metric.score(&a) - self.metric.score(&b);
        delta.abs() >= self.observed.abs()
    }

    fn result(&self, p_value: f64, trials: usize) -> SignifResult {
        SignifResult {
            metric: self.metric,
            score_a: self.score_a,
            score_b: self.score_b,
            delta: self.observed,
            p_value,
            trials,
        }
    }
}

/// Monte Carlo p-value `(1 + #extreme) / (1 + trials)`. Trial `t` draws its
/// swaps from a ChaCha8 stream selected by `(seed, t)`, so the result does not
/// depend on scheduling.
pub fn paired_randomization_test<S: AsRef<str> + Sync>(
    sys_a: &[S],
    sys_b: &[S],
    refs: &[S],
    metric: Metric,
    trials: usize,
    seed: u64,
    exec: Exec,
) -> Result<SignifResult> {
    if trials == 0 {
        return Err(Error::Config("trials must be positive".into()));
    }
    let paired = Paired::new(sys_a, sys_b, refs, metric)?;
    let n = paired.diffs.len();
    let words = n.div_ceil(64);
    let hits = exec.map_range(trials, |t| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(t as u64);
        let bits: Vec<u64> = (0..words).map(|_| rng.next_u64()).collect();
        paired.extreme(|i| bits[i / 64] >> (i % 64) & 1 == 1)
    });
    let count = hits.into_iter().filter(|&h| h).count();
    Ok(paired.result((1 + count) as f64 / (1 + trials) as f64, trials))
}

/// Exact p-value: the fraction of all `2^n` swap patterns (including the
/// identity) at least as extreme as observed.
pub fn exact_randomization_test<S: AsRef<str>>(
    sys_a: &[S],
    sys_b: &[S],
    refs: &[S],
    metric: Metric,
) -> Result<SignifResult> {
    let paired = Paired::new(sys_a, sys_b, refs, metric)?;
    let n = paired.diffs.len();
    if n > MAX_EXACT_SENTENCES {
        return Err(Error::Config(format!(
            "exact enumeration supports at most {MAX_EXACT_SENTENCES} sentences, got {n}"
        )));
    }
    let patterns = 1u64 << n;
    let count = (0..patterns).filter(|&m| paired.extreme(|i| m >> i & 1 == 1)).count();
    Ok(paired.result(count as f64 / patterns as f64, patterns as usize))
}
