use std::collections::HashMap;

use super::tok13a::{is_py_space, tokenize_13a};

pub const NGRAM_ORDER: usize = 4;
pub const BLEU_SIGNATURE: &str = "BLEU+case.mixed+numrefs.1+smooth.exp+tok.13a";

/// Floor for `ln 0`, matching the reference implementation.
const LOG_ZERO: f64 = -9_999_999_999.0;

/// Sufficient statistics of one or more sentence pairs.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct BleuStats {
    pub correct: [u64; NGRAM_ORDER],
    pub total: [u64; NGRAM_ORDER],
    pub sys_len: u64,
    pub ref_len: u64,
}

impl BleuStats {
    pub fn to_vec(&self) -> Vec<i64> {
        let mut v: Vec<i64> = self.correct.iter().chain(&self.total).map(|&x| x as i64).collect();
        v.push(self.sys_len as i64);
        v.push(self.ref_len as i64);
        v
    }

    pub fn from_slice(v: &[i64]) -> Self {
        let mut s = BleuStats::default();
        for n in 0..NGRAM_ORDER {
            s.correct[n] = v[n] as u64;
            s.total[n] = v[NGRAM_ORDER + n] as u64;
        }
        s.sys_len = v[2 * NGRAM_ORDER] as u64;
        s.ref_len = v[2 * NGRAM_ORDER + 1] as u64;
        s
    }

    pub fn add(&mut self, other: &BleuStats) {
        for n in 0..NGRAM_ORDER {
            self.correct[n] += other.correct[n];
            self.total[n] += other.total[n];
        }
        self.sys_len += other.sys_len;
        self.ref_len += other.ref_len;
    }
}

fn ngrams(tokens: &[&str]) -> HashMap<Vec<String>, u64> {
    let mut out = HashMap::new();
    for n in 1..=NGRAM_ORDER {
        for w in tokens.windows(n) {
            *out.entry(w.iter().map(|s| s.to_string()).collect()).or_insert(0) += 1;
        }
    }
    out
}

pub fn sentence_stats(hyp: &str, reference: &str) -> BleuStats {
    let h = tokenize_13a(hyp.trim_end_matches(is_py_space));
    let r = tokenize_13a(reference.trim_end_matches(is_py_space));
    let ht: Vec<&str> = h.split(' ').filter(|t| !t.is_empty()).collect();
    let rt: Vec<&str> = r.split(' ').filter(|t| !t.is_empty()).collect();
    let hn = ngrams(&ht);
    let rn = ngrams(&rt);
    let mut s = BleuStats {
        sys_len: ht.len() as u64,
        ref_len: rt.len() as u64,
        ..BleuStats::default()
    };
    for (g, &c) in &hn {
        let n = g.len() - 1;
        s.correct[n] += c.min(rn.get(g).copied().unwrap_or(0));
        s.total[n] += c;
    }
    s
}

/// BLEU in `[0, 100]` with exponential smoothing of zero-match orders. The
/// geometric mean runs over precisions as fractions so a perfect match is
/// exactly 100.
pub fn score_from_stats(s: &BleuStats, effective_order: bool) -> f64 {
    let mut precisions = [0.0; NGRAM_ORDER];
    let mut smooth = 1.0;
    let mut order = NGRAM_ORDER;
    for n in 0..NGRAM_ORDER {
        if s.total[n] == 0 {
            break;
        }
        if effective_order {
            order = n + 1;
        }
        precisions[n] = if s.correct[n] == 0 {
            smooth *= 2.0;
            1.0 / (smooth * s.total[n] as f64)
        } else {
            s.correct[n] as f64 / s.total[n] as f64
        };
    }
    let bp = if s.sys_len < s.ref_len {
        if s.sys_len > 0 {
            (1.0 - s.ref_len as f64 / s.sys_len as f64).exp()
        } else {
            0.0
        }
    } else {
        1.0
    };
    let log_sum: f64 = precisions[..order]
        .iter()
        .map(|&p| if p == 0.0 { LOG_ZERO } else { p.ln() })
        .sum();
    100.0 * bp * (log_sum / order as f64).exp()
}

pub fn corpus_stats<H: AsRef<str>, R: AsRef<str>>(hyps: &[H], refs: &[R]) -> Vec<BleuStats> {
    hyps.iter()
        .zip(refs)
        .map(|(h, r)| sentence_stats(h.as_ref(), r.as_ref()))
        .collect()
}
