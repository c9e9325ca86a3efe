use std::collections::HashMap;

use super::tok13a::is_py_space;

pub const CHRF_ORDER: usize = 6;
pub const CHRF_BETA: f64 = 2.0;
pub const CHRF_SIGNATURE: &str = "chrF2+numchars.6+space.false";

/// Per order: hypothesis n-grams, reference n-grams, common n-grams.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ChrfStats(pub [[u64; 3]; CHRF_ORDER]);

impl ChrfStats {
    pub fn to_vec(&self) -> Vec<i64> {
        self.0.iter().flatten().map(|&x| x as i64).collect()
    }

    pub fn from_slice(v: &[i64]) -> Self {
        let mut s = ChrfStats::default();
        for (i, x) in v.iter().enumerate().take(3 * CHRF_ORDER) {
            s.0[i / 3][i % 3] = *x as u64;
        }
        s
    }

    pub fn add(&mut self, other: &ChrfStats) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            for k in 0..3 {
                a[k] += b[k];
            }
        }
    }
}

fn char_ngrams(chars: &[char], n: usize) -> HashMap<&[char], u64> {
    let mut out = HashMap::new();
    for w in chars.windows(n) {
        *out.entry(w).or_insert(0) += 1;
    }
    out
}

pub fn sentence_stats(hyp: &str, reference: &str) -> ChrfStats {
    let h: Vec<char> = hyp.chars().filter(|c| !is_py_space(*c)).collect();
    let r: Vec<char> = reference.chars().filter(|c| !is_py_space(*c)).collect();
    let mut s = ChrfStats::default();
    for n in 1..=CHRF_ORDER {
        let hn = char_ngrams(&h, n);
        let rn = char_ngrams(&r, n);
        let common: u64 = hn.iter().map(|(g, &c)| c.min(rn.get(g).copied().unwrap_or(0))).sum();
        s.0[n - 1] = [hn.values().sum(), rn.values().sum(), common];
    }
    s
}

/// chrF in `[0, 100]`: precision and recall averaged over the orders where
/// both sides have n-grams, combined as an F-beta score.
pub fn score_from_stats(s: &ChrfStats) -> f64 {
    let mut p = 0.0;
    let mut r = 0.0;
    let mut orders = 0;
    for &[h, rf, c] in &s.0 {
        if h > 0 && rf > 0 {
            p += c as f64 / h as f64;
            r += c as f64 / rf as f64;
            orders += 1;
        }
    }
    if orders == 0 {
        return 0.0;
    }
    p /= orders as f64;
    r /= orders as f64;
    if p + r == 0.0 {
        return 0.0;
    }
    let b2 = CHRF_BETA * CHRF_BETA;
    (1.0 + b2) * (p * r) / (b2 * p + r) * 100.0
}

pub fn corpus_stats<H: AsRef<str>, R: AsRef<str>>(hyps: &[H], refs: &[R]) -> Vec<ChrfStats> {
    hyps.iter()
        .zip(refs)
        .map(|(h, r)| sentence_stats(h.as_ref(), r.as_ref()))
        .collect()
}
