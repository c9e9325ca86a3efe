//! Segmentation metrics (accuracy, boundary F1, EMMA) and MT metrics (BLEU,
//! chrF) with paired approximate randomization.

pub mod bleu;
pub mod chrf;
mod matching;
mod seg;
pub mod signif;
mod tok13a;

use std::fmt;
use std::str::FromStr;

pub use matching::max_weight_matching;
pub use seg::{accuracy, boundary_f1, cooccurrence, emma_f1, SegScore};
pub use signif::{
    exact_randomization_test, is_significant, paired_randomization_test, SignifResult, DEFAULT_TRIALS,
    SIGNIFICANCE_LEVEL,
};
pub use tok13a::tokenize_13a;

use crate::error::{Error, Result};
use crate::report;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Metric {
    Bleu,
    Chrf,
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bleu" => Ok(Metric::Bleu),
            "chrf" => Ok(Metric::Chrf),
            other => Err(Error::Config(format!("unknown MT metric {other:?} (expected bleu or chrf)"))),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::Bleu => "bleu",
            Metric::Chrf => "chrf",
        })
    }
}

impl Metric {
    pub fn signature(self) -> &'static str {
        match self {
            Metric::Bleu => bleu::BLEU_SIGNATURE,
            Metric::Chrf => chrf::CHRF_SIGNATURE,
        }
    }

    pub(crate) fn stats_len(self) -> usize {
        match self {
            Metric::Bleu => 2 * bleu::NGRAM_ORDER + 2,
            Metric::Chrf => 3 * chrf::CHRF_ORDER,
        }
    }

    /// Per-sentence sufficient statistics as flat integer vectors.
    pub fn sentence_stats<H: AsRef<str>, R: AsRef<str>>(self, hyps: &[H], refs: &[R]) -> Vec<Vec<i64>> {
        match self {
            Metric::Bleu => bleu::corpus_stats(hyps, refs).iter().map(|s| s.to_vec()).collect(),
            Metric::Chrf => chrf::corpus_stats(hyps, refs).iter().map(|s| s.to_vec()).collect(),
        }
    }

    /// Corpus score from summed statistics.
    pub fn score(self, stats: &[i64]) -> f64 {
        match self {
            Metric::Bleu => bleu::score_from_stats(&bleu::BleuStats::from_slice(stats), false),
            Metric::Chrf => chrf::score_from_stats(&chrf::ChrfStats::from_slice(stats)),
        }
    }

    fn sentence_score(self, stats: &[i64]) -> f64 {
        match self {
            Metric::Bleu => bleu::score_from_stats(&bleu::BleuStats::from_slice(stats), true),
            Metric::Chrf => self.score(stats),
        }
    }
}

pub(crate) fn check_lengths(hyps: usize, refs: usize) -> Result<()> {
    if hyps != refs {
        return Err(Error::Alignment {
            what: "hypothesis vs reference lines".into(),
            left: hyps,
            right: refs,
        });
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScoreReport {
    pub metric: Metric,
    pub score: f64,
    pub sentence_scores: Vec<f64>,
    pub p_value: Option<f64>,
    pub signature: String,
}

pub const SCORE_REPORT_HEADER: &str = "metric\tscore\tsentences\tsignature";

impl ScoreReport {
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        out.push_str(SCORE_REPORT_HEADER);
        if self.p_value.is_some() {
            out.push_str("\tp");
        }
        out.push('\n');
        out.push_str(&format!(
            "{}\t{}\t{}\t{}",
            self.metric,
            report::float(self.score, 4),
            self.sentence_scores.len(),
            self.signature
        ));
        if let Some(p) = self.p_value {
            out.push_str(&format!("\t{}", report::float(p, 4)));
        }
        out.push('\n');
        out
    }

    pub fn sentences_tsv(&self) -> String {
        let mut out = String::from("idx\tscore\n");
        for (i, s) in self.sentence_scores.iter().enumerate() {
            out.push_str(&format!("{}\t{}\n", i + 1, report::float(*s, 4)));
        }
        out
    }
}

pub fn corpus_score<H: AsRef<str>, R: AsRef<str>>(hyps: &[H], refs: &[R], metric: Metric) -> Result<ScoreReport> {
    check_lengths(hyps.len(), refs.len())?;
    let stats = metric.sentence_stats(hyps, refs);
    let mut sum = vec![0i64; metric.stats_len()];
    for s in &stats {
        for (a, b) in sum.iter_mut().zip(s) {
            *a += b;
        }
    }
    Ok(ScoreReport {
        metric,
        score: metric.score(&sum),
        sentence_scores: stats.iter().map(|s| metric.sentence_score(s)).collect(),
        p_value: None,
        signature: metric.signature().to_string(),
    })
}

pub fn bleu<H: AsRef<str>, R: AsRef<str>>(hyps: &[H], refs: &[R]) -> Result<ScoreReport> {
    corpus_score(hyps, refs, Metric::Bleu)
}

pub fn chrf<H: AsRef<str>, R: AsRef<str>>(hyps: &[H], refs: &[R]) -> Result<ScoreReport> {
    corpus_score(hyps, refs, Metric::Chrf)
}
