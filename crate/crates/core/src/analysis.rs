//! Morphological richness against translation quality, and UNK counting
//! under a fixed piece vocabulary. Both emit CSV for plotting.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::corpus::Sentence;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::report;
use crate::unsup::MorfModel;

pub const DEFAULT_BINS: usize = 10;
pub const RICHNESS_HEADER: &str = "idx,richness,score";
pub const BINS_HEADER: &str = "bin,lo,hi,count,mean_score";
pub const UNK_HEADER: &str = "system,total,unk,rate";

#[derive(Clone, Debug, PartialEq)]
pub struct RichnessRecord {
    /// 1-based sentence index.
    pub index: usize,
    pub morphs_per_token: f64,
    pub score: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RichnessBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    /// `None` for an empty bin.
    pub mean_score: Option<f64>,
}

/// Morphs per token of every sentence under `probe`, paired with its score
/// and sorted by richness (ties by index).
pub fn richness_table(
    probe: &MorfModel,
    sentences: &[Sentence],
    scores: &[f64],
    exec: Exec,
) -> Result<Vec<RichnessRecord>> {
    if sentences.len() != scores.len() {
        return Err(Error::Alignment {
            what: "sentences vs scores".into(),
            left: sentences.len(),
            right: scores.len(),
        });
    }
    let morphs = exec.map(sentences, |s| {
        s.tokens().iter().map(|t| probe.segment(t).len()).sum::<usize>()
    });
    let mut records: Vec<RichnessRecord> = sentences
        .iter()
        .zip(morphs)
        .zip(scores)
        .enumerate()
        .map(|(i, ((s, m), &score))| RichnessRecord {
            index: i + 1,
            morphs_per_token: m as f64 / s.len() as f64,
            score,
        })
        .collect();
    records.sort_by(|a, b| {
        a.morphs_per_token
            .total_cmp(&b.morphs_per_token)
            .then(a.index.cmp(&b.index))
    });
    Ok(records)
}

/// Equal-width bins over the observed richness range; the last bin is
/// closed on the right.
pub fn bin_richness(records: &[RichnessRecord], bins: usize) -> Result<Vec<RichnessBin>> {
    if bins == 0 {
        return Err(Error::Config("bin count must be positive".into()));
    }
    if records.is_empty() {
        return Ok(Vec::new());
    }
    let lo = records.iter().map(|r| r.morphs_per_token).fold(f64::INFINITY, f64::min);
    let hi = records.iter().map(|r| r.morphs_per_token).fold(f64::NEG_INFINITY, f64::max);
    let width = (hi - lo) / bins as f64;
    let mut sums = vec![(0usize, 0.0f64); bins];
    for r in records {
        let k = if width > 0.0 {
            (((r.morphs_per_token - lo) / width) as usize).min(bins - 1)
        } else {
            0
        };
        sums[k].0 += 1;
        sums[k].1 += r.score;
    }
    Ok(sums
        .into_iter()
        .enumerate()
        .map(|(k, (count, total))| RichnessBin {
            lo: lo + width * k as f64,
            hi: if k + 1 == bins { hi } else { lo + width * (k + 1) as f64 },
            count,
            mean_score: (count > 0).then(|| total / count as f64),
        })
        .collect())
}

pub fn richness_csv(records: &[RichnessRecord]) -> String {
    let mut out = format!("{RICHNESS_HEADER}\n");
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{}",
            r.index,
            report::float(r.morphs_per_token, 4),
            report::float(r.score, 4)
        );
    }
    out
}

pub fn bins_csv(bins: &[RichnessBin]) -> String {
    let mut out = format!("{BINS_HEADER}\n");
    for (k, b) in bins.iter().enumerate() {
        let mean = b.mean_score.map(|m| report::float(m, 4)).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{mean}",
            k + 1,
            report::float(b.lo, 4),
            report::float(b.hi, 4),
            b.count
        );
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct UnkReport {
    pub system: String,
    pub total: u64,
    pub unk: u64,
    pub rate: f64,
}

/// Count produced pieces missing from `vocabulary`. `lines` holds the
/// whitespace-separated pieces of each segmented sentence.
pub fn unk_report<S: AsRef<str>>(system: &str, lines: &[S], vocabulary: &BTreeSet<String>) -> Result<UnkReport> {
    if vocabulary.is_empty() {
        return Err(Error::Empty("UNK counting needs a non-empty vocabulary".into()));
    }
    let (mut total, mut unk) = (0u64, 0u64);
    for line in lines {
        for piece in line.as_ref().split_whitespace() {
            total += 1;
            if !vocabulary.contains(piece) {
                unk += 1;
            }
        }
    }
    let rate = if total == 0 { 0.0 } else { unk as f64 / total as f64 };
    Ok(UnkReport {
        system: system.to_owned(),
        total,
        unk,
        rate,
    })
}

pub fn unk_csv(reports: &[UnkReport]) -> String {
    let mut out = format!("{UNK_HEADER}\n");
    for r in reports {
        let _ = writeln!(out, "{},{},{},{}", r.system, r.total, r.unk, report::float(r.rate, 4));
    }
    out
}
