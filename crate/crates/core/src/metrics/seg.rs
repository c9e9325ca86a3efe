use std::collections::{BTreeMap, HashMap};

use super::matching::max_weight_matching;
use crate::corpus::{SegMode, SegmentationDataset};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SegScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub accuracy: f64,
}

impl SegScore {
    pub fn new(precision: f64, recall: f64, accuracy: f64) -> Self {
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        SegScore {
            precision,
            recall,
            f1,
            accuracy,
        }
    }
}

/// Check line alignment and surface agreement.
fn check_aligned(pred: &SegmentationDataset, gold: &SegmentationDataset) -> Result<()> {
    if pred.len() != gold.len() {
        return Err(Error::Alignment {
            what: "predicted vs gold entries".into(),
            left: pred.len(),
            right: gold.len(),
        });
    }
    for (i, (p, g)) in pred.entries.iter().zip(&gold.entries).enumerate() {
        if p.surface != g.surface {
            return Err(Error::Misaligned {
                index: i,
                left: p.surface.clone(),
                right: g.surface.clone(),
            });
        }
    }
    Ok(())
}

/// Fraction of entries whose morph sequence matches exactly.
pub fn accuracy(pred: &SegmentationDataset, gold: &SegmentationDataset) -> Result<f64> {
    check_aligned(pred, gold)?;
    Ok(exact_fraction(pred, gold))
}

fn exact_fraction(pred: &SegmentationDataset, gold: &SegmentationDataset) -> f64 {
    if gold.is_empty() {
        return 1.0;
    }
    let hits = pred
        .entries
        .iter()
        .zip(&gold.entries)
        .filter(|(p, g)| p.morphs == g.morphs)
        .count();
    hits as f64 / gold.len() as f64
}

fn ratio_or_one(num: u64, den: u64) -> f64 {
    if den == 0 {
        1.0
    } else {
        num as f64 / den as f64
    }
}

/// Micro-averaged precision and recall of internal boundary positions.
/// A side without any boundaries scores 1 on its ratio.
pub fn boundary_f1(pred: &SegmentationDataset, gold: &SegmentationDataset) -> Result<SegScore> {
    for ds in [pred, gold] {
        if ds.mode != SegMode::Surface {
            return Err(Error::UnsupportedMode(
                "boundary F1 needs surface segmentations; use EMMA for canonical data".into(),
            ));
        }
    }
    check_aligned(pred, gold)?;
    let (mut hits, mut npred, mut ngold) = (0u64, 0u64, 0u64);
    for (p, g) in pred.entries.iter().zip(&gold.entries) {
        let pb = p.boundaries();
        let gb = g.boundaries();
        hits += pb.intersection(&gb).count() as u64;
        npred += pb.len() as u64;
        ngold += gb.len() as u64;
    }
    Ok(SegScore::new(
        ratio_or_one(hits, npred),
        ratio_or_one(hits, ngold),
        exact_fraction(pred, gold),
    ))
}

/// Co-occurrence weights between predicted and gold morph types:
/// `w(p, g) = sum over entries of min(#p in prediction, #g in gold)`.
pub fn cooccurrence(
    pred: &SegmentationDataset,
    gold: &SegmentationDataset,
) -> (Vec<String>, Vec<String>, Vec<(usize, usize, i64)>) {
    fn intern(types: &mut Vec<String>, index: &mut HashMap<String, usize>, m: &str) -> usize {
        if let Some(&i) = index.get(m) {
            return i;
        }
        index.insert(m.to_owned(), types.len());
        types.push(m.to_owned());
        types.len() - 1
    }
    let (mut ptypes, mut gtypes) = (Vec::new(), Vec::new());
    let (mut pidx, mut gidx) = (HashMap::new(), HashMap::new());
    let mut weights: BTreeMap<(usize, usize), i64> = BTreeMap::new();
    for (p, g) in pred.entries.iter().zip(&gold.entries) {
        let mut pc: BTreeMap<usize, i64> = BTreeMap::new();
        for m in &p.morphs {
            *pc.entry(intern(&mut ptypes, &mut pidx, m)).or_insert(0) += 1;
        }
        let mut gc: BTreeMap<usize, i64> = BTreeMap::new();
        for m in &g.morphs {
            *gc.entry(intern(&mut gtypes, &mut gidx, m)).or_insert(0) += 1;
        }
        for (&a, &ca) in &pc {
            for (&b, &cb) in &gc {
                *weights.entry((a, b)).or_insert(0) += ca.min(cb);
            }
        }
    }
    let edges = weights.into_iter().map(|((a, b), w)| (a, b, w)).collect();
    (ptypes, gtypes, edges)
}

/// EMMA-style F1 with a one-to-one maximum-weight matching between predicted
/// and gold morph types. Works for surface and canonical data alike.
pub fn emma_f1(pred: &SegmentationDataset, gold: &SegmentationDataset) -> Result<SegScore> {
    check_aligned(pred, gold)?;
    let (ptypes, gtypes, edges) = cooccurrence(pred, gold);
    let (matched, _) = max_weight_matching(ptypes.len(), gtypes.len(), &edges);
    let npred: usize = pred.entries.iter().map(|e| e.morphs.len()).sum();
    let ngold: usize = gold.entries.iter().map(|e| e.morphs.len()).sum();
    Ok(SegScore::new(
        ratio_or_one(matched as u64, npred as u64),
        ratio_or_one(matched as u64, ngold as u64),
        exact_fraction(pred, gold),
    ))
}
