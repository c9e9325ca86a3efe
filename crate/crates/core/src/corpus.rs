//! Parallel corpora, segmentation datasets and their descriptive statistics.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::report::{ratio_half_up, ratio_truncated};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Split {
    #[default]
    Train,
    Dev,
    Test,
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "dev" => Ok(Split::Dev),
            "test" => Ok(Split::Test),
            other => Err(Error::Config(format!("unknown split {other:?}"))),
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
        })
    }
}

/// A non-empty sequence of whitespace-free tokens.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Sentence {
    tokens: Vec<String>,
}

impl Sentence {
    pub fn new(tokens: Vec<String>) -> Result<Self> {
        if tokens.is_empty() {
            return Err(Error::Empty("sentence has no tokens".into()));
        }
        for (i, t) in tokens.iter().enumerate() {
            if t.is_empty() || t.chars().any(char::is_whitespace) {
                return Err(Error::Data {
                    index: i,
                    message: format!("invalid token {t:?}"),
                });
            }
        }
        Ok(Sentence { tokens })
    }

    /// Split on runs of Unicode whitespace. Returns `None` for blank lines.
    pub fn parse(line: &str) -> Option<Self> {
        let tokens: Vec<String> = line.split_whitespace().map(str::to_owned).collect();
        if tokens.is_empty() {
            None
        } else {
            Some(Sentence { tokens })
        }
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

impl fmt::Display for Sentence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.tokens.join(" "))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParallelCorpus {
    pub pairs: Vec<(Sentence, Sentence)>,
    pub split: Split,
}

impl ParallelCorpus {
    pub fn with_split(mut self, split: Split) -> Self {
        self.split = split;
        self
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn sources(&self) -> impl Iterator<Item = &Sentence> {
        self.pairs.iter().map(|(s, _)| s)
    }

    pub fn targets(&self) -> impl Iterator<Item = &Sentence> {
        self.pairs.iter().map(|(_, t)| t)
    }
}

/// Read a one-sentence-per-line file. Blank lines are rejected with their
/// 1-based line number.
pub fn parse_sentences(text: &str) -> Result<Vec<Sentence>> {
    text.lines()
        .enumerate()
        .map(|(i, line)| {
            Sentence::parse(line).ok_or_else(|| Error::parse(i + 1, "empty line"))
        })
        .collect()
}

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn parse_parallel(source: &str, target: &str) -> Result<ParallelCorpus> {
    let src_lines = source.lines().count();
    let tgt_lines = target.lines().count();
    if src_lines != tgt_lines {
        return Err(Error::Alignment {
            what: "source and target line counts differ".into(),
            left: src_lines,
            right: tgt_lines,
        });
    }
    let src = parse_sentences(source)?;
    let tgt = parse_sentences(target)?;
    Ok(ParallelCorpus {
        pairs: src.into_iter().zip(tgt).collect(),
        split: Split::Train,
    })
}

/// Load line-aligned source/target files. The split label defaults to
/// `train`; use [`ParallelCorpus::with_split`] to relabel.
pub fn load_parallel(source_path: &Path, target_path: &Path) -> Result<ParallelCorpus> {
    let src = read_text(source_path)?;
    let tgt = read_text(target_path)?;
    parse_parallel(&src, &tgt)
}

/// Token counts over whitespace tokens, in a deterministic order.
pub fn word_counts<'a, I>(sentences: I) -> BTreeMap<String, u64>
where
    I: IntoIterator<Item = &'a Sentence>,
{
    let mut counts = BTreeMap::new();
    for s in sentences {
        for t in s.tokens() {
            *counts.entry(t.clone()).or_insert(0) += 1;
        }
    }
    counts
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum SegMode {
    #[default]
    Surface,
    Canonical,
}

impl FromStr for SegMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "surface" => Ok(SegMode::Surface),
            "canonical" => Ok(SegMode::Canonical),
            other => Err(Error::Config(format!("unknown segmentation mode {other:?}"))),
        }
    }
}

impl fmt::Display for SegMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SegMode::Surface => "surface",
            SegMode::Canonical => "canonical",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SegmentedWord {
    pub surface: String,
    pub morphs: Vec<String>,
    pub mode: SegMode,
}

impl SegmentedWord {
    /// Build a surface segmentation; the morphs must concatenate to `surface`.
    pub fn surface(surface: impl Into<String>, morphs: Vec<String>) -> Result<Self> {
        Self::new(surface.into(), morphs, SegMode::Surface, 0)
    }

    pub fn new(surface: String, morphs: Vec<String>, mode: SegMode, line: usize) -> Result<Self> {
        if surface.is_empty() {
            return Err(Error::parse(line, "empty surface form"));
        }
        if morphs.is_empty() {
            return Err(Error::parse(line, "no morphs"));
        }
        if morphs.iter().any(String::is_empty) {
            return Err(Error::parse(line, "empty morph"));
        }
        if mode == SegMode::Surface && morphs.concat() != surface {
            return Err(Error::SurfaceMismatch {
                line,
                surface,
                morphs: morphs.join(" "),
            });
        }
        Ok(SegmentedWord {
            surface,
            morphs,
            mode,
        })
    }

    /// Internal boundary positions as character offsets (surface mode only).
    pub fn boundaries(&self) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        let mut pos = 0;
        for m in &self.morphs[..self.morphs.len() - 1] {
            pos += m.chars().count();
            out.insert(pos);
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SegmentationDataset {
    pub entries: Vec<SegmentedWord>,
    pub mode: SegMode,
    pub split: Split,
}

impl SegmentationDataset {
    pub fn new(entries: Vec<SegmentedWord>, mode: SegMode) -> Result<Self> {
        for (i, e) in entries.iter().enumerate() {
            if e.mode != mode {
                return Err(Error::Data {
                    index: i,
                    message: format!("entry mode {} differs from dataset mode {mode}", e.mode),
                });
            }
        }
        Ok(SegmentationDataset {
            entries,
            mode,
            split: Split::Train,
        })
    }

    pub fn with_split(mut self, split: Split) -> Self {
        self.split = split;
        self
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// One `surface<TAB>morph morph ...` line per entry.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(&e.surface);
            out.push('\t');
            out.push_str(&e.morphs.join(" "));
            out.push('\n');
        }
        out
    }
}

/// Parse `surface<TAB>morph1 morph2 ...` lines. Blank lines are skipped.
pub fn parse_segmentation(text: &str, mode: SegMode) -> Result<SegmentationDataset> {
    let mut entries = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let (surface, morphs) = line
            .split_once('\t')
            .ok_or_else(|| Error::parse(lineno, "missing TAB between surface and morphs"))?;
        if surface.is_empty() || surface.chars().any(char::is_whitespace) {
            return Err(Error::parse(lineno, format!("invalid surface form {surface:?}")));
        }
        let morphs: Vec<String> = morphs.split_whitespace().map(str::to_owned).collect();
        entries.push(SegmentedWord::new(surface.to_owned(), morphs, mode, lineno)?);
    }
    SegmentationDataset::new(entries, mode)
}

pub fn load_segmentation(path: &Path, mode: SegMode) -> Result<SegmentationDataset> {
    parse_segmentation(&read_text(path)?, mode)
}

/// Counts for one side of a parallel corpus.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SideStats {
    pub tokens: u64,
    pub types: u64,
    pub hapax: u64,
    /// Types absent from the reference training vocabulary.
    pub oov: Option<u64>,
}

impl SideStats {
    fn compute<'a>(sentences: impl Iterator<Item = &'a Sentence>, train: Option<&HashSet<&str>>) -> Self {
        let mut counts: HashMap<&str, u64> = HashMap::new();
        for s in sentences {
            for t in s.tokens() {
                *counts.entry(t.as_str()).or_insert(0) += 1;
            }
        }
        SideStats {
            tokens: counts.values().sum(),
            types: counts.len() as u64,
            hapax: counts.values().filter(|&&c| c == 1).count() as u64,
            oov: train.map(|voc| counts.keys().filter(|t| !voc.contains(*t)).count() as u64),
        }
    }

    pub fn growth_rate(&self) -> f64 {
        self.types as f64 / self.tokens as f64
    }

    pub fn hapax_rate(&self) -> f64 {
        self.hapax as f64 / self.tokens as f64
    }

    /// OOV types as a fraction of this split's vocabulary.
    pub fn pct_oov(&self) -> Option<f64> {
        self.oov.map(|o| o as f64 / self.types as f64)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CorpusStats {
    pub sentences: u64,
    pub source: SideStats,
    pub target: SideStats,
}

pub const CORPUS_STATS_HEADER: &str = "side\tS\tN\tV\tV1\tV/N\tV1/N\tOOV\tpctOOV";

impl CorpusStats {
    /// Source tokens over target tokens.
    pub fn token_ratio(&self) -> f64 {
        self.source.tokens as f64 / self.target.tokens as f64
    }

    /// Ratios rounded half-up to three places, except pctOOV which is
    /// truncated to three places.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from(CORPUS_STATS_HEADER);
        out.push('\n');
        for (name, side) in [("source", &self.source), ("target", &self.target)] {
            let (oov, pct) = match side.oov {
                Some(o) => (o.to_string(), ratio_truncated(o, side.types, 3)),
                None => (String::new(), String::new()),
            };
            out.push_str(&format!(
                "{name}\t{}\t{}\t{}\t{}\t{}\t{}\t{oov}\t{pct}\n",
                self.sentences,
                side.tokens,
                side.types,
                side.hapax,
                ratio_half_up(side.types, side.tokens, 3),
                ratio_half_up(side.hapax, side.tokens, 3),
            ));
        }
        out
    }
}

pub fn corpus_stats(corpus: &ParallelCorpus, reference_train: Option<&ParallelCorpus>) -> Result<CorpusStats> {
    if corpus.is_empty() {
        return Err(Error::Empty("corpus has no sentence pairs".into()));
    }
    let vocab = |side: fn(&(Sentence, Sentence)) -> &Sentence| -> Option<HashSet<&str>> {
        reference_train.map(|r| {
            r.pairs
                .iter()
                .flat_map(|p| side(p).tokens().iter().map(String::as_str))
                .collect()
        })
    };
    let src_vocab = vocab(|p| &p.0);
    let tgt_vocab = vocab(|p| &p.1);
    Ok(CorpusStats {
        sentences: corpus.len() as u64,
        source: SideStats::compute(corpus.sources(), src_vocab.as_ref()),
        target: SideStats::compute(corpus.targets(), tgt_vocab.as_ref()),
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SegDatasetStats {
    pub words: u64,
    /// Entries with more than one morph.
    pub seg_words: u64,
    pub morphs: u64,
    pub uni_morphs: u64,
    pub max_morphs: u64,
    /// Morph types unseen in the reference training dataset.
    pub oov_morphs: Option<u64>,
}

pub const SEG_STATS_HEADER: &str =
    "Words\tSegWords\tMorphs\tUniMorphs\tSeg/W\tMorphs/W\tMaxMorphs\tOOV-M";

impl SegDatasetStats {
    pub fn seg_per_word(&self) -> f64 {
        self.seg_words as f64 / self.words as f64
    }

    pub fn morphs_per_word(&self) -> f64 {
        self.morphs as f64 / self.words as f64
    }

    /// Ratios rounded half-up to two places.
    pub fn to_tsv(&self) -> String {
        format!(
            "{SEG_STATS_HEADER}\n{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
            self.words,
            self.seg_words,
            self.morphs,
            self.uni_morphs,
            ratio_half_up(self.seg_words, self.words, 2),
            ratio_half_up(self.morphs, self.words, 2),
            self.max_morphs,
            self.oov_morphs.map(|o| o.to_string()).unwrap_or_default(),
        )
    }
}

pub fn seg_stats(
    dataset: &SegmentationDataset,
    reference_train: Option<&SegmentationDataset>,
) -> Result<SegDatasetStats> {
    if dataset.is_empty() {
        return Err(Error::Empty("segmentation dataset has no entries".into()));
    }
    let types: HashSet<&str> = dataset
        .entries
        .iter()
        .flat_map(|e| e.morphs.iter().map(String::as_str))
        .collect();
    let oov_morphs = reference_train.map(|r| {
        let seen: HashSet<&str> = r
            .entries
            .iter()
            .flat_map(|e| e.morphs.iter().map(String::as_str))
            .collect();
        types.iter().filter(|m| !seen.contains(*m)).count() as u64
    });
    Ok(SegDatasetStats {
        words: dataset.len() as u64,
        seg_words: dataset.entries.iter().filter(|e| e.morphs.len() > 1).count() as u64,
        morphs: dataset.entries.iter().map(|e| e.morphs.len() as u64).sum(),
        uni_morphs: types.len() as u64,
        max_morphs: dataset.entries.iter().map(|e| e.morphs.len() as u64).max().unwrap_or(0),
        oov_morphs,
    })
}
