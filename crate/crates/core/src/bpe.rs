//! Byte-pair-style subword model over characters.
//!
//! Each word is split into characters and the word-final character carries
//! the end-of-word marker (`"ab"` starts as `[a, b</w>]`). Training merges
//! the most frequent adjacent pair, weighting by word frequency, with ties
//! broken by the lexicographically smallest `(left, right)`.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt::Write as _;

use crate::error::{Error, Result};

pub const DEFAULT_MARKER: &str = "</w>";

/// One encoded piece. `known` is false for pieces built from a character
/// that never occurred in training.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Piece {
    pub text: String,
    pub known: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BpeModel {
    merges: Vec<(String, String)>,
    /// Initial symbols: characters, plus marked variants of word-final characters.
    alphabet: BTreeSet<String>,
    vocab: BTreeSet<String>,
    chars: HashSet<char>,
    marker: String,
    target_vocab_size: usize,
    ranks: HashMap<(String, String), Vec<usize>>,
}

fn initial_symbols(word: &str, marker: &str) -> Vec<String> {
    let chars: Vec<char> = word.chars().collect();
    let n = chars.len();
    chars
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let mut s = c.to_string();
            if i + 1 == n {
                s.push_str(marker);
            }
            s
        })
        .collect()
}

fn check_marker(marker: &str) -> Result<()> {
    if marker.is_empty() || marker.chars().any(char::is_whitespace) {
        return Err(Error::Config(format!("invalid boundary marker {marker:?}")));
    }
    Ok(())
}

/// Symbol interning for the trainer.
#[derive(Default)]
struct Symbols {
    names: Vec<String>,
    ids: HashMap<String, u32>,
}

impl Symbols {
    fn intern(&mut self, s: &str) -> u32 {
        if let Some(&id) = self.ids.get(s) {
            return id;
        }
        let id = self.names.len() as u32;
        self.names.push(s.to_owned());
        self.ids.insert(s.to_owned(), id);
        id
    }
}

type Pair = (u32, u32);

fn merge_in_place(symbols: &mut Vec<u32>, pair: Pair, merged: u32) {
    let mut out = Vec::with_capacity(symbols.len());
    let mut i = 0;
    while i < symbols.len() {
        if i + 1 < symbols.len() && symbols[i] == pair.0 && symbols[i + 1] == pair.1 {
            out.push(merged);
            i += 2;
        } else {
            out.push(symbols[i]);
            i += 1;
        }
    }
    *symbols = out;
}

pub fn train_bpe(word_counts: &BTreeMap<String, u64>, target_vocab_size: usize) -> Result<BpeModel> {
    train_bpe_with_marker(word_counts, target_vocab_size, DEFAULT_MARKER)
}

pub fn train_bpe_with_marker(
    word_counts: &BTreeMap<String, u64>,
    target_vocab_size: usize,
    marker: &str,
) -> Result<BpeModel> {
    check_marker(marker)?;
    let mut syms = Symbols::default();
    let mut words: Vec<(Vec<u32>, u64)> = Vec::new();
    let mut chars = HashSet::new();
    for (w, &c) in word_counts {
        if c == 0 || w.is_empty() {
            continue;
        }
        if w.contains(marker) {
            return Err(Error::Config(format!("word {w:?} contains the boundary marker")));
        }
        chars.extend(w.chars());
        let ids = initial_symbols(w, marker).iter().map(|s| syms.intern(s)).collect();
        words.push((ids, c));
    }
    if words.is_empty() {
        return Err(Error::Empty("no words to train on".into()));
    }
    let alphabet: BTreeSet<String> = syms.names.iter().cloned().collect();
    if target_vocab_size < alphabet.len() {
        return Err(Error::Config(format!(
            "target vocabulary size {target_vocab_size} is below the initial alphabet size {}",
            alphabet.len()
        )));
    }

    let mut pair_counts: HashMap<Pair, u64> = HashMap::new();
    let mut pair_words: HashMap<Pair, BTreeSet<usize>> = HashMap::new();
    for (idx, (w, c)) in words.iter().enumerate() {
        for p in w.windows(2) {
            let pair = (p[0], p[1]);
            *pair_counts.entry(pair).or_insert(0) += c;
            pair_words.entry(pair).or_default().insert(idx);
        }
    }
    let key = |syms: &Symbols, pair: Pair, count: u64| {
        (
            Reverse(count),
            syms.names[pair.0 as usize].clone(),
            syms.names[pair.1 as usize].clone(),
        )
    };
    let mut queue: BTreeSet<(Reverse<u64>, String, String)> = pair_counts
        .iter()
        .map(|(&p, &c)| key(&syms, p, c))
        .collect();

    let mut vocab = alphabet.clone();
    let mut merges = Vec::new();
    while vocab.len() < target_vocab_size {
        let Some((Reverse(count), left, right)) = queue.first().cloned() else {
            break;
        };
        if count < 2 {
            break;
        }
        let pair = (syms.ids[&left], syms.ids[&right]);
        let merged_name = format!("{left}{right}");
        let merged = syms.intern(&merged_name);
        vocab.insert(merged_name);
        merges.push((left, right));

        let mut touched: HashMap<Pair, u64> = HashMap::new();
        let affected = pair_words.remove(&pair).unwrap_or_default();
        for &idx in &affected {
            let (w, c) = &mut words[idx];
            for p in w.windows(2) {
                let pr = (p[0], p[1]);
                let cnt = pair_counts.get_mut(&pr).expect("pair counted");
                touched.entry(pr).or_insert(*cnt);
                *cnt -= *c;
            }
            merge_in_place(w, pair, merged);
            for p in w.windows(2) {
                let pr = (p[0], p[1]);
                let cnt = pair_counts.entry(pr).or_insert(0);
                touched.entry(pr).or_insert(*cnt);
                *cnt += *c;
                pair_words.entry(pr).or_default().insert(idx);
            }
        }
        let mut touched: Vec<_> = touched.into_iter().collect();
        touched.sort_unstable();
        for (pr, old) in touched {
            let new = pair_counts[&pr];
            if old == new {
                continue;
            }
            if old > 0 {
                queue.remove(&key(&syms, pr, old));
            }
            if new > 0 {
                queue.insert(key(&syms, pr, new));
            } else {
                pair_counts.remove(&pr);
            }
        }
    }

    Ok(BpeModel::assemble(merges, alphabet, marker.to_owned(), target_vocab_size))
}

impl BpeModel {
    fn assemble(
        merges: Vec<(String, String)>,
        alphabet: BTreeSet<String>,
        marker: String,
        target_vocab_size: usize,
    ) -> Self {
        let mut vocab = alphabet.clone();
        let mut ranks: HashMap<(String, String), Vec<usize>> = HashMap::new();
        for (r, (a, b)) in merges.iter().enumerate() {
            vocab.insert(format!("{a}{b}"));
            ranks.entry((a.clone(), b.clone())).or_default().push(r);
        }
        let chars = alphabet
            .iter()
            .flat_map(|s| s.strip_suffix(marker.as_str()).unwrap_or(s).chars().collect::<Vec<_>>())
            .collect();
        BpeModel {
            merges,
            alphabet,
            vocab,
            chars,
            marker,
            target_vocab_size,
            ranks,
        }
    }

    pub fn merges(&self) -> &[(String, String)] {
        &self.merges
    }

    pub fn vocab(&self) -> &BTreeSet<String> {
        &self.vocab
    }

    pub fn alphabet(&self) -> &BTreeSet<String> {
        &self.alphabet
    }

    pub fn marker(&self) -> &str {
        &self.marker
    }

    pub fn target_vocab_size(&self) -> usize {
        self.target_vocab_size
    }

    /// The same model restricted to its first `k` merges.
    pub fn truncated(&self, k: usize) -> BpeModel {
        BpeModel::assemble(
            self.merges[..k.min(self.merges.len())].to_vec(),
            self.alphabet.clone(),
            self.marker.clone(),
            self.target_vocab_size,
        )
    }

    /// Apply the learned merges in order.
    pub fn encode(&self, word: &str) -> Vec<Piece> {
        let mut symbols = initial_symbols(word, &self.marker);
        // Sequential replay: the next merge to fire is the lowest-ranked
        // applicable pair whose rank exceeds the last one applied.
        let mut last: Option<usize> = None;
        loop {
            let mut best: Option<usize> = None;
            for p in symbols.windows(2) {
                let Some(rs) = self.ranks.get(&(p[0].clone(), p[1].clone())) else {
                    continue;
                };
                let next = rs.iter().copied().find(|&r| last.is_none_or(|l| r > l));
                if let Some(r) = next {
                    if best.is_none_or(|b| r < b) {
                        best = Some(r);
                    }
                }
            }
            let Some(r) = best else { break };
            let (a, b) = &self.merges[r];
            let mut out = Vec::with_capacity(symbols.len());
            let mut i = 0;
            while i < symbols.len() {
                if i + 1 < symbols.len() && &symbols[i] == a && &symbols[i + 1] == b {
                    out.push(format!("{a}{b}"));
                    i += 2;
                } else {
                    out.push(std::mem::take(&mut symbols[i]));
                    i += 1;
                }
            }
            symbols = out;
            last = Some(r);
        }
        symbols
            .into_iter()
            .map(|text| {
                let bare = text.strip_suffix(self.marker.as_str()).unwrap_or(&text);
                let known = bare.chars().all(|c| self.chars.contains(&c));
                Piece { text, known }
            })
            .collect()
    }

    pub fn encode_strings(&self, word: &str) -> Vec<String> {
        self.encode(word).into_iter().map(|p| p.text).collect()
    }

    pub fn decode<S: AsRef<str>>(&self, pieces: &[S]) -> Result<String> {
        decode(pieces, &self.marker)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("bpe v1 {} {}\nalphabet", self.target_vocab_size, self.marker);
        for s in &self.alphabet {
            out.push('\t');
            out.push_str(s);
        }
        out.push('\n');
        for (a, b) in &self.merges {
            let _ = writeln!(out, "{a}\t{b}");
        }
        out
    }

    pub fn from_text(text: &str) -> Result<BpeModel> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::parse(1, "empty model file"))?;
        let fields: Vec<&str> = header.split(' ').collect();
        if fields.len() != 4 || fields[0] != "bpe" || fields[1] != "v1" {
            return Err(Error::parse(1, format!("bad bpe header {header:?}")));
        }
        let target: usize = fields[2]
            .parse()
            .map_err(|_| Error::parse(1, "bad target vocabulary size"))?;
        let marker = fields[3].to_owned();
        check_marker(&marker)?;
        let alpha_line = lines.next().ok_or_else(|| Error::parse(2, "missing alphabet line"))?;
        let mut alpha_fields = alpha_line.split('\t');
        if alpha_fields.next() != Some("alphabet") {
            return Err(Error::parse(2, "expected alphabet line"));
        }
        let alphabet: BTreeSet<String> = alpha_fields.map(str::to_owned).collect();
        let mut merges = Vec::new();
        for (i, line) in lines.enumerate() {
            let (a, b) = line
                .split_once('\t')
                .filter(|(a, b)| !a.is_empty() && !b.is_empty() && !b.contains('\t'))
                .ok_or_else(|| Error::parse(i + 3, "expected left<TAB>right"))?;
            merges.push((a.to_owned(), b.to_owned()));
        }
        Ok(BpeModel::assemble(merges, alphabet, marker, target))
    }
}

/// Concatenate pieces and strip the end-of-word marker from the last one.
pub fn decode<S: AsRef<str>>(pieces: &[S], marker: &str) -> Result<String> {
    let Some((last, rest)) = pieces.split_last() else {
        return Err(Error::Format {
            line: 1,
            column: 1,
            message: "no pieces".into(),
        });
    };
    let mut word = String::new();
    for (i, p) in rest.iter().enumerate() {
        if p.as_ref().ends_with(marker) {
            return Err(Error::Format {
                line: 1,
                column: i + 1,
                message: format!("boundary marker in non-final piece {:?}", p.as_ref()),
            });
        }
        word.push_str(p.as_ref());
    }
    let stripped = last.as_ref().strip_suffix(marker).ok_or_else(|| Error::Format {
        line: 1,
        column: pieces.len(),
        message: format!("final piece {:?} lacks the boundary marker", last.as_ref()),
    })?;
    word.push_str(stripped);
    if word.is_empty() {
        return Err(Error::Format {
            line: 1,
            column: pieces.len(),
            message: "empty word".into(),
        });
    }
    Ok(word)
}
