//! Model files of every family behind one type, plus the text-level
//! segmentation and desegmentation conventions.
//!
//! BPE output attaches the model's end-of-word marker to the final piece of
//! each word (`aa a b</w>`). Morph-based models (MDL variants and the CRF)
//! append [`CONTINUATION`] to every non-final morph (`re@@ play`).

use std::fmt::Write as _;
use std::path::Path;

use crate::bpe::BpeModel;
use crate::corpus::read_text;
use crate::crf::CrfModel;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::unsup::MorfModel;

pub const CONTINUATION: &str = "@@";

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Marker {
    /// Marker closes the last piece of a word.
    EndOfWord(String),
    /// Marker ends every piece but the last.
    Continuation(String),
}

impl Marker {
    pub fn text(&self) -> &str {
        match self {
            Marker::EndOfWord(m) | Marker::Continuation(m) => m,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum AnyModel {
    Bpe(BpeModel),
    Morf(MorfModel),
    Crf(CrfModel),
}

impl AnyModel {
    /// Parse any model file, dispatching on the first header word.
    pub fn from_text(text: &str) -> Result<AnyModel> {
        let family = text.split([' ', '\n']).next().unwrap_or_default();
        match family {
            "bpe" => Ok(AnyModel::Bpe(BpeModel::from_text(text)?)),
            "morf" => Ok(AnyModel::Morf(MorfModel::from_text(text)?)),
            "crf" => Ok(AnyModel::Crf(CrfModel::from_text(text)?)),
            other => Err(Error::parse(1, format!("unknown model family {other:?}"))),
        }
    }

    pub fn load(path: &Path) -> Result<AnyModel> {
        AnyModel::from_text(&read_text(path)?)
    }

    pub fn to_text(&self) -> String {
        match self {
            AnyModel::Bpe(m) => m.to_text(),
            AnyModel::Morf(m) => m.to_text(),
            AnyModel::Crf(m) => m.to_text(),
        }
    }

    pub fn family(&self) -> &'static str {
        match self {
            AnyModel::Bpe(_) => "bpe",
            AnyModel::Morf(_) => "morf",
            AnyModel::Crf(_) => "crf",
        }
    }

    pub fn marker(&self) -> Marker {
        match self {
            AnyModel::Bpe(m) => Marker::EndOfWord(m.marker().to_owned()),
            _ => Marker::Continuation(CONTINUATION.to_owned()),
        }
    }

    /// Bare morphs or pieces of one word, without markers.
    pub fn split_word(&self, word: &str) -> Vec<String> {
        match self {
            AnyModel::Bpe(m) => {
                let mut pieces = m.encode_strings(word);
                if let Some(last) = pieces.last_mut() {
                    last.truncate(last.len() - m.marker().len());
                }
                pieces.retain(|p| !p.is_empty());
                pieces
            }
            AnyModel::Morf(m) => m.segment(word),
            AnyModel::Crf(m) => m.decode(word).morphs,
        }
    }

    /// Pieces of one word with markers attached.
    pub fn segment_word(&self, word: &str) -> Vec<String> {
        match self {
            AnyModel::Bpe(m) => m.encode_strings(word),
            _ => {
                let mut morphs = self.split_word(word);
                let n = morphs.len();
                for m in &mut morphs[..n - 1] {
                    m.push_str(CONTINUATION);
                }
                morphs
            }
        }
    }

    /// Segment text line by line. Tokens are separated by single spaces in
    /// the output; blank lines stay blank.
    pub fn segment_text(&self, text: &str, exec: Exec) -> Result<String> {
        let marker = self.marker();
        let lines: Vec<&str> = text.lines().collect();
        let out = exec.map_range(lines.len(), |i| -> Result<String> {
            let mut pieces = Vec::new();
            for (column, token) in tokens_with_columns(lines[i]) {
                if token.contains(marker.text()) {
                    return Err(Error::Format {
                        line: i + 1,
                        column,
                        message: format!("token {token:?} contains the marker {:?}", marker.text()),
                    });
                }
                pieces.extend(self.segment_word(token));
            }
            Ok(pieces.join(" "))
        });
        let mut s = String::with_capacity(text.len() * 2);
        for line in out {
            s.push_str(&line?);
            s.push('\n');
        }
        Ok(s)
    }
}

/// Whitespace-separated tokens with their 1-based character columns.
fn tokens_with_columns(line: &str) -> impl Iterator<Item = (usize, &str)> {
    let mut col = 0usize;
    let mut start: Option<(usize, usize)> = None;
    let mut out = Vec::new();
    for (b, c) in line.char_indices() {
        col += 1;
        match (c.is_whitespace(), start) {
            (false, None) => start = Some((b, col)),
            (true, Some((sb, sc))) => {
                out.push((sc, &line[sb..b]));
                start = None;
            }
            _ => {}
        }
    }
    if let Some((sb, sc)) = start {
        out.push((sc, &line[sb..]));
    }
    out.into_iter()
}

/// Join marked pieces back into words; inverse of [`AnyModel::segment_text`].
pub fn desegment_text(text: &str, marker: &Marker) -> Result<String> {
    let mut out = String::with_capacity(text.len());
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        let err = |column: usize, message: String| Error::Format {
            line: lineno,
            column,
            message,
        };
        let mut words: Vec<String> = Vec::new();
        let mut open: Option<(usize, String)> = None;
        for (column, piece) in tokens_with_columns(line) {
            let m = marker.text();
            let (body, marked) = match piece.strip_suffix(m) {
                Some(b) => (b, true),
                None => (piece, false),
            };
            if body.is_empty() {
                return Err(err(column, format!("piece {piece:?} has no content")));
            }
            if body.contains(m) {
                return Err(err(column, format!("stray marker inside piece {piece:?}")));
            }
            let word = &mut open.get_or_insert_with(|| (column, String::new())).1;
            word.push_str(body);
            let closes = match marker {
                Marker::EndOfWord(_) => marked,
                Marker::Continuation(_) => !marked,
            };
            if closes {
                words.push(open.take().expect("word open").1);
            }
        }
        if let Some((column, word)) = open {
            let what = match marker {
                Marker::EndOfWord(_) => "lacks the end-of-word marker",
                Marker::Continuation(_) => "ends with a continuation marker",
            };
            return Err(err(column, format!("word starting with {word:?} {what}")));
        }
        let _ = writeln!(out, "{}", words.join(" "));
    }
    Ok(out)
}
