/// Padding symbol for positions before the word.
pub const BOS: char = '\u{2}';
/// Padding symbol for positions after the word.
pub const EOS: char = '\u{3}';

/// Character substrings of length `1..=delta` inside the window
/// `[i - delta, i + delta]`, keyed as `"<start offset>:<content>"`.
/// Positions outside the word read as [`BOS`] / [`EOS`].
pub fn extract_features(word: &[char], i: usize, delta: usize) -> Vec<String> {
    let n = word.len() as isize;
    let d = delta as isize;
    let at = |j: isize| -> char {
        if j < 0 {
            BOS
        } else if j >= n {
            EOS
        } else {
            word[j as usize]
        }
    };
    let i = i as isize;
    let mut out = Vec::new();
    for start in -d..=d {
        for len in 1..=d {
            let last = start + len - 1;
            if last > d {
                break;
            }
            let content: String = (start..=last).map(|k| at(i + k)).collect();
            out.push(format!("{start}:{content}"));
        }
    }
    out
}

/// Escape padding symbols for the model file.
pub(crate) fn escape(feature: &str) -> String {
    let mut s = String::with_capacity(feature.len());
    for c in feature.chars() {
        match c {
            '\\' => s.push_str("\\\\"),
            BOS => s.push_str("\\^"),
            EOS => s.push_str("\\$"),
            c => s.push(c),
        }
    }
    s
}

pub(crate) fn unescape(text: &str) -> Option<String> {
    let mut s = String::with_capacity(text.len());
    let mut chars = text.chars();
    while let Some(c) = chars.next() {
        if c == '\\' {
            match chars.next()? {
                '\\' => s.push('\\'),
                '^' => s.push(BOS),
                '$' => s.push(EOS),
                _ => return None,
            }
        } else {
            s.push(c);
        }
    }
    Some(s)
}
