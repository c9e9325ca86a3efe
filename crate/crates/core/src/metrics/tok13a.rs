//! The `13a` tokenizer of the WMT `mteval-v13a` script, as used by BLEU.

use std::sync::LazyLock;

use regex::Regex;

/// Characters Python's `str.isspace` accepts; wider than Unicode `White_Space`
/// by the four ASCII information separators.
const SPACE_CLASS: &str = r"[\s\x1c-\x1f]";

static RULES: LazyLock<Vec<(Regex, &'static str)>> = LazyLock::new(|| {
    [
        (r"([\{-~\[-` -&\(-\+:-@/])", " ${1} "),
        (r"([^0-9])([\.,])", "${1} ${2} "),
        (r"([\.,])([^0-9])", " ${1} ${2}"),
        (r"([0-9])(-)", "${1} ${2} "),
    ]
    .into_iter()
    .map(|(re, rep)| (Regex::new(re).expect("valid 13a rule"), rep))
    .collect()
});

static SPACES: LazyLock<Regex> = LazyLock::new(|| Regex::new(&format!("{SPACE_CLASS}+")).expect("valid"));

pub(crate) fn is_py_space(c: char) -> bool {
    c.is_whitespace() || ('\x1c'..='\x1f').contains(&c)
}

/// Tokenize one line.
pub fn tokenize_13a(line: &str) -> String {
    let mut s = line
        .replace("<skipped>", "")
        .replace("-\n", "")
        .replace('\n', " ")
        .replace("&quot;", "\"")
        .replace("&amp;", "&")
        .replace("&lt;", "<")
        .replace("&gt;", ">");
    s = format!(" {s} ");
    for (re, rep) in RULES.iter() {
        s = re.replace_all(&s, *rep).into_owned();
    }
    SPACES.replace_all(&s, " ").trim_matches(is_py_space).to_string()
}
