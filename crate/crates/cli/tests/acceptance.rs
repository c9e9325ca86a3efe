//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use polyseg::bpe::train_bpe;
use polyseg::corpus::{parse_segmentation, SegMode, SegmentationDataset, SegmentedWord};
use polyseg::crf::{train_crf, BmesSequence, CrfModel, Label, Objective};
use polyseg::metrics::{
    bleu, boundary_f1, chrf, cooccurrence, emma_f1, exact_randomization_test, max_weight_matching,
    paired_randomization_test, tokenize_13a, Metric,
};
use polyseg::unsup::{train_flatcat_with, train_morf, CountMode, FlatCatConfig, MorfConfig, MorfModel};
use polyseg::Exec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit_secs: f64, what: &str) -> Result<(), String> {
    ensure(elapsed.as_secs_f64() < limit_secs, || {
        format!("{what} took {:.2}s (limit {limit_secs}s)", elapsed.as_secs_f64())
    })
}

fn fixture(name: &str) -> String {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures").join(name);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn polyseg(args: &[&str]) -> Result<String, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_polyseg"))
        .args(args)
        .output()
        .map_err(|e| format!("spawn failed: {e}"))?;
    if !out.status.success() {
        return Err(format!(
            "polyseg {} exited with {:?}: {}",
            args.join(" "),
            out.status.code(),
            String::from_utf8_lossy(&out.stderr)
        ));
    }
    Ok(String::from_utf8_lossy(&out.stdout).into_owned())
}

/// Rows of a TSV report keyed by header name.
fn tsv_rows(text: &str) -> Vec<BTreeMap<String, String>> {
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap_or_default().split('\t').collect();
    lines
        .map(|l| {
            header
                .iter()
                .zip(l.split('\t'))
                .map(|(h, v)| (h.to_string(), v.to_string()))
                .collect()
        })
        .collect()
}

fn expect_columns(row: &BTreeMap<String, String>, expected: &[(&str, &str)], what: &str) -> Result<(), String> {
    for (col, want) in expected {
        let got = row.get(*col).map(String::as_str).unwrap_or("<missing>");
        ensure(got == *want, || format!("{what} {col}: got {got}, expected {want}"))?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// 1. corpus statistics

/// Per-type counts with exactly `v1` hapaxes and `n` tokens over `v` types.
fn type_counts(v: usize, v1: usize, n: usize) -> Vec<usize> {
    let rest = v - v1;
    let extra = n - v1;
    let (base, rem) = (extra / rest, extra % rest);
    assert!(base >= 2, "cannot build counts for V={v} V1={v1} N={n}");
    (0..v)
        .map(|i| if i < v1 { 1 } else if i - v1 < rem { base + 1 } else { base })
        .collect()
}

/// `s` lines dealing the tokens of `types` round-robin.
fn side_text(types: &[String], counts: &[usize], s: usize) -> String {
    let mut lines = vec![Vec::new(); s];
    let mut k = 0;
    for (t, &c) in types.iter().zip(counts) {
        for _ in 0..c {
            lines[k % s].push(t.as_str());
            k += 1;
        }
    }
    lines.iter().map(|l| l.join(" ") + "\n").collect()
}

fn criterion_corpus_stats() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let names = |p: &str, n: usize| (0..n).map(|i| format!("{p}{i}")).collect::<Vec<_>>();
    let (s_train, s_dev) = (13_102, 587);

    let tar_train = names("tar", 19_044);
    let spa_train = names("spa", 16_220);
    let mut tar_dev = names("tarnew", 573);
    tar_dev.extend(tar_train[..1_713 - 573].iter().cloned());
    let mut spa_dev = names("spanew", 434);
    spa_dev.extend(spa_train[..1_771 - 434].iter().cloned());

    let files = [
        ("train.tar", side_text(&tar_train, &type_counts(19_044, 12_894, 73_022), s_train)),
        ("train.spa", side_text(&spa_train, &type_counts(16_220, 10_021, 93_410), s_train)),
        ("dev.tar", side_text(&tar_dev, &type_counts(1_713, 1_402, 3_183), s_dev)),
        ("dev.spa", side_text(&spa_dev, &type_counts(1_771, 1_365, 4_133), s_dev)),
    ];
    for (name, text) in &files {
        std::fs::write(dir.path().join(name), text).map_err(|e| e.to_string())?;
    }
    let p = |n: &str| dir.path().join(n).to_string_lossy().into_owned();

    let start = Instant::now();
    let train = polyseg(&["stats", "--src", &p("train.tar"), "--tgt", &p("train.spa")])?;
    let dev = polyseg(&[
        "stats",
        "--src",
        &p("dev.tar"),
        "--tgt",
        &p("dev.spa"),
        "--train-src",
        &p("train.tar"),
        "--train-tgt",
        &p("train.spa"),
    ])?;
    let elapsed = start.elapsed();

    let train = tsv_rows(&train);
    let dev = tsv_rows(&dev);
    ensure(train.len() == 2 && dev.len() == 2, || "expected two rows per report".into())?;
    expect_columns(&train[0], &[("S", "13102"), ("N", "73022"), ("V", "19044"), ("V1", "12894")], "train tar")?;
    expect_columns(&train[1], &[("S", "13102"), ("N", "93410"), ("V", "16220"), ("V1", "10021")], "train spa")?;
    expect_columns(
        &dev[0],
        &[("S", "587"), ("N", "3183"), ("V", "1713"), ("V1", "1402"), ("OOV", "573"), ("pctOOV", "0.334")],
        "dev tar",
    )?;
    expect_columns(
        &dev[1],
        &[("S", "587"), ("N", "4133"), ("V", "1771"), ("V1", "1365"), ("OOV", "434"), ("pctOOV", "0.245")],
        "dev spa",
    )?;
    within(elapsed, 5.0, "stats")?;
    Ok(format!(
        "S=13102 N=73022 V=19044 V1=12894 OOV=573 pctOOV=0.334 ({:.2}s)",
        elapsed.as_secs_f64()
    ))
}

// ---------------------------------------------------------------------------
// 2. segmentation dataset statistics

/// Uniquely decodable morph names: a prefix followed by letters a..l.
fn morph_name(prefix: &str, mut i: usize) -> String {
    let mut s = String::from(prefix);
    loop {
        s.push((b'a' + (i % 12) as u8) as char);
        i /= 12;
        if i == 0 {
            return s;
        }
    }
}

/// A dataset with the requested counts; morph tokens cycle through `types`.
fn seg_fixture(words: usize, seg_words: usize, morphs: usize, types: &[String]) -> String {
    let unseg = words - seg_words;
    let extra = morphs - unseg - 2 * seg_words;
    let mut lens = vec![1; unseg];
    lens.extend((0..seg_words).map(|i| {
        if i < extra / 3 {
            5
        } else if i == extra / 3 {
            2 + extra % 3
        } else {
            2
        }
    }));
    assert_eq!(lens.iter().sum::<usize>(), morphs);
    let mut out = String::new();
    let mut k = 0;
    for len in lens {
        let ms: Vec<&str> = (0..len).map(|j| types[(k + j) % types.len()].as_str()).collect();
        k += len;
        out.push_str(&format!("{}\t{}\n", ms.concat(), ms.join(" ")));
    }
    out
}

fn criterion_seg_stats() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let shp_types: Vec<String> = (0..476).map(|i| morph_name("s", i)).collect();
    let tar_types: Vec<String> = (0..474).map(|i| morph_name("t", i)).collect();
    let mut test_types: Vec<String> = (0..163).map(|i| morph_name("u", i)).collect();
    test_types.extend(tar_types[..287 - 163].iter().cloned());

    let files = [
        ("shp.train", seg_fixture(604, 437, 1215, &shp_types)),
        ("tar.train", seg_fixture(504, 323, 1028, &tar_types)),
        ("tar.test", seg_fixture(274, 178, 563, &test_types)),
    ];
    for (name, text) in &files {
        std::fs::write(dir.path().join(name), text).map_err(|e| e.to_string())?;
    }
    let p = |n: &str| dir.path().join(n).to_string_lossy().into_owned();

    let shp = tsv_rows(&polyseg(&["seg-stats", "--input", &p("shp.train"), "--mode", "canonical"])?);
    let tar = tsv_rows(&polyseg(&["seg-stats", "--input", &p("tar.test"), "--train", &p("tar.train")])?);
    expect_columns(
        &shp[0],
        &[
            ("Words", "604"),
            ("SegWords", "437"),
            ("Morphs", "1215"),
            ("UniMorphs", "476"),
            ("Morphs/W", "2.01"),
            ("Seg/W", "0.72"),
            ("MaxMorphs", "5"),
        ],
        "shp train",
    )?;
    expect_columns(
        &tar[0],
        &[("Words", "274"), ("SegWords", "178"), ("Morphs", "563"), ("UniMorphs", "287"), ("OOV-M", "163")],
        "tar test",
    )?;
    Ok("shp Words=604 Morphs=1215 Morphs/W=2.01 Seg/W=0.72; tar test OOV-M=163".into())
}

// ---------------------------------------------------------------------------
// 3. BPE

/// Most-frequent-pair merging by direct recount after every merge.
fn bpe_oracle(wc: &BTreeMap<String, u64>, target: usize) -> (Vec<(String, String)>, BTreeSet<String>) {
    let mut words: Vec<(Vec<String>, u64)> = wc
        .iter()
        .map(|(w, &c)| {
            let chars: Vec<char> = w.chars().collect();
            let syms = chars
                .iter()
                .enumerate()
                .map(|(i, ch)| if i + 1 == chars.len() { format!("{ch}</w>") } else { ch.to_string() })
                .collect();
            (syms, c)
        })
        .collect();
    let mut vocab: BTreeSet<String> = words.iter().flat_map(|(s, _)| s.iter().cloned()).collect();
    let mut merges = Vec::new();
    while vocab.len() < target {
        let mut counts: BTreeMap<(String, String), u64> = BTreeMap::new();
        for (syms, c) in &words {
            for pair in syms.windows(2) {
                *counts.entry((pair[0].clone(), pair[1].clone())).or_insert(0) += c;
            }
        }
        let mut best: Option<(&(String, String), u64)> = None;
        for (pair, &c) in &counts {
            if best.is_none_or(|(_, b)| c > b) {
                best = Some((pair, c));
            }
        }
        let Some((pair, c)) = best else { break };
        if c < 2 {
            break;
        }
        let (a, b) = pair.clone();
        let joined = format!("{a}{b}");
        for (syms, _) in &mut words {
            let mut out = Vec::with_capacity(syms.len());
            let mut i = 0;
            while i < syms.len() {
                if i + 1 < syms.len() && syms[i] == a && syms[i + 1] == b {
                    out.push(joined.clone());
                    i += 2;
                } else {
                    out.push(syms[i].clone());
                    i += 1;
                }
            }
            *syms = out;
        }
        vocab.insert(joined);
        merges.push((a, b));
    }
    (merges, vocab)
}

fn random_word(rng: &mut ChaCha8Rng, alphabet: &[char], max_len: usize) -> String {
    let len = rng.gen_range(1..=max_len);
    (0..len).map(|_| alphabet[rng.gen_range(0..alphabet.len())]).collect()
}

fn criterion_bpe() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let letters: Vec<char> = "abcde".chars().collect();
    let mut total_merges = 0;
    for corpus in 0..50 {
        let n_types = rng.gen_range(1..=20);
        let mut wc = BTreeMap::new();
        while wc.len() < n_types {
            wc.insert(random_word(&mut rng, &letters, 8), rng.gen_range(1..=10));
        }
        let (_, alphabet) = bpe_oracle(&wc, 0);
        let target = alphabet.len() + rng.gen_range(0..40);
        let model = train_bpe(&wc, target).map_err(|e| e.to_string())?;
        let (merges, vocab) = bpe_oracle(&wc, target);
        ensure(model.merges() == merges.as_slice(), || {
            format!("corpus {corpus}: merges {:?} vs oracle {:?}", model.merges(), merges)
        })?;
        ensure(model.vocab() == &vocab, || format!("corpus {corpus}: vocabulary differs from oracle"))?;
        total_merges += merges.len();
    }

    let fuzz_alphabet: Vec<char> = "abcdeéñz日ü".chars().collect();
    let mut wc = BTreeMap::new();
    for _ in 0..300 {
        *wc.entry(random_word(&mut rng, &letters, 10)).or_insert(0) += rng.gen_range(1..=5);
    }
    let model = train_bpe(&wc, 120).map_err(|e| e.to_string())?;
    for _ in 0..10_000 {
        let w = random_word(&mut rng, &fuzz_alphabet, 15);
        let pieces = model.encode_strings(&w);
        let back = model.decode(&pieces).map_err(|e| e.to_string())?;
        ensure(back == w, || format!("round trip of {w:?} gave {back:?}"))?;
    }
    let elapsed = start.elapsed();
    within(elapsed, 30.0, "bpe suite")?;
    Ok(format!(
        "50 corpora, {total_merges} merges match oracle; 10000 round trips ({:.2}s)",
        elapsed.as_secs_f64()
    ))
}

// ---------------------------------------------------------------------------
// 4. Morfessor baseline

/// Two-part code length of a morph lexicon, computed from first principles.
fn description_length(lexicon: &BTreeMap<String, u64>, alphabet_size: usize, alpha: f64) -> f64 {
    let total: u64 = lexicon.values().sum();
    let letter = ((alphabet_size + 1) as f64).ln();
    let corpus: f64 = lexicon.values().map(|&c| c as f64 * (total as f64 / c as f64).ln()).sum();
    let spelling: f64 = lexicon.keys().map(|m| (m.chars().count() as f64 + 1.0) * letter).sum();
    corpus + alpha * spelling
}

fn segmentations(word: &str) -> Vec<Vec<String>> {
    let chars: Vec<char> = word.chars().collect();
    let n = chars.len();
    (0..1u32 << (n - 1))
        .map(|mask| {
            let mut out = Vec::new();
            let mut start = 0;
            for i in 1..n {
                if mask >> (i - 1) & 1 == 1 {
                    out.push(chars[start..i].iter().collect());
                    start = i;
                }
            }
            out.push(chars[start..].iter().collect());
            out
        })
        .collect()
}

fn lookup_cost(model: &MorfModel, morph: &str) -> f64 {
    let t = model.lexicon.values().sum::<u64>() as f64;
    match model.lexicon.get(morph) {
        Some(&c) => t.ln() - (c as f64).ln(),
        None => {
            model.alpha * (morph.chars().count() as f64 + 1.0) * ((model.alphabet.len() + 1) as f64).ln()
                + (t + 1.0).ln()
        }
    }
}

fn criterion_morfessor() -> Check {
    let start = Instant::now();
    let mut failures = Vec::new();

    let four: BTreeMap<String, u64> = ["taka", "tasu", "mika", "misu"].iter().map(|w| (w.to_string(), 5)).collect();
    let (model, trace) = train_morf(&four, &MorfConfig::default()).map_err(|e| e.to_string())?;
    let alphabet: BTreeSet<char> = four.keys().flat_map(|w| w.chars()).collect();
    let reported = *trace.epoch_costs.last().unwrap();
    let recomputed = description_length(&model.lexicon, alphabet.len(), model.alpha);
    let options: Vec<Vec<Vec<String>>> = four.keys().map(|w| segmentations(w)).collect();
    let mut global = f64::INFINITY;
    let mut argmin = Vec::new();
    for code in 0..8usize.pow(4) {
        let mut lexicon = BTreeMap::new();
        let mut choice = Vec::new();
        for (k, opts) in options.iter().enumerate() {
            let seg = &opts[code / 8usize.pow(k as u32) % 8];
            for m in seg {
                *lexicon.entry(m.clone()).or_insert(0) += 1;
            }
            choice.push(seg.join("+"));
        }
        let c = description_length(&lexicon, alphabet.len(), 1.0);
        if c < global {
            global = c;
            argmin = choice;
        }
    }
    if (reported - recomputed).abs() > 1e-9 {
        failures.push(format!("reported cost {reported} != recomputed {recomputed}"));
    }
    if (reported - global).abs() > 1e-9 {
        failures.push(format!(
            "four-word final cost {reported:.9} vs global minimum {global:.9} at [{}]",
            argmin.join(", ")
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let letters: Vec<char> = "abcdef".chars().collect();
    let mut corpora = vec![four.clone()];
    for _ in 0..20 {
        let mut wc = BTreeMap::new();
        for _ in 0..rng.gen_range(5..40) {
            *wc.entry(random_word(&mut rng, &letters, 9)).or_insert(0) += rng.gen_range(1..20);
        }
        corpora.push(wc);
    }
    for (k, wc) in corpora.iter().enumerate() {
        for counts in [CountMode::Types, CountMode::Tokens] {
            let config = MorfConfig {
                counts,
                ..MorfConfig::default()
            };
            let (_, trace) = train_morf(wc, &config).map_err(|e| e.to_string())?;
            if let Some(w) = trace.epoch_costs.windows(2).find(|w| w[1] > w[0] + 1e-9) {
                failures.push(format!("corpus {k} ({counts:?}): epoch cost rose {} -> {}", w[0], w[1]));
            }
        }
    }

    let (probe, _) = train_morf(&corpora[1], &MorfConfig::default()).map_err(|e| e.to_string())?;
    let probe_letters: Vec<char> = "abcdefg".chars().collect();
    for _ in 0..1000 {
        let w = random_word(&mut rng, &probe_letters, 10);
        let seg = probe.viterbi_segment(&w);
        let cost = |s: &[String]| s.iter().map(|m| lookup_cost(&probe, m)).sum::<f64>();
        let best = segmentations(&w).iter().map(|s| cost(s)).fold(f64::INFINITY, f64::min);
        if seg.concat() != w || (cost(&seg) - best).abs() > 1e-9 {
            failures.push(format!("viterbi on {w:?}: {seg:?} costs {} vs brute force {best}", cost(&seg)));
            break;
        }
    }
    let elapsed = start.elapsed();
    within(elapsed, 60.0, "morfessor suite")?;
    if failures.is_empty() {
        Ok(format!(
            "global minimum {global:.6} reached; 42 runs monotone; 1000 viterbi words ({:.2}s)",
            elapsed.as_secs_f64()
        ))
    } else {
        Err(failures.join("; "))
    }
}

// ---------------------------------------------------------------------------
// 5. LMVR

fn criterion_lmvr() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let letters: Vec<char> = "abcdefgh".chars().collect();
    let mut runs = 0;
    for k in 0..15 {
        let mut wc = BTreeMap::new();
        for _ in 0..rng.gen_range(5..40) {
            *wc.entry(random_word(&mut rng, &letters, 9)).or_insert(0) += rng.gen_range(1..30);
        }
        let alphabet: BTreeSet<char> = wc.keys().flat_map(|w: &String| w.chars()).collect();
        // with every letter also a word, single letters must be morphs, so a
        // cap of |alphabet| admits nothing else
        let letters_are_words = k % 2 == 1;
        if letters_are_words {
            for ch in &alphabet {
                *wc.entry(ch.to_string()).or_insert(0) += 1;
            }
        }
        for extra in [0, 1, 3, 8, 20] {
            let cap = alphabet.len() + extra;
            let config = MorfConfig {
                counts: CountMode::Tokens,
                max_lexicon_size: Some(cap),
                ..MorfConfig::default()
            };
            let (model, trace) = catch_unwind(|| train_morf(&wc, &config))
                .map_err(|_| format!("corpus {k} cap {cap}: inline cap assertion fired"))?
                .map_err(|e| e.to_string())?;
            ensure(trace.max_lexicon_seen <= cap && model.lexicon.len() <= cap, || {
                format!("corpus {k} cap {cap}: saw lexicon of {}", trace.max_lexicon_seen)
            })?;
            if extra == 0 && letters_are_words {
                for w in wc.keys() {
                    let seg = model.segment(w);
                    let chars: Vec<String> = w.chars().map(String::from).collect();
                    ensure(seg == chars, || format!("cap = |alphabet| left {w:?} as {seg:?}"))?;
                }
            }
            runs += 1;
        }
    }
    Ok(format!("{runs} capped runs within cap; cap = |alphabet| gives characters on letter-covering corpora"))
}

// ---------------------------------------------------------------------------
// 6. FlatCat EM

fn criterion_flatcat() -> Check {
    let affix: Vec<(&str, u64)> = vec![
        ("replay", 3),
        ("redo", 2),
        ("player", 4),
        ("doer", 1),
        ("play", 6),
        ("do", 5),
        ("reread", 2),
        ("reader", 3),
        ("read", 4),
        ("rework", 2),
        ("worker", 3),
        ("work", 5),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let stems = ["tlaca", "calli", "tepe", "michi", "cuauh"];
    let mut agglut = Vec::new();
    for s in stems {
        for (pre, suf) in [("", ""), ("no", ""), ("", "tin"), ("mo", "meh"), ("", "meh")] {
            agglut.push((format!("{pre}{s}{suf}"), rng.gen_range(1..8)));
        }
    }
    let mut random = Vec::new();
    let letters: Vec<char> = "aeiknst".chars().collect();
    for _ in 0..40 {
        random.push((random_word(&mut rng, &letters, 9), rng.gen_range(1..10)));
    }
    let corpora: Vec<BTreeMap<String, u64>> = vec![
        affix.iter().map(|(w, c)| (w.to_string(), *c)).collect(),
        agglut.into_iter().collect(),
        random.into_iter().collect(),
    ];
    let config = FlatCatConfig {
        max_iters: 20,
        epsilon: f64::NEG_INFINITY,
        ..FlatCatConfig::default()
    };
    let mut worst_norm: f64 = 0.0;
    for (k, wc) in corpora.iter().enumerate() {
        let (baseline, _) = train_morf(wc, &MorfConfig::default()).map_err(|e| e.to_string())?;
        let (model, trace) = train_flatcat_with(wc, &baseline, &config).map_err(|e| e.to_string())?;
        let lls = &trace.log_likelihoods;
        ensure(lls.len() > 20, || format!("corpus {k}: only {} EM iterations recorded", lls.len()))?;
        if let Some(w) = lls.windows(2).find(|w| w[1] < w[0] - 1e-9) {
            return Err(format!("corpus {k}: log-likelihood fell {} -> {}", w[0], w[1]));
        }
        let cats = model.categories.as_ref().ok_or("no category model")?;
        for m in [Some(cats), trace.initial.as_ref()].into_iter().flatten() {
            worst_norm = worst_norm.max(m.normalization_error());
        }
    }
    ensure(worst_norm < 1e-9, || format!("normalization error {worst_norm:e}"))?;
    Ok(format!("3 corpora x 20 EM iterations non-decreasing; max normalization error {worst_norm:.1e}"))
}

// ---------------------------------------------------------------------------
// 7. CRF

const ORDER: [Label; 4] = [Label::B, Label::E, Label::M, Label::S];

fn oracle_allowed(prev: Option<Label>, y: Label) -> bool {
    use Label::*;
    match prev {
        None => matches!(y, B | S),
        Some(B) | Some(M) => matches!(y, M | E),
        Some(E) | Some(S) => matches!(y, B | S),
    }
}

/// Every well-formed labeling of length `n` in lexicographic B<E<M<S order.
fn labelings(n: usize) -> Vec<Vec<Label>> {
    let mut out = Vec::new();
    for code in 0..4usize.pow(n as u32) {
        let ys: Vec<Label> = (0..n).map(|i| ORDER[code / 4usize.pow((n - 1 - i) as u32) % 4]).collect();
        let ok = ys.iter().enumerate().all(|(i, &y)| oracle_allowed(i.checked_sub(1).map(|j| ys[j]), y))
            && matches!(ys[n - 1], Label::E | Label::S);
        if ok {
            out.push(ys);
        }
    }
    out
}

fn oracle_score(em: &[[f64; 4]], trans: &[[f64; 4]; 4], ys: &[Label]) -> f64 {
    let mut s = 0.0;
    for (i, &y) in ys.iter().enumerate() {
        s += em[i][y as usize];
        if i > 0 {
            s += trans[ys[i - 1] as usize][y as usize];
        }
    }
    s
}

fn surface_dataset(text: &str) -> SegmentationDataset {
    parse_segmentation(text, SegMode::Surface).expect("valid fixture")
}

const CRF_FIXTURE: &str = "nikmati\tni kmati\ntikmati\tti kmati\nnikitta\tni kitta\nkitta\tkitta\n\
tlacatl\ttlaca tl\ncalli\tcalli\nnocal\tno cal\nnotlacauh\tno tlaca uh\nmocalli\tmo calli\n\
kittaroa\tkitta roa\nmatiroa\tmati roa\ntiroa\tti roa\nnimati\tni mati\n";

fn criterion_crf() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);

    let small = surface_dataset("nikmati\tni kmati\ntlacatl\ttlaca tl\ncalli\tcalli\nnocal\tno cal\nab\ta b\n");
    let seqs: Vec<BmesSequence> = small.entries.iter().map(BmesSequence::from_word).collect();
    let objective = Objective::new(&seqs, 2, 0.1, &[], Exec::Sequential).map_err(|e| e.to_string())?;
    let params: Vec<f64> = (0..objective.dim()).map(|_| rng.gen_range(-0.5..0.5)).collect();
    let (_, grad) = objective.value_and_gradient(&params);
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for i in 0..params.len() {
        let mut up = params.clone();
        up[i] += h;
        let mut down = params.clone();
        down[i] -= h;
        let fd = (objective.value_and_gradient(&up).0 - objective.value_and_gradient(&down).0) / (2.0 * h);
        let rel = (grad[i] - fd).abs() / grad[i].abs().max(fd.abs()).max(1e-6);
        worst = worst.max(rel);
    }
    ensure(worst < 1e-4, || format!("finite-difference relative error {worst:e}"))?;

    let fixture = surface_dataset(CRF_FIXTURE);
    let trained = train_crf(&fixture, 3, 0.01, 100, 1e-6).map_err(|e| e.to_string())?;
    let untrained = CrfModel::zero(3, 0.01);
    let mut checked = 0;
    for model in [&trained, &untrained] {
        for e in &fixture.entries {
            let chars: Vec<char> = e.surface.chars().collect();
            if chars.len() > 8 {
                continue;
            }
            let em = model.emissions(&chars);
            let mut best: Option<(f64, Vec<Label>)> = None;
            let mut runner_up = f64::NEG_INFINITY;
            for ys in labelings(chars.len()) {
                let s = oracle_score(&em, &model.transitions, &ys);
                match &best {
                    Some((b, _)) if s <= *b => runner_up = runner_up.max(s),
                    _ => {
                        if let Some((b, _)) = &best {
                            runner_up = runner_up.max(*b);
                        }
                        best = Some((s, ys));
                    }
                }
            }
            let (b, ys) = best.expect("at least one labeling");
            let got = model.viterbi(&chars);
            let got_score = oracle_score(&em, &model.transitions, &got);
            let near_tie = b - runner_up < 1e-9 && b != runner_up;
            ensure(got == ys || (near_tie && (got_score - b).abs() < 1e-9), || {
                format!("viterbi on {:?}: {got:?} vs brute force {ys:?}", e.surface)
            })?;
            ensure((model.score(&chars, &ys) - b).abs() < 1e-9, || "score disagrees with oracle".into())?;
            checked += 1;
        }
    }

    let mut worst_sum: f64 = 0.0;
    let short_letters: Vec<char> = "aiklmnot".chars().collect();
    for _ in 0..40 {
        let w = random_word(&mut rng, &short_letters, 6);
        let chars: Vec<char> = w.chars().collect();
        let em = trained.emissions(&chars);
        let log_z = trained.log_partition(&chars);
        let total: f64 = labelings(chars.len())
            .iter()
            .map(|ys| (oracle_score(&em, &trained.transitions, ys) - log_z).exp())
            .sum();
        worst_sum = worst_sum.max((total - 1.0).abs());
    }
    ensure(worst_sum < 1e-9, || format!("sum of p(y|x) off by {worst_sum:e}"))?;

    for line in ["nikmati\tni kmati", "tlacatl\ttlaca tl", "calli\tcalli", "notlacauh\tno tlaca uh"] {
        let ds = surface_dataset(line);
        let model = train_crf(&ds, 3, 0.01, 100, 1e-6).map_err(|e| e.to_string())?;
        let got = model.decode(&ds.entries[0].surface);
        ensure(got.morphs == ds.entries[0].morphs, || {
            format!("single example {line:?} decoded as {:?}", got.morphs)
        })?;
    }
    Ok(format!(
        "max FD rel err {worst:.1e}; {checked} viterbi checks; max |sum p - 1| {worst_sum:.1e}; single examples recovered"
    ))
}

// ---------------------------------------------------------------------------
// 8. metric golden values

fn criterion_metric_golden() -> Check {
    let refs: Vec<String> = fixture("mt_ref.txt").lines().map(String::from).collect();
    let b = bleu(&refs, &refs).map_err(|e| e.to_string())?.score;
    let c = chrf(&refs, &refs).map_err(|e| e.to_string())?.score;
    ensure(b == 100.0 && c == 100.0, || format!("identical input gave BLEU {b:?}, chrF {c:?}"))?;

    // "a b c d" vs "a b c c": 3/4, 2/3, 1/2 and a smoothed 1/(2*1)
    let bleu_oracle = (0.75f64 * (2.0 / 3.0) * 0.5 * 0.5).powf(0.25) * 100.0;
    // "abc" vs "abd": orders 1 and 2 overlap 2/3 and 1/2, order 3 none
    let avg = (2.0 / 3.0 + 0.5 + 0.0) / 3.0;
    let chrf_oracle = 5.0 * avg * avg / (4.0 * avg + avg) * 100.0;
    let b = bleu(&["a b c d"], &["a b c c"]).map_err(|e| e.to_string())?.score;
    let c = chrf(&["abc"], &["abd"]).map_err(|e| e.to_string())?.score;
    let round4 = |x: f64| (x * 1e4).round() / 1e4;
    ensure(round4(b) == round4(bleu_oracle) && round4(b) == 59.4604, || format!("BLEU fixture {b}"))?;
    ensure(round4(c) == round4(chrf_oracle) && round4(c) == 38.8889, || format!("chrF fixture {c}"))?;

    let input = fixture("tok13a_input.txt");
    let expected = fixture("tok13a_expected.txt");
    let got: String = input.lines().map(|l| tokenize_13a(l) + "\n").collect();
    ensure(got.as_bytes() == expected.as_bytes(), || "13a output differs from golden file".into())?;
    Ok(format!(
        "identical = 100.0 exactly; BLEU {:.4}, chrF {:.4}; 13a golden {} lines",
        b,
        c,
        input.lines().count()
    ))
}

// ---------------------------------------------------------------------------
// 9. significance

fn swapped<'a>(a: &[&'a str], b: &[&'a str], mask: u32) -> (Vec<&'a str>, Vec<&'a str>) {
    (0..a.len())
        .map(|i| if mask >> i & 1 == 1 { (b[i], a[i]) } else { (a[i], b[i]) })
        .unzip()
}

fn criterion_significance() -> Check {
    let hyp: Vec<String> = fixture("mt_hyp.txt").lines().map(String::from).collect();
    let refs: Vec<String> = fixture("mt_ref.txt").lines().map(String::from).collect();
    for metric in [Metric::Bleu, Metric::Chrf] {
        let r = paired_randomization_test(&hyp, &hyp, &refs, metric, 10_000, 1917, Exec::Parallel)
            .map_err(|e| e.to_string())?;
        ensure(r.p_value == 1.0, || format!("identical systems gave p = {}", r.p_value))?;
    }

    let a = ["the cat sat on the mat", "a quick brown fox jumps"];
    let b = ["the cat is on a mat", "the quick fox jumped over"];
    let r = ["the cat sat on the mat", "the quick brown fox jumps"];
    for metric in [Metric::Bleu, Metric::Chrf] {
        let score = |h: &[&str]| match metric {
            Metric::Bleu => bleu(h, &r).unwrap().score,
            Metric::Chrf => chrf(h, &r).unwrap().score,
        };
        let observed = (score(&a) - score(&b)).abs();
        let extreme = (0..4u32)
            .filter(|&m| {
                let (x, y) = swapped(&a, &b, m);
                (score(&x) - score(&y)).abs() >= observed
            })
            .count();
        let oracle = extreme as f64 / 4.0;
        let exact = exact_randomization_test(&a, &b, &r, metric).map_err(|e| e.to_string())?.p_value;
        ensure(exact == oracle, || format!("{metric}: exact p {exact} vs enumeration {oracle}"))?;
        let mc = paired_randomization_test(&a, &b, &r, metric, 10_000, 11, Exec::Sequential)
            .map_err(|e| e.to_string())?
            .p_value;
        ensure((mc - oracle).abs() <= 0.02, || format!("{metric}: sampled p {mc} vs exact {oracle}"))?;
    }

    let seq = paired_randomization_test(&hyp, &refs, &refs, Metric::Bleu, 10_000, 99, Exec::Sequential)
        .map_err(|e| e.to_string())?;
    let par = paired_randomization_test(&hyp, &refs, &refs, Metric::Bleu, 10_000, 99, Exec::Parallel)
        .map_err(|e| e.to_string())?;
    let again = paired_randomization_test(&hyp, &refs, &refs, Metric::Bleu, 10_000, 99, Exec::Parallel)
        .map_err(|e| e.to_string())?;
    ensure(
        seq.p_value.to_bits() == par.p_value.to_bits() && par.p_value.to_bits() == again.p_value.to_bits(),
        || format!("p differs across runs: {} {} {}", seq.p_value, par.p_value, again.p_value),
    )?;

    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let vocab: Vec<String> = (0..300).map(|i| format!("w{i}")).collect();
    let sentence = |rng: &mut ChaCha8Rng| {
        (0..rng.gen_range(5..25)).map(|_| vocab[rng.gen_range(0..vocab.len())].as_str()).collect::<Vec<_>>().join(" ")
    };
    let big_ref: Vec<String> = (0..1000).map(|_| sentence(&mut rng)).collect();
    let big_a: Vec<String> = big_ref
        .iter()
        .map(|s| if rng.gen_bool(0.6) { s.clone() } else { sentence(&mut rng) })
        .collect();
    let big_b: Vec<String> = big_ref
        .iter()
        .map(|s| if rng.gen_bool(0.5) { s.clone() } else { sentence(&mut rng) })
        .collect();
    let start = Instant::now();
    let big = paired_randomization_test(&big_a, &big_b, &big_ref, Metric::Bleu, 10_000, 1917, Exec::Parallel)
        .map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    within(elapsed, 10.0, "1000-sentence test")?;
    Ok(format!(
        "identical p = 1.0; 2-sentence p matches enumeration; p bit-identical ({}); 1000 sentences in {:.2}s (p = {})",
        seq.p_value,
        elapsed.as_secs_f64(),
        big.p_value
    ))
}

// ---------------------------------------------------------------------------
// 10. EMMA

fn random_canonical(rng: &mut ChaCha8Rng, words: usize, prefix: &str, types: usize) -> SegmentationDataset {
    let entries = (0..words)
        .map(|i| {
            let morphs = (0..rng.gen_range(1..=3)).map(|_| format!("{prefix}{}", rng.gen_range(0..types))).collect();
            SegmentedWord::new(format!("w{i}"), morphs, SegMode::Canonical, i + 1).unwrap()
        })
        .collect();
    SegmentationDataset::new(entries, SegMode::Canonical).unwrap()
}

/// Best total weight over all injective assignments of left types to right
/// types (or to nothing).
fn brute_force_matching(w: &[Vec<i64>], row: usize, used: &mut Vec<bool>) -> i64 {
    if row == w.len() {
        return 0;
    }
    let mut best = brute_force_matching(w, row + 1, used);
    for col in 0..used.len() {
        if !used[col] {
            used[col] = true;
            best = best.max(w[row][col] + brute_force_matching(w, row + 1, used));
            used[col] = false;
        }
    }
    best
}

fn criterion_emma() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for instance in 0..100 {
        let words = rng.gen_range(1..=8);
        let (np, ng) = (rng.gen_range(1..=6), rng.gen_range(1..=6));
        let pred = random_canonical(&mut rng, words, "p", np);
        let gold = random_canonical(&mut rng, words, "g", ng);

        let ptypes: Vec<&String> =
            pred.entries.iter().flat_map(|e| &e.morphs).collect::<BTreeSet<_>>().into_iter().collect();
        let gtypes: Vec<&String> =
            gold.entries.iter().flat_map(|e| &e.morphs).collect::<BTreeSet<_>>().into_iter().collect();
        let mut w = vec![vec![0i64; gtypes.len()]; ptypes.len()];
        for (p, g) in pred.entries.iter().zip(&gold.entries) {
            for (i, pt) in ptypes.iter().enumerate() {
                for (j, gt) in gtypes.iter().enumerate() {
                    let a = p.morphs.iter().filter(|m| m == pt).count() as i64;
                    let b = g.morphs.iter().filter(|m| m == gt).count() as i64;
                    w[i][j] += a.min(b);
                }
            }
        }
        let oracle = brute_force_matching(&w, 0, &mut vec![false; gtypes.len()]);

        let (lp, lg, edges) = cooccurrence(&pred, &gold);
        let (matched, assignment) = max_weight_matching(lp.len(), lg.len(), &edges);
        ensure(matched == oracle, || format!("instance {instance}: matching {matched} vs brute force {oracle}"))?;
        let mut seen = BTreeSet::new();
        ensure(assignment.iter().flatten().all(|&j| seen.insert(j)), || {
            format!("instance {instance}: assignment is not one-to-one")
        })?;
        let npred: usize = pred.entries.iter().map(|e| e.morphs.len()).sum();
        let score = emma_f1(&pred, &gold).map_err(|e| e.to_string())?;
        ensure((score.precision - oracle as f64 / npred as f64).abs() < 1e-12, || {
            format!("instance {instance}: precision {} vs {}", score.precision, oracle as f64 / npred as f64)
        })?;
    }
    for _ in 0..10 {
        let d = random_canonical(&mut rng, 8, "m", 6);
        let s = emma_f1(&d, &d).map_err(|e| e.to_string())?;
        ensure(s.f1 == 1.0, || format!("identical datasets scored {}", s.f1))?;
    }
    Ok("100 random instances match brute force; identical datasets score 1.0".into())
}

// ---------------------------------------------------------------------------
// 11. supervised vs unsupervised ordering

fn criterion_ordering() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let prefixes = ["ni", "ti", "ki", "mo", "to"];
    let suffixes = ["ka", "tli", "meh", "que", "tzin", "yo"];
    let consonants: Vec<char> = "chklmnpstwy".chars().collect();
    let vowels: Vec<char> = "aeiou".chars().collect();
    let stems: Vec<String> = (0..40)
        .map(|_| {
            (0..rng.gen_range(2..=3))
                .map(|_| {
                    format!(
                        "{}{}",
                        consonants[rng.gen_range(0..consonants.len())],
                        vowels[rng.gen_range(0..vowels.len())]
                    )
                })
                .collect()
        })
        .collect();
    let mut words: BTreeMap<String, Vec<String>> = BTreeMap::new();
    while words.len() < 700 {
        let mut morphs = Vec::new();
        if rng.gen_bool(0.5) {
            morphs.push(prefixes[rng.gen_range(0..prefixes.len())].to_string());
        }
        morphs.push(stems[rng.gen_range(0..stems.len())].clone());
        for _ in 0..rng.gen_range(0..=2) {
            morphs.push(suffixes[rng.gen_range(0..suffixes.len())].to_string());
        }
        words.insert(morphs.concat(), morphs);
    }
    let mut items: Vec<(String, Vec<String>)> = words.into_iter().collect();
    for i in (1..items.len()).rev() {
        items.swap(i, rng.gen_range(0..=i));
    }
    let (train, test) = items.split_at(500);
    let dataset = |xs: &[(String, Vec<String>)]| {
        let entries = xs.iter().map(|(w, m)| SegmentedWord::surface(w.clone(), m.clone()).unwrap()).collect();
        SegmentationDataset::new(entries, SegMode::Surface).unwrap()
    };
    let gold_train = dataset(train);
    let gold_test = dataset(test);
    let wc: BTreeMap<String, u64> = train.iter().map(|(w, _)| (w.clone(), rng.gen_range(1..10))).collect();

    let predict = |f: &dyn Fn(&str) -> Vec<String>| -> f64 {
        let entries = test.iter().map(|(w, _)| SegmentedWord::surface(w.clone(), f(w)).unwrap()).collect();
        let pred = SegmentationDataset::new(entries, SegMode::Surface).unwrap();
        boundary_f1(&pred, &gold_test).unwrap().f1
    };

    let crf = train_crf(&gold_train, 3, 0.01, 100, 1e-5).map_err(|e| e.to_string())?;
    let crf_f1 = predict(&|w| crf.decode(w).morphs);

    let (morf, _) = train_morf(&wc, &MorfConfig::default()).map_err(|e| e.to_string())?;
    let alphabet = wc.keys().flat_map(|w| w.chars()).collect::<BTreeSet<_>>().len();
    let lmvr_config = MorfConfig {
        counts: CountMode::Tokens,
        max_lexicon_size: Some(alphabet + 60),
        ..MorfConfig::default()
    };
    let (lmvr, _) = train_morf(&wc, &lmvr_config).map_err(|e| e.to_string())?;
    let flatcat = polyseg::unsup::train_flatcat(&wc, &morf, 1e-6).map_err(|e| e.to_string())?;
    let bpe = train_bpe(&wc, alphabet + 150).map_err(|e| e.to_string())?;

    let unsupervised = [
        ("morfessor", predict(&|w| morf.segment(w))),
        ("lmvr", predict(&|w| lmvr.segment(w))),
        ("flatcat", predict(&|w| flatcat.segment(w))),
        (
            "bpe",
            predict(&|w| bpe.encode_strings(w).iter().map(|p| p.trim_end_matches("</w>").to_string()).collect()),
        ),
    ];
    let listing = unsupervised.iter().map(|(n, f)| format!("{n} {f:.3}")).collect::<Vec<_>>().join(", ");
    ensure(unsupervised.iter().all(|(_, f)| crf_f1 > *f), || {
        format!("crf {crf_f1:.3} does not beat all of: {listing}")
    })?;
    Ok(format!("synthetic agglutinative set: crf {crf_f1:.3} > {listing}"))
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("corpus statistics", criterion_corpus_stats),
        ("segmentation dataset statistics", criterion_seg_stats),
        ("bpe oracle suite", criterion_bpe),
        ("morfessor oracle", criterion_morfessor),
        ("lmvr lexicon cap", criterion_lmvr),
        ("flatcat em", criterion_flatcat),
        ("crf numerics", criterion_crf),
        ("metric golden values", criterion_metric_golden),
        ("significance test", criterion_significance),
        ("emma matching", criterion_emma),
        ("supervised over unsupervised", criterion_ordering),
    ];
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS {name}: {detail}", k + 1),
            Err(reason) => {
                failed += 1;
                println!("criterion {:>2} FAIL {name}: {reason}", k + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
