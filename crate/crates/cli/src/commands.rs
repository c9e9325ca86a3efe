use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use polyseg::analysis::{bin_richness, bins_csv, richness_csv, richness_table, unk_csv, unk_report};
use polyseg::bpe::train_bpe;
use polyseg::corpus::{
    corpus_stats, load_parallel, load_segmentation, parse_sentences, read_text, seg_stats, word_counts, SegMode,
    SegmentationDataset, SegmentedWord, Split,
};
use polyseg::crf::{train_crf_with, CrfTrainConfig};
use polyseg::metrics::{self, boundary_f1, emma_f1, paired_randomization_test, Metric, SegScore};
use polyseg::model::{desegment_text, AnyModel, Marker};
use polyseg::report::float;
use polyseg::unsup::{mdl_cost, train_flatcat, train_morf, CountMode, MorfConfig, MorfModel};
use polyseg::{Error, Exec, Result};

use crate::{Analyze, Cli, Command, Format, Method, Mode, MtMetric, Scheme, SegMetric, TrainArgs};

pub const DEFAULT_SEED: u64 = 1917;

/// 2: usage, I/O, configuration, mode; 3: data and format; 4: numeric.
pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io { .. } | Error::Config(_) | Error::UnsupportedMode(_) => 2,
        Error::Numeric(_) => 4,
        _ => 3,
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })
}

fn lines(path: &Path) -> Result<Vec<String>> {
    Ok(read_text(path)?.lines().map(str::to_owned).collect())
}

fn seg_mode(mode: Mode) -> SegMode {
    match mode {
        Mode::Surface => SegMode::Surface,
        Mode::Canonical => SegMode::Canonical,
    }
}

fn mt_metric(metric: MtMetric) -> Metric {
    match metric {
        MtMetric::Bleu => Metric::Bleu,
        MtMetric::Chrf => Metric::Chrf,
    }
}

struct Outcome {
    report: Option<String>,
    summary: String,
}

pub fn run(cli: &Cli) -> Result<()> {
    let exec = if cli.sequential { Exec::Sequential } else { Exec::Parallel };
    let outcome = match &cli.command {
        Command::Stats {
            src,
            tgt,
            train_src,
            train_tgt,
        } => stats(src, tgt, train_src.as_deref().zip(train_tgt.as_deref()))?,
        Command::SegStats { input, train, mode } => {
            let mode = seg_mode(*mode);
            let ds = load_segmentation(input, mode)?;
            let train = train.as_deref().map(|p| load_segmentation(p, mode)).transpose()?;
            let s = seg_stats(&ds, train.as_ref())?;
            Outcome {
                summary: format!("{} words, {} morphs", s.words, s.morphs),
                report: Some(s.to_tsv()),
            }
        }
        Command::Train(args) => train(args, exec)?,
        Command::Segment { model, input } => {
            let model = AnyModel::load(model)?;
            let text = read_text(input)?;
            let out = model.segment_text(&text, exec)?;
            Outcome {
                summary: format!("segmented {} lines with a {} model", out.lines().count(), model.family()),
                report: Some(out),
            }
        }
        Command::Desegment {
            model,
            scheme,
            marker,
            input,
        } => {
            let marker = match (model, scheme, marker) {
                (Some(m), _, _) => AnyModel::load(m)?.marker(),
                (None, Some(Scheme::Eow), Some(m)) => Marker::EndOfWord(m.clone()),
                (None, Some(Scheme::Cont), Some(m)) => Marker::Continuation(m.clone()),
                _ => return Err(Error::Config("desegment needs --model or --scheme with --marker".into())),
            };
            let out = desegment_text(&read_text(input)?, &marker)?;
            Outcome {
                summary: format!("desegmented {} lines", out.lines().count()),
                report: Some(out),
            }
        }
        Command::EvalSeg {
            pred,
            model,
            gold,
            metric,
            mode,
        } => eval_seg(pred.as_deref(), model.as_deref(), gold, *metric, seg_mode(*mode))?,
        Command::EvalMt {
            hyp,
            reference,
            metric,
            sentences,
        } => {
            let r = metrics::corpus_score(&lines(hyp)?, &lines(reference)?, mt_metric(*metric))?;
            let mut report = r.to_tsv();
            if *sentences {
                report.push_str(&r.sentences_tsv());
            }
            Outcome {
                summary: format!("{} = {} ({})", r.metric, float(r.score, 2), r.signature),
                report: Some(report),
            }
        }
        Command::Signif {
            sys_a,
            sys_b,
            reference,
            metric,
            trials,
            seed,
        } => {
            let metric = mt_metric(*metric);
            let r = paired_randomization_test(
                &lines(sys_a)?,
                &lines(sys_b)?,
                &lines(reference)?,
                metric,
                *trials,
                *seed,
                exec,
            )?;
            let report = format!(
                "metric\tscore_a\tscore_b\tdelta\tp\ttrials\tseed\tsignificant\tsignature\n{metric}\t{}\t{}\t{}\t{}\t{trials}\t{seed}\t{}\t{}\n",
                float(r.score_a, 4),
                float(r.score_b, 4),
                float(r.delta, 4),
                float(r.p_value, 4),
                r.significant(),
                metric.signature(),
            );
            Outcome {
                summary: format!("p={:?} delta={} ({metric}, {trials} trials)", r.p_value, float(r.delta, 4)),
                report: Some(report),
            }
        }
        Command::Analyze(a) => return analyze(a, cli.output.as_deref(), exec),
    };
    emit(cli, outcome)
}

fn emit(cli: &Cli, outcome: Outcome) -> Result<()> {
    if let Some(mut report) = outcome.report {
        if cli.format == Format::Csv {
            report = report.replace('\t', ",");
        }
        match &cli.output {
            Some(path) => write_file(path, &report)?,
            None => print!("{report}"),
        }
    }
    eprintln!("{}", outcome.summary);
    Ok(())
}

fn stats(src: &Path, tgt: &Path, train: Option<(&Path, &Path)>) -> Result<Outcome> {
    let corpus = load_parallel(src, tgt)?;
    let train = train.map(|(s, t)| load_parallel(s, t)).transpose()?;
    let corpus = if train.is_some() { corpus.with_split(Split::Dev) } else { corpus };
    let s = corpus_stats(&corpus, train.as_ref())?;
    Ok(Outcome {
        summary: format!(
            "S={} N_src={} N_tgt={} ratio={}",
            s.sentences,
            s.source.tokens,
            s.target.tokens,
            float(s.token_ratio(), 3)
        ),
        report: Some(s.to_tsv()),
    })
}

fn train(args: &TrainArgs, exec: Exec) -> Result<Outcome> {
    let (model, summary) = match args.method {
        Method::Crf => {
            let ds = load_segmentation(&args.input, SegMode::Surface)?;
            let config = CrfTrainConfig {
                delta: args.delta,
                l2: args.l2,
                max_iters: args.max_iters,
                tol: args.tol,
                exec,
            };
            let (m, trace) = train_crf_with(&ds, &config)?;
            let summary = format!(
                "crf: {} features, {} steps, log-likelihood {}",
                m.weights.len(),
                trace.objective.len() - 1,
                float(*trace.objective.last().expect("initial objective"), 4)
            );
            (AnyModel::Crf(m), summary)
        }
        method => {
            let sentences = parse_sentences(&read_text(&args.input)?)?;
            let wc = word_counts(&sentences);
            match method {
                Method::Bpe => {
                    let m = train_bpe(&wc, args.vocab_size)?;
                    let summary = format!("bpe: vocabulary size {} ({} merges)", m.vocab().len(), m.merges().len());
                    (AnyModel::Bpe(m), summary)
                }
                _ => {
                    let m = train_unsupervised(method, args, &wc)?;
                    let summary = format!(
                        "{}: {} morph types, cost {}",
                        m.variant,
                        m.lexicon.len(),
                        float(mdl_cost(&m).total(), 4)
                    );
                    (AnyModel::Morf(m), summary)
                }
            }
        }
    };
    write_file(&args.model, &model.to_text())?;
    Ok(Outcome {
        report: None,
        summary: format!("{summary}; model written to {}", args.model.display()),
    })
}

fn train_unsupervised(
    method: Method,
    args: &TrainArgs,
    wc: &std::collections::BTreeMap<String, u64>,
) -> Result<MorfModel> {
    let mut config = MorfConfig {
        alpha: args.alpha,
        seed: args.seed,
        epsilon: args.epsilon,
        ..MorfConfig::default()
    };
    match method {
        Method::Morfessor => Ok(train_morf(wc, &config)?.0),
        Method::Lmvr => {
            let cap = args
                .cap
                .ok_or_else(|| Error::Config("lmvr needs --cap (maximum lexicon size)".into()))?;
            config.counts = CountMode::Tokens;
            config.max_lexicon_size = Some(cap);
            Ok(train_morf(wc, &config)?.0)
        }
        Method::Flatcat => {
            let baseline = train_morf(wc, &config)?.0;
            train_flatcat(wc, &baseline, args.epsilon)
        }
        Method::Bpe | Method::Crf => unreachable!("handled by the caller"),
    }
}

fn eval_seg(
    pred: Option<&Path>,
    model: Option<&Path>,
    gold: &Path,
    metric: SegMetric,
    mode: SegMode,
) -> Result<Outcome> {
    let gold = load_segmentation(gold, mode)?;
    let pred = match (pred, model) {
        (Some(p), _) => load_segmentation(p, mode)?,
        (None, Some(m)) => {
            let model = AnyModel::load(m)?;
            let entries = gold
                .entries
                .iter()
                .map(|e| SegmentedWord::surface(e.surface.clone(), model.split_word(&e.surface)))
                .collect::<Result<Vec<_>>>()?;
            SegmentationDataset::new(entries, SegMode::Surface)?
        }
        (None, None) => return Err(Error::Config("eval-seg needs --pred or --model".into())),
    };
    let (name, score): (&str, SegScore) = match metric {
        SegMetric::Boundary => ("boundary", boundary_f1(&pred, &gold)?),
        SegMetric::Emma => ("emma", emma_f1(&pred, &gold)?),
    };
    Ok(Outcome {
        summary: format!("{name} F1 = {}", float(score.f1, 4)),
        report: Some(format!(
            "metric\tprecision\trecall\tf1\taccuracy\n{name}\t{}\t{}\t{}\t{}\n",
            float(score.precision, 4),
            float(score.recall, 4),
            float(score.f1, 4),
            float(score.accuracy, 4)
        )),
    })
}

fn analyze(a: &Analyze, output: Option<&Path>, exec: Exec) -> Result<()> {
    let (report, summary) = match a {
        Analyze::Richness {
            probe_model,
            input,
            hyp,
            reference,
            bins,
            bins_output,
        } => {
            let probe = match AnyModel::load(probe_model)? {
                AnyModel::Morf(m) => m,
                other => {
                    return Err(Error::UnsupportedMode(format!(
                        "the richness probe must be an unsupervised morph model, not {}",
                        other.family()
                    )))
                }
            };
            let sentences = parse_sentences(&read_text(input)?)?;
            let scores = metrics::chrf(&lines(hyp)?, &lines(reference)?)?.sentence_scores;
            let records = richness_table(&probe, &sentences, &scores, exec)?;
            let table = bin_richness(&records, *bins)?;
            if let Some(path) = bins_output {
                write_file(path, &bins_csv(&table))?;
            }
            (richness_csv(&records), format!("{} sentences, {} bins", records.len(), table.len()))
        }
        Analyze::Unk { vocab, input, system } => {
            if !system.is_empty() && system.len() != input.len() {
                return Err(Error::Config(format!(
                    "{} --system names for {} --input files",
                    system.len(),
                    input.len()
                )));
            }
            let vocab: BTreeSet<String> = read_text(vocab)?
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty())
                .map(str::to_owned)
                .collect();
            let mut reports = Vec::new();
            for (i, path) in input.iter().enumerate() {
                let name = system.get(i).cloned().unwrap_or_else(|| stem(path));
                reports.push(unk_report(&name, &lines(path)?, &vocab)?);
            }
            let summary = reports
                .iter()
                .map(|r| format!("{}: {}/{}", r.system, r.unk, r.total))
                .collect::<Vec<_>>()
                .join(", ");
            (unk_csv(&reports), summary)
        }
    };
    match output {
        Some(path) => write_file(path, &report)?,
        None => print!("{report}"),
    }
    eprintln!("{summary}");
    Ok(())
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| PathBuf::from(path).display().to_string())
}
