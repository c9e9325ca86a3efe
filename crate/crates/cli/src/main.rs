use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;

/// Subword and morphological segmentation toolkit for low-resource MT.
#[derive(Debug, Parser)]
#[command(name = "polyseg", version)]
pub struct Cli {
    /// Run every data-parallel loop on one thread.
    #[arg(long, global = true)]
    pub sequential: bool,

    /// Report layout.
    #[arg(long, global = true, value_enum, default_value_t = Format::Tsv)]
    pub format: Format,

    /// Write the report here instead of stdout.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Tsv,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Bpe,
    Morfessor,
    Lmvr,
    Flatcat,
    Crf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Surface,
    Canonical,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SegMetric {
    Boundary,
    Emma,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MtMetric {
    Bleu,
    Chrf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Scheme {
    /// Marker closes the final piece of each word.
    Eow,
    /// Marker ends every non-final piece.
    Cont,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parallel corpus statistics.
    Stats {
        #[arg(long)]
        src: PathBuf,
        #[arg(long)]
        tgt: PathBuf,
        /// Training source side, for OOV counts.
        #[arg(long, requires = "train_tgt")]
        train_src: Option<PathBuf>,
        /// Training target side, for OOV counts.
        #[arg(long, requires = "train_src")]
        train_tgt: Option<PathBuf>,
    },
    /// Segmentation dataset statistics.
    SegStats {
        #[arg(long)]
        input: PathBuf,
        /// Training dataset, for unseen-morph counts.
        #[arg(long)]
        train: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Mode::Surface)]
        mode: Mode,
    },
    /// Train a segmentation model.
    Train(TrainArgs),
    /// Segment a text file with a trained model.
    Segment {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
    },
    /// Undo segmentation.
    Desegment {
        /// Take the marker convention from this model file.
        #[arg(long, conflicts_with = "scheme")]
        model: Option<PathBuf>,
        /// Marker convention when no model is given.
        #[arg(long, value_enum, requires = "marker")]
        scheme: Option<Scheme>,
        #[arg(long)]
        marker: Option<String>,
        #[arg(long)]
        input: PathBuf,
    },
    /// Score predicted segmentations against gold.
    EvalSeg {
        /// Predicted segmentation file (`surface<TAB>morphs`).
        #[arg(long, required_unless_present = "model")]
        pred: Option<PathBuf>,
        /// Segment the gold surfaces with this model instead of reading predictions.
        #[arg(long, conflicts_with = "pred")]
        model: Option<PathBuf>,
        #[arg(long)]
        gold: PathBuf,
        #[arg(long, value_enum, default_value_t = SegMetric::Boundary)]
        metric: SegMetric,
        #[arg(long, value_enum, default_value_t = Mode::Surface)]
        mode: Mode,
    },
    /// Corpus BLEU or chrF.
    EvalMt {
        #[arg(long)]
        hyp: PathBuf,
        #[arg(long = "ref", value_name = "REF")]
        reference: PathBuf,
        #[arg(long, value_enum, default_value_t = MtMetric::Bleu)]
        metric: MtMetric,
        /// Append per-sentence scores.
        #[arg(long)]
        sentences: bool,
    },
    /// Paired approximate randomization between two systems.
    Signif {
        #[arg(long)]
        sys_a: PathBuf,
        #[arg(long)]
        sys_b: PathBuf,
        #[arg(long = "ref", value_name = "REF")]
        reference: PathBuf,
        #[arg(long, value_enum, default_value_t = MtMetric::Bleu)]
        metric: MtMetric,
        #[arg(long, default_value_t = polyseg::metrics::DEFAULT_TRIALS)]
        trials: usize,
        #[arg(long, default_value_t = commands::DEFAULT_SEED)]
        seed: u64,
    },
    /// Richness and UNK diagnostics.
    #[command(subcommand)]
    Analyze(Analyze),
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long, value_enum)]
    pub method: Method,
    /// Training text (one sentence per line), or a segmentation dataset for `crf`.
    #[arg(long)]
    pub input: PathBuf,
    /// Where to write the model file.
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, default_value_t = 5000)]
    pub vocab_size: usize,
    #[arg(long, default_value_t = polyseg::unsup::DEFAULT_ALPHA)]
    pub alpha: f64,
    #[arg(long, default_value_t = polyseg::unsup::DEFAULT_EPSILON)]
    pub epsilon: f64,
    /// Lexicon size cap for `lmvr`.
    #[arg(long)]
    pub cap: Option<usize>,
    #[arg(long, default_value_t = polyseg::crf::DEFAULT_DELTA)]
    pub delta: usize,
    #[arg(long, default_value_t = polyseg::crf::DEFAULT_L2)]
    pub l2: f64,
    #[arg(long, default_value_t = 100)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 1e-5)]
    pub tol: f64,
    #[arg(long, default_value_t = commands::DEFAULT_SEED)]
    pub seed: u64,
}

#[derive(Debug, Subcommand)]
pub enum Analyze {
    /// Morphs per token against per-sentence chrF.
    Richness {
        #[arg(long)]
        probe_model: PathBuf,
        /// Source sentences measured by the probe.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        hyp: PathBuf,
        #[arg(long = "ref", value_name = "REF")]
        reference: PathBuf,
        #[arg(long, default_value_t = polyseg::analysis::DEFAULT_BINS)]
        bins: usize,
        /// Also write the binned means here.
        #[arg(long)]
        bins_output: Option<PathBuf>,
    },
    /// Count pieces outside an MT vocabulary.
    Unk {
        /// One piece per line.
        #[arg(long)]
        vocab: PathBuf,
        /// Segmented corpora, one per system.
        #[arg(long, required = true)]
        input: Vec<PathBuf>,
        /// System names, in `--input` order; defaults to file stems.
        #[arg(long)]
        system: Vec<String>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("polyseg: {e}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}
