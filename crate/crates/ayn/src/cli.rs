//! Command-line interface definitions.

use std::path::PathBuf;

use ayn_core::fusion::FusionMode;
use ayn_core::metrics::AgreementCriterion;
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::io::{FeatureFormat, QaFormat};

#[derive(Debug, Parser)]
#[command(
    name = "ayn",
    version,
    about = "Train, run and evaluate visual question answering models"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a model and write a checkpoint.
    Train(TrainArgs),
    /// Answer test questions with a trained checkpoint.
    Predict(PredictArgs),
    /// Score predictions against reference answers.
    Eval(EvalArgs),
    /// Run a non-neural baseline.
    Baseline(BaselineArgs),
    /// Combine evaluation reports into one table, optionally plotting validation curves.
    Report(ReportArgs),
    /// Write the synthetic toy-world corpus.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EncoderArg {
    Bow,
    Cnn,
    Lstm,
    Gru,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FusionArg {
    Concat,
    Multiply,
    Sum,
}

impl From<FusionArg> for FusionMode {
    fn from(f: FusionArg) -> Self {
        match f {
            FusionArg::Concat => FusionMode::Concat,
            FusionArg::Multiply => FusionMode::Multiply,
            FusionArg::Sum => FusionMode::Sum,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DecoderArg {
    Classify,
    Generate,
}

#[derive(Debug, Clone, Default, Args)]
pub struct TrainArgs {
    /// Run configuration (`.toml` or JSON).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Training questions (DAQUAR `.txt` or JSONL).
    #[arg(long)]
    pub train: PathBuf,
    #[arg(long, value_enum)]
    pub train_format: Option<QaFormat>,
    /// Image features (`.bin` binary or TSV).
    #[arg(long)]
    pub features: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub features_format: Option<FeatureFormat>,
    /// Pretrained word vectors for the pretrained embedding modes.
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// Checkpoint to write.
    #[arg(long)]
    pub out: PathBuf,
    /// Training log (JSON) to write.
    #[arg(long)]
    pub log: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long, value_enum)]
    pub encoder: Option<EncoderArg>,
    #[arg(long, value_enum)]
    pub fusion: Option<FusionArg>,
    #[arg(long, value_enum)]
    pub decoder: Option<DecoderArg>,
    #[arg(long)]
    pub top_k: Option<usize>,
    #[arg(long)]
    pub embed_dim: Option<usize>,
    #[arg(long)]
    pub hidden_dim: Option<usize>,
    #[arg(long)]
    pub validation_fraction: Option<f64>,
    /// Drop the image input entirely.
    #[arg(long)]
    pub question_only: bool,
}

#[derive(Debug, Clone, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Test questions (DAQUAR `.txt` or JSONL).
    #[arg(long)]
    pub test: PathBuf,
    #[arg(long, value_enum)]
    pub test_format: Option<QaFormat>,
    #[arg(long)]
    pub features: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub features_format: Option<FeatureFormat>,
    /// Predictions JSONL to write.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AgreementArg {
    SetIdentity,
    WordOverlap,
}

impl From<AgreementArg> for AgreementCriterion {
    fn from(a: AgreementArg) -> Self {
        match a {
            AgreementArg::SetIdentity => AgreementCriterion::SetIdentity,
            AgreementArg::WordOverlap => AgreementCriterion::WordOverlap,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    /// Predictions JSONL (`{"id", "answer"}` per line).
    #[arg(long)]
    pub predictions: PathBuf,
    /// References: DAQUAR `.txt` or JSONL with `id`, `answers` and optionally `question`.
    #[arg(long)]
    pub references: PathBuf,
    #[arg(long, value_enum)]
    pub references_format: Option<QaFormat>,
    /// Taxonomy edges (`child<TAB>parent`); without it WUPS uses exact match.
    #[arg(long)]
    pub taxonomy: Option<PathBuf>,
    /// Word to taxonomy node map (`word<TAB>node[,node]`); by default each node names itself.
    #[arg(long, requires = "taxonomy")]
    pub word_map: Option<PathBuf>,
    /// Factor applied to similarities below the WUPS threshold.
    #[arg(long, default_value_t = ayn_core::taxonomy::DEFAULT_DOWNWEIGHT)]
    pub downweight: f64,
    /// Add the VQA consensus accuracy column.
    #[arg(long)]
    pub vqa: bool,
    #[arg(long, value_enum, default_value = "set-identity")]
    pub agreement: AgreementArg,
    /// Seed recorded in the report.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Report JSON to write.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Plain-text table to write (also printed to stdout).
    #[arg(long)]
    pub text: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BaselineKind {
    /// Most frequent training answer.
    Constant,
    /// Most frequent answer per question type.
    PerType,
    /// Exact question lookup.
    Lookup,
    /// Nearest training question.
    NnQuestion,
    /// Nearest image among the nearest training questions.
    NnVisual,
}

#[derive(Debug, Clone, Args)]
pub struct BaselineArgs {
    #[arg(long, value_enum)]
    pub kind: BaselineKind,
    #[arg(long)]
    pub train: PathBuf,
    #[arg(long)]
    pub test: PathBuf,
    #[arg(long, value_enum)]
    pub format: Option<QaFormat>,
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    #[arg(long)]
    pub features: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub features_format: Option<FeatureFormat>,
    /// Lookup: ignore "the" and "a".
    #[arg(long)]
    pub strip_articles: bool,
    /// Nearest neighbour: average instead of summing word vectors.
    #[arg(long)]
    pub mean: bool,
    /// Visual nearest neighbour: number of question candidates.
    #[arg(long, default_value_t = ayn_core::baselines::NnVisual::DEFAULT_K)]
    pub k: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct ReportArgs {
    /// Evaluation report JSON files; each becomes one row.
    pub reports: Vec<PathBuf>,
    /// Row subset taken from each report.
    #[arg(long, default_value = "overall")]
    pub subset: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub text: Option<PathBuf>,
    /// Training logs or checkpoints whose validation curves are plotted.
    #[arg(long)]
    pub curves: Vec<PathBuf>,
    /// SVG file for the validation curves.
    #[arg(long, requires = "curves")]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SynthTask {
    /// Color, shape, count and language-prior questions.
    Classify,
    /// Two-word "what is in the image" answers.
    Describe,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.1)]
    pub noise: f64,
    #[arg(long, default_value_t = 2000)]
    pub num_train: usize,
    #[arg(long, default_value_t = 500)]
    pub num_test: usize,
    #[arg(long, value_enum, default_value = "classify")]
    pub task: SynthTask,
    #[arg(long, value_enum, default_value = "tsv")]
    pub features_format: FeatureFormat,
}
