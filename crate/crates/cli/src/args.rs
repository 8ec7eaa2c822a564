use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "absdetect", version, about = "Detect machine-generated scientific abstracts")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,

    /// More log output (-v debug, -vv trace).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,

    /// Only warnings and errors.
    #[arg(short, long, global = true)]
    pub quiet: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// Base seed for every random choice (splits, initialization, shuffling).
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Parallel workers; 0 uses every core.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate AI abstracts for human titles and write a paired dataset.
    Generate(GenerateArgs),
    /// Clean a dataset's abstracts and write the token lists.
    Clean(CleanArgs),
    /// Run the repeated-split experiment and write its report.
    Experiment(ExperimentArgs),
    /// Analyze the misclassifications of a saved model or predictions.
    Analyze(AnalyzeArgs),
    /// Rank experiment reports by mean accuracy.
    Leaderboard(LeaderboardArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Human abstracts (JSONL or CSV with id, title, abstract).
    #[arg(long)]
    pub titles: PathBuf,

    /// Output paired dataset (JSONL).
    #[arg(long)]
    pub out: PathBuf,

    /// Use the offline echo endpoint instead of a real service.
    #[arg(long)]
    pub mock: bool,

    /// Completion endpoint URL; defaults to $ABSDETECT_ENDPOINT_URL. The
    /// key is always read from $ABSDETECT_API_KEY.
    #[arg(long)]
    pub url: Option<String>,

    /// Response cache directory; defaults to `<out>.cache`.
    #[arg(long)]
    pub cache: Option<PathBuf>,

    #[arg(long)]
    pub model_name: Option<String>,

    #[arg(long)]
    pub max_tokens: Option<u32>,

    #[arg(long)]
    pub temperature: Option<f64>,

    /// Retries for transient endpoint failures.
    #[arg(long, default_value_t = 5)]
    pub max_retries: u32,

    /// Per-request timeout in seconds.
    #[arg(long, default_value_t = 60)]
    pub timeout: u64,
}

#[derive(Debug, Args)]
pub struct CleanArgs {
    #[arg(long)]
    pub dataset: PathBuf,

    /// Output JSONL, one `{"source_id", "tokens"}` object per record.
    #[arg(long)]
    pub out: PathBuf,

    /// Stop-word file, one word per line.
    #[arg(long)]
    pub stopwords: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FeatureFamily {
    Tfidf,
    Entity,
    EmbeddingMean,
    EmbeddingSequence,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelFamily {
    Logreg,
    Mnb,
    Svm,
    Lstm,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// JSON experiment configuration; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,

    #[arg(long)]
    pub dataset: Option<PathBuf>,

    #[arg(long, value_enum)]
    pub features: Option<FeatureFamily>,

    #[arg(long, value_enum)]
    pub model: Option<ModelFamily>,

    /// Word-vector file for the embedding feature families.
    #[arg(long)]
    pub embeddings: Option<PathBuf>,

    /// Term list for entity n-grams.
    #[arg(long)]
    pub lexicon: Option<PathBuf>,

    #[arg(long)]
    pub stopwords: Option<PathBuf>,

    #[arg(long)]
    pub iterations: Option<usize>,

    #[arg(long)]
    pub train_fraction: Option<f64>,

    /// Report name; defaults to "<MODEL> + <FEATURES>".
    #[arg(long)]
    pub name: Option<String>,

    /// Directory for the report JSON and text table.
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Save the model, fitted features and test predictions of one
    /// iteration to this directory, for `analyze`.
    #[arg(long)]
    pub save_bundle: Option<PathBuf>,

    /// Iteration whose model is saved with --save-bundle.
    #[arg(long, default_value_t = 0)]
    pub bundle_iteration: usize,
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("source").required(true).args(["bundle", "predictions"])))]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub dataset: PathBuf,

    /// Model bundle written by `experiment --save-bundle`; its model
    /// re-scores the bundle's test records.
    #[arg(long)]
    pub bundle: Option<PathBuf>,

    /// Saved predictions JSON (a bundle's predictions.json).
    #[arg(long)]
    pub predictions: Option<PathBuf>,

    /// Word-vector file, overriding the path recorded in the bundle.
    #[arg(long)]
    pub embeddings: Option<PathBuf>,

    /// Stop-word file; defaults to the bundle's list or the bundled English list.
    #[arg(long)]
    pub stopwords: Option<PathBuf>,

    #[arg(long, default_value_t = absdetect_core::analysis::DEFAULT_TOP_K)]
    pub top_k: usize,

    /// Title-length difference (words) below which RQ3 is answered negative.
    #[arg(long, default_value_t = absdetect_core::analysis::DEFAULT_TITLE_THRESHOLD)]
    pub title_threshold: f64,

    #[arg(long, default_value = "analysis")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct LeaderboardArgs {
    /// Report files or directories containing them.
    #[arg(required = true)]
    pub paths: Vec<PathBuf>,

    /// Print JSON instead of the text table.
    #[arg(long)]
    pub json: bool,

    /// Also write the rendering to this file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}
