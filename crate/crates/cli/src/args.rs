use std::path::PathBuf;

use aucrank::boost::LEARNING_RATE_GRID;
use aucrank::lambda::PairOrientation;
use aucrank::{MetricKind, TrainConfig};
use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "aucrank",
    version,
    about = "Gradient boosted ranking trees for AUC, MAUC and NDCG"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a model and write it with its per-iteration history.
    Train(TrainArgs),
    /// Score documents with a saved model.
    Predict(PredictArgs),
    /// Report ranking metrics for a model or a predictions file.
    Evaluate(EvaluateArgs),
    /// Train once per learning rate and keep the best on validation.
    Grid(GridArgs),
    /// Generate a seeded synthetic dataset.
    Synth(SynthArgs),
}

/// Training data: explicit files or one fold of a fold root.
#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// Training file in the LETOR line format.
    #[arg(long, conflicts_with = "folds")]
    pub data: Option<PathBuf>,
    /// Validation file used for model selection.
    #[arg(long, requires = "data")]
    pub valid: Option<PathBuf>,
    /// Root holding Fold<k>/{train,vali,test}.txt.
    #[arg(long)]
    pub folds: Option<PathBuf>,
    /// Fold number under --folds.
    #[arg(long, default_value_t = 1, requires = "folds")]
    pub fold: usize,
}

#[derive(Debug, Clone, Args)]
pub struct BoostArgs {
    /// auc, mauc or ndcg@k.
    #[arg(long, default_value = "auc")]
    pub metric: MetricKind,
    #[arg(long, default_value_t = 100)]
    pub trees: usize,
    #[arg(long, default_value_t = 7)]
    pub leaves: usize,
    #[arg(long, default_value_t = 10)]
    pub min_docs: usize,
    /// Rounds without validation improvement before stopping.
    #[arg(long, default_value_t = 50)]
    pub patience: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Conflicting pairs per query above which pairs are subsampled.
    #[arg(long, default_value_t = 10_000_000)]
    pub pair_budget: u64,
    /// Which document of a pair is pushed up: metric or label.
    #[arg(long, default_value = "metric")]
    pub orientation: PairOrientation,
}

impl BoostArgs {
    pub fn config(&self, learning_rate: f64) -> TrainConfig {
        TrainConfig {
            metric: self.metric,
            learning_rate,
            num_trees: self.trees,
            max_leaves: self.leaves,
            min_docs_per_leaf: self.min_docs,
            patience: self.patience,
            seed: self.seed,
            pair_budget: self.pair_budget,
            orientation: self.orientation,
        }
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub boost: BoostArgs,
    #[arg(long, default_value_t = 0.1)]
    pub learning_rate: f64,
    /// Output model file.
    #[arg(long)]
    pub model: PathBuf,
    /// History CSV; defaults to <model>.history.csv.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
    /// Scores, one per line in file order.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Labelled file to evaluate.
    #[arg(long, conflicts_with = "folds")]
    pub data: Option<PathBuf>,
    /// Fold root; evaluates Fold<k>/test.txt for every fold found.
    #[arg(long)]
    pub folds: Option<PathBuf>,
    /// Restrict --folds to one fold.
    #[arg(long, requires = "folds")]
    pub fold: Option<usize>,
    /// Model file. `{fold}` is replaced by the fold number.
    #[arg(
        long,
        conflicts_with = "predictions",
        required_unless_present = "predictions"
    )]
    pub model: Option<PathBuf>,
    /// Scores file instead of a model. `{fold}` is replaced by the fold number.
    #[arg(long)]
    pub predictions: Option<PathBuf>,
    /// Comma list of auc, mauc, class-auc, map, micro[@k], macro[@k], ndcg[@k].
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "auc,mauc,class-auc,map,ndcg@10"
    )]
    pub eval_metrics: Vec<String>,
    /// Cutoffs for micro, macro and ndcg given without @k.
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5,6,7,8,9,10")]
    pub k: Vec<usize>,
    /// TSV report.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub boost: BoostArgs,
    /// Learning rates to try.
    #[arg(long, value_delimiter = ',', default_values_t = LEARNING_RATE_GRID)]
    pub grid: Vec<f64>,
    /// Winning model.
    #[arg(long)]
    pub model: PathBuf,
    /// Directory for per-rate histories and the summary table.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Single output file.
    #[arg(long, conflicts_with = "folds", required_unless_present = "folds")]
    pub out: Option<PathBuf>,
    /// Fold root to populate with Fold<k>/{train,vali,test}.txt.
    #[arg(long)]
    pub folds: Option<PathBuf>,
    #[arg(long, default_value_t = 1, requires = "folds")]
    pub num_folds: usize,
    #[arg(long, default_value_t = 5)]
    pub queries: usize,
    #[arg(long, default_value_t = 40)]
    pub docs_per_query: usize,
    #[arg(long, default_value_t = 2)]
    pub classes: usize,
    /// Comma list of class proportions; uniform when omitted.
    #[arg(long, value_delimiter = ',', conflicts_with = "graded_skew")]
    pub skew: Vec<f64>,
    /// Five graded classes: this share for grade 0, the rest split 48/29.5/20/2.5%.
    #[arg(long)]
    pub graded_skew: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long, default_value_t = 5)]
    pub features: usize,
    /// Features carrying label signal; the rest are noise.
    #[arg(long, default_value_t = 2)]
    pub informative: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
}
