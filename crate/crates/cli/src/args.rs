//! Command-line definitions. Every flag can also come from the environment
//! (`POINTMUT_<FLAG>`) or from a `--config` file of `flag = value` lines.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

pub const ENV_PREFIX: &str = "POINTMUT_";

#[derive(Debug, Parser)]
#[command(name = "pointmut", version, about = "Point-mutation sequence evolution: simulate, fit, evaluate")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Global {
    /// Master seed.
    #[arg(long, global = true, default_value_t = 0, env = "POINTMUT_SEED")]
    pub seed: u64,
    /// Directory receiving every artifact.
    #[arg(long, global = true, default_value = "out", env = "POINTMUT_OUT_DIR")]
    #[serde(skip)]
    pub out_dir: PathBuf,
    /// uniformization or scaling_squaring.
    #[arg(long, global = true, default_value = "uniformization", env = "POINTMUT_EXPM_METHOD")]
    pub expm_method: String,
    /// Truncation tolerance of the uniformized series.
    #[arg(long, global = true, default_value_t = 1e-12, env = "POINTMUT_EXPM_TOL")]
    pub expm_tol: f64,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, default_value_t = 0, env = "POINTMUT_THREADS")]
    #[serde(skip)]
    pub threads: usize,
    /// Flat `key = value` file mirroring the flags.
    #[arg(long, global = true, env = "POINTMUT_CONFIG")]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Use the full-size sample count (2.5M) where --samples is not given.
    #[arg(long, global = true, env = "POINTMUT_PAPER_SCALE")]
    pub paper_scale: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a ground-truth generator at one epistasis level.
    GenTruth(GenTruthArgs),
    /// Draw a transition dataset from a generator.
    GenData(GenDataArgs),
    /// Fit an estimator to a dataset.
    Fit(FitArgs),
    /// Kernel KL of both samplers against a truth over a branch-length grid.
    EvalCurves(EvalCurvesArgs),
    /// Estimation error across epistasis levels and estimators.
    Sweep(SweepArgs),
    /// Sample end sequences.
    Sample(SampleArgs),
    /// Sample end sequences with oracle guidance.
    Guide(GuideArgs),
    /// Sample sequences down a tree.
    TreeSim(TreeSimArgs),
    /// Categorical Jacobian of a factorized model at a context.
    Jacobian(JacobianArgs),
    /// Log-likelihood ratio of a model against a baseline.
    Score(ScoreArgs),
    /// Per-site transition entropy.
    Entropy(EntropyArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::GenTruth(_) => "gen-truth",
            Command::GenData(_) => "gen-data",
            Command::Fit(_) => "fit",
            Command::EvalCurves(_) => "eval-curves",
            Command::Sweep(_) => "sweep",
            Command::Sample(_) => "sample",
            Command::Guide(_) => "guide",
            Command::TreeSim(_) => "tree-sim",
            Command::Jacobian(_) => "jacobian",
            Command::Score(_) => "score",
            Command::Entropy(_) => "entropy",
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GenTruthArgs {
    #[arg(long, default_value_t = 0.0, env = "POINTMUT_EPSILON")]
    pub epsilon: f64,
    #[arg(long, default_value_t = 0, env = "POINTMUT_REPLICATE")]
    pub replicate: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GenDataArgs {
    /// Model file of the generating process.
    #[arg(long, env = "POINTMUT_TRUTH")]
    pub truth: PathBuf,
    /// Defaults to 100000 (2.5M with --paper-scale).
    #[arg(long, env = "POINTMUT_SAMPLES")]
    pub samples: Option<usize>,
    #[arg(long, default_value_t = 0.5, env = "POINTMUT_BRANCH_RATE")]
    pub branch_rate: f64,
    #[arg(long, default_value_t = 512, env = "POINTMUT_BINS")]
    pub bins: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TrainingArgs {
    /// full_mle, factorized or factorized_snr.
    #[arg(long, default_value = "factorized", env = "POINTMUT_ESTIMATOR")]
    pub estimator: String,
    /// Defaults to 0.1 for full_mle and 0.01 otherwise.
    #[arg(long, env = "POINTMUT_LR")]
    pub lr: Option<f64>,
    #[arg(long, default_value_t = 1000, env = "POINTMUT_MAX_EPOCHS")]
    pub max_epochs: usize,
    #[arg(long, default_value_t = 50, env = "POINTMUT_PATIENCE")]
    pub patience: usize,
    /// Mini-batch size; full batch when omitted.
    #[arg(long, env = "POINTMUT_BATCH_SIZE")]
    pub batch_size: Option<usize>,
    /// δ of the SNR weight; defaults to 1 − ε when ε is known, else 0.5.
    #[arg(long, env = "POINTMUT_SNR_DELTA")]
    pub snr_delta: Option<f64>,
    #[arg(long, default_value_t = 0.1, env = "POINTMUT_VALIDATION_FRACTION")]
    pub validation_fraction: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FitArgs {
    #[arg(long, env = "POINTMUT_DATA")]
    pub data: PathBuf,
    /// Optional truth for reporting the relative Frobenius error.
    #[arg(long, env = "POINTMUT_TRUTH")]
    pub truth: Option<PathBuf>,
    #[command(flatten)]
    pub training: TrainingArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EvalCurvesArgs {
    #[arg(long, env = "POINTMUT_TRUTH")]
    pub truth: PathBuf,
    /// Fitted model; full generators are matched row by row.
    #[arg(long, env = "POINTMUT_MODEL")]
    pub model: PathBuf,
    #[arg(long, default_value_t = 0.01, env = "POINTMUT_T_MIN")]
    pub t_min: f64,
    #[arg(long, default_value_t = 10.0, env = "POINTMUT_T_MAX")]
    pub t_max: f64,
    #[arg(long, default_value_t = 30, env = "POINTMUT_POINTS")]
    pub points: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SweepArgs {
    #[arg(long, value_delimiter = ',', default_values_t = [0.0, 0.25, 0.5, 0.75, 1.0], env = "POINTMUT_EPSILONS")]
    pub epsilons: Vec<f64>,
    #[arg(long, default_value_t = 3, env = "POINTMUT_REPLICATES")]
    pub replicates: usize,
    /// Defaults to 100000 (2.5M with --paper-scale).
    #[arg(long, env = "POINTMUT_SAMPLES")]
    pub samples: Option<usize>,
    #[arg(long, value_delimiter = ',', default_value = "full_mle,factorized,factorized_snr", env = "POINTMUT_ESTIMATORS")]
    pub estimators: Vec<String>,
    #[arg(long, default_value_t = 0.5, env = "POINTMUT_BRANCH_RATE")]
    pub branch_rate: f64,
    #[arg(long, default_value_t = 512, env = "POINTMUT_BINS")]
    pub bins: usize,
    #[arg(long, default_value_t = 1000, env = "POINTMUT_MAX_EPOCHS")]
    pub max_epochs: usize,
    #[arg(long, default_value_t = 50, env = "POINTMUT_PATIENCE")]
    pub patience: usize,
    #[arg(long, env = "POINTMUT_BATCH_SIZE")]
    pub batch_size: Option<usize>,
    /// Fixed δ for factorized_snr; 1 − ε when omitted.
    #[arg(long, env = "POINTMUT_SNR_DELTA")]
    pub snr_delta: Option<f64>,
    /// Also fit one factorized model per level and write sampler curves.
    #[arg(long, env = "POINTMUT_SAMPLING")]
    pub sampling: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SampleArgs {
    /// Model file; without it the matched truth at --epsilon is used.
    #[arg(long, env = "POINTMUT_MODEL")]
    pub model: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0, env = "POINTMUT_EPSILON")]
    pub epsilon: f64,
    #[arg(long, env = "POINTMUT_START")]
    pub start: String,
    #[arg(long, default_value_t = 1.0, env = "POINTMUT_T")]
    pub t: f64,
    /// Number of independent samples.
    #[arg(long, default_value_t = 1, env = "POINTMUT_N")]
    pub n: usize,
    /// gillespie or matexp.
    #[arg(long, default_value = "gillespie", env = "POINTMUT_METHOD")]
    pub method: String,
    /// Take exactly this many jumps instead of running for time t.
    #[arg(long, env = "POINTMUT_FIXED_STEPS")]
    pub fixed_steps: Option<usize>,
    /// Sites allowed to mutate in fixed-step mode, e.g. 101.
    #[arg(long, env = "POINTMUT_MASK")]
    pub mask: Option<String>,
    /// Also write every trajectory as JSON lines.
    #[arg(long, env = "POINTMUT_TRAJECTORIES")]
    pub trajectories: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GuidanceArgs {
    #[arg(long, default_value_t = 1.0, env = "POINTMUT_GAMMA")]
    pub gamma: f64,
    /// exact or tag.
    #[arg(long, default_value = "exact", env = "POINTMUT_MODE")]
    pub mode: String,
    /// Oracle file; a seeded random linear oracle otherwise.
    #[arg(long, env = "POINTMUT_ORACLE")]
    pub oracle: Option<PathBuf>,
    /// Evaluate σ at the child instead of the parent in exact mode.
    #[arg(long, env = "POINTMUT_SIGMA_AT_CHILD")]
    pub sigma_at_child: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GuideArgs {
    #[command(flatten)]
    pub sample: SampleArgs,
    #[command(flatten)]
    pub guidance: GuidanceArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TreeSimArgs {
    /// Newick file; the bundled 13-leaf example otherwise.
    #[arg(long, env = "POINTMUT_TREE")]
    pub tree: Option<PathBuf>,
    #[arg(long, env = "POINTMUT_MODEL")]
    pub model: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0, env = "POINTMUT_EPSILON")]
    pub epsilon: f64,
    #[arg(long, env = "POINTMUT_ROOT")]
    pub root: String,
    /// gillespie or matexp.
    #[arg(long, default_value = "gillespie", env = "POINTMUT_METHOD")]
    pub method: String,
    /// Repeat the simulation with independent streams.
    #[arg(long, default_value_t = 1, env = "POINTMUT_REPLICATES")]
    pub replicates: usize,
    /// Guide the Gillespie sampler.
    #[arg(long, env = "POINTMUT_GUIDED")]
    pub guided: bool,
    #[command(flatten)]
    pub guidance: GuidanceArgs,
    /// Compare both samplers of --model against the truth at --epsilon on
    /// this many random trees.
    #[arg(long, default_value_t = 0, env = "POINTMUT_FIDELITY_TREES")]
    pub fidelity_trees: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct JacobianArgs {
    #[arg(long, env = "POINTMUT_MODEL")]
    pub model: PathBuf,
    #[arg(long, env = "POINTMUT_CONTEXT")]
    pub context: String,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ScoreArgs {
    #[arg(long, env = "POINTMUT_MODEL")]
    pub model: PathBuf,
    #[arg(long, env = "POINTMUT_BASELINE")]
    pub baseline: PathBuf,
    #[arg(long, env = "POINTMUT_X")]
    pub x: String,
    /// Child sequence; every single mutant of x when omitted.
    #[arg(long, env = "POINTMUT_Y")]
    pub y: Option<String>,
    #[arg(long, default_value_t = 0.01, env = "POINTMUT_T")]
    pub t: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EntropyArgs {
    #[arg(long, env = "POINTMUT_MODEL")]
    pub model: PathBuf,
    #[arg(long, env = "POINTMUT_X")]
    pub x: String,
    #[arg(long, value_delimiter = ',', default_values_t = [0.01, 0.1, 1.0], env = "POINTMUT_T")]
    pub t: Vec<f64>,
}
