use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pid_core::bench::parse_fid;
use pid_core::{DetectConfig, TerminalDeath, TrainConfig};

#[derive(Debug, Parser)]
#[command(
    name = "pid",
    version,
    about = "Persistence interaction detection for trained MLPs"
)]
pub struct Cli {
    /// Worker thread cap (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train an MLP on a dataset CSV or a generated synthetic function.
    Train(TrainCmd),
    /// Detect interactions in a model and write the ranked ledger.
    Detect(DetectCmd),
    /// Score a model's pairwise strengths against a synthetic ground truth.
    Eval(EvalCmd),
    /// Perturb a model and check strength stability.
    Perturb(PerturbCmd),
    /// Aggregate candidate strengths into a pixel saliency map.
    Saliency(SaliencyCmd),
    /// Append crossed categorical features for detected candidates.
    Cross(CrossCmd),
    /// Run the multi-trial synthetic benchmark.
    Bench(BenchCmd),
}

#[derive(Debug, Clone, Args)]
pub struct DetectArgs {
    /// Target layer (1-based).
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub layer: u64,
    /// Norm exponent aggregating persistences.
    #[arg(long, default_value_t = 2.0, value_parser = at_least_one)]
    pub p: f64,
    /// Drop edges with normalized strength below this.
    #[arg(long, default_value_t = 0.0, value_parser = unit_interval)]
    pub eta: f64,
    /// Death threshold of candidates alive at the end of the sweep.
    #[arg(long, value_enum, default_value_t = Terminal::Last)]
    pub terminal: Terminal,
    /// Keep single-feature candidates.
    #[arg(long)]
    pub keep_singletons: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Terminal {
    Last,
    Zero,
}

impl DetectArgs {
    pub fn config(&self) -> DetectConfig {
        DetectConfig {
            layer: self.layer as usize,
            p: self.p,
            eta: self.eta,
            terminal: match self.terminal {
                Terminal::Last => TerminalDeath::LastThreshold,
                Terminal::Zero => TerminalDeath::Zero,
            },
            keep_singletons: self.keep_singletons,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    /// Hidden layer widths, first to last.
    #[arg(long, default_value = "140,100,60,20", value_parser = widths)]
    pub hidden: Widths,
    #[arg(long, default_value_t = 5e-3, value_parser = positive)]
    pub lr: f64,
    #[arg(long, default_value_t = 5e-5, value_parser = nonnegative)]
    pub l1: f64,
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
    pub batch: u64,
    #[arg(long, default_value_t = 500, value_parser = clap::value_parser!(u64).range(1..))]
    pub max_epochs: u64,
    /// Epochs without validation improvement before stopping.
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
    pub early_stop: u64,
}

impl TrainArgs {
    pub fn config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            hidden: self.hidden.0.clone(),
            lr: self.lr,
            l1: self.l1,
            batch: self.batch as usize,
            max_epochs: self.max_epochs as usize,
            early_stop_rounds: self.early_stop as usize,
            seed,
            ..Default::default()
        }
    }
}

#[derive(Debug, Args)]
pub struct TrainCmd {
    /// Dataset CSV (`x0,...,y`).
    #[arg(
        long,
        conflicts_with = "function",
        required_unless_present = "function"
    )]
    pub data: Option<PathBuf>,
    /// Generate data from a synthetic function instead (F1..F10).
    #[arg(long, value_parser = fid)]
    pub function: Option<u8>,
    /// Samples to generate with --function.
    #[arg(long, default_value_t = 10_000, value_parser = clap::value_parser!(u64).range(3..))]
    pub samples: u64,
    /// Also write the generated dataset here.
    #[arg(long, requires = "function")]
    pub data_out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub train: TrainArgs,
    #[arg(long, default_value = "model.json")]
    pub model_out: PathBuf,
    #[arg(long, default_value = "train_log.csv")]
    pub log_out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DetectCmd {
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub detect: DetectArgs,
    /// Ranked ledger JSON.
    #[arg(long, default_value = "ledger.json")]
    pub out: PathBuf,
    /// Symmetric pairwise strength matrix.
    #[arg(long, default_value = "pairwise.csv")]
    pub pairwise_out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalCmd {
    #[arg(long)]
    pub model: PathBuf,
    /// Synthetic function providing the ground truth (F1..F10).
    #[arg(long, value_parser = fid)]
    pub function: u8,
    #[command(flatten)]
    pub detect: DetectArgs,
    #[arg(long, default_value = "eval.json")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PerturbCmd {
    #[arg(long)]
    pub model: PathBuf,
    /// Noise magnitude on the normalized strength scale.
    #[arg(long, value_parser = nonnegative)]
    pub delta: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub detect: DetectArgs,
    /// Write the perturbed model here.
    #[arg(long)]
    pub model_out: Option<PathBuf>,
    #[arg(long, default_value = "stability.json")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SaliencyCmd {
    /// Model to run detection on.
    #[arg(long, conflicts_with = "ledger", required_unless_present = "ledger")]
    pub model: Option<PathBuf>,
    /// Previously written ranked ledger.
    #[arg(long)]
    pub ledger: Option<PathBuf>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub height: u64,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub width: u64,
    #[command(flatten)]
    pub detect: DetectArgs,
    #[arg(long, default_value = "saliency.csv")]
    pub csv_out: PathBuf,
    #[arg(long, default_value = "saliency.pgm")]
    pub pgm_out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CrossCmd {
    #[arg(long)]
    pub data: PathBuf,
    /// Ranked ledger JSON; its strongest candidates are crossed.
    #[arg(
        long,
        conflicts_with = "candidates",
        required_unless_present = "candidates"
    )]
    pub ledger: Option<PathBuf>,
    /// Number of ledger candidates (of order 2 to 4) to cross.
    #[arg(long, default_value_t = 10)]
    pub top: usize,
    /// Explicit candidates, e.g. `0:1,2:3:5`.
    #[arg(long, value_parser = candidates)]
    pub candidates: Option<Candidates>,
    /// Quantile buckets per dense feature.
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
    pub bucket: u64,
    #[arg(long, default_value = "crossed.csv")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchCmd {
    /// Functions to run, e.g. `F3,F5`.
    #[arg(long, default_value = "F1,F2,F3,F4,F5,F6,F7,F8,F9,F10", value_parser = functions)]
    pub functions: Functions,
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u64).range(1..))]
    pub trials: u64,
    #[arg(long, default_value_t = 10_000, value_parser = clap::value_parser!(u64).range(3..))]
    pub samples: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub train: TrainArgs,
    #[command(flatten)]
    pub detect: DetectArgs,
    /// Receives report.json and report.csv.
    #[arg(long, default_value = "bench_out")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Widths(pub Vec<usize>);

#[derive(Debug, Clone, PartialEq)]
pub struct Functions(pub Vec<u8>);

#[derive(Debug, Clone, PartialEq)]
pub struct Candidates(pub Vec<Vec<usize>>);

fn float(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("`{s}` is not finite"))
    }
}

fn positive(s: &str) -> Result<f64, String> {
    let v = float(s)?;
    if v > 0.0 {
        Ok(v)
    } else {
        Err(format!("must be positive, got {v}"))
    }
}

fn nonnegative(s: &str) -> Result<f64, String> {
    let v = float(s)?;
    if v >= 0.0 {
        Ok(v)
    } else {
        Err(format!("must be nonnegative, got {v}"))
    }
}

fn at_least_one(s: &str) -> Result<f64, String> {
    let v = float(s)?;
    if v >= 1.0 {
        Ok(v)
    } else {
        Err(format!("must be at least 1, got {v}"))
    }
}

fn unit_interval(s: &str) -> Result<f64, String> {
    let v = float(s)?;
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("must lie in [0, 1], got {v}"))
    }
}

fn widths(s: &str) -> Result<Widths, String> {
    let w = s
        .split(',')
        .map(|t| match t.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(format!("bad layer width `{t}`")),
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Widths(w))
}

fn fid(s: &str) -> Result<u8, String> {
    parse_fid(s).map_err(|e| e.to_string())
}

fn functions(s: &str) -> Result<Functions, String> {
    let mut f = s.split(',').map(fid).collect::<Result<Vec<_>, _>>()?;
    f.dedup();
    Ok(Functions(f))
}

fn candidates(s: &str) -> Result<Candidates, String> {
    s.split(',')
        .map(|c| {
            c.split(':')
                .map(|t| {
                    t.trim()
                        .parse::<usize>()
                        .map_err(|_| format!("bad feature index `{t}`"))
                })
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()
        .map(Candidates)
}
