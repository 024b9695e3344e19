mod commands;
mod config;
mod data;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(
    name = "prosody",
    version,
    about = "Prosodic event detection and classification with a word-level CNN"
)]
struct Cli {
    /// Worker threads for extraction and cross-validation folds.
    #[arg(long, global = true, env = "PROSODY_JOBS")]
    jobs: Option<usize>,
    /// Log progress (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Extract per-utterance feature files from a directory of WAVs.
    Extract(ExtractArgs),
    /// Generate a synthetic labelled corpus.
    Synth(SynthArgs),
    /// Run a cross-validation experiment described by a config file.
    Run(RunArgs),
    /// Evaluate one checkpoint on a labelled corpus.
    Eval(EvalArgs),
    /// Render one or more JSON reports as a table.
    Report(ReportArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum FeatureFormat {
    Csv,
    Bin,
    Both,
}

#[derive(Args, Debug)]
pub struct ExtractArgs {
    /// prosody, mel or prosody_mel.
    #[arg(long, default_value = "prosody")]
    pub features: String,
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: FeatureFormat,
    #[arg(long, default_value_t = 20.0)]
    pub frame_ms: f64,
    #[arg(long, default_value_t = 10.0)]
    pub hop_ms: f64,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    /// TOML file with synth spec fields; flags override it.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long)]
    pub speakers: Option<usize>,
    #[arg(long)]
    pub utterances: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub noise: Option<f64>,
    #[arg(long)]
    pub accent_rate: Option<f64>,
    #[arg(long)]
    pub boundary_rate: Option<f64>,
    #[arg(long)]
    pub distractor_prob: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Experiment name (output subdirectory).
    #[arg(long)]
    pub name: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub task: Option<String>,
    #[arg(long)]
    pub features: Option<String>,
    /// 1w, 3w, 3w-pf, a comma-separated list, or `all`.
    #[arg(long)]
    pub context: Option<String>,
    /// kfold or loso.
    #[arg(long)]
    pub cv: Option<String>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub val_size: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub repetitions: Option<usize>,
    /// Z-score features per speaker before training.
    #[arg(long)]
    pub zscore: bool,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub audio_dir: PathBuf,
    #[arg(long)]
    pub alignments: PathBuf,
    #[arg(long)]
    pub labels: PathBuf,
    /// Also write the metrics JSON here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ReportArgs {
    #[arg(required = true)]
    pub reports: Vec<PathBuf>,
}

/// Failure classes, mapped onto exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config, spec or input files: exit 2.
    Input(Vec<String>),
    /// The experiment itself failed: exit 1.
    Failed(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Failed(_) => 1,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.jobs {
        if n == 0 {
            eprintln!("error: --jobs must be at least 1");
            return ExitCode::from(2);
        }
        pool = pool.num_threads(n);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let result = pool.install(|| match cli.command {
        Command::Extract(a) => commands::extract(&a),
        Command::Synth(a) => commands::synth(&a),
        Command::Run(a) => commands::run(&a),
        Command::Eval(a) => commands::eval(&a),
        Command::Report(a) => commands::report(&a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            match &e {
                CliError::Input(msgs) => {
                    for m in msgs {
                        eprintln!("error: {m}");
                    }
                }
                CliError::Failed(m) => eprintln!("error: {m}"),
            }
            ExitCode::from(e.code())
        }
    }
}
