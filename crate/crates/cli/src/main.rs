//! `crps`: simulate forecast/observation records, score them, and emit
//! verification reports as CSV or JSON.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use crps_core::{FitMethod, ForecasterKind, Model};

#[derive(Parser)]
#[command(name = "crps", version, about = "Extreme-event forecast verification through CRPS distributions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write simulated records as JSON lines.
    Simulate(SimulateArgs),
    /// Score records; one row per time step.
    Score(ScoreArgs),
    /// Verification reports.
    #[command(subcommand)]
    Verify(VerifyCommand),
    /// Fit a generalized Pareto tail above an observation quantile.
    FitGp(FitGpArgs),
}

#[derive(Subcommand)]
enum VerifyCommand {
    /// Extremes index against a climatological forecast over thresholds.
    IndexCurve(IndexCurveArgs),
    /// Diebold-Mariano matrices, one per weight quantile.
    Dm(DmArgs),
    /// qq and pp data comparing paired and shuffled scores.
    Qqpp(QqppArgs),
    /// Expected-score curve and ambiguity cup for Pareto forecasts.
    Cup(CupArgs),
}

#[derive(Clone, Copy, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum Method {
    Pwm,
    Mle,
}

impl From<Method> for FitMethod {
    fn from(m: Method) -> Self {
        match m {
            Method::Pwm => FitMethod::Pwm,
            Method::Mle => FitMethod::Mle,
        }
    }
}

#[derive(Args)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub model: Model,
    #[arg(long)]
    pub forecaster: ForecasterKind,
    /// Number of time steps.
    #[arg(long = "t")]
    pub t: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct ScoreArgs {
    /// JSON-lines records.
    #[arg(long)]
    pub input: PathBuf,
    /// Adds a column scoring each forecast against a shuffled observation.
    #[arg(long)]
    pub shuffle_seed: Option<u64>,
    /// Adds a column weighted by 1{x >= u}, u the observation quantile of this order.
    #[arg(long)]
    pub weight_quantile: Option<f64>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args)]
pub struct IndexCurveArgs {
    /// Records of the forecast under evaluation.
    #[arg(long)]
    pub forecast: PathBuf,
    /// Records of the climatological forecast on the same observations.
    #[arg(long)]
    pub clim: PathBuf,
    /// Observation-quantile orders of the thresholds.
    #[arg(long, value_delimiter = ',', default_values_t = commands::default_index_orders())]
    pub quantiles: Vec<f64>,
    /// Order of the fitting threshold; the smallest requested order by default.
    #[arg(long)]
    pub threshold_order: Option<f64>,
    #[arg(long, value_enum, default_value = "pwm")]
    pub method: Method,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args)]
pub struct DmArgs {
    /// Record files sharing observations, one per forecaster. When absent,
    /// the four forecasters of --model are simulated.
    #[arg(long)]
    pub input: Vec<PathBuf>,
    #[arg(long)]
    pub model: Option<Model>,
    #[arg(long = "t")]
    pub t: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Weight-quantile orders; the unweighted CRPS when absent.
    #[arg(long, value_delimiter = ',')]
    pub quantiles: Vec<f64>,
    /// Bartlett HAC lag; 0 uses the plain variance.
    #[arg(long, default_value_t = 0)]
    pub lag: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args)]
pub struct QqppArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub shuffle_seed: u64,
    #[arg(long, default_value_t = 1000)]
    pub max_points: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args)]
pub struct CupArgs {
    /// Tail index of the observations.
    #[arg(long)]
    pub gamma: f64,
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    /// Number of points on the curve.
    #[arg(long, default_value_t = 200)]
    pub points: usize,
    /// Right end of the curve; 1.25 times the cup edge by default.
    #[arg(long)]
    pub a_max: Option<f64>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args)]
pub struct FitGpArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Observation-quantile order of the threshold.
    #[arg(long, default_value_t = 0.9)]
    pub threshold_order: f64,
    #[arg(long, value_enum, default_value = "pwm")]
    pub method: Method,
    /// Fit the CRPS values of records whose observation exceeds the threshold.
    #[arg(long)]
    pub scores: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Simulate(a) => commands::simulate(&a),
        Command::Score(a) => commands::score(&a),
        Command::Verify(VerifyCommand::IndexCurve(a)) => commands::index_curve(&a),
        Command::Verify(VerifyCommand::Dm(a)) => commands::dm(&a),
        Command::Verify(VerifyCommand::Qqpp(a)) => commands::qqpp(&a),
        Command::Verify(VerifyCommand::Cup(a)) => commands::cup(&a),
        Command::FitGp(a) => commands::fit_gp(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if is_broken_pipe(&e) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}

fn is_broken_pipe(e: &anyhow::Error) -> bool {
    e.chain()
        .filter_map(|c| c.downcast_ref::<std::io::Error>())
        .any(|io| io.kind() == std::io::ErrorKind::BrokenPipe)
}
