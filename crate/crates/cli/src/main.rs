//! `smellcheck`: tag, sample, calibrate and detect code smells in Java sources.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Code smell detection with per-project calibrated logistic models.
///
/// Exit status: 0 clean, 1 findings reported (`detect`), 2 error.
#[derive(Debug, Parser)]
#[command(name = "smellcheck", version)]
pub struct Cli {
    /// Store directory.
    #[arg(long, global = true, env = "SMELLCHECK_STORE", default_value = ".smellchecker")]
    store: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Create the store layout and a default config (keeps existing files).
    Init(InitArgs),
    /// Print metric vectors of every element under the roots.
    Metrics(MetricsArgs),
    /// Add a @CodeSmell annotation to an element (edits the source file).
    Tag(TagArgs),
    /// Remove a @CodeSmell annotation from an element (edits the source file).
    Untag(UntagArgs),
    /// Append a labeled sample of the roots to the store (mutating).
    Sample(SampleArgs),
    /// Fit a new model version from the stored sample (mutating).
    Calibrate(CalibrateArgs),
    /// Report elements whose smell probability reaches the threshold.
    Detect(DetectArgs),
    /// Record a false positive or false negative verdict (mutating).
    Feedback(FeedbackArgs),
    /// Run the calibration server.
    Serve(ServeArgs),
    /// Send unsynced samples and feedback to the server.
    Push(PushArgs),
    /// Fetch the server's model when it is newer than the local one.
    Pull(PullArgs),
}

#[derive(Debug, Args)]
pub struct InitArgs {
    /// Application name recorded in samples [default: current directory name].
    #[arg(long)]
    application: Option<String>,
    /// Calibration server URL.
    #[arg(long)]
    server: Option<String>,
    /// Default source roots for `sample`.
    #[arg(long = "root")]
    roots: Vec<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum GranularityArg {
    Method,
    Type,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum TableFormat {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    #[arg(long, value_enum, default_value = "method")]
    granularity: GranularityArg,
    #[arg(long, value_enum, default_value = "csv")]
    format: TableFormat,
    #[arg(required = true)]
    roots: Vec<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TagArgs {
    /// Smell kind, e.g. LongMethod.
    #[arg(long)]
    smell: String,
    /// Free-text reason stored in the annotation.
    #[arg(long, default_value = "")]
    description: String,
    /// Show the edit without writing it.
    #[arg(long)]
    dry_run: bool,
    /// Element id (`pkg.Type`, `pkg.Type#method(T1,T2)`) or an unambiguous suffix.
    element: String,
    /// Source roots searched for the element.
    #[arg(default_value = ".")]
    roots: Vec<PathBuf>,
}

#[derive(Debug, Args)]
pub struct UntagArgs {
    #[arg(long)]
    smell: String,
    #[arg(long)]
    dry_run: bool,
    element: String,
    #[arg(default_value = ".")]
    roots: Vec<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long)]
    smell: String,
    /// Overrides the configured application name.
    #[arg(long)]
    application: Option<String>,
    /// Source roots [default: configured calibration roots].
    roots: Vec<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum CriterionArg {
    Wald,
    Lr,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    #[arg(long)]
    smell: String,
    /// Significance level for keeping a metric.
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, value_enum, default_value = "wald")]
    criterion: CriterionArg,
    /// Reject the model when Hosmer-Lemeshow p < 0.01.
    #[arg(long)]
    strict: bool,
    /// L2 penalty on the slopes; allows fitting separable samples.
    #[arg(long, default_value_t = 0.0)]
    ridge: f64,
    /// Print the full diagnostics as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ReportArg {
    Text,
    Json,
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    /// Smells to check [default: every smell with a model].
    #[arg(long = "smell")]
    smells: Vec<String>,
    /// Per-smell probability cutoff, `<smell>=<p>` with p in (0, 1]. The
    /// comparison is inclusive.
    #[arg(long = "threshold", value_parser = parse_threshold)]
    thresholds: Vec<(String, f64)>,
    #[arg(long, value_enum, default_value = "text")]
    format: ReportArg,
    /// Print finding counts at this many thresholds in [0.1, 0.9] instead of findings.
    #[arg(long)]
    sweep: Option<usize>,
    /// Source roots [default: configured calibration roots, else `.`].
    roots: Vec<PathBuf>,
}

fn parse_threshold(s: &str) -> Result<(String, f64), String> {
    let (smell, p) = s
        .split_once('=')
        .ok_or_else(|| format!("expected <smell>=<probability>, got `{s}`"))?;
    let p: f64 = p.parse().map_err(|_| format!("`{p}` is not a number"))?;
    if !(p > 0.0 && p <= 1.0) {
        return Err(format!("threshold must be in (0, 1], got {p}"));
    }
    Ok((smell.to_owned(), p))
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum VerdictArg {
    /// Reported, but not a smell.
    Fp,
    /// A smell the detector missed.
    Fn,
}

#[derive(Debug, Args)]
pub struct FeedbackArgs {
    #[arg(long)]
    smell: String,
    #[arg(long, value_enum)]
    verdict: VerdictArg,
    element: String,
    #[arg(default_value = ".")]
    roots: Vec<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:8750")]
    bind: String,
}

#[derive(Debug, Args)]
pub struct ServerArg {
    /// Server URL [default: configured server_url].
    #[arg(long, env = "SMELLCHECK_SERVER")]
    server: Option<String>,
}

#[derive(Debug, Args)]
pub struct PushArgs {
    #[command(flatten)]
    server: ServerArg,
    /// Smell whose samples are pushed [default: all].
    #[arg(long)]
    smell: Option<String>,
    /// Ask the server to recalibrate after pushing.
    #[arg(long, requires = "smell")]
    calibrate: bool,
}

#[derive(Debug, Args)]
pub struct PullArgs {
    #[command(flatten)]
    server: ServerArg,
    #[arg(long)]
    smell: String,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match commands::run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
