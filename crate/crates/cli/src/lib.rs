//! `geofuse` command-line front end.
//!
//! Each subcommand reads its inputs from flags and, when `--config` is
//! given, from the matching `[section]` of the config file. Flags win over
//! config keys; a repeatable flag replaces the whole config list.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

pub mod config;
pub mod io;
mod commands;
mod spec;
mod validate;

pub use config::Config;

/// Failure classes, each with its own exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad command line or missing required input.
    Usage(String),
    /// Invalid data, parameters or config.
    Invalid(String),
    /// Filesystem failure.
    Io(String),
}

impl CliError {
    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Io(format!("{}: {e}", path.display()))
    }

    pub fn data(path: &Path, e: geofuse::Error) -> Self {
        CliError::Invalid(format!("{}: {e}", path.display()))
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Invalid(_) => 1,
            CliError::Io(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Invalid(m) => write!(f, "error: {m}"),
            CliError::Io(m) => write!(f, "I/O error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<geofuse::Error> for CliError {
    fn from(e: geofuse::Error) -> Self {
        CliError::Invalid(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "geofuse", version, about = "Geographic-input fusion pipeline for satellite-imagery models")]
pub struct Cli {
    /// Seed for every randomized step.
    #[arg(long, global = true, value_name = "U64")]
    pub seed: Option<u64>,
    /// Output path. Text outputs go to stdout when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Pipeline config file.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Burn a GeoJSON layer into a class grid, or a binary mask with --select.
    Rasterize(RasterizeArgs),
    /// Map a class grid to a 3-channel color tensor.
    Rgb(RgbArgs),
    /// Generate the land-cover prior from a coarse map.
    Prior(PriorArgs),
    /// Stack aligned layers (and optionally a prior) into one tensor.
    Stack(StackArgs),
    /// Build the input token sequence for an image tensor.
    Tokens(TokensArgs),
    /// Embed points with the stub location encoder.
    Embed(EmbedArgs),
    /// Embedding analyses.
    #[command(subcommand)]
    Analyze(AnalyzeCommand),
    /// Sample a training subset.
    Subset(SubsetArgs),
    /// Training epochs for a subset fraction.
    Epochs(EpochsArgs),
    /// Score predictions.
    #[command(subcommand)]
    Metrics(MetricsCommand),
    /// Ridge linear probe.
    Probe(ProbeArgs),
    /// Check a config without writing anything.
    Validate,
}

#[derive(Debug, Args)]
pub struct Footprint {
    /// Copy the footprint of this ASCII grid.
    #[arg(long, value_name = "ASC")]
    pub like: Option<PathBuf>,
    #[arg(long)]
    pub width: Option<usize>,
    #[arg(long)]
    pub height: Option<usize>,
    /// World x of the top-left corner.
    #[arg(long, allow_hyphen_values = true)]
    pub origin_x: Option<f64>,
    /// World y of the top-left corner.
    #[arg(long, allow_hyphen_values = true)]
    pub origin_y: Option<f64>,
    /// Ground sample distance (square, north-up).
    #[arg(long)]
    pub gsd: Option<f64>,
}

#[derive(Debug, Args)]
pub struct RasterizeArgs {
    #[arg(long, value_name = "GEOJSON")]
    pub vector: Option<PathBuf>,
    #[arg(long)]
    pub classmap: Option<PathBuf>,
    #[command(flatten)]
    pub footprint: Footprint,
    /// Tag selector `key=pattern`; switches to binary-mask output.
    #[arg(long, value_name = "KEY=PATTERN")]
    pub select: Option<String>,
    /// Mask buffer radius in world units.
    #[arg(long)]
    pub radius: Option<f64>,
}

#[derive(Debug, Args)]
pub struct RgbArgs {
    /// Class grid (ASCII).
    #[arg(long)]
    pub classes: Option<PathBuf>,
    #[arg(long)]
    pub classmap: Option<PathBuf>,
    /// Optional Gaussian smoothing of each color channel.
    #[arg(long)]
    pub sigma: Option<f64>,
}

#[derive(Debug, Args)]
pub struct PriorArgs {
    /// Coarse class grid (ASCII).
    #[arg(long)]
    pub coarse: Option<PathBuf>,
    #[arg(long)]
    pub n_coarse: Option<usize>,
    #[arg(long)]
    pub n_fine: Option<usize>,
    /// Co-occurrence matrix text file.
    #[arg(long, value_name = "PATH")]
    pub cooccurrence: Option<PathBuf>,
    /// Training pair `COARSE.asc,FINE.asc` for estimating the matrix (repeatable).
    #[arg(long, value_name = "COARSE,FINE")]
    pub pair: Vec<String>,
    /// Smoothing added to every co-occurrence count.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Blur sigma in pixels.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// `name=N class=K [weight=W] mask=PATH` or
    /// `name=N class=K [weight=W] vector=PATH select=KEY=PAT [radius=R]` (repeatable).
    #[arg(long, value_name = "SPEC")]
    pub boost: Vec<String>,
}

#[derive(Debug, Args)]
pub struct StackArgs {
    /// Optical layer `NAME=PATH[:RULE]` (repeatable).
    #[arg(long, value_name = "NAME=PATH[:RULE]")]
    pub input: Vec<String>,
    /// Prior tensor written by `prior`.
    #[arg(long, value_name = "GFT")]
    pub prior: Option<PathBuf>,
    /// Layer stacked after the prior, `NAME=PATH[:RULE]` (repeatable).
    #[arg(long, value_name = "NAME=PATH[:RULE]")]
    pub extra: Vec<String>,
}

#[derive(Debug, Args)]
pub struct TokensArgs {
    /// Image tensor (GFT).
    #[arg(long, value_name = "GFT")]
    pub image: Option<PathBuf>,
    #[arg(long)]
    pub patch: Option<usize>,
    /// Token width.
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub registers: Option<usize>,
    /// Latitude of the image; with --lon adds a location token.
    #[arg(long, allow_hyphen_values = true)]
    pub lat: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub lon: Option<f64>,
    /// Location projection weights, a `256 x dim` matrix GFT.
    #[arg(long, value_name = "GFT")]
    pub projection: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EmbedArgs {
    /// CSV with `lat,lon[,group]` rows.
    #[arg(long, value_name = "CSV")]
    pub points: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum AnalyzeCommand {
    /// Cosine similarity between group mean embeddings.
    Cosine {
        #[arg(long, value_name = "CSV")]
        embeddings: PathBuf,
    },
    /// Cosine distance of every row to a reference row.
    Distmap(DistmapArgs),
    /// Principal components and PCA colors.
    Pca {
        #[arg(long, value_name = "CSV")]
        embeddings: PathBuf,
        #[arg(long, default_value_t = 3)]
        k: usize,
    },
}

#[derive(Debug, Args)]
pub struct DistmapArgs {
    #[arg(long, value_name = "CSV")]
    pub embeddings: PathBuf,
    /// Reference row index.
    #[arg(long, conflicts_with_all = ["ref_lat", "ref_lon"])]
    pub ref_row: Option<usize>,
    /// Reference by nearest coordinate.
    #[arg(long, allow_hyphen_values = true, requires = "ref_lon")]
    pub ref_lat: Option<f64>,
    #[arg(long, allow_hyphen_values = true, requires = "ref_lat")]
    pub ref_lon: Option<f64>,
    /// Second embedding set at the same locations; reports |d_before - d_after|.
    #[arg(long, value_name = "CSV")]
    pub after: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SubsetArgs {
    /// Size of the full training set.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub fraction: Option<f64>,
}

#[derive(Debug, Args)]
pub struct EpochsArgs {
    /// Omit to print the whole schedule.
    #[arg(long)]
    pub fraction: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ReportFormat {
    Kv,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum MetricsCommand {
    /// Segmentation scores from two class grids.
    Seg {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        classes: usize,
        #[arg(long, value_enum, default_value_t = ReportFormat::Kv)]
        format: ReportFormat,
    },
    /// Coefficient of determination from two number columns.
    Reg {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        #[arg(long, value_enum, default_value_t = ReportFormat::Kv)]
        format: ReportFormat,
    },
    /// Macro F1 and mAP from a score matrix and a 0/1 truth matrix.
    Multilabel {
        #[arg(long)]
        scores: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        #[arg(long, default_value_t = geofuse::metrics::DEFAULT_THRESHOLD)]
        threshold: f64,
        #[arg(long, value_enum, default_value_t = ReportFormat::Kv)]
        format: ReportFormat,
    },
}

#[derive(Debug, Args)]
pub struct ProbeArgs {
    /// Training CSV, target in the last column. Omit for the synthetic experiment.
    #[arg(long, requires = "test")]
    pub train: Option<PathBuf>,
    #[arg(long, requires = "train")]
    pub test: Option<PathBuf>,
    /// Also probe on only the first K feature columns.
    #[arg(long, value_name = "K")]
    pub optical_cols: Option<usize>,
    /// Number of synthetic seeds, starting at --seed.
    #[arg(long, default_value_t = 20)]
    pub seeds: u64,
    #[arg(long)]
    pub n_train: Option<usize>,
    #[arg(long)]
    pub n_test: Option<usize>,
    #[arg(long)]
    pub lambda: Option<f64>,
}

/// Shared state for one invocation.
pub struct Context<'a> {
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub config: Option<Config>,
    pub stdout: &'a mut dyn Write,
}

impl Context<'_> {
    /// Emits a text result: to the output file when one is set, else stdout.
    pub fn emit_text(&mut self, out: Option<PathBuf>, text: &str, summary: &str) -> CliResult<()> {
        match out {
            Some(p) => {
                io::write_atomic(&p, text.as_bytes())?;
                self.wrote(&p, summary)
            }
            None => self.print(text),
        }
    }

    pub fn wrote(&mut self, path: &Path, summary: &str) -> CliResult<()> {
        self.print(&format!("wrote {}: {summary}\n", path.display()))
    }

    pub fn print(&mut self, text: &str) -> CliResult<()> {
        self.stdout
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Io(format!("stdout: {e}")))
    }
}

fn configure_threads() -> CliResult<()> {
    let Ok(v) = std::env::var("GEOFUSE_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::Usage(format!("GEOFUSE_THREADS must be a positive integer, got '{v}'")))?;
    // A pool may already exist when the library is driven in-process.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

/// Runs one invocation, writing results to `stdout` and diagnostics to `stderr`.
/// Returns the process exit code.
pub fn run_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = stderr.write_all(text.as_bytes());
                1
            } else {
                let _ = stdout.write_all(text.as_bytes());
                0
            };
        }
    };
    match execute(cli, stdout) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "{e}");
            e.exit_code()
        }
    }
}

pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    let code = run_with(args, &mut stdout.lock(), &mut stderr.lock());
    let _ = std::io::stdout().flush();
    code
}

fn execute(cli: Cli, stdout: &mut dyn Write) -> CliResult<i32> {
    configure_threads()?;
    let config = cli.config.as_deref().map(Config::load).transpose()?;
    let mut ctx = Context {
        seed: cli.seed.unwrap_or(0),
        out: cli.out,
        config,
        stdout,
    };
    match cli.command {
        Command::Rasterize(a) => commands::rasterize(&mut ctx, a)?,
        Command::Rgb(a) => commands::rgb(&mut ctx, a)?,
        Command::Prior(a) => commands::prior(&mut ctx, a)?,
        Command::Stack(a) => commands::stack(&mut ctx, a)?,
        Command::Tokens(a) => commands::tokens(&mut ctx, a)?,
        Command::Embed(a) => commands::embed(&mut ctx, a)?,
        Command::Analyze(a) => commands::analyze(&mut ctx, a)?,
        Command::Subset(a) => commands::subset(&mut ctx, a)?,
        Command::Epochs(a) => commands::epochs(&mut ctx, a)?,
        Command::Metrics(a) => commands::metrics(&mut ctx, a)?,
        Command::Probe(a) => commands::probe(&mut ctx, a)?,
        Command::Validate => return validate::run(&mut ctx),
    }
    Ok(0)
}
