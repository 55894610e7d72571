//! `tht`: discretize, decompose, eigensolve and cross-check the truncated
//! Hilbert transform with overlap.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use tht_core::verify::digest;
use tht_core::{Result, RunConfig};

use output::{Outputs, RunManifest};

#[derive(Parser, Debug)]
#[command(name = "tht", version, about = "SVD of the truncated Hilbert transform with overlap")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Global {
    /// TOML or JSON file with a1..a4 and solver settings.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Propagation tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Frobenius series order.
    #[arg(long, global = true)]
    series_order: Option<usize>,
    /// Matching offset from the singular points.
    #[arg(long, global = true)]
    eps_match: Option<f64>,
    /// Amplitude floor for zero counting.
    #[arg(long, global = true)]
    theta: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Assemble a matrix discretization.
    Discretize(DiscretizeArgs),
    /// SVD of a saved or freshly built matrix.
    Spectrum(SpectrumArgs),
    /// Eigenpairs of the Sturm–Liouville operator.
    Eigensolve(EigensolveArgs),
    /// Cross-checks between the two routes.
    Verify(VerifyArgs),
    /// Regenerate the data for one figure.
    Reproduce(ReproduceArgs),
    /// Run the acceptance criteria.
    Acceptance(AcceptanceArgs),
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Uniform,
    Wavelet,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shift {
    Interleaved,
    PlusHalf,
    MinusHalf,
}

#[derive(Args, Debug, Clone)]
pub struct MatrixArgs {
    #[arg(long, value_enum, default_value = "uniform")]
    pub kind: Kind,
    /// Nodes per interval (uniform).
    #[arg(long, default_value_t = 601)]
    pub n: usize,
    /// Grid step (uniform).
    #[arg(long, default_value_t = 0.01)]
    pub step: f64,
    #[arg(long, value_enum, default_value = "interleaved")]
    pub shift: Shift,
    /// Dyadic scale J (wavelet).
    #[arg(long, default_value_t = -7, allow_hyphen_values = true)]
    pub scale: i32,
    /// Scaling-function filter: db2 or haar (wavelet).
    #[arg(long, default_value = "db2")]
    pub filter: String,
    /// Cascade levels (wavelet).
    #[arg(long, default_value_t = 10)]
    pub levels: u32,
}

#[derive(Args, Debug)]
pub struct DiscretizeArgs {
    #[command(flatten)]
    pub matrix: MatrixArgs,
    /// Also write the entries as CSV.
    #[arg(long)]
    pub csv: bool,
}

#[derive(Args, Debug)]
pub struct SpectrumArgs {
    /// Matrix written by `discretize`; built from the matrix options when absent.
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
    #[command(flatten)]
    pub matrix: MatrixArgs,
    /// Thresholds `lo,hi` of the transition profile.
    #[arg(long, default_value = "0.1,0.9", value_delimiter = ',', num_args = 2)]
    pub profile: Vec<f64>,
    /// Indices whose singular vectors are written.
    #[arg(long, value_delimiter = ',')]
    pub vectors: Vec<usize>,
}

#[derive(Args, Debug)]
pub struct EigensolveArgs {
    /// Number of eigenpairs, by increasing |λ|.
    #[arg(long, default_value_t = 8)]
    pub count: usize,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    All,
    Commutation,
    Svd,
    Accumulation,
    Logfit,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[arg(long, value_enum, default_value = "all")]
    pub suite: Suite,
    /// Report path; defaults to `report.json` in the output directory.
    #[arg(long)]
    pub json_out: Option<PathBuf>,
    /// Eigenpairs used by the commutation and svd suites.
    #[arg(long, default_value_t = 8)]
    pub count: usize,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    Fig4a,
    Fig4b,
    Fig5,
    Fig6,
    Fig7,
}

#[derive(Args, Debug)]
pub struct ReproduceArgs {
    #[arg(value_enum)]
    pub figure: Figure,
}

#[derive(Args, Debug)]
pub struct AcceptanceArgs {
    /// Run only these criteria.
    #[arg(long, value_delimiter = ',')]
    pub only: Vec<u8>,
}

/// What a command hands back for the manifest.
pub struct Finished {
    pub parameters: serde_json::Value,
    pub failures: Vec<String>,
}

fn load_config(g: &Global) -> Result<RunConfig> {
    let mut rc = match &g.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(t) = g.tol {
        rc.tol = t;
    }
    if let Some(n) = g.series_order {
        rc.series_order = n;
    }
    if let Some(e) = g.eps_match {
        rc.eps_match = Some(e);
    }
    if let Some(t) = g.theta {
        rc.theta = t;
    }
    rc.validate()?;
    Ok(rc)
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Discretize(_) => "discretize",
        Command::Spectrum(_) => "spectrum",
        Command::Eigensolve(_) => "eigensolve",
        Command::Verify(_) => "verify",
        Command::Reproduce(_) => "reproduce",
        Command::Acceptance(_) => "acceptance",
    }
}

fn run(cli: &Cli, rc: &RunConfig, out: &mut Outputs) -> Result<Finished> {
    match &cli.command {
        Command::Discretize(a) => commands::discretize(rc, a, out),
        Command::Spectrum(a) => commands::spectrum(rc, a, out),
        Command::Eigensolve(a) => commands::eigensolve(rc, a, out),
        Command::Verify(a) => commands::verify(rc, a, out),
        Command::Reproduce(a) => commands::reproduce(rc, a, out),
        Command::Acceptance(a) => commands::acceptance(rc, a, out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    if let Some(n) = cli.global.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let name = command_name(&cli.command);
    let rc = match load_config(&cli.global) {
        Ok(rc) => rc,
        Err(e) => {
            eprintln!(
                "{}",
                serde_json::json!({ "command": name, "failures": [e.to_string()] })
            );
            return ExitCode::from(2);
        }
    };
    let mut out = match Outputs::new(&cli.global.out) {
        Ok(o) => o,
        Err(e) => {
            eprintln!(
                "{}",
                serde_json::json!({ "command": name, "failures": [e.to_string()] })
            );
            return ExitCode::from(2);
        }
    };
    let (parameters, failures) = match run(&cli, &rc, &mut out) {
        Ok(f) => (f.parameters, f.failures),
        Err(e) => (serde_json::Value::Null, vec![format!("error: {e}")]),
    };
    let manifest = RunManifest {
        command: name.into(),
        config_digest: digest(&rc),
        config: rc,
        parameters,
        outputs: out.written.iter().map(|p| p.display().to_string()).collect(),
        wall_seconds: start.elapsed().as_secs_f64(),
        library_version: env!("CARGO_PKG_VERSION").into(),
        passed: failures.is_empty(),
        failures: failures.clone(),
    };
    if let Err(e) = out.json("manifest.json", &manifest) {
        eprintln!(
            "{}",
            serde_json::json!({ "command": name, "failures": [e.to_string()] })
        );
        return ExitCode::from(2);
    }
    if failures.is_empty() {
        ExitCode::SUCCESS
    } else {
        eprintln!("{}", serde_json::json!({ "command": name, "failures": failures }));
        ExitCode::from(1)
    }
}
