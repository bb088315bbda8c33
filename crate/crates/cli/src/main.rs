mod commands;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use navflow::NavError;

/// Navigation flows among ellipsoidal obstacles: simulate, benchmark, analyse
/// and generate worlds.
#[derive(Debug, Parser)]
#[command(name = "navflow", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate one trajectory in a world file.
    Simulate(SimulateArgs),
    /// Success-ratio sweep over random worlds.
    Benchmark(BenchmarkArgs),
    /// Obstacle configuration graph (edges, witnesses, DAG verdict).
    Graph(ReportArgs),
    /// Per-obstacle eccentricity condition table.
    Check(ReportArgs),
    /// Generate random world files.
    #[command(alias = "gen-world")]
    Gen(GenArgs),
    /// Render a trajectory CSV over its world as SVG.
    Plot(PlotArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FlowArg {
    Nav,
    Old,
    New,
    Switched,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyArg {
    Ellipsoids,
    Spheres,
}

/// Integration flags shared by `simulate` and `benchmark`.
#[derive(Debug, Args)]
pub struct IntegrationArgs {
    /// Step size η.
    #[arg(long, default_value_t = 0.01)]
    pub eta: f64,
    /// Normalization offset ε in x + η g/(‖g‖ + ε).
    #[arg(long, default_value_t = 1e-4)]
    pub eps: f64,
    #[arg(long, default_value_t = 50_000)]
    pub max_steps: usize,
    /// Sensor range c of the switched controller.
    #[arg(long, default_value_t = 2.0)]
    pub sensor_range: f64,
    /// Disable local-minimum detection (stuck runs end as timeouts).
    #[arg(long)]
    pub no_stuck: bool,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// World file (JSON).
    pub world: std::path::PathBuf,
    #[arg(long, value_enum, default_value_t = FlowArg::New)]
    pub flow: FlowArg,
    #[arg(long, default_value_t = 20.0)]
    pub k: f64,
    /// Start point as comma-separated coordinates; drawn at random from the
    /// seed when omitted.
    #[arg(long, allow_hyphen_values = true)]
    pub start: Option<String>,
    /// Seed for a random start (overridden by NAVFLOW_SEED).
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub integration: IntegrationArgs,
    /// Use the damped double integrator driven by −∇φ_k.
    #[arg(long)]
    pub second_order: bool,
    #[arg(long, default_value_t = 1.0)]
    pub damping: f64,
    /// Output directory.
    #[arg(long, short, default_value = ".")]
    pub out: std::path::PathBuf,
    /// Base name of the output files.
    #[arg(long, default_value = "trajectory")]
    pub name: String,
    /// Also write an SVG plot (planar worlds only).
    #[arg(long)]
    pub svg: bool,
    /// Quiver arrows per axis in the SVG; 0 disables the quiver.
    #[arg(long, default_value_t = 25)]
    pub quiver: usize,
}

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    /// Comma-separated controllers.
    #[arg(long, value_enum, value_delimiter = ',', default_value = "new")]
    pub flow: Vec<FlowArg>,
    #[arg(long, value_delimiter = ',', default_value = "20,40,60")]
    pub k: Vec<f64>,
    /// Obstacle counts, as a list (2,3,5) or an inclusive range (2..7).
    #[arg(long, default_value = "2..7")]
    pub m: String,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    /// Master seed (overridden by NAVFLOW_SEED).
    #[arg(long, default_value_t = 2024)]
    pub seed: u64,
    #[arg(long, default_value_t = 20.0)]
    pub r0: f64,
    #[arg(long, value_enum, default_value_t = FamilyArg::Ellipsoids)]
    pub family: FamilyArg,
    #[command(flatten)]
    pub integration: IntegrationArgs,
    /// Worker threads (defaults to the number of CPUs).
    #[arg(long)]
    pub jobs: Option<usize>,
    /// CSV output path; stdout when omitted.
    #[arg(long, short)]
    pub out: Option<std::path::PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    pub world: std::path::PathBuf,
    /// Machine-readable JSON instead of a table.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    /// World file (JSON).
    pub world: std::path::PathBuf,
    /// Trajectory CSV written by `simulate`.
    pub trajectory: std::path::PathBuf,
    /// Status sidecar; defaults to the CSV path with a .json extension when
    /// that file exists.
    #[arg(long)]
    pub sidecar: Option<std::path::PathBuf>,
    /// Quiver arrows per axis; 0 disables the quiver.
    #[arg(long, default_value_t = 25)]
    pub quiver: usize,
    /// Output path; defaults to the CSV path with a .svg extension.
    #[arg(long, short)]
    pub out: Option<std::path::PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// Number of obstacles.
    #[arg(long)]
    pub m: usize,
    /// Seed (overridden by NAVFLOW_SEED).
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 20.0)]
    pub r0: f64,
    #[arg(long, default_value_t = 2)]
    pub dimension: usize,
    #[arg(long, value_enum, default_value_t = FamilyArg::Ellipsoids)]
    pub family: FamilyArg,
    /// Number of worlds; more than one writes a directory with a manifest.
    #[arg(long, default_value_t = 1)]
    pub count: usize,
    /// Output file (single world) or directory (batch); a single world goes
    /// to stdout when omitted.
    #[arg(long, short)]
    pub out: Option<std::path::PathBuf>,
}

/// Errors in command-line input that are not caught by clap.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct UsageError(pub String);

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<UsageError>().is_some() {
        return 2;
    }
    match err.downcast_ref::<NavError>() {
        Some(e) if e.is_validation() => 2,
        _ => 3,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => commands::simulate(&a),
        Command::Benchmark(a) => commands::benchmark(&a),
        Command::Graph(a) => commands::graph(&a),
        Command::Check(a) => commands::check(&a),
        Command::Gen(a) => commands::gen(&a),
        Command::Plot(a) => commands::plot(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
