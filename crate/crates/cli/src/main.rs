use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;

/// Simulate, reconstruct and evaluate single-sided ultrasound scans of
/// layered specimens.
#[derive(Parser, Debug)]
#[command(name = "rare-mace", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Synthesize measurements of the configured phantom.
    Simulate(SimulateArgs),
    /// Reconstruct an image from a measurement file.
    Reconstruct(ReconstructArgs),
    /// Score image CSVs against a ground-truth CSV.
    Evaluate(EvaluateArgs),
    /// Render the ring-shaped correlated-noise kernel.
    RenderKernel(RenderKernelArgs),
    /// Print the desk-scale preset as TOML.
    DefaultConfig,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Noise seed; defaults to the config value.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Grid refinement of the synthesis phantom; defaults to the config value.
    #[arg(long)]
    pub refine: Option<usize>,
    /// Also write the measurements as CSV.
    #[arg(long)]
    pub csv: bool,
}

#[derive(Args, Debug)]
pub struct ReconstructArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Binary measurement file.
    #[arg(long)]
    pub data: PathBuf,
    /// saft, umbir or rare-mace.
    #[arg(long)]
    pub method: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Ground-truth image CSV.
    #[arg(long)]
    pub truth: PathBuf,
    /// Image CSVs to score.
    #[arg(required = true)]
    pub images: Vec<PathBuf>,
    /// Centre frequency override for γ, in Hz.
    #[arg(long)]
    pub fc: Option<f64>,
    /// Sound speed override for γ, in m/s.
    #[arg(long)]
    pub cm: Option<f64>,
    /// Write the metrics CSV here as well as printing the table.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct RenderKernelArgs {
    /// Centre frequency in Hz.
    #[arg(long)]
    pub fc: f64,
    /// Sound speed in m/s.
    #[arg(long)]
    pub cm: f64,
    /// Pixel pitch in metres.
    #[arg(long)]
    pub pitch: f64,
    #[arg(long, default_value_t = 20.0)]
    pub eta: f64,
    /// Odd kernel size; defaults to the smallest accepted size.
    #[arg(long)]
    pub size: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => commands::simulate(&a),
        Command::Reconstruct(a) => commands::reconstruct(&a),
        Command::Evaluate(a) => commands::evaluate(&a),
        Command::RenderKernel(a) => commands::render_kernel(&a),
        Command::DefaultConfig => commands::default_config(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
