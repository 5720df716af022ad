//! `tactile-bench`: run the gel benchmarks from the command line.
//!
//! Exit status is 0 on success, 2 for invalid input or arguments, and 3
//! when the filesystem fails.

pub mod commands;
pub mod config;
pub mod error;
pub mod plot;
pub mod report;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use tactile_core::spatial::{CropRect, ScanAxis};

pub use config::AnalysisConfig;
pub use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "tactile-bench", version, about = "Wear and sensitivity benchmarks for tactile sensor gels")]
struct Cli {
    /// Worker threads for per-cycle and per-surface work (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// MAE wear series of a cyclic-loading or abrasion run.
    Resilience(AnalyzeArgs),
    /// MAE against normal force over a load/unload ramp.
    Force(ForceArgs),
    /// SNR of every ridged surface in a sweep directory.
    Spatial(SpatialArgs),
    /// Write a synthetic run with known ground truth.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    /// Run directory (or sweep directory for `spatial`).
    #[arg(long)]
    input: PathBuf,
    /// Output directory, created if needed.
    #[arg(long)]
    out: PathBuf,
    /// TOML analysis config.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl AnalyzeArgs {
    fn load_config(&self) -> Result<AnalysisConfig, CliError> {
        match &self.config {
            Some(p) => AnalysisConfig::load(p),
            None => Ok(AnalysisConfig::default()),
        }
    }
}

#[derive(Debug, Args)]
struct ForceArgs {
    #[command(flatten)]
    common: AnalyzeArgs,
    /// Slope fraction below which a window counts as saturated.
    #[arg(long)]
    saturation_ratio: Option<f64>,
}

#[derive(Debug, Args)]
struct SpatialArgs {
    #[command(flatten)]
    common: AnalyzeArgs,
    /// Band-pass sigmas in pixels, as LOW,HIGH.
    #[arg(long, value_name = "LOW,HIGH")]
    dog_sigmas: Option<String>,
    /// Analysis window in pixels, as X,Y,WIDTH,HEIGHT.
    #[arg(long, value_name = "X,Y,W,H")]
    crop: Option<String>,
    /// Scan direction: rows or columns (default: across the ridges).
    #[arg(long)]
    scan_axis: Option<String>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// cyclic_compression, cyclic_local_shear, cyclic_transverse_shear,
    /// abrasion, force_sensitivity or spatial_sensitivity.
    #[arg(long)]
    protocol: String,
    /// si_like or pu_like.
    #[arg(long, default_value = "si_like")]
    material: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Override the protocol's cycle count.
    #[arg(long)]
    cycles: Option<u32>,
    /// Frames per averaged stack.
    #[arg(long)]
    frames: Option<usize>,
    /// Frames captured over a force ramp.
    #[arg(long)]
    ramp_frames: Option<usize>,
    /// Frame size as WIDTHxHEIGHT.
    #[arg(long)]
    resolution: Option<String>,
    /// Inject damage: MODE@CYCLE:SEVERITY[@X,Y]. Repeatable.
    #[arg(long)]
    wear: Vec<String>,
}

fn parse_crop(text: &str) -> Result<CropRect, CliError> {
    let bad = || CliError::Usage(format!("--crop expects X,Y,WIDTH,HEIGHT, got {text:?}"));
    let v = text
        .split(',')
        .map(|p| p.trim().parse::<usize>().map_err(|_| bad()))
        .collect::<Result<Vec<_>, _>>()?;
    match v[..] {
        [x, y, width, height] => Ok(CropRect { x, y, width, height }),
        _ => Err(bad()),
    }
}

fn parse_axis(text: &str) -> Result<ScanAxis, CliError> {
    match text {
        "rows" => Ok(ScanAxis::Rows),
        "columns" => Ok(ScanAxis::Columns),
        _ => Err(CliError::Usage(format!("--scan-axis must be rows or columns, got {text:?}"))),
    }
}

fn execute(command: Command) -> Result<(), CliError> {
    match command {
        Command::Resilience(a) => {
            commands::resilience(&a.input, &a.out, &a.load_config()?)?;
        }
        Command::Force(f) => {
            let mut config = f.common.load_config()?;
            if let Some(r) = f.saturation_ratio {
                config.force.saturation_ratio = r;
            }
            commands::force(&f.common.input, &f.common.out, &config)?;
        }
        Command::Spatial(s) => {
            let mut config = s.common.load_config()?;
            if let Some(text) = &s.dog_sigmas {
                let (low, high) = config::parse_sigmas(text)?;
                config.pipeline.dog_sigma_low = low;
                config.pipeline.dog_sigma_high = high;
            }
            if let Some(text) = &s.crop {
                config.pipeline.crop = Some(parse_crop(text)?);
            }
            if let Some(text) = &s.scan_axis {
                config.pipeline.scan_axis = Some(parse_axis(text)?);
            }
            commands::spatial(&s.common.input, &s.common.out, &config)?;
        }
        Command::Simulate(s) => {
            let resolution = s.resolution.as_deref().map(commands::parse_resolution).transpose()?;
            commands::simulate(&commands::SimulateRequest {
                protocol: s.protocol,
                material: s.material,
                seed: s.seed,
                out: s.out,
                cycles: s.cycles,
                frames: s.frames,
                ramp_frames: s.ramp_frames,
                resolution,
                wear: s.wear,
            })?;
        }
    }
    Ok(())
}

/// Parses `args` (including the program name), runs the command, and
/// returns the process exit status. Diagnostics go to standard error.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let result = match cli.jobs {
        Some(0) => Err(CliError::Usage("--jobs must be at least 1".into())),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| execute(cli.command)),
            Err(e) => Err(CliError::Usage(format!("cannot start {n} worker threads: {e}"))),
        },
        None => execute(cli.command),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
