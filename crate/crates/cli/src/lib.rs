//! `sts` command line: run steering sweeps from a config, export
//! assemblages and SDPs, list presets.

pub mod config;
pub mod presets;
pub mod run;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use config::RunConfig;
use run::RunOptions;

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "sts", version, about = "Spatio-temporal steering sweeps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute the configured measures on the time grid and write CSVs.
    Run(RunArgs),
    /// Write the assemblage and SDP files at one time.
    Export(ExportArgs),
    /// Shipped configs.
    Presets {
        #[command(subcommand)]
        action: PresetAction,
    },
}

#[derive(Debug, Subcommand)]
enum PresetAction {
    /// Print the preset names.
    List,
    /// Print a preset's config file.
    Show { name: String },
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
struct Source {
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long, value_name = "NAME")]
    preset: Option<String>,
}

#[derive(Debug, Args)]
struct Common {
    #[command(flatten)]
    source: Source,
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    #[arg(long, value_name = "N", value_parser = clap::value_parser!(u32).range(1..))]
    workers: Option<u32>,
    /// Evolve in the full Hilbert space.
    #[arg(long)]
    full_space: bool,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct ExportArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_name = "T", default_value_t = 0.0)]
    time: f64,
}

fn load(common: &Common) -> Result<(RunConfig, RunOptions), config::ConfigError> {
    let cfg = match (&common.source.config, &common.source.preset) {
        (Some(path), _) => RunConfig::from_file(path)?,
        (None, Some(name)) => presets::preset(name)?,
        (None, None) => unreachable!("clap requires a source"),
    };
    let out_dir = common
        .out
        .clone()
        .or_else(|| cfg.out.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    let workers = common
        .workers
        .map(|w| w as usize)
        .or(cfg.workers)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let opts = RunOptions {
        out_dir,
        workers,
        full_space: common.full_space,
    };
    Ok((cfg, opts))
}

fn run_error_code(e: &run::RunError) -> i32 {
    match e {
        run::RunError::Io { .. } | run::RunError::Pool(_) => EXIT_IO,
        _ => EXIT_CONFIG,
    }
}

/// Parses `args` (program name first) and executes; returns the exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match cli.command {
        Command::Presets { action } => match action {
            PresetAction::List => {
                for (name, _) in presets::PRESETS {
                    println!("{name}");
                }
                EXIT_OK
            }
            PresetAction::Show { name } => match presets::preset_text(&name) {
                Some(text) => {
                    print!("{text}");
                    EXIT_OK
                }
                None => {
                    eprintln!("error: unknown preset {name:?}");
                    EXIT_CONFIG
                }
            },
        },
        Command::Run(args) => {
            let (cfg, opts) = match load(&args.common) {
                Ok(v) => v,
                Err(e) => {
                    eprintln!("error: {e}");
                    return EXIT_CONFIG;
                }
            };
            match run::run(&cfg, &opts) {
                Ok(summary) => {
                    for s in &summary.series {
                        eprintln!(
                            "{}: peak {:.6e} at t = {}, vanishing {}, failed rows {}",
                            s.file,
                            s.peak_value,
                            s.peak_time,
                            s.vanishing_time.map_or("never".into(), |t| t.to_string()),
                            s.failed_rows
                        );
                    }
                    if summary.failed_rows() > 0 {
                        EXIT_SOLVER
                    } else {
                        EXIT_OK
                    }
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    run_error_code(&e)
                }
            }
        }
        Command::Export(args) => {
            if !(args.time.is_finite() && args.time >= 0.0) {
                eprintln!("error: --time must be a finite non-negative number");
                return EXIT_CONFIG;
            }
            let (cfg, opts) = match load(&args.common) {
                Ok(v) => v,
                Err(e) => {
                    eprintln!("error: {e}");
                    return EXIT_CONFIG;
                }
            };
            match run::export(&cfg, args.time, &opts) {
                Ok(summary) => {
                    for f in &summary.files {
                        println!("{}", f.display());
                    }
                    EXIT_OK
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    run_error_code(&e)
                }
            }
        }
    }
}
