//! `fbsense`: noise spectra, SNR curves, Langevin oracle runs and figure
//! datasets for a feedback-cooled optomechanical force detector.
//!
//! Exit codes: 0 success, 1 i/o failure, 2 configuration or usage error,
//! 3 numerical failure, 4 oracle statistical failure.

mod invocation;
mod reproduce;
mod table;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};

use fbsense::oracle::{default_step, OracleConfig};
use fbsense::{Config, ConfigError, FrequencyGrid, Spacing};

use invocation::{CliError, Invocation, OracleSettings, RunOutput, SnrMode, SpectrumMode, Z_THRESHOLD};
use reproduce::Figure;
use table::{ManifestFile, RunManifest, WallClock};

#[derive(Parser)]
#[command(name = "fbsense", version, about = "Feedback-cooled optomechanical force detection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Copy)]
struct GridArgs {
    #[arg(long, allow_negative_numbers = true)]
    omega_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    omega_max: Option<f64>,
    /// Number of grid points (number of bands for stationary oracle runs).
    #[arg(long)]
    points: Option<usize>,
    /// Logarithmic spacing instead of linear.
    #[arg(long)]
    log_grid: bool,
}

impl GridArgs {
    fn resolve(&self, min: f64, max: f64, points: usize) -> FrequencyGrid {
        FrequencyGrid {
            min: self.omega_min.unwrap_or(min),
            max: self.omega_max.unwrap_or(max),
            points: self.points.unwrap_or(points),
            spacing: if self.log_grid {
                Spacing::Log
            } else {
                Spacing::Linear
            },
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Detected position-noise spectrum.
    Spectrum {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, value_enum, default_value = "stationary")]
        mode: SpectrumMode,
        /// Output directory; the table goes to stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Signal-to-noise ratio per unit force amplitude.
    Snr {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, value_enum, default_value = "stationary")]
        mode: SnrMode,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Stochastic time-domain simulation compared with the analytic spectrum.
    Oracle {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, value_enum, default_value = "stationary")]
        mode: SpectrumMode,
        /// Random seed; generated and recorded when omitted.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = OracleConfig::DEFAULT_ENSEMBLE)]
        ensemble: usize,
        #[arg(long, default_value_t = OracleConfig::DEFAULT_STEPS)]
        steps: usize,
        /// Time step; defaults to min(0.02, 0.02/(γ_m(1+g))).
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Emit the datasets and a gnuplot script for one reference figure.
    Reproduce {
        /// One of snrsta, nonstatm, nonstag-a, nonstag-b, snrnontot-a,
        /// snrnontot-b, snrme2.
        figure: String,
        /// Output directory (default: the figure id).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Parse and validate a configuration, printing the resolved values.
    ValidateConfig {
        #[arg(long)]
        config: PathBuf,
    },
    /// Re-run the command recorded in a manifest.json.
    Replay {
        #[arg(long)]
        manifest: PathBuf,
        /// Output directory (default: the manifest's directory).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load(path: &Path) -> Result<Config, CliError> {
    Ok(Config::from_path(path)?)
}

fn generated_seed() -> u64 {
    let d = SystemTime::now().duration_since(UNIX_EPOCH).unwrap_or_default();
    d.as_secs() ^ (d.subsec_nanos() as u64).rotate_left(32)
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Executes `invocation`, writes tables, extra files and manifest.json into
/// `out` (or the single table to stdout), and returns the run output.
fn run_and_write(invocation: Invocation, out: Option<&Path>) -> Result<RunOutput, CliError> {
    let started = SystemTime::now();
    let clock = Instant::now();
    let output = invocation.execute()?;
    let mut names: Vec<String> = output.tables.iter().map(|t| t.name.clone()).collect();
    names.extend(output.files.iter().map(|(n, _)| n.clone()));
    let manifest = RunManifest::new(invocation, names);
    let json = serde_json::to_string(&manifest).expect("manifest serializes");
    match out {
        None => {
            for t in &output.tables {
                print!("{}", t.render(&json));
            }
        }
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(io_err(dir))?;
            for t in &output.tables {
                let path = dir.join(&t.name);
                std::fs::write(&path, t.render(&json)).map_err(io_err(&path))?;
            }
            for (name, text) in &output.files {
                let path = dir.join(name);
                std::fs::write(&path, text).map_err(io_err(&path))?;
            }
            let file = ManifestFile {
                manifest,
                wall_clock: WallClock {
                    started_unix_seconds: started
                        .duration_since(UNIX_EPOCH)
                        .map_or(0.0, |d| d.as_secs_f64()),
                    elapsed_seconds: clock.elapsed().as_secs_f64(),
                },
            };
            let path = dir.join("manifest.json");
            let text = serde_json::to_string_pretty(&file).expect("manifest serializes");
            std::fs::write(&path, text + "\n").map_err(io_err(&path))?;
            eprintln!(
                "{}: wrote {} file(s) to {}",
                file.manifest.invocation.name(),
                file.manifest.outputs.len() + 1,
                dir.display()
            );
        }
    }
    for line in &output.summary {
        eprintln!("{line}");
    }
    if let Some(z) = output.max_abs_z {
        if z >= Z_THRESHOLD {
            return Err(CliError::Statistical { max_abs_z: z });
        }
    }
    Ok(output)
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Spectrum {
            config,
            grid,
            mode,
            out,
        } => {
            let inv = Invocation::Spectrum {
                config: load(&config)?,
                grid: grid.resolve(0.0, 2.0, 2001),
                mode,
            };
            run_and_write(inv, out.as_deref())?;
        }
        Command::Snr {
            config,
            grid,
            mode,
            out,
        } => {
            let config = load(&config)?;
            config.force()?;
            let inv = Invocation::Snr {
                config,
                grid: grid.resolve(0.0, 2.0, 401),
                mode,
            };
            run_and_write(inv, out.as_deref())?;
        }
        Command::Oracle {
            config,
            grid,
            mode,
            seed,
            ensemble,
            steps,
            dt,
            out,
        } => {
            let config = load(&config)?;
            let params = config.model_params().map_err(ConfigError::from)?;
            let dt = dt.unwrap_or_else(|| default_step(&params));
            fbsense::oracle::check_step(dt, &params)?;
            let seed = seed.unwrap_or_else(generated_seed);
            let grid = match mode {
                SpectrumMode::Stationary => grid.resolve(0.8, 1.2, 8),
                SpectrumMode::Nonstationary => grid.resolve(0.9, 1.1, 5),
            };
            let inv = Invocation::Oracle {
                config,
                grid,
                mode,
                settings: OracleSettings {
                    seed,
                    ensemble,
                    steps,
                    dt,
                },
            };
            eprintln!("oracle seed: {seed}");
            run_and_write(inv, out.as_deref())?;
        }
        Command::Reproduce { figure, out } => {
            let figure: Figure = figure.parse()?;
            let dir = out.unwrap_or_else(|| PathBuf::from(figure.id()));
            run_and_write(Invocation::Reproduce { figure }, Some(&dir))?;
        }
        Command::ValidateConfig { config } => {
            let c = load(&config)?;
            print!("{}", c.to_toml_string());
            eprintln!("{}: ok", config.display());
        }
        Command::Replay { manifest, out } => {
            let text = std::fs::read_to_string(&manifest).map_err(io_err(&manifest))?;
            let file: ManifestFile =
                serde_json::from_str(&text).map_err(|e| CliError::Manifest {
                    path: manifest.display().to_string(),
                    message: e.to_string(),
                })?;
            let dir = out.unwrap_or_else(|| {
                manifest
                    .parent()
                    .map_or_else(|| PathBuf::from("."), Path::to_path_buf)
            });
            run_and_write(file.manifest.invocation, Some(&dir))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
