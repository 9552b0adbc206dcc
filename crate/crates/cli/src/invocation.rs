//! Fully resolved commands and their execution.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use fbsense::oracle::{nonstationary_ensemble, simulate, BandSpec, OracleConfig, PeriodogramWindow};
use fbsense::{
    averaged_snr, nonstationary_spectrum, stationary_snr, stationary_spectrum, stationary_variances,
    Config, ConfigError, CoolAndMeasure, Force, FrequencyGrid, GridError, OracleError,
    QuadratureError, SnrCurve, SnrError, Spectrum,
};

use crate::reproduce::{self, Figure};
use crate::table::Table;

/// Oracle runs fail statistically above this |z|.
pub const Z_THRESHOLD: f64 = 3.0;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("unknown figure `{0}`; expected one of {list}", list = reproduce::FIGURE_IDS.join(", "))]
    UnknownFigure(String),
    #[error("oracle: {0}")]
    Oracle(OracleError),
    #[error("numerical failure at omega = {omega}: {source}")]
    Numerical { omega: f64, source: QuadratureError },
    #[error("numerical failure: {0}")]
    Quadrature(#[from] QuadratureError),
    #[error("{0}")]
    Window(SnrError),
    #[error("oracle statistical failure: max |z| = {max_abs_z:.3} exceeds {Z_THRESHOLD}")]
    Statistical { max_abs_z: f64 },
    #[error("invalid manifest {path}: {message}")]
    Manifest { path: String, message: String },
    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_)
            | CliError::Grid(_)
            | CliError::UnknownFigure(_)
            | CliError::Window(_)
            | CliError::Manifest { .. } => 2,
            CliError::Oracle(OracleError::Quadrature(_)) => 3,
            CliError::Oracle(_) => 2,
            CliError::Numerical { .. } | CliError::Quadrature(_) => 3,
            CliError::Statistical { .. } => 4,
            CliError::Io { .. } => 1,
        }
    }
}

impl From<OracleError> for CliError {
    fn from(e: OracleError) -> Self {
        CliError::Oracle(e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumMode {
    Stationary,
    Nonstationary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SnrMode {
    Stationary,
    Nonstationary,
    Averaged,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleSettings {
    pub seed: u64,
    pub ensemble: usize,
    pub steps: usize,
    pub dt: f64,
}

/// Everything needed to reproduce a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum Invocation {
    Spectrum {
        config: Config,
        grid: FrequencyGrid,
        mode: SpectrumMode,
    },
    Snr {
        config: Config,
        grid: FrequencyGrid,
        mode: SnrMode,
    },
    Oracle {
        config: Config,
        grid: FrequencyGrid,
        mode: SpectrumMode,
        settings: OracleSettings,
    },
    Reproduce {
        figure: Figure,
    },
}

/// Tables, auxiliary files and human-readable summary lines of one run.
#[derive(Debug, Default)]
pub struct RunOutput {
    pub tables: Vec<Table>,
    pub files: Vec<(String, String)>,
    pub summary: Vec<String>,
    pub max_abs_z: Option<f64>,
}

impl Invocation {
    pub fn name(&self) -> &'static str {
        match self {
            Invocation::Spectrum { .. } => "spectrum",
            Invocation::Snr { .. } => "snr",
            Invocation::Oracle { .. } => "oracle",
            Invocation::Reproduce { .. } => "reproduce",
        }
    }

    pub fn execute(&self) -> Result<RunOutput, CliError> {
        match self {
            Invocation::Spectrum { config, grid, mode } => run_spectrum(config, grid, *mode),
            Invocation::Snr { config, grid, mode } => run_snr(config, grid, *mode),
            Invocation::Oracle {
                config,
                grid,
                mode,
                settings,
            } => run_oracle(config, grid, *mode, settings),
            Invocation::Reproduce { figure } => reproduce::run(*figure),
        }
    }
}

fn single(table: Table) -> RunOutput {
    RunOutput {
        tables: vec![table],
        ..RunOutput::default()
    }
}

fn run_spectrum(config: &Config, grid: &FrequencyGrid, mode: SpectrumMode) -> Result<RunOutput, CliError> {
    let params = config.model_params().map_err(ConfigError::from)?;
    let omega = grid.frequencies()?;
    let table = match mode {
        SpectrumMode::Stationary => {
            let s = Spectrum::sample(&omega, |w| stationary_spectrum(w, &params));
            Table::from_columns("spectrum.csv", &["omega", "value"], &[&s.grid, &s.values])
                .note("mode", "stationary")
        }
        SpectrumMode::Nonstationary => {
            let window = config.window()?;
            let initial = stationary_variances(&params)?;
            let s = Spectrum::sample(&omega, |w| {
                nonstationary_spectrum(w, window.duration, &initial, &params)
            });
            Table::from_columns("spectrum.csv", &["omega", "value"], &[&s.grid, &s.values])
                .note("mode", "nonstationary")
                .note("measurement_time", window.duration)
                .note("q_var_init", format!("{:.16e}", initial.q_var))
                .note("p_var_init", format!("{:.16e}", initial.p_var))
                .note("qp_sym_init", format!("{:.16e}", initial.qp_sym))
        }
    };
    Ok(single(table))
}

fn run_snr(config: &Config, grid: &FrequencyGrid, mode: SnrMode) -> Result<RunOutput, CliError> {
    let params = config.model_params().map_err(ConfigError::from)?;
    let pulse = config.force()?;
    let omega = grid.frequencies()?;
    let at = |w: f64| move |source| CliError::Numerical { omega: w, source };
    let (curve, window) = match mode {
        SnrMode::Stationary => {
            let window = config.window()?;
            let force = Force::Pulse(pulse);
            let c = SnrCurve::try_sample::<CliError>(&omega, |w| {
                Ok(stationary_snr(w, &force, window.duration, &params))
            })?;
            (c, window)
        }
        SnrMode::Nonstationary => {
            let window = config.window()?;
            let run = CoolAndMeasure::prepare(&params)?;
            let c = SnrCurve::try_sample(&omega, |w| {
                run.snr(w, &pulse, window.duration).map_err(at(w))
            })?;
            (c, window)
        }
        SnrMode::Averaged => {
            let window = config.cycle_window()?;
            if pulse.duration > 0.1 * window.duration {
                return Err(CliError::Window(SnrError::WindowTooShort {
                    duration: pulse.duration,
                    measurement_time: window.duration,
                }));
            }
            let c = SnrCurve::try_sample(&omega, |w| {
                averaged_snr(w, &pulse, &window, &params).map_err(|e| match e {
                    SnrError::Quadrature(source) => CliError::Numerical { omega: w, source },
                    other => CliError::Window(other),
                })
            })?;
            (c, window)
        }
    };
    let mode_name = match mode {
        SnrMode::Stationary => "stationary",
        SnrMode::Nonstationary => "nonstationary",
        SnrMode::Averaged => "averaged",
    };
    let table = Table::from_columns("snr.csv", &["omega", "value"], &[&curve.grid, &curve.values])
        .note("mode", mode_name)
        .note("measurement_time", window.duration)
        .note("cooling_time", window.cooling_time)
        .note("units", "SNR per unit force amplitude");
    Ok(single(table))
}

fn run_oracle(
    config: &Config,
    grid: &FrequencyGrid,
    mode: SpectrumMode,
    settings: &OracleSettings,
) -> Result<RunOutput, CliError> {
    let params = config.model_params().map_err(ConfigError::from)?;
    let mut cfg = OracleConfig {
        dt: settings.dt,
        steps: settings.steps,
        ensemble: settings.ensemble,
        ..OracleConfig::new(params, settings.seed)
    };
    let (table, comparison, mut summary) = match mode {
        SpectrumMode::Stationary => {
            if grid.points == 0 {
                return Err(GridError::EmptyGrid.into());
            }
            cfg.bands = BandSpec {
                min: grid.min,
                max: grid.max,
                count: grid.points,
            };
            cfg.window = PeriodogramWindow::Rectangular;
            let run = simulate(&cfg)?;
            let cmp = run.compare_with_stationary();
            let analytic = stationary_variances(&params)?;
            let summary = vec![
                format!(
                    "q_var estimate {:.6e} ± {:.2e} (analytic {:.6e})",
                    run.q_var.mean, run.q_var.std_error, analytic.q_var
                ),
                format!(
                    "p_var estimate {:.6e} ± {:.2e} (analytic {:.6e})",
                    run.p_var.mean, run.p_var.std_error, analytic.p_var
                ),
            ];
            let bins: Vec<f64> = run.bins_per_band.iter().map(|&b| b as f64).collect();
            let table = Table::from_columns(
                "oracle.csv",
                &["omega", "estimate", "std_error", "analytic", "z_score", "bins"],
                &[
                    &run.spectrum.grid,
                    &run.spectrum.values,
                    &run.std_errors,
                    &cmp.reference,
                    &cmp.z_scores,
                    &bins,
                ],
            )
            .note("mode", "stationary")
            .note("q_var_estimate", format!("{:.16e}", run.q_var.mean))
            .note("q_var_std_error", format!("{:.16e}", run.q_var.std_error))
            .note("p_var_estimate", format!("{:.16e}", run.p_var.mean))
            .note("p_var_std_error", format!("{:.16e}", run.p_var.std_error));
            (table, cmp, summary)
        }
        SpectrumMode::Nonstationary => {
            let window = config.window()?;
            let omega = grid.frequencies()?;
            let run = nonstationary_ensemble(&cfg, window.duration, &omega)?;
            let cmp = run.compare_with_analytic(&params);
            let table = Table::from_columns(
                "oracle.csv",
                &["omega", "estimate", "std_error", "analytic", "z_score"],
                &[
                    &run.spectrum.grid,
                    &run.spectrum.values,
                    &run.std_errors,
                    &cmp.reference,
                    &cmp.z_scores,
                ],
            )
            .note("mode", "nonstationary")
            .note("measurement_time", window.duration);
            (table, cmp, Vec::new())
        }
    };
    let max_z = comparison.max_abs_z();
    summary.insert(0, format!("max |z| over {} bins: {max_z:.3}", comparison.z_scores.len()));
    let table = table
        .note("seed", settings.seed)
        .note("ensemble", settings.ensemble)
        .note("dt", format!("{:.16e}", settings.dt))
        .note("max_abs_z", format!("{max_z:.6}"));
    Ok(RunOutput {
        tables: vec![table],
        files: Vec::new(),
        summary,
        max_abs_z: Some(max_z),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::from(ConfigError::MissingForce).exit_code(), 2);
        assert_eq!(CliError::from(GridError::EmptyGrid).exit_code(), 2);
        assert_eq!(CliError::UnknownFigure("x".into()).exit_code(), 2);
        let unstable = OracleError::UnstableStep {
            dt: 1.0,
            scaled: 1.0,
            limit: 0.05,
        };
        assert_eq!(CliError::from(unstable).exit_code(), 2);
        assert_eq!(
            CliError::Numerical {
                omega: 1.0,
                source: QuadratureError::NonFinite(1.0)
            }
            .exit_code(),
            3
        );
        assert_eq!(CliError::Statistical { max_abs_z: 4.0 }.exit_code(), 4);
    }

    #[test]
    fn manifest_round_trip() {
        let inv = Invocation::Reproduce {
            figure: Figure::NonstagB,
        };
        let json = serde_json::to_string(&inv).unwrap();
        assert_eq!(json, r#"{"command":"reproduce","figure":"nonstag-b"}"#);
        assert_eq!(serde_json::from_str::<Invocation>(&json).unwrap(), inv);
    }
}
