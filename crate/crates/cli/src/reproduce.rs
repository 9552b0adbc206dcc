//! Datasets of the reference figures, with a gnuplot script per figure.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use fbsense::figures::{self, *};
use fbsense::{
    nonstationary_spectrum, stationary_snr, stationary_variances, CoolAndMeasure, Force,
    FrequencyGrid, MeasurementWindow, ModelParams, SnrCurve, SnrError, Spectrum,
};

use crate::invocation::{CliError, RunOutput};
use crate::table::Table;

pub const FIGURE_IDS: [&str; 7] = [
    "snrsta",
    "nonstatm",
    "nonstag-a",
    "nonstag-b",
    "snrnontot-a",
    "snrnontot-b",
    "snrme2",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Figure {
    #[serde(rename = "snrsta")]
    Snrsta,
    #[serde(rename = "nonstatm")]
    Nonstatm,
    #[serde(rename = "nonstag-a")]
    NonstagA,
    #[serde(rename = "nonstag-b")]
    NonstagB,
    #[serde(rename = "snrnontot-a")]
    SnrnontotA,
    #[serde(rename = "snrnontot-b")]
    SnrnontotB,
    #[serde(rename = "snrme2")]
    Snrme2,
}

impl Figure {
    pub fn id(self) -> &'static str {
        match self {
            Figure::Snrsta => "snrsta",
            Figure::Nonstatm => "nonstatm",
            Figure::NonstagA => "nonstag-a",
            Figure::NonstagB => "nonstag-b",
            Figure::SnrnontotA => "snrnontot-a",
            Figure::SnrnontotB => "snrnontot-b",
            Figure::Snrme2 => "snrme2",
        }
    }
}

impl FromStr for Figure {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        Ok(match s {
            "snrsta" => Figure::Snrsta,
            "nonstatm" => Figure::Nonstatm,
            "nonstag-a" => Figure::NonstagA,
            "nonstag-b" => Figure::NonstagB,
            "snrnontot-a" => Figure::SnrnontotA,
            "snrnontot-b" => Figure::SnrnontotB,
            "snrme2" => Figure::Snrme2,
            other => return Err(CliError::UnknownFigure(other.to_string())),
        })
    }
}

fn describe(p: &ModelParams) -> String {
    format!(
        "Q={:e} zeta={} g={:e} scheme={} eta={} T={:e} cutoff={}",
        p.quality_factor,
        p.input_power,
        p.gain,
        p.scheme.name(),
        p.detection_efficiency,
        p.temperature,
        p.cutoff
    )
}

fn label(x: f64) -> String {
    let s = format!("{x:e}");
    s.replace("e0", "")
}

struct Plot {
    title: String,
    xlabel: &'static str,
    ylabel: &'static str,
    logx: bool,
    logy: bool,
}

fn plot_script(plot: &Plot, tables: &[Table]) -> String {
    let mut s = String::new();
    writeln!(s, "# gnuplot script; run with `gnuplot -p plot.gp`").unwrap();
    writeln!(s, "set datafile separator ','").unwrap();
    writeln!(s, "set title '{}'", plot.title).unwrap();
    writeln!(s, "set xlabel '{}'", plot.xlabel).unwrap();
    writeln!(s, "set ylabel '{}'", plot.ylabel).unwrap();
    if plot.logx {
        writeln!(s, "set logscale x").unwrap();
    }
    if plot.logy {
        writeln!(s, "set logscale y").unwrap();
    }
    let curves: Vec<String> = tables
        .iter()
        .map(|t| {
            let title = t
                .notes
                .iter()
                .find(|(k, _)| k == "curve")
                .map_or(t.name.as_str(), |(_, v)| v.as_str());
            format!(
                "'{}' skip {} using 1:2 with lines title '{}'",
                t.name,
                t.preamble_lines(),
                title
            )
        })
        .collect();
    writeln!(s, "plot {}", curves.join(", \\\n     ")).unwrap();
    s
}

fn spectrum_grid() -> Vec<f64> {
    FrequencyGrid::linear(0.0, 2.0, 401).frequencies().unwrap()
}

fn resonance_grid() -> Vec<f64> {
    FrequencyGrid::linear(0.8, 1.2, 201).frequencies().unwrap()
}

fn numerical(omega: f64) -> impl Fn(fbsense::QuadratureError) -> CliError {
    move |source| CliError::Numerical { omega, source }
}

fn curve_table(file: String, x: &str, grid: &[f64], values: &[f64], curve: String, p: &ModelParams) -> Table {
    Table::from_columns(file, &[x, "value"], &[grid, values])
        .note("curve", curve)
        .note("params", describe(p))
}

fn nonstationary_curves(
    prefix: &str,
    cases: &[(ModelParams, f64, String)],
) -> Result<Vec<Table>, CliError> {
    let grid = spectrum_grid();
    let mut tables = Vec::new();
    for (k, (p, gamma_tm, curve)) in cases.iter().enumerate() {
        let initial = stationary_variances(p)?;
        let tm = p.time_from_damping_units(*gamma_tm);
        let s = Spectrum::sample(&grid, |w| nonstationary_spectrum(w, tm, &initial, p));
        tables.push(
            curve_table(format!("{prefix}_{k}.csv"), "omega", &s.grid, &s.values, curve.clone(), p)
                .note("gamma_m_T_m", gamma_tm)
                .note("q_var_init", format!("{:.16e}", initial.q_var))
                .note("p_var_init", format!("{:.16e}", initial.p_var)),
        );
    }
    Ok(tables)
}

pub fn run(figure: Figure) -> Result<RunOutput, CliError> {
    let (tables, plot) = match figure {
        Figure::Snrsta => {
            let base = snrsta_params();
            let tm = base.time_from_damping_units(1.0);
            let force = Force::Impulse { amplitude: 1.0 };
            let grid = spectrum_grid();
            let tables = SNRSTA_GAINS
                .iter()
                .enumerate()
                .map(|(k, &g)| {
                    let p = base.with_gain(g);
                    let c = Spectrum::sample(&grid, |w| stationary_snr(w, &force, tm, &p));
                    curve_table(format!("snrsta_{k}.csv"), "omega", &c.grid, &c.values, format!("g = {}", label(g)), &p)
                        .note("force", "impulse, flat unit transform")
                        .note("gamma_m_T_m", 1.0)
                })
                .collect();
            let plot = Plot {
                title: "stationary SNR, cold damping".into(),
                xlabel: "omega / omega_m",
                ylabel: "SNR per unit force",
                logx: false,
                logy: true,
            };
            (tables, plot)
        }
        Figure::Nonstatm => {
            let p = nonstatm_params();
            let cases: Vec<_> = NONSTATM_GAMMA_TM
                .iter()
                .map(|&gt| (p, gt, format!("gamma_m T_m = {}", label(gt))))
                .collect();
            let plot = Plot {
                title: "nonstationary noise spectrum vs measurement time".into(),
                xlabel: "omega / omega_m",
                ylabel: "N^2(omega)",
                logx: false,
                logy: true,
            };
            (nonstationary_curves("nonstatm", &cases)?, plot)
        }
        Figure::NonstagA | Figure::NonstagB => {
            let (gt, prefix) = if figure == Figure::NonstagA {
                (NONSTAG_A_GAMMA_TM, "nonstag_a")
            } else {
                (NONSTAG_B_GAMMA_TM, "nonstag_b")
            };
            let p = nonstatm_params();
            let cases: Vec<_> = NONSTAG_GAINS
                .iter()
                .map(|&g| (p.with_gain(g), gt, format!("g = {}", label(g))))
                .collect();
            let plot = Plot {
                title: format!("nonstationary noise spectrum vs gain, gamma_m T_m = {}", label(gt)),
                xlabel: "omega / omega_m",
                ylabel: "N^2(omega)",
                logx: false,
                logy: true,
            };
            (nonstationary_curves(prefix, &cases)?, plot)
        }
        Figure::SnrnontotA => {
            let cooled = snrnontot_params();
            let open = cooled.without_feedback();
            let pulse = snrnontot_pulse(&cooled);
            let grid = resonance_grid();
            let cases = [
                (cooled, SNRNONTOT_SHORT_GAMMA_TM, "cooled, g = 2e3"),
                (open, SNRNONTOT_SHORT_GAMMA_TM, "no feedback"),
                (open, SNRNONTOT_LONG_GAMMA_TM, "no feedback, long measurement"),
            ];
            let mut tables = Vec::new();
            for (k, (p, gt, name)) in cases.iter().enumerate() {
                let tm = p.time_from_damping_units(*gt);
                let run = CoolAndMeasure::prepare(p)?;
                let c = SnrCurve::try_sample(&grid, |w| run.snr(w, &pulse, tm).map_err(numerical(w)))?;
                tables.push(
                    curve_table(
                        format!("snrnontot_a_{k}.csv"),
                        "omega",
                        &c.grid,
                        &c.values,
                        format!("{name}, gamma_m T_m = {}", label(*gt)),
                        p,
                    )
                    .note("gamma_m_T_m", gt),
                );
            }
            let plot = Plot {
                title: "cool-and-measure SNR".into(),
                xlabel: "omega / omega_m",
                ylabel: "SNR per unit force",
                logx: false,
                logy: true,
            };
            (tables, plot)
        }
        Figure::SnrnontotB => {
            let cooled = snrnontot_params();
            let open = cooled.without_feedback();
            let pulse = snrnontot_pulse(&cooled);
            let times = FrequencyGrid::log(1e-4, 10.0, 26).frequencies().unwrap();
            let mut tables = Vec::new();
            for (k, (p, name)) in [(cooled, "cooled, g = 2e3"), (open, "no feedback")].iter().enumerate() {
                let run = CoolAndMeasure::prepare(p)?;
                let c = SnrCurve::try_sample(&times, |gt| {
                    run.snr(1.0, &pulse, p.time_from_damping_units(gt)).map_err(numerical(1.0))
                })?;
                tables.push(curve_table(
                    format!("snrnontot_b_{k}.csv"),
                    "gamma_m_T_m",
                    &c.grid,
                    &c.values,
                    name.to_string(),
                    p,
                ).note("omega", 1.0));
            }
            let plot = Plot {
                title: "SNR at resonance vs measurement time".into(),
                xlabel: "gamma_m T_m",
                ylabel: "SNR per unit force",
                logx: true,
                logy: true,
            };
            (tables, plot)
        }
        Figure::Snrme2 => {
            let cooled = snrnontot_params();
            let open = cooled.without_feedback();
            let pulse = snrnontot_pulse(&cooled);
            let cycle = snrme2_window(&cooled);
            let plain = MeasurementWindow {
                cooling_time: 0.0,
                ..cycle
            };
            let grid = resonance_grid();
            let mut tables = Vec::new();
            for (k, (p, window, name)) in [
                (cooled, cycle, "cyclic cooling, g = 2e3"),
                (open, plain, "no feedback"),
            ]
            .iter()
            .enumerate()
            {
                let run = CoolAndMeasure::prepare(p)?;
                let c = SnrCurve::try_sample(&grid, |w| {
                    run.averaged_snr(w, &pulse, window).map_err(|e| match e {
                        SnrError::Quadrature(source) => CliError::Numerical { omega: w, source },
                        other => CliError::Window(other),
                    })
                })?;
                tables.push(
                    curve_table(format!("snrme2_{k}.csv"), "omega", &c.grid, &c.values, name.to_string(), p)
                        .note("measurement_time", window.duration)
                        .note("cooling_time", window.cooling_time),
                );
            }
            let plot = Plot {
                title: "time-averaged SNR, gamma_m T_m = 1e-3".into(),
                xlabel: "omega / omega_m",
                ylabel: "averaged SNR per unit force",
                logx: false,
                logy: true,
            };
            (tables, plot)
        }
    };
    let mut summary = Vec::new();
    if figure == Figure::Snrme2 {
        let at = |t: &Table| {
            t.rows
                .iter()
                .min_by(|a, b| (a[0] - 1.0).abs().total_cmp(&(b[0] - 1.0).abs()))
                .map_or(f64::NAN, |r| r[1])
        };
        summary.push(format!(
            "resonance ratio cycled/baseline: {:.3} (reference {})",
            at(&tables[0]) / at(&tables[1]),
            figures::SNRME2_HEADLINE_RATIO
        ));
    }
    let script = plot_script(&plot, &tables);
    Ok(RunOutput {
        tables,
        files: vec![("plot.gp".to_string(), script)],
        summary,
        max_abs_z: None,
    })
}
