//! Time-domain stochastic simulation of the classical mirror dynamics with
//! feedback, used to cross-check the analytic spectra.
//!
//! The state is (Q, P, y). For momentum feedback y is unused and the loop
//! noise drives Q directly. For cold damping the differentiated loop noise is
//! realized as ẏ with ẏ = ω_c(ξ − y), which has density S ω²ω_c²/(ω²+ω_c²)
//! and is flat to 0.25% below ω = 1 for ω_c = 20. Each step applies the exact
//! propagator and exact Gaussian increment of the linear system, obtained
//! from a Van Loan matrix exponential.
//!
//! Noise intensities (two-sided, ⟨ξ(t)ξ(t′)⟩ = S δ(t−t′)):
//!
//! | channel            | momentum feedback | cold damping           |
//! |--------------------|-------------------|------------------------|
//! | thermal + back-action on P | γ(kT + ζ/4) | γ(kT + ζ/4)           |
//! | loop noise         | γg²/4ηζ on Q      | γg²/4ηζ, shaped, on P  |
//! | detection          | 1/(4ηζγ), white   | 1/(4ηζγ), white        |

use nalgebra::{Matrix3, SMatrix, SymmetricEigen, Vector3};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::params::{ModelParams, Scheme};
use crate::quadrature::QuadratureError;
use crate::spectra::{
    nonstationary_spectrum, shot_noise_floor, stationary_spectrum, stationary_variances, Spectrum,
    StationaryState,
};

/// Corner frequency of the shaping state for the cold-damping loop noise.
pub const SHAPING_CORNER: f64 = 20.0;

/// Upper bound on dt and on dt·γ_m(1+g).
pub const MAX_STEP: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("time step {dt} violates the stability bound: dt and dt·γ_m(1+g) must stay below {limit} (dt·γ_m(1+g) = {scaled})")]
    UnstableStep { dt: f64, scaled: f64, limit: f64 },
    #[error("ensemble size must be at least 1")]
    EmptyEnsemble,
    #[error("trajectory length must be at least 2 steps, got {0}")]
    TooFewSteps(usize),
    #[error("band layout [{min}, {max}] with {count} bands is invalid")]
    InvalidBands { min: f64, max: f64, count: usize },
    #[error("band [{lower}, {upper}] contains no periodogram bin; use more steps or wider bands")]
    EmptyBand { lower: f64, upper: f64 },
    #[error("measurement time must be positive and finite, got {0}")]
    InvalidMeasurementTime(f64),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

/// Window applied to each trajectory before transforming.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PeriodogramWindow {
    Rectangular,
    /// θ(t) e^{−t/2T_m}.
    Exponential { measurement_time: f64 },
}

/// Contiguous frequency bands over which periodogram bins are averaged.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandSpec {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl BandSpec {
    fn validate(&self) -> Result<(), OracleError> {
        if self.count == 0 || !(self.min.is_finite() && self.max.is_finite() && self.min < self.max) {
            return Err(OracleError::InvalidBands {
                min: self.min,
                max: self.max,
                count: self.count,
            });
        }
        Ok(())
    }

    pub fn edges(&self, k: usize) -> (f64, f64) {
        let w = (self.max - self.min) / self.count as f64;
        let upper = if k + 1 == self.count {
            self.max
        } else {
            self.min + w * (k + 1) as f64
        };
        (self.min + w * k as f64, upper)
    }

    pub fn center(&self, k: usize) -> f64 {
        let (a, b) = self.edges(k);
        0.5 * (a + b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    pub params: ModelParams,
    pub dt: f64,
    pub steps: usize,
    pub ensemble: usize,
    pub seed: u64,
    pub window: PeriodogramWindow,
    pub bands: BandSpec,
}

impl OracleConfig {
    pub const DEFAULT_STEPS: usize = 1 << 20;
    pub const DEFAULT_ENSEMBLE: usize = 256;

    /// Desk-scale defaults: 256 trajectories of 2²⁰ steps, eight bands over
    /// [0.8, 1.2].
    pub fn new(params: ModelParams, seed: u64) -> Self {
        Self {
            params,
            dt: default_step(&params),
            steps: Self::DEFAULT_STEPS,
            ensemble: Self::DEFAULT_ENSEMBLE,
            seed,
            window: PeriodogramWindow::Rectangular,
            bands: BandSpec {
                min: 0.8,
                max: 1.2,
                count: 8,
            },
        }
    }

    pub fn validate(&self) -> Result<(), OracleError> {
        check_step(self.dt, &self.params)?;
        if self.ensemble == 0 {
            return Err(OracleError::EmptyEnsemble);
        }
        if self.steps < 2 {
            return Err(OracleError::TooFewSteps(self.steps));
        }
        if let PeriodogramWindow::Exponential { measurement_time } = self.window {
            if !(measurement_time > 0.0 && measurement_time.is_finite()) {
                return Err(OracleError::InvalidMeasurementTime(measurement_time));
            }
        }
        self.bands.validate()
    }

    /// Spacing of the periodogram bins.
    pub fn resolution(&self) -> f64 {
        2.0 * std::f64::consts::PI / (self.steps as f64 * self.dt)
    }
}

/// min(0.02, 0.02/(γ_m(1+g))).
pub fn default_step(params: &ModelParams) -> f64 {
    0.02f64.min(0.02 / params.effective_damping())
}

pub fn check_step(dt: f64, params: &ModelParams) -> Result<(), OracleError> {
    let scaled = dt * params.effective_damping();
    if !(dt > 0.0 && dt < MAX_STEP && scaled < MAX_STEP) {
        return Err(OracleError::UnstableStep {
            dt,
            scaled,
            limit: MAX_STEP,
        });
    }
    Ok(())
}

/// dX = A X dt + dW with ⟨dW dWᵀ⟩ = D dt.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearSde {
    pub drift: Matrix3<f64>,
    pub diffusion: Matrix3<f64>,
}

impl LinearSde {
    /// High-temperature dynamics of the mirror with the loop as set in `params`.
    pub fn mirror(params: &ModelParams) -> Self {
        let gamma = params.mechanical_damping();
        let g = params.active_gain();
        let force = gamma * (params.temperature + 0.25 * params.input_power);
        let loop_noise =
            gamma * g * g / (4.0 * params.detection_efficiency * params.input_power);
        let wc = SHAPING_CORNER;
        match params.scheme {
            Scheme::MomentumFeedback => Self {
                drift: Matrix3::new(-gamma * g, 1.0, 0.0, -1.0, -gamma, 0.0, 0.0, 0.0, -wc),
                diffusion: Matrix3::new(loop_noise, 0.0, 0.0, 0.0, force, 0.0, 0.0, 0.0, 0.0),
            },
            Scheme::ColdDamping | Scheme::NoFeedback => {
                let s = wc * wc * loop_noise;
                Self {
                    drift: Matrix3::new(
                        0.0,
                        1.0,
                        0.0,
                        -1.0,
                        -gamma * (1.0 + g),
                        -wc,
                        0.0,
                        0.0,
                        -wc,
                    ),
                    diffusion: Matrix3::new(0.0, 0.0, 0.0, 0.0, force + s, s, 0.0, s, s),
                }
            }
        }
    }

    /// Exact one-step transition matrix and increment covariance.
    pub fn discretize(&self, dt: f64) -> Propagator {
        let mut m = SMatrix::<f64, 6, 6>::zeros();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&(-self.drift * dt));
        m.fixed_view_mut::<3, 3>(0, 3).copy_from(&(self.diffusion * dt));
        m.fixed_view_mut::<3, 3>(3, 3).copy_from(&(self.drift.transpose() * dt));
        let e = m.exp();
        let transition: Matrix3<f64> = e.fixed_view::<3, 3>(3, 3).transpose();
        let g: Matrix3<f64> = e.fixed_view::<3, 3>(0, 3).into_owned();
        let cov = transition * g;
        let cov = 0.5 * (cov + cov.transpose());
        Propagator {
            transition,
            noise_factor: psd_sqrt(&cov),
            increment_cov: cov,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Propagator {
    pub transition: Matrix3<f64>,
    pub increment_cov: Matrix3<f64>,
    pub noise_factor: Matrix3<f64>,
}

impl Propagator {
    /// Stationary covariance of the discrete chain, S = ΦSΦᵀ + Q_d, by doubling.
    pub fn stationary_covariance(&self) -> Matrix3<f64> {
        let mut s = self.increment_cov;
        let mut p = self.transition;
        for _ in 0..80 {
            s += p * s * p.transpose();
            p = p * p;
            if p.amax() < 1e-18 {
                break;
            }
        }
        0.5 * (s + s.transpose())
    }

    pub fn step(&self, x: &Vector3<f64>, rng: &mut ChaCha8Rng) -> Vector3<f64> {
        self.transition * x + self.noise_factor * standard_normals(rng)
    }
}

/// Symmetric square root L Lᵀ = C of a positive semidefinite matrix; tiny
/// negative eigenvalues from rounding are clamped.
fn psd_sqrt(c: &Matrix3<f64>) -> Matrix3<f64> {
    let eig = SymmetricEigen::new(*c);
    let roots = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    eig.eigenvectors * Matrix3::from_diagonal(&roots)
}

fn standard_normals(rng: &mut ChaCha8Rng) -> Vector3<f64> {
    Vector3::new(
        StandardNormal.sample(rng),
        StandardNormal.sample(rng),
        StandardNormal.sample(rng),
    )
}

fn trajectory_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Ensemble mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
}

impl Estimate {
    pub fn from_samples(samples: &[f64]) -> Self {
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let var = if samples.len() > 1 {
            samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            mean * mean
        };
        let std_error = (var / n).sqrt().max(f64::MIN_POSITIVE);
        Self { mean, std_error }
    }

    pub fn z_score(&self, reference: f64) -> f64 {
        z_score(self.mean, self.std_error, reference)
    }
}

pub fn z_score(estimate: f64, std_error: f64, reference: f64) -> f64 {
    (estimate - reference) / std_error
}

/// Stationary ensemble estimate: band-averaged periodogram of the detected
/// position and time-averaged variances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleRun {
    pub config: OracleConfig,
    pub spectrum: Spectrum,
    pub std_errors: Vec<f64>,
    pub bins_per_band: Vec<usize>,
    pub q_var: Estimate,
    pub p_var: Estimate,
}

impl OracleRun {
    pub fn band(&self, k: usize) -> Estimate {
        Estimate {
            mean: self.spectrum.values[k],
            std_error: self.std_errors[k],
        }
    }

    /// Frequencies of the periodogram bins falling into band `k`.
    pub fn bin_frequencies(&self, k: usize) -> Vec<f64> {
        let (lo, hi) = self.config.bands.edges(k);
        let res = self.config.resolution();
        band_bins(lo, hi, res).map(|j| j as f64 * res).collect()
    }

    /// Reference spectrum averaged over the same bins as each band.
    pub fn band_reference(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        (0..self.spectrum.values.len())
            .map(|k| {
                let w = self.bin_frequencies(k);
                w.iter().map(|&x| f(x)).sum::<f64>() / w.len() as f64
            })
            .collect()
    }

    /// Comparison with the analytic detected spectrum.
    pub fn compare_with_stationary(&self) -> Comparison {
        let params = self.config.params;
        let reference = self.band_reference(|w| stationary_spectrum(w, &params));
        Comparison::new(&self.spectrum, &self.std_errors, reference)
    }
}

/// Per-bin comparison of an estimate against a reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub frequencies: Vec<f64>,
    pub reference: Vec<f64>,
    pub z_scores: Vec<f64>,
}

impl Comparison {
    pub fn new(estimate: &Spectrum, std_errors: &[f64], reference: Vec<f64>) -> Self {
        let z_scores = estimate
            .values
            .iter()
            .zip(std_errors)
            .zip(&reference)
            .map(|((m, s), r)| z_score(*m, *s, *r))
            .collect();
        Self {
            frequencies: estimate.grid.clone(),
            reference,
            z_scores,
        }
    }

    pub fn max_abs_z(&self) -> f64 {
        self.z_scores.iter().fold(0.0, |a, z| a.max(z.abs()))
    }
}

/// Indices j with lo ≤ j·res < hi (negative j are negative frequencies).
fn band_bins(lo: f64, hi: f64, res: f64) -> std::ops::Range<i64> {
    let first = (lo / res).ceil() as i64;
    let mut last = (hi / res).ceil() as i64;
    if (last as f64) * res < hi {
        last += 1;
    }
    while last > first && (last - 1) as f64 * res >= hi {
        last -= 1;
    }
    first..last
}

fn window_weights(window: PeriodogramWindow, dt: f64, steps: usize) -> Vec<f64> {
    match window {
        PeriodogramWindow::Rectangular => vec![1.0; steps],
        PeriodogramWindow::Exponential { measurement_time } => (0..steps)
            .map(|n| (-0.5 * n as f64 * dt / measurement_time).exp())
            .collect(),
    }
}

struct TrajectoryStats {
    bands: Vec<f64>,
    q_var: f64,
    p_var: f64,
}

/// Stationary ensemble: each trajectory starts from the stationary law of the
/// discretized chain, so no burn-in is needed.
///
/// The periodogram of a finite record is the spectrum smoothed by the window
/// kernel. With the rectangular window the leakage off a resonance of width
/// Γ = γ_m(1+g) is of relative order 1/(Γ·N·dt) times the peak contrast, so
/// records should be long against 1/Γ.
pub fn simulate(config: &OracleConfig) -> Result<OracleRun, OracleError> {
    config.validate()?;
    let params = config.params;
    let dt = config.dt;
    let n = config.steps;
    let res = config.resolution();
    let nyquist = std::f64::consts::PI / dt;

    let bands: Vec<std::ops::Range<i64>> = (0..config.bands.count)
        .map(|k| {
            let (lo, hi) = config.bands.edges(k);
            let r = band_bins(lo, hi, res);
            if r.is_empty() || lo < -nyquist || hi > nyquist {
                Err(OracleError::EmptyBand { lower: lo, upper: hi })
            } else {
                Ok(r)
            }
        })
        .collect::<Result<_, _>>()?;

    let sde = LinearSde::mirror(&params);
    let prop = sde.discretize(dt);
    let start = psd_sqrt(&prop.stationary_covariance());
    let shot_sd = (shot_noise_floor(&params) / dt).sqrt();
    let weights = window_weights(config.window, dt, n);
    let norm = dt * dt / (weights.iter().map(|w| w * w).sum::<f64>() * dt);
    let fft = FftPlanner::<f64>::new().plan_fft_forward(n);

    let stats: Vec<TrajectoryStats> = (0..config.ensemble)
        .into_par_iter()
        .map(|i| {
            let mut rng = trajectory_rng(config.seed, i);
            let mut x = start * standard_normals(&mut rng);
            let mut buf = Vec::with_capacity(n);
            let (mut qq, mut pp) = (0.0, 0.0);
            for w in &weights {
                qq += x[0] * x[0];
                pp += x[1] * x[1];
                let shot: f64 = StandardNormal.sample(&mut rng);
                buf.push(Complex64::new(w * (x[0] + shot_sd * shot), 0.0));
                x = prop.step(&x, &mut rng);
            }
            fft.process(&mut buf);
            let bands = bands
                .iter()
                .map(|r| {
                    let sum: f64 = r
                        .clone()
                        .map(|j| buf[j.rem_euclid(n as i64) as usize].norm_sqr())
                        .sum();
                    norm * sum / r.clone().count() as f64
                })
                .collect();
            TrajectoryStats {
                bands,
                q_var: qq / n as f64,
                p_var: pp / n as f64,
            }
        })
        .collect();

    let count = config.bands.count;
    let mut values = Vec::with_capacity(count);
    let mut std_errors = Vec::with_capacity(count);
    for k in 0..count {
        let samples: Vec<f64> = stats.iter().map(|s| s.bands[k]).collect();
        let e = Estimate::from_samples(&samples);
        values.push(e.mean);
        std_errors.push(e.std_error);
    }
    let q: Vec<f64> = stats.iter().map(|s| s.q_var).collect();
    let p: Vec<f64> = stats.iter().map(|s| s.p_var).collect();
    Ok(OracleRun {
        config: *config,
        spectrum: Spectrum {
            grid: (0..count).map(|k| config.bands.center(k)).collect(),
            values,
        },
        std_errors,
        bins_per_band: bands.iter().map(|r| r.clone().count()).collect(),
        q_var: Estimate::from_samples(&q),
        p_var: Estimate::from_samples(&p),
    })
}

/// Monte-Carlo cool-and-measure measurement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonstationaryRun {
    pub measurement_time: f64,
    pub initial: StationaryState,
    pub spectrum: Spectrum,
    pub std_errors: Vec<f64>,
}

impl NonstationaryRun {
    pub fn band(&self, k: usize) -> Estimate {
        Estimate {
            mean: self.spectrum.values[k],
            std_error: self.std_errors[k],
        }
    }

    pub fn compare_with_analytic(&self, params: &ModelParams) -> Comparison {
        let reference = self
            .spectrum
            .grid
            .iter()
            .map(|&w| nonstationary_spectrum(w, self.measurement_time, &self.initial, params))
            .collect();
        Comparison::new(&self.spectrum, &self.std_errors, reference)
    }
}

/// Draws (Q, P) from the stationary Gaussian with the loop closed, evolves
/// with the loop open for 40 T_m, applies θ(t)e^{−t/2T_m} and returns
/// |∫dt F x e^{−iωt}|²/T_m averaged over the ensemble at each requested ω.
/// `config.steps`, `config.window` and `config.bands` are not used.
pub fn nonstationary_ensemble(
    config: &OracleConfig,
    measurement_time: f64,
    frequencies: &[f64],
) -> Result<NonstationaryRun, OracleError> {
    if !(measurement_time > 0.0 && measurement_time.is_finite()) {
        return Err(OracleError::InvalidMeasurementTime(measurement_time));
    }
    check_step(config.dt, &config.params)?;
    if config.ensemble == 0 {
        return Err(OracleError::EmptyEnsemble);
    }
    let initial = stationary_variances(&config.params)?;
    let open = config.params.without_feedback();
    let dt = config.dt;
    let n = (40.0 * measurement_time / dt).ceil() as usize + 1;
    let prop = LinearSde::mirror(&open).discretize(dt);
    let start = psd_sqrt(&Matrix3::new(
        initial.q_var,
        initial.qp_sym,
        0.0,
        initial.qp_sym,
        initial.p_var,
        0.0,
        0.0,
        0.0,
        0.0,
    ));
    let shot_sd = (shot_noise_floor(&open) / dt).sqrt();
    let weights: Vec<f64> = (0..n)
        .map(|j| {
            let w = (-0.5 * j as f64 * dt / measurement_time).exp();
            if j == 0 {
                0.5 * w
            } else {
                w
            }
        })
        .collect();
    let phases: Vec<Complex64> = frequencies
        .iter()
        .map(|&w| Complex64::from_polar(1.0, -w * dt))
        .collect();

    let samples: Vec<Vec<f64>> = (0..config.ensemble)
        .into_par_iter()
        .map(|i| {
            let mut rng = trajectory_rng(config.seed, i);
            let mut x = start * standard_normals(&mut rng);
            let mut acc = vec![Complex64::new(0.0, 0.0); frequencies.len()];
            let mut rot = vec![Complex64::new(1.0, 0.0); frequencies.len()];
            for (j, w) in weights.iter().enumerate() {
                let shot: f64 = StandardNormal.sample(&mut rng);
                let v = w * (x[0] + shot_sd * shot);
                for (k, a) in acc.iter_mut().enumerate() {
                    *a += v * rot[k];
                    rot[k] *= phases[k];
                    if j % 1024 == 1023 {
                        rot[k] = Complex64::from_polar(1.0, -frequencies[k] * (j + 1) as f64 * dt);
                    }
                }
                x = prop.step(&x, &mut rng);
            }
            acc.iter()
                .map(|a| (a * dt).norm_sqr() / measurement_time)
                .collect()
        })
        .collect();

    let mut values = Vec::with_capacity(frequencies.len());
    let mut std_errors = Vec::with_capacity(frequencies.len());
    for k in 0..frequencies.len() {
        let col: Vec<f64> = samples.iter().map(|s| s[k]).collect();
        let e = Estimate::from_samples(&col);
        values.push(e.mean);
        std_errors.push(e.std_error);
    }
    Ok(NonstationaryRun {
        measurement_time,
        initial,
        spectrum: Spectrum {
            grid: frequencies.to_vec(),
            values,
        },
        std_errors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::figures;

    fn small(scheme: Scheme, gain: f64) -> ModelParams {
        ModelParams {
            quality_factor: 20.0,
            input_power: 2.0,
            gain,
            scheme,
            detection_efficiency: 0.8,
            temperature: 50.0,
            cutoff: 100.0,
        }
    }

    // records long against 1/γ(1+g) keep the rectangular-window leakage
    // well below the statistical error
    fn quick(params: ModelParams, seed: u64) -> OracleConfig {
        OracleConfig {
            steps: 1 << 16,
            ensemble: 16,
            bands: BandSpec {
                min: 0.5,
                max: 1.5,
                count: 5,
            },
            ..OracleConfig::new(params, seed)
        }
    }

    #[test]
    fn zero_noise_trajectory_is_damped_cosine() {
        let p = small(Scheme::NoFeedback, 0.0);
        let gamma = p.mechanical_damping();
        let sde = LinearSde {
            diffusion: Matrix3::zeros(),
            ..LinearSde::mirror(&p)
        };
        let dt = 0.01;
        let prop = sde.discretize(dt);
        assert_eq!(prop.noise_factor, Matrix3::zeros());
        let wd = (1.0 - 0.25 * gamma * gamma).sqrt();
        let mut x = Vector3::new(1.0, 0.0, 0.0);
        let steps = (20.0 * std::f64::consts::PI / dt) as usize;
        for k in 1..=steps {
            x = prop.transition * x;
            let t = k as f64 * dt;
            let exact = (-0.5 * gamma * t).exp() * ((wd * t).cos() + 0.5 * gamma / wd * (wd * t).sin());
            assert!(
                (x[0] - exact).abs() <= 1e-8 * exact.abs().max(1e-2),
                "t={t}: {} vs {exact}",
                x[0]
            );
        }
    }

    #[test]
    fn discrete_stationary_covariance_matches_lyapunov() {
        for scheme in [Scheme::ColdDamping, Scheme::MomentumFeedback] {
            let p = small(scheme, 3.0);
            let sde = LinearSde::mirror(&p);
            let s = sde.discretize(0.02).stationary_covariance();
            let residual = sde.drift * s + s * sde.drift.transpose() + sde.diffusion;
            assert!(residual.amax() < 1e-8 * s.amax(), "{scheme:?}: {residual}");
        }
    }

    #[test]
    fn thermal_equipartition() {
        let p = ModelParams {
            input_power: 1e-6,
            ..small(Scheme::NoFeedback, 0.0)
        };
        let cfg = OracleConfig {
            ensemble: 32,
            ..quick(p, 3)
        };
        let run = simulate(&cfg).unwrap();
        let expected = 0.5 * p.temperature;
        assert!(run.q_var.z_score(expected).abs() < 3.0, "{:?}", run.q_var);
        assert!(run.p_var.z_score(expected).abs() < 3.0, "{:?}", run.p_var);
    }

    #[test]
    fn periodogram_matches_analytic_small_system() {
        for scheme in [Scheme::ColdDamping, Scheme::MomentumFeedback] {
            let run = simulate(&quick(small(scheme, 2.0), 11)).unwrap();
            let cmp = run.compare_with_stationary();
            assert!(cmp.max_abs_z() < 3.5, "{scheme:?}: {:?}", cmp.z_scores);
        }
    }

    #[test]
    fn identical_seed_is_bit_identical() {
        let cfg = OracleConfig {
            steps: 1 << 12,
            ensemble: 8,
            ..quick(small(Scheme::ColdDamping, 2.0), 42)
        };
        assert_eq!(simulate(&cfg).unwrap(), simulate(&cfg).unwrap());
    }

    #[test]
    fn seed_swap_is_statistically_consistent() {
        let a = simulate(&quick(small(Scheme::ColdDamping, 2.0), 1)).unwrap();
        let b = simulate(&quick(small(Scheme::ColdDamping, 2.0), 2)).unwrap();
        assert_ne!(a.spectrum, b.spectrum);
        for k in 0..a.spectrum.values.len() {
            let pooled = a.std_errors[k].hypot(b.std_errors[k]);
            assert!((a.spectrum.values[k] - b.spectrum.values[k]).abs() < 3.0 * pooled);
        }
    }

    #[test]
    fn halving_dt_is_unbiased() {
        let base = quick(small(Scheme::ColdDamping, 2.0), 5);
        let fine = OracleConfig {
            dt: 0.5 * base.dt,
            steps: 2 * base.steps,
            seed: 6,
            ..base
        };
        let a = simulate(&base).unwrap();
        let b = simulate(&fine).unwrap();
        for k in 0..a.spectrum.values.len() {
            let pooled = a.std_errors[k].hypot(b.std_errors[k]);
            assert!((a.spectrum.values[k] - b.spectrum.values[k]).abs() < 3.0 * pooled);
        }
    }

    #[test]
    fn estimate_is_even() {
        let base = quick(small(Scheme::MomentumFeedback, 2.0), 9);
        let neg = OracleConfig {
            bands: BandSpec {
                min: -1.5,
                max: -0.5,
                count: 5,
            },
            ..base
        };
        let a = simulate(&base).unwrap();
        let b = simulate(&neg).unwrap();
        for k in 0..5 {
            let m = 4 - k;
            assert!((a.spectrum.values[k] - b.spectrum.values[m]).abs() < 3.0 * a.std_errors[k]);
        }
    }

    #[test]
    fn unstable_step_rejected() {
        let p = figures::nonstatm_params();
        let cfg = OracleConfig {
            dt: 0.6,
            ..OracleConfig::new(p, 0)
        };
        assert!(matches!(simulate(&cfg), Err(OracleError::UnstableStep { .. })));
        let cfg = OracleConfig {
            dt: 0.04,
            ..OracleConfig::new(p.with_gain(2e4), 0)
        };
        assert!(matches!(cfg.validate(), Err(OracleError::UnstableStep { .. })));
        assert!(check_step(default_step(&p.with_gain(1e5)), &p.with_gain(1e5)).is_ok());
    }

    #[test]
    fn band_bins_half_open() {
        let r = band_bins(1.0, 2.0, 0.25);
        assert_eq!(r, 4..8);
        let r = band_bins(-2.0, -1.0, 0.25);
        assert_eq!(r, -8..-4);
        let r = band_bins(0.1, 0.2, 0.25);
        assert!(r.is_empty());
    }

    #[test]
    fn nonstationary_uncooled_start_matches_analytic() {
        let p = small(Scheme::NoFeedback, 0.0);
        let cfg = OracleConfig {
            ensemble: 128,
            ..OracleConfig::new(p, 4)
        };
        let tm = 100.0;
        let w = [0.9, 1.0, 1.1];
        let run = nonstationary_ensemble(&cfg, tm, &w).unwrap();
        let cmp = run.compare_with_analytic(&p);
        assert!(cmp.max_abs_z() < 3.5, "{:?}", cmp.z_scores);
    }

    #[test]
    fn nonstationary_cooled_start_matches_analytic() {
        for scheme in [Scheme::ColdDamping, Scheme::MomentumFeedback] {
            let p = small(scheme, 10.0);
            let cfg = OracleConfig {
                ensemble: 128,
                ..OracleConfig::new(p, 8)
            };
            let run = nonstationary_ensemble(&cfg, 2.0, &[0.0, 0.7, 1.0, 1.3]).unwrap();
            let cmp = run.compare_with_analytic(&p);
            assert!(cmp.max_abs_z() < 3.5, "{scheme:?}: {:?}", cmp.z_scores);
        }
    }
}
