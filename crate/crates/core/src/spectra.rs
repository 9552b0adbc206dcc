//! Position-noise spectra: stationary, detected and nonstationary.
//!
//! All spectra are two-sided densities in the rescaled position units in
//! which the homodyne shot-noise floor reads 1/(4ηζγ_m).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::params::{ModelParams, Scheme};
use crate::quadrature::{integrate, peak_breakpoints, QuadratureError, Tolerance};
use crate::response::{chi, chi0_shifted};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("frequency grid has no points")]
    EmptyGrid,
    #[error("frequency grid bounds [{0}, {1}] are not ordered and finite")]
    InvalidBounds(f64, f64),
    #[error("logarithmic grid needs a positive lower bound, got {0}")]
    NonPositiveLogBound(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    Linear,
    Log,
}

/// Frequency grid (ω_min, ω_max, points, spacing).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyGrid {
    pub min: f64,
    pub max: f64,
    pub points: usize,
    pub spacing: Spacing,
}

impl FrequencyGrid {
    pub fn linear(min: f64, max: f64, points: usize) -> Self {
        Self {
            min,
            max,
            points,
            spacing: Spacing::Linear,
        }
    }

    pub fn log(min: f64, max: f64, points: usize) -> Self {
        Self {
            min,
            max,
            points,
            spacing: Spacing::Log,
        }
    }

    /// Strictly increasing abscissae.
    pub fn frequencies(&self) -> Result<Vec<f64>, GridError> {
        if self.points == 0 {
            return Err(GridError::EmptyGrid);
        }
        let ordered = if self.points == 1 {
            self.min <= self.max
        } else {
            self.min < self.max
        };
        if !(self.min.is_finite() && self.max.is_finite() && ordered) {
            return Err(GridError::InvalidBounds(self.min, self.max));
        }
        if self.points == 1 {
            return Ok(vec![self.min]);
        }
        let n = (self.points - 1) as f64;
        let values = match self.spacing {
            Spacing::Linear => (0..self.points)
                .map(|k| {
                    if k + 1 == self.points {
                        self.max
                    } else {
                        self.min + (self.max - self.min) * k as f64 / n
                    }
                })
                .collect(),
            Spacing::Log => {
                if self.min <= 0.0 {
                    return Err(GridError::NonPositiveLogBound(self.min));
                }
                let (a, b) = (self.min.ln(), self.max.ln());
                (0..self.points)
                    .map(|k| {
                        if k + 1 == self.points {
                            self.max
                        } else {
                            (a + (b - a) * k as f64 / n).exp()
                        }
                    })
                    .collect()
            }
        };
        Ok(values)
    }
}

/// Sampled real spectral density on an increasing grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
}

impl Spectrum {
    pub fn sample(grid: &[f64], f: impl Fn(f64) -> f64 + Sync) -> Self {
        use rayon::prelude::*;
        let values = grid.par_iter().map(|&w| f(w)).collect();
        Self {
            grid: grid.to_vec(),
            values,
        }
    }

    pub fn try_sample<E: Send>(
        grid: &[f64],
        f: impl Fn(f64) -> Result<f64, E> + Sync,
    ) -> Result<Self, E> {
        use rayon::prelude::*;
        let values = grid.par_iter().map(|&w| f(w)).collect::<Result<_, _>>()?;
        Ok(Self {
            grid: grid.to_vec(),
            values,
        })
    }

    pub fn is_valid(&self) -> bool {
        self.grid.len() == self.values.len()
            && self.grid.windows(2).all(|w| w[0] < w[1])
            && self.values.iter().all(|v| *v >= 0.0 && v.is_finite())
    }
}

/// (ω/2) coth(ω/2T) with T = k_BT/ħω_m, including the ω → 0 and T → 0 limits.
pub fn thermal_factor(omega: f64, temperature: f64) -> f64 {
    if temperature == 0.0 {
        return 0.5 * omega.abs();
    }
    let x = omega / (2.0 * temperature);
    if x.abs() < 1e-4 {
        temperature * (1.0 + x * x / 3.0)
    } else {
        0.5 * omega / x.tanh()
    }
}

/// Homodyne shot-noise floor 1/(4ηζγ_m).
pub fn shot_noise_floor(params: &ModelParams) -> f64 {
    1.0 / (4.0 * params.detection_efficiency * params.input_power * params.mechanical_damping())
}

/// Force noise acting on the momentum: back-action plus Brownian,
/// γ_m[ζ/4 + (ω/2)coth(ω/2T)].
fn momentum_force_noise(omega: f64, params: &ModelParams) -> f64 {
    params.mechanical_damping()
        * (0.25 * params.input_power + thermal_factor(omega, params.temperature))
}

/// Loop-noise strength γ_m g²/(4ηζ); the white density of the momentum-feedback
/// noise and the ω² coefficient of the cold-damping noise.
fn feedback_noise_strength(params: &ModelParams) -> f64 {
    let g = params.active_gain();
    params.mechanical_damping() * g * g
        / (4.0 * params.detection_efficiency * params.input_power)
}

/// Undetected position spectrum N²_Q(ω) with the in-band feedback transfer
/// functions (G̃_mf = 1, G̃_cd = iω) and no reservoir gate.
pub fn position_spectrum(omega: f64, params: &ModelParams) -> f64 {
    let gamma = params.mechanical_damping();
    let feedback = feedback_noise_strength(params);
    let loop_term = match params.scheme {
        Scheme::MomentumFeedback => feedback * (omega * omega + gamma * gamma),
        Scheme::ColdDamping | Scheme::NoFeedback => feedback * omega * omega,
    };
    chi(omega, params).norm_sqr() * (momentum_force_noise(omega, params) + loop_term)
}

/// Detected stationary position spectrum: position noise plus shot noise.
pub fn stationary_spectrum(omega: f64, params: &ModelParams) -> f64 {
    position_spectrum(omega, params) + shot_noise_floor(params)
}

/// Stationary second moments of the mirror with the loop closed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StationaryState {
    /// ⟨Q²⟩
    pub q_var: f64,
    /// ⟨P²⟩
    pub p_var: f64,
    /// ⟨QP + PQ⟩/2; zero unless momentum feedback is active.
    pub qp_sym: f64,
}

impl StationaryState {
    /// Heisenberg bound for [Q, P] = i/2.
    pub fn satisfies_uncertainty(&self) -> bool {
        self.q_var * self.p_var - self.qp_sym * self.qp_sym >= 1.0 / 16.0
    }
}

fn variance_breakpoints(params: &ModelParams) -> Vec<f64> {
    let gamma = params.mechanical_damping();
    let g = params.active_gain();
    let resonance = match params.scheme {
        Scheme::MomentumFeedback => (1.0 + g * gamma * gamma).sqrt(),
        _ => 1.0,
    };
    let mut cuts = peak_breakpoints(resonance, 0.5 * params.effective_damping(), 0.0, params.cutoff);
    // the exact coth changes shape near ω ~ 2k_BT/ħω_m
    let thermal = 2.0 * params.temperature;
    if thermal > 0.0 && thermal < params.cutoff {
        cuts.push(thermal);
    }
    cuts
}

/// Stationary variances by adaptive quadrature of the gated position spectra
/// over [−ϖ, ϖ] (relative tolerance 10⁻⁶).
pub fn stationary_variances(params: &ModelParams) -> Result<StationaryState, QuadratureError> {
    let gamma = params.mechanical_damping();
    let g = params.active_gain();
    let feedback = feedback_noise_strength(params);
    let cuts = variance_breakpoints(params);
    let tol = Tolerance::default();
    // even integrands: ∫_{−ϖ}^{ϖ} dω/2π = (1/π) ∫_0^ϖ dω
    let quad = |f: &dyn Fn(f64) -> f64| -> Result<f64, QuadratureError> {
        Ok(integrate(f, 0.0, params.cutoff, &cuts, tol)?.value / std::f64::consts::PI)
    };

    match params.scheme {
        Scheme::MomentumFeedback => {
            // Q = χ[n_P + (iω+γ)n_Q],  P = χ[(iω+γg)n_P − n_Q]
            let q_var = quad(&|w| {
                chi(w, params).norm_sqr()
                    * (momentum_force_noise(w, params) + (w * w + gamma * gamma) * feedback)
            })?;
            let p_var = quad(&|w| {
                chi(w, params).norm_sqr()
                    * ((w * w + gamma * gamma * g * g) * momentum_force_noise(w, params)
                        + feedback)
            })?;
            let qp_sym = quad(&|w| {
                chi(w, params).norm_sqr() * gamma * (g * momentum_force_noise(w, params) - feedback)
            })?;
            Ok(StationaryState {
                q_var,
                p_var,
                qp_sym,
            })
        }
        Scheme::ColdDamping | Scheme::NoFeedback => {
            let q_var = quad(&|w| position_spectrum(w, params))?;
            let p_var = quad(&|w| w * w * position_spectrum(w, params))?;
            Ok(StationaryState {
                q_var,
                p_var,
                qp_sym: 0.0,
            })
        }
    }
}

/// Detected spectrum of a measurement of length T_m (exponential filter)
/// performed with the loop open, starting from the state `initial`.
///
/// The Brownian term uses the high-temperature form k_BT/ħω_m. A nonzero
/// `initial.qp_sym` (momentum-feedback preparation) adds
/// 2(1/2T_m + γ_m)⟨QP+PQ⟩/2 / (γ_m T_m) inside the bracket; see
/// `docs/nonstationary.md` for the derivation.
pub fn nonstationary_spectrum(
    omega: f64,
    measurement_time: f64,
    initial: &StationaryState,
    params: &ModelParams,
) -> f64 {
    let gamma = params.mechanical_damping();
    let gamma_t = gamma * measurement_time;
    let decay = 0.5 / measurement_time + gamma;
    let bracket = (omega * omega + decay * decay) * initial.q_var / gamma_t
        + initial.p_var / gamma_t
        + 2.0 * decay * initial.qp_sym / gamma_t
        + 0.25 * params.input_power
        + params.temperature;
    gamma * chi0_shifted(omega, measurement_time, params).norm_sqr() * bracket
        + shot_noise_floor(params)
}
