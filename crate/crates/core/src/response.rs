//! Frequency-domain response functions.
//!
//! Fourier convention throughout: f̃(ω) = ∫ dt e^{−iωt} f(t).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::params::{ForcePulse, ModelParams, Scheme};

/// A complex response sampled at one frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexResponse {
    pub frequency: f64,
    pub value: Complex64,
}

impl ComplexResponse {
    pub fn sample(frequencies: &[f64], f: impl Fn(f64) -> Complex64) -> Vec<Self> {
        frequencies
            .iter()
            .map(|&frequency| Self {
                frequency,
                value: f(frequency),
            })
            .collect()
    }
}

/// 1 / (ω₀² − z² + i z Γ) for a possibly complex frequency z.
fn oscillator_response(z: Complex64, stiffness: f64, damping: f64) -> Complex64 {
    let i = Complex64::i();
    (stiffness - z * z + i * z * damping).inv()
}

/// Susceptibility with momentum feedback: damping γ_m(1+g₁) and stiffness
/// renormalised to 1 + g₁γ_m².
pub fn chi_mf(omega: f64, params: &ModelParams) -> Complex64 {
    let gamma = params.mechanical_damping();
    let g = params.gain;
    oscillator_response(
        Complex64::new(omega, 0.0),
        1.0 + g * gamma * gamma,
        gamma * (1.0 + g),
    )
}

/// Susceptibility with cold damping: damping γ_m(1+g₂), no stiffness shift.
pub fn chi_cd(omega: f64, params: &ModelParams) -> Complex64 {
    let gamma = params.mechanical_damping();
    oscillator_response(Complex64::new(omega, 0.0), 1.0, gamma * (1.0 + params.gain))
}

/// Susceptibility of the scheme selected in `params`.
pub fn chi(omega: f64, params: &ModelParams) -> Complex64 {
    match params.scheme {
        Scheme::MomentumFeedback => chi_mf(omega, params),
        Scheme::ColdDamping => chi_cd(omega, params),
        Scheme::NoFeedback => chi_cd(omega, &params.with_gain(0.0)),
    }
}

/// Feedback-free susceptibility evaluated at ω − i/2T_m.
pub fn chi0_shifted(omega: f64, measurement_time: f64, params: &ModelParams) -> Complex64 {
    let z = Complex64::new(omega, -0.5 / measurement_time);
    oscillator_response(z, 1.0, params.mechanical_damping())
}

/// Transform of θ(t) e^{−t/2T_m}: 1/(iω + 1/2T_m).
pub fn filter_transform(omega: f64, measurement_time: f64) -> Complex64 {
    Complex64::new(0.5 / measurement_time, omega).inv()
}

/// Closed-form transform of the Gaussian-enveloped cosine pulse: two
/// Gaussian lobes at ±ω_f, each carrying the arrival phase e^{−i(ω∓ω_f)t₁}.
pub fn force_transform(omega: f64, pulse: &ForcePulse) -> Complex64 {
    let sigma = pulse.duration;
    let scale = 0.5 * pulse.amplitude * sigma * (2.0 * std::f64::consts::PI).sqrt();
    let lobe = |nu: f64| {
        let envelope = (-0.5 * (nu * sigma).powi(2)).exp();
        Complex64::from_polar(envelope, -nu * pulse.arrival_time)
    };
    (lobe(omega - pulse.carrier) + lobe(omega + pulse.carrier)) * scale
}

/// Force spectrum entering the stationary SNR.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum Force {
    /// Ideal impulse f₀ δ(t): flat transform.
    Impulse { amplitude: f64 },
    Pulse(ForcePulse),
}

impl Force {
    pub fn transform(&self, omega: f64) -> Complex64 {
        match self {
            Force::Impulse { amplitude } => Complex64::new(*amplitude, 0.0),
            Force::Pulse(p) => force_transform(omega, p),
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        match *self {
            Force::Impulse { amplitude } => Force::Impulse {
                amplitude: amplitude * factor,
            },
            Force::Pulse(p) => Force::Pulse(ForcePulse {
                amplitude: p.amplitude * factor,
                ..p
            }),
        }
    }
}
