//! Parameter sets of the reference figures.
//!
//! Measurement and pulse times are quoted in units of the mechanical
//! relaxation time (γ_m T_m, γ_m σ, γ_m t₁) and converted here.

use crate::params::{ForcePulse, MeasurementWindow, ModelParams, Scheme};

/// Stationary SNR versus frequency for three gains (𝒬 = 10⁵).
pub fn snrsta_params() -> ModelParams {
    ModelParams {
        quality_factor: 1e5,
        input_power: 10.0,
        gain: 0.0,
        scheme: Scheme::ColdDamping,
        detection_efficiency: 0.8,
        temperature: 1e5,
        cutoff: crate::params::DEFAULT_CUTOFF,
    }
}

pub const SNRSTA_GAINS: [f64; 3] = [0.0, 1e4, 1e5];

/// Nonstationary noise spectra (𝒬 = 10⁴, g = 10³).
pub fn nonstatm_params() -> ModelParams {
    ModelParams {
        quality_factor: 1e4,
        gain: 1e3,
        ..snrsta_params()
    }
}

/// γ_m T_m values of the measurement-time scan, longest first.
pub const NONSTATM_GAMMA_TM: [f64; 4] = [1e-1, 1e-2, 1e-3, 1e-4];

/// Gains of the feedback scan at fixed measurement time.
pub const NONSTAG_GAINS: [f64; 4] = [1.0, 10.0, 1e2, 1e3];
pub const NONSTAG_A_GAMMA_TM: f64 = 1e-3;
pub const NONSTAG_B_GAMMA_TM: f64 = 1e-1;

/// Cool-and-measure SNR figures (𝒬 = 10⁵, g = 2·10³).
pub fn snrnontot_params() -> ModelParams {
    ModelParams {
        gain: 2e3,
        ..snrsta_params()
    }
}

pub const SNRNONTOT_SHORT_GAMMA_TM: f64 = 1e-3;
pub const SNRNONTOT_LONG_GAMMA_TM: f64 = 10.0;
pub const SNRNONTOT_B_GAMMA_TM: [f64; 6] = [1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0];

/// Resonant pulse with γ_m σ = 10⁻⁴ and γ_m t₁ = 3·10⁻⁴, unit amplitude.
pub fn snrnontot_pulse(params: &ModelParams) -> ForcePulse {
    ForcePulse {
        amplitude: 1.0,
        duration: params.time_from_damping_units(1e-4),
        arrival_time: params.time_from_damping_units(3e-4),
        carrier: 1.0,
    }
}

/// Cyclic cooling: γ_m T_m = 10⁻³ and T_cool = 10⁻³ T_m.
pub fn snrme2_window(params: &ModelParams) -> MeasurementWindow {
    let tm = params.time_from_damping_units(1e-3);
    MeasurementWindow {
        duration: tm,
        cooling_time: 1e-3 * tm,
    }
}

/// The stated improvement of the cycled SNR at resonance.
pub const SNRME2_HEADLINE_RATIO: f64 = 16.0;
