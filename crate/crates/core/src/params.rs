//! Dimensionless model parameters.
//!
//! Every quantity is expressed with the mechanical frequency set to one:
//! frequencies are in units of ω_m, times in units of 1/ω_m and the
//! temperature enters only as k_BT/ħω_m.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Reservoir cutoff used when a configuration does not specify one.
pub const DEFAULT_CUTOFF: f64 = 100.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamError {
    #[error("quality factor must be positive and finite, got {0}")]
    InvalidQualityFactor(f64),
    #[error("input power must be positive and finite, got {0}")]
    InvalidInputPower(f64),
    #[error("feedback gain must be non-negative and finite, got {0}")]
    InvalidGain(f64),
    #[error("detection efficiency must lie in (0, 1], got {0}")]
    InvalidEfficiency(f64),
    #[error("scheme `no_feedback` requires gain = 0, got {0}")]
    InconsistentGain(f64),
    #[error("temperature must be non-negative and finite, got {0}")]
    InvalidTemperature(f64),
    #[error("reservoir cutoff must exceed the mechanical frequency, got {0}")]
    InvalidCutoff(f64),
    #[error("force duration must be positive and finite, got {0}")]
    InvalidForceDuration(f64),
    #[error("force carrier frequency must be non-negative and finite, got {0}")]
    InvalidCarrier(f64),
    #[error("force {field} must be finite, got {value}")]
    NonFiniteForce { field: &'static str, value: f64 },
    #[error("measurement duration must be positive and finite, got {0}")]
    InvalidMeasurementTime(f64),
    #[error("cooling time must be non-negative and finite, got {0}")]
    InvalidCoolingTime(f64),
}

/// Feedback scheme acting on the mirror.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Position shift driven by the homodyne current (interaction linear in P).
    MomentumFeedback,
    /// Viscous force proportional to the time derivative of the homodyne current.
    ColdDamping,
    NoFeedback,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::MomentumFeedback => "momentum_feedback",
            Scheme::ColdDamping => "cold_damping",
            Scheme::NoFeedback => "no_feedback",
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Physical and feedback parameters of the mirror, cavity readout and loop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// 𝒬 = ω_m/γ_m.
    pub quality_factor: f64,
    /// Rescaled input power ζ.
    pub input_power: f64,
    /// Rescaled feedback gain (g₁ or g₂ depending on the scheme).
    pub gain: f64,
    pub scheme: Scheme,
    /// Homodyne detection efficiency η.
    pub detection_efficiency: f64,
    /// k_BT/ħω_m.
    pub temperature: f64,
    /// Reservoir cutoff ϖ/ω_m.
    pub cutoff: f64,
}

impl ModelParams {
    /// Checks every parameter invariant and hands the set back unchanged.
    pub fn validate(self) -> Result<Self, ParamError> {
        if !(self.quality_factor > 0.0 && self.quality_factor.is_finite()) {
            return Err(ParamError::InvalidQualityFactor(self.quality_factor));
        }
        if !(self.input_power > 0.0 && self.input_power.is_finite()) {
            return Err(ParamError::InvalidInputPower(self.input_power));
        }
        if !(self.gain >= 0.0 && self.gain.is_finite()) {
            return Err(ParamError::InvalidGain(self.gain));
        }
        if !(self.detection_efficiency > 0.0 && self.detection_efficiency <= 1.0) {
            return Err(ParamError::InvalidEfficiency(self.detection_efficiency));
        }
        if self.scheme == Scheme::NoFeedback && self.gain != 0.0 {
            return Err(ParamError::InconsistentGain(self.gain));
        }
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return Err(ParamError::InvalidTemperature(self.temperature));
        }
        if !(self.cutoff > 1.0 && self.cutoff.is_finite()) {
            return Err(ParamError::InvalidCutoff(self.cutoff));
        }
        Ok(self)
    }

    /// Intrinsic mechanical damping γ_m = 1/𝒬.
    pub fn mechanical_damping(&self) -> f64 {
        1.0 / self.quality_factor
    }

    /// Feedback gain actually applied; zero when the loop is absent.
    pub fn active_gain(&self) -> f64 {
        match self.scheme {
            Scheme::NoFeedback => 0.0,
            _ => self.gain,
        }
    }

    /// Damping with the loop closed, γ_m(1+g).
    pub fn effective_damping(&self) -> f64 {
        self.mechanical_damping() * (1.0 + self.active_gain())
    }

    /// The same device with the feedback loop switched off.
    pub fn without_feedback(&self) -> Self {
        Self {
            gain: 0.0,
            scheme: Scheme::NoFeedback,
            ..*self
        }
    }

    pub fn with_gain(&self, gain: f64) -> Self {
        Self { gain, ..*self }
    }

    /// Converts a time expressed in units of the mechanical relaxation time
    /// (γ_m t) to units of 1/ω_m.
    pub fn time_from_damping_units(&self, gamma_t: f64) -> f64 {
        gamma_t * self.quality_factor
    }
}

/// Gaussian-enveloped force f(t) = f₀ exp[−(t−t₁)²/2σ²] cos(ω_f t).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForcePulse {
    pub amplitude: f64,
    pub duration: f64,
    pub arrival_time: f64,
    pub carrier: f64,
}

impl ForcePulse {
    pub fn validate(self) -> Result<Self, ParamError> {
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(ParamError::InvalidForceDuration(self.duration));
        }
        if !(self.carrier >= 0.0 && self.carrier.is_finite()) {
            return Err(ParamError::InvalidCarrier(self.carrier));
        }
        if !self.amplitude.is_finite() {
            return Err(ParamError::NonFiniteForce {
                field: "amplitude",
                value: self.amplitude,
            });
        }
        if !self.arrival_time.is_finite() {
            return Err(ParamError::NonFiniteForce {
                field: "arrival_time",
                value: self.arrival_time,
            });
        }
        Ok(self)
    }

    /// Time-domain value of the force.
    pub fn value_at(&self, t: f64) -> f64 {
        let x = (t - self.arrival_time) / self.duration;
        self.amplitude * (-0.5 * x * x).exp() * (self.carrier * t).cos()
    }

    pub fn arriving_at(&self, arrival_time: f64) -> Self {
        Self {
            arrival_time,
            ..*self
        }
    }
}

/// Exponential measurement filter F(t) = θ(t) e^{−t/2T_m}, optionally
/// followed by a cooling stage of length `cooling_time`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementWindow {
    pub duration: f64,
    pub cooling_time: f64,
}

impl MeasurementWindow {
    pub fn new(duration: f64, cooling_time: f64) -> Result<Self, ParamError> {
        Self {
            duration,
            cooling_time,
        }
        .validate()
    }

    pub fn validate(self) -> Result<Self, ParamError> {
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(ParamError::InvalidMeasurementTime(self.duration));
        }
        if !(self.cooling_time >= 0.0 && self.cooling_time.is_finite()) {
            return Err(ParamError::InvalidCoolingTime(self.cooling_time));
        }
        Ok(self)
    }

    /// F(t); satisfies ∫F² dt = T_m.
    pub fn filter_at(&self, t: f64) -> f64 {
        if t < 0.0 {
            0.0
        } else {
            (-0.5 * t / self.duration).exp()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn snrsta() -> ModelParams {
        ModelParams {
            quality_factor: 1e5,
            input_power: 10.0,
            gain: 1e4,
            scheme: Scheme::ColdDamping,
            detection_efficiency: 0.8,
            temperature: 1e5,
            cutoff: 100.0,
        }
    }

    #[test]
    fn caption_parameters_are_accepted() {
        let p = snrsta();
        assert_eq!(p.validate(), Ok(p));
        let mf = ModelParams {
            scheme: Scheme::MomentumFeedback,
            ..p
        };
        assert!(mf.validate().is_ok());
    }

    #[test]
    fn rejects_each_broken_invariant() {
        let p = snrsta();
        let cases = [
            (ModelParams { detection_efficiency: 0.0, ..p }, "efficiency"),
            (ModelParams { detection_efficiency: 1.2, ..p }, "efficiency"),
            (ModelParams { quality_factor: 0.0, ..p }, "quality"),
            (ModelParams { input_power: -1.0, ..p }, "power"),
            (ModelParams { gain: -1.0, ..p }, "gain"),
            (ModelParams { temperature: f64::INFINITY, ..p }, "temperature"),
            (ModelParams { cutoff: 1.0, ..p }, "cutoff"),
        ];
        for (bad, what) in cases {
            assert!(bad.validate().is_err(), "{what} should be rejected");
        }
        assert_eq!(
            ModelParams { detection_efficiency: 0.0, ..p }.validate(),
            Err(ParamError::InvalidEfficiency(0.0))
        );
    }

    #[test]
    fn no_feedback_with_gain_is_inconsistent() {
        let p = ModelParams {
            scheme: Scheme::NoFeedback,
            gain: 5.0,
            ..snrsta()
        };
        assert_eq!(p.validate(), Err(ParamError::InconsistentGain(5.0)));
    }

    #[test]
    fn effective_damping_values() {
        let base = ModelParams {
            quality_factor: 1e4,
            gain: 0.0,
            ..snrsta()
        };
        assert_eq!(base.effective_damping(), 1e-4);
        assert!((base.with_gain(1e3).effective_damping() - 1.001e-1).abs() < 1e-15);
        let p = ModelParams {
            quality_factor: 1e5,
            gain: 2e3,
            ..snrsta()
        };
        assert!((p.effective_damping() - 2.001e-2).abs() < 1e-15);
        assert_eq!(p.without_feedback().effective_damping(), 1e-5);
    }

    #[test]
    fn pulse_and_window_validation() {
        let pulse = ForcePulse {
            amplitude: 1.0,
            duration: 0.0,
            arrival_time: 3.0,
            carrier: 1.0,
        };
        assert!(pulse.validate().is_err());
        assert!(ForcePulse { duration: 1.0, carrier: -1.0, ..pulse }.validate().is_err());
        assert!(MeasurementWindow::new(0.0, 0.0).is_err());
        assert!(MeasurementWindow::new(1.0, -1.0).is_err());
        let w = MeasurementWindow::new(10.0, 0.0).unwrap();
        assert_eq!(w.filter_at(-1.0), 0.0);
        assert!((w.filter_at(20.0) - (-1.0f64).exp()).abs() < 1e-15);
    }

    proptest::proptest! {
        #[test]
        fn effective_damping_increases_with_gain(q in 1.0f64..1e7, g in 0.0f64..1e6, dg in 1e-3f64..1e3) {
            let p = ModelParams { quality_factor: q, gain: g, ..snrsta() };
            proptest::prop_assert!(p.with_gain(g + dg).effective_damping() > p.effective_damping());
            proptest::prop_assert_eq!(p.with_gain(0.0).effective_damping(), 1.0 / q);
        }
    }
}
