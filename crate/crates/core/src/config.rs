//! TOML run configuration.
//!
//! ```toml
//! quality_factor = 1e4
//! input_power = 10.0
//! gain = 1e3
//! scheme = "cold_damping"
//! detection_efficiency = 0.8
//! temperature = 1e5
//! cutoff = 100.0            # optional
//!
//! [force]                   # optional, required by SNR commands
//! amplitude = 1.0
//! duration = 10.0
//! arrival_time = 30.0
//! carrier = 1.0
//!
//! [window]                  # optional
//! duration = 10.0
//! cooling_time = 0.01       # optional, required by the averaged SNR
//! ```

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::params::{
    ForcePulse, MeasurementWindow, ModelParams, ParamError, Scheme, DEFAULT_CUTOFF,
};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid parameter: {0}")]
    Invalid(#[from] ParamError),
    #[error("config has no [force] block")]
    MissingForce,
    #[error("config has no [window] block")]
    MissingWindow,
    #[error("config has no window.cooling_time")]
    MissingCoolingTime,
}

fn default_cutoff() -> f64 {
    DEFAULT_CUTOFF
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowConfig {
    pub duration: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cooling_time: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub quality_factor: f64,
    pub input_power: f64,
    #[serde(default)]
    pub gain: f64,
    pub scheme: Scheme,
    pub detection_efficiency: f64,
    pub temperature: f64,
    #[serde(default = "default_cutoff")]
    pub cutoff: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub force: Option<ForcePulse>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<WindowConfig>,
}

impl Config {
    pub fn from_params(params: ModelParams) -> Self {
        Self {
            quality_factor: params.quality_factor,
            input_power: params.input_power,
            gain: params.gain,
            scheme: params.scheme,
            detection_efficiency: params.detection_efficiency,
            temperature: params.temperature,
            cutoff: params.cutoff,
            force: None,
            window: None,
        }
    }

    /// Parses and validates every block that is present.
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let config: Config = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config values are always representable in TOML")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.model_params()?;
        if let Some(force) = self.force {
            force.validate()?;
        }
        if let Some(w) = self.window {
            MeasurementWindow::new(w.duration, w.cooling_time.unwrap_or(0.0))?;
        }
        Ok(())
    }

    pub fn model_params(&self) -> Result<ModelParams, ParamError> {
        ModelParams {
            quality_factor: self.quality_factor,
            input_power: self.input_power,
            gain: self.gain,
            scheme: self.scheme,
            detection_efficiency: self.detection_efficiency,
            temperature: self.temperature,
            cutoff: self.cutoff,
        }
        .validate()
    }

    pub fn force(&self) -> Result<ForcePulse, ConfigError> {
        Ok(self.force.ok_or(ConfigError::MissingForce)?.validate()?)
    }

    /// Measurement window; a missing cooling time reads as zero.
    pub fn window(&self) -> Result<MeasurementWindow, ConfigError> {
        let w = self.window.ok_or(ConfigError::MissingWindow)?;
        Ok(MeasurementWindow::new(w.duration, w.cooling_time.unwrap_or(0.0))?)
    }

    /// Measurement window for cyclic cooling, where the cooling time is mandatory.
    pub fn cycle_window(&self) -> Result<MeasurementWindow, ConfigError> {
        let w = self.window.ok_or(ConfigError::MissingWindow)?;
        let cooling = w.cooling_time.ok_or(ConfigError::MissingCoolingTime)?;
        Ok(MeasurementWindow::new(w.duration, cooling)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const SAMPLE: &str = r#"
quality_factor = 1e4
input_power = 10.0
gain = 1e3
scheme = "cold_damping"
detection_efficiency = 0.8
temperature = 1e5

[force]
amplitude = 1.0
duration = 10.0
arrival_time = 30.0
carrier = 1.0

[window]
duration = 10.0
"#;

    #[test]
    fn parses_sample_with_default_cutoff() {
        let c = Config::from_toml_str(SAMPLE).unwrap();
        assert_eq!(c.cutoff, DEFAULT_CUTOFF);
        assert_eq!(c.scheme, Scheme::ColdDamping);
        assert_eq!(c.force().unwrap().arrival_time, 30.0);
        assert_eq!(c.window().unwrap().cooling_time, 0.0);
        assert!(matches!(c.cycle_window(), Err(ConfigError::MissingCoolingTime)));
    }

    #[test]
    fn unknown_keys_are_rejected_with_location() {
        let text = format!("{SAMPLE}\nbogus = 3\n");
        let err = Config::from_toml_str(&text).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("bogus"), "{msg}");
        assert!(msg.contains("line"), "{msg}");

        let nested = SAMPLE.replace("carrier = 1.0", "carrier = 1.0\nphase = 0.0");
        assert!(Config::from_toml_str(&nested).is_err());
    }

    #[test]
    fn invalid_values_are_rejected() {
        let text = SAMPLE.replace("detection_efficiency = 0.8", "detection_efficiency = 0.0");
        assert!(matches!(
            Config::from_toml_str(&text),
            Err(ConfigError::Invalid(ParamError::InvalidEfficiency(_)))
        ));
        let text = SAMPLE.replace("scheme = \"cold_damping\"", "scheme = \"no_feedback\"");
        assert!(matches!(
            Config::from_toml_str(&text),
            Err(ConfigError::Invalid(ParamError::InconsistentGain(_)))
        ));
    }

    #[test]
    fn missing_force_is_reported() {
        let c = Config::from_params(crate::figures::nonstatm_params());
        assert!(matches!(c.force(), Err(ConfigError::MissingForce)));
        assert!(matches!(c.window(), Err(ConfigError::MissingWindow)));
    }

    fn scheme() -> impl Strategy<Value = Scheme> {
        prop_oneof![Just(Scheme::ColdDamping), Just(Scheme::MomentumFeedback)]
    }

    proptest! {
        #[test]
        fn toml_round_trip(
            q in 1.0f64..1e8, zeta in 1e-3f64..1e3, g in 0.0f64..1e6, s in scheme(),
            eta in 0.01f64..=1.0, temp in 0.0f64..1e7, cutoff in 1.5f64..1e4,
            amp in -10.0f64..10.0, sigma in 1e-3f64..1e3, t1 in -1e3f64..1e3, wf in 0.0f64..10.0,
            tm in 1e-3f64..1e8, cool in proptest::option::of(0.0f64..1e3),
        ) {
            let c = Config {
                quality_factor: q, input_power: zeta, gain: g, scheme: s,
                detection_efficiency: eta, temperature: temp, cutoff,
                force: Some(ForcePulse { amplitude: amp, duration: sigma, arrival_time: t1, carrier: wf }),
                window: Some(WindowConfig { duration: tm, cooling_time: cool }),
            };
            c.validate().unwrap();
            let back = Config::from_toml_str(&c.to_toml_string()).unwrap();
            prop_assert_eq!(back, c);
        }
    }
}
