//! Force detection with a feedback-cooled optomechanical mirror.
//!
//! Linear response of the mirror under momentum feedback or cold damping,
//! stationary and windowed (nonstationary) position-noise spectra, the
//! resulting signal-to-noise ratios for impulsive forces, and a stochastic
//! time-domain simulator that cross-checks the analytic results.
//!
//! Units: frequencies in ω_m, times in 1/ω_m, temperature as k_BT/ħω_m.

pub mod config;
pub mod figures;
pub mod oracle;
pub mod params;
pub mod quadrature;
pub mod response;
pub mod snr;
pub mod spectra;

pub use config::{Config, ConfigError};
pub use oracle::{
    nonstationary_ensemble, simulate, BandSpec, Comparison, NonstationaryRun, OracleConfig,
    OracleError, OracleRun, PeriodogramWindow,
};
pub use params::{ForcePulse, MeasurementWindow, ModelParams, ParamError, Scheme};
pub use quadrature::QuadratureError;
pub use response::{chi, chi0_shifted, chi_cd, chi_mf, filter_transform, force_transform, Force};
pub use snr::{
    averaged_snr, nonstationary_signal, nonstationary_snr, stationary_snr, CoolAndMeasure,
    SnrCurve, SnrError,
};
pub use spectra::{
    nonstationary_spectrum, stationary_spectrum, stationary_variances, FrequencyGrid, GridError,
    Spacing, Spectrum, StationaryState,
};
