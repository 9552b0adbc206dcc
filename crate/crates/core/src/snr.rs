//! Signal, noise and signal-to-noise ratio for impulsive-force detection.
//!
//! Signal and noise share one set of rescaled position units (the
//! photocurrent prefactor 8Gβη/√γ_c is divided out of both), so the windowed
//! signal is |∫ dt e^{−iωt} F(t)⟨Q(t)⟩| and the noise is
//! √(T_m N²(ω)). In the stationary limit this reproduces
//! ℛ_st = |f̃||χ|/√(T_m N²_det).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::params::{ForcePulse, MeasurementWindow, ModelParams, Scheme};
use crate::quadrature::{
    gauss_legendre, integrate, peak_breakpoints, QuadratureError, Tolerance,
};
use crate::response::{chi, filter_transform, force_transform, Force};
use crate::spectra::{nonstationary_spectrum, stationary_variances, thermal_factor, StationaryState};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SnrError {
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error("pulse duration {duration} exceeds a tenth of the measurement time {measurement_time}")]
    WindowTooShort { duration: f64, measurement_time: f64 },
}

/// Gauss–Legendre order of the arrival-time average.
pub const ARRIVAL_QUADRATURE_ORDER: usize = 32;

/// Half-width of the force lobes kept in the convolution, in units of 1/σ.
const LOBE_HALF_WIDTH: f64 = 10.0;

/// SNR per unit force amplitude on a frequency grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnrCurve {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
}

impl SnrCurve {
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
}

/// Ratio of a windowed signal amplitude to the noise √(T_m N²).
pub fn signal_to_noise(signal: f64, noise_density: f64, measurement_time: f64) -> f64 {
    signal / (measurement_time * noise_density).sqrt()
}

/// Stationary SNR written directly in terms of the noise contributions:
/// |f̃| {γT_m[(ω/2)coth + ζ/4 + (g²(ω²+δγ²) + 1/(γ²|χ|²))/4ηζ]}^{−1/2}.
pub fn stationary_snr(omega: f64, force: &Force, measurement_time: f64, params: &ModelParams) -> f64 {
    let gamma = params.mechanical_damping();
    let g = params.active_gain();
    let eta_zeta = params.detection_efficiency * params.input_power;
    let renorm = match params.scheme {
        Scheme::MomentumFeedback => gamma * gamma,
        _ => 0.0,
    };
    let chi_sq = chi(omega, params).norm_sqr();
    let bracket = thermal_factor(omega, params.temperature)
        + 0.25 * params.input_power
        + (g * g * (omega * omega + renorm) + 1.0 / (gamma * gamma * chi_sq)) / (4.0 * eta_zeta);
    force.transform(omega).norm() / (gamma * measurement_time * bracket).sqrt()
}

/// Integration intervals covering both force lobes, merged when they overlap.
fn lobe_intervals(pulse: &ForcePulse) -> Vec<(f64, f64)> {
    let half = LOBE_HALF_WIDTH / pulse.duration;
    let wf = pulse.carrier;
    if wf <= half {
        vec![(-wf - half, wf + half)]
    } else {
        vec![(-wf - half, -wf + half), (wf - half, wf + half)]
    }
}

/// Windowed signal |(1/2π) ∫ dω′ χ̃₀(ω′) f̃(ω′) F̃_{T_m}(ω − ω′)| for a
/// measurement performed with the loop open.
pub fn nonstationary_signal(
    omega: f64,
    pulse: &ForcePulse,
    measurement_time: f64,
    params: &ModelParams,
) -> Result<f64, QuadratureError> {
    if pulse.amplitude == 0.0 {
        return Ok(0.0);
    }
    let open = params.without_feedback();
    let integrand = |w: f64| -> Complex64 {
        chi(w, &open) * force_transform(w, pulse) * filter_transform(omega - w, measurement_time)
    };

    let gamma = open.mechanical_damping();
    let mut total = Complex64::new(0.0, 0.0);
    for (lo, hi) in lobe_intervals(pulse) {
        let mut cuts = Vec::new();
        for center in [-1.0, 1.0] {
            cuts.extend(peak_breakpoints(center, 0.5 * gamma, lo, hi));
        }
        cuts.extend(peak_breakpoints(omega, 0.5 / measurement_time, lo, hi));
        for center in [-pulse.carrier, pulse.carrier] {
            cuts.extend(peak_breakpoints(center, 1.0 / pulse.duration, lo, hi));
        }
        total += integrate(integrand, lo, hi, &cuts, Tolerance::relative(1e-8))?.value;
    }
    Ok(total.norm() / (2.0 * std::f64::consts::PI))
}

/// Cool-and-measure protocol: the mirror is prepared in the stationary state
/// with the loop closed, then the loop is opened for a measurement of
/// length T_m.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoolAndMeasure {
    pub params: ModelParams,
    pub initial: StationaryState,
}

impl CoolAndMeasure {
    pub fn prepare(params: &ModelParams) -> Result<Self, QuadratureError> {
        Ok(Self {
            params: *params,
            initial: stationary_variances(params)?,
        })
    }

    /// Detected noise spectrum of the open-loop measurement.
    pub fn noise_spectrum(&self, omega: f64, measurement_time: f64) -> f64 {
        nonstationary_spectrum(omega, measurement_time, &self.initial, &self.params)
    }

    pub fn snr(
        &self,
        omega: f64,
        pulse: &ForcePulse,
        measurement_time: f64,
    ) -> Result<f64, QuadratureError> {
        let signal = nonstationary_signal(omega, pulse, measurement_time, &self.params)?;
        Ok(signal_to_noise(
            signal,
            self.noise_spectrum(omega, measurement_time),
            measurement_time,
        ))
    }

    /// Arrival-time averaged SNR over one cooling/measurement cycle, with the
    /// SNR during the cooling stage neglected.
    pub fn averaged_snr(
        &self,
        omega: f64,
        template: &ForcePulse,
        window: &MeasurementWindow,
    ) -> Result<f64, SnrError> {
        self.averaged_snr_with_order(omega, template, window, ARRIVAL_QUADRATURE_ORDER)
    }

    pub fn averaged_snr_with_order(
        &self,
        omega: f64,
        template: &ForcePulse,
        window: &MeasurementWindow,
        order: usize,
    ) -> Result<f64, SnrError> {
        let tm = window.duration;
        if template.duration > 0.1 * tm {
            return Err(SnrError::WindowTooShort {
                duration: template.duration,
                measurement_time: tm,
            });
        }
        let noise = self.noise_spectrum(omega, tm);
        let (nodes, weights) = gauss_legendre(order);
        let mut sum = 0.0;
        for (x, w) in nodes.iter().zip(&weights) {
            let t1 = 0.5 * tm * (1.0 + x);
            let signal = nonstationary_signal(omega, &template.arriving_at(t1), tm, &self.params)?;
            sum += w * 0.5 * tm * signal_to_noise(signal, noise, tm);
        }
        Ok(sum / (tm + window.cooling_time))
    }
}

/// SNR of a cool-and-measure run; the preparation uses `params` with the
/// loop closed.
pub fn nonstationary_snr(
    omega: f64,
    pulse: &ForcePulse,
    measurement_time: f64,
    params: &ModelParams,
) -> Result<f64, QuadratureError> {
    CoolAndMeasure::prepare(params)?.snr(omega, pulse, measurement_time)
}

/// Arrival-time averaged SNR, ⟨ℛ(ω)⟩ = (T_m + T_cool)⁻¹ ∫₀^{T_m} dt₁ ℛ(ω, t₁).
pub fn averaged_snr(
    omega: f64,
    template: &ForcePulse,
    window: &MeasurementWindow,
    params: &ModelParams,
) -> Result<f64, SnrError> {
    CoolAndMeasure::prepare(params)?.averaged_snr(omega, template, window)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::figures;
    use crate::spectra::stationary_spectrum;
    use proptest::prelude::*;

    fn fig_pulse() -> (ModelParams, ForcePulse) {
        let p = figures::snrnontot_params();
        (p, figures::snrnontot_pulse(&p))
    }

    #[test]
    fn stationary_snr_matches_spectrum_identity() {
        let force = Force::Impulse { amplitude: 1.0 };
        for scheme in [Scheme::ColdDamping, Scheme::MomentumFeedback] {
            for g in figures::SNRSTA_GAINS {
                let p = ModelParams {
                    gain: g,
                    scheme,
                    ..figures::snrsta_params()
                };
                for k in 0..101 {
                    let w = 0.02 * k as f64;
                    let a = stationary_snr(w, &force, 3.0, &p);
                    let b = chi(w, &p).norm() / (3.0 * stationary_spectrum(w, &p)).sqrt();
                    assert!((a - b).abs() / b < 1e-12, "w={w}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn cold_damping_zero_frequency_snr_is_gain_independent() {
        let force = Force::Impulse { amplitude: 1.0 };
        let p = figures::snrsta_params();
        let base = stationary_snr(0.0, &force, 1.0, &p);
        for g in [10.0, 1e3, 1e5] {
            let v = stationary_snr(0.0, &force, 1.0, &p.with_gain(g));
            assert!((v - base).abs() / base < 1e-12);
        }
    }

    #[test]
    fn stationary_snr_drops_with_gain() {
        let force = Force::Impulse { amplitude: 1.0 };
        let p = figures::snrsta_params();
        let v: Vec<f64> = figures::SNRSTA_GAINS
            .iter()
            .map(|&g| stationary_snr(1.0, &force, 1.0, &p.with_gain(g)))
            .collect();
        assert!(v[0] > v[1] && v[1] > v[2], "{v:?}");
    }

    #[test]
    fn zero_amplitude_gives_zero_signal() {
        let (p, pulse) = fig_pulse();
        let silent = ForcePulse { amplitude: 0.0, ..pulse };
        assert_eq!(nonstationary_signal(1.0, &silent, 100.0, &p).unwrap(), 0.0);
    }

    #[test]
    fn long_window_signal_tends_to_product() {
        let (p, pulse) = fig_pulse();
        let tm = p.time_from_damping_units(1e3);
        let open = p.without_feedback();
        for w in [0.95, 1.0, 1.02] {
            let s = nonstationary_signal(w, &pulse, tm, &p).unwrap();
            let product = (chi(w, &open) * force_transform(w, &pulse)).norm();
            assert!((s - product).abs() / product < 1e-2, "w={w}: {s} vs {product}");
        }
    }

    /// Time-domain oracle: integrate Q̈ + γQ̇ + Q = f(t) from rest well before
    /// the pulse with RK4, then apply the window and transform by direct
    /// trapezoidal summation.
    fn time_domain_signal(omega: f64, pulse: &ForcePulse, tm: f64, gamma: f64) -> f64 {
        let dt = 0.01;
        let start = pulse.arrival_time - 12.0 * pulse.duration;
        let end = 40.0 * tm;
        let deriv = |t: f64, q: f64, v: f64| (v, -q - gamma * v + pulse.value_at(t));
        let (mut t, mut q, mut v) = (start, 0.0f64, 0.0f64);
        let mut acc = Complex64::new(0.0, 0.0);
        let steps = ((end - start) / dt).ceil() as usize;
        for i in 0..steps {
            if t >= 0.0 {
                let w = if t < 0.5 * dt { 0.5 } else { 1.0 };
                acc += Complex64::from_polar(w * q * (-0.5 * t / tm).exp() * dt, -omega * t);
            }
            let (k1q, k1v) = deriv(t, q, v);
            let (k2q, k2v) = deriv(t + 0.5 * dt, q + 0.5 * dt * k1q, v + 0.5 * dt * k1v);
            let (k3q, k3v) = deriv(t + 0.5 * dt, q + 0.5 * dt * k2q, v + 0.5 * dt * k2v);
            let (k4q, k4v) = deriv(t + dt, q + dt * k3q, v + dt * k3v);
            q += dt / 6.0 * (k1q + 2.0 * k2q + 2.0 * k3q + k4q);
            v += dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
            t = start + (i + 1) as f64 * dt;
        }
        acc.norm()
    }

    #[test]
    fn signal_matches_time_domain_oracle() {
        let (p, pulse) = fig_pulse();
        let gamma = p.mechanical_damping();
        let tm = p.time_from_damping_units(1e-3);
        for w in [0.9, 1.0, 1.05] {
            let s = nonstationary_signal(w, &pulse, tm, &p).unwrap();
            let oracle = time_domain_signal(w, &pulse, tm, gamma);
            assert!((s - oracle).abs() / oracle < 1e-2, "w={w}: {s} vs {oracle}");
        }
    }

    #[test]
    fn snr_scales_linearly_with_amplitude() {
        let (p, pulse) = fig_pulse();
        let run = CoolAndMeasure::prepare(&p).unwrap();
        let tm = p.time_from_damping_units(1e-3);
        let double = ForcePulse { amplitude: 2.0, ..pulse };
        let a = run.snr(1.0, &pulse, tm).unwrap();
        let b = run.snr(1.0, &double, tm).unwrap();
        assert_eq!(b, 2.0 * a);
        let f = Force::Pulse(pulse);
        assert_eq!(
            stationary_snr(1.0, &f.scaled(2.0), tm, &p),
            2.0 * stationary_snr(1.0, &f, tm, &p)
        );
    }

    #[test]
    fn common_rescaling_cancels() {
        let (p, pulse) = fig_pulse();
        let tm = p.time_from_damping_units(1e-3);
        let run = CoolAndMeasure::prepare(&p).unwrap();
        let s = nonstationary_signal(1.0, &pulse, tm, &p).unwrap();
        let n = run.noise_spectrum(1.0, tm);
        let r = signal_to_noise(s, n, tm);
        for c in [0.25, 2.0, 1024.0] {
            assert_eq!(signal_to_noise(c * s, c * c * n, tm), r);
        }
        let c = 8.0 * 3.7 * 0.8 / 1.3f64.sqrt();
        assert!((signal_to_noise(c * s, c * c * n, tm) - r).abs() / r < 1e-15);
    }

    #[test]
    fn large_window_reaches_stationary_snr() {
        let (p, pulse) = fig_pulse();
        let open = p.without_feedback();
        let tm = p.time_from_damping_units(1e2);
        let a = nonstationary_snr(1.0, &pulse, tm, &open).unwrap();
        let b = stationary_snr(1.0, &Force::Pulse(pulse), tm, &open);
        assert!((a - b).abs() / b < 5e-2, "{a} vs {b}");
    }

    #[test]
    fn averaged_snr_requires_impulsive_pulse() {
        let (p, pulse) = fig_pulse();
        let w = MeasurementWindow::new(5.0 * pulse.duration, 0.0).unwrap();
        assert!(matches!(
            averaged_snr(1.0, &pulse, &w, &p),
            Err(SnrError::WindowTooShort { .. })
        ));
    }

    #[test]
    fn averaged_snr_bounds_and_refinement() {
        let (p, pulse) = fig_pulse();
        let window = figures::snrme2_window(&p);
        let run = CoolAndMeasure::prepare(&p).unwrap();
        let avg = run.averaged_snr_with_order(1.0, &pulse, &window, 32).unwrap();
        let fine = run.averaged_snr_with_order(1.0, &pulse, &window, 64).unwrap();
        assert!((avg - fine).abs() / fine < 1e-3, "{avg} vs {fine}");

        let samples: Vec<f64> = (0..=20)
            .map(|k| {
                let t1 = window.duration * k as f64 / 20.0;
                run.snr(1.0, &pulse.arriving_at(t1), window.duration).unwrap()
            })
            .collect();
        let max = samples.iter().cloned().fold(f64::MIN, f64::max);
        let min = samples.iter().cloned().fold(f64::MAX, f64::min);
        assert!(avg <= max && avg >= min * window.duration / (window.duration + window.cooling_time));

        // without cooling stage and gain the cycle average is the plain mean
        let open = p.without_feedback();
        let baseline = CoolAndMeasure::prepare(&open).unwrap();
        let plain = MeasurementWindow { cooling_time: 0.0, ..window };
        let a = baseline.averaged_snr(1.0, &pulse, &plain).unwrap();
        let b = averaged_snr(1.0, &pulse, &plain, &open).unwrap();
        assert_eq!(a, b);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn stationary_snr_nonnegative_and_finite(w in 0.0f64..3.0, g in 0.0f64..1e5, tm in 1e-2f64..1e6) {
            let p = figures::snrsta_params().with_gain(g);
            let v = stationary_snr(w, &Force::Impulse { amplitude: 1.0 }, tm, &p);
            prop_assert!(v.is_finite() && v >= 0.0);
        }
    }
}
