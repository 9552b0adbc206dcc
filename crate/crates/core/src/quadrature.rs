//! Globally adaptive Gauss–Kronrod quadrature with user breakpoints, plus
//! fixed-order Gauss–Legendre rules.
//!
//! The integrands in this crate are Lorentzian-like peaks whose widths span
//! many decades (γ_m/2 can be 10⁻⁵ while the domain is 10²), so callers seed
//! the subdivision with breakpoints clustered around each feature and the
//! adaptive loop refines wherever the Kronrod/Gauss discrepancy is largest.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadratureError {
    #[error(
        "quadrature on [{lower}, {upper}] did not reach tolerance after {evaluations} evaluations \
         (estimate {estimate:e}, error {error:e})"
    )]
    NotConverged {
        lower: f64,
        upper: f64,
        estimate: f64,
        error: f64,
        evaluations: usize,
    },
    #[error("integrand is not finite at x = {0}")]
    NonFinite(f64),
}

/// Values that can be integrated: reals and complex numbers.
pub trait Integrand:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self>
{
    fn zero() -> Self;
    fn magnitude(&self) -> f64;
}

impl Integrand for f64 {
    fn zero() -> Self {
        0.0
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
}

impl Integrand for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub relative: f64,
    pub absolute: f64,
    pub max_intervals: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            relative: 1e-6,
            absolute: 1e-30,
            max_intervals: 20_000,
        }
    }
}

impl Tolerance {
    pub fn relative(relative: f64) -> Self {
        Self {
            relative,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Integral<T> {
    pub value: T,
    pub error: f64,
    pub evaluations: usize,
}

#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689,
    0.973_906_528_517_171_720_077_964_012_084,
    0.930_157_491_355_708_226_001_207_180_060,
    0.865_063_366_688_984_510_732_096_688_423,
    0.780_817_726_586_416_897_063_717_578_345,
    0.679_409_568_299_024_406_234_327_365_115,
    0.562_757_134_668_604_683_339_000_099_273,
    0.433_395_394_129_247_190_799_265_943_166,
    0.294_392_862_701_460_198_131_126_603_104,
    0.148_874_338_981_631_210_884_826_001_130,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062,
    0.032_558_162_307_964_727_478_818_972_459,
    0.054_755_896_574_351_996_031_381_300_245,
    0.075_039_674_810_919_952_767_043_140_916,
    0.093_125_454_583_697_605_535_065_465_083,
    0.109_387_158_802_297_641_899_210_590_326,
    0.123_491_976_262_065_851_077_208_259_891,
    0.134_709_217_311_473_325_928_054_001_772,
    0.142_775_938_577_060_080_797_094_273_139,
    0.147_739_104_901_338_491_374_841_515_972,
    0.149_445_554_002_916_905_664_936_468_390,
];

// Gauss weights for the odd-indexed Kronrod nodes.
#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893,
    0.149_451_349_150_580_593_145_776_339_658,
    0.219_086_362_515_982_043_995_534_934_228,
    0.269_266_719_309_996_355_091_226_921_569,
    0.295_524_224_714_752_870_173_892_994_651,
];

struct Segment<T> {
    lower: f64,
    upper: f64,
    value: T,
    error: f64,
    abs_value: f64,
}

impl<T> PartialEq for Segment<T> {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl<T> Eq for Segment<T> {}
impl<T> PartialOrd for Segment<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T> Ord for Segment<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod21<T: Integrand, F: Fn(f64) -> T>(
    f: &F,
    lower: f64,
    upper: f64,
) -> Result<Segment<T>, QuadratureError> {
    let center = 0.5 * (lower + upper);
    let half = 0.5 * (upper - lower);
    let eval = |x: f64| {
        let v = f(x);
        if v.magnitude().is_finite() {
            Ok(v)
        } else {
            Err(QuadratureError::NonFinite(x))
        }
    };

    let f_center = eval(center)?;
    let mut kronrod = f_center * WGK[10];
    let mut gauss = T::zero();
    let mut abs_sum = f_center.magnitude() * WGK[10];
    let mut samples = [(T::zero(), T::zero()); 10];
    for (j, &x) in XGK[..10].iter().enumerate() {
        let dx = half * x;
        let lo = eval(center - dx)?;
        let hi = eval(center + dx)?;
        samples[j] = (lo, hi);
        let pair = lo + hi;
        kronrod = kronrod + pair * WGK[j];
        abs_sum += (lo.magnitude() + hi.magnitude()) * WGK[j];
        if j % 2 == 1 {
            gauss = gauss + pair * WG[j / 2];
        }
    }

    let mean = kronrod * 0.5;
    let mut asc = (f_center - mean).magnitude() * WGK[10];
    for (j, (lo, hi)) in samples.iter().enumerate() {
        asc += ((*lo - mean).magnitude() + (*hi - mean).magnitude()) * WGK[j];
    }

    let h = half.abs();
    let abs_value = abs_sum * h;
    let asc = asc * h;
    let mut error = (kronrod - gauss).magnitude() * h;
    if asc != 0.0 && error != 0.0 {
        error = asc * (200.0 * error / asc).powf(1.5).min(1.0);
    }
    let roundoff = 50.0 * f64::EPSILON * abs_value;
    if abs_value > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(roundoff);
    }

    Ok(Segment {
        lower,
        upper,
        value: kronrod * half,
        error,
        abs_value,
    })
}

/// Integrates `f` over `[lower, upper]`, starting from the subdivision
/// induced by `breakpoints` (points outside the interval are ignored).
pub fn integrate<T, F>(
    f: F,
    lower: f64,
    upper: f64,
    breakpoints: &[f64],
    tol: Tolerance,
) -> Result<Integral<T>, QuadratureError>
where
    T: Integrand,
    F: Fn(f64) -> T,
{
    if lower == upper {
        return Ok(Integral {
            value: T::zero(),
            error: 0.0,
            evaluations: 0,
        });
    }
    let (a, b, sign) = if lower < upper {
        (lower, upper, 1.0)
    } else {
        (upper, lower, -1.0)
    };

    let mut cuts: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|x| x.is_finite() && *x > a && *x < b)
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut nodes = Vec::with_capacity(cuts.len() + 2);
    nodes.push(a);
    nodes.extend(cuts);
    nodes.push(b);

    let mut heap = BinaryHeap::new();
    let mut frozen: Vec<Segment<T>> = Vec::new();
    let mut evaluations = 0;
    for w in nodes.windows(2) {
        heap.push(kronrod21(&f, w[0], w[1])?);
        evaluations += 21;
    }

    let totals = |heap: &BinaryHeap<Segment<T>>, frozen: &[Segment<T>]| {
        heap.iter()
            .chain(frozen.iter())
            .fold((T::zero(), 0.0, 0.0), |(v, e, a), s| {
                (v + s.value, e + s.error, a + s.abs_value)
            })
    };
    let (mut value, mut error, mut abs_value) = totals(&heap, &frozen);
    let mut iteration = 0usize;
    loop {
        iteration += 1;
        if iteration.is_multiple_of(64) {
            (value, error, abs_value) = totals(&heap, &frozen);
        }
        let converged = |value: T, error: f64, abs_value: f64| {
            error <= tol.absolute.max(tol.relative * value.magnitude())
                || error <= 64.0 * f64::EPSILON * abs_value
        };
        if converged(value, error, abs_value) {
            (value, error, abs_value) = totals(&heap, &frozen);
            if converged(value, error, abs_value) {
                return Ok(Integral {
                    value: value * sign,
                    error,
                    evaluations,
                });
            }
        }
        let exhausted = heap.len() + frozen.len() >= tol.max_intervals;
        let worst = match heap.pop() {
            Some(s) if !exhausted => s,
            _ => {
                return Err(QuadratureError::NotConverged {
                    lower,
                    upper,
                    estimate: value.magnitude(),
                    error,
                    evaluations,
                })
            }
        };
        let mid = 0.5 * (worst.lower + worst.upper);
        if mid <= worst.lower || mid >= worst.upper {
            frozen.push(worst);
            continue;
        }
        let left = kronrod21(&f, worst.lower, mid)?;
        let right = kronrod21(&f, mid, worst.upper)?;
        evaluations += 42;
        value = value - worst.value + left.value + right.value;
        error += left.error + right.error - worst.error;
        abs_value += left.abs_value + right.abs_value - worst.abs_value;
        heap.push(left);
        heap.push(right);
    }
}

/// Integrates over the whole real line through the map x = t/(1−t²).
pub fn integrate_real_line<T, F>(f: F, tol: Tolerance) -> Result<Integral<T>, QuadratureError>
where
    T: Integrand,
    F: Fn(f64) -> T,
{
    let mapped = |t: f64| {
        let d = 1.0 - t * t;
        let x = t / d;
        f(x) * ((1.0 + t * t) / (d * d))
    };
    // Clustering cuts near the ends keeps the slowly decaying tails resolved.
    let cuts = [-0.999, -0.99, -0.9, -0.5, 0.0, 0.5, 0.9, 0.99, 0.999];
    integrate(mapped, -1.0, 1.0, &cuts, tol)
}

/// Breakpoints clustered around a peak of half-width `width` at `center`:
/// the center plus center ± width·10^k for every k that stays inside
/// `[lower, upper]`.
pub fn peak_breakpoints(center: f64, width: f64, lower: f64, upper: f64) -> Vec<f64> {
    let mut points = Vec::new();
    if width.is_nan() || width <= 0.0 || !center.is_finite() {
        return points;
    }
    if center > lower && center < upper {
        points.push(center);
    }
    let reach = (upper - lower).abs();
    let mut d = 0.1 * width;
    while d < reach {
        for x in [center - d, center + d] {
            if x > lower && x < upper {
                points.push(x);
            }
        }
        d *= 10.0;
    }
    points
}

/// Nodes and weights of the n-point Gauss–Legendre rule on [−1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0, "Gauss–Legendre rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut derivative = 0.0;
        for _ in 0..100 {
            // Three-term recurrence for P_n(x) and P_{n-1}(x).
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let k = k as f64;
                let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { x } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            derivative = n as f64 * (x * pn - pm) / (x * x - 1.0);
            let step = pn / derivative;
            x -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * derivative * derivative);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Fixed-order Gauss–Legendre approximation of ∫_a^b f.
pub fn gauss_legendre_integral<T: Integrand, F: Fn(f64) -> T>(
    f: F,
    lower: f64,
    upper: f64,
    order: usize,
) -> T {
    let (nodes, weights) = gauss_legendre(order);
    let c = 0.5 * (lower + upper);
    let h = 0.5 * (upper - lower);
    nodes
        .iter()
        .zip(&weights)
        .fold(T::zero(), |acc, (&x, &w)| acc + f(c + h * x) * (w * h))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn polynomial_is_exact() {
        let r = integrate(|x: f64| 3.0 * x * x, 0.0, 2.0, &[], Tolerance::default()).unwrap();
        assert!((r.value - 8.0).abs() < 1e-13);
    }

    #[test]
    fn narrow_lorentzian_with_breakpoints() {
        let w = 1e-6;
        let f = |x: f64| w / ((x - 1.0).powi(2) + w * w);
        let cuts: Vec<f64> = (0..8)
            .flat_map(|k| {
                let d = w * 10f64.powi(k);
                [1.0 - d, 1.0, 1.0 + d]
            })
            .collect();
        let r = integrate(f, 0.0, 100.0, &cuts, Tolerance::relative(1e-10)).unwrap();
        let exact = (99.0 / w).atan() + (1.0 / w).atan();
        assert!((r.value - exact).abs() / exact < 1e-9, "{} vs {}", r.value, exact);
    }

    #[test]
    fn reversed_limits_flip_sign() {
        let r = integrate(|x: f64| x.exp(), 1.0, 0.0, &[], Tolerance::default()).unwrap();
        assert!((r.value + (1f64.exp() - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn complex_oscillatory_integrand() {
        let r = integrate(
            |t: f64| Complex64::new(0.0, -5.0 * t).exp(),
            0.0,
            2.0 * PI,
            &[],
            Tolerance::relative(1e-12),
        )
        .unwrap();
        assert!(r.value.norm() < 1e-12);
    }

    #[test]
    fn real_line_lorentzian() {
        let a = 0.05;
        let r = integrate_real_line(|x: f64| 1.0 / (x * x + a * a), Tolerance::relative(1e-10))
            .unwrap();
        assert!((r.value - PI / a).abs() / (PI / a) < 1e-9);
    }

    #[test]
    fn reports_non_convergence() {
        let tol = Tolerance {
            relative: 1e-14,
            absolute: 0.0,
            max_intervals: 4,
        };
        let err = integrate(|x: f64| (1.0 / x).sin(), 1e-6, 1.0, &[], tol).unwrap_err();
        assert!(matches!(err, QuadratureError::NotConverged { .. }));
    }

    #[test]
    fn non_finite_integrand_is_an_error() {
        let err = integrate(|_x: f64| f64::NAN, 0.0, 1.0, &[], Tolerance::default()).unwrap_err();
        assert!(matches!(err, QuadratureError::NonFinite(_)));
    }

    #[test]
    fn gauss_legendre_rules() {
        for n in [1, 2, 5, 32, 64] {
            let (x, w) = gauss_legendre(n);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13, "n = {n}");
            assert!(x.windows(2).all(|p| p[0] < p[1]));
            // exact for degree 2n−1
            let deg = 2 * n - 1;
            let approx: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32 - 1)).sum();
            let exact = 2.0 / deg as f64;
            assert!((approx - exact).abs() < 1e-12, "n = {n}: {approx} vs {exact}");
        }
        let v = gauss_legendre_integral(|t: f64| t.cos(), 0.0, PI / 2.0, 32);
        assert!((v - 1.0).abs() < 1e-14);
    }
}
