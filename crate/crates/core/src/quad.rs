//! Adaptive Gauss–Kronrod integration.
//!
//! The finite-interval routine is a globally adaptive 10/21-point
//! Gauss–Kronrod scheme (bisect the interval with the largest error
//! estimate until the total error meets the tolerance). Integrals over
//! the positive half-line go through the substitution `x = exp(v)`, which
//! turns power-law behaviour at the origin into exponential decay, and
//! then map each half of the `v` axis onto `(0, 1]`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Tolerance {
    pub const fn new(abs: f64, rel: f64) -> Self {
        Self { abs, rel }
    }

    fn target(&self, value: f64) -> f64 {
        self.abs.max(self.rel * value.abs())
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Self::new(1e-10, 1e-10)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

const MAX_INTERVALS: usize = 4000;

#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}

impl Eq for Segment {}

impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// One application of the 21-point Kronrod rule with the QUADPACK error
/// rescaling.
fn kronrod21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Segment {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let f_center = f(center);

    let mut res_gauss = 0.0;
    let mut res_kronrod = f_center * WGK[10];
    let mut res_abs = res_kronrod.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];

    for j in 0..5 {
        let k = 2 * j + 1;
        let dx = half * XGK[k];
        let (f1, f2) = (f(center - dx), f(center + dx));
        fv1[k] = f1;
        fv2[k] = f2;
        res_gauss += WG[j] * (f1 + f2);
        res_kronrod += WGK[k] * (f1 + f2);
        res_abs += WGK[k] * (f1.abs() + f2.abs());
    }
    for j in 0..5 {
        let k = 2 * j;
        let dx = half * XGK[k];
        let (f1, f2) = (f(center - dx), f(center + dx));
        fv1[k] = f1;
        fv2[k] = f2;
        res_kronrod += WGK[k] * (f1 + f2);
        res_abs += WGK[k] * (f1.abs() + f2.abs());
    }

    let mean = 0.5 * res_kronrod;
    let mut res_asc = WGK[10] * (f_center - mean).abs();
    for k in 0..10 {
        res_asc += WGK[k] * ((fv1[k] - mean).abs() + (fv2[k] - mean).abs());
    }

    let value = res_kronrod * half;
    res_abs *= half.abs();
    res_asc *= half.abs();
    let mut error = ((res_kronrod - res_gauss) * half).abs();
    if res_asc != 0.0 && error != 0.0 {
        error = res_asc * (200.0 * error / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * res_abs);
    }
    Segment { a, b, value, error }
}

/// Integrates `f` over the finite interval `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: Tolerance) -> Result<Integral> {
    if a == b {
        return Ok(Integral {
            value: 0.0,
            error: 0.0,
            evaluations: 0,
        });
    }
    let first = kronrod21(&f, a, b);
    let mut evaluations = 21;
    let mut value = first.value;
    let mut error = first.error;
    let mut heap = BinaryHeap::new();
    heap.push(first);

    while error > tol.target(value) {
        if !value.is_finite() || !error.is_finite() {
            return Err(Error::Quadrature { error });
        }
        if heap.len() >= MAX_INTERVALS {
            return Err(Error::Quadrature { error });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a.min(worst.b) || mid >= worst.a.max(worst.b) {
            // Segment is at machine resolution; nothing left to refine.
            return Err(Error::Quadrature { error });
        }
        let left = kronrod21(&f, worst.a, mid);
        let right = kronrod21(&f, mid, worst.b);
        evaluations += 42;
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        // Re-sum occasionally so the running totals stay honest.
        if heap.len() % 64 == 0 {
            value = heap.iter().map(|s| s.value).sum();
            error = heap.iter().map(|s| s.error).sum();
        }
    }

    let value: f64 = heap.iter().map(|s| s.value).sum();
    let error: f64 = heap.iter().map(|s| s.error).sum();
    if !value.is_finite() || !error.is_finite() {
        return Err(Error::Quadrature { error });
    }
    Ok(Integral {
        value,
        error,
        evaluations,
    })
}

/// Integrates `f` over `(0, inf)`.
///
/// `scale` should be a typical magnitude of the integrand's support (a
/// median works well); the `v = ln x` axis is split there.
pub fn integrate_positive<F: Fn(f64) -> f64>(f: F, scale: f64, tol: Tolerance) -> Result<Integral> {
    let v0 = if scale > 0.0 && scale.is_finite() {
        scale.ln()
    } else {
        0.0
    };
    let half_tol = Tolerance::new(0.5 * tol.abs, tol.rel);
    let phi = |v: f64| -> f64 {
        let x = v.exp();
        if x == 0.0 || !x.is_finite() {
            return 0.0;
        }
        let y = f(x);
        if y == 0.0 {
            0.0
        } else {
            y * x
        }
    };
    let left = integrate(
        |tau: f64| {
            if tau <= 0.0 {
                return 0.0;
            }
            phi(v0 - (1.0 - tau) / tau) / (tau * tau)
        },
        0.0,
        1.0,
        half_tol,
    )?;
    let right = integrate(
        |tau: f64| {
            if tau <= 0.0 {
                return 0.0;
            }
            phi(v0 + (1.0 - tau) / tau) / (tau * tau)
        },
        0.0,
        1.0,
        half_tol,
    )?;
    Ok(Integral {
        value: left.value + right.value,
        error: left.error + right.error,
        evaluations: left.evaluations + right.evaluations,
    })
}

/// Integrates `f` over `(a, inf)`; `scale` is a typical length of the
/// integrand's support measured from `a`.
pub fn integrate_upper<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    scale: f64,
    tol: Tolerance,
) -> Result<Integral> {
    integrate_positive(|y| f(a + y), scale, tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kronrod_rule_is_exact_for_low_degree_polynomials() {
        for degree in 0..=30 {
            let seg = kronrod21(&|x: f64| x.powi(degree), 0.0, 1.0);
            let exact = 1.0 / (degree as f64 + 1.0);
            assert!((seg.value - exact).abs() < 1e-14, "degree {degree}");
        }
        let gauss_weight: f64 = 2.0 * WG.iter().sum::<f64>();
        let kronrod_weight: f64 = 2.0 * WGK[..10].iter().sum::<f64>() + WGK[10];
        assert!((gauss_weight - 2.0).abs() < 1e-14);
        assert!((kronrod_weight - 2.0).abs() < 1e-14);
    }

    #[test]
    fn finite_interval_with_endpoint_singularity() {
        let r = integrate(|x: f64| x.ln(), 0.0, 1.0, Tolerance::default()).unwrap();
        assert!((r.value + 1.0).abs() < 1e-9);
        let r = integrate(|x: f64| 1.0 / x.sqrt(), 0.0, 1.0, Tolerance::default()).unwrap();
        assert!((r.value - 2.0).abs() < 1e-9);
    }

    #[test]
    fn positive_axis_integrals() {
        let r = integrate_positive(|x: f64| (-x).exp(), 1.0, Tolerance::default()).unwrap();
        assert!((r.value - 1.0).abs() < 1e-10);
        // Gamma(0.3): strong power singularity at the origin.
        let r = integrate_positive(|x: f64| x.powf(-0.7) * (-x).exp(), 1.0, Tolerance::default())
            .unwrap();
        assert!((r.value - 2.991_568_987_687_590_9).abs() < 1e-8);
        let r = integrate_positive(|x: f64| 1.0 / (1.0 + x * x), 1.0, Tolerance::default()).unwrap();
        assert!((r.value - std::f64::consts::FRAC_PI_2).abs() < 1e-9);
    }

    #[test]
    fn upper_tail_integral() {
        let r = integrate_upper(|x: f64| (-x).exp(), 2.0, 1.0, Tolerance::default()).unwrap();
        assert!((r.value - (-2.0f64).exp()).abs() < 1e-11);
    }

    #[test]
    fn reports_divergence() {
        assert!(integrate_positive(|x: f64| 1.0 / (x * x), 1.0, Tolerance::default()).is_err());
        assert!(integrate(|x: f64| 1.0 / x, 0.0, 1.0, Tolerance::default()).is_err());
    }
}
