//! Moments, entropy, mean residual life, stress-strength reliability and
//! order statistics.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma, ln_gamma};

use crate::error::{Error, Result};
use crate::generators::GeneratorKind;
use crate::model::{ln_t_at, EewpsModel};
use crate::quad::{integrate_positive, integrate_upper, Integral, Tolerance};

/// Integration tolerance for moments and other scalar summaries.
pub const QUADRATURE_TOL: Tolerance = Tolerance::new(1e-10, 1e-11);

/// Largest inner index `j` the moment series may reach.
pub const MAX_INNER_TERMS: u64 = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MomentMethod {
    Series,
    Quadrature,
}

/// Diagnostics for a truncated double series.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SeriesTruncation {
    /// Last outer index summed.
    pub n_max: u64,
    /// Largest inner index reached for any `n`.
    pub j_max: u64,
    /// Estimated magnitude of the neglected terms.
    pub tail_bound: f64,
    /// Bound on floating-point cancellation in the summed terms.
    pub rounding_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentResult {
    pub order: u32,
    pub value: f64,
    pub method: MomentMethod,
    /// Absolute error estimate (quadrature) or combined tail and rounding
    /// bound (series).
    pub error: f64,
    pub truncation: Option<SeriesTruncation>,
}

fn check_order(r: u32) -> Result<()> {
    if r == 0 {
        return Err(Error::Domain {
            name: "r",
            value: 0.0,
            domain: "r >= 1",
        });
    }
    Ok(())
}

/// `E[X^r] = ∫ x^r f(x) dx` by adaptive quadrature.
pub fn raw_moment_quadrature(m: &EewpsModel, r: u32) -> Result<MomentResult> {
    check_order(r)?;
    let rf = f64::from(r);
    let Integral { value, error, .. } = integrate_positive(
        |x| (rf * x.ln() + m.ln_pdf_unchecked(x)).exp(),
        m.median(),
        QUADRATURE_TOL,
    )?;
    Ok(MomentResult {
        order: r,
        value,
        method: MomentMethod::Quadrature,
        error,
        truncation: None,
    })
}

/// `E[Y^r]` for `Y ~ EEW(a, 1, Θ)`, i.e. density `a·h·e^{−aH}`.
struct InnerMoments<'a> {
    model: &'a EewpsModel,
    r: u32,
    cache: HashMap<u64, f64>,
}

impl<'a> InnerMoments<'a> {
    fn new(model: &'a EewpsModel, r: u32) -> Self {
        Self {
            model,
            r,
            cache: HashMap::new(),
        }
    }

    fn get(&mut self, j: u64) -> Result<f64> {
        if let Some(v) = self.cache.get(&j) {
            return Ok(*v);
        }
        let a = self.model.alpha() * (j + 1) as f64;
        let rf = f64::from(self.r);
        let g = self.model.generator();
        let v = match g.kind() {
            GeneratorKind::Exponential => gamma(rf + 1.0) * a.powf(-rf),
            GeneratorKind::Weibull => {
                let gm = g.theta()[0];
                (ln_gamma(1.0 + rf / gm) - rf / gm * a.ln()).exp()
            }
            _ => {
                // Median of the baseline: H(x) = ln 2 / a.
                let scale = g.inv(std::f64::consts::LN_2 / a);
                integrate_positive(
                    |x| {
                        let hx = g.cum(x);
                        (rf * x.ln() + a.ln() + g.ln_rate_unchecked(x) - a * hx).exp()
                    },
                    scale,
                    QUADRATURE_TOL,
                )?
                .value
            }
        };
        self.cache.insert(j, v);
        Ok(v)
    }
}

struct InnerSum {
    value: f64,
    abs_sum: f64,
    tail: f64,
    j_max: u64,
}

/// `Σ_j binom(a, j+1)(−1)^j μ'(j)`.
fn inner_sum(a: f64, inner: &mut InnerMoments<'_>) -> Result<InnerSum> {
    let snapped = a.round();
    let a = if (a - snapped).abs() < 1e-12 {
        snapped
    } else {
        a
    };
    let integer = a == snapped;

    let mut binom = a; // binom(a, 1)
    let mut value = 0.0;
    let mut abs_sum = 0.0;
    let mut small_pairs = 0;
    let mut pair = 0.0;
    let mut magnitudes: Vec<f64> = Vec::new();
    let mut j = 0u64;
    loop {
        if binom == 0.0 {
            // Integer a: every later coefficient vanishes.
            return Ok(InnerSum {
                value,
                abs_sum,
                tail: 0.0,
                j_max: j,
            });
        }
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        let term = sign * binom * inner.get(j)?;
        value += term;
        abs_sum += term.abs();
        magnitudes.push(term.abs());
        pair += term;
        if j % 2 == 1 {
            if pair.abs() < 1e-12 {
                small_pairs += 1;
            } else {
                small_pairs = 0;
            }
            pair = 0.0;
            if small_pairs >= 3 {
                break;
            }
        }
        if j >= MAX_INNER_TERMS {
            let reason = format!(
                "inner series for n*beta = {a} did not settle within {MAX_INNER_TERMS} terms"
            );
            return Err(Error::SeriesNonConvergent {
                reason,
                report: SeriesTruncation {
                    n_max: 0,
                    j_max: j,
                    tail_bound: f64::INFINITY,
                    rounding_bound: f64::EPSILON * abs_sum,
                },
            });
        }
        let k = j + 1;
        binom *= (a - k as f64) / (k + 1) as f64;
        j += 1;
    }

    // Beyond j ≈ a the terms share one sign and decay like j^{-p}; bound the
    // remainder by the integral of that power law.
    let tail = if integer {
        0.0
    } else {
        let last = magnitudes.len() - 1;
        let half = last / 2;
        let (t_last, t_half) = (magnitudes[last], magnitudes[half]);
        if t_last == 0.0 {
            0.0
        } else if half == 0 || t_half <= t_last {
            f64::INFINITY
        } else {
            let p = (t_half / t_last).ln() / ((last + 1) as f64 / (half + 1) as f64).ln();
            if p > 1.0 {
                t_last * (last + 1) as f64 / (p - 1.0)
            } else {
                f64::INFINITY
            }
        }
    };
    Ok(InnerSum {
        value,
        abs_sum,
        tail,
        j_max: j,
    })
}

/// `E[X^r]` from the mixture expansion
/// `Σ_n pₙ Σ_j binom(nβ, j+1)(−1)^j E[Y_j^r]`, `Y_j ~ EEW(α(j+1), 1, Θ)`.
///
/// Fails with [`Error::SeriesNonConvergent`] when the truncation or rounding
/// bound exceeds `tol` relative to the result.
pub fn raw_moment_series(m: &EewpsModel, r: u32, tol: f64) -> Result<MomentResult> {
    check_order(r)?;
    let ps = m.compounder();
    let lambda = m.lambda();
    let mut inner = InnerMoments::new(m, r);
    let mut report = SeriesTruncation::default();
    let mut total = 0.0;
    let mut mass = 0.0;
    let mut last_abs = 0.0;
    let limit = ps.max_index().unwrap_or(u64::MAX);
    let mut n = ps.min_index();
    loop {
        let p = ps.pmf(lambda, n)?;
        if p > 0.0 {
            let s = inner_sum(n as f64 * m.beta(), &mut inner).map_err(|e| match e {
                Error::SeriesNonConvergent { reason, mut report } => {
                    report.n_max = n;
                    Error::SeriesNonConvergent { reason, report }
                }
                other => other,
            })?;
            total += p * s.value;
            mass += p;
            last_abs = s.value.abs();
            report.j_max = report.j_max.max(s.j_max);
            report.tail_bound += p * s.tail;
            // Each summand carries a relative rounding error of a few ulps.
            report.rounding_bound += p * 4.0 * f64::EPSILON * s.abs_sum * (s.j_max + 1) as f64;
        }
        report.n_max = n;
        let past_mode = n as f64 > ps.mean_unchecked(lambda);
        if n >= limit || (past_mode && p < 1e-14 * mass) {
            break;
        }
        n += 1;
    }
    // Moments of the N = n components grow at most geometrically in n; the
    // neglected pmf mass times the last component moment bounds the rest.
    report.tail_bound += (1.0 - mass).max(0.0) * last_abs * 2.0;

    let bound = report.tail_bound + report.rounding_bound;
    if !(bound <= tol * total.abs()) || !total.is_finite() {
        let reason = format!(
            "truncation bound {bound:.3e} exceeds tolerance {:.1e} relative to {total:.6}",
            tol
        );
        return Err(Error::SeriesNonConvergent { reason, report });
    }
    Ok(MomentResult {
        order: r,
        value: total,
        method: MomentMethod::Series,
        error: bound,
        truncation: Some(report),
    })
}

/// `−∫ f ln f`.
pub fn shannon_entropy(m: &EewpsModel) -> Result<f64> {
    let r = integrate_positive(
        |x| {
            let lp = m.ln_pdf_unchecked(x);
            if lp == f64::NEG_INFINITY {
                0.0
            } else {
                -lp.exp() * lp
            }
        },
        m.median(),
        QUADRATURE_TOL,
    )?;
    Ok(r.value)
}

/// Entropy assembled term by term from expectations over the baseline
/// `Y ~ EEW(α, β, Θ)`, using `E[φ(X)] = λ/C(λ) · E[C'(λG(Y)) φ(Y)]`:
///
/// `−ln(αβλ) + ln C(λ) − E[ln C'(λt^β)] − (β−1)E[ln t] − E[ln h] + αE[H]`.
pub fn shannon_entropy_expression(m: &EewpsModel) -> Result<f64> {
    let ps = m.compounder();
    let lambda = m.lambda();
    let base = m.baseline();
    let g = m.generator();
    let (alpha, beta) = (m.alpha(), m.beta());
    let scale = base.quantile_unchecked(0.5);
    let weight = lambda / ps.c(lambda);

    let expect = |phi: &dyn Fn(f64, f64) -> f64| -> Result<f64> {
        let r = integrate_positive(
            |y| {
                let lg = base.ln_pdf(y).unwrap_or(f64::NEG_INFINITY);
                if lg == f64::NEG_INFINITY {
                    return 0.0;
                }
                let ln_t = ln_t_at(g, alpha, alpha * g.cum(y), y);
                let z = lambda * (beta * ln_t).exp();
                ps.c1(z) * lg.exp() * phi(y, ln_t)
            },
            scale,
            QUADRATURE_TOL,
        )?;
        Ok(weight * r.value)
    };

    let e_ln_c1 = expect(&|_, ln_t| ps.ln_c1(lambda * (beta * ln_t).exp()))?;
    let e_ln_t = expect(&|_, ln_t| ln_t)?;
    let e_ln_h = expect(&|y, _| g.ln_rate_unchecked(y))?;
    let e_h = expect(&|y, _| g.cum(y))?;

    Ok(-(alpha * beta * lambda).ln() + ps.c(lambda).ln() - e_ln_c1 - (beta - 1.0) * e_ln_t - e_ln_h
        + alpha * e_h)
}

/// `E[X − t | X > t] = ∫_t^∞ S(x) dx / S(t)`.
pub fn mean_residual_life(m: &EewpsModel, t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::Domain {
            name: "t",
            value: t,
            domain: "[0, inf)",
        });
    }
    let s_t = m.sf(t);
    if s_t <= 1e-12 {
        return Err(Error::Degenerate(format!(
            "survival at t = {t} is {s_t:e}; the residual life is not resolvable"
        )));
    }
    let median = m.median();
    let scale = if t < median { median - t } else { median.min(t).max(1e-300) };
    let r = integrate_upper(|x| m.sf(x), t, scale, QUADRATURE_TOL)?;
    Ok(r.value / s_t)
}

/// `P(X > Y) = ∫ f·F` for independent `X, Y` from `m`.
pub fn reliability_same(m: &EewpsModel) -> Result<f64> {
    let r = integrate_positive(|x| m.pdf_unchecked(x) * m.cdf(x), m.median(), QUADRATURE_TOL)?;
    Ok(r.value)
}

fn check_order_stat(i: usize, size: usize) -> Result<()> {
    if i == 0 || i > size {
        return Err(Error::ParameterIndex {
            index: i,
            len: size,
        });
    }
    Ok(())
}

fn ln_binomial(n: usize, k: usize) -> f64 {
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

/// Density of the `i`-th smallest of `size` independent draws.
pub fn order_stat_pdf(m: &EewpsModel, i: usize, size: usize, x: f64) -> Result<f64> {
    check_order_stat(i, size)?;
    let lf = m.ln_pdf(x)?;
    if lf == f64::NEG_INFINITY {
        return Ok(0.0);
    }
    let (f_lo, f_hi) = (m.cdf(x), m.sf(x));
    let ln_c = ln_gamma(size as f64 + 1.0)
        - ln_gamma(i as f64)
        - ln_gamma((size - i) as f64 + 1.0);
    let lower = if i == 1 { 0.0 } else { (i - 1) as f64 * f_lo.ln() };
    let upper = if i == size { 0.0 } else { (size - i) as f64 * f_hi.ln() };
    Ok((ln_c + lf + lower + upper).exp())
}

/// Distribution function of the `i`-th order statistic, as
/// `Σ_{k=i}^{m} Σ_{j=0}^{m−k} (−1)^j binom(m−k, j) binom(m, k) F^{j+k}`.
pub fn order_stat_cdf(m: &EewpsModel, i: usize, size: usize, x: f64) -> Result<f64> {
    check_order_stat(i, size)?;
    if x <= 0.0 {
        return Ok(0.0);
    }
    let f = m.cdf(x);
    if i == 1 {
        // The double sum collapses to 1 − S^m.
        return Ok(-(size as f64 * m.sf(x).ln()).exp_m1());
    }
    let mut total = 0.0;
    for k in i..=size {
        let outer = ln_binomial(size, k).exp();
        let mut inner = 0.0;
        for j in 0..=(size - k) {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            inner += sign * ln_binomial(size - k, j).exp() * f.powi((j + k) as i32);
        }
        total += outer * inner;
    }
    Ok(total.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::Generator;
    use crate::powerseries::PowerSeries;

    fn ewg(alpha: f64, beta: f64, lambda: f64, gamma: f64) -> EewpsModel {
        EewpsModel::new(
            Generator::weibull(gamma).unwrap(),
            PowerSeries::Geometric,
            alpha,
            beta,
            lambda,
        )
        .unwrap()
    }

    #[test]
    fn table_row_by_quadrature() {
        let m = ewg(0.3, 0.3, 0.2, 2.0);
        let expected = [0.936, 1.594, 3.520, 9.164];
        for (r, want) in (1..=4).zip(expected) {
            let got = raw_moment_quadrature(&m, r).unwrap().value;
            assert!((got - want).abs() < 0.005, "r={r}: {got}");
        }
    }

    #[test]
    fn integer_beta_series_is_finite() {
        // n = 1 dominates for small λ; binom(2, j+1) vanishes past j = 1.
        let m = ewg(1.0, 2.0, 1e-6, 1.5);
        for r in 1..=3 {
            let s = raw_moment_series(&m, r, 1e-8).unwrap();
            let q = raw_moment_quadrature(&m, r).unwrap();
            assert!((s.value - q.value).abs() <= 1e-8 * q.value.max(1.0), "r={r}");
        }
    }

    #[test]
    fn exponential_mean_limit() {
        let m = EewpsModel::new(Generator::exponential(), PowerSeries::Geometric, 2.0, 1.0, 1e-7)
            .unwrap();
        let q = raw_moment_quadrature(&m, 1).unwrap().value;
        assert!((q - 0.5).abs() < 1e-6);
        let s = raw_moment_series(&m, 1, 1e-8).unwrap().value;
        assert!((s - 0.5).abs() < 1e-6);
    }

    #[test]
    fn slow_inner_series_is_reported() {
        let m = ewg(0.3, 0.3, 0.2, 2.0);
        match raw_moment_series(&m, 4, 1e-8) {
            Err(Error::SeriesNonConvergent { report, .. }) => {
                assert!(report.j_max > 0);
            }
            Ok(r) => {
                let q = raw_moment_quadrature(&m, 4).unwrap().value;
                assert!((r.value - q).abs() <= 1e-4 * q);
            }
            Err(e) => panic!("unexpected error {e}"),
        }
    }

    #[test]
    fn order_statistic_single_draw() {
        let m = ewg(1.0, 1.5, 0.4, 1.2);
        for x in [0.1, 0.5, 1.0, 2.0] {
            assert!((order_stat_pdf(&m, 1, 1, x).unwrap() - m.pdf(x).unwrap()).abs() < 1e-14);
            assert!((order_stat_cdf(&m, 1, 1, x).unwrap() - m.cdf(x)).abs() < 1e-14);
        }
        assert!(order_stat_pdf(&m, 0, 3, 1.0).is_err());
        assert!(order_stat_cdf(&m, 4, 3, 1.0).is_err());
    }

    #[test]
    fn residual_life_rejects_dead_tail() {
        let m = EewpsModel::new(Generator::exponential(), PowerSeries::Geometric, 1.0, 1.0, 0.5)
            .unwrap();
        assert!(matches!(mean_residual_life(&m, 100.0), Err(Error::Degenerate(_))));
        assert!(mean_residual_life(&m, -1.0).is_err());
    }
}
