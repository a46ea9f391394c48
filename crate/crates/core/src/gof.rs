//! Goodness-of-fit and model-selection statistics.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::EewpsModel;

const CLAMP: f64 = 1e-15;

fn sorted(data: &[f64]) -> Vec<f64> {
    let mut v = data.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Limiting distribution of `√n Dₙ`: `Q(x) = P(K > x)`.
pub fn kolmogorov_sf(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < 1.0 {
        // P(K ≤ x) = √(2π)/x Σ exp(−(2k−1)²π²/(8x²)); fast for small x.
        let c = -std::f64::consts::PI.powi(2) / (8.0 * x * x);
        let mut sum = 0.0;
        for k in 1..=50 {
            let term = (c * ((2 * k - 1) as f64).powi(2)).exp();
            sum += term;
            if term < 1e-16 * sum {
                break;
            }
        }
        return (1.0 - (2.0 * std::f64::consts::PI).sqrt() / x * sum).clamp(0.0, 1.0);
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let term = (-2.0 * (k * k) as f64 * x * x).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-12 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Kolmogorov–Smirnov statistic and its asymptotic p-value.
pub fn ks<F: Fn(f64) -> f64>(cdf: F, data: &[f64]) -> (f64, f64) {
    let xs = sorted(data);
    let n = xs.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in xs.iter().enumerate() {
        let u = cdf(x);
        d = d.max((i + 1) as f64 / n - u).max(u - i as f64 / n);
    }
    (d, kolmogorov_sf(n.sqrt() * d))
}

/// Cramér–von Mises `W²`.
pub fn cm<F: Fn(f64) -> f64>(cdf: F, data: &[f64]) -> f64 {
    let xs = sorted(data);
    let n = xs.len() as f64;
    let sum: f64 = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| (cdf(x) - (2 * i + 1) as f64 / (2.0 * n)).powi(2))
        .sum();
    1.0 / (12.0 * n) + sum
}

/// Anderson–Darling `A²`. Fitted probabilities within `1e-15` of 0 or 1
/// are pulled onto that guard; exact 0 or 1 is an error.
pub fn ad<F: Fn(f64) -> f64>(cdf: F, data: &[f64]) -> Result<f64> {
    let xs = sorted(data);
    let n = xs.len();
    let mut u = Vec::with_capacity(n);
    for &x in &xs {
        let v = cdf(x);
        if !(v > 0.0 && v < 1.0) {
            return Err(Error::Degenerate(format!(
                "fitted cdf is {v} at x = {x}; Anderson-Darling needs values in (0, 1)"
            )));
        }
        u.push(v.clamp(CLAMP, 1.0 - CLAMP));
    }
    let nf = n as f64;
    let sum: f64 = (0..n)
        .map(|i| (2 * i + 1) as f64 * (u[i].ln() + (-u[n - 1 - i]).ln_1p()))
        .sum();
    Ok(-nf - sum / nf)
}

/// `(AIC, AICC, BIC)`; AICC needs `n > k + 1`.
pub fn information_criteria(loglik: f64, n: usize, k: usize) -> Result<(f64, f64, f64)> {
    let (nf, kf) = (n as f64, k as f64);
    if n <= k + 1 {
        return Err(Error::Domain {
            name: "n",
            value: nf,
            domain: "n > k + 1 for AICC",
        });
    }
    let aic = -2.0 * loglik + 2.0 * kf;
    Ok((aic, aic + 2.0 * kf * (kf + 1.0) / (nf - kf - 1.0), -2.0 * loglik + kf * nf.ln()))
}

#[derive(Debug, Clone, Serialize)]
pub struct GofReport {
    pub ks_stat: f64,
    pub ks_pvalue: f64,
    pub cm_stat: f64,
    pub ad_stat: f64,
    pub aic: f64,
    pub aicc: f64,
    pub bic: f64,
    pub n: usize,
    pub k: usize,
}

impl GofReport {
    pub fn new(model: &EewpsModel, data: &[f64], loglik: f64, k: usize) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::Degenerate("empty sample".into()));
        }
        let cdf = |x: f64| model.cdf(x);
        let (ks_stat, ks_pvalue) = ks(cdf, data);
        let (aic, aicc, bic) = information_criteria(loglik, data.len(), k)?;
        Ok(Self {
            ks_stat,
            ks_pvalue,
            cm_stat: cm(cdf, data),
            ad_stat: ad(cdf, data)?,
            aic,
            aicc,
            bic,
            n: data.len(),
            k,
        })
    }
}
