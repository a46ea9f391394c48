//! Maximum-likelihood estimation: likelihood, score, E-step, direct
//! optimization, EM and observed information.

mod direct;
mod em;
mod information;

pub use direct::{default_starts, direct_mle};
pub use em::{default_em_start, em_fit, q_function};
pub use information::{observed_information, standard_errors};

use std::fmt;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::model::{EewpsModel, Family, BETA, LAMBDA, THETA0};

/// `β` is never pushed beyond this value.
pub const BETA_CAP: f64 = 1e8;
/// Distance to an end of `(0, s)` that counts as boundary proximity.
pub const LAMBDA_BOUNDARY: f64 = 1e-6;
/// `β` beyond this counts as diverging.
pub const BETA_BOUNDARY: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Em,
    Direct,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Em => "em",
            Self::Direct => "direct",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryFlag {
    /// `λ̂ > s − 1e-6`.
    LambdaUpper,
    /// `λ̂ < 1e-6`: the fit has collapsed onto the baseline.
    LambdaLower,
    /// `β̂ > 1e6`.
    BetaDiverging,
}

impl BoundaryFlag {
    pub fn parameter(&self) -> usize {
        match self {
            Self::LambdaUpper | Self::LambdaLower => LAMBDA,
            Self::BetaDiverging => BETA,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub max_iter: usize,
    /// EM stops when the log-likelihood changes by less than this.
    pub tol: f64,
    /// Projected-gradient tolerance for the direct optimizer, on `−ℓ/n`.
    pub gtol: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_iter: 2000,
            tol: 1e-8,
            gtol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterEstimate {
    pub name: String,
    pub value: f64,
    pub fixed: bool,
    pub standard_error: Option<f64>,
}

impl ParameterEstimate {
    /// Wald interval `value ± z·SE` at the given two-sided level.
    pub fn confidence_interval(&self, level: f64) -> Option<(f64, f64)> {
        let se = self.standard_error?;
        let z = Normal::standard().inverse_cdf(0.5 + 0.5 * level);
        Some((self.value - z * se, self.value + z * se))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub family: Family,
    pub method: Method,
    pub parameters: Vec<ParameterEstimate>,
    pub log_likelihood: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Observed-data log-likelihood after each iteration, starting value first.
    pub history: Vec<f64>,
    pub boundary: Vec<BoundaryFlag>,
    pub n: usize,
}

impl FitResult {
    pub(crate) fn new(
        family: &Family,
        method: Method,
        xi: Vec<f64>,
        data: &[f64],
        iterations: usize,
        converged: bool,
        history: Vec<f64>,
    ) -> Result<Self> {
        let model = family.model(&xi)?;
        let log_likelihood = log_likelihood_unchecked(&model, data);
        let boundary = boundary_flags(family, &xi);
        let ses = standard_errors(family, &xi, data, &boundary).unwrap_or_else(|_| vec![None; xi.len()]);
        let parameters = family
            .param_names()
            .into_iter()
            .zip(xi.iter().zip(ses))
            .enumerate()
            .map(|(i, (name, (&value, se)))| ParameterEstimate {
                name: name.to_string(),
                value,
                fixed: !family.is_free(i),
                standard_error: se,
            })
            .collect();
        Ok(Self {
            family: family.clone(),
            method,
            parameters,
            log_likelihood,
            iterations,
            converged,
            history,
            boundary,
            n: data.len(),
        })
    }

    /// `ξ̂ = (α̂, β̂, λ̂, Θ̂)`.
    pub fn estimates(&self) -> Vec<f64> {
        self.parameters.iter().map(|p| p.value).collect()
    }

    pub fn model(&self) -> Result<EewpsModel> {
        self.family.model(&self.estimates())
    }

    /// Free-parameter count `k`.
    pub fn n_free(&self) -> usize {
        self.family.n_free()
    }

    pub fn parameter(&self, name: &str) -> Option<&ParameterEstimate> {
        self.parameters.iter().find(|p| p.name == name)
    }
}

pub fn boundary_flags(family: &Family, xi: &[f64]) -> Vec<BoundaryFlag> {
    let mut flags = Vec::new();
    if family.is_free(LAMBDA) {
        let s = family.compounder.lambda_sup();
        if s.is_finite() && xi[LAMBDA] > s - LAMBDA_BOUNDARY {
            flags.push(BoundaryFlag::LambdaUpper);
        }
        if xi[LAMBDA] < LAMBDA_BOUNDARY {
            flags.push(BoundaryFlag::LambdaLower);
        }
    }
    if family.is_free(BETA) && xi[BETA] > BETA_BOUNDARY {
        flags.push(BoundaryFlag::BetaDiverging);
    }
    flags
}

/// A sorted copy, so results do not depend on input order.
pub(crate) fn canonical(data: &[f64]) -> Vec<f64> {
    let mut v = data.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

pub(crate) fn check_data(data: &[f64]) -> Result<()> {
    if data.is_empty() {
        return Err(Error::Degenerate("empty sample".into()));
    }
    if let Some(x) = data.iter().find(|x| !(**x > 0.0 && x.is_finite())) {
        return Err(Error::Domain {
            name: "observation",
            value: *x,
            domain: "(0, inf)",
        });
    }
    Ok(())
}

/// Observed-data log-likelihood, assembled from its grouped sums.
pub fn log_likelihood(m: &EewpsModel, data: &[f64]) -> Result<f64> {
    check_data(data)?;
    Ok(log_likelihood_unchecked(m, data))
}

pub(crate) fn log_likelihood_unchecked(m: &EewpsModel, data: &[f64]) -> f64 {
    let ps = m.compounder();
    let (alpha, beta, lambda) = (m.alpha(), m.beta(), m.lambda());
    let n = data.len() as f64;
    let mut sum_ln_h = 0.0;
    let mut sum_h = 0.0;
    let mut sum_ln_t = 0.0;
    let mut sum_ln_c1 = 0.0;
    for &x in data {
        let p = m.point(x);
        if p.u == f64::INFINITY || p.ln_h == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        sum_ln_h += p.ln_h;
        sum_h += p.u / alpha;
        sum_ln_t += p.ln_t;
        sum_ln_c1 += ps.ln_c1(lambda * p.tb);
    }
    let power = if beta == 1.0 { 0.0 } else { (beta - 1.0) * sum_ln_t };
    let ll = n * (alpha.ln() + beta.ln() + lambda.ln() - ps.c(lambda).ln()) + sum_ln_h
        - alpha * sum_h
        + power
        + sum_ln_c1;
    if ll.is_nan() {
        f64::NEG_INFINITY
    } else {
        ll
    }
}

/// `H/(e^{αH} − 1)`, i.e. `∂ ln t/∂α`, with its `u → 0` limit `1/α`.
pub(crate) fn h_over_expm1(h: f64, alpha: f64) -> f64 {
    let u = alpha * h;
    if u < 1e-300 {
        1.0 / alpha
    } else {
        h / u.exp_m1()
    }
}

/// Analytic gradient of the log-likelihood with respect to every
/// component of `ξ = (α, β, λ, Θ)`.
pub fn score(m: &EewpsModel, data: &[f64]) -> Result<Vec<f64>> {
    check_data(data)?;
    Ok(score_unchecked(m, data))
}

pub(crate) fn score_unchecked(m: &EewpsModel, data: &[f64]) -> Vec<f64> {
    let ps = m.compounder();
    let g = m.generator();
    let (alpha, beta, lambda) = (m.alpha(), m.beta(), m.lambda());
    let k = g.theta().len();
    let n = data.len() as f64;
    let mut out = vec![0.0; THETA0 + k];
    out[0] = n / alpha;
    out[1] = n / beta;
    out[2] = n / lambda - n * ps.c1(lambda) / ps.c(lambda);
    for &x in data {
        let p = m.point(x);
        let h = p.u / alpha;
        let z = lambda * p.tb;
        let rz = ps.ratio21(z) * z;
        let dlnt_da = h_over_expm1(h, alpha);
        out[0] += -h + (beta - 1.0) * dlnt_da + rz * beta * dlnt_da;
        out[1] += p.ln_t + rz * p.ln_t;
        out[2] += rz / lambda;
        let rate = g.rate_unchecked(x);
        for j in 0..k {
            let dh = g.d_cum_unchecked(x, j);
            let dr = g.d_rate_unchecked(x, j);
            // ∂ ln t/∂Θ = α ∂H/(e^{αH} − 1)
            let dlnt = if p.u > 1e-300 {
                alpha * dh / p.u.exp_m1()
            } else if h > 0.0 {
                dh / h
            } else {
                0.0
            };
            out[THETA0 + j] += dr / rate - alpha * dh + (beta - 1.0) * dlnt + rz * beta * dlnt;
        }
    }
    out
}

/// `E[N | X = xᵢ] = 1 + z C''(z)/C'(z)` with `z = λtᵢ^β`.
pub fn e_step(m: &EewpsModel, data: &[f64]) -> Result<Vec<f64>> {
    check_data(data)?;
    Ok(e_step_unchecked(m, data))
}

pub(crate) fn e_step_unchecked(m: &EewpsModel, data: &[f64]) -> Vec<f64> {
    let ps = m.compounder();
    data.iter()
        .map(|&x| {
            let z = m.lambda() * m.point(x).tb;
            1.0 + z * ps.ratio21(z)
        })
        .collect()
}
