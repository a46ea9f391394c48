//! The compound distribution `X = max(Y₁, …, Y_N)` with `Yᵢ` iid
//! exponentiated extended Weibull and `N` zero-truncated power series.

use std::fmt;

use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_positive, Error, Result};
use crate::generators::{Generator, GeneratorKind};
use crate::powerseries::PowerSeries;

/// Index of each scalar parameter in the flat vector `ξ = (α, β, λ, Θ)`.
pub const ALPHA: usize = 0;
pub const BETA: usize = 1;
pub const LAMBDA: usize = 2;
pub const THETA0: usize = 3;

/// `ln(1 − e^{−u})` for `u ≥ 0`.
pub(crate) fn ln_one_minus_exp_neg(u: f64) -> f64 {
    if u > std::f64::consts::LN_2 {
        (-(-u).exp()).ln_1p()
    } else {
        (-(-u).exp_m1()).ln()
    }
}

/// `ln t` at `x` given `u = αH(x)`, switching to `ln α + ln H` where `u`
/// loses precision to underflow.
pub(crate) fn ln_t_at(generator: &Generator, alpha: f64, u: f64, x: f64) -> f64 {
    if u < 1e-280 {
        alpha.ln() + generator.ln_cum(x)
    } else {
        ln_one_minus_exp_neg(u)
    }
}

/// Per-point quantities shared by the pdf, cdf, hazard and score.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Point {
    /// `αH(x)`
    pub u: f64,
    /// `ln t`, `t = 1 − e^{−αH}`
    pub ln_t: f64,
    /// `t^β`
    pub tb: f64,
    /// `1 − t^β`
    pub w: f64,
    /// `ln h(x)`
    pub ln_h: f64,
}

/// The exponentiated extended Weibull baseline, cdf `(1 − e^{−αH})^β`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EewDistribution {
    generator: Generator,
    alpha: f64,
    beta: f64,
}

impl EewDistribution {
    pub fn new(generator: Generator, alpha: f64, beta: f64) -> Result<Self> {
        check_positive("alpha", alpha)?;
        check_positive("beta", beta)?;
        Ok(Self {
            generator,
            alpha,
            beta,
        })
    }

    pub fn generator(&self) -> &Generator {
        &self.generator
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    fn ln_t(&self, x: f64) -> f64 {
        let u = self.alpha * self.generator.cum(x);
        ln_t_at(&self.generator, self.alpha, u, x)
    }

    pub fn ln_pdf(&self, x: f64) -> Result<f64> {
        if !(x > 0.0) {
            return Err(Error::Domain {
                name: "x",
                value: x,
                domain: "(0, inf)",
            });
        }
        let u = self.alpha * self.generator.cum(x);
        if u == f64::INFINITY {
            return Ok(f64::NEG_INFINITY);
        }
        let power = if self.beta == 1.0 {
            0.0
        } else {
            (self.beta - 1.0) * ln_t_at(&self.generator, self.alpha, u, x)
        };
        Ok(self.alpha.ln() + self.beta.ln() + self.generator.ln_rate_unchecked(x) - u + power)
    }

    pub fn pdf(&self, x: f64) -> Result<f64> {
        self.ln_pdf(x).map(f64::exp)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        (self.beta * self.ln_t(x)).exp()
    }

    pub fn sf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 1.0;
        }
        -(self.beta * self.ln_t(x)).exp_m1()
    }

    /// `G⁻¹(y) = H⁻¹(−ln(1 − y^{1/β}) / α)`.
    pub fn quantile(&self, y: f64) -> Result<f64> {
        if !(y > 0.0 && y < 1.0) {
            return Err(Error::Domain {
                name: "u",
                value: y,
                domain: "(0, 1)",
            });
        }
        Ok(self.quantile_unchecked(y))
    }

    pub(crate) fn quantile_unchecked(&self, y: f64) -> f64 {
        let one_minus = -(y.ln() / self.beta).exp_m1();
        let target = -one_minus.ln() / self.alpha;
        self.generator.inv(target)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EewpsModel {
    generator: Generator,
    compounder: PowerSeries,
    alpha: f64,
    beta: f64,
    lambda: f64,
}

impl EewpsModel {
    pub fn new(
        generator: Generator,
        compounder: PowerSeries,
        alpha: f64,
        beta: f64,
        lambda: f64,
    ) -> Result<Self> {
        check_positive("alpha", alpha)?;
        check_positive("beta", beta)?;
        compounder.check_lambda(lambda)?;
        if generator.kind() == GeneratorKind::LinearFailureRate && alpha != 1.0 {
            return Err(Error::Domain {
                name: "alpha",
                value: alpha,
                domain: "{1} for the linear-failure-rate generator",
            });
        }
        Ok(Self {
            generator,
            compounder,
            alpha,
            beta,
            lambda,
        })
    }

    /// Builds a model from `ξ = (α, β, λ, Θ)`.
    pub fn from_params(kind: GeneratorKind, compounder: PowerSeries, xi: &[f64]) -> Result<Self> {
        if xi.len() != THETA0 + kind.theta_len() {
            return Err(Error::ParameterCount {
                expected: THETA0 + kind.theta_len(),
                got: xi.len(),
            });
        }
        let generator = Generator::new(kind, xi[THETA0..].to_vec())?;
        Self::new(generator, compounder, xi[ALPHA], xi[BETA], xi[LAMBDA])
    }

    pub fn generator(&self) -> &Generator {
        &self.generator
    }

    pub fn compounder(&self) -> PowerSeries {
        self.compounder
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// The flat parameter vector `ξ = (α, β, λ, Θ)`.
    pub fn params(&self) -> Vec<f64> {
        let mut xi = vec![self.alpha, self.beta, self.lambda];
        xi.extend_from_slice(self.generator.theta());
        xi
    }

    /// The `N = 1` component, `EEW(α, β, Θ)`.
    pub fn baseline(&self) -> EewDistribution {
        EewDistribution {
            generator: self.generator.clone(),
            alpha: self.alpha,
            beta: self.beta,
        }
    }

    pub(crate) fn point(&self, x: f64) -> Point {
        let u = self.alpha * self.generator.cum(x);
        let ln_t = ln_t_at(&self.generator, self.alpha, u, x);
        let bl = self.beta * ln_t;
        Point {
            u,
            ln_t,
            tb: bl.exp(),
            w: -bl.exp_m1(),
            ln_h: self.generator.ln_rate_unchecked(x),
        }
    }

    fn check_x(x: f64) -> Result<()> {
        if x > 0.0 && !x.is_nan() {
            Ok(())
        } else {
            Err(Error::Domain {
                name: "x",
                value: x,
                domain: "(0, inf)",
            })
        }
    }

    pub(crate) fn ln_pdf_unchecked(&self, x: f64) -> f64 {
        let p = self.point(x);
        if p.u == f64::INFINITY {
            return f64::NEG_INFINITY;
        }
        let power = if self.beta == 1.0 {
            0.0
        } else {
            (self.beta - 1.0) * p.ln_t
        };
        let ps = self.compounder;
        self.alpha.ln() + self.beta.ln() + self.lambda.ln() + p.ln_h - p.u + power
            + ps.ln_c1(self.lambda * p.tb)
            - ps.c(self.lambda).ln()
    }

    pub fn ln_pdf(&self, x: f64) -> Result<f64> {
        Self::check_x(x)?;
        Ok(self.ln_pdf_unchecked(x))
    }

    pub fn pdf(&self, x: f64) -> Result<f64> {
        self.ln_pdf(x).map(f64::exp)
    }

    pub(crate) fn pdf_unchecked(&self, x: f64) -> f64 {
        self.ln_pdf_unchecked(x).exp()
    }

    /// `C(λt^β)/C(λ)`; zero for `x ≤ 0`.
    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let p = self.point(x);
        let ps = self.compounder;
        ps.c(self.lambda * p.tb) / ps.c(self.lambda)
    }

    /// `1 − cdf`, computed without cancellation in the upper tail.
    pub fn sf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 1.0;
        }
        let p = self.point(x);
        let ps = self.compounder;
        ps.drop(self.lambda, p.w) / ps.c(self.lambda)
    }

    /// `ln` of the hazard `f/(1 − F)`; `+∞` only once `H` itself overflows.
    pub fn ln_hazard(&self, x: f64) -> Result<f64> {
        Self::check_x(x)?;
        let p = self.point(x);
        if p.u == f64::INFINITY {
            return Ok(f64::INFINITY);
        }
        let ps = self.compounder;
        let ln_drop = self.ln_drop_plus_u(&p);
        if ln_drop == f64::NEG_INFINITY {
            return Ok(f64::INFINITY);
        }
        let power = if self.beta == 1.0 {
            0.0
        } else {
            (self.beta - 1.0) * p.ln_t
        };
        Ok(self.alpha.ln() + self.beta.ln() + self.lambda.ln() + p.ln_h + power
            + ps.ln_c1(self.lambda * p.tb)
            - ln_drop)
    }

    /// `ln[C(λ) − C(λt^β)] + αH`. Where `1 − t^β` is tiny the drop is
    /// expanded around `λ`, which keeps the hazard finite after the
    /// survival itself underflows.
    fn ln_drop_plus_u(&self, p: &Point) -> f64 {
        let ps = self.compounder;
        if p.w > 1e-10 {
            return ps.drop(self.lambda, p.w).ln() + p.u;
        }
        let ln_w_plus_u = if p.w > 1e-300 {
            p.w.ln() + p.u
        } else {
            self.beta.ln()
        };
        let lw = self.lambda * p.w;
        let correction = (-0.5 * lw * ps.ratio21(self.lambda)).ln_1p();
        self.lambda.ln() + ln_w_plus_u + ps.ln_c1(self.lambda) + correction
    }

    pub fn hazard(&self, x: f64) -> Result<f64> {
        self.ln_hazard(x).map(f64::exp)
    }

    pub fn quantile(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return Err(Error::Domain {
                name: "u",
                value: u,
                domain: "(0, 1)",
            });
        }
        Ok(self.quantile_unchecked(u))
    }

    pub(crate) fn quantile_unchecked(&self, u: f64) -> f64 {
        let ps = self.compounder;
        let y = ps.c_inv(ps.c(self.lambda) * u) / self.lambda;
        if y >= 1.0 {
            return f64::INFINITY;
        }
        self.baseline().quantile_unchecked(y)
    }

    pub fn median(&self) -> f64 {
        self.quantile_unchecked(0.5)
    }

    /// Inverse-transform draws from a caller-owned stream.
    pub fn sample_with<R: Rng + ?Sized>(&self, rng: &mut R, count: usize) -> Vec<f64> {
        (0..count)
            .map(|_| {
                let u: f64 = rng.sample(Open01);
                self.quantile_unchecked(u)
            })
            .collect()
    }

    /// `count` draws from a ChaCha8 stream seeded with `seed`.
    pub fn sample(&self, count: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.sample_with(&mut rng, count)
    }

    /// `P(N = n)`.
    pub fn count_pmf(&self, n: u64) -> f64 {
        self.compounder
            .pmf(self.lambda, n)
            .expect("lambda validated at construction")
    }

    /// `P(N = n | X = x)`.
    pub fn conditional_n_pmf(&self, x: f64, n: u64) -> Result<f64> {
        let weights = self.conditional_n_distribution(x)?;
        if n == 0 {
            return Ok(0.0);
        }
        Ok(weights.get((n - 1) as usize).copied().unwrap_or(0.0))
    }

    /// `P(N = n | X = x)` for `n = 1, 2, …` (index `n − 1`), normalized by
    /// direct summation of `n·aₙ·zⁿ⁻¹`, `z = λt^β`, until the terms are
    /// negligible.
    pub fn conditional_n_distribution(&self, x: f64) -> Result<Vec<f64>> {
        Self::check_x(x)?;
        let p = self.point(x);
        let z = self.lambda * p.tb;
        let ps = self.compounder;
        let ln_z = z.ln();
        let limit = ps.max_index().unwrap_or(5_000_000);
        let mut ln_w = Vec::new();
        let mut peak = f64::NEG_INFINITY;
        for n in 1..=limit {
            let w = (n as f64).ln() + ps.ln_coefficient(n) + (n - 1) as f64 * ln_z;
            let w = if n == 1 { ps.ln_coefficient(1) } else { w };
            peak = peak.max(w);
            ln_w.push(w);
            let decreasing = n > 1 && w < ln_w[ln_w.len() - 2];
            if decreasing && w < peak - 60.0 {
                break;
            }
        }
        let total: f64 = ln_w.iter().map(|w| (w - peak).exp()).sum();
        Ok(ln_w.iter().map(|w| (w - peak).exp() / total).collect())
    }
}

impl fmt::Display for EewpsModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}/{}(alpha={}, beta={}, lambda={}",
            self.generator.kind(),
            self.compounder,
            self.alpha,
            self.beta,
            self.lambda
        )?;
        for (name, v) in self
            .generator
            .kind()
            .theta_names()
            .iter()
            .zip(self.generator.theta())
        {
            write!(f, ", {name}={v}")?;
        }
        f.write_str(")")
    }
}

/// A generator/compounder pair with an optional set of frozen parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Family {
    pub generator: GeneratorKind,
    pub compounder: PowerSeries,
    /// One entry per component of `ξ`; `Some(v)` freezes it at `v`.
    pub fixed: Vec<Option<f64>>,
}

impl Family {
    /// All parameters free, except `α = 1` for the linear-failure-rate
    /// generator.
    pub fn new(generator: GeneratorKind, compounder: PowerSeries) -> Self {
        let mut fixed = vec![None; THETA0 + generator.theta_len()];
        if generator == GeneratorKind::LinearFailureRate {
            fixed[ALPHA] = Some(1.0);
        }
        Self {
            generator,
            compounder,
            fixed,
        }
    }

    pub fn with_fixed(mut self, index: usize, value: f64) -> Result<Self> {
        if index >= self.fixed.len() {
            return Err(Error::ParameterIndex {
                index,
                len: self.fixed.len(),
            });
        }
        if index == ALPHA && self.generator == GeneratorKind::LinearFailureRate && value != 1.0 {
            return Err(Error::Domain {
                name: "alpha",
                value,
                domain: "{1} for the linear-failure-rate generator",
            });
        }
        self.fixed[index] = Some(value);
        Ok(self)
    }

    /// Looks up a named sub-model: `EWG`, `CWG`, `GEG`, `ECL`, `CCL`.
    pub fn preset(name: &str) -> Result<Self> {
        let upper = name.trim().to_ascii_uppercase();
        let (g, c, beta_one) = match upper.as_str() {
            "EWG" => (GeneratorKind::Weibull, PowerSeries::Geometric, false),
            "CWG" => (GeneratorKind::Weibull, PowerSeries::Geometric, true),
            "GEG" => (GeneratorKind::Exponential, PowerSeries::Geometric, false),
            "ECL" => (GeneratorKind::Chen, PowerSeries::Logarithmic, false),
            "CCL" => (GeneratorKind::Chen, PowerSeries::Logarithmic, true),
            _ => {
                return Err(Error::UnknownIdentifier {
                    kind: "preset",
                    name: name.to_string(),
                })
            }
        };
        let family = Self::new(g, c);
        if beta_one {
            family.with_fixed(BETA, 1.0)
        } else {
            Ok(family)
        }
    }

    pub const PRESETS: [&'static str; 5] = ["EWG", "CWG", "GEG", "ECL", "CCL"];

    pub fn len(&self) -> usize {
        self.fixed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fixed.is_empty()
    }

    pub fn param_names(&self) -> Vec<&'static str> {
        let mut names = vec!["alpha", "beta", "lambda"];
        names.extend_from_slice(self.generator.theta_names());
        names
    }

    pub fn free_indices(&self) -> Vec<usize> {
        (0..self.fixed.len())
            .filter(|&i| self.fixed[i].is_none())
            .collect()
    }

    /// Number of free parameters `k`.
    pub fn n_free(&self) -> usize {
        self.fixed.iter().filter(|f| f.is_none()).count()
    }

    pub fn is_free(&self, index: usize) -> bool {
        self.fixed.get(index).is_some_and(|f| f.is_none())
    }

    /// Overwrites frozen components of `xi` with their fixed values.
    pub fn apply_fixed(&self, xi: &mut [f64]) {
        for (x, f) in xi.iter_mut().zip(&self.fixed) {
            if let Some(v) = f {
                *x = *v;
            }
        }
    }

    pub fn model(&self, xi: &[f64]) -> Result<EewpsModel> {
        EewpsModel::from_params(self.generator, self.compounder, xi)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.generator, self.compounder)?;
        let names = self.param_names();
        for (name, v) in names.iter().zip(&self.fixed) {
            if let Some(v) = v {
                write!(f, " {name}={v}")?;
            }
        }
        Ok(())
    }
}

/// The named special-case classes; each is completed by a compounder.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpecialCase {
    /// `β = 1` with any generator.
    Complementary(GeneratorKind),
    /// `H = x`.
    GeneralizedExponential,
    /// `H = ax/α + bx²/2α`, i.e. the linear-failure-rate generator with `α = 1`.
    GeneralizedLinearFailureRate,
    /// `H = x^γ`.
    ExponentiatedWeibull,
    /// `H = x^γ e^{τx}`.
    GeneralizedModifiedWeibull,
    /// `H = (e^{γx} − 1)/γ`.
    GeneralizedGompertz,
}

impl SpecialCase {
    pub fn family(self, compounder: PowerSeries) -> Family {
        match self {
            Self::Complementary(g) => Family::new(g, compounder)
                .with_fixed(BETA, 1.0)
                .expect("beta index exists"),
            Self::GeneralizedExponential => Family::new(GeneratorKind::Exponential, compounder),
            Self::GeneralizedLinearFailureRate => {
                Family::new(GeneratorKind::LinearFailureRate, compounder)
            }
            Self::ExponentiatedWeibull => Family::new(GeneratorKind::Weibull, compounder),
            Self::GeneralizedModifiedWeibull => {
                Family::new(GeneratorKind::ModifiedWeibull, compounder)
            }
            Self::GeneralizedGompertz => Family::new(GeneratorKind::Gompertz, compounder),
        }
    }

    pub fn abbreviation(self) -> &'static str {
        match self {
            Self::Complementary(_) => "CEWPS",
            Self::GeneralizedExponential => "GEPS",
            Self::GeneralizedLinearFailureRate => "GLFRPS",
            Self::ExponentiatedWeibull => "EWPS",
            Self::GeneralizedModifiedWeibull => "GMWPS",
            Self::GeneralizedGompertz => "GGPS",
        }
    }
}
