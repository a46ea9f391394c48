//! Zero-truncated power-series compounders `C(λ) = Σ_{n≥1} aₙ λⁿ`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::roots;

/// Inputs this close to an endpoint of `(0, s)` are rejected.
pub const ENDPOINT_GUARD: f64 = 1e-12;

/// Counts above this are evaluated in log space.
const LOG_SPACE_PMF_FROM: u64 = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PowerSeries {
    Geometric,
    Poisson,
    Logarithmic,
    /// Binomial with a fixed number of trials `m ≥ 1`.
    Binomial { trials: u32 },
}

impl PowerSeries {
    pub const ALL_NAMES: [&'static str; 4] = ["geometric", "poisson", "logarithmic", "binomial:<m>"];

    pub fn binomial(trials: u32) -> Result<Self> {
        if trials == 0 {
            return Err(Error::Domain {
                name: "trials",
                value: 0.0,
                domain: "m >= 1",
            });
        }
        Ok(Self::Binomial { trials })
    }

    /// Supremum `s` of the admissible interval `(0, s)`.
    pub fn lambda_sup(&self) -> f64 {
        match self {
            Self::Geometric | Self::Logarithmic => 1.0,
            Self::Poisson | Self::Binomial { .. } => f64::INFINITY,
        }
    }

    /// `c = min{n : aₙ > 0}`.
    pub fn min_index(&self) -> u64 {
        1
    }

    /// Largest `n` with `aₙ > 0`, if the series is a polynomial.
    pub fn max_index(&self) -> Option<u64> {
        match self {
            Self::Binomial { trials } => Some(u64::from(*trials)),
            _ => None,
        }
    }

    pub fn coefficient(&self, n: u64) -> f64 {
        match self {
            Self::Geometric => f64::from(u8::from(n >= 1)),
            _ if n == 0 => 0.0,
            Self::Logarithmic => 1.0 / n as f64,
            Self::Poisson | Self::Binomial { .. } => {
                let ln = self.ln_coefficient(n);
                if ln == f64::NEG_INFINITY {
                    0.0
                } else {
                    ln.exp()
                }
            }
        }
    }

    pub fn ln_coefficient(&self, n: u64) -> f64 {
        if n == 0 {
            return f64::NEG_INFINITY;
        }
        match self {
            Self::Geometric => 0.0,
            Self::Logarithmic => -(n as f64).ln(),
            Self::Poisson => -ln_factorial(n),
            Self::Binomial { trials } => {
                let m = u64::from(*trials);
                if n > m {
                    f64::NEG_INFINITY
                } else {
                    ln_factorial(m) - ln_factorial(n) - ln_factorial(m - n)
                }
            }
        }
    }

    pub fn check_lambda(&self, lambda: f64) -> Result<()> {
        let sup = self.lambda_sup();
        let inside = lambda > ENDPOINT_GUARD
            && lambda < sup - ENDPOINT_GUARD
            && self.c(lambda).is_finite();
        if inside {
            Ok(())
        } else {
            Err(Error::Domain {
                name: "lambda",
                value: lambda,
                domain: match self {
                    Self::Geometric | Self::Logarithmic => "(0, 1)",
                    _ => "(0, inf) with finite C(lambda)",
                },
            })
        }
    }

    pub fn value(&self, lambda: f64) -> Result<f64> {
        self.check_lambda(lambda)?;
        Ok(self.c(lambda))
    }

    pub fn d1(&self, lambda: f64) -> Result<f64> {
        self.check_lambda(lambda)?;
        Ok(self.c1(lambda))
    }

    pub fn d2(&self, lambda: f64) -> Result<f64> {
        self.check_lambda(lambda)?;
        Ok(self.c2(lambda))
    }

    pub fn d3(&self, lambda: f64) -> Result<f64> {
        self.check_lambda(lambda)?;
        Ok(self.c3(lambda))
    }

    /// `C⁻¹(u)` for `u > 0`.
    pub fn inverse(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u.is_finite()) {
            return Err(Error::Domain {
                name: "u",
                value: u,
                domain: "(0, C(s-))",
            });
        }
        Ok(self.c_inv(u))
    }

    /// `P(N = n) = aₙλⁿ / C(λ)`.
    pub fn pmf(&self, lambda: f64, n: u64) -> Result<f64> {
        self.check_lambda(lambda)?;
        if n < self.min_index() {
            return Ok(0.0);
        }
        if n <= LOG_SPACE_PMF_FROM {
            let a = self.coefficient(n);
            return Ok(a * lambda.powi(n as i32) / self.c(lambda));
        }
        let ln = self.ln_coefficient(n) + n as f64 * lambda.ln() - self.c(lambda).ln();
        Ok(ln.exp())
    }

    /// Mean of the zero-truncated law, `λC'(λ)/C(λ)`.
    pub fn mean(&self, lambda: f64) -> Result<f64> {
        self.check_lambda(lambda)?;
        Ok(self.mean_unchecked(lambda))
    }

    // Unchecked evaluations on the closed interval [0, s). Callers inside
    // the crate evaluate at λ·t^β, which reaches 0 in the left tail.

    pub(crate) fn c(&self, z: f64) -> f64 {
        match self {
            Self::Geometric => z / (1.0 - z),
            Self::Poisson => z.exp_m1(),
            Self::Logarithmic => -(-z).ln_1p(),
            Self::Binomial { trials } => (f64::from(*trials) * z.ln_1p()).exp_m1(),
        }
    }

    pub(crate) fn c1(&self, z: f64) -> f64 {
        match self {
            Self::Geometric => (1.0 - z).powi(-2),
            Self::Poisson => z.exp(),
            Self::Logarithmic => 1.0 / (1.0 - z),
            Self::Binomial { trials } => {
                let m = f64::from(*trials);
                m * (1.0 + z).powf(m - 1.0)
            }
        }
    }

    pub(crate) fn c2(&self, z: f64) -> f64 {
        match self {
            Self::Geometric => 2.0 * (1.0 - z).powi(-3),
            Self::Poisson => z.exp(),
            Self::Logarithmic => (1.0 - z).powi(-2),
            Self::Binomial { trials } => {
                let m = f64::from(*trials);
                if *trials < 2 {
                    0.0
                } else {
                    m * (m - 1.0) * (1.0 + z).powf(m - 2.0)
                }
            }
        }
    }

    pub(crate) fn c3(&self, z: f64) -> f64 {
        match self {
            Self::Geometric => 6.0 * (1.0 - z).powi(-4),
            Self::Poisson => z.exp(),
            Self::Logarithmic => 2.0 * (1.0 - z).powi(-3),
            Self::Binomial { trials } => {
                let m = f64::from(*trials);
                if *trials < 3 {
                    0.0
                } else {
                    m * (m - 1.0) * (m - 2.0) * (1.0 + z).powf(m - 3.0)
                }
            }
        }
    }

    pub(crate) fn ln_c1(&self, z: f64) -> f64 {
        match self {
            Self::Geometric => -2.0 * (-z).ln_1p(),
            Self::Poisson => z,
            Self::Logarithmic => -(-z).ln_1p(),
            Self::Binomial { trials } => {
                let m = f64::from(*trials);
                m.ln() + (m - 1.0) * z.ln_1p()
            }
        }
    }

    /// `C''(z)/C'(z)`.
    pub(crate) fn ratio21(&self, z: f64) -> f64 {
        match self {
            Self::Geometric => 2.0 / (1.0 - z),
            Self::Poisson => 1.0,
            Self::Logarithmic => 1.0 / (1.0 - z),
            Self::Binomial { trials } => {
                let m = f64::from(*trials);
                (m - 1.0) / (1.0 + z)
            }
        }
    }

    /// `C(λ) − C(λ(1 − w))` without cancellation for small `w`.
    pub(crate) fn drop(&self, lambda: f64, w: f64) -> f64 {
        let z = lambda * (1.0 - w);
        match self {
            Self::Geometric => lambda * w / ((1.0 - lambda) * (1.0 - z)),
            Self::Poisson => z.exp() * (lambda * w).exp_m1(),
            Self::Logarithmic => (lambda * w / (1.0 - lambda)).ln_1p(),
            Self::Binomial { trials } => {
                let m = f64::from(*trials);
                (1.0 + z).powf(m) * (m * (lambda * w / (1.0 + z)).ln_1p()).exp_m1()
            }
        }
    }

    pub(crate) fn c_inv(&self, u: f64) -> f64 {
        match self {
            Self::Geometric => u / (1.0 + u),
            Self::Poisson => u.ln_1p(),
            Self::Logarithmic => -(-u).exp_m1(),
            Self::Binomial { trials } => (u.ln_1p() / f64::from(*trials)).exp_m1(),
        }
    }

    pub(crate) fn mean_unchecked(&self, lambda: f64) -> f64 {
        match self {
            Self::Geometric => 1.0 / (1.0 - lambda),
            Self::Poisson => lambda / -(-lambda).exp_m1(),
            Self::Logarithmic => lambda / ((1.0 - lambda) * -(-lambda).ln_1p()),
            Self::Binomial { trials } => {
                let m = f64::from(*trials);
                m * lambda / ((1.0 + lambda) * -(-m * lambda.ln_1p()).exp_m1())
            }
        }
    }

    /// Solves `λC'(λ)/C(λ) = target` on `[lo, hi]`; a root outside the
    /// interval saturates at the nearer end.
    pub fn solve_mean(&self, target: f64, lo: f64, hi: f64) -> Result<f64> {
        if let Self::Geometric = self {
            let lambda = 1.0 - 1.0 / target;
            return Ok(lambda.clamp(lo, hi));
        }
        let g = |eta: f64| self.mean_unchecked(eta.exp()) - target;
        let (a, b) = (lo.ln(), hi.ln());
        let (ga, gb) = (g(a), g(b));
        if ga >= 0.0 {
            return Ok(lo);
        }
        if gb <= 0.0 {
            return Ok(hi);
        }
        let eta = roots::brent(g, a, b, 1e-14, 200)?;
        Ok(eta.exp())
    }

    pub fn name(&self) -> String {
        self.to_string()
    }
}

fn ln_factorial(n: u64) -> f64 {
    if n < 2 {
        0.0
    } else {
        ln_gamma(n as f64 + 1.0)
    }
}

impl fmt::Display for PowerSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Geometric => f.write_str("geometric"),
            Self::Poisson => f.write_str("poisson"),
            Self::Logarithmic => f.write_str("logarithmic"),
            Self::Binomial { trials } => write!(f, "binomial:{trials}"),
        }
    }
}

impl FromStr for PowerSeries {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        match lower.as_str() {
            "geometric" => Ok(Self::Geometric),
            "poisson" => Ok(Self::Poisson),
            "logarithmic" => Ok(Self::Logarithmic),
            other => {
                let unknown = || Error::UnknownIdentifier {
                    kind: "compounder",
                    name: s.to_string(),
                };
                let m = other.strip_prefix("binomial:").ok_or_else(unknown)?;
                let m: u32 = m.parse().map_err(|_| unknown())?;
                Self::binomial(m)
            }
        }
    }
}
