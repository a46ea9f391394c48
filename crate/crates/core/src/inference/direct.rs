use rayon::prelude::*;

use super::{canonical, check_data, log_likelihood_unchecked, score_unchecked, FitOptions, FitResult, Method, BETA_CAP};
use crate::error::{Error, Result};
use crate::generators::GeneratorKind;
use crate::model::{Family, ALPHA, BETA, LAMBDA, THETA0};
use crate::optim::{minimize_box, MinimizeOptions};
use crate::powerseries::PowerSeries;

#[derive(Debug, Clone, Copy)]
enum Transform {
    Log,
    /// `λ = s / (1 + e^{−η})`.
    Logit(f64),
    Identity,
}

impl Transform {
    fn forward(self, v: f64) -> f64 {
        match self {
            Self::Log => v.ln(),
            Self::Logit(s) => {
                let p = v / s;
                (p / (1.0 - p)).ln()
            }
            Self::Identity => v,
        }
    }

    fn inverse(self, eta: f64) -> f64 {
        match self {
            Self::Log => eta.exp(),
            Self::Logit(s) => s / (1.0 + (-eta).exp()),
            Self::Identity => eta,
        }
    }

    /// `dv/dη` at `η`.
    fn derivative(self, eta: f64) -> f64 {
        match self {
            Self::Log => eta.exp(),
            Self::Logit(s) => {
                let p = 1.0 / (1.0 + (-eta).exp());
                s * p * (1.0 - p)
            }
            Self::Identity => 1.0,
        }
    }
}

/// Natural-scale box and transform for component `i` of `ξ`.
fn coordinate(family: &Family, i: usize) -> (Transform, f64, f64) {
    match i {
        ALPHA => (Transform::Log, 1e-10, 1e10),
        BETA => (Transform::Log, 1e-10, BETA_CAP),
        LAMBDA => match family.compounder {
            PowerSeries::Geometric | PowerSeries::Logarithmic => {
                let s = family.compounder.lambda_sup();
                (Transform::Logit(s), 1e-10 * s, s * (1.0 - 1e-10))
            }
            PowerSeries::Poisson => (Transform::Log, 1e-10, 500.0),
            PowerSeries::Binomial { .. } => (Transform::Log, 1e-10, 1e4),
        },
        _ => match (family.generator, i - THETA0) {
            (GeneratorKind::ModifiedWeibull, 1) | (GeneratorKind::LinearFailureRate, _) => {
                (Transform::Identity, 0.0, 1e4)
            }
            _ => (Transform::Log, 1e-4, 1e3),
        },
    }
}

/// Maps the free components of `ξ` to an unconstrained-ish box.
pub(crate) struct Coordinates {
    template: Vec<f64>,
    indices: Vec<usize>,
    transforms: Vec<Transform>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    natural: Vec<(f64, f64)>,
}

impl Coordinates {
    pub(crate) fn new(family: &Family) -> Self {
        let mut template = vec![0.0; family.len()];
        family.apply_fixed(&mut template);
        let indices = family.free_indices();
        let mut transforms = Vec::new();
        let (mut lo, mut hi, mut natural) = (Vec::new(), Vec::new(), Vec::new());
        for &i in &indices {
            let (t, a, b) = coordinate(family, i);
            transforms.push(t);
            lo.push(t.forward(a));
            hi.push(t.forward(b));
            natural.push((a, b));
        }
        Self {
            template,
            indices,
            transforms,
            lo,
            hi,
            natural,
        }
    }

    pub(crate) fn to_eta(&self, xi: &[f64]) -> Vec<f64> {
        self.indices
            .iter()
            .zip(&self.transforms)
            .zip(&self.natural)
            .map(|((&i, t), (a, b))| t.forward(xi[i].clamp(*a, *b)))
            .collect()
    }

    /// `dξᵢ/dη` for each free component.
    pub(crate) fn jacobian(&self, eta: &[f64]) -> Vec<f64> {
        self.transforms.iter().zip(eta).map(|(t, &e)| t.derivative(e)).collect()
    }

    pub(crate) fn bounds(&self) -> (&[f64], &[f64]) {
        (&self.lo, &self.hi)
    }

    pub(crate) fn to_xi(&self, eta: &[f64]) -> Vec<f64> {
        let mut xi = self.template.clone();
        for (((&i, t), &e), (a, b)) in self.indices.iter().zip(&self.transforms).zip(eta).zip(&self.natural) {
            xi[i] = t.inverse(e).clamp(*a, *b);
        }
        xi
    }
}

/// A spread of starting points around the profile value `α₀ = n/ΣH(x; Θ₀)`.
pub fn default_starts(family: &Family, data: &[f64]) -> Vec<Vec<f64>> {
    let mean = data.iter().sum::<f64>() / data.len().max(1) as f64;
    let scale = if mean > 0.0 && mean.is_finite() { 1.0 / mean } else { 1.0 };
    let thetas: Vec<Vec<f64>> = match family.generator {
        GeneratorKind::Exponential => vec![vec![]],
        GeneratorKind::Weibull => [0.5, 1.0, 2.0, 4.0].iter().map(|g| vec![*g]).collect(),
        GeneratorKind::Chen => [0.3, 0.7, 1.5].iter().map(|g| vec![*g]).collect(),
        GeneratorKind::Gompertz => [0.1, 1.0, 5.0].iter().map(|g| vec![g * scale]).collect(),
        GeneratorKind::ModifiedWeibull => {
            let mut v = Vec::new();
            for g in [0.5, 1.0, 2.0] {
                for t in [0.0, scale] {
                    v.push(vec![g, t]);
                }
            }
            v
        }
        GeneratorKind::LinearFailureRate => vec![
            vec![scale, scale * scale],
            vec![0.1 * scale, 10.0 * scale * scale],
            vec![10.0 * scale, 0.1 * scale * scale],
        ],
    };
    let betas = [0.5, 1.0, 5.0, 50.0];
    let s = family.compounder.lambda_sup();
    let lambdas: Vec<f64> = if s.is_finite() {
        vec![0.1 * s, 0.5 * s, 0.9 * s]
    } else {
        vec![0.1, 1.0, 5.0]
    };

    let mut starts: Vec<Vec<f64>> = Vec::new();
    for theta in &thetas {
        let Ok(g) = family.generator.with_theta(theta) else {
            continue;
        };
        let sum_h: f64 = data.iter().map(|&x| g.cumulative(x).unwrap_or(f64::NAN)).sum();
        let alpha0 = if sum_h > 0.0 && sum_h.is_finite() {
            data.len() as f64 / sum_h
        } else {
            1.0
        };
        for &beta in &betas {
            for &lambda in &lambdas {
                let mut xi = vec![alpha0, beta, lambda];
                xi.extend_from_slice(theta);
                family.apply_fixed(&mut xi);
                if !starts.contains(&xi) {
                    starts.push(xi);
                }
            }
        }
    }
    starts
}

struct Run {
    xi: Vec<f64>,
    ll: f64,
    iterations: usize,
    converged: bool,
    history: Vec<f64>,
}

fn run_start(family: &Family, coords: &Coordinates, data: &[f64], start: &[f64], options: &FitOptions) -> Option<Run> {
    let n = data.len() as f64;
    let objective = |eta: &[f64]| -> (f64, Vec<f64>) {
        let xi = coords.to_xi(eta);
        let Ok(model) = family.model(&xi) else {
            return (f64::INFINITY, vec![f64::NAN; eta.len()]);
        };
        let ll = log_likelihood_unchecked(&model, data);
        if !ll.is_finite() {
            return (f64::INFINITY, vec![f64::NAN; eta.len()]);
        }
        let full = score_unchecked(&model, data);
        let grad = coords
            .indices
            .iter()
            .zip(&coords.transforms)
            .zip(eta)
            .map(|((&i, t), &e)| -full[i] * t.derivative(e) / n)
            .collect();
        (-ll / n, grad)
    };
    let mut xi0 = start.to_vec();
    family.apply_fixed(&mut xi0);
    let eta0 = coords.to_eta(&xi0);
    let opts = MinimizeOptions {
        max_iter: options.max_iter,
        gtol: options.gtol,
        ..MinimizeOptions::default()
    };
    let min = minimize_box(objective, &eta0, &coords.lo, &coords.hi, opts)?;
    Some(Run {
        xi: coords.to_xi(&min.x),
        ll: -min.value * n,
        iterations: min.iterations,
        converged: min.converged,
        history: min.history.iter().map(|v| -v * n).collect(),
    })
}

/// Maximizes the likelihood from every start (in parallel) and keeps the
/// best: highest log-likelihood, ties to the lexicographically smallest `ξ`.
pub fn direct_mle(family: &Family, data: &[f64], starts: &[Vec<f64>], options: &FitOptions) -> Result<FitResult> {
    check_data(data)?;
    let data = &canonical(data)[..];
    if starts.is_empty() {
        return Err(Error::Degenerate("no starting values".into()));
    }
    if data.len() < family.n_free() {
        return Err(Error::Degenerate(format!(
            "{} observations cannot identify {} free parameters",
            data.len(),
            family.n_free()
        )));
    }
    for s in starts {
        if s.len() != family.len() {
            return Err(Error::ParameterCount {
                expected: family.len(),
                got: s.len(),
            });
        }
    }
    let coords = Coordinates::new(family);
    let runs: Vec<Option<Run>> = starts
        .par_iter()
        .map(|s| run_start(family, &coords, data, s, options))
        .collect();
    let best = runs
        .into_iter()
        .flatten()
        .filter(|r| r.ll.is_finite())
        .reduce(|a, b| {
            let better = b.ll > a.ll
                || (b.ll == a.ll && b.xi.partial_cmp(&a.xi) == Some(std::cmp::Ordering::Less));
            if better {
                b
            } else {
                a
            }
        });
    let Some(best) = best else {
        return Err(Error::NoConvergence {
            iterations: 0,
            history: Vec::new(),
        });
    };
    FitResult::new(
        family,
        Method::Direct,
        best.xi,
        data,
        best.iterations,
        best.converged,
        best.history,
    )
}
