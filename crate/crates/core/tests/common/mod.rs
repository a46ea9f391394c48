#![allow(dead_code)]

use eewps::{EewpsModel, Generator, GeneratorKind, PowerSeries};
use rand::Rng;

pub const COMPOUNDERS: [PowerSeries; 4] = [
    PowerSeries::Geometric,
    PowerSeries::Poisson,
    PowerSeries::Logarithmic,
    PowerSeries::Binomial { trials: 4 },
];

pub fn random_generator<R: Rng>(rng: &mut R, kind: GeneratorKind) -> Generator {
    let theta = match kind {
        GeneratorKind::Exponential => vec![],
        GeneratorKind::Weibull => vec![rng.random_range(0.5..3.0)],
        GeneratorKind::ModifiedWeibull => {
            vec![rng.random_range(0.5..2.5), rng.random_range(0.0..1.0)]
        }
        GeneratorKind::LinearFailureRate => {
            vec![rng.random_range(0.2..2.0), rng.random_range(0.2..2.0)]
        }
        GeneratorKind::Gompertz => vec![rng.random_range(0.1..2.0)],
        GeneratorKind::Chen => vec![rng.random_range(0.5..2.0)],
    };
    Generator::new(kind, theta).unwrap()
}

pub fn random_lambda<R: Rng>(rng: &mut R, ps: PowerSeries) -> f64 {
    if ps.lambda_sup().is_finite() {
        rng.random_range(0.05..0.95)
    } else {
        rng.random_range(0.1..4.0)
    }
}

pub fn random_model<R: Rng>(rng: &mut R, kind: GeneratorKind, ps: PowerSeries) -> EewpsModel {
    let g = random_generator(rng, kind);
    let alpha = if kind == GeneratorKind::LinearFailureRate {
        1.0
    } else {
        rng.random_range(0.3..3.0)
    };
    let beta = rng.random_range(0.3..3.0);
    let lambda = random_lambda(rng, ps);
    EewpsModel::new(g, ps, alpha, beta, lambda).unwrap()
}

/// Cycles through all generator × compounder pairs.
pub fn combination(i: usize) -> (GeneratorKind, PowerSeries) {
    let g = GeneratorKind::ALL[i % 6];
    let c = COMPOUNDERS[(i / 6) % 4];
    (g, c)
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}
