mod common;

use std::time::Instant;

use common::{combination, random_model, rel_err};
use eewps::properties::{
    mean_residual_life, order_stat_cdf, order_stat_pdf, raw_moment_quadrature, raw_moment_series,
    reliability_same, shannon_entropy, shannon_entropy_expression,
};
use eewps::quad::{integrate, integrate_positive, Tolerance};
use eewps::reproduce::{table1, SeriesCell, TABLE1_TOL};
use eewps::{EewpsModel, Generator, PowerSeries};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn ewg(alpha: f64, beta: f64, lambda: f64, gamma: f64) -> EewpsModel {
    EewpsModel::new(Generator::weibull(gamma).unwrap(), PowerSeries::Geometric, alpha, beta, lambda).unwrap()
}

#[test]
fn moment_table_by_quadrature() {
    let start = Instant::now();
    let rows = table1().unwrap();
    assert_eq!(rows.len(), 24);
    for row in &rows {
        for cell in &row.cells {
            assert!(
                (cell.quadrature - cell.printed).abs() <= TABLE1_TOL,
                "α={} β={} λ={} γ={} r={}: {} vs {}",
                row.alpha,
                row.beta,
                row.lambda,
                row.gamma,
                cell.order,
                cell.quadrature,
                cell.printed
            );
        }
    }
    assert!(start.elapsed().as_secs_f64() < 10.0);
}

#[test]
fn moment_series_agrees_or_reports() {
    let rows = table1().unwrap();
    let mut converged = 0;
    for row in &rows {
        for cell in &row.cells {
            match &cell.series {
                SeriesCell::Converged { value, agrees, .. } => {
                    converged += 1;
                    assert!(*agrees, "series {value} vs quadrature {}", cell.quadrature);
                    assert!(rel_err(*value, cell.quadrature) <= 1e-4);
                }
                SeriesCell::NonConvergent { reason, .. } => assert!(!reason.is_empty()),
            }
        }
    }
    assert!(converged >= 24, "only {converged} converged cells");
}

#[test]
fn spot_rows() {
    let m = ewg(0.3, 0.3, 0.2, 2.0);
    for (r, printed) in [0.936, 1.594, 3.520, 9.164].iter().enumerate() {
        let q = raw_moment_quadrature(&m, r as u32 + 1).unwrap().value;
        assert!((q - printed).abs() < 0.005);
    }
    let m = ewg(2.0, 2.0, 0.8, 5.0);
    for (r, printed) in [1.026, 1.070, 1.131, 1.210].iter().enumerate() {
        let q = raw_moment_quadrature(&m, r as u32 + 1).unwrap().value;
        assert!((q - printed).abs() < 0.005);
    }
}

#[test]
fn integer_beta_series() {
    let m = ewg(1.3, 3.0, 1e-6, 1.5);
    for r in 1..=4 {
        let s = raw_moment_series(&m, r, 1e-12).unwrap().value;
        let q = raw_moment_quadrature(&m, r).unwrap().value;
        assert!(rel_err(s, q) < 1e-8, "r={r}: {s} vs {q}");
    }
}

#[test]
fn exponential_mean() {
    let m = EewpsModel::new(Generator::exponential(), PowerSeries::Geometric, 2.5, 1.0, 1e-10).unwrap();
    assert!((raw_moment_quadrature(&m, 1).unwrap().value - 0.4).abs() < 1e-8);
    assert!((raw_moment_series(&m, 1, 1e-12).unwrap().value - 0.4).abs() < 1e-8);
}

#[test]
fn moment_order_zero_rejected() {
    let m = ewg(1.0, 1.0, 0.5, 1.0);
    assert!(raw_moment_quadrature(&m, 0).is_err());
    assert!(raw_moment_series(&m, 0, 1e-8).is_err());
}

#[test]
fn entropy_routes_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for i in 0..10 {
        let (kind, ps) = combination(i * 5 + 1);
        let m = random_model(&mut rng, kind, ps);
        let a = shannon_entropy(&m).unwrap();
        let b = shannon_entropy_expression(&m).unwrap();
        assert!((a - b).abs() < 1e-3, "{m}: {a} vs {b}");
    }
}

#[test]
fn exponential_entropy() {
    for alpha in [1.0, 0.5, 3.0] {
        let m = EewpsModel::new(Generator::exponential(), PowerSeries::Geometric, alpha, 1.0, 1e-10).unwrap();
        let h = shannon_entropy(&m).unwrap();
        assert!((h - (1.0 - f64::ln(alpha))).abs() < 1e-6, "{h}");
    }
}

#[test]
fn entropy_scaling() {
    // kX under H = x^γ has α' = α·k^{−γ}, and entropy grows by ln k.
    let (alpha, gamma, k): (f64, f64, f64) = (1.4, 1.8, 2.5);
    for ps in common::COMPOUNDERS {
        let base = EewpsModel::new(Generator::weibull(gamma).unwrap(), ps, alpha, 0.7, 0.6).unwrap();
        let scaled =
            EewpsModel::new(Generator::weibull(gamma).unwrap(), ps, alpha * k.powf(-gamma), 0.7, 0.6).unwrap();
        let d = shannon_entropy(&scaled).unwrap() - shannon_entropy(&base).unwrap();
        assert!((d - k.ln()).abs() < 1e-6, "{ps:?}: {d}");
    }
}

#[test]
fn residual_life_at_zero_is_mean() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for i in 0..24 {
        let (kind, ps) = combination(i);
        let m = random_model(&mut rng, kind, ps);
        let mean = raw_moment_quadrature(&m, 1).unwrap().value;
        let mrl = mean_residual_life(&m, 0.0).unwrap();
        assert!(rel_err(mrl, mean) < 1e-6, "{m}: {mrl} vs {mean}");
    }
}

#[test]
fn residual_life_memoryless() {
    let m = EewpsModel::new(Generator::exponential(), PowerSeries::Geometric, 2.0, 1.0, 1e-10).unwrap();
    for t in [0.0, 0.3, 1.0, 4.0, 10.0] {
        assert!((mean_residual_life(&m, t).unwrap() - 0.5).abs() < 1e-4);
    }
}

#[test]
fn residual_life_monte_carlo() {
    let m = EewpsModel::new(Generator::weibull(1.5).unwrap(), PowerSeries::Poisson, 1.2, 0.8, 2.0).unwrap();
    let t = m.median();
    let draws = m.sample(1_000_000, 5);
    let tail: Vec<f64> = draws.iter().filter(|&&x| x > t).map(|x| x - t).collect();
    let n = tail.len() as f64;
    let mean = tail.iter().sum::<f64>() / n;
    let var = tail.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let exact = mean_residual_life(&m, t).unwrap();
    assert!((mean - exact).abs() < 3.0 * (var / n).sqrt(), "{mean} vs {exact}");
}

#[test]
fn reliability_is_one_half() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for i in 0..24 {
        let (kind, ps) = combination(i);
        let m = random_model(&mut rng, kind, ps);
        let r = reliability_same(&m).unwrap();
        assert!((r - 0.5).abs() < 1e-6, "{m}: {r}");
    }
}

/// `Σₙ pₙ ∫₀¹ n uⁿ⁻¹ C(λu)/C(λ) du`, substituting `u = G(x)` for the
/// baseline cdf, integrated by composite Gauss–Legendre.
fn reliability_series(ps: PowerSeries, lambda: f64) -> f64 {
    let nodes = [
        (-0.906_179_845_938_664, 0.236_926_885_056_189_1),
        (-0.538_469_310_105_683, 0.478_628_670_499_366_5),
        (0.0, 0.568_888_888_888_888_9),
        (0.538_469_310_105_683, 0.478_628_670_499_366_5),
        (0.906_179_845_938_664, 0.236_926_885_056_189_1),
    ];
    let c = |z: f64| ps.value(z).unwrap();
    let panels = 400;
    let mut total = 0.0;
    let mut mass = 0.0;
    let max_n = ps.max_index().unwrap_or(400);
    for n in 1..=max_n {
        let p = ps.pmf(lambda, n).unwrap();
        if p == 0.0 {
            continue;
        }
        let mut integral = 0.0;
        for k in 0..panels {
            let (a, b) = (k as f64 / panels as f64, (k + 1) as f64 / panels as f64);
            for (x, w) in nodes {
                let u = 0.5 * (a + b) + 0.5 * (b - a) * x;
                integral += 0.5 * (b - a) * w * n as f64 * u.powi(n as i32 - 1) * c(lambda * u) / c(lambda);
            }
        }
        total += p * integral;
        mass += p;
        if 1.0 - mass < 1e-15 {
            break;
        }
    }
    total
}

#[test]
fn reliability_series_form() {
    for ps in common::COMPOUNDERS {
        let lambda = if ps.lambda_sup().is_finite() { 0.6 } else { 1.7 };
        let m = EewpsModel::new(Generator::gompertz(0.7).unwrap(), ps, 1.1, 1.9, lambda).unwrap();
        let series = reliability_series(ps, lambda);
        let r = reliability_same(&m).unwrap();
        assert!((r - series).abs() < 1e-6, "{ps:?}: {r} vs {series}");
    }
}

#[test]
fn reliability_monte_carlo() {
    let m = EewpsModel::new(Generator::chen(0.8).unwrap(), PowerSeries::Logarithmic, 0.9, 1.3, 0.7).unwrap();
    let draws = m.sample(2_000_000, 6);
    let pairs = draws.len() / 2;
    let wins = draws.chunks(2).filter(|p| p[0] > p[1]).count();
    let p = wins as f64 / pairs as f64;
    let se = (0.25 / pairs as f64).sqrt();
    assert!((p - 0.5).abs() < 3.0 * se, "{p}");
}

fn binomial_tail(f: f64, i: usize, size: usize) -> f64 {
    let mut total = 0.0;
    for k in i..=size {
        let mut coef = 1.0;
        for j in 0..k {
            coef *= (size - j) as f64 / (j + 1) as f64;
        }
        total += coef * f.powi(k as i32) * (1.0 - f).powi((size - k) as i32);
    }
    total
}

#[test]
fn order_statistic_cdf_is_binomial_tail() {
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    for c in 0..24 {
        let (kind, ps) = combination(c);
        let m = random_model(&mut rng, kind, ps);
        for q in [0.1, 0.5, 0.9] {
            let x = m.quantile(q).unwrap();
            let f = m.cdf(x);
            for size in 1..=8 {
                for i in 1..=size {
                    let a = order_stat_cdf(&m, i, size, x).unwrap();
                    let b = binomial_tail(f, i, size);
                    assert!((a - b).abs() < 1e-10, "{m}: i={i} m={size} x={x}: {a} vs {b}");
                }
            }
        }
    }
}

#[test]
fn order_statistic_minimum_and_single() {
    let m = EewpsModel::new(Generator::weibull(2.2).unwrap(), PowerSeries::Binomial { trials: 4 }, 1.5, 0.6, 0.9)
        .unwrap();
    for x in [0.05, 0.4, 1.0, 2.5] {
        let s = 1.0 - m.cdf(x);
        for size in [1, 3, 10, 40] {
            let a = order_stat_cdf(&m, 1, size, x).unwrap();
            assert!((a - (1.0 - s.powi(size as i32))).abs() < 1e-12);
        }
        assert!((order_stat_cdf(&m, 1, 1, x).unwrap() - m.cdf(x)).abs() < 1e-15);
        assert!(rel_err(order_stat_pdf(&m, 1, 1, x).unwrap(), m.pdf(x).unwrap()) < 1e-13);
    }
    assert!(order_stat_cdf(&m, 0, 3, 1.0).is_err());
    assert!(order_stat_pdf(&m, 4, 3, 1.0).is_err());
}

#[test]
fn order_statistic_density_integrates_to_one() {
    let m = EewpsModel::new(Generator::gompertz(0.4).unwrap(), PowerSeries::Poisson, 0.8, 1.7, 2.2).unwrap();
    let tol = Tolerance::new(1e-12, 1e-10);
    for (i, size) in [(1, 1), (1, 5), (3, 5), (5, 5), (4, 9)] {
        let total = integrate_positive(|x| order_stat_pdf(&m, i, size, x).unwrap(), m.median(), tol)
            .unwrap()
            .value;
        assert!((total - 1.0).abs() < 1e-6, "i={i} m={size}: {total}");
        // cdf is the integral of the pdf.
        let x = m.quantile(0.3).unwrap();
        let part = integrate(|t| order_stat_pdf(&m, i, size, t).unwrap(), 0.0, x, tol).unwrap().value;
        assert!((part - order_stat_cdf(&m, i, size, x).unwrap()).abs() < 1e-8);
    }
}
