use super::direct::Coordinates;
use super::{canonical, 
    check_data, e_step_unchecked, h_over_expm1, log_likelihood_unchecked, FitOptions, FitResult, Method,
    BETA_CAP,
};
use crate::error::{Error, Result};
use crate::generators::GeneratorKind;
use crate::model::{EewpsModel, Family, ALPHA, BETA, LAMBDA, THETA0};
use crate::optim::{minimize_box, MinimizeOptions};
use crate::roots;

/// Expected complete-data log-likelihood given expected counts `z`, up to
/// terms free of `ξ`:
///
/// `n ln α + n ln β + Σ ln h − αΣH + Σ(zᵢβ − 1) ln tᵢ + ln λ Σzᵢ − n ln C(λ)`.
pub fn q_function(m: &EewpsModel, data: &[f64], z: &[f64]) -> f64 {
    let ps = m.compounder();
    let (alpha, beta, lambda) = (m.alpha(), m.beta(), m.lambda());
    let n = data.len() as f64;
    let mut total = n * (alpha.ln() + beta.ln()) - n * ps.c(lambda).ln();
    for (&x, &zi) in data.iter().zip(z) {
        let p = m.point(x);
        if p.u == f64::INFINITY {
            return f64::NEG_INFINITY;
        }
        let power = if zi * beta == 1.0 { 0.0 } else { (zi * beta - 1.0) * p.ln_t };
        total += p.ln_h - p.u + power + zi * lambda.ln();
    }
    if total.is_nan() {
        f64::NEG_INFINITY
    } else {
        total
    }
}

fn q_at(family: &Family, xi: &[f64], data: &[f64], z: &[f64]) -> f64 {
    family
        .model(xi)
        .map(|m| q_function(&m, data, z))
        .unwrap_or(f64::NEG_INFINITY)
}

/// Moves component `i` from its current value towards `proposal`, halving
/// the step on the log scale until `Q` does not decrease.
fn ascend(family: &Family, xi: &mut [f64], i: usize, proposal: f64, data: &[f64], z: &[f64], q: &mut f64) {
    let old = xi[i];
    if !(proposal > 0.0) || proposal == old {
        return;
    }
    let (a, b) = (old.ln(), proposal.ln());
    let mut w = 1.0;
    for _ in 0..40 {
        xi[i] = (a + w * (b - a)).exp();
        let q_new = q_at(family, xi, data, z);
        if q_new >= *q {
            *q = q_new;
            return;
        }
        w *= 0.5;
    }
    xi[i] = old;
}

fn alpha_step(family: &Family, xi: &[f64], data: &[f64], z: &[f64]) -> Option<f64> {
    let m = family.model(xi).ok()?;
    let g = m.generator();
    let beta = m.beta();
    let n = data.len() as f64;
    let hs: Vec<f64> = data.iter().map(|&x| g.cumulative(x).unwrap_or(f64::NAN)).collect();
    let sum_h: f64 = hs.iter().sum();
    // n/α − ΣH + Σ(zᵢβ − 1) H/(e^{αH} − 1), on η = ln α.
    let equation = |eta: f64| {
        let a = eta.exp();
        let mut v = n / a - sum_h;
        for (h, zi) in hs.iter().zip(z) {
            v += (zi * beta - 1.0) * h_over_expm1(*h, a);
        }
        v
    };
    let eta0 = xi[ALPHA].ln();
    let (lo, hi) = roots::expand_bracket(&equation, eta0 - 0.5, eta0 + 0.5, 60).ok()?;
    let eta = roots::brent(equation, lo, hi, 1e-13, 200).ok()?;
    Some(eta.exp())
}

fn theta_step(family: &Family, xi: &[f64], data: &[f64], z: &[f64]) -> Option<Vec<f64>> {
    // Everything except Θ frozen at its current value.
    let mut sub = family.clone();
    for i in 0..THETA0 {
        sub.fixed[i] = Some(xi[i]);
    }
    if sub.n_free() == 0 {
        return None;
    }
    let coords = Coordinates::new(&sub);
    let n = data.len() as f64;
    let (alpha, beta) = (xi[ALPHA], xi[BETA]);
    let free = sub.free_indices();
    let objective = |eta: &[f64]| -> (f64, Vec<f64>) {
        let v = coords.to_xi(eta);
        let Ok(m) = sub.model(&v) else {
            return (f64::INFINITY, vec![f64::NAN; eta.len()]);
        };
        let q = q_function(&m, data, z);
        if !q.is_finite() {
            return (f64::INFINITY, vec![f64::NAN; eta.len()]);
        }
        let g = m.generator();
        let mut grad = vec![0.0; free.len()];
        for (&x, &zi) in data.iter().zip(z) {
            let u = alpha * g.cum(x);
            let rate = g.rate_unchecked(x);
            for (slot, &i) in free.iter().enumerate() {
                let k = i - THETA0;
                let dh = g.d_cum_unchecked(x, k);
                let dr = g.d_rate_unchecked(x, k);
                let dlnt = if u > 1e-300 { alpha * dh / u.exp_m1() } else { 0.0 };
                grad[slot] += dr / rate - alpha * dh + (zi * beta - 1.0) * dlnt;
            }
        }
        let jac = coords.jacobian(eta);
        let grad = grad.iter().zip(jac).map(|(gq, d)| -gq * d / n).collect();
        (-q / n, grad)
    };
    let eta0 = coords.to_eta(xi);
    let opts = MinimizeOptions {
        max_iter: 100,
        gtol: 1e-11,
        ..MinimizeOptions::default()
    };
    let (lo, hi) = coords.bounds();
    let min = minimize_box(objective, &eta0, lo, hi, opts)?;
    let best = coords.to_xi(&min.x);
    Some(free.iter().map(|&i| best[i]).collect())
}

/// `α₀ = n/ΣH(xᵢ; Θ₀)`, `β₀ = 1`, `λ₀` at the middle of its range (0.5
/// when unbounded) and unit shape parameters with `τ₀ = 0`.
pub fn default_em_start(family: &Family, data: &[f64]) -> Vec<f64> {
    let theta: Vec<f64> = match family.generator {
        GeneratorKind::ModifiedWeibull => vec![1.0, 0.0],
        kind => vec![1.0; kind.theta_len()],
    };
    let s = family.compounder.lambda_sup();
    let lambda = if s.is_finite() { 0.5 * s } else { 0.5 };
    let sum_h: f64 = family
        .generator
        .with_theta(&theta)
        .map(|g| data.iter().map(|&x| g.cumulative(x).unwrap_or(f64::NAN)).sum())
        .unwrap_or(f64::NAN);
    let alpha = if sum_h > 0.0 && sum_h.is_finite() {
        data.len() as f64 / sum_h
    } else {
        1.0
    };
    let mut xi = vec![alpha, 1.0, lambda];
    xi.extend(theta);
    family.apply_fixed(&mut xi);
    xi
}

/// Expectation–conditional-maximization: one E-step, then `β` (closed
/// form), `λ` (mean equation), `α` (its score equation) and `Θ` (numerical
/// maximization), each accepted only if it does not lower `Q`.
pub fn em_fit(family: &Family, data: &[f64], start: &[f64], options: &FitOptions) -> Result<FitResult> {
    check_data(data)?;
    let data = &canonical(data)[..];
    if start.len() != family.len() {
        return Err(Error::ParameterCount {
            expected: family.len(),
            got: start.len(),
        });
    }
    let mut xi = start.to_vec();
    family.apply_fixed(&mut xi);
    let model = family.model(&xi)?;
    let n = data.len() as f64;
    let ps = family.compounder;
    let s = ps.lambda_sup();
    let (lambda_lo, lambda_hi) = if s.is_finite() {
        (1e-10 * s, s * (1.0 - 1e-10))
    } else {
        (1e-10, 500.0)
    };

    let mut ll = log_likelihood_unchecked(&model, data);
    let mut history = vec![ll];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < options.max_iter {
        iterations += 1;
        let m = family.model(&xi)?;
        let z = e_step_unchecked(&m, data);
        let mut q = q_function(&m, data, &z);

        if family.is_free(BETA) {
            let sum: f64 = data.iter().zip(&z).map(|(&x, zi)| zi * m.point(x).ln_t).sum();
            let proposal = (-n / sum).min(BETA_CAP);
            ascend(family, &mut xi, BETA, proposal, data, &z, &mut q);
        }
        if family.is_free(LAMBDA) {
            let zbar = z.iter().sum::<f64>() / n;
            if let Ok(proposal) = ps.solve_mean(zbar, lambda_lo, lambda_hi) {
                ascend(family, &mut xi, LAMBDA, proposal, data, &z, &mut q);
            }
        }
        if family.is_free(ALPHA) {
            if let Some(proposal) = alpha_step(family, &xi, data, &z) {
                ascend(family, &mut xi, ALPHA, proposal.min(1e10), data, &z, &mut q);
            }
        }
        if let Some(theta) = theta_step(family, &xi, data, &z) {
            let mut candidate = xi.clone();
            let free: Vec<usize> = (THETA0..xi.len()).filter(|&i| family.is_free(i)).collect();
            for (i, v) in free.iter().zip(theta) {
                candidate[*i] = v;
            }
            let q_new = q_at(family, &candidate, data, &z);
            if q_new >= q {
                xi = candidate;
            }
        }

        let ll_new = log_likelihood_unchecked(&family.model(&xi)?, data);
        history.push(ll_new);
        let change = (ll_new - ll).abs();
        ll = ll_new;
        if change < options.tol {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence { iterations, history });
    }
    FitResult::new(family, Method::Em, xi, data, iterations, true, history)
}
