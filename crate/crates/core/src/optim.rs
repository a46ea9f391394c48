//! Box-constrained quasi-Newton minimization.
//!
//! BFGS on the inverse Hessian, with coordinates at an active bound
//! frozen for the step and a projected Armijo backtracking line search.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, Copy)]
pub struct MinimizeOptions {
    pub max_iter: usize,
    /// Stop once the sup-norm of the projected gradient falls below this.
    pub gtol: f64,
    /// Stop after several consecutive iterations with relative decrease
    /// below this.
    pub ftol: f64,
    /// Largest sup-norm move per iteration.
    pub max_step: f64,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        Self {
            max_iter: 1000,
            gtol: 1e-9,
            ftol: 1e-15,
            max_step: 4.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub gradient: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Objective value after each accepted step, starting with the initial one.
    pub history: Vec<f64>,
}

fn project(x: &mut [f64], lo: &[f64], hi: &[f64]) {
    for i in 0..x.len() {
        x[i] = x[i].clamp(lo[i], hi[i]);
    }
}

fn projected_gradient(x: &[f64], g: &[f64], lo: &[f64], hi: &[f64]) -> Vec<f64> {
    (0..x.len())
        .map(|i| {
            if (x[i] <= lo[i] && g[i] > 0.0) || (x[i] >= hi[i] && g[i] < 0.0) {
                0.0
            } else {
                g[i]
            }
        })
        .collect()
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Minimizes `f` over the box `[lo, hi]`. `f` returns the value and the
/// gradient; a non-finite value marks an inadmissible point. Returns `None`
/// when the start itself is inadmissible.
pub fn minimize_box<F>(f: F, x0: &[f64], lo: &[f64], hi: &[f64], opts: MinimizeOptions) -> Option<Minimum>
where
    F: Fn(&[f64]) -> (f64, Vec<f64>),
{
    let n = x0.len();
    let mut x = x0.to_vec();
    project(&mut x, lo, hi);
    let (mut fx, mut g) = f(&x);
    if !fx.is_finite() || g.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let mut h_inv = DMatrix::<f64>::identity(n, n);
    let mut fresh = true;
    let mut history = vec![fx];
    let mut stalled = 0;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < opts.max_iter {
        let pg = projected_gradient(&x, &g, lo, hi);
        if sup_norm(&pg) < opts.gtol {
            converged = true;
            break;
        }
        let free: Vec<bool> = pg
            .iter()
            .zip(&g)
            .map(|(p, gi)| *p != 0.0 || *gi == 0.0)
            .collect();

        let gv = DVector::from_iterator(n, (0..n).map(|i| if free[i] { g[i] } else { 0.0 }));
        let mut d: DVector<f64> = -(&h_inv * &gv);
        for i in 0..n {
            if !free[i] {
                d[i] = 0.0;
            }
        }
        if d.dot(&gv) >= 0.0 {
            h_inv = DMatrix::identity(n, n);
            fresh = true;
            d = -gv.clone();
        }
        let scale = sup_norm(d.as_slice());
        if scale > opts.max_step {
            d *= opts.max_step / scale;
        }

        // Projected backtracking.
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let mut trial: Vec<f64> = (0..n).map(|i| x[i] + t * d[i]).collect();
            project(&mut trial, lo, hi);
            let decrease: f64 = (0..n).map(|i| g[i] * (trial[i] - x[i])).sum();
            let (ft, gt) = f(&trial);
            if ft.is_finite() && gt.iter().all(|v| v.is_finite()) && ft <= fx + 1e-4 * decrease {
                accepted = Some((trial, ft, gt));
                break;
            }
            t *= 0.5;
        }
        let Some((x_new, f_new, g_new)) = accepted else {
            if fresh {
                // Steepest descent made no progress: x is a numerical minimum.
                converged = sup_norm(&pg) < opts.gtol.sqrt();
                break;
            }
            h_inv = DMatrix::identity(n, n);
            fresh = true;
            continue;
        };
        iterations += 1;

        let s = DVector::from_iterator(n, (0..n).map(|i| x_new[i] - x[i]));
        // Coordinates held at a bound carry no curvature information.
        let y = DVector::from_iterator(n, (0..n).map(|i| if s[i] != 0.0 { g_new[i] - g[i] } else { 0.0 }));
        let sy = s.dot(&y);
        if sy > 1e-12 * s.norm() * y.norm() && sy > 0.0 {
            if fresh {
                h_inv = DMatrix::identity(n, n) * (sy / y.dot(&y));
            }
            let rho = 1.0 / sy;
            let hy = &h_inv * &y;
            let yhy = y.dot(&hy);
            // H ← H − ρ(Hy sᵀ + s yᵀH) + (ρ² yᵀHy + ρ) s sᵀ
            h_inv -= (&hy * s.transpose() + &s * hy.transpose()) * rho;
            h_inv += &s * s.transpose() * (rho * rho * yhy + rho);
            fresh = false;
        }

        let rel = (fx - f_new).abs() / fx.abs().max(1.0);
        stalled = if rel < opts.ftol { stalled + 1 } else { 0 };
        x = x_new;
        fx = f_new;
        g = g_new;
        history.push(fx);
        if stalled >= 5 {
            converged = true;
            break;
        }
    }

    Some(Minimum {
        x,
        value: fx,
        gradient: g,
        iterations,
        converged,
        history,
    })
}
