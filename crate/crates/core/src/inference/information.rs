use nalgebra::DMatrix;

use super::{check_data, score_unchecked, BoundaryFlag};
use crate::error::{Error, Result};
use crate::model::Family;

/// Relative finite-difference step for the Hessian.
const RELATIVE_STEP: f64 = 1e-5;

/// Negative Hessian of the log-likelihood over the components `indices`
/// of `ξ`, by central differences of the analytic score (one-sided where
/// a step would leave the parameter domain), symmetrized.
pub fn observed_information(family: &Family, xi: &[f64], data: &[f64], indices: &[usize]) -> Result<DMatrix<f64>> {
    check_data(data)?;
    family.model(xi)?;
    let k = indices.len();
    let mut info = DMatrix::<f64>::zeros(k, k);
    let score_at = |v: &[f64]| -> Option<Vec<f64>> {
        let m = family.model(v).ok()?;
        let s = score_unchecked(&m, data);
        s.iter().all(|x| x.is_finite()).then_some(s)
    };
    let center = score_at(xi).ok_or(Error::SingularInformation)?;
    for (col, &j) in indices.iter().enumerate() {
        let h = RELATIVE_STEP * xi[j].abs().max(1e-3);
        let shifted = |d: f64| {
            let mut v = xi.to_vec();
            v[j] += d;
            score_at(&v)
        };
        let (diff, width) = match (shifted(h), shifted(-h)) {
            (Some(up), Some(down)) => (sub(&up, &down), 2.0 * h),
            (Some(up), None) => (sub(&up, &center), h),
            (None, Some(down)) => (sub(&center, &down), h),
            (None, None) => return Err(Error::SingularInformation),
        };
        for (row, &i) in indices.iter().enumerate() {
            info[(row, col)] = -diff[i] / width;
        }
    }
    let sym = (&info + info.transpose()) * 0.5;
    if sym.iter().any(|v| !v.is_finite()) || sym.clone().cholesky().is_none() {
        return Err(Error::SingularInformation);
    }
    Ok(sym)
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// `sqrt(diag(I⁻¹))` for the free, non-flagged parameters; `None` elsewhere.
pub fn standard_errors(family: &Family, xi: &[f64], data: &[f64], flags: &[BoundaryFlag]) -> Result<Vec<Option<f64>>> {
    let indices: Vec<usize> = family
        .free_indices()
        .into_iter()
        .filter(|i| flags.iter().all(|f| f.parameter() != *i))
        .collect();
    let mut out = vec![None; xi.len()];
    if indices.is_empty() {
        return Ok(out);
    }
    let info = observed_information(family, xi, data, &indices)?;
    let inverse = info.cholesky().ok_or(Error::SingularInformation)?.inverse();
    for (row, &i) in indices.iter().enumerate() {
        let v = inverse[(row, row)];
        out[i] = (v > 0.0).then(|| v.sqrt());
    }
    Ok(out)
}
