//! Log-determinant of the Gaussian kernel Gram matrix (MGD).

use nalgebra::DMatrix;
use ndarray::{Array2, ArrayView2};

use super::{flat_rows, ObjectiveValue, Sense};
use crate::error::{Error, Result};
use crate::sphere::Configuration;

/// Default diagonal jitter for `n` points.
pub fn default_jitter(n: usize) -> f64 {
    1e-10 * n as f64
}

/// `log det(G + jitter I)` with `G_ij = exp(-epsilon^2 |w_i - w_j|^2)`.
pub fn mgd_logdet(config: &Configuration, epsilon: f64, jitter: f64) -> Result<ObjectiveValue> {
    mgd_logdet_raw(config.points(), epsilon, jitter)
}

pub fn mgd_logdet_raw(points: ArrayView2<'_, f64>, epsilon: f64, jitter: f64) -> Result<ObjectiveValue> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidConfig(format!("epsilon must be positive, got {epsilon}")));
    }
    if !(jitter >= 0.0) {
        return Err(Error::InvalidConfig(format!("jitter must be non-negative, got {jitter}")));
    }
    let (n, d) = points.dim();
    let flat = flat_rows(points);
    let row = |i: usize| &flat[i * d..(i + 1) * d];
    let e2 = epsilon * epsilon;

    let mut gram = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        gram[(i, i)] = 1.0 + jitter;
        for j in i + 1..n {
            let sq: f64 = row(i).iter().zip(row(j)).map(|(a, b)| (a - b) * (a - b)).sum();
            let k = (-e2 * sq).exp();
            gram[(i, j)] = k;
            gram[(j, i)] = k;
        }
    }
    let chol = gram.clone().cholesky().ok_or(Error::NotPositiveDefinite)?;
    let l = chol.l_dirty();
    let mut logdet = 0.0;
    for i in 0..n {
        let diag = l[(i, i)];
        if !(diag > 0.0) {
            return Err(Error::NotPositiveDefinite);
        }
        logdet += 2.0 * diag.ln();
    }
    if !logdet.is_finite() {
        return Err(Error::NotPositiveDefinite);
    }
    let inverse = chol.inverse();

    // d logdet / d w_i = sum_j -4 eps^2 (G^-1)_ij G_ij (w_i - w_j)
    let mut grad = Array2::zeros((n, d));
    for i in 0..n {
        let mut gi = grad.row_mut(i);
        for j in 0..n {
            if i == j {
                continue;
            }
            let c = -4.0 * e2 * inverse[(i, j)] * gram[(i, j)];
            for k in 0..d {
                gi[k] += c * (row(i)[k] - row(j)[k]);
            }
        }
    }
    Ok(ObjectiveValue {
        value: logdet,
        sense: Sense::Maximize,
        gradient: Some(grad),
    })
}
