//! Quality measures of a configuration and edge singular values of
//! matrices with normalized random columns.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objectives::{energy_s2_geodesic, mhs_separation};
use crate::reference::covering_sample_oracle;
use crate::rng::{derive_seed, stream_rng};
use crate::sphere::{gaussian_rows, norm, Configuration, Metric};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub n: usize,
    pub d: usize,
    /// Riesz s = 2 energy under geodesic distance, no augmentation.
    pub energy_s2: f64,
    /// Radians.
    pub separation_geodesic: f64,
    /// Radians, from the sampling oracle.
    pub covering_estimate: f64,
    pub masscenter_norm: f64,
    pub sigma_max: f64,
    pub sigma_min: f64,
    pub theorem8_upper: f64,
    pub theorem8_lower: f64,
    /// True when the bounds use `sqrt(d)` in place of the pre-normalization norms.
    pub norms_proxy: bool,
}

/// Largest and smallest of the `min(n, d)` singular values of the matrix
/// whose columns are the points.
pub fn edge_singular_values(config: &Configuration) -> (f64, f64) {
    singular_range(&DMatrix::from_row_slice(config.n(), config.d(), config.as_slice()))
}

fn singular_range(m: &DMatrix<f64>) -> (f64, f64) {
    let sv = m.singular_values();
    let max = sv.iter().copied().fold(0.0, f64::max);
    let min = sv.iter().copied().fold(f64::INFINITY, f64::min).max(0.0);
    (max, min)
}

/// `(sqrt(d) + sqrt(n)) max_i 1/|v_i|` and `(sqrt(d) - sqrt(n)) min_i 1/|v_i|`.
pub fn theorem8_bounds(n: usize, d: usize, norms: &[f64]) -> (f64, f64) {
    let (sd, sn) = ((d as f64).sqrt(), (n as f64).sqrt());
    let max_inv = norms.iter().map(|x| 1.0 / x).fold(0.0, f64::max);
    let min_inv = norms.iter().map(|x| 1.0 / x).fold(f64::INFINITY, f64::min);
    ((sd + sn) * max_inv, (sd - sn) * min_inv)
}

/// Diagnostics with the spectral bounds evaluated at the Gaussian norm
/// proxy `|v_i| = sqrt(d)`.
pub fn diagnose(config: &Configuration, oracle_samples: usize, seed: u64) -> Result<DiagnosticsReport> {
    let proxy = vec![(config.d() as f64).sqrt(); config.n()];
    let mut report = diagnose_with_norms(config, &proxy, oracle_samples, seed)?;
    report.norms_proxy = true;
    Ok(report)
}

/// Diagnostics with the norms the points had before normalization.
pub fn diagnose_with_norms(
    config: &Configuration,
    pre_norms: &[f64],
    oracle_samples: usize,
    seed: u64,
) -> Result<DiagnosticsReport> {
    let (n, d) = (config.n(), config.d());
    if n < 2 {
        return Err(Error::InvalidConfig("diagnostics need n >= 2".into()));
    }
    if pre_norms.len() != n || pre_norms.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
        return Err(Error::InvalidConfig(format!("expected {n} positive norms")));
    }
    let (sigma_max, sigma_min) = edge_singular_values(config);
    let (theorem8_upper, theorem8_lower) = theorem8_bounds(n, d, pre_norms);
    Ok(DiagnosticsReport {
        n,
        d,
        energy_s2: energy_s2_geodesic(config),
        separation_geodesic: mhs_separation(config, Metric::Geodesic)?.value,
        covering_estimate: covering_sample_oracle(config, Metric::Geodesic, oracle_samples, seed)?.estimate,
        masscenter_norm: norm(&config.vector_sum()),
        sigma_max,
        sigma_min,
        theorem8_upper,
        theorem8_lower,
        norms_proxy: false,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralTrial {
    pub sigma_max: f64,
    pub sigma_min: f64,
    pub upper: f64,
    pub lower: f64,
    /// `upper (1 + slack) - sigma_max`; negative means a violation.
    pub upper_margin: f64,
    /// `sigma_min - lower (1 - slack)`; negative means a violation.
    pub lower_margin: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralReport {
    pub n: usize,
    pub d: usize,
    pub lambda: f64,
    pub slack: f64,
    pub violations: usize,
    pub trials: Vec<SpectralTrial>,
}

/// Relative slack of the spectral check.
pub const THEOREM8_SLACK: f64 = 0.05;

/// Draws `trials` matrices of `n` standard Gaussian columns in `R^d`,
/// normalizes the columns, and checks the edge singular values against
/// the bounds built from the actual column norms. Trial `t` draws from
/// `derive_seed(seed, t)`.
pub fn spectral_check_thm8(n: usize, d: usize, trials: usize, seed: u64) -> Result<SpectralReport> {
    let lambda = n as f64 / d as f64;
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::Domain(format!("n/d must lie in (0, 1), got {lambda}")));
    }
    if trials == 0 {
        return Err(Error::InvalidConfig("trials must be >= 1".into()));
    }
    let results: Vec<SpectralTrial> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream_rng(derive_seed(seed, t as u64), 0);
            let mut v = gaussian_rows(&mut rng, n, d);
            let norms: Vec<f64> = v.outer_iter().map(|r| r.dot(&r).sqrt()).collect();
            for (mut row, nrm) in v.outer_iter_mut().zip(&norms) {
                row /= *nrm;
            }
            let m = DMatrix::from_row_slice(n, d, v.as_slice().expect("standard layout"));
            let (sigma_max, sigma_min) = singular_range(&m);
            let (upper, lower) = theorem8_bounds(n, d, &norms);
            SpectralTrial {
                sigma_max,
                sigma_min,
                upper,
                lower,
                upper_margin: upper * (1.0 + THEOREM8_SLACK) - sigma_max,
                lower_margin: sigma_min - lower * (1.0 - THEOREM8_SLACK),
            }
        })
        .collect();
    let violations = results
        .iter()
        .filter(|t| t.upper_margin < 0.0 || t.lower_margin < 0.0)
        .count();
    Ok(SpectralReport {
        n,
        d,
        lambda,
        slack: THEOREM8_SLACK,
        violations,
        trials: results,
    })
}
