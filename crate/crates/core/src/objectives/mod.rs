//! Uniformity objectives: values and analytic Euclidean gradients.
//!
//! | kind | quantity | sense |
//! |------|----------|-------|
//! | MHE | Riesz energy over ordered pairs | minimize |
//! | MHS | minimum pairwise distance | maximize |
//! | MHP | minimum over the sphere of the kernel field | maximize |
//! | R-MHP | norm of the vector sum | minimize |
//! | MHC | covering radius (exact or log-sum-exp relaxed) | minimize |
//! | MGD | log-det of the Gaussian Gram matrix | maximize |
//!
//! Every `*_raw` entry point accepts arbitrary rows so gradients can be
//! checked against finite differences in the ambient space.

mod covering;
mod energy;
mod gram;
mod kernel;
mod polarization;
mod spec;

use std::borrow::Cow;

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

pub use covering::{
    mhc_covering, mhc_covering_raw, mhc_relaxed, mhc_relaxed_raw, nearest_distance, SoftMinDistance,
};
pub use energy::{
    energy_s2_geodesic, mhe_energy, mhe_energy_raw, mhs_objective, mhs_separation, Separation,
};
pub(crate) use energy::separation_raw;
pub use gram::{default_jitter, mgd_logdet, mgd_logdet_raw};
pub use kernel::{riesz_kernel, KernelFamily, KernelSpec, DISTANCE_FLOOR};
pub use polarization::{mhp_solve, mhp_value, rmhp_value, rmhp_value_raw, InnerSolution, PolarizationField};
pub use spec::{antipodal_augment, evaluate, InnerLoopConfig, ObjectiveKind, ObjectiveSpec};

use crate::rng::stream_rng;
use crate::sphere::uniform_point;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ObjectiveValue {
    pub value: f64,
    pub sense: Sense,
    /// Euclidean gradient of `value` with respect to the points, `n x d`.
    pub gradient: Option<Array2<f64>>,
}

fn flat_rows<'a>(points: ArrayView2<'a, f64>) -> Cow<'a, [f64]> {
    match points.to_slice() {
        Some(s) => Cow::Borrowed(s),
        None => Cow::Owned(points.iter().copied().collect()),
    }
}

/// Starting points of an inner solve: the antipode of the mass center (or of
/// the first point when the mass center vanishes), then `restarts` uniform
/// draws from the configured seed.
fn inner_starts(points: &[f64], d: usize, inner: &InnerLoopConfig) -> Vec<Vec<f64>> {
    let mut starts = Vec::with_capacity(inner.restarts + 1);
    if inner.deterministic_start {
        let mut sum = vec![0.0; d];
        for w in points.chunks_exact(d) {
            sum.iter_mut().zip(w).for_each(|(s, x)| *s += x);
        }
        let norm = crate::sphere::norm(&sum);
        let anchor: Vec<f64> = if norm > 1e-12 {
            sum.iter().map(|x| -x / norm).collect()
        } else {
            let w0 = &points[..d];
            let n0 = crate::sphere::norm(w0);
            w0.iter().map(|x| -x / n0).collect()
        };
        starts.push(anchor);
    }
    let mut rng = stream_rng(inner.seed, 1);
    for _ in 0..inner.restarts {
        starts.push(uniform_point(&mut rng, d));
    }
    starts
}
