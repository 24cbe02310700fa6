//! Hyperspherical energy and separation.

use ndarray::{Array2, ArrayView2};

use super::kernel::{KernelSpec, PairGeometry};
use super::{flat_rows, ObjectiveValue, Sense};
use crate::error::{Error, Result};
use crate::sphere::{Configuration, Metric};

/// Sum of the kernel over all ordered pairs `i != j`, with its gradient.
pub fn mhe_energy(config: &Configuration, kernel: &KernelSpec) -> Result<ObjectiveValue> {
    mhe_energy_raw(config.points(), kernel)
}

/// [`mhe_energy`] on arbitrary rows; the gradient is the ambient Euclidean
/// gradient, so rows need not be unit length.
pub fn mhe_energy_raw(points: ArrayView2<'_, f64>, kernel: &KernelSpec) -> Result<ObjectiveValue> {
    kernel.validate()?;
    let (n, d) = points.dim();
    if n < 2 {
        return Err(Error::InvalidConfig("energy needs at least two points".into()));
    }
    let flat = flat_rows(points);
    let mut grad = vec![0.0; n * d];
    let mut value = 0.0;
    for i in 0..n {
        let wi = &flat[i * d..(i + 1) * d];
        for j in i + 1..n {
            let wj = &flat[j * d..(j + 1) * d];
            let pair = PairGeometry::new(wi, wj, kernel.metric);
            let (k, k1, _) = kernel
                .profile(pair.rho)
                .map_err(|_| Error::SingularDistance(Some((i, j))))?;
            value += 2.0 * k;
            let (gi, gj) = split_rows(&mut grad, i, j, d);
            pair.add_grad_u(2.0 * k1, gi);
            pair.add_grad_w(2.0 * k1, gj);
        }
    }
    Ok(ObjectiveValue {
        value,
        sense: Sense::Minimize,
        gradient: Some(Array2::from_shape_vec((n, d), grad).expect("n x d")),
    })
}

/// Mutable views of two distinct rows `i < j`.
pub(crate) fn split_rows(flat: &mut [f64], i: usize, j: usize, d: usize) -> (&mut [f64], &mut [f64]) {
    debug_assert!(i < j);
    let (head, tail) = flat.split_at_mut(j * d);
    (&mut head[i * d..(i + 1) * d], &mut tail[..d])
}

/// Minimum pairwise distance and the pair attaining it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Separation {
    pub value: f64,
    pub pair: (usize, usize),
}

/// Separation distance; ties resolve to the lexicographically smallest pair.
pub fn mhs_separation(config: &Configuration, metric: Metric) -> Result<Separation> {
    separation_raw(config.points(), metric)
}

pub(crate) fn separation_raw(points: ArrayView2<'_, f64>, metric: Metric) -> Result<Separation> {
    let (n, d) = points.dim();
    if n < 2 {
        return Err(Error::InvalidConfig("separation needs at least two points".into()));
    }
    let flat = flat_rows(points);
    let mut best = Separation {
        value: f64::INFINITY,
        pair: (0, 1),
    };
    for i in 0..n {
        for j in i + 1..n {
            let r = PairGeometry::new(&flat[i * d..(i + 1) * d], &flat[j * d..(j + 1) * d], metric).rho;
            if r < best.value {
                best = Separation { value: r, pair: (i, j) };
            }
        }
    }
    Ok(best)
}

/// Separation as a maximization objective. The subgradient is supported on
/// the argmin pair only.
pub fn mhs_objective(config: &Configuration, metric: Metric) -> Result<ObjectiveValue> {
    mhs_objective_raw(config.points(), metric)
}

pub(crate) fn mhs_objective_raw(points: ArrayView2<'_, f64>, metric: Metric) -> Result<ObjectiveValue> {
    let (n, d) = points.dim();
    let sep = separation_raw(points, metric)?;
    let flat = flat_rows(points);
    let (i, j) = sep.pair;
    let mut grad = vec![0.0; n * d];
    let pair = PairGeometry::new(&flat[i * d..(i + 1) * d], &flat[j * d..(j + 1) * d], metric);
    let (gi, gj) = split_rows(&mut grad, i, j, d);
    pair.add_grad_u(1.0, gi);
    pair.add_grad_w(1.0, gj);
    Ok(ObjectiveValue {
        value: sep.value,
        sense: Sense::Maximize,
        gradient: Some(Array2::from_shape_vec((n, d), grad).expect("n x d")),
    })
}

/// Riesz s = 2 energy under geodesic distance, the global-uniformity measure
/// recorded in trajectories. Coincident points give infinity.
pub fn energy_s2_geodesic(config: &Configuration) -> f64 {
    let n = config.n();
    let mut total = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let r = crate::sphere::distance(config.row(i), config.row(j), Metric::Geodesic);
            total += 2.0 / (r * r);
        }
    }
    total
}
