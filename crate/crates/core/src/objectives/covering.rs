//! Covering radius (MHC), exact and log-sum-exp relaxed.

use ndarray::{Array2, ArrayView2};

use super::kernel::PairGeometry;
use super::{flat_rows, inner_starts, InnerLoopConfig, ObjectiveValue, Sense};
use crate::error::{Error, Result};
use crate::optimizer::unroll::{
    unroll_inner, unroll_trace, unrolled_gradient, DifferentiableLandscape, InnerLandscape, Negated,
};
use crate::sphere::{normalize_in_place, tangent_project_in_place, Configuration, Metric};

/// Distance from `v` to its nearest point, with the index of that point
/// (lowest index on ties).
pub fn nearest_distance(points: &[f64], d: usize, v: &[f64], metric: Metric) -> (f64, usize) {
    let mut best = (f64::INFINITY, 0);
    for (i, w) in points.chunks_exact(d).enumerate() {
        let r = PairGeometry::new(v, w, metric).rho;
        if r < best.0 {
            best = (r, i);
        }
    }
    best
}

/// Ratio between the first and last subgradient step of the exact covering ascent.
const COVERING_STEP_DECAY: f64 = 1e-4;

/// Covering radius estimate: the largest nearest-point distance reached by
/// multi-start subgradient ascent. Every visited point gives a valid lower
/// bound, and the best one is returned.
pub fn mhc_covering(
    config: &Configuration,
    metric: Metric,
    inner: &InnerLoopConfig,
) -> Result<ObjectiveValue> {
    mhc_covering_raw(config.points(), metric, inner)
}

pub fn mhc_covering_raw(
    points: ArrayView2<'_, f64>,
    metric: Metric,
    inner: &InnerLoopConfig,
) -> Result<ObjectiveValue> {
    inner.validate()?;
    let (n, d) = points.dim();
    let flat = flat_rows(points);

    let mut best_value = f64::NEG_INFINITY;
    let mut best_point = Vec::new();
    let mut grad = vec![0.0; d];
    for start in inner_starts(&flat, d, inner) {
        let mut v = start;
        for t in 0..=inner.steps {
            let (r, i) = nearest_distance(&flat, d, &v, metric);
            if r > best_value {
                best_value = r;
                best_point = v.clone();
            }
            if t == inner.steps {
                break;
            }
            // Ascend the distance to the nearest point along a unit tangent
            // direction with geometrically shrinking steps.
            grad.iter_mut().for_each(|g| *g = 0.0);
            PairGeometry::new(&v, &flat[i * d..(i + 1) * d], metric).add_grad_u(1.0, &mut grad);
            tangent_project_in_place(&v, &mut grad);
            let gnorm = crate::sphere::norm(&grad);
            if gnorm == 0.0 {
                break;
            }
            let frac = if inner.steps > 1 {
                t as f64 / (inner.steps - 1) as f64
            } else {
                0.0
            };
            let eta = inner.lr * COVERING_STEP_DECAY.powf(frac);
            for (x, g) in v.iter_mut().zip(&grad) {
                *x += eta * g / gnorm;
            }
            normalize_in_place(&mut v);
        }
    }

    // Envelope subgradient: only the nearest point to the maximizer moves.
    let (_, i) = nearest_distance(&flat, d, &best_point, metric);
    let mut gradient = Array2::zeros((n, d));
    let mut row = vec![0.0; d];
    PairGeometry::new(&best_point, &flat[i * d..(i + 1) * d], metric).add_grad_w(1.0, &mut row);
    gradient.row_mut(i).assign(&ndarray::ArrayView1::from(&row));
    Ok(ObjectiveValue {
        value: best_value,
        sense: Sense::Minimize,
        gradient: Some(gradient),
    })
}

/// `v -> -(1/gamma) log sum_i exp(-gamma rho(v, w_i))`, a smooth lower
/// bound on the nearest-point distance that is within `log(n)/gamma` of it.
pub struct SoftMinDistance<'a> {
    points: &'a [f64],
    d: usize,
    gamma: f64,
    metric: Metric,
}

impl<'a> SoftMinDistance<'a> {
    pub fn new(points: &'a [f64], d: usize, gamma: f64, metric: Metric) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidConfig(format!("gamma must be positive, got {gamma}")));
        }
        Ok(SoftMinDistance {
            points,
            d,
            gamma,
            metric,
        })
    }

    fn pairs<'v>(&self, v: &'v [f64]) -> Vec<PairGeometry<'v>>
    where
        'a: 'v,
    {
        self.points
            .chunks_exact(self.d)
            .map(|w| PairGeometry::new(v, w, self.metric))
            .collect()
    }

    /// Soft-min value and the softmax weights of the distances.
    fn weights(&self, pairs: &[PairGeometry<'_>]) -> (f64, Vec<f64>) {
        let min = pairs.iter().map(|p| p.rho).fold(f64::INFINITY, f64::min);
        let exps: Vec<f64> = pairs
            .iter()
            .map(|p| (-self.gamma * (p.rho - min)).exp())
            .collect();
        let total: f64 = exps.iter().sum();
        let value = min - total.ln() / self.gamma;
        (value, exps.into_iter().map(|e| e / total).collect())
    }

    /// Soft-min value at `v` and its gradient with respect to the points, `n x d`.
    pub fn value_and_points_gradient(&self, v: &[f64]) -> (f64, Array2<f64>) {
        let mut bar = vec![0.0; self.points.len()];
        self.params_gradient(v, 1.0, &mut bar);
        let pairs = self.pairs(v);
        let (value, _) = self.weights(&pairs);
        let n = self.points.len() / self.d;
        (value, Array2::from_shape_vec((n, self.d), bar).expect("n x d"))
    }
}

impl InnerLandscape for SoftMinDistance<'_> {
    fn value(&self, v: &[f64]) -> Result<f64> {
        Ok(self.weights(&self.pairs(v)).0)
    }

    fn gradient(&self, v: &[f64], out: &mut [f64]) -> Result<()> {
        out.iter_mut().for_each(|x| *x = 0.0);
        let pairs = self.pairs(v);
        let (_, p) = self.weights(&pairs);
        for (pair, pi) in pairs.iter().zip(&p) {
            pair.add_grad_u(*pi, out);
        }
        Ok(())
    }
}

impl DifferentiableLandscape for SoftMinDistance<'_> {
    fn num_params(&self) -> usize {
        self.points.len()
    }

    fn hessian_vector(&self, v: &[f64], dir: &[f64], out: &mut [f64]) {
        let pairs = self.pairs(v);
        let (_, p) = self.weights(&pairs);
        let along: Vec<f64> = pairs.iter().map(|q| q.grad_u_dot(dir)).collect();
        let mean: f64 = p.iter().zip(&along).map(|(a, b)| a * b).sum();
        for ((pair, pi), a) in pairs.iter().zip(&p).zip(&along) {
            pair.add_hess_uu(dir, *pi, out);
            // -gamma * (sum_i p_i a_i g_i - (sum_i p_i g_i) mean)
            pair.add_grad_u(-self.gamma * pi * (a - mean), out);
        }
    }

    fn mixed_vjp(&self, v: &[f64], dir: &[f64], params_bar: &mut [f64]) {
        let pairs = self.pairs(v);
        let (_, p) = self.weights(&pairs);
        let along: Vec<f64> = pairs.iter().map(|q| q.grad_u_dot(dir)).collect();
        let mean: f64 = p.iter().zip(&along).map(|(a, b)| a * b).sum();
        for (((pair, pi), a), bar) in pairs
            .iter()
            .zip(&p)
            .zip(&along)
            .zip(params_bar.chunks_exact_mut(self.d))
        {
            pair.add_mixed(dir, *pi, bar);
            pair.add_grad_w(-self.gamma * pi * (a - mean), bar);
        }
    }

    fn params_gradient(&self, v: &[f64], scale: f64, params_bar: &mut [f64]) {
        let pairs = self.pairs(v);
        let (_, p) = self.weights(&pairs);
        for ((pair, pi), bar) in pairs.iter().zip(&p).zip(params_bar.chunks_exact_mut(self.d)) {
            pair.add_grad_w(scale * pi, bar);
        }
    }
}

/// Relaxed covering radius: the largest soft-min distance reached by
/// unrolled gradient ascent, with the gradient taken through the unroll.
pub fn mhc_relaxed(
    config: &Configuration,
    gamma: f64,
    metric: Metric,
    inner: &InnerLoopConfig,
) -> Result<ObjectiveValue> {
    mhc_relaxed_raw(config.points(), gamma, metric, inner)
}

pub fn mhc_relaxed_raw(
    points: ArrayView2<'_, f64>,
    gamma: f64,
    metric: Metric,
    inner: &InnerLoopConfig,
) -> Result<ObjectiveValue> {
    inner.validate()?;
    let (n, d) = points.dim();
    let flat = flat_rows(points);
    let softmin = SoftMinDistance::new(&flat, d, gamma, metric)?;
    let descent = Negated(&softmin);

    let mut best: Option<(f64, Vec<f64>)> = None;
    for start in inner_starts(&flat, d, inner) {
        let end = unroll_inner(&start, &descent, inner.steps, inner.lr)?;
        let value = softmin.value(&end)?;
        if best.as_ref().is_none_or(|(b, _)| value > *b) {
            best = Some((value, start));
        }
    }
    let (value, start) = best.expect("at least one start");
    let trace = unroll_trace(&start, &descent, inner.steps, inner.lr)?;
    // The descent landscape is the negated soft-min; flip back.
    let gradient: Vec<f64> = unrolled_gradient(&descent, &trace, inner.lr)?
        .into_iter()
        .map(|g| -g)
        .collect();
    Ok(ObjectiveValue {
        value,
        sense: Sense::Minimize,
        gradient: Some(Array2::from_shape_vec((n, d), gradient).expect("n x d")),
    })
}
