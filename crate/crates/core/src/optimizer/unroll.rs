//! Unrolled inner loops for the max-min objectives.
//!
//! An inner problem optimizes a single unit vector `v` against the fixed
//! outer points. The forward pass is plain projected gradient descent with
//! renormalization. The backward pass propagates the derivative of the final
//! inner value through every step back to the outer points, which is what
//! makes the outer objective differentiable.

use crate::error::{Error, Result};
use crate::sphere::{dot, normalize_in_place, tangent_project_in_place};

/// A scalar function of one point on the sphere.
pub trait InnerLandscape {
    fn value(&self, v: &[f64]) -> Result<f64>;

    /// Euclidean gradient with respect to `v`, written into `out`.
    fn gradient(&self, v: &[f64], out: &mut [f64]) -> Result<()>;
}

/// A landscape parameterized by outer points that supports reverse-mode
/// differentiation through the unrolled descent.
pub trait DifferentiableLandscape: InnerLandscape {
    /// Number of parameters (flattened outer points).
    fn num_params(&self) -> usize;

    /// `out += H_vv dir`.
    fn hessian_vector(&self, v: &[f64], dir: &[f64], out: &mut [f64]);

    /// `params_bar += d/dparams (dir . grad_v f)`.
    fn mixed_vjp(&self, v: &[f64], dir: &[f64], params_bar: &mut [f64]);

    /// `params_bar += scale * d f / d params`.
    fn params_gradient(&self, v: &[f64], scale: f64, params_bar: &mut [f64]);
}

/// Wraps a closure returning `(value, gradient)` as a landscape.
pub struct FnLandscape<F>(pub F);

impl<F> InnerLandscape for FnLandscape<F>
where
    F: Fn(&[f64]) -> (f64, Vec<f64>),
{
    fn value(&self, v: &[f64]) -> Result<f64> {
        Ok((self.0)(v).0)
    }

    fn gradient(&self, v: &[f64], out: &mut [f64]) -> Result<()> {
        out.copy_from_slice(&(self.0)(v).1);
        Ok(())
    }
}

/// Reverses the sign of a landscape so that descent on it is ascent on the original.
pub struct Negated<'a, L: ?Sized>(pub &'a L);

impl<L: InnerLandscape + ?Sized> InnerLandscape for Negated<'_, L> {
    fn value(&self, v: &[f64]) -> Result<f64> {
        Ok(-self.0.value(v)?)
    }

    fn gradient(&self, v: &[f64], out: &mut [f64]) -> Result<()> {
        self.0.gradient(v, out)?;
        out.iter_mut().for_each(|g| *g = -*g);
        Ok(())
    }
}

impl<L: DifferentiableLandscape + ?Sized> DifferentiableLandscape for Negated<'_, L> {
    fn num_params(&self) -> usize {
        self.0.num_params()
    }

    fn hessian_vector(&self, v: &[f64], dir: &[f64], out: &mut [f64]) {
        let neg: Vec<f64> = dir.iter().map(|x| -x).collect();
        self.0.hessian_vector(v, &neg, out);
    }

    fn mixed_vjp(&self, v: &[f64], dir: &[f64], params_bar: &mut [f64]) {
        let neg: Vec<f64> = dir.iter().map(|x| -x).collect();
        self.0.mixed_vjp(v, &neg, params_bar);
    }

    fn params_gradient(&self, v: &[f64], scale: f64, params_bar: &mut [f64]) {
        self.0.params_gradient(v, -scale, params_bar);
    }
}

fn step<L: InnerLandscape + ?Sized>(
    landscape: &L,
    v: &mut [f64],
    grad: &mut [f64],
    lr: f64,
) -> Result<()> {
    landscape.gradient(v, grad)?;
    tangent_project_in_place(v, grad);
    for (x, g) in v.iter_mut().zip(grad.iter()) {
        *x -= lr * g;
    }
    normalize_in_place(v);
    Ok(())
}

/// Runs exactly `steps` projected gradient descent steps from `start`.
pub fn unroll_inner<L: InnerLandscape + ?Sized>(
    start: &[f64],
    landscape: &L,
    steps: usize,
    lr: f64,
) -> Result<Vec<f64>> {
    if steps == 0 {
        return Err(Error::InvalidConfig("inner unroll needs steps >= 1".into()));
    }
    let mut v = start.to_vec();
    let mut grad = vec![0.0; v.len()];
    for _ in 0..steps {
        step(landscape, &mut v, &mut grad, lr)?;
    }
    Ok(v)
}

/// Same as [`unroll_inner`] but keeps every iterate, `steps + 1` in total.
pub fn unroll_trace<L: InnerLandscape + ?Sized>(
    start: &[f64],
    landscape: &L,
    steps: usize,
    lr: f64,
) -> Result<Vec<Vec<f64>>> {
    if steps == 0 {
        return Err(Error::InvalidConfig("inner unroll needs steps >= 1".into()));
    }
    let mut trace = Vec::with_capacity(steps + 1);
    let mut v = start.to_vec();
    let mut grad = vec![0.0; v.len()];
    trace.push(v.clone());
    for _ in 0..steps {
        step(landscape, &mut v, &mut grad, lr)?;
        trace.push(v.clone());
    }
    Ok(trace)
}

/// Gradient of `f(v_K)` with respect to the landscape parameters, where
/// `v_K` is the last iterate of `trace` produced by [`unroll_trace`] with the
/// same `lr`. The start point is treated as a constant.
pub fn unrolled_gradient<L: DifferentiableLandscape + ?Sized>(
    landscape: &L,
    trace: &[Vec<f64>],
    lr: f64,
) -> Result<Vec<f64>> {
    let last = trace.last().expect("trace holds at least the start");
    let dim = last.len();
    let mut params_bar = vec![0.0; landscape.num_params()];
    landscape.params_gradient(last, 1.0, &mut params_bar);
    let mut v_bar = vec![0.0; dim];
    landscape.gradient(last, &mut v_bar)?;

    let mut g = vec![0.0; dim];
    let mut u = vec![0.0; dim];
    let mut u_bar = vec![0.0; dim];
    let mut g_bar = vec![0.0; dim];
    for k in (0..trace.len() - 1).rev() {
        let v = &trace[k];
        let v_next = &trace[k + 1];
        // Forward quantities of step k: u = v - lr * (g - (v.g) v), v_next = u / |u|.
        landscape.gradient(v, &mut g)?;
        let vg = dot(v, &g);
        for i in 0..dim {
            u[i] = v[i] - lr * (g[i] - vg * v[i]);
        }
        let u_norm = dot(&u, &u).sqrt();

        let b_dot = dot(&v_bar, v_next);
        for i in 0..dim {
            u_bar[i] = (v_bar[i] - b_dot * v_next[i]) / u_norm;
        }
        let uv = dot(&u_bar, v);
        for i in 0..dim {
            g_bar[i] = -lr * (u_bar[i] - uv * v[i]);
        }
        let mut v_prev_bar = vec![0.0; dim];
        for i in 0..dim {
            v_prev_bar[i] = u_bar[i] + lr * (vg * u_bar[i] + uv * g[i]);
        }
        landscape.hessian_vector(v, &g_bar, &mut v_prev_bar);
        landscape.mixed_vjp(v, &g_bar, &mut params_bar);
        v_bar = v_prev_bar;
    }
    Ok(params_bar)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_steps_rejected() {
        let flat = FnLandscape(|_: &[f64]| (1.0, vec![0.0; 3]));
        assert!(unroll_inner(&[1.0, 0.0, 0.0], &flat, 0, 0.1).is_err());
    }

    #[test]
    fn constant_landscape_keeps_start() {
        let flat = FnLandscape(|_: &[f64]| (1.0, vec![0.0; 3]));
        let start = [0.6, 0.0, 0.8];
        assert_eq!(unroll_inner(&start, &flat, 5, 0.3).unwrap(), start.to_vec());
    }

    #[test]
    fn steps_compose() {
        // f(v) = (v - a)^2 pulls v toward a.
        let a = [0.3, -0.5, 0.2];
        let bowl = FnLandscape(move |v: &[f64]| {
            let g: Vec<f64> = v.iter().zip(&a).map(|(x, y)| 2.0 * (x - y)).collect();
            let val = v.iter().zip(&a).map(|(x, y)| (x - y) * (x - y)).sum();
            (val, g)
        });
        let start = [1.0, 0.0, 0.0];
        let once = unroll_inner(&start, &bowl, 7, 0.05).unwrap();
        let twice = unroll_inner(&once, &bowl, 7, 0.05).unwrap();
        assert_eq!(twice, unroll_inner(&start, &bowl, 14, 0.05).unwrap());
    }

    #[test]
    fn negation_flips_direction() {
        let tilt = FnLandscape(|_: &[f64]| (0.0, vec![0.0, 1.0]));
        let down = unroll_inner(&[1.0, 0.0], &tilt, 1, 0.1).unwrap();
        let up = unroll_inner(&[1.0, 0.0], &Negated(&tilt), 1, 0.1).unwrap();
        assert!(down[1] < 0.0 && up[1] > 0.0);
    }
}
