//! Pair kernels and the derivatives of pairwise distances.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sphere::{dot, Metric};

/// Distances below this raise [`Error::SingularDistance`] for singular kernels.
pub const DISTANCE_FLOOR: f64 = 1e-9;

/// Clip applied to the dot product before differentiating `arccos`.
const ACOS_CLIP: f64 = 1.0 - 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum KernelFamily {
    /// `rho^-s` for `s > 0`, `-log rho` for `s = 0`, `-rho^|s|` for `s < 0`.
    Riesz { s: f64 },
    /// `exp(-epsilon^2 rho^2)`.
    Gaussian { epsilon: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    #[serde(flatten)]
    pub family: KernelFamily,
    pub metric: Metric,
}

impl KernelSpec {
    pub fn riesz(s: f64, metric: Metric) -> Self {
        KernelSpec {
            family: KernelFamily::Riesz { s },
            metric,
        }
    }

    pub fn gaussian(epsilon: f64, metric: Metric) -> Self {
        KernelSpec {
            family: KernelFamily::Gaussian { epsilon },
            metric,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.family {
            KernelFamily::Riesz { s } if !s.is_finite() => {
                Err(Error::InvalidConfig(format!("Riesz exponent must be finite, got {s}")))
            }
            KernelFamily::Gaussian { epsilon } if !(epsilon > 0.0 && epsilon.is_finite()) => {
                Err(Error::InvalidConfig(format!(
                    "Gaussian scale must be positive, got {epsilon}"
                )))
            }
            _ => Ok(()),
        }
    }

    /// Whether the kernel diverges as the distance goes to zero.
    pub fn is_singular(&self) -> bool {
        matches!(self.family, KernelFamily::Riesz { s } if s >= 0.0)
    }

    /// Kernel value and its first two derivatives in the distance.
    pub(crate) fn profile(&self, rho: f64) -> Result<(f64, f64, f64)> {
        if self.is_singular() && rho <= DISTANCE_FLOOR {
            return Err(Error::SingularDistance(None));
        }
        Ok(match self.family {
            KernelFamily::Riesz { s } if s > 0.0 => {
                let k = rho.powf(-s);
                (k, -s * k / rho, s * (s + 1.0) * k / (rho * rho))
            }
            KernelFamily::Riesz { s } if s == 0.0 => (-rho.ln(), -1.0 / rho, 1.0 / (rho * rho)),
            KernelFamily::Riesz { s } => {
                // -rho^t with t = -s > 0
                let t = -s;
                let k = -rho.powf(t);
                let k1 = if t == 1.0 { -1.0 } else { -t * rho.powf(t - 1.0) };
                let k2 = match t {
                    t if t == 1.0 => 0.0,
                    t if t == 2.0 => -2.0,
                    t => -t * (t - 1.0) * rho.powf(t - 2.0),
                };
                (k, k1, k2)
            }
            KernelFamily::Gaussian { epsilon } => {
                let e2 = epsilon * epsilon;
                let k = (-e2 * rho * rho).exp();
                (k, -2.0 * e2 * rho * k, (4.0 * e2 * e2 * rho * rho - 2.0 * e2) * k)
            }
        })
    }

    /// Kernel of a single distance.
    pub fn eval(&self, rho: f64) -> Result<f64> {
        Ok(self.profile(rho)?.0)
    }
}

/// The Riesz s-kernel of a positive distance.
pub fn riesz_kernel(rho: f64, s: f64) -> Result<f64> {
    KernelSpec::riesz(s, Metric::Chordal).eval(rho)
}

/// First-argument derivatives of `rho(u, w)`. The distance is symmetric, so
/// the gradient in `w` is obtained by swapping the arguments.
pub(crate) struct PairGeometry<'a> {
    pub u: &'a [f64],
    pub w: &'a [f64],
    pub metric: Metric,
    pub rho: f64,
    /// chordal: |u - w|; geodesic: clamped dot product
    aux: f64,
}

impl<'a> PairGeometry<'a> {
    pub fn new(u: &'a [f64], w: &'a [f64], metric: Metric) -> Self {
        match metric {
            Metric::Chordal => {
                let rho = u
                    .iter()
                    .zip(w)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                PairGeometry { u, w, metric, rho, aux: rho }
            }
            Metric::Geodesic => {
                let t = dot(u, w).clamp(-1.0, 1.0);
                PairGeometry {
                    u,
                    w,
                    metric,
                    rho: t.acos(),
                    aux: t,
                }
            }
        }
    }

    /// d rho / dt for geodesic distance, with the clip.
    fn acos_slope(&self) -> (f64, f64) {
        let t = self.aux.clamp(-ACOS_CLIP, ACOS_CLIP);
        let s = 1.0 - t * t;
        (-1.0 / s.sqrt(), -t / (s * s.sqrt()))
    }

    /// `out += scale * grad_u rho`.
    pub fn add_grad_u(&self, scale: f64, out: &mut [f64]) {
        match self.metric {
            Metric::Chordal => {
                if self.rho > 0.0 {
                    let c = scale / self.rho;
                    for ((o, a), b) in out.iter_mut().zip(self.u).zip(self.w) {
                        *o += c * (a - b);
                    }
                }
            }
            Metric::Geodesic => {
                let c = scale * self.acos_slope().0;
                for (o, b) in out.iter_mut().zip(self.w) {
                    *o += c * b;
                }
            }
        }
    }

    /// `out += scale * grad_w rho`.
    pub fn add_grad_w(&self, scale: f64, out: &mut [f64]) {
        match self.metric {
            Metric::Chordal => {
                if self.rho > 0.0 {
                    let c = scale / self.rho;
                    for ((o, a), b) in out.iter_mut().zip(self.u).zip(self.w) {
                        *o += c * (b - a);
                    }
                }
            }
            Metric::Geodesic => {
                let c = scale * self.acos_slope().0;
                for (o, a) in out.iter_mut().zip(self.u) {
                    *o += c * a;
                }
            }
        }
    }

    /// `grad_u rho . dir`.
    pub fn grad_u_dot(&self, dir: &[f64]) -> f64 {
        match self.metric {
            Metric::Chordal => {
                if self.rho > 0.0 {
                    self.u
                        .iter()
                        .zip(self.w)
                        .zip(dir)
                        .map(|((a, b), x)| (a - b) * x)
                        .sum::<f64>()
                        / self.rho
                } else {
                    0.0
                }
            }
            Metric::Geodesic => self.acos_slope().0 * dot(self.w, dir),
        }
    }

    /// `out += scale * (Hess_uu rho) dir`.
    pub fn add_hess_uu(&self, dir: &[f64], scale: f64, out: &mut [f64]) {
        match self.metric {
            Metric::Chordal => {
                if self.rho > 0.0 {
                    let proj = self.grad_u_dot(dir);
                    let c = scale / self.rho;
                    for (((o, x), a), b) in out.iter_mut().zip(dir).zip(self.u).zip(self.w) {
                        *o += c * (x - proj * (a - b) / self.rho);
                    }
                }
            }
            Metric::Geodesic => {
                let c = scale * self.acos_slope().1 * dot(self.w, dir);
                for (o, b) in out.iter_mut().zip(self.w) {
                    *o += c * b;
                }
            }
        }
    }

    /// `out += scale * d/dw (dir . grad_u rho)`.
    pub fn add_mixed(&self, dir: &[f64], scale: f64, out: &mut [f64]) {
        match self.metric {
            Metric::Chordal => self.add_hess_uu(dir, -scale, out),
            Metric::Geodesic => {
                let (a, a1) = self.acos_slope();
                let c = scale * a1 * dot(self.w, dir);
                for ((o, x), p) in out.iter_mut().zip(dir).zip(self.u) {
                    *o += c * p + scale * a * x;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn riesz_examples() {
        assert_abs_diff_eq!(riesz_kernel(2.0, 1.0).unwrap(), 0.5);
        assert_abs_diff_eq!(riesz_kernel(1.0, 0.0).unwrap(), 0.0);
        assert_abs_diff_eq!(riesz_kernel(2.0, -1.0).unwrap(), -2.0);
        assert_abs_diff_eq!(riesz_kernel(2.0, -2.0).unwrap(), -4.0);
    }

    #[test]
    fn floor_applies_only_to_singular_kernels() {
        assert!(matches!(riesz_kernel(1e-10, 1.0), Err(Error::SingularDistance(None))));
        assert!(matches!(riesz_kernel(0.0, 0.0), Err(Error::SingularDistance(None))));
        assert_eq!(riesz_kernel(0.0, -1.0).unwrap(), 0.0);
        assert_eq!(KernelSpec::gaussian(1.0, Metric::Chordal).eval(0.0).unwrap(), 1.0);
    }

    #[test]
    fn profile_derivatives_match_finite_differences() {
        let kernels = [
            KernelSpec::riesz(2.0, Metric::Chordal),
            KernelSpec::riesz(0.5, Metric::Chordal),
            KernelSpec::riesz(0.0, Metric::Chordal),
            KernelSpec::riesz(-1.0, Metric::Chordal),
            KernelSpec::riesz(-2.0, Metric::Chordal),
            KernelSpec::riesz(-1.5, Metric::Chordal),
            KernelSpec::gaussian(1.3, Metric::Chordal),
        ];
        let h = 1e-6;
        for k in kernels {
            for rho in [0.3, 1.0, 1.7] {
                let (_, d1, d2) = k.profile(rho).unwrap();
                let fd1 = (k.eval(rho + h).unwrap() - k.eval(rho - h).unwrap()) / (2.0 * h);
                let fd2 = (k.profile(rho + h).unwrap().1 - k.profile(rho - h).unwrap().1)
                    / (2.0 * h);
                assert_abs_diff_eq!(d1, fd1, epsilon = 1e-6 * (1.0 + d1.abs()));
                assert_abs_diff_eq!(d2, fd2, epsilon = 1e-5 * (1.0 + d2.abs()));
            }
        }
    }

    #[test]
    fn kernel_spec_json_shape() {
        let spec = KernelSpec::riesz(2.0, Metric::Chordal);
        let text = serde_json::to_string(&spec).unwrap();
        assert_eq!(text, r#"{"family":"riesz","s":2.0,"metric":"chordal"}"#);
        let back: KernelSpec =
            serde_json::from_str(r#"{"family":"gaussian","epsilon":1.0,"metric":"geodesic"}"#)
                .unwrap();
        assert_eq!(back, KernelSpec::gaussian(1.0, Metric::Geodesic));
    }
}
