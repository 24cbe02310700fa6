//! Uniformity test statistics on the sphere and a Monte-Carlo check of how
//! random orthonormal bases fill spherical caps.
//!
//! The statistics are returned raw; no p-values are computed.

use std::f64::consts::{PI, TAU};

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{derive_seed, stream_rng};
use crate::sphere::{cap_measure, dot, gaussian_rows, uniform_point, Configuration};

/// Ajne statistic `n/4 - (1/(n pi)) sum_{i<j} angle(u_i, u_j)`.
pub fn ajne(config: &Configuration) -> f64 {
    let n = config.n();
    let mut angles = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            angles += dot(config.row(i), config.row(j)).clamp(-1.0, 1.0).acos();
        }
    }
    n as f64 / 4.0 - angles / (n as f64 * PI)
}

/// Rayleigh statistic `n d |mean|^2`.
pub fn rayleigh(config: &Configuration) -> f64 {
    let n = config.n() as f64;
    let sum = config.vector_sum();
    let mean_sq = dot(&sum, &sum) / (n * n);
    n * config.d() as f64 * mean_sq
}

/// Range statistic on the circle: `2 pi` minus the largest gap between
/// consecutive sorted angles, the wraparound gap included.
pub fn range_test(angles: &[f64]) -> Result<f64> {
    if angles.len() < 2 {
        return Err(Error::Domain(format!(
            "the range test needs at least 2 angles, got {}",
            angles.len()
        )));
    }
    if let Some(a) = angles.iter().find(|a| !(0.0..TAU).contains(*a)) {
        return Err(Error::Domain(format!("angle {a} is outside [0, 2 pi)")));
    }
    let mut sorted = angles.to_vec();
    sorted.sort_by(f64::total_cmp);
    let wrap = TAU - (sorted[sorted.len() - 1] - sorted[0]);
    let max_gap = sorted.windows(2).map(|w| w[1] - w[0]).fold(wrap, f64::max);
    Ok(TAU - max_gap)
}

/// Polar angles in `[0, 2 pi)` of a configuration on the circle.
pub fn angles_of(config: &Configuration) -> Result<Vec<f64>> {
    if config.d() != 2 {
        return Err(Error::Dimension(format!(
            "angles need points on the circle (d = 2), got d = {}",
            config.d()
        )));
    }
    Ok((0..config.n())
        .map(|i| {
            let r = config.row(i);
            let a = r[1].atan2(r[0]).rem_euclid(TAU);
            if a >= TAU {
                0.0
            } else {
                a
            }
        })
        .collect())
}

/// Gegenbauer polynomial `C_k^alpha(t)` by the three-term recurrence.
pub fn gegenbauer(k: usize, alpha: f64, t: f64) -> f64 {
    let mut prev = 1.0;
    if k == 0 {
        return prev;
    }
    let mut cur = 2.0 * alpha * t;
    for m in 2..=k {
        let m = m as f64;
        let next = (2.0 * t * (m + alpha - 1.0) * cur - (m + 2.0 * alpha - 2.0) * prev) / m;
        prev = cur;
        cur = next;
    }
    cur
}

/// Weights `v_1..v_K` of a truncated Sobolev statistic in dimension `d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SobolevSpec {
    pub weights: Vec<f64>,
    pub d: usize,
}

/// Default truncation order of the Ajne weights.
pub const DEFAULT_SOBOLEV_ORDER: usize = 41;

impl SobolevSpec {
    pub fn new(weights: Vec<f64>, d: usize) -> Result<Self> {
        let spec = SobolevSpec { weights, d };
        spec.validate()?;
        Ok(spec)
    }

    /// `v_1 = 1` and nothing else, which reproduces the Rayleigh statistic.
    pub fn rayleigh(d: usize) -> Result<Self> {
        Self::new(vec![1.0], d)
    }

    /// `v_k = 1/(pi k)` for odd `k`, zero for even `k`, up to order `order`.
    pub fn ajne(d: usize, order: usize) -> Result<Self> {
        let weights = (1..=order)
            .map(|k| if k % 2 == 1 { 1.0 / (PI * k as f64) } else { 0.0 })
            .collect();
        Self::new(weights, d)
    }

    pub fn order(&self) -> usize {
        self.weights.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.d <= 2 {
            return Err(Error::Dimension(format!(
                "the Sobolev statistic needs d > 2, got d = {}",
                self.d
            )));
        }
        if self.weights.is_empty() {
            return Err(Error::InvalidConfig("Sobolev weights are empty".into()));
        }
        if self.weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::InvalidConfig("Sobolev weights must be finite".into()));
        }
        Ok(())
    }

    /// Pair kernel `sum_k v_k^2 (1 + 2k/(d-2)) C_k^((d-2)/2)(t)`.
    pub fn kernel(&self, t: f64) -> f64 {
        let alpha = (self.d as f64 - 2.0) / 2.0;
        let mut prev = 1.0;
        let mut cur = 2.0 * alpha * t;
        let mut total = 0.0;
        for (idx, v) in self.weights.iter().enumerate() {
            let k = idx + 1;
            if k >= 2 {
                let m = k as f64;
                let next = (2.0 * t * (m + alpha - 1.0) * cur - (m + 2.0 * alpha - 2.0) * prev) / m;
                prev = cur;
                cur = next;
            }
            total += v * v * (1.0 + 2.0 * k as f64 / (self.d as f64 - 2.0)) * cur;
        }
        total
    }

    /// Contribution of each self-pair, `kernel(1)`.
    pub fn self_pair_constant(&self) -> f64 {
        self.kernel(1.0)
    }
}

/// Truncated Sobolev statistic `(1/n) sum_{i,j} kernel(u_i . u_j)` over all
/// ordered pairs, self-pairs included.
pub fn sobolev(config: &Configuration, spec: &SobolevSpec) -> Result<f64> {
    spec.validate()?;
    if config.d() != spec.d {
        return Err(Error::Dimension(format!(
            "Sobolev weights are for d = {} but the configuration has d = {}",
            spec.d,
            config.d()
        )));
    }
    let n = config.n();
    let mut total = n as f64 * spec.self_pair_constant();
    for i in 0..n {
        for j in i + 1..n {
            let t = dot(config.row(i), config.row(j)).clamp(-1.0, 1.0);
            total += 2.0 * spec.kernel(t);
        }
    }
    Ok(total / n as f64)
}

/// A Haar-distributed orthogonal matrix: QR of a Gaussian matrix with the
/// signs of `R`'s diagonal moved into `Q`. Rows are the basis vectors.
pub fn haar_orthogonal<R: rand::Rng + ?Sized>(rng: &mut R, d: usize) -> DMatrix<f64> {
    let g = gaussian_rows(rng, d, d);
    let m = DMatrix::from_row_slice(d, d, g.as_slice().expect("standard layout"));
    let qr = m.qr();
    let (mut q, r) = qr.unpack();
    for j in 0..d {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q.transpose()
}

/// Cap angles of the basis-filling demonstration.
pub const THEOREM1_ANGLES: [f64; 7] = [0.0, PI / 6.0, PI / 3.0, PI / 2.0, 2.0 * PI / 3.0, 5.0 * PI / 6.0, PI];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CapRow {
    pub angle: f64,
    /// Normalized surface measure of the cap.
    pub measure: f64,
    pub mean_fraction: f64,
    pub mean_abs_deviation: f64,
    pub max_abs_deviation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Theorem1Report {
    pub d: usize,
    pub basis_trials: usize,
    pub cap_trials: usize,
    pub max_abs_deviation: f64,
    pub caps: Vec<CapRow>,
}

impl Theorem1Report {
    pub fn cap(&self, angle: f64) -> Option<&CapRow> {
        self.caps.iter().find(|c| (c.angle - angle).abs() < 1e-12)
    }
}

/// Draws `basis_trials` random orthonormal bases of `R^d`, and for each one
/// `cap_trials` uniformly placed caps per angle in [`THEOREM1_ANGLES`]. The
/// fraction of basis vectors inside each cap is compared to the cap measure.
/// Trial `t` draws from `derive_seed(seed, t)`.
pub fn theorem1_demo(d: usize, basis_trials: usize, cap_trials: usize, seed: u64) -> Result<Theorem1Report> {
    if d < 4 {
        return Err(Error::Dimension(format!("the demonstration needs d >= 4, got {d}")));
    }
    if basis_trials == 0 || cap_trials == 0 {
        return Err(Error::InvalidConfig("trial counts must be >= 1".into()));
    }
    let measures = THEOREM1_ANGLES
        .iter()
        .map(|&a| cap_measure(a, d))
        .collect::<Result<Vec<_>>>()?;
    // deviations[trial][angle][cap]
    let deviations: Vec<Vec<Vec<f64>>> = (0..basis_trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = stream_rng(derive_seed(seed, trial as u64), 0);
            let basis = haar_orthogonal(&mut rng, d);
            let rows: Vec<Vec<f64>> = basis.row_iter().map(|r| r.iter().copied().collect()).collect();
            THEOREM1_ANGLES
                .iter()
                .zip(&measures)
                .map(|(&angle, &measure)| {
                    let threshold = angle.cos();
                    (0..cap_trials)
                        .map(|_| {
                            let center = uniform_point(&mut rng, d);
                            let inside = rows
                                .iter()
                                .filter(|b| dot(b, &center).clamp(-1.0, 1.0) >= threshold)
                                .count();
                            inside as f64 / d as f64 - measure
                        })
                        .collect()
                })
                .collect()
        })
        .collect();

    let caps: Vec<CapRow> = THEOREM1_ANGLES
        .iter()
        .enumerate()
        .map(|(a, &angle)| {
            let devs: Vec<f64> = deviations.iter().flat_map(|t| t[a].iter().copied()).collect();
            let count = devs.len() as f64;
            CapRow {
                angle,
                measure: measures[a],
                mean_fraction: measures[a] + devs.iter().sum::<f64>() / count,
                mean_abs_deviation: devs.iter().map(|x| x.abs()).sum::<f64>() / count,
                max_abs_deviation: devs.iter().fold(0.0, |m, x| m.max(x.abs())),
            }
        })
        .collect();
    Ok(Theorem1Report {
        d,
        basis_trials,
        cap_trials,
        max_abs_deviation: caps.iter().fold(0.0, |m, c| m.max(c.max_abs_deviation)),
        caps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reference::cross_polytope;
    use crate::sphere::{normalize, sample_uniform};
    use approx::assert_abs_diff_eq;
    use ndarray::{array, Array2};

    #[test]
    fn ajne_examples() {
        let anti = normalize(array![[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]].view()).unwrap();
        assert_abs_diff_eq!(ajne(&anti), 0.0, epsilon = 1e-15);
        let same = normalize(array![[0.0, 1.0], [0.0, 1.0]].view()).unwrap();
        assert_eq!(ajne(&same), 0.5);
        assert_abs_diff_eq!(ajne(&cross_polytope(3).unwrap()), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn rayleigh_examples() {
        assert_abs_diff_eq!(rayleigh(&cross_polytope(3).unwrap()), 0.0, epsilon = 1e-15);
        let same = normalize(Array2::from_elem((5, 4), 1.0).view()).unwrap();
        assert_abs_diff_eq!(rayleigh(&same), 20.0, epsilon = 1e-12);
        let two = normalize(array![[1.0, 0.0], [0.0, 1.0]].view()).unwrap();
        assert_abs_diff_eq!(rayleigh(&two), 2.0, epsilon = 1e-15);
    }

    #[test]
    fn range_examples() {
        let eight: Vec<f64> = (0..8).map(|k| k as f64 * TAU / 8.0).collect();
        assert_abs_diff_eq!(range_test(&eight).unwrap(), 7.0 * PI / 4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(range_test(&[0.0, PI]).unwrap(), PI, epsilon = 1e-15);
        assert_abs_diff_eq!(range_test(&[0.0, 0.1]).unwrap(), 0.1, epsilon = 1e-15);
        assert!(matches!(range_test(&[0.0, TAU]), Err(Error::Domain(_))));
        assert!(matches!(range_test(&[-0.1, 1.0]), Err(Error::Domain(_))));
        assert!(matches!(range_test(&[1.0]), Err(Error::Domain(_))));
    }

    #[test]
    fn angles_of_circle_points() {
        let c = normalize(array![[1.0, 0.0], [0.0, -1.0], [-1.0, 0.0]].view()).unwrap();
        let a = angles_of(&c).unwrap();
        assert_abs_diff_eq!(a[0], 0.0);
        assert_abs_diff_eq!(a[1], 1.5 * PI, epsilon = 1e-15);
        assert_abs_diff_eq!(a[2], PI, epsilon = 1e-15);
        assert!(angles_of(&cross_polytope(3).unwrap()).is_err());
    }

    #[test]
    fn gegenbauer_examples() {
        assert_eq!(gegenbauer(0, 0.7, 0.3), 1.0);
        assert_abs_diff_eq!(gegenbauer(2, 0.5, 0.0), -0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(gegenbauer(3, 1.0, 1.0), 4.0, epsilon = 1e-14);
        // Legendre P_4 and Chebyshev U_5 against their closed forms
        let t: f64 = 0.37;
        let p4 = (35.0 * t.powi(4) - 30.0 * t * t + 3.0) / 8.0;
        assert_abs_diff_eq!(gegenbauer(4, 0.5, t), p4, epsilon = 1e-14);
        let theta = t.acos();
        let u5 = (6.0 * theta).sin() / theta.sin();
        assert_abs_diff_eq!(gegenbauer(5, 1.0, t), u5, epsilon = 1e-13);
    }

    #[test]
    fn sobolev_recovers_rayleigh() {
        for d in [3, 4, 7] {
            let c = sample_uniform(25, d, d as u64).unwrap();
            let s = sobolev(&c, &SobolevSpec::rayleigh(d).unwrap()).unwrap();
            assert_abs_diff_eq!(s, rayleigh(&c), epsilon = 1e-9);
        }
    }

    #[test]
    fn sobolev_single_point_is_the_self_pair_constant() {
        let spec = SobolevSpec::new(vec![0.5, 1.0, 0.25], 4).unwrap();
        let one = normalize(array![[0.0, 0.0, 1.0, 0.0]].view()).unwrap();
        let alpha = 1.0;
        let expect: f64 = [0.5f64, 1.0, 0.25]
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let k = i + 1;
                v * v * (1.0 + k as f64) * gegenbauer(k, alpha, 1.0)
            })
            .sum();
        assert_abs_diff_eq!(sobolev(&one, &spec).unwrap(), expect, epsilon = 1e-12);
    }

    #[test]
    fn sobolev_ajne_weights_on_cross_polytope() {
        let spec = SobolevSpec::ajne(3, DEFAULT_SOBOLEV_ORDER).unwrap();
        let s = sobolev(&cross_polytope(3).unwrap(), &spec).unwrap();
        assert_abs_diff_eq!(s, 4.0 * ajne(&cross_polytope(3).unwrap()), epsilon = 5e-3);
    }

    #[test]
    fn sobolev_rejects_circle() {
        assert!(matches!(SobolevSpec::rayleigh(2), Err(Error::Dimension(_))));
        let spec = SobolevSpec::rayleigh(3).unwrap();
        let c = sample_uniform(4, 4, 0).unwrap();
        assert!(matches!(sobolev(&c, &spec), Err(Error::Dimension(_))));
    }

    #[test]
    fn haar_matrix_is_orthogonal() {
        let mut rng = stream_rng(4, 0);
        let q = haar_orthogonal(&mut rng, 6);
        let eye = &q * q.transpose();
        for i in 0..6 {
            for j in 0..6 {
                assert_abs_diff_eq!(eye[(i, j)], if i == j { 1.0 } else { 0.0 }, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn theorem1_trivial_caps() {
        let r = theorem1_demo(8, 5, 3, 1).unwrap();
        let full = r.cap(PI).unwrap();
        assert_eq!((full.measure, full.mean_fraction, full.max_abs_deviation), (1.0, 1.0, 0.0));
        let empty = r.cap(0.0).unwrap();
        assert_eq!((empty.measure, empty.mean_fraction, empty.max_abs_deviation), (0.0, 0.0, 0.0));
        assert!(theorem1_demo(3, 5, 3, 1).is_err());
    }

    #[test]
    fn theorem1_hemisphere_concentrates() {
        let r = theorem1_demo(256, 200, 1, 7).unwrap();
        assert!(r.cap(PI / 2.0).unwrap().mean_abs_deviation < 0.05);
    }
}
