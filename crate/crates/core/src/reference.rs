//! Closed-form optimal configurations, independent brute-force oracles, and
//! numerical checks of the limit and inequality results that tie the
//! objectives together.
//!
//! The oracles never use gradients. They evaluate the inner function at
//! uniform samples and polish the best few with a shrinking pattern search,
//! so they share no code path with the unrolled inner solvers they validate.

use std::f64::consts::PI;

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objectives::{
    mhe_energy, mhs_separation, nearest_distance, InnerLoopConfig, KernelSpec, ObjectiveKind,
    ObjectiveSpec,
};
use crate::optimizer::{multi_start, run_restarts, OptimizerConfig};
use crate::rng::{derive_seed, stream_rng, StreamRng};
use crate::sphere::{dot, normalize, normalize_in_place, tangent_project, uniform_point, Configuration, Metric};

/// `n` unit vectors in `R^d` with pairwise dot `-1/(n-1)` and zero sum.
///
/// Vertex `i` has coordinates `h_k[i]` in the Helmert basis
/// `h_k = (1, ..., 1, -k, 0, ..., 0) / sqrt(k (k+1))` (k ones), which spans
/// the hyperplane orthogonal to `(1, ..., 1)` in `R^n`.
pub fn regular_simplex(n: usize, d: usize) -> Result<Configuration> {
    if d < 2 {
        return Err(Error::Dimension(format!("d must be >= 2, got {d}")));
    }
    if n < 2 || n > d + 1 {
        return Err(Error::Dimension(format!(
            "a regular simplex of {n} points needs 2 <= n <= d + 1 = {}",
            d + 1
        )));
    }
    let mut raw = Array2::zeros((n, d));
    for k in 1..n {
        let scale = 1.0 / ((k * (k + 1)) as f64).sqrt();
        for i in 0..k {
            raw[[i, k - 1]] = scale;
        }
        raw[[k, k - 1]] = -(k as f64) * scale;
    }
    normalize(raw.view())
}

/// The `2d` points `+e_1, -e_1, +e_2, -e_2, ...`.
pub fn cross_polytope(d: usize) -> Result<Configuration> {
    if d < 2 {
        return Err(Error::Dimension(format!("d must be >= 2, got {d}")));
    }
    let mut raw = Array2::zeros((2 * d, d));
    for i in 0..d {
        raw[[2 * i, i]] = 1.0;
        raw[[2 * i + 1, i]] = -1.0;
    }
    normalize(raw.view())
}

/// `n` equally spaced points on the circle, the first at angle 0.
pub fn equally_spaced_circle(n: usize) -> Result<Configuration> {
    let raw = Array2::from_shape_fn((n, 2), |(k, c)| {
        let a = 2.0 * PI * k as f64 / n as f64;
        if c == 0 {
            a.cos()
        } else {
            a.sin()
        }
    });
    normalize(raw.view())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum OracleMethod {
    ClosedForm,
    GridSearch,
    MultiStart,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub quantity: String,
    pub estimate: f64,
    pub method: OracleMethod,
    pub samples_or_restarts: usize,
}

impl OracleReport {
    pub fn closed_form(quantity: impl Into<String>, estimate: f64) -> Self {
        OracleReport {
            quantity: quantity.into(),
            estimate,
            method: OracleMethod::ClosedForm,
            samples_or_restarts: 0,
        }
    }
}

/// Smallest sample count the grid oracles accept.
pub const MIN_ORACLE_SAMPLES: usize = 1000;
/// Default sample count of the grid oracles.
pub const DEFAULT_ORACLE_SAMPLES: usize = 10_000;
const POLISH_STARTS: usize = 10;
const POLISH_ITERS: usize = 200;
/// Random directions tried per iteration, per ambient dimension.
const POLISH_DIRECTIONS: usize = 24;
const POLISH_STEP: f64 = 0.05;

/// Minimizes `f` over the sphere by uniform sampling followed by a pattern
/// search from the best samples. Returns the lowest value found.
fn sample_and_polish<F>(f: F, d: usize, samples: usize, seed: u64) -> Result<f64>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if samples < MIN_ORACLE_SAMPLES {
        return Err(Error::InvalidConfig(format!(
            "oracles need at least {MIN_ORACLE_SAMPLES} samples, got {samples}"
        )));
    }
    let mut rng = stream_rng(seed, 0);
    let points: Vec<Vec<f64>> = (0..samples).map(|_| uniform_point(&mut rng, d)).collect();
    let values: Vec<f64> = points.par_iter().map(|p| f(p)).collect();
    let mut order: Vec<usize> = (0..samples).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let polished: Vec<f64> = order[..POLISH_STARTS.min(samples)]
        .par_iter()
        .enumerate()
        .map(|(r, &i)| {
            let mut rng = stream_rng(seed, 1 + r as u64);
            pattern_search(&f, points[i].clone(), values[i], &mut rng)
        })
        .collect();
    Ok(polished.into_iter().fold(f64::INFINITY, f64::min))
}

/// Tries steps of the current length along `POLISH_DIRECTIONS` random
/// tangent directions and their negatives, moving to the first improvement
/// and halving the length when none improves. Fresh directions each
/// iteration keep the search from stalling on kinks of max-min functions.
fn pattern_search<F: Fn(&[f64]) -> f64>(f: &F, mut v: Vec<f64>, mut value: f64, rng: &mut StreamRng) -> f64 {
    let d = v.len();
    let mut step = POLISH_STEP;
    let mut trial = vec![0.0; d];
    for _ in 0..POLISH_ITERS {
        let mut improved = false;
        'dirs: for _ in 0..POLISH_DIRECTIONS * d {
            let mut dir = tangent_project(&v, &uniform_point(rng, d));
            let len = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
            if len < 1e-8 {
                continue;
            }
            dir.iter_mut().for_each(|x| *x /= len);
            for sign in [1.0, -1.0] {
                for ((t, x), g) in trial.iter_mut().zip(&v).zip(&dir) {
                    *t = x + step * sign * g;
                }
                normalize_in_place(&mut trial);
                let candidate = f(&trial);
                if candidate < value {
                    value = candidate;
                    v.copy_from_slice(&trial);
                    improved = true;
                    break 'dirs;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    value
}

/// Independent estimate of `min_v sum_i K(rho(v, w_i))`.
pub fn polarization_grid_oracle(
    config: &Configuration,
    kernel: &KernelSpec,
    samples: usize,
    seed: u64,
) -> Result<OracleReport> {
    kernel.validate()?;
    let field = |v: &[f64]| -> f64 {
        (0..config.n())
            .map(|i| {
                let rho = crate::sphere::distance(v, config.row(i), kernel.metric);
                kernel.eval(rho).unwrap_or(f64::INFINITY)
            })
            .sum()
    };
    let estimate = sample_and_polish(field, config.d(), samples, seed)?;
    Ok(OracleReport {
        quantity: "polarization".into(),
        estimate,
        method: OracleMethod::GridSearch,
        samples_or_restarts: samples,
    })
}

/// Independent estimate of `max_v min_i rho(v, w_i)`.
pub fn covering_sample_oracle(
    config: &Configuration,
    metric: Metric,
    samples: usize,
    seed: u64,
) -> Result<OracleReport> {
    let d = config.d();
    let negated = |v: &[f64]| -nearest_distance(config.as_slice(), d, v, metric).0;
    let estimate = -sample_and_polish(negated, d, samples, seed)?;
    Ok(OracleReport {
        quantity: "covering radius".into(),
        estimate,
        method: OracleMethod::GridSearch,
        samples_or_restarts: samples,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitRow {
    pub s: f64,
    pub value: f64,
}

/// True when the values decrease strictly along the rows.
pub fn strictly_decreasing(rows: &[LimitRow]) -> bool {
    rows.windows(2).all(|w| w[1].value < w[0].value)
}

fn check_s_values(s_values: &[f64]) -> Result<()> {
    if s_values.is_empty() {
        return Err(Error::InvalidConfig("no s values given".into()));
    }
    if s_values.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
        return Err(Error::Domain("limit checks need finite s > 0".into()));
    }
    if s_values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidConfig("s values must be strictly ascending".into()));
    }
    Ok(())
}

/// Universally optimal configuration for `(n, d)`: the simplex for
/// `n <= d + 1` and the cross-polytope for `n = 2d`.
pub fn universal_optimum(n: usize, d: usize) -> Result<Configuration> {
    if (2..=d + 1).contains(&n) {
        regular_simplex(n, d)
    } else if n == 2 * d {
        cross_polytope(d)
    } else {
        Err(Error::UnsupportedCase(format!(
            "no closed-form optimum is known for n = {n}, d = {d}"
        )))
    }
}

/// `(E_s)^(1/s) * separation` at the universal optimum for each `s`
/// (chordal distance). The values tend to 1 as `s` grows.
pub fn limit_check_prop1(n: usize, d: usize, s_values: &[f64]) -> Result<Vec<LimitRow>> {
    check_s_values(s_values)?;
    let config = universal_optimum(n, d)?;
    let sep = mhs_separation(&config, Metric::Chordal)?.value;
    s_values
        .iter()
        .map(|&s| {
            let energy = mhe_energy(&config, &KernelSpec::riesz(s, Metric::Chordal))?.value;
            Ok(LimitRow {
                s,
                value: energy.powf(1.0 / s) * sep,
            })
        })
        .collect()
}

/// `(P_s)^(1/s) * alpha` for `n` equally spaced points on the circle under
/// geodesic distance, where `alpha = pi/n` is their covering radius and
/// `P_s` comes from the grid oracle.
pub fn limit_check_prop4(n: usize, s_values: &[f64]) -> Result<Vec<LimitRow>> {
    check_s_values(s_values)?;
    if n < 1 {
        return Err(Error::InvalidConfig("n must be >= 1".into()));
    }
    let config = equally_spaced_circle(n)?;
    let alpha = PI / n as f64;
    s_values
        .iter()
        .map(|&s| {
            let kernel = KernelSpec::riesz(s, Metric::Geodesic);
            let p = polarization_grid_oracle(&config, &kernel, DEFAULT_ORACLE_SAMPLES, 0)?.estimate;
            Ok(LimitRow {
                s,
                value: p.powf(1.0 / s) * alpha,
            })
        })
        .collect()
}

/// Budget of the multi-start estimators used by the inequality check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimatorSettings {
    pub restarts: usize,
    pub optimizer: OptimizerConfig,
    /// Inner loop of the polarization optimization.
    pub inner: InnerLoopConfig,
    pub oracle_samples: usize,
    pub seed: u64,
}

impl Default for EstimatorSettings {
    fn default() -> Self {
        EstimatorSettings {
            restarts: 50,
            optimizer: OptimizerConfig {
                lr_schedule: vec![(0, 0.01), (1000, 0.001)],
                momentum: 0.9,
                max_iters: 1500,
                seed: 0,
                record_every: 1500,
            },
            inner: InnerLoopConfig {
                steps: 20,
                lr: 0.05,
                restarts: 8,
                seed: 0,
                deterministic_start: true,
            },
            oracle_samples: 2000,
            seed: 0,
        }
    }
}

/// Lowest Riesz `s` energy (chordal) of `n` points found by multi-start MHE.
pub fn min_energy_estimate(n: usize, d: usize, s: f64, settings: &EstimatorSettings) -> Result<OracleReport> {
    let spec = ObjectiveSpec::new(ObjectiveKind::Mhe, Metric::Chordal)
        .with_kernel(KernelSpec::riesz(s, Metric::Chordal))
        .with_augment(false);
    let opt = OptimizerConfig {
        seed: derive_seed(settings.seed, n as u64),
        ..settings.optimizer.clone()
    };
    let ms = multi_start(n, d, settings.restarts, &spec, &opt)?;
    let best = mhe_energy(&ms.best().trajectory.final_config, &spec.kernel)?.value;
    Ok(OracleReport {
        quantity: format!("minimal energy (n = {n}, d = {d}, s = {s})"),
        estimate: best,
        method: OracleMethod::MultiStart,
        samples_or_restarts: settings.restarts,
    })
}

/// Largest polarization (chordal Riesz `s`) of `n` points found by
/// multi-start MHP. Each final configuration is scored by the grid oracle,
/// so the estimate is the polarization of a concrete configuration.
pub fn max_polarization_estimate(
    n: usize,
    d: usize,
    s: f64,
    settings: &EstimatorSettings,
) -> Result<OracleReport> {
    let kernel = KernelSpec::riesz(s, Metric::Chordal);
    let spec = ObjectiveSpec::new(ObjectiveKind::Mhp, Metric::Chordal)
        .with_kernel(kernel)
        .with_inner(settings.inner);
    let opt = OptimizerConfig {
        seed: derive_seed(settings.seed, 1000 + n as u64),
        ..settings.optimizer.clone()
    };
    let initials = (0..settings.restarts)
        .map(|r| crate::sphere::sample_uniform(n, d, derive_seed(opt.seed, r as u64)))
        .collect::<Result<Vec<_>>>()?;
    let ms = run_restarts(&initials, &spec, &opt)?;
    let scores = ms
        .restarts
        .par_iter()
        .map(|r| {
            polarization_grid_oracle(&r.trajectory.final_config, &kernel, settings.oracle_samples, r.seed)
                .map(|o| o.estimate)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(OracleReport {
        quantity: format!("maximal polarization (n = {n}, d = {d}, s = {s})"),
        estimate: scores.into_iter().fold(f64::NEG_INFINITY, f64::max),
        method: OracleMethod::MultiStart,
        samples_or_restarts: settings.restarts,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prop2Report {
    pub n: usize,
    pub d: usize,
    pub s: f64,
    /// Maximal polarization of `n` points.
    pub polarization: f64,
    /// `eps_s(n+1) / (n+1)`.
    pub energy_next_ratio: f64,
    /// `eps_s(n) / (n-1)`.
    pub energy_ratio: f64,
    /// Slacks of the two inequalities of the chain.
    pub margins: [f64; 2],
    pub holds: bool,
    pub estimates: Vec<OracleReport>,
}

/// Required slack of each inequality of the chain.
pub const PROP2_SLACK: f64 = 1e-3;

/// Checks `P_s(n) >= eps_s(n+1)/(n+1) >= eps_s(n)/(n-1)` with estimated
/// minimal energies and maximal polarization.
pub fn inequality_check_prop2(n: usize, d: usize, s: f64) -> Result<Prop2Report> {
    inequality_check_prop2_with(n, d, s, &EstimatorSettings::default())
}

pub fn inequality_check_prop2_with(
    n: usize,
    d: usize,
    s: f64,
    settings: &EstimatorSettings,
) -> Result<Prop2Report> {
    if !(2..=3).contains(&d) || !(2..=6).contains(&n) {
        return Err(Error::UnsupportedCase(format!(
            "the inequality check covers d in {{2, 3}} and 2 <= n <= 6, got n = {n}, d = {d}"
        )));
    }
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::Domain(format!("s must be positive, got {s}")));
    }
    let energy_n = min_energy_estimate(n, d, s, settings)?;
    let energy_next = min_energy_estimate(n + 1, d, s, settings)?;
    let polarization = max_polarization_estimate(n, d, s, settings)?;
    let energy_next_ratio = energy_next.estimate / (n + 1) as f64;
    let energy_ratio = energy_n.estimate / (n - 1) as f64;
    let margins = [
        polarization.estimate - energy_next_ratio,
        energy_next_ratio - energy_ratio,
    ];
    Ok(Prop2Report {
        n,
        d,
        s,
        polarization: polarization.estimate,
        energy_next_ratio,
        energy_ratio,
        margins,
        holds: margins.iter().all(|m| *m >= PROP2_SLACK),
        estimates: vec![energy_n, energy_next, polarization],
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecoveryReport {
    pub n: usize,
    pub d: usize,
    pub target_energy: f64,
    pub best_energy: f64,
    pub relative_error: f64,
    /// Largest deviation of a pairwise dot product of the best configuration
    /// from its value at the closed-form optimum, matched after sorting.
    pub max_dot_deviation: f64,
    pub restarts: usize,
}

/// Settings of the recovery runs: Riesz s = 1 chordal energy, step 0.01
/// divided by 10 halfway, momentum 0.9.
pub fn recovery_optimizer(iters: usize, seed: u64) -> OptimizerConfig {
    OptimizerConfig {
        lr_schedule: vec![(0, 0.01), (iters / 2, 0.001)],
        momentum: 0.9,
        max_iters: iters,
        seed,
        record_every: iters,
    }
}

/// Runs multi-start MHE (s = 1, chordal) for `(n, d)` and compares the best
/// energy with the universal optimum.
pub fn optimum_recovery(n: usize, d: usize, restarts: usize, iters: usize, seed: u64) -> Result<RecoveryReport> {
    let target = universal_optimum(n, d)?;
    let kernel = KernelSpec::riesz(1.0, Metric::Chordal);
    let spec = ObjectiveSpec::new(ObjectiveKind::Mhe, Metric::Chordal)
        .with_kernel(kernel)
        .with_augment(false);
    let ms = multi_start(n, d, restarts, &spec, &recovery_optimizer(iters, seed))?;
    let best = &ms.best().trajectory.final_config;
    let target_energy = mhe_energy(&target, &kernel)?.value;
    let best_energy = mhe_energy(best, &kernel)?.value;
    let dots = |c: &Configuration| {
        let mut v: Vec<f64> = (0..c.n())
            .flat_map(|i| (i + 1..c.n()).map(move |j| (i, j)))
            .map(|(i, j)| dot(c.row(i), c.row(j)))
            .collect();
        v.sort_by(f64::total_cmp);
        v
    };
    let max_dot_deviation = dots(best)
        .iter()
        .zip(dots(&target))
        .fold(0.0, |m, (a, b)| f64::max(m, (a - b).abs()));
    Ok(RecoveryReport {
        n,
        d,
        target_energy,
        best_energy,
        relative_error: (best_energy - target_energy).abs() / target_energy,
        max_dot_deviation,
        restarts,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeparationScalingRow {
    pub n: usize,
    pub separation: f64,
    /// `separation * n^(1/(d-1))`.
    pub scaled: f64,
}

/// Separation of the best multi-start MHE configuration (s = 1, chordal),
/// scaled by `n^(1/(d-1))`, for each `n`. Purely descriptive.
pub fn separation_scaling_table(
    ns: &[usize],
    d: usize,
    restarts: usize,
    iters: usize,
    seed: u64,
) -> Result<Vec<SeparationScalingRow>> {
    let spec = ObjectiveSpec::new(ObjectiveKind::Mhe, Metric::Chordal)
        .with_kernel(KernelSpec::riesz(1.0, Metric::Chordal))
        .with_augment(false);
    ns.iter()
        .map(|&n| {
            let opt = recovery_optimizer(iters, derive_seed(seed, n as u64));
            let ms = multi_start(n, d, restarts, &spec, &opt)?;
            let separation = mhs_separation(&ms.best().trajectory.final_config, Metric::Chordal)?.value;
            Ok(SeparationScalingRow {
                n,
                separation,
                scaled: separation * (n as f64).powf(1.0 / (d as f64 - 1.0)),
            })
        })
        .collect()
}
