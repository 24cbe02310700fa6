//! Projected gradient descent with momentum on a product of spheres.
//!
//! Each iteration evaluates the objective, projects every row of the
//! gradient onto the tangent space of its point, accumulates it into an
//! ambient momentum buffer, and takes a normalized step:
//!
//! ```text
//! m <- mu m + P(x) g
//! x <- normalize(x - lr P(x) m)
//! ```
//!
//! `g` is negated for objectives that are maximized.

pub mod unroll;

use std::collections::BTreeMap;
use std::io::Write;

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objectives::{
    energy_s2_geodesic, evaluate, separation_raw, InnerLoopConfig, KernelSpec, ObjectiveKind,
    ObjectiveSpec, Sense,
};
use crate::rng::derive_seed;
use crate::sphere::{normalize_in_place, sample_uniform, tangent_project_in_place, Configuration, Metric};

pub use unroll::{unroll_inner, DifferentiableLandscape, FnLandscape, InnerLandscape, Negated};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    /// `(first iteration, step size)` pairs, thresholds strictly increasing from 0.
    pub lr_schedule: Vec<(usize, f64)>,
    pub momentum: f64,
    pub max_iters: usize,
    pub seed: u64,
    pub record_every: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            lr_schedule: vec![(0, 0.01), (5000, 0.001)],
            momentum: 0.9,
            max_iters: 8000,
            seed: 0,
            record_every: 100,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        match self.lr_schedule.first() {
            None => return bad("lr_schedule is empty".into()),
            Some((0, _)) => {}
            Some((t, _)) => return bad(format!("lr_schedule must start at iteration 0, got {t}")),
        }
        for w in self.lr_schedule.windows(2) {
            if w[1].0 <= w[0].0 {
                return bad("lr_schedule thresholds must be strictly increasing".into());
            }
        }
        if let Some((_, lr)) = self.lr_schedule.iter().find(|(_, lr)| !(*lr > 0.0 && lr.is_finite())) {
            return bad(format!("step sizes must be positive, got {lr}"));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad(format!("momentum must lie in [0, 1), got {}", self.momentum));
        }
        if self.max_iters == 0 {
            return bad("max_iters must be >= 1".into());
        }
        if self.record_every == 0 {
            return bad("record_every must be >= 1".into());
        }
        Ok(())
    }

    /// Step size in effect at iteration `iter`.
    pub fn lr_at(&self, iter: usize) -> f64 {
        self.lr_schedule
            .iter()
            .take_while(|(t, _)| *t <= iter)
            .last()
            .map_or(self.lr_schedule[0].1, |(_, lr)| *lr)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub iter: usize,
    pub objective: f64,
    pub energy_s2: f64,
    pub separation_geodesic: f64,
    pub masscenter_norm: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub records: Vec<Record>,
    pub final_config: Configuration,
}

pub const TRAJECTORY_CSV_HEADER: &str = "iter,objective,energy_s2,separation_geodesic,masscenter_norm";

impl Trajectory {
    /// The last record, taken at the final configuration.
    pub fn last(&self) -> &Record {
        self.records.last().expect("trajectories hold at least one record")
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for r in &self.records {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "records": self.records,
            "final": self.final_config.to_json(),
        })
    }
}

fn record(config: &Configuration, iter: usize, objective: f64) -> Record {
    Record {
        iter,
        objective,
        energy_s2: energy_s2_geodesic(config),
        separation_geodesic: separation_raw(config.points(), Metric::Geodesic)
            .map_or(f64::NAN, |s| s.value),
        masscenter_norm: crate::sphere::norm(&config.vector_sum()),
    }
}

/// Runs the optimizer from `initial`. Records are taken every
/// `record_every` iterations and once more at `max_iters`, after the last step.
pub fn run(initial: &Configuration, objective: &ObjectiveSpec, opt: &OptimizerConfig) -> Result<Trajectory> {
    run_observed(initial, objective, opt, |_, _| {})
}

/// Like [`run`], calling `observe(iter, config)` on every iterate, including
/// the initial and final ones.
pub fn run_observed<F>(
    initial: &Configuration,
    objective: &ObjectiveSpec,
    opt: &OptimizerConfig,
    mut observe: F,
) -> Result<Trajectory>
where
    F: FnMut(usize, &Configuration),
{
    objective.validate()?;
    opt.validate()?;
    let (n, d) = (initial.n(), initial.d());
    if n < 2 && matches!(objective.kind, ObjectiveKind::Mhe | ObjectiveKind::Mhs) && !objective.augment {
        return Err(Error::InvalidConfig(format!(
            "{} needs at least two points",
            objective.kind.name()
        )));
    }
    let sign = match objective.sense() {
        Sense::Minimize => objective.weight,
        Sense::Maximize => -objective.weight,
    };
    let inner_seed = |iter: usize| derive_seed(opt.seed, iter as u64);

    let mut config = initial.clone();
    let mut momentum = Array2::<f64>::zeros((n, d));
    let mut records = Vec::new();
    let mut dir = vec![0.0; d];
    for iter in 0..opt.max_iters {
        observe(iter, &config);
        let value = evaluate(&config, objective, inner_seed(iter)).map_err(|e| e.at_iteration(iter))?;
        if iter % opt.record_every == 0 {
            records.push(record(&config, iter, value.value));
        }
        let grad = value.gradient.ok_or_else(|| {
            Error::InvalidConfig(format!("{} provides no gradient", objective.kind.name()))
        })?;
        let selected = (objective.kind == ObjectiveKind::Mhs)
            .then(|| mhs_pair(&config, objective))
            .transpose()
            .map_err(|e| e.at_iteration(iter))?;

        let lr = opt.lr_at(iter);
        let mut points = config.into_inner();
        for i in 0..n {
            let mut m = momentum.row_mut(i);
            let m = m.as_slice_mut().expect("standard layout");
            if selected.is_some_and(|(a, b)| i != a && i != b) {
                m.iter_mut().for_each(|x| *x = 0.0);
                continue;
            }
            let x = points.row(i);
            let x = x.as_slice().expect("standard layout");
            dir.iter_mut().zip(grad.row(i)).for_each(|(t, g)| *t = sign * g);
            tangent_project_in_place(x, &mut dir);
            for (mk, gk) in m.iter_mut().zip(&dir) {
                *mk = opt.momentum * *mk + gk;
            }
            dir.copy_from_slice(m);
            tangent_project_in_place(x, &mut dir);
            let mut row = points.row_mut(i);
            let row = row.as_slice_mut().expect("standard layout");
            row.iter_mut().zip(&dir).for_each(|(xk, dk)| *xk -= lr * dk);
            normalize_in_place(row);
        }
        config = Configuration::from_unit_rows(points).map_err(|e| e.at_iteration(iter))?;
    }
    let iter = opt.max_iters;
    observe(iter, &config);
    let value = evaluate(&config, objective, inner_seed(iter)).map_err(|e| e.at_iteration(iter))?;
    records.push(record(&config, iter, value.value));
    Ok(Trajectory {
        records,
        final_config: config,
    })
}

/// Rows moved by an MHS step: the closest pair, mapped back from the
/// augmented set when augmentation is on.
fn mhs_pair(config: &Configuration, objective: &ObjectiveSpec) -> Result<(usize, usize)> {
    let n = config.n();
    let pair = if objective.augment {
        let aug = crate::objectives::antipodal_augment(config);
        separation_raw(aug.points(), objective.kernel.metric)?.pair
    } else {
        separation_raw(config.points(), objective.kernel.metric)?.pair
    };
    Ok((pair.0 % n, pair.1 % n))
}

/// Outcome of one restart of a multi-start run.
#[derive(Clone, Debug)]
pub struct Restart {
    pub index: usize,
    pub seed: u64,
    pub trajectory: Trajectory,
}

#[derive(Clone, Debug)]
pub struct MultiStart {
    /// Restarts in index order.
    pub restarts: Vec<Restart>,
    /// Index of the restart with the best final objective (first on ties).
    pub best: usize,
}

impl MultiStart {
    pub fn best(&self) -> &Restart {
        &self.restarts[self.best]
    }
}

/// Runs `initials.len()` independent restarts in parallel. Restart `r` uses
/// optimizer seed `derive_seed(opt.seed, r)`.
pub fn run_restarts(
    initials: &[Configuration],
    objective: &ObjectiveSpec,
    opt: &OptimizerConfig,
) -> Result<MultiStart> {
    if initials.is_empty() {
        return Err(Error::InvalidConfig("at least one restart is required".into()));
    }
    let restarts = initials
        .par_iter()
        .enumerate()
        .map(|(index, init)| {
            let seed = derive_seed(opt.seed, index as u64);
            let opt = OptimizerConfig { seed, ..opt.clone() };
            run(init, objective, &opt).map(|trajectory| Restart {
                index,
                seed,
                trajectory,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let better = |a: f64, b: f64| match objective.sense() {
        Sense::Minimize => a < b,
        Sense::Maximize => a > b,
    };
    let mut best = 0;
    for (i, r) in restarts.iter().enumerate().skip(1) {
        if better(r.trajectory.last().objective, restarts[best].trajectory.last().objective) {
            best = i;
        }
    }
    Ok(MultiStart { restarts, best })
}

/// Multi-start from uniform random configurations; restart `r` starts from
/// `sample_uniform(n, d, derive_seed(seed, r))`.
pub fn multi_start(
    n: usize,
    d: usize,
    restarts: usize,
    objective: &ObjectiveSpec,
    opt: &OptimizerConfig,
) -> Result<MultiStart> {
    let initials = (0..restarts)
        .map(|r| sample_uniform(n, d, derive_seed(opt.seed, r as u64)))
        .collect::<Result<Vec<_>>>()?;
    run_restarts(&initials, objective, opt)
}

/// The four objectives of the uniformity comparison, with gradient weights.
pub fn fig1_objectives() -> Vec<ObjectiveSpec> {
    let inner = InnerLoopConfig::default();
    vec![
        ObjectiveSpec::new(ObjectiveKind::Mhe, Metric::Geodesic)
            .with_augment(false)
            .with_weight(FIG1_WEIGHTS[0]),
        ObjectiveSpec::new(ObjectiveKind::Mhs, Metric::Geodesic).with_weight(FIG1_WEIGHTS[1]),
        ObjectiveSpec::new(ObjectiveKind::MhcRelaxed, Metric::Geodesic)
            .with_inner(inner)
            .with_weight(FIG1_WEIGHTS[2]),
        ObjectiveSpec::new(ObjectiveKind::Mgd, Metric::Chordal)
            .with_kernel(KernelSpec::gaussian(1.0, Metric::Chordal))
            .with_weight(FIG1_WEIGHTS[3]),
    ]
}

/// Gradient weights of MHE, MHS, MHC and MGD in the comparison. The raw
/// energy gradient of 200 points is about four orders of magnitude larger
/// than the others, and the two-point MHS update needs a larger step to move
/// every point often enough within the budget.
const FIG1_WEIGHTS: [f64; 4] = [1e-4, 3.0, 1.0, 1.0];

/// Optimizer settings of the comparison: 8000 iterations, step 0.01 divided
/// by 10 at 5000, momentum 0.9.
pub fn fig1_optimizer(seed: u64) -> OptimizerConfig {
    OptimizerConfig {
        lr_schedule: vec![(0, 0.01), (5000, 0.001)],
        momentum: 0.9,
        max_iters: 8000,
        seed,
        record_every: 100,
    }
}

/// Optimizes 200 points in R^3 from a common uniform start under MHE, MHS,
/// MHC and MGD, returning the trajectories keyed by objective name.
pub fn reproduce_fig1(seed: u64) -> Result<BTreeMap<String, Trajectory>> {
    let initial = sample_uniform(200, 3, seed)?;
    let opt = fig1_optimizer(seed);
    fig1_objectives()
        .into_par_iter()
        .map(|spec| {
            let key = match spec.kind {
                ObjectiveKind::MhcRelaxed => "mhc",
                k => k.name(),
            };
            run(&initial, &spec, &opt).map(|t| (key.to_string(), t))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::mhe_energy;

    fn fixed(lr: f64, iters: usize) -> OptimizerConfig {
        OptimizerConfig {
            lr_schedule: vec![(0, lr)],
            momentum: 0.0,
            max_iters: iters,
            seed: 3,
            record_every: 1,
        }
    }

    #[test]
    fn schedule_validation_and_lookup() {
        let opt = OptimizerConfig::default();
        opt.validate().unwrap();
        assert_eq!(opt.lr_at(0), 0.01);
        assert_eq!(opt.lr_at(4999), 0.01);
        assert_eq!(opt.lr_at(5000), 0.001);
        let mut bad = opt.clone();
        bad.lr_schedule = vec![(1, 0.1)];
        assert!(bad.validate().is_err());
        bad.lr_schedule = vec![(0, 0.1), (0, 0.2)];
        assert!(bad.validate().is_err());
        let mut bad = opt.clone();
        bad.momentum = 1.0;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn records_cover_final_iteration() {
        let c = sample_uniform(6, 3, 1).unwrap();
        let spec = ObjectiveSpec::new(ObjectiveKind::Mhe, Metric::Chordal);
        let mut opt = fixed(0.01, 25);
        opt.record_every = 10;
        let t = run(&c, &spec, &opt).unwrap();
        let iters: Vec<_> = t.records.iter().map(|r| r.iter).collect();
        assert_eq!(iters, vec![0, 10, 20, 25]);
    }

    #[test]
    fn antipodal_pair_from_mhs() {
        let c = sample_uniform(2, 3, 5).unwrap();
        let spec = ObjectiveSpec::new(ObjectiveKind::Mhs, Metric::Geodesic);
        let opt = OptimizerConfig {
            lr_schedule: vec![(0, 0.05), (200, 5e-3), (400, 5e-4), (600, 5e-5), (800, 5e-6), (1000, 5e-7), (1100, 5e-8)],
            momentum: 0.0,
            max_iters: 1200,
            seed: 0,
            record_every: 100,
        };
        let t = run(&c, &spec, &opt).unwrap();
        assert!((t.last().separation_geodesic - std::f64::consts::PI).abs() < 1e-6);
    }

    #[test]
    fn mhs_moves_at_most_two_rows() {
        let c = sample_uniform(12, 3, 8).unwrap();
        let spec = ObjectiveSpec::new(ObjectiveKind::Mhs, Metric::Chordal);
        let mut opt = fixed(0.02, 30);
        opt.momentum = 0.9;
        let mut prev: Option<Configuration> = None;
        run_observed(&c, &spec, &opt, |_, x| {
            if let Some(p) = &prev {
                let changed = (0..12).filter(|&i| p.row(i) != x.row(i)).count();
                assert!(changed <= 2, "{changed} rows changed");
            }
            prev = Some(x.clone());
        })
        .unwrap();
    }

    #[test]
    fn mhe_descends() {
        let c = sample_uniform(20, 5, 4).unwrap();
        let spec = ObjectiveSpec::new(ObjectiveKind::Mhe, Metric::Chordal)
            .with_kernel(KernelSpec::riesz(1.0, Metric::Chordal))
            .with_augment(false);
        let t = run(&c, &spec, &fixed(1e-4, 100)).unwrap();
        let e0 = mhe_energy(&c, &spec.kernel).unwrap().value;
        assert!(t.last().objective < e0);
    }

    #[test]
    fn deterministic_trajectories() {
        let c = sample_uniform(8, 3, 2).unwrap();
        let spec = ObjectiveSpec::new(ObjectiveKind::Mhp, Metric::Chordal)
            .with_kernel(KernelSpec::riesz(1.0, Metric::Chordal));
        let opt = fixed(0.01, 20);
        let a = run(&c, &spec, &opt).unwrap();
        let b = run(&c, &spec, &opt).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn errors_carry_iteration() {
        let c = crate::sphere::normalize(ndarray::array![[1.0, 0.0], [1.0, 0.0]].view()).unwrap();
        let spec = ObjectiveSpec::new(ObjectiveKind::Mhe, Metric::Chordal).with_augment(false);
        let err = run(&c, &spec, &fixed(0.01, 5)).unwrap_err();
        assert!(matches!(err, Error::AtIteration { iter: 0, .. }));
        assert!(err.is_numerical());
    }

    #[test]
    fn multi_start_picks_best() {
        let spec = ObjectiveSpec::new(ObjectiveKind::Mhe, Metric::Chordal)
            .with_kernel(KernelSpec::riesz(1.0, Metric::Chordal))
            .with_augment(false);
        let ms = multi_start(4, 3, 4, &spec, &fixed(0.01, 50)).unwrap();
        let best = ms.best().trajectory.last().objective;
        assert!(ms.restarts.iter().all(|r| r.trajectory.last().objective >= best));
        assert_eq!(ms.restarts.iter().map(|r| r.index).collect::<Vec<_>>(), vec![0, 1, 2, 3]);
    }
}
