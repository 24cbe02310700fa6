use ndarray::{concatenate, s, Array2, Axis};
use serde::{Deserialize, Serialize};

use super::covering::{mhc_covering_raw, mhc_relaxed_raw};
use super::energy::{mhe_energy_raw, mhs_objective_raw};
use super::gram::{default_jitter, mgd_logdet_raw};
use super::kernel::{KernelFamily, KernelSpec};
use super::polarization::{mhp_solve, rmhp_value_raw};
use super::{ObjectiveValue, Sense};
use crate::error::{Error, Result};
use crate::sphere::{normalize, Configuration, Metric};

/// Settings of the inner problem of MHP and MHC.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InnerLoopConfig {
    /// Unrolled steps per start.
    pub steps: usize,
    pub lr: f64,
    /// Random starts in addition to the deterministic one.
    pub restarts: usize,
    /// Seed of the random starts. The optimizer overrides it every iteration.
    pub seed: u64,
    /// Also start from the antipode of the mass center.
    pub deterministic_start: bool,
}

impl Default for InnerLoopConfig {
    fn default() -> Self {
        InnerLoopConfig {
            steps: 1,
            lr: 0.01,
            restarts: 8,
            seed: 0,
            deterministic_start: true,
        }
    }
}

impl InnerLoopConfig {
    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(Error::InvalidConfig("inner.steps must be >= 1".into()));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::InvalidConfig(format!("inner.lr must be positive, got {}", self.lr)));
        }
        if self.restarts == 0 && !self.deterministic_start {
            return Err(Error::InvalidConfig("inner loop has no starting point".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectiveKind {
    Mhe,
    Mhs,
    Mhp,
    Rmhp,
    Mhc,
    MhcRelaxed,
    Mgd,
}

impl ObjectiveKind {
    pub fn name(self) -> &'static str {
        match self {
            ObjectiveKind::Mhe => "mhe",
            ObjectiveKind::Mhs => "mhs",
            ObjectiveKind::Mhp => "mhp",
            ObjectiveKind::Rmhp => "rmhp",
            ObjectiveKind::Mhc => "mhc",
            ObjectiveKind::MhcRelaxed => "mhc_relaxed",
            ObjectiveKind::Mgd => "mgd",
        }
    }

    pub fn sense(self) -> Sense {
        match self {
            ObjectiveKind::Mhs | ObjectiveKind::Mhp | ObjectiveKind::Mgd => Sense::Maximize,
            _ => Sense::Minimize,
        }
    }

    fn uses_metric(self) -> bool {
        !matches!(self, ObjectiveKind::Rmhp | ObjectiveKind::Mgd)
    }
}

/// Which objective to evaluate, with every parameter resolved.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ObjectiveSpecFile", into = "ObjectiveSpecFile")]
pub struct ObjectiveSpec {
    pub kind: ObjectiveKind,
    pub kernel: KernelSpec,
    /// Evaluate on the configuration together with its antipodes.
    pub augment: bool,
    pub inner: InnerLoopConfig,
    /// Soft-min sharpness of the relaxed covering objective.
    pub gamma: f64,
    /// Gaussian scale of the Gram determinant objective.
    pub epsilon: f64,
    /// Gram diagonal jitter; `None` means `1e-10 * n`.
    pub jitter: Option<f64>,
    /// Multiplier applied to the gradient by the optimizer.
    pub weight: f64,
}

impl ObjectiveSpec {
    /// Defaults for `kind`: Riesz s = 2 kernel, gamma 5, epsilon 1, one-step
    /// inner unroll, and the antipodal augmentation for MHE only.
    pub fn new(kind: ObjectiveKind, metric: Metric) -> Self {
        ObjectiveSpec {
            kind,
            kernel: KernelSpec::riesz(2.0, metric),
            augment: kind == ObjectiveKind::Mhe,
            inner: InnerLoopConfig::default(),
            gamma: 5.0,
            epsilon: 1.0,
            jitter: None,
            weight: 1.0,
        }
    }

    pub fn with_kernel(mut self, kernel: KernelSpec) -> Self {
        self.kernel = kernel;
        self
    }

    pub fn with_augment(mut self, augment: bool) -> Self {
        self.augment = augment;
        self
    }

    pub fn with_inner(mut self, inner: InnerLoopConfig) -> Self {
        self.inner = inner;
        self
    }

    pub fn with_weight(mut self, weight: f64) -> Self {
        self.weight = weight;
        self
    }

    pub fn sense(&self) -> Sense {
        self.kind.sense()
    }

    pub fn validate(&self) -> Result<()> {
        if self.augment && self.kind == ObjectiveKind::Rmhp {
            return Err(Error::IncompatibleObjective("rmhp".into()));
        }
        self.kernel.validate()?;
        if matches!(self.kind, ObjectiveKind::Mhp | ObjectiveKind::Mhc | ObjectiveKind::MhcRelaxed) {
            self.inner.validate()?;
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidConfig(format!("gamma must be positive, got {}", self.gamma)));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if let Some(j) = self.jitter {
            if !(j >= 0.0 && j.is_finite()) {
                return Err(Error::InvalidConfig(format!("jitter must be non-negative, got {j}")));
            }
        }
        if !(self.weight > 0.0 && self.weight.is_finite()) {
            return Err(Error::InvalidConfig(format!("weight must be positive, got {}", self.weight)));
        }
        Ok(())
    }
}

/// The configuration followed by the antipode of every point.
pub fn antipodal_augment(config: &Configuration) -> Configuration {
    let points = config.points();
    let flipped = points.mapv(|x| -x);
    let stacked = concatenate(Axis(0), &[points, flipped.view()]).expect("same width");
    normalize(stacked.view()).expect("rows of a configuration are unit vectors")
}

/// Evaluates `spec` at `config`. `inner_seed` seeds the random inner starts.
/// With augmentation the gradient of each virtual point is folded back onto
/// its original with a sign flip.
pub fn evaluate(config: &Configuration, spec: &ObjectiveSpec, inner_seed: u64) -> Result<ObjectiveValue> {
    spec.validate()?;
    let augmented;
    let working = if spec.augment {
        augmented = antipodal_augment(config);
        &augmented
    } else {
        config
    };
    let points = working.points();
    let inner = InnerLoopConfig {
        seed: inner_seed,
        ..spec.inner
    };
    let metric = spec.kernel.metric;
    let mut value = match spec.kind {
        ObjectiveKind::Mhe => mhe_energy_raw(points, &spec.kernel)?,
        ObjectiveKind::Mhs => mhs_objective_raw(points, metric)?,
        ObjectiveKind::Mhp => {
            let sol = mhp_solve(points, &spec.kernel, &inner)?;
            ObjectiveValue {
                value: sol.value,
                sense: Sense::Maximize,
                gradient: Some(sol.gradient),
            }
        }
        ObjectiveKind::Rmhp => rmhp_value_raw(points),
        ObjectiveKind::Mhc => mhc_covering_raw(points, metric, &inner)?,
        ObjectiveKind::MhcRelaxed => mhc_relaxed_raw(points, spec.gamma, metric, &inner)?,
        ObjectiveKind::Mgd => {
            let jitter = spec.jitter.unwrap_or_else(|| default_jitter(working.n()));
            mgd_logdet_raw(points, spec.epsilon, jitter)?
        }
    };
    if spec.augment {
        let n = config.n();
        value.gradient = value.gradient.map(|g| fold_antipodal(&g, n));
    }
    Ok(value)
}

fn fold_antipodal(grad: &Array2<f64>, n: usize) -> Array2<f64> {
    &grad.slice(s![..n, ..]) - &grad.slice(s![n.., ..])
}

/// JSON form of an objective, every field optional except `objective`.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ObjectiveSpecFile {
    objective: ObjectiveKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    kernel: Option<KernelFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    augment: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    inner: Option<InnerLoopConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    jitter: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    weight: Option<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct KernelFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    family: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    metric: Option<Metric>,
}

impl TryFrom<ObjectiveSpecFile> for ObjectiveSpec {
    type Error = String;

    fn try_from(file: ObjectiveSpecFile) -> std::result::Result<Self, String> {
        let kind = file.objective;
        let kernel_file = file.kernel.unwrap_or(KernelFile {
            family: None,
            s: None,
            epsilon: None,
            metric: None,
        });
        let metric = match (kernel_file.metric, kind.uses_metric()) {
            (Some(m), _) => m,
            (None, false) => Metric::Chordal,
            (None, true) => {
                return Err(format!(
                    "objective {:?} needs an explicit kernel.metric (\"chordal\" or \"geodesic\")",
                    kind.name()
                ))
            }
        };
        let family = match kernel_file.family.as_deref().unwrap_or("riesz") {
            "riesz" => KernelFamily::Riesz {
                s: kernel_file.s.unwrap_or(2.0),
            },
            "gaussian" => KernelFamily::Gaussian {
                epsilon: kernel_file.epsilon.unwrap_or(1.0),
            },
            other => return Err(format!("unknown kernel family {other:?}")),
        };
        let mut spec = ObjectiveSpec::new(kind, metric).with_kernel(KernelSpec { family, metric });
        if let Some(a) = file.augment {
            spec.augment = a;
        }
        if let Some(inner) = file.inner {
            spec.inner = inner;
        }
        if let Some(g) = file.gamma {
            spec.gamma = g;
        }
        if let Some(e) = file.epsilon {
            spec.epsilon = e;
        }
        if let Some(w) = file.weight {
            spec.weight = w;
        }
        spec.jitter = file.jitter;
        Ok(spec)
    }
}

impl From<ObjectiveSpec> for ObjectiveSpecFile {
    fn from(spec: ObjectiveSpec) -> Self {
        let (family, s, epsilon) = match spec.kernel.family {
            KernelFamily::Riesz { s } => ("riesz", Some(s), None),
            KernelFamily::Gaussian { epsilon } => ("gaussian", None, Some(epsilon)),
        };
        ObjectiveSpecFile {
            objective: spec.kind,
            kernel: Some(KernelFile {
                family: Some(family.to_string()),
                s,
                epsilon,
                metric: Some(spec.kernel.metric),
            }),
            augment: Some(spec.augment),
            inner: Some(spec.inner),
            gamma: Some(spec.gamma),
            epsilon: Some(spec.epsilon),
            jitter: spec.jitter,
            weight: Some(spec.weight),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reference::cross_polytope;
    use crate::sphere::sample_uniform;
    use ndarray::array;

    #[test]
    fn augment_examples() {
        let one = normalize(array![[1.0, 0.0, 0.0]].view()).unwrap();
        let aug = antipodal_augment(&one);
        assert_eq!(aug.points(), array![[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]]);

        let basis = normalize(ndarray::Array2::eye(3).view()).unwrap();
        let aug = antipodal_augment(&basis);
        let cross = cross_polytope(3).unwrap();
        let mut a: Vec<Vec<f64>> = aug.points().outer_iter().map(|r| r.to_vec()).collect();
        let mut b: Vec<Vec<f64>> = cross.points().outer_iter().map(|r| r.to_vec()).collect();
        a.sort_by(|x, y| x.partial_cmp(y).unwrap());
        b.sort_by(|x, y| x.partial_cmp(y).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn rmhp_rejects_augmentation() {
        let c = sample_uniform(5, 3, 0).unwrap();
        let spec = ObjectiveSpec::new(ObjectiveKind::Rmhp, Metric::Chordal).with_augment(true);
        assert!(matches!(evaluate(&c, &spec, 0), Err(Error::IncompatibleObjective(_))));
    }

    #[test]
    fn augmented_gradient_folds_virtual_points() {
        let c = sample_uniform(4, 3, 2).unwrap();
        let spec = ObjectiveSpec::new(ObjectiveKind::Mhe, Metric::Chordal);
        assert!(spec.augment);
        let folded = evaluate(&c, &spec, 0).unwrap().gradient.unwrap();
        let full = crate::objectives::mhe_energy(&antipodal_augment(&c), &spec.kernel)
            .unwrap()
            .gradient
            .unwrap();
        for i in 0..4 {
            for k in 0..3 {
                let expect = full[[i, k]] - full[[i + 4, k]];
                assert!((folded[[i, k]] - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn json_defaults_and_round_trip() {
        let text = r#"{"objective":"mhe","kernel":{"family":"riesz","s":2.0,"metric":"chordal"},
            "augment":true,"inner":{"steps":1,"lr":0.01,"restarts":8},"gamma":5.0,
            "epsilon":1.0,"jitter":1e-10}"#;
        let spec: ObjectiveSpec = serde_json::from_str(text).unwrap();
        assert_eq!(spec.kind, ObjectiveKind::Mhe);
        assert_eq!(spec.kernel, KernelSpec::riesz(2.0, Metric::Chordal));
        assert_eq!(spec.inner.restarts, 8);
        assert_eq!(spec.jitter, Some(1e-10));
        let back: ObjectiveSpec =
            serde_json::from_str(&serde_json::to_string(&spec).unwrap()).unwrap();
        assert_eq!(back, spec);

        let minimal: ObjectiveSpec = serde_json::from_str(r#"{"objective":"mgd"}"#).unwrap();
        assert_eq!(minimal.epsilon, 1.0);
        assert!(!minimal.augment);
        let mhe: ObjectiveSpec =
            serde_json::from_str(r#"{"objective":"mhe","kernel":{"metric":"geodesic"}}"#).unwrap();
        assert!(mhe.augment);
        assert_eq!(mhe.kernel, KernelSpec::riesz(2.0, Metric::Geodesic));
    }

    #[test]
    fn json_requires_metric_for_distance_objectives() {
        let err = serde_json::from_str::<ObjectiveSpec>(r#"{"objective":"mhs"}"#).unwrap_err();
        assert!(err.to_string().contains("metric"));
        assert!(serde_json::from_str::<ObjectiveSpec>(r#"{"objective":"rmhp"}"#).is_ok());
    }
}
