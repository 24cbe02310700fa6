#![allow(dead_code)]

use hyperspherical::objectives::{
    default_jitter, mgd_logdet_raw, mhe_energy_raw, rmhp_value_raw, KernelSpec, SoftMinDistance,
};
use hyperspherical::sphere::sample_uniform;
use hyperspherical::{Configuration, Metric};
use ndarray::{Array2, ArrayView2};

pub const FD_STEP: f64 = 1e-5;
pub const FD_REL_TOL: f64 = 1e-5;
pub const FD_CONFIGS: u64 = 20;

/// `|analytic - central difference| / |central difference|` over all coordinates.
pub fn fd_rel_error<F>(points: ArrayView2<'_, f64>, analytic: &Array2<f64>, f: F) -> f64
where
    F: Fn(ArrayView2<'_, f64>) -> f64,
{
    let mut x = points.to_owned();
    let mut diff2 = 0.0;
    let mut norm2 = 0.0;
    for idx in ndarray::indices(x.dim()) {
        let orig = x[idx];
        x[idx] = orig + FD_STEP;
        let plus = f(x.view());
        x[idx] = orig - FD_STEP;
        let minus = f(x.view());
        x[idx] = orig;
        let fd = (plus - minus) / (2.0 * FD_STEP);
        diff2 += (analytic[idx] - fd).powi(2);
        norm2 += fd * fd;
    }
    diff2.sqrt() / norm2.sqrt().max(1e-300)
}

pub fn configs(n: usize, d: usize) -> impl Iterator<Item = Configuration> {
    (0..FD_CONFIGS).map(move |seed| sample_uniform(n, d, 1000 + seed).unwrap())
}

/// One labelled gradient case: the worst relative error over its configurations.
pub struct GradientCase {
    pub label: String,
    pub worst: f64,
}

pub fn gradient_suite() -> Vec<GradientCase> {
    let (n, d) = (10, 4);
    let mut cases = Vec::new();
    let mut push = |label: String, eval: &dyn Fn(ArrayView2<'_, f64>) -> (f64, Array2<f64>)| {
        let worst = configs(n, d)
            .map(|c| {
                let (_, g) = eval(c.points());
                fd_rel_error(c.points(), &g, |p| eval(p).0)
            })
            .fold(0.0, f64::max);
        cases.push(GradientCase { label, worst });
    };

    for metric in [Metric::Chordal, Metric::Geodesic] {
        for s in [-1.0, 0.0, 1.0, 2.0] {
            let kernel = KernelSpec::riesz(s, metric);
            push(format!("mhe {metric:?} s={s}"), &|p| {
                let v = mhe_energy_raw(p, &kernel).unwrap();
                (v.value, v.gradient.unwrap())
            });
        }
    }
    push("rmhp".into(), &|p| {
        let v = rmhp_value_raw(p);
        (v.value, v.gradient.unwrap())
    });
    push("mgd eps=1".into(), &|p| {
        let v = mgd_logdet_raw(p, 1.0, default_jitter(n)).unwrap();
        (v.value, v.gradient.unwrap())
    });
    for metric in [Metric::Chordal, Metric::Geodesic] {
        let v = sample_uniform(1, d, 7).unwrap().row(0).to_vec();
        push(format!("mhc_relaxed frozen inner {metric:?}"), &|p| {
            let flat: Vec<f64> = p.iter().copied().collect();
            SoftMinDistance::new(&flat, d, 5.0, metric)
                .unwrap()
                .value_and_points_gradient(&v)
        });
    }
    cases
}
