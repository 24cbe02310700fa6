//! Geometry of the unit hypersphere S^(d-1) embedded in R^d.
//!
//! A [`Configuration`] is an `n x d` array whose rows are unit vectors. All
//! constructors normalize or validate, so every public value of the type
//! satisfies the unit-norm invariant to within [`UNIT_NORM_TOL`].

use std::f64::consts::PI;
use std::io::{Read, Write};
use std::path::Path;

use ndarray::{Array2, ArrayView2};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::stream_rng;

/// Maximum deviation of a row norm from 1 that public operations tolerate.
pub const UNIT_NORM_TOL: f64 = 1e-12;

const ZERO_NORM: f64 = 1e-300;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    /// Euclidean distance `|u - v|`, range [0, 2].
    Chordal,
    /// Angular distance `arccos(u . v)`, range [0, pi].
    Geodesic,
}

/// `n >= 1` unit vectors in R^d, `d >= 2`, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Configuration {
    points: Array2<f64>,
}

impl Configuration {
    /// Validates that rows are already unit length (within 1e-6). Rows off
    /// by more than [`UNIT_NORM_TOL`] are renormalized; the rest are kept
    /// bit for bit.
    pub fn from_unit_rows(points: Array2<f64>) -> Result<Self> {
        check_shape(points.nrows(), points.ncols())?;
        for (i, row) in points.outer_iter().enumerate() {
            let norm = row.dot(&row).sqrt();
            if (norm - 1.0).abs() > 1e-6 {
                return Err(Error::InvalidConfig(format!(
                    "row {i} has norm {norm}, expected a unit vector"
                )));
            }
        }
        Self::from_rows_preserving(points)
    }

    fn from_rows_preserving(mut points: Array2<f64>) -> Result<Self> {
        check_shape(points.nrows(), points.ncols())?;
        if !points.is_standard_layout() {
            points = points.as_standard_layout().into_owned();
        }
        for (i, mut row) in points.outer_iter_mut().enumerate() {
            let norm = row.dot(&row).sqrt();
            if !(norm >= ZERO_NORM) || !norm.is_finite() {
                return Err(Error::ZeroNormRow(i));
            }
            if (norm - 1.0).abs() > UNIT_NORM_TOL {
                row.mapv_inplace(|x| x / norm);
            }
        }
        Ok(Configuration { points })
    }

    pub fn n(&self) -> usize {
        self.points.nrows()
    }

    pub fn d(&self) -> usize {
        self.points.ncols()
    }

    pub fn points(&self) -> ArrayView2<'_, f64> {
        self.points.view()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let d = self.d();
        &self.as_slice()[i * d..(i + 1) * d]
    }

    /// Row-major flat view of the points.
    pub fn as_slice(&self) -> &[f64] {
        self.points
            .as_slice()
            .expect("configuration storage is standard layout")
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.points
    }

    /// Sum of the rows (the unnormalized mass center).
    pub fn vector_sum(&self) -> Vec<f64> {
        let d = self.d();
        let mut sum = vec![0.0; d];
        for row in self.as_slice().chunks_exact(d) {
            for (s, x) in sum.iter_mut().zip(row) {
                *s += x;
            }
        }
        sum
    }

    /// Applies `q` (a `d x d` matrix) to every row: `w -> q w`.
    pub fn rotated(&self, q: ArrayView2<'_, f64>) -> Result<Self> {
        if q.nrows() != self.d() || q.ncols() != self.d() {
            return Err(Error::Dimension(format!(
                "rotation is {}x{}, configuration has d = {}",
                q.nrows(),
                q.ncols(),
                self.d()
            )));
        }
        normalize(self.points.dot(&q.t()).view())
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        out.write_record((0..self.d()).map(|k| format!("x{k}")))?;
        for row in self.as_slice().chunks_exact(self.d()) {
            out.write_record(row.iter().map(|x| format!("{x:.16e}")))?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut input = csv::Reader::from_reader(reader);
        let d = input.headers()?.len();
        let mut flat = Vec::new();
        for (i, record) in input.records().enumerate() {
            let record = record?;
            if record.len() != d {
                return Err(Error::InvalidConfig(format!(
                    "csv row {i} has {} columns, header has {d}",
                    record.len()
                )));
            }
            for field in record.iter() {
                let value: f64 = field.trim().parse().map_err(|_| {
                    Error::InvalidConfig(format!("csv row {i}: cannot parse {field:?}"))
                })?;
                flat.push(value);
            }
        }
        let n = if d == 0 { 0 } else { flat.len() / d };
        check_shape(n, d)?;
        let points = Array2::from_shape_vec((n, d), flat)
            .map_err(|e| Error::InvalidConfig(e.to_string()))?;
        Self::from_rows_preserving(points)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(ConfigurationFile::from(self)).expect("plain numeric data")
    }

    pub fn write_json<W: Write>(&self, writer: W) -> Result<()> {
        serde_json::to_writer_pretty(writer, &ConfigurationFile::from(self))?;
        Ok(())
    }

    pub fn read_json<R: Read>(reader: R) -> Result<Self> {
        let file: ConfigurationFile = serde_json::from_reader(reader)?;
        file.try_into()
    }

    /// Reads a `.csv` or `.json` configuration file, chosen by extension.
    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        match extension(path).as_deref() {
            Some("json") => Self::read_json(std::io::BufReader::new(file)),
            Some("csv") => Self::read_csv(file),
            other => Err(Error::InvalidConfig(format!(
                "unsupported configuration file extension {other:?}"
            ))),
        }
    }

    /// Serializes to `.csv` or `.json` bytes, chosen by the extension of `path`.
    pub fn to_bytes_for(&self, path: &Path) -> Result<Vec<u8>> {
        let mut buf = Vec::new();
        match extension(path).as_deref() {
            Some("json") => self.write_json(&mut buf)?,
            Some("csv") => self.write_csv(&mut buf)?,
            other => {
                return Err(Error::InvalidConfig(format!(
                    "unsupported configuration file extension {other:?}"
                )))
            }
        }
        Ok(buf)
    }
}

fn extension(path: &Path) -> Option<String> {
    path.extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
}

/// On-disk JSON form: `{"n": .., "d": .., "points": [[..], ..]}`.
#[derive(Serialize, Deserialize)]
struct ConfigurationFile {
    n: usize,
    d: usize,
    points: Vec<Vec<f64>>,
}

impl From<&Configuration> for ConfigurationFile {
    fn from(config: &Configuration) -> Self {
        ConfigurationFile {
            n: config.n(),
            d: config.d(),
            points: config
                .as_slice()
                .chunks_exact(config.d())
                .map(<[f64]>::to_vec)
                .collect(),
        }
    }
}

impl TryFrom<ConfigurationFile> for Configuration {
    type Error = Error;

    fn try_from(file: ConfigurationFile) -> Result<Self> {
        if file.points.len() != file.n {
            return Err(Error::InvalidConfig(format!(
                "\"n\" is {} but {} points are listed",
                file.n,
                file.points.len()
            )));
        }
        check_shape(file.n, file.d)?;
        let mut flat = Vec::with_capacity(file.n * file.d);
        for (i, row) in file.points.iter().enumerate() {
            if row.len() != file.d {
                return Err(Error::InvalidConfig(format!(
                    "point {i} has {} coordinates, expected {}",
                    row.len(),
                    file.d
                )));
            }
            flat.extend_from_slice(row);
        }
        let points = Array2::from_shape_vec((file.n, file.d), flat)
            .map_err(|e| Error::InvalidConfig(e.to_string()))?;
        Configuration::from_rows_preserving(points)
    }
}

fn check_shape(n: usize, d: usize) -> Result<()> {
    if n < 1 {
        return Err(Error::InvalidConfig("a configuration needs n >= 1 points".into()));
    }
    if d < 2 {
        return Err(Error::Dimension(format!("ambient dimension must be >= 2, got {d}")));
    }
    Ok(())
}

/// Projects every row of `raw` onto the unit sphere.
pub fn normalize(raw: ArrayView2<'_, f64>) -> Result<Configuration> {
    check_shape(raw.nrows(), raw.ncols())?;
    let mut points = raw.as_standard_layout().into_owned();
    for (i, mut row) in points.outer_iter_mut().enumerate() {
        let norm = row.dot(&row).sqrt();
        if !(norm >= ZERO_NORM) || !norm.is_finite() {
            return Err(Error::ZeroNormRow(i));
        }
        row.mapv_inplace(|x| x / norm);
    }
    Ok(Configuration { points })
}

pub(crate) fn dot(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

pub(crate) fn norm(u: &[f64]) -> f64 {
    dot(u, u).sqrt()
}

pub(crate) fn normalize_in_place(u: &mut [f64]) {
    let n = norm(u);
    if n >= ZERO_NORM {
        u.iter_mut().for_each(|x| *x /= n);
    }
}

/// Distance between two unit vectors.
pub fn distance(u: &[f64], v: &[f64], metric: Metric) -> f64 {
    match metric {
        Metric::Chordal => u
            .iter()
            .zip(v)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt(),
        Metric::Geodesic => dot(u, v).clamp(-1.0, 1.0).acos(),
    }
}

/// Symmetric `n x n` matrix of distances with zero diagonal.
pub fn pairwise_distances(config: &Configuration, metric: Metric) -> Array2<f64> {
    let n = config.n();
    let mut out = Array2::zeros((n, n));
    for i in 0..n {
        for j in i + 1..n {
            let r = distance(config.row(i), config.row(j), metric);
            out[[i, j]] = r;
            out[[j, i]] = r;
        }
    }
    out
}

/// Removes the radial component of `grad` at `point`.
pub fn tangent_project(point: &[f64], grad: &[f64]) -> Vec<f64> {
    let radial = dot(grad, point);
    grad.iter().zip(point).map(|(g, p)| g - radial * p).collect()
}

pub(crate) fn tangent_project_in_place(point: &[f64], grad: &mut [f64]) {
    let radial = dot(grad, point);
    for (g, p) in grad.iter_mut().zip(point) {
        *g -= radial * p;
    }
}

/// Draws a unit vector from the uniform distribution on S^(d-1).
pub(crate) fn uniform_point<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Vec<f64> {
    loop {
        let mut v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let n = norm(&v);
        if n >= ZERO_NORM {
            v.iter_mut().for_each(|x| *x /= n);
            return v;
        }
    }
}

/// Standard-normal `n x d` draws.
pub(crate) fn gaussian_rows<R: Rng + ?Sized>(rng: &mut R, n: usize, d: usize) -> Array2<f64> {
    Array2::from_shape_simple_fn((n, d), || rng.sample(StandardNormal))
}

/// `n` independent uniform points on S^(d-1): normalized standard Gaussians
/// drawn from stream 0 of `seed`.
pub fn sample_uniform(n: usize, d: usize, seed: u64) -> Result<Configuration> {
    check_shape(n, d)?;
    let mut rng = stream_rng(seed, 0);
    let mut flat = Vec::with_capacity(n * d);
    for _ in 0..n {
        flat.extend(uniform_point(&mut rng, d));
    }
    let points = Array2::from_shape_vec((n, d), flat).expect("shape matches");
    Ok(Configuration { points })
}

/// Normalized surface measure of the cap `{x : x . c >= cos(angle)}` on S^(d-1).
///
/// Integrates `sin^(d-2)(t)` over `[0, angle]` with adaptive Simpson
/// quadrature and divides by the integral over `[0, pi]`. Caps wider than a
/// hemisphere are computed as the complement of the opposite cap.
pub fn cap_measure(angle: f64, d: usize) -> Result<f64> {
    if !(0.0..=PI).contains(&angle) {
        return Err(Error::Domain(format!("cap angle {angle} outside [0, pi]")));
    }
    if d < 2 {
        return Err(Error::Dimension(format!("ambient dimension must be >= 2, got {d}")));
    }
    if angle > PI / 2.0 {
        return Ok(1.0 - cap_measure(PI - angle, d)?);
    }
    let power = (d - 2) as i32;
    let density = |t: f64| t.sin().powi(power);
    let half = adaptive_simpson(&density, 0.0, PI / 2.0, 1e-15);
    if angle == PI / 2.0 {
        return Ok(0.5);
    }
    let part = adaptive_simpson(&density, 0.0, angle, 1e-15);
    Ok(part / (2.0 * half))
}

fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, 50)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    // Always split a few times so narrow peaks (large d) are not missed.
    if depth <= 44 && delta.abs() <= 15.0 * tol || depth == 0 {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    fn e(d: usize, k: usize) -> Vec<f64> {
        let mut v = vec![0.0; d];
        v[k] = 1.0;
        v
    }

    #[test]
    fn normalize_scales_rows() {
        let c = normalize(array![[3.0, 4.0]].view()).unwrap();
        assert_abs_diff_eq!(c.row(0)[0], 0.6, epsilon = 1e-15);
        assert_abs_diff_eq!(c.row(0)[1], 0.8, epsilon = 1e-15);

        let c = normalize(array![[1.0, 0.0, 0.0], [0.0, 2.0, 0.0]].view()).unwrap();
        assert_eq!(c.row(1), &[0.0, 1.0, 0.0]);
    }

    #[test]
    fn normalize_rejects_zero_rows() {
        let err = normalize(array![[0.0, 0.0]].view()).unwrap_err();
        assert!(matches!(err, Error::ZeroNormRow(0)));
        let err = normalize(array![[1.0, 0.0], [0.0, 0.0]].view()).unwrap_err();
        assert!(matches!(err, Error::ZeroNormRow(1)));
    }

    #[test]
    fn normalize_rejects_bad_shapes() {
        assert!(matches!(
            normalize(Array2::<f64>::zeros((3, 1)).view()),
            Err(Error::Dimension(_))
        ));
        assert!(matches!(
            normalize(Array2::<f64>::zeros((0, 3)).view()),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn distance_examples() {
        let (e1, e2) = (e(3, 0), e(3, 1));
        let m1: Vec<f64> = e1.iter().map(|x| -x).collect();
        assert_abs_diff_eq!(distance(&e1, &m1, Metric::Geodesic), PI);
        assert_abs_diff_eq!(distance(&e1, &e2, Metric::Chordal), 2f64.sqrt());
        assert_abs_diff_eq!(distance(&e1, &e2, Metric::Geodesic), PI / 2.0);
    }

    #[test]
    fn geodesic_clamps_round_off() {
        let u = [1.0 + 1e-16, 0.0];
        assert_eq!(distance(&u, &u, Metric::Geodesic), 0.0);
    }

    #[test]
    fn pairwise_cross_polytope_and_tetrahedron() {
        let cross = normalize(
            array![
                [1.0, 0.0, 0.0],
                [-1.0, 0.0, 0.0],
                [0.0, 1.0, 0.0],
                [0.0, -1.0, 0.0],
                [0.0, 0.0, 1.0],
                [0.0, 0.0, -1.0]
            ]
            .view(),
        )
        .unwrap();
        let dists = pairwise_distances(&cross, Metric::Chordal);
        let mut twos = 0;
        let mut roots = 0;
        for i in 0..6 {
            assert_eq!(dists[[i, i]], 0.0);
            for j in 0..6 {
                assert_eq!(dists[[i, j]], dists[[j, i]]);
                if i != j {
                    if (dists[[i, j]] - 2.0).abs() < 1e-12 {
                        twos += 1;
                    } else if (dists[[i, j]] - 2f64.sqrt()).abs() < 1e-12 {
                        roots += 1;
                    }
                }
            }
        }
        assert_eq!((twos, roots), (6, 24));

        let single = normalize(array![[0.0, 1.0]].view()).unwrap();
        assert_eq!(pairwise_distances(&single, Metric::Geodesic), array![[0.0]]);

        let tet = normalize(
            array![
                [1.0, 1.0, 1.0],
                [1.0, -1.0, -1.0],
                [-1.0, 1.0, -1.0],
                [-1.0, -1.0, 1.0]
            ]
            .view(),
        )
        .unwrap();
        let dists = pairwise_distances(&tet, Metric::Chordal);
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    assert_abs_diff_eq!(dists[[i, j]], (8.0f64 / 3.0).sqrt(), epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn tangent_projection_examples() {
        let e1 = e(3, 0);
        assert_eq!(tangent_project(&e1, &e1), vec![0.0; 3]);
        assert_eq!(tangent_project(&e1, &e(3, 1)), e(3, 1));
        assert_eq!(tangent_project(&e1, &[1.0, 1.0, 0.0]), vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn sample_uniform_is_deterministic_and_unit() {
        let a = sample_uniform(50, 4, 11).unwrap();
        let b = sample_uniform(50, 4, 11).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, sample_uniform(50, 4, 12).unwrap());
        for i in 0..a.n() {
            assert!((norm(a.row(i)) - 1.0).abs() < UNIT_NORM_TOL);
        }
    }

    #[test]
    fn sample_mean_is_small() {
        let c = sample_uniform(100_000, 4, 3).unwrap();
        let mean: Vec<f64> = c.vector_sum().iter().map(|s| s / c.n() as f64).collect();
        assert!(norm(&mean) < 0.02, "mean norm {}", norm(&mean));
    }

    #[test]
    fn cap_measure_examples() {
        for d in [2, 3, 4, 7, 50, 256] {
            assert_abs_diff_eq!(cap_measure(PI / 2.0, d).unwrap(), 0.5, epsilon = 1e-12);
            assert_abs_diff_eq!(cap_measure(PI, d).unwrap(), 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(cap_measure(0.0, d).unwrap(), 0.0, epsilon = 1e-15);
        }
        assert_abs_diff_eq!(cap_measure(PI / 3.0, 3).unwrap(), 0.25, epsilon = 1e-10);
        assert!(matches!(cap_measure(-0.1, 3), Err(Error::Domain(_))));
        assert!(matches!(cap_measure(4.0, 3), Err(Error::Domain(_))));
    }

    #[test]
    fn cap_measure_matches_closed_forms() {
        // S^1: arc fraction theta / pi. S^2: (1 - cos theta) / 2.
        // S^3: (theta - sin theta cos theta) / pi.
        for k in 0..=40 {
            let t = PI * k as f64 / 40.0;
            assert_abs_diff_eq!(cap_measure(t, 2).unwrap(), t / PI, epsilon = 1e-10);
            assert_abs_diff_eq!(cap_measure(t, 3).unwrap(), (1.0 - t.cos()) / 2.0, epsilon = 1e-10);
            assert_abs_diff_eq!(
                cap_measure(t, 4).unwrap(),
                (t - t.sin() * t.cos()) / PI,
                epsilon = 1e-10
            );
        }
    }

    #[test]
    fn csv_and_json_round_trip() {
        let c = sample_uniform(7, 3, 5).unwrap();
        let mut buf = Vec::new();
        c.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("x0,x1,x2\n"));
        assert_eq!(Configuration::read_csv(buf.as_slice()).unwrap(), c);

        let mut buf = Vec::new();
        c.write_json(&mut buf).unwrap();
        let value: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        assert_eq!(value["n"], 7);
        assert_eq!(value["d"], 3);
        assert_eq!(Configuration::read_json(buf.as_slice()).unwrap(), c);
    }

    #[test]
    fn json_rejects_mismatched_counts() {
        let text = r#"{"n": 2, "d": 2, "points": [[1, 0]]}"#;
        assert!(Configuration::read_json(text.as_bytes()).is_err());
    }
}
