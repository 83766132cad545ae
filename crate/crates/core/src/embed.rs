//! Planar embedding of a finite metric: classical MDS for the starting
//! configuration, then SMACOF stress majorization.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dissim::DissimilarityMatrix;
use crate::error::{Error, Result};

pub type Point2 = [f64; 2];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MdsConfig {
    pub max_iterations: usize,
    /// SMACOF stops once `(s_prev - s) / s_prev` falls below this.
    pub relative_stress_tolerance: f64,
    pub eigen_tolerance: f64,
    pub eigen_max_iterations: usize,
    pub seed: u64,
}

impl Default for MdsConfig {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            relative_stress_tolerance: 1e-6,
            eigen_tolerance: 1e-10,
            eigen_max_iterations: 1000,
            seed: 0,
        }
    }
}

impl MdsConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("relative_stress_tolerance", self.relative_stress_tolerance),
            ("eigen_tolerance", self.eigen_tolerance),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!("{name} = {v} must be positive")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Embedding {
    pub coords: Vec<Point2>,
    pub stress: f64,
    pub iterations_used: usize,
    /// Stress of the starting configuration followed by one entry per
    /// accepted iteration; never increases.
    pub stress_history: Vec<f64>,
}

impl Embedding {
    /// `index,x,y` with a header line.
    pub fn to_csv_string(&self) -> String {
        coords_to_csv(&self.coords, None)
    }
}

/// `index,x,y` rows; `index` is taken from `labels` when given.
pub fn coords_to_csv(coords: &[Point2], labels: Option<&[usize]>) -> String {
    use std::fmt::Write as _;
    let mut s = String::from("index,x,y\n");
    for (row, p) in coords.iter().enumerate() {
        let idx = labels.map_or(row, |l| l[row]);
        writeln!(s, "{idx},{},{}", p[0], p[1]).unwrap();
    }
    s
}

fn check_input(d: &DissimilarityMatrix) -> Result<()> {
    if !d.is_finite() {
        return Err(Error::NonFinite("dissimilarity matrix has infinite entries".into()));
    }
    if !d.is_symmetric() {
        let n = d.n();
        let (i, j) = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .find(|&(i, j)| d.get(i, j) != d.get(j, i))
            .unwrap_or((0, 0));
        return Err(Error::Asymmetric(i, j));
    }
    Ok(())
}

/// Dense symmetric matrix-vector product, one row per task.
fn symmetric_matvec(b: &[f64], n: usize, v: &[f64], out: &mut [f64]) {
    out.par_iter_mut().enumerate().for_each(|(i, o)| {
        *o = b[i * n..(i + 1) * n].iter().zip(v).map(|(x, y)| x * y).sum();
    });
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(v: &mut [f64]) -> f64 {
    let norm = dot(v, v).sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    norm
}

fn orthogonalize(v: &mut [f64], basis: &[Vec<f64>]) {
    for u in basis {
        let p = dot(u, v);
        v.iter_mut().zip(u).for_each(|(x, y)| *x -= p * y);
    }
}

/// Power iteration for the algebraically largest eigenpair of `b + shift I`
/// restricted to the orthogonal complement of `basis`. Stops once the
/// residual `|B v - lambda v|` drops below `eigen_tolerance * scale`.
fn power_iteration(
    b: &[f64],
    n: usize,
    basis: &[Vec<f64>],
    shift: f64,
    scale: f64,
    cfg: &MdsConfig,
    rng: &mut ChaCha8Rng,
) -> (f64, Vec<f64>) {
    let mut v: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
    orthogonalize(&mut v, basis);
    if normalize(&mut v) == 0.0 {
        return (0.0, v);
    }
    let mut w = vec![0.0; n];
    let mut lambda = 0.0;
    for _ in 0..cfg.eigen_max_iterations.max(1) {
        symmetric_matvec(b, n, &v, &mut w);
        w.iter_mut().zip(&v).for_each(|(x, y)| *x += shift * y);
        orthogonalize(&mut w, basis);
        lambda = dot(&v, &w);
        let residual = w
            .iter()
            .zip(&v)
            .map(|(x, y)| (x - lambda * y).powi(2))
            .sum::<f64>()
            .sqrt();
        if normalize(&mut w) <= f64::EPSILON * (scale + shift.abs()) {
            // `v` lies in the null space of the shifted matrix; what is left
            // of `w` is rounding noise
            return (0.0 - shift, v);
        }
        // a second pass keeps rounding noise from re-growing components
        // along the deflated vectors
        orthogonalize(&mut w, basis);
        normalize(&mut w);
        std::mem::swap(&mut v, &mut w);
        if residual <= cfg.eigen_tolerance * scale {
            break;
        }
    }
    (lambda - shift, v)
}

/// The `count` algebraically largest eigenpairs of a symmetric matrix, by
/// deflated power iteration. Returned in descending order of eigenvalue.
pub fn top_eigenpairs(b: &[f64], n: usize, count: usize, cfg: &MdsConfig) -> Vec<(f64, Vec<f64>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(count);
    let mut out = Vec::with_capacity(count);
    let scale = b.iter().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
    for _ in 0..count.min(n) {
        let (mut lambda, mut v) = power_iteration(b, n, &basis, 0.0, scale, cfg, &mut rng);
        if lambda < 0.0 {
            // dominant in magnitude is negative: shift so the top of the
            // spectrum dominates
            let (l, w) = power_iteration(b, n, &basis, -lambda, scale, cfg, &mut rng);
            lambda = l;
            v = w;
        }
        basis.push(v.clone());
        out.push((lambda, v));
    }
    rayleigh_ritz(b, n, &mut out);
    out.sort_by(|a, b| b.0.total_cmp(&a.0));
    out
}

/// Replaces orthonormal vectors by the eigenvectors of `B` restricted to
/// their span. When two leading eigenvalues nearly coincide, power iteration
/// only finds their common span; this step recovers the eigenvectors within
/// it.
fn rayleigh_ritz(b: &[f64], n: usize, pairs: &mut [(f64, Vec<f64>)]) {
    let p = pairs.len();
    if p < 2 {
        return;
    }
    let bv: Vec<Vec<f64>> = pairs
        .iter()
        .map(|(_, v)| {
            let mut w = vec![0.0; n];
            symmetric_matvec(b, n, v, &mut w);
            w
        })
        .collect();
    let mut h = vec![0.0; p * p];
    for i in 0..p {
        for j in 0..p {
            h[i * p + j] = 0.5 * (dot(&pairs[i].1, &bv[j]) + dot(&pairs[j].1, &bv[i]));
        }
    }
    let (values, rot) = jacobi_eigen(&mut h, p);
    let rotated: Vec<Vec<f64>> = (0..p)
        .map(|k| {
            let mut v = vec![0.0; n];
            for (i, (_, u)) in pairs.iter().enumerate() {
                let c = rot[i * p + k];
                v.iter_mut().zip(u).for_each(|(x, y)| *x += c * y);
            }
            normalize(&mut v);
            v
        })
        .collect();
    for (k, v) in rotated.into_iter().enumerate() {
        pairs[k] = (values[k], v);
    }
}

/// Cyclic Jacobi for a small dense symmetric matrix; returns eigenvalues and
/// the eigenvectors as the columns of a row-major `p x p` matrix.
fn jacobi_eigen(a: &mut [f64], p: usize) -> (Vec<f64>, Vec<f64>) {
    let mut v = vec![0.0; p * p];
    for i in 0..p {
        v[i * p + i] = 1.0;
    }
    for _ in 0..100 {
        let off: f64 = (0..p)
            .flat_map(|i| (0..p).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * p + j].powi(2))
            .sum();
        let diag: f64 = (0..p).map(|i| a[i * p + i].powi(2)).sum();
        if off <= f64::EPSILON.powi(2) * diag || off == 0.0 {
            break;
        }
        for q in 1..p {
            for r in 0..q {
                let apq = a[r * p + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q * p + q] - a[r * p + r]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..p {
                    let (akr, akq) = (a[k * p + r], a[k * p + q]);
                    a[k * p + r] = c * akr - s * akq;
                    a[k * p + q] = s * akr + c * akq;
                }
                for k in 0..p {
                    let (ark, aqk) = (a[r * p + k], a[q * p + k]);
                    a[r * p + k] = c * ark - s * aqk;
                    a[q * p + k] = s * ark + c * aqk;
                }
                for k in 0..p {
                    let (vkr, vkq) = (v[k * p + r], v[k * p + q]);
                    v[k * p + r] = c * vkr - s * vkq;
                    v[k * p + q] = s * vkr + c * vkq;
                }
            }
        }
    }
    ((0..p).map(|i| a[i * p + i]).collect(), v)
}

/// `-1/2 J (D o D) J` with `J` the centering projector.
pub fn double_center(d: &DissimilarityMatrix) -> Vec<f64> {
    let n = d.n();
    let mut b: Vec<f64> = d.entries().iter().map(|v| v.get() * v.get()).collect();
    let row_means: Vec<f64> = (0..n)
        .map(|i| b[i * n..(i + 1) * n].iter().sum::<f64>() / n as f64)
        .collect();
    let grand = row_means.iter().sum::<f64>() / n as f64;
    for i in 0..n {
        for j in 0..n {
            // D o D is symmetric, so column means equal row means
            b[i * n + j] = -0.5 * (b[i * n + j] - row_means[i] - row_means[j] + grand);
        }
    }
    b
}

/// Classical (Torgerson) MDS into the plane. Negative eigenvalues are
/// clipped to zero; the first axis carries the largest eigenvalue.
pub fn classical_mds(d: &DissimilarityMatrix, cfg: &MdsConfig) -> Result<Vec<Point2>> {
    check_input(d)?;
    cfg.validate()?;
    let n = d.n();
    let b = double_center(d);
    let pairs = top_eigenpairs(&b, n, 2, cfg);
    let mut coords = vec![[0.0; 2]; n];
    for (axis, (lambda, v)) in pairs.iter().enumerate() {
        let scale = lambda.max(0.0).sqrt();
        for (c, x) in coords.iter_mut().zip(v) {
            c[axis] = scale * x;
        }
    }
    center(&mut coords);
    Ok(coords)
}

fn center(coords: &mut [Point2]) {
    if coords.is_empty() {
        return;
    }
    let n = coords.len() as f64;
    let mx = coords.iter().map(|p| p[0]).sum::<f64>() / n;
    let my = coords.iter().map(|p| p[1]).sum::<f64>() / n;
    for p in coords.iter_mut() {
        p[0] -= mx;
        p[1] -= my;
    }
}

#[inline]
fn dist2(a: &Point2, b: &Point2) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

fn raw_stress(d: &DissimilarityMatrix, coords: &[Point2]) -> f64 {
    let n = d.n();
    let rows: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            ((i + 1)..n)
                .map(|j| (dist2(&coords[i], &coords[j]) - d.get(i, j).get()).powi(2))
                .sum::<f64>()
        })
        .collect();
    // fixed summation order regardless of thread count
    rows.iter().sum()
}

/// `sum_{i<j} (|y_i - y_j| - D_ij)^2`.
pub fn stress(d: &DissimilarityMatrix, coords: &[Point2]) -> Result<f64> {
    if coords.len() != d.n() {
        return Err(Error::DimensionMismatch {
            expected: d.n(),
            actual: coords.len(),
        });
    }
    if !d.is_finite() {
        return Err(Error::NonFinite("dissimilarity matrix has infinite entries".into()));
    }
    Ok(raw_stress(d, coords))
}

/// One Guttman transform with unit weights; `0/0` terms count as 0.
fn guttman(d: &DissimilarityMatrix, x: &[Point2]) -> Vec<Point2> {
    let n = x.len();
    let inv_n = 1.0 / n as f64;
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut acc = [0.0; 2];
            for j in 0..n {
                if j == i {
                    continue;
                }
                let dij = dist2(&x[i], &x[j]);
                if dij > 0.0 {
                    let r = d.get(i, j).get() / dij;
                    acc[0] += r * (x[i][0] - x[j][0]);
                    acc[1] += r * (x[i][1] - x[j][1]);
                }
            }
            [acc[0] * inv_n, acc[1] * inv_n]
        })
        .collect()
}

/// Metric MDS by stress majorization from `init`.
pub fn smacof(d: &DissimilarityMatrix, init: &[Point2], cfg: &MdsConfig) -> Result<Embedding> {
    check_input(d)?;
    cfg.validate()?;
    if init.len() != d.n() {
        return Err(Error::DimensionMismatch {
            expected: d.n(),
            actual: init.len(),
        });
    }
    if init.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("initial configuration".into()));
    }
    let mut x = init.to_vec();
    center(&mut x);
    let mut current = raw_stress(d, &x);
    let mut history = vec![current];
    let mut iterations = 0;
    while iterations < cfg.max_iterations {
        let mut next = guttman(d, &x);
        center(&mut next);
        let s = raw_stress(d, &next);
        if s > current {
            // only possible through rounding once converged
            break;
        }
        let decrease = current - s;
        x = next;
        history.push(s);
        iterations += 1;
        let prev = current;
        current = s;
        if prev == 0.0 || decrease / prev < cfg.relative_stress_tolerance {
            break;
        }
    }
    Ok(Embedding {
        coords: x,
        stress: current,
        iterations_used: iterations,
        stress_history: history,
    })
}

/// Uniform random configuration in `[-1, 1]^2`.
pub fn random_init(n: usize, seed: u64) -> Vec<Point2> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)])
        .collect()
}

/// Classical MDS followed by SMACOF.
pub fn embed(d: &DissimilarityMatrix, cfg: &MdsConfig) -> Result<Embedding> {
    let init = classical_mds(d, cfg)?;
    smacof(d, &init, cfg)
}
