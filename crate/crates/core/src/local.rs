//! Exact k-nearest-neighbour search and per-point star graphs with locally
//! normalized edge weights.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dissim::DissimilarityMatrix;
use crate::error::{Error, Result};
use crate::value::ExtendedValue;

/// `n` points in `dim`-dimensional Euclidean space, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct PointCloud {
    dim: usize,
    coords: Vec<f64>,
    intrinsic_param: Option<Vec<f64>>,
}

impl PointCloud {
    pub fn new(dim: usize, coords: Vec<f64>, intrinsic_param: Option<Vec<f64>>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        if coords.is_empty() || !coords.len().is_multiple_of(dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: coords.len(),
            });
        }
        if let Some(pos) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::NonFinite(format!("coordinate of point {}", pos / dim)));
        }
        let n = coords.len() / dim;
        if let Some(p) = &intrinsic_param {
            if p.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    actual: p.len(),
                });
            }
        }
        Ok(Self {
            dim,
            coords,
            intrinsic_param,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != dim) {
            return Err(Error::Parse(format!("row {} has {} columns, expected {dim}", bad + 1, rows[bad].len())));
        }
        Self::new(dim, rows.concat(), None)
    }

    pub fn n(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn intrinsic_param(&self) -> Option<&[f64]> {
        self.intrinsic_param.as_deref()
    }

    #[inline]
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        squared_distance(self.point(i), self.point(j)).sqrt()
    }

    /// Keeps only the listed points, in the given order.
    pub fn select(&self, indices: &[usize]) -> Self {
        let coords = indices.iter().flat_map(|&i| self.point(i).iter().copied()).collect();
        let intrinsic_param = self
            .intrinsic_param
            .as_ref()
            .map(|p| indices.iter().map(|&i| p[i]).collect());
        Self {
            dim: self.dim,
            coords,
            intrinsic_param,
        }
    }
}

#[inline]
fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// The `k` nearest other points of `center`, closest first.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NeighborList {
    pub center: usize,
    pub neighbors: Vec<usize>,
    pub distances: Vec<f64>,
}

/// Brute-force exact k-NN under Euclidean distance. Ties are broken by
/// ascending point index.
pub fn knn(points: &PointCloud, k: usize) -> Result<Vec<NeighborList>> {
    let n = points.n();
    if k == 0 || k >= n {
        return Err(Error::InvalidK { k, n });
    }
    let by_distance = |a: &(f64, usize), b: &(f64, usize)| {
        a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal).then(a.1.cmp(&b.1))
    };
    Ok((0..n)
        .into_par_iter()
        .map(|i| {
            let xi = points.point(i);
            let mut cand: Vec<(f64, usize)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| (squared_distance(xi, points.point(j)), j))
                .collect();
            if k < cand.len() {
                cand.select_nth_unstable_by(k - 1, by_distance);
                cand.truncate(k);
            }
            cand.sort_unstable_by(by_distance);
            NeighborList {
                center: i,
                neighbors: cand.iter().map(|c| c.1).collect(),
                distances: cand.iter().map(|c| c.0.sqrt()).collect(),
            }
        })
        .collect())
}

/// How edges between two neighbours of the same centre are weighted.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum OuterMode {
    /// No outer edges; they are absent (`+inf`) downstream.
    None,
    /// `a * (w_j + w_l)` for the spoke weights `w_j`, `w_l`.
    Chain { a: f64 },
    /// `|x_j - x_l| / sigma`.
    Ambient,
}

impl Default for OuterMode {
    fn default() -> Self {
        OuterMode::Chain { a: 1.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StarOptions {
    /// Subtract the nearest-neighbour distance `rho` before normalizing.
    pub subtract_rho: bool,
    pub outer: OuterMode,
    /// When every neighbour coincides with the centre (`sigma = 0`), use
    /// `sigma = 1` instead of failing.
    pub duplicate_fallback: bool,
}

impl Default for StarOptions {
    fn default() -> Self {
        Self {
            subtract_rho: false,
            outer: OuterMode::default(),
            duplicate_fallback: true,
        }
    }
}

impl StarOptions {
    pub fn validate(&self) -> Result<()> {
        if let OuterMode::Chain { a } = self.outer {
            if !(a.is_finite() && a >= 0.0) {
                return Err(Error::InvalidParameter(format!("outer factor a = {a} must be finite and >= 0")));
            }
        }
        Ok(())
    }
}

/// One point's neighbourhood with normalized weights.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StarGraph {
    pub center: usize,
    /// `(neighbour, weight)`, nearest first.
    pub spokes: Vec<(usize, ExtendedValue)>,
    pub rho: f64,
    pub sigma: f64,
    /// `((x_j, x_l), weight)` for neighbour pairs in spoke order.
    pub outer_edges: Vec<((usize, usize), ExtendedValue)>,
    /// `sigma` was zero and replaced by 1.
    pub degenerate: bool,
}

impl StarGraph {
    /// Every edge of the star as `(u, v, weight)`: spokes first, then outer
    /// edges.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, ExtendedValue)> + '_ {
        self.spokes
            .iter()
            .map(|&(j, w)| (self.center, j, w))
            .chain(self.outer_edges.iter().map(|&((a, b), w)| (a, b, w)))
    }

    pub fn edge_count(&self) -> usize {
        self.spokes.len() + self.outer_edges.len()
    }

    /// The star's own dissimilarity on `[center, neighbours...]`, with
    /// `+inf` for pairs it does not connect.
    pub fn local_matrix(&self) -> (Vec<usize>, DissimilarityMatrix) {
        let vertices: Vec<usize> = std::iter::once(self.center)
            .chain(self.spokes.iter().map(|s| s.0))
            .collect();
        let m = vertices.len();
        let mut w = vec![ExtendedValue::INFINITY; m * m];
        let pos = |v: usize| vertices.iter().position(|&u| u == v).expect("vertex of star");
        for (a, b, x) in self.edges() {
            let (pa, pb) = (pos(a), pos(b));
            w[pa * m + pb] = w[pa * m + pb].min(x);
            w[pb * m + pa] = w[pb * m + pa].min(x);
        }
        (vertices, DissimilarityMatrix::from_fn(m, |i, j| w[i * m + j]))
    }
}

/// Normalizes one neighbour list into a star graph:
/// spoke `j` gets `(d(x, x_j) - rho) / sigma` with `rho = d(x, x_1)` (or 0)
/// and `sigma = d(x, x_k)`.
pub fn build_star(nl: &NeighborList, opts: &StarOptions, points: &PointCloud) -> Result<StarGraph> {
    opts.validate()?;
    let k = nl.neighbors.len();
    if k == 0 || nl.distances.len() != k {
        return Err(Error::InvalidParameter(format!("neighbour list of point {} is malformed", nl.center)));
    }
    let n = points.n();
    if let Some(&bad) = std::iter::once(&nl.center).chain(&nl.neighbors).find(|&&i| i >= n) {
        return Err(Error::IndexOutOfRange { index: bad, n });
    }
    let rho = if opts.subtract_rho { nl.distances[0] } else { 0.0 };
    let mut sigma = nl.distances[k - 1];
    let mut degenerate = false;
    if sigma <= 0.0 {
        if !opts.duplicate_fallback {
            return Err(Error::DegenerateNeighborhood { center: nl.center, k });
        }
        log::warn!("point {} coincides with all of its {k} nearest neighbours; using sigma = 1", nl.center);
        sigma = 1.0;
        degenerate = true;
    }
    let spokes: Vec<(usize, ExtendedValue)> = nl
        .neighbors
        .iter()
        .zip(&nl.distances)
        .map(|(&j, &d)| (j, ExtendedValue::new_unchecked(((d - rho) / sigma).max(0.0))))
        .collect();

    let mut outer_edges = Vec::new();
    if opts.outer != OuterMode::None {
        outer_edges.reserve(k * (k - 1) / 2);
        for a in 0..k {
            for b in (a + 1)..k {
                let (ja, wa) = spokes[a];
                let (jb, wb) = spokes[b];
                let w = match opts.outer {
                    OuterMode::Chain { a: factor } => (wa + wb) * factor,
                    OuterMode::Ambient => ExtendedValue::new_unchecked(points.distance(ja, jb) / sigma),
                    OuterMode::None => unreachable!(),
                };
                outer_edges.push(((ja, jb), w));
            }
        }
    }
    Ok(StarGraph {
        center: nl.center,
        spokes,
        rho,
        sigma,
        outer_edges,
        degenerate,
    })
}

/// `knn` followed by `build_star` for every point.
pub fn build_stars(points: &PointCloud, k: usize, opts: &StarOptions) -> Result<Vec<StarGraph>> {
    knn(points, k)?
        .par_iter()
        .map(|nl| build_star(nl, opts, points))
        .collect()
}
