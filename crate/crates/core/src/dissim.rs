//! Dense dissimilarity matrices: duality, pointwise merging, symmetrization,
//! triangle-inequality checks and shortest-path completion.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::OnceLock;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::mscheme::MScheme;
use crate::shortest_path::Adjacency;
use crate::value::ExtendedValue;

/// A square array of extended values with a zero diagonal.
///
/// Neither symmetry nor the triangle inequality is required; both are
/// computed on demand and cached.
#[derive(Debug)]
pub struct DissimilarityMatrix {
    n: usize,
    entries: Vec<ExtendedValue>,
    symmetric: OnceLock<bool>,
    uber: OnceLock<bool>,
}

impl Clone for DissimilarityMatrix {
    fn clone(&self) -> Self {
        Self {
            n: self.n,
            entries: self.entries.clone(),
            symmetric: self.symmetric.clone(),
            uber: self.uber.clone(),
        }
    }
}

impl PartialEq for DissimilarityMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.entries == other.entries
    }
}

/// One triple with `d(i, k) > d(i, j) + d(j, k)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TriangleViolation {
    pub i: usize,
    pub j: usize,
    pub k: usize,
    /// `d(i, k)`
    pub lhs: ExtendedValue,
    /// `d(i, j) + d(j, k)`
    pub rhs: ExtendedValue,
}

#[derive(Clone, Copy, Debug)]
pub struct ValidateOptions {
    /// Stop collecting after this many violations.
    pub max_violations: usize,
    /// A triple counts only when `lhs > rhs * (1 + rel_tol)`.
    pub rel_tol: f64,
}

impl Default for ValidateOptions {
    fn default() -> Self {
        Self {
            max_violations: 100,
            rel_tol: 1e-12,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ValidationReport {
    pub symmetric: bool,
    pub asymmetric_pairs: usize,
    pub violations: Vec<TriangleViolation>,
    /// Set when the violation list hit `max_violations`.
    pub truncated: bool,
}

impl ValidationReport {
    pub fn is_uber_metric(&self) -> bool {
        self.symmetric && self.violations.is_empty()
    }
}

impl DissimilarityMatrix {
    /// Row-major entries; the diagonal must be zero.
    pub fn new(n: usize, entries: Vec<ExtendedValue>) -> Result<Self> {
        if entries.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                actual: entries.len(),
            });
        }
        if let Some(i) = (0..n).find(|&i| entries[i * n + i] != ExtendedValue::ZERO) {
            return Err(Error::InvalidValue(format!("diagonal entry ({i}, {i}) is not zero")));
        }
        Ok(Self::from_parts(n, entries))
    }

    fn from_parts(n: usize, entries: Vec<ExtendedValue>) -> Self {
        Self {
            n,
            entries,
            symmetric: OnceLock::new(),
            uber: OnceLock::new(),
        }
    }

    /// Builds from `f(i, j)` for `i != j`.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> ExtendedValue) -> Self {
        let mut entries = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                entries.push(if i == j { ExtendedValue::ZERO } else { f(i, j) });
            }
        }
        Self::from_parts(n, entries)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut entries = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    actual: row.len(),
                });
            }
            for &v in row {
                entries.push(ExtendedValue::new(v)?);
            }
        }
        Self::new(n, entries)
    }

    /// All off-diagonal entries `+inf`.
    pub fn unconnected(n: usize) -> Self {
        Self::from_fn(n, |_, _| ExtendedValue::INFINITY)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> ExtendedValue {
        self.entries[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[ExtendedValue] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    pub fn entries(&self) -> &[ExtendedValue] {
        &self.entries
    }

    pub fn is_symmetric(&self) -> bool {
        *self.symmetric.get_or_init(|| self.asymmetric_pairs() == 0)
    }

    /// Symmetric and free of triangle violations (default tolerance).
    pub fn is_uber_metric(&self) -> bool {
        *self.uber.get_or_init(|| {
            self.is_symmetric()
                && self
                    .validate_with(ValidateOptions {
                        max_violations: 1,
                        ..Default::default()
                    })
                    .violations
                    .is_empty()
        })
    }

    fn asymmetric_pairs(&self) -> usize {
        let n = self.n;
        (0..n)
            .map(|i| ((i + 1)..n).filter(|&j| self.get(i, j) != self.get(j, i)).count())
            .sum()
    }

    pub fn is_finite(&self) -> bool {
        self.entries.iter().all(|v| v.is_finite())
    }

    /// The transpose, `d*(x, y) = d(y, x)`.
    pub fn dual(&self) -> Self {
        Self::from_fn(self.n, |i, j| self.get(j, i))
    }

    /// Entrywise `M(d1(x, y), d2(x, y))`.
    pub fn merge_pointwise(&self, other: &Self, scheme: &MScheme) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                actual: other.n,
            });
        }
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(&a, &b)| scheme.apply(a, b))
            .collect();
        Ok(Self::from_parts(self.n, entries))
    }

    /// `M(d, d*)`; always symmetric.
    pub fn symmetrize(&self, scheme: &MScheme) -> Self {
        self.merge_pointwise(&self.dual(), scheme)
            .expect("dual has the same size")
    }

    /// The largest entry.
    pub fn diameter(&self) -> ExtendedValue {
        self.entries
            .iter()
            .copied()
            .max()
            .unwrap_or(ExtendedValue::ZERO)
    }

    /// Replaces each entry by the infimum, over all chains, of the summed
    /// entries along the chain. Pairs with no finite chain stay `+inf`.
    pub fn metric_completion(&self) -> Result<Self> {
        if let Some((i, j)) = self.first_asymmetric_pair() {
            return Err(Error::Asymmetric(i, j));
        }
        let n = self.n;
        let edges: Vec<_> = (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .map(|(i, j)| (i, j, self.get(i, j)))
            .filter(|e| e.2.is_finite())
            .collect();
        let adj = Adjacency::from_undirected(n, edges.iter().copied());
        let mut out = Self::from_parts(n, adj.all_pairs());
        out.symmetric = OnceLock::from(true);
        Ok(out)
    }

    fn first_asymmetric_pair(&self) -> Option<(usize, usize)> {
        let n = self.n;
        (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .find(|&(i, j)| self.get(i, j) != self.get(j, i))
    }

    pub fn validate(&self) -> ValidationReport {
        self.validate_with(ValidateOptions::default())
    }

    /// Scans all triples for triangle violations, in row order of `i`.
    pub fn validate_with(&self, opts: ValidateOptions) -> ValidationReport {
        let n = self.n;
        let cap = opts.max_violations;
        let per_row: Vec<Vec<TriangleViolation>> = (0..n)
            .into_par_iter()
            .map(|i| {
                let mut found = Vec::new();
                'outer: for j in 0..n {
                    if j == i {
                        continue;
                    }
                    let dij = self.get(i, j);
                    if dij.is_infinite() {
                        continue;
                    }
                    for k in 0..n {
                        if k == i || k == j {
                            continue;
                        }
                        let lhs = self.get(i, k);
                        let rhs = dij + self.get(j, k);
                        if lhs > rhs && lhs.get() > rhs.get() * (1.0 + opts.rel_tol) {
                            found.push(TriangleViolation { i, j, k, lhs, rhs });
                            if found.len() >= cap {
                                break 'outer;
                            }
                        }
                    }
                }
                found
            })
            .collect();
        let mut violations: Vec<_> = per_row.into_iter().flatten().collect();
        let truncated = violations.len() >= cap && cap > 0;
        violations.truncate(cap);
        let asymmetric_pairs = self.asymmetric_pairs();
        ValidationReport {
            symmetric: asymmetric_pairs == 0,
            asymmetric_pairs,
            violations,
            truncated,
        }
    }

    /// Reference all-pairs completion by Floyd-Warshall, `O(n^3)`.
    pub fn floyd_warshall(&self) -> Result<Self> {
        if let Some((i, j)) = self.first_asymmetric_pair() {
            return Err(Error::Asymmetric(i, j));
        }
        let n = self.n;
        let mut d = self.entries.clone();
        for k in 0..n {
            for i in 0..n {
                let dik = d[i * n + k];
                if dik.is_infinite() {
                    continue;
                }
                for j in 0..n {
                    let cand = dik + d[k * n + j];
                    if cand < d[i * n + j] {
                        d[i * n + j] = cand;
                    }
                }
            }
        }
        Ok(Self::from_parts(n, d))
    }

    /// `n` lines of `n` comma-separated values; `inf` for `+inf`.
    pub fn to_csv_string(&self) -> String {
        let mut s = String::new();
        for i in 0..self.n {
            for (j, v) in self.row(i).iter().enumerate() {
                if j > 0 {
                    s.push(',');
                }
                write!(s, "{v}").unwrap();
            }
            s.push('\n');
        }
        s
    }

    pub fn from_csv_str(text: &str) -> Result<Self> {
        let rows: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).collect();
        let n = rows.len();
        let mut entries = Vec::with_capacity(n * n);
        for (r, line) in rows.iter().enumerate() {
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != n {
                return Err(Error::Parse(format!(
                    "row {}: expected {n} fields, found {}",
                    r + 1,
                    fields.len()
                )));
            }
            for f in fields {
                entries.push(
                    f.parse::<ExtendedValue>()
                        .map_err(|e| Error::Parse(format!("row {}: {e}", r + 1)))?,
                );
            }
        }
        Self::new(n, entries)
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_csv_string())?;
        Ok(())
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        Self::from_csv_str(&text).map_err(|e| Error::Csv {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const INF: f64 = f64::INFINITY;

    fn m(rows: &[&[f64]]) -> DissimilarityMatrix {
        DissimilarityMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn ev(x: f64) -> ExtendedValue {
        ExtendedValue::new(x).unwrap()
    }

    /// x = 0, y = 1, z = 2.
    fn counterexample_inputs() -> (DissimilarityMatrix, DissimilarityMatrix) {
        let d1 = m(&[&[0.0, 1.0, 3.0], &[1.0, 0.0, 3.0], &[3.0, 3.0, 0.0]]);
        let d2 = m(&[&[0.0, 3.0, 1.0], &[3.0, 0.0, 3.0], &[1.0, 3.0, 0.0]]);
        (d1, d2)
    }

    #[test]
    fn construction_checks() {
        assert!(DissimilarityMatrix::from_rows(&[vec![1.0]]).is_err());
        assert!(DissimilarityMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0]]).is_err());
        assert!(DissimilarityMatrix::from_rows(&[vec![0.0, -1.0], vec![1.0, 0.0]]).is_err());
        assert!(DissimilarityMatrix::new(2, vec![ExtendedValue::ZERO; 3]).is_err());
    }

    #[test]
    fn dual_examples() {
        let s = m(&[&[0.0, 2.0], &[2.0, 0.0]]);
        assert_eq!(s.dual(), s);
        let a = m(&[&[0.0, 1.0], &[3.0, 0.0]]);
        let d = a.dual();
        assert_eq!(d.get(0, 1), ev(3.0));
        assert_eq!(d.get(1, 0), ev(1.0));
        assert!(!a.is_symmetric());
    }

    #[test]
    fn merge_counterexample_violates_then_completes() {
        let (d1, d2) = counterexample_inputs();
        assert!(d1.is_uber_metric() && d2.is_uber_metric());
        let merged = d1.merge_pointwise(&d2, &MScheme::Min).unwrap();
        assert_eq!(merged.get(0, 1), ev(1.0));
        assert_eq!(merged.get(0, 2), ev(1.0));
        assert_eq!(merged.get(1, 2), ev(3.0));
        assert_eq!(merged.diameter(), ev(3.0));

        let report = merged.validate();
        assert!(report.symmetric);
        let triples: Vec<_> = report.violations.iter().map(|v| (v.i, v.j, v.k)).collect();
        assert_eq!(triples, vec![(1, 0, 2), (2, 0, 1)]);
        assert!(!merged.is_uber_metric());

        let done = merged.metric_completion().unwrap();
        assert_eq!(done.get(1, 2), ev(2.0));
        assert_eq!(done.get(2, 1), ev(2.0));
        assert!(done.validate().violations.is_empty());
        assert!(done.is_uber_metric());
    }

    #[test]
    fn merge_identities() {
        let (d1, _) = counterexample_inputs();
        let blank = DissimilarityMatrix::unconnected(3);
        for s in [MScheme::Min, MScheme::Hyperbolic, MScheme::wiener_shannon(1.0).unwrap()] {
            assert_eq!(d1.merge_pointwise(&blank, &s).unwrap(), d1);
        }
        assert_eq!(d1.merge_pointwise(&d1, &MScheme::Min).unwrap(), d1);
        assert!(d1.merge_pointwise(&DissimilarityMatrix::unconnected(2), &MScheme::Min).is_err());
    }

    #[test]
    fn symmetrize_examples() {
        let a = m(&[&[0.0, 1.0], &[3.0, 0.0]]);
        let s = a.symmetrize(&MScheme::Min);
        assert_eq!((s.get(0, 1), s.get(1, 0)), (ev(1.0), ev(1.0)));
        let (d1, _) = counterexample_inputs();
        assert_eq!(d1.symmetrize(&MScheme::Min), d1);
        let b = m(&[&[0.0, 2.0], &[INF, 0.0]]);
        for scheme in [MScheme::Min, MScheme::Ext, MScheme::Hyperbolic, MScheme::product_law(2.0).unwrap()] {
            let s = b.symmetrize(&scheme);
            assert_eq!((s.get(0, 1), s.get(1, 0)), (ev(2.0), ev(2.0)));
        }
    }

    #[test]
    fn completion_rejects_asymmetric() {
        let a = m(&[&[0.0, 1.0], &[3.0, 0.0]]);
        assert!(matches!(a.metric_completion(), Err(Error::Asymmetric(0, 1))));
    }

    #[test]
    fn infinite_lhs_is_a_violation() {
        let a = m(&[&[0.0, 1.0, INF], &[1.0, 0.0, 1.0], &[INF, 1.0, 0.0]]);
        let r = a.validate();
        assert_eq!(r.violations.len(), 2);
        assert!(r.violations[0].lhs.is_infinite());
        let done = a.metric_completion().unwrap();
        assert_eq!(done.get(0, 2), ev(2.0));
    }

    #[test]
    fn disconnected_stays_infinite() {
        let a = m(&[&[0.0, 1.0, INF], &[1.0, 0.0, INF], &[INF, INF, 0.0]]);
        let done = a.metric_completion().unwrap();
        assert_eq!(done, a);
        assert!(a.validate().violations.is_empty());
    }

    #[test]
    fn diameter_examples() {
        assert_eq!(DissimilarityMatrix::from_fn(4, |_, _| ExtendedValue::ZERO).diameter(), ev(0.0));
        assert_eq!(DissimilarityMatrix::unconnected(3).diameter(), ExtendedValue::INFINITY);
    }

    #[test]
    fn validate_cap() {
        let n = 30;
        // a star around 0 with every other pair absent
        let d = DissimilarityMatrix::from_fn(n, |i, j| if i == 0 || j == 0 { ev(1.0) } else { ExtendedValue::INFINITY });
        let r = d.validate_with(ValidateOptions {
            max_violations: 7,
            rel_tol: 0.0,
        });
        assert_eq!(r.violations.len(), 7);
        assert!(r.truncated);
    }

    #[test]
    fn csv_round_trip() {
        let a = m(&[&[0.0, 0.1, INF], &[1.0 / 3.0, 0.0, 2.5e-17], &[7.0, 1e300, 0.0]]);
        let text = a.to_csv_string();
        assert!(text.contains("inf"));
        let b = DissimilarityMatrix::from_csv_str(&text).unwrap();
        for (x, y) in a.entries().iter().zip(b.entries()) {
            assert_eq!(x.get().to_bits(), y.get().to_bits());
        }
        assert!(DissimilarityMatrix::from_csv_str("0,1\n1\n").is_err());
        assert!(DissimilarityMatrix::from_csv_str("0,x\n1,0\n").is_err());
    }

    fn random_symmetric(n: usize, seed: &[u32]) -> DissimilarityMatrix {
        let mut k = 0;
        let mut upper = vec![vec![ExtendedValue::INFINITY; n]; n];
        for (i, row) in upper.iter_mut().enumerate() {
            for cell in row.iter_mut().skip(i + 1) {
                let s = seed[k % seed.len()].wrapping_add((k as u32).wrapping_mul(2654435761));
                k += 1;
                *cell = if s.is_multiple_of(5) {
                    ExtendedValue::INFINITY
                } else {
                    ev((s % 1000) as f64 / 8.0)
                };
            }
        }
        DissimilarityMatrix::from_fn(n, |i, j| if i < j { upper[i][j] } else { upper[j][i] })
    }

    proptest! {
        #[test]
        fn dual_is_an_involution(n in 1usize..8, vals in proptest::collection::vec(0.0f64..10.0, 64)) {
            let d = DissimilarityMatrix::from_fn(n, |i, j| ev(vals[i * 8 + j]));
            prop_assert_eq!(d.dual().dual(), d);
        }

        #[test]
        fn completion_properties(n in 2usize..20, seed in proptest::collection::vec(any::<u32>(), 1..50)) {
            let d = random_symmetric(n, &seed);
            let c = d.metric_completion().unwrap();
            prop_assert_eq!(&c, &d.floyd_warshall().unwrap());
            prop_assert_eq!(&c.metric_completion().unwrap(), &c);
            prop_assert!(c.entries().iter().zip(d.entries()).all(|(a, b)| a <= b));
            prop_assert!(c.validate().is_uber_metric());
            let clean = d.validate().violations.is_empty();
            prop_assert_eq!(clean, c == d);
        }

        #[test]
        fn merging_preserves_symmetry_and_diagonal(
            n in 2usize..10,
            a in proptest::collection::vec(any::<u32>(), 1..20),
            b in proptest::collection::vec(any::<u32>(), 1..20),
            pick in 0usize..5,
        ) {
            let schemes = [MScheme::Min, MScheme::Ext, MScheme::Hyperbolic,
                MScheme::wiener_shannon(1.0).unwrap(), MScheme::truncated(2.0).unwrap()];
            let merged = random_symmetric(n, &a).merge_pointwise(&random_symmetric(n, &b), &schemes[pick]).unwrap();
            prop_assert!(merged.is_symmetric());
            prop_assert!((0..n).all(|i| merged.get(i, i) == ExtendedValue::ZERO));
        }
    }
}
