//! Gluing star graphs into one weighted graph on the sample and computing
//! geodesic distances on it.
//!
//! Only edges are carried through the merge. Higher simplices (triangles
//! with finite haziness) never change pairwise geodesics, so they are not
//! tracked.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::dissim::DissimilarityMatrix;
use crate::error::{Error, Result};
use crate::local::StarGraph;
use crate::mscheme::MScheme;
use crate::shortest_path::Adjacency;
use crate::value::ExtendedValue;

/// Every contribution to every vertex pair, keyed by `(min, max)`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MultiGraph {
    pub n: usize,
    pub edges: BTreeMap<(usize, usize), Vec<ExtendedValue>>,
}

impl MultiGraph {
    pub fn pair_count(&self) -> usize {
        self.edges.len()
    }

    pub fn contribution_count(&self) -> usize {
        self.edges.values().map(Vec::len).sum()
    }
}

#[inline]
fn key(u: usize, v: usize) -> (usize, usize) {
    if u < v {
        (u, v)
    } else {
        (v, u)
    }
}

/// Collects the spokes and outer edges of all stars. Contributions are
/// appended in order of star centre, then in each star's own edge order.
pub fn assemble(stars: &[StarGraph], n: usize) -> Result<MultiGraph> {
    let mut order: Vec<&StarGraph> = stars.iter().collect();
    order.sort_by_key(|s| s.center);
    let mut edges: BTreeMap<(usize, usize), Vec<ExtendedValue>> = BTreeMap::new();
    for star in order {
        for (u, v, w) in star.edges() {
            if let Some(&bad) = [u, v].iter().find(|&&i| i >= n) {
                return Err(Error::IndexOutOfRange { index: bad, n });
            }
            if u == v {
                return Err(Error::InvalidParameter(format!("self-loop at {u} in star {}", star.center)));
            }
            edges.entry(key(u, v)).or_default().push(w);
        }
    }
    Ok(MultiGraph { n, edges })
}

/// A simple weighted graph; absent pairs have weight `+inf`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct HazyGraph {
    pub n: usize,
    pub edges: BTreeMap<(usize, usize), ExtendedValue>,
}

/// Folds each pair's contributions with `scheme`.
pub fn aggregate(mg: &MultiGraph, scheme: &MScheme) -> HazyGraph {
    let mut scratch = Vec::new();
    let edges = mg
        .edges
        .iter()
        .filter_map(|(&k, ws)| {
            scratch.clear();
            scratch.extend(ws.iter().copied().filter(|w| w.is_finite()));
            let w = scheme.fold_finite(&mut scratch);
            w.is_finite().then_some((k, w))
        })
        .collect();
    HazyGraph { n: mg.n, edges }
}

impl HazyGraph {
    /// From raw `(i, j, weight)` triples; a repeated pair keeps the last weight.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut map = BTreeMap::new();
        for (i, j, w) in edges {
            if let Some(&bad) = [i, j].iter().find(|&&x| x >= n) {
                return Err(Error::IndexOutOfRange { index: bad, n });
            }
            if w.is_nan() || w < 0.0 {
                return Err(Error::NegativeWeight { i, j, weight: w });
            }
            if i == j {
                return Err(Error::InvalidParameter(format!("self-loop at {i}")));
            }
            if w.is_finite() {
                map.insert(key(i, j), ExtendedValue::new_unchecked(w));
            }
        }
        Ok(Self { n, edges: map })
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn weight(&self, i: usize, j: usize) -> ExtendedValue {
        if i == j {
            return ExtendedValue::ZERO;
        }
        self.edges.get(&key(i, j)).copied().unwrap_or(ExtendedValue::INFINITY)
    }

    /// Dense form with `+inf` for absent pairs.
    pub fn to_matrix(&self) -> DissimilarityMatrix {
        DissimilarityMatrix::from_fn(self.n, |i, j| self.weight(i, j))
    }

    fn adjacency(&self) -> Adjacency {
        Adjacency::from_undirected(self.n, self.edges.iter().map(|(&(i, j), &w)| (i, j, w)))
    }

    /// Sizes of the connected components, largest first.
    pub fn component_sizes(&self) -> Vec<usize> {
        let labels = self.adjacency().components();
        let mut sizes = component_sizes(&labels);
        sizes.sort_unstable_by(|a, b| b.cmp(a));
        sizes
    }

    /// Counts two-edge paths `i - j - k` with `w(i, k) > w(i, j) + w(j, k)`.
    /// `absent` counts those where `(i, k)` is not an edge at all.
    pub fn triangle_violations(&self) -> TriangleCensus {
        let mut nbrs: Vec<Vec<(usize, ExtendedValue)>> = vec![Vec::new(); self.n];
        for (&(i, j), &w) in &self.edges {
            nbrs[i].push((j, w));
            nbrs[j].push((i, w));
        }
        let lookup: HashMap<(usize, usize), ExtendedValue> =
            self.edges.iter().map(|(&k, &w)| (k, w)).collect();
        let mut census = TriangleCensus::default();
        for list in &nbrs {
            for (a, &(i, wij)) in list.iter().enumerate() {
                for &(k, wjk) in &list[a + 1..] {
                    let rhs = wij + wjk;
                    match lookup.get(&key(i, k)) {
                        None => census.absent += 1,
                        Some(&lhs) => {
                            if lhs > rhs && lhs.get() > rhs.get() * (1.0 + 1e-12) {
                                census.finite += 1;
                            }
                        }
                    }
                }
            }
        }
        census
    }

    /// `i,j,weight` lines with `i < j`, sorted, after a header line.
    pub fn to_csv_string(&self) -> String {
        let mut s = String::from("i,j,weight\n");
        for (&(i, j), w) in &self.edges {
            writeln!(s, "{i},{j},{w}").unwrap();
        }
        s
    }

    /// Reads the edge-list format; the header line is optional. `n` is one
    /// more than the largest index unless given.
    pub fn from_csv_str(text: &str, n: Option<usize>) -> Result<Self> {
        let mut triples = Vec::new();
        for (r, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || (r == 0 && line.starts_with('i')) {
                continue;
            }
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            if f.len() != 3 {
                return Err(Error::Parse(format!("line {}: expected i,j,weight", r + 1)));
            }
            let idx = |s: &str| {
                s.parse::<usize>()
                    .map_err(|_| Error::Parse(format!("line {}: bad index {s:?}", r + 1)))
            };
            let w: ExtendedValue = f[2]
                .parse()
                .map_err(|e| Error::Parse(format!("line {}: {e}", r + 1)))?;
            triples.push((idx(f[0])?, idx(f[1])?, w.get()));
        }
        let n = n.unwrap_or_else(|| triples.iter().map(|t| t.0.max(t.1) + 1).max().unwrap_or(0));
        Self::from_edges(n, triples)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TriangleCensus {
    /// All three edges present and the long side exceeds the two short ones.
    pub finite: usize,
    /// The closing edge is missing (`+inf`).
    pub absent: usize,
}

fn component_sizes(labels: &[usize]) -> Vec<usize> {
    let count = labels.iter().copied().max().map_or(0, |m| m + 1);
    let mut sizes = vec![0; count];
    for &l in labels {
        sizes[l] += 1;
    }
    sizes
}

/// What to do when the graph has more than one connected component.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub enum DisconnectPolicy {
    #[default]
    Error,
    /// Keep only the largest component (ties: the one with the smallest vertex).
    LargestComponent,
    /// Replace `+inf` by `factor` times the largest finite distance.
    Cap { factor: f64 },
}

impl fmt::Display for DisconnectPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DisconnectPolicy::Error => f.write_str("error"),
            DisconnectPolicy::LargestComponent => f.write_str("largest"),
            DisconnectPolicy::Cap { factor } => write!(f, "cap:{factor}"),
        }
    }
}

impl FromStr for DisconnectPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        match s.split_once(':') {
            None if s == "error" => Ok(DisconnectPolicy::Error),
            None if s == "largest" => Ok(DisconnectPolicy::LargestComponent),
            None if s == "cap" => Ok(DisconnectPolicy::Cap { factor: 3.0 }),
            Some(("cap", f)) => {
                let factor: f64 = f
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad cap factor {f:?}")))?;
                if !(factor.is_finite() && factor > 0.0) {
                    return Err(Error::InvalidParameter(format!("cap factor {factor} must be positive")));
                }
                Ok(DisconnectPolicy::Cap { factor })
            }
            _ => Err(Error::Parse(format!("unknown disconnect policy {s:?} (error | largest | cap[:factor])"))),
        }
    }
}

impl Serialize for DisconnectPolicy {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for DisconnectPolicy {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(deserializer)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug)]
pub struct Geodesics {
    pub distances: DissimilarityMatrix,
    /// Input vertex for each output row; the identity unless a component
    /// was dropped.
    pub vertices: Vec<usize>,
    /// Component sizes of the input graph, largest first.
    pub component_sizes: Vec<usize>,
}

/// All-pairs shortest paths by per-source Dijkstra.
pub fn geodesics(g: &HazyGraph, on_disconnect: DisconnectPolicy) -> Result<Geodesics> {
    let adj = g.adjacency();
    let labels = adj.components();
    let sizes = component_sizes(&labels);
    let mut sorted_sizes = sizes.clone();
    sorted_sizes.sort_unstable_by(|a, b| b.cmp(a));

    if sizes.len() <= 1 {
        return Ok(Geodesics {
            distances: DissimilarityMatrix::new(g.n, adj.all_pairs())?,
            vertices: (0..g.n).collect(),
            component_sizes: sorted_sizes,
        });
    }
    match on_disconnect {
        DisconnectPolicy::Error => Err(Error::Disconnected { sizes: sorted_sizes }),
        DisconnectPolicy::LargestComponent => {
            let biggest = sizes
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
                .map(|(l, _)| l)
                .unwrap_or(0);
            let vertices: Vec<usize> = (0..g.n).filter(|&v| labels[v] == biggest).collect();
            let mut remap = vec![usize::MAX; g.n];
            for (new, &old) in vertices.iter().enumerate() {
                remap[old] = new;
            }
            let sub = Adjacency::from_undirected(
                vertices.len(),
                g.edges
                    .iter()
                    .filter(|(&(i, _), _)| labels[i] == biggest)
                    .map(|(&(i, j), &w)| (remap[i], remap[j], w))
                    .collect::<Vec<_>>(),
            );
            Ok(Geodesics {
                distances: DissimilarityMatrix::new(vertices.len(), sub.all_pairs())?,
                vertices,
                component_sizes: sorted_sizes,
            })
        }
        DisconnectPolicy::Cap { factor } => {
            let mut d = adj.all_pairs();
            let max_finite = d
                .iter()
                .filter(|v| v.is_finite())
                .copied()
                .max()
                .unwrap_or(ExtendedValue::ZERO);
            let cap = max_finite * factor;
            for v in d.iter_mut().filter(|v| v.is_infinite()) {
                *v = cap;
            }
            Ok(Geodesics {
                distances: DissimilarityMatrix::new(g.n, d)?,
                vertices: (0..g.n).collect(),
                component_sizes: sorted_sizes,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ev(x: f64) -> ExtendedValue {
        ExtendedValue::new(x).unwrap()
    }

    fn star(center: usize, spokes: &[(usize, f64)]) -> StarGraph {
        StarGraph {
            center,
            spokes: spokes.iter().map(|&(j, w)| (j, ev(w))).collect(),
            rho: 0.0,
            sigma: 1.0,
            outer_edges: Vec::new(),
            degenerate: false,
        }
    }

    #[test]
    fn assemble_examples() {
        let a = StarGraph {
            outer_edges: vec![((1, 2), ev(0.3))],
            ..star(0, &[(1, 0.1), (2, 0.2)])
        };
        let b = star(1, &[(2, 0.5)]);
        let mg = assemble(&[b.clone(), a.clone()], 3).unwrap();
        assert_eq!(mg.edges[&(1, 2)], vec![ev(0.3), ev(0.5)]);
        assert_eq!(mg.edges[&(0, 1)], vec![ev(0.1)]);
        assert_eq!(mg.contribution_count(), a.edge_count() + b.edge_count());

        let disjoint = [star(0, &[(1, 1.0)]), star(2, &[(3, 1.0)]), star(4, &[(5, 1.0)])];
        assert_eq!(assemble(&disjoint, 6).unwrap().pair_count(), 3);
        assert!(matches!(assemble(&disjoint, 5), Err(Error::IndexOutOfRange { index: 5, .. })));
    }

    #[test]
    fn aggregate_examples() {
        let mg = MultiGraph {
            n: 3,
            edges: BTreeMap::from([((0, 1), vec![ev(0.3), ev(0.5)]), ((1, 2), vec![ev(0.7)])]),
        };
        assert_eq!(aggregate(&mg, &MScheme::Min).weight(0, 1), ev(0.3));
        assert_eq!(aggregate(&mg, &MScheme::truncated(0.25).unwrap()).weight(0, 1), ev(0.25));
        for s in [MScheme::Min, MScheme::Ext, MScheme::Hyperbolic, MScheme::wiener_shannon(1.0).unwrap()] {
            assert_eq!(aggregate(&mg, &s).weight(1, 2), ev(0.7));
            assert_eq!(aggregate(&mg, &s).weight(0, 2), ExtendedValue::INFINITY);
        }
    }

    #[test]
    fn geodesic_examples() {
        let g = HazyGraph::from_edges(3, [(0, 1, 1.0), (1, 2, 1.0)]).unwrap();
        let d = geodesics(&g, DisconnectPolicy::Error).unwrap().distances;
        assert_eq!(d.get(0, 2), ev(2.0));

        // x = 0, y = 1, z = 2
        let g = HazyGraph::from_edges(3, [(0, 1, 1.0), (0, 2, 1.0), (1, 2, 3.0)]).unwrap();
        let d = geodesics(&g, DisconnectPolicy::Error).unwrap().distances;
        assert_eq!(d.get(1, 2), ev(2.0));
        assert!(d.validate().is_uber_metric());
    }

    #[test]
    fn negative_weights_rejected() {
        assert!(matches!(
            HazyGraph::from_edges(2, [(0, 1, -1.0)]),
            Err(Error::NegativeWeight { .. })
        ));
        assert!(HazyGraph::from_edges(2, [(0, 1, f64::NAN)]).is_err());
        assert!(HazyGraph::from_edges(2, [(0, 2, 1.0)]).is_err());
    }

    #[test]
    fn disconnect_policies() {
        let g = HazyGraph::from_edges(5, [(0, 1, 1.0), (2, 3, 2.0), (3, 4, 2.0)]).unwrap();
        match geodesics(&g, DisconnectPolicy::Error) {
            Err(Error::Disconnected { sizes }) => assert_eq!(sizes, vec![3, 2]),
            other => panic!("{other:?}"),
        }
        let big = geodesics(&g, DisconnectPolicy::LargestComponent).unwrap();
        assert_eq!(big.vertices, vec![2, 3, 4]);
        assert_eq!(big.distances.get(0, 2), ev(4.0));
        let cap = geodesics(&g, DisconnectPolicy::Cap { factor: 3.0 }).unwrap();
        assert_eq!(cap.distances.get(0, 4), ev(12.0));
        assert_eq!(cap.distances.get(2, 4), ev(4.0));
        assert_eq!(cap.component_sizes, vec![3, 2]);
    }

    #[test]
    fn policy_codes() {
        for s in ["error", "largest", "cap:3", "cap:1.5"] {
            assert_eq!(s.parse::<DisconnectPolicy>().unwrap().to_string(), s);
        }
        assert_eq!("cap".parse::<DisconnectPolicy>().unwrap(), DisconnectPolicy::Cap { factor: 3.0 });
        assert!("cap:-1".parse::<DisconnectPolicy>().is_err());
        assert!("drop".parse::<DisconnectPolicy>().is_err());
    }

    #[test]
    fn edge_list_csv() {
        let g = HazyGraph::from_edges(4, [(2, 1, 0.5), (0, 3, 1.0 / 3.0)]).unwrap();
        let text = g.to_csv_string();
        assert!(text.starts_with("i,j,weight\n0,3,"));
        assert_eq!(HazyGraph::from_csv_str(&text, Some(4)).unwrap(), g);
        assert!(HazyGraph::from_csv_str("0,1\n", None).is_err());
    }

    #[test]
    fn census_counts() {
        let g = HazyGraph::from_edges(4, [(0, 1, 1.0), (0, 2, 1.0), (1, 2, 3.0), (2, 3, 1.0)]).unwrap();
        let c = g.triangle_violations();
        assert_eq!(c.finite, 1);
        assert_eq!(c.absent, 2);
    }

    fn random_stars(n: usize, seed: &[u32]) -> Vec<StarGraph> {
        let mut k = 0usize;
        let mut next = || {
            let s = seed[k % seed.len()].wrapping_mul(2654435761).wrapping_add((k as u32).wrapping_mul(40503));
            k += 1;
            s
        };
        (0..n)
            .map(|c| {
                let mut spokes: Vec<(usize, f64)> = Vec::new();
                for _ in 0..3 {
                    let j = next() as usize % n;
                    let w = (next() % 64) as f64 / 16.0;
                    if j != c && spokes.iter().all(|&(s, _)| s != j) {
                        spokes.push((j, w));
                    }
                }
                star(c, &spokes)
            })
            .collect()
    }

    proptest! {
        #[test]
        fn min_aggregation_is_a_lower_bound(n in 3usize..30, seed in proptest::collection::vec(any::<u32>(), 1..20)) {
            let stars = random_stars(n, &seed);
            let mg = assemble(&stars, n).unwrap();
            let min = aggregate(&mg, &MScheme::Min);
            let trunc = aggregate(&mg, &MScheme::truncated(0.5).unwrap());
            for (k, ws) in &mg.edges {
                prop_assert!(ws.iter().all(|&w| min.edges[k] <= w));
                if ws.len() > 1 {
                    prop_assert!(trunc.edges[k] <= ev(0.5));
                }
            }
            let mut rev = stars.clone();
            rev.reverse();
            let hyp = MScheme::Hyperbolic;
            prop_assert_eq!(aggregate(&assemble(&rev, n).unwrap(), &hyp), aggregate(&mg, &hyp));
        }

        #[test]
        fn geodesics_are_uber_metrics(n in 3usize..30, seed in proptest::collection::vec(any::<u32>(), 1..20)) {
            let g = aggregate(&assemble(&random_stars(n, &seed), n).unwrap(), &MScheme::Min);
            let geo = geodesics(&g, DisconnectPolicy::LargestComponent).unwrap();
            prop_assert!(geo.distances.validate().is_uber_metric());
            let full = geodesics(&g, DisconnectPolicy::Cap { factor: 2.0 }).unwrap();
            prop_assert!(full.distances.is_finite());
            // pipeline and completion of the merged matrix agree
            let direct = g.to_matrix().metric_completion().unwrap();
            let sizes = g.component_sizes();
            if sizes.len() == 1 {
                prop_assert_eq!(&geodesics(&g, DisconnectPolicy::Error).unwrap().distances, &direct);
            }
        }
    }
}
