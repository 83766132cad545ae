//! Binary-heap Dijkstra over a compressed adjacency list.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rayon::prelude::*;

use crate::value::ExtendedValue;

/// Undirected weighted graph in CSR form. Every edge is stored in both
/// directions.
#[derive(Clone, Debug)]
pub(crate) struct Adjacency {
    offsets: Vec<usize>,
    targets: Vec<usize>,
    weights: Vec<ExtendedValue>,
}

impl Adjacency {
    /// `edges` lists each undirected edge once; infinite weights are dropped.
    pub(crate) fn from_undirected<I>(n: usize, edges: I) -> Self
    where
        I: IntoIterator<Item = (usize, usize, ExtendedValue)>,
        I::IntoIter: Clone,
    {
        let edges = edges.into_iter().filter(|&(i, j, w)| i != j && w.is_finite());
        let mut degree = vec![0usize; n];
        for (i, j, _) in edges.clone() {
            degree[i] += 1;
            degree[j] += 1;
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let total = *offsets.last().unwrap();
        let mut targets = vec![0usize; total];
        let mut weights = vec![ExtendedValue::ZERO; total];
        let mut cursor = offsets[..n].to_vec();
        for (i, j, w) in edges {
            targets[cursor[i]] = j;
            weights[cursor[i]] = w;
            cursor[i] += 1;
            targets[cursor[j]] = i;
            weights[cursor[j]] = w;
            cursor[j] += 1;
        }
        Self {
            offsets,
            targets,
            weights,
        }
    }

    pub(crate) fn n(&self) -> usize {
        self.offsets.len() - 1
    }

    fn neighbors(&self, v: usize) -> impl Iterator<Item = (usize, ExtendedValue)> + '_ {
        let range = self.offsets[v]..self.offsets[v + 1];
        self.targets[range.clone()]
            .iter()
            .copied()
            .zip(self.weights[range].iter().copied())
    }

    /// Single-source distances written into `dist` (length `n`).
    pub(crate) fn dijkstra_into(&self, source: usize, dist: &mut [ExtendedValue]) {
        dist.fill(ExtendedValue::INFINITY);
        dist[source] = ExtendedValue::ZERO;
        let mut heap = BinaryHeap::new();
        heap.push(Reverse((ExtendedValue::ZERO, source)));
        while let Some(Reverse((d, u))) = heap.pop() {
            if d > dist[u] {
                continue;
            }
            for (v, w) in self.neighbors(u) {
                let nd = d + w;
                if nd < dist[v] {
                    dist[v] = nd;
                    heap.push(Reverse((nd, v)));
                }
            }
        }
    }

    /// Dense all-pairs distances, row-major. Rows are computed in parallel;
    /// the pair `(i, j)` and `(j, i)` are then set to the smaller of the two
    /// directional results, which only differ by rounding.
    pub(crate) fn all_pairs(&self) -> Vec<ExtendedValue> {
        let n = self.n();
        let mut out = vec![ExtendedValue::INFINITY; n * n];
        if n == 0 {
            return out;
        }
        out.par_chunks_mut(n)
            .enumerate()
            .for_each(|(s, row)| self.dijkstra_into(s, row));
        for i in 0..n {
            for j in (i + 1)..n {
                let m = out[i * n + j].min(out[j * n + i]);
                out[i * n + j] = m;
                out[j * n + i] = m;
            }
        }
        out
    }

    /// Connected components as a label per vertex, labelled in order of
    /// their smallest vertex.
    pub(crate) fn components(&self) -> Vec<usize> {
        let n = self.n();
        let mut label = vec![usize::MAX; n];
        let mut next = 0;
        let mut stack = Vec::new();
        for start in 0..n {
            if label[start] != usize::MAX {
                continue;
            }
            label[start] = next;
            stack.push(start);
            while let Some(u) = stack.pop() {
                for (v, _) in self.neighbors(u) {
                    if label[v] == usize::MAX {
                        label[v] = next;
                        stack.push(v);
                    }
                }
            }
            next += 1;
        }
        label
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(x: f64) -> ExtendedValue {
        ExtendedValue::new(x).unwrap()
    }

    #[test]
    fn path_graph() {
        let adj = Adjacency::from_undirected(3, vec![(0, 1, ev(1.0)), (1, 2, ev(1.0))]);
        let d = adj.all_pairs();
        assert_eq!(d[2], ev(2.0));
        assert_eq!(d[6], ev(2.0));
        assert_eq!(adj.components(), vec![0, 0, 0]);
    }

    #[test]
    fn disconnected_and_infinite_edges() {
        let adj = Adjacency::from_undirected(
            4,
            vec![(0, 1, ev(1.0)), (2, 3, ExtendedValue::INFINITY), (3, 3, ev(0.0))],
        );
        let d = adj.all_pairs();
        assert_eq!(d[2 * 4 + 3], ExtendedValue::INFINITY);
        assert_eq!(adj.components(), vec![0, 0, 1, 2]);
    }
}
