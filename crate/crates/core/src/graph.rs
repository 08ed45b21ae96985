//! Labeled graphs, their lazy random-walk chains, relabeling, colour
//! refinement and the averaging-label baseline distance.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::chain::{euclidean, LabelMatrix, Lmmc, MarkovKernel, ProbVec};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::ot::ot_value;

/// Simple undirected graph with one label vector per vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledGraph {
    edges: Vec<(usize, usize)>,
    neighbors: Vec<Vec<usize>>,
    labels: LabelMatrix,
}

impl LabeledGraph {
    /// Rejects out-of-range endpoints, self-loops and repeated edges (in either orientation).
    pub fn new(n: usize, edges: &[(usize, usize)], labels: LabelMatrix) -> Result<Self> {
        if labels.n() != n {
            return Err(Error::ShapeMismatch(format!("{} label rows for {n} vertices", labels.n())));
        }
        let mut neighbors = vec![Vec::new(); n];
        let mut normalized = Vec::with_capacity(edges.len());
        for &(u, v) in edges {
            if u >= n || v >= n || u == v || neighbors[u].contains(&v) {
                return Err(Error::InvalidEdge(u, v));
            }
            neighbors[u].push(v);
            neighbors[v].push(u);
            normalized.push((u.min(v), u.max(v)));
        }
        Ok(Self { edges: normalized, neighbors, labels })
    }

    /// Every vertex labeled `1.0`.
    pub fn unlabeled(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        Self::new(n, edges, LabelMatrix::constant(n, 1.0))
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.neighbors.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.neighbors[v]
    }

    #[inline]
    pub fn degree(&self, v: usize) -> usize {
        self.neighbors[v].len()
    }

    pub fn labels(&self) -> &LabelMatrix {
        &self.labels
    }

    pub fn with_labels(&self, labels: LabelMatrix) -> Result<Self> {
        if labels.n() != self.n() {
            return Err(Error::ShapeMismatch(format!("{} label rows for {} vertices", labels.n(), self.n())));
        }
        Ok(Self { edges: self.edges.clone(), neighbors: self.neighbors.clone(), labels })
    }

    /// Same graph labeled by vertex degree.
    pub fn with_degree_labels(&self) -> Self {
        let degrees: Vec<f64> = (0..self.n()).map(|v| self.degree(v) as f64).collect();
        let labels = LabelMatrix::from_column(&degrees).expect("finite degrees");
        Self { edges: self.edges.clone(), neighbors: self.neighbors.clone(), labels }
    }

    /// Isomorphic copy in which new vertex `i` is old vertex `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let n = self.n();
        let mut inverse = vec![usize::MAX; n];
        if perm.len() != n {
            return Err(Error::ShapeMismatch(format!("permutation of length {} for {n} vertices", perm.len())));
        }
        for (new, &old) in perm.iter().enumerate() {
            if old >= n || inverse[old] != usize::MAX {
                return Err(Error::InvalidValue(format!("{perm:?} is not a permutation")));
            }
            inverse[old] = new;
        }
        let edges: Vec<(usize, usize)> = self.edges.iter().map(|&(u, v)| (inverse[u], inverse[v])).collect();
        let dims: Vec<usize> = (0..self.labels.dim()).collect();
        let labels = LabelMatrix::new(self.labels.matrix().select(perm, &dims))?;
        Self::new(n, &edges, labels)
    }
}

/// Lazy random walk on `g`: stay with probability `q`, otherwise move to a
/// uniform neighbour. Isolated vertices keep all their mass. The stationary
/// law is proportional to `max(deg, 1)`.
pub fn graph_to_lmmc(g: &LabeledGraph, q: f64) -> Result<Lmmc> {
    if !(0.0..1.0).contains(&q) {
        return Err(Error::InvalidValue(format!("laziness q = {q} outside [0, 1)")));
    }
    let n = g.n();
    if n == 0 {
        return Err(Error::EmptyDistribution);
    }
    let mut kernel = Matrix::zeros(n, n);
    for v in 0..n {
        let nb = g.neighbors(v);
        if nb.is_empty() {
            kernel[(v, v)] = 1.0;
            continue;
        }
        kernel[(v, v)] = q;
        let share = (1.0 - q) / nb.len() as f64;
        for &u in nb {
            kernel[(v, u)] += share;
        }
    }
    let weights: Vec<f64> = (0..n).map(|v| g.degree(v).max(1) as f64).collect();
    let total: f64 = weights.iter().sum();
    let stationary = ProbVec::new(weights.iter().map(|w| w / total).collect())?;
    Lmmc::new(MarkovKernel::new(kernel)?, stationary, g.labels().clone())
}

/// Injective label augmentations by degree and graph size.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum RelabelScheme {
    /// Scalar label `deg(v) + 1/|V|`; the original labels are dropped.
    ScalarF2,
    /// Label `(ℓ(v), deg(v), 1/|V|)`.
    VectorG,
}

pub fn relabel(g: &LabeledGraph, scheme: RelabelScheme) -> LabeledGraph {
    let n = g.n();
    let inv = 1.0 / n.max(1) as f64;
    let labels = match scheme {
        RelabelScheme::ScalarF2 => {
            let col: Vec<f64> = (0..n).map(|v| g.degree(v) as f64 + inv).collect();
            LabelMatrix::from_column(&col)
        }
        RelabelScheme::VectorG => {
            let d = g.labels().dim();
            let m = Matrix::from_fn(n, d + 2, |v, c| match c {
                c if c < d => g.labels().row(v)[c],
                c if c == d => g.degree(v) as f64,
                _ => inv,
            });
            LabelMatrix::new(m)
        }
    };
    g.with_labels(labels.expect("finite labels")).expect("same vertex count")
}

/// Per-round colour ids of one graph.
///
/// Ids come from an interner shared with the graph it was refined against,
/// so equal ids mean equal refinement histories across both graphs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WlColoring {
    pub rounds: Vec<Vec<usize>>,
}

impl WlColoring {
    /// Sorted colour multiset at `round`.
    pub fn multiset(&self, round: usize) -> Vec<usize> {
        let mut c = self.rounds[round].clone();
        c.sort_unstable();
        c
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum WlOutcome {
    DistinguishedAt(usize),
    Indistinguishable,
}

fn initial_colors(graphs: [&LabeledGraph; 2]) -> [Vec<usize>; 2] {
    let mut ids: BTreeMap<Vec<u64>, usize> = BTreeMap::new();
    graphs.map(|g| {
        (0..g.n())
            .map(|v| {
                let key: Vec<u64> = g.labels().row(v).iter().map(|x| canonical_bits(*x)).collect();
                let next = ids.len();
                *ids.entry(key).or_insert(next)
            })
            .collect()
    })
}

// -0.0 and 0.0 compare equal as labels.
fn canonical_bits(x: f64) -> u64 {
    if x == 0.0 {
        0
    } else {
        x.to_bits()
    }
}

/// One refinement step on both graphs with a fresh shared interner; returns
/// the new colours and the number of distinct colours over both graphs.
fn refine(graphs: [&LabeledGraph; 2], prev: &[Vec<usize>; 2]) -> ([Vec<usize>; 2], usize) {
    let mut ids: BTreeMap<(usize, Vec<usize>), usize> = BTreeMap::new();
    let mut out: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for (s, g) in graphs.iter().enumerate() {
        out[s] = (0..g.n())
            .map(|v| {
                let mut nb: Vec<usize> = g.neighbors(v).iter().map(|&u| prev[s][u]).collect();
                nb.sort_unstable();
                let next = ids.len();
                *ids.entry((prev[s][v], nb)).or_insert(next)
            })
            .collect();
    }
    (out, ids.len())
}

fn distinct(colors: &[Vec<usize>; 2]) -> usize {
    let mut all: Vec<usize> = colors.iter().flatten().copied().collect();
    all.sort_unstable();
    all.dedup();
    all.len()
}

/// Jointly refined colourings of two graphs for rounds `0..=rounds`.
pub fn wl_colorings(g1: &LabeledGraph, g2: &LabeledGraph, rounds: usize) -> (WlColoring, WlColoring) {
    let graphs = [g1, g2];
    let mut cur = initial_colors(graphs);
    let mut a = vec![cur[0].clone()];
    let mut b = vec![cur[1].clone()];
    for _ in 0..rounds {
        cur = refine(graphs, &cur).0;
        a.push(cur[0].clone());
        b.push(cur[1].clone());
    }
    (WlColoring { rounds: a }, WlColoring { rounds: b })
}

/// Colour refinement test. Round 0 compares the initial label multisets
/// (so graphs of different sizes are told apart immediately). Stops early
/// once the joint partition is stable. `max_rounds` defaults to `|V1| + |V2|`.
pub fn wl_test(g1: &LabeledGraph, g2: &LabeledGraph, max_rounds: Option<usize>) -> WlOutcome {
    let graphs = [g1, g2];
    let max_rounds = max_rounds.unwrap_or(g1.n() + g2.n());
    let same = |c: &[Vec<usize>; 2]| {
        let (mut a, mut b) = (c[0].clone(), c[1].clone());
        a.sort_unstable();
        b.sort_unstable();
        a == b
    };
    let mut cur = initial_colors(graphs);
    if !same(&cur) {
        return WlOutcome::DistinguishedAt(0);
    }
    let mut classes = distinct(&cur);
    for round in 1..=max_rounds {
        let (next, count) = refine(graphs, &cur);
        if !same(&next) {
            return WlOutcome::DistinguishedAt(round);
        }
        if count == classes {
            break;
        }
        classes = count;
        cur = next;
    }
    WlOutcome::Indistinguishable
}

fn require_no_isolated(g: &LabeledGraph) -> Result<()> {
    match (0..g.n()).find(|&v| g.degree(v) == 0) {
        Some(v) => Err(Error::IsolatedVertex(v)),
        None => Ok(()),
    }
}

/// Averaging labels `ℓ^{i+1}(v) = ½(ℓ^i(v) + mean of ℓ^i over neighbours)`,
/// stages `0..=k` stacked side by side.
pub fn wwl_labels(g: &LabeledGraph, k: usize) -> Result<LabelMatrix> {
    require_no_isolated(g)?;
    let (n, d) = (g.n(), g.labels().dim());
    let mut stage = g.labels().matrix().clone();
    let mut stacked = Matrix::zeros(n, d * (k + 1));
    for s in 0..=k {
        for v in 0..n {
            stacked.row_mut(v)[s * d..(s + 1) * d].copy_from_slice(stage.row(v));
        }
        if s == k {
            break;
        }
        let next = Matrix::from_fn(n, d, |v, c| {
            let nb = g.neighbors(v);
            let mean = nb.iter().map(|&u| stage[(u, c)]).sum::<f64>() / nb.len() as f64;
            0.5 * (stage[(v, c)] + mean)
        });
        stage = next;
    }
    LabelMatrix::new(stacked)
}

/// Wasserstein distance between stacked averaging labels, weighted by the
/// degree-proportional stationary laws.
pub fn wwl_hat_distance(g1: &LabeledGraph, g2: &LabeledGraph, k: usize) -> Result<f64> {
    let (l1, l2) = (wwl_labels(g1, k)?, wwl_labels(g2, k)?);
    if l1.dim() != l2.dim() {
        return Err(Error::LabelDimMismatch(l1.dim(), l2.dim()));
    }
    let weights = |g: &LabeledGraph| {
        let total: f64 = (0..g.n()).map(|v| g.degree(v) as f64).sum();
        (0..g.n()).map(|v| g.degree(v) as f64 / total).collect::<Vec<_>>()
    };
    let cost = Matrix::from_fn(g1.n(), g2.n(), |i, j| euclidean(l1.row(i), l2.row(j)));
    Ok(ot_value(&cost, &weights(g1), &weights(g2))?.max(0.0))
}

/// Small graphs used as fixtures and counterexamples.
pub mod families {
    use super::*;

    pub fn path(n: usize) -> LabeledGraph {
        let edges: Vec<(usize, usize)> = (1..n).map(|v| (v - 1, v)).collect();
        LabeledGraph::unlabeled(n, &edges).expect("valid path")
    }

    /// Star with centre 0 and `leaves` leaves.
    pub fn star(leaves: usize) -> LabeledGraph {
        let edges: Vec<(usize, usize)> = (1..=leaves).map(|v| (0, v)).collect();
        LabeledGraph::unlabeled(leaves + 1, &edges).expect("valid star")
    }

    pub fn claw() -> LabeledGraph {
        star(3)
    }

    pub fn single_edge() -> LabeledGraph {
        path(2)
    }

    pub fn two_disjoint_edges() -> LabeledGraph {
        LabeledGraph::unlabeled(4, &[(0, 1), (2, 3)]).expect("valid graph")
    }

    pub fn cycle(n: usize) -> LabeledGraph {
        let edges: Vec<(usize, usize)> = (0..n).map(|v| (v, (v + 1) % n)).collect();
        LabeledGraph::unlabeled(n, &edges).expect("valid cycle")
    }

    /// Pair with `3n + 2` vertices each and labels in `{-1, 0, 1}` that the
    /// averaging labels cannot separate but the WL distance can.
    ///
    /// The first graph is a caterpillar: a zero-labeled path of length
    /// `n + 1` whose `n` inner vertices each carry one `+1` and one `-1`
    /// leaf. The second is a zero-labeled star centre with `n` leaves
    /// labeled `+1`, `n` labeled `-1` and `n + 1` labeled `0`.
    pub fn caterpillar_and_star(n: usize) -> (LabeledGraph, LabeledGraph) {
        assert!(n >= 1);
        let size = 3 * n + 2;
        let mut edges = Vec::new();
        let mut labels = vec![0.0; size];
        for v in 1..=n + 1 {
            edges.push((v - 1, v));
        }
        for i in 1..=n {
            let (plus, minus) = (n + 2 + 2 * (i - 1), n + 3 + 2 * (i - 1));
            edges.push((i, plus));
            edges.push((i, minus));
            labels[plus] = 1.0;
            labels[minus] = -1.0;
        }
        let caterpillar =
            LabeledGraph::new(size, &edges, LabelMatrix::from_column(&labels).unwrap()).expect("valid caterpillar");

        let star_edges: Vec<(usize, usize)> = (1..size).map(|v| (0, v)).collect();
        let mut star_labels = vec![0.0; size];
        for v in 1..=n {
            star_labels[v] = 1.0;
            star_labels[n + v] = -1.0;
        }
        let star =
            LabeledGraph::new(size, &star_edges, LabelMatrix::from_column(&star_labels).unwrap()).expect("valid star");
        (caterpillar, star)
    }
}

#[cfg(test)]
mod tests {
    use super::families::*;
    use super::*;

    #[test]
    fn invalid_edges() {
        assert_eq!(LabeledGraph::unlabeled(2, &[(0, 1), (1, 0)]), Err(Error::InvalidEdge(1, 0)));
        assert_eq!(LabeledGraph::unlabeled(2, &[(0, 2)]), Err(Error::InvalidEdge(0, 2)));
        assert_eq!(LabeledGraph::unlabeled(2, &[(1, 1)]), Err(Error::InvalidEdge(1, 1)));
    }

    #[test]
    fn edge_chain_at_q0() {
        let x = graph_to_lmmc(&single_edge(), 0.0).unwrap();
        assert_eq!(x.kernel().matrix(), &Matrix::from_rows(&[[0.0, 1.0], [1.0, 0.0]]).unwrap());
        assert_eq!(x.stationary().as_slice(), &[0.5, 0.5]);
    }

    #[test]
    fn isolated_vertex_self_loops() {
        let g = LabeledGraph::unlabeled(3, &[(0, 1)]).unwrap();
        let x = graph_to_lmmc(&g, 0.3).unwrap();
        assert_eq!(x.kernel().row(2), &[0.0, 0.0, 1.0]);
        assert!((x.stationary().as_slice()[2] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn triangle_at_q06() {
        let x = graph_to_lmmc(&cycle(3), 0.6).unwrap();
        for v in 0..3 {
            for u in 0..3 {
                let want = if u == v { 0.6 } else { 0.2 };
                assert!((x.kernel().row(v)[u] - want).abs() < 1e-15);
            }
        }
        assert!(graph_to_lmmc(&cycle(3), 1.0).is_err());
    }

    #[test]
    fn f2_labels() {
        let e = relabel(&single_edge(), RelabelScheme::ScalarF2);
        assert_eq!(e.labels().matrix().as_slice(), &[1.5, 1.5]);
        let c = relabel(&claw(), RelabelScheme::ScalarF2);
        assert_eq!(c.labels().matrix().as_slice(), &[3.25, 1.25, 1.25, 1.25]);
    }

    #[test]
    fn g_labels_keep_original_columns() {
        let g = relabel(&claw(), RelabelScheme::VectorG);
        assert_eq!(g.labels().dim(), 3);
        for v in 0..4 {
            assert_eq!(g.labels().row(v)[0], 1.0);
        }
        assert_eq!(g.labels().row(0)[1], 3.0);
        assert_eq!(g.labels().row(2)[2], 0.25);
    }

    #[test]
    fn wl_test_examples() {
        assert_eq!(wl_test(&claw(), &path(4), None), WlOutcome::DistinguishedAt(1));
        let (a, b) = (single_edge().with_degree_labels(), two_disjoint_edges().with_degree_labels());
        assert_eq!(wl_test(&a, &b, None), WlOutcome::DistinguishedAt(0));
        let p = path(5).permuted(&[3, 0, 4, 1, 2]).unwrap();
        assert_eq!(wl_test(&path(5), &p, None), WlOutcome::Indistinguishable);
        // Regular graphs of the same degree are not told apart.
        let hexagon = cycle(6);
        let triangles = LabeledGraph::unlabeled(6, &[(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3)]).unwrap();
        assert_eq!(wl_test(&hexagon, &triangles, None), WlOutcome::Indistinguishable);
    }

    #[test]
    fn colorings_share_ids() {
        let (a, b) = wl_colorings(&path(3), &path(3), 2);
        assert_eq!(a, b);
        assert_eq!(a.rounds.len(), 3);
        assert_eq!(a.rounds[1][0], a.rounds[1][2]);
        assert_ne!(a.rounds[1][0], a.rounds[1][1]);
    }

    #[test]
    fn averaging_labels_on_p3() {
        let g = path(3).with_labels(LabelMatrix::from_column(&[0.0, 1.0, 0.0]).unwrap()).unwrap();
        let l = wwl_labels(&g, 1).unwrap();
        assert_eq!(l.dim(), 2);
        let stage1: Vec<f64> = (0..3).map(|v| l.row(v)[1]).collect();
        assert_eq!(stage1, vec![0.5, 0.5, 0.5]);
        let l = wwl_labels(&path(4), 3).unwrap();
        assert!(l.matrix().as_slice().iter().all(|&x| x == 1.0));
        assert_eq!(wwl_labels(&LabeledGraph::unlabeled(2, &[]).unwrap(), 1), Err(Error::IsolatedVertex(0)));
    }

    #[test]
    fn caterpillar_leaf_labels_halve() {
        let (cat, star) = caterpillar_and_star(2);
        assert_eq!((cat.n(), star.n()), (8, 8));
        let l = wwl_labels(&cat, 3).unwrap();
        for v in 0..8 {
            let sign = cat.labels().row(v)[0];
            for s in 0..=3 {
                assert_eq!(l.row(v)[s], sign / (1u32 << s) as f64);
            }
        }
        assert!(wwl_hat_distance(&cat, &star, 3).unwrap() < 1e-12);
    }
}
