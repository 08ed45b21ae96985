//! Seeded synthetic molecule-like graph collections in the layout of the
//! small chemistry benchmarks: two classes, categorical atom labels,
//! 9 to 24 vertices per graph.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wlmetric_core::graph::LabeledGraph;
use wlmetric_core::LabelMatrix;

use crate::tudataset::Dataset;

const CARBON: f64 = 0.0;
const NITROGEN: f64 = 1.0;
const OXYGEN: f64 = 2.0;

struct Builder {
    edges: Vec<(usize, usize)>,
    atoms: Vec<f64>,
}

impl Builder {
    fn new() -> Self {
        Self { edges: Vec::new(), atoms: Vec::new() }
    }

    fn atom(&mut self, kind: f64) -> usize {
        self.atoms.push(kind);
        self.atoms.len() - 1
    }

    fn bond(&mut self, u: usize, v: usize) {
        self.edges.push((u.min(v), u.max(v)));
    }

    fn ring(&mut self, size: usize) -> Vec<usize> {
        let ids: Vec<usize> = (0..size).map(|_| self.atom(CARBON)).collect();
        for i in 0..size {
            self.bond(ids[i], ids[(i + 1) % size]);
        }
        ids
    }

    /// Hexagon sharing the edge `(a, b)`.
    fn fuse(&mut self, a: usize, b: usize) -> Vec<usize> {
        let new: Vec<usize> = (0..4).map(|_| self.atom(CARBON)).collect();
        self.bond(b, new[0]);
        for w in new.windows(2) {
            self.bond(w[0], w[1]);
        }
        self.bond(new[3], a);
        new
    }

    fn nitro(&mut self, at: usize) {
        let n = self.atom(NITROGEN);
        let (o1, o2) = (self.atom(OXYGEN), self.atom(OXYGEN));
        self.bond(at, n);
        self.bond(n, o1);
        self.bond(n, o2);
    }

    fn chain(&mut self, from: usize, len: usize, rng: &mut impl Rng) -> usize {
        let mut last = from;
        for _ in 0..len {
            let kind = if rng.random_bool(0.2) { rng.random_range(3..7) as f64 } else { CARBON };
            let v = self.atom(kind);
            self.bond(last, v);
            last = v;
        }
        last
    }

    fn finish(self) -> LabeledGraph {
        let labels = LabelMatrix::from_column(&self.atoms).expect("finite labels");
        LabeledGraph::new(self.atoms.len(), &self.edges, labels).expect("builder emits simple graphs")
    }
}

/// Fused hexagon systems carrying nitro groups.
fn aromatic_nitro(rng: &mut impl Rng) -> LabeledGraph {
    let mut b = Builder::new();
    let mut ring = b.ring(6);
    let mut carbons = ring.clone();
    for _ in 1..rng.random_range(2..=3) {
        let i = rng.random_range(0..ring.len() - 1);
        ring = b.fuse(ring[i], ring[i + 1]);
        carbons.extend(&ring);
    }
    for _ in 0..rng.random_range(1..=2) {
        let at = carbons[rng.random_range(0..carbons.len())];
        b.nitro(at);
    }
    b.finish()
}

/// One small ring with branching side chains.
fn ring_with_chains(rng: &mut impl Rng) -> LabeledGraph {
    let mut b = Builder::new();
    let ring = b.ring(rng.random_range(5..=6));
    for _ in 0..rng.random_range(2..=3) {
        let at = ring[rng.random_range(0..ring.len())];
        let end = b.chain(at, rng.random_range(2..=5), rng);
        if rng.random_bool(0.5) {
            let o = b.atom(OXYGEN);
            b.bond(end, o);
        }
    }
    b.finish()
}

/// `count` graphs, about two thirds in class 1 and the rest in class -1.
/// One class label in ten is flipped so the classes overlap.
pub fn mutag_like(name: &str, count: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut graphs = Vec::with_capacity(count);
    let mut classes = Vec::with_capacity(count);
    for _ in 0..count {
        if rng.random_bool(2.0 / 3.0) {
            graphs.push(aromatic_nitro(&mut rng));
            classes.push(1);
        } else {
            graphs.push(ring_with_chains(&mut rng));
            classes.push(-1);
        }
        if rng.random_bool(0.1) {
            *classes.last_mut().unwrap() *= -1;
        }
    }
    Dataset::new(name, graphs, classes).expect("one class per graph")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_in_range() {
        let a = mutag_like("S", 40, 5);
        assert_eq!(a, mutag_like("S", 40, 5));
        assert!(a.graphs.iter().all(|g| (9..=24).contains(&g.n())));
        assert!(a.class_labels.contains(&1) && a.class_labels.contains(&-1));
        assert!(a.graphs.iter().all(|g| (0..g.n()).all(|v| g.degree(v) > 0)));
    }
}
