#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wlmetric_core::chain::stationary_of;
use wlmetric_core::graph::LabeledGraph;
use wlmetric_core::{LabelMatrix, Lmmc, MarkovKernel, Matrix, Mcms, ProbVec};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_prob(rng: &mut impl Rng, n: usize, sparse: bool) -> Vec<f64> {
    let mut w: Vec<f64> = (0..n)
        .map(|_| if sparse && rng.random_bool(0.4) { 0.0 } else { rng.random_range(0.05..1.0) })
        .collect();
    if w.iter().all(|&x| x == 0.0) {
        w[rng.random_range(0..n)] = 1.0;
    }
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= s);
    w
}

/// Irreducible random kernel: every state also steps to its successor mod n.
pub fn random_kernel(rng: &mut impl Rng, n: usize) -> MarkovKernel {
    let mut m = Matrix::zeros(n, n);
    for i in 0..n {
        let mut row = random_prob(rng, n, true);
        if n > 1 {
            row[(i + 1) % n] += 0.2;
        }
        let s: f64 = row.iter().sum();
        for (j, v) in row.iter().enumerate() {
            m[(i, j)] = v / s;
        }
    }
    MarkovKernel::new(m).unwrap()
}

pub fn random_labels(rng: &mut impl Rng, n: usize, dim: usize) -> LabelMatrix {
    LabelMatrix::new(Matrix::from_fn(n, dim, |_, _| rng.random_range(-1.0..1.0))).unwrap()
}

pub fn random_lmmc(rng: &mut impl Rng, max_n: usize, dim: usize) -> Lmmc {
    let n = rng.random_range(1..=max_n);
    let kernel = random_kernel(rng, n);
    let stationary = stationary_of(&kernel).unwrap();
    assert!(stationary.fully_supported);
    Lmmc::new(kernel, stationary.distribution, random_labels(rng, n, dim)).unwrap()
}

pub fn random_perm(rng: &mut impl Rng, n: usize) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        p.swap(i, rng.random_range(0..=i));
    }
    p
}

pub fn random_graph(rng: &mut impl Rng, n: usize, p: f64) -> LabeledGraph {
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.random_bool(p) {
                edges.push((u, v));
            }
        }
    }
    LabeledGraph::unlabeled(n, &edges).unwrap()
}

/// Random graph with no isolated vertices: a random spanning tree plus extra edges.
pub fn random_connected_graph(rng: &mut impl Rng, n: usize, extra: f64) -> LabeledGraph {
    let mut edges = Vec::new();
    for v in 1..n {
        edges.push((rng.random_range(0..v), v));
    }
    for u in 0..n {
        for v in u + 1..n {
            if !edges.contains(&(u, v)) && rng.random_bool(extra) {
                edges.push((u, v));
            }
        }
    }
    LabeledGraph::unlabeled(n, &edges).unwrap()
}

/// Shortest-path metric of a random weighted connected graph.
pub fn random_metric(rng: &mut impl Rng, n: usize) -> Matrix {
    let mut d = Matrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { f64::INFINITY });
    for v in 1..n {
        let u = rng.random_range(0..v);
        let w = rng.random_range(0.5..2.0);
        d[(u, v)] = w;
        d[(v, u)] = w;
    }
    for u in 0..n {
        for v in u + 1..n {
            if rng.random_bool(0.3) {
                let w = rng.random_range(0.5..2.0);
                if w < d[(u, v)] {
                    d[(u, v)] = w;
                    d[(v, u)] = w;
                }
            }
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = d[(i, k)] + d[(k, j)];
                if via < d[(i, j)] {
                    d[(i, j)] = via;
                }
            }
        }
    }
    d
}

pub fn random_mcms(rng: &mut impl Rng, max_n: usize) -> Mcms {
    let n = rng.random_range(1..=max_n);
    let kernel = random_kernel(rng, n);
    let stationary = stationary_of(&kernel).unwrap().distribution;
    Mcms::new(kernel, stationary, random_metric(rng, n)).unwrap()
}

pub fn uniform(n: usize) -> ProbVec {
    ProbVec::uniform(n)
}
