mod common;

use common::*;
use rand::Rng;
use wlmetric_core::graph::{families, graph_to_lmmc, wwl_labels, LabeledGraph};
use wlmetric_core::mcnn::{
    apply_f, combine, mcnn_forward, q_phi, Activation, Combine, LipschitzMap, McnnSpec, Readout,
};
use wlmetric_core::wl::wl_distance;
use wlmetric_core::{Lmmc, Matrix};

fn random_activation(r: &mut impl Rng) -> Activation {
    match r.random_range(0..3) {
        0 => Activation::Identity,
        1 => Activation::Abs,
        _ => Activation::Relu,
    }
}

fn random_map(r: &mut impl Rng, d_in: usize, d_out: usize) -> LipschitzMap {
    let w = Matrix::from_fn(d_out, d_in, |_, _| r.random_range(-1.5..1.5));
    let b = (0..d_out).map(|_| r.random_range(-1.0..1.0)).collect();
    let act = (0..d_out).map(|_| random_activation(r)).collect();
    LipschitzMap::new(w, b, act).unwrap()
}

/// Rescales so the certified bound is at most one.
fn contract(m: LipschitzMap) -> LipschitzMap {
    let c = m.lipschitz_bound().max(1.0);
    LipschitzMap::new(m.weights().scale(1.0 / c), m.bias().to_vec(), m.activations().to_vec()).unwrap()
}

/// Random depth-`k` network whose pooled features are read by a 1-Lipschitz map
/// into one coordinate.
fn random_spec(r: &mut impl Rng, input: usize, k: usize) -> McnnSpec {
    let mut dim = input;
    let mut layers = Vec::new();
    for _ in 0..k {
        let out = r.random_range(1..=4);
        layers.push(random_map(r, dim, out));
        dim = out;
    }
    let phi = contract(random_map(r, dim, 1));
    McnnSpec::new(layers, phi, Readout::Project(0)).unwrap()
}

#[test]
fn equal_outputs_on_zero_distance_families() {
    let mut r = rng(51);
    let pairs: Vec<(LabeledGraph, LabeledGraph)> = vec![
        (families::claw(), families::path(4)),
        (families::single_edge().with_degree_labels(), families::two_disjoint_edges().with_degree_labels()),
    ];
    for (g1, g2) in &pairs {
        for q in [0.0, 0.6] {
            let (x, y) = (graph_to_lmmc(g1, q).unwrap(), graph_to_lmmc(g2, q).unwrap());
            for k in 0..=3 {
                assert!(wl_distance(&x, &y, k).unwrap() <= 1e-9);
                for _ in 0..50 {
                    let spec = random_spec(&mut r, 1, k);
                    let gap = (mcnn_forward(&spec, &x).unwrap() - mcnn_forward(&spec, &y).unwrap()).abs();
                    assert!(gap <= 1e-6, "q={q} k={k}: gap {gap}");
                }
            }
        }
    }
}

#[test]
fn outputs_are_lipschitz_in_the_distance() {
    let mut r = rng(52);
    for _ in 0..50 {
        let dim = r.random_range(1..=2);
        let (x, y) = (random_lmmc(&mut r, 6, dim), random_lmmc(&mut r, 6, dim));
        let k = r.random_range(0..=3);
        let spec = random_spec(&mut r, dim, k);
        let gap = (mcnn_forward(&spec, &x).unwrap() - mcnn_forward(&spec, &y).unwrap()).abs();
        let bound = spec.layer_lipschitz_product() * wl_distance(&x, &y, k).unwrap();
        assert!(gap <= bound + 1e-7, "k={k}: {gap} > {bound}");
    }
}

#[test]
fn random_search_separates_the_caterpillar_pair() {
    let mut r = rng(53);
    let (g1, g2) = families::caterpillar_and_star(2);
    let (x, y) = (graph_to_lmmc(&g1, 0.0).unwrap(), graph_to_lmmc(&g2, 0.0).unwrap());
    assert!(wl_distance(&x, &y, 1).unwrap() > 1e-4);
    let found = (0..1000).any(|_| {
        let spec = random_spec(&mut r, 1, 1);
        (mcnn_forward(&spec, &x).unwrap() - mcnn_forward(&spec, &y).unwrap()).abs() > 1e-6
    });
    assert!(found);
}

fn fixed_spec(scale: f64, depth: usize) -> McnnSpec {
    let first = LipschitzMap::new(
        Matrix::from_rows(&[[scale], [-0.5]]).unwrap(),
        vec![0.2, 0.1],
        vec![Activation::Relu, Activation::Abs],
    )
    .unwrap();
    let second =
        LipschitzMap::affine(Matrix::from_rows(&[[1.0, -2.0], [0.5, 0.3]]).unwrap(), vec![0.0, -0.4], Activation::Abs)
            .unwrap();
    let mut layers = vec![first, second];
    layers.truncate(depth);
    let phi_in = if depth == 0 { 1 } else { 2 };
    let phi = LipschitzMap::affine(Matrix::from_fn(2, phi_in, |i, j| 0.3 * (i + j + 1) as f64 * scale), vec![0.1, -0.2], Activation::Identity)
        .unwrap();
    let psi = Readout::Sum(
        Box::new(Readout::Affine { weights: vec![1.0, -0.5], bias: 0.25 }),
        Box::new(Readout::Product(Box::new(Readout::Project(0)), Box::new(Readout::Project(1)))),
    );
    McnnSpec::new(layers, phi, psi).unwrap()
}

#[test]
fn combined_specs_reproduce_sums_and_products() {
    let mut r = rng(54);
    let inputs: Vec<Lmmc> = (0..4).map(|_| random_lmmc(&mut r, 5, 1)).collect();
    for depth in 0..=2 {
        let (a, b) = (fixed_spec(1.0, depth), fixed_spec(-0.7, depth));
        let sum = combine(&a, &b, Combine::Sum).unwrap();
        let product = combine(&a, &b, Combine::Product).unwrap();
        for x in &inputs {
            let (va, vb) = (mcnn_forward(&a, x).unwrap(), mcnn_forward(&b, x).unwrap());
            assert!((mcnn_forward(&sum, x).unwrap() - (va + vb)).abs() <= 1e-9);
            assert!((mcnn_forward(&product, x).unwrap() - va * vb).abs() <= 1e-9);
        }
    }
    assert!(combine(&fixed_spec(1.0, 1), &fixed_spec(1.0, 2), Combine::Sum).is_err());
}

#[test]
fn identity_layer_on_lazy_walk_is_the_averaging_update() {
    let mut r = rng(55);
    for _ in 0..20 {
        let g = random_connected_graph(&mut r, 7, 0.3);
        let x = graph_to_lmmc(&g, 0.5).unwrap();
        let stepped = apply_f(&LipschitzMap::identity(g.labels().dim()), &x).unwrap();
        let stacked = wwl_labels(&g, 1).unwrap();
        let d = g.labels().dim();
        for v in 0..g.n() {
            for c in 0..d {
                assert!((stepped.labels().row(v)[c] - stacked.row(v)[d + c]).abs() <= 1e-12);
            }
        }
    }
}

#[test]
fn isomorphic_inputs_give_equal_outputs() {
    let mut r = rng(56);
    for _ in 0..20 {
        let x = random_lmmc(&mut r, 7, 2);
        let px = x.permuted(&random_perm(&mut r, x.n())).unwrap();
        let k = r.random_range(0..=3);
        let spec = random_spec(&mut r, 2, k);
        assert!((mcnn_forward(&spec, &x).unwrap() - mcnn_forward(&spec, &px).unwrap()).abs() <= 1e-12);
    }
}

#[test]
fn pooling_matches_direct_summation() {
    let mut r = rng(57);
    for _ in 0..50 {
        let (n, d_in, d_out) = (r.random_range(1..=6), r.random_range(1..=3), r.random_range(1..=3));
        let phi = random_map(&mut r, d_in, d_out);
        let w = random_prob(&mut r, n, true);
        let pts = random_labels(&mut r, n, d_in);
        let got = q_phi(&phi, &w, &pts).unwrap();
        for o in 0..d_out {
            let mut want = 0.0;
            for i in 0..n {
                let mut pre = phi.bias()[o];
                for j in 0..d_in {
                    pre += phi.weights()[(o, j)] * pts.row(i)[j];
                }
                want += w[i] * phi.activations()[o].apply(pre);
            }
            assert!((got[o] - want).abs() <= 1e-12);
        }
    }
}
