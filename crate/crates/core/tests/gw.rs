mod common;

use common::*;
use rand::Rng;
use wlmetric_core::gw::{
    diameter, diameter_lb, distortion_k, eccentricity, kstep_label_cost, make_product_kstep, optimal_layer,
    product_layer, tlb_lower_bound, KStepCouplingChain,
};
use wlmetric_core::ot::{ot_solve, Coupling};
use wlmetric_core::wl::{kstep_kernel, wl_distance};
use wlmetric_core::{Error, MarkovKernel, Matrix, Mcms, ProbVec};

fn random_coupling(r: &mut impl Rng, a: &[f64], b: &[f64]) -> Matrix {
    let cost = Matrix::from_fn(a.len(), b.len(), |_, _| r.random_range(0.0..1.0));
    let opt = ot_solve(&cost, a, b).unwrap();
    let t = r.random_range(0.0..1.0);
    Matrix::from_fn(a.len(), b.len(), |i, j| t * a[i] * b[j] + (1.0 - t) * opt.coupling.plan()[(i, j)])
}

fn random_layer(r: &mut impl Rng, kx: &MarkovKernel, ky: &MarkovKernel) -> Vec<Matrix> {
    let mut layer = Vec::new();
    for i in 0..kx.n() {
        for j in 0..ky.n() {
            layer.push(random_coupling(r, kx.row(i), ky.row(j)));
        }
    }
    layer
}

/// Product, optimal (for the metric-difference ground cost) and random layers.
fn sample_pairs(r: &mut impl Rng, mx: &Mcms, my: &Mcms, k: usize, count: usize) -> Vec<(Coupling, KStepCouplingChain)> {
    let (a, b) = (mx.stationary(), my.stationary());
    let ground = Matrix::from_fn(mx.n(), my.n(), |i, j| {
        let ei = eccentricity(mx).row(i)[0];
        let ej = eccentricity(my).row(j)[0];
        (ei - ej).abs()
    });
    (0..count)
        .map(|s| {
            let layers: Vec<Vec<Matrix>> = (0..k)
                .map(|_| match s % 3 {
                    0 => product_layer(mx.kernel(), my.kernel()),
                    1 => optimal_layer(mx.kernel(), my.kernel(), &ground).unwrap(),
                    _ => random_layer(r, mx.kernel(), my.kernel()),
                })
                .collect();
            let nu = KStepCouplingChain::new(mx, my, layers).unwrap();
            let gamma = match s % 3 {
                0 => Coupling::product(a, b),
                1 => ot_solve(&ground, a.as_slice(), b.as_slice()).unwrap().coupling,
                _ => {
                    let plan = random_coupling(r, a.as_slice(), b.as_slice());
                    Coupling::new(plan, a.clone(), b.clone(), 1e-9).unwrap()
                }
            };
            (gamma, nu)
        })
        .collect()
}

#[test]
fn lower_bounds_sit_below_every_sampled_distortion() {
    let mut r = rng(41);
    for _ in 0..30 {
        let mx = random_mcms(&mut r, 6);
        let my = random_mcms(&mut r, 6);
        let (ex, ey) = (eccentricity(&mx), eccentricity(&my));
        let x = mx.labeled(ex.clone()).unwrap();
        let y = my.labeled(ey.clone()).unwrap();
        for k in 1..=2 {
            let wl = wl_distance(&x, &y, k).unwrap();
            let tlb = tlb_lower_bound(&mx, &my, k).unwrap();
            for (gamma, nu) in sample_pairs(&mut r, &mx, &my, k, 10) {
                let dis = distortion_k(&mx, &my, &gamma, &nu).unwrap();
                assert!(wl <= dis + 1e-7, "stability: {wl} > {dis}");
                assert!(tlb <= dis + 1e-7, "tlb: {tlb} > {dis}");
                assert!(diameter_lb(&mx, &my) <= dis + 1e-7);
                let label = kstep_label_cost(&ex, &ey, &gamma, &nu).unwrap();
                assert!(label <= dis + 1e-7, "eccentricity: {label} > {dis}");
            }
        }
    }
}

#[test]
fn diagonal_couplings_on_identical_spaces_have_no_distortion() {
    let mut r = rng(42);
    for _ in 0..10 {
        let m = random_mcms(&mut r, 6);
        let n = m.n();
        let layer: Vec<Matrix> = (0..n)
            .flat_map(|x| (0..n).map(move |y| (x, y)))
            .map(|(x, y)| {
                let (a, b) = (m.kernel().row(x), m.kernel().row(y));
                if x == y {
                    Matrix::from_fn(n, n, |i, j| if i == j { a[i] } else { 0.0 })
                } else {
                    Matrix::from_fn(n, n, |i, j| a[i] * b[j])
                }
            })
            .collect();
        let nu = KStepCouplingChain::new(&m, &m, vec![layer.clone(), layer]).unwrap();
        let gamma = Coupling::diagonal(m.stationary());
        assert!(distortion_k(&m, &m, &gamma, &nu).unwrap() <= 1e-9);
        assert!(tlb_lower_bound(&m, &m, 2).unwrap() <= 1e-9);
    }
}

#[test]
fn product_couplings_match_quadruple_sum() {
    let mut r = rng(43);
    for _ in 0..10 {
        let (mx, my) = (random_mcms(&mut r, 4), random_mcms(&mut r, 4));
        let nu = make_product_kstep(&mx, &my, 1).unwrap();
        let gamma = Coupling::product(mx.stationary(), my.stationary());
        let (a, b) = (mx.stationary().as_slice(), my.stationary().as_slice());
        let mut want = 0.0;
        for x in 0..mx.n() {
            for y in 0..my.n() {
                for x2 in 0..mx.n() {
                    for y2 in 0..my.n() {
                        // ν ⊙ γ for product layers: Σ a(x'')b(y'') m_x''(x') m_y''(y') = a(x')b(y').
                        let inner: f64 = (0..mx.n())
                            .flat_map(|x3| (0..my.n()).map(move |y3| (x3, y3)))
                            .map(|(x3, y3)| a[x3] * b[y3] * mx.kernel().row(x3)[x2] * my.kernel().row(y3)[y2])
                            .sum();
                        want += a[x] * b[y] * inner * (mx.metric()[(x, x2)] - my.metric()[(y, y2)]).abs();
                    }
                }
            }
        }
        let got = distortion_k(&mx, &my, &gamma, &nu).unwrap();
        assert!((got - want).abs() <= 1e-12, "{got} vs {want}");
    }
}

#[test]
fn composed_marginals_are_kstep_kernels() {
    let mut r = rng(44);
    for _ in 0..10 {
        let (mx, my) = (random_mcms(&mut r, 5), random_mcms(&mut r, 5));
        let layers = vec![random_layer(&mut r, mx.kernel(), my.kernel()), product_layer(mx.kernel(), my.kernel())];
        let nu = KStepCouplingChain::new(&mx, &my, layers).unwrap();
        let (px, py) = (kstep_kernel(mx.kernel(), 2).unwrap(), kstep_kernel(my.kernel(), 2).unwrap());
        for x in 0..mx.n() {
            for y in 0..my.n() {
                let plan = nu.composed(x, y);
                for i in 0..mx.n() {
                    assert!((plan.row(i).iter().sum::<f64>() - px.row(x)[i]).abs() <= 1e-6);
                }
                for j in 0..my.n() {
                    let s: f64 = (0..mx.n()).map(|i| plan[(i, j)]).sum();
                    assert!((s - py.row(y)[j]).abs() <= 1e-6);
                }
            }
        }
    }
}

#[test]
fn constant_kernel_bound_does_not_depend_on_depth() {
    let mut r = rng(45);
    for _ in 0..10 {
        let nx = r.random_range(1..=5);
        let ny = r.random_range(1..=5);
        let mx = Mcms::with_constant_kernel(random_metric(&mut r, nx), ProbVec::new(random_prob(&mut r, nx, false)).unwrap())
            .unwrap();
        let my = Mcms::with_constant_kernel(random_metric(&mut r, ny), ProbVec::new(random_prob(&mut r, ny, false)).unwrap())
            .unwrap();
        let one = tlb_lower_bound(&mx, &my, 1).unwrap();
        let two = tlb_lower_bound(&mx, &my, 2).unwrap();
        assert!((one - two).abs() <= 1e-8, "{one} vs {two}");
    }
}

#[test]
fn eccentricity_follows_permutations_and_diameter_scales() {
    let mut r = rng(46);
    let m = random_mcms(&mut r, 6);
    let perm = random_perm(&mut r, m.n());
    let p = m.permuted(&perm).unwrap();
    let (e, ep) = (eccentricity(&m), eccentricity(&p));
    for (i, &old) in perm.iter().enumerate() {
        assert!((ep.row(i)[0] - e.row(old)[0]).abs() <= 1e-12);
    }
    let scaled = Mcms::new(m.kernel().clone(), m.stationary().clone(), m.metric().scale(3.0)).unwrap();
    assert!((diameter(&scaled) - 3.0 * diameter(&m)).abs() <= 1e-12);
}

#[test]
fn oversized_chains_are_refused() {
    let n = 33;
    let m = Mcms::with_constant_kernel(
        Matrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { 1.0 }),
        ProbVec::uniform(n),
    )
    .unwrap();
    assert!(matches!(make_product_kstep(&m, &m, 1), Err(Error::TooLarge { .. })));
}
