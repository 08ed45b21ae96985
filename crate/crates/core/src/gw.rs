//! Computable quantities on Markov chain metric spaces: eccentricity,
//! diameter, the WL-based lower bound, and the k-distortion of explicit
//! couplings.
//!
//! The k-Gromov-Wasserstein distance itself is never computed. Every
//! feasible `(γ, ν)` gives an upper bound through [`distortion_k`], which is
//! what the lower bounds here are checked against.

use alloc::format;
use alloc::vec::Vec;

use crate::chain::{LabelMatrix, Lmmc, MarkovKernel, Mcms};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::ot::{check_plan, ot_solve, ot_value, Coupling};
use crate::wl::{kstep_kernel, map_rows, wl_distance};
use crate::COUPLING_TOL;

/// Largest state count accepted by [`KStepCouplingChain`] on either side.
pub const KSTEP_CHAIN_MAX_STATES: usize = 32;

/// Marginal tolerance of composed k-step couplings.
pub const COMPOSED_COUPLING_TOL: f64 = 1e-6;

/// `ecc(x) = Σ_x' d(x, x') μ(x')`.
pub fn eccentricity(m: &Mcms) -> LabelMatrix {
    let mu = m.stationary().as_slice();
    let col: Vec<f64> = m.metric().iter_rows().map(|r| r.iter().zip(mu).map(|(d, w)| d * w).sum()).collect();
    LabelMatrix::from_column(&col).expect("finite metric")
}

/// `Σ d(x, x') μ(x) μ(x')`.
pub fn diameter(m: &Mcms) -> f64 {
    let mu = m.stationary().as_slice();
    m.metric().iter_rows().zip(mu).map(|(r, a)| a * r.iter().zip(mu).map(|(d, b)| d * b).sum::<f64>()).sum()
}

/// `|diameter(X) − diameter(Y)|`, a lower bound on every k-distortion.
pub fn diameter_lb(mx: &Mcms, my: &Mcms) -> f64 {
    (diameter(mx) - diameter(my)).abs()
}

/// The chain of `m` labeled by distance to state `i`.
pub fn distance_labeled(m: &Mcms, i: usize) -> Lmmc {
    let labels = LabelMatrix::from_column(m.metric().row(i)).expect("finite metric");
    m.labeled(labels).expect("one label per state")
}

/// OT over the matrix of depth-`k` WL distances between distance-labeled chains.
///
/// With constant kernels this is the classical third lower bound for the
/// Gromov-Wasserstein distance.
pub fn tlb_lower_bound(mx: &Mcms, my: &Mcms, k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidValue("lower bound needs k >= 1".into()));
    }
    let xs: Vec<Lmmc> = (0..mx.n()).map(|i| distance_labeled(mx, i)).collect();
    let ys: Vec<Lmmc> = (0..my.n()).map(|j| distance_labeled(my, j)).collect();
    let rows = map_rows(xs.len(), |i| ys.iter().map(|y| wl_distance(&xs[i], y, k)).collect::<Result<Vec<_>>>())?;
    let table = Matrix::from_rows(&rows)?;
    Ok(ot_value(&table, mx.stationary().as_slice(), my.stationary().as_slice())?.max(0.0))
}

/// A k-step coupling built from `k` one-step coupling fields.
///
/// Layer `s` maps each pair `(x, y)` to a coupling of the transition laws
/// `m_x` and `m_y`, stored at index `x * |Y| + y`. The composed field satisfies
/// `ν^(s+1)_{x,y} = Σ layer_s[x,y](x', y') ν^(s)_{x',y'}`, so the most recently
/// added layer takes the first step.
#[derive(Debug, Clone, PartialEq)]
pub struct KStepCouplingChain {
    n: usize,
    m: usize,
    steps: Vec<Vec<Matrix>>,
    composed: Vec<Matrix>,
}

impl KStepCouplingChain {
    pub fn new(mx: &Mcms, my: &Mcms, steps: Vec<Vec<Matrix>>) -> Result<Self> {
        Self::from_kernels(mx.kernel(), my.kernel(), steps)
    }

    /// Same as [`KStepCouplingChain::new`] for bare kernels.
    pub fn from_kernels(kx: &MarkovKernel, ky: &MarkovKernel, steps: Vec<Vec<Matrix>>) -> Result<Self> {
        let (n, m) = (kx.n(), ky.n());
        if n > KSTEP_CHAIN_MAX_STATES || m > KSTEP_CHAIN_MAX_STATES {
            return Err(Error::TooLarge { cells: n.max(m), limit: KSTEP_CHAIN_MAX_STATES });
        }
        if steps.is_empty() {
            return Err(Error::InvalidValue("k-step coupling needs at least one layer".into()));
        }
        for (s, layer) in steps.iter().enumerate() {
            if layer.len() != n * m {
                return Err(Error::ShapeMismatch(format!("layer {s} has {} couplings, expected {}", layer.len(), n * m)));
            }
            for x in 0..n {
                for y in 0..m {
                    let plan = &layer[x * m + y];
                    if plan.shape() != (n, m) {
                        return Err(Error::ShapeMismatch(format!("layer {s} coupling ({x},{y}) is not {n}x{m}")));
                    }
                    check_plan(plan, kx.row(x), ky.row(y), COUPLING_TOL).map_err(|e| {
                        Error::MarginalMismatch(format!("layer {s} at ({x},{y}): {e}"))
                    })?;
                }
            }
        }
        let mut composed = steps[0].clone();
        for layer in &steps[1..] {
            composed = layer
                .iter()
                .map(|first| {
                    let mut out = Matrix::zeros(n, m);
                    for (idx, &w) in first.as_slice().iter().enumerate() {
                        if w == 0.0 {
                            continue;
                        }
                        for (o, p) in out.as_slice_mut().iter_mut().zip(composed[idx].as_slice()) {
                            *o += w * p;
                        }
                    }
                    out
                })
                .collect();
        }
        let k = steps.len();
        let px = kstep_kernel(kx, k)?;
        let py = kstep_kernel(ky, k)?;
        for x in 0..n {
            for y in 0..m {
                check_plan(&composed[x * m + y], px.row(x), py.row(y), COMPOSED_COUPLING_TOL)
                    .map_err(|e| Error::MarginalMismatch(format!("composed coupling at ({x},{y}): {e}")))?;
            }
        }
        Ok(Self { n, m, steps, composed })
    }

    pub fn k(&self) -> usize {
        self.steps.len()
    }

    pub fn steps(&self) -> &[Vec<Matrix>] {
        &self.steps
    }

    /// `ν^(k)_{x,y}`.
    pub fn composed(&self, x: usize, y: usize) -> &Matrix {
        &self.composed[x * self.m + y]
    }

    /// `ν^(k) ⊙ γ`, the k-step coupling of the stationary laws.
    pub fn push(&self, gamma: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(self.n, self.m);
        for (idx, &w) in gamma.as_slice().iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for (o, p) in out.as_slice_mut().iter_mut().zip(self.composed[idx].as_slice()) {
                *o += w * p;
            }
        }
        out
    }
}

/// Layers of product couplings `m_x ⊗ m_y`.
pub fn make_product_kstep(mx: &Mcms, my: &Mcms, k: usize) -> Result<KStepCouplingChain> {
    let layer = product_layer(mx.kernel(), my.kernel());
    KStepCouplingChain::new(mx, my, alloc::vec![layer; k])
}

/// One-step field of product couplings `m_x ⊗ m_y`.
pub fn product_layer(kx: &MarkovKernel, ky: &MarkovKernel) -> Vec<Matrix> {
    let (n, m) = (kx.n(), ky.n());
    let mut layer = Vec::with_capacity(n * m);
    for x in 0..n {
        for y in 0..m {
            let (a, b) = (kx.row(x), ky.row(y));
            layer.push(Matrix::from_fn(n, m, |i, j| a[i] * b[j]));
        }
    }
    layer
}

/// One-step field of optimal couplings of the transition laws for ground cost `cost`.
pub fn optimal_layer(kx: &MarkovKernel, ky: &MarkovKernel, cost: &Matrix) -> Result<Vec<Matrix>> {
    let (n, m) = (kx.n(), ky.n());
    let mut layer = Vec::with_capacity(n * m);
    for x in 0..n {
        for y in 0..m {
            let r = ot_solve(cost, kx.row(x), ky.row(y))?;
            layer.push(r.coupling.plan().clone());
        }
    }
    Ok(layer)
}

fn check_gamma(mx: &Mcms, my: &Mcms, gamma: &Coupling) -> Result<()> {
    if gamma.plan().shape() != (mx.n(), my.n()) {
        return Err(Error::MarginalMismatch(format!(
            "coupling is {}x{}, spaces have {} and {} states",
            gamma.plan().rows(),
            gamma.plan().cols(),
            mx.n(),
            my.n()
        )));
    }
    check_plan(gamma.plan(), mx.stationary().as_slice(), my.stationary().as_slice(), COUPLING_TOL)
}

fn check_chain(mx: &Mcms, my: &Mcms, nu: &KStepCouplingChain) -> Result<()> {
    if (nu.n, nu.m) != (mx.n(), my.n()) {
        return Err(Error::MarginalMismatch(format!(
            "k-step coupling is for {}x{} states, spaces have {} and {}",
            nu.n,
            nu.m,
            mx.n(),
            my.n()
        )));
    }
    Ok(())
}

/// `Σ γ(x,y) μ^(k)(x',y') |d_X(x,x') − d_Y(y,y')|` with `μ^(k) = ν^(k) ⊙ γ`.
pub fn distortion_k(mx: &Mcms, my: &Mcms, gamma: &Coupling, nu: &KStepCouplingChain) -> Result<f64> {
    check_gamma(mx, my, gamma)?;
    check_chain(mx, my, nu)?;
    let pushed = nu.push(gamma.plan());
    let (dx, dy) = (mx.metric(), my.metric());
    let (n, m) = (mx.n(), my.n());
    let mut total = 0.0;
    for x in 0..n {
        for y in 0..m {
            let g = gamma.plan()[(x, y)];
            if g == 0.0 {
                continue;
            }
            let mut inner = 0.0;
            for xp in 0..n {
                for yp in 0..m {
                    inner += pushed[(xp, yp)] * (dx[(x, xp)] - dy[(y, yp)]).abs();
                }
            }
            total += g * inner;
        }
    }
    Ok(total)
}

/// `Σ γ(x,y) Σ ν^(k)_{x,y}(x',y') ‖ℓ_X(x') − ℓ_Y(y')‖`, the label cost that a
/// stable label invariant keeps below the k-distortion.
pub fn kstep_label_cost(
    lx: &LabelMatrix,
    ly: &LabelMatrix,
    gamma: &Coupling,
    nu: &KStepCouplingChain,
) -> Result<f64> {
    if lx.dim() != ly.dim() {
        return Err(Error::LabelDimMismatch(lx.dim(), ly.dim()));
    }
    if lx.n() != nu.n || ly.n() != nu.m || gamma.plan().shape() != (nu.n, nu.m) {
        return Err(Error::ShapeMismatch("labels, coupling and k-step coupling disagree in size".into()));
    }
    let pushed = nu.push(gamma.plan());
    let mut total = 0.0;
    for xp in 0..nu.n {
        for yp in 0..nu.m {
            total += pushed[(xp, yp)] * lx.distance(xp, ly, yp);
        }
    }
    Ok(total)
}
