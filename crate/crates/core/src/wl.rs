//! Depth-`k` WL distance by cost-matrix recursion, and the k-step lower bound.
//!
//! Measures over measures are never built. Level `k` of the hierarchy is
//! represented by the matrix of pairwise Wasserstein distances between the
//! level-`k` labels of the two chains; lifting a level costs one OT solve per
//! state pair.

use alloc::format;
use alloc::vec::Vec;

use crate::chain::{euclidean, Lmmc, MarkovKernel};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::ot::{ot_value, sorted_atoms, support, transport_cost, w1_sorted};
use crate::ZERO_THRESHOLD;

/// Pairwise distances between the depth-`depth` labels of two chains.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    entries: Matrix,
    depth: usize,
}

impl CostMatrix {
    pub fn new(entries: Matrix, depth: usize) -> Result<Self> {
        if let Some(v) = entries.as_slice().iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::InvalidValue(format!("cost entry {v}")));
        }
        Ok(Self { entries, depth })
    }

    pub fn entries(&self) -> &Matrix {
        &self.entries
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn into_matrix(self) -> Matrix {
        self.entries
    }
}

/// Euclidean distances between the label rows of `x` and `y`.
pub fn cost_matrix_depth0(x: &Lmmc, y: &Lmmc) -> Result<CostMatrix> {
    let (lx, ly) = (x.labels(), y.labels());
    if lx.dim() != ly.dim() {
        return Err(Error::LabelDimMismatch(lx.dim(), ly.dim()));
    }
    let entries = Matrix::from_fn(x.n(), y.n(), |i, j| euclidean(lx.row(i), ly.row(j)));
    Ok(CostMatrix { entries, depth: 0 })
}

/// One level up: entry `(i, j)` becomes the OT cost of `prev` between the
/// transition laws out of `x_i` and `y_j`.
pub fn lift_cost(prev: &CostMatrix, x: &Lmmc, y: &Lmmc) -> Result<CostMatrix> {
    let (n, m) = (x.n(), y.n());
    if prev.entries.shape() != (n, m) {
        return Err(Error::DimensionMismatch(format!(
            "cost is {}x{}, chains have {n} and {m} states",
            prev.entries.rows(),
            prev.entries.cols()
        )));
    }
    let (kx, ky) = (x.kernel(), y.kernel());
    let supp_x: Vec<Vec<usize>> = (0..n).map(|i| support(kx.row(i))).collect();
    let supp_y: Vec<Vec<usize>> = (0..m).map(|j| support(ky.row(j))).collect();
    let c = &prev.entries;
    let row = |i: usize| -> Result<Vec<f64>> {
        (0..m)
            .map(|j| transport_cost(c, kx.row(i), ky.row(j), &supp_x[i], &supp_y[j]).map(|v| v.max(0.0)))
            .collect()
    };
    let rows = map_rows(n, row)?;
    let mut entries = Matrix::zeros(n, m);
    for (i, r) in rows.into_iter().enumerate() {
        entries.row_mut(i).copy_from_slice(&r);
    }
    Ok(CostMatrix { entries, depth: prev.depth + 1 })
}

#[cfg(feature = "parallel")]
pub(crate) fn map_rows<T: Send>(n: usize, f: impl Fn(usize) -> Result<T> + Sync) -> Result<Vec<T>> {
    use rayon::prelude::*;
    (0..n).into_par_iter().map(&f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_rows<T>(n: usize, f: impl Fn(usize) -> Result<T>) -> Result<Vec<T>> {
    (0..n).map(f).collect()
}

/// Cost matrix after `k` lifts of the depth-0 label distances.
pub fn wl_cost_matrix(x: &Lmmc, y: &Lmmc, k: usize) -> Result<CostMatrix> {
    let mut cost = cost_matrix_depth0(x, y)?;
    for _ in 0..k {
        cost = lift_cost(&cost, x, y)?;
    }
    Ok(cost)
}

/// WL distance of depth `k`.
///
/// At `k = 0` this is the Wasserstein distance between the global label
/// distributions.
pub fn wl_distance(x: &Lmmc, y: &Lmmc, k: usize) -> Result<f64> {
    let cost = wl_cost_matrix(x, y, k)?;
    outer(&cost.entries, x, y)
}

fn outer(cost: &Matrix, x: &Lmmc, y: &Lmmc) -> Result<f64> {
    Ok(ot_value(cost, x.stationary().as_slice(), y.stationary().as_slice())?.max(0.0))
}

/// First depth at which the WL distance exceeds the zero threshold.
///
/// Returns `(value, depth)`. When every depth up to `|X| + |Y|` stays at or
/// below the threshold, returns the last value with depth `|X| + |Y|`. The
/// cut-off is only guaranteed sufficient for relabeled graph-induced chains;
/// for other chains it is a heuristic.
pub fn wl_distance_sup(x: &Lmmc, y: &Lmmc) -> Result<(f64, usize)> {
    let max_depth = x.n() + y.n();
    let mut cost = cost_matrix_depth0(x, y)?;
    let mut value = 0.0;
    for depth in 0..=max_depth {
        value = outer(&cost.entries, x, y)?;
        if value > ZERO_THRESHOLD {
            return Ok((value, depth));
        }
        if depth < max_depth {
            cost = lift_cost(&cost, x, y)?;
        }
    }
    Ok((value, max_depth))
}

/// `k`-th power of a Markov kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct KStepKernel {
    matrix: Matrix,
    k: usize,
}

impl KStepKernel {
    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.matrix.row(i)
    }

    pub fn into_kernel(self) -> MarkovKernel {
        MarkovKernel::from_matrix_unchecked(self.matrix)
    }
}

/// Kernel power by repeated squaring, `O(n³ log k)`.
pub fn kstep_kernel(kernel: &MarkovKernel, k: usize) -> Result<KStepKernel> {
    if k == 0 {
        return Err(Error::InvalidValue("k-step kernel needs k >= 1".into()));
    }
    let mut base = kernel.matrix().clone();
    let mut acc: Option<Matrix> = None;
    let mut e = k;
    loop {
        if e & 1 == 1 {
            acc = Some(match acc {
                None => base.clone(),
                Some(a) => a.matmul(&base)?,
            });
        }
        e >>= 1;
        if e == 0 {
            break;
        }
        base = base.matmul(&base)?;
    }
    let mut matrix = acc.expect("k >= 1");
    // Renormalise rows to keep round-off from accumulating.
    for i in 0..matrix.rows() {
        let r = matrix.row_mut(i);
        let s: f64 = r.iter().sum();
        for v in r.iter_mut() {
            *v = v.max(0.0) / s;
        }
    }
    Ok(KStepKernel { matrix, k })
}

/// Lower bound on the depth-`k` WL distance from `k`-step kernels.
///
/// Ground cost between `x_i` and `y_j` is the Wasserstein distance between the
/// label pushforwards of the `k`-step transition laws. One-dimensional labels
/// use the sorted closed form; higher dimensions solve an OT problem per pair.
pub fn wllb_distance(x: &Lmmc, y: &Lmmc, k: usize) -> Result<f64> {
    let (lx, ly) = (x.labels(), y.labels());
    if lx.dim() != ly.dim() {
        return Err(Error::LabelDimMismatch(lx.dim(), ly.dim()));
    }
    let px = kstep_kernel(x.kernel(), k)?;
    let py = kstep_kernel(y.kernel(), k)?;
    let (n, m) = (x.n(), y.n());
    let rows = if lx.dim() == 1 {
        let vx = lx.matrix().as_slice();
        let vy = ly.matrix().as_slice();
        let ax: Vec<Vec<(f64, f64)>> = (0..n).map(|i| sorted_atoms(vx, px.row(i))).collect();
        let ay: Vec<Vec<(f64, f64)>> = (0..m).map(|j| sorted_atoms(vy, py.row(j))).collect();
        map_rows(n, |i| Ok((0..m).map(|j| w1_sorted(&ax[i], &ay[j])).collect::<Vec<_>>()))?
    } else {
        let ground = cost_matrix_depth0(x, y)?.entries;
        let sx: Vec<Vec<usize>> = (0..n).map(|i| support(px.row(i))).collect();
        let sy: Vec<Vec<usize>> = (0..m).map(|j| support(py.row(j))).collect();
        map_rows(n, |i| {
            (0..m)
                .map(|j| transport_cost(&ground, px.row(i), py.row(j), &sx[i], &sy[j]).map(|v| v.max(0.0)))
                .collect::<Result<Vec<_>>>()
        })?
    };
    let mut cost = Matrix::zeros(n, m);
    for (i, r) in rows.into_iter().enumerate() {
        cost.row_mut(i).copy_from_slice(&r);
    }
    outer(&cost, x, y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{validate_lmmc, LabelMatrix, ProbVec};
    use crate::ot::lp_vertex_oracle;
    use alloc::vec;

    fn swap(labels: [f64; 2]) -> Lmmc {
        let k = Matrix::from_rows(&[[0.0, 1.0], [1.0, 0.0]]).unwrap();
        validate_lmmc(k, vec![0.5, 0.5], Matrix::from_rows(&[[labels[0]], [labels[1]]]).unwrap()).unwrap()
    }

    fn lazy(labels: [f64; 2]) -> Lmmc {
        let k = Matrix::from_rows(&[[0.5, 0.5], [0.5, 0.5]]).unwrap();
        validate_lmmc(k, vec![0.5, 0.5], Matrix::from_rows(&[[labels[0]], [labels[1]]]).unwrap()).unwrap()
    }

    #[test]
    fn depth0_euclidean() {
        let one = |l: &[f64]| {
            Lmmc::new(
                MarkovKernel::new(Matrix::identity(1)).unwrap(),
                ProbVec::uniform(1),
                LabelMatrix::new(Matrix::from_rows(&[l]).unwrap()).unwrap(),
            )
            .unwrap()
        };
        let x = one(&[0.0]);
        let y = one(&[3.0]);
        assert_eq!(cost_matrix_depth0(&x, &y).unwrap().entries()[(0, 0)], 3.0);

        let k = Matrix::identity(2);
        let x = validate_lmmc(k, vec![0.5, 0.5], Matrix::from_rows(&[[0.0, 0.0], [1.0, 0.0]]).unwrap()).unwrap();
        let y = one(&[0.0, 1.0]);
        let c = cost_matrix_depth0(&x, &y).unwrap();
        assert_eq!(c.entries()[(0, 0)], 1.0);
        assert!((c.entries()[(1, 0)] - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(cost_matrix_depth0(&x, &one(&[0.0])), Err(Error::LabelDimMismatch(2, 1)));
    }

    #[test]
    fn lift_of_zero_is_zero() {
        let (x, y) = (swap([0.0, 1.0]), lazy([2.0, 5.0]));
        let zero = CostMatrix::new(Matrix::zeros(2, 2), 3).unwrap();
        let lifted = lift_cost(&zero, &x, &y).unwrap();
        assert_eq!(lifted.entries(), &Matrix::zeros(2, 2));
        assert_eq!(lifted.depth(), 4);
    }

    #[test]
    fn lift_matches_oracle_per_pair() {
        let (x, y) = (swap([0.0, 1.0]), lazy([0.0, 1.0]));
        let prev = CostMatrix::new(Matrix::from_rows(&[[0.3, 1.7], [2.2, 0.4]]).unwrap(), 0).unwrap();
        let lifted = lift_cost(&prev, &x, &y).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let o = lp_vertex_oracle(prev.entries(), x.kernel().row(i), y.kernel().row(j)).unwrap();
                assert!((lifted.entries()[(i, j)] - o).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn self_distance_is_zero() {
        let x = swap([0.0, 1.0]);
        for k in 0..4 {
            assert_eq!(wl_distance(&x, &x, k).unwrap(), 0.0);
        }
    }

    #[test]
    fn kstep_small_cases() {
        let p = MarkovKernel::new(Matrix::from_rows(&[[0.0, 1.0], [1.0, 0.0]]).unwrap()).unwrap();
        assert_eq!(kstep_kernel(&p, 1).unwrap().matrix(), p.matrix());
        assert_eq!(kstep_kernel(&p, 2).unwrap().matrix(), &Matrix::identity(2));
        assert!(kstep_kernel(&p, 0).is_err());
    }

    #[test]
    fn wllb_k1_matches_wl_on_swap_vs_lazy() {
        let (x, y) = (swap([0.0, 1.0]), lazy([0.0, 2.0]));
        let a = wllb_distance(&x, &y, 1).unwrap();
        let b = wl_distance(&x, &y, 1).unwrap();
        assert!((a - b).abs() < 1e-12, "{a} vs {b}");
    }

    #[test]
    fn sup_returns_first_positive_depth() {
        let (x, y) = (swap([0.0, 1.0]), swap([0.0, 2.0]));
        assert_eq!(wl_distance_sup(&x, &y).unwrap(), (0.5, 0));
        let x = swap([0.0, 1.0]);
        assert_eq!(wl_distance_sup(&x, &x).unwrap(), (0.0, 4));
    }
}
