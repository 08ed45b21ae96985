//! Probability vectors, Markov kernels and the two chain types built from them.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::{PROB_TOL, STATIONARY_TOL};

/// Residual required of [`stationary_of`].
pub const STATIONARY_ITERATION_TOL: f64 = 1e-10;

/// Default iteration cap of [`stationary_of`].
pub const STATIONARY_MAX_ITERATIONS: usize = 1_000_000;

fn check_probability(weights: &[f64]) -> core::result::Result<(), f64> {
    let mut sum = 0.0;
    for &w in weights {
        if !w.is_finite() || w < 0.0 {
            return Err(f64::NAN);
        }
        sum += w;
    }
    if (sum - 1.0).abs() > PROB_TOL {
        return Err(sum);
    }
    Ok(())
}

/// Nonnegative weights summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbVec(Vec<f64>);

impl ProbVec {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::EmptyDistribution);
        }
        check_probability(&weights)
            .map_err(|sum| Error::NotProbability(format!("entries {weights:?} (sum {sum})")))?;
        Ok(Self(weights))
    }

    pub fn uniform(n: usize) -> Self {
        assert!(n > 0, "uniform distribution on zero points");
        Self(alloc::vec![1.0 / n as f64; n])
    }

    pub fn dirac(n: usize, at: usize) -> Self {
        let mut w = alloc::vec![0.0; n];
        w[at] = 1.0;
        Self(w)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn has_full_support(&self) -> bool {
        self.0.iter().all(|&w| w > 0.0)
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

/// Row-stochastic square matrix; row `i` is the transition law out of state `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovKernel(Matrix);

impl MarkovKernel {
    pub fn new(matrix: Matrix) -> Result<Self> {
        if matrix.rows() != matrix.cols() {
            return Err(Error::ShapeMismatch(format!(
                "kernel is {}x{}, expected square",
                matrix.rows(),
                matrix.cols()
            )));
        }
        if matrix.rows() == 0 {
            return Err(Error::ShapeMismatch("kernel has no states".into()));
        }
        for (row, r) in matrix.iter_rows().enumerate() {
            check_probability(r).map_err(|sum| Error::NonStochasticRow { row, sum })?;
        }
        Ok(Self(matrix))
    }

    /// Constant kernel: every row equals `measure`.
    pub fn constant(measure: &ProbVec) -> Self {
        let n = measure.len();
        Self(Matrix::from_fn(n, n, |_, j| measure.as_slice()[j]))
    }

    pub(crate) fn from_matrix_unchecked(matrix: Matrix) -> Self {
        Self(matrix)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.0.rows()
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        self.0.row(i)
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    /// `‖μᵀM − μᵀ‖∞`.
    pub fn stationarity_residual(&self, mu: &[f64]) -> f64 {
        let pushed = self.0.left_mul(mu);
        pushed.iter().zip(mu).fold(0.0, |acc, (a, b)| acc.max((a - b).abs()))
    }
}

/// Per-state labels: row `i` is the label of state `i`, a point of `R^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelMatrix(Matrix);

impl LabelMatrix {
    pub fn new(matrix: Matrix) -> Result<Self> {
        if matrix.cols() == 0 {
            return Err(Error::ShapeMismatch("labels need dimension >= 1".into()));
        }
        if let Some(v) = matrix.as_slice().iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidValue(format!("non-finite label {v}")));
        }
        Ok(Self(matrix))
    }

    /// One-dimensional labels.
    pub fn from_column(values: &[f64]) -> Result<Self> {
        Self::new(Matrix::from_vec(values.len(), 1, values.to_vec())?)
    }

    pub fn constant(n: usize, value: f64) -> Self {
        Self(Matrix::from_fn(n, 1, |_, _| value))
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.0.rows()
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.0.cols()
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        self.0.row(i)
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    /// Euclidean distance between label `i` of `self` and label `j` of `other`.
    pub fn distance(&self, i: usize, other: &LabelMatrix, j: usize) -> f64 {
        euclidean(self.row(i), other.row(j))
    }
}

pub(crate) fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    if a.len() == 1 {
        return (a[0] - b[0]).abs();
    }
    libm::sqrt(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum())
}

/// Labeled measure Markov chain: kernel, fully supported stationary law, labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Lmmc {
    kernel: MarkovKernel,
    stationary: ProbVec,
    labels: LabelMatrix,
}

impl Lmmc {
    pub fn new(kernel: MarkovKernel, stationary: ProbVec, labels: LabelMatrix) -> Result<Self> {
        let n = kernel.n();
        if stationary.len() != n || labels.n() != n {
            return Err(Error::ShapeMismatch(format!(
                "kernel has {n} states, stationary {} entries, labels {} rows",
                stationary.len(),
                labels.n()
            )));
        }
        check_measure(&kernel, &stationary)?;
        Ok(Self { kernel, stationary, labels })
    }

    pub(crate) fn from_parts_unchecked(kernel: MarkovKernel, stationary: ProbVec, labels: LabelMatrix) -> Self {
        Self { kernel, stationary, labels }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.kernel.n()
    }

    pub fn kernel(&self) -> &MarkovKernel {
        &self.kernel
    }

    pub fn stationary(&self) -> &ProbVec {
        &self.stationary
    }

    pub fn labels(&self) -> &LabelMatrix {
        &self.labels
    }

    /// Same chain with new labels.
    pub fn with_labels(&self, labels: LabelMatrix) -> Result<Self> {
        if labels.n() != self.n() {
            return Err(Error::ShapeMismatch(format!("{} labels for {} states", labels.n(), self.n())));
        }
        Ok(Self { kernel: self.kernel.clone(), stationary: self.stationary.clone(), labels })
    }

    /// Isomorphic copy whose state `i` is state `perm[i]` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let n = self.n();
        check_permutation(perm, n)?;
        let kernel = MarkovKernel(self.kernel.matrix().permute(perm));
        let stationary = ProbVec(perm.iter().map(|&p| self.stationary.0[p]).collect());
        let labels = LabelMatrix(self.labels.0.select(perm, &(0..self.labels.dim()).collect::<Vec<_>>()));
        Ok(Self { kernel, stationary, labels })
    }
}

fn check_permutation(perm: &[usize], n: usize) -> Result<()> {
    let mut seen = alloc::vec![false; n];
    if perm.len() != n {
        return Err(Error::ShapeMismatch(format!("permutation of length {} for {n} states", perm.len())));
    }
    for &p in perm {
        if p >= n || seen[p] {
            return Err(Error::InvalidValue(format!("{perm:?} is not a permutation")));
        }
        seen[p] = true;
    }
    Ok(())
}

fn check_measure(kernel: &MarkovKernel, stationary: &ProbVec) -> Result<()> {
    if let Some((state, &mass)) = stationary.as_slice().iter().enumerate().find(|(_, &w)| w <= 0.0) {
        return Err(Error::ZeroMass { state, mass });
    }
    let residual = kernel.stationarity_residual(stationary.as_slice());
    if residual > STATIONARY_TOL {
        return Err(Error::NotStationary { residual });
    }
    Ok(())
}

/// Validates raw kernel, stationary and label data into an [`Lmmc`].
pub fn validate_lmmc(kernel: Matrix, stationary: Vec<f64>, labels: Matrix) -> Result<Lmmc> {
    let n = kernel.rows();
    if kernel.cols() != n || stationary.len() != n || labels.rows() != n {
        return Err(Error::ShapeMismatch(format!(
            "kernel {}x{}, stationary {}, labels {} rows",
            kernel.rows(),
            kernel.cols(),
            stationary.len(),
            labels.rows()
        )));
    }
    let kernel = MarkovKernel::new(kernel)?;
    let labels = LabelMatrix::new(labels)?;
    if let Some((state, &mass)) = stationary.iter().enumerate().find(|(_, &w)| w <= 0.0) {
        return Err(Error::ZeroMass { state, mass });
    }
    let stationary = ProbVec::new(stationary)?;
    Lmmc::new(kernel, stationary, labels)
}

/// Output of [`stationary_of`].
#[derive(Debug, Clone, PartialEq)]
pub struct Stationary {
    pub distribution: ProbVec,
    /// `false` when some state carries no mass; such a vector cannot back an [`Lmmc`].
    pub fully_supported: bool,
}

/// Stationary distribution by power iteration on the lazy kernel `(I + M)/2`.
///
/// Entries that end at or below `PROB_TOL` are set to zero and reported
/// through [`Stationary::fully_supported`].
pub fn stationary_of(kernel: &MarkovKernel) -> Result<Stationary> {
    stationary_of_with_limit(kernel, STATIONARY_MAX_ITERATIONS)
}

pub fn stationary_of_with_limit(kernel: &MarkovKernel, max_iterations: usize) -> Result<Stationary> {
    let n = kernel.n();
    let mut mu = alloc::vec![1.0 / n as f64; n];
    let mut residual = f64::INFINITY;
    for it in 0..=max_iterations {
        let pushed = kernel.matrix().left_mul(&mu);
        residual = pushed.iter().zip(&mu).fold(0.0, |acc: f64, (a, b)| acc.max((a - b).abs()));
        if residual <= STATIONARY_ITERATION_TOL {
            // Transient states keep a geometrically vanishing remainder.
            for w in &mut mu {
                if *w <= PROB_TOL {
                    *w = 0.0;
                }
            }
            let total: f64 = mu.iter().sum();
            for w in &mut mu {
                *w /= total;
            }
            let fully_supported = mu.iter().all(|&w| w > 0.0);
            return Ok(Stationary { distribution: ProbVec(mu), fully_supported });
        }
        if it == max_iterations {
            break;
        }
        for (m, p) in mu.iter_mut().zip(&pushed) {
            *m = 0.5 * (*m + p);
        }
        if it % 1024 == 1023 {
            let total: f64 = mu.iter().sum();
            for w in &mut mu {
                *w /= total;
            }
        }
    }
    Err(Error::NoConvergence { residual, iterations: max_iterations })
}

/// Markov chain metric space: a measure Markov chain whose states carry a proper metric.
#[derive(Debug, Clone, PartialEq)]
pub struct Mcms {
    kernel: MarkovKernel,
    stationary: ProbVec,
    metric: Matrix,
}

const METRIC_TOL: f64 = 1e-12;
const EXHAUSTIVE_TRIANGLE_LIMIT: usize = 64;
const SAMPLED_TRIANGLES: usize = 200_000;

impl Mcms {
    pub fn new(kernel: MarkovKernel, stationary: ProbVec, metric: Matrix) -> Result<Self> {
        let n = kernel.n();
        if stationary.len() != n || metric.shape() != (n, n) {
            return Err(Error::ShapeMismatch(format!(
                "kernel has {n} states, stationary {} entries, metric {}x{}",
                stationary.len(),
                metric.rows(),
                metric.cols()
            )));
        }
        check_measure(&kernel, &stationary)?;
        check_metric(&metric)?;
        Ok(Self { kernel, stationary, metric })
    }

    /// Metric measure space seen as a chain with the constant kernel `m_x = μ`.
    pub fn with_constant_kernel(metric: Matrix, measure: ProbVec) -> Result<Self> {
        let kernel = MarkovKernel::constant(&measure);
        Self::new(kernel, measure, metric)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.kernel.n()
    }

    pub fn kernel(&self) -> &MarkovKernel {
        &self.kernel
    }

    pub fn stationary(&self) -> &ProbVec {
        &self.stationary
    }

    pub fn metric(&self) -> &Matrix {
        &self.metric
    }

    /// The labeled chain obtained by forgetting the metric and attaching `labels`.
    pub fn labeled(&self, labels: LabelMatrix) -> Result<Lmmc> {
        if labels.n() != self.n() {
            return Err(Error::ShapeMismatch(format!("{} labels for {} states", labels.n(), self.n())));
        }
        Ok(Lmmc::from_parts_unchecked(self.kernel.clone(), self.stationary.clone(), labels))
    }

    /// Isomorphic copy whose state `i` is state `perm[i]` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        check_permutation(perm, self.n())?;
        Ok(Self {
            kernel: MarkovKernel(self.kernel.matrix().permute(perm)),
            stationary: ProbVec(perm.iter().map(|&p| self.stationary.0[p]).collect()),
            metric: self.metric.permute(perm),
        })
    }
}

fn check_metric(metric: &Matrix) -> Result<()> {
    let n = metric.rows();
    let scale = metric.as_slice().iter().fold(0.0f64, |a, &b| a.max(b.abs())).max(1.0);
    for i in 0..n {
        if metric[(i, i)] != 0.0 {
            return Err(Error::NotAMetric(format!("d({i},{i}) = {}", metric[(i, i)])));
        }
        for j in 0..n {
            let d = metric[(i, j)];
            if !d.is_finite() {
                return Err(Error::NotAMetric(format!("d({i},{j}) is not finite")));
            }
            if i != j && d <= 0.0 {
                return Err(Error::NotAMetric(format!("d({i},{j}) = {d} for distinct points")));
            }
            if (d - metric[(j, i)]).abs() > METRIC_TOL * scale {
                return Err(Error::NotAMetric(format!("d({i},{j}) != d({j},{i})")));
            }
        }
    }
    let violates = |i: usize, j: usize, k: usize| metric[(i, k)] > metric[(i, j)] + metric[(j, k)] + METRIC_TOL * scale;
    if n <= EXHAUSTIVE_TRIANGLE_LIMIT {
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    if violates(i, j, k) {
                        return Err(Error::NotAMetric(format!("triangle inequality fails at ({i},{j},{k})")));
                    }
                }
            }
        }
    } else {
        // SplitMix64 keeps the sampled check deterministic without an RNG dependency.
        let mut state = 0x9E37_79B9_7F4A_7C15u64 ^ n as u64;
        let mut next = || {
            state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
            let mut z = state;
            z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
            ((z ^ (z >> 31)) % n as u64) as usize
        };
        for _ in 0..SAMPLED_TRIANGLES {
            let (i, j, k) = (next(), next(), next());
            if violates(i, j, k) {
                return Err(Error::NotAMetric(format!("triangle inequality fails at ({i},{j},{k})")));
            }
        }
    }
    Ok(())
}
