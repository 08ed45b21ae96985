//! Forward evaluation of Markov chain neural networks.
//!
//! A network of depth `k` relabels a chain `k` times, each time replacing the
//! label of a state by the average of `φ_i` over the labels reachable in one
//! step, then averages `φ_{k+1}` under the stationary law and applies the
//! readout `ψ`.

use alloc::boxed::Box;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::chain::{LabelMatrix, Lmmc};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Activation {
    Identity,
    Abs,
    Relu,
}

impl Activation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Identity => x,
            Activation::Abs => x.abs(),
            Activation::Relu => x.max(0.0),
        }
    }
}

/// `x ↦ σ(Wx + b)` with a 1-Lipschitz activation chosen per output.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "LipschitzMapFields"))]
pub struct LipschitzMap {
    weights: Matrix,
    bias: Vec<f64>,
    activations: Vec<Activation>,
}

#[cfg(feature = "serde")]
#[derive(serde::Deserialize)]
struct LipschitzMapFields {
    weights: Matrix,
    bias: Vec<f64>,
    activations: Vec<Activation>,
}

#[cfg(feature = "serde")]
impl TryFrom<LipschitzMapFields> for LipschitzMap {
    type Error = Error;

    fn try_from(f: LipschitzMapFields) -> Result<Self> {
        Self::new(f.weights, f.bias, f.activations)
    }
}

impl LipschitzMap {
    pub fn new(weights: Matrix, bias: Vec<f64>, activations: Vec<Activation>) -> Result<Self> {
        let out = weights.rows();
        if out == 0 || weights.cols() == 0 {
            return Err(Error::DimensionMismatch("layer has an empty weight matrix".into()));
        }
        if bias.len() != out || activations.len() != out {
            return Err(Error::DimensionMismatch(format!(
                "{out} outputs but {} biases and {} activations",
                bias.len(),
                activations.len()
            )));
        }
        if weights.as_slice().iter().chain(&bias).any(|v| !v.is_finite()) {
            return Err(Error::InvalidValue("non-finite layer parameter".into()));
        }
        Ok(Self { weights, bias, activations })
    }

    /// Affine map followed by the same activation on every output.
    pub fn affine(weights: Matrix, bias: Vec<f64>, activation: Activation) -> Result<Self> {
        let out = weights.rows();
        Self::new(weights, bias, vec![activation; out])
    }

    pub fn identity(dim: usize) -> Self {
        Self::affine(Matrix::identity(dim), vec![0.0; dim], Activation::Identity).expect("dim >= 1")
    }

    pub fn input_dim(&self) -> usize {
        self.weights.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.weights.rows()
    }

    pub fn weights(&self) -> &Matrix {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn activations(&self) -> &[Activation] {
        &self.activations
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.weights
            .iter_rows()
            .zip(&self.bias)
            .zip(&self.activations)
            .map(|((w, b), act)| act.apply(w.iter().zip(x).map(|(a, v)| a * v).sum::<f64>() + b))
            .collect()
    }

    /// Upper bound on the Euclidean Lipschitz constant:
    /// `min(‖W‖_F, sqrt(‖W‖₁ ‖W‖∞))`, both of which dominate the spectral norm.
    pub fn lipschitz_bound(&self) -> f64 {
        let w = &self.weights;
        let frobenius = libm::sqrt(w.as_slice().iter().map(|v| v * v).sum());
        let max_row = w.iter_rows().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
        let max_col = (0..w.cols()).map(|j| (0..w.rows()).map(|i| w[(i, j)].abs()).sum::<f64>()).fold(0.0, f64::max);
        frobenius.min(libm::sqrt(max_row * max_col))
    }
}

/// Readout `ψ`: a small expression over the final feature vector.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Readout {
    /// `w·v + b`.
    Affine { weights: Vec<f64>, bias: f64 },
    /// Coordinate `i`.
    Project(usize),
    Constant(f64),
    /// `inner` applied to `v[start..start + len]`.
    Slice { start: usize, len: usize, inner: Box<Readout> },
    Sum(Box<Readout>, Box<Readout>),
    Product(Box<Readout>, Box<Readout>),
}

impl Readout {
    /// Smallest input length the expression can be evaluated on.
    pub fn min_input_dim(&self) -> usize {
        match self {
            Readout::Affine { weights, .. } => weights.len(),
            Readout::Project(i) => i + 1,
            Readout::Constant(_) => 0,
            Readout::Slice { start, len, .. } => start + len,
            Readout::Sum(a, b) | Readout::Product(a, b) => a.min_input_dim().max(b.min_input_dim()),
        }
    }

    fn check(&self) -> Result<()> {
        match self {
            Readout::Slice { len, inner, .. } if inner.min_input_dim() > *len => Err(Error::DimensionMismatch(
                format!("slice of length {len} feeds a readout needing {}", inner.min_input_dim()),
            )),
            Readout::Slice { inner, .. } => inner.check(),
            Readout::Sum(a, b) | Readout::Product(a, b) => {
                a.check()?;
                b.check()
            }
            _ => Ok(()),
        }
    }

    pub fn eval(&self, v: &[f64]) -> f64 {
        match self {
            Readout::Affine { weights, bias } => weights.iter().zip(v).map(|(w, x)| w * x).sum::<f64>() + bias,
            Readout::Project(i) => v[*i],
            Readout::Constant(c) => *c,
            Readout::Slice { start, len, inner } => inner.eval(&v[*start..start + len]),
            Readout::Sum(a, b) => a.eval(v) + b.eval(v),
            Readout::Product(a, b) => a.eval(v) * b.eval(v),
        }
    }
}

/// `ψ ∘ S_{φ_{k+1}} ∘ F_{φ_k} ∘ … ∘ F_{φ_1}`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "McnnSpecFields"))]
pub struct McnnSpec {
    layers: Vec<LipschitzMap>,
    readout_phi: LipschitzMap,
    readout_psi: Readout,
}

#[cfg(feature = "serde")]
#[derive(serde::Deserialize)]
struct McnnSpecFields {
    layers: Vec<LipschitzMap>,
    readout_phi: LipschitzMap,
    readout_psi: Readout,
}

#[cfg(feature = "serde")]
impl TryFrom<McnnSpecFields> for McnnSpec {
    type Error = Error;

    fn try_from(f: McnnSpecFields) -> Result<Self> {
        Self::new(f.layers, f.readout_phi, f.readout_psi)
    }
}

impl McnnSpec {
    pub fn new(layers: Vec<LipschitzMap>, readout_phi: LipschitzMap, readout_psi: Readout) -> Result<Self> {
        for (i, pair) in layers.windows(2).enumerate() {
            if pair[0].output_dim() != pair[1].input_dim() {
                return Err(Error::DimensionMismatch(format!(
                    "layer {i} outputs {} values, layer {} expects {}",
                    pair[0].output_dim(),
                    i + 1,
                    pair[1].input_dim()
                )));
            }
        }
        if let Some(last) = layers.last() {
            if last.output_dim() != readout_phi.input_dim() {
                return Err(Error::DimensionMismatch(format!(
                    "last layer outputs {} values, readout expects {}",
                    last.output_dim(),
                    readout_phi.input_dim()
                )));
            }
        }
        readout_psi.check()?;
        if readout_psi.min_input_dim() > readout_phi.output_dim() {
            return Err(Error::DimensionMismatch(format!(
                "readout needs {} features, pooling gives {}",
                readout_psi.min_input_dim(),
                readout_phi.output_dim()
            )));
        }
        Ok(Self { layers, readout_phi, readout_psi })
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn input_dim(&self) -> usize {
        self.layers.first().unwrap_or(&self.readout_phi).input_dim()
    }

    pub fn layers(&self) -> &[LipschitzMap] {
        &self.layers
    }

    pub fn readout_phi(&self) -> &LipschitzMap {
        &self.readout_phi
    }

    pub fn readout_psi(&self) -> &Readout {
        &self.readout_psi
    }

    /// Product of the bounds of `φ_1..φ_k`.
    pub fn layer_lipschitz_product(&self) -> f64 {
        self.layers.iter().map(LipschitzMap::lipschitz_bound).product()
    }
}

/// `Σ_i weights[i] φ(points[i])`.
pub fn q_phi(phi: &LipschitzMap, weights: &[f64], points: &LabelMatrix) -> Result<Vec<f64>> {
    if phi.input_dim() != points.dim() {
        return Err(Error::DimensionMismatch(format!(
            "map takes {} inputs, labels have dimension {}",
            phi.input_dim(),
            points.dim()
        )));
    }
    if weights.len() != points.n() {
        return Err(Error::DimensionMismatch(format!("{} weights for {} points", weights.len(), points.n())));
    }
    let mut out = vec![0.0; phi.output_dim()];
    for (i, &w) in weights.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        for (o, v) in out.iter_mut().zip(phi.apply(points.row(i))) {
            *o += w * v;
        }
    }
    Ok(out)
}

/// Relabels state `v` by `q_φ` of its one-step label law.
pub fn apply_f(phi: &LipschitzMap, x: &Lmmc) -> Result<Lmmc> {
    if phi.input_dim() != x.labels().dim() {
        return Err(Error::DimensionMismatch(format!(
            "map takes {} inputs, labels have dimension {}",
            phi.input_dim(),
            x.labels().dim()
        )));
    }
    // Apply φ once per state, then average with the kernel rows.
    let mapped: Vec<Vec<f64>> = (0..x.n()).map(|v| phi.apply(x.labels().row(v))).collect();
    let d = phi.output_dim();
    let labels = Matrix::from_fn(x.n(), d, |v, c| {
        x.kernel().row(v).iter().zip(&mapped).map(|(w, m)| w * m[c]).sum()
    });
    x.with_labels(LabelMatrix::new(labels)?)
}

pub fn mcnn_forward(spec: &McnnSpec, x: &Lmmc) -> Result<f64> {
    let mut cur = x.clone();
    for layer in &spec.layers {
        cur = apply_f(layer, &cur)?;
    }
    let pooled = q_phi(&spec.readout_phi, cur.stationary().as_slice(), cur.labels())?;
    Ok(spec.readout_psi.eval(&pooled))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Combine {
    Sum,
    Product,
}

/// One network computing `a(x) + b(x)` or `a(x) · b(x)`.
///
/// The first layers are stacked on the shared input, later layers and the
/// pooling maps are placed block-diagonally, and the readout evaluates each
/// half on its own slice of the pooled features.
pub fn combine(a: &McnnSpec, b: &McnnSpec, how: Combine) -> Result<McnnSpec> {
    if a.depth() != b.depth() {
        return Err(Error::DimensionMismatch(format!("depths {} and {} differ", a.depth(), b.depth())));
    }
    if a.input_dim() != b.input_dim() {
        return Err(Error::DimensionMismatch(format!(
            "input dimensions {} and {} differ",
            a.input_dim(),
            b.input_dim()
        )));
    }
    let mut layers = Vec::with_capacity(a.depth());
    for (i, (la, lb)) in a.layers.iter().zip(&b.layers).enumerate() {
        layers.push(if i == 0 { stack(la, lb) } else { block_diagonal(la, lb) });
    }
    let readout_phi =
        if a.depth() == 0 { stack(&a.readout_phi, &b.readout_phi) } else { block_diagonal(&a.readout_phi, &b.readout_phi) };
    let (da, db) = (a.readout_phi.output_dim(), b.readout_phi.output_dim());
    let left = Box::new(Readout::Slice { start: 0, len: da, inner: Box::new(a.readout_psi.clone()) });
    let right = Box::new(Readout::Slice { start: da, len: db, inner: Box::new(b.readout_psi.clone()) });
    let psi = match how {
        Combine::Sum => Readout::Sum(left, right),
        Combine::Product => Readout::Product(left, right),
    };
    McnnSpec::new(layers, readout_phi, psi)
}

/// `x ↦ (f(x), g(x))` on a shared input.
fn stack(f: &LipschitzMap, g: &LipschitzMap) -> LipschitzMap {
    let (fo, go, d) = (f.output_dim(), g.output_dim(), f.input_dim());
    let weights = Matrix::from_fn(fo + go, d, |i, j| if i < fo { f.weights[(i, j)] } else { g.weights[(i - fo, j)] });
    LipschitzMap {
        weights,
        bias: f.bias.iter().chain(&g.bias).copied().collect(),
        activations: f.activations.iter().chain(&g.activations).copied().collect(),
    }
}

/// `(x, y) ↦ (f(x), g(y))`.
fn block_diagonal(f: &LipschitzMap, g: &LipschitzMap) -> LipschitzMap {
    let (fo, fi) = f.weights.shape();
    let (go, gi) = g.weights.shape();
    let weights = Matrix::from_fn(fo + go, fi + gi, |i, j| match (i < fo, j < fi) {
        (true, true) => f.weights[(i, j)],
        (false, false) => g.weights[(i - fo, j - fi)],
        _ => 0.0,
    });
    LipschitzMap {
        weights,
        bias: f.bias.iter().chain(&g.bias).copied().collect(),
        activations: f.activations.iter().chain(&g.activations).copied().collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::validate_lmmc;

    fn swap_chain() -> Lmmc {
        let k = Matrix::from_rows(&[[0.0, 1.0], [1.0, 0.0]]).unwrap();
        validate_lmmc(k, vec![0.5, 0.5], Matrix::from_rows(&[[0.0], [1.0]]).unwrap()).unwrap()
    }

    #[test]
    fn q_phi_identity() {
        let id = LipschitzMap::identity(1);
        let pts = LabelMatrix::from_column(&[0.0, 2.0]).unwrap();
        assert_eq!(q_phi(&id, &[1.0, 0.0], &pts).unwrap(), vec![0.0]);
        assert_eq!(q_phi(&id, &[0.5, 0.5], &pts).unwrap(), vec![1.0]);
        assert!(q_phi(&LipschitzMap::identity(2), &[0.5, 0.5], &pts).is_err());
    }

    #[test]
    fn apply_f_swaps_labels() {
        let y = apply_f(&LipschitzMap::identity(1), &swap_chain()).unwrap();
        assert_eq!(y.labels().matrix().as_slice(), &[1.0, 0.0]);
    }

    #[test]
    fn constant_readout() {
        let spec = McnnSpec::new(
            vec![LipschitzMap::affine(Matrix::from_rows(&[[2.0], [-1.0]]).unwrap(), vec![0.1, 0.2], Activation::Relu).unwrap()],
            LipschitzMap::identity(2),
            Readout::Constant(1.0),
        )
        .unwrap();
        assert_eq!(mcnn_forward(&spec, &swap_chain()).unwrap(), 1.0);
    }

    #[test]
    fn depth_zero_gives_mean_label() {
        let spec = McnnSpec::new(vec![], LipschitzMap::identity(1), Readout::Project(0)).unwrap();
        assert_eq!(mcnn_forward(&spec, &swap_chain()).unwrap(), 0.5);
    }

    #[test]
    fn lipschitz_bound_of_diagonal() {
        let m = LipschitzMap::affine(Matrix::from_rows(&[[3.0, 0.0], [0.0, -4.0]]).unwrap(), vec![0.0; 2], Activation::Abs)
            .unwrap();
        assert_eq!(m.lipschitz_bound(), 4.0);
    }

    #[test]
    fn mismatched_layers_rejected() {
        let r = McnnSpec::new(vec![LipschitzMap::identity(2)], LipschitzMap::identity(1), Readout::Project(0));
        assert!(matches!(r, Err(Error::DimensionMismatch(_))));
        let r = McnnSpec::new(vec![], LipschitzMap::identity(1), Readout::Project(1));
        assert!(matches!(r, Err(Error::DimensionMismatch(_))));
    }
}
