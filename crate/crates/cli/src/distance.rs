//! Pairwise distances between graphs and whole-dataset distance matrices.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use wlmetric_core::graph::{graph_to_lmmc, relabel, wwl_hat_distance, LabeledGraph, RelabelScheme};
use wlmetric_core::wl::{wl_distance, wllb_distance};
use wlmetric_core::{Lmmc, Matrix};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Depth-k WL distance.
    Wl,
    /// k-step kernel lower bound.
    Wllb,
    /// Stacked averaging labels under degree-proportional weights.
    Wwl,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelScheme {
    /// Labels as loaded.
    Raw,
    Degree,
    /// `deg(v) + 1/|V|`.
    F2,
    /// `(ℓ(v), deg(v), 1/|V|)`.
    G,
}

impl LabelScheme {
    pub fn apply(self, g: &LabeledGraph) -> LabeledGraph {
        match self {
            LabelScheme::Raw => g.clone(),
            LabelScheme::Degree => g.with_degree_labels(),
            LabelScheme::F2 => relabel(g, RelabelScheme::ScalarF2),
            LabelScheme::G => relabel(g, RelabelScheme::VectorG),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceParams {
    pub method: Method,
    pub k: usize,
    /// Laziness of the graph walk; the stacked-label method ignores it.
    pub q: f64,
    pub labels: LabelScheme,
}

impl DistanceParams {
    pub fn new(method: Method, k: usize, q: f64, labels: LabelScheme) -> Result<Self> {
        if !(0.0..=1.0).contains(&q) {
            return Err(HarnessError::InvalidArgument(format!("q = {q} is outside [0, 1]")));
        }
        if method == Method::Wllb && k == 0 {
            return Err(HarnessError::InvalidArgument("the k-step bound needs k >= 1".into()));
        }
        Ok(Self { method, k, q, labels })
    }

    /// `wl_2`, `wllb_1`, `wwl_hat_3`, ...
    pub fn tag(&self) -> String {
        match self.method {
            Method::Wl => format!("wl_{}", self.k),
            Method::Wllb => format!("wllb_{}", self.k),
            Method::Wwl => format!("wwl_hat_{}", self.k),
        }
    }
}

/// A graph prepared once for repeated comparisons.
enum Prepared {
    Chain(Lmmc),
    Graph(LabeledGraph),
}

fn prepare(g: &LabeledGraph, p: &DistanceParams) -> wlmetric_core::Result<Prepared> {
    let g = p.labels.apply(g);
    Ok(match p.method {
        Method::Wwl => Prepared::Graph(g),
        Method::Wl | Method::Wllb => Prepared::Chain(graph_to_lmmc(&g, p.q)?),
    })
}

fn prepared_distance(a: &Prepared, b: &Prepared, p: &DistanceParams) -> wlmetric_core::Result<f64> {
    match (a, b) {
        (Prepared::Chain(x), Prepared::Chain(y)) => match p.method {
            Method::Wllb => wllb_distance(x, y, p.k),
            _ => wl_distance(x, y, p.k),
        },
        (Prepared::Graph(x), Prepared::Graph(y)) => wwl_hat_distance(x, y, p.k),
        _ => unreachable!("both sides are prepared with the same method"),
    }
}

pub fn graph_distance(a: &LabeledGraph, b: &LabeledGraph, p: &DistanceParams) -> Result<f64> {
    Ok(prepared_distance(&prepare(a, p)?, &prepare(b, p)?, p)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixMeta {
    pub tag: String,
    #[serde(flatten)]
    pub params: DistanceParams,
    pub size: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset: Option<String>,
}

/// Symmetric, nonnegative, zero-diagonal matrix of pairwise distances.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    entries: Matrix,
    meta: Option<MatrixMeta>,
}

pub const SYMMETRY_TOL: f64 = 1e-9;

impl DistanceMatrix {
    /// Checks the matrix invariants; used for matrices read back from disk.
    pub fn from_entries(entries: Matrix, meta: Option<MatrixMeta>) -> Result<Self> {
        let n = entries.rows();
        if entries.cols() != n {
            return Err(HarnessError::InvalidArgument(format!("{}x{} matrix is not square", n, entries.cols())));
        }
        for i in 0..n {
            if entries[(i, i)].abs() > SYMMETRY_TOL {
                return Err(HarnessError::InvalidArgument(format!("diagonal entry {i} is {}", entries[(i, i)])));
            }
            for j in 0..n {
                let v = entries[(i, j)];
                if !v.is_finite() || v < 0.0 {
                    return Err(HarnessError::InvalidArgument(format!("entry ({i}, {j}) is {v}")));
                }
                if (v - entries[(j, i)]).abs() > SYMMETRY_TOL {
                    return Err(HarnessError::InvalidArgument(format!("entries ({i}, {j}) and ({j}, {i}) differ")));
                }
            }
        }
        Ok(Self { entries, meta })
    }

    pub fn entries(&self) -> &Matrix {
        &self.entries
    }

    pub fn meta(&self) -> Option<&MatrixMeta> {
        self.meta.as_ref()
    }

    pub fn len(&self) -> usize {
        self.entries.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.rows() == 0
    }

    pub fn into_entries(self) -> Matrix {
        self.entries
    }
}

/// All pairwise distances of `graphs`.
///
/// The upper triangle is computed in parallel on a pool of `jobs` threads
/// (all cores when `None`) and mirrored. Each value depends only on its pair,
/// so the result is the same under any schedule. The first failing pair in
/// row-major order is reported.
pub fn distance_matrix(graphs: &[LabeledGraph], p: &DistanceParams, jobs: Option<usize>) -> Result<DistanceMatrix> {
    let n = graphs.len();
    let run = || -> Result<Matrix> {
        let prepared: Vec<Prepared> = graphs
            .par_iter()
            .enumerate()
            .map(|(i, g)| prepare(g, p).map_err(|e| HarnessError::Pair(i, i, e)))
            .collect::<Result<_>>()?;
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        let values: Vec<wlmetric_core::Result<f64>> =
            pairs.par_iter().map(|&(i, j)| prepared_distance(&prepared[i], &prepared[j], p)).collect();
        let mut m = Matrix::zeros(n, n);
        for (&(i, j), v) in pairs.iter().zip(values) {
            let v = v.map_err(|e| HarnessError::Pair(i, j, e))?;
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
        Ok(m)
    };
    let entries = match jobs {
        None => run()?,
        Some(0) => return Err(HarnessError::InvalidArgument("--jobs must be at least 1".into())),
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| HarnessError::InvalidArgument(e.to_string()))?
            .install(run)?,
    };
    let meta = MatrixMeta { tag: p.tag(), params: *p, size: n, dataset: None };
    DistanceMatrix::from_entries(entries, Some(meta))
}
