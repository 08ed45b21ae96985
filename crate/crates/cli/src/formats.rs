//! Edge-list JSON, CSV matrices and class files.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use wlmetric_core::graph::LabeledGraph;
use wlmetric_core::{Error, LabelMatrix, Matrix};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeListGraph {
    pub n: usize,
    pub edges: Vec<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<Vec<f64>>>,
}

impl EdgeListGraph {
    pub fn from_graph(g: &LabeledGraph) -> Self {
        Self {
            n: g.n(),
            edges: g.edges().iter().map(|&(u, v)| [u, v]).collect(),
            labels: Some((0..g.n()).map(|v| g.labels().row(v).to_vec()).collect()),
        }
    }

    /// Validates into a graph; absent labels become the constant 1.
    pub fn into_graph(self) -> wlmetric_core::Result<LabeledGraph> {
        let labels = match self.labels {
            None => LabelMatrix::constant(self.n, 1.0),
            Some(rows) => {
                if rows.len() != self.n {
                    return Err(Error::ShapeMismatch(format!("{} label rows for {} vertices", rows.len(), self.n)));
                }
                let dim = rows.first().map_or(1, Vec::len);
                if rows.iter().any(|r| r.len() != dim) {
                    return Err(Error::ShapeMismatch("label rows differ in length".into()));
                }
                LabelMatrix::new(Matrix::from_vec(self.n, dim, rows.into_iter().flatten().collect())?)?
            }
        };
        let edges: Vec<(usize, usize)> = self.edges.iter().map(|&[u, v]| (u, v)).collect();
        LabeledGraph::new(self.n, &edges, labels)
    }
}

/// Reads `{"n": .., "edges": [[u, v], ..], "labels": [[..], ..]}`.
pub fn load_edgelist_json(path: impl AsRef<Path>) -> Result<LabeledGraph> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    let raw: EdgeListGraph =
        serde_json::from_str(&text).map_err(|e| HarnessError::parse(path, e.line(), e.to_string()))?;
    Ok(raw.into_graph()?)
}

pub fn save_edgelist_json(path: impl AsRef<Path>, g: &LabeledGraph) -> Result<()> {
    let path = path.as_ref();
    let text = serde_json::to_string(&EdgeListGraph::from_graph(g)).expect("plain data serializes");
    fs::write(path, text + "\n").map_err(|e| HarnessError::io(path, e))
}

/// Plain decimal with 17 significant digits, which round-trips every double.
pub fn format_f64(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { "0".into() } else { x.to_string() };
    }
    let sci = format!("{x:.16e}");
    let exp: i32 = sci[sci.find('e').unwrap() + 1..].parse().unwrap();
    let decimals = (16 - exp).max(0) as usize;
    format!("{x:.decimals$}")
}

pub fn matrix_to_csv(m: &Matrix) -> String {
    let mut out = String::new();
    for row in m.iter_rows() {
        for (j, v) in row.iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            write!(out, "{}", format_f64(*v)).unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn write_matrix_csv(path: impl AsRef<Path>, m: &Matrix) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, matrix_to_csv(m)).map_err(|e| HarnessError::io(path, e))
}

/// Reads a headerless square CSV matrix.
pub fn read_matrix_csv(path: impl AsRef<Path>) -> Result<Matrix> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| HarnessError::parse(path, i + 1, e.to_string()))?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(HarnessError::EmptyFile(path.to_path_buf()));
    }
    let n = rows.len();
    if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != n) {
        return Err(HarnessError::parse(path, i + 1, format!("{} columns in a {n}-row matrix", r.len())));
    }
    Ok(Matrix::from_vec(n, n, rows.into_iter().flatten().collect())?)
}

/// One integer class per line.
pub fn read_classes(path: impl AsRef<Path>) -> Result<Vec<i64>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        out.push(t.parse().map_err(|e: std::num::ParseIntError| HarnessError::parse(path, i + 1, e.to_string()))?);
    }
    Ok(out)
}

pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let path = path.as_ref();
    let text = serde_json::to_string_pretty(value).expect("plain data serializes");
    fs::write(path, text + "\n").map_err(|e| HarnessError::io(path, e))
}

/// `matrix.csv` gets `matrix.json` next to it.
pub fn sidecar_path(csv: &Path) -> std::path::PathBuf {
    csv.with_extension("json")
}
