//! Flat-file graph collections: `DS_A.txt` (1-indexed edges),
//! `DS_graph_indicator.txt`, `DS_graph_labels.txt` and optionally
//! `DS_node_labels.txt`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use wlmetric_core::graph::LabeledGraph;
use wlmetric_core::{LabelMatrix, Matrix};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub graphs: Vec<LabeledGraph>,
    pub class_labels: Vec<i64>,
}

impl Dataset {
    pub fn new(name: impl Into<String>, graphs: Vec<LabeledGraph>, class_labels: Vec<i64>) -> Result<Self> {
        if graphs.len() != class_labels.len() {
            return Err(HarnessError::InvalidArgument(format!(
                "{} graphs but {} class labels",
                graphs.len(),
                class_labels.len()
            )));
        }
        Ok(Self { name: name.into(), graphs, class_labels })
    }

    pub fn len(&self) -> usize {
        self.graphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graphs.is_empty()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.graphs.iter().map(LabeledGraph::n).collect()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TuOptions {
    /// Read single-column node labels as categories and one-hot encode them.
    pub one_hot: bool,
}

fn read_lines(path: &Path) -> Result<Vec<(usize, String)>> {
    let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    Ok(text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim().to_string()))
        .filter(|(_, l)| !l.is_empty())
        .collect())
}

fn parse_fields<T: std::str::FromStr>(path: &Path, line: usize, text: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    text.split(',')
        .map(|s| s.trim().parse::<T>().map_err(|e| HarnessError::parse(path, line, format!("{s:?}: {e}"))))
        .collect()
}

/// The dataset prefix: the directory name if `NAME_A.txt` exists, otherwise
/// the single `*_A.txt` file found in the directory.
fn dataset_prefix(dir: &Path) -> Result<String> {
    if let Some(name) = dir.file_name().and_then(|n| n.to_str()) {
        if dir.join(format!("{name}_A.txt")).is_file() {
            return Ok(name.to_string());
        }
    }
    let entries = fs::read_dir(dir).map_err(|e| HarnessError::io(dir, e))?;
    let mut found: Vec<String> = entries
        .filter_map(|e| e.ok())
        .filter_map(|e| e.file_name().to_str().and_then(|n| n.strip_suffix("_A.txt")).map(String::from))
        .collect();
    found.sort();
    match found.len() {
        0 => Err(HarnessError::MissingFile(dir.join("<name>_A.txt"))),
        1 => Ok(found.remove(0)),
        _ => Err(HarnessError::InvalidArgument(format!(
            "{} holds several datasets: {}",
            dir.display(),
            found.join(", ")
        ))),
    }
}

pub fn load_tudataset(dir: impl AsRef<Path>, options: TuOptions) -> Result<Dataset> {
    let dir = dir.as_ref();
    let name = dataset_prefix(dir)?;
    let file = |suffix: &str| dir.join(format!("{name}_{suffix}.txt"));

    let indicator_path = file("graph_indicator");
    let indicator = read_lines(&indicator_path)?;
    if indicator.is_empty() {
        return Err(HarnessError::EmptyFile(indicator_path));
    }
    let labels_path = file("graph_labels");
    let classes: Vec<i64> = read_lines(&labels_path)?
        .iter()
        .map(|(line, t)| t.parse().map_err(|e| HarnessError::parse(&labels_path, *line, format!("{t:?}: {e}"))))
        .collect::<Result<_>>()?;
    let graph_count = classes.len();

    // Global vertex id (0-based) -> (graph, local id).
    let mut owner = Vec::with_capacity(indicator.len());
    let mut sizes = vec![0usize; graph_count];
    for (line, t) in &indicator {
        let g: i64 = t.parse().map_err(|e| HarnessError::parse(&indicator_path, *line, format!("{t:?}: {e}")))?;
        if g < 1 || g as usize > graph_count {
            return Err(HarnessError::IndexOutOfRange { path: indicator_path, line: *line, index: g, max: graph_count });
        }
        let g = g as usize - 1;
        owner.push((g, sizes[g]));
        sizes[g] += 1;
    }
    if let Some(g) = sizes.iter().position(|&s| s == 0) {
        return Err(HarnessError::parse(&indicator_path, 0, format!("graph {} has no vertices", g + 1)));
    }

    let edges_path = file("A");
    let mut edges: Vec<BTreeSet<(usize, usize)>> = vec![BTreeSet::new(); graph_count];
    for (line, t) in read_lines(&edges_path)? {
        let pair: Vec<i64> = parse_fields(&edges_path, line, &t)?;
        if pair.len() != 2 {
            return Err(HarnessError::parse(&edges_path, line, "expected two vertex ids"));
        }
        let mut local = [(0, 0); 2];
        for (slot, &v) in local.iter_mut().zip(&pair) {
            if v < 1 || v as usize > owner.len() {
                return Err(HarnessError::IndexOutOfRange { path: edges_path, line, index: v, max: owner.len() });
            }
            *slot = owner[v as usize - 1];
        }
        let [(ga, a), (gb, b)] = local;
        if ga != gb {
            return Err(HarnessError::parse(&edges_path, line, "edge joins two graphs"));
        }
        // Both directions are listed; self-loops have no place in a simple graph.
        if a != b {
            edges[ga].insert((a.min(b), a.max(b)));
        }
    }

    let node_labels = read_node_labels(&file("node_labels"), owner.len(), options)?;

    let mut graphs = Vec::with_capacity(graph_count);
    for (g, edge_set) in edges.iter().enumerate() {
        let edge_list: Vec<(usize, usize)> = edge_set.iter().copied().collect();
        let graph = match &node_labels {
            None => LabeledGraph::unlabeled(sizes[g], &edge_list)?.with_degree_labels(),
            Some(all) => {
                let rows: Vec<usize> = (0..owner.len()).filter(|&v| owner[v].0 == g).collect();
                let cols: Vec<usize> = (0..all.cols()).collect();
                LabeledGraph::new(sizes[g], &edge_list, LabelMatrix::new(all.select(&rows, &cols))?)?
            }
        };
        graphs.push(graph);
    }
    Dataset::new(name, graphs, classes)
}

fn read_node_labels(path: &Path, vertices: usize, options: TuOptions) -> Result<Option<Matrix>> {
    if !path.is_file() {
        return Ok(None);
    }
    let lines = read_lines(path)?;
    if lines.len() != vertices {
        return Err(HarnessError::parse(path, 0, format!("{} node labels for {vertices} vertices", lines.len())));
    }
    let rows: Vec<Vec<f64>> = lines.iter().map(|(line, t)| parse_fields(path, *line, t)).collect::<Result<_>>()?;
    let dim = rows[0].len();
    if let Some(((line, _), _)) = lines.iter().zip(&rows).find(|(_, r)| r.len() != dim) {
        return Err(HarnessError::parse(path, *line, format!("expected {dim} columns")));
    }
    if options.one_hot {
        if dim != 1 {
            return Err(HarnessError::parse(path, 0, "one-hot encoding needs a single label column"));
        }
        let categories: BTreeMap<u64, usize> = rows
            .iter()
            .map(|r| r[0].to_bits())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .enumerate()
            .map(|(i, bits)| (bits, i))
            .collect();
        let m = Matrix::from_fn(vertices, categories.len(), |v, c| {
            if categories[&rows[v][0].to_bits()] == c {
                1.0
            } else {
                0.0
            }
        });
        return Ok(Some(m));
    }
    Ok(Some(Matrix::from_vec(vertices, dim, rows.into_iter().flatten().collect())?))
}

/// Writes `ds` in the flat-file layout under `dir/NAME/`, with node labels
/// when `node_labels` is set. Returns the dataset directory.
pub fn write_tudataset(dir: impl AsRef<Path>, ds: &Dataset, node_labels: bool) -> Result<PathBuf> {
    let root = dir.as_ref().join(&ds.name);
    fs::create_dir_all(&root).map_err(|e| HarnessError::io(&root, e))?;
    let (mut a, mut indicator, mut classes, mut labels) = (String::new(), String::new(), String::new(), String::new());
    let mut offset = 0;
    for (g, (graph, class)) in ds.graphs.iter().zip(&ds.class_labels).enumerate() {
        for &(u, v) in graph.edges() {
            writeln!(a, "{}, {}", u + offset + 1, v + offset + 1).unwrap();
            writeln!(a, "{}, {}", v + offset + 1, u + offset + 1).unwrap();
        }
        for v in 0..graph.n() {
            writeln!(indicator, "{}", g + 1).unwrap();
            let row: Vec<String> = graph.labels().row(v).iter().map(|x| x.to_string()).collect();
            writeln!(labels, "{}", row.join(", ")).unwrap();
        }
        writeln!(classes, "{class}").unwrap();
        offset += graph.n();
    }
    let mut files = vec![("A", a), ("graph_indicator", indicator), ("graph_labels", classes)];
    if node_labels {
        files.push(("node_labels", labels));
    }
    for (suffix, text) in files {
        let path = root.join(format!("{}_{suffix}.txt", ds.name));
        fs::write(&path, text).map_err(|e| HarnessError::io(&path, e))?;
    }
    Ok(root)
}
