//! Exact discrete optimal transport.
//!
//! [`ot_solve`] runs a primal network simplex on the transportation problem
//! (matrix-minimum starting basis, block pricing, Bland's rule once
//! degenerate pivots start to stall). [`wasserstein_1d`] is the closed form
//! on the real line, and [`lp_vertex_oracle`] enumerates every basis of a
//! tiny instance as an independent reference.

use alloc::collections::VecDeque;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::chain::ProbVec;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::PROB_TOL;

/// Transport plan with its marginals.
#[derive(Debug, Clone, PartialEq)]
pub struct Coupling {
    plan: Matrix,
    source: ProbVec,
    target: ProbVec,
}

impl Coupling {
    /// Checks row sums against `source` and column sums against `target` within `tol`.
    pub fn new(plan: Matrix, source: ProbVec, target: ProbVec, tol: f64) -> Result<Self> {
        if plan.shape() != (source.len(), target.len()) {
            return Err(Error::DimensionMismatch(format!(
                "plan {}x{} for marginals of length {} and {}",
                plan.rows(),
                plan.cols(),
                source.len(),
                target.len()
            )));
        }
        check_plan(&plan, source.as_slice(), target.as_slice(), tol)?;
        Ok(Self { plan, source, target })
    }

    /// Independent coupling `source ⊗ target`.
    pub fn product(source: &ProbVec, target: &ProbVec) -> Self {
        let (a, b) = (source.as_slice(), target.as_slice());
        let plan = Matrix::from_fn(a.len(), b.len(), |i, j| a[i] * b[j]);
        Self { plan, source: source.clone(), target: target.clone() }
    }

    /// Diagonal coupling of a measure with itself.
    pub fn diagonal(measure: &ProbVec) -> Self {
        let a = measure.as_slice();
        let plan = Matrix::from_fn(a.len(), a.len(), |i, j| if i == j { a[i] } else { 0.0 });
        Self { plan, source: measure.clone(), target: measure.clone() }
    }

    pub fn plan(&self) -> &Matrix {
        &self.plan
    }

    pub fn source(&self) -> &ProbVec {
        &self.source
    }

    pub fn target(&self) -> &ProbVec {
        &self.target
    }

    /// `Σ cost[i,j]·plan[i,j]`.
    pub fn cost(&self, cost: &Matrix) -> f64 {
        self.plan.as_slice().iter().zip(cost.as_slice()).map(|(p, c)| p * c).sum()
    }
}

/// Largest marginal violation of `plan` against `(a, b)`; errors when it exceeds `tol`.
pub(crate) fn check_plan(plan: &Matrix, a: &[f64], b: &[f64], tol: f64) -> Result<()> {
    if plan.as_slice().iter().any(|&p| p.is_nan() || p < 0.0) {
        return Err(Error::MarginalMismatch("plan has negative or NaN entries".into()));
    }
    for (i, r) in plan.iter_rows().enumerate() {
        let s: f64 = r.iter().sum();
        if (s - a[i]).abs() > tol {
            return Err(Error::MarginalMismatch(format!("row {i} sums to {s}, expected {}", a[i])));
        }
    }
    for j in 0..plan.cols() {
        let s: f64 = (0..plan.rows()).map(|i| plan[(i, j)]).sum();
        if (s - b[j]).abs() > tol {
            return Err(Error::MarginalMismatch(format!("column {j} sums to {s}, expected {}", b[j])));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct OtResult {
    pub value: f64,
    pub coupling: Coupling,
}

fn check_weights(w: &[f64], side: &str) -> Result<()> {
    if w.is_empty() {
        return Err(Error::EmptyDistribution);
    }
    let mut sum = 0.0;
    for &x in w {
        if !x.is_finite() || x < 0.0 {
            return Err(Error::InfeasibleMarginals(format!("{side} weight {x}")));
        }
        sum += x;
    }
    if (sum - 1.0).abs() > PROB_TOL {
        return Err(Error::InfeasibleMarginals(format!("{side} weights sum to {sum}")));
    }
    Ok(())
}

fn check_problem(cost: &Matrix, source: &[f64], target: &[f64]) -> Result<()> {
    if cost.shape() != (source.len(), target.len()) {
        return Err(Error::DimensionMismatch(format!(
            "cost {}x{} for marginals of length {} and {}",
            cost.rows(),
            cost.cols(),
            source.len(),
            target.len()
        )));
    }
    check_weights(source, "source")?;
    check_weights(target, "target")?;
    if let Some(c) = cost.as_slice().iter().find(|c| !c.is_finite() || **c < 0.0) {
        return Err(Error::InvalidValue(format!("cost entry {c}")));
    }
    Ok(())
}

/// Optimal transport cost and an optimal coupling.
pub fn ot_solve(cost: &Matrix, source: &[f64], target: &[f64]) -> Result<OtResult> {
    check_problem(cost, source, target)?;
    let (rows, cols) = (support(source), support(target));
    let flows = solve_support(cost, source, target, &rows, &cols)?;
    let mut plan = Matrix::zeros(source.len(), target.len());
    let mut value = 0.0;
    for (i, j, f) in flows {
        plan[(i, j)] += f;
        value += f * cost[(i, j)];
    }
    let coupling = Coupling {
        plan,
        source: ProbVec::new(source.to_vec())?,
        target: ProbVec::new(target.to_vec())?,
    };
    Ok(OtResult { value, coupling })
}

/// Optimal transport cost only.
pub fn ot_value(cost: &Matrix, source: &[f64], target: &[f64]) -> Result<f64> {
    check_problem(cost, source, target)?;
    let (rows, cols) = (support(source), support(target));
    transport_cost(cost, source, target, &rows, &cols)
}

/// Cost of transporting `source` restricted to `rows` onto `target` restricted to `cols`.
///
/// Inputs are assumed validated; the indices must cover every positive weight.
pub(crate) fn transport_cost(
    cost: &Matrix,
    source: &[f64],
    target: &[f64],
    rows: &[usize],
    cols: &[usize],
) -> Result<f64> {
    let flows = solve_support(cost, source, target, rows, cols)?;
    Ok(flows.iter().map(|&(i, j, f)| f * cost[(i, j)]).sum())
}

pub(crate) fn support(w: &[f64]) -> Vec<usize> {
    w.iter().enumerate().filter(|(_, &x)| x > 0.0).map(|(i, _)| i).collect()
}

fn solve_support(
    cost: &Matrix,
    source: &[f64],
    target: &[f64],
    rows: &[usize],
    cols: &[usize],
) -> Result<Vec<(usize, usize, f64)>> {
    if rows.len() == 1 {
        return Ok(cols.iter().map(|&j| (rows[0], j, target[j])).collect());
    }
    if cols.len() == 1 {
        return Ok(rows.iter().map(|&i| (i, cols[0], source[i])).collect());
    }
    let sub = cost.select(rows, cols);
    let a: Vec<f64> = rows.iter().map(|&i| source[i]).collect();
    let b: Vec<f64> = cols.iter().map(|&j| target[j]).collect();
    let flows = NetworkSimplex::new(&sub, &a, &b).run()?;
    Ok(flows.into_iter().map(|(i, j, f)| (rows[i], cols[j], f)).collect())
}

/// Primal network simplex on a dense transportation problem.
///
/// Nodes `0..n` are sources and `n..n+m` sinks; the basis is a spanning tree
/// with `n + m - 1` arcs.
struct NetworkSimplex<'a> {
    cost: &'a Matrix,
    n: usize,
    m: usize,
    arcs: Vec<(usize, usize)>,
    flow: Vec<f64>,
    adj: Vec<Vec<usize>>,
    u: Vec<f64>,
    v: Vec<f64>,
    parent_arc: Vec<usize>,
    depth: Vec<usize>,
    tol: f64,
}

const NO_ARC: usize = usize::MAX;

impl<'a> NetworkSimplex<'a> {
    fn new(cost: &'a Matrix, a: &[f64], b: &[f64]) -> Self {
        let (n, m) = cost.shape();
        let scale = cost.as_slice().iter().fold(1.0f64, |acc, &c| acc.max(c));
        let mut s = Self {
            cost,
            n,
            m,
            arcs: Vec::with_capacity(n + m - 1),
            flow: Vec::with_capacity(n + m - 1),
            adj: vec![Vec::new(); n + m],
            u: vec![0.0; n],
            v: vec![0.0; m],
            parent_arc: vec![NO_ARC; n + m],
            depth: vec![0; n + m],
            tol: 1e-12 * scale,
        };
        s.initial_basis(a, b);
        s
    }

    /// Matrix-minimum rule; each allocation retires exactly one row or column.
    fn initial_basis(&mut self, a: &[f64], b: &[f64]) {
        let (n, m) = (self.n, self.m);
        let mut order: Vec<usize> = (0..n * m).collect();
        let c = self.cost.as_slice();
        order.sort_unstable_by(|&x, &y| c[x].total_cmp(&c[y]).then(x.cmp(&y)));
        let mut supply = a.to_vec();
        let mut demand = b.to_vec();
        let mut row_done = vec![false; n];
        let mut col_done = vec![false; m];
        let (mut rows_left, mut cols_left) = (n, m);
        for idx in order {
            if rows_left == 0 {
                break;
            }
            let (i, j) = (idx / m, idx % m);
            if row_done[i] || col_done[j] {
                continue;
            }
            let f = supply[i].min(demand[j]).max(0.0);
            supply[i] -= f;
            demand[j] -= f;
            self.add_arc(i, j, f);
            let retire_row = (supply[i] <= demand[j] && rows_left > 1) || cols_left == 1;
            if retire_row {
                row_done[i] = true;
                rows_left -= 1;
            } else {
                col_done[j] = true;
                cols_left -= 1;
            }
        }
        debug_assert_eq!(self.arcs.len(), n + m - 1);
    }

    fn add_arc(&mut self, i: usize, j: usize, f: f64) {
        let id = self.arcs.len();
        self.arcs.push((i, j));
        self.flow.push(f);
        self.adj[i].push(id);
        self.adj[self.n + j].push(id);
    }

    fn replace_arc(&mut self, id: usize, i: usize, j: usize, f: f64) {
        let (oi, oj) = self.arcs[id];
        let n = self.n;
        for node in [oi, n + oj] {
            let list = &mut self.adj[node];
            let pos = list.iter().position(|&x| x == id).expect("arc in adjacency");
            list.swap_remove(pos);
        }
        self.arcs[id] = (i, j);
        self.flow[id] = f;
        self.adj[i].push(id);
        self.adj[n + j].push(id);
    }

    /// Potentials with `u[0] = 0`, plus parent arcs and depths of the rooted tree.
    fn compute_potentials(&mut self) {
        let n = self.n;
        let mut queue = VecDeque::with_capacity(n + self.m);
        self.parent_arc[0] = NO_ARC;
        self.depth[0] = 0;
        self.u[0] = 0.0;
        queue.push_back(0usize);
        let mut seen = vec![false; n + self.m];
        seen[0] = true;
        while let Some(node) = queue.pop_front() {
            for k in 0..self.adj[node].len() {
                let id = self.adj[node][k];
                let (i, j) = self.arcs[id];
                let other = if node < n { n + j } else { i };
                if seen[other] {
                    continue;
                }
                seen[other] = true;
                let c = self.cost[(i, j)];
                if other >= n {
                    self.v[j] = c - self.u[i];
                } else {
                    self.u[i] = c - self.v[j];
                }
                self.parent_arc[other] = id;
                self.depth[other] = self.depth[node] + 1;
                queue.push_back(other);
            }
        }
    }

    fn parent(&self, node: usize) -> usize {
        let (i, j) = self.arcs[self.parent_arc[node]];
        if node < self.n {
            self.n + j
        } else {
            i
        }
    }

    #[inline]
    fn reduced(&self, i: usize, j: usize) -> f64 {
        self.cost[(i, j)] - self.u[i] - self.v[j]
    }

    /// Block pricing starting at `*cursor`; `None` means the basis is optimal.
    fn price_block(&self, cursor: &mut usize, block: usize) -> Option<(usize, usize)> {
        let total = self.n * self.m;
        let mut best = -self.tol;
        let mut best_cell = None;
        let mut scanned = 0;
        while scanned < total {
            let end = (scanned + block).min(total);
            while scanned < end {
                let idx = *cursor;
                *cursor += 1;
                if *cursor == total {
                    *cursor = 0;
                }
                scanned += 1;
                let (i, j) = (idx / self.m, idx % self.m);
                let r = self.reduced(i, j);
                if r < best {
                    best = r;
                    best_cell = Some((i, j));
                }
            }
            if best_cell.is_some() {
                return best_cell;
            }
        }
        None
    }

    /// First improving cell in index order.
    fn price_bland(&self) -> Option<(usize, usize)> {
        (0..self.n * self.m)
            .map(|idx| (idx / self.m, idx % self.m))
            .find(|&(i, j)| self.reduced(i, j) < -self.tol)
    }

    /// Arcs of the cycle closed by entering `(i, j)`, with `true` for arcs that lose flow.
    fn cycle(&self, i: usize, j: usize) -> Vec<(usize, bool)> {
        let mut from_sink = Vec::new();
        let mut from_source = Vec::new();
        let (mut a, mut b) = (i, self.n + j);
        while self.depth[a] > self.depth[b] {
            from_source.push(self.parent_arc[a]);
            a = self.parent(a);
        }
        while self.depth[b] > self.depth[a] {
            from_sink.push(self.parent_arc[b]);
            b = self.parent(b);
        }
        while a != b {
            from_source.push(self.parent_arc[a]);
            a = self.parent(a);
            from_sink.push(self.parent_arc[b]);
            b = self.parent(b);
        }
        // Walk sink -> apex -> source; signs alternate starting with a decrease.
        from_sink
            .into_iter()
            .chain(from_source.into_iter().rev())
            .enumerate()
            .map(|(k, id)| (id, k % 2 == 0))
            .collect()
    }

    fn run(mut self) -> Result<Vec<(usize, usize, f64)>> {
        let total = self.n * self.m;
        let block = (libm::sqrt(total as f64) as usize).max(32).min(total);
        let mut cursor = 0;
        let mut degenerate_run = 0usize;
        let stall_limit = 2 * (self.n + self.m) + 16;
        let max_pivots = 50 * total + 10_000;
        for _ in 0..max_pivots {
            self.compute_potentials();
            let bland = degenerate_run > stall_limit;
            let entering = if bland { self.price_bland() } else { self.price_block(&mut cursor, block) };
            let Some((i, j)) = entering else {
                return Ok(self.arcs.iter().zip(&self.flow).map(|(&(i, j), &f)| (i, j, f)).collect());
            };
            let cycle = self.cycle(i, j);
            let mut theta = f64::INFINITY;
            let mut leaving = NO_ARC;
            for &(id, decreases) in &cycle {
                if !decreases {
                    continue;
                }
                let f = self.flow[id];
                let better = f < theta
                    || (f == theta && bland && {
                        let (a, b) = self.arcs[id];
                        let (c, d) = self.arcs[leaving];
                        a * self.m + b < c * self.m + d
                    });
                if better {
                    theta = f;
                    leaving = id;
                }
            }
            if theta > 0.0 {
                degenerate_run = 0;
                for &(id, decreases) in &cycle {
                    if decreases {
                        self.flow[id] -= theta;
                    } else {
                        self.flow[id] += theta;
                    }
                }
            } else {
                degenerate_run += 1;
            }
            self.replace_arc(leaving, i, j, theta);
        }
        Err(Error::SolverFailure(format!("no optimum after {max_pivots} pivots on a {}x{} instance", self.n, self.m)))
    }
}

/// ℓ¹-Wasserstein distance between two weighted point sets on the real line.
///
/// Both sides are sorted and the monotone (quantile) coupling is integrated,
/// `O((n + m) log(n + m))`.
pub fn wasserstein_1d(a_points: &[f64], a_weights: &[f64], b_points: &[f64], b_weights: &[f64]) -> Result<f64> {
    if a_points.is_empty() || b_points.is_empty() {
        return Err(Error::EmptyDistribution);
    }
    if a_points.len() != a_weights.len() || b_points.len() != b_weights.len() {
        return Err(Error::DimensionMismatch("points and weights differ in length".into()));
    }
    check_weights(a_weights, "source")?;
    check_weights(b_weights, "target")?;
    if let Some(p) = a_points.iter().chain(b_points).find(|p| !p.is_finite()) {
        return Err(Error::InvalidValue(format!("point {p}")));
    }
    let a = sorted_atoms(a_points, a_weights);
    let b = sorted_atoms(b_points, b_weights);
    Ok(w1_sorted(&a, &b))
}

pub(crate) fn sorted_atoms(points: &[f64], weights: &[f64]) -> Vec<(f64, f64)> {
    let mut atoms: Vec<(f64, f64)> =
        points.iter().copied().zip(weights.iter().copied()).filter(|&(_, w)| w > 0.0).collect();
    atoms.sort_unstable_by(|x, y| x.0.total_cmp(&y.0));
    atoms
}

/// Quantile integration over atoms sorted by position.
pub(crate) fn w1_sorted(a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
    let (mut ia, mut ib) = (0, 0);
    let (mut ra, mut rb) = (a.first().map_or(0.0, |x| x.1), b.first().map_or(0.0, |x| x.1));
    let mut total = 0.0;
    while ia < a.len() && ib < b.len() {
        let step = ra.min(rb);
        total += step * (a[ia].0 - b[ib].0).abs();
        ra -= step;
        rb -= step;
        if ra <= 0.0 {
            ia += 1;
            if ia < a.len() {
                ra = a[ia].1;
            }
        }
        if rb <= 0.0 {
            ib += 1;
            if ib < b.len() {
                rb = b[ib].1;
            }
        }
    }
    total
}

/// Largest `n·m` accepted by [`lp_vertex_oracle`].
pub const ORACLE_MAX_CELLS: usize = 20;

/// Exact optimum by enumerating every basic feasible solution.
///
/// Each `(n + m - 1)`-subset of cells that forms a spanning tree of the
/// bipartite graph has a unique flow, solved by peeling leaves. The minimum
/// cost over the nonnegative ones is the LP optimum.
pub fn lp_vertex_oracle(cost: &Matrix, source: &[f64], target: &[f64]) -> Result<f64> {
    check_problem(cost, source, target)?;
    let (n, m) = cost.shape();
    let cells = n * m;
    if cells > ORACLE_MAX_CELLS {
        return Err(Error::TooLarge { cells, limit: ORACLE_MAX_CELLS });
    }
    let basis_size = n + m - 1;
    let mut best = f64::INFINITY;
    let mut mask: u32 = (1u32 << basis_size) - 1;
    let limit: u32 = 1u32 << cells;
    while mask < limit {
        if let Some(value) = basis_value(cost, source, target, mask) {
            best = best.min(value);
        }
        // Gosper's hack: next mask with the same popcount.
        let c = mask & mask.wrapping_neg();
        let r = mask + c;
        mask = (((r ^ mask) >> 2) / c) | r;
    }
    if best.is_finite() {
        Ok(best)
    } else {
        Err(Error::SolverFailure("no feasible basis found".into()))
    }
}

fn basis_value(cost: &Matrix, a: &[f64], b: &[f64], mask: u32) -> Option<f64> {
    let (n, m) = cost.shape();
    let nodes = n + m;
    let edges: Vec<(usize, usize)> =
        (0..n * m).filter(|k| mask >> k & 1 == 1).map(|k| (k / m, k % m)).collect();
    // Acyclic with nodes - 1 edges means spanning tree.
    let mut parent: Vec<usize> = (0..nodes).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for &(i, j) in &edges {
        let (ri, rj) = (find(&mut parent, i), find(&mut parent, n + j));
        if ri == rj {
            return None;
        }
        parent[ri] = rj;
    }
    let mut residual: Vec<f64> = a.iter().chain(b).copied().collect();
    let mut degree = vec![0usize; nodes];
    for &(i, j) in &edges {
        degree[i] += 1;
        degree[n + j] += 1;
    }
    let mut used = vec![false; edges.len()];
    let mut stack: Vec<usize> = (0..nodes).filter(|&v| degree[v] == 1).collect();
    let mut value = 0.0;
    while let Some(leaf) = stack.pop() {
        if degree[leaf] != 1 {
            continue;
        }
        let Some(e) = (0..edges.len()).find(|&e| {
            !used[e] && (edges[e].0 == leaf || n + edges[e].1 == leaf)
        }) else {
            continue;
        };
        used[e] = true;
        let (i, j) = edges[e];
        let other = if leaf == i { n + j } else { i };
        let f = residual[leaf];
        if f < -1e-12 {
            return None;
        }
        residual[leaf] = 0.0;
        residual[other] -= f;
        degree[leaf] -= 1;
        degree[other] -= 1;
        if degree[other] == 1 {
            stack.push(other);
        }
        value += f.max(0.0) * cost[(i, j)];
    }
    if used.iter().any(|u| !u) || residual.iter().any(|r| r.abs() > 1e-9) {
        return None;
    }
    Some(value)
}
