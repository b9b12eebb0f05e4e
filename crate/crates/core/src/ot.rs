//! Exact discrete optimal transport.
//!
//! `solve_exact_ot` solves the Kantorovich problem between two weighted atom
//! sets to LP optimality with a network simplex specialized to the dense
//! bipartite transportation graph (every source atom connected to every
//! target atom, uncapacitated arcs). The pivoting machinery — spanning-tree
//! basis with thread/depth indices and a block-search pricing rule — follows
//! the classic LEMON layout.
//!
//! The solver returns both the primal plan and the dual potentials; the duals
//! drive the mixture-weight gradient of the adaptation loop, so they are
//! produced even for zero-weight atoms (such rows are eliminated before
//! pivoting and their potentials completed tightly afterwards, which keeps
//! dual feasibility intact).

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::error::{Error, Result};

/// Ground cost between two atom sets: finite, non-negative entries.
#[derive(Debug, Clone)]
pub struct CostMatrix(Array2<f64>);

impl CostMatrix {
    pub fn new(costs: Array2<f64>) -> Result<Self> {
        if costs.nrows() == 0 || costs.ncols() == 0 {
            return Err(Error::invalid("cost matrix must be non-empty"));
        }
        if costs.iter().any(|c| !c.is_finite() || *c < 0.0) {
            return Err(Error::invalid(
                "cost entries must be finite and non-negative",
            ));
        }
        Ok(CostMatrix(costs))
    }

    /// Pairwise squared Euclidean distances between row sets, computed with
    /// the Gram-matrix expansion and clamped at zero against cancellation.
    pub fn squared_euclidean(x: ArrayView2<'_, f64>, y: ArrayView2<'_, f64>) -> Result<Self> {
        if x.ncols() != y.ncols() {
            return Err(Error::invalid(format!(
                "point sets have dimensions {} and {}",
                x.ncols(),
                y.ncols()
            )));
        }
        let x_sq: Array1<f64> = x.rows().into_iter().map(|r| r.dot(&r)).collect();
        let y_sq: Array1<f64> = y.rows().into_iter().map(|r| r.dot(&r)).collect();
        let cross = x.dot(&y.t());
        let mut d = Array2::zeros((x.nrows(), y.nrows()));
        for ((i, j), v) in d.indexed_iter_mut() {
            *v = (x_sq[i] + y_sq[j] - 2.0 * cross[(i, j)]).max(0.0);
        }
        CostMatrix::new(d)
    }

    pub fn nrows(&self) -> usize {
        self.0.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.0.ncols()
    }

    pub fn view(&self) -> ArrayView2<'_, f64> {
        self.0.view()
    }

    pub fn into_array(self) -> Array2<f64> {
        self.0
    }
}

/// An optimal coupling together with its dual potentials.
///
/// Conventions: `plan[(i, j)] >= 0` with row sums equal to the source weights
/// and column sums equal to the target weights; `value = <plan, cost>`;
/// `dual_source[i] + dual_target[j] <= cost[(i, j)]` up to solver tolerance,
/// with equality on the support of the plan; the source potentials are
/// centered to mean zero to fix the constant-shift gauge.
#[derive(Debug, Clone)]
pub struct TransportSolution {
    pub plan: Array2<f64>,
    pub value: f64,
    pub dual_source: Array1<f64>,
    pub dual_target: Array1<f64>,
}

impl TransportSolution {
    /// Largest violation of the marginal constraints.
    pub fn marginal_error(&self, source: ArrayView1<'_, f64>, target: ArrayView1<'_, f64>) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, &a) in source.iter().enumerate() {
            worst = worst.max((self.plan.row(i).sum() - a).abs());
        }
        for (j, &b) in target.iter().enumerate() {
            worst = worst.max((self.plan.column(j).sum() - b).abs());
        }
        worst
    }

    /// Absolute gap between the primal value and the dual objective.
    pub fn duality_gap(&self, source: ArrayView1<'_, f64>, target: ArrayView1<'_, f64>) -> f64 {
        let dual = self.dual_source.dot(&source) + self.dual_target.dot(&target);
        (self.value - dual).abs()
    }

    /// Largest violation of `u_i + v_j <= c_ij`.
    pub fn dual_feasibility_error(&self, cost: &CostMatrix) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, &u) in self.dual_source.iter().enumerate() {
            for (j, &v) in self.dual_target.iter().enumerate() {
                worst = worst.max(u + v - cost.view()[(i, j)]);
            }
        }
        worst
    }
}

/// Solves the discrete transport problem `min <plan, cost>` subject to the
/// marginal constraints given by `source` and `target` weights.
///
/// Both weight vectors must be non-negative with equal totals (checked to
/// 1e-9); atoms with exactly zero weight are allowed and receive zero plan
/// rows/columns plus dual-feasible potentials.
pub fn solve_exact_ot(
    source: ArrayView1<'_, f64>,
    target: ArrayView1<'_, f64>,
    cost: &CostMatrix,
) -> Result<TransportSolution> {
    let n = source.len();
    let m = target.len();
    if n != cost.nrows() || m != cost.ncols() {
        return Err(Error::invalid(format!(
            "cost is {}x{} but weights have lengths {n} and {m}",
            cost.nrows(),
            cost.ncols()
        )));
    }
    if source.iter().chain(target.iter()).any(|w| !w.is_finite() || *w < 0.0) {
        return Err(Error::invalid(
            "marginal weights must be finite and non-negative",
        ));
    }
    let (sa, sb) = (source.sum(), target.sum());
    if (sa - sb).abs() > 1e-9 {
        return Err(Error::invalid(format!(
            "unbalanced marginals: source mass {sa} vs target mass {sb}"
        )));
    }
    if sa <= 0.0 {
        return Err(Error::invalid("marginals must carry positive mass"));
    }

    let keep_rows: Vec<usize> = (0..n).filter(|&i| source[i] > 0.0).collect();
    let keep_cols: Vec<usize> = (0..m).filter(|&j| target[j] > 0.0).collect();

    if keep_rows.len() == n && keep_cols.len() == m {
        let storage;
        let cost_slice: &[f64] = match cost.0.as_slice() {
            Some(s) => s,
            None => {
                storage = cost.0.iter().copied().collect::<Vec<f64>>();
                &storage
            }
        };
        let mut solution = NetworkSimplex::new(n, m, cost_slice, source, target)?.solve()?;
        center_duals(&mut solution);
        return Ok(solution);
    }

    // Zero-weight atoms cannot receive plan mass, so solve the reduced
    // problem and complete the potentials tightly afterwards.
    let ra: Array1<f64> = keep_rows.iter().map(|&i| source[i]).collect();
    let rb: Array1<f64> = keep_cols.iter().map(|&j| target[j]).collect();
    let mut reduced_cost = Array2::zeros((keep_rows.len(), keep_cols.len()));
    for (ri, &i) in keep_rows.iter().enumerate() {
        for (rj, &j) in keep_cols.iter().enumerate() {
            reduced_cost[(ri, rj)] = cost.view()[(i, j)];
        }
    }
    let reduced = NetworkSimplex::new(
        keep_rows.len(),
        keep_cols.len(),
        reduced_cost.as_slice().expect("freshly built row-major"),
        ra.view(),
        rb.view(),
    )?
    .solve()?;

    let mut plan = Array2::zeros((n, m));
    for (ri, &i) in keep_rows.iter().enumerate() {
        for (rj, &j) in keep_cols.iter().enumerate() {
            plan[(i, j)] = reduced.plan[(ri, rj)];
        }
    }
    let mut dual_source = Array1::zeros(n);
    let mut dual_target = Array1::zeros(m);
    for (ri, &i) in keep_rows.iter().enumerate() {
        dual_source[i] = reduced.dual_source[ri];
    }
    for (rj, &j) in keep_cols.iter().enumerate() {
        dual_target[j] = reduced.dual_target[rj];
    }
    // Order matters: dropped columns are completed against kept rows first,
    // then dropped rows against the full set of column potentials, so every
    // (i, j) pair ends up dual-feasible.
    for j in 0..m {
        if target[j] == 0.0 {
            dual_target[j] = keep_rows
                .iter()
                .map(|&i| cost.view()[(i, j)] - dual_source[i])
                .fold(f64::INFINITY, f64::min);
        }
    }
    for i in 0..n {
        if source[i] == 0.0 {
            dual_source[i] = (0..m)
                .map(|j| cost.view()[(i, j)] - dual_target[j])
                .fold(f64::INFINITY, f64::min);
        }
    }

    let mut solution = TransportSolution {
        plan,
        value: reduced.value,
        dual_source,
        dual_target,
    };
    center_duals(&mut solution);
    Ok(solution)
}

fn center_duals(solution: &mut TransportSolution) {
    let shift = solution.dual_source.mean().unwrap_or(0.0);
    solution.dual_source.mapv_inplace(|u| u - shift);
    solution.dual_target.mapv_inplace(|v| v + shift);
}

const INVALID: usize = usize::MAX;
const STATE_TREE: i8 = 0;
const STATE_LOWER: i8 = 1;

/// Network simplex on the dense transportation graph.
///
/// Nodes `0..n` are source atoms, `n..n+m` target atoms, node `n+m` the
/// artificial root. Real arc `e = i*m + j` runs from source `i` to target
/// `n + j`; artificial arc `n*m + u` connects node `u` with the root and
/// carries the initial (all-artificial) feasible flow.
struct NetworkSimplex<'a> {
    n: usize,
    m: usize,
    root: usize,
    real_arcs: usize,
    cost: &'a [f64],
    art_cost: f64,
    /// Arc `real_arcs + u` points from `u` to the root when true (supply-side
    /// nodes), from the root to `u` otherwise (demand-side nodes).
    art_to_root: Vec<bool>,

    flow: Vec<f64>,
    state: Vec<i8>,

    pi: Vec<f64>,
    parent: Vec<usize>,
    pred: Vec<usize>,
    pred_up: Vec<bool>,
    thread: Vec<usize>,
    rev_thread: Vec<usize>,
    succ_num: Vec<usize>,
    last_succ: Vec<usize>,
    dirty_revs: Vec<usize>,

    block_size: usize,
    next_arc: usize,
    tolerance: f64,

    in_arc: usize,
    join: usize,
    u_in: usize,
    v_in: usize,
    u_out: usize,
    delta: f64,
}

impl<'a> NetworkSimplex<'a> {
    fn new(
        n: usize,
        m: usize,
        cost: &'a [f64],
        source: ArrayView1<'_, f64>,
        target: ArrayView1<'_, f64>,
    ) -> Result<Self> {
        debug_assert_eq!(cost.len(), n * m);
        let real_arcs = n * m;
        let nodes = n + m;
        let root = nodes;

        let max_cost = cost.iter().fold(0.0f64, |acc, c| acc.max(c.abs()));
        let art_cost = (max_cost + 1.0) * (nodes + 1) as f64;
        let tolerance = 1e-12 * (1.0 + max_cost);
        let block_size = ((real_arcs as f64).sqrt().floor() as usize).max(10);

        let mut ns = NetworkSimplex {
            n,
            m,
            root,
            real_arcs,
            cost,
            art_cost,
            art_to_root: vec![false; nodes],
            flow: vec![0.0; real_arcs + nodes],
            state: vec![STATE_LOWER; real_arcs + nodes],
            pi: vec![0.0; nodes + 1],
            parent: vec![INVALID; nodes + 1],
            pred: vec![INVALID; nodes + 1],
            pred_up: vec![false; nodes + 1],
            thread: vec![0; nodes + 1],
            rev_thread: vec![0; nodes + 1],
            succ_num: vec![1; nodes + 1],
            last_succ: vec![0; nodes + 1],
            dirty_revs: Vec::new(),
            block_size,
            next_arc: 0,
            tolerance,
            in_arc: INVALID,
            join: INVALID,
            u_in: INVALID,
            v_in: INVALID,
            u_out: INVALID,
            delta: 0.0,
        };

        // Initial basis: a star of artificial arcs around the root, threaded
        // in node order.
        ns.parent[root] = INVALID;
        ns.pred[root] = INVALID;
        ns.pi[root] = 0.0;
        ns.thread[root] = 0;
        ns.rev_thread[0] = root;
        ns.succ_num[root] = nodes + 1;
        ns.last_succ[root] = root.wrapping_sub(1);

        for u in 0..nodes {
            ns.parent[u] = root;
            ns.thread[u] = u + 1;
            if u + 1 <= nodes {
                ns.rev_thread[u + 1] = u;
            }
            ns.succ_num[u] = 1;
            ns.last_succ[u] = u;
            let arc = real_arcs + u;
            ns.pred[u] = arc;
            ns.state[arc] = STATE_TREE;
            let supply = if u < n { source[u] } else { -target[u - n] };
            if supply >= 0.0 {
                ns.art_to_root[u] = true;
                ns.pred_up[u] = true;
                ns.pi[u] = 0.0;
                ns.flow[arc] = supply;
            } else {
                ns.art_to_root[u] = false;
                ns.pred_up[u] = false;
                ns.pi[u] = art_cost;
                ns.flow[arc] = -supply;
            }
        }
        Ok(ns)
    }

    fn arc_src(&self, e: usize) -> usize {
        if e < self.real_arcs {
            e / self.m
        } else if self.art_to_root[e - self.real_arcs] {
            e - self.real_arcs
        } else {
            self.root
        }
    }

    fn arc_tgt(&self, e: usize) -> usize {
        if e < self.real_arcs {
            self.n + e % self.m
        } else if self.art_to_root[e - self.real_arcs] {
            self.root
        } else {
            e - self.real_arcs
        }
    }

    fn arc_cost(&self, e: usize) -> f64 {
        if e < self.real_arcs {
            self.cost[e]
        } else if self.art_to_root[e - self.real_arcs] {
            0.0
        } else {
            self.art_cost
        }
    }

    /// Block-search pricing over the real arcs: scan a block, take its most
    /// negative reduced cost, stop as soon as a block yields a candidate.
    fn find_entering_arc(&mut self) -> bool {
        let (pi_nodes, _) = self.pi.split_at(self.n + self.m);
        let (pi_src, pi_tgt) = pi_nodes.split_at(self.n);

        let mut min_cost = 0.0;
        let mut min_arc = INVALID;
        let mut count = self.block_size;

        let start = self.next_arc;
        let mut i = start / self.m;
        let mut j = start % self.m;
        for e in start..self.real_arcs {
            let c = self.state[e] as f64 * (self.cost[e] + pi_src[i] - pi_tgt[j]);
            if c < min_cost {
                min_cost = c;
                min_arc = e;
            }
            j += 1;
            if j == self.m {
                j = 0;
                i += 1;
            }
            count -= 1;
            if count == 0 {
                if min_cost < -self.tolerance {
                    self.in_arc = min_arc;
                    self.next_arc = e;
                    return true;
                }
                count = self.block_size;
            }
        }
        i = 0;
        j = 0;
        for e in 0..start {
            let c = self.state[e] as f64 * (self.cost[e] + pi_src[i] - pi_tgt[j]);
            if c < min_cost {
                min_cost = c;
                min_arc = e;
            }
            j += 1;
            if j == self.m {
                j = 0;
                i += 1;
            }
            count -= 1;
            if count == 0 {
                if min_cost < -self.tolerance {
                    self.in_arc = min_arc;
                    self.next_arc = e;
                    return true;
                }
                count = self.block_size;
            }
        }
        if min_cost < -self.tolerance {
            self.in_arc = min_arc;
            return true;
        }
        false
    }

    fn find_join_node(&mut self) {
        let mut u = self.arc_src(self.in_arc);
        let mut v = self.arc_tgt(self.in_arc);
        while u != v {
            if self.succ_num[u] < self.succ_num[v] {
                u = self.parent[u];
            } else {
                v = self.parent[v];
            }
        }
        self.join = u;
    }

    /// Finds the largest feasible ring flow `delta` around the entering
    /// cycle and the arc that hits zero first.
    fn find_leaving_arc(&mut self) -> bool {
        let first = self.arc_src(self.in_arc);
        let second = self.arc_tgt(self.in_arc);

        let mut delta = f64::INFINITY;
        let mut result = 0u8;
        let mut u_out = INVALID;

        let mut u = first;
        while u != self.join {
            if self.pred_up[u] {
                let d = self.flow[self.pred[u]];
                if d < delta {
                    delta = d;
                    u_out = u;
                    result = 1;
                }
            }
            u = self.parent[u];
        }
        let mut u = second;
        while u != self.join {
            if !self.pred_up[u] {
                let d = self.flow[self.pred[u]];
                if d <= delta {
                    delta = d;
                    u_out = u;
                    result = 2;
                }
            }
            u = self.parent[u];
        }

        self.delta = delta;
        self.u_out = u_out;
        match result {
            1 => {
                self.u_in = first;
                self.v_in = second;
                true
            }
            2 => {
                self.u_in = second;
                self.v_in = first;
                true
            }
            _ => false,
        }
    }

    fn change_flow(&mut self) {
        if self.delta > 0.0 {
            let val = self.delta;
            self.flow[self.in_arc] += val;
            let mut u = self.arc_src(self.in_arc);
            while u != self.join {
                let e = self.pred[u];
                self.flow[e] += if self.pred_up[u] { -val } else { val };
                u = self.parent[u];
            }
            let mut u = self.arc_tgt(self.in_arc);
            while u != self.join {
                let e = self.pred[u];
                self.flow[e] += if self.pred_up[u] { val } else { -val };
                u = self.parent[u];
            }
        }
        self.state[self.in_arc] = STATE_TREE;
        let leaving = self.pred[self.u_out];
        self.flow[leaving] = 0.0;
        self.state[leaving] = STATE_LOWER;
    }

    fn update_tree_structure(&mut self) {
        let u_in = self.u_in;
        let v_in = self.v_in;
        let u_out = self.u_out;
        let old_rev_thread = self.rev_thread[u_out];
        let old_succ_num = self.succ_num[u_out];
        let old_last_succ = self.last_succ[u_out];
        let v_out = self.parent[u_out];

        if u_in == u_out {
            self.parent[u_in] = v_in;
            self.pred[u_in] = self.in_arc;
            self.pred_up[u_in] = u_in == self.arc_src(self.in_arc);

            if self.thread[v_in] != u_out {
                let mut after = self.thread[old_last_succ];
                self.thread[old_rev_thread] = after;
                self.rev_thread[after] = old_rev_thread;
                after = self.thread[v_in];
                self.thread[v_in] = u_out;
                self.rev_thread[u_out] = v_in;
                self.thread[old_last_succ] = after;
                self.rev_thread[after] = old_last_succ;
            }
        } else {
            // When old_rev_thread == v_in, join and v_out coincide and the
            // subtree of u_out is already threaded right after v_in.
            let thread_continue = if old_rev_thread == v_in {
                self.thread[old_last_succ]
            } else {
                self.thread[v_in]
            };

            // Re-root the subtree at u_in: walk the stem u_in -> u_out,
            // splicing each stem node's remaining subtree into the thread.
            let mut stem = u_in;
            let mut stem_parent = v_in;
            let mut last = self.last_succ[u_in];
            let mut after = self.thread[last];
            self.thread[v_in] = u_in;
            self.dirty_revs.clear();
            self.dirty_revs.push(v_in);
            while stem != u_out {
                let next_stem = self.parent[stem];
                self.thread[last] = next_stem;
                self.dirty_revs.push(last);

                let before = self.rev_thread[stem];
                self.thread[before] = after;
                self.rev_thread[after] = before;

                self.parent[stem] = stem_parent;
                stem_parent = stem;
                stem = next_stem;

                last = if self.last_succ[stem] == self.last_succ[stem_parent] {
                    self.rev_thread[stem_parent]
                } else {
                    self.last_succ[stem]
                };
                after = self.thread[last];
            }
            self.parent[u_out] = stem_parent;
            self.thread[last] = thread_continue;
            self.rev_thread[thread_continue] = last;
            self.last_succ[u_out] = last;

            if old_rev_thread != v_in {
                self.thread[old_rev_thread] = after;
                self.rev_thread[after] = old_rev_thread;
            }
            for idx in 0..self.dirty_revs.len() {
                let u = self.dirty_revs[idx];
                self.rev_thread[self.thread[u]] = u;
            }

            // Predecessors flip direction along the stem; successor counts
            // and last-successor pointers are rebuilt bottom-up.
            let mut temp_succ_num = 0;
            let temp_last_succ = self.last_succ[u_out];
            let mut u = u_out;
            let mut p = self.parent[u];
            while u != u_in {
                self.pred[u] = self.pred[p];
                self.pred_up[u] = !self.pred_up[p];
                temp_succ_num += self.succ_num[u] - self.succ_num[p];
                self.succ_num[u] = temp_succ_num;
                self.last_succ[p] = temp_last_succ;
                u = p;
                p = self.parent[u];
            }
            self.pred[u_in] = self.in_arc;
            self.pred_up[u_in] = u_in == self.arc_src(self.in_arc);
            self.succ_num[u_in] = old_succ_num;
        }

        // Update last_succ from v_in towards the root.
        let up_limit_out = if self.last_succ[self.join] == v_in {
            self.join
        } else {
            INVALID
        };
        let last_succ_out = self.last_succ[u_out];
        let mut u = v_in;
        while u != INVALID && self.last_succ[u] == v_in {
            self.last_succ[u] = last_succ_out;
            u = self.parent[u];
        }

        // Update last_succ from v_out towards the root.
        if self.join != old_rev_thread && v_in != old_rev_thread {
            let mut u = v_out;
            while u != INVALID && u != up_limit_out && self.last_succ[u] == old_last_succ {
                self.last_succ[u] = old_rev_thread;
                u = self.parent[u];
            }
        } else if last_succ_out != old_last_succ {
            let mut u = v_out;
            while u != INVALID && u != up_limit_out && self.last_succ[u] == old_last_succ {
                self.last_succ[u] = last_succ_out;
                u = self.parent[u];
            }
        }

        // Successor counts along the two join paths.
        let mut u = v_in;
        while u != self.join {
            self.succ_num[u] += old_succ_num;
            u = self.parent[u];
        }
        let mut u = v_out;
        while u != self.join {
            self.succ_num[u] -= old_succ_num;
            u = self.parent[u];
        }
    }

    fn update_potentials(&mut self) {
        let u_in = self.u_in;
        let cost = self.arc_cost(self.pred[u_in]);
        let sigma = if self.pred_up[u_in] {
            self.pi[self.v_in] - self.pi[u_in] - cost
        } else {
            self.pi[self.v_in] - self.pi[u_in] + cost
        };
        let end = self.thread[self.last_succ[u_in]];
        let mut u = u_in;
        while u != end {
            self.pi[u] += sigma;
            u = self.thread[u];
        }
    }

    /// Recomputes potentials exactly from the final tree, wiping the drift
    /// accumulated by incremental sigma updates.
    fn recompute_potentials(&mut self) {
        self.pi[self.root] = 0.0;
        let mut u = self.thread[self.root];
        while u != self.root {
            let p = self.parent[u];
            let c = self.arc_cost(self.pred[u]);
            self.pi[u] = if self.pred_up[u] {
                self.pi[p] - c
            } else {
                self.pi[p] + c
            };
            u = self.thread[u];
        }
    }

    fn solve(mut self) -> Result<TransportSolution> {
        let max_pivots = 100_000 + 50 * (self.n + self.m);
        let mut pivots = 0usize;
        while self.find_entering_arc() {
            pivots += 1;
            if pivots > max_pivots {
                return Err(Error::internal(format!(
                    "network simplex exceeded {max_pivots} pivots"
                )));
            }
            self.find_join_node();
            if !self.find_leaving_arc() {
                return Err(Error::internal(
                    "network simplex found an unbounded pivot ray",
                ));
            }
            self.change_flow();
            self.update_tree_structure();
            self.update_potentials();
        }

        self.recompute_potentials();

        let plan = Array2::from_shape_vec(
            (self.n, self.m),
            self.flow[..self.real_arcs].to_vec(),
        )
        .expect("flow vector has n*m entries");
        let value = self.flow[..self.real_arcs]
            .iter()
            .zip(self.cost.iter())
            .map(|(f, c)| f * c)
            .sum();
        let dual_source: Array1<f64> = (0..self.n).map(|i| -self.pi[i]).collect();
        let dual_target: Array1<f64> = (0..self.m).map(|j| self.pi[self.n + j]).collect();

        Ok(TransportSolution {
            plan,
            value,
            dual_source,
            dual_target,
        })
    }
}
