//! Shared test oracles: independent reference implementations that the
//! library code must agree with. Everything here favors obviousness over
//! speed — exhaustive enumeration instead of pivoting, subset search instead
//! of sorting — so a bug in the library cannot hide in a shared code path.

#![allow(dead_code)]

use ndarray::{Array1, Array2};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random point in the simplex interior (normalized exponentials).
pub fn random_weights(rng: &mut ChaCha8Rng, n: usize) -> Array1<f64> {
    let raw: Vec<f64> = (0..n)
        .map(|_| -(rng.random_range(1e-6..1.0f64)).ln())
        .collect();
    let sum: f64 = raw.iter().sum();
    Array1::from_iter(raw.into_iter().map(|x| x / sum))
}

/// Exact minimum transport cost by enumerating every basic feasible solution
/// of the transportation polytope: each vertex is supported on a spanning
/// tree of the complete bipartite graph, so try all cell subsets of size
/// n + m - 1 that form a tree and keep the best feasible one.
pub fn brute_force_ot_value(a: &[f64], b: &[f64], cost: &Array2<f64>) -> f64 {
    let n = a.len();
    let m = b.len();
    let cells: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (0..m).map(move |j| (i, j)))
        .collect();
    let k = n + m - 1;
    let mut best = f64::INFINITY;
    let mut chosen = Vec::with_capacity(k);
    enumerate_subsets(&cells, k, 0, &mut chosen, &mut |subset| {
        if let Some(value) = tree_vertex_value(a, b, cost, subset) {
            if value < best {
                best = value;
            }
        }
    });
    best
}

fn enumerate_subsets(
    cells: &[(usize, usize)],
    k: usize,
    start: usize,
    chosen: &mut Vec<(usize, usize)>,
    visit: &mut impl FnMut(&[(usize, usize)]),
) {
    if chosen.len() == k {
        visit(chosen);
        return;
    }
    let needed = k - chosen.len();
    for idx in start..cells.len() {
        if cells.len() - idx < needed {
            break;
        }
        chosen.push(cells[idx]);
        enumerate_subsets(cells, k, idx + 1, chosen, visit);
        chosen.pop();
    }
}

/// Solves the flows on a candidate support by leaf elimination. Returns the
/// transport value if the support is a spanning tree carrying non-negative
/// flows, `None` otherwise.
fn tree_vertex_value(
    a: &[f64],
    b: &[f64],
    cost: &Array2<f64>,
    subset: &[(usize, usize)],
) -> Option<f64> {
    let n = a.len();
    let m = b.len();
    let nodes = n + m;
    // Acyclicity + connectivity via union-find; tree has exactly nodes-1 edges.
    let mut parent: Vec<usize> = (0..nodes).collect();
    fn find(parent: &mut Vec<usize>, x: usize) -> usize {
        let mut r = x;
        while parent[r] != r {
            r = parent[r];
        }
        let mut c = x;
        while parent[c] != r {
            let next = parent[c];
            parent[c] = r;
            c = next;
        }
        r
    }
    for &(i, j) in subset {
        let (ri, rj) = (find(&mut parent, i), find(&mut parent, n + j));
        if ri == rj {
            return None; // cycle
        }
        parent[ri] = rj;
    }

    let mut residual: Vec<f64> = a.iter().chain(b.iter()).copied().collect();
    let mut incident: Vec<Vec<usize>> = vec![Vec::new(); nodes];
    for (e, &(i, j)) in subset.iter().enumerate() {
        incident[i].push(e);
        incident[n + j].push(e);
    }
    let mut degree: Vec<usize> = incident.iter().map(|v| v.len()).collect();
    let mut removed = vec![false; subset.len()];
    let mut flows = vec![0.0; subset.len()];
    let mut stack: Vec<usize> = (0..nodes).filter(|&u| degree[u] == 1).collect();
    let mut processed = 0;
    while let Some(u) = stack.pop() {
        if degree[u] != 1 {
            continue;
        }
        let &e = incident[u].iter().find(|&&e| !removed[e]).unwrap();
        let (i, j) = subset[e];
        let other = if u == i { n + j } else { i };
        let f = residual[u];
        flows[e] = f;
        residual[u] = 0.0;
        residual[other] -= f;
        removed[e] = true;
        degree[u] -= 1;
        degree[other] -= 1;
        if degree[other] == 1 {
            stack.push(other);
        }
        processed += 1;
    }
    if processed != subset.len() {
        return None; // disconnected support
    }
    if flows.iter().any(|&f| f < -1e-12) {
        return None;
    }
    Some(
        subset
            .iter()
            .zip(flows.iter())
            .map(|(&(i, j), &f)| f.max(0.0) * cost[(i, j)])
            .sum(),
    )
}

/// Random rows that each sum to one (normalized exponentials), standing in
/// for softmax outputs.
pub fn random_softmax_rows(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Array2<f64> {
    let mut rows = Array2::zeros((n, k));
    for mut row in rows.rows_mut() {
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (rng.random_range(-1.0..1.0f64)).exp();
            sum += *v;
        }
        row.mapv_inplace(|v| v / sum);
    }
    rows
}

pub fn random_one_hot_rows(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Array2<f64> {
    let mut rows = Array2::zeros((n, k));
    for mut row in rows.rows_mut() {
        row[rng.random_range(0..k)] = 1.0;
    }
    rows
}

/// Uniformly weighted joint atoms with standard-normal features.
pub fn random_joint_atoms(
    rng: &mut ChaCha8Rng,
    n: usize,
    p: usize,
    k: usize,
    one_hot: bool,
) -> wjdot::JointAtoms {
    use rand_distr::{Distribution, StandardNormal};
    let features = Array2::from_shape_fn((n, p), |_| StandardNormal.sample(rng));
    let labels = if one_hot {
        random_one_hot_rows(rng, n, k)
    } else {
        random_softmax_rows(rng, n, k)
    };
    wjdot::JointAtoms::new(features, labels, Array1::from_elem(n, 1.0 / n as f64)).unwrap()
}

/// Interior simplex point: half random, half uniform, so no coordinate sits
/// near the boundary and small moves stay feasible.
pub fn interior_alpha(rng: &mut ChaCha8Rng, j: usize) -> wjdot::SimplexWeights {
    let random = random_weights(rng, j);
    let mixed = random.mapv(|x| 0.5 * x + 0.5 / j as f64);
    wjdot::SimplexWeights::new(mixed).unwrap()
}

/// Largest deviation between the analytic per-source gradient and central
/// finite differences along the simplex tangent directions `e_j - 1/J`.
/// The transport value is only defined on the simplex, so differences probe
/// tangent moves and both sides are compared after centering to mean zero.
pub fn alpha_fd_max_error(
    sources: &[wjdot::JointAtoms],
    target: &wjdot::JointAtoms,
    alpha: &wjdot::SimplexWeights,
    beta: f64,
    loss: wjdot::LabelLoss,
    h: f64,
) -> f64 {
    let (_, solution) = wjdot::wjdot_objective(sources, alpha, target, beta, loss).unwrap();
    let sizes: Vec<usize> = sources.iter().map(|s| s.num_atoms()).collect();
    let grads = wjdot::alpha_gradient(&solution, &sizes).unwrap();
    let j = grads.len();
    let mean = grads.iter().sum::<f64>() / j as f64;
    let value_at = |a: Array1<f64>| {
        let w = wjdot::SimplexWeights::new(a).unwrap();
        wjdot::wjdot_objective(sources, &w, target, beta, loss).unwrap().0
    };
    let mut worst = 0.0f64;
    for idx in 0..j {
        let mut direction = Array1::from_elem(j, -1.0 / j as f64);
        direction[idx] += 1.0;
        let plus = value_at(alpha.as_array() + &(&direction * h));
        let minus = value_at(alpha.as_array() - &(&direction * h));
        let fd = (plus - minus) / (2.0 * h);
        worst = worst.max(((grads[idx] - mean) - fd).abs());
    }
    worst
}

/// Largest relative deviation between the analytic classifier gradient and
/// central finite differences of the frozen-plan objective
/// `sum_ij plan_ij * L(y_i, f(z_j))`.
pub fn theta_fd_max_error(
    sources: &[wjdot::JointAtoms],
    target_embedded: ndarray::ArrayView2<'_, f64>,
    model: &wjdot::FeedForwardModel,
    alpha: &wjdot::SimplexWeights,
    beta: f64,
    loss: wjdot::LabelLoss,
    h: f64,
) -> f64 {
    use ndarray::{concatenate, Axis};
    let proxy = wjdot::proxy_target(model, target_embedded).unwrap();
    let (_, solution) = wjdot::wjdot_objective(sources, alpha, &proxy, beta, loss).unwrap();
    let analytic = wjdot::theta_gradient(&solution, sources, model, target_embedded, loss)
        .unwrap()
        .to_flat();
    let label_views: Vec<ndarray::ArrayView2<'_, f64>> =
        sources.iter().map(|s| s.labels()).collect();
    let y_src = concatenate(Axis(0), &label_views).unwrap();

    let frozen = |m: &wjdot::FeedForwardModel| -> f64 {
        let pred = m.forward(target_embedded).unwrap();
        let mut total = 0.0;
        for ((i, j), &mass) in solution.plan.indexed_iter() {
            if mass != 0.0 {
                total += mass
                    * loss.value(
                        y_src.row(i).as_slice().unwrap(),
                        pred.row(j).as_slice().unwrap(),
                    );
            }
        }
        total
    };

    let params = model.params_flat();
    let mut worst = 0.0f64;
    for k in 0..params.len() {
        let mut plus = model.clone();
        let mut minus = model.clone();
        let mut p = params.clone();
        p[k] += h;
        plus.set_params_flat(&p).unwrap();
        p[k] -= 2.0 * h;
        minus.set_params_flat(&p).unwrap();
        let fd = (frozen(&plus) - frozen(&minus)) / (2.0 * h);
        let denom = analytic[k].abs().max(fd.abs()).max(1e-3);
        worst = worst.max((analytic[k] - fd).abs() / denom);
    }
    worst
}

/// Closest simplex point by exhaustive active-set search: for every candidate
/// support S, equalize mass over S and keep the KKT-consistent solution with
/// the smallest distance to `w`.
pub fn brute_force_simplex_projection(w: &[f64]) -> Vec<f64> {
    let n = w.len();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 1u32..(1 << n) {
        let support: Vec<usize> = (0..n).filter(|&j| mask & (1 << j) != 0).collect();
        let sum: f64 = support.iter().map(|&j| w[j]).sum();
        let tau = (sum - 1.0) / support.len() as f64;
        let mut candidate = vec![0.0; n];
        let mut feasible = true;
        for &j in &support {
            let v = w[j] - tau;
            if v < 0.0 {
                feasible = false;
                break;
            }
            candidate[j] = v;
        }
        if !feasible {
            continue;
        }
        let dist: f64 = w
            .iter()
            .zip(candidate.iter())
            .map(|(wi, ci)| (wi - ci) * (wi - ci))
            .sum();
        if best.as_ref().is_none_or(|(d, _)| dist < *d) {
            best = Some((dist, candidate));
        }
    }
    best.expect("full support is always a candidate").1
}
