//! Discrete probability measures with weighted atoms.

use std::collections::BTreeMap;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

use crate::error::{Error, Result};
use crate::simplex::SimplexWeights;

/// An empirical measure `sum_i w_i * delta_{x_i}` over points in `R^d`.
///
/// Atoms are stored row-wise (`N x d`); weights are non-negative and sum to
/// one within 1e-12. Zero-weight atoms are legal and preserved — downstream
/// code (the transport solver in particular) must cope with them.
#[derive(Debug, Clone)]
pub struct DiscreteMeasure {
    atoms: Array2<f64>,
    weights: Array1<f64>,
}

impl DiscreteMeasure {
    pub fn new(atoms: Array2<f64>, weights: Array1<f64>) -> Result<Self> {
        let n = atoms.nrows();
        if n == 0 {
            return Err(Error::invalid("measure needs at least one atom"));
        }
        if weights.len() != n {
            return Err(Error::invalid(format!(
                "got {n} atoms but {} weights",
                weights.len()
            )));
        }
        if atoms.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("atom coordinates must be finite"));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::invalid("weights must be finite and non-negative"));
        }
        let sum = weights.sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!(
                "weights sum to {sum}, expected 1"
            )));
        }
        Ok(DiscreteMeasure { atoms, weights })
    }

    /// Equal weights `1/N` on every atom.
    pub fn uniform(atoms: Array2<f64>) -> Result<Self> {
        let n = atoms.nrows();
        if n == 0 {
            return Err(Error::invalid("measure needs at least one atom"));
        }
        let weights = Array1::from_elem(n, 1.0 / n as f64);
        DiscreteMeasure::new(atoms, weights)
    }

    pub fn num_atoms(&self) -> usize {
        self.atoms.nrows()
    }

    pub fn dim(&self) -> usize {
        self.atoms.ncols()
    }

    pub fn atoms(&self) -> ArrayView2<'_, f64> {
        self.atoms.view()
    }

    pub fn weights(&self) -> ArrayView1<'_, f64> {
        self.weights.view()
    }
}

/// Forms the mixture `sum_j alpha_j p_j` by concatenating atoms and scaling
/// each block's weights by `alpha_j`.
///
/// All measures must share one ambient dimension, and `alpha` must have one
/// entry per measure. Blocks keep their input order, so row `sum_{k<j} N_k + i`
/// of the result is atom `i` of measure `j`.
pub fn mix_measures(measures: &[DiscreteMeasure], alpha: &SimplexWeights) -> Result<DiscreteMeasure> {
    if measures.is_empty() {
        return Err(Error::invalid("cannot mix zero measures"));
    }
    if alpha.len() != measures.len() {
        return Err(Error::invalid(format!(
            "{} measures but {} mixture weights",
            measures.len(),
            alpha.len()
        )));
    }
    let dim = measures[0].dim();
    if measures.iter().any(|m| m.dim() != dim) {
        return Err(Error::invalid("measures live in different dimensions"));
    }

    let total: usize = measures.iter().map(|m| m.num_atoms()).sum();
    let mut atoms = Array2::zeros((total, dim));
    let mut weights = Array1::zeros(total);
    let mut row = 0;
    for (j, m) in measures.iter().enumerate() {
        let n = m.num_atoms();
        atoms
            .slice_mut(ndarray::s![row..row + n, ..])
            .assign(&m.atoms());
        weights
            .slice_mut(ndarray::s![row..row + n])
            .assign(&(&m.weights() * alpha[j]));
        row += n;
    }
    DiscreteMeasure::new(atoms, weights)
}

/// Total variation distance `1/2 * sum_a |p(a) - q(a)|` over the union of
/// supports, comparing atoms by exact coordinate equality.
///
/// Duplicate atoms within a measure are merged first, so the result does not
/// depend on how mass is split across repeated rows. Measures with fully
/// disjoint supports are at distance 1 regardless of geometry.
pub fn tv_distance_discrete(p: &DiscreteMeasure, q: &DiscreteMeasure) -> Result<f64> {
    if p.dim() != q.dim() {
        return Err(Error::invalid(format!(
            "mismatched supports: atoms of dimension {} vs {}",
            p.dim(),
            q.dim()
        )));
    }

    // Key atoms by coordinate bit patterns (-0.0 folded into 0.0) so equal
    // points always collide; BTreeMap keeps the summation order deterministic.
    fn accumulate(m: &DiscreteMeasure) -> BTreeMap<Vec<u64>, f64> {
        let mut map = BTreeMap::new();
        for (row, &w) in m.atoms().axis_iter(Axis(0)).zip(m.weights().iter()) {
            let key: Vec<u64> = row
                .iter()
                .map(|&x| if x == 0.0 { 0.0f64 } else { x }.to_bits())
                .collect();
            *map.entry(key).or_insert(0.0) += w;
        }
        map
    }

    let mut pw = accumulate(p);
    let qw = accumulate(q);
    let mut total = 0.0;
    for (key, wq) in &qw {
        let wp = pw.remove(key).unwrap_or(0.0);
        total += (wp - wq).abs();
    }
    for (_, wp) in pw {
        total += wp.abs();
    }
    Ok(0.5 * total)
}
