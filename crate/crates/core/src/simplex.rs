//! Euclidean projection onto the probability simplex.
//!
//! `project_to_simplex` maps an arbitrary vector `w` to the closest point (in
//! L2) of `{a : a_j >= 0, sum_j a_j = 1}` using the classic sort-and-threshold
//! scheme: sort `w` descending into `u`, keep the largest prefix `K` with
//! `(sum_{j<=K} u_j - 1)/K < u_K`, then clip `w - tau` at zero with
//! `tau = (sum_{j<=K} u_j - 1)/K`.

use ndarray::{Array1, ArrayView1};

use crate::error::{Error, Result};

/// A point on the probability simplex: non-negative entries summing to one
/// (within 1e-12).
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexWeights(Array1<f64>);

impl SimplexWeights {
    /// Wraps a vector after checking it lies on the simplex.
    pub fn new(weights: Array1<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::invalid("simplex weights must be non-empty"));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::invalid("simplex weights must be finite"));
        }
        if let Some(w) = weights.iter().find(|w| **w < 0.0) {
            return Err(Error::invalid(format!("negative simplex weight {w}")));
        }
        let sum: f64 = weights.sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!(
                "simplex weights sum to {sum}, expected 1"
            )));
        }
        Ok(SimplexWeights(weights))
    }

    /// The uniform distribution over `n` entries.
    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("simplex weights must be non-empty"));
        }
        Ok(SimplexWeights(Array1::from_elem(n, 1.0 / n as f64)))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_array(&self) -> &Array1<f64> {
        &self.0
    }

    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice().expect("weights are contiguous")
    }

    pub fn into_array(self) -> Array1<f64> {
        self.0
    }
}

impl std::ops::Index<usize> for SimplexWeights {
    type Output = f64;

    fn index(&self, j: usize) -> &f64 {
        &self.0[j]
    }
}

/// Projects `v` onto the probability simplex.
///
/// Runs in `O(n log n)` from the sort; the result is exact up to floating
/// point (no iterative refinement involved).
///
/// ```
/// use ndarray::array;
/// let p = wjdot::project_to_simplex(array![2.0, 0.0, 0.0].view()).unwrap();
/// assert_eq!(p.as_slice(), &[1.0, 0.0, 0.0]);
/// ```
pub fn project_to_simplex(v: ArrayView1<'_, f64>) -> Result<SimplexWeights> {
    if v.is_empty() {
        return Err(Error::invalid("cannot project an empty vector"));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("cannot project non-finite entries"));
    }

    let mut u: Vec<f64> = v.iter().copied().collect();
    u.sort_by(|a, b| b.total_cmp(a));

    // k = 1 always qualifies: (u_1 - 1)/1 < u_1. Track the threshold at the
    // largest qualifying prefix.
    let mut cumsum = 0.0;
    let mut tau = 0.0;
    for (k, &uk) in u.iter().enumerate() {
        cumsum += uk;
        let candidate = (cumsum - 1.0) / (k + 1) as f64;
        if candidate < uk {
            tau = candidate;
        }
    }

    let projected = v.mapv(|x| (x - tau).max(0.0));
    SimplexWeights::new(projected)
}
