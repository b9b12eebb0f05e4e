//! Gaussian summaries and the Bures–Wasserstein distance.
//!
//! `bures_wasserstein` evaluates the closed-form 2-Wasserstein distance
//! between Gaussians,
//!
//! ```text
//! BW^2 = ||m_S - m_T||^2 + tr(S_S + S_T - 2 (S_S^{1/2} S_T S_S^{1/2})^{1/2})
//! ```
//!
//! which serves as a cheap sanity check against the empirical transport
//! distance on near-Gaussian data. The symmetric matrix square root is
//! computed from a cyclic Jacobi eigendecomposition — dimensions here are
//! tiny, so robustness beats asymptotics and we avoid linking a LAPACK.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::error::{Error, Result};

/// First two moments of a distribution: mean vector and covariance matrix
/// (symmetric within 1e-10, eigenvalues above -1e-10).
#[derive(Debug, Clone)]
pub struct GaussianSummary {
    mean: Array1<f64>,
    cov: Array2<f64>,
}

impl GaussianSummary {
    pub fn new(mean: Array1<f64>, cov: Array2<f64>) -> Result<Self> {
        if mean.is_empty() {
            return Err(Error::invalid("summary needs at least one dimension"));
        }
        if cov.nrows() != mean.len() || cov.ncols() != mean.len() {
            return Err(Error::invalid(format!(
                "covariance is {}x{} but mean has length {}",
                cov.nrows(),
                cov.ncols(),
                mean.len()
            )));
        }
        if mean.iter().any(|x| !x.is_finite()) || cov.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("summary entries must be finite"));
        }
        let asym = max_asymmetry(cov.view());
        if asym > 1e-10 {
            return Err(Error::invalid(format!(
                "covariance is asymmetric by {asym:.3e}"
            )));
        }
        let (eigenvalues, _) = jacobi_eigen(&symmetrize(cov.view()))?;
        if let Some(&lambda) = eigenvalues.iter().find(|&&l| l < -1e-10) {
            return Err(Error::invalid(format!(
                "covariance has negative eigenvalue {lambda:.3e}"
            )));
        }
        Ok(GaussianSummary { mean, cov })
    }

    /// Weighted empirical moments of a point cloud. Weights must be
    /// non-negative and sum to one within 1e-12.
    pub fn from_weighted_points(
        points: ArrayView2<'_, f64>,
        weights: ArrayView1<'_, f64>,
    ) -> Result<Self> {
        let n = points.nrows();
        let d = points.ncols();
        if n == 0 || d == 0 {
            return Err(Error::invalid("need at least one point and one dimension"));
        }
        if weights.len() != n {
            return Err(Error::invalid(format!(
                "{n} points but {} weights",
                weights.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::invalid("weights must be finite and non-negative"));
        }
        if (weights.sum() - 1.0).abs() > 1e-12 {
            return Err(Error::invalid("weights must sum to one"));
        }
        if points.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("points must be finite"));
        }

        let mean: Array1<f64> = points.t().dot(&weights);
        let mut cov = Array2::zeros((d, d));
        for (row, &w) in points.rows().into_iter().zip(weights.iter()) {
            let centered = &row - &mean;
            for i in 0..d {
                for j in 0..d {
                    cov[(i, j)] += w * centered[i] * centered[j];
                }
            }
        }
        GaussianSummary::new(mean, cov)
    }

    pub fn mean(&self) -> ArrayView1<'_, f64> {
        self.mean.view()
    }

    pub fn cov(&self) -> ArrayView2<'_, f64> {
        self.cov.view()
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

fn max_asymmetry(a: ArrayView2<'_, f64>) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..a.nrows() {
        for j in (i + 1)..a.ncols() {
            worst = worst.max((a[(i, j)] - a[(j, i)]).abs());
        }
    }
    worst
}

fn symmetrize(a: ArrayView2<'_, f64>) -> Array2<f64> {
    let mut s = a.to_owned();
    for i in 0..s.nrows() {
        for j in (i + 1)..s.ncols() {
            let v = 0.5 * (s[(i, j)] + s[(j, i)]);
            s[(i, j)] = v;
            s[(j, i)] = v;
        }
    }
    s
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix. Returns
/// eigenvalues and the orthogonal matrix whose columns are eigenvectors,
/// so `a = V diag(lambda) V^T`.
fn jacobi_eigen(a: &Array2<f64>) -> Result<(Array1<f64>, Array2<f64>)> {
    let d = a.nrows();
    let mut m = a.clone();
    let mut v: Array2<f64> = Array2::eye(d);
    if d == 1 {
        return Ok((Array1::from_elem(1, m[(0, 0)]), v));
    }

    let norm: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let target = 1e-15 * (1.0 + norm);

    for _sweep in 0..100 {
        let off: f64 = {
            let mut s = 0.0;
            for i in 0..d {
                for j in (i + 1)..d {
                    s += 2.0 * m[(i, j)] * m[(i, j)];
                }
            }
            s.sqrt()
        };
        if off <= target {
            let eigenvalues: Array1<f64> = (0..d).map(|i| m[(i, i)]).collect();
            return Ok((eigenvalues, v));
        }
        for p in 0..d - 1 {
            for q in (p + 1)..d {
                let apq = m[(p, q)];
                if apq.abs() <= 1e-300 {
                    m[(p, q)] = 0.0;
                    m[(q, p)] = 0.0;
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let tau = s / (1.0 + c);
                let h = t * apq;
                m[(p, p)] -= h;
                m[(q, q)] += h;
                m[(p, q)] = 0.0;
                m[(q, p)] = 0.0;
                for r in 0..d {
                    if r != p && r != q {
                        let arp = m[(r, p)];
                        let arq = m[(r, q)];
                        m[(r, p)] = arp - s * (arq + tau * arp);
                        m[(p, r)] = m[(r, p)];
                        m[(r, q)] = arq + s * (arp - tau * arq);
                        m[(q, r)] = m[(r, q)];
                    }
                }
                for r in 0..d {
                    let vrp = v[(r, p)];
                    let vrq = v[(r, q)];
                    v[(r, p)] = c * vrp - s * vrq;
                    v[(r, q)] = s * vrp + c * vrq;
                }
            }
        }
    }
    Err(Error::NotConverged(
        "Jacobi eigendecomposition did not reach tolerance in 100 sweeps".into(),
    ))
}

/// Symmetric positive-semidefinite square root: `sqrtm_spd(a) * sqrtm_spd(a)`
/// reconstructs `a`.
///
/// The input must be symmetric within 1e-8; eigenvalues in `[-1e-10, 0)` are
/// clamped to zero, anything more negative is rejected as indefinite.
pub fn sqrtm_spd(a: &Array2<f64>) -> Result<Array2<f64>> {
    if a.nrows() == 0 || a.nrows() != a.ncols() {
        return Err(Error::invalid(format!(
            "expected a square non-empty matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if a.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("matrix entries must be finite"));
    }
    let asym = max_asymmetry(a.view());
    if asym > 1e-8 {
        return Err(Error::invalid(format!("matrix is asymmetric by {asym:.3e}")));
    }
    let sym = symmetrize(a.view());
    let (eigenvalues, v) = jacobi_eigen(&sym)?;
    if let Some(&lambda) = eigenvalues.iter().find(|&&l| l < -1e-10) {
        return Err(Error::invalid(format!(
            "matrix is indefinite: eigenvalue {lambda:.3e}"
        )));
    }
    let sqrt_l: Array1<f64> = eigenvalues.mapv(|l| l.max(0.0).sqrt());
    let scaled = &v * &sqrt_l; // scales column k by sqrt_l[k]
    let root = scaled.dot(&v.t());
    Ok(symmetrize(root.view()))
}

/// The 2-Wasserstein (Bures) distance between two Gaussian summaries.
///
/// The trace argument is mathematically non-negative; tiny negative values
/// from rounding are clamped at zero.
pub fn bures_wasserstein(p: &GaussianSummary, q: &GaussianSummary) -> Result<f64> {
    if p.dim() != q.dim() {
        return Err(Error::invalid(format!(
            "summaries have dimensions {} and {}",
            p.dim(),
            q.dim()
        )));
    }
    let diff = &p.mean - &q.mean;
    let mean_part = diff.dot(&diff);

    let root_p = sqrtm_spd(&p.cov)?;
    let inner = root_p.dot(&q.cov).dot(&root_p);
    let cross = sqrtm_spd(&symmetrize(inner.view()))?;
    let trace = |m: &Array2<f64>| (0..m.nrows()).map(|i| m[(i, i)]).sum::<f64>();
    let trace_part = trace(&p.cov) + trace(&q.cov) - 2.0 * trace(&cross);

    Ok((mean_part + trace_part.max(0.0)).sqrt())
}
