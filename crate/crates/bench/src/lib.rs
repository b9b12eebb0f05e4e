//! Shared instance builders for the benchmark suite.

use ndarray::{Array1, Array2};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use wjdot::{CostMatrix, JointAtoms, LabeledDataset};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform weights plus a random squared-euclidean cost between two point
/// clouds of the given sizes.
pub fn random_ot_instance(
    seed: u64,
    n: usize,
    m: usize,
    d: usize,
) -> (Array1<f64>, Array1<f64>, CostMatrix) {
    let mut r = rng(seed);
    let x = Array2::from_shape_fn((n, d), |_| StandardNormal.sample(&mut r));
    let y = Array2::from_shape_fn((m, d), |_| StandardNormal.sample(&mut r));
    let cost = CostMatrix::squared_euclidean(x.view(), y.view()).unwrap();
    (
        Array1::from_elem(n, 1.0 / n as f64),
        Array1::from_elem(m, 1.0 / m as f64),
        cost,
    )
}

/// A small two-class dataset with Gaussian blobs per class.
pub fn random_dataset(seed: u64, n: usize, d: usize, domain: usize) -> LabeledDataset {
    let mut r = rng(seed);
    let mut features = Array2::zeros((n, d));
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let class = i % 2;
        let shift = if class == 0 { -1.5 } else { 1.5 };
        for j in 0..d {
            let noise: f64 = StandardNormal.sample(&mut r);
            features[(i, j)] = if j == 0 { shift } else { 0.0 } + 0.6 * noise;
        }
        labels.push(class);
    }
    LabeledDataset::new(features, labels, domain, 2).unwrap()
}

/// Uniformly weighted joint atoms drawn from `random_dataset`.
pub fn random_atoms(seed: u64, n: usize, d: usize) -> JointAtoms {
    JointAtoms::from_labeled(&random_dataset(seed, n, d, 0), &wjdot::Embedding::Identity)
        .unwrap()
}
