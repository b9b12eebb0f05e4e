//! Multi-source domain adaptation through weighted joint distribution
//! optimal transport.
//!
//! The crate learns a target-domain classifier without target labels by
//! aligning a weighted mixture of labeled source distributions with the
//! target's own predictions under an exact optimal transport distance. The
//! mixture weights live on the probability simplex and are learned jointly
//! with the classifier by alternating projected gradient steps; the weights
//! double as an interpretable estimate of which sources resemble the target.
//!
//! Main entry points:
//! - [`solve_exact_ot`]: exact discrete optimal transport (plan + duals).
//! - [`run_wjdot`]: the alternating adaptation loop.
//! - [`baselines`]: ERM and single/multi-source transport baselines.
//! - [`datagen`]: the simulated rotation and target-shift benchmark families.

pub mod baselines;
pub mod datagen;
pub mod error;
pub mod gaussian;
pub mod measure;
pub mod model;
pub mod ot;
pub mod simplex;
pub mod wjdot;

pub use baselines::{pool_datasets, run_cjdot, run_mjdot, train_erm, ErmConfig};
pub use datagen::{
    domain_rng, generate_rotation_domains, generate_target_shift, read_datasets_csv,
    rotation_angles, rotation_matrix_x, shift_proportions, split_dataset, write_datasets_csv,
    RotationShiftSpec, TargetAngle, TargetShiftSpec,
};
pub use error::{Error, Result};
pub use gaussian::{bures_wasserstein, sqrtm_spd, GaussianSummary};
pub use model::{
    train_mtl_embedding, Activation, Embedding, FeedForwardModel, LabelLoss, LabeledDataset,
    ModelGradient, MtlConfig, MtlEmbedding, OutputKind,
};
pub use measure::{mix_measures, tv_distance_discrete, DiscreteMeasure};
pub use ot::{solve_exact_ot, CostMatrix, TransportSolution};
pub use simplex::{project_to_simplex, SimplexWeights};
pub use wjdot::{
    alpha_gradient, bound_diagnostics, build_joint_cost, proxy_target, run_wjdot, select_beta,
    theta_gradient, validation_score, wjdot_objective, BoundDiagnostics, IterationRecord,
    JointAtoms, ValidationKind, WjdotConfig, WjdotState,
};
