//! The weighted joint distribution transport engine.
//!
//! The learning problem: given labeled source domains `S_1..S_J` and an
//! unlabeled target sample, find simplex weights `alpha` and a classifier `f`
//! minimizing the exact transport distance between the alpha-weighted mixture
//! of joint source distributions and the target's self-labeled joint
//! distribution `(g(x), f(g(x)))`. The ground cost between joint atoms is
//!
//! ```text
//! D((z, y), (z', y')) = beta * ||z - z'||^2 + L(y, y')
//! ```
//!
//! Both unknowns are updated by alternating projected gradient steps: the
//! classifier takes a fixed-plan gradient step, the weights move along the
//! mean of the mixture-side dual potentials per source and are projected back
//! onto the simplex. The learned `alpha` doubles as an interpretable estimate
//! of which sources resemble the target.

use ndarray::{concatenate, Array1, Array2, ArrayView2, Axis};

use crate::error::{Error, Result};
use crate::measure::{tv_distance_discrete, DiscreteMeasure};
use crate::model::{
    Activation, Embedding, FeedForwardModel, LabelLoss, LabeledDataset, ModelGradient, OutputKind,
};
use crate::ot::{solve_exact_ot, CostMatrix, TransportSolution};
use crate::simplex::{project_to_simplex, SimplexWeights};

const LOG_CLAMP: f64 = 1e-30;

/// Weighted atoms of a joint distribution in embedding space: features
/// `N x p`, label rows `N x K` (one-hot for sources, softmax rows for the
/// proxy target), and non-negative weights summing to one.
#[derive(Debug, Clone)]
pub struct JointAtoms {
    embedded: Array2<f64>,
    labels: Array2<f64>,
    weights: Array1<f64>,
}

impl JointAtoms {
    pub fn new(embedded: Array2<f64>, labels: Array2<f64>, weights: Array1<f64>) -> Result<Self> {
        let n = embedded.nrows();
        if n == 0 {
            return Err(Error::invalid("joint atoms need at least one sample"));
        }
        if labels.nrows() != n || weights.len() != n {
            return Err(Error::invalid(format!(
                "inconsistent atom counts: {} features, {} label rows, {} weights",
                n,
                labels.nrows(),
                weights.len()
            )));
        }
        if labels.ncols() == 0 {
            return Err(Error::invalid("label rows need at least one class"));
        }
        if embedded.iter().any(|x| !x.is_finite()) || labels.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("joint atoms must be finite"));
        }
        if labels.iter().any(|&y| y < 0.0) {
            return Err(Error::invalid("label rows must be non-negative"));
        }
        for (i, row) in labels.rows().into_iter().enumerate() {
            let sum = row.sum();
            if (sum - 1.0).abs() > 1e-10 {
                return Err(Error::invalid(format!(
                    "label row {i} sums to {sum}, expected 1"
                )));
            }
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::invalid("weights must be finite and non-negative"));
        }
        let total = weights.sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::invalid(format!(
                "atom weights sum to {total}, expected 1"
            )));
        }
        Ok(JointAtoms {
            embedded,
            labels,
            weights,
        })
    }

    /// Embeds a labeled dataset: one-hot labels, uniform weights.
    pub fn from_labeled(data: &LabeledDataset, g: &Embedding) -> Result<Self> {
        let embedded = g.apply(data.features.view())?;
        let n = data.len();
        JointAtoms::new(embedded, data.one_hot(), Array1::from_elem(n, 1.0 / n as f64))
    }

    /// Concatenates the sources with block `j` scaled by `alpha_j`.
    pub fn mixture(sources: &[JointAtoms], alpha: &SimplexWeights) -> Result<Self> {
        if sources.is_empty() {
            return Err(Error::invalid("cannot mix zero sources"));
        }
        if alpha.len() != sources.len() {
            return Err(Error::invalid(format!(
                "{} sources but {} mixture weights",
                sources.len(),
                alpha.len()
            )));
        }
        let p = sources[0].feature_dim();
        let k = sources[0].n_classes();
        if sources.iter().any(|s| s.feature_dim() != p || s.n_classes() != k) {
            return Err(Error::invalid(
                "sources disagree on embedding dimension or class count",
            ));
        }
        let embedded_views: Vec<ArrayView2<'_, f64>> =
            sources.iter().map(|s| s.embedded.view()).collect();
        let label_views: Vec<ArrayView2<'_, f64>> =
            sources.iter().map(|s| s.labels.view()).collect();
        let embedded = concatenate(Axis(0), &embedded_views).expect("dims checked");
        let labels = concatenate(Axis(0), &label_views).expect("dims checked");
        let total: usize = sources.iter().map(|s| s.num_atoms()).sum();
        let mut weights = Array1::zeros(total);
        let mut row = 0;
        for (j, s) in sources.iter().enumerate() {
            for &w in s.weights.iter() {
                weights[row] = alpha[j] * w;
                row += 1;
            }
        }
        JointAtoms::new(embedded, labels, weights)
    }

    /// Flattens each atom `(z, y)` into a point of `R^{p+K}` so the joint
    /// distribution can be treated as a plain discrete measure (used by the
    /// total-variation diagnostics).
    pub fn to_measure(&self) -> Result<DiscreteMeasure> {
        let flat = concatenate(Axis(1), &[self.embedded.view(), self.labels.view()])
            .expect("row counts match");
        DiscreteMeasure::new(flat, self.weights.clone())
    }

    pub fn num_atoms(&self) -> usize {
        self.embedded.nrows()
    }

    pub fn feature_dim(&self) -> usize {
        self.embedded.ncols()
    }

    pub fn n_classes(&self) -> usize {
        self.labels.ncols()
    }

    pub fn embedded(&self) -> ArrayView2<'_, f64> {
        self.embedded.view()
    }

    pub fn labels(&self) -> ArrayView2<'_, f64> {
        self.labels.view()
    }

    pub fn weights(&self) -> ndarray::ArrayView1<'_, f64> {
        self.weights.view()
    }
}

/// The self-labeled target distribution: atoms `(z_T, f(z_T))` with uniform
/// weights, where `z_T` are precomputed target embeddings.
pub fn proxy_target(
    classifier: &FeedForwardModel,
    target_embedded: ArrayView2<'_, f64>,
) -> Result<JointAtoms> {
    let n = target_embedded.nrows();
    if n == 0 {
        return Err(Error::invalid("proxy target needs at least one sample"));
    }
    let labels = classifier.forward(target_embedded)?;
    JointAtoms::new(
        target_embedded.to_owned(),
        labels,
        Array1::from_elem(n, 1.0 / n as f64),
    )
}

/// Pairwise joint ground cost `beta * ||z_i - z'_j||^2 + L(y_i, y'_j)`.
pub fn build_joint_cost(
    source_atoms: &JointAtoms,
    target_atoms: &JointAtoms,
    beta: f64,
    label_loss: LabelLoss,
) -> Result<CostMatrix> {
    if !beta.is_finite() || beta < 0.0 {
        return Err(Error::invalid(format!(
            "feature-cost weight beta must be non-negative, got {beta}"
        )));
    }
    if source_atoms.feature_dim() != target_atoms.feature_dim() {
        return Err(Error::invalid(format!(
            "embedding dimensions differ: {} vs {}",
            source_atoms.feature_dim(),
            target_atoms.feature_dim()
        )));
    }
    if source_atoms.n_classes() != target_atoms.n_classes() {
        return Err(Error::invalid(format!(
            "class counts differ: {} vs {}",
            source_atoms.n_classes(),
            target_atoms.n_classes()
        )));
    }

    let feature = CostMatrix::squared_euclidean(source_atoms.embedded(), target_atoms.embedded())?;
    let mut total = feature.into_array();
    total.mapv_inplace(|d| beta * d);
    total += &label_cost_matrix(source_atoms.labels(), target_atoms.labels(), label_loss);
    CostMatrix::new(total)
}

fn label_cost_matrix(
    y_src: ArrayView2<'_, f64>,
    y_tgt: ArrayView2<'_, f64>,
    loss: LabelLoss,
) -> Array2<f64> {
    match loss {
        LabelLoss::SquaredError => {
            let src_sq: Array1<f64> = y_src.rows().into_iter().map(|r| r.dot(&r)).collect();
            let tgt_sq: Array1<f64> = y_tgt.rows().into_iter().map(|r| r.dot(&r)).collect();
            let cross = y_src.dot(&y_tgt.t());
            let mut out = Array2::zeros((y_src.nrows(), y_tgt.nrows()));
            for ((i, j), v) in out.indexed_iter_mut() {
                *v = (src_sq[i] + tgt_sq[j] - 2.0 * cross[(i, j)]).max(0.0);
            }
            out
        }
        LabelLoss::CrossEntropy => {
            let log_tgt = y_tgt.mapv(|p| p.max(LOG_CLAMP).ln());
            -y_src.dot(&log_tgt.t())
        }
        LabelLoss::ZeroOne => {
            let amax = |rows: ArrayView2<'_, f64>| -> Vec<usize> {
                rows.rows()
                    .into_iter()
                    .map(|r| {
                        let mut best = 0;
                        for (k, &v) in r.iter().enumerate() {
                            if v > r[best] {
                                best = k;
                            }
                        }
                        best
                    })
                    .collect()
            };
            let src = amax(y_src);
            let tgt = amax(y_tgt);
            Array2::from_shape_fn((src.len(), tgt.len()), |(i, j)| {
                if src[i] == tgt[j] {
                    0.0
                } else {
                    1.0
                }
            })
        }
    }
}

/// Evaluates the transport objective `W_D(proxy, sum_j alpha_j source_j)` and
/// returns the full solution. Mixture atoms keep their per-source block
/// order, so row `sum_{k<j} N_k + i` of the plan/duals is atom `i` of
/// source `j`.
pub fn wjdot_objective(
    sources: &[JointAtoms],
    alpha: &SimplexWeights,
    target: &JointAtoms,
    beta: f64,
    label_loss: LabelLoss,
) -> Result<(f64, TransportSolution)> {
    let mixture = JointAtoms::mixture(sources, alpha)?;
    let cost = build_joint_cost(&mixture, target, beta, label_loss)?;
    let solution = solve_exact_ot(mixture.weights(), target.weights(), &cost)?;
    Ok((solution.value, solution))
}

/// Per-source gradient of the objective with respect to the mixture weights:
/// the mean of the mixture-side dual potentials over each source block.
///
/// The potentials carry a constant-shift gauge; combined with the projection
/// step a common shift leaves the alpha update unchanged, and the centering
/// convention of [`solve_exact_ot`] makes the returned vector canonical.
pub fn alpha_gradient(solution: &TransportSolution, source_sizes: &[usize]) -> Result<Vec<f64>> {
    let total: usize = source_sizes.iter().sum();
    if total != solution.dual_source.len() {
        return Err(Error::internal(format!(
            "source sizes sum to {total} but the solution has {} mixture duals",
            solution.dual_source.len()
        )));
    }
    if source_sizes.iter().any(|&s| s == 0) {
        return Err(Error::internal("empty source block in alpha gradient"));
    }
    let mut grads = Vec::with_capacity(source_sizes.len());
    let mut offset = 0;
    for &size in source_sizes {
        let block = solution.dual_source.slice(ndarray::s![offset..offset + size]);
        grads.push(block.sum() / size as f64);
        offset += size;
    }
    Ok(grads)
}

/// Fixed-plan gradient of `sum_{i,j} plan_ij * L(y_i, f(z_T_j))` with respect
/// to the classifier parameters. The feature part of the cost does not
/// depend on `f`, so only the label part contributes.
pub fn theta_gradient(
    solution: &TransportSolution,
    sources: &[JointAtoms],
    classifier: &FeedForwardModel,
    target_embedded: ArrayView2<'_, f64>,
    label_loss: LabelLoss,
) -> Result<ModelGradient> {
    let label_views: Vec<ArrayView2<'_, f64>> = sources.iter().map(|s| s.labels()).collect();
    let source_labels = concatenate(Axis(0), &label_views).expect("label widths match");
    theta_gradient_concat(solution, source_labels.view(), classifier, target_embedded, label_loss)
}

fn theta_gradient_concat(
    solution: &TransportSolution,
    source_labels: ArrayView2<'_, f64>,
    classifier: &FeedForwardModel,
    target_embedded: ArrayView2<'_, f64>,
    label_loss: LabelLoss,
) -> Result<ModelGradient> {
    if solution.plan.nrows() != source_labels.nrows() {
        return Err(Error::invalid(format!(
            "plan has {} mixture rows but sources carry {} atoms",
            solution.plan.nrows(),
            source_labels.nrows()
        )));
    }
    if solution.plan.ncols() != target_embedded.nrows() {
        return Err(Error::invalid(format!(
            "plan has {} target columns but {} target embeddings given",
            solution.plan.ncols(),
            target_embedded.nrows()
        )));
    }
    let pred = classifier.forward(target_embedded)?;
    if pred.ncols() != source_labels.ncols() {
        return Err(Error::invalid(format!(
            "classifier outputs {} classes, sources carry {}",
            pred.ncols(),
            source_labels.ncols()
        )));
    }

    // Per target atom j: dObj/dpred_j = sum_i plan_ij dL(y_i, .)/dpred.
    let column_mass = solution.plan.sum_axis(Axis(0));
    let weighted_labels = solution.plan.t().dot(&source_labels); // N_T x K
    let upstream = match label_loss {
        LabelLoss::SquaredError => {
            let mut up = pred.clone();
            for ((j, k), u) in up.indexed_iter_mut() {
                *u = 2.0 * (column_mass[j] * *u - weighted_labels[(j, k)]);
            }
            up
        }
        LabelLoss::CrossEntropy => {
            let mut up = Array2::zeros(pred.raw_dim());
            for ((j, k), u) in up.indexed_iter_mut() {
                let w = weighted_labels[(j, k)];
                if w != 0.0 {
                    *u = -w / pred[(j, k)].max(LOG_CLAMP);
                }
            }
            up
        }
        LabelLoss::ZeroOne => Array2::zeros(pred.raw_dim()),
    };
    let (grad, _) = classifier.backward(target_embedded, &upstream)?;
    Ok(grad)
}

/// Model-selection criterion evaluated during the adaptation loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ValidationKind {
    /// Unsupervised: scatter of target embeddings around the centroid of
    /// their predicted class (lower is better).
    #[default]
    Sse,
    /// `sum_j alpha_j * accuracy(f on source j)` (higher is better).
    WeightedAccuracy,
    /// No criterion; the loop always runs to `max_iters`.
    None,
}

impl ValidationKind {
    pub fn name(&self) -> &'static str {
        match self {
            ValidationKind::Sse => "sse",
            ValidationKind::WeightedAccuracy => "weighted-accuracy",
            ValidationKind::None => "none",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "sse" => Ok(ValidationKind::Sse),
            "weighted-accuracy" => Ok(ValidationKind::WeightedAccuracy),
            "none" => Ok(ValidationKind::None),
            other => Err(Error::invalid(format!("unknown validation kind '{other}'"))),
        }
    }

    /// True when `candidate` strictly improves on `incumbent`.
    fn improves(&self, candidate: f64, incumbent: f64) -> bool {
        match self {
            ValidationKind::Sse => candidate < incumbent,
            ValidationKind::WeightedAccuracy => candidate > incumbent,
            ValidationKind::None => false,
        }
    }
}

/// Configuration of the alternating adaptation loop.
#[derive(Debug, Clone)]
pub struct WjdotConfig {
    /// Weight of the feature part of the joint cost.
    pub beta: f64,
    /// Projected-gradient step for the mixture weights.
    pub step_alpha: f64,
    /// Gradient step for the classifier parameters.
    pub step_theta: f64,
    pub max_iters: usize,
    pub validation: ValidationKind,
    /// Consecutive non-improving iterations tolerated before stopping.
    pub patience: usize,
    /// Decay the weight step as 1/sqrt(t+1). The transport value is piecewise
    /// linear in the weights, so the decay is what lets the iterates settle;
    /// turn it off to keep exploring flat faces at a fixed rate.
    pub alpha_decay: bool,
    pub label_loss: LabelLoss,
    /// Re-solve the transport problem between the theta and alpha updates
    /// (the literal reading of the alternating scheme). With `false` both
    /// gradients reuse the solve from the start of the iteration.
    pub refresh_between_updates: bool,
    /// Seed for the classifier initialization.
    pub seed: u64,
    /// Hidden layer widths of the classifier; empty means linear softmax.
    pub hidden: Vec<usize>,
    pub activation: Activation,
}

impl Default for WjdotConfig {
    fn default() -> Self {
        WjdotConfig {
            beta: 1.0,
            step_alpha: 1.0,
            step_theta: 1.0,
            max_iters: 150,
            validation: ValidationKind::Sse,
            patience: 20,
            alpha_decay: true,
            label_loss: LabelLoss::SquaredError,
            refresh_between_updates: true,
            seed: 0,
            hidden: Vec::new(),
            activation: Activation::Tanh,
        }
    }
}

impl WjdotConfig {
    fn validate(&self) -> Result<()> {
        if !self.beta.is_finite() || self.beta < 0.0 {
            return Err(Error::invalid("beta must be finite and non-negative"));
        }
        if !self.step_alpha.is_finite() || self.step_alpha < 0.0 {
            return Err(Error::invalid("step_alpha must be non-negative"));
        }
        if !self.step_theta.is_finite() || self.step_theta <= 0.0 {
            return Err(Error::invalid("step_theta must be positive"));
        }
        if self.max_iters == 0 {
            return Err(Error::invalid("max_iters must be at least 1"));
        }
        Ok(())
    }
}

/// One recorded iteration of the loop: the objective at the iteration start,
/// then the validation score and weights after its updates.
#[derive(Debug, Clone)]
pub struct IterationRecord {
    pub iteration: usize,
    pub objective: f64,
    pub validation_score: f64,
    pub alpha: Vec<f64>,
}

/// Result of [`run_wjdot`]: the selected classifier/weights (best validation
/// snapshot, or the final iterate without a criterion) plus the trajectory.
#[derive(Debug, Clone)]
pub struct WjdotState {
    pub classifier: FeedForwardModel,
    pub alpha: SimplexWeights,
    pub history: Vec<IterationRecord>,
    pub best_iteration: usize,
    pub stopped_early: bool,
}

/// Runs the alternating adaptation loop.
///
/// Initializes `alpha` uniform and the classifier from `config.seed`, then
/// per iteration: solve the transport problem, step the classifier along the
/// fixed-plan gradient, (optionally re-solve,) step-and-project the mixture
/// weights, and evaluate the validation criterion. Deterministic given the
/// seed.
pub fn run_wjdot(
    sources: &[LabeledDataset],
    target_features: ArrayView2<'_, f64>,
    g: &Embedding,
    config: &WjdotConfig,
) -> Result<WjdotState> {
    config.validate()?;
    if sources.is_empty() {
        return Err(Error::invalid("need at least one source domain"));
    }
    let dim = sources[0].dim();
    let n_classes = sources[0].n_classes;
    if sources.iter().any(|s| s.dim() != dim || s.n_classes != n_classes) {
        return Err(Error::invalid(
            "sources disagree on feature dimension or class count",
        ));
    }
    if target_features.nrows() == 0 {
        return Err(Error::invalid("target sample is empty"));
    }
    if target_features.ncols() != dim {
        return Err(Error::invalid(format!(
            "target features have dimension {}, sources have {dim}",
            target_features.ncols()
        )));
    }

    let source_atoms: Vec<JointAtoms> = sources
        .iter()
        .map(|s| JointAtoms::from_labeled(s, g))
        .collect::<Result<_>>()?;
    let source_sizes: Vec<usize> = source_atoms.iter().map(|s| s.num_atoms()).collect();
    let target_embedded = g.apply(target_features)?;
    let embed_dim = target_embedded.ncols();

    let mut arch = vec![embed_dim];
    arch.extend_from_slice(&config.hidden);
    arch.push(n_classes);
    let mut classifier =
        FeedForwardModel::new(&arch, config.activation, OutputKind::Softmax, config.seed)?;
    let mut alpha = SimplexWeights::uniform(sources.len())?;

    let mut history = Vec::with_capacity(config.max_iters);
    let mut best: Option<(f64, FeedForwardModel, SimplexWeights, usize)> = None;
    let mut since_improvement = 0usize;
    let mut stopped_early = false;

    for iteration in 0..config.max_iters {
        let target = proxy_target(&classifier, target_embedded.view())?;
        let (objective, solution) =
            wjdot_objective(&source_atoms, &alpha, &target, config.beta, config.label_loss)?;
        if !objective.is_finite() {
            return Err(Error::Diverged { iteration });
        }

        let theta_grad = theta_gradient(
            &solution,
            &source_atoms,
            &classifier,
            target_embedded.view(),
            config.label_loss,
        )?;
        classifier.apply_gradient(&theta_grad, config.step_theta);

        // A zero step (or a single source) freezes alpha exactly; skip the
        // update and the refresh solve that only feeds it.
        if config.step_alpha > 0.0 && sources.len() > 1 {
            let alpha_solution = if config.refresh_between_updates {
                let refreshed = proxy_target(&classifier, target_embedded.view())?;
                let (_, solution) = wjdot_objective(
                    &source_atoms,
                    &alpha,
                    &refreshed,
                    config.beta,
                    config.label_loss,
                )?;
                solution
            } else {
                solution
            };
            let step = if config.alpha_decay {
                config.step_alpha / ((iteration + 1) as f64).sqrt()
            } else {
                config.step_alpha
            };
            let grads = alpha_gradient(&alpha_solution, &source_sizes)?;
            let stepped = alpha.as_array() - &(Array1::from_vec(grads) * step);
            alpha = project_to_simplex(stepped.view())?;
        }

        let score = validation_score_embedded(
            config.validation,
            &classifier,
            &alpha,
            &source_atoms,
            target_embedded.view(),
        )?;
        history.push(IterationRecord {
            iteration,
            objective,
            validation_score: score,
            alpha: alpha.as_slice().to_vec(),
        });

        match config.validation {
            ValidationKind::None => {}
            kind => {
                let improved = match &best {
                    None => true,
                    Some((incumbent, _, _, _)) => kind.improves(score, *incumbent),
                };
                if improved {
                    best = Some((score, classifier.clone(), alpha.clone(), iteration));
                    since_improvement = 0;
                } else {
                    since_improvement += 1;
                    if since_improvement >= config.patience {
                        stopped_early = true;
                        break;
                    }
                }
            }
        }
    }

    let (classifier, alpha, best_iteration) = match best {
        Some((_, model, weights, at)) => (model, weights, at),
        None => {
            let last = history.len().saturating_sub(1);
            (classifier, alpha, last)
        }
    };
    Ok(WjdotState {
        classifier,
        alpha,
        history,
        best_iteration,
        stopped_early,
    })
}

/// Public validation criterion: embeds everything through `g` and delegates.
pub fn validation_score(
    kind: ValidationKind,
    classifier: &FeedForwardModel,
    alpha: &SimplexWeights,
    sources: &[LabeledDataset],
    target_features: ArrayView2<'_, f64>,
    g: &Embedding,
) -> Result<f64> {
    let source_atoms: Vec<JointAtoms> = sources
        .iter()
        .map(|s| JointAtoms::from_labeled(s, g))
        .collect::<Result<_>>()?;
    let target_embedded = g.apply(target_features)?;
    validation_score_embedded(kind, classifier, alpha, &source_atoms, target_embedded.view())
}

fn validation_score_embedded(
    kind: ValidationKind,
    classifier: &FeedForwardModel,
    alpha: &SimplexWeights,
    source_atoms: &[JointAtoms],
    target_embedded: ArrayView2<'_, f64>,
) -> Result<f64> {
    match kind {
        ValidationKind::None => Ok(f64::NAN),
        ValidationKind::Sse => {
            let predicted = classifier.predict_labels(target_embedded)?;
            let k = classifier.output_dim();
            let p = target_embedded.ncols();
            let mut centroids = Array2::<f64>::zeros((k, p));
            let mut counts = vec![0usize; k];
            for (row, &label) in target_embedded.rows().into_iter().zip(predicted.iter()) {
                let mut c = centroids.row_mut(label);
                c += &row;
                counts[label] += 1;
            }
            for (mut c, &count) in centroids.rows_mut().into_iter().zip(counts.iter()) {
                if count > 0 {
                    c.mapv_inplace(|v| v / count as f64);
                }
            }
            let mut sse = 0.0;
            for (row, &label) in target_embedded.rows().into_iter().zip(predicted.iter()) {
                let diff = &row - &centroids.row(label);
                sse += diff.dot(&diff);
            }
            Ok(sse)
        }
        ValidationKind::WeightedAccuracy => {
            if alpha.len() != source_atoms.len() {
                return Err(Error::invalid(format!(
                    "{} sources but {} weights in validation",
                    source_atoms.len(),
                    alpha.len()
                )));
            }
            let mut total = 0.0;
            for (j, atoms) in source_atoms.iter().enumerate() {
                let predicted = classifier.predict_labels(atoms.embedded())?;
                let truth: Vec<usize> = atoms
                    .labels()
                    .rows()
                    .into_iter()
                    .map(|r| {
                        let mut best = 0;
                        for (k, &v) in r.iter().enumerate() {
                            if v > r[best] {
                                best = k;
                            }
                        }
                        best
                    })
                    .collect();
                let correct = predicted
                    .iter()
                    .zip(truth.iter())
                    .filter(|(a, b)| a == b)
                    .count();
                total += alpha[j] * correct as f64 / atoms.num_atoms() as f64;
            }
            Ok(total)
        }
    }
}

/// Runs the loop once per candidate `beta` and keeps the best according to
/// the configured validation criterion (falling back to the final objective
/// when the criterion is `None`).
pub fn select_beta(
    sources: &[LabeledDataset],
    target_features: ArrayView2<'_, f64>,
    g: &Embedding,
    config: &WjdotConfig,
    grid: &[f64],
) -> Result<(f64, WjdotState)> {
    if grid.is_empty() {
        return Err(Error::invalid("beta grid is empty"));
    }
    let mut best: Option<(f64, f64, WjdotState)> = None;
    for &beta in grid {
        let mut candidate_config = config.clone();
        candidate_config.beta = beta;
        let state = run_wjdot(sources, target_features, g, &candidate_config)?;
        let score = match config.validation {
            ValidationKind::None => {
                state.history.last().map(|r| r.objective).unwrap_or(f64::INFINITY)
            }
            _ => state
                .history
                .get(state.best_iteration)
                .map(|r| r.validation_score)
                .unwrap_or(f64::NAN),
        };
        let better = match (&best, config.validation) {
            (None, _) => true,
            (Some((incumbent, _, _)), ValidationKind::None) => score < *incumbent,
            (Some((incumbent, _, _)), kind) => kind.improves(score, *incumbent),
        };
        if better {
            best = Some((score, beta, state));
        }
    }
    let (_, beta, state) = best.expect("grid is non-empty");
    Ok((beta, state))
}

/// Diagnostic quantities around the generalization bound: the weighted
/// source error, the target error, the total variation between the joint
/// empirical distributions, and the implied bound values.
#[derive(Debug, Clone)]
pub struct BoundDiagnostics {
    /// `sum_j alpha_j * (0-1 error of f on source j)`.
    pub eps_alpha: f64,
    /// 0-1 error of `f` on the labeled target sample.
    pub eps_t: f64,
    /// Total variation between the alpha-mixture of joint source empiricals
    /// and the joint target empirical.
    pub tv: f64,
    /// `eps_alpha + loss_bound * tv` — the bound's right-hand side.
    pub lemma1_rhs: f64,
    /// `eps_alpha + eps_t`: an upper bound on the joint-risk similarity
    /// measure, since the learned classifier stands in for the minimizer.
    pub lambda_upper: f64,
}

/// Computes [`BoundDiagnostics`] for a classifier on labeled data (the
/// target labels are used for diagnostics only). Features are taken as
/// given — embed beforehand if the classifier expects embeddings.
pub fn bound_diagnostics(
    classifier: &FeedForwardModel,
    sources: &[LabeledDataset],
    alpha: &SimplexWeights,
    target_labeled: &LabeledDataset,
    loss_bound: f64,
) -> Result<BoundDiagnostics> {
    if sources.is_empty() {
        return Err(Error::invalid("need at least one source domain"));
    }
    if alpha.len() != sources.len() {
        return Err(Error::invalid(format!(
            "{} sources but {} mixture weights",
            sources.len(),
            alpha.len()
        )));
    }
    if !loss_bound.is_finite() || loss_bound < 0.0 {
        return Err(Error::invalid("loss bound must be finite and non-negative"));
    }

    let mut eps_alpha = 0.0;
    for (j, s) in sources.iter().enumerate() {
        eps_alpha += alpha[j] * (1.0 - s.accuracy_of(classifier)?);
    }
    let eps_t = 1.0 - target_labeled.accuracy_of(classifier)?;

    let joint = |d: &LabeledDataset| -> Result<DiscreteMeasure> {
        let n = d.len();
        let mut flat = Array2::zeros((n, d.dim() + 1));
        flat.slice_mut(ndarray::s![.., ..d.dim()]).assign(&d.features);
        for (i, &y) in d.labels.iter().enumerate() {
            flat[(i, d.dim())] = y as f64;
        }
        DiscreteMeasure::new(flat, Array1::from_elem(n, 1.0 / n as f64))
    };
    let source_measures: Vec<DiscreteMeasure> =
        sources.iter().map(joint).collect::<Result<_>>()?;
    let mixture = crate::measure::mix_measures(&source_measures, alpha)?;
    let target_measure = joint(target_labeled)?;
    let tv = tv_distance_discrete(&mixture, &target_measure)?;

    Ok(BoundDiagnostics {
        eps_alpha,
        eps_t,
        tv,
        lemma1_rhs: eps_alpha + loss_bound * tv,
        lambda_upper: eps_alpha + eps_t,
    })
}
