//! Reference methods the adaptation engine is compared against: plain
//! empirical risk minimization on pooled data, and the two naive
//! multi-source variants of joint distribution transport — concatenate all
//! sources into one (no notion of source relevance), or sum independent
//! per-source transport losses (every source weighs in equally).

use ndarray::{Array2, ArrayView2, Axis};

use crate::error::{Error, Result};
use crate::model::{
    Activation, Embedding, FeedForwardModel, LabelLoss, LabeledDataset, ModelGradient, OutputKind,
};
use crate::wjdot::{
    proxy_target, run_wjdot, theta_gradient, wjdot_objective, IterationRecord, JointAtoms,
    ValidationKind, WjdotConfig, WjdotState,
};
use crate::simplex::SimplexWeights;

/// Concatenates datasets in order into a single pooled dataset (domain id 0).
pub fn pool_datasets(datasets: &[LabeledDataset]) -> Result<LabeledDataset> {
    if datasets.is_empty() {
        return Err(Error::invalid("no datasets to pool"));
    }
    let dim = datasets[0].dim();
    let n_classes = datasets[0].n_classes;
    if datasets.iter().any(|d| d.dim() != dim || d.n_classes != n_classes) {
        return Err(Error::invalid(
            "datasets disagree on feature dimension or class count",
        ));
    }
    let views: Vec<ArrayView2<'_, f64>> = datasets.iter().map(|d| d.features.view()).collect();
    let features = ndarray::concatenate(Axis(0), &views).expect("dims checked");
    let labels = datasets.iter().flat_map(|d| d.labels.iter().copied()).collect();
    LabeledDataset::new(features, labels, 0, n_classes)
}

/// Supervised training configuration for [`train_erm`].
#[derive(Debug, Clone)]
pub struct ErmConfig {
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub loss: LabelLoss,
    pub steps: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for ErmConfig {
    fn default() -> Self {
        ErmConfig {
            hidden: Vec::new(),
            activation: Activation::Tanh,
            loss: LabelLoss::SquaredError,
            steps: 400,
            learning_rate: 1.0,
            seed: 0,
        }
    }
}

/// Full-batch gradient descent on the pooled datasets. Covers the usual
/// supervised baselines by dataset choice: sources only, target only (labels
/// used), or both. With a validation set the returned model is the snapshot
/// with the best validation accuracy, otherwise the final iterate.
pub fn train_erm(
    datasets: &[LabeledDataset],
    validation: Option<&LabeledDataset>,
    config: &ErmConfig,
) -> Result<FeedForwardModel> {
    if !config.learning_rate.is_finite() || config.learning_rate < 0.0 {
        return Err(Error::invalid("learning rate must be non-negative"));
    }
    let pooled = pool_datasets(datasets)?;
    if let Some(v) = validation {
        if v.dim() != pooled.dim() || v.n_classes != pooled.n_classes {
            return Err(Error::invalid(
                "validation set disagrees on feature dimension or class count",
            ));
        }
    }
    let mut arch = vec![pooled.dim()];
    arch.extend_from_slice(&config.hidden);
    arch.push(pooled.n_classes);
    let mut model =
        FeedForwardModel::new(&arch, config.activation, OutputKind::Softmax, config.seed)?;
    let targets = pooled.one_hot();
    let mut best: Option<(f64, FeedForwardModel)> = None;
    for _ in 0..config.steps {
        let pred = model.forward(pooled.features.view())?;
        let upstream = config.loss.batch_upstream(&targets, &pred);
        let (grad, _) = model.backward(pooled.features.view(), &upstream)?;
        model.apply_gradient(&grad, config.learning_rate);
        if let Some(v) = validation {
            let acc = v.accuracy_of(&model)?;
            if best.as_ref().is_none_or(|(incumbent, _)| acc > *incumbent) {
                best = Some((acc, model.clone()));
            }
        }
    }
    Ok(match best {
        Some((_, snapshot)) => snapshot,
        None => model,
    })
}

/// Joint distribution transport with all sources concatenated into one:
/// runs the adaptation loop on the pooled source, so there are no mixture
/// weights to learn. With equal source sizes this matches the weighted loop
/// frozen at uniform weights.
pub fn run_cjdot(
    sources: &[LabeledDataset],
    target_features: ArrayView2<'_, f64>,
    g: &Embedding,
    config: &WjdotConfig,
) -> Result<WjdotState> {
    let pooled = pool_datasets(sources)?;
    run_wjdot(&[pooled], target_features, g, config)
}

/// Joint distribution transport as a plain sum of per-source losses:
/// each iteration solves one transport problem per source against the
/// shared proxy target and sums the classifier gradients. Every source
/// contributes equally regardless of how well it matches the target; the
/// recorded weights stay uniform.
pub fn run_mjdot(
    sources: &[LabeledDataset],
    target_features: ArrayView2<'_, f64>,
    g: &Embedding,
    config: &WjdotConfig,
) -> Result<WjdotState> {
    config_validate_for_mjdot(config)?;
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
    let target_embedded = g.apply(target_features)?;
    let mut arch = vec![target_embedded.ncols()];
    arch.extend_from_slice(&config.hidden);
    arch.push(n_classes);
    let mut classifier =
        FeedForwardModel::new(&arch, config.activation, OutputKind::Softmax, config.seed)?;
    let alpha = SimplexWeights::uniform(sources.len())?;
    let single = SimplexWeights::uniform(1)?;

    let mut history = Vec::with_capacity(config.max_iters);
    let mut best: Option<(f64, FeedForwardModel, usize)> = None;
    let mut since_improvement = 0usize;
    let mut stopped_early = false;

    for iteration in 0..config.max_iters {
        let target = proxy_target(&classifier, target_embedded.view())?;
        let mut objective = 0.0;
        let mut total_grad = ModelGradient::zeros_like(&classifier);
        for atoms in &source_atoms {
            let pair = std::slice::from_ref(atoms);
            let (value, solution) =
                wjdot_objective(pair, &single, &target, config.beta, config.label_loss)?;
            objective += value;
            let grad = theta_gradient(
                &solution,
                pair,
                &classifier,
                target_embedded.view(),
                config.label_loss,
            )?;
            total_grad.add_scaled(&grad, 1.0);
        }
        if !objective.is_finite() {
            return Err(Error::Diverged { iteration });
        }
        classifier.apply_gradient(&total_grad, config.step_theta);

        let score = mjdot_validation(config.validation, &classifier, &alpha, &source_atoms,
            target_embedded.view())?;
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
                    Some((incumbent, _, _)) => kind_improves(kind, score, *incumbent),
                };
                if improved {
                    best = Some((score, classifier.clone(), iteration));
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

    let (classifier, best_iteration) = match best {
        Some((_, model, at)) => (model, at),
        None => {
            let last = history.len().saturating_sub(1);
            (classifier, last)
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

fn config_validate_for_mjdot(config: &WjdotConfig) -> Result<()> {
    if !config.beta.is_finite() || config.beta < 0.0 {
        return Err(Error::invalid("beta must be finite and non-negative"));
    }
    if !config.step_theta.is_finite() || config.step_theta <= 0.0 {
        return Err(Error::invalid("step_theta must be positive"));
    }
    if config.max_iters == 0 {
        return Err(Error::invalid("max_iters must be at least 1"));
    }
    Ok(())
}

fn kind_improves(kind: ValidationKind, candidate: f64, incumbent: f64) -> bool {
    match kind {
        ValidationKind::Sse => candidate < incumbent,
        ValidationKind::WeightedAccuracy => candidate > incumbent,
        ValidationKind::None => false,
    }
}

fn mjdot_validation(
    kind: ValidationKind,
    classifier: &FeedForwardModel,
    alpha: &SimplexWeights,
    source_atoms: &[JointAtoms],
    target_embedded: ArrayView2<'_, f64>,
) -> Result<f64> {
    match kind {
        ValidationKind::None => Ok(f64::NAN),
        ValidationKind::Sse => sse_score(classifier, target_embedded),
        ValidationKind::WeightedAccuracy => {
            let mut total = 0.0;
            for (j, atoms) in source_atoms.iter().enumerate() {
                let predicted = classifier.predict_labels(atoms.embedded())?;
                let truth = atoms.labels();
                let correct = predicted
                    .iter()
                    .enumerate()
                    .filter(|&(i, &p)| {
                        let row = truth.row(i);
                        let mut best = 0;
                        for (k, &v) in row.iter().enumerate() {
                            if v > row[best] {
                                best = k;
                            }
                        }
                        best == p
                    })
                    .count();
                total += alpha[j] * correct as f64 / atoms.num_atoms() as f64;
            }
            Ok(total)
        }
    }
}

fn sse_score(classifier: &FeedForwardModel, target_embedded: ArrayView2<'_, f64>) -> Result<f64> {
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

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn separable_pair() -> (LabeledDataset, LabeledDataset) {
        let a = LabeledDataset::new(
            array![[-1.0, 0.2], [-1.2, -0.1], [-0.9, 0.0]],
            vec![0, 0, 0],
            0,
            2,
        )
        .unwrap();
        let b = LabeledDataset::new(
            array![[1.0, -0.2], [1.1, 0.1], [0.9, 0.0]],
            vec![1, 1, 1],
            1,
            2,
        )
        .unwrap();
        (a, b)
    }

    #[test]
    fn pooling_concatenates_in_order() {
        let (a, b) = separable_pair();
        let pooled = pool_datasets(&[a.clone(), b.clone()]).unwrap();
        assert_eq!(pooled.len(), 6);
        assert_eq!(pooled.labels, vec![0, 0, 0, 1, 1, 1]);
        assert_eq!(pooled.features.row(3), b.features.row(0));
        assert!(pool_datasets(&[]).is_err());
    }

    #[test]
    fn erm_reaches_full_accuracy_on_separable_data() {
        let (a, b) = separable_pair();
        let model = train_erm(&[a.clone(), b.clone()], None, &ErmConfig::default()).unwrap();
        let pooled = pool_datasets(&[a, b]).unwrap();
        assert!(pooled.accuracy_of(&model).unwrap() >= 0.99);
    }

    #[test]
    fn erm_zero_rate_leaves_parameters_at_initialization() {
        let (a, _) = separable_pair();
        let config = ErmConfig {
            learning_rate: 0.0,
            steps: 50,
            ..ErmConfig::default()
        };
        let trained = train_erm(std::slice::from_ref(&a), None, &config).unwrap();
        let fresh = FeedForwardModel::new(
            &[2, 2],
            config.activation,
            OutputKind::Softmax,
            config.seed,
        )
        .unwrap();
        assert_eq!(trained.params_flat(), fresh.params_flat());
    }

    #[test]
    fn erm_with_validation_returns_best_snapshot() {
        let (a, b) = separable_pair();
        let validation = pool_datasets(&[a.clone(), b.clone()]).unwrap();
        let model = train_erm(
            &[a, b],
            Some(&validation),
            &ErmConfig {
                steps: 200,
                ..ErmConfig::default()
            },
        )
        .unwrap();
        assert!(validation.accuracy_of(&model).unwrap() >= 0.99);
    }

    #[test]
    fn mjdot_objective_is_the_sum_of_independent_single_source_runs() {
        let (a, b) = separable_pair();
        let x_t = array![[-1.0, 0.1], [1.0, -0.1], [0.8, 0.2], [-0.9, -0.2]];
        let config = WjdotConfig {
            max_iters: 1,
            validation: ValidationKind::None,
            ..WjdotConfig::default()
        };
        let joint = run_mjdot(&[a.clone(), b.clone()], x_t.view(), &Embedding::Identity, &config)
            .unwrap();
        let single_a =
            run_wjdot(&[a], x_t.view(), &Embedding::Identity, &config).unwrap();
        let single_b =
            run_wjdot(&[b], x_t.view(), &Embedding::Identity, &config).unwrap();
        let sum = single_a.history[0].objective + single_b.history[0].objective;
        assert!((joint.history[0].objective - sum).abs() < 1e-9);
        assert_eq!(joint.alpha.len(), 2);
        assert!((joint.alpha[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn cjdot_single_source_matches_weighted_loop() {
        let (a, _) = separable_pair();
        let x_t = array![[-1.0, 0.1], [1.0, -0.1]];
        let config = WjdotConfig {
            max_iters: 5,
            validation: ValidationKind::None,
            ..WjdotConfig::default()
        };
        let cj = run_cjdot(std::slice::from_ref(&a), x_t.view(), &Embedding::Identity, &config)
            .unwrap();
        let wj = run_wjdot(&[a], x_t.view(), &Embedding::Identity, &config).unwrap();
        for (r1, r2) in cj.history.iter().zip(wj.history.iter()) {
            assert_eq!(r1.objective, r2.objective);
        }
    }

    #[test]
    fn cjdot_equals_frozen_uniform_weights_on_equal_sizes() {
        let (a, b) = separable_pair();
        let x_t = array![[-1.0, 0.1], [1.0, -0.1], [0.7, 0.3], [-0.6, -0.3]];
        let config = WjdotConfig {
            max_iters: 8,
            validation: ValidationKind::None,
            step_alpha: 0.0,
            ..WjdotConfig::default()
        };
        let cj = run_cjdot(&[a.clone(), b.clone()], x_t.view(), &Embedding::Identity, &config)
            .unwrap();
        let frozen = run_wjdot(&[a, b], x_t.view(), &Embedding::Identity, &config).unwrap();
        assert_eq!(cj.history.len(), frozen.history.len());
        for (r1, r2) in cj.history.iter().zip(frozen.history.iter()) {
            assert!(
                (r1.objective - r2.objective).abs() < 1e-9,
                "iteration {}: {} vs {}",
                r1.iteration,
                r1.objective,
                r2.objective
            );
        }
    }
}
