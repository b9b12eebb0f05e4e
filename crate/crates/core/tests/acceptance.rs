//! Acceptance suite: the study-level behaviors and numerical guarantees this
//! project commits to. Every test covers one criterion, runs at a fixed seed
//! set, and prints a single summary line when it passes. The study tests
//! (criteria 1-4) run the full simulated experiments and take minutes; the
//! numerical criteria (5-11) are quick oracle comparisons.

mod common;

use std::f64::consts::PI;
use std::time::Instant;

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use wjdot::{
    bound_diagnostics, bures_wasserstein, generate_rotation_domains, generate_target_shift,
    mix_measures, project_to_simplex, rotation_angles, run_cjdot, run_wjdot,
    shift_proportions, solve_exact_ot, split_dataset, train_erm, Activation, CostMatrix,
    DiscreteMeasure, Embedding, ErmConfig, FeedForwardModel, GaussianSummary, JointAtoms,
    LabelLoss, LabeledDataset, OutputKind, RotationShiftSpec, SimplexWeights, TargetAngle,
    TargetShiftSpec, ValidationKind, WjdotConfig,
};

#[test]
fn criterion_01_bracketing_sources_get_the_mass_and_the_accuracy() {
    // Four sources at angles {0, pi/2, pi, 3pi/2}, target at 3pi/4: the two
    // bracketing sources must carry almost all mixture weight and the
    // adapted classifier must read the target test split accurately.
    let mut weight_ok = 0;
    let mut accuracy_ok = 0;
    let mut slowest = 0.0f64;
    for seed in 0..50u64 {
        let t0 = Instant::now();
        let spec = RotationShiftSpec {
            n_sources: 4,
            n_per_source: 300,
            n_target: 300,
            target_angle: TargetAngle::Fixed(0.75 * PI),
            seed,
            ..RotationShiftSpec::default()
        };
        let (sources, target) = generate_rotation_domains(&spec).unwrap();
        let (train, _val, test) = split_dataset(&target, seed).unwrap();
        let config = WjdotConfig {
            beta: 1.0,
            max_iters: 100,
            patience: 15,
            validation: ValidationKind::Sse,
            seed,
            ..WjdotConfig::default()
        };
        let state =
            run_wjdot(&sources, train.features.view(), &Embedding::Identity, &config).unwrap();
        let a = state.alpha.as_slice();
        if a[1] + a[2] > 0.9 && a[0] + a[3] < 0.1 {
            weight_ok += 1;
        }
        if test.accuracy_of(&state.classifier).unwrap() >= 0.90 {
            accuracy_ok += 1;
        }
        slowest = slowest.max(t0.elapsed().as_secs_f64());
    }
    assert!(weight_ok >= 45, "bracketing weights held in only {weight_ok}/50 seeds");
    assert!(accuracy_ok >= 45, "accuracy >= 0.90 in only {accuracy_ok}/50 seeds");
    assert!(slowest < 60.0, "slowest seed took {slowest:.1}s");
    println!(
        "[criterion 1] PASS — bracketing weight mass in {weight_ok}/50 seeds, \
         accuracy >= 0.90 in {accuracy_ok}/50, slowest seed {slowest:.1}s"
    );
}

#[test]
fn criterion_02_thirty_source_sweep_beats_baseline_and_tracks_the_diagonal() {
    // J = 30 sources across the angle range; for a sweep of target angles
    // the learned weights must peak at the source nearest the target
    // (the heatmap diagonal) and beat a sources-only classifier broadly.
    let n_cases = 20;
    let angles = rotation_angles(30);
    let grid_step = angles[1] - angles[0];
    let mut adapted_total = 0.0;
    let mut baseline_total = 0.0;
    let mut diagonal_ok = 0;
    for case in 0..n_cases {
        // Target angles offset from the source grid so "nearest source" is
        // unambiguous, spread over the full range.
        let theta_t = (case as f64 + 0.37) / n_cases as f64
            * wjdot::datagen::ROTATION_MAX_ANGLE
            * 0.97;
        let seed = 100 + case as u64;
        let spec = RotationShiftSpec {
            n_sources: 30,
            n_per_source: 300,
            n_target: 300,
            target_angle: TargetAngle::Fixed(theta_t),
            seed,
            ..RotationShiftSpec::default()
        };
        let (sources, target) = generate_rotation_domains(&spec).unwrap();
        let (train, val, test) = split_dataset(&target, seed).unwrap();
        let config = WjdotConfig {
            beta: 1.0,
            max_iters: 50,
            patience: 50,
            validation: ValidationKind::Sse,
            refresh_between_updates: false,
            seed,
            ..WjdotConfig::default()
        };
        let state =
            run_wjdot(&sources, train.features.view(), &Embedding::Identity, &config).unwrap();
        adapted_total += test.accuracy_of(&state.classifier).unwrap();

        let argmax = (0..30)
            .max_by(|&x, &y| state.alpha[x].total_cmp(&state.alpha[y]))
            .unwrap();
        if (angles[argmax] - theta_t).abs() / grid_step <= 2.0 {
            diagonal_ok += 1;
        }

        let baseline = train_erm(
            &sources,
            Some(&val),
            &ErmConfig {
                seed,
                ..ErmConfig::default()
            },
        )
        .unwrap();
        baseline_total += test.accuracy_of(&baseline).unwrap();
    }
    let adapted_mean = adapted_total / n_cases as f64;
    let baseline_mean = baseline_total / n_cases as f64;
    assert!(
        adapted_mean >= baseline_mean + 0.10,
        "adapted mean {adapted_mean:.3} vs baseline {baseline_mean:.3}"
    );
    let needed = (n_cases as usize * 4).div_ceil(5);
    assert!(
        diagonal_ok >= needed,
        "argmax weight within 2 grid steps for only {diagonal_ok}/{n_cases} angles"
    );
    println!(
        "[criterion 2] PASS — adapted mean accuracy {adapted_mean:.3} vs baseline \
         {baseline_mean:.3}, diagonal hit {diagonal_ok}/{n_cases} target angles"
    );
}

#[test]
fn criterion_03_target_shift_beats_pooling_and_weights_matching_proportions() {
    // J = 20 sources whose class balance sweeps 0.1..0.9; for each target
    // proportion the weighted adaptation must match or beat the pooled
    // variant, and on average the weights must sit on sources whose balance
    // is within 0.1 of the target's.
    let source_props = shift_proportions(20);
    let target_grid = shift_proportions(9);
    let seeds_per_point = 20u64;
    let mut window_total = 0.0;
    let mut window_runs = 0usize;
    let mut per_point = Vec::new();
    for &p_t in &target_grid {
        let mut weighted_total = 0.0;
        let mut pooled_total = 0.0;
        for k in 0..seeds_per_point {
            let seed = 100 + k;
            let spec = TargetShiftSpec {
                n_sources: 20,
                n_per_source: 60,
                n_target: 60,
                source_proportions: source_props.clone(),
                target_proportion: p_t,
                sigma: 0.7,
                seed,
            };
            let (sources, target) = generate_target_shift(&spec).unwrap();
            let weighted_config = WjdotConfig {
                beta: 1.0,
                step_alpha: 0.05,
                alpha_decay: false,
                max_iters: 200,
                patience: 200,
                validation: ValidationKind::None,
                refresh_between_updates: false,
                seed,
                ..WjdotConfig::default()
            };
            let pooled_config = WjdotConfig {
                max_iters: 40,
                ..weighted_config.clone()
            };
            let weighted = run_wjdot(
                &sources,
                target.features.view(),
                &Embedding::Identity,
                &weighted_config,
            )
            .unwrap();
            let pooled = run_cjdot(
                &sources,
                target.features.view(),
                &Embedding::Identity,
                &pooled_config,
            )
            .unwrap();

            // Fresh labeled target draw for evaluation, disjoint stream.
            let eval_spec = TargetShiftSpec {
                n_target: 1000,
                seed: seed + 1000,
                ..spec.clone()
            };
            let (_, eval_target) = generate_target_shift(&eval_spec).unwrap();
            weighted_total += eval_target.accuracy_of(&weighted.classifier).unwrap();
            pooled_total += eval_target.accuracy_of(&pooled.classifier).unwrap();

            let window: f64 = source_props
                .iter()
                .zip(weighted.alpha.as_slice())
                .filter(|(&p_j, _)| (p_j - p_t).abs() <= 0.1 + 1e-12)
                .map(|(_, &a)| a)
                .sum();
            window_total += window;
            window_runs += 1;
        }
        let weighted_mean = weighted_total / seeds_per_point as f64;
        let pooled_mean = pooled_total / seeds_per_point as f64;
        assert!(
            weighted_mean >= pooled_mean,
            "target proportion {p_t}: weighted {weighted_mean:.3} < pooled {pooled_mean:.3}"
        );
        per_point.push((p_t, weighted_mean, pooled_mean));
    }
    let window_mean = window_total / window_runs as f64;
    assert!(
        window_mean >= 0.5,
        "mean weight mass near the target proportion is {window_mean:.3}"
    );
    let worst = per_point
        .iter()
        .map(|(_, w, c)| w - c)
        .fold(f64::INFINITY, f64::min);
    println!(
        "[criterion 3] PASS — weighted >= pooled at all {} proportions \
         (smallest margin {worst:+.3}), mean matching-weight mass {window_mean:.3}",
        per_point.len()
    );
}

#[test]
fn criterion_04_optimized_weights_tighten_the_lambda_diagnostic() {
    // On the 30-source rotation setup the risk-similarity upper bound of the
    // optimized weights must undercut the frozen-uniform one.
    let optimized_config = WjdotConfig {
        beta: 1.0,
        max_iters: 50,
        patience: 50,
        validation: ValidationKind::Sse,
        refresh_between_updates: false,
        ..WjdotConfig::default()
    };
    let frozen_config = WjdotConfig {
        step_alpha: 0.0,
        ..optimized_config.clone()
    };
    let mut ordered = 0;
    let mut gaps = Vec::new();
    for seed in 200..210u64 {
        let spec = RotationShiftSpec {
            n_sources: 30,
            n_per_source: 300,
            n_target: 300,
            target_angle: TargetAngle::Random,
            seed,
            ..RotationShiftSpec::default()
        };
        let (sources, target) = generate_rotation_domains(&spec).unwrap();
        let (train, _val, _test) = split_dataset(&target, seed).unwrap();
        let mut optimized = optimized_config.clone();
        optimized.seed = seed;
        let mut frozen = frozen_config.clone();
        frozen.seed = seed;
        let opt_state =
            run_wjdot(&sources, train.features.view(), &Embedding::Identity, &optimized)
                .unwrap();
        let uni_state =
            run_wjdot(&sources, train.features.view(), &Embedding::Identity, &frozen).unwrap();
        let uniform = SimplexWeights::uniform(30).unwrap();
        let opt = bound_diagnostics(&opt_state.classifier, &sources, &opt_state.alpha, &target, 1.0)
            .unwrap();
        let uni =
            bound_diagnostics(&uni_state.classifier, &sources, &uniform, &target, 1.0).unwrap();
        let gap = uni.lambda_upper - opt.lambda_upper;
        if gap >= 0.02 {
            ordered += 1;
        }
        gaps.push(gap);
    }
    assert!(ordered >= 8, "lambda ordering held in only {ordered}/10 seeds: {gaps:?}");
    let min_gap = gaps.iter().copied().fold(f64::INFINITY, f64::min);
    println!(
        "[criterion 4] PASS — lambda upper bound tightened in {ordered}/10 seeds \
         (smallest gap {min_gap:+.3})"
    );
}

#[test]
fn criterion_05_transport_solver_matches_exhaustive_enumeration() {
    let mut rng = common::rng(21005);
    let t0 = Instant::now();
    for instance in 0..200 {
        let n = rng.random_range(1..=4);
        let m = rng.random_range(1..=4);
        let a = common::random_weights(&mut rng, n);
        let b = common::random_weights(&mut rng, m);
        let raw = Array2::from_shape_fn((n, m), |_| rng.random_range(0.0..10.0));
        let cost = CostMatrix::new(raw.clone()).unwrap();
        let sol = solve_exact_ot(a.view(), b.view(), &cost).unwrap();
        let oracle =
            common::brute_force_ot_value(a.as_slice().unwrap(), b.as_slice().unwrap(), &raw);
        assert!(
            (sol.value - oracle).abs() <= 1e-9,
            "instance {instance} ({n}x{m}): solver {} vs enumeration {oracle}",
            sol.value
        );
        assert!(
            sol.duality_gap(a.view(), b.view()) <= 1e-9,
            "instance {instance}: duality gap {}",
            sol.duality_gap(a.view(), b.view())
        );
        assert!(
            sol.marginal_error(a.view(), b.view()) <= 1e-12,
            "instance {instance}: marginal error {}",
            sol.marginal_error(a.view(), b.view())
        );
    }
    let elapsed = t0.elapsed().as_secs_f64();
    assert!(elapsed < 5.0, "200 instances took {elapsed:.2}s");
    println!(
        "[criterion 5] PASS — 200 instances match enumeration (value 1e-9, gap 1e-9, \
         marginals 1e-12) in {elapsed:.2}s"
    );
}

#[test]
fn criterion_06_both_gradients_match_finite_differences() {
    let mut rng = common::rng(21006);
    let mut worst_alpha = 0.0f64;
    for _ in 0..50 {
        let j = rng.random_range(2..=4);
        let p = rng.random_range(2..=3);
        let k = rng.random_range(2..=3);
        let sources: Vec<JointAtoms> = (0..j)
            .map(|_| {
                let n = rng.random_range(3..=7);
                common::random_joint_atoms(&mut rng, n, p, k, true)
            })
            .collect();
        let n_target = rng.random_range(3..=7);
        let target = common::random_joint_atoms(&mut rng, n_target, p, k, false);
        let alpha = common::interior_alpha(&mut rng, j);
        let err = common::alpha_fd_max_error(
            &sources,
            &target,
            &alpha,
            1.0,
            LabelLoss::SquaredError,
            1e-5,
        );
        worst_alpha = worst_alpha.max(err);
    }
    assert!(worst_alpha <= 1e-4, "alpha gradient error {worst_alpha:.3e}");

    let mut worst_theta = 0.0f64;
    for case in 0..50 {
        let j = rng.random_range(1..=3);
        let p = rng.random_range(2..=3);
        let k = rng.random_range(2..=3);
        let sources: Vec<JointAtoms> = (0..j)
            .map(|_| {
                let n = rng.random_range(3..=6);
                common::random_joint_atoms(&mut rng, n, p, k, true)
            })
            .collect();
        let n_target = rng.random_range(3..=6);
        let target: Array2<f64> =
            Array2::from_shape_fn((n_target, p), |_| StandardNormal.sample(&mut rng));
        let alpha = common::interior_alpha(&mut rng, j);
        let arch: Vec<usize> = if case % 2 == 0 { vec![p, k] } else { vec![p, 4, k] };
        let model =
            FeedForwardModel::new(&arch, Activation::Tanh, OutputKind::Softmax, 500 + case)
                .unwrap();
        let err = common::theta_fd_max_error(
            &sources,
            target.view(),
            &model,
            &alpha,
            1.0,
            LabelLoss::SquaredError,
            1e-5,
        );
        worst_theta = worst_theta.max(err);
    }
    assert!(worst_theta <= 1e-5, "classifier gradient error {worst_theta:.3e}");
    println!(
        "[criterion 6] PASS — 50 weight-gradient checks (worst {worst_alpha:.2e} <= 1e-4), \
         50 classifier-gradient checks (worst {worst_theta:.2e} <= 1e-5)"
    );
}

#[test]
fn criterion_07_simplex_projection_matches_the_oracle_and_its_laws() {
    let mut rng = common::rng(21007);
    let mut worst_oracle = 0.0f64;
    let mut worst_law = 0.0f64;
    for _ in 0..500 {
        let n = rng.random_range(1..=6);
        let v: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        let arr = Array1::from_vec(v.clone());
        let projected = project_to_simplex(arr.view()).unwrap();
        let oracle = common::brute_force_simplex_projection(&v);
        for (got, want) in projected.as_slice().iter().zip(&oracle) {
            worst_oracle = worst_oracle.max((got - want).abs());
        }
        // Idempotence: projecting a simplex point is the identity.
        let twice = project_to_simplex(projected.as_array().view()).unwrap();
        for (a, b) in twice.as_slice().iter().zip(projected.as_slice()) {
            worst_law = worst_law.max((a - b).abs());
        }
        // Translation along the all-ones direction cannot change the result.
        let shift = rng.random_range(-2.0..2.0);
        let translated = project_to_simplex((&arr + shift).view()).unwrap();
        for (a, b) in translated.as_slice().iter().zip(projected.as_slice()) {
            worst_law = worst_law.max((a - b).abs());
        }
    }
    assert!(worst_oracle <= 1e-9, "projection vs oracle differs by {worst_oracle:.3e}");
    assert!(worst_law <= 1e-12, "projection law violated by {worst_law:.3e}");
    println!(
        "[criterion 7] PASS — 500 projections match the subset-search oracle \
         (worst {worst_oracle:.2e}), idempotence/translation within {worst_law:.2e}"
    );
}

#[test]
fn criterion_08_transfer_bound_holds_on_shared_supports() {
    // eps_T <= sum_j alpha_j eps_j + B * TV with the 0-1 error (B = 1) on
    // instances whose atoms live on a small shared grid, so the joint
    // supports genuinely overlap and the bound is not vacuous.
    let mut rng = common::rng(21008);
    let mut worst_slack = f64::INFINITY;
    for case in 0..1000u64 {
        let j = rng.random_range(1..=3);
        let k = rng.random_range(2..=3);
        let d = rng.random_range(1..=2);
        let draw = |domain: usize, rng: &mut rand_chacha::ChaCha8Rng| {
            let n = rng.random_range(2..=6);
            let features =
                Array2::from_shape_fn((n, d), |(_, _)| rng.random_range(0..3) as f64);
            let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
            LabeledDataset::new(features, labels, domain, k).unwrap()
        };
        let sources: Vec<LabeledDataset> = (0..j).map(|b| draw(b, &mut rng)).collect();
        let target = draw(j, &mut rng);
        let alpha = common::interior_alpha(&mut rng, j);
        let model = FeedForwardModel::new(
            &[d, k],
            Activation::Identity,
            OutputKind::Softmax,
            40_000 + case,
        )
        .unwrap();
        let diag = bound_diagnostics(&model, &sources, &alpha, &target, 1.0).unwrap();
        assert!(
            diag.eps_t <= diag.lemma1_rhs + 1e-12,
            "case {case}: target error {} exceeds bound {}",
            diag.eps_t,
            diag.lemma1_rhs
        );
        worst_slack = worst_slack.min(diag.lemma1_rhs - diag.eps_t);
    }
    println!(
        "[criterion 8] PASS — transfer bound held on 1000 shared-support instances \
         (tightest slack {worst_slack:+.3e})"
    );
}

#[test]
fn criterion_09_mixture_transport_value_is_convex_in_the_weights() {
    // W(sum_j a_j p_j, sum_j a_j q_j) <= sum_j a_j W(p_j, q_j).
    let mut rng = common::rng(21009);
    let mut worst = f64::NEG_INFINITY;
    for case in 0..200 {
        let j = rng.random_range(2..=4);
        let d = rng.random_range(1..=3);
        let measure = |rng: &mut rand_chacha::ChaCha8Rng| {
            let n = rng.random_range(2..=5);
            let atoms = Array2::from_shape_fn((n, d), |(_, _)| StandardNormal.sample(rng));
            let weights = common::random_weights(rng, n);
            DiscreteMeasure::new(atoms, weights).unwrap()
        };
        let ps: Vec<DiscreteMeasure> = (0..j).map(|_| measure(&mut rng)).collect();
        let qs: Vec<DiscreteMeasure> = (0..j).map(|_| measure(&mut rng)).collect();
        let alpha = common::interior_alpha(&mut rng, j);
        let pairwise = |a: &DiscreteMeasure, b: &DiscreteMeasure| {
            let cost = CostMatrix::squared_euclidean(a.atoms(), b.atoms()).unwrap();
            solve_exact_ot(a.weights(), b.weights(), &cost).unwrap().value
        };
        let sum_of_values: f64 =
            (0..j).map(|idx| alpha[idx] * pairwise(&ps[idx], &qs[idx])).sum();
        let mixed = pairwise(
            &mix_measures(&ps, &alpha).unwrap(),
            &mix_measures(&qs, &alpha).unwrap(),
        );
        assert!(
            mixed <= sum_of_values + 1e-9,
            "case {case}: mixture value {mixed} exceeds convex bound {sum_of_values}"
        );
        worst = worst.max(mixed - sum_of_values);
    }
    println!(
        "[criterion 9] PASS — mixture convexity held on 200 instances \
         (largest violation {worst:+.3e} <= 1e-9)"
    );
}

#[test]
fn criterion_10_gaussian_distance_closed_forms_and_symmetry() {
    let mut rng = common::rng(21010);
    let random_spd = |rng: &mut rand_chacha::ChaCha8Rng, d: usize| {
        let a = Array2::from_shape_fn((d, d), |_| rng.random_range(-1.0..1.0f64));
        a.t().dot(&a) + Array2::<f64>::eye(d) * 0.1
    };

    // Identical Gaussians are at distance zero. The squared distance is a
    // difference of equal traces, so rounding leaves ~1e-13 of cancellation
    // noise whose square root is ~1e-6; that is "zero" for this formula.
    let mut worst_self = 0.0f64;
    for _ in 0..20 {
        let d = rng.random_range(1..=4);
        let mean = Array1::from_shape_fn(d, |_| rng.random_range(-2.0..2.0f64));
        let p = GaussianSummary::new(mean, random_spd(&mut rng, d)).unwrap();
        worst_self = worst_self.max(bures_wasserstein(&p, &p).unwrap());
    }
    assert!(worst_self <= 1e-6, "self-distance {worst_self:.3e}");

    // Isotropic closed form: N(0, I) vs N(0, 4I) in d = 2 sits at sqrt(2).
    let p = GaussianSummary::new(Array1::zeros(2), Array2::eye(2)).unwrap();
    let q = GaussianSummary::new(Array1::zeros(2), Array2::eye(2) * 4.0).unwrap();
    let iso = bures_wasserstein(&p, &q).unwrap();
    assert!(
        (iso - 2.0f64.sqrt()).abs() <= 1e-8,
        "isotropic case gave {iso}, expected sqrt(2)"
    );

    let mut worst_asym = 0.0f64;
    for _ in 0..50 {
        let d = rng.random_range(1..=4);
        let mk = |rng: &mut rand_chacha::ChaCha8Rng| {
            let mean = Array1::from_shape_fn(d, |_| rng.random_range(-2.0..2.0f64));
            GaussianSummary::new(mean, random_spd(rng, d)).unwrap()
        };
        let (p, q) = (mk(&mut rng), mk(&mut rng));
        let forward = bures_wasserstein(&p, &q).unwrap();
        let backward = bures_wasserstein(&q, &p).unwrap();
        worst_asym = worst_asym.max((forward - backward).abs());
    }
    assert!(worst_asym <= 1e-10, "asymmetry {worst_asym:.3e}");
    println!(
        "[criterion 10] PASS — self-distance <= {worst_self:.2e}, isotropic case \
         {iso:.9} ~ sqrt(2), symmetry within {worst_asym:.2e}"
    );
}

#[test]
fn criterion_11_pooled_transport_equals_frozen_uniform_weights() {
    // With equal source sizes, concatenating the sources and running the
    // loop must trace the same per-iteration objectives as the weighted
    // loop frozen at uniform weights.
    let mut rng = common::rng(21011);
    let mut worst = 0.0f64;
    for instance in 0..10u64 {
        let j = rng.random_range(2..=3);
        let d = 2;
        let n = 10;
        let sources: Vec<LabeledDataset> = (0..j)
            .map(|domain| {
                let features: Array2<f64> =
                    Array2::from_shape_fn((n, d), |_| StandardNormal.sample(&mut rng));
                let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..2)).collect();
                LabeledDataset::new(features, labels, domain, 2).unwrap()
            })
            .collect();
        let target: Array2<f64> =
            Array2::from_shape_fn((8, d), |_| StandardNormal.sample(&mut rng));
        let config = WjdotConfig {
            beta: 1.0,
            step_alpha: 0.0,
            max_iters: 8,
            patience: 8,
            validation: ValidationKind::None,
            seed: 600 + instance,
            ..WjdotConfig::default()
        };
        let pooled = run_cjdot(&sources, target.view(), &Embedding::Identity, &config).unwrap();
        let frozen = run_wjdot(&sources, target.view(), &Embedding::Identity, &config).unwrap();
        assert_eq!(pooled.history.len(), frozen.history.len());
        for (p, f) in pooled.history.iter().zip(frozen.history.iter()) {
            let diff = (p.objective - f.objective).abs();
            assert!(
                diff <= 1e-9,
                "instance {instance}, iteration {}: pooled {} vs frozen {}",
                p.iteration,
                p.objective,
                f.objective
            );
            worst = worst.max(diff);
        }
    }
    println!(
        "[criterion 11] PASS — pooled and frozen-uniform trajectories agree on \
         10 instances (largest gap {worst:.2e} <= 1e-9)"
    );
}
