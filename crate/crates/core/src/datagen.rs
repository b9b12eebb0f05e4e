//! Synthetic benchmark data.
//!
//! Two families of problems exercise the adaptation engine:
//!
//! * **Rotation shift**: a fixed 3-cluster Gaussian sample in the `(y, z)`
//!   plane of `R^3`, with every domain a rotation of the same base sample
//!   around the `x`-axis. Domains are close exactly when their angles are,
//!   which gives the learned mixture weights a ground truth to recover.
//! * **Target shift**: every domain shares the same two Gaussian
//!   class-conditionals in `R^2` but mixes the classes in different
//!   proportions.
//!
//! All generation is a pure function of the spec: domain `k` draws from
//! stream `k` of a counter-based generator seeded with `spec.seed`, so
//! domains can be produced independently and in parallel without changing
//! the result.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use ndarray::Array2;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::model::LabeledDataset;

pub const ROTATION_DIM: usize = 3;
pub const ROTATION_CLUSTERS: usize = 3;
/// Cluster centers in the `(y, z)` plane as (radius, phase-in-degrees)
/// pairs. The layout is deliberately irregular — distinct radii, uneven
/// phases — so that no rotation maps the center set close to itself under
/// any cluster relabeling. With a symmetric layout a far-away domain can
/// transport cheaply onto the target by permuting clusters, which flips the
/// labels and inverts the meaning of the mixture weights. Here the
/// assignment cost to any rotated copy grows strictly with the angle until
/// well past two grid steps of a 30-source sweep and never dips back below
/// it, while pairwise center distances stay above four times the default
/// noise level.
pub const ROTATION_CLUSTER_CENTERS: [(f64, f64); ROTATION_CLUSTERS] =
    [(1.2, 0.0), (2.4, 130.0), (3.6, 200.0)];
/// Domain angles live in `[0, 3*pi/2]`.
pub const ROTATION_MAX_ANGLE: f64 = 1.5 * PI;
/// Class-conditional means of the target-shift problem.
pub const TARGET_SHIFT_MEANS: [[f64; 2]; 2] = [[-1.0, 0.0], [1.0, 0.0]];

/// Angle of the held-out domain in the rotation problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TargetAngle {
    Fixed(f64),
    /// Drawn uniformly from `[0, 3*pi/2]`, deterministically from the seed.
    Random,
}

#[derive(Debug, Clone)]
pub struct RotationShiftSpec {
    pub n_sources: usize,
    /// Samples per source; must be a multiple of the cluster count.
    pub n_per_source: usize,
    /// Target samples; also a multiple of the cluster count. When equal to
    /// `n_per_source` the target reuses the source base sample, so the
    /// target is exactly a rotation of every source.
    pub n_target: usize,
    pub sigma: f64,
    pub target_angle: TargetAngle,
    pub seed: u64,
}

impl Default for RotationShiftSpec {
    fn default() -> Self {
        RotationShiftSpec {
            n_sources: 4,
            n_per_source: 150,
            n_target: 150,
            sigma: 0.8,
            target_angle: TargetAngle::Random,
            seed: 0,
        }
    }
}

impl RotationShiftSpec {
    fn validate(&self) -> Result<()> {
        if self.n_sources == 0 {
            return Err(Error::invalid("need at least one source domain"));
        }
        for (name, n) in [("n_per_source", self.n_per_source), ("n_target", self.n_target)] {
            if n < ROTATION_CLUSTERS || n % ROTATION_CLUSTERS != 0 {
                return Err(Error::invalid(format!(
                    "{name} must be a positive multiple of {ROTATION_CLUSTERS} for equal \
                     cluster counts, got {n}"
                )));
            }
        }
        if !self.sigma.is_finite() || self.sigma <= 0.0 {
            return Err(Error::invalid("sigma must be positive"));
        }
        if let TargetAngle::Fixed(theta) = self.target_angle {
            if !theta.is_finite() || !(0.0..=ROTATION_MAX_ANGLE).contains(&theta) {
                return Err(Error::invalid(format!(
                    "target angle {theta} outside [0, {ROTATION_MAX_ANGLE}]"
                )));
            }
        }
        Ok(())
    }

    /// The concrete target angle: the fixed value, or the seed-determined
    /// uniform draw. Exposed so callers can report the ground truth.
    pub fn resolve_target_angle(&self) -> f64 {
        match self.target_angle {
            TargetAngle::Fixed(theta) => theta,
            TargetAngle::Random => {
                domain_rng(self.seed, TARGET_ANGLE_STREAM).random_range(0.0..ROTATION_MAX_ANGLE)
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct TargetShiftSpec {
    pub n_sources: usize,
    pub n_per_source: usize,
    pub n_target: usize,
    /// Share of class 1 in each source, all within `[0.1, 0.9]`.
    pub source_proportions: Vec<f64>,
    /// Share of class 1 in the target.
    pub target_proportion: f64,
    pub sigma: f64,
    pub seed: u64,
}

impl Default for TargetShiftSpec {
    fn default() -> Self {
        TargetShiftSpec {
            n_sources: 5,
            n_per_source: 120,
            n_target: 120,
            source_proportions: vec![0.3, 0.4, 0.5, 0.6, 0.7],
            target_proportion: 0.5,
            sigma: 0.7,
            seed: 0,
        }
    }
}

impl TargetShiftSpec {
    fn validate(&self) -> Result<()> {
        if self.n_sources == 0 {
            return Err(Error::invalid("need at least one source domain"));
        }
        if self.source_proportions.len() != self.n_sources {
            return Err(Error::invalid(format!(
                "{} sources but {} proportions",
                self.n_sources,
                self.source_proportions.len()
            )));
        }
        for &p in self.source_proportions.iter().chain([&self.target_proportion]) {
            if !(0.1..=0.9).contains(&p) {
                return Err(Error::invalid(format!(
                    "class proportion {p} outside [0.1, 0.9]"
                )));
            }
        }
        if !self.sigma.is_finite() || self.sigma <= 0.0 {
            return Err(Error::invalid("sigma must be positive"));
        }
        for (name, n) in [("n_per_source", self.n_per_source), ("n_target", self.n_target)] {
            if n < 2 {
                return Err(Error::invalid(format!("{name} must be at least 2, got {n}")));
            }
        }
        Ok(())
    }
}

const SOURCE_BASE_STREAM: u64 = 0;
const TARGET_BASE_STREAM: u64 = 1;
const TARGET_ANGLE_STREAM: u64 = 2;

/// The per-domain generator: stream `stream` of a ChaCha8 generator seeded
/// with `seed`. Streams are independent, so domains may be generated in any
/// order or in parallel.
pub fn domain_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Source angles: `n` values equispaced over `[0, 3*pi/2]` inclusive
/// (a single source sits at zero).
pub fn rotation_angles(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.0];
    }
    (0..n)
        .map(|j| ROTATION_MAX_ANGLE * j as f64 / (n - 1) as f64)
        .collect()
}

/// Source class-1 proportions: `n` values equispaced over `[0.1, 0.9]`
/// inclusive (a single source sits at 0.5).
pub fn shift_proportions(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.5];
    }
    (0..n)
        .map(|j| 0.1 + 0.8 * j as f64 / (n - 1) as f64)
        .collect()
}

/// Rotation by `theta` around the x-axis, applied to row vectors as
/// `x' = x . R`.
pub fn rotation_matrix_x(theta: f64) -> Array2<f64> {
    let (sin, cos) = theta.sin_cos();
    let mut r = Array2::eye(3);
    r[(1, 1)] = cos;
    r[(1, 2)] = -sin;
    r[(2, 1)] = sin;
    r[(2, 2)] = cos;
    r
}

/// Equal-count Gaussian clusters on the `(y, z)` circle; labels follow the
/// cluster index.
fn draw_cluster_base(n: usize, sigma: f64, rng: &mut ChaCha8Rng) -> (Array2<f64>, Vec<usize>) {
    let per_cluster = n / ROTATION_CLUSTERS;
    let mut features = Array2::zeros((n, ROTATION_DIM));
    let mut labels = Vec::with_capacity(n);
    for c in 0..ROTATION_CLUSTERS {
        let (radius, phase_deg) = ROTATION_CLUSTER_CENTERS[c];
        let phase = phase_deg.to_radians();
        let center = [0.0, radius * phase.cos(), radius * phase.sin()];
        for i in 0..per_cluster {
            let row = c * per_cluster + i;
            for (d, &c_d) in center.iter().enumerate() {
                let z: f64 = StandardNormal.sample(rng);
                features[(row, d)] = c_d + sigma * z;
            }
            labels.push(c);
        }
    }
    (features, labels)
}

/// Generates the rotation-shift problem: every source is the same base
/// sample rotated to its angle, and the target is a rotation to the
/// (possibly random) target angle. Labels are identical across domains.
/// The returned target keeps its labels for evaluation only.
pub fn generate_rotation_domains(
    spec: &RotationShiftSpec,
) -> Result<(Vec<LabeledDataset>, LabeledDataset)> {
    spec.validate()?;
    let (base, labels) = draw_cluster_base(
        spec.n_per_source,
        spec.sigma,
        &mut domain_rng(spec.seed, SOURCE_BASE_STREAM),
    );
    let sources = rotation_angles(spec.n_sources)
        .into_iter()
        .enumerate()
        .map(|(j, theta)| {
            let rotated = base.dot(&rotation_matrix_x(theta));
            LabeledDataset::new(rotated, labels.clone(), j, ROTATION_CLUSTERS)
        })
        .collect::<Result<Vec<_>>>()?;

    let (target_base, target_labels) = if spec.n_target == spec.n_per_source {
        (base, labels)
    } else {
        draw_cluster_base(
            spec.n_target,
            spec.sigma,
            &mut domain_rng(spec.seed, TARGET_BASE_STREAM),
        )
    };
    let theta_t = spec.resolve_target_angle();
    let target = LabeledDataset::new(
        target_base.dot(&rotation_matrix_x(theta_t)),
        target_labels,
        spec.n_sources,
        ROTATION_CLUSTERS,
    )?;
    Ok((sources, target))
}

fn draw_two_class(
    n: usize,
    proportion_class1: f64,
    sigma: f64,
    domain: usize,
    rng: &mut ChaCha8Rng,
) -> Result<LabeledDataset> {
    let n1 = (proportion_class1 * n as f64).round() as usize;
    let n0 = n - n1;
    if n0 == 0 || n1 == 0 {
        return Err(Error::invalid(format!(
            "class counts ({n0}, {n1}) must both be positive; adjust n or the proportion"
        )));
    }
    let mut features = Array2::zeros((n, 2));
    let mut labels = Vec::with_capacity(n);
    for (class, count) in [(0usize, n0), (1, n1)] {
        let mean = TARGET_SHIFT_MEANS[class];
        for _ in 0..count {
            let row = labels.len();
            for d in 0..2 {
                let z: f64 = StandardNormal.sample(rng);
                features[(row, d)] = mean[d] + sigma * z;
            }
            labels.push(class);
        }
    }
    LabeledDataset::new(features, labels, domain, 2)
}

/// Generates the target-shift problem: all domains share the two Gaussian
/// class-conditionals and differ only in their class-1 share. The returned
/// target keeps its labels for evaluation only.
pub fn generate_target_shift(
    spec: &TargetShiftSpec,
) -> Result<(Vec<LabeledDataset>, LabeledDataset)> {
    spec.validate()?;
    let sources = spec
        .source_proportions
        .iter()
        .enumerate()
        .map(|(j, &p)| {
            draw_two_class(
                spec.n_per_source,
                p,
                spec.sigma,
                j,
                &mut domain_rng(spec.seed, j as u64),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let target = draw_two_class(
        spec.n_target,
        spec.target_proportion,
        spec.sigma,
        spec.n_sources,
        &mut domain_rng(spec.seed, spec.n_sources as u64),
    )?;
    Ok((sources, target))
}

/// Splits into train (70%), validation (20%), and test (the remainder) by a
/// seeded permutation.
pub fn split_dataset(
    data: &LabeledDataset,
    seed: u64,
) -> Result<(LabeledDataset, LabeledDataset, LabeledDataset)> {
    let n = data.len();
    if n < 10 {
        return Err(Error::invalid(format!(
            "need at least 10 samples to split, got {n}"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_train = (7 * n) / 10;
    let n_val = n / 5;
    let subset = |indices: &[usize]| {
        let features = data.features.select(ndarray::Axis(0), indices);
        let labels = indices.iter().map(|&i| data.labels[i]).collect();
        LabeledDataset::new(features, labels, data.domain_id, data.n_classes)
    };
    Ok((
        subset(&order[..n_train])?,
        subset(&order[n_train..n_train + n_val])?,
        subset(&order[n_train + n_val..])?,
    ))
}

/// Writes datasets as CSV with header `f0,...,f{d-1},label,domain`. Floats
/// use the shortest decimal that parses back to the same value, so a read
/// recovers the data exactly.
pub fn write_datasets_csv(path: &Path, datasets: &[&LabeledDataset]) -> Result<()> {
    if datasets.is_empty() {
        return Err(Error::invalid("no datasets to write"));
    }
    let d = datasets[0].dim();
    if datasets.iter().any(|ds| ds.dim() != d) {
        return Err(Error::invalid("datasets disagree on feature dimension"));
    }
    let mut out = String::new();
    for i in 0..d {
        let _ = write!(out, "f{i},");
    }
    out.push_str("label,domain\n");
    for ds in datasets {
        for (row, &label) in ds.features.rows().into_iter().zip(&ds.labels) {
            for v in row.iter() {
                let _ = write!(out, "{v},");
            }
            let _ = writeln!(out, "{label},{}", ds.domain_id);
        }
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Reads a dataset CSV back, returning one dataset per distinct `domain`
/// value in order of first appearance. `n_classes` defaults to one more
/// than the largest label in the file.
pub fn read_datasets_csv(path: &Path, n_classes: Option<usize>) -> Result<Vec<LabeledDataset>> {
    let display = path.display().to_string();
    let parse_err = |line: usize, message: String| Error::Parse {
        path: display.clone(),
        line,
        message,
    };
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();

    let (_, header) = lines
        .next()
        .ok_or_else(|| parse_err(1, "empty file".into()))?;
    let fields: Vec<&str> = header.split(',').collect();
    if fields.len() < 3
        || fields[fields.len() - 2] != "label"
        || fields[fields.len() - 1] != "domain"
    {
        return Err(parse_err(
            1,
            format!("malformed header '{header}', expected f0,...,label,domain"),
        ));
    }
    let d = fields.len() - 2;
    for (i, field) in fields[..d].iter().enumerate() {
        if *field != format!("f{i}") {
            return Err(parse_err(
                1,
                format!("malformed header: expected column f{i}, found '{field}'"),
            ));
        }
    }

    // (domain, features, labels) in order of first appearance.
    let mut groups: Vec<(usize, Vec<f64>, Vec<usize>)> = Vec::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        if line.is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != d + 2 {
            return Err(parse_err(
                lineno,
                format!("expected {} fields, found {}", d + 2, cells.len()),
            ));
        }
        let mut features = Vec::with_capacity(d);
        for (i, cell) in cells[..d].iter().enumerate() {
            let v: f64 = cell
                .parse()
                .map_err(|_| parse_err(lineno, format!("invalid feature f{i}: '{cell}'")))?;
            features.push(v);
        }
        let label: usize = cells[d]
            .parse()
            .map_err(|_| parse_err(lineno, format!("invalid label: '{}'", cells[d])))?;
        let domain: usize = cells[d + 1]
            .parse()
            .map_err(|_| parse_err(lineno, format!("invalid domain: '{}'", cells[d + 1])))?;
        let group = match groups.iter_mut().find(|(g, _, _)| *g == domain) {
            Some(g) => g,
            None => {
                groups.push((domain, Vec::new(), Vec::new()));
                groups.last_mut().unwrap()
            }
        };
        group.1.extend_from_slice(&features);
        group.2.push(label);
    }
    if groups.is_empty() {
        return Err(Error::invalid(format!("{display} has no data rows")));
    }

    let k = n_classes.unwrap_or_else(|| {
        groups
            .iter()
            .flat_map(|(_, _, labels)| labels.iter())
            .max()
            .map_or(1, |&m| m + 1)
    });
    groups
        .into_iter()
        .map(|(domain, flat, labels)| {
            let features = Array2::from_shape_vec((labels.len(), d), flat)
                .map_err(|e| Error::invalid(e.to_string()))?;
            LabeledDataset::new(features, labels, domain, k)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn four_sources_get_quarter_turn_angles() {
        let angles = rotation_angles(4);
        let expected = [0.0, PI / 2.0, PI, 1.5 * PI];
        for (a, e) in angles.iter().zip(expected) {
            assert!((a - e).abs() < 1e-15, "{angles:?}");
        }
        assert_eq!(rotation_angles(1), vec![0.0]);
    }

    #[test]
    fn five_sources_get_even_proportions() {
        let props = shift_proportions(5);
        let expected = [0.1, 0.3, 0.5, 0.7, 0.9];
        for (p, e) in props.iter().zip(expected) {
            assert!((p - e).abs() < 1e-15, "{props:?}");
        }
        assert_eq!(shift_proportions(1), vec![0.5]);
    }

    #[test]
    fn zero_rotation_is_bitwise_identity() {
        let spec = RotationShiftSpec {
            n_sources: 4,
            n_per_source: 30,
            n_target: 30,
            target_angle: TargetAngle::Fixed(0.0),
            ..RotationShiftSpec::default()
        };
        let (sources, target) = generate_rotation_domains(&spec).unwrap();
        // Source 0 sits at angle zero, and so does this target.
        assert_eq!(sources[0].features, target.features);
        assert_eq!(sources[0].labels, target.labels);
    }

    #[test]
    fn rotations_preserve_norms_and_invert_cleanly() {
        let spec = RotationShiftSpec {
            n_sources: 5,
            n_per_source: 30,
            n_target: 30,
            target_angle: TargetAngle::Fixed(1.0),
            ..RotationShiftSpec::default()
        };
        let (sources, _) = generate_rotation_domains(&spec).unwrap();
        let base = &sources[0].features;
        for s in &sources[1..] {
            for (r0, r1) in base.rows().into_iter().zip(s.features.rows()) {
                assert!((r0.dot(&r0) - r1.dot(&r1)).abs() < 1e-10);
            }
            assert_eq!(s.labels, sources[0].labels);
        }
        let theta = rotation_angles(5)[3];
        let back = sources[3].features.dot(&rotation_matrix_x(-theta));
        for (a, b) in back.iter().zip(base.iter()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn cluster_counts_are_equal_and_generation_is_deterministic() {
        let spec = RotationShiftSpec::default();
        let (sources, target) = generate_rotation_domains(&spec).unwrap();
        for ds in sources.iter().chain([&target]) {
            let mut counts = [0usize; 3];
            for &l in &ds.labels {
                counts[l] += 1;
            }
            assert_eq!(counts, [50, 50, 50]);
        }
        let (again, target_again) = generate_rotation_domains(&spec).unwrap();
        assert_eq!(sources[2].features, again[2].features);
        assert_eq!(target.features, target_again.features);
        assert_eq!(
            spec.resolve_target_angle(),
            spec.resolve_target_angle()
        );
    }

    #[test]
    fn rotation_spec_validation() {
        let bad_n = RotationShiftSpec {
            n_per_source: 31,
            ..RotationShiftSpec::default()
        };
        assert!(generate_rotation_domains(&bad_n).is_err());
        let bad_angle = RotationShiftSpec {
            target_angle: TargetAngle::Fixed(5.0),
            ..RotationShiftSpec::default()
        };
        assert!(generate_rotation_domains(&bad_angle).is_err());
        let bad_sigma = RotationShiftSpec {
            sigma: 0.0,
            ..RotationShiftSpec::default()
        };
        assert!(generate_rotation_domains(&bad_sigma).is_err());
    }

    #[test]
    fn target_shift_counts_follow_rounding() {
        let spec = TargetShiftSpec {
            n_sources: 1,
            n_per_source: 100,
            n_target: 300,
            source_proportions: vec![0.5],
            target_proportion: 0.9,
            ..TargetShiftSpec::default()
        };
        let (sources, target) = generate_target_shift(&spec).unwrap();
        let count1 = |ds: &LabeledDataset| ds.labels.iter().filter(|&&l| l == 1).count();
        assert_eq!(count1(&sources[0]), 50);
        assert_eq!(count1(&target), 270);
        assert_eq!(target.len(), 300);
    }

    #[test]
    fn target_shift_class_conditionals_match_configured_means() {
        let spec = TargetShiftSpec {
            n_sources: 1,
            n_per_source: 20_000,
            n_target: 2,
            source_proportions: vec![0.5],
            target_proportion: 0.5,
            ..TargetShiftSpec::default()
        };
        let (sources, _) = generate_target_shift(&spec).unwrap();
        let ds = &sources[0];
        for class in 0..2 {
            let rows: Vec<_> = ds
                .labels
                .iter()
                .enumerate()
                .filter(|(_, &l)| l == class)
                .map(|(i, _)| i)
                .collect();
            let n = rows.len() as f64;
            for d in 0..2 {
                let mean: f64 = rows.iter().map(|&i| ds.features[(i, d)]).sum::<f64>() / n;
                let tol = 3.0 * spec.sigma / n.sqrt();
                assert!(
                    (mean - TARGET_SHIFT_MEANS[class][d]).abs() < tol,
                    "class {class} coord {d}: {mean}"
                );
            }
        }
    }

    #[test]
    fn target_shift_validation() {
        let bad = TargetShiftSpec {
            target_proportion: 0.95,
            ..TargetShiftSpec::default()
        };
        assert!(generate_target_shift(&bad).is_err());
        let mismatched = TargetShiftSpec {
            source_proportions: vec![0.5],
            ..TargetShiftSpec::default()
        };
        assert!(generate_target_shift(&mismatched).is_err());
    }

    #[test]
    fn split_sizes_disjoint_and_deterministic() {
        let features = Array2::from_shape_fn((100, 2), |(i, j)| (i * 2 + j) as f64);
        let ds = LabeledDataset::new(features, vec![0; 100], 0, 1).unwrap();
        let (train, val, test) = split_dataset(&ds, 42).unwrap();
        assert_eq!((train.len(), val.len(), test.len()), (70, 20, 10));
        let mut seen: Vec<f64> = train
            .features
            .column(0)
            .iter()
            .chain(val.features.column(0).iter())
            .chain(test.features.column(0).iter())
            .copied()
            .collect();
        seen.sort_by(f64::total_cmp);
        let expected: Vec<f64> = (0..100).map(|i| (i * 2) as f64).collect();
        assert_eq!(seen, expected);
        let (train2, _, _) = split_dataset(&ds, 42).unwrap();
        assert_eq!(train.features, train2.features);

        let tiny = LabeledDataset::new(Array2::zeros((5, 1)), vec![0; 5], 0, 1).unwrap();
        assert!(split_dataset(&tiny, 0).is_err());
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.csv");
        let a = LabeledDataset::new(
            array![[0.1, -2.5e-17], [f64::MIN_POSITIVE, 3.0]],
            vec![0, 1],
            0,
            2,
        )
        .unwrap();
        let b = LabeledDataset::new(array![[1.0 / 3.0, 7.0]], vec![1], 3, 2).unwrap();
        write_datasets_csv(&path, &[&a, &b]).unwrap();
        let back = read_datasets_csv(&path, None).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0].features, a.features);
        assert_eq!(back[0].labels, a.labels);
        assert_eq!(back[0].domain_id, 0);
        assert_eq!(back[1].features, b.features);
        assert_eq!(back[1].domain_id, 3);
        assert_eq!(back[1].n_classes, 2);
    }

    #[test]
    fn csv_errors_carry_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "f0,f1,label,domain\n1.0,2.0,0,0\n1.0,oops,1,0\n").unwrap();
        let err = read_datasets_csv(&path, None).unwrap_err().to_string();
        assert!(err.contains(":3:"), "{err}");
        assert!(err.contains("invalid feature f1"), "{err}");

        std::fs::write(&path, "f0,label\n").unwrap();
        let err = read_datasets_csv(&path, None).unwrap_err().to_string();
        assert!(err.contains(":1:"), "{err}");
    }
}
