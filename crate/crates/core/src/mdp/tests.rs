use super::*;
use crate::cone::Relation;
use nalgebra::DVector;

fn v(x: &[f64]) -> DVector<f64> {
    DVector::from_vec(x.to_vec())
}

/// Volumes looked up from the last constraint's source and relation.
struct TableOracle {
    root: f64,
    table: Vec<(SampleId, Relation, f64)>,
    scale: f64,
}

impl VolumeOracle for TableOracle {
    fn volume(&self, cone: &FeasibleCone) -> Result<f64> {
        let vol = match cone.constraints().last() {
            None => self.root,
            Some(c) => self.table.iter().find(|t| t.0 == c.source && t.1 == c.relation).unwrap().2,
        };
        Ok(vol * self.scale)
    }

    fn partition_slack(&self) -> f64 {
        EXACT_TOL
    }
}

fn two_split_oracle(scale: f64) -> (TableOracle, Vec<Candidate>) {
    let a = SampleId::vertex(0);
    let b = SampleId::vertex(1);
    let oracle = TableOracle {
        root: 50.0,
        table: vec![
            (a, Relation::Geq, 10.0),
            (a, Relation::Leq, 40.0),
            (b, Relation::Geq, 25.0),
            (b, Relation::Leq, 25.0),
        ],
        scale,
    };
    let cands = vec![Candidate::new(a, v(&[1.0, 0.0])), Candidate::new(b, v(&[0.0, 1.0]))];
    (oracle, cands)
}

#[test]
fn transition_probabilities() {
    assert!((transition_prob(50.0, 20.0).unwrap() - 0.4).abs() < 1e-15);
    assert_eq!(transition_prob(3.0, 3.0).unwrap(), 1.0);
    assert_eq!(transition_prob(3.0, 0.0).unwrap(), 0.0);
    assert!(transition_prob(0.0, 0.0).is_err());
    assert!(transition_prob(1.0, 2.0).is_err());
    assert!(transition_prob(1.0, -0.1).is_err());
}

#[test]
fn harmonic_benefit() {
    assert!((benefit_from_volumes(20.0, 30.0) - 24.0).abs() < 1e-12);
    assert!((benefit_from_volumes(25.0, 25.0) - 25.0).abs() < 1e-12);
    assert_eq!(benefit_from_volumes(0.0, 30.0), 0.0);
    // balanced split maximizes the benefit for a fixed total
    for k in 1..50 {
        assert!(benefit_from_volumes(k as f64, 50.0 - k as f64) <= 25.0 + 1e-12);
    }
}

#[test]
fn benefit_equals_expected_volume_drop() {
    let cone = FeasibleCone::new(3).with_row(SampleId::vertex(0), v(&[0.2, 1.0, -0.3]), Relation::Geq).unwrap();
    let cand = Candidate::new(SampleId::vertex(1), v(&[1.0, 0.4, 0.1]));
    let oracle = ExactVolume;
    let v0 = oracle.volume(&cone).unwrap();
    let (p, m) = split_volumes(&cone, &cand, &oracle).unwrap();
    assert!((p + m - v0).abs() < 1e-13);
    let drop = v0 - (p * p + m * m) / v0;
    assert!((expected_marginal_benefit(&cone, &cand, &oracle).unwrap() - drop).abs() < 1e-13);
}

#[test]
fn greedy_picks_balanced_split_under_both_rules() {
    for scale in [1.0, 1e-3, 7.5] {
        let (oracle, cands) = two_split_oracle(scale);
        let root = FeasibleCone::new(2);
        let choice = greedy_choices(&root, &cands, &oracle).unwrap();
        assert_eq!((choice.by_imbalance, choice.by_benefit), (1, 1));
        assert!((choice.benefit[0] - 16.0 * scale).abs() < 1e-9 * scale);
        assert!((choice.benefit[1] - 25.0 * scale).abs() < 1e-9 * scale);
        assert!(choice.agree(EXACT_TOL));
    }
}

#[test]
fn empty_tree_is_root() {
    let cone = FeasibleCone::new(3);
    let tree = build_segmentation_tree(&cone, &[], &ExactVolume).unwrap();
    assert!(tree.children.is_empty());
    assert_eq!(tree.volume_fraction, 1.0);
}

#[test]
fn tree_probabilities_and_partition() {
    let inst = generate_toy_instance(4, 3, 3, 1);
    let tree = build_segmentation_tree(&inst.initial, &inst.candidates, &ExactVolume).unwrap();
    assert!(tree.max_partition_gap() < 1e-12);
    fn walk(n: &SegmentationNode) {
        if n.children.is_empty() {
            return;
        }
        let total: f64 = n.children.iter().map(|c| c.1).sum();
        assert!((total - 1.0).abs() < 1e-12);
        for (_, p, c) in &n.children {
            assert!((0.0..=1.0).contains(p));
            walk(c);
        }
    }
    walk(&tree);
    let leaf_mass: f64 = tree.leaves().iter().map(|l| l.volume_fraction).sum();
    assert!((leaf_mass - tree.volume_fraction).abs() < 1e-12);
    let lhs = tree.expected_total_reward();
    let rhs = tree.volume_fraction - tree.expected_leaf_volume();
    assert!((lhs - rhs).abs() < 1e-12);
}

#[test]
fn tree_depth_guard() {
    let cands: Vec<Candidate> =
        (0..13).map(|i| Candidate::new(SampleId::vertex(i), v(&[1.0, i as f64, 0.5]))).collect();
    assert!(matches!(
        build_segmentation_tree(&FeasibleCone::new(3), &cands, &ExactVolume),
        Err(Error::TreeTooLarge(13))
    ));
}

#[test]
fn crn_partition_is_exact() {
    let oracle = CrnVolume { cloud: PointCloud::uniform_ball(3, 20_000, 9) };
    let inst = generate_toy_instance(2, 3, 3, 2);
    let tree = build_segmentation_tree(&inst.initial, &inst.candidates, &oracle).unwrap();
    assert!(tree.max_partition_gap() <= oracle.partition_slack());
}

#[test]
fn single_candidate_optimum_is_its_benefit() {
    let inst = generate_toy_instance(6, 3, 1, 1);
    let opt = exhaustive_optimal(&inst.initial, &inst.candidates, 1, &ExactVolume).unwrap();
    let delta = expected_marginal_benefit(&inst.initial, &inst.candidates[0], &ExactVolume).unwrap();
    assert!((opt.phi - delta).abs() < 1e-13);
    let greedy = greedy_exact_policy(&inst.initial, &inst.candidates, 1, &ExactVolume).unwrap();
    assert_eq!(greedy.policy.get(&Vec::new()), Some(&inst.candidates[0].id));
}

#[test]
fn policies_are_ordered() {
    let bound = 1.0 - (-1.0f64).exp();
    for seed in 0..10 {
        let inst = generate_toy_instance(100 + seed, 3, 5, (seed % 3) as usize);
        let v0 = ExactVolume.volume(&inst.initial).unwrap();
        let opt = exhaustive_optimal(&inst.initial, &inst.candidates, 3, &ExactVolume).unwrap();
        let (fixed, set) = best_fixed_sequence(&inst.initial, &inst.candidates, 3, &ExactVolume).unwrap();
        let greedy = greedy_exact_policy(&inst.initial, &inst.candidates, 3, &ExactVolume).unwrap();
        assert_eq!(set.len(), 3);
        assert!(opt.phi >= fixed - 1e-12);
        assert!(opt.phi >= greedy.phi - 1e-12);
        assert!(greedy.phi >= bound * opt.phi - 1e-12);
        assert!((0.0..=v0 + 1e-12).contains(&opt.phi));
        assert!(opt.policy.contains_key(&Vec::new()));
    }
}

#[test]
fn instance_caps() {
    let inst = generate_toy_instance(1, 3, 9, 0);
    assert!(matches!(exhaustive_optimal(&inst.initial, &inst.candidates, 2, &ExactVolume), Err(Error::InstanceTooLarge(_))));
    let inst = generate_toy_instance(1, 3, 4, 0);
    assert!(matches!(greedy_exact_policy(&inst.initial, &inst.candidates, 4, &ExactVolume), Err(Error::InstanceTooLarge(_))));
    let inst = generate_toy_instance(1, 4, 4, 0);
    assert!(exhaustive_optimal(&inst.initial, &inst.candidates, 2, &ExactVolume).is_err());
}

#[test]
fn submodularity_special_cases() {
    let inst = generate_toy_instance(12, 3, 5, 1);
    let oracle = ExactVolume;
    let a = &inst.candidates[4];
    let refs: Vec<&Candidate> = inst.candidates[..3].iter().collect();
    let bigger = inst.observe(&inst.initial, &refs).unwrap();
    let d_empty = expected_marginal_benefit(&inst.initial, a, &oracle).unwrap();
    let d_big = expected_marginal_benefit(&bigger, a, &oracle).unwrap();
    assert!(d_empty >= d_big - 1e-12);
    let same = inst.observe(&inst.initial, &refs).unwrap();
    assert_eq!(expected_marginal_benefit(&same, a, &oracle).unwrap(), d_big);
}

#[test]
fn submodularity_report_has_no_violations() {
    let instances: Vec<ToyInstance> = (0..20).map(|i| generate_toy_instance(i, 3, 6, (i % 3) as usize)).collect();
    let rep = check_adaptive_submodularity(&instances, 5).unwrap();
    assert!(rep.checks > 0);
    assert_eq!(rep.violations, 0, "{rep:?}");
    assert_eq!(rep.negative_benefits, 0);
}

#[test]
fn small_theory_suite_is_clean() {
    let report = run_theory_suite(12, 77).unwrap();
    assert_eq!(report.checks.len(), 8);
    assert_eq!(report.total_violations(), 0, "{report:?}");
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("theory.csv");
    write_theory_report(&report, &path).unwrap();
    let text = std::fs::read_to_string(path).unwrap();
    assert!(text.starts_with("check,instances,violations,max_gap\n"));
    assert_eq!(text.lines().count(), 9);
}
