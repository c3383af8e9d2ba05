//! Seeded toy instances and the numerical checks run on them.

use std::path::Path;

use nalgebra::DVector;
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use super::{
    best_fixed_sequence, build_segmentation_tree, exhaustive_optimal, expected_marginal_benefit, greedy_choices,
    greedy_exact_policy, split_volumes, ExactVolume, VolumeOracle, EXACT_TOL,
};
use crate::cone::{Candidate, FeasibleCone, Relation};
use crate::graph::{SampleId, Sign};
use crate::linalg::{random_unit, seeded_rng};
use crate::Result;

/// A cone, candidate hyperplanes and the direction that generates signs.
#[derive(Debug, Clone)]
pub struct ToyInstance {
    pub initial: FeasibleCone,
    pub candidates: Vec<Candidate>,
    pub truth: DVector<f64>,
}

impl ToyInstance {
    pub fn true_sign(&self, cand: &Candidate) -> Sign {
        Sign::of(cand.row.dot(&self.truth), 0.0)
    }

    /// Cone after observing `cands` with their true signs.
    pub fn observe(&self, cone: &FeasibleCone, cands: &[&Candidate]) -> Result<FeasibleCone> {
        let mut c = cone.clone();
        for cand in cands {
            c = c.with_candidate(cand, self.true_sign(cand))?;
        }
        Ok(c)
    }
}

/// Random instance: `n_initial` constraints consistent with a random unit
/// truth, and `n_candidates` random unit candidate rows.
pub fn generate_toy_instance(seed: u64, dim: usize, n_candidates: usize, n_initial: usize) -> ToyInstance {
    let mut rng = seeded_rng(seed);
    let truth = random_unit(dim, &mut rng);
    let mut initial = FeasibleCone::new(dim);
    for i in 0..n_initial {
        let row = random_unit(dim, &mut rng);
        let rel = if row.dot(&truth) >= 0.0 { Relation::Geq } else { Relation::Leq };
        initial = initial.with_row(SampleId::vertex(i), row, rel).expect("unit row");
    }
    let candidates =
        (0..n_candidates).map(|i| Candidate::new(SampleId::vertex(n_initial + i), random_unit(dim, &mut rng))).collect();
    ToyInstance { initial, candidates, truth }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SubmodularityReport {
    pub checks: usize,
    pub violations: usize,
    pub negative_benefits: usize,
    /// Largest `Δ(a|O₂) − Δ(a|O₁)` seen; positive values beyond the
    /// tolerance are violations.
    pub max_gap: f64,
}

impl SubmodularityReport {
    fn merge(self, o: Self) -> Self {
        SubmodularityReport {
            checks: self.checks + o.checks,
            violations: self.violations + o.violations,
            negative_benefits: self.negative_benefits + o.negative_benefits,
            max_gap: self.max_gap.max(o.max_gap),
        }
    }

    fn empty() -> Self {
        SubmodularityReport { max_gap: f64::NEG_INFINITY, ..Default::default() }
    }
}

const PAIRS_PER_INSTANCE: usize = 5;

fn submodularity_on(inst: &ToyInstance, seed: u64) -> Result<SubmodularityReport> {
    let oracle = ExactVolume;
    let mut rng = seeded_rng(seed);
    let mut rep = SubmodularityReport::empty();
    for _ in 0..PAIRS_PER_INSTANCE {
        let mut order: Vec<&Candidate> = inst.candidates.iter().collect();
        order.shuffle(&mut rng);
        let k2 = rng.gen_range(0..order.len());
        let larger = &order[..k2];
        let smaller: Vec<&Candidate> = larger.iter().copied().filter(|_| rng.gen_bool(0.5)).collect();
        let c1 = inst.observe(&inst.initial, &smaller)?;
        let c2 = inst.observe(&inst.initial, larger)?;
        for a in &order[k2..] {
            let d1 = expected_marginal_benefit(&c1, a, &oracle)?;
            let d2 = expected_marginal_benefit(&c2, a, &oracle)?;
            rep.checks += 1;
            rep.negative_benefits += usize::from(d1 < -EXACT_TOL) + usize::from(d2 < -EXACT_TOL);
            rep.violations += usize::from(d2 > d1 + EXACT_TOL);
            rep.max_gap = rep.max_gap.max(d2 - d1);
        }
    }
    Ok(rep)
}

/// Compare expected benefits under random nested pairs of true-sign
/// observation sets on each instance, with exact volumes.
pub fn check_adaptive_submodularity(instances: &[ToyInstance], seed: u64) -> Result<SubmodularityReport> {
    let reports: Vec<SubmodularityReport> = instances
        .par_iter()
        .enumerate()
        .map(|(i, inst)| submodularity_on(inst, seed ^ (i as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15)))
        .collect::<Result<_>>()?;
    Ok(reports.into_iter().fold(SubmodularityReport::empty(), SubmodularityReport::merge))
}

/// One line of the theory report.
#[derive(Debug, Clone, PartialEq)]
pub struct TheoryCheck {
    pub name: &'static str,
    pub instances: usize,
    pub violations: usize,
    /// Largest signed shortfall; values above the exact-volume tolerance
    /// count as violations.
    pub max_gap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TheoryReport {
    pub checks: Vec<TheoryCheck>,
}

impl TheoryReport {
    pub fn total_violations(&self) -> usize {
        self.checks.iter().map(|c| c.violations).sum()
    }

    pub fn get(&self, name: &str) -> Option<&TheoryCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

pub const CHECK_NAMES: [&str; 8] = [
    "monotonicity",
    "submodularity",
    "partition",
    "telescoping",
    "argmin_argmax_agreement",
    "greedy_bound_adaptive",
    "greedy_bound_fixed",
    "policy_dominance",
];

const TOY_DIM: usize = 3;
const TOY_CANDIDATES: usize = 6;
const TOY_HORIZON: usize = 3;

/// Per-instance gaps, indexed like [`CHECK_NAMES`].
fn instance_gaps(inst: &ToyInstance) -> Result<[f64; 8]> {
    let oracle = ExactVolume;
    let bound = 1.0 - (-1.0f64).exp();
    let v0 = oracle.volume(&inst.initial)?;
    let mut monotone = f64::NEG_INFINITY;
    for c in &inst.candidates {
        let (p, m) = split_volumes(&inst.initial, c, &oracle)?;
        let delta = expected_marginal_benefit(&inst.initial, c, &oracle)?;
        monotone = monotone.max(-delta).max(p - v0).max(m - v0);
    }
    let seq = &inst.candidates[..TOY_HORIZON];
    let (partition, telescoping) = match build_segmentation_tree(&inst.initial, seq, &oracle) {
        Ok(tree) => {
            let lhs = tree.expected_total_reward();
            let rhs = v0 - tree.expected_leaf_volume();
            (tree.max_partition_gap(), (lhs - rhs).abs())
        }
        Err(_) => (f64::INFINITY, f64::INFINITY),
    };
    let choice = greedy_choices(&inst.initial, &inst.candidates, &oracle)?;
    let root_disagreement = choice.benefit[choice.by_benefit] - choice.benefit[choice.by_imbalance];
    let opt = exhaustive_optimal(&inst.initial, &inst.candidates, TOY_HORIZON, &oracle)?;
    let (fixed, _) = best_fixed_sequence(&inst.initial, &inst.candidates, TOY_HORIZON, &oracle)?;
    let (agreement, greedy_phi) = match greedy_exact_policy(&inst.initial, &inst.candidates, TOY_HORIZON, &oracle) {
        Ok(g) => (root_disagreement, g.phi),
        Err(crate::Error::PolicyDisagreement { .. }) => (f64::INFINITY, f64::NEG_INFINITY),
        Err(e) => return Err(e),
    };
    Ok([
        monotone,
        f64::NEG_INFINITY,
        partition,
        telescoping,
        agreement,
        bound * opt.phi - greedy_phi,
        bound * fixed - greedy_phi,
        fixed - opt.phi,
    ])
}

/// Run every theory check on `n_instances` seeded three-dimensional toy
/// instances with exact volumes.
pub fn run_theory_suite(n_instances: usize, seed: u64) -> Result<TheoryReport> {
    let instances: Vec<ToyInstance> = (0..n_instances)
        .map(|i| {
            let s = seed.wrapping_add(i as u64);
            generate_toy_instance(s, TOY_DIM, TOY_CANDIDATES, (i % 3) as usize)
        })
        .collect();
    let gaps: Vec<[f64; 8]> = instances.par_iter().map(instance_gaps).collect::<Result<_>>()?;
    let sub = check_adaptive_submodularity(&instances, seed)?;
    let checks = CHECK_NAMES
        .iter()
        .enumerate()
        .map(|(k, &name)| {
            if name == "submodularity" {
                return TheoryCheck {
                    name,
                    instances: n_instances,
                    violations: sub.violations + sub.negative_benefits,
                    max_gap: sub.max_gap,
                };
            }
            TheoryCheck {
                name,
                instances: n_instances,
                violations: gaps.iter().filter(|g| g[k] > EXACT_TOL).count(),
                max_gap: gaps.iter().map(|g| g[k]).fold(f64::NEG_INFINITY, f64::max),
            }
        })
        .collect();
    Ok(TheoryReport { checks })
}

/// Write the report as CSV `check,instances,violations,max_gap`.
pub fn write_theory_report(report: &TheoryReport, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["check", "instances", "violations", "max_gap"])?;
    for c in &report.checks {
        w.write_record([c.name.to_string(), c.instances.to_string(), c.violations.to_string(), format!("{:e}", c.max_gap)])?;
    }
    w.flush()?;
    Ok(())
}
