//! Segmentation trees, expected rewards and exact policies on toy instances.
//!
//! Volumes are fractions of the unit ball. The reward of observing a sample
//! is the expected volume removed from the feasible region, and a sign
//! outcome occurs with probability proportional to the volume of the
//! region it leaves.

mod cap;
mod theory;

use std::collections::BTreeMap;

use crate::cone::{exact_volume_lowdim, Candidate, FeasibleCone, PointCloud};
use crate::graph::{SampleId, Sign};
use crate::{Error, Result};

pub use cap::{regularized_incomplete_beta, spherical_cap_ratio};
pub use theory::{
    check_adaptive_submodularity, generate_toy_instance, run_theory_suite, write_theory_report, SubmodularityReport,
    TheoryCheck, TheoryReport, ToyInstance,
};

/// Slack used when comparing exact volumes.
pub const EXACT_TOL: f64 = 1e-12;
/// Largest sequence accepted by [`build_segmentation_tree`].
pub const MAX_TREE_DEPTH: usize = 12;
/// Caps for the exhaustive policy search.
pub const MAX_CANDIDATES: usize = 8;
pub const MAX_HORIZON: usize = 3;
pub const MAX_EXACT_DIM: usize = 3;

pub trait VolumeOracle {
    fn volume(&self, cone: &FeasibleCone) -> Result<f64>;
    /// Allowed gap between a parent volume and the sum of its children.
    fn partition_slack(&self) -> f64;
}

/// Exact volumes for cones of dimension 2 or 3.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExactVolume;

impl VolumeOracle for ExactVolume {
    fn volume(&self, cone: &FeasibleCone) -> Result<f64> {
        exact_volume_lowdim(cone)
    }

    fn partition_slack(&self) -> f64 {
        EXACT_TOL
    }
}

/// Monte Carlo volumes that reuse one point cloud for every query.
#[derive(Debug, Clone)]
pub struct CrnVolume {
    pub cloud: PointCloud,
}

impl VolumeOracle for CrnVolume {
    fn volume(&self, cone: &FeasibleCone) -> Result<f64> {
        if cone.dim() != self.cloud.dim() {
            return Err(Error::DimensionMismatch { expected: self.cloud.dim(), got: cone.dim() });
        }
        Ok(self.cloud.estimate(cone).fraction)
    }

    fn partition_slack(&self) -> f64 {
        // boundary points are the only source of mismatch; allow a few
        4.0 / self.cloud.len() as f64
    }
}

pub fn transition_prob(parent_vol: f64, child_vol: f64) -> Result<f64> {
    let bad = !(parent_vol > 0.0) || !(child_vol >= 0.0) || child_vol > parent_vol * (1.0 + EXACT_TOL) + EXACT_TOL;
    if bad {
        return Err(Error::InvalidVolumes { parent: parent_vol, child: child_vol });
    }
    Ok((child_vol / parent_vol).min(1.0))
}

/// Harmonic-mean benefit `2 / (1/V₊ + 1/V₋)`, zero unless both sides have
/// volume.
pub fn benefit_from_volumes(v_plus: f64, v_minus: f64) -> f64 {
    if v_plus > 0.0 && v_minus > 0.0 {
        2.0 / (1.0 / v_plus + 1.0 / v_minus)
    } else {
        0.0
    }
}

/// Volumes of the two children of `cone` split by `cand`.
pub fn split_volumes<V: VolumeOracle>(cone: &FeasibleCone, cand: &Candidate, oracle: &V) -> Result<(f64, f64)> {
    let plus = oracle.volume(&cone.with_candidate(cand, Sign::Pos)?)?;
    let minus = oracle.volume(&cone.with_candidate(cand, Sign::Neg)?)?;
    Ok((plus, minus))
}

pub fn expected_marginal_benefit<V: VolumeOracle>(cone: &FeasibleCone, cand: &Candidate, oracle: &V) -> Result<f64> {
    let (p, m) = split_volumes(cone, cand, oracle)?;
    Ok(benefit_from_volumes(p, m))
}

/// Node of the tree of sign outcomes for a fixed sampling sequence.
#[derive(Debug, Clone)]
pub struct SegmentationNode {
    pub observations: Vec<(SampleId, Sign)>,
    pub cone: FeasibleCone,
    pub volume_fraction: f64,
    /// `(sign, transition probability, subtree)` for each outcome.
    pub children: Vec<(Sign, f64, SegmentationNode)>,
}

impl SegmentationNode {
    pub fn leaves(&self) -> Vec<&SegmentationNode> {
        if self.children.is_empty() {
            return vec![self];
        }
        self.children.iter().flat_map(|(_, _, c)| c.leaves()).collect()
    }

    /// Expected volume of a leaf reached by following outcome probabilities.
    pub fn expected_leaf_volume(&self) -> f64 {
        if self.children.is_empty() {
            return self.volume_fraction;
        }
        self.children.iter().map(|(_, p, c)| p * c.expected_leaf_volume()).sum()
    }

    /// Largest `|Σ children - parent|` over internal nodes.
    pub fn max_partition_gap(&self) -> f64 {
        if self.children.is_empty() {
            return 0.0;
        }
        let own = (self.children.iter().map(|(_, _, c)| c.volume_fraction).sum::<f64>() - self.volume_fraction).abs();
        self.children.iter().map(|(_, _, c)| c.max_partition_gap()).fold(own, f64::max)
    }

    /// Sum over internal nodes of reach probability times the node's
    /// expected one-step reward.
    pub fn expected_total_reward(&self) -> f64 {
        if self.children.is_empty() {
            return 0.0;
        }
        let vols: Vec<f64> = self.children.iter().map(|(_, _, c)| c.volume_fraction).collect();
        let step = match vols[..] {
            [a, b] => benefit_from_volumes(a, b),
            _ => 0.0,
        };
        step + self.children.iter().map(|(_, p, c)| p * c.expected_total_reward()).sum::<f64>()
    }
}

/// Full binary tree of sign outcomes along `sequence`. Zero-volume
/// outcomes are kept as leaves with probability 0 and are not expanded.
pub fn build_segmentation_tree<V: VolumeOracle>(
    initial: &FeasibleCone,
    sequence: &[Candidate],
    oracle: &V,
) -> Result<SegmentationNode> {
    if sequence.len() > MAX_TREE_DEPTH {
        return Err(Error::TreeTooLarge(sequence.len()));
    }
    let volume = oracle.volume(initial)?;
    grow(initial.clone(), Vec::new(), volume, sequence, oracle)
}

fn grow<V: VolumeOracle>(
    cone: FeasibleCone,
    observations: Vec<(SampleId, Sign)>,
    volume: f64,
    rest: &[Candidate],
    oracle: &V,
) -> Result<SegmentationNode> {
    let mut node = SegmentationNode { observations, cone, volume_fraction: volume, children: Vec::new() };
    let Some((cand, tail)) = rest.split_first() else {
        return Ok(node);
    };
    if volume <= 0.0 {
        return Ok(node);
    }
    let mut total = 0.0;
    for sign in [Sign::Pos, Sign::Neg] {
        let child_cone = node.cone.with_candidate(cand, sign)?;
        let v = oracle.volume(&child_cone)?;
        total += v;
        let mut obs = node.observations.clone();
        obs.push((cand.id, sign));
        let child = if v > 0.0 {
            grow(child_cone, obs, v, tail, oracle)?
        } else {
            SegmentationNode { observations: obs, cone: child_cone, volume_fraction: 0.0, children: Vec::new() }
        };
        node.children.push((sign, transition_prob(volume, v)?, child));
    }
    if (total - volume).abs() > oracle.partition_slack() {
        return Err(Error::InvalidVolumes { parent: volume, child: total });
    }
    Ok(node)
}

/// Expected reward and the decision taken at every reachable prefix.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyValue {
    pub phi: f64,
    pub policy: BTreeMap<Vec<(SampleId, Sign)>, SampleId>,
}

fn check_instance(initial: &FeasibleCone, candidates: &[Candidate], horizon: usize) -> Result<()> {
    if candidates.len() > MAX_CANDIDATES || horizon > MAX_HORIZON || initial.dim() > MAX_EXACT_DIM {
        return Err(Error::InstanceTooLarge(format!(
            "{} candidates, horizon {}, dimension {}",
            candidates.len(),
            horizon,
            initial.dim()
        )));
    }
    Ok(())
}

/// Smallest expected final volume over adaptive policies, with the policy.
fn optimal_final<V: VolumeOracle>(
    cone: &FeasibleCone,
    volume: f64,
    remaining: &[Candidate],
    horizon: usize,
    prefix: &mut Vec<(SampleId, Sign)>,
    oracle: &V,
    policy: &mut BTreeMap<Vec<(SampleId, Sign)>, SampleId>,
) -> Result<f64> {
    if horizon == 0 || remaining.is_empty() || volume <= 0.0 {
        return Ok(volume);
    }
    let mut best: Option<(f64, usize, BTreeMap<Vec<(SampleId, Sign)>, SampleId>)> = None;
    for (i, cand) in remaining.iter().enumerate() {
        let rest: Vec<Candidate> = remaining.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, c)| c.clone()).collect();
        let mut sub_policy = BTreeMap::new();
        let mut expected = 0.0;
        for sign in [Sign::Pos, Sign::Neg] {
            let child = cone.with_candidate(cand, sign)?;
            let v = oracle.volume(&child)?;
            if v <= 0.0 {
                continue;
            }
            prefix.push((cand.id, sign));
            let f = optimal_final(&child, v, &rest, horizon - 1, prefix, oracle, &mut sub_policy)?;
            prefix.pop();
            expected += transition_prob(volume, v)? * f;
        }
        if best.as_ref().is_none_or(|b| expected < b.0 - EXACT_TOL) {
            best = Some((expected, i, sub_policy));
        }
    }
    let (value, i, sub_policy) = best.expect("remaining is nonempty");
    policy.insert(prefix.clone(), remaining[i].id);
    policy.extend(sub_policy);
    Ok(value)
}

/// Optimal adaptive policy by backward induction over the full outcome tree.
pub fn exhaustive_optimal<V: VolumeOracle>(
    initial: &FeasibleCone,
    candidates: &[Candidate],
    horizon: usize,
    oracle: &V,
) -> Result<PolicyValue> {
    check_instance(initial, candidates, horizon)?;
    let v0 = oracle.volume(initial)?;
    let mut policy = BTreeMap::new();
    let final_vol = optimal_final(initial, v0, candidates, horizon, &mut Vec::new(), oracle, &mut policy)?;
    Ok(PolicyValue { phi: v0 - final_vol, policy })
}

/// Best reward over fixed (non-adaptive) sets of `horizon` candidates,
/// with the set achieving it.
pub fn best_fixed_sequence<V: VolumeOracle>(
    initial: &FeasibleCone,
    candidates: &[Candidate],
    horizon: usize,
    oracle: &V,
) -> Result<(f64, Vec<SampleId>)> {
    use itertools::Itertools;
    check_instance(initial, candidates, horizon)?;
    let v0 = oracle.volume(initial)?;
    let t = horizon.min(candidates.len());
    let mut best: Option<(f64, Vec<SampleId>)> = None;
    for combo in candidates.iter().cloned().combinations(t) {
        let tree = build_segmentation_tree(initial, &combo, oracle)?;
        let phi = v0 - tree.expected_leaf_volume();
        if best.as_ref().is_none_or(|b| phi > b.0 + EXACT_TOL) {
            best = Some((phi, combo.iter().map(|c| c.id).collect()));
        }
    }
    Ok(best.expect("at least one combination"))
}

/// Index chosen by the minimum-imbalance rule and by the maximum-benefit
/// rule. Earliest candidate wins ties in both.
pub fn greedy_choices<V: VolumeOracle>(cone: &FeasibleCone, cands: &[Candidate], oracle: &V) -> Result<GreedyChoice> {
    let mut splits = Vec::with_capacity(cands.len());
    for c in cands {
        splits.push(split_volumes(cone, c, oracle)?);
    }
    let imbalance: Vec<f64> = splits.iter().map(|(p, m)| (p - m).abs()).collect();
    let benefit: Vec<f64> = splits.iter().map(|&(p, m)| benefit_from_volumes(p, m)).collect();
    let mut by_imbalance = 0;
    let mut by_benefit = 0;
    for i in 1..cands.len() {
        if imbalance[i] < imbalance[by_imbalance] {
            by_imbalance = i;
        }
        if benefit[i] > benefit[by_benefit] {
            by_benefit = i;
        }
    }
    Ok(GreedyChoice { by_imbalance, by_benefit, imbalance, benefit })
}

#[derive(Debug, Clone)]
pub struct GreedyChoice {
    pub by_imbalance: usize,
    pub by_benefit: usize,
    pub imbalance: Vec<f64>,
    pub benefit: Vec<f64>,
}

impl GreedyChoice {
    /// Both rules pick candidates that are optimal for the other rule,
    /// within `tol`.
    pub fn agree(&self, tol: f64) -> bool {
        let (a, b) = (self.by_imbalance, self.by_benefit);
        self.benefit[a] >= self.benefit[b] - tol && self.imbalance[b] <= self.imbalance[a] + tol
    }
}

fn greedy_final<V: VolumeOracle>(
    cone: &FeasibleCone,
    volume: f64,
    remaining: &[Candidate],
    horizon: usize,
    prefix: &mut Vec<(SampleId, Sign)>,
    oracle: &V,
    policy: &mut BTreeMap<Vec<(SampleId, Sign)>, SampleId>,
) -> Result<f64> {
    if horizon == 0 || remaining.is_empty() || volume <= 0.0 {
        return Ok(volume);
    }
    let choice = greedy_choices(cone, remaining, oracle)?;
    if !choice.agree(EXACT_TOL) {
        return Err(Error::PolicyDisagreement {
            imbalance: remaining[choice.by_imbalance].id,
            benefit: remaining[choice.by_benefit].id,
        });
    }
    let cand = &remaining[choice.by_imbalance];
    policy.insert(prefix.clone(), cand.id);
    let rest: Vec<Candidate> = remaining.iter().filter(|c| c.id != cand.id).cloned().collect();
    let mut expected = 0.0;
    for sign in [Sign::Pos, Sign::Neg] {
        let child = cone.with_candidate(cand, sign)?;
        let v = oracle.volume(&child)?;
        if v <= 0.0 {
            continue;
        }
        prefix.push((cand.id, sign));
        let f = greedy_final(&child, v, &rest, horizon - 1, prefix, oracle, policy)?;
        prefix.pop();
        expected += transition_prob(volume, v)? * f;
    }
    Ok(expected)
}

/// Adaptive greedy policy choosing the most balanced volume split at every
/// node. Fails with `PolicyDisagreement` if the maximum-benefit rule would
/// pick a strictly different candidate.
pub fn greedy_exact_policy<V: VolumeOracle>(
    initial: &FeasibleCone,
    candidates: &[Candidate],
    horizon: usize,
    oracle: &V,
) -> Result<PolicyValue> {
    check_instance(initial, candidates, horizon)?;
    let v0 = oracle.volume(initial)?;
    let mut policy = BTreeMap::new();
    let final_vol = greedy_final(initial, v0, candidates, horizon, &mut Vec::new(), oracle, &mut policy)?;
    Ok(PolicyValue { phi: v0 - final_vol, policy })
}

#[cfg(test)]
mod tests;
