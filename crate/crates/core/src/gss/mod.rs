//! Greedy signed sampling (GSS) and baseline samplers.
//!
//! GSS runs in three phases:
//!
//! 1. **Init** - the `B-1` largest-norm rows of the stacked vertex/edge row
//!    matrix that are linearly independent.
//! 2. **B-th sample** - the candidate whose two hypothesized cones have the
//!    largest minimum pairwise EV inner product (smallest maximal EV angle).
//! 3. **Greedy** - repeatedly pick the candidate whose hyperplane best
//!    balances the signed EV distances, until the budget is spent or no
//!    remaining hyperplane separates the EVs.

mod baselines;

use std::collections::BTreeSet;
use std::path::Path;

use nalgebra::DVector;
use rayon::prelude::*;

use crate::cone::{ev_distance, Candidate, FeasibleCone, ZERO_ROW};
use crate::graph::{BandlimitedSignal, Domain, SampleId, Sign, SignObservation, SpectralBasis};
use crate::linalg;
use crate::{Error, Result};

pub use baselines::{baseline_random, baseline_row_norm, full_sequence};

/// Slack on EV-hyperplane distances in the stopping test.
pub const STOP_TOL: f64 = 1e-9;

/// Source of sign observations.
pub trait SignOracle {
    fn observe(&mut self, sample: SampleId) -> Result<Sign>;
}

impl<F: FnMut(SampleId) -> Result<Sign>> SignOracle for F {
    fn observe(&mut self, sample: SampleId) -> Result<Sign> {
        self(sample)
    }
}

/// Oracle backed by a known signal.
pub struct SignalOracle<'a> {
    pub basis: &'a SpectralBasis,
    pub signal: &'a BandlimitedSignal,
    pub zero_tol: f64,
}

impl SignOracle for SignalOracle<'_> {
    fn observe(&mut self, sample: SampleId) -> Result<Sign> {
        Ok(Sign::of(self.basis.sample_value(&self.signal.x, sample)?, self.zero_tol))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Init,
    BthSelect,
    Greedy,
    Stopped,
}

/// Observations so far, the cone they define and the unobserved candidates.
#[derive(Debug, Clone)]
pub struct SamplerState {
    observed: Vec<SignObservation>,
    cone: FeasibleCone,
    candidates: BTreeSet<SampleId>,
    phase: Phase,
}

impl SamplerState {
    pub fn new(basis: &SpectralBasis, domain: Domain) -> Self {
        SamplerState {
            observed: Vec::new(),
            cone: FeasibleCone::new(basis.bandwidth()),
            candidates: domain.samples(basis.n_vertices(), basis.n_edges()).into_iter().collect(),
            phase: Phase::Init,
        }
    }

    pub fn observed(&self) -> &[SignObservation] {
        &self.observed
    }

    pub fn cone(&self) -> &FeasibleCone {
        &self.cone
    }

    pub fn candidates(&self) -> &BTreeSet<SampleId> {
        &self.candidates
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn set_phase(&mut self, phase: Phase) {
        self.phase = phase;
    }

    /// Record an observation and move the sample out of the candidate set.
    pub fn observe(&mut self, obs: SignObservation, basis: &SpectralBasis) -> Result<()> {
        if !self.candidates.remove(&obs.sample) {
            return Err(Error::InvalidSample(obs.sample));
        }
        self.cone = self.cone.add_constraint(&obs, basis)?;
        self.observed.push(obs);
        Ok(())
    }
}

/// The first `B-1` linearly independent rows in descending-norm order.
pub fn init_samples(basis: &SpectralBasis, domain: Domain) -> Result<Vec<SampleId>> {
    let b = basis.bandwidth();
    let needed = b.saturating_sub(1);
    let order = baselines::norm_order(basis, domain)?;
    let mut chosen: Vec<SampleId> = Vec::with_capacity(needed);
    let mut rows: Vec<&DVector<f64>> = Vec::with_capacity(needed);
    for (s, norm) in order {
        if chosen.len() == needed {
            break;
        }
        if norm <= ZERO_ROW {
            continue;
        }
        let row = basis.sample_row(s)?;
        rows.push(row);
        if linalg::rank(&rows, b) == rows.len() {
            chosen.push(s);
        } else {
            rows.pop();
        }
    }
    if chosen.len() < needed {
        return Err(Error::RankDeficientBasis { needed, found: chosen.len() });
    }
    Ok(chosen)
}

/// Minimum pairwise inner product among EVs, `-inf` when the hypothesized
/// cone is not full-dimensional or has fewer than two EVs.
fn min_inner_product(cone: &FeasibleCone) -> f64 {
    if cone.rank() < cone.dim() {
        return f64::NEG_INFINITY;
    }
    let evs = match cone.enumerate_evs() {
        Ok(evs) if evs.len() >= 2 => evs,
        _ => return f64::NEG_INFINITY,
    };
    let mut m = f64::INFINITY;
    for i in 0..evs.len() {
        for j in (i + 1)..evs.len() {
            m = m.min(evs[i].dot(&evs[j]));
        }
    }
    m
}

/// Score of a candidate for the B-th sample: the smaller of the two
/// minimum EV inner products over its hypothesized signs.
pub fn bth_score(cone: &FeasibleCone, cand: &Candidate) -> Result<f64> {
    let plus = cone.with_candidate(cand, Sign::Pos)?;
    let minus = cone.with_candidate(cand, Sign::Neg)?;
    Ok(min_inner_product(&plus).min(min_inner_product(&minus)))
}

fn candidates(state: &SamplerState, basis: &SpectralBasis) -> Result<Vec<Candidate>> {
    state.candidates.iter().map(|&s| Candidate::from_basis(basis, s)).collect()
}

/// Index of the best score under `better`, earliest index on ties.
fn best_index(scores: &[f64], better: impl Fn(f64, f64) -> bool) -> usize {
    let mut best = 0;
    for i in 1..scores.len() {
        if better(scores[i], scores[best]) {
            best = i;
        }
    }
    best
}

/// Argmax of [`bth_score`] over `cands`, earliest candidate on ties.
pub fn select_bth(cone: &FeasibleCone, cands: &[Candidate]) -> Result<SampleId> {
    if cands.is_empty() {
        return Err(Error::NoCandidates);
    }
    let scores: Vec<f64> = cands.par_iter().map(|c| bth_score(cone, c)).collect::<Result<_>>()?;
    Ok(cands[best_index(&scores, |a, b| a > b)].id)
}

/// Pick the B-th sample: argmax of [`bth_score`], ties to the smallest id.
pub fn select_bth_sample(state: &SamplerState, basis: &SpectralBasis) -> Result<SampleId> {
    select_bth(&state.cone, &candidates(state, basis)?)
}

/// Signed distances of every EV to the candidate's hyperplane. Rows are
/// first restricted to the subspace cut out by zero-sign observations.
/// `None` when the restricted row vanishes.
pub fn ev_distances(cone: &FeasibleCone, evs: &[DVector<f64>], row: &DVector<f64>) -> Option<Vec<f64>> {
    let row = cone.project_row(row);
    if row.norm() <= ZERO_ROW {
        return None;
    }
    Some(evs.iter().map(|z| ev_distance(z, &row).expect("row norm checked")).collect())
}

/// Whether a hyperplane strictly separates some EVs from others.
fn separates(d: &[f64]) -> bool {
    d.iter().any(|&x| x > STOP_TOL) && d.iter().any(|&x| x < -STOP_TOL)
}

/// Greedy score `|Σ_z d(z, H_a)|` of a candidate and whether its
/// hyperplane separates the EV set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreedyScore {
    pub id: SampleId,
    pub balance: f64,
    pub separating: bool,
}

pub fn greedy_scores(cone: &FeasibleCone, cands: &[Candidate]) -> Result<Vec<GreedyScore>> {
    let evs = cone.enumerate_evs()?;
    if evs.is_empty() {
        return Err(Error::EmptyEvSet);
    }
    Ok(cands
        .par_iter()
        .map(|c| match ev_distances(cone, &evs, &c.row) {
            Some(d) => GreedyScore { id: c.id, balance: d.iter().sum::<f64>().abs(), separating: separates(&d) },
            None => GreedyScore { id: c.id, balance: f64::INFINITY, separating: false },
        })
        .collect())
}

/// Argmin of `|Σ_z d(z, H_a)|` among candidates whose hyperplane separates
/// the EVs (among all candidates if none does), earliest on ties.
pub fn greedy_select(cone: &FeasibleCone, cands: &[Candidate]) -> Result<SampleId> {
    if cands.is_empty() {
        return Err(Error::NoCandidates);
    }
    let scores = greedy_scores(cone, cands)?;
    let any_sep = scores.iter().any(|s| s.separating);
    let keyed: Vec<f64> =
        scores.iter().map(|s| if s.separating || !any_sep { s.balance } else { f64::INFINITY }).collect();
    Ok(scores[best_index(&keyed, |a, b| a < b)].id)
}

/// Greedy selection over the state's remaining candidates.
pub fn greedy_step(state: &SamplerState, basis: &SpectralBasis) -> Result<SampleId> {
    greedy_select(&state.cone, &candidates(state, basis)?)
}

/// True when no candidate's hyperplane separates the EV set.
pub fn stopping_holds(cone: &FeasibleCone, cands: &[Candidate]) -> Result<bool> {
    Ok(!greedy_scores(cone, cands)?.iter().any(|s| s.separating))
}

/// Stopping test over the state's remaining candidates.
pub fn stopping_check(state: &SamplerState, basis: &SpectralBasis) -> Result<bool> {
    stopping_holds(&state.cone, &candidates(state, basis)?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GssConfig {
    pub domain: Domain,
}

impl Default for GssConfig {
    fn default() -> Self {
        GssConfig { domain: Domain::Vertices }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogRow {
    pub step: usize,
    pub sample: SampleId,
    pub sign: Sign,
    pub n_evs: usize,
    /// Stopping test result evaluated before this sample was chosen.
    pub stopping: bool,
}

/// Output of a sampler: the ordered samples and their signs.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingRun {
    pub sequence: Vec<SampleId>,
    pub signs: Vec<Sign>,
    pub stopped_early: bool,
    pub budget: usize,
    pub log: Vec<LogRow>,
}

impl SamplingRun {
    /// Observe a fixed sequence through `oracle`.
    pub fn observe_sequence<O: SignOracle>(sequence: Vec<SampleId>, oracle: &mut O) -> Result<Self> {
        let signs = sequence.iter().map(|&s| oracle.observe(s)).collect::<Result<Vec<_>>>()?;
        let log = sequence
            .iter()
            .zip(&signs)
            .enumerate()
            .map(|(i, (&sample, &sign))| LogRow { step: i, sample, sign, n_evs: 0, stopping: false })
            .collect();
        let budget = sequence.len();
        Ok(SamplingRun { sequence, signs, stopped_early: false, budget, log })
    }

    pub fn observations(&self) -> Vec<SignObservation> {
        self.sequence.iter().zip(&self.signs).map(|(&sample, &sign)| SignObservation { sample, sign }).collect()
    }

    /// The first `m` observations (all of them for a run that stopped early).
    pub fn prefix(&self, m: usize) -> Vec<SignObservation> {
        self.observations().into_iter().take(m).collect()
    }

    /// Write the run log as CSV `step,kind,index,sign,n_evs,stopping`.
    pub fn write_log(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["step", "kind", "index", "sign", "n_evs", "stopping"])?;
        for r in &self.log {
            w.write_record([
                r.step.to_string(),
                r.sample.kind_str().to_string(),
                r.sample.index.to_string(),
                r.sign.value().to_string(),
                r.n_evs.to_string(),
                r.stopping.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn observe_into<O: SignOracle>(
    state: &mut SamplerState,
    run: &mut SamplingRun,
    oracle: &mut O,
    basis: &SpectralBasis,
    sample: SampleId,
    stopping: bool,
) -> Result<()> {
    let sign = oracle.observe(sample)?;
    state.observe(SignObservation { sample, sign }, basis)?;
    let n_evs = state.cone.enumerate_evs().map(|e| e.len()).unwrap_or(0);
    run.log.push(LogRow { step: run.sequence.len(), sample, sign, n_evs, stopping });
    run.sequence.push(sample);
    run.signs.push(sign);
    Ok(())
}

/// Run GSS with budget `budget` against `oracle`.
pub fn run_gss<O: SignOracle>(
    oracle: &mut O,
    basis: &SpectralBasis,
    budget: usize,
    config: &GssConfig,
) -> Result<SamplingRun> {
    let b = basis.bandwidth();
    let domain_size = config.domain.samples(basis.n_vertices(), basis.n_edges()).len();
    if budget <= b {
        return Err(Error::BudgetTooSmall { budget, bandwidth: b });
    }
    if budget > domain_size {
        return Err(Error::BudgetTooLarge { budget, domain: domain_size });
    }
    let mut state = SamplerState::new(basis, config.domain);
    let mut run = SamplingRun { sequence: Vec::new(), signs: Vec::new(), stopped_early: false, budget, log: Vec::new() };

    for s in init_samples(basis, config.domain)? {
        observe_into(&mut state, &mut run, oracle, basis, s, false)?;
    }
    state.phase = Phase::BthSelect;
    let bth = select_bth_sample(&state, basis)?;
    observe_into(&mut state, &mut run, oracle, basis, bth, false)?;
    state.phase = Phase::Greedy;

    while run.sequence.len() < budget {
        if stopping_check(&state, basis)? {
            state.phase = Phase::Stopped;
            run.stopped_early = true;
            break;
        }
        let next = greedy_step(&state, basis)?;
        observe_into(&mut state, &mut run, oracle, basis, next, false)?;
    }
    Ok(run)
}
