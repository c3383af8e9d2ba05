//! Non-adaptive samplers used as comparison points.

use rand::seq::SliceRandom;

use crate::graph::{Domain, SampleId, SpectralBasis};
use crate::linalg::seeded_rng;
use crate::{Error, Result};

/// `m` samples drawn uniformly without replacement from `domain`.
pub fn baseline_random(domain: &[SampleId], m: usize, seed: u64) -> Result<Vec<SampleId>> {
    if m > domain.len() {
        return Err(Error::BudgetTooLarge { budget: m, domain: domain.len() });
    }
    let mut rng = seeded_rng(seed);
    Ok(domain.choose_multiple(&mut rng, m).copied().collect())
}

/// Norms closer than this are treated as tied.
const NORM_TIE: f64 = 1e-12;

/// Domain samples by descending row norm, ties to the smallest id.
pub(crate) fn norm_order(basis: &SpectralBasis, domain: Domain) -> Result<Vec<(SampleId, f64)>> {
    let mut scored: Vec<(SampleId, f64)> = domain
        .samples(basis.n_vertices(), basis.n_edges())
        .into_iter()
        .map(|s| Ok((s, basis.sample_row(s)?.norm())))
        .collect::<Result<_>>()?;
    let key = |x: f64| (x / NORM_TIE).round() as i64;
    scored.sort_by(|a, b| key(b.1).cmp(&key(a.1)).then(a.0.cmp(&b.0)));
    Ok(scored)
}

/// The `m` samples with the largest row norms, ties to the smallest id.
pub fn baseline_row_norm(basis: &SpectralBasis, domain: Domain, m: usize) -> Result<Vec<SampleId>> {
    let scored = norm_order(basis, domain)?;
    if m > scored.len() {
        return Err(Error::BudgetTooLarge { budget: m, domain: scored.len() });
    }
    Ok(scored.into_iter().take(m).map(|(s, _)| s).collect())
}

/// Every sample of the domain in id order.
pub fn full_sequence(basis: &SpectralBasis, domain: Domain) -> Vec<SampleId> {
    domain.samples(basis.n_vertices(), basis.n_edges())
}
