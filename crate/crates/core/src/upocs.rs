//! Direction recovery from sign observations by cyclic projections.
//!
//! Every observation `(a, y)` defines a half-space (or, for `y = 0`, a
//! hyperplane) of coefficient vectors whose sign on `a` agrees with `y`.
//! A sweep projects the iterate onto each of these sets in observation
//! order; after the sweeps the iterate is normalized.

use nalgebra::DVector;
use rayon::prelude::*;

use crate::cone::ZERO_ROW;
use crate::graph::{Sign, SignObservation, SpectralBasis};
use crate::linalg::{random_unit, seeded_rng};
use crate::{Error, Result};

const MAX_RESTARTS: usize = 5;
const COLLAPSE_NORM: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionEntry {
    pub u: DVector<f64>,
    pub required: Sign,
}

impl ProjectionEntry {
    /// Violation of the unit vector along `w` (0 when consistent).
    fn violation(&self, w: &DVector<f64>) -> f64 {
        let t = self.u.dot(w) / self.u.norm();
        match self.required {
            Sign::Pos => (-t).max(0.0),
            Sign::Neg => t.max(0.0),
            Sign::Zero => t.abs(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionSet {
    entries: Vec<ProjectionEntry>,
    unit: Vec<DVector<f64>>,
}

impl ProjectionSet {
    pub fn new(entries: Vec<ProjectionEntry>) -> Result<Self> {
        let mut unit = Vec::with_capacity(entries.len());
        for e in &entries {
            let n = e.u.norm();
            if n <= ZERO_ROW {
                return Err(Error::ZeroRow(n));
            }
            unit.push(&e.u / n);
        }
        Ok(ProjectionSet { entries, unit })
    }

    pub fn from_observations(observations: &[SignObservation], basis: &SpectralBasis) -> Result<Self> {
        let entries = observations
            .iter()
            .map(|o| Ok(ProjectionEntry { u: basis.sample_row(o.sample)?.clone(), required: o.sign }))
            .collect::<Result<Vec<_>>>()?;
        Self::new(entries)
    }

    pub fn entries(&self) -> &[ProjectionEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Largest per-entry violation of `w / ‖w‖`.
    pub fn violation(&self, w: &DVector<f64>) -> f64 {
        let n = w.norm();
        if n == 0.0 {
            return 0.0;
        }
        let w = w / n;
        self.entries.iter().map(|e| e.violation(&w)).fold(0.0, f64::max)
    }

    /// One cyclic sweep, in place.
    pub fn sweep(&self, w: &mut DVector<f64>) {
        for (e, u) in self.entries.iter().zip(&self.unit) {
            let t = u.dot(w);
            if inconsistent(t, e.required) {
                w.axpy(-t, u, 1.0);
            }
        }
    }
}

fn inconsistent(t: f64, required: Sign) -> bool {
    match required {
        Sign::Pos => t < 0.0,
        Sign::Neg => t > 0.0,
        Sign::Zero => true,
    }
}

/// Project `w` onto the consistency set of one entry: onto the hyperplane
/// `uᵀw = 0` when the sign of `uᵀw` disagrees with the required sign (or the
/// required sign is zero), otherwise leave it unchanged.
pub fn project_entry(w: &DVector<f64>, entry: &ProjectionEntry) -> DVector<f64> {
    let t = entry.u.dot(w);
    if inconsistent(t, entry.required) {
        w - &entry.u * (t / entry.u.norm_squared())
    } else {
        w.clone()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpocsConfig {
    pub n_max: usize,
    pub tol: f64,
    /// Seed for fresh starting points if the iterate collapses to zero.
    pub restart_seed: u64,
}

impl Default for UpocsConfig {
    fn default() -> Self {
        UpocsConfig { n_max: 10_000, tol: 1e-10, restart_seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryResult {
    pub h_hat: DVector<f64>,
    pub iterations_used: usize,
    pub final_violation: f64,
    pub converged: bool,
    pub restarts: usize,
}

/// Run cyclic sweeps from `h0` until the violation drops to `tol` or
/// `n_max` sweeps have run, then normalize.
pub fn upocs(pset: &ProjectionSet, h0: &DVector<f64>, cfg: &UpocsConfig) -> Result<RecoveryResult> {
    if cfg.n_max == 0 {
        return Err(Error::InvalidParams("n_max must be at least 1".into()));
    }
    if h0.norm() <= COLLAPSE_NORM {
        return Err(Error::InvalidParams("h0 must be nonzero".into()));
    }
    let dim = h0.len();
    let mut restarts = 0;
    let mut w = h0.clone();
    loop {
        let mut violation = f64::INFINITY;
        let mut used = 0;
        let mut collapsed = false;
        // the constraints are homogeneous, so the iterate is kept at unit
        // scale and its true norm tracked in log space
        let mut log_norm = w.norm().ln();
        w /= w.norm();
        for it in 1..=cfg.n_max {
            pset.sweep(&mut w);
            used = it;
            let n = w.norm();
            log_norm += n.ln();
            if n == 0.0 || log_norm <= COLLAPSE_NORM.ln() {
                collapsed = true;
                break;
            }
            w /= n;
            violation = pset.violation(&w);
            if violation <= cfg.tol {
                break;
            }
        }
        if !collapsed {
            return Ok(RecoveryResult {
                h_hat: w.normalize(),
                iterations_used: used,
                final_violation: violation,
                converged: violation <= cfg.tol,
                restarts,
            });
        }
        restarts += 1;
        if restarts > MAX_RESTARTS {
            return Err(Error::DegenerateIterate { restarts: MAX_RESTARTS });
        }
        let mut rng = seeded_rng(cfg.restart_seed.wrapping_add(restarts as u64));
        w = random_unit(dim, &mut rng);
    }
}

/// Seed for the `i`-th start of [`recover_direction`].
pub fn start_seed(seed: u64, i: usize) -> u64 {
    seed ^ (0x9E37_79B9_7F4A_7C15u64.wrapping_mul(i as u64 + 1))
}

/// Run UPOCS from `k` seeded random starts on the unit sphere and return the
/// per-start results (coefficient space).
pub fn recover_coefficients(
    pset: &ProjectionSet,
    dim: usize,
    k: usize,
    n_max: usize,
    seed: u64,
) -> Result<Vec<RecoveryResult>> {
    if k == 0 {
        return Err(Error::InvalidParams("K must be at least 1".into()));
    }
    (0..k)
        .into_par_iter()
        .map(|i| {
            let s = start_seed(seed, i);
            let mut rng = seeded_rng(s);
            let h0 = random_unit(dim, &mut rng);
            upocs(pset, &h0, &UpocsConfig { n_max, tol: 1e-10, restart_seed: s.rotate_left(17) })
        })
        .collect()
}

/// Recover `k` unit vertex-domain estimates `x̂ = U_B ĥ`.
pub fn recover_direction(
    observations: &[SignObservation],
    basis: &SpectralBasis,
    k: usize,
    n_max: usize,
    seed: u64,
) -> Result<Vec<DVector<f64>>> {
    let pset = ProjectionSet::from_observations(observations, basis)?;
    let results = recover_coefficients(&pset, basis.bandwidth(), k, n_max, seed)?;
    Ok(results.iter().map(|r| basis.synthesize(&r.h_hat).normalize()).collect())
}

/// Mean angle between `x_star` and each estimate.
pub fn angle_error(x_star: &DVector<f64>, x_hats: &[DVector<f64>]) -> Result<f64> {
    let check = |v: &DVector<f64>| {
        let n = v.norm();
        if (n - 1.0).abs() > 1e-8 {
            Err(Error::NonUnitInput(n))
        } else {
            Ok(())
        }
    };
    check(x_star)?;
    if x_hats.is_empty() {
        return Err(Error::InvalidParams("no estimates".into()));
    }
    let mut total = 0.0;
    for x in x_hats {
        check(x)?;
        total += x_star.dot(x).clamp(-1.0, 1.0).acos();
    }
    Ok(total / x_hats.len() as f64)
}
