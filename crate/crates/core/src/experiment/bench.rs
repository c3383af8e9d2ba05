//! Recovery-error benchmarks over budgets and bandwidths.

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use super::manifest::{ExperimentManifest, Sampler};
use super::stats::{mean_and_stderr, spearman};
use crate::graph::{
    generate_graph, random_bandlimited_signal, sign_observe, BandlimitedSignal, Graph, SignObservation,
    SpectralBasis, DEFAULT_ZERO_TOL,
};
use crate::gss::{baseline_random, baseline_row_norm, full_sequence, run_gss, GssConfig, SamplingRun, SignalOracle};
use crate::mdp::spherical_cap_ratio;
use crate::upocs::{angle_error, recover_direction};
use crate::{Error, Result};

const RECOVERY_SALT: u64 = 0x2545_f491_4f6c_dd1d;
const RANDOM_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

/// Seed for everything drawn in one trial.
pub fn trial_seed(seed: u64, trial: usize) -> u64 {
    seed ^ trial as u64
}

/// Angle error of UPOCS recovery from `observations`, with `k` starts.
pub fn recovery_delta(
    observations: &[SignObservation],
    basis: &SpectralBasis,
    signal: &BandlimitedSignal,
    k: usize,
    n_max: usize,
    seed: u64,
) -> Result<f64> {
    let x_hats = recover_direction(observations, basis, k, n_max, seed)?;
    angle_error(&signal.x, &x_hats)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub sampler: &'static str,
    pub budget: usize,
    pub trial: usize,
    pub delta: f64,
    pub stopped_early: bool,
}

#[derive(Debug, Clone)]
pub struct TrialOutcome {
    pub rows: Vec<BenchRow>,
    /// GSS run at the largest budget, when GSS was requested.
    pub gss_run: Option<SamplingRun>,
}

#[derive(Debug, Clone)]
pub struct BenchOutcome {
    pub graph: Graph,
    pub rows: Vec<BenchRow>,
    pub gss_runs: Vec<SamplingRun>,
}

pub fn build_basis(manifest: &ExperimentManifest, bandwidth: Option<usize>) -> Result<(Graph, SpectralBasis)> {
    let graph = generate_graph(&manifest.graph.kind, manifest.graph.seed)?;
    let passband = match bandwidth {
        Some(b) => manifest.passband_of_width(b),
        None => manifest.passband.clone(),
    };
    let basis = SpectralBasis::new(&graph, &passband)?;
    Ok((graph, basis))
}

fn observe_all(basis: &SpectralBasis, signal: &BandlimitedSignal, seq: &[crate::graph::SampleId]) -> Result<Vec<SignObservation>> {
    seq.iter().map(|&s| sign_observe(basis, signal, s, DEFAULT_ZERO_TOL)).collect()
}

/// All samplers of `manifest` at all budgets on one trial.
pub fn run_trial(manifest: &ExperimentManifest, basis: &SpectralBasis, trial: usize) -> Result<TrialOutcome> {
    let seed = trial_seed(manifest.seed, trial);
    let signal = random_bandlimited_signal(basis, seed);
    let rec_seed = seed ^ RECOVERY_SALT;
    let domain = full_sequence(basis, manifest.domain);
    let max_budget = *manifest.budgets.iter().max().expect("validated");
    let delta = |obs: &[SignObservation]| recovery_delta(obs, basis, &signal, manifest.k, manifest.n_max, rec_seed);
    let mut rows = Vec::new();
    let mut gss_run = None;
    for &sampler in &manifest.baselines {
        match sampler {
            Sampler::Gss => {
                let mut oracle = SignalOracle { basis, signal: &signal, zero_tol: DEFAULT_ZERO_TOL };
                let run = run_gss(&mut oracle, basis, max_budget, &GssConfig { domain: manifest.domain })?;
                for &m in &manifest.budgets {
                    let stopped = run.stopped_early && run.sequence.len() < m;
                    rows.push(BenchRow { sampler: "gss", budget: m, trial, delta: delta(&run.prefix(m))?, stopped_early: stopped });
                }
                gss_run = Some(run);
            }
            Sampler::Random => {
                for &m in &manifest.budgets {
                    let mut sum = 0.0;
                    for set in 0..manifest.random_sets {
                        let s = seed ^ RANDOM_SALT.wrapping_mul(set as u64 + 1) ^ (m as u64) << 32;
                        let seq = baseline_random(&domain, m, s)?;
                        sum += delta(&observe_all(basis, &signal, &seq)?)?;
                    }
                    let d = sum / manifest.random_sets as f64;
                    rows.push(BenchRow { sampler: "random", budget: m, trial, delta: d, stopped_early: false });
                }
            }
            Sampler::RowNorm => {
                let seq = baseline_row_norm(basis, manifest.domain, max_budget)?;
                for &m in &manifest.budgets {
                    let d = delta(&observe_all(basis, &signal, &seq[..m])?)?;
                    rows.push(BenchRow { sampler: "rownorm", budget: m, trial, delta: d, stopped_early: false });
                }
            }
            Sampler::Full => {
                let d = delta(&observe_all(basis, &signal, &domain)?)?;
                rows.push(BenchRow { sampler: "full", budget: domain.len(), trial, delta: d, stopped_early: false });
            }
        }
    }
    Ok(TrialOutcome { rows, gss_run })
}

/// Every trial of `manifest`. With `csv_path`, rows are written in trial
/// order; on failure the rows of the trials before the failing one are
/// still written.
pub fn run_benchmark(manifest: &ExperimentManifest, csv_path: Option<&Path>) -> Result<BenchOutcome> {
    let (graph, basis) = build_basis(manifest, None)?;
    manifest.validate_for(basis.bandwidth(), full_sequence(&basis, manifest.domain).len())?;
    let outcomes: Vec<Result<TrialOutcome>> =
        (0..manifest.trials).into_par_iter().map(|t| run_trial(manifest, &basis, t)).collect();
    let mut rows = Vec::new();
    let mut gss_runs = Vec::new();
    let mut failure = None;
    for o in outcomes {
        match o {
            Ok(o) => {
                rows.extend(o.rows);
                gss_runs.extend(o.gss_run);
            }
            Err(e) => {
                failure = Some(e);
                break;
            }
        }
    }
    if let Some(path) = csv_path {
        write_bench_csv(&rows, path)?;
    }
    match failure {
        Some(e) => Err(e),
        None => Ok(BenchOutcome { graph, rows, gss_runs }),
    }
}

pub fn write_bench_csv(rows: &[BenchRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["sampler", "budget", "trial", "delta", "stopped_early"])?;
    for r in rows {
        w.write_record([
            r.sampler.to_string(),
            r.budget.to_string(),
            r.trial.to_string(),
            format!("{:.12}", r.delta),
            r.stopped_early.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Mean δ per sampler and budget.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub sampler: &'static str,
    pub budget: usize,
    pub trials: usize,
    pub mean_delta: f64,
    pub std_err: f64,
}

pub fn summarize(rows: &[BenchRow]) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<(&'static str, usize), Vec<f64>> = BTreeMap::new();
    for r in rows {
        groups.entry((r.sampler, r.budget)).or_default().push(r.delta);
    }
    groups
        .into_iter()
        .map(|((sampler, budget), ds)| {
            let (mean_delta, std_err) = mean_and_stderr(&ds);
            SummaryRow { sampler, budget, trials: ds.len(), mean_delta, std_err }
        })
        .collect()
}

pub fn write_summary_csv(rows: &[SummaryRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["sampler", "budget", "trials", "mean_delta", "std_err"])?;
    for r in rows {
        w.write_record([
            r.sampler.to_string(),
            r.budget.to_string(),
            r.trials.to_string(),
            format!("{:.12}", r.mean_delta),
            format!("{:.12}", r.std_err),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Angle at which the companion cap ratio is reported.
pub const CAP_DELTA: f64 = 0.3;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub bandwidth: usize,
    pub trials: usize,
    pub mean_delta: f64,
    pub std_err: f64,
    pub cap_ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome {
    pub rows: Vec<SweepRow>,
    /// Rank correlation of bandwidth and mean δ; `None` for fewer than two
    /// bandwidths.
    pub spearman: Option<f64>,
}

/// GSS recovery error per bandwidth at the manifest's first budget.
pub fn run_bandwidth_sweep(manifest: &ExperimentManifest) -> Result<SweepOutcome> {
    manifest.validate()?;
    if manifest.bandwidths.is_empty() {
        return Err(Error::Manifest("bandwidth sweep needs a bandwidths list".into()));
    }
    let budget = manifest.budgets[0];
    let mut rows = Vec::new();
    for &b in &manifest.bandwidths {
        let (_, basis) = build_basis(manifest, Some(b))?;
        let domain_size = full_sequence(&basis, manifest.domain).len();
        if budget <= b || budget > domain_size {
            return Err(Error::Manifest(format!("budget {budget} outside ({b}, {domain_size}]")));
        }
        let deltas: Vec<f64> = (0..manifest.trials)
            .into_par_iter()
            .map(|t| {
                let seed = trial_seed(manifest.seed, t);
                let signal = random_bandlimited_signal(&basis, seed);
                let mut oracle = SignalOracle { basis: &basis, signal: &signal, zero_tol: DEFAULT_ZERO_TOL };
                let run = run_gss(&mut oracle, &basis, budget, &GssConfig { domain: manifest.domain })?;
                recovery_delta(&run.observations(), &basis, &signal, manifest.k, manifest.n_max, seed ^ RECOVERY_SALT)
            })
            .collect::<Result<_>>()?;
        let (mean_delta, std_err) = mean_and_stderr(&deltas);
        rows.push(SweepRow { bandwidth: b, trials: deltas.len(), mean_delta, std_err, cap_ratio: spherical_cap_ratio(b, CAP_DELTA)? });
    }
    let spearman = (rows.len() >= 2).then(|| {
        let xs: Vec<f64> = rows.iter().map(|r| r.bandwidth as f64).collect();
        let ys: Vec<f64> = rows.iter().map(|r| r.mean_delta).collect();
        spearman(&xs, &ys)
    });
    Ok(SweepOutcome { rows, spearman })
}

pub fn write_sweep_csv(rows: &[SweepRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["bandwidth", "trials", "mean_delta", "std_err", "cap_ratio"])?;
    for r in rows {
        w.write_record([
            r.bandwidth.to_string(),
            r.trials.to_string(),
            format!("{:.12}", r.mean_delta),
            format!("{:.12}", r.std_err),
            format!("{:.12}", r.cap_ratio),
        ])?;
    }
    w.flush()?;
    Ok(())
}
