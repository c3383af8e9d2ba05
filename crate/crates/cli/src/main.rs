//! Command-line front end for the signed sampling experiments.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use signsample::experiment::{
    build_basis, ingest_ratings, line_chart_svg, mean_and_stderr, rating_pipeline, run_bandwidth_sweep,
    run_benchmark, summarize, synthetic_ratings, trial_seed, write_rating_csv, write_ratings_csv,
    write_summary_csv, write_sweep_csv, ExperimentManifest, RatingConfig, RatingRow, Sampler, Series, SummaryRow,
    SyntheticRatings,
};
use signsample::graph::{random_bandlimited_signal, Domain, DEFAULT_ZERO_TOL};
use signsample::gss::{run_gss, GssConfig, SignalOracle};
use signsample::mdp::{run_theory_suite, write_theory_report};

#[derive(Parser)]
#[command(name = "signsample", version, about = "Greedy signed sampling of bandlimited graph signals")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Base seed; overrides the manifest's seed
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; overrides the manifest's output_dir
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write SVG line charts
    #[arg(long)]
    plots: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Recovery error of every sampler over the manifest's budgets
    Bench {
        #[arg(long)]
        manifest: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// GSS recovery error over the manifest's bandwidths at its first budget
    Bandwidth {
        #[arg(long)]
        manifest: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Rating recovery on a CSV dataset or on synthetic datasets
    Ratings {
        /// CSV with header id,attr_1..attr_d,score; synthetic data when absent
        #[arg(long)]
        input: Option<PathBuf>,
        /// Number of synthetic datasets
        #[arg(long, default_value_t = 20)]
        datasets: usize,
        /// Bandwidth; exact EV enumeration gets slow beyond about 9
        #[arg(long, default_value_t = 7)]
        bandwidth: usize,
        #[arg(long, default_value_t = 8)]
        knn: usize,
        #[arg(long, value_delimiter = ',', default_values_t = [20, 30, 40])]
        budgets: Vec<usize>,
        #[arg(long, default_value = "vertices+edges")]
        domain: Domain,
        #[arg(long, default_value_t = 30)]
        k: usize,
        #[arg(long, default_value_t = 3000)]
        n_max: usize,
        #[arg(long, default_value_t = 5)]
        random_sets: usize,
        /// Lower and upper score bound, e.g. 0,10; observed extremes when absent
        #[arg(long, value_delimiter = ',', num_args = 2)]
        score_range: Option<Vec<f64>>,
        #[command(flatten)]
        common: Common,
    },
    /// Check the MDP theory on seeded toy instances
    VerifyTheory {
        #[arg(long, default_value_t = 200)]
        instances: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Print the feasible cone after a GSS run on one trial of a manifest
    DumpCone {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        budget: usize,
        #[arg(long, default_value_t = 0)]
        trial: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
}

enum Failure {
    Error(String),
    Invariant(String),
}

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Error(e.to_string())
    }
}

type Outcome = std::result::Result<(), Failure>;

fn load_manifest(path: &Path, common: &Common) -> Result<(ExperimentManifest, PathBuf), Failure> {
    let mut m = ExperimentManifest::load(path).map_err(|e| Failure::Error(format!("{}: {e}", path.display())))?;
    if let Some(seed) = common.seed {
        m = m.with_seed(seed);
    }
    let out = common.out.clone().unwrap_or_else(|| m.output_dir.clone());
    fs::create_dir_all(&out)?;
    Ok((m, out))
}

fn plot_name(sub: &str, graph: &str, domain: Domain) -> String {
    format!("{sub}_{graph}_{}.svg", domain.as_str())
}

fn summary_series(summary: &[SummaryRow]) -> Vec<Series> {
    let mut series: Vec<Series> = Vec::new();
    for r in summary.iter().filter(|r| r.sampler != "full") {
        match series.iter_mut().find(|s| s.label == r.sampler) {
            Some(s) => s.points.push((r.budget as f64, r.mean_delta)),
            None => series.push(Series { label: r.sampler.into(), points: vec![(r.budget as f64, r.mean_delta)] }),
        }
    }
    series
}

fn bench(manifest: &Path, common: &Common) -> Outcome {
    let (m, out) = load_manifest(manifest, common)?;
    let result = run_benchmark(&m, Some(&out.join("bench.csv")));
    let outcome = result?;
    let summary = summarize(&outcome.rows);
    write_summary_csv(&summary, &out.join("bench_summary.csv"))?;
    let logs = out.join("logs");
    fs::create_dir_all(&logs)?;
    for (t, run) in outcome.gss_runs.iter().enumerate() {
        run.write_log(&logs.join(format!("gss_trial{t}.csv")))?;
    }
    if common.plots {
        let mut series = summary_series(&summary);
        if let Some(full) = summary.iter().find(|r| r.sampler == "full") {
            let xs: Vec<usize> = m.budgets.clone();
            series.push(Series { label: "full".into(), points: xs.iter().map(|&b| (b as f64, full.mean_delta)).collect() });
        }
        let svg = line_chart_svg("Recovery error", "budget M", "mean delta (rad)", &series);
        fs::write(out.join(plot_name("bench", m.graph.kind.name(), m.domain)), svg)?;
    }
    for r in &summary {
        println!("{:>8} M={:<4} delta={:.4} +- {:.4}", r.sampler, r.budget, r.mean_delta, r.std_err);
    }
    if let Some(bad) = outcome.rows.iter().find(|r| !(0.0..=std::f64::consts::PI).contains(&r.delta)) {
        return Err(Failure::Invariant(format!("delta {} outside [0, pi]", bad.delta)));
    }
    Ok(())
}

fn bandwidth(manifest: &Path, common: &Common) -> Outcome {
    let (m, out) = load_manifest(manifest, common)?;
    let sweep = run_bandwidth_sweep(&m)?;
    write_sweep_csv(&sweep.rows, &out.join("bandwidth.csv"))?;
    if common.plots {
        let series = vec![Series {
            label: "gss".into(),
            points: sweep.rows.iter().map(|r| (r.bandwidth as f64, r.mean_delta)).collect(),
        }];
        let svg = line_chart_svg("Recovery error by bandwidth", "bandwidth B", "mean delta (rad)", &series);
        fs::write(out.join(plot_name("bandwidth", m.graph.kind.name(), m.domain)), svg)?;
    }
    for r in &sweep.rows {
        println!("B={:<3} delta={:.4} +- {:.4} cap_ratio={:.6}", r.bandwidth, r.mean_delta, r.std_err, r.cap_ratio);
    }
    if let Some(rho) = sweep.spearman {
        println!("spearman(B, delta) = {rho:.3}");
        if rho <= 0.8 {
            return Err(Failure::Invariant(format!("spearman correlation {rho:.3} is not above 0.8")));
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn ratings(
    input: Option<&Path>,
    datasets: usize,
    cfg: RatingConfig,
    score_range: Option<(f64, f64)>,
    common: &Common,
) -> Outcome {
    let out = common.out.clone().unwrap_or_else(|| PathBuf::from("results"));
    fs::create_dir_all(&out)?;
    let seed = common.seed.unwrap_or(0);
    let mut rows: Vec<RatingRow> = Vec::new();
    let mut energy = Vec::new();
    match input {
        Some(path) => {
            let ds = ingest_ratings(path, score_range)?;
            let o = rating_pipeline(&ds, &cfg, 0, seed)?;
            energy.push(o.energy_fraction);
            rows.extend(o.rows);
        }
        None => {
            for d in 0..datasets {
                let s = trial_seed(seed, d);
                let ds = synthetic_ratings(&SyntheticRatings { knn: cfg.knn, ..Default::default() }, s)?;
                if d == 0 {
                    write_ratings_csv(&ds, &out.join("synthetic_ratings_0.csv"))?;
                }
                let o = rating_pipeline(&ds, &cfg, d, s)?;
                energy.push(o.energy_fraction);
                rows.extend(o.rows);
            }
        }
    }
    write_rating_csv(&rows, &out.join("ratings.csv"))?;
    let (e, _) = mean_and_stderr(&energy);
    println!("retained energy fraction (B={}): {e:.3}", cfg.bandwidth);
    // full sampling uses the whole domain, whose size varies by dataset
    let key = |r: &RatingRow| (r.sampler, if r.sampler == "full" { 0 } else { r.budget });
    let mut keys: Vec<(&str, usize)> = rows.iter().map(key).collect();
    keys.sort();
    keys.dedup();
    let mut series: Vec<Series> = Vec::new();
    for (sampler, budget) in keys {
        let sel: Vec<&RatingRow> = rows.iter().filter(|r| key(r) == (sampler, budget)).collect();
        let n = sel.len() as f64;
        let mean = |f: fn(&RatingRow) -> f64| sel.iter().map(|r| f(r)).sum::<f64>() / n;
        let (d, t1, t2) = (mean(|r| r.delta), mean(|r| r.top1), mean(|r| r.top2));
        let m = if budget == 0 { "all".to_string() } else { budget.to_string() };
        println!("{sampler:>8} M={m:<5} delta={d:.4} top1={t1:.3} top2={t2:.3}");
        if sampler != "full" {
            match series.iter_mut().find(|s| s.label == sampler) {
                Some(s) => s.points.push((budget as f64, t1)),
                None => series.push(Series { label: sampler.into(), points: vec![(budget as f64, t1)] }),
            }
        }
    }
    if common.plots {
        let svg = line_chart_svg("Rating label accuracy", "budget M", "top1 accuracy", &series);
        let graph = if input.is_some() { "dataset" } else { "synthetic" };
        fs::write(out.join(plot_name("ratings", graph, cfg.domain)), svg)?;
    }
    if let Some(bad) = rows.iter().find(|r| r.top2 < r.top1) {
        return Err(Failure::Invariant(format!("top2 {} below top1 {}", bad.top2, bad.top1)));
    }
    Ok(())
}

fn verify_theory(instances: usize, common: &Common) -> Outcome {
    let out = common.out.clone().unwrap_or_else(|| PathBuf::from("results"));
    fs::create_dir_all(&out)?;
    let report = run_theory_suite(instances, common.seed.unwrap_or(0))?;
    write_theory_report(&report, &out.join("theory.csv"))?;
    for c in &report.checks {
        println!("{:<26} instances={:<5} violations={:<3} max_gap={:+.3e}", c.name, c.instances, c.violations, c.max_gap);
    }
    match report.total_violations() {
        0 => Ok(()),
        n => Err(Failure::Invariant(format!("{n} theory violations"))),
    }
}

fn dump_cone(manifest: &Path, budget: usize, trial: usize, seed: Option<u64>) -> Outcome {
    let mut m = ExperimentManifest::load(manifest).map_err(|e| Failure::Error(format!("{}: {e}", manifest.display())))?;
    if let Some(s) = seed {
        m = m.with_seed(s);
    }
    let (_, basis) = build_basis(&m, None)?;
    let signal = random_bandlimited_signal(&basis, trial_seed(m.seed, trial));
    let mut oracle = SignalOracle { basis: &basis, signal: &signal, zero_tol: DEFAULT_ZERO_TOL };
    let run = run_gss(&mut oracle, &basis, budget, &GssConfig { domain: m.domain })?;
    let mut cone = signsample::cone::FeasibleCone::new(basis.bandwidth());
    for obs in run.observations() {
        cone = cone.add_constraint(&obs, &basis)?;
    }
    println!("{}", cone.dump());
    if !cone.contains(&signal.h, 1e-9) {
        return Err(Failure::Invariant("true coefficients outside the cone".into()));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Bench { manifest, common } => bench(manifest, common),
        Command::Bandwidth { manifest, common } => bandwidth(manifest, common),
        Command::Ratings {
            input,
            datasets,
            bandwidth,
            knn,
            budgets,
            domain,
            k,
            n_max,
            random_sets,
            score_range,
            common,
        } => {
            let cfg = RatingConfig {
                bandwidth: *bandwidth,
                knn: *knn,
                domain: *domain,
                budgets: budgets.clone(),
                samplers: vec![Sampler::Gss, Sampler::Random, Sampler::RowNorm, Sampler::Full],
                k: *k,
                n_max: *n_max,
                random_sets: *random_sets,
            };
            let range = score_range.as_ref().map(|v| (v[0], v[1]));
            ratings(input.as_deref(), *datasets, cfg, range, common)
        }
        Command::VerifyTheory { instances, common } => verify_theory(*instances, common),
        Command::DumpCone { manifest, budget, trial, seed } => dump_cone(manifest, *budget, *trial, *seed),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invariant(msg)) => {
            eprintln!("invariant violation: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Error(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
