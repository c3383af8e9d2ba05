//! Experiment harness: manifests, benchmark sweeps, the rating pipeline and
//! plot output.

mod bench;
mod manifest;
mod plot;
mod ratings;
mod stats;

pub use bench::{
    build_basis, recovery_delta, run_bandwidth_sweep, run_benchmark, run_trial, summarize, trial_seed,
    write_bench_csv, write_summary_csv, write_sweep_csv, BenchOutcome, BenchRow, SummaryRow, SweepOutcome, SweepRow,
    TrialOutcome, CAP_DELTA,
};
pub use manifest::{ExperimentManifest, GraphSpec, Sampler};
pub use plot::{line_chart_svg, Series};
pub use ratings::{
    build_similarity_graph, ingest_ratings, prepare_rating_signal, rating_pipeline, round_half_up, scale_estimate,
    standardized_attributes, synthetic_ratings, top_k_hit, write_rating_csv, write_ratings_csv, RatingConfig,
    RatingDataset, RatingItem, RatingOutcome, RatingRow, RatingSignal, SyntheticRatings, BRIDGE_MIN_WEIGHT,
};
pub use stats::{mean_and_stderr, spearman};
