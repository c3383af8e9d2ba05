//! Rating recovery: similarity graphs over item attributes, sign-only
//! recovery of the rating field and integer-label accuracy.

use std::path::Path;

use nalgebra::DVector;
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use super::manifest::Sampler;
use crate::graph::{sign_observe, BandlimitedSignal, Domain, Graph, SampleId, SignObservation, Spectrum, SpectralBasis};
use crate::gss::{baseline_random, baseline_row_norm, full_sequence, run_gss, GssConfig, SignalOracle};
use crate::linalg::seeded_rng;
use crate::upocs::recover_direction;
use crate::{Error, Result};

/// Weight given to a bridging edge whose attribute similarity is not positive.
pub const BRIDGE_MIN_WEIGHT: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct RatingItem {
    pub id: String,
    pub attributes: Vec<f64>,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatingDataset {
    pub items: Vec<RatingItem>,
    pub score_range: (f64, f64),
}

impl RatingDataset {
    /// Validate `items`; the score range defaults to the observed extremes.
    pub fn new(items: Vec<RatingItem>, score_range: Option<(f64, f64)>) -> Result<Self> {
        let first = items.first().ok_or(Error::EmptyDataset)?;
        let d = first.attributes.len();
        if d == 0 {
            return Err(Error::SchemaError("no attribute columns".into()));
        }
        if let Some(it) = items.iter().find(|it| it.attributes.len() != d) {
            return Err(Error::SchemaError(format!("item {} has {} attributes, expected {d}", it.id, it.attributes.len())));
        }
        if items.iter().any(|it| !it.score.is_finite() || it.attributes.iter().any(|a| !a.is_finite())) {
            return Err(Error::SchemaError("non-finite value".into()));
        }
        let lo = items.iter().map(|it| it.score).fold(f64::INFINITY, f64::min);
        let hi = items.iter().map(|it| it.score).fold(f64::NEG_INFINITY, f64::max);
        let range = score_range.unwrap_or((lo, hi));
        if !(range.0 < range.1) || lo < range.0 || hi > range.1 {
            return Err(Error::SchemaError(format!("scores [{lo}, {hi}] outside range {range:?}")));
        }
        Ok(RatingDataset { items, score_range: range })
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn scores(&self) -> DVector<f64> {
        DVector::from_iterator(self.len(), self.items.iter().map(|it| it.score))
    }
}

/// Read a CSV with header `id,attr_1,...,attr_d,score`.
pub fn ingest_ratings(path: &Path, score_range: Option<(f64, f64)>) -> Result<RatingDataset> {
    let mut rdr = csv::Reader::from_path(path)?;
    let header = rdr.headers()?.clone();
    let n = header.len();
    let attrs_ok = (1..n.saturating_sub(1)).all(|i| header[i] == format!("attr_{i}"));
    if n < 3 || &header[0] != "id" || &header[n - 1] != "score" || !attrs_ok {
        return Err(Error::SchemaError(format!("unexpected header {:?}", header.iter().collect::<Vec<_>>())));
    }
    let parse = |s: &str, line: usize| {
        s.trim().parse::<f64>().map_err(|_| Error::SchemaError(format!("line {line}: bad number {s:?}")))
    };
    let mut items = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        if rec.len() != n {
            return Err(Error::SchemaError(format!("line {line}: {} fields, expected {n}", rec.len())));
        }
        let attributes = (1..n - 1).map(|j| parse(&rec[j], line)).collect::<Result<_>>()?;
        items.push(RatingItem { id: rec[0].to_string(), attributes, score: parse(&rec[n - 1], line)? });
    }
    RatingDataset::new(items, score_range)
}

pub fn write_ratings_csv(ds: &RatingDataset, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let d = ds.items[0].attributes.len();
    let mut header = vec!["id".to_string()];
    header.extend((1..=d).map(|i| format!("attr_{i}")));
    header.push("score".into());
    w.write_record(&header)?;
    for it in &ds.items {
        let mut rec = vec![it.id.clone()];
        rec.extend(it.attributes.iter().map(|a| format!("{a:.6}")));
        rec.push(format!("{:.1}", it.score));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Column-wise z-scores of the attribute vectors; constant columns become 0.
pub fn standardized_attributes(ds: &RatingDataset) -> Vec<DVector<f64>> {
    let n = ds.len() as f64;
    let d = ds.items[0].attributes.len();
    let mut out: Vec<DVector<f64>> = ds.items.iter().map(|it| DVector::from_vec(it.attributes.clone())).collect();
    for j in 0..d {
        let mean = out.iter().map(|v| v[j]).sum::<f64>() / n;
        let sd = (out.iter().map(|v| (v[j] - mean).powi(2)).sum::<f64>() / n).sqrt();
        for v in &mut out {
            v[j] = if sd > 0.0 { (v[j] - mean) / sd } else { 0.0 };
        }
    }
    out
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Similarity graph: weight `max(0, zᵢ·zⱼ)` on standardized attributes,
/// each vertex keeps its `knn` strongest positive edges (union over both
/// endpoints), then components are joined by their most similar pairs.
pub fn build_similarity_graph(ds: &RatingDataset, knn: usize) -> Result<Graph> {
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if knn == 0 {
        return Err(Error::InvalidParams("knn must be at least 1".into()));
    }
    let z = standardized_attributes(ds);
    let n = z.len();
    let sim = |i: usize, j: usize| z[i].dot(&z[j]);
    let mut keep = std::collections::BTreeSet::new();
    for i in 0..n {
        let mut nbrs: Vec<(usize, f64)> = (0..n).filter(|&j| j != i).map(|j| (j, sim(i, j))).filter(|p| p.1 > 0.0).collect();
        nbrs.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        for &(j, _) in nbrs.iter().take(knn) {
            keep.insert((i.min(j), i.max(j)));
        }
    }
    let mut parent: Vec<usize> = (0..n).collect();
    for &(a, b) in &keep {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        parent[ra] = rb;
    }
    loop {
        let root0 = find(&mut parent, 0);
        let inside: Vec<bool> = (0..n).map(|v| find(&mut parent, v) == root0).collect();
        if inside.iter().all(|&b| b) {
            break;
        }
        let mut best: Option<(usize, usize, f64)> = None;
        for a in (0..n).filter(|&a| inside[a]) {
            for b in (0..n).filter(|&b| !inside[b]) {
                let w = sim(a, b);
                if best.is_none_or(|x| w > x.2) {
                    best = Some((a, b, w));
                }
            }
        }
        let (a, b, _) = best.expect("both sides nonempty");
        keep.insert((a.min(b), a.max(b)));
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        parent[ra] = rb;
    }
    Graph::new(n, keep.into_iter().map(|(a, b)| (a, b, sim(a, b).max(BRIDGE_MIN_WEIGHT))))
}

/// Parameters of the synthetic rating generator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SyntheticRatings {
    pub n_items: usize,
    pub n_attributes: usize,
    pub knn: usize,
    /// Lowest nonzero graph frequencies carrying the smooth field.
    pub smooth_components: usize,
    /// Per-item noise relative to the smooth field's standard deviation.
    pub noise: f64,
}

impl Default for SyntheticRatings {
    fn default() -> Self {
        SyntheticRatings { n_items: 100, n_attributes: 6, knn: 8, smooth_components: 12, noise: 0.6 }
    }
}

/// Items with Gaussian attributes and a rating field that is smooth on
/// their similarity graph plus noise, mapped to `[0, 10]` with one decimal.
pub fn synthetic_ratings(cfg: &SyntheticRatings, seed: u64) -> Result<RatingDataset> {
    let mut rng = seeded_rng(seed);
    let items: Vec<RatingItem> = (0..cfg.n_items)
        .map(|i| RatingItem {
            id: format!("item{i}"),
            attributes: (0..cfg.n_attributes).map(|_| rng.sample(StandardNormal)).collect(),
            score: 0.0,
        })
        .collect();
    let draft = RatingDataset { items, score_range: (0.0, 10.0) };
    let graph = build_similarity_graph(&draft, cfg.knn)?;
    let spectrum = Spectrum::of(&graph)?;
    let n = cfg.n_items;
    let mut field = DVector::zeros(n);
    for i in 1..=cfg.smooth_components.min(n - 1) {
        let a: f64 = rng.sample(StandardNormal);
        field += spectrum.eigenvectors.column(i) * a;
    }
    let mean = field.mean();
    let sd = (field.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
    let noise = Normal::new(0.0, cfg.noise * sd.max(f64::MIN_POSITIVE)).expect("finite scale");
    for x in field.iter_mut() {
        *x += noise.sample(&mut rng);
    }
    let (lo, hi) = (field.min(), field.max());
    let mut items = draft.items;
    for (it, &x) in items.iter_mut().zip(field.iter()) {
        it.score = (10.0 * (x - lo) / (hi - lo) * 10.0).round() / 10.0;
    }
    RatingDataset::new(items, Some((0.0, 10.0)))
}

/// Nearest integer, halves rounded up.
pub fn round_half_up(x: f64) -> i64 {
    (x + 0.5).floor() as i64
}

/// Whether the `k` integers nearest to `estimate` (k = 1 or 2) contain `label`.
pub fn top_k_hit(estimate: f64, label: i64, k: usize) -> bool {
    match k {
        1 => round_half_up(estimate) == label,
        _ => {
            let f = estimate.floor() as i64;
            label == f || label == f + 1
        }
    }
}

/// The DC-free, band-selected rating signal that is sampled.
#[derive(Debug, Clone)]
pub struct RatingSignal {
    pub basis: SpectralBasis,
    pub signal: BandlimitedSignal,
    /// Mean rating (the zero-frequency component in vertex units).
    pub dc: f64,
    /// Share of the DC-free energy kept by the passband.
    pub energy_fraction: f64,
}

/// Remove the DC component, keep the `b` largest-amplitude nonzero
/// frequencies and normalize.
pub fn prepare_rating_signal(ds: &RatingDataset, graph: &Graph, b: usize) -> Result<RatingSignal> {
    let n = ds.len();
    if b == 0 || b >= n {
        return Err(Error::InvalidParams(format!("bandwidth {b} for {n} items")));
    }
    let scores = ds.scores();
    let dc = scores.mean();
    let spectrum = Spectrum::of(graph)?;
    let coeffs = spectrum.gft(&scores);
    let total: f64 = coeffs.iter().skip(1).map(|c| c * c).sum();
    let mut order: Vec<usize> = (1..n).collect();
    order.sort_by(|&i, &j| coeffs[j].abs().total_cmp(&coeffs[i].abs()).then(i.cmp(&j)));
    let mut band: Vec<usize> = order[..b].to_vec();
    band.sort_unstable();
    let kept: f64 = band.iter().map(|&i| coeffs[i] * coeffs[i]).sum();
    let passband: Vec<usize> = band.iter().map(|i| i + 1).collect();
    let basis = SpectralBasis::from_spectrum(graph, &spectrum, &passband)?;
    let h = DVector::from_iterator(b, band.iter().map(|&i| coeffs[i]));
    let signal = BandlimitedSignal::from_coefficients(&basis, h);
    Ok(RatingSignal { basis, signal, dc, energy_fraction: if total > 0.0 { kept / total } else { 0.0 } })
}

/// Add the DC back to a unit direction and map it affinely onto the score
/// range.
pub fn scale_estimate(direction: &DVector<f64>, dc: f64, range: (f64, f64)) -> DVector<f64> {
    let y = direction.add_scalar(dc);
    let (lo, hi) = (y.min(), y.max());
    if hi - lo <= f64::EPSILON * hi.abs().max(1.0) {
        return DVector::from_element(y.len(), (range.0 + range.1) / 2.0);
    }
    y.map(|v| range.0 + (v - lo) / (hi - lo) * (range.1 - range.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatingConfig {
    pub bandwidth: usize,
    pub knn: usize,
    pub domain: Domain,
    pub budgets: Vec<usize>,
    pub samplers: Vec<Sampler>,
    pub k: usize,
    pub n_max: usize,
    pub random_sets: usize,
}

impl Default for RatingConfig {
    fn default() -> Self {
        RatingConfig {
            bandwidth: 7,
            knn: 8,
            domain: Domain::VerticesAndEdges,
            budgets: vec![20, 30, 40],
            samplers: vec![Sampler::Gss, Sampler::Random, Sampler::Full],
            k: 30,
            n_max: 3000,
            random_sets: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatingRow {
    pub dataset: usize,
    pub sampler: &'static str,
    pub budget: usize,
    pub delta: f64,
    pub top1: f64,
    pub top2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatingOutcome {
    pub rows: Vec<RatingRow>,
    pub energy_fraction: f64,
    pub n_edges: usize,
}

struct Scored {
    delta: f64,
    top1: f64,
    top2: f64,
}

fn score_run(
    obs: &[SignObservation],
    prepared: &RatingSignal,
    ds: &RatingDataset,
    cfg: &RatingConfig,
    seed: u64,
) -> Result<Scored> {
    let basis = &prepared.basis;
    let x_hats = recover_direction(obs, basis, cfg.k, cfg.n_max, seed)?;
    let delta = crate::upocs::angle_error(&prepared.signal.x, &x_hats)?;
    let mean = x_hats.iter().fold(DVector::zeros(ds.len()), |acc, x| acc + x);
    let direction = if mean.norm() > 0.0 { mean.normalize() } else { mean };
    let est = scale_estimate(&direction, prepared.dc, ds.score_range);
    let n = ds.len() as f64;
    let (mut t1, mut t2) = (0usize, 0usize);
    for (it, &e) in ds.items.iter().zip(est.iter()) {
        let label = round_half_up(it.score);
        t1 += usize::from(top_k_hit(e, label, 1));
        t2 += usize::from(top_k_hit(e, label, 2));
    }
    Ok(Scored { delta, top1: t1 as f64 / n, top2: t2 as f64 / n })
}

/// Run every sampler at every budget on one dataset.
pub fn rating_pipeline(ds: &RatingDataset, cfg: &RatingConfig, dataset: usize, seed: u64) -> Result<RatingOutcome> {
    let graph = build_similarity_graph(ds, cfg.knn)?;
    let prepared = prepare_rating_signal(ds, &graph, cfg.bandwidth)?;
    let basis = &prepared.basis;
    let domain = full_sequence(basis, cfg.domain);
    let b = cfg.bandwidth;
    if let Some(&m) = cfg.budgets.iter().find(|&&m| m <= b || m > domain.len()) {
        return Err(Error::BudgetTooLarge { budget: m, domain: domain.len() });
    }
    let max_budget = cfg.budgets.iter().copied().max().ok_or_else(|| Error::InvalidParams("no budgets".into()))?;
    let observe = |seq: &[SampleId]| -> Result<Vec<SignObservation>> {
        seq.iter().map(|&s| sign_observe(basis, &prepared.signal, s, crate::graph::DEFAULT_ZERO_TOL)).collect()
    };
    let rec_seed = seed ^ 0x5851_f42d_4c95_7f2d;
    let mut rows = Vec::new();
    let mut push = |sampler: &'static str, budget: usize, s: Scored| {
        rows.push(RatingRow { dataset, sampler, budget, delta: s.delta, top1: s.top1, top2: s.top2 });
    };
    for &sampler in &cfg.samplers {
        match sampler {
            Sampler::Gss => {
                let mut oracle = SignalOracle { basis, signal: &prepared.signal, zero_tol: crate::graph::DEFAULT_ZERO_TOL };
                let run = run_gss(&mut oracle, basis, max_budget, &GssConfig { domain: cfg.domain })?;
                for &m in &cfg.budgets {
                    push("gss", m, score_run(&run.prefix(m), &prepared, ds, cfg, rec_seed)?);
                }
            }
            Sampler::Random => {
                for &m in &cfg.budgets {
                    let runs: Vec<Scored> = (0..cfg.random_sets)
                        .into_par_iter()
                        .map(|set| {
                            let s = seed ^ 0x9e37_79b9_7f4a_7c15u64.wrapping_mul(set as u64 + 1) ^ ((m as u64) << 32);
                            score_run(&observe(&baseline_random(&domain, m, s)?)?, &prepared, ds, cfg, rec_seed)
                        })
                        .collect::<Result<_>>()?;
                    let k = runs.len() as f64;
                    push(
                        "random",
                        m,
                        Scored {
                            delta: runs.iter().map(|r| r.delta).sum::<f64>() / k,
                            top1: runs.iter().map(|r| r.top1).sum::<f64>() / k,
                            top2: runs.iter().map(|r| r.top2).sum::<f64>() / k,
                        },
                    );
                }
            }
            Sampler::RowNorm => {
                let seq = baseline_row_norm(basis, cfg.domain, max_budget)?;
                for &m in &cfg.budgets {
                    push("rownorm", m, score_run(&observe(&seq[..m])?, &prepared, ds, cfg, rec_seed)?);
                }
            }
            Sampler::Full => {
                push("full", domain.len(), score_run(&observe(&domain)?, &prepared, ds, cfg, rec_seed)?);
            }
        }
    }
    Ok(RatingOutcome { rows, energy_fraction: prepared.energy_fraction, n_edges: graph.n_edges() })
}

pub fn write_rating_csv(rows: &[RatingRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["dataset", "sampler", "budget", "delta", "top1", "top2"])?;
    for r in rows {
        w.write_record([
            r.dataset.to_string(),
            r.sampler.to_string(),
            r.budget.to_string(),
            format!("{:.12}", r.delta),
            format!("{:.6}", r.top1),
            format!("{:.6}", r.top2),
        ])?;
    }
    w.flush()?;
    Ok(())
}
