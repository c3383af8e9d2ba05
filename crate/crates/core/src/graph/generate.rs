use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Graph;
use crate::linalg::seeded_rng;
use crate::{Error, Result};

const MAX_ATTEMPTS: usize = 100;

/// Random graph families used by the experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum GraphKind {
    /// Random geometric graph on the unit square: `knn` nearest neighbours
    /// (union-symmetrized) with Gaussian-kernel weights.
    Sensor { n: usize, knn: usize },
    /// G(n, p) with unit weights.
    Er { n: usize, p: f64 },
    /// Watts-Strogatz ring lattice of even degree `k`, rewired with probability `p`.
    Ws { n: usize, k: usize, p: f64 },
}

impl GraphKind {
    pub fn name(&self) -> &'static str {
        match self {
            GraphKind::Sensor { .. } => "sensor",
            GraphKind::Er { .. } => "er",
            GraphKind::Ws { .. } => "ws",
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParams(m));
        match *self {
            GraphKind::Sensor { n, knn } if n < 2 || knn == 0 || knn >= n => {
                bad(format!("sensor needs n >= 2 and 0 < knn < n (n={n}, knn={knn})"))
            }
            GraphKind::Er { n, p } if n < 2 || !(p > 0.0 && p <= 1.0) => {
                bad(format!("er needs n >= 2 and p in (0,1] (n={n}, p={p})"))
            }
            GraphKind::Ws { n, k, p } if k < 2 || k % 2 != 0 || k >= n || !(0.0..=1.0).contains(&p) => {
                bad(format!("ws needs even 2 <= k < n and p in [0,1] (n={n}, k={k}, p={p})"))
            }
            _ => Ok(()),
        }
    }
}

/// Draw a connected graph. A disconnected draw is retried with the seed
/// incremented, up to 100 attempts.
pub fn generate_graph(kind: &GraphKind, seed: u64) -> Result<Graph> {
    kind.validate()?;
    for attempt in 0..MAX_ATTEMPTS {
        let s = seed.wrapping_add(attempt as u64);
        let (n, edges) = match *kind {
            GraphKind::Sensor { n, knn } => (n, sensor_edges(n, knn, s)),
            GraphKind::Er { n, p } => (n, er_edges(n, p, s)),
            GraphKind::Ws { n, k, p } => (n, ws_edges(n, k, p, s)),
        };
        let pairs: Vec<(usize, usize)> = edges.iter().map(|&(p, q, _)| (p, q)).collect();
        if n > 0 && Graph::is_connected_raw(n, &pairs) {
            return Graph::new(n, edges);
        }
    }
    Err(Error::ConnectivityFailure { attempts: MAX_ATTEMPTS })
}

fn sensor_edges(n: usize, knn: usize, seed: u64) -> Vec<(usize, usize, f64)> {
    let mut rng = seeded_rng(seed);
    let pts: Vec<(f64, f64)> = (0..n).map(|_| (rng.gen(), rng.gen())).collect();
    let dist2 = |a: usize, b: usize| {
        let (dx, dy) = (pts[a].0 - pts[b].0, pts[a].1 - pts[b].1);
        dx * dx + dy * dy
    };
    let mut chosen: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for i in 0..n {
        let mut others: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        others.sort_by(|&a, &b| dist2(i, a).total_cmp(&dist2(i, b)).then(a.cmp(&b)));
        for &j in others.iter().take(knn) {
            chosen.insert((i.min(j), i.max(j)), dist2(i, j));
        }
    }
    // kernel width: mean squared length of the kept edges
    let sigma2 = chosen.values().sum::<f64>() / chosen.len().max(1) as f64;
    chosen
        .into_iter()
        .map(|((p, q), d2)| (p, q, (-d2 / sigma2).exp().max(f64::MIN_POSITIVE)))
        .collect()
}

fn er_edges(n: usize, p: f64, seed: u64) -> Vec<(usize, usize, f64)> {
    let mut rng = seeded_rng(seed);
    let mut out = Vec::new();
    for a in 0..n {
        for b in (a + 1)..n {
            if rng.gen::<f64>() < p {
                out.push((a, b, 1.0));
            }
        }
    }
    out
}

fn ws_edges(n: usize, k: usize, p: f64, seed: u64) -> Vec<(usize, usize, f64)> {
    let mut rng = seeded_rng(seed);
    let key = |a: usize, b: usize| (a.min(b), a.max(b));
    let mut edges: Vec<(usize, usize)> = Vec::new();
    for j in 1..=k / 2 {
        for i in 0..n {
            edges.push((i, (i + j) % n));
        }
    }
    let mut present: std::collections::HashSet<(usize, usize)> =
        edges.iter().map(|&(a, b)| key(a, b)).collect();
    if p > 0.0 {
        for e in edges.iter_mut() {
            if rng.gen::<f64>() >= p {
                continue;
            }
            let u = e.0;
            let mut targets: Vec<usize> = (0..n).filter(|&w| w != u && !present.contains(&key(u, w))).collect();
            if targets.is_empty() {
                continue;
            }
            targets.shuffle(&mut rng);
            let w = targets[0];
            present.remove(&key(e.0, e.1));
            present.insert(key(u, w));
            *e = (u, w);
        }
    }
    let mut out: Vec<(usize, usize, f64)> = present.into_iter().map(|(a, b)| (a, b, 1.0)).collect();
    out.sort_by(|x, y| (x.0, x.1).cmp(&(y.0, y.1)));
    out
}
