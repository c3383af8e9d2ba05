//! Weighted undirected graphs, their spectra, and the sign-observation model.

mod generate;
mod io;
mod spectral;

use std::collections::{HashSet, VecDeque};
use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use generate::{generate_graph, GraphKind};
pub use io::{read_graph_csv, write_graph_csv, write_signal_csv};
pub use spectral::{
    random_bandlimited_signal, sign_observe, BandlimitedSignal, Spectrum, SpectralBasis,
    DEFAULT_ZERO_TOL,
};

/// Connected, undirected graph with positive edge weights.
///
/// Edges are stored as `(p, q)` with `p < q`, sorted, so that the edge index
/// used by [`SampleId::edge`] is stable.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    n_vertices: usize,
    edges: Vec<(usize, usize)>,
    weights: Vec<f64>,
}

impl Graph {
    pub fn new(n_vertices: usize, edges: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        if n_vertices == 0 {
            return Err(Error::InvalidGraph("graph has no vertices".into()));
        }
        let mut list: Vec<(usize, usize, f64)> = Vec::new();
        let mut seen = HashSet::new();
        for (a, b, w) in edges {
            if a == b {
                return Err(Error::InvalidGraph(format!("self-loop at vertex {a}")));
            }
            let (p, q) = if a < b { (a, b) } else { (b, a) };
            if q >= n_vertices {
                return Err(Error::InvalidGraph(format!("vertex {q} out of range")));
            }
            if !(w > 0.0) || !w.is_finite() {
                return Err(Error::InvalidGraph(format!("edge ({p},{q}) has weight {w}")));
            }
            if !seen.insert((p, q)) {
                return Err(Error::InvalidGraph(format!("duplicate edge ({p},{q})")));
            }
            list.push((p, q, w));
        }
        list.sort_by(|x, y| (x.0, x.1).cmp(&(y.0, y.1)));
        let g = Graph {
            n_vertices,
            edges: list.iter().map(|&(p, q, _)| (p, q)).collect(),
            weights: list.iter().map(|&(_, _, w)| w).collect(),
        };
        if !g.is_connected() {
            return Err(Error::InvalidGraph("graph is not connected".into()));
        }
        Ok(g)
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub(crate) fn is_connected_raw(n: usize, edges: &[(usize, usize)]) -> bool {
        let mut adj = vec![Vec::new(); n];
        for &(p, q) in edges {
            adj[p].push(q);
            adj[q].push(p);
        }
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = queue.pop_front() {
            for &u in &adj[v] {
                if !seen[u] {
                    seen[u] = true;
                    count += 1;
                    queue.push_back(u);
                }
            }
        }
        count == n
    }

    pub fn is_connected(&self) -> bool {
        Self::is_connected_raw(self.n_vertices, &self.edges)
    }

    /// Combinatorial Laplacian `D - W`, or `D^{-1/2}(D - W)D^{-1/2}` when
    /// `normalized`.
    pub fn laplacian(&self, normalized: bool) -> DMatrix<f64> {
        let n = self.n_vertices;
        let mut l = DMatrix::<f64>::zeros(n, n);
        for (&(p, q), &w) in self.edges.iter().zip(&self.weights) {
            l[(p, q)] -= w;
            l[(q, p)] -= w;
            l[(p, p)] += w;
            l[(q, q)] += w;
        }
        if normalized {
            let d: Vec<f64> = (0..n).map(|i| l[(i, i)].sqrt().recip()).collect();
            for i in 0..n {
                for j in 0..n {
                    l[(i, j)] *= d[i] * d[j];
                }
            }
        }
        l
    }

    pub fn contains(&self, sample: SampleId) -> bool {
        match sample.kind {
            SampleKind::Vertex => sample.index < self.n_vertices,
            SampleKind::Edge => sample.index < self.edges.len(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SampleKind {
    Vertex,
    Edge,
}

/// A vertex or an edge. Ordered Vertex < Edge, then by index; every
/// tie-break in the samplers uses this order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SampleId {
    pub kind: SampleKind,
    pub index: usize,
}

impl SampleId {
    pub const fn vertex(index: usize) -> Self {
        SampleId { kind: SampleKind::Vertex, index }
    }

    pub const fn edge(index: usize) -> Self {
        SampleId { kind: SampleKind::Edge, index }
    }

    pub fn kind_str(&self) -> &'static str {
        match self.kind {
            SampleKind::Vertex => "vertex",
            SampleKind::Edge => "edge",
        }
    }
}

impl fmt::Display for SampleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            SampleKind::Vertex => write!(f, "v{}", self.index),
            SampleKind::Edge => write!(f, "e{}", self.index),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Sign {
    Neg,
    Zero,
    Pos,
}

impl Sign {
    pub fn of(value: f64, zero_tol: f64) -> Sign {
        if value.abs() <= zero_tol {
            Sign::Zero
        } else if value > 0.0 {
            Sign::Pos
        } else {
            Sign::Neg
        }
    }

    pub fn value(self) -> i8 {
        match self {
            Sign::Neg => -1,
            Sign::Zero => 0,
            Sign::Pos => 1,
        }
    }

    pub fn flip(self) -> Sign {
        match self {
            Sign::Neg => Sign::Pos,
            Sign::Zero => Sign::Zero,
            Sign::Pos => Sign::Neg,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SignObservation {
    pub sample: SampleId,
    pub sign: Sign,
}

/// Which samples a sampler may choose from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Domain {
    #[serde(rename = "vertices")]
    Vertices,
    #[serde(rename = "vertices+edges")]
    VerticesAndEdges,
}

impl Domain {
    pub fn samples(self, n_vertices: usize, n_edges: usize) -> Vec<SampleId> {
        let mut out: Vec<SampleId> = (0..n_vertices).map(SampleId::vertex).collect();
        if self == Domain::VerticesAndEdges {
            out.extend((0..n_edges).map(SampleId::edge));
        }
        out
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Domain::Vertices => "vertices",
            Domain::VerticesAndEdges => "vertices+edges",
        }
    }
}

impl std::str::FromStr for Domain {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "vertices" | "v" => Ok(Domain::Vertices),
            "vertices+edges" | "ve" | "both" => Ok(Domain::VerticesAndEdges),
            other => Err(Error::InvalidParams(format!("unknown domain {other:?}"))),
        }
    }
}
