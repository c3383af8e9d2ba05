use std::path::Path;

use nalgebra::DVector;

use super::Graph;
use crate::{Error, Result};

/// Read a graph from CSV with header `p,q,w` (0-based vertex indices).
/// The vertex count is one past the largest index seen.
pub fn read_graph_csv(path: &Path) -> Result<Graph> {
    let mut rdr = csv::Reader::from_path(path)?;
    let headers = rdr.headers()?.clone();
    if headers.iter().map(str::trim).collect::<Vec<_>>() != ["p", "q", "w"] {
        return Err(Error::SchemaError(format!("expected header p,q,w, got {headers:?}")));
    }
    let mut edges = Vec::new();
    let mut n = 0;
    for rec in rdr.records() {
        let rec = rec?;
        let field = |i: usize| rec.get(i).map(str::trim).unwrap_or("");
        let p: usize = field(0).parse().map_err(|_| Error::SchemaError(format!("bad p in {rec:?}")))?;
        let q: usize = field(1).parse().map_err(|_| Error::SchemaError(format!("bad q in {rec:?}")))?;
        let w: f64 = field(2).parse().map_err(|_| Error::SchemaError(format!("bad w in {rec:?}")))?;
        n = n.max(p + 1).max(q + 1);
        edges.push((p, q, w));
    }
    Graph::new(n, edges)
}

pub fn write_graph_csv(graph: &Graph, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["p", "q", "w"])?;
    for (&(p, q), &wt) in graph.edges().iter().zip(graph.weights()) {
        w.write_record([p.to_string(), q.to_string(), format!("{wt:e}")])?;
    }
    w.flush()?;
    Ok(())
}

/// Write a vertex signal as CSV `vertex,value`.
pub fn write_signal_csv(x: &DVector<f64>, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["vertex", "value"])?;
    for (i, v) in x.iter().enumerate() {
        w.write_record([i.to_string(), format!("{v:e}")])?;
    }
    w.flush()?;
    Ok(())
}
