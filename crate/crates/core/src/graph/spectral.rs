use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;

use super::{Graph, SampleId, SampleKind, Sign, SignObservation};
use crate::linalg::seeded_rng;
use crate::{Error, Result};

pub const DEFAULT_ZERO_TOL: f64 = 1e-12;

/// Full Laplacian eigendecomposition, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub eigenvalues: DVector<f64>,
    pub eigenvectors: DMatrix<f64>,
}

impl Spectrum {
    pub fn of(graph: &Graph) -> Result<Self> {
        let l = graph.laplacian(false);
        let n = l.nrows();
        let eig = SymmetricEigen::try_new(l.clone(), 1e-15, 10_000).ok_or_else(|| {
            let asym = (&l - l.transpose()).amax();
            Error::EigenFailure(format!(
                "{n}x{n} Laplacian did not converge (frobenius norm {:.3e}, max asymmetry {:.3e}, max |diag| {:.3e})",
                l.norm(),
                asym,
                l.diagonal().amax()
            ))
        })?;
        let mut order: Vec<usize> = (0..n).collect();
        // stable: ties keep the solver's output order
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let eigenvalues = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
        let mut eigenvectors = DMatrix::zeros(n, n);
        for (c, &i) in order.iter().enumerate() {
            eigenvectors.column_mut(c).copy_from(&eig.eigenvectors.column(i));
        }
        Ok(Spectrum { eigenvalues, eigenvectors })
    }

    /// Graph Fourier transform `Uᵀx`.
    pub fn gft(&self, x: &DVector<f64>) -> DVector<f64> {
        self.eigenvectors.tr_mul(x)
    }
}

/// Passband-restricted GFT basis with precomputed sample rows.
#[derive(Debug, Clone)]
pub struct SpectralBasis {
    passband: Vec<usize>,
    u_b: DMatrix<f64>,
    vertex_rows: Vec<DVector<f64>>,
    edge_rows: Vec<DVector<f64>>,
    edges: Vec<(usize, usize)>,
}

impl SpectralBasis {
    /// `passband` holds 1-based indices into the ascending eigenvalue order.
    pub fn new(graph: &Graph, passband: &[usize]) -> Result<Self> {
        let spectrum = Spectrum::of(graph)?;
        Self::from_spectrum(graph, &spectrum, passband)
    }

    pub fn from_spectrum(graph: &Graph, spectrum: &Spectrum, passband: &[usize]) -> Result<Self> {
        let n = graph.n_vertices();
        if passband.is_empty() {
            return Err(Error::InvalidPassband("empty passband".into()));
        }
        if passband.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidPassband("indices must be strictly increasing".into()));
        }
        if passband[0] == 0 || *passband.last().unwrap() > n {
            return Err(Error::InvalidPassband(format!("indices must lie in 1..={n}")));
        }
        let mut u_b = DMatrix::zeros(n, passband.len());
        for (c, &f) in passband.iter().enumerate() {
            u_b.column_mut(c).copy_from(&spectrum.eigenvectors.column(f - 1));
        }
        let vertex_rows: Vec<DVector<f64>> = (0..n).map(|i| u_b.row(i).transpose()).collect();
        let edge_rows = graph
            .edges()
            .iter()
            .map(|&(p, q)| &vertex_rows[p] - &vertex_rows[q])
            .collect();
        Ok(SpectralBasis {
            passband: passband.to_vec(),
            u_b,
            vertex_rows,
            edge_rows,
            edges: graph.edges().to_vec(),
        })
    }

    pub fn bandwidth(&self) -> usize {
        self.passband.len()
    }

    pub fn n_vertices(&self) -> usize {
        self.vertex_rows.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edge_rows.len()
    }

    pub fn passband(&self) -> &[usize] {
        &self.passband
    }

    pub fn u_b(&self) -> &DMatrix<f64> {
        &self.u_b
    }

    pub fn vertex_rows(&self) -> &[DVector<f64>] {
        &self.vertex_rows
    }

    pub fn edge_rows(&self) -> &[DVector<f64>] {
        &self.edge_rows
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn contains(&self, sample: SampleId) -> bool {
        match sample.kind {
            SampleKind::Vertex => sample.index < self.vertex_rows.len(),
            SampleKind::Edge => sample.index < self.edge_rows.len(),
        }
    }

    /// The row `ψᵀU_B` for a vertex or an edge sample.
    pub fn sample_row(&self, sample: SampleId) -> Result<&DVector<f64>> {
        match sample.kind {
            SampleKind::Vertex => self.vertex_rows.get(sample.index),
            SampleKind::Edge => self.edge_rows.get(sample.index),
        }
        .ok_or(Error::InvalidSample(sample))
    }

    /// Synthesize `x = U_B h`.
    pub fn synthesize(&self, h: &DVector<f64>) -> DVector<f64> {
        &self.u_b * h
    }

    /// Value of the sampled functional `ψᵀx` on a vertex signal.
    pub fn sample_value(&self, x: &DVector<f64>, sample: SampleId) -> Result<f64> {
        match sample.kind {
            SampleKind::Vertex => x.get(sample.index).copied(),
            SampleKind::Edge => self.edges.get(sample.index).map(|&(p, q)| x[p] - x[q]),
        }
        .ok_or(Error::InvalidSample(sample))
    }
}

/// Unit-norm bandlimited signal and its coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct BandlimitedSignal {
    pub h: DVector<f64>,
    pub x: DVector<f64>,
}

impl BandlimitedSignal {
    /// Normalizes `h` and synthesizes `x`.
    pub fn from_coefficients(basis: &SpectralBasis, h: DVector<f64>) -> Self {
        let h = &h / h.norm();
        let x = basis.synthesize(&h);
        BandlimitedSignal { h, x }
    }
}

/// Coefficients drawn i.i.d. from U(0,1), then normalized.
pub fn random_bandlimited_signal(basis: &SpectralBasis, seed: u64) -> BandlimitedSignal {
    let mut rng = seeded_rng(seed);
    loop {
        let h = DVector::from_fn(basis.bandwidth(), |_, _| rng.gen::<f64>());
        if h.norm() > 1e-12 {
            return BandlimitedSignal::from_coefficients(basis, h);
        }
    }
}

/// Observe `sgn(ψᵀx)`, with `|ψᵀx| <= zero_tol` reported as zero.
pub fn sign_observe(
    basis: &SpectralBasis,
    signal: &BandlimitedSignal,
    sample: SampleId,
    zero_tol: f64,
) -> Result<SignObservation> {
    let v = basis.sample_value(&signal.x, sample)?;
    Ok(SignObservation { sample, sign: Sign::of(v, zero_tol) })
}
