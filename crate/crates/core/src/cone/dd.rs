//! Double description method for pointed polyhedral cones `{w : A w >= 0}`.

use fixedbitset::FixedBitSet;
use nalgebra::{DMatrix, DVector};

use super::Tolerances;
use crate::linalg;

#[derive(Debug, Clone)]
struct Ray {
    dir: DVector<f64>,
    /// Indices of processed rows tight at this ray.
    zero: FixedBitSet,
}

/// Extreme rays of the cone cut out by the rows processed so far.
#[derive(Debug, Clone)]
pub(super) struct DdState {
    rays: Vec<Ray>,
    dim: usize,
    /// Rows processed, by index in the caller's row list.
    n_rows: usize,
}

impl DdState {
    /// Process `rows` from scratch. `None` when they do not have rank `dim`.
    ///
    /// Starts from the simplicial cone of the first `dim` independent rows
    /// and inserts the others in order.
    pub(super) fn build(rows: &[DVector<f64>], dim: usize, tol: &Tolerances) -> Option<DdState> {
        let m = rows.len();
        let mut basis_idx: Vec<usize> = Vec::with_capacity(dim);
        for i in 0..m {
            let mut trial: Vec<&DVector<f64>> = basis_idx.iter().map(|&j| &rows[j]).collect();
            trial.push(&rows[i]);
            if linalg::rank(&trial, dim) == trial.len() {
                basis_idx.push(i);
                if basis_idx.len() == dim {
                    break;
                }
            }
        }
        if basis_idx.len() < dim {
            return None;
        }
        let mut a = DMatrix::zeros(dim, dim);
        for (r, &i) in basis_idx.iter().enumerate() {
            a.row_mut(r).copy_from(&rows[i].transpose());
        }
        let inv = a.try_inverse()?;
        let rays = (0..dim)
            .map(|c| {
                let mut zero = FixedBitSet::with_capacity(m);
                for (r, &i) in basis_idx.iter().enumerate() {
                    if r != c {
                        zero.insert(i);
                    }
                }
                Ray { dir: inv.column(c).normalize(), zero }
            })
            .collect();
        let mut state = DdState { rays, dim, n_rows: m };
        for k in (0..m).filter(|k| !basis_idx.contains(k)) {
            state.insert_at(k, &rows[k], tol);
        }
        Some(state)
    }

    /// Append one more row, numbered after those already processed.
    pub(super) fn push(&mut self, row: &DVector<f64>, tol: &Tolerances) {
        let k = self.n_rows;
        self.n_rows += 1;
        for r in &mut self.rays {
            r.zero.grow(self.n_rows);
        }
        self.insert_at(k, row, tol);
    }

    pub(super) fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub(super) fn directions(&self) -> Vec<DVector<f64>> {
        self.rays.iter().map(|r| r.dir.clone()).collect()
    }

    /// Intersect with `{w : row·w >= 0}`, recording the row as index `k`.
    fn insert_at(&mut self, k: usize, a: &DVector<f64>, tol: &Tolerances) {
        if self.rays.is_empty() {
            return;
        }
        let eps = tol.satisfy;
        let vals: Vec<f64> = self.rays.iter().map(|r| a.dot(&r.dir)).collect();
        let pos: Vec<usize> = (0..self.rays.len()).filter(|&i| vals[i] > eps).collect();
        let neg: Vec<usize> = (0..self.rays.len()).filter(|&i| vals[i] < -eps).collect();
        if neg.is_empty() {
            for (i, r) in self.rays.iter_mut().enumerate() {
                if vals[i].abs() <= eps {
                    r.zero.insert(k);
                }
            }
            return;
        }

        let m = self.n_rows;
        let rays = &self.rays;
        // rays tight at each processed row, for the adjacency test
        let mut tight_at: Vec<FixedBitSet> = vec![FixedBitSet::with_capacity(rays.len()); m];
        for (j, r) in rays.iter().enumerate() {
            for i in r.zero.ones() {
                tight_at[i].insert(j);
            }
        }
        let mut fresh: Vec<Ray> = Vec::new();
        let mut common = FixedBitSet::with_capacity(m);
        let mut sharing = FixedBitSet::with_capacity(rays.len());
        for &p in &pos {
            for &n in &neg {
                common.clone_from(&rays[p].zero);
                common.intersect_with(&rays[n].zero);
                if common.count_ones(..) + 2 < self.dim {
                    continue;
                }
                // adjacent iff only p and n are tight at every common row
                let mut ones = common.ones();
                match ones.next() {
                    Some(first) => {
                        sharing.clone_from(&tight_at[first]);
                        for i in ones {
                            sharing.intersect_with(&tight_at[i]);
                        }
                        if sharing.count_ones(..) > 2 {
                            continue;
                        }
                    }
                    None if rays.len() > 2 => continue,
                    None => {}
                }
                let dir = &rays[n].dir * vals[p] - &rays[p].dir * vals[n];
                let norm = dir.norm();
                if norm <= f64::EPSILON {
                    continue;
                }
                let mut zero = common.clone();
                zero.insert(k);
                fresh.push(Ray { dir: dir / norm, zero });
            }
        }

        let old = std::mem::take(&mut self.rays);
        let mut next: Vec<Ray> = Vec::with_capacity(pos.len() + fresh.len());
        for (i, mut r) in old.into_iter().enumerate() {
            if vals[i] < -eps {
                continue;
            }
            if vals[i] <= eps {
                r.zero.insert(k);
            }
            next.push(r);
        }
        next.extend(fresh);
        self.rays = next;
    }
}
