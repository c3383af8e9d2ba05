//! Helpers shared by the integration tests. Kept independent of the library's
//! own geometry code so the oracles check it rather than repeat it.
#![allow(dead_code)]

use itertools::Itertools;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use signsample::cone::{FeasibleCone, Relation};
use signsample::graph::SampleId;

pub const FEAS_TOL: f64 = 1e-9;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(dim: usize, rng: &mut ChaCha8Rng) -> DVector<f64> {
    DVector::from_fn(dim, |_, _| rng.sample(StandardNormal))
}

pub fn vertex(i: usize) -> SampleId {
    SampleId::vertex(i)
}

/// A cone with `m` Gaussian rows whose relations agree with a hidden
/// direction, so it always has interior. Returns the cone and the direction.
pub fn random_cone(dim: usize, m: usize, rng: &mut ChaCha8Rng) -> (FeasibleCone, DVector<f64>) {
    let truth = gaussian(dim, rng).normalize();
    let mut cone = FeasibleCone::new(dim);
    for i in 0..m {
        let row = gaussian(dim, rng);
        let rel = if row.dot(&truth) >= 0.0 { Relation::Geq } else { Relation::Leq };
        cone = cone.with_row(vertex(i), row, rel).unwrap();
    }
    (cone, truth)
}

/// Rows in `>= 0` orientation, straight from the constraint list.
pub fn oriented(cone: &FeasibleCone) -> Vec<DVector<f64>> {
    cone.constraints()
        .iter()
        .flat_map(|c| match c.relation {
            Relation::Geq => vec![c.row.clone()],
            Relation::Leq => vec![-c.row.clone()],
            Relation::Eq => vec![c.row.clone(), -c.row.clone()],
        })
        .collect()
}

fn singular_values_and_null(rows: &[&DVector<f64>], dim: usize) -> (Vec<f64>, DVector<f64>) {
    // pad to square so the SVD exposes the full right basis
    let mut a = DMatrix::zeros(dim, dim);
    for (i, r) in rows.iter().enumerate() {
        a.row_mut(i).copy_from(&r.transpose());
    }
    let svd = a.svd(false, true);
    let vt = svd.v_t.unwrap();
    let (imin, _) = svd.singular_values.iter().enumerate().min_by(|x, y| x.1.total_cmp(y.1)).unwrap();
    let s: Vec<f64> = svd.singular_values.iter().copied().collect();
    (s, vt.row(imin).transpose())
}

fn rank_of(s: &[f64]) -> usize {
    let max = s.iter().cloned().fold(0.0, f64::max);
    s.iter().filter(|&&x| x > 1e-10 * max.max(1e-300)).count()
}

fn feasible(rows: &[DVector<f64>], z: &DVector<f64>) -> bool {
    rows.iter().all(|r| r.dot(z) >= -FEAS_TOL * r.norm())
}

/// Nonnegative least squares by the Lawson-Hanson active-set method.
pub fn nnls(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let n = a.ncols();
    let mut x = DVector::zeros(n);
    let mut passive = vec![false; n];
    for _ in 0..(3 * n + 10) {
        let w = a.tr_mul(&(b - a * &x));
        let pick = (0..n).filter(|&j| !passive[j] && w[j] > 1e-12).max_by(|&i, &j| w[i].total_cmp(&w[j]));
        let Some(j) = pick else { break };
        passive[j] = true;
        loop {
            let idx: Vec<usize> = (0..n).filter(|&k| passive[k]).collect();
            let sub = DMatrix::from_fn(a.nrows(), idx.len(), |r, c| a[(r, idx[c])]);
            let z_sub = sub.clone().svd(true, true).solve(b, 1e-14).unwrap();
            let mut z = DVector::zeros(n);
            for (c, &k) in idx.iter().enumerate() {
                z[k] = z_sub[c];
            }
            if idx.iter().all(|&k| z[k] > 0.0) {
                x = z;
                break;
            }
            let alpha = idx
                .iter()
                .filter(|&&k| z[k] <= 0.0)
                .map(|&k| x[k] / (x[k] - z[k]))
                .fold(f64::INFINITY, f64::min);
            x = &x + (z - &x) * alpha;
            for &k in &idx {
                if x[k] <= 1e-14 {
                    passive[k] = false;
                    x[k] = 0.0;
                }
            }
        }
    }
    x
}

/// Whether `z` is (up to 1e-7 residual) a nonnegative combination of `others`.
pub fn is_conic_combination(z: &DVector<f64>, others: &[DVector<f64>]) -> bool {
    if others.is_empty() {
        return false;
    }
    let a = DMatrix::from_columns(others);
    let x = nnls(&a, z);
    (a * x - z).norm() <= 1e-7
}

/// Extreme rays by exhaustive `(dim-1)`-subsets, then a conic-combination
/// cross-check: every kept ray must not be generated by the others.
pub fn brute_force_evs(cone: &FeasibleCone) -> Vec<DVector<f64>> {
    let dim = cone.dim();
    let rows = oriented(cone);
    let mut found: Vec<DVector<f64>> = Vec::new();
    if dim == 1 {
        for z in [DVector::from_element(1, 1.0), DVector::from_element(1, -1.0)] {
            if feasible(&rows, &z) {
                found.push(z);
            }
        }
        return found;
    }
    for subset in (0..rows.len()).combinations(dim - 1) {
        let sel: Vec<&DVector<f64>> = subset.iter().map(|&i| &rows[i]).collect();
        let (s, d) = singular_values_and_null(&sel, dim);
        if rank_of(&s) != dim - 1 {
            continue;
        }
        for z in [d.normalize(), -d.normalize()] {
            if feasible(&rows, &z) && !found.iter().any(|f| angle(f, &z) <= 1e-8) {
                found.push(z);
            }
        }
    }
    // a pointed cone keeps every ray; a line survives only as its two halves
    let pointed = full_rank(&rows, dim);
    if pointed {
        for (i, z) in found.iter().enumerate() {
            let others: Vec<DVector<f64>> =
                found.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, v)| v.clone()).collect();
            assert!(!is_conic_combination(z, &others), "brute-force ray {z} is not extreme");
        }
    }
    found
}

fn full_rank(rows: &[DVector<f64>], dim: usize) -> bool {
    let a = DMatrix::from_fn(rows.len(), dim, |r, c| rows[r][c]);
    let s = a.singular_values();
    rank_of(s.as_slice()) == dim
}

/// Angle between two directions via the chord, accurate near zero.
pub fn angle(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    let chord = (a.normalize() - b.normalize()).norm();
    2.0 * (chord / 2.0).min(1.0).asin()
}

/// Same set of unit directions up to `tol` radians, ignoring order.
pub fn same_directions(a: &[DVector<f64>], b: &[DVector<f64>], tol: f64) -> bool {
    a.len() == b.len()
        && a.iter().all(|x| b.iter().any(|y| angle(x, y) <= tol))
        && b.iter().all(|y| a.iter().any(|x| angle(x, y) <= tol))
}
