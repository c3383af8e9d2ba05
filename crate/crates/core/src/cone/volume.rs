//! Size of the feasible region: the fraction of the unit ball inside the cone.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{FeasibleCone, Relation};
use crate::linalg::{self, seeded_rng};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VolumeEstimate {
    pub fraction: f64,
    pub n_samples: usize,
    pub std_err: f64,
}

impl VolumeEstimate {
    pub fn from_hits(hits: usize, n_samples: usize) -> Self {
        let fraction = hits as f64 / n_samples as f64;
        let std_err = (fraction * (1.0 - fraction) / n_samples as f64).sqrt();
        VolumeEstimate { fraction, n_samples, std_err }
    }
}

/// Points drawn uniformly from the unit ball, stored column-wise. Reusing one
/// cloud across several cones gives common random numbers: each point lands
/// on exactly one side of any hyperplane, so split counts add up exactly.
#[derive(Debug, Clone)]
pub struct PointCloud {
    points: DMatrix<f64>,
}

impl PointCloud {
    pub fn uniform_ball(dim: usize, n: usize, seed: u64) -> Self {
        let mut rng = seeded_rng(seed);
        let mut points = DMatrix::zeros(dim, n);
        for mut col in points.column_iter_mut() {
            let g = DVector::from_fn(dim, |_, _| StandardNormal.sample(&mut rng));
            let norm: f64 = g.norm();
            let radius = rng.gen::<f64>().powf(1.0 / dim as f64);
            col.copy_from(&(g * (radius / norm)));
        }
        PointCloud { points }
    }

    pub fn dim(&self) -> usize {
        self.points.nrows()
    }

    pub fn len(&self) -> usize {
        self.points.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.points.ncols() == 0
    }

    /// Per-point membership in `cone` (exact sign tests).
    pub fn mask(&self, cone: &FeasibleCone) -> Vec<bool> {
        let mut inside = vec![true; self.len()];
        for c in cone.constraints() {
            let vals = c.row.tr_mul(&self.points);
            for (flag, &v) in inside.iter_mut().zip(vals.iter()) {
                *flag = *flag
                    && match c.relation {
                        Relation::Geq => v >= 0.0,
                        Relation::Leq => v <= 0.0,
                        Relation::Eq => v == 0.0,
                    };
            }
        }
        inside
    }

    pub fn hits(&self, cone: &FeasibleCone) -> usize {
        self.mask(cone).into_iter().filter(|&b| b).count()
    }

    pub fn estimate(&self, cone: &FeasibleCone) -> VolumeEstimate {
        VolumeEstimate::from_hits(self.hits(cone), self.len())
    }
}

/// Monte Carlo estimate of the fraction of the unit ball inside `cone`.
/// Equality constraints make the fraction 0; reduce them first with
/// [`FeasibleCone::reduce_equalities`] to measure within the subspace.
pub fn estimate_volume(cone: &FeasibleCone, n_samples: usize, seed: u64) -> Result<VolumeEstimate> {
    if n_samples < 1000 {
        return Err(Error::InvalidParams(format!("need at least 1000 samples, got {n_samples}")));
    }
    Ok(PointCloud::uniform_ball(cone.dim(), n_samples, seed).estimate(cone))
}

/// Exact fraction of the unit ball inside a cone of dimension 2 or 3 with
/// inequality constraints only.
pub fn exact_volume_lowdim(cone: &FeasibleCone) -> Result<f64> {
    let dim = cone.dim();
    if !(2..=3).contains(&dim) || cone.constraints().iter().any(|c| c.relation == Relation::Eq) {
        return Err(Error::UnsupportedDimension(dim));
    }
    let rows = cone.oriented_rows();
    let refs: Vec<&DVector<f64>> = rows.iter().collect();
    let r = linalg::rank(&refs, dim);
    match r {
        0 => Ok(1.0),
        1 => Ok(halfspace_fraction(&rows)),
        _ if r < dim => {
            // a wedge around the common line; measure its cross-section
            let (q, _) = linalg::null_space(&[&linalg::null_vector(&refs, dim).unwrap()], dim);
            let mut section = FeasibleCone::with_tolerances(q.ncols(), *cone.tolerances());
            for c in cone.constraints() {
                section = section.with_row(c.source, q.tr_mul(&c.row), c.relation)?;
            }
            exact_volume_lowdim(&section)
        }
        _ => {
            let evs = cone.enumerate_evs()?;
            if dim == 2 {
                Ok(if evs.len() == 2 { evs[0].dot(&evs[1]).clamp(-1.0, 1.0).acos() / (2.0 * PI) } else { 0.0 })
            } else {
                Ok(spherical_polygon_area(&evs) / (4.0 * PI))
            }
        }
    }
}

/// All rows parallel: a half-space when they agree in orientation, a
/// measure-zero hyperplane otherwise.
fn halfspace_fraction(rows: &[DVector<f64>]) -> f64 {
    let first = &rows[0];
    if rows.iter().all(|r| r.dot(first) > 0.0) {
        0.5
    } else {
        0.0
    }
}

/// Area of the convex spherical polygon with the given unit vertices, by
/// Girard's theorem (angle excess).
fn spherical_polygon_area(evs: &[DVector<f64>]) -> f64 {
    let n = evs.len();
    if n < 3 {
        return 0.0;
    }
    let centre = evs.iter().fold(DVector::zeros(3), |acc, z| acc + z).normalize();
    let helper = if centre[0].abs() < 0.9 { DVector::from_vec(vec![1.0, 0.0, 0.0]) } else { DVector::from_vec(vec![0.0, 1.0, 0.0]) };
    let e1 = (&helper - &centre * centre.dot(&helper)).normalize();
    let e2 = centre.cross(&e1);
    let mut ordered: Vec<&DVector<f64>> = evs.iter().collect();
    ordered.sort_by(|a, b| a.dot(&e2).atan2(a.dot(&e1)).total_cmp(&b.dot(&e2).atan2(b.dot(&e1))));

    let tangent = |at: &DVector<f64>, to: &DVector<f64>| {
        let t = to - at * at.dot(to);
        t.normalize()
    };
    let mut angle_sum = 0.0;
    for i in 0..n {
        let v = ordered[i];
        let prev = ordered[(i + n - 1) % n];
        let next = ordered[(i + 1) % n];
        let cos = tangent(v, prev).dot(&tangent(v, next)).clamp(-1.0, 1.0);
        angle_sum += cos.acos();
    }
    (angle_sum - (n as f64 - 2.0) * PI).max(0.0)
}
