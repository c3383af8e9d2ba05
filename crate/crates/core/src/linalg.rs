//! Small dense linear-algebra helpers shared by the cone and sampler code.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Relative singular-value threshold used for every rank decision.
pub const RANK_RTOL: f64 = 1e-10;

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Stack `rows` into a matrix with at least `dim` rows (zero padded) so the
/// SVD exposes a full right-singular basis.
fn padded(rows: &[&DVector<f64>], dim: usize) -> DMatrix<f64> {
    let m = rows.len().max(dim);
    let mut a = DMatrix::zeros(m, dim);
    for (i, r) in rows.iter().enumerate() {
        a.row_mut(i).copy_from(&r.transpose());
    }
    a
}

/// Numerical rank of the matrix whose rows are `rows`.
pub fn rank(rows: &[&DVector<f64>], dim: usize) -> usize {
    if rows.is_empty() || dim == 0 {
        return 0;
    }
    let sv = padded(rows, dim).singular_values();
    let smax = sv.max();
    if smax <= 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s >= RANK_RTOL * smax).count()
}

/// Orthonormal basis (as columns) of the null space of `rows`, plus the rank.
pub fn null_space(rows: &[&DVector<f64>], dim: usize) -> (DMatrix<f64>, usize) {
    if rows.is_empty() {
        return (DMatrix::identity(dim, dim), 0);
    }
    let svd = padded(rows, dim).svd(false, true);
    let vt = svd.v_t.expect("v_t requested");
    let smax = svd.singular_values.max();
    let keep: Vec<usize> = (0..dim)
        .filter(|&i| smax <= 0.0 || svd.singular_values[i] < RANK_RTOL * smax)
        .collect();
    let mut basis = DMatrix::zeros(dim, keep.len());
    for (c, &i) in keep.iter().enumerate() {
        basis.column_mut(c).copy_from(&vt.row(i).transpose());
    }
    (basis, dim - keep.len())
}

/// The unit direction spanning the null space when `rows` have rank exactly
/// `dim - 1`.
pub fn null_vector(rows: &[&DVector<f64>], dim: usize) -> Option<DVector<f64>> {
    let (basis, r) = null_space(rows, dim);
    if r + 1 == dim && basis.ncols() == 1 {
        Some(basis.column(0).into_owned())
    } else {
        None
    }
}

pub fn random_unit<R: rand::Rng>(dim: usize, rng: &mut R) -> DVector<f64> {
    loop {
        let v = DVector::<f64>::from_fn(dim, |_, _| StandardNormal.sample(rng));
        let n = v.norm();
        if n > 1e-12 {
            return v / n;
        }
    }
}

/// Lexicographic comparison used to give vector sets a canonical order.
pub fn lex_cmp(a: &DVector<f64>, b: &DVector<f64>) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b.iter()) {
        match x.total_cmp(y) {
            std::cmp::Ordering::Equal => continue,
            o => return o,
        }
    }
    a.len().cmp(&b.len())
}
