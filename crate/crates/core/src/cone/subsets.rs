//! Brute-force extreme-vector enumeration over hyperplane subsets.

use itertools::Itertools;
use nalgebra::DVector;

use super::FeasibleCone;
use crate::linalg;
use crate::{Error, Result};

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// For every `(dim-1)`-subset of constraint rows with rank exactly `dim-1`,
/// test both directions of its null line against all constraints. Duplicates
/// keep the first hit in lexicographic subset order.
pub(super) fn enumerate(cone: &FeasibleCone) -> Result<Vec<DVector<f64>>> {
    let dim = cone.dim();
    let rows: Vec<&DVector<f64>> = cone.constraints().iter().map(|c| &c.row).collect();
    let k = dim.saturating_sub(1);
    if rows.len() < k {
        return Ok(Vec::new());
    }
    let subsets = binomial(rows.len(), k);
    let cap = cone.tolerances().subset_cap;
    if subsets > cap {
        return Err(Error::EnumerationTooLarge { subsets, cap });
    }
    let tol = *cone.tolerances();
    let mut found: Vec<DVector<f64>> = Vec::new();
    for subset in (0..rows.len()).combinations(k) {
        let sel: Vec<&DVector<f64>> = subset.iter().map(|&i| rows[i]).collect();
        let Some(d) = linalg::null_vector(&sel, dim) else { continue };
        for cand in [d.clone(), -d] {
            if !cone.contains(&cand, tol.satisfy) {
                continue;
            }
            if found.iter().any(|f| (f - &cand).norm() <= tol.angular_dedupe) {
                continue;
            }
            found.push(cand);
        }
    }
    found.sort_by(linalg::lex_cmp);
    Ok(found)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomial_values() {
        assert_eq!(binomial(5, 2), 10);
        assert_eq!(binomial(40, 6), 3_838_380);
        assert_eq!(binomial(3, 4), 0);
    }

    #[test]
    fn cap_is_enforced() {
        use crate::cone::{Relation, Tolerances};
        use crate::graph::SampleId;
        let tol = Tolerances { subset_cap: 5, ..Tolerances::default() };
        let mut c = FeasibleCone::with_tolerances(3, tol);
        for i in 0..4 {
            let r = DVector::from_vec(vec![1.0, i as f64, (i * i) as f64 + 1.0]);
            c = c.with_row(SampleId::vertex(i), r, Relation::Geq).unwrap();
        }
        assert!(matches!(c.enumerate_evs_subsets(), Err(Error::EnumerationTooLarge { subsets: 6, cap: 5 })));
    }
}
