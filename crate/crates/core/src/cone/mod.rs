//! The feasible cone of coefficient vectors consistent with the observed signs.
//!
//! Each observation `(a, y)` contributes one homogeneous constraint on the
//! passband coefficients `w`: `ψ_aᵀU_B w >= 0` for a positive sign, `<= 0` for
//! a negative sign and `= 0` for a zero sign. The cone is described both by
//! these constraints and by its unit extreme vectors (EVs).

mod dd;
mod subsets;
mod volume;

use std::fmt::Write as _;
use std::sync::{Arc, OnceLock};

use nalgebra::{DMatrix, DVector};

use crate::graph::{SampleId, Sign, SignObservation, SpectralBasis};
use crate::linalg;
use crate::{Error, Result};

pub use volume::{estimate_volume, exact_volume_lowdim, PointCloud, VolumeEstimate};

/// Norm below which a constraint row counts as zero.
pub const ZERO_ROW: f64 = 1e-12;

/// Numerical tolerances for cone computations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Two unit EVs closer than this (chordal, ~angular) are the same EV.
    pub angular_dedupe: f64,
    /// Slack allowed when testing `rowᵀz` against zero for unit `row`, `z`.
    pub satisfy: f64,
    /// Relative singular-value threshold for rank decisions.
    pub rank_rtol: f64,
    /// Upper bound on the number of subsets the brute-force enumerator visits.
    pub subset_cap: u128,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { angular_dedupe: 1e-8, satisfy: 1e-9, rank_rtol: linalg::RANK_RTOL, subset_cap: 2_000_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Relation {
    Leq,
    Geq,
    Eq,
}

impl Relation {
    pub fn from_sign(sign: Sign) -> Relation {
        match sign {
            Sign::Neg => Relation::Leq,
            Sign::Zero => Relation::Eq,
            Sign::Pos => Relation::Geq,
        }
    }

    pub fn sign(self) -> Sign {
        match self {
            Relation::Leq => Sign::Neg,
            Relation::Eq => Sign::Zero,
            Relation::Geq => Sign::Pos,
        }
    }

    fn as_str(self) -> &'static str {
        match self {
            Relation::Leq => "<=",
            Relation::Geq => ">=",
            Relation::Eq => "==",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConeConstraint {
    pub row: DVector<f64>,
    pub relation: Relation,
    pub source: SampleId,
}

impl ConeConstraint {
    /// Exact (zero-tolerance) satisfaction test.
    pub fn holds(&self, w: &DVector<f64>) -> bool {
        let v = self.row.dot(w);
        match self.relation {
            Relation::Leq => v <= 0.0,
            Relation::Geq => v >= 0.0,
            Relation::Eq => v == 0.0,
        }
    }
}

/// A candidate sample together with its row `ψᵀU_B`.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub id: SampleId,
    pub row: DVector<f64>,
}

impl Candidate {
    pub fn new(id: SampleId, row: DVector<f64>) -> Self {
        Candidate { id, row }
    }

    pub fn from_basis(basis: &SpectralBasis, id: SampleId) -> Result<Self> {
        Ok(Candidate { id, row: basis.sample_row(id)?.clone() })
    }
}

/// Closed convex cone `{w : constraints hold}` in `R^dim`, immutable.
#[derive(Debug, Clone)]
pub struct FeasibleCone {
    dim: usize,
    constraints: Vec<ConeConstraint>,
    tol: Tolerances,
    evs: OnceLock<Vec<DVector<f64>>>,
    /// Double description state behind `evs`, reused by child cones.
    dd: OnceLock<Option<Arc<dd::DdState>>>,
    parent_dd: Option<Arc<dd::DdState>>,
}

impl PartialEq for FeasibleCone {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.constraints == other.constraints && self.tol == other.tol
    }
}

impl FeasibleCone {
    pub fn new(dim: usize) -> Self {
        Self::with_tolerances(dim, Tolerances::default())
    }

    pub fn with_tolerances(dim: usize, tol: Tolerances) -> Self {
        FeasibleCone { dim, constraints: Vec::new(), tol, evs: OnceLock::new(), dd: OnceLock::new(), parent_dd: None }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn constraints(&self) -> &[ConeConstraint] {
        &self.constraints
    }

    pub fn tolerances(&self) -> &Tolerances {
        &self.tol
    }

    /// True once the extreme vectors have been computed and cached.
    pub fn ev_valid(&self) -> bool {
        self.evs.get().is_some()
    }

    /// Add the constraint implied by `obs`. Re-adding a sample with the same
    /// sign is a no-op; a different sign is an error.
    pub fn add_constraint(&self, obs: &SignObservation, basis: &SpectralBasis) -> Result<FeasibleCone> {
        let row = basis.sample_row(obs.sample)?;
        self.with_row(obs.sample, row.clone(), Relation::from_sign(obs.sign))
    }

    pub fn with_row(&self, source: SampleId, row: DVector<f64>, relation: Relation) -> Result<FeasibleCone> {
        if row.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: row.len() });
        }
        if let Some(c) = self.constraints.iter().find(|c| c.source == source) {
            return if c.relation == relation && c.row == row {
                Ok(self.clone())
            } else {
                Err(Error::ConflictingObservation(source))
            };
        }
        let norm = row.norm();
        if norm <= ZERO_ROW {
            return Err(Error::ZeroRow(norm));
        }
        let mut constraints = self.constraints.clone();
        constraints.push(ConeConstraint { row, relation, source });
        Ok(FeasibleCone {
            dim: self.dim,
            constraints,
            tol: self.tol,
            evs: OnceLock::new(),
            dd: OnceLock::new(),
            parent_dd: self.dd.get().cloned().flatten(),
        })
    }

    /// Add a candidate with a hypothesized sign.
    pub fn with_candidate(&self, cand: &Candidate, sign: Sign) -> Result<FeasibleCone> {
        self.with_row(cand.id, cand.row.clone(), Relation::from_sign(sign))
    }

    pub fn observed(&self, sample: SampleId) -> bool {
        self.constraints.iter().any(|c| c.source == sample)
    }

    /// Unit rows in `>= 0` orientation; equality constraints contribute both
    /// orientations.
    pub(crate) fn oriented_rows(&self) -> Vec<DVector<f64>> {
        let mut out = Vec::with_capacity(self.constraints.len());
        for c in &self.constraints {
            let u = c.row.normalize();
            match c.relation {
                Relation::Geq => out.push(u),
                Relation::Leq => out.push(-u),
                Relation::Eq => {
                    out.push(u.clone());
                    out.push(-u);
                }
            }
        }
        out
    }

    pub fn rank(&self) -> usize {
        let rows: Vec<&DVector<f64>> = self.constraints.iter().map(|c| &c.row).collect();
        linalg::rank(&rows, self.dim)
    }

    pub fn equality_rows(&self) -> Vec<&DVector<f64>> {
        self.constraints.iter().filter(|c| c.relation == Relation::Eq).map(|c| &c.row).collect()
    }

    fn check_equalities(&self) -> Result<()> {
        let eq = self.equality_rows();
        if !eq.is_empty() {
            let r = linalg::rank(&eq, self.dim);
            if r >= self.dim {
                return Err(Error::DimensionCollapse { rank: r, dim: self.dim });
            }
        }
        Ok(())
    }

    /// Unit extreme vectors, in lexicographic order.
    ///
    /// A unit vector is an EV when it satisfies every constraint and lies on
    /// `dim - 1` linearly independent constraint hyperplanes. With fewer than
    /// `dim - 1` independent constraints there are none; with exactly
    /// `dim - 1` the EVs are the feasible directions of the common line.
    /// Pointed cones are enumerated with the double description method.
    pub fn enumerate_evs(&self) -> Result<Vec<DVector<f64>>> {
        if let Some(evs) = self.evs.get() {
            return Ok(evs.clone());
        }
        let evs = self.compute_evs()?;
        Ok(self.evs.get_or_init(|| evs).clone())
    }

    /// Extreme vectors by exhaustive search over `(dim-1)`-subsets of the
    /// constraint hyperplanes. Exact but combinatorial; guarded by
    /// [`Tolerances::subset_cap`].
    pub fn enumerate_evs_subsets(&self) -> Result<Vec<DVector<f64>>> {
        self.check_equalities()?;
        subsets::enumerate(self)
    }

    fn compute_evs(&self) -> Result<Vec<DVector<f64>>> {
        self.check_equalities()?;
        let rows = self.oriented_rows();
        let refs: Vec<&DVector<f64>> = rows.iter().collect();
        let r = linalg::rank(&refs, self.dim);
        if r + 1 < self.dim {
            return Ok(Vec::new());
        }
        let evs = if r + 1 == self.dim {
            let d = linalg::null_vector(&refs, self.dim).ok_or(Error::EmptyEvSet)?;
            vec![d.clone(), -d]
        } else {
            let state = match &self.parent_dd {
                Some(parent) if parent.n_rows() < rows.len() => {
                    let mut st = (**parent).clone();
                    for row in &rows[parent.n_rows()..] {
                        st.push(row, &self.tol);
                    }
                    Some(st)
                }
                _ => dd::DdState::build(&rows, self.dim, &self.tol),
            };
            let dirs = state.as_ref().map(|st| st.directions()).unwrap_or_default();
            let _ = self.dd.set(state.map(Arc::new));
            dirs
        };
        Ok(self.canonicalize(evs))
    }

    /// Drop infeasible or duplicate directions and sort.
    pub(crate) fn canonicalize(&self, evs: Vec<DVector<f64>>) -> Vec<DVector<f64>> {
        let tol = self.tol.angular_dedupe;
        let mut feasible: Vec<DVector<f64>> =
            evs.into_iter().map(|z| z.normalize()).filter(|z| self.contains(z, self.tol.satisfy)).collect();
        // near-duplicates differ by at most `tol` in the first coordinate
        feasible.sort_by(|a, b| a[0].total_cmp(&b[0]));
        let mut kept: Vec<DVector<f64>> = Vec::with_capacity(feasible.len());
        for z in feasible {
            let dup = kept
                .iter()
                .rev()
                .take_while(|k| k[0] >= z[0] - tol)
                .any(|k| k.iter().zip(z.iter()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() <= tol * tol);
            if !dup {
                kept.push(z);
            }
        }
        kept.sort_by(linalg::lex_cmp);
        kept
    }

    /// Scale-invariant membership test with relative slack `tol`.
    pub fn contains(&self, w: &DVector<f64>, tol: f64) -> bool {
        let wn = w.norm();
        self.constraints.iter().all(|c| {
            let v = c.row.dot(w);
            let slack = tol * c.row.norm() * wn;
            match c.relation {
                Relation::Leq => v <= slack,
                Relation::Geq => v >= -slack,
                Relation::Eq => v.abs() <= slack,
            }
        })
    }

    /// Restrict to the subspace cut out by the equality constraints.
    ///
    /// Returns the cone in coordinates of an orthonormal basis `Q`
    /// (`dim x (dim - r)`) of that subspace, with every inequality row
    /// replaced by `Qᵀrow`. Rows that vanish on the subspace are dropped.
    pub fn reduce_equalities(&self) -> Result<(FeasibleCone, DMatrix<f64>)> {
        self.check_equalities()?;
        let eq = self.equality_rows();
        let (q, _) = linalg::null_space(&eq, self.dim);
        let mut reduced = FeasibleCone::with_tolerances(q.ncols(), self.tol);
        for c in self.constraints.iter().filter(|c| c.relation != Relation::Eq) {
            let r = q.tr_mul(&c.row);
            if r.norm() > ZERO_ROW * c.row.norm().max(1.0) {
                reduced.constraints.push(ConeConstraint { row: r, relation: c.relation, source: c.source });
            }
        }
        Ok((reduced, q))
    }

    /// Component of `row` orthogonal to the span of the equality rows.
    pub fn project_row(&self, row: &DVector<f64>) -> DVector<f64> {
        let eq = self.equality_rows();
        if eq.is_empty() {
            return row.clone();
        }
        let (q, _) = linalg::null_space(&eq, self.dim);
        &q * q.tr_mul(row)
    }

    /// JSON-like dump of constraints and (when computable) EVs.
    pub fn dump(&self) -> String {
        let fmt_vec = |v: &DVector<f64>| {
            let parts: Vec<String> = v.iter().map(|x| format!("{x:.12e}")).collect();
            format!("[{}]", parts.join(", "))
        };
        let mut s = String::new();
        let _ = writeln!(s, "{{\n  \"dim\": {},\n  \"constraints\": [", self.dim);
        for (i, c) in self.constraints.iter().enumerate() {
            let comma = if i + 1 < self.constraints.len() { "," } else { "" };
            let _ = writeln!(
                s,
                "    {{\"source\": \"{}\", \"relation\": \"{}\", \"row\": {}}}{comma}",
                c.source,
                c.relation.as_str(),
                fmt_vec(&c.row)
            );
        }
        let _ = writeln!(s, "  ],");
        match self.enumerate_evs() {
            Ok(evs) => {
                let _ = writeln!(s, "  \"evs\": [");
                for (i, z) in evs.iter().enumerate() {
                    let comma = if i + 1 < evs.len() { "," } else { "" };
                    let _ = writeln!(s, "    {}{comma}", fmt_vec(z));
                }
                let _ = writeln!(s, "  ]");
            }
            Err(e) => {
                let _ = writeln!(s, "  \"evs_error\": \"{e}\"");
            }
        }
        s.push('}');
        s
    }
}

/// Signed distance from `ev` to the hyperplane `{w : rowᵀw = 0}`.
pub fn ev_distance(ev: &DVector<f64>, row: &DVector<f64>) -> Result<f64> {
    let n = row.norm();
    if n <= ZERO_ROW {
        return Err(Error::ZeroRow(n));
    }
    Ok(row.dot(ev) / n)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_vec(x.to_vec())
    }

    pub(crate) fn orthant(dim: usize) -> FeasibleCone {
        let mut c = FeasibleCone::new(dim);
        for i in 0..dim {
            let mut r = DVector::zeros(dim);
            r[i] = 1.0;
            c = c.with_row(SampleId::vertex(i), r, Relation::Geq).unwrap();
        }
        c
    }

    fn assert_same_set(a: &[DVector<f64>], b: &[DVector<f64>], tol: f64) {
        assert_eq!(a.len(), b.len(), "{a:?} vs {b:?}");
        for x in a {
            assert!(b.iter().any(|y| (x - y).norm() < tol), "{x} missing from {b:?}");
        }
    }

    #[test]
    fn quadrant_and_octant_evs() {
        let evs = orthant(2).enumerate_evs().unwrap();
        assert_same_set(&evs, &[v(&[1.0, 0.0]), v(&[0.0, 1.0])], 1e-12);
        let evs = orthant(3).enumerate_evs().unwrap();
        assert_same_set(&evs, &[v(&[1.0, 0.0, 0.0]), v(&[0.0, 1.0, 0.0]), v(&[0.0, 0.0, 1.0])], 1e-12);
        assert_same_set(&orthant(3).enumerate_evs_subsets().unwrap(), &evs, 1e-12);
    }

    #[test]
    fn too_few_constraints_give_no_evs() {
        let c = FeasibleCone::new(3).with_row(SampleId::vertex(0), v(&[1.0, 0.0, 0.0]), Relation::Geq).unwrap();
        assert!(c.enumerate_evs().unwrap().is_empty());
        assert!(c.enumerate_evs_subsets().unwrap().is_empty());
    }

    #[test]
    fn rank_deficient_cone_yields_line_directions() {
        let c = FeasibleCone::new(3)
            .with_row(SampleId::vertex(0), v(&[1.0, 0.0, 0.0]), Relation::Geq)
            .unwrap()
            .with_row(SampleId::vertex(1), v(&[0.0, 1.0, 0.0]), Relation::Geq)
            .unwrap();
        let evs = c.enumerate_evs().unwrap();
        assert_same_set(&evs, &[v(&[0.0, 0.0, 1.0]), v(&[0.0, 0.0, -1.0])], 1e-12);
        assert_same_set(&c.enumerate_evs_subsets().unwrap(), &evs, 1e-12);
    }

    #[test]
    fn empty_interior_cone_has_no_evs() {
        // x >= 0, y >= 0, x + y <= 0 together with z >= 0 and z <= 0 style pinch
        let c = orthant(2).with_row(SampleId::vertex(9), v(&[1.0, 1.0]), Relation::Leq).unwrap();
        assert!(c.enumerate_evs().unwrap().is_empty());
        assert!(c.enumerate_evs_subsets().unwrap().is_empty());
    }

    #[test]
    fn add_constraint_semantics() {
        let g = crate::graph::Graph::new(3, [(0, 1, 1.0), (1, 2, 1.0)]).unwrap();
        let basis = SpectralBasis::new(&g, &[1, 2, 3]).unwrap();
        let empty = FeasibleCone::new(3);
        let obs = SignObservation { sample: SampleId::vertex(1), sign: Sign::Pos };
        let c1 = empty.add_constraint(&obs, &basis).unwrap();
        assert_eq!(c1.constraints().len(), 1);
        assert_eq!(c1.constraints()[0].relation, Relation::Geq);
        assert_eq!(c1.add_constraint(&obs, &basis).unwrap(), c1);
        let conflict = SignObservation { sample: SampleId::vertex(1), sign: Sign::Neg };
        assert!(matches!(c1.add_constraint(&conflict, &basis), Err(Error::ConflictingObservation(_))));
        let zero = SignObservation { sample: SampleId::edge(0), sign: Sign::Zero };
        assert_eq!(c1.add_constraint(&zero, &basis).unwrap().constraints()[1].relation, Relation::Eq);
    }

    #[test]
    fn conflicting_duplicate_in_quadrant() {
        let c = orthant(2);
        let err = c.with_row(SampleId::vertex(0), v(&[1.0, 0.0]), Relation::Leq).unwrap_err();
        assert!(matches!(err, Error::ConflictingObservation(s) if s == SampleId::vertex(0)));
    }

    #[test]
    fn zero_row_rejected() {
        let err = FeasibleCone::new(2).with_row(SampleId::vertex(0), v(&[0.0, 1e-14]), Relation::Geq).unwrap_err();
        assert!(matches!(err, Error::ZeroRow(_)));
    }

    #[test]
    fn ev_distance_examples() {
        let e1 = v(&[1.0, 0.0, 0.0]);
        assert!((ev_distance(&e1, &v(&[2.0, 0.0, 0.0])).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(ev_distance(&e1, &v(&[0.0, 3.0, -1.0])).unwrap(), 0.0);
        let r = v(&[0.3, -1.2, 0.4]);
        let z = v(&[0.5, 0.5, 0.7071]);
        assert_eq!(ev_distance(&z, &r).unwrap(), -ev_distance(&z, &(-&r)).unwrap());
        assert!(matches!(ev_distance(&e1, &v(&[0.0, 0.0, 0.0])), Err(Error::ZeroRow(_))));
    }

    #[test]
    fn contains_examples() {
        let c = orthant(3);
        for z in c.enumerate_evs().unwrap() {
            assert!(c.contains(&z, 1e-9));
        }
        let interior = v(&[0.2, 0.3, 0.5]);
        assert!(c.contains(&interior, 1e-9));
        assert!(!c.contains(&(-&interior), 1e-9));
        assert!(c.contains(&DVector::zeros(3), 1e-9));
    }

    #[test]
    fn equalities_collapse_and_reduce() {
        let mut c = FeasibleCone::new(2);
        c = c.with_row(SampleId::vertex(0), v(&[1.0, 0.0]), Relation::Eq).unwrap();
        c = c.with_row(SampleId::vertex(1), v(&[0.0, 1.0]), Relation::Geq).unwrap();
        assert_same_set(&c.enumerate_evs().unwrap(), &[v(&[0.0, 1.0])], 1e-12);
        let (red, q) = c.reduce_equalities().unwrap();
        assert_eq!(red.dim(), 1);
        assert_eq!(q.ncols(), 1);
        let collapsed = c.with_row(SampleId::vertex(2), v(&[1.0, 1.0]), Relation::Eq).unwrap();
        assert!(matches!(collapsed.enumerate_evs(), Err(Error::DimensionCollapse { .. })));
    }

    #[test]
    fn project_row_removes_equality_span() {
        let c = FeasibleCone::new(3).with_row(SampleId::vertex(0), v(&[0.0, 0.0, 1.0]), Relation::Eq).unwrap();
        let p = c.project_row(&v(&[1.0, 2.0, 3.0]));
        assert!((p - v(&[1.0, 2.0, 0.0])).norm() < 1e-12);
    }

    #[test]
    fn dump_lists_constraints_and_evs() {
        let s = orthant(2).dump();
        assert!(s.contains("\"relation\": \">=\""));
        assert!(s.contains("\"evs\""));
        assert!(s.contains("v1"));
    }

    #[test]
    fn incremental_evs_match_fresh_enumeration() {
        let mut rng = linalg::seeded_rng(31);
        for dim in [3, 5, 7] {
            let truth = linalg::random_unit(dim, &mut rng);
            let mut grown = FeasibleCone::new(dim);
            let mut rows = Vec::new();
            for i in 0..(4 * dim) {
                let row = linalg::random_unit(dim, &mut rng);
                let rel = if row.dot(&truth) >= 0.0 { Relation::Geq } else { Relation::Leq };
                rows.push((row.clone(), rel));
                grown = grown.with_row(SampleId::vertex(i), row, rel).unwrap();
                let incremental = grown.enumerate_evs().unwrap();
                let mut fresh = FeasibleCone::new(dim);
                for (j, (r, rel)) in rows.iter().enumerate() {
                    fresh = fresh.with_row(SampleId::vertex(j), r.clone(), *rel).unwrap();
                }
                assert_same_set(&incremental, &fresh.enumerate_evs().unwrap(), 1e-9);
            }
        }
    }
}
