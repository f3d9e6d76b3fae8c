//! Closed-form hulls: sphere/halfspace systems, diagonal systems and the
//! interior description for closed inequalities.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::certificates::{self, EmptinessCertificate};
use crate::engine::{self, AggregationRecord, Evidence, HullDescription, Provenance, SccKind};
use crate::error::{Error, Result};
use crate::fm::{self, LinearSystem, Row};
use crate::linalg::{norm, Matrix};
use crate::oracle::{self, SamplerConfig, TSampleSet};
use crate::qform::{AggregationWeights, QuadraticSystem, SphereStructure};
use crate::symlin::{self, Tolerances};

fn empty_description() -> HullDescription {
    HullDescription { aggregations: vec![], pencils: vec![], pruned: vec![], warnings: vec![], verified: None }
}

fn span_dim(qs: &[Matrix]) -> usize {
    let cols: Vec<Vec<f64>> = qs.iter().map(|q| q.svec()).collect();
    Matrix::from_columns(&cols).column_rank(1e-10)
}

pub fn sphere_structure(sys: &QuadraticSystem) -> Result<SphereStructure> {
    sys.detect_sphere_structure().ok_or(Error::NotSphereType)
}

/// Candidates `f_i` (i ∈ P ∪ Z) and `f_i + f_j` (i ∈ P, j ∈ N).
pub fn sphere_hull(sys: &QuadraticSystem) -> Result<HullDescription> {
    let s = sphere_structure(sys)?;
    let m = sys.m();
    let mut desc = empty_description();
    let dim = span_dim(&sys.homogenized());
    let n = sys.n();
    if dim == n {
        if certificates::pdlc_witness(sys)?.is_none() {
            desc.warnings.push(format!(
                "span of the constraint matrices has dimension {dim} = n without a PDLC witness; completeness is not guaranteed"
            ));
        }
    } else if dim > n {
        desc.warnings.push(format!(
            "span of the constraint matrices has dimension {dim} > n; completeness is not guaranteed"
        ));
    }
    let mut lambdas = Vec::new();
    let mut idx: Vec<usize> = s.p.iter().chain(&s.z).copied().collect();
    idx.sort_unstable();
    for i in idx {
        lambdas.push(AggregationWeights::unit(m, i));
    }
    for &i in &s.p {
        for &j in &s.n {
            lambdas.push(AggregationWeights::pair(m, i, j, 0.5));
        }
    }
    for l in lambdas {
        let rec = AggregationRecord::new(sys, &l, Provenance::SphereFormula)?;
        if rec.kind == SccKind::ManyNegative {
            desc.warnings.push(format!("candidate {:?} has {} negative eigenvalues", rec.lambda, rec.inertia.neg));
        }
        desc.aggregations.push(rec);
    }
    Ok(desc)
}

/// True iff `conv(S) ≠ ℝⁿ`.
pub fn sphere_rn_test(sys: &QuadraticSystem) -> Result<bool> {
    let s = sphere_structure(sys)?;
    if !s.p.is_empty() {
        return Ok(true);
    }
    Ok(s.z.iter().any(|&i| {
        let f = sys.constraint(i);
        f.b().iter().any(|&b| b.abs() > crate::qform::MATRIX_TOL) || f.c() >= 0.0
    }))
}

/// `Ω ∪ {0} = {λ ≥ 0 : Σ_P λ_i ≥ Σ_N λ_i}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphereOmega {
    /// Coefficients `w` of the single inequality `w · λ ≥ 0`.
    pub inequality: Vec<f64>,
    pub m: usize,
}

impl SphereOmega {
    pub fn contains(&self, lambda: &[f64], tol: f64) -> bool {
        lambda.len() == self.m
            && lambda.iter().all(|&l| l >= -tol)
            && self.inequality.iter().zip(lambda).map(|(w, l)| w * l).sum::<f64>() >= -tol
    }

    /// Indices forced to zero by the inequality.
    pub fn forced_zero(&self) -> Vec<usize> {
        if self.inequality.iter().any(|&w| w > 0.0) {
            vec![]
        } else {
            (0..self.m).filter(|&i| self.inequality[i] < 0.0).collect()
        }
    }
}

pub fn sphere_omega(sys: &QuadraticSystem) -> Result<SphereOmega> {
    let s = sphere_structure(sys)?;
    let mut w = vec![0.0; sys.m()];
    s.p.iter().for_each(|&i| w[i] = 1.0);
    s.n.iter().for_each(|&i| w[i] = -1.0);
    Ok(SphereOmega { inequality: w, m: sys.m() })
}

/// `{x : Ax < b}` (or `≤`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpenPolyhedron {
    pub a: Matrix,
    pub b: Vec<f64>,
    pub strict: bool,
}

impl OpenPolyhedron {
    pub fn contains(&self, x: &[f64]) -> bool {
        self.a.mul_vec(x).iter().zip(&self.b).all(|(l, r)| if self.strict { l < r } else { l <= r })
    }
}

/// `Q_i = Diag(a_i1, …, a_in, −b_i)`.
pub fn diagonal_to_polyhedron(sys: &QuadraticSystem) -> Result<OpenPolyhedron> {
    if !sys.detect_diagonal() {
        return Err(Error::NotDiagonal);
    }
    let n = sys.n();
    let a = Matrix::from_fn(sys.m(), n, |i, j| sys.constraint(i).a()[(j, j)]);
    let b = sys.constraints().iter().map(|f| -f.c()).collect();
    Ok(OpenPolyhedron { a, b, strict: sys.all_strict() })
}

/// Closure of the down-monotone projection `{y : ∃x, Ax ≤ b, y ≤ x}` as
/// `Gy ≤ h`, each row with its multiplier `λ ≥ 0`, `λᵀA = g`, `λᵀb = h`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectedPolyhedron {
    pub g: Matrix,
    pub h: Vec<f64>,
    pub multipliers: Vec<Vec<f64>>,
}

impl ProjectedPolyhedron {
    pub fn rows(&self) -> usize {
        self.h.len()
    }

    /// Membership in the open polyhedron `{y : Gy < h}`.
    pub fn contains_open(&self, y: &[f64]) -> bool {
        self.g.mul_vec(y).iter().zip(&self.h).all(|(l, r)| l < r)
    }

    pub fn multiplier_residual(&self, poly: &OpenPolyhedron) -> f64 {
        let mut worst = 0.0f64;
        for (k, lam) in self.multipliers.iter().enumerate() {
            let at = poly.a.transpose().mul_vec(lam);
            for (j, v) in at.iter().enumerate() {
                worst = worst.max((v - self.g[(k, j)]).abs());
            }
            let lb: f64 = lam.iter().zip(&poly.b).map(|(l, b)| l * b).sum();
            worst = worst.max((lb - self.h[k]).abs());
        }
        worst
    }
}

/// A point of `P ∩ ℝⁿ₊` (strict in `Ax < b`), if any.
pub fn nonneg_point(poly: &OpenPolyhedron) -> Result<Option<Vec<f64>>> {
    let n = poly.a.cols();
    let mut ls = LinearSystem::new(n);
    for i in 0..poly.a.rows() {
        ls.lt(poly.a.row(i).to_vec(), poly.b[i]);
    }
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = -1.0;
        ls.le(e, 0.0);
    }
    ls.solve()
}

pub fn fm_project(poly: &OpenPolyhedron) -> Result<ProjectedPolyhedron> {
    let (m, n) = (poly.a.rows(), poly.a.cols());
    if nonneg_point(poly)?.is_none() {
        return Err(Error::Infeasible("the polyhedron has no point in the nonnegative orthant".into()));
    }
    // Variables (x, y); seeds are the m rows of A and the n lift rows y ≤ x.
    let total = m + n;
    let mut rows = Vec::with_capacity(total);
    for i in 0..m {
        let mut coef = poly.a.row(i).to_vec();
        coef.extend(std::iter::repeat_n(0.0, n));
        rows.push(Row::seed(coef, poly.b[i], false, i, total));
    }
    for j in 0..n {
        let mut coef = vec![0.0; 2 * n];
        coef[j] = -1.0;
        coef[n + j] = 1.0;
        rows.push(Row::seed(coef, 0.0, false, m + j, total));
    }
    for k in (0..n).rev() {
        rows = fm::eliminate(&rows, k)?;
    }
    if rows.iter().any(|r| r.coef.iter().all(|&c| c == 0.0) && r.rhs < -1e-10) {
        return Err(Error::Infeasible("projection is empty".into()));
    }
    // Rows on y only, with an aggregation of A rows as certificate.
    let mut cand: Vec<(Vec<f64>, f64, Vec<f64>)> = rows
        .into_iter()
        .filter(|r| r.coef[n..].iter().any(|&c| c != 0.0))
        .map(|r| {
            let lam: Vec<f64> = r.mult[..m].iter().map(|&v| v.max(0.0)).collect();
            let s: f64 = lam.iter().sum();
            let g: Vec<f64> = r.coef[n..].iter().map(|c| c / s).collect();
            (g, r.rhs / s, lam.iter().map(|l| l / s).collect())
        })
        .collect();
    cand.retain(|(_, _, l)| l.iter().all(|v| v.is_finite()));
    remove_redundant(&mut cand, n)?;
    let k = cand.len();
    let g = Matrix::from_fn(k, n, |i, j| cand[i].0[j]);
    Ok(ProjectedPolyhedron {
        g,
        h: cand.iter().map(|c| c.1).collect(),
        multipliers: cand.into_iter().map(|c| c.2).collect(),
    })
}

/// Pairwise dominance, then drop rows implied by the others on `y ≥ 0`.
fn remove_redundant(cand: &mut Vec<(Vec<f64>, f64, Vec<f64>)>, n: usize) -> Result<()> {
    let dir = |g: &[f64]| {
        let s = g.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        g.iter().map(|v| v / s).collect::<Vec<_>>()
    };
    let mut i = 0;
    while i < cand.len() {
        let di = dir(&cand[i].0);
        let si = cand[i].0.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let dominated = (0..cand.len()).any(|j| {
            if j == i {
                return false;
            }
            let sj = cand[j].0.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            let dj = dir(&cand[j].0);
            let same = di.iter().zip(&dj).all(|(a, b)| (a - b).abs() <= 1e-12);
            let (ri, rj) = (cand[i].1 / si, cand[j].1 / sj);
            same && (rj < ri - 1e-12 || ((rj - ri).abs() <= 1e-12 && j < i))
        });
        if dominated {
            cand.remove(i);
        } else {
            i += 1;
        }
    }
    let mut i = 0;
    while i < cand.len() {
        let mut ls = LinearSystem::new(n);
        for (j, c) in cand.iter().enumerate() {
            if j != i {
                ls.le(c.0.clone(), c.1);
            }
        }
        for k in 0..n {
            let mut e = vec![0.0; n];
            e[k] = -1.0;
            ls.le(e, 0.0);
        }
        let neg: Vec<f64> = cand[i].0.iter().map(|v| -v).collect();
        let slack = 1e-9 * cand[i].1.abs().max(1.0);
        ls.lt(neg, -cand[i].1 - slack);
        if ls.feasible()? {
            i += 1;
        } else {
            cand.remove(i);
        }
    }
    Ok(())
}

/// Nonzero `u ≥ 0` with `uᵀA ≥ 0`, `uᵀb ≤ 0`, i.e. `Σ u_i Q_i ⪰ 0`.
pub fn diagonal_empty(sys: &QuadraticSystem) -> Result<Option<EmptinessCertificate>> {
    let poly = diagonal_to_polyhedron(sys)?;
    let (m, n) = (poly.a.rows(), poly.a.cols());
    let mut ls = LinearSystem::new(m);
    for i in 0..m {
        let mut e = vec![0.0; m];
        e[i] = -1.0;
        ls.le(e, 0.0);
    }
    for j in 0..n {
        ls.le(poly.a.column(j).iter().map(|v| -v).collect(), 0.0);
    }
    ls.le(poly.b.clone(), 0.0);
    ls.eq(vec![1.0; m], 1.0);
    let Some(u) = ls.solve()? else {
        return Ok(None);
    };
    let u: Vec<f64> = u.into_iter().map(|v| v.max(0.0)).collect();
    let margin = symlin::min_eig(&sys.aggregate_matrix(&u))?;
    Ok(Some(EmptinessCertificate { lambda: u, margin }))
}

/// True iff `conv(S) = ℝⁿ`, via feasibility of `Ax ≤ 0, x ≥ 1`.
pub fn diagonal_rn(sys: &QuadraticSystem) -> Result<bool> {
    let poly = diagonal_to_polyhedron(sys)?;
    let n = poly.a.cols();
    let mut ls = LinearSystem::new(n);
    for i in 0..poly.a.rows() {
        ls.le(poly.a.row(i).to_vec(), 0.0);
    }
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = -1.0;
        ls.le(e, -1.0);
    }
    ls.feasible()
}

/// Diagonal hull together with the projection it came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagonalHull {
    pub description: HullDescription,
    pub projection: ProjectedPolyhedron,
}

pub fn diagonal_hull(sys: &QuadraticSystem) -> Result<DiagonalHull> {
    if let Some(cert) = diagonal_empty(sys)? {
        return Err(Error::Precondition(format!("S is empty; certificate λ = {:?}", cert.lambda)));
    }
    if diagonal_rn(sys)? {
        return Err(Error::Precondition("conv(S) is all of ℝⁿ".into()));
    }
    let poly = diagonal_to_polyhedron(sys)?;
    let projection = fm_project(&poly)?;
    let mut desc = empty_description();
    for (k, lam) in projection.multipliers.iter().enumerate() {
        if (0..poly.a.cols()).any(|j| projection.g[(k, j)] < -1e-9) {
            return Err(Error::PostCheckFailed(format!("facet {k} has a negative quadratic coefficient")));
        }
        let w = AggregationWeights::new(lam.clone())?;
        desc.aggregations.push(AggregationRecord::new(sys, &w, Provenance::DiagonalFacet)?);
    }
    Ok(DiagonalHull { description: desc, projection })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosedHullResult {
    pub aggregations: HullDescription,
    /// `Σ λ_i Q_i = 0` has no solution with `λ ≥ 0`, `Σλ = 1`.
    pub zero_aggregation_check: bool,
    pub samples: TSampleSet,
}

/// Some `λ ≥ 0`, `Σλ = 1` with `Σ λ_i Q_i = 0`.
pub fn zero_aggregation(sys: &QuadraticSystem) -> Result<Option<Vec<f64>>> {
    let m = sys.m();
    let svecs: Vec<Vec<f64>> = sys.homogenized().iter().map(|q| q.svec()).collect();
    let mut ls = LinearSystem::new(m);
    for k in 0..svecs[0].len() {
        ls.eq(svecs.iter().map(|s| s[k]).collect(), 0.0);
    }
    ls.eq(vec![1.0; m], 1.0);
    for i in 0..m {
        let mut e = vec![0.0; m];
        e[i] = -1.0;
        ls.le(e, 0.0);
    }
    ls.solve()
}

/// Dimension of the affine hull of `points`.
pub fn affine_dimension(points: &[Vec<f64>], tol: f64) -> usize {
    let Some(p0) = points.first() else {
        return 0;
    };
    let diffs: Vec<Vec<f64>> = points[1..].iter().map(|p| crate::linalg::sub(p, p0)).collect();
    if diffs.is_empty() {
        return 0;
    }
    let scale = diffs.iter().map(|d| norm(d)).fold(0.0, f64::max).max(1.0);
    let cols: Vec<Vec<f64>> = diffs.iter().map(|d| d.iter().map(|v| v / scale).collect()).collect();
    Matrix::from_columns(&cols).column_rank(tol)
}

pub fn closed_hull(sys: &QuadraticSystem, cfg: &SamplerConfig) -> Result<ClosedHullResult> {
    sys.require_closed()?;
    if let Some(l) = zero_aggregation(sys)? {
        return Err(Error::Precondition(format!("the zero matrix is the aggregation λ = {l:?}")));
    }
    let tol = Tolerances::default();
    let samples = oracle::sample_t(sys, cfg, 64, tol.zero)?;
    let all: Vec<Vec<f64>> = samples.all().cloned().collect();
    if affine_dimension(&all, 1e-9) < sys.n() {
        return Err(Error::EmptyInterior);
    }
    let desc = engine::enumerate_hull(sys, Evidence::closed(&all))?;
    for a in &desc.aggregations {
        if sys.aggregate_matrix(&a.lambda).max_abs() <= tol.zero {
            return Err(Error::ZeroAggregation { lambda: a.lambda.clone() });
        }
    }
    Ok(ClosedHullResult { aggregations: desc, zero_aggregation_check: true, samples })
}

/// Per-row redundancy flags against the remaining rows, in parallel.
pub fn redundant_rows(p: &ProjectedPolyhedron) -> Result<Vec<bool>> {
    let n = p.g.cols();
    (0..p.rows())
        .into_par_iter()
        .map(|i| {
            let mut ls = LinearSystem::new(n);
            for j in (0..p.rows()).filter(|&j| j != i) {
                ls.le(p.g.row(j).to_vec(), p.h[j]);
            }
            for k in 0..n {
                let mut e = vec![0.0; n];
                e[k] = -1.0;
                ls.le(e, 0.0);
            }
            ls.lt(p.g.row(i).iter().map(|v| -v).collect(), -p.h[i] - 1e-9 * p.h[i].abs().max(1.0));
            Ok(!ls.feasible()?)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qform::QuadraticFunction;

    fn diag(d: &[f64], c: f64) -> QuadraticFunction {
        QuadraticFunction::new(Matrix::from_diag(d), vec![0.0; d.len()], c, true).unwrap()
    }

    fn disk() -> QuadraticSystem {
        QuadraticSystem::new(vec![diag(&[1.0, 1.0], -1.0), diag(&[-1.0, 0.0], 0.0), diag(&[0.0, -1.0], 0.0)]).unwrap()
    }

    #[test]
    fn disk_polyhedron_and_projection() {
        let p = diagonal_to_polyhedron(&disk()).unwrap();
        assert_eq!(p.a.to_rows(), vec![vec![1.0, 1.0], vec![-1.0, 0.0], vec![0.0, -1.0]]);
        assert_eq!(p.b, vec![1.0, 0.0, 0.0]);
        let pp = fm_project(&p).unwrap();
        assert_eq!(pp.rows(), 1);
        assert_eq!(pp.g.row(0), &[1.0, 1.0]);
        assert_eq!(pp.h, vec![1.0]);
        assert_eq!(pp.multipliers[0], vec![1.0, 0.0, 0.0]);
        assert!(pp.multiplier_residual(&p) <= 1e-12);
    }

    #[test]
    fn box_projection() {
        let poly = OpenPolyhedron { a: Matrix::identity(2), b: vec![1.0, 1.0], strict: true };
        let pp = fm_project(&poly).unwrap();
        let mut rows: Vec<(Vec<f64>, Vec<f64>)> =
            (0..pp.rows()).map(|k| (pp.g.row(k).to_vec(), pp.multipliers[k].clone())).collect();
        rows.sort_by(|a, b| b.0[0].total_cmp(&a.0[0]));
        assert_eq!(rows, vec![(vec![1.0, 0.0], vec![1.0, 0.0]), (vec![0.0, 1.0], vec![0.0, 1.0])]);
    }

    #[test]
    fn disk_emptiness_and_rn() {
        assert!(diagonal_empty(&disk()).unwrap().is_none());
        assert!(!diagonal_rn(&disk()).unwrap());
        let empty = QuadraticSystem::new(vec![diag(&[1.0], 1.0)]).unwrap();
        let cert = diagonal_empty(&empty).unwrap().unwrap();
        assert_eq!(cert.lambda, vec![1.0]);
        let everything = QuadraticSystem::new(vec![diag(&[0.0, 0.0], -1.0)]).unwrap();
        assert!(diagonal_rn(&everything).unwrap());
    }

    #[test]
    fn sphere_omega_forms() {
        let ball = |c: f64| QuadraticFunction::new(Matrix::identity(2), vec![0.0; 2], c, true).unwrap();
        let hole = QuadraticFunction::new(Matrix::identity(2).scale(-1.0), vec![0.0; 2], 0.25, true).unwrap();
        let sys = QuadraticSystem::new(vec![ball(-1.0), ball(-2.0), hole]).unwrap();
        let om = sphere_omega(&sys).unwrap();
        assert_eq!(om.inequality, vec![1.0, 1.0, -1.0]);
        assert!(om.contains(&[1.0, 0.0, 1.0], 0.0));
        assert!(!om.contains(&[0.2, 0.2, 1.0], 0.0));
        let only_hole = sys.subsystem(&[2]);
        assert_eq!(sphere_omega(&only_hole).unwrap().forced_zero(), vec![0]);
    }

    #[test]
    fn zero_aggregation_detected() {
        let a = diag(&[1.0], -1.0);
        let b = diag(&[-1.0], 1.0);
        assert!(zero_aggregation(&QuadraticSystem::new(vec![a.clone(), b]).unwrap()).unwrap().is_some());
        assert!(zero_aggregation(&QuadraticSystem::new(vec![a]).unwrap()).unwrap().is_none());
    }
}
