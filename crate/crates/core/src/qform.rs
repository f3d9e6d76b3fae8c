//! Quadratic constraints `f(x) = xᵀAx + 2bᵀx + c`, their homogenizations
//! and nonnegative aggregations.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, Matrix};

/// Absolute tolerance used when classifying matrices against I, 0, −I and
/// when testing for diagonal structure.
pub const MATRIX_TOL: f64 = 1e-9;

/// Relative asymmetry silently repaired by symmetrization. Anything larger is
/// rejected.
pub const SYMMETRY_TOL: f64 = 1e-6;

/// Threshold on |det P| (and on pivots) for basis changes and hyperplane
/// bases.
pub const RANK_TOL: f64 = 1e-10;

/// One quadratic constraint `f(x) < 0` (strict) or `f(x) ≤ 0`.
///
/// `b` is half the linear coefficient, so the homogenized matrix is
/// `[[A, b], [bᵀ, c]]` without any rescaling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadraticFunction {
    a: Matrix,
    b: Vec<f64>,
    c: f64,
    strict: bool,
}

/// Symmetric (n+1)×(n+1) matrix of a homogenized quadratic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomogenizedForm {
    pub q: Matrix,
}

impl QuadraticFunction {
    /// Builds a constraint, symmetrizing `a`. Deviations from symmetry above
    /// [`SYMMETRY_TOL`] (relative to the largest entry) are rejected.
    pub fn new(a: Matrix, b: Vec<f64>, c: f64, strict: bool) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::DimensionMismatch { expected: a.rows(), found: a.cols() });
        }
        if b.len() != a.rows() {
            return Err(Error::DimensionMismatch { expected: a.rows(), found: b.len() });
        }
        if a.rows() == 0 {
            return Err(Error::EmptySystem);
        }
        let scale = a.max_abs().max(1.0);
        let deviation = a.asymmetry() / scale;
        if deviation > SYMMETRY_TOL {
            return Err(Error::Asymmetric { deviation });
        }
        Ok(Self { a: a.symmetrized(), b, c, strict })
    }

    /// Constraint given with the full linear coefficient `l`, i.e.
    /// `xᵀAx + lᵀx + c`.
    pub fn with_linear(a: Matrix, linear: &[f64], c: f64, strict: bool) -> Result<Self> {
        Self::new(a, linear.iter().map(|v| 0.5 * v).collect(), c, strict)
    }

    pub fn zero(n: usize, strict: bool) -> Self {
        Self { a: Matrix::zeros(n, n), b: vec![0.0; n], c: 0.0, strict }
    }

    /// Recovers a constraint from its homogenized matrix.
    pub fn from_homogenized(q: &Matrix, strict: bool) -> Result<Self> {
        let k = q.rows();
        if k < 2 || !q.is_square() {
            return Err(Error::DimensionMismatch { expected: 2, found: k });
        }
        let n = k - 1;
        let a = Matrix::from_fn(n, n, |i, j| q[(i, j)]);
        let b = (0..n).map(|i| 0.5 * (q[(i, n)] + q[(n, i)])).collect();
        Self::new(a, b, q[(n, n)], strict)
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }

    pub fn a(&self) -> &Matrix {
        &self.a
    }

    /// Half the linear coefficient.
    pub fn b(&self) -> &[f64] {
        &self.b
    }

    /// The full linear coefficient `2b`.
    pub fn linear(&self) -> Vec<f64> {
        self.b.iter().map(|v| 2.0 * v).collect()
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn is_strict(&self) -> bool {
        self.strict
    }

    pub fn with_strict(mut self, strict: bool) -> Self {
        self.strict = strict;
        self
    }

    pub fn homogenize(&self) -> HomogenizedForm {
        let n = self.dim();
        let mut q = Matrix::zeros(n + 1, n + 1);
        for i in 0..n {
            for j in 0..n {
                q[(i, j)] = self.a[(i, j)];
            }
            q[(i, n)] = self.b[i];
            q[(n, i)] = self.b[i];
        }
        q[(n, n)] = self.c;
        HomogenizedForm { q }
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: x.len() });
        }
        Ok(self.eval(x))
    }

    /// Unchecked evaluation; panics in debug builds on a length mismatch.
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.a.quad(x) + 2.0 * dot(&self.b, x) + self.c
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let ax = self.a.mul_vec(x);
        ax.iter().zip(&self.b).map(|(u, v)| 2.0 * (u + v)).collect()
    }

    /// Whether `x` satisfies the constraint with its own strictness.
    pub fn holds(&self, x: &[f64]) -> bool {
        let v = self.eval(x);
        if self.strict {
            v < 0.0
        } else {
            v <= 0.0
        }
    }
}

impl HomogenizedForm {
    pub fn dim(&self) -> usize {
        self.q.rows()
    }

    /// `(x, t)ᵀ Q (x, t)`
    pub fn evaluate(&self, xt: &[f64]) -> f64 {
        self.q.quad(xt)
    }

    /// The form evaluated at `(x, 1)`.
    pub fn evaluate_affine(&self, x: &[f64]) -> f64 {
        let mut xt = x.to_vec();
        xt.push(1.0);
        self.q.quad(&xt)
    }
}

/// Ordered family of m quadratic constraints on ℝⁿ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadraticSystem {
    n: usize,
    constraints: Vec<QuadraticFunction>,
    labels: Vec<String>,
}

impl QuadraticSystem {
    pub fn new(constraints: Vec<QuadraticFunction>) -> Result<Self> {
        let labels = (1..=constraints.len()).map(|i| format!("f{i}")).collect();
        Self::with_labels(constraints, labels)
    }

    pub fn with_labels(constraints: Vec<QuadraticFunction>, labels: Vec<String>) -> Result<Self> {
        let n = constraints.first().map(QuadraticFunction::dim).ok_or(Error::EmptySystem)?;
        if n == 0 {
            return Err(Error::EmptySystem);
        }
        for f in &constraints {
            if f.dim() != n {
                return Err(Error::DimensionMismatch { expected: n, found: f.dim() });
            }
        }
        if labels.len() != constraints.len() {
            return Err(Error::DimensionMismatch { expected: constraints.len(), found: labels.len() });
        }
        Ok(Self { n, constraints, labels })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.constraints.len()
    }

    pub fn constraints(&self) -> &[QuadraticFunction] {
        &self.constraints
    }

    pub fn constraint(&self, i: usize) -> &QuadraticFunction {
        &self.constraints[i]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn homogenized(&self) -> Vec<Matrix> {
        self.constraints.iter().map(|f| f.homogenize().q).collect()
    }

    pub fn quadratic_parts(&self) -> Vec<Matrix> {
        self.constraints.iter().map(|f| f.a().clone()).collect()
    }

    pub fn all_strict(&self) -> bool {
        self.constraints.iter().all(QuadraticFunction::is_strict)
    }

    pub fn all_closed(&self) -> bool {
        self.constraints.iter().all(|f| !f.is_strict())
    }

    pub fn require_strict(&self) -> Result<()> {
        if self.all_strict() {
            Ok(())
        } else {
            Err(Error::StrictnessMismatch { required: "all-strict" })
        }
    }

    pub fn require_closed(&self) -> Result<()> {
        if self.all_closed() {
            Ok(())
        } else {
            Err(Error::StrictnessMismatch { required: "all-closed" })
        }
    }

    /// Same constraints with every strictness flag replaced.
    pub fn with_strictness(&self, strict: bool) -> Self {
        Self {
            n: self.n,
            constraints: self.constraints.iter().cloned().map(|f| f.with_strict(strict)).collect(),
            labels: self.labels.clone(),
        }
    }

    /// Subsystem keeping the listed constraints in order.
    pub fn subsystem(&self, idx: &[usize]) -> Self {
        Self {
            n: self.n,
            constraints: idx.iter().map(|&i| self.constraints[i].clone()).collect(),
            labels: idx.iter().map(|&i| self.labels[i].clone()).collect(),
        }
    }

    /// Values `f_i(x)` for every constraint.
    pub fn values(&self, x: &[f64]) -> Vec<f64> {
        self.constraints.iter().map(|f| f.eval(x)).collect()
    }

    pub fn max_value(&self, x: &[f64]) -> f64 {
        self.constraints.iter().map(|f| f.eval(x)).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Membership in S (all strict) or T (all closed), honoring each flag.
    pub fn contains(&self, x: &[f64]) -> bool {
        self.constraints.iter().all(|f| f.holds(x))
    }

    /// `Σ λ_i Q_i`
    pub fn aggregate_matrix(&self, lambda: &[f64]) -> Matrix {
        let k = self.n + 1;
        let mut q = Matrix::zeros(k, k);
        for (f, &w) in self.constraints.iter().zip(lambda) {
            if w != 0.0 {
                q.add_scaled(w, &f.homogenize().q);
            }
        }
        q
    }

    /// `F_λ = Σ λ_i f_i` for nonnegative, nonzero λ.
    pub fn aggregate(&self, lambda: &AggregationWeights) -> Result<QuadraticFunction> {
        if lambda.len() != self.m() {
            return Err(Error::DimensionMismatch { expected: self.m(), found: lambda.len() });
        }
        Ok(self.combine(lambda.as_slice()))
    }

    /// Linear combination with arbitrary real coefficients; strictness is
    /// strict unless every constraint is closed.
    pub fn combine(&self, coeffs: &[f64]) -> QuadraticFunction {
        let n = self.n;
        let mut a = Matrix::zeros(n, n);
        let mut b = vec![0.0; n];
        let mut c = 0.0;
        for (f, &w) in self.constraints.iter().zip(coeffs) {
            if w == 0.0 {
                continue;
            }
            a.add_scaled(w, f.a());
            for (bi, fi) in b.iter_mut().zip(f.b()) {
                *bi += w * fi;
            }
            c += w * f.c();
        }
        QuadraticFunction { a, b, c, strict: !self.all_closed() }
    }

    pub fn detect_sphere_structure(&self) -> Option<SphereStructure> {
        let n = self.n;
        let id = Matrix::identity(n);
        let mut s = SphereStructure::default();
        for (i, f) in self.constraints.iter().enumerate() {
            if (f.a() - &id).max_abs() <= MATRIX_TOL {
                s.p.push(i);
            } else if f.a().max_abs() <= MATRIX_TOL {
                s.z.push(i);
            } else if (f.a() + &id).max_abs() <= MATRIX_TOL {
                s.n.push(i);
            } else {
                return None;
            }
        }
        Some(s)
    }

    /// True iff every homogenized matrix is diagonal, i.e. b = 0 and A diagonal.
    pub fn detect_diagonal(&self) -> bool {
        self.constraints.iter().all(|f| f.homogenize().q.is_diagonal(MATRIX_TOL))
    }
}

/// Nonnegative, nonzero aggregation weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregationWeights(Vec<f64>);

impl AggregationWeights {
    pub fn new(lambda: Vec<f64>) -> Result<Self> {
        for (index, &value) in lambda.iter().enumerate() {
            if !(value >= 0.0) {
                return Err(Error::NegativeWeight { index, value });
            }
        }
        if lambda.iter().all(|&v| v == 0.0) {
            return Err(Error::ZeroWeights);
        }
        Ok(Self(lambda))
    }

    pub fn unit(m: usize, i: usize) -> Self {
        let mut v = vec![0.0; m];
        v[i] = 1.0;
        Self(v)
    }

    /// `α e_i + (1 − α) e_j`
    pub fn pair(m: usize, i: usize, j: usize, alpha: f64) -> Self {
        let mut v = vec![0.0; m];
        v[i] = alpha;
        v[j] += 1.0 - alpha;
        Self(v)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Rescaled to ‖λ‖₁ = 1.
    pub fn normalized(&self) -> Self {
        let s: f64 = self.0.iter().sum();
        Self(self.0.iter().map(|v| v / s).collect())
    }

    pub fn support(&self) -> Vec<usize> {
        self.0.iter().enumerate().filter(|(_, &v)| v > 0.0).map(|(i, _)| i).collect()
    }
}

/// Index partition of a sphere-type system: `A_i = I` (p), `A_i = 0` (z),
/// `A_i = −I` (n).
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SphereStructure {
    pub p: Vec<usize>,
    pub z: Vec<usize>,
    pub n: Vec<usize>,
}

/// `Wᵀ Q W` for a full-column-rank k×(k−1) basis W of a hyperplane.
pub fn restrict_to_hyperplane(q: &Matrix, w: &Matrix) -> Result<Matrix> {
    if !q.is_square() || w.rows() != q.rows() {
        return Err(Error::DimensionMismatch { expected: q.rows(), found: w.rows() });
    }
    if w.column_rank(RANK_TOL) < w.cols() {
        return Err(Error::RankDeficient);
    }
    Ok(q.congruence(w).symmetrized())
}

/// `Pᵀ Q P` for invertible P.
pub fn change_basis(q: &Matrix, p: &Matrix) -> Result<Matrix> {
    if !p.is_square() || p.rows() != q.rows() {
        return Err(Error::DimensionMismatch { expected: q.rows(), found: p.rows() });
    }
    if p.determinant().abs() <= RANK_TOL {
        return Err(Error::SingularMatrix);
    }
    Ok(q.congruence(p).symmetrized())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn qf(a: &[Vec<f64>], linear: &[f64], c: f64) -> QuadraticFunction {
        QuadraticFunction::with_linear(Matrix::from_rows(a), linear, c, true).unwrap()
    }

    #[test]
    fn homogenize_blocks() {
        let f = qf(&[vec![1.0, 0.0], vec![0.0, 0.0]], &[0.0, 0.0], -1.0);
        assert_eq!(f.homogenize().q, Matrix::from_diag(&[1.0, 0.0, -1.0]));

        // −x₁² + x₁
        let g = qf(&[vec![-1.0, 0.0], vec![0.0, 0.0]], &[1.0, 0.0], 0.0);
        let expected =
            Matrix::from_rows(&[vec![-1.0, 0.0, 0.5], vec![0.0, 0.0, 0.0], vec![0.5, 0.0, 0.0]]);
        assert_eq!(g.homogenize().q, expected);

        assert_eq!(QuadraticFunction::zero(3, true).homogenize().q, Matrix::zeros(4, 4));
    }

    #[test]
    fn evaluate_checks_dimension() {
        let f = QuadraticFunction::zero(2, true);
        assert_eq!(f.evaluate(&[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(f.evaluate(&[1.0]), Err(Error::DimensionMismatch { expected: 2, found: 1 }));
    }

    #[test]
    fn asymmetry_is_repaired_or_rejected() {
        let slightly = Matrix::from_rows(&[vec![1.0, 1e-9], vec![0.0, 1.0]]);
        let f = QuadraticFunction::new(slightly, vec![0.0, 0.0], 0.0, true).unwrap();
        assert_eq!(f.a()[(0, 1)], f.a()[(1, 0)]);
        let badly = Matrix::from_rows(&[vec![1.0, 0.5], vec![0.0, 1.0]]);
        assert!(matches!(
            QuadraticFunction::new(badly, vec![0.0, 0.0], 0.0, true),
            Err(Error::Asymmetric { .. })
        ));
    }

    #[test]
    fn aggregate_unit_and_negative() {
        let f1 = qf(&[vec![-1.0, 0.0], vec![0.0, 0.0]], &[1.0, 0.0], 0.0);
        let f2 = qf(&[vec![1.0, 0.0], vec![0.0, 1.0]], &[0.0, 0.0], -1.0);
        let sys = QuadraticSystem::new(vec![f1.clone(), f2]).unwrap();
        let e1 = sys.aggregate(&AggregationWeights::unit(2, 0)).unwrap();
        assert_eq!(e1.homogenize(), f1.homogenize());
        // f₁ + f₂ = −x₁² + x₁ − 1 + x₁² + x₂² = x₁ + x₂² − 1
        let sum = sys.aggregate(&AggregationWeights::new(vec![1.0, 1.0]).unwrap()).unwrap();
        assert_eq!(sum.a(), &Matrix::from_diag(&[0.0, 1.0]));
        assert_eq!(sum.linear(), vec![1.0, 0.0]);
        assert_eq!(sum.c(), -1.0);
        assert!(matches!(
            AggregationWeights::new(vec![1.0, -0.5]),
            Err(Error::NegativeWeight { index: 1, .. })
        ));
        assert_eq!(AggregationWeights::new(vec![0.0, 0.0]), Err(Error::ZeroWeights));
    }

    #[test]
    fn sphere_detection() {
        let lin = qf(&[vec![0.0, 0.0], vec![0.0, 0.0]], &[1.0, 0.0], 0.0);
        let sys = QuadraticSystem::new(vec![lin.clone(), lin.clone()]).unwrap();
        let s = sys.detect_sphere_structure().unwrap();
        assert!(s.p.is_empty() && s.n.is_empty());
        assert_eq!(s.z, vec![0, 1]);
        let saddle = qf(&[vec![1.0, 0.0], vec![0.0, -1.0]], &[0.0, 0.0], 0.0);
        assert!(QuadraticSystem::new(vec![saddle, lin]).unwrap().detect_sphere_structure().is_none());
    }

    #[test]
    fn diagonal_detection() {
        let f1 = qf(&[vec![-1.0, 0.0], vec![0.0, 0.0]], &[1.0, 0.0], 0.0);
        let f2 = qf(&[vec![1.0, 0.0], vec![0.0, 1.0]], &[0.0, 0.0], -1.0);
        assert!(!QuadraticSystem::new(vec![f1, f2.clone()]).unwrap().detect_diagonal());
        assert!(QuadraticSystem::new(vec![f2]).unwrap().detect_diagonal());
    }

    #[test]
    fn basis_changes() {
        let q = Matrix::from_rows(&[vec![2.0, 1.0], vec![1.0, -3.0]]);
        assert_eq!(change_basis(&q, &Matrix::identity(2)).unwrap(), q);
        assert_eq!(change_basis(&q, &Matrix::identity(2).scale(2.0)).unwrap(), q.scale(4.0));
        let singular = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]);
        assert_eq!(change_basis(&q, &singular), Err(Error::SingularMatrix));

        let w = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]]);
        let q1 = Matrix::from_diag(&[1.0, -1.0, -1.0]);
        let r = restrict_to_hyperplane(&q1, &w).unwrap();
        assert_eq!(r, Matrix::from_rows(&[vec![0.0, -1.0], vec![-1.0, -2.0]]));
        let bad = Matrix::from_rows(&[vec![1.0, 2.0], vec![0.0, 0.0], vec![1.0, 2.0]]);
        assert_eq!(restrict_to_hyperplane(&q1, &bad), Err(Error::RankDeficient));
    }
}
