//! Dense symmetric kernels: Jacobi eigendecomposition, inertia, pencil
//! determinant polynomials with root isolation on [0, 1], B-orthonormal
//! Gram–Schmidt and maximization of the smallest eigenvalue of a linear
//! matrix combination.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, norm, Matrix};

/// Numeric tolerances shared across the crate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Jacobi stopping threshold relative to ‖Q‖_F.
    pub eig: f64,
    /// Zero band for inertia, relative to max(1, ‖Q‖_F).
    pub zero: f64,
    /// Residual bound for reported pencil roots, relative to the coefficient scale.
    pub root: f64,
    /// Bound on |p| at a tangential root, relative to the coefficient scale.
    pub touch: f64,
    /// Optimality gap targeted by eigenvalue maximization.
    pub opt: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { eig: 1e-12, zero: 1e-8, root: 1e-9, touch: 1e-9, opt: 1e-6 }
    }
}

pub const JACOBI_MAX_SWEEPS: usize = 40;
const ROOT_GRID: usize = 2048;
const BISECT_TOL: f64 = 1e-12;
const MERGE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenResult {
    /// Ascending.
    pub values: Vec<f64>,
    /// Eigenvectors as columns, in the order of `values`.
    pub vectors: Matrix,
}

impl EigenResult {
    pub fn vector(&self, i: usize) -> Vec<f64> {
        self.vectors.column(i)
    }

    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn reconstruct(&self) -> Matrix {
        let d = Matrix::from_diag(&self.values);
        &(&self.vectors * &d) * &self.vectors.transpose()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Inertia {
    pub neg: usize,
    pub zero: usize,
    pub pos: usize,
}

impl Inertia {
    pub fn dim(&self) -> usize {
        self.neg + self.zero + self.pos
    }

    pub fn is_positive_definite(&self) -> bool {
        self.neg == 0 && self.zero == 0
    }

    pub fn is_psd(&self) -> bool {
        self.neg == 0
    }
}

pub fn jacobi_eigen(q: &Matrix) -> Result<EigenResult> {
    jacobi_eigen_with(q, Tolerances::default().eig, JACOBI_MAX_SWEEPS)
}

/// Cyclic Jacobi with threshold `tol·‖Q‖_F` on the off-diagonal Frobenius norm.
pub fn jacobi_eigen_with(q: &Matrix, tol: f64, max_sweeps: usize) -> Result<EigenResult> {
    assert!(q.is_square(), "eigendecomposition of a non-square matrix");
    let k = q.rows();
    let mut a = q.symmetrized();
    let mut v = Matrix::identity(k);
    let target = tol * q.frobenius();
    let off = |a: &Matrix| -> f64 {
        let mut s = 0.0;
        for i in 0..k {
            for j in 0..k {
                if i != j {
                    s += a[(i, j)] * a[(i, j)];
                }
            }
        }
        s.sqrt()
    };
    let mut sweeps = 0;
    loop {
        let o = off(&a);
        if o <= target || o == 0.0 {
            break;
        }
        if sweeps == max_sweeps {
            return Err(Error::EigenNonConvergence { sweeps, off: o });
        }
        sweeps += 1;
        for p in 0..k {
            for r in (p + 1)..k {
                let apr = a[(p, r)];
                if apr == 0.0 {
                    continue;
                }
                let theta = (a[(r, r)] - a[(p, p)]) / (2.0 * apr);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for i in 0..k {
                    let aip = a[(i, p)];
                    let air = a[(i, r)];
                    a[(i, p)] = c * aip - s * air;
                    a[(i, r)] = s * aip + c * air;
                }
                for j in 0..k {
                    let apj = a[(p, j)];
                    let arj = a[(r, j)];
                    a[(p, j)] = c * apj - s * arj;
                    a[(r, j)] = s * apj + c * arj;
                }
                a[(p, r)] = 0.0;
                a[(r, p)] = 0.0;
                for i in 0..k {
                    let vip = v[(i, p)];
                    let vir = v[(i, r)];
                    v[(i, p)] = c * vip - s * vir;
                    v[(i, r)] = s * vip + c * vir;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]));
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let vectors = Matrix::from_fn(k, k, |i, j| v[(i, order[j])]);
    Ok(EigenResult { values, vectors })
}

/// Smallest eigenvalue with its unit eigenvector.
pub fn min_eigenpair(q: &Matrix) -> Result<(f64, Vec<f64>)> {
    let e = jacobi_eigen(q)?;
    Ok((e.values[0], e.vector(0)))
}

pub fn min_eig(q: &Matrix) -> Result<f64> {
    Ok(jacobi_eigen(q)?.values[0])
}

pub fn inertia(q: &Matrix) -> Result<Inertia> {
    inertia_with(q, Tolerances::default().zero)
}

/// Eigenvalue signs with zero band `±tol·max(1, ‖Q‖_F)`.
pub fn inertia_with(q: &Matrix, tol: f64) -> Result<Inertia> {
    let e = jacobi_eigen(q)?;
    Ok(inertia_of_values(&e.values, tol * q.frobenius().max(1.0)))
}

pub fn inertia_of_values(values: &[f64], band: f64) -> Inertia {
    let mut out = Inertia { neg: 0, zero: 0, pos: 0 };
    for &l in values {
        if l < -band {
            out.neg += 1;
        } else if l > band {
            out.pos += 1;
        } else {
            out.zero += 1;
        }
    }
    out
}

/// Eigenvalues λ with `A v = λ B v` for positive definite B, ascending, with
/// B-orthonormal eigenvectors.
pub fn generalized_eigen(a: &Matrix, b: &Matrix) -> Result<EigenResult> {
    let l = b.cholesky().ok_or(Error::NotPositiveDefinite)?;
    let linv = l.inverse(1e-14).ok_or(Error::NotPositiveDefinite)?;
    let c = a.congruence(&linv.transpose()).symmetrized();
    let e = jacobi_eigen(&c)?;
    Ok(EigenResult { values: e.values, vectors: &linv.transpose() * &e.vectors })
}

/// Moore–Penrose pseudo-inverse of a symmetric matrix, dropping eigenvalues
/// within `tol·max(1, ‖Q‖_F)`.
pub fn symmetric_pinv(q: &Matrix, tol: f64) -> Result<Matrix> {
    let e = jacobi_eigen(q)?;
    let band = tol * q.frobenius().max(1.0);
    let d: Vec<f64> = e.values.iter().map(|&l| if l.abs() > band { 1.0 / l } else { 0.0 }).collect();
    Ok((&(&e.vectors * &Matrix::from_diag(&d)) * &e.vectors.transpose()).symmetrized())
}

/// A real root of a pencil determinant in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PencilRoot {
    pub alpha: f64,
    /// Tangential root detected without a sign change.
    pub even: bool,
    /// Two or more numerically indistinguishable roots were merged here.
    pub merged: bool,
}

/// `p(α) = det(αQ1 + (1 − α)Q2)` on [0, 1] with its roots there.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyRealRoots {
    /// Monomial coefficients in α, constant term first.
    pub coefficients: Vec<f64>,
    /// Chebyshev coefficients in `t = 2α − 1`.
    pub chebyshev: Vec<f64>,
    pub roots_in_01: Vec<PencilRoot>,
    /// Dimension of the common kernel removed before the determinant was taken.
    pub deflated: usize,
    /// Largest absolute monomial coefficient, the reference for residual bounds.
    pub scale: f64,
}

impl PolyRealRoots {
    pub fn eval(&self, alpha: f64) -> f64 {
        clenshaw(&self.chebyshev, 2.0 * alpha - 1.0)
    }

    pub fn roots(&self) -> Vec<f64> {
        self.roots_in_01.iter().map(|r| r.alpha).collect()
    }
}

fn clenshaw(c: &[f64], t: f64) -> f64 {
    let mut b1 = 0.0;
    let mut b2 = 0.0;
    for &ck in c.iter().skip(1).rev() {
        let b0 = 2.0 * t * b1 - b2 + ck;
        b2 = b1;
        b1 = b0;
    }
    t * b1 - b2 + c.first().copied().unwrap_or(0.0)
}

fn chebyshev_derivative(c: &[f64]) -> Vec<f64> {
    let n = c.len();
    if n <= 1 {
        return vec![0.0];
    }
    let mut d = vec![0.0; n];
    for k in (0..n - 1).rev() {
        d[k] = d.get(k + 2).copied().unwrap_or(0.0) + 2.0 * (k as f64 + 1.0) * c[k + 1];
    }
    d[0] *= 0.5;
    d.truncate(n - 1);
    d
}

fn chebyshev_to_monomial_01(c: &[f64]) -> Vec<f64> {
    // T_j(2α − 1) expanded in powers of α.
    let n = c.len();
    let mut out = vec![0.0; n.max(1)];
    let mut prev = vec![1.0];
    let mut cur = vec![-1.0, 2.0];
    for (j, &cj) in c.iter().enumerate() {
        let tj: &[f64] = if j == 0 { &prev } else { &cur };
        for (i, v) in tj.iter().enumerate() {
            out[i] += cj * v;
        }
        if j >= 1 {
            let mut next = vec![0.0; cur.len() + 1];
            for (i, v) in cur.iter().enumerate() {
                next[i] -= 2.0 * v;
                next[i + 1] += 4.0 * v;
            }
            for (i, v) in prev.iter().enumerate() {
                next[i] -= v;
            }
            prev = std::mem::replace(&mut cur, next);
        }
    }
    out
}

fn pencil(q1: &Matrix, q2: &Matrix, alpha: f64) -> Matrix {
    let mut m = q2.scale(1.0 - alpha);
    m.add_scaled(alpha, q1);
    m
}

/// Orthonormal basis (as columns) of the complement of the common kernel of
/// `q1` and `q2`, or `None` when there is no common kernel.
fn common_range(q1: &Matrix, q2: &Matrix) -> Result<Option<Matrix>> {
    let m = &(&q1.transpose() * q1) + &(&q2.transpose() * q2);
    let e = jacobi_eigen(&m)?;
    let top = e.values.last().copied().unwrap_or(0.0);
    let keep: Vec<usize> = (0..e.values.len()).filter(|&i| e.values[i] > 1e-20 * top.max(1e-300)).collect();
    if keep.len() == e.values.len() {
        return Ok(None);
    }
    Ok(Some(Matrix::from_columns(&keep.iter().map(|&i| e.vector(i)).collect::<Vec<_>>())))
}

pub fn pencil_det_poly(q1: &Matrix, q2: &Matrix) -> Result<PolyRealRoots> {
    pencil_det_poly_with(q1, q2, &Tolerances::default())
}

pub fn pencil_det_poly_with(q1: &Matrix, q2: &Matrix, tol: &Tolerances) -> Result<PolyRealRoots> {
    if q1.rows() != q2.rows() || !q1.is_square() || !q2.is_square() {
        return Err(Error::DimensionMismatch { expected: q1.rows(), found: q2.rows() });
    }
    let poly = interpolate(q1, q2, 0);
    if !poly.chebyshev.iter().all(|&c| c.abs() <= vanishing_bound(q1, q2)) {
        return Ok(find_roots(poly, q1, q2, tol));
    }
    match common_range(q1, q2)? {
        Some(w) if w.cols() > 0 => {
            let r1 = q1.congruence(&w).symmetrized();
            let r2 = q2.congruence(&w).symmetrized();
            let poly = interpolate(&r1, &r2, q1.rows() - w.cols());
            if poly.chebyshev.iter().all(|&c| c.abs() <= vanishing_bound(&r1, &r2)) {
                return Err(Error::PencilSingular);
            }
            Ok(find_roots(poly, &r1, &r2, tol))
        }
        _ => Err(Error::PencilSingular),
    }
}

fn vanishing_bound(q1: &Matrix, q2: &Matrix) -> f64 {
    let k = q1.rows() as i32;
    let s = q1.frobenius().max(q2.frobenius());
    1e-13 * s.powi(k).max(f64::MIN_POSITIVE)
}

fn interpolate(q1: &Matrix, q2: &Matrix, deflated: usize) -> PolyRealRoots {
    let k = q1.rows();
    let nodes = k + 1;
    let values: Vec<f64> = (0..nodes)
        .map(|j| {
            let t = ((2 * j + 1) as f64 * std::f64::consts::PI / (2 * nodes) as f64).cos();
            pencil(q1, q2, 0.5 * (t + 1.0)).determinant()
        })
        .collect();
    let mut cheb = vec![0.0; nodes];
    for (i, ci) in cheb.iter_mut().enumerate() {
        let mut s = 0.0;
        for (j, v) in values.iter().enumerate() {
            let arg = i as f64 * (2 * j + 1) as f64 * std::f64::consts::PI / (2 * nodes) as f64;
            s += v * arg.cos();
        }
        *ci = s * 2.0 / nodes as f64;
    }
    cheb[0] *= 0.5;
    let coefficients = chebyshev_to_monomial_01(&cheb);
    let scale = coefficients.iter().fold(0.0f64, |m, c| m.max(c.abs())).max(f64::MIN_POSITIVE);
    PolyRealRoots { coefficients, chebyshev: cheb, roots_in_01: Vec::new(), deflated, scale }
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let mut flo = f(lo);
    while hi - lo > BISECT_TOL {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn find_roots(mut poly: PolyRealRoots, q1: &Matrix, q2: &Matrix, tol: &Tolerances) -> PolyRealRoots {
    let scale = poly.scale;
    let cheb = poly.chebyshev.clone();
    let deriv = chebyshev_derivative(&cheb);
    let p = |a: f64| clenshaw(&cheb, 2.0 * a - 1.0);
    let dp = |a: f64| clenshaw(&deriv, 2.0 * a - 1.0);
    let grid: Vec<f64> = (0..=ROOT_GRID).map(|i| i as f64 / ROOT_GRID as f64).collect();
    let vals: Vec<f64> = grid.iter().map(|&a| p(a)).collect();
    let mut roots: Vec<PencilRoot> = Vec::new();

    for (end, a) in [(0usize, 0.0), (ROOT_GRID, 1.0)] {
        let direct = pencil(q1, q2, a).determinant();
        if direct.abs() <= tol.root * scale || vals[end] == 0.0 {
            roots.push(PencilRoot { alpha: a, even: false, merged: false });
        }
    }
    for i in 0..ROOT_GRID {
        let (a, b) = (vals[i], vals[i + 1]);
        if a == 0.0 && i > 0 {
            roots.push(PencilRoot { alpha: grid[i], even: false, merged: false });
        } else if a * b < 0.0 {
            roots.push(PencilRoot { alpha: bisect(p, grid[i], grid[i + 1]), even: false, merged: false });
        }
    }
    for i in 1..ROOT_GRID {
        let (l, c, r) = (vals[i - 1], vals[i], vals[i + 1]);
        let same_sign = (l > 0.0 && c > 0.0 && r > 0.0) || (l < 0.0 && c < 0.0 && r < 0.0);
        if !same_sign || c.abs() > l.abs() || c.abs() > r.abs() {
            continue;
        }
        let (lo, hi) = (grid[i - 1], grid[i + 1]);
        let cand = if dp(lo) * dp(hi) < 0.0 { bisect(dp, lo, hi) } else { grid[i] };
        if p(cand).abs() <= tol.touch * scale {
            roots.push(PencilRoot { alpha: cand, even: true, merged: false });
        }
    }
    // Rounding near a multiple root can split it into sign changes up to
    // ~sqrt(eps) away; snap those to the nearby stationary point.
    for r in roots.iter_mut() {
        if r.even || r.alpha == 0.0 || r.alpha == 1.0 {
            continue;
        }
        let (lo, hi) = ((r.alpha - 1e-5).max(0.0), (r.alpha + 1e-5).min(1.0));
        if dp(lo) * dp(hi) < 0.0 {
            let s = bisect(dp, lo, hi);
            if p(s).abs() <= tol.touch * scale && (s - r.alpha).abs() > BISECT_TOL {
                r.alpha = s;
            }
        }
    }
    roots.retain(|r| (0.0..=1.0).contains(&r.alpha));
    roots.sort_by(|a, b| a.alpha.total_cmp(&b.alpha));
    let mut merged: Vec<PencilRoot> = Vec::new();
    for r in roots {
        match merged.last_mut() {
            Some(last) if (r.alpha - last.alpha).abs() < MERGE_TOL => {
                // Endpoints stay exact; otherwise keep the first representative.
                if r.alpha == 0.0 || r.alpha == 1.0 {
                    last.alpha = r.alpha;
                }
                last.even |= r.even;
                last.merged = true;
            }
            _ => merged.push(r),
        }
    }
    poly.roots_in_01 = merged;
    poly
}

/// B-orthonormal basis of span(V) by modified Gram–Schmidt with one
/// reorthogonalization pass.
pub fn b_orthonormal_basis(b: &Matrix, vs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    if !b.is_square() {
        return Err(Error::DimensionMismatch { expected: b.rows(), found: b.cols() });
    }
    if !inertia(b)?.is_positive_definite() {
        return Err(Error::NotPositiveDefinite);
    }
    let ip = |x: &[f64], y: &[f64]| b.bilinear(x, y);
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(vs.len());
    for v in vs {
        if v.len() != b.rows() {
            return Err(Error::DimensionMismatch { expected: b.rows(), found: v.len() });
        }
        let orig = ip(v, v).sqrt();
        let mut u = v.clone();
        for _ in 0..2 {
            for q in &out {
                let c = ip(&u, q);
                for (ui, qi) in u.iter_mut().zip(q) {
                    *ui -= c * qi;
                }
            }
        }
        let nu = ip(&u, &u).sqrt();
        if !(nu > 1e-10 * orig) {
            return Err(Error::DependentVectors);
        }
        out.push(u.into_iter().map(|x| x / nu).collect());
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Feasible {
    Simplex,
    UnitBall,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaxMinEigOptions {
    pub iterations: usize,
    pub restarts: usize,
    pub seed: u64,
    /// Refine the best ascent iterate with a log-barrier Newton method.
    pub polish: bool,
}

impl Default for MaxMinEigOptions {
    fn default() -> Self {
        Self { iterations: 5000, restarts: 20, seed: 0x5eed, polish: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxMinEig {
    pub value: f64,
    pub argument: Vec<f64>,
}

fn combination(qs: &[Matrix], w: &[f64]) -> Matrix {
    let k = qs[0].rows();
    let mut m = Matrix::zeros(k, k);
    for (q, &wi) in qs.iter().zip(w) {
        if wi != 0.0 {
            m.add_scaled(wi, q);
        }
    }
    m
}

fn project(w: &mut [f64], feasible: Feasible) {
    match feasible {
        Feasible::UnitBall => {
            let nw = norm(w);
            if nw > 1.0 {
                w.iter_mut().for_each(|x| *x /= nw);
            }
        }
        Feasible::Simplex => {
            let mut u = w.to_vec();
            u.sort_by(|a, b| b.total_cmp(a));
            let mut cum = 0.0;
            let mut theta = 0.0;
            for (j, &uj) in u.iter().enumerate() {
                cum += uj;
                let t = (cum - 1.0) / (j as f64 + 1.0);
                if uj - t > 0.0 {
                    theta = t;
                }
            }
            w.iter_mut().for_each(|x| *x = (*x - theta).max(0.0));
        }
    }
}

/// Approximately maximizes `λ_min(Σ wᵢ Qᵢ)` over the simplex or the unit ball.
pub fn max_min_eig(qs: &[Matrix], feasible: Feasible) -> Result<MaxMinEig> {
    max_min_eig_with(qs, feasible, &MaxMinEigOptions::default())
}

pub fn max_min_eig_with(qs: &[Matrix], feasible: Feasible, opts: &MaxMinEigOptions) -> Result<MaxMinEig> {
    let first = qs.first().ok_or(Error::EmptySystem)?;
    for q in qs {
        if q.rows() != first.rows() || !q.is_square() {
            return Err(Error::DimensionMismatch { expected: first.rows(), found: q.rows() });
        }
    }
    let m = qs.len();
    let scale = qs.iter().map(Matrix::frobenius).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let eta0 = 0.5 / scale;

    let runs: Vec<Result<MaxMinEig>> = (0..opts.restarts.max(1))
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(r as u64));
            let mut w: Vec<f64> = match (r, feasible) {
                (0, Feasible::Simplex) => vec![1.0 / m as f64; m],
                (0, Feasible::UnitBall) => vec![0.0; m],
                (_, Feasible::Simplex) => (0..m).map(|_| -rng.gen::<f64>().ln()).collect(),
                (_, Feasible::UnitBall) => (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            };
            if feasible == Feasible::Simplex {
                let s: f64 = w.iter().sum();
                w.iter_mut().for_each(|x| *x /= s);
            } else {
                project(&mut w, feasible);
            }
            let mut best = MaxMinEig { value: f64::NEG_INFINITY, argument: w.clone() };
            for t in 1..=opts.iterations {
                let (val, v) = min_eigenpair(&combination(qs, &w))?;
                if val > best.value {
                    best = MaxMinEig { value: val, argument: w.clone() };
                }
                let step = eta0 / (t as f64).sqrt();
                for (wi, q) in w.iter_mut().zip(qs) {
                    *wi += step * q.quad(&v);
                }
                project(&mut w, feasible);
            }
            Ok(best)
        })
        .collect();
    let mut best = MaxMinEig { value: f64::NEG_INFINITY, argument: vec![0.0; m] };
    for r in runs {
        let r = r?;
        if r.value > best.value {
            best = r;
        }
    }
    if opts.polish {
        if let Some(p) = barrier_polish(qs, feasible, &best.argument)? {
            if p.value > best.value {
                best = p;
            }
        }
    }
    Ok(best)
}

/// Log-barrier path following for `max t s.t. Σ wᵢQᵢ − tI ≻ 0, w ∈ feasible`.
fn barrier_polish(qs: &[Matrix], feasible: Feasible, start: &[f64]) -> Result<Option<MaxMinEig>> {
    let m = qs.len();
    let k = qs[0].rows();
    // Affine parametrization X(z) = C + Σ z_j G_j with z_0 = t.
    let (c, gens, mut u): (Matrix, Vec<Matrix>, Vec<f64>) = match feasible {
        Feasible::Simplex => {
            if m == 1 {
                let v = min_eig(&qs[0])?;
                return Ok(Some(MaxMinEig { value: v, argument: vec![1.0] }));
            }
            let last = &qs[m - 1];
            let gens = qs[..m - 1].iter().map(|q| q - last).collect();
            let centre = 1.0 / m as f64;
            let u = start[..m - 1].iter().map(|&x| 0.9 * x + 0.1 * centre).collect();
            (last.clone(), gens, u)
        }
        Feasible::UnitBall => {
            let u = start.iter().map(|&x| 0.9 * x).collect();
            (Matrix::zeros(k, k), qs.to_vec(), u)
        }
    };
    let weights = |u: &[f64]| -> Vec<f64> {
        match feasible {
            Feasible::Simplex => {
                let mut w = u.to_vec();
                w.push(1.0 - u.iter().sum::<f64>());
                w
            }
            Feasible::UnitBall => u.to_vec(),
        }
    };
    let x_of = |u: &[f64], t: f64| -> Matrix {
        let mut x = c.clone();
        for (g, &ui) in gens.iter().zip(u) {
            x.add_scaled(ui, g);
        }
        for i in 0..k {
            x[(i, i)] -= t;
        }
        x
    };
    let inside = |u: &[f64]| -> bool {
        match feasible {
            Feasible::Simplex => u.iter().all(|&x| x > 0.0) && u.iter().sum::<f64>() < 1.0,
            Feasible::UnitBall => dot(u, u) < 1.0,
        }
    };
    if !inside(&u) {
        return Ok(None);
    }
    let scale = qs.iter().map(Matrix::frobenius).fold(0.0, f64::max).max(1e-300);
    let mut t = min_eig(&x_of(&u, 0.0))? - 1e-3 * scale;
    let nz = gens.len() + 1;
    let n_terms = (k + nz) as f64;
    let mut mu = scale;
    let barrier = |u: &[f64], t: f64, mu: f64| -> Option<f64> {
        if !inside(u) {
            return None;
        }
        let x = x_of(u, t);
        let l = x.cholesky()?;
        let logdet: f64 = 2.0 * l.diagonal().iter().map(|d| d.ln()).sum::<f64>();
        let extra = match feasible {
            Feasible::Simplex => u.iter().map(|x| x.ln()).sum::<f64>() + (1.0 - u.iter().sum::<f64>()).ln(),
            Feasible::UnitBall => (1.0 - dot(u, u)).ln(),
        };
        Some(t + mu * (logdet + extra))
    };
    while mu * n_terms > 1e-14 * scale {
        for _ in 0..60 {
            let x = x_of(&u, t);
            let Some(xinv) = x.inverse(1e-300) else { break };
            // Generators in z order: t first.
            let mut all: Vec<Matrix> = Vec::with_capacity(nz);
            all.push(Matrix::identity(k).scale(-1.0));
            all.extend(gens.iter().cloned());
            let xg: Vec<Matrix> = all.iter().map(|g| &xinv * g).collect();
            let mut grad = vec![0.0; nz];
            let mut hess = Matrix::zeros(nz, nz);
            for a in 0..nz {
                grad[a] = mu * trace(&xg[a]);
                for b in a..nz {
                    let h = -mu * trace_product(&xg[a], &xg[b]);
                    hess[(a, b)] = h;
                    hess[(b, a)] = h;
                }
            }
            grad[0] += 1.0;
            match feasible {
                Feasible::Simplex => {
                    let s = 1.0 - u.iter().sum::<f64>();
                    for i in 0..u.len() {
                        grad[i + 1] += mu * (1.0 / u[i] - 1.0 / s);
                        for j in 0..u.len() {
                            let mut h = -mu / (s * s);
                            if i == j {
                                h -= mu / (u[i] * u[i]);
                            }
                            hess[(i + 1, j + 1)] += h;
                        }
                    }
                }
                Feasible::UnitBall => {
                    let s = 1.0 - dot(&u, &u);
                    for i in 0..u.len() {
                        grad[i + 1] += -2.0 * mu * u[i] / s;
                        for j in 0..u.len() {
                            let mut h = -4.0 * mu * u[i] * u[j] / (s * s);
                            if i == j {
                                h -= 2.0 * mu / s;
                            }
                            hess[(i + 1, j + 1)] += h;
                        }
                    }
                }
            }
            let neg_grad: Vec<f64> = grad.iter().map(|g| -g).collect();
            let Some(dz) = hess.solve(&neg_grad, 1e-300) else { break };
            let decrement = -dot(&grad, &dz);
            if !(decrement > 1e-18) {
                break;
            }
            let f0 = barrier(&u, t, mu).unwrap_or(f64::NEG_INFINITY);
            let mut step = 1.0;
            let mut moved = false;
            while step > 1e-12 {
                let nu: Vec<f64> = u.iter().zip(&dz[1..]).map(|(a, d)| a + step * d).collect();
                let nt = t + step * dz[0];
                if let Some(f1) = barrier(&nu, nt, mu) {
                    if f1 >= f0 + 0.25 * step * dot(&grad, &dz) {
                        u = nu;
                        t = nt;
                        moved = true;
                        break;
                    }
                }
                step *= 0.5;
            }
            if !moved || decrement < 1e-14 {
                break;
            }
        }
        mu *= 0.2;
    }
    let w = weights(&u);
    let value = min_eig(&combination(qs, &w))?;
    Ok(Some(MaxMinEig { value, argument: w }))
}

fn trace(m: &Matrix) -> f64 {
    m.diagonal().iter().sum()
}

fn trace_product(a: &Matrix, b: &Matrix) -> f64 {
    let k = a.rows();
    let mut s = 0.0;
    for i in 0..k {
        for j in 0..k {
            s += a[(i, j)] * b[(j, i)];
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_of_diagonal_is_permutation() {
        let e = jacobi_eigen(&Matrix::from_diag(&[3.0, 1.0, 2.0])).unwrap();
        assert_eq!(e.values, vec![1.0, 2.0, 3.0]);
        for j in 0..3 {
            let col = e.vector(j);
            assert_eq!(col.iter().filter(|v| v.abs() == 1.0).count(), 1);
        }
    }

    #[test]
    fn eigen_two_by_two() {
        let e = jacobi_eigen(&Matrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]])).unwrap();
        assert!((e.values[0] - 1.0).abs() < 1e-14);
        assert!((e.values[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn inertia_basic() {
        assert_eq!(inertia(&Matrix::identity(3)).unwrap(), Inertia { neg: 0, zero: 0, pos: 3 });
        assert_eq!(
            inertia(&Matrix::from_diag(&[1.0, -1.0, -1.0])).unwrap(),
            Inertia { neg: 2, zero: 0, pos: 1 }
        );
    }

    #[test]
    fn identity_pencil_has_no_roots() {
        let p = pencil_det_poly(&Matrix::identity(3), &Matrix::identity(3)).unwrap();
        assert!(p.roots_in_01.is_empty());
        assert!((p.coefficients[0] - 1.0).abs() < 1e-12);
        assert!(p.coefficients[1..].iter().all(|c| c.abs() < 1e-12));
    }

    #[test]
    fn linear_pencil_root() {
        let p = pencil_det_poly(&Matrix::from_diag(&[1.0, -1.0]), &Matrix::identity(2)).unwrap();
        assert_eq!(p.roots_in_01.len(), 1);
        assert!((p.roots_in_01[0].alpha - 0.5).abs() < 1e-11);
        assert!(!p.roots_in_01[0].even);
    }

    #[test]
    fn tangential_root_is_flagged() {
        let q1 = Matrix::from_rows(&[vec![-1.0, 0.0, 0.5], vec![0.0, 0.0, 0.0], vec![0.5, 0.0, 0.0]]);
        let q2 = Matrix::from_diag(&[1.0, 1.0, -1.0]);
        let p = pencil_det_poly(&q1, &q2).unwrap();
        let want = [-1.0, 4.0, -5.25, 2.25];
        for (c, w) in p.coefficients.iter().zip(want) {
            assert!((c - w).abs() < 1e-12, "{:?}", p.coefficients);
        }
        assert_eq!(p.roots_in_01.len(), 2, "{:?}", p.roots_in_01);
        assert!((p.roots_in_01[0].alpha - 2.0 / 3.0).abs() < 1e-6);
        assert!(p.roots_in_01[0].even);
        assert_eq!(p.roots_in_01[1].alpha, 1.0);
    }

    #[test]
    fn common_kernel_is_deflated() {
        let q1 = Matrix::from_diag(&[1.0, -1.0, 0.0]);
        let q2 = Matrix::from_diag(&[1.0, 1.0, 0.0]);
        let p = pencil_det_poly(&q1, &q2).unwrap();
        assert_eq!(p.deflated, 1);
        assert_eq!(p.roots_in_01.len(), 1);
        assert!((p.roots_in_01[0].alpha - 0.5).abs() < 1e-11);
        assert_eq!(pencil_det_poly(&Matrix::zeros(2, 2), &Matrix::zeros(2, 2)), Err(Error::PencilSingular));
    }

    #[test]
    fn b_orthonormal_scaling() {
        let u = b_orthonormal_basis(&Matrix::from_diag(&[4.0, 1.0]), &[vec![1.0, 0.0]]).unwrap();
        assert_eq!(u, vec![vec![0.5, 0.0]]);
        assert_eq!(
            b_orthonormal_basis(&Matrix::from_diag(&[1.0, -1.0]), &[vec![1.0, 0.0]]),
            Err(Error::NotPositiveDefinite)
        );
        assert_eq!(
            b_orthonormal_basis(&Matrix::identity(2), &[vec![1.0, 1.0], vec![2.0, 2.0]]),
            Err(Error::DependentVectors)
        );
    }

    #[test]
    fn max_min_eig_trivial_cases() {
        let opts = MaxMinEigOptions { iterations: 200, restarts: 3, ..Default::default() };
        let r = max_min_eig_with(&[Matrix::identity(3)], Feasible::Simplex, &opts).unwrap();
        assert!((r.value - 1.0).abs() < 1e-12);
        assert_eq!(r.argument, vec![1.0]);

        let qs = [Matrix::from_diag(&[1.0, -1.0]), Matrix::from_diag(&[-1.0, 1.0])];
        let r = max_min_eig_with(&qs, Feasible::Simplex, &opts).unwrap();
        assert!(r.value.abs() < 1e-9, "{r:?}");
        assert!((r.argument[0] - 0.5).abs() < 1e-6);
    }

    #[test]
    fn chebyshev_conversion_roundtrip() {
        // T_2(2α − 1) = 8α² − 8α + 1
        let m = chebyshev_to_monomial_01(&[0.0, 0.0, 1.0]);
        assert_eq!(m, vec![1.0, -8.0, 8.0]);
        let d = chebyshev_derivative(&[0.0, 0.0, 1.0]);
        // d/dt T_2 = 4t = 4 T_1
        assert_eq!(d, vec![0.0, 4.0]);
    }
}
