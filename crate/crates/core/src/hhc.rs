//! Hidden hyperplane convexity: structural recognizers, the SOC-boundary map
//! and sampling falsifiers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::certificates::{self, CertificateOptions};
use crate::error::{Error, Result};
use crate::linalg::{complement_basis, dot, norm, Matrix};
use crate::qform::{restrict_to_hyperplane, QuadraticSystem};
use crate::symlin::{self, Tolerances};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HhcVerdict {
    HoldsStructural,
    HoldsByM2,
    HoldsByM3Pdlc,
    HoldsBySpan,
    Falsified,
    Unknown,
}

impl HhcVerdict {
    pub fn holds(self) -> bool {
        matches!(self, Self::HoldsStructural | Self::HoldsByM2 | Self::HoldsByM3Pdlc | Self::HoldsBySpan)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum HhcEvidence {
    None,
    /// Indices of at most two constraints spanning all matrices.
    Span { basis: Vec<usize>, dim: usize },
    /// A spanning triple with a positive definite combination.
    Pdlc { triple: Vec<usize>, theta: Vec<f64>, min_eig: f64 },
    Family { family: LinearFactorFamily, theta: Vec<f64> },
    Falsification(FalsificationWitness),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HhcStatus {
    pub verdict: HhcVerdict,
    pub evidence: HhcEvidence,
}

/// `f_0` positive definite and `f_i(x) = ℓ(x)·ℓ_i(x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearFactorFamily {
    pub ell: Vec<f64>,
    pub ells: Vec<Vec<f64>>,
    pub f0_matrix: Matrix,
}

impl LinearFactorFamily {
    /// Symmetric matrix of `x ↦ (aᵀx)(bᵀx)`.
    pub fn product_matrix(a: &[f64], b: &[f64]) -> Matrix {
        Matrix::from_fn(a.len(), a.len(), |i, j| 0.5 * (a[i] * b[j] + a[j] * b[i]))
    }

    pub fn forms(&self) -> Vec<Matrix> {
        self.ells.iter().map(|l| Self::product_matrix(&self.ell, l)).collect()
    }

    /// Largest entry deviation between `targets` and `c_i f_0 + ℓ ℓ_iᵀ`.
    pub fn residual(&self, targets: &[Matrix], f0_coefficients: &[f64]) -> f64 {
        targets
            .iter()
            .zip(self.forms())
            .zip(f0_coefficients)
            .map(|((t, f), &c)| {
                let mut r = t - &f;
                r.add_scaled(-c, &self.f0_matrix);
                r.max_abs()
            })
            .fold(0.0, f64::max)
    }
}

fn span_basis(qs: &[Matrix], tol: f64) -> Vec<usize> {
    let mut basis: Vec<usize> = Vec::new();
    for i in 0..qs.len() {
        let mut cols: Vec<Vec<f64>> = basis.iter().map(|&b| qs[b].svec()).collect();
        cols.push(qs[i].svec());
        if Matrix::from_columns(&cols).column_rank(tol) == cols.len() {
            basis.push(i);
        }
    }
    basis
}

pub fn hhc_structural(qs: &[Matrix]) -> Result<HhcStatus> {
    hhc_structural_with(qs, &CertificateOptions::default())
}

pub fn hhc_structural_of(sys: &QuadraticSystem) -> Result<HhcStatus> {
    hhc_structural(&sys.homogenized())
}

pub fn hhc_structural_with(qs: &[Matrix], opts: &CertificateOptions) -> Result<HhcStatus> {
    if qs.is_empty() {
        return Err(Error::EmptySystem);
    }
    let dim_n = qs[0].rows();
    let basis = span_basis(qs, 1e-10);
    let dim = basis.len();
    if qs.len() <= 2 && dim_n >= 2 {
        return Ok(HhcStatus { verdict: HhcVerdict::HoldsByM2, evidence: HhcEvidence::Span { basis, dim } });
    }
    if dim <= 2 && dim_n >= 2 {
        return Ok(HhcStatus { verdict: HhcVerdict::HoldsBySpan, evidence: HhcEvidence::Span { basis, dim } });
    }
    if dim == 3 && dim_n >= 4 {
        let triple: Vec<Matrix> = basis.iter().map(|&i| qs[i].clone()).collect();
        if let Some(w) = certificates::pdlc_witness_of(&triple, opts)? {
            return Ok(HhcStatus {
                verdict: HhcVerdict::HoldsByM3Pdlc,
                evidence: HhcEvidence::Pdlc { triple: basis, theta: w.theta, min_eig: w.min_eig },
            });
        }
    }
    let spanning: Vec<Matrix> = basis.iter().map(|&i| qs[i].clone()).collect();
    if let Some((family, theta)) = detect_linear_factor_family(&spanning, opts)? {
        let k = rank_of(&family.ells).max(2);
        if dim_n > k + 1 {
            return Ok(HhcStatus {
                verdict: HhcVerdict::HoldsStructural,
                evidence: HhcEvidence::Family { family, theta },
            });
        }
    }
    Ok(HhcStatus { verdict: HhcVerdict::Unknown, evidence: HhcEvidence::None })
}

fn rank_of(vs: &[Vec<f64>]) -> usize {
    if vs.is_empty() {
        return 0;
    }
    Matrix::from_columns(vs).column_rank(1e-9)
}

/// Splits a rank ≤ 2 symmetric matrix into the candidate factor pairs
/// `(ℓ, ℓ')` with `M = sym(ℓ ℓ'ᵀ)`.
fn factor_pairs(r: &Matrix, tol: f64) -> Result<Option<Vec<(Vec<f64>, Vec<f64>)>>> {
    let e = symlin::jacobi_eigen(r)?;
    let band = tol * r.frobenius().max(1.0);
    let nz: Vec<usize> = (0..e.values.len()).filter(|&i| e.values[i].abs() > band).collect();
    match nz.len() {
        0 => Ok(Some(vec![])),
        1 => {
            let u = e.vector(nz[0]);
            let s = e.values[nz[0]];
            Ok(Some(vec![(u.clone(), u.iter().map(|v| v * s).collect())]))
        }
        2 => {
            let (lo, hi) = (nz[0], nz[1]);
            if e.values[lo] >= 0.0 || e.values[hi] <= 0.0 {
                return Ok(None);
            }
            let (a, b) = (e.values[hi].sqrt(), (-e.values[lo]).sqrt());
            let (u, w) = (e.vector(hi), e.vector(lo));
            let p: Vec<f64> = u.iter().zip(&w).map(|(x, y)| a * x + b * y).collect();
            let q: Vec<f64> = u.iter().zip(&w).map(|(x, y)| a * x - b * y).collect();
            Ok(Some(vec![(p.clone(), q.clone()), (q, p)]))
        }
        _ => Ok(None),
    }
}

fn parallel_coeff(a: &[f64], b: &[f64]) -> Option<f64> {
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return None;
    }
    let c = dot(a, b) / (na * nb);
    ((c.abs() - 1.0).abs() <= 1e-8).then(|| dot(a, b) / (na * na))
}

/// Recognizes `span{Q_i} ⊆ span{f_0, ℓℓ_1, …}` with `f_0 ≻ 0`; exact
/// rank-≤2 splits only.
pub fn detect_linear_factor_family(
    qs: &[Matrix],
    opts: &CertificateOptions,
) -> Result<Option<(LinearFactorFamily, Vec<f64>)>> {
    let Some(w) = certificates::pdlc_witness_of(qs, opts)? else {
        return Ok(None);
    };
    let mut f0 = Matrix::zeros(qs[0].rows(), qs[0].cols());
    for (t, q) in w.theta.iter().zip(qs) {
        f0.add_scaled(*t, q);
    }
    let k = f0.rows();
    let tol = 1e-8;
    let mut residuals = Vec::with_capacity(qs.len());
    for q in qs {
        let g = symlin::generalized_eigen(q, &f0)?;
        // An eigenvalue of multiplicity ≥ k − 2.
        let need = k.saturating_sub(2).max(1);
        let mut found = None;
        for s in 0..g.values.len() {
            let c = g.values[s];
            let mult = g.values.iter().filter(|&&v| (v - c).abs() <= tol * c.abs().max(1.0)).count();
            if mult >= need {
                found = Some(c);
                break;
            }
        }
        let Some(c) = found else {
            return Ok(None);
        };
        let mut r = q.clone();
        r.add_scaled(-c, &f0);
        residuals.push(r.symmetrized());
    }
    let mut ell: Option<Vec<f64>> = None;
    let mut pending = Vec::with_capacity(qs.len());
    for r in &residuals {
        let Some(pairs) = factor_pairs(r, tol)? else {
            return Ok(None);
        };
        pending.push(pairs);
    }
    // The common factor must appear in every nonzero split.
    let candidates: Vec<Vec<f64>> = match pending.iter().find(|p| !p.is_empty()) {
        None => vec![],
        Some(p) => p.iter().map(|(l, _)| l.clone()).collect(),
    };
    'cand: for c in &candidates {
        for p in &pending {
            if !p.is_empty() && !p.iter().any(|(l, m)| parallel_coeff(c, l).is_some() || parallel_coeff(c, m).is_some())
            {
                continue 'cand;
            }
        }
        ell = Some(c.clone());
        break;
    }
    let ell = match (ell, candidates.is_empty()) {
        (Some(l), _) => l,
        (None, true) => {
            let mut e = vec![0.0; k];
            e[0] = 1.0;
            e
        }
        (None, false) => return Ok(None),
    };
    let n_ell = norm(&ell);
    let ell: Vec<f64> = ell.iter().map(|v| v / n_ell).collect();
    let mut ells = Vec::with_capacity(qs.len());
    for p in &pending {
        if p.is_empty() {
            ells.push(vec![0.0; k]);
            continue;
        }
        let mut other = None;
        for (l, m) in p {
            if let Some(s) = parallel_coeff(&ell, l) {
                other = Some(m.iter().map(|v| v * s).collect::<Vec<_>>());
                break;
            }
            if let Some(s) = parallel_coeff(&ell, m) {
                other = Some(l.iter().map(|v| v * s).collect::<Vec<_>>());
                break;
            }
        }
        ells.push(other.ok_or(Error::PostCheckFailed("common factor lost".into()))?);
    }
    let family = LinearFactorFamily { ell, ells, f0_matrix: f0.clone() };
    let forms = family.forms();
    for ((q, r), f) in qs.iter().zip(&residuals).zip(&forms) {
        if (r - f).max_abs() > 1e-7 * q.max_abs().max(1.0) {
            return Ok(None);
        }
    }
    Ok(Some((family, w.theta)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizedBasis {
    /// Columns `v_1, …, v_n` with `Pᵀ f_0 P = I`.
    pub p: Matrix,
    /// `ℓ(v_1)`; the transformed ℓ is this multiple of the first coordinate.
    pub ell_scale: f64,
    /// ℓ vanishes identically: the image is a ray.
    pub degenerate: bool,
}

pub fn normalize_pd_family(fam: &LinearFactorFamily) -> Result<NormalizedBasis> {
    let f0 = &fam.f0_matrix;
    let k = f0.rows();
    f0.cholesky().ok_or(Error::NotPositiveDefinite)?;
    if norm(&fam.ell) == 0.0 {
        let std: Vec<Vec<f64>> = (0..k)
            .map(|i| {
                let mut e = vec![0.0; k];
                e[i] = 1.0;
                e
            })
            .collect();
        let cols = symlin::b_orthonormal_basis(f0, &std)?;
        return Ok(NormalizedBasis { p: Matrix::from_columns(&cols), ell_scale: 0.0, degenerate: true });
    }
    let kernel = complement_basis(&fam.ell);
    let kcols: Vec<Vec<f64>> = (0..kernel.cols()).map(|j| kernel.column(j)).collect();
    let rest = symlin::b_orthonormal_basis(f0, &kcols)?;
    let mut v1 = f0.solve(&fam.ell, 1e-14).ok_or(Error::SingularMatrix)?;
    let bn = f0.quad(&v1).sqrt();
    v1.iter_mut().for_each(|v| *v /= bn);
    if dot(&fam.ell, &v1) < 0.0 {
        v1.iter_mut().for_each(|v| *v = -*v);
    }
    let ell_scale = dot(&fam.ell, &v1);
    let mut cols = vec![v1];
    cols.extend(rest);
    Ok(NormalizedBasis { p: Matrix::from_columns(&cols), ell_scale, degenerate: false })
}

/// `x ↦ (Σx_i², x_1x_1, x_1x_2, …, x_1x_n)`.
pub fn soc_map(x: &[f64]) -> Vec<f64> {
    let mut y = Vec::with_capacity(x.len() + 1);
    y.push(dot(x, x));
    y.extend(x.iter().map(|v| x[0] * v));
    y
}

/// A preimage under [`soc_map`] of a point on its image.
pub fn soc_preimage(y: &[f64]) -> Result<Vec<f64>> {
    if y.len() < 3 {
        return Err(Error::DimensionMismatch { expected: 3, found: y.len() });
    }
    let n = y.len() - 1;
    let scale = y.iter().map(|v| v * v).fold(1.0, f64::max);
    let tol = Tolerances::default().zero * scale;
    let lhs = y[0] * y[1];
    let rhs: f64 = y[1..].iter().map(|v| v * v).sum();
    if y[0] < -tol || y[1] < -tol || (lhs - rhs).abs() > tol {
        return Err(Error::OffVariety { residual: (lhs - rhs).abs().max(-y[0].min(y[1]).min(0.0)) });
    }
    let mut x = vec![0.0; n];
    if y[1] > 0.0 {
        let r = y[1].sqrt();
        x[0] = r;
        for i in 1..n {
            x[i] = y[i + 1] / r;
        }
    } else {
        x[1] = y[0].max(0.0).sqrt();
    }
    Ok(x)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FalsificationWitness {
    /// Normal of H in homogenized space; empty for the unrestricted map.
    pub normal: Vec<f64>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// Midpoint of φ(x) and φ(y).
    pub z: Vec<f64>,
    /// Best distance from z to the image found.
    pub residual: f64,
    pub threshold: f64,
    pub closest: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperplaneProbe {
    pub normal: Vec<f64>,
    /// Point pairs, projected onto H before use.
    pub pairs: Vec<[Vec<f64>; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FalsifyConfig {
    pub trials: usize,
    pub restarts: usize,
    pub pairs_per_trial: usize,
    pub seed: u64,
    pub iterations: usize,
    pub probes: Vec<HyperplaneProbe>,
    /// Relative threshold on the image scale.
    pub threshold: f64,
}

impl Default for FalsifyConfig {
    fn default() -> Self {
        Self { trials: 100, restarts: 20, pairs_per_trial: 8, seed: 0, iterations: 200, probes: vec![], threshold: 1e-2 }
    }
}

fn image(rs: &[Matrix], w: &[f64]) -> Vec<f64> {
    rs.iter().map(|r| r.quad(w)).collect()
}

/// Levenberg–Marquardt on `‖(wᵀR_iw)_i − z‖²`.
fn fit(rs: &[Matrix], z: &[f64], mut w: Vec<f64>, iters: usize) -> (Vec<f64>, f64) {
    let k = w.len();
    let res = |w: &[f64]| -> Vec<f64> { image(rs, w).iter().zip(z).map(|(a, b)| a - b).collect() };
    let mut r = res(&w);
    let mut cost = dot(&r, &r);
    let mut mu = 1e-3;
    for _ in 0..iters {
        let jac: Vec<Vec<f64>> = rs.iter().map(|q| q.mul_vec(&w).iter().map(|v| 2.0 * v).collect()).collect();
        let mut jtj = Matrix::zeros(k, k);
        let mut jtr = vec![0.0; k];
        for (row, ri) in jac.iter().zip(&r) {
            for a in 0..k {
                jtr[a] += row[a] * ri;
                for b in 0..k {
                    jtj[(a, b)] += row[a] * row[b];
                }
            }
        }
        let mut improved = false;
        for _ in 0..12 {
            let mut h = jtj.clone();
            let d = (0..k).map(|i| jtj[(i, i)]).fold(0.0, f64::max).max(1e-12);
            for i in 0..k {
                h[(i, i)] += mu * d;
            }
            let Some(step) = h.solve(&jtr, 1e-300) else {
                mu *= 10.0;
                continue;
            };
            let cand: Vec<f64> = w.iter().zip(&step).map(|(a, b)| a - b).collect();
            let rc = res(&cand);
            let cc = dot(&rc, &rc);
            if cc < cost {
                w = cand;
                r = rc;
                improved = cost - cc > 1e-15 * cost.max(1e-300);
                cost = cc;
                mu = (mu / 3.0).max(1e-12);
                break;
            }
            mu *= 10.0;
        }
        if !improved || cost < 1e-28 {
            break;
        }
    }
    (w, cost.sqrt())
}

fn gaussian(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    (0..k).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

/// Best residual over `restarts` starts, scaled to the image of `z`.
fn distance_to_image(rs: &[Matrix], z: &[f64], hints: &[&[f64]], restarts: usize, iters: usize, seed: u64) -> (f64, Vec<f64>) {
    let k = rs[0].rows();
    let zn = norm(z).max(1e-300);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut starts: Vec<Vec<f64>> = Vec::with_capacity(restarts + hints.len());
    for h in hints {
        starts.push(h.to_vec());
    }
    while starts.len() < restarts + hints.len() {
        let g = gaussian(&mut rng, k);
        let s = zn.sqrt() / norm(&g).max(1e-300);
        starts.push(g.iter().map(|v| v * s).collect());
    }
    let fits: Vec<(Vec<f64>, f64)> = starts.into_par_iter().map(|w0| fit(rs, z, w0, iters)).collect();
    let (w, r) = fits.into_iter().fold((vec![], f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
    (r, w)
}

/// Tries the pair `(a, b)` in coordinates of the restricted space.
fn attack_pair(
    rs: &[Matrix],
    w: &Matrix,
    a: &[f64],
    b: &[f64],
    cfg: &FalsifyConfig,
    seed: u64,
) -> Option<(FalsificationWitness, Vec<f64>)> {
    let (pa, pb) = (image(rs, a), image(rs, b));
    let z: Vec<f64> = pa.iter().zip(&pb).map(|(x, y)| 0.5 * (x + y)).collect();
    let scale = norm(&pa).max(norm(&pb));
    if scale == 0.0 {
        return None;
    }
    let threshold = cfg.threshold * scale;
    let (res, best) = distance_to_image(rs, &z, &[], cfg.restarts, cfg.iterations, seed);
    if res <= threshold {
        return None;
    }
    // Re-verification with ten times the starts.
    let (res2, best2) = distance_to_image(rs, &z, &[&best], cfg.restarts * 10, cfg.iterations, seed ^ 0xa5a5);
    if res2 <= threshold {
        return None;
    }
    let (res, best) = if res2 < res { (res2, best2) } else { (res, best) };
    let lift = |v: &[f64]| w.mul_vec(v);
    Some((
        FalsificationWitness {
            normal: vec![],
            x: lift(a),
            y: lift(b),
            z,
            residual: res,
            threshold,
            closest: lift(&best),
        },
        best,
    ))
}

fn hyperplane_search(
    qs: &[Matrix],
    normal: Option<&[f64]>,
    pairs: &[[Vec<f64>; 2]],
    cfg: &FalsifyConfig,
    seed: u64,
) -> Result<Option<FalsificationWitness>> {
    let k = qs[0].rows();
    let w = match normal {
        Some(h) => {
            if h.len() != k {
                return Err(Error::DimensionMismatch { expected: k, found: h.len() });
            }
            complement_basis(h)
        }
        None => Matrix::identity(k),
    };
    let rs: Vec<Matrix> = qs.iter().map(|q| restrict_to_hyperplane(q, &w)).collect::<Result<_>>()?;
    let dim = w.cols();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Coordinates in the basis W by least squares (W has orthonormal columns).
    let coords = |x: &[f64]| -> Vec<f64> { (0..dim).map(|j| dot(&w.column(j), x)).collect() };
    let mut todo: Vec<(Vec<f64>, Vec<f64>)> = pairs.iter().map(|[a, b]| (coords(a), coords(b))).collect();
    let explicit = todo.len();
    for _ in 0..cfg.pairs_per_trial {
        let a = gaussian(&mut rng, dim);
        let b = gaussian(&mut rng, dim);
        let (na, nb) = (norm(&a), norm(&b));
        todo.push((a.iter().map(|v| v / na).collect(), b.iter().map(|v| v / nb).collect()));
    }
    let mut best: Option<FalsificationWitness> = None;
    for (idx, (a, b)) in todo.iter().enumerate() {
        if let Some((mut wit, _)) = attack_pair(&rs, &w, a, b, cfg, seed.wrapping_add(idx as u64 * 7919)) {
            wit.normal = normal.map(<[f64]>::to_vec).unwrap_or_default();
            let better = best.as_ref().is_none_or(|b| wit.residual / wit.threshold > b.residual / b.threshold);
            if better {
                best = Some(wit);
            }
            if idx < explicit {
                break;
            }
        }
    }
    Ok(best)
}

/// Heuristic search for a hyperplane H and a midpoint of two image points
/// of `φ|_H` that lies far from the image.
pub fn hhc_falsify(qs: &[Matrix], cfg: &FalsifyConfig) -> Result<Option<FalsificationWitness>> {
    if qs.is_empty() {
        return Err(Error::EmptySystem);
    }
    let k = qs[0].rows();
    if k < 2 {
        return Ok(None);
    }
    for (pi, probe) in cfg.probes.iter().enumerate() {
        if let Some(w) = hyperplane_search(qs, Some(&probe.normal), &probe.pairs, cfg, cfg.seed ^ (pi as u64) << 32)? {
            return Ok(Some(w));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut normals = Vec::with_capacity(cfg.trials);
    let mut canonical = vec![0.0; k];
    canonical[k - 1] = 1.0;
    normals.push(canonical);
    while normals.len() < cfg.trials.max(1) {
        normals.push(gaussian(&mut rng, k));
    }
    let found: Vec<Option<FalsificationWitness>> = normals
        .par_iter()
        .enumerate()
        .map(|(t, h)| hyperplane_search(qs, Some(h), &[], cfg, cfg.seed.wrapping_add(1 + t as u64)))
        .collect::<Result<_>>()?;
    Ok(found.into_iter().flatten().max_by(|a, b| (a.residual / a.threshold).total_cmp(&(b.residual / b.threshold))))
}

/// The same search for the unrestricted map.
pub fn hidden_convexity_falsify(qs: &[Matrix], cfg: &FalsifyConfig) -> Result<Option<FalsificationWitness>> {
    if qs.is_empty() {
        return Err(Error::EmptySystem);
    }
    let found: Vec<Option<FalsificationWitness>> = (0..cfg.trials.max(1))
        .into_par_iter()
        .map(|t| {
            let c = FalsifyConfig { pairs_per_trial: 1, ..cfg.clone() };
            hyperplane_search(qs, None, &[], &c, cfg.seed.wrapping_add(t as u64))
        })
        .collect::<Result<_>>()?;
    Ok(found.into_iter().flatten().max_by(|a, b| (a.residual / a.threshold).total_cmp(&(b.residual / b.threshold))))
}

/// Structural verdict, replaced by a falsification when one is found.
pub fn hhc_status(qs: &[Matrix], falsify: Option<&FalsifyConfig>) -> Result<HhcStatus> {
    let s = hhc_structural(qs)?;
    if s.verdict.holds() {
        return Ok(s);
    }
    if let Some(cfg) = falsify {
        if let Some(w) = hhc_falsify(qs, cfg)? {
            return Ok(HhcStatus { verdict: HhcVerdict::Falsified, evidence: HhcEvidence::Falsification(w) });
        }
    }
    Ok(s)
}
