//! Aggregation certificates for `S = ∅` and `conv(S) = ℝⁿ`, positive definite
//! linear combinations and recession directions.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, norm, Matrix};
use crate::qform::QuadraticSystem;
use crate::symlin::{self, Feasible, MaxMinEigOptions, Tolerances};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmptinessCertificate {
    /// Normalized to ‖λ‖₁ = 1.
    pub lambda: Vec<f64>,
    /// λ_min(Q_λ) at the normalized λ.
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PdlcWitness {
    /// Normalized to ‖θ‖₂ = 1.
    pub theta: Vec<f64>,
    pub min_eig: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripleEntry {
    pub triple: [usize; 3],
    /// `(p, q, r)` with `pQ_i + qQ_j + rQ_k ≻ 0`.
    pub coefficients: Option<[f64; 3]>,
    pub min_eig: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TripleWitnessTable {
    pub entries: Vec<TripleEntry>,
}

impl TripleWitnessTable {
    /// Witness for the unordered triple, with coefficients permuted to match
    /// the order `(i, j, k)` given.
    pub fn get(&self, i: usize, j: usize, k: usize) -> Option<[f64; 3]> {
        let mut key = [i, j, k];
        key.sort_unstable();
        let e = self.entries.iter().find(|e| e.triple == key)?;
        let c = e.coefficients?;
        let pick = |x: usize| c[key.iter().position(|&y| y == x).unwrap()];
        Some([pick(i), pick(j), pick(k)])
    }

    pub fn failed(&self) -> Vec<[usize; 3]> {
        self.entries.iter().filter(|e| e.coefficients.is_none()).map(|e| e.triple).collect()
    }

    pub fn is_complete(&self) -> bool {
        self.entries.iter().all(|e| e.coefficients.is_some())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecessionWitness {
    /// Unit vector with `vᵀA_iv < 0` for every i.
    pub v: Vec<f64>,
    /// `max_i vᵀA_iv`.
    pub max_curvature: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecessionSearch {
    pub witness: Option<RecessionWitness>,
    /// Weights with `Σλ_iA_i ⪰ 0` (within tolerance), which rule out a
    /// recession direction.
    pub psd_combination: Option<EmptinessCertificate>,
}

/// Whether `conv(S) = ℝⁿ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum RnStatus {
    /// Some `Σλ_iA_i ⪰ 0` with a non-constant aggregation bounds the hull.
    NotRn { lambda: Vec<f64> },
    /// Every point is the midpoint of `x ± Mv`, both in S.
    Rn { witness: RecessionWitness },
    /// No PSD combination of the A-parts exists; the hull is ℝⁿ provided the
    /// homogenized map restricted to the hyperplane at infinity is convex.
    RnUnderHiddenConvexity { best_margin: f64 },
    /// Every PSD combination found aggregates to a negative constant.
    Undetermined { lambda: Vec<f64> },
}

/// Search settings shared by certificate routines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertificateOptions {
    pub tol: Tolerances,
    pub search: MaxMinEigOptions,
    pub recession_restarts: usize,
}

impl Default for CertificateOptions {
    fn default() -> Self {
        Self { tol: Tolerances::default(), search: MaxMinEigOptions::default(), recession_restarts: 100 }
    }
}

pub fn emptiness_certificate(sys: &QuadraticSystem) -> Result<Option<EmptinessCertificate>> {
    emptiness_certificate_with(sys, &CertificateOptions::default())
}

/// A nonzero λ ≥ 0 with `Q_λ ⪰ 0` certifies that `S` is empty. Absence is not
/// a proof of nonemptiness.
pub fn emptiness_certificate_with(
    sys: &QuadraticSystem,
    opts: &CertificateOptions,
) -> Result<Option<EmptinessCertificate>> {
    sys.require_strict()?;
    psd_simplex_combination(&sys.homogenized(), opts)
}

fn psd_simplex_combination(qs: &[Matrix], opts: &CertificateOptions) -> Result<Option<EmptinessCertificate>> {
    let best = symlin::max_min_eig_with(qs, Feasible::Simplex, &opts.search)?;
    if best.value < -opts.tol.zero {
        return Ok(None);
    }
    let s: f64 = best.argument.iter().sum();
    let lambda: Vec<f64> = best.argument.iter().map(|v| v / s).collect();
    let margin = symlin::min_eig(&combine(qs, &lambda))?;
    Ok(Some(EmptinessCertificate { lambda, margin }))
}

pub fn pdlc_witness(sys: &QuadraticSystem) -> Result<Option<PdlcWitness>> {
    pdlc_witness_of(&sys.homogenized(), &CertificateOptions::default())
}

/// Maximizes `λ_min(Σθ_iQ_i)` over the unit ball; a positive optimum is a
/// witness.
pub fn pdlc_witness_of(qs: &[Matrix], opts: &CertificateOptions) -> Result<Option<PdlcWitness>> {
    let best = symlin::max_min_eig_with(qs, Feasible::UnitBall, &opts.search)?;
    if best.value <= opts.tol.zero {
        return Ok(None);
    }
    let nt = norm(&best.argument);
    let theta: Vec<f64> = best.argument.iter().map(|v| v / nt).collect();
    let min_eig = symlin::min_eig(&combine(qs, &theta))?;
    if min_eig <= opts.tol.zero {
        return Ok(None);
    }
    Ok(Some(PdlcWitness { theta, min_eig }))
}

/// Checks a user-supplied direction θ.
pub fn verify_pdlc(sys: &QuadraticSystem, theta: &[f64]) -> Result<Option<PdlcWitness>> {
    if theta.len() != sys.m() {
        return Err(Error::DimensionMismatch { expected: sys.m(), found: theta.len() });
    }
    let nt = norm(theta);
    if nt == 0.0 {
        return Ok(None);
    }
    let theta: Vec<f64> = theta.iter().map(|v| v / nt).collect();
    let min_eig = symlin::min_eig(&sys.aggregate_matrix(&theta))?;
    Ok((min_eig > Tolerances::default().zero).then_some(PdlcWitness { theta, min_eig }))
}

pub fn triple_pdlc_table(sys: &QuadraticSystem) -> Result<TripleWitnessTable> {
    triple_pdlc_table_with(sys, &CertificateOptions::default())
}

pub fn triple_pdlc_table_with(sys: &QuadraticSystem, opts: &CertificateOptions) -> Result<TripleWitnessTable> {
    let m = sys.m();
    if m < 3 {
        return Err(Error::Precondition(format!("triple table needs m ≥ 3, got {m}")));
    }
    let qs = sys.homogenized();
    let mut triples = Vec::new();
    for i in 0..m {
        for j in (i + 1)..m {
            for k in (j + 1)..m {
                triples.push([i, j, k]);
            }
        }
    }
    let entries: Result<Vec<TripleEntry>> = triples
        .into_par_iter()
        .map(|t| {
            let sub = [qs[t[0]].clone(), qs[t[1]].clone(), qs[t[2]].clone()];
            Ok(match pdlc_witness_of(&sub, opts)? {
                Some(w) => TripleEntry {
                    triple: t,
                    coefficients: Some([w.theta[0], w.theta[1], w.theta[2]]),
                    min_eig: w.min_eig,
                },
                None => TripleEntry { triple: t, coefficients: None, min_eig: f64::NAN },
            })
        })
        .collect();
    Ok(TripleWitnessTable { entries: entries? })
}

pub fn recession_direction(sys: &QuadraticSystem) -> Result<RecessionSearch> {
    recession_direction_with(sys, &CertificateOptions::default())
}

/// Multistart projected subgradient descent of `max_i vᵀA_iv` on the unit
/// sphere, reported alongside the search for `Σλ_iA_i ⪰ 0`.
pub fn recession_direction_with(sys: &QuadraticSystem, opts: &CertificateOptions) -> Result<RecessionSearch> {
    let a = sys.quadratic_parts();
    let n = sys.n();
    let scale = a.iter().map(Matrix::frobenius).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let curvature = |v: &[f64]| a.iter().map(|ai| ai.quad(v)).fold(f64::NEG_INFINITY, f64::max);

    let starts: Vec<Vec<f64>> = {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.search.seed ^ 0x00ec_e551_0000);
        let mut s: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let mut e = vec![0.0; n];
                e[i] = 1.0;
                e
            })
            .collect();
        while s.len() < opts.recession_restarts.max(n) {
            let g: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
            let ng = norm(&g);
            if ng > 0.0 {
                s.push(g.into_iter().map(|x| x / ng).collect());
            }
        }
        s
    };
    let best = starts
        .into_par_iter()
        .map(|mut v| {
            let mut best_v = v.clone();
            let mut best_f = curvature(&v);
            for t in 1..=400 {
                let (idx, _) = a
                    .iter()
                    .enumerate()
                    .map(|(i, ai)| (i, ai.quad(&v)))
                    .max_by(|x, y| x.1.total_cmp(&y.1))
                    .unwrap();
                // Tangential part of the gradient 2A_iv.
                let mut g = a[idx].mul_vec(&v);
                let radial = dot(&g, &v);
                for (gi, vi) in g.iter_mut().zip(&v) {
                    *gi -= radial * vi;
                }
                let step = 0.5 / (scale * (t as f64).sqrt());
                for (vi, gi) in v.iter_mut().zip(&g) {
                    *vi -= step * 2.0 * gi;
                }
                let nv = norm(&v);
                v.iter_mut().for_each(|x| *x /= nv);
                let f = curvature(&v);
                if f < best_f {
                    best_f = f;
                    best_v = v.clone();
                }
            }
            (best_f, best_v)
        })
        .reduce(|| (f64::INFINITY, vec![]), |x, y| if y.0 < x.0 { y } else { x });

    let witness = (best.0 < -opts.tol.zero).then_some(RecessionWitness { v: best.1, max_curvature: best.0 });
    let psd_combination = psd_simplex_combination(&a, opts)?;
    Ok(RecessionSearch { witness, psd_combination })
}

/// Step length M with `f_i(x ± Mv) < 0` for every i.
pub fn escape_bound(sys: &QuadraticSystem, x: &[f64], v: &RecessionWitness) -> Result<f64> {
    if x.len() != sys.n() || v.v.len() != sys.n() {
        return Err(Error::DimensionMismatch { expected: sys.n(), found: x.len().min(v.v.len()) });
    }
    let tol = Tolerances::default().zero;
    let mut m = 0.0f64;
    for f in sys.constraints() {
        let a = f.a().quad(&v.v);
        if !(a < -tol) {
            return Err(Error::Precondition(format!("direction has curvature {a:.3e} ≥ 0")));
        }
        let beta = f.a().bilinear(x, &v.v) + dot(f.b(), &v.v);
        let disc = (beta * beta - a * f.eval(x)).max(0.0);
        m = m.max((beta.abs() + disc.sqrt()) / (-a));
    }
    let m = m + 1.0;
    for f in sys.constraints() {
        for s in [1.0, -1.0] {
            let p: Vec<f64> = x.iter().zip(&v.v).map(|(xi, vi)| xi + s * m * vi).collect();
            let val = f.eval(&p);
            if !(val < 0.0) {
                return Err(Error::PostCheckFailed(format!("f(x ± Mv) = {val:.3e} at M = {m:.6e}")));
            }
        }
    }
    Ok(m)
}

pub fn hull_is_rn(sys: &QuadraticSystem) -> Result<RnStatus> {
    hull_is_rn_with(sys, &CertificateOptions::default())
}

/// Classifies `conv(S) = ℝⁿ` for a nonempty S. The negative-constant case is
/// left undetermined.
pub fn hull_is_rn_with(sys: &QuadraticSystem, opts: &CertificateOptions) -> Result<RnStatus> {
    let search = recession_direction_with(sys, opts)?;
    if let Some(w) = search.witness {
        return Ok(RnStatus::Rn { witness: w });
    }
    let Some(cert) = search.psd_combination else {
        let best = symlin::max_min_eig_with(&sys.quadratic_parts(), Feasible::Simplex, &opts.search)?;
        return Ok(RnStatus::RnUnderHiddenConvexity { best_margin: best.value });
    };
    let is_constant = |lambda: &[f64]| {
        let f = sys.combine(lambda);
        let scale = lambda.iter().sum::<f64>().max(1.0);
        f.a().max_abs() <= opts.tol.zero * scale && f.b().iter().all(|b| b.abs() <= opts.tol.zero * scale)
    };
    if !is_constant(&cert.lambda) {
        return Ok(RnStatus::NotRn { lambda: cert.lambda });
    }
    for (i, f) in sys.constraints().iter().enumerate() {
        let mut e = vec![0.0; sys.m()];
        e[i] = 1.0;
        if symlin::min_eig(f.a())? >= -opts.tol.zero && !is_constant(&e) {
            return Ok(RnStatus::NotRn { lambda: e });
        }
    }
    Ok(RnStatus::Undetermined { lambda: cert.lambda })
}

fn combine(qs: &[Matrix], w: &[f64]) -> Matrix {
    let k = qs[0].rows();
    let mut m = Matrix::zeros(k, k);
    for (q, &wi) in qs.iter().zip(w) {
        m.add_scaled(wi, q);
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qform::QuadraticFunction;

    fn quick() -> CertificateOptions {
        CertificateOptions {
            search: MaxMinEigOptions { iterations: 300, restarts: 4, ..Default::default() },
            recession_restarts: 20,
            ..Default::default()
        }
    }

    fn qf(a: &[f64], linear: &[f64], c: f64) -> QuadraticFunction {
        QuadraticFunction::with_linear(Matrix::from_diag(a), linear, c, true).unwrap()
    }

    #[test]
    fn positive_constant_aggregation_is_empty() {
        let sys = QuadraticSystem::new(vec![qf(&[0.0, 0.0], &[1.0, 0.0], 0.0), qf(&[0.0, 0.0], &[-1.0, 0.0], 1.0)])
            .unwrap();
        let cert = emptiness_certificate_with(&sys, &quick()).unwrap().unwrap();
        assert!((cert.lambda[0] - 0.5).abs() < 1e-6, "{cert:?}");
        assert!(cert.margin >= -1e-8);
    }

    #[test]
    fn emptiness_requires_strict() {
        let sys = QuadraticSystem::new(vec![qf(&[1.0], &[0.0], 1.0).with_strict(false)]).unwrap();
        assert!(matches!(emptiness_certificate(&sys), Err(Error::StrictnessMismatch { .. })));
    }

    #[test]
    fn triple_with_identity() {
        let q = |d: &[f64]| qf(d, &[0.0, 0.0], 0.0);
        let sys = QuadraticSystem::new(vec![
            QuadraticFunction::new(
                Matrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]),
                vec![0.0, 0.0],
                -1.0,
                true,
            )
            .unwrap(),
            q(&[-1.0, 2.0]),
            qf(&[1.0, 1.0], &[0.0, 0.0], 1.0),
        ])
        .unwrap();
        let t = triple_pdlc_table_with(&sys, &quick()).unwrap();
        assert_eq!(t.entries.len(), 1);
        let c = t.get(2, 0, 1).unwrap();
        let theta = [c[1], c[2], c[0]];
        assert!(symlin::min_eig(&sys.aggregate_matrix(&theta)).unwrap() > 0.0);
    }

    #[test]
    fn recession_of_negative_identity() {
        let sys = QuadraticSystem::new(vec![qf(&[-1.0, -1.0], &[0.0, 0.0], 0.0)]).unwrap();
        let r = recession_direction_with(&sys, &quick()).unwrap();
        let w = r.witness.unwrap();
        assert!((w.max_curvature + 1.0).abs() < 1e-12);
        assert!(r.psd_combination.is_none());
    }

    #[test]
    fn opposite_saddles_have_no_recession() {
        let sys = QuadraticSystem::new(vec![qf(&[1.0, -1.0], &[0.0, 0.0], 0.0), qf(&[-1.0, 1.0], &[0.0, 0.0], 0.0)])
            .unwrap();
        let r = recession_direction_with(&sys, &quick()).unwrap();
        assert!(r.witness.is_none());
        let c = r.psd_combination.unwrap();
        assert!((c.lambda[0] - 0.5).abs() < 1e-6);
    }

    #[test]
    fn escape_bound_cases() {
        let sys = QuadraticSystem::new(vec![qf(&[-1.0, 0.0], &[0.0, 0.0], 0.0)]).unwrap();
        let v = RecessionWitness { v: vec![1.0, 0.0], max_curvature: -1.0 };
        assert_eq!(escape_bound(&sys, &[0.0, 0.0], &v).unwrap(), 1.0);

        let sys = QuadraticSystem::new(vec![qf(&[-1.0, -1.0], &[0.0, 0.0], 1.0)]).unwrap();
        let m = escape_bound(&sys, &[0.0, 0.0], &v).unwrap();
        assert!(m > 1.0);
        assert_eq!(sys.constraint(0).eval(&[2.0, 0.0]), -3.0);

        let flat = RecessionWitness { v: vec![0.0, 1.0], max_curvature: 0.0 };
        let sys = QuadraticSystem::new(vec![qf(&[-1.0, 0.0], &[0.0, 0.0], 0.0)]).unwrap();
        assert!(matches!(escape_bound(&sys, &[0.0, 0.0], &flat), Err(Error::Precondition(_))));
    }
}
