//! Aggregation classification, pairwise pencil analysis, support reduction
//! and enumeration of a finite hull description.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::certificates::TripleWitnessTable;
use crate::error::{Error, Result};
use crate::linalg::{dot, norm, Matrix};
use crate::oracle::HullVerdict;
use crate::qform::{AggregationWeights, QuadraticFunction, QuadraticSystem};
use crate::symlin::{self, Inertia, PencilRoot, Tolerances};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SccKind {
    Psd,
    OneNegative,
    ManyNegative,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SccClassification {
    pub kind: SccKind,
    pub inertia: Inertia,
    /// Unit eigenvector of the negative eigenvalue, oriented so its last
    /// nonzero-ish coordinate is positive. Present iff one-negative.
    pub split_normal: Option<Vec<f64>>,
    pub q: Matrix,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Component {
    Plus,
    Minus,
    Outside,
}

pub fn classify(q: &Matrix) -> Result<SccClassification> {
    classify_with(q, Tolerances::default().zero)
}

pub fn classify_with(q: &Matrix, zero_tol: f64) -> Result<SccClassification> {
    let e = symlin::jacobi_eigen(q)?;
    let inertia = symlin::inertia_of_values(&e.values, zero_tol * q.frobenius().max(1.0));
    let kind = match inertia.neg {
        0 => SccKind::Psd,
        1 => SccKind::OneNegative,
        _ => SccKind::ManyNegative,
    };
    let split_normal = (kind == SccKind::OneNegative).then(|| {
        let mut u = e.vector(0);
        let k = u.len();
        let pivot = if u[k - 1].abs() > 1e-12 { k - 1 } else { u.iter().position(|v| v.abs() > 1e-12).unwrap_or(0) };
        if u[pivot] < 0.0 {
            u.iter_mut().for_each(|v| *v = -*v);
        }
        u
    });
    Ok(SccClassification { kind, inertia, split_normal, q: q.clone() })
}

/// Side of the split hyperplane for `x̂ = (x, 1)`.
pub fn component_of(scc: &SccClassification, x: &[f64]) -> Result<Component> {
    let u = scc.split_normal.as_ref().ok_or(Error::WrongKind)?;
    let mut xh = x.to_vec();
    xh.push(1.0);
    if scc.q.quad(&xh) >= 0.0 {
        return Ok(Component::Outside);
    }
    Ok(if dot(u, &xh) >= 0.0 { Component::Plus } else { Component::Minus })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GoodnessStatus {
    Good,
    NotGood,
    PsdEmpty,
    ManyNegative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Side {
    Plus,
    Minus,
    /// `A_λ ⪰ 0`: the affine slice of the cone is a single convex set.
    Single,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoodnessVerdict {
    pub status: GoodnessStatus,
    pub side: Option<Side>,
    /// For not-good: one sample from each component.
    pub witnesses: Vec<Vec<f64>>,
    pub samples_used: usize,
}

/// Sample evidence against which goodness is judged.
#[derive(Debug, Clone, Copy)]
pub struct Evidence<'a> {
    pub points: &'a [Vec<f64>],
    /// Points of T (closed inequalities) may sit on the boundary of `S_λ`;
    /// those on the split hyperplane are neutral.
    pub closed: bool,
}

impl<'a> Evidence<'a> {
    pub fn open(points: &'a [Vec<f64>]) -> Self {
        Self { points, closed: false }
    }

    pub fn closed(points: &'a [Vec<f64>]) -> Self {
        Self { points, closed: true }
    }
}

/// Monte-Carlo goodness: not-good is certain, good is evidence.
pub fn is_good(sys: &QuadraticSystem, lambda: &AggregationWeights, ev: Evidence<'_>) -> Result<GoodnessVerdict> {
    if lambda.len() != sys.m() {
        return Err(Error::DimensionMismatch { expected: sys.m(), found: lambda.len() });
    }
    if ev.points.is_empty() {
        return Err(Error::SamplingFailed { draws: 0 });
    }
    let lam = lambda.normalized();
    let q = sys.aggregate_matrix(lam.as_slice());
    let scc = classify(&q)?;
    let mut verdict = GoodnessVerdict { status: GoodnessStatus::Good, side: None, witnesses: vec![], samples_used: 0 };
    match scc.kind {
        SccKind::Psd => {
            verdict.status = GoodnessStatus::PsdEmpty;
            return Ok(verdict);
        }
        SccKind::ManyNegative => {
            verdict.status = GoodnessStatus::ManyNegative;
            return Ok(verdict);
        }
        SccKind::OneNegative => {}
    }
    let u = scc.split_normal.as_ref().unwrap();
    let n = sys.n();
    let a_part = Matrix::from_fn(n, n, |i, j| q[(i, j)]);
    let single = symlin::min_eig(&a_part)? >= -Tolerances::default().zero * a_part.frobenius().max(1.0);
    let scale = q.frobenius().max(1.0);
    let mut plus: Option<&Vec<f64>> = None;
    let mut minus: Option<&Vec<f64>> = None;
    for x in ev.points {
        let mut xh = x.clone();
        xh.push(1.0);
        let val = q.quad(&xh);
        let s = dot(u, &xh) / norm(&xh);
        if ev.closed {
            if val > 1e-6 * scale * dot(&xh, &xh) || s.abs() <= 1e-6 {
                continue;
            }
        } else if val >= 0.0 {
            continue;
        }
        verdict.samples_used += 1;
        if s > 0.0 {
            plus.get_or_insert(x);
        } else {
            minus.get_or_insert(x);
        }
        if plus.is_some() && minus.is_some() {
            break;
        }
    }
    match (plus, minus) {
        (Some(p), Some(m)) => {
            verdict.status = GoodnessStatus::NotGood;
            verdict.witnesses = vec![p.clone(), m.clone()];
        }
        (p, _) => {
            verdict.side = Some(if single {
                Side::Single
            } else if p.is_some() {
                Side::Plus
            } else {
                Side::Minus
            });
        }
    }
    Ok(verdict)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PencilCell {
    pub lo: f64,
    pub hi: f64,
    /// Negative eigenvalue count at the cell midpoint, or at the point for a
    /// degenerate cell.
    pub nu: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PencilAnalysis {
    pub pair: (usize, usize),
    pub gevs: Vec<PencilRoot>,
    /// Closed maximal intervals of [0, 1] where ν(αQ_i + (1 − α)Q_j) = 1.
    pub intervals: Vec<[f64; 2]>,
    pub n_c: usize,
    /// Open cells between consecutive GEVs plus degenerate cells at isolated
    /// GEVs with ν = 1.
    pub cells: Vec<PencilCell>,
    /// More than two intervals were found.
    pub anomaly: bool,
    pub deflated: usize,
}

fn pencil_at(qi: &Matrix, qj: &Matrix, alpha: f64) -> Matrix {
    let mut m = qj.scale(1.0 - alpha);
    m.add_scaled(alpha, qi);
    m
}

pub fn pencil_analysis(sys: &QuadraticSystem, i: usize, j: usize) -> Result<PencilAnalysis> {
    if i == j || i >= sys.m() || j >= sys.m() {
        return Err(Error::Precondition(format!("pencil pair ({i}, {j}) must be two distinct constraints")));
    }
    let qi = sys.constraint(i).homogenize().q;
    let qj = sys.constraint(j).homogenize().q;
    let poly = symlin::pencil_det_poly(&qi, &qj)?;
    let nu = |a: f64| -> Result<usize> { Ok(symlin::inertia(&pencil_at(&qi, &qj, a))?.neg) };

    let mut breaks = vec![0.0];
    breaks.extend(poly.roots().into_iter().filter(|&r| r > 0.0 && r < 1.0));
    breaks.push(1.0);
    let mut open_cells = Vec::new();
    for w in breaks.windows(2) {
        if w[1] > w[0] {
            open_cells.push(PencilCell { lo: w[0], hi: w[1], nu: nu(0.5 * (w[0] + w[1]))? });
        }
    }
    // Runs of ν = 1 cells, merged across shared GEVs.
    let mut intervals: Vec<[f64; 2]> = Vec::new();
    for c in open_cells.iter().filter(|c| c.nu == 1) {
        match intervals.last_mut() {
            Some(last) if last[1] == c.lo => last[1] = c.hi,
            _ => intervals.push([c.lo, c.hi]),
        }
    }
    let mut cells = open_cells.clone();
    for r in poly.roots() {
        let covered = intervals.iter().any(|iv| iv[0] <= r && r <= iv[1]);
        if !covered && nu(r)? == 1 {
            intervals.push([r, r]);
            cells.push(PencilCell { lo: r, hi: r, nu: 1 });
        }
    }
    intervals.sort_by(|a, b| a[0].total_cmp(&b[0]));
    cells.sort_by(|a, b| a.lo.total_cmp(&b.lo).then(a.hi.total_cmp(&b.hi)));
    let n_c = intervals.len();
    Ok(PencilAnalysis {
        pair: (i, j),
        gevs: poly.roots_in_01,
        intervals,
        n_c,
        cells,
        anomaly: n_c > 2,
        deflated: poly.deflated,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairEndpoint {
    pub alpha: f64,
    pub lambda: AggregationWeights,
}

/// Outermost endpoints of the good part of the ν = 1 region of the pair,
/// judging goodness on every cell.
pub fn pairwise_endpoints(
    sys: &QuadraticSystem,
    i: usize,
    j: usize,
    ev: Evidence<'_>,
) -> Result<(PencilAnalysis, Vec<PairEndpoint>)> {
    let analysis = pencil_analysis(sys, i, j)?;
    let m = sys.m();
    let mut kept: Vec<(f64, f64)> = Vec::new();
    for c in analysis.cells.iter().filter(|c| c.nu == 1) {
        let mid = 0.5 * (c.lo + c.hi);
        let v = is_good(sys, &AggregationWeights::pair(m, i, j, mid), ev)?;
        if v.status == GoodnessStatus::Good {
            kept.push((c.lo, c.hi));
        }
    }
    let Some(lo) = kept.iter().map(|k| k.0).min_by(f64::total_cmp) else {
        return Ok((analysis, vec![]));
    };
    let hi = kept.iter().map(|k| k.1).max_by(f64::total_cmp).unwrap();
    let mut out = vec![PairEndpoint { alpha: lo, lambda: AggregationWeights::pair(m, i, j, lo) }];
    if hi > lo {
        out.push(PairEndpoint { alpha: hi, lambda: AggregationWeights::pair(m, i, j, hi) });
    }
    Ok((analysis, out))
}

/// `λ′ = λ + θ` for PSD `Q_θ`, with the Weyl and inclusion checks asserted.
pub fn improve(
    sys: &QuadraticSystem,
    lambda: &AggregationWeights,
    theta: &[f64],
    samples: &[Vec<f64>],
) -> Result<AggregationWeights> {
    if theta.len() != sys.m() {
        return Err(Error::DimensionMismatch { expected: sys.m(), found: theta.len() });
    }
    let mut next: Vec<f64> = lambda.as_slice().iter().zip(theta).map(|(a, b)| a + b).collect();
    for (index, v) in next.iter_mut().enumerate() {
        if *v < 0.0 {
            if *v > -1e-12 {
                *v = 0.0;
            } else {
                return Err(Error::LeavesOrthant { index });
            }
        }
    }
    let qt = sys.aggregate_matrix(theta);
    let min_eig = symlin::min_eig(&qt)?;
    if min_eig < -Tolerances::default().zero * qt.frobenius().max(1.0) {
        return Err(Error::NotPsdDirection { min_eig });
    }
    let next = AggregationWeights::new(next)?;
    let before = symlin::inertia(&sys.aggregate_matrix(lambda.as_slice()))?.neg;
    let after = symlin::inertia(&sys.aggregate_matrix(next.as_slice()))?.neg;
    if after > before {
        return Err(Error::WeylViolation { before, after });
    }
    let f_old = sys.combine(lambda.as_slice());
    let f_new = sys.combine(next.as_slice());
    for x in samples {
        let (a, b) = (f_new.eval(x), f_old.eval(x));
        if a < 0.0 && b >= 0.0 {
            return Err(Error::PostCheckFailed(format!("sample {x:?} lies in S_λ′ but not in S_λ")));
        }
    }
    Ok(next)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionStep {
    pub triple: [usize; 3],
    pub direction: Vec<f64>,
    pub alpha0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportReduction {
    pub lambda: AggregationWeights,
    pub steps: Vec<ReductionStep>,
    pub kind: SccKind,
}

/// Repeated min-ratio steps along triple PDLC directions until the support
/// has at most two elements.
pub fn support_reduce(
    sys: &QuadraticSystem,
    lambda: &AggregationWeights,
    table: &TripleWitnessTable,
) -> Result<SupportReduction> {
    let m = sys.m();
    if lambda.len() != m {
        return Err(Error::DimensionMismatch { expected: m, found: lambda.len() });
    }
    let mut lam = lambda.as_slice().to_vec();
    let mut steps = Vec::new();
    loop {
        let support: Vec<usize> = (0..m).filter(|&i| lam[i] > 0.0).collect();
        if support.len() <= 2 {
            break;
        }
        let mut chosen = None;
        'search: for a in 0..support.len() {
            for b in (a + 1)..support.len() {
                for c in (b + 1)..support.len() {
                    let t = [support[a], support[b], support[c]];
                    if let Some(w) = table.get(t[0], t[1], t[2]) {
                        chosen = Some((t, w));
                        break 'search;
                    }
                }
            }
        }
        let Some((t, w)) = chosen else {
            return Err(Error::MissingTripleWitness { support });
        };
        let mut v = vec![0.0; m];
        for (idx, &coef) in t.iter().zip(&w) {
            v[*idx] = coef;
        }
        if v.iter().all(|&x| x >= 0.0) {
            return Err(Error::Precondition(
                "nonnegative PDLC direction on the support: S is empty".into(),
            ));
        }
        if parallel(&lam, &v) {
            v = perturb(sys, &t, &v)?;
        }
        let alpha0 = t
            .iter()
            .filter(|&&i| v[i] < 0.0)
            .map(|&i| lam[i] / -v[i])
            .fold(f64::INFINITY, f64::min);
        let dir: Vec<f64> = v.iter().map(|x| alpha0 * x).collect();
        let next = improve(sys, &AggregationWeights::new(lam.clone())?, &dir, &[])?;
        lam = next.into_vec();
        // Coordinates hit exactly by the min-ratio rule.
        for &i in &t {
            if v[i] < 0.0 && (lam[i] / -v[i]).abs() <= 1e-12 * alpha0.max(1.0) {
                lam[i] = 0.0;
            }
        }
        steps.push(ReductionStep { triple: t, direction: v, alpha0 });
        if steps.len() > m {
            return Err(Error::PostCheckFailed("support reduction did not terminate".into()));
        }
    }
    let lambda = AggregationWeights::new(lam)?;
    let kind = classify(&sys.aggregate_matrix(lambda.normalized().as_slice()))?.kind;
    Ok(SupportReduction { lambda, steps, kind })
}

fn parallel(a: &[f64], b: &[f64]) -> bool {
    let (na, nb) = (norm(a), norm(b));
    na > 0.0 && nb > 0.0 && (dot(a, b).abs() / (na * nb) - 1.0).abs() < 1e-12
}

fn perturb(sys: &QuadraticSystem, t: &[usize; 3], v: &[f64]) -> Result<Vec<f64>> {
    for k in 0..3 {
        let mut w = v.to_vec();
        w[t[k]] += 1e-6 * norm(v);
        if symlin::min_eig(&sys.aggregate_matrix(&w))? > Tolerances::default().zero {
            return Ok(w);
        }
    }
    Err(Error::MissingTripleWitness { support: t.to_vec() })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    PairwiseEndpoint,
    SphereFormula,
    DiagonalFacet,
    User,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregationRecord {
    /// Normalized to ‖λ‖₁ = 1.
    pub lambda: Vec<f64>,
    pub provenance: Provenance,
    pub kind: SccKind,
    pub inertia: Inertia,
    pub pair: Option<(usize, usize)>,
    pub alpha: Option<f64>,
}

impl AggregationRecord {
    pub fn new(sys: &QuadraticSystem, lambda: &AggregationWeights, provenance: Provenance) -> Result<Self> {
        let lam = lambda.normalized();
        let c = classify(&sys.aggregate_matrix(lam.as_slice()))?;
        Ok(Self { lambda: lam.into_vec(), provenance, kind: c.kind, inertia: c.inertia, pair: None, alpha: None })
    }

    pub fn function(&self, sys: &QuadraticSystem) -> QuadraticFunction {
        sys.combine(&self.lambda)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HullDescription {
    pub aggregations: Vec<AggregationRecord>,
    pub pencils: Vec<PencilAnalysis>,
    pub pruned: Vec<Vec<f64>>,
    pub warnings: Vec<String>,
    pub verified: Option<HullVerdict>,
}

impl HullDescription {
    pub fn lambdas(&self) -> Vec<Vec<f64>> {
        self.aggregations.iter().map(|a| a.lambda.clone()).collect()
    }

    pub fn functions(&self, sys: &QuadraticSystem) -> Vec<QuadraticFunction> {
        self.aggregations.iter().map(|a| a.function(sys)).collect()
    }

    /// Index of an aggregation matching `lambda` up to positive scaling.
    pub fn position(&self, lambda: &[f64], tol: f64) -> Option<usize> {
        let s: f64 = lambda.iter().sum();
        self.aggregations.iter().position(|a| {
            a.lambda.iter().zip(lambda).all(|(x, y)| (x - y / s).abs() <= tol)
        })
    }
}

/// True when `F(x) < 0` for every x: `A ⪯ 0`, `b ∈ range(A)` and
/// `c − bᵀA⁺b < 0`.
pub fn is_everywhere_negative(f: &QuadraticFunction) -> Result<bool> {
    let tol = Tolerances::default().zero;
    let scale = f.homogenize().q.frobenius().max(1.0);
    let e = symlin::jacobi_eigen(f.a())?;
    if e.values.last().copied().unwrap_or(0.0) > tol * scale {
        return Ok(false);
    }
    let pinv = symlin::symmetric_pinv(f.a(), tol)?;
    let x = pinv.mul_vec(f.b());
    let residual: Vec<f64> = f.a().mul_vec(&x).iter().zip(f.b()).map(|(a, b)| a - b).collect();
    if norm(&residual) > tol * scale {
        return Ok(false);
    }
    let sup = f.c() - dot(f.b(), &x);
    Ok(sup < -tol * scale)
}

/// Union of pairwise endpoints over all pairs, canonicalized, deduplicated
/// and pruned of aggregations with `S_λ = ℝⁿ`.
pub fn enumerate_hull(sys: &QuadraticSystem, ev: Evidence<'_>) -> Result<HullDescription> {
    let m = sys.m();
    let pairs: Vec<(usize, usize)> = (0..m).flat_map(|i| ((i + 1)..m).map(move |j| (i, j))).collect();
    let results: Vec<Result<(PencilAnalysis, Vec<PairEndpoint>)>> =
        pairs.par_iter().map(|&(i, j)| pairwise_endpoints(sys, i, j, ev)).collect();
    let mut desc =
        HullDescription { aggregations: vec![], pencils: vec![], pruned: vec![], warnings: vec![], verified: None };
    for ((i, j), r) in pairs.iter().zip(results) {
        let (analysis, endpoints) = match r {
            Ok(x) => x,
            Err(Error::PencilSingular) => {
                desc.warnings.push(format!("pair ({}, {}) has an identically singular pencil", i + 1, j + 1));
                continue;
            }
            Err(e) => return Err(e),
        };
        if analysis.anomaly {
            desc.warnings.push(format!(
                "pair ({}, {}) shows {} one-negative intervals; at most two are expected",
                i + 1,
                j + 1,
                analysis.n_c
            ));
        }
        desc.pencils.push(analysis);
        for ep in endpoints {
            let mut rec = AggregationRecord::new(sys, &ep.lambda, Provenance::PairwiseEndpoint)?;
            rec.pair = Some((*i, *j));
            rec.alpha = Some(ep.alpha);
            if desc.position(&rec.lambda, 1e-9).is_some() {
                continue;
            }
            if is_everywhere_negative(&rec.function(sys))? {
                desc.pruned.push(rec.lambda);
                continue;
            }
            if rec.kind != SccKind::OneNegative {
                desc.warnings.push(format!(
                    "endpoint {:?} of pair ({}, {}) has {} negative eigenvalues",
                    rec.lambda,
                    i + 1,
                    j + 1,
                    rec.inertia.neg
                ));
                continue;
            }
            desc.aggregations.push(rec);
        }
    }
    Ok(desc)
}
