//! Sampling ground truth: rejection samplers for S and T, certified
//! convex-hull membership, hull verification and Monte-Carlo set comparison.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, norm, sub, Matrix};
use crate::qform::{QuadraticFunction, QuadraticSystem};

const CHUNK: usize = 4096;
const BOX_CAP_DOUBLINGS: u32 = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    /// Initial half-width of the sampling box.
    pub box_half_width: f64,
    /// Box centre; the origin when absent.
    pub center: Option<Vec<f64>>,
    pub seed: u64,
    pub max_draws: usize,
    /// Number of accepted points requested.
    pub samples: usize,
    /// Grow the box while the sampled set reaches its outer shell.
    pub adaptive: bool,
    /// Minimum hit rate for accepting a doubled box.
    pub target_hit_rate: f64,
    /// Relative strictness margin δ_S.
    pub margin: f64,
    /// Points attacked by membership search during hull verification.
    pub attacks: usize,
    /// Line and triple probes per membership query.
    pub member_tries: usize,
    /// S-samples used to build separating functionals.
    pub separation_samples: usize,
    /// Relative separation margin required for a counterexample.
    pub separation_margin: f64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            box_half_width: 1.0,
            center: None,
            seed: 0,
            max_draws: 4_000_000,
            samples: 10_000,
            adaptive: true,
            target_hit_rate: 1e-3,
            margin: 1e-6,
            attacks: 1_000,
            member_tries: 64,
            separation_samples: 1_000,
            separation_margin: 1e-3,
        }
    }
}

impl SamplerConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_samples(mut self, samples: usize) -> Self {
        self.samples = samples;
        self
    }

    fn centre(&self, n: usize) -> Vec<f64> {
        self.center.clone().unwrap_or_else(|| vec![0.0; n])
    }
}

/// Scale used for margins: `max(1, max_i ‖Q_i‖_F)`.
pub fn system_scale(sys: &QuadraticSystem) -> f64 {
    sys.homogenized().iter().map(Matrix::frobenius).fold(1.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    pub points: Vec<Vec<f64>>,
    pub draws: usize,
    pub hit_rate: f64,
    pub center: Vec<f64>,
    pub box_half_width: f64,
}

fn chunk_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn draw_box(rng: &mut ChaCha8Rng, c: &[f64], w: f64) -> Vec<f64> {
    c.iter().map(|ci| ci + w * rng.gen_range(-1.0..1.0)).collect()
}

/// Rejection sampling of `{x : pred(x)}` in an adaptively grown box.
pub fn sample_region<F>(n: usize, cfg: &SamplerConfig, pred: F) -> Result<SampleSet>
where
    F: Fn(&[f64]) -> bool + Sync,
{
    let c = cfg.centre(n);
    let probe = |w: f64, level: u64| -> (Vec<Vec<f64>>, usize) {
        let chunks = 4;
        let hits: Vec<Vec<Vec<f64>>> = (0..chunks)
            .into_par_iter()
            .map(|k| {
                let mut rng = chunk_rng(cfg.seed ^ 0x9e37_79b9, (level << 16) | k as u64);
                (0..CHUNK).map(|_| draw_box(&mut rng, &c, w)).filter(|p| pred(p)).collect()
            })
            .collect();
        (hits.into_iter().flatten().collect(), chunks * CHUNK)
    };
    let cap = cfg.box_half_width * f64::from(1u32 << BOX_CAP_DOUBLINGS);
    let mut w = cfg.box_half_width;
    if cfg.adaptive {
        let mut level = 0u64;
        loop {
            let (hits, _) = probe(w, level);
            level += 1;
            if hits.is_empty() {
                if w * 2.0 > cap {
                    break;
                }
                w *= 2.0;
                continue;
            }
            let reaches_shell =
                hits.iter().any(|p| p.iter().zip(&c).any(|(pi, ci)| (pi - ci).abs() > 0.5 * w));
            if !reaches_shell || w * 2.0 > cap {
                break;
            }
            let (wider, wd) = probe(2.0 * w, level);
            level += 1;
            if (wider.len() as f64) / (wd as f64) < cfg.target_hit_rate {
                break;
            }
            w *= 2.0;
        }
    }
    let mut points = Vec::with_capacity(cfg.samples);
    let mut draws = 0usize;
    let mut hits = 0usize;
    let mut round = 0u64;
    // Fixed batch width keeps the stream independent of the thread count.
    let par = 16usize;
    while points.len() < cfg.samples && draws < cfg.max_draws {
        let batch: Vec<Vec<Vec<f64>>> = (0..par)
            .into_par_iter()
            .map(|k| {
                let mut rng = chunk_rng(cfg.seed, (1 << 40) | (round * par as u64 + k as u64));
                (0..CHUNK).map(|_| draw_box(&mut rng, &c, w)).filter(|p| pred(p)).collect()
            })
            .collect();
        round += 1;
        for chunk in batch {
            draws += CHUNK;
            hits += chunk.len();
            for p in chunk {
                if points.len() < cfg.samples {
                    points.push(p);
                }
            }
            if points.len() >= cfg.samples {
                break;
            }
        }
    }
    if points.is_empty() {
        return Err(Error::SamplingFailed { draws });
    }
    let hit_rate = hits as f64 / draws as f64;
    Ok(SampleSet { points, draws, hit_rate, center: c, box_half_width: w })
}

/// Points with `f_i(x) < −δ_S·scale` for every i.
pub fn sample_s(sys: &QuadraticSystem, cfg: &SamplerConfig) -> Result<SampleSet> {
    let tau = cfg.margin * system_scale(sys);
    sample_region(sys.n(), cfg, |x| sys.constraints().iter().all(|f| f.eval(x) < -tau))
}

/// Points of `T = {f_i ≤ 0}`: rejection samples plus local minimizers of
/// `Σ max(f_i, 0)²` whose largest value is at most `accept`.
pub fn sample_t(sys: &QuadraticSystem, cfg: &SamplerConfig, starts: usize, accept: f64) -> Result<TSampleSet> {
    let rejection = sample_region(sys.n(), cfg, |x| sys.constraints().iter().all(|f| f.eval(x) <= 0.0)).ok();
    let (c, w) = match &rejection {
        Some(s) => (s.center.clone(), s.box_half_width),
        None => (cfg.centre(sys.n()), cfg.box_half_width),
    };
    let minimizers: Vec<Vec<f64>> = (0..starts)
        .into_par_iter()
        .filter_map(|k| {
            let mut rng = chunk_rng(cfg.seed ^ 0x7a11, k as u64);
            let x0 = draw_box(&mut rng, &c, w);
            let x = violation_descent(sys, x0, 300);
            (sys.max_value(&x) <= accept).then_some(x)
        })
        .collect();
    if rejection.is_none() && minimizers.is_empty() {
        return Err(Error::SamplingFailed { draws: cfg.max_draws });
    }
    Ok(TSampleSet {
        points: rejection.as_ref().map(|s| s.points.clone()).unwrap_or_default(),
        minimizers,
        center: c,
        box_half_width: w,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TSampleSet {
    pub points: Vec<Vec<f64>>,
    /// Points reached by violation minimization, possibly on low-dimensional
    /// pieces of T that rejection sampling cannot hit.
    pub minimizers: Vec<Vec<f64>>,
    pub center: Vec<f64>,
    pub box_half_width: f64,
}

impl TSampleSet {
    pub fn all(&self) -> impl Iterator<Item = &Vec<f64>> {
        self.points.iter().chain(&self.minimizers)
    }
}

/// Levenberg–Marquardt on the residuals `max(f_i, 0)`.
pub fn violation_descent(sys: &QuadraticSystem, mut x: Vec<f64>, iters: usize) -> Vec<f64> {
    let n = sys.n();
    let cost = |x: &[f64]| sys.constraints().iter().map(|f| f.eval(x).max(0.0).powi(2)).sum::<f64>();
    let mut mu = 1e-3;
    let mut fx = cost(&x);
    for _ in 0..iters {
        if fx == 0.0 {
            break;
        }
        let mut jtj = Matrix::zeros(n, n);
        let mut jtr = vec![0.0; n];
        for f in sys.constraints() {
            let r = f.eval(&x);
            if r <= 0.0 {
                continue;
            }
            let g = f.gradient(&x);
            for i in 0..n {
                jtr[i] += g[i] * r;
                for j in 0..n {
                    jtj[(i, j)] += g[i] * g[j];
                }
            }
        }
        let mut improved = false;
        for _ in 0..30 {
            let mut m = jtj.clone();
            let d = jtj.diagonal().iter().fold(0.0f64, |a, b| a.max(*b)).max(1e-12);
            for i in 0..n {
                m[(i, i)] += mu * d;
            }
            let Some(step) = m.solve(&jtr, 1e-300) else {
                mu *= 10.0;
                continue;
            };
            let cand: Vec<f64> = x.iter().zip(&step).map(|(a, s)| a - s).collect();
            let fc = cost(&cand);
            if fc < fx {
                x = cand;
                fx = fc;
                mu = (mu * 0.3).max(1e-12);
                improved = true;
                break;
            }
            mu *= 10.0;
        }
        if !improved {
            break;
        }
    }
    x
}

/// Carathéodory certificate: `x = Σ w_k p_k` with every `p_k ∈ S`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MembershipCertificate {
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl MembershipCertificate {
    /// Weights nonnegative summing to one, every point strictly in S and the
    /// combination within 1e−9 of `x`.
    pub fn verify(&self, sys: &QuadraticSystem, x: &[f64]) -> bool {
        if self.points.len() != self.weights.len() || self.points.is_empty() {
            return false;
        }
        if self.weights.iter().any(|&w| !(w >= 0.0)) {
            return false;
        }
        if (self.weights.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return false;
        }
        if !self.points.iter().all(|p| sys.constraints().iter().all(|f| f.eval(p) < 0.0)) {
            return false;
        }
        let mut comb = vec![0.0; x.len()];
        for (p, w) in self.points.iter().zip(&self.weights) {
            for (c, pi) in comb.iter_mut().zip(p) {
                *c += w * pi;
            }
        }
        comb.iter().zip(x).all(|(c, xi)| (c - xi).abs() <= 1e-9 * (1.0 + xi.abs()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum Membership {
    Inside { certificate: MembershipCertificate },
    Unknown,
}

/// Strictly feasible parameters on the line `x + t d` closest to zero on
/// each side, chosen at the middle of feasible segments.
fn line_points(sys: &QuadraticSystem, x: &[f64], d: &[f64], tau: f64) -> (Option<f64>, Option<f64>) {
    let mut breaks = Vec::new();
    let coeffs: Vec<(f64, f64, f64)> = sys
        .constraints()
        .iter()
        .map(|f| (f.a().quad(d), f.a().bilinear(x, d) + dot(f.b(), d), f.eval(x)))
        .collect();
    for &(a, beta, g) in &coeffs {
        if a.abs() > 1e-300 {
            let disc = beta * beta - a * g;
            if disc >= 0.0 {
                let s = disc.sqrt();
                breaks.push((-beta + s) / a);
                breaks.push((-beta - s) / a);
            }
        } else if beta.abs() > 1e-300 {
            breaks.push(-g / (2.0 * beta));
        }
    }
    breaks.push(0.0);
    breaks.retain(|t| t.is_finite());
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let mut cands = Vec::new();
    for w in breaks.windows(2) {
        cands.push(0.5 * (w[0] + w[1]));
    }
    let lo = breaks[0];
    let hi = breaks[breaks.len() - 1];
    cands.push(lo - 1.0f64.max(lo.abs()));
    cands.push(hi + 1.0f64.max(hi.abs()));
    let ok = |t: f64| coeffs.iter().all(|&(a, beta, g)| a * t * t + 2.0 * beta * t + g < -tau);
    let neg = cands.iter().copied().filter(|&t| t < 0.0 && ok(t)).max_by(f64::total_cmp);
    let pos = cands.iter().copied().filter(|&t| t > 0.0 && ok(t)).min_by(f64::total_cmp);
    (neg, pos)
}

fn pair_certificate(x: &[f64], d: &[f64], tn: f64, tp: f64) -> MembershipCertificate {
    let p = |t: f64| -> Vec<f64> { x.iter().zip(d).map(|(a, b)| a + t * b).collect() };
    let wn = tp / (tp - tn);
    MembershipCertificate { points: vec![p(tn), p(tp)], weights: vec![wn, 1.0 - wn] }
}

fn random_direction(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    loop {
        let g: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
        let ng = norm(&g);
        if ng > 0.0 {
            return g.into_iter().map(|v| v / ng).collect();
        }
    }
}

/// One-sided membership search in conv(S): direct check, lines through x,
/// balanced ray simplices, an LP over nearby S-points grown by ascent, then
/// triples through an S-sample.
pub fn hull_member(sys: &QuadraticSystem, x: &[f64], samples: &[Vec<f64>], cfg: &SamplerConfig) -> Membership {
    let tau = cfg.margin * system_scale(sys);
    let finish = |c: MembershipCertificate| -> Membership {
        if c.verify(sys, x) {
            Membership::Inside { certificate: c }
        } else {
            Membership::Unknown
        }
    };
    if sys.constraints().iter().all(|f| f.eval(x) < 0.0) {
        return finish(MembershipCertificate { points: vec![x.to_vec()], weights: vec![1.0] });
    }
    let n = sys.n();
    let mut seed_bits = cfg.seed;
    for v in x {
        seed_bits = seed_bits.rotate_left(7) ^ v.to_bits();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed_bits);
    let tries = cfg.member_tries.max(1);

    let try_line = |y: &[f64], d: &[f64]| -> Option<MembershipCertificate> {
        if let (Some(tn), Some(tp)) = line_points(sys, y, d, tau) {
            Some(pair_certificate(y, d, tn, tp))
        } else {
            None
        }
    };

    for k in 0..tries {
        let d = if !samples.is_empty() && k % 2 == 0 {
            let s = &samples[rng.gen_range(0..samples.len())];
            let d = sub(x, s);
            if norm(&d) == 0.0 {
                continue;
            }
            d
        } else {
            random_direction(&mut rng, n)
        };
        if let Some(c) = try_line(x, &d) {
            if let m @ Membership::Inside { .. } = finish(c) {
                return m;
            }
        }
    }
    // Rays x + t_i d_i with Σ d_i = 0; weights ∝ 1/t_i recombine to x.
    for _ in 0..tries {
        let mut dirs: Vec<Vec<f64>> = (0..n).map(|_| random_direction(&mut rng, n)).collect();
        let last: Vec<f64> = (0..n).map(|j| -dirs.iter().map(|d| d[j]).sum::<f64>()).collect();
        if norm(&last) < 1e-6 {
            continue;
        }
        dirs.push(last);
        let ts: Option<Vec<f64>> = dirs.iter().map(|d| line_points(sys, x, d, tau).1).collect();
        let Some(ts) = ts else {
            continue;
        };
        let inv: Vec<f64> = ts.iter().map(|t| 1.0 / t).collect();
        let total: f64 = inv.iter().sum();
        let points = dirs.iter().zip(&ts).map(|(d, t)| x.iter().zip(d).map(|(a, b)| a + t * b).collect()).collect();
        let weights = inv.iter().map(|w| w / total).collect();
        if let m @ Membership::Inside { .. } = finish(MembershipCertificate { points, weights }) {
            return m;
        }
    }
    if samples.is_empty() {
        return Membership::Unknown;
    }
    // Samples nearest to x plus the first S-points along many rays from x,
    // grown by ascent along the direction that separates x from the pool.
    let dist2 = |p: &[f64]| sub(p, x).iter().map(|v| v * v).sum::<f64>();
    let mut pool: Vec<Vec<f64>> = samples.to_vec();
    pool.sort_by(|a, b| dist2(a).total_cmp(&dist2(b)));
    pool.truncate(64 * n);
    let mut dirs: Vec<Vec<f64>> = (0..2 * n)
        .map(|k| (0..n).map(|j| if j == k / 2 { if k % 2 == 0 { 1.0 } else { -1.0 } } else { 0.0 }).collect())
        .collect();
    dirs.extend((0..64 * n).map(|_| random_direction(&mut rng, n)));
    dirs.extend((0..16 * n).map(|_| sub(&samples[rng.gen_range(0..samples.len())], x)));
    let ok = |p: &[f64]| sys.constraints().iter().all(|f| f.eval(p) < -tau);
    for d in &dirs {
        if let (_, Some(t)) = line_points(sys, x, d, tau) {
            let at = |t: f64| -> Vec<f64> { x.iter().zip(d).map(|(a, b)| a + t * b).collect() };
            let (mut lo, mut hi) = (0.0, t);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if ok(&at(mid)) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            pool.push(at(t));
            pool.push(at(hi));
        }
    }
    for _ in 0..8 * n {
        if let Some(c) = lp_certificate(x, &pool) {
            if let m @ Membership::Inside { .. } = finish(c) {
                return m;
            }
        }
        let Some(p) = nearest_in_hull(x, &pool) else { break };
        let a = sub(x, &p);
        let na = norm(&a);
        if na == 0.0 {
            break;
        }
        let a: Vec<f64> = a.iter().map(|v| v / na).collect();
        let mut order: Vec<usize> = (0..pool.len()).collect();
        order.sort_by(|&u, &v| dot(&a, &pool[v]).total_cmp(&dot(&a, &pool[u])));
        let before = pool.len();
        for k in order.into_iter().take(4) {
            if let Some(y) = barrier_ascent(sys, &a, &pool[k].clone(), tau) {
                if y.iter().all(|v| v.is_finite()) && ok(&y) && dot(&a, &y) > dot(&a, &p) {
                    pool.push(y);
                }
            }
        }
        // No S-point beyond x along a: x is separated locally.
        if pool[before..].iter().all(|y| dot(&a, y) <= dot(&a, x)) {
            break;
        }
    }
    for _ in 0..tries {
        let s = &samples[rng.gen_range(0..samples.len())];
        let dir = sub(x, s);
        if norm(&dir) == 0.0 {
            continue;
        }
        let t: f64 = rng.gen_range(0.05..2.0);
        let y: Vec<f64> = x.iter().zip(&dir).map(|(a, b)| a + t * b).collect();
        for _ in 0..4 {
            let d = random_direction(&mut rng, n);
            if let Some(c) = try_line(&y, &d) {
                let mut points = c.points;
                let mut weights: Vec<f64> = c.weights.iter().map(|w| w / (1.0 + t)).collect();
                points.push(s.clone());
                weights.push(t / (1.0 + t));
                let total: f64 = weights.iter().sum();
                weights.iter_mut().for_each(|w| *w /= total);
                if let m @ Membership::Inside { .. } = finish(MembershipCertificate { points, weights }) {
                    return m;
                }
            }
        }
    }
    Membership::Unknown
}

/// Basic feasible solution of `Σ w_k s_k = x, Σ w_k = 1, w ≥ 0` over the
/// samples, refined on its support by least squares.
fn lp_certificate(x: &[f64], samples: &[Vec<f64>]) -> Option<MembershipCertificate> {
    use minilp::{ComparisonOp, OptimizationDirection, Problem};
    let n = x.len();
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let vars: Vec<_> = samples.iter().map(|_| lp.add_var(0.0, (0.0, f64::INFINITY))).collect();
    for j in 0..n {
        let row: Vec<_> = vars.iter().zip(samples).map(|(&v, s)| (v, s[j])).collect();
        lp.add_constraint(row.as_slice(), ComparisonOp::Eq, x[j]);
    }
    let ones: Vec<_> = vars.iter().map(|&v| (v, 1.0)).collect();
    lp.add_constraint(ones.as_slice(), ComparisonOp::Eq, 1.0);
    let sol = lp.solve().ok()?;
    let support: Vec<usize> = (0..samples.len()).filter(|&k| sol[vars[k]] > 1e-14).collect();
    let mut weights: Vec<f64> = support.iter().map(|&k| sol[vars[k]]).collect();
    let points: Vec<Vec<f64>> = support.iter().map(|&k| samples[k].clone()).collect();
    // Normal equations on the support with the affine row appended.
    let cols: Vec<Vec<f64>> = points.iter().map(|p| p.iter().copied().chain([1.0]).collect()).collect();
    let m = Matrix::from_columns(&cols);
    let mt = m.transpose();
    let rhs: Vec<f64> = x.iter().copied().chain([1.0]).collect();
    let gram = Matrix::from_fn(cols.len(), cols.len(), |i, j| dot(&cols[i], &cols[j]));
    if let Some(w) = gram.solve(&mt.mul_vec(&rhs), 1e-14) {
        if w.iter().all(|&v| v >= 0.0) {
            weights = w;
        }
    }
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    Some(MembershipCertificate { points, weights })
}

/// Frank–Wolfe approximation of the point of conv(points) nearest to x.
fn nearest_in_hull(x: &[f64], points: &[Vec<f64>]) -> Option<Vec<f64>> {
    let dist2 = |p: &[f64]| sub(p, x).iter().map(|v| v * v).sum::<f64>();
    let mut p = points.iter().min_by(|a, b| dist2(a).total_cmp(&dist2(b)))?.clone();
    for _ in 0..2000 {
        let g = sub(&p, x);
        let (s, _) = points
            .iter()
            .map(|s| (s, dot(&g, s)))
            .min_by(|a, b| a.1.total_cmp(&b.1))?;
        let ps = sub(&p, s);
        let gap = dot(&g, &ps);
        let pn = dot(&ps, &ps);
        if gap <= 1e-14 * (1.0 + dot(&g, &g)) || pn == 0.0 {
            break;
        }
        let gamma = (gap / pn).clamp(0.0, 1.0);
        for (pi, si) in p.iter_mut().zip(s) {
            *pi += gamma * (si - *pi);
        }
    }
    Some(p)
}

/// Linear functional `aᵀy ≤ offset` valid on the sampled S-points (and on
/// the points reached by local ascent) but violated at x.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparatingFunctional {
    /// Unit normal.
    pub a: Vec<f64>,
    pub offset: f64,
    /// `aᵀx − offset`.
    pub margin: f64,
    /// Number of S-samples the functional was checked against.
    pub against: usize,
}

impl SeparatingFunctional {
    pub fn verify(&self, x: &[f64], samples: &[Vec<f64>]) -> bool {
        dot(&self.a, x) - self.offset >= self.margin * (1.0 - 1e-9)
            && samples.iter().all(|s| dot(&self.a, s) <= self.offset + 1e-12)
    }
}

/// Separates x from conv(samples) via the minimum-norm point (Frank–Wolfe),
/// then raises the offset by local ascent of `aᵀs` over S.
pub fn separate(sys: &QuadraticSystem, x: &[f64], samples: &[Vec<f64>], cfg: &SamplerConfig) -> Option<SeparatingFunctional> {
    if samples.is_empty() {
        return None;
    }
    let p = nearest_in_hull(x, samples)?;
    let a0 = sub(x, &p);
    let na = norm(&a0);
    if na == 0.0 {
        return None;
    }
    let a: Vec<f64> = a0.iter().map(|v| v / na).collect();
    let mut offset = samples.iter().map(|s| dot(&a, s)).fold(f64::NEG_INFINITY, f64::max);
    if dot(&a, x) <= offset {
        return None;
    }

    // Push the best samples further along a while staying inside S.
    let tau = cfg.margin * system_scale(sys);
    let mut order: Vec<&Vec<f64>> = samples.iter().collect();
    order.sort_by(|u, v| dot(&a, v).total_cmp(&dot(&a, u)));
    for start in order.into_iter().take(8) {
        if let Some(s) = barrier_ascent(sys, &a, start, tau) {
            offset = offset.max(dot(&a, &s));
        }
    }
    let margin = dot(&a, x) - offset;
    (margin > 0.0).then_some(SeparatingFunctional { a, offset, margin, against: samples.len() })
}

/// Local maximizer of `aᵀy` over `{f_i(y) + τ < 0}` from a feasible start,
/// by damped Newton steps on a log barrier with decreasing weight.
fn barrier_ascent(sys: &QuadraticSystem, a: &[f64], start: &[f64], tau: f64) -> Option<Vec<f64>> {
    let n = start.len();
    let slack = |y: &[f64]| -> Option<Vec<f64>> {
        let g: Vec<f64> = sys.constraints().iter().map(|f| -(f.eval(y) + tau)).collect();
        g.iter().all(|&v| v > 0.0).then_some(g)
    };
    let psi = |y: &[f64], mu: f64, g: &[f64]| -dot(a, y) / mu - g.iter().map(|v| v.ln()).sum::<f64>();
    let mut y = start.to_vec();
    let mut g = slack(&y)?;
    let mut mu = 1.0;
    while mu > 1e-13 {
        for _ in 0..40 {
            let mut grad: Vec<f64> = a.iter().map(|v| -v / mu).collect();
            let mut h = Matrix::zeros(n, n);
            for (f, &gi) in sys.constraints().iter().zip(&g) {
                let df = f.gradient(&y);
                for (gr, d) in grad.iter_mut().zip(&df) {
                    *gr += d / gi;
                }
                h.add_scaled(2.0 / gi, f.a());
                h.add_scaled(1.0 / (gi * gi), &crate::linalg::outer(&df, &df));
            }
            let mut shift = 0.0;
            let step = loop {
                let mut hs = h.clone();
                hs.add_scaled(shift, &Matrix::identity(n));
                if hs.cholesky().is_some() {
                    if let Some(d) = hs.solve(&grad, 0.0) {
                        break d;
                    }
                }
                shift = if shift == 0.0 { 1e-10 * (1.0 + h.max_abs()) } else { shift * 10.0 };
                if !shift.is_finite() {
                    return Some(y);
                }
            };
            let decrement = dot(&grad, &step);
            if !(decrement > 1e-12) {
                break;
            }
            let here = psi(&y, mu, &g);
            let mut t = 1.0;
            let mut moved = false;
            while t > 1e-12 {
                let cand: Vec<f64> = y.iter().zip(&step).map(|(yi, di)| yi - t * di).collect();
                if let Some(gc) = slack(&cand) {
                    if psi(&cand, mu, &gc) < here - 1e-4 * t * decrement {
                        y = cand;
                        g = gc;
                        moved = true;
                        break;
                    }
                }
                t *= 0.5;
            }
            if !moved {
                break;
            }
        }
        mu *= 0.2;
    }
    Some(y)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HullStatus {
    Consistent,
    CounterexampleInHullNotInAgg,
    CounterexampleInAggNotInHull,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum HullWitness {
    InHullNotInAgg {
        point: Vec<f64>,
        certificate: MembershipCertificate,
        aggregation: usize,
        value: f64,
    },
    InAggNotInHull {
        point: Vec<f64>,
        separation: SeparatingFunctional,
        aggregation_values: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HullVerdict {
    pub status: HullStatus,
    pub witnesses: Vec<HullWitness>,
    pub inside_checked: usize,
    pub attacked: usize,
    pub certified_inside: usize,
    pub unresolved: usize,
}

/// Two-sided sampling test of `conv(S) = ⋂ S_λ` for the given weight vectors.
/// `probes` are attacked before random box points.
pub fn verify_hull(
    sys: &QuadraticSystem,
    lambdas: &[Vec<f64>],
    cfg: &SamplerConfig,
    probes: &[Vec<f64>],
) -> Result<HullVerdict> {
    let aggs: Vec<QuadraticFunction> = lambdas.iter().map(|l| sys.combine(l)).collect();
    let scale = system_scale(sys);
    let samples = sample_s(sys, cfg)?;
    let pts = &samples.points;
    let n = sys.n();
    let mut witnesses = Vec::new();

    // (a) convex combinations of S-samples are in conv(S).
    let inside_checked = cfg.samples;
    let found: Vec<Option<HullWitness>> = (0..inside_checked)
        .into_par_iter()
        .map(|k| {
            let mut rng = chunk_rng(cfg.seed ^ 0xa11, k as u64);
            let r = 1 + rng.gen_range(1..=2usize.min(n).max(1));
            let chosen: Vec<Vec<f64>> = (0..r).map(|_| pts[rng.gen_range(0..pts.len())].clone()).collect();
            let mut w: Vec<f64> = (0..r).map(|_| -rng.gen::<f64>().max(1e-300).ln()).collect();
            let total: f64 = w.iter().sum();
            w.iter_mut().for_each(|v| *v /= total);
            let mut x = vec![0.0; n];
            for (p, wi) in chosen.iter().zip(&w) {
                for (xi, pi) in x.iter_mut().zip(p) {
                    *xi += wi * pi;
                }
            }
            let cert = MembershipCertificate { points: chosen, weights: w };
            aggs.iter().enumerate().find_map(|(i, g)| {
                let v = g.eval(&x);
                (v >= cfg.margin * scale && cert.verify(sys, &x)).then(|| HullWitness::InHullNotInAgg {
                    point: x.clone(),
                    certificate: cert.clone(),
                    aggregation: i,
                    value: v,
                })
            })
        })
        .collect();
    witnesses.extend(found.into_iter().flatten().take(5));

    // (b) points of ⋂ S_λ outside S are attacked.
    let in_aggs = |x: &[f64]| aggs.iter().all(|g| g.eval(x) < -cfg.margin * scale);
    let in_s = |x: &[f64]| sys.constraints().iter().all(|f| f.eval(x) < 0.0);
    let mut targets: Vec<Vec<f64>> = probes.iter().filter(|p| in_aggs(p)).cloned().collect();
    let mut rng = chunk_rng(cfg.seed ^ 0xb0b, 0);
    let w = 1.5 * samples.box_half_width;
    let mut draws = 0;
    while targets.len() < cfg.attacks && draws < 200 * cfg.attacks.max(1) {
        draws += 1;
        let x = draw_box(&mut rng, &samples.center, w);
        if in_aggs(&x) && !in_s(&x) {
            targets.push(x);
        }
    }
    let sep_pts: Vec<Vec<f64>> = pts.iter().take(cfg.separation_samples).cloned().collect();
    let results: Vec<(bool, Option<HullWitness>)> = targets
        .par_iter()
        .map(|x| match hull_member(sys, x, pts, cfg) {
            Membership::Inside { .. } => (true, None),
            Membership::Unknown => match separate(sys, x, &sep_pts, cfg) {
                Some(sep) if sep.margin > cfg.separation_margin * scale => (
                    false,
                    Some(HullWitness::InAggNotInHull {
                        point: x.clone(),
                        separation: sep,
                        aggregation_values: aggs.iter().map(|g| g.eval(x)).collect(),
                    }),
                ),
                _ => (false, None),
            },
        })
        .collect();
    let certified_inside = results.iter().filter(|r| r.0).count();
    let mut unresolved = 0;
    let mut outside = Vec::new();
    for (ok, w) in results {
        match w {
            Some(w) => outside.push(w),
            None if !ok => unresolved += 1,
            None => {}
        }
    }
    let status = if !witnesses.is_empty() {
        HullStatus::CounterexampleInHullNotInAgg
    } else if !outside.is_empty() {
        HullStatus::CounterexampleInAggNotInHull
    } else {
        HullStatus::Consistent
    };
    witnesses.extend(outside.into_iter().take(5));
    Ok(HullVerdict { status, witnesses, inside_checked, attacked: targets.len(), certified_inside, unresolved })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetComparison {
    pub equal: bool,
    /// Points in the first description but outside the second, with margin.
    pub only_in_first: Vec<(Vec<f64>, f64)>,
    pub only_in_second: Vec<(Vec<f64>, f64)>,
    pub draws: usize,
}

/// Symmetric-difference sampling of two strict inequality systems over the
/// configured box (no adaptation).
pub fn set_equal_mc(desc1: &[QuadraticFunction], desc2: &[QuadraticFunction], cfg: &SamplerConfig) -> SetComparison {
    let n = desc1.first().or(desc2.first()).map_or(0, QuadraticFunction::dim);
    let scale = desc1
        .iter()
        .chain(desc2)
        .map(|f| f.homogenize().q.frobenius())
        .fold(1.0, f64::max);
    let delta = cfg.margin * scale;
    let c = cfg.centre(n);
    let chunks = cfg.samples.div_ceil(CHUNK).max(1);
    let parts: Vec<(Vec<(Vec<f64>, f64)>, Vec<(Vec<f64>, f64)>)> = (0..chunks)
        .into_par_iter()
        .map(|k| {
            let mut rng = chunk_rng(cfg.seed ^ 0x5e7, k as u64);
            let mut a = Vec::new();
            let mut b = Vec::new();
            for _ in 0..CHUNK {
                let x = draw_box(&mut rng, &c, cfg.box_half_width);
                let m1 = desc1.iter().map(|f| f.eval(&x)).fold(f64::NEG_INFINITY, f64::max);
                let m2 = desc2.iter().map(|f| f.eval(&x)).fold(f64::NEG_INFINITY, f64::max);
                if m1 < -delta && m2 >= delta {
                    a.push((x, m2.min(-m1)));
                } else if m2 < -delta && m1 >= delta {
                    b.push((x, m1.min(-m2)));
                }
            }
            (a, b)
        })
        .collect();
    let mut only_in_first = Vec::new();
    let mut only_in_second = Vec::new();
    for (a, b) in parts {
        only_in_first.extend(a);
        only_in_second.extend(b);
    }
    let by_margin = |v: &mut Vec<(Vec<f64>, f64)>| {
        v.sort_by(|x, y| y.1.total_cmp(&x.1));
        v.truncate(5);
    };
    let equal = only_in_first.is_empty() && only_in_second.is_empty();
    by_margin(&mut only_in_first);
    by_margin(&mut only_in_second);
    SetComparison { equal, only_in_first, only_in_second, draws: chunks * CHUNK }
}
