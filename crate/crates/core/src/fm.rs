//! Fourier–Motzkin elimination with strictness flags and multiplier tracking.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Cap on intermediate rows in a single elimination step.
pub const ROW_CAP: usize = 1_000_000;
const COEF_TOL: f64 = 1e-12;
const RHS_TOL: f64 = 1e-10;

/// `coef · z ≤ rhs` (or `<` when strict). `mult` records the nonnegative
/// combination of the seed rows that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub coef: Vec<f64>,
    pub rhs: f64,
    pub strict: bool,
    pub mult: Vec<f64>,
}

impl Row {
    pub fn new(coef: Vec<f64>, rhs: f64, strict: bool) -> Self {
        Self { coef, rhs, strict, mult: vec![] }
    }

    /// Seed row `k` of `total`, tracked by a unit multiplier.
    pub fn seed(coef: Vec<f64>, rhs: f64, strict: bool, k: usize, total: usize) -> Self {
        let mut mult = vec![0.0; total];
        mult[k] = 1.0;
        Self { coef, rhs, strict, mult }
    }

    fn scale(&mut self, s: f64) {
        self.coef.iter_mut().for_each(|c| *c *= s);
        self.rhs *= s;
        self.mult.iter_mut().for_each(|c| *c *= s);
    }

    /// Rescale so the largest coefficient (or the rhs for empty rows) is 1.
    fn normalize(&mut self) {
        self.coef.iter_mut().for_each(|c| {
            if c.abs() < COEF_TOL {
                *c = 0.0
            }
        });
        let s = self.coef.iter().fold(0.0f64, |a, c| a.max(c.abs()));
        if s > 0.0 {
            self.scale(1.0 / s);
        } else if self.rhs.abs() > 0.0 {
            self.scale(1.0 / self.rhs.abs());
        }
    }

    fn is_trivial(&self) -> bool {
        self.coef.iter().all(|&c| c == 0.0)
    }

    fn consistent(&self) -> bool {
        if self.strict {
            self.rhs > RHS_TOL
        } else {
            self.rhs >= -RHS_TOL
        }
    }

    pub fn satisfied(&self, z: &[f64], tol: f64) -> bool {
        let lhs: f64 = self.coef.iter().zip(z).map(|(a, b)| a * b).sum();
        if self.strict {
            lhs < self.rhs + tol
        } else {
            lhs <= self.rhs + tol
        }
    }

    fn combine(pos: &Row, neg: &Row, k: usize) -> Row {
        let (a, b) = (pos.coef[k], -neg.coef[k]);
        let coef = pos.coef.iter().zip(&neg.coef).map(|(p, q)| b * p + a * q).collect();
        let mult = pos.mult.iter().zip(&neg.mult).map(|(p, q)| b * p + a * q).collect();
        let mut r = Row { coef, rhs: b * pos.rhs + a * neg.rhs, strict: pos.strict || neg.strict, mult };
        r.coef[k] = 0.0;
        r.normalize();
        r
    }
}

/// Duplicate removal keeping the tightest rhs per direction.
fn dedupe(rows: &mut Vec<Row>) {
    rows.sort_by(|a, b| {
        a.coef
            .iter()
            .zip(&b.coef)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.rhs.total_cmp(&b.rhs))
            .then(b.strict.cmp(&a.strict))
    });
    rows.dedup_by(|later, kept| {
        if !later.coef.iter().zip(&kept.coef).all(|(x, y)| (x - y).abs() <= 1e-12) {
            return false;
        }
        // Near-equal directions need not sort by rhs.
        if later.rhs < kept.rhs || (later.rhs == kept.rhs && later.strict && !kept.strict) {
            std::mem::swap(later, kept);
        }
        true
    });
}

/// Eliminates variable `k`; rows free of it pass through.
pub fn eliminate(rows: &[Row], k: usize) -> Result<Vec<Row>> {
    let (mut pos, mut neg, mut out) = (vec![], vec![], vec![]);
    for r in rows {
        if r.coef[k] > 0.0 {
            pos.push(r);
        } else if r.coef[k] < 0.0 {
            neg.push(r);
        } else {
            out.push(r.clone());
        }
    }
    let total = out.len() + pos.len() * neg.len();
    if total > ROW_CAP {
        return Err(Error::EliminationBlowup { rows: total });
    }
    for p in &pos {
        for q in &neg {
            out.push(Row::combine(p, q, k));
        }
    }
    let mut kept = Vec::with_capacity(out.len());
    for r in out {
        if r.is_trivial() {
            if !r.consistent() {
                kept.push(r);
            }
        } else {
            kept.push(r);
        }
    }
    dedupe(&mut kept);
    Ok(kept)
}

/// Linear system with equalities and (possibly strict) inequalities.
#[derive(Debug, Clone, Default)]
pub struct LinearSystem {
    pub vars: usize,
    pub eq: Vec<(Vec<f64>, f64)>,
    pub ineq: Vec<Row>,
}

impl LinearSystem {
    pub fn new(vars: usize) -> Self {
        Self { vars, ..Default::default() }
    }

    pub fn le(&mut self, coef: Vec<f64>, rhs: f64) -> &mut Self {
        self.ineq.push(Row::new(coef, rhs, false));
        self
    }

    pub fn lt(&mut self, coef: Vec<f64>, rhs: f64) -> &mut Self {
        self.ineq.push(Row::new(coef, rhs, true));
        self
    }

    pub fn eq(&mut self, coef: Vec<f64>, rhs: f64) -> &mut Self {
        self.eq.push((coef, rhs));
        self
    }

    /// A feasible point, or `None` when infeasible.
    pub fn solve(&self) -> Result<Option<Vec<f64>>> {
        let n = self.vars;
        // Gauss–Jordan on the equalities: x_p = r − Σ_free c x_free.
        let mut eq: Vec<Vec<f64>> = self
            .eq
            .iter()
            .map(|(c, r)| {
                let mut row = c.clone();
                row.push(*r);
                row
            })
            .collect();
        let mut pivots: Vec<(usize, usize)> = Vec::new();
        let mut r = 0;
        for col in 0..n {
            let Some(p) = (r..eq.len()).max_by(|&a, &b| eq[a][col].abs().total_cmp(&eq[b][col].abs())) else {
                break;
            };
            let scale = eq.iter().flat_map(|row| row[..n].iter()).fold(0.0f64, |a, v| a.max(v.abs())).max(1.0);
            if eq[p][col].abs() <= 1e-12 * scale {
                continue;
            }
            eq.swap(r, p);
            let piv = eq[r][col];
            eq[r].iter_mut().for_each(|v| *v /= piv);
            for i in 0..eq.len() {
                if i != r {
                    let f = eq[i][col];
                    if f != 0.0 {
                        for j in 0..=n {
                            eq[i][j] -= f * eq[r][j];
                        }
                    }
                }
            }
            pivots.push((r, col));
            r += 1;
        }
        for row in &eq[r..] {
            if row[n].abs() > RHS_TOL {
                return Ok(None);
            }
        }
        let is_pivot: Vec<bool> = (0..n).map(|c| pivots.iter().any(|p| p.1 == c)).collect();
        let free: Vec<usize> = (0..n).filter(|&c| !is_pivot[c]).collect();
        // Substitute into the inequalities over the free variables.
        let mut rows: Vec<Row> = self
            .ineq
            .iter()
            .map(|row| {
                let mut coef = vec![0.0; free.len()];
                let mut rhs = row.rhs;
                for (fi, &c) in free.iter().enumerate() {
                    coef[fi] = row.coef[c];
                }
                for &(pr, pc) in &pivots {
                    let a = row.coef[pc];
                    if a != 0.0 {
                        rhs -= a * eq[pr][n];
                        for (fi, &c) in free.iter().enumerate() {
                            coef[fi] -= a * eq[pr][c];
                        }
                    }
                }
                let mut out = Row::new(coef, rhs, row.strict);
                out.normalize();
                out
            })
            .collect();
        let Some(z) = fm_point(&mut rows, free.len())? else {
            return Ok(None);
        };
        let mut x = vec![0.0; n];
        for (fi, &c) in free.iter().enumerate() {
            x[c] = z[fi];
        }
        for &(pr, pc) in &pivots {
            x[pc] = eq[pr][n] - free.iter().map(|&c| eq[pr][c] * x[c]).sum::<f64>();
        }
        Ok(Some(x))
    }

    pub fn feasible(&self) -> Result<bool> {
        Ok(self.solve()?.is_some())
    }
}

/// FM elimination of every variable followed by back-substitution.
fn fm_point(rows: &mut Vec<Row>, vars: usize) -> Result<Option<Vec<f64>>> {
    let mut stages = Vec::with_capacity(vars + 1);
    let mut cur: Vec<Row> = rows.drain(..).filter(|r| !r.is_trivial() || !r.consistent()).collect();
    dedupe(&mut cur);
    for k in (0..vars).rev() {
        let next = eliminate(&cur, k)?;
        stages.push(cur);
        cur = next;
    }
    if cur.iter().any(|r| r.is_trivial() && !r.consistent()) {
        return Ok(None);
    }
    // stages[s] still contains variables 0..=vars-1-s.
    let mut z = vec![0.0; vars];
    for (s, stage) in stages.iter().enumerate().rev() {
        let k = vars - 1 - s;
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        for r in stage {
            let a = r.coef[k];
            if a == 0.0 {
                continue;
            }
            let rest: f64 = (0..k).map(|j| r.coef[j] * z[j]).sum();
            let bound = (r.rhs - rest) / a;
            if a > 0.0 {
                hi = hi.min(bound);
            } else {
                lo = lo.max(bound);
            }
        }
        z[k] = match (lo.is_finite(), hi.is_finite()) {
            (true, true) => 0.5 * (lo + hi),
            (true, false) => lo + 1.0,
            (false, true) => hi - 1.0,
            (false, false) => 0.0,
        };
    }
    Ok(Some(z))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_point() {
        let mut s = LinearSystem::new(1);
        s.lt(vec![1.0], 2.0).lt(vec![-1.0], -1.0);
        let x = s.solve().unwrap().unwrap();
        assert!(x[0] > 1.0 && x[0] < 2.0);
    }

    #[test]
    fn strict_touch_infeasible() {
        let mut s = LinearSystem::new(1);
        s.lt(vec![1.0], 1.0).le(vec![-1.0], -1.0);
        assert!(!s.feasible().unwrap());
        let mut s = LinearSystem::new(1);
        s.le(vec![1.0], 1.0).le(vec![-1.0], -1.0);
        assert_eq!(s.solve().unwrap(), Some(vec![1.0]));
    }

    #[test]
    fn equalities_then_inequalities() {
        // x + y = 1, x ≥ 0, y ≥ 0, x − y ≥ 0.5
        let mut s = LinearSystem::new(2);
        s.eq(vec![1.0, 1.0], 1.0).le(vec![-1.0, 0.0], 0.0).le(vec![0.0, -1.0], 0.0).le(vec![-1.0, 1.0], -0.5);
        let x = s.solve().unwrap().unwrap();
        assert!((x[0] + x[1] - 1.0).abs() < 1e-12 && x[0] - x[1] >= 0.5 - 1e-12 && x[1] >= -1e-12);
        s.le(vec![1.0, 0.0], 0.7);
        assert!(!s.feasible().unwrap());
    }

    #[test]
    fn near_duplicate_keeps_tightest() {
        let mut rows = vec![
            Row::new(vec![1.0 - 1e-16, 0.0], 0.9, false),
            Row::new(vec![1.0, 0.0], -0.3, false),
        ];
        dedupe(&mut rows);
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].rhs, -0.3);
    }

    #[test]
    fn inconsistent_equalities() {
        let mut s = LinearSystem::new(2);
        s.eq(vec![1.0, 1.0], 1.0).eq(vec![2.0, 2.0], 3.0);
        assert!(!s.feasible().unwrap());
    }
}
