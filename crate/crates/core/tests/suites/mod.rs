//! Randomized invariants, each over at least 100 seeded cases. Shared by
//! the core property tests and the acceptance runner.

use aggrahull_core::certificates::{self, CertificateOptions, RecessionWitness, TripleEntry, TripleWitnessTable};
use aggrahull_core::engine;
use aggrahull_core::hhc::{self, LinearFactorFamily};
use aggrahull_core::special::{self, OpenPolyhedron};
use aggrahull_core::symlin::MaxMinEigOptions;
use aggrahull_core::{symlin, AggregationWeights, Matrix, QuadraticFunction, QuadraticSystem};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};

fn runner(seed: u8, cases: u32) -> TestRunner {
    let cfg = Config { cases, failure_persistence: None, ..Config::default() };
    TestRunner::new_with_rng(cfg, TestRng::from_seed(RngAlgorithm::ChaCha, &[seed; 32]))
}

fn symmetric(k: usize) -> impl Strategy<Value = Matrix> {
    prop::collection::vec(-2.0f64..2.0, k * k).prop_map(move |v| {
        let m = Matrix::from_fn(k, k, |i, j| v[i * k + j]);
        m.symmetrized()
    })
}

/// Householder reflection `I − 2uuᵀ/‖u‖²`.
fn reflector(u: &[f64]) -> Matrix {
    let nn: f64 = u.iter().map(|x| x * x).sum();
    Matrix::from_fn(u.len(), u.len(), |i, j| if i == j { 1.0 } else { 0.0 } - 2.0 * u[i] * u[j] / nn)
}

/// Characteristic polynomial `det(tI − M)` by Faddeev–LeVerrier, leading
/// coefficient first.
fn char_poly(m: &Matrix) -> Vec<f64> {
    let k = m.rows();
    let mut c = vec![1.0];
    let mut mk = Matrix::zeros(k, k);
    for step in 1..=k {
        // M_k = M·M_{k−1} + c_{k−1} I, c_k = −tr(M·M_k)/k.
        let prev = *c.last().unwrap();
        let mut next = m * &mk;
        for i in 0..k {
            next[(i, i)] += prev;
        }
        let am = m * &next;
        let tr: f64 = (0..k).map(|i| am[(i, i)]).sum();
        c.push(-tr / step as f64);
        mk = next;
    }
    c
}

fn sign_changes(c: &[f64], tol: f64) -> usize {
    let nz: Vec<f64> = c.iter().copied().filter(|v| v.abs() > tol).collect();
    nz.windows(2).filter(|w| w[0] * w[1] < 0.0).count()
}

pub fn inertia_matches_descartes_and_sylvester() {
    let strat = (2usize..6)
        .prop_flat_map(|k| {
            (
                prop::collection::vec(-3i32..4, k),
                prop::collection::vec(-1.0f64..1.0, k),
                prop::collection::vec(-1.0f64..1.0, k * k),
            )
        });
    runner(1, 128)
        .run(&strat, |(eigs, u, p)| {
            let k = eigs.len();
            prop_assume!(u.iter().any(|x| x.abs() > 0.1));
            let h = reflector(&u);
            let d = Matrix::from_diag(&eigs.iter().map(|&e| e as f64).collect::<Vec<_>>());
            let q = (&(&h * &d) * &h).symmetrized();
            let inertia = symlin::inertia(&q).unwrap();
            // Descartes on det(tI − Q): all roots real.
            let cp = char_poly(&q);
            let zeros = cp.iter().rev().take_while(|v| v.abs() <= 1e-8).count();
            let pos = sign_changes(&cp, 1e-8);
            let alt: Vec<f64> =
                cp.iter().enumerate().map(|(i, v)| if (k - i) % 2 == 1 { -v } else { *v }).collect();
            let neg = sign_changes(&alt, 1e-8);
            prop_assert_eq!((inertia.neg, inertia.zero, inertia.pos), (neg, zeros, pos));
            // Congruence by an invertible P keeps the inertia.
            let pm = Matrix::from_fn(k, k, |i, j| p[i * k + j] + if i == j { 3.0 } else { 0.0 });
            prop_assume!(pm.determinant().abs() > 1e-3);
            let moved = q.congruence(&pm).symmetrized();
            let band = 1e-9 * moved.frobenius().max(1.0);
            let e = symlin::jacobi_eigen(&moved).unwrap();
            prop_assert_eq!(symlin::inertia_of_values(&e.values, band), inertia);
            Ok(())
        })
        .unwrap();
}

pub fn pencil_polynomial_reevaluates() {
    let strat = (2usize..6).prop_flat_map(|k| (symmetric(k), symmetric(k), prop::collection::vec(0.0f64..1.0, 5)));
    runner(2, 128)
        .run(&strat, |(q1, q2, alphas)| {
            let poly = symlin::pencil_det_poly(&q1, &q2).unwrap();
            prop_assume!(poly.deflated == 0);
            for a in alphas {
                let mut m = q2.scale(1.0 - a);
                m.add_scaled(a, &q1);
                let direct = m.determinant();
                let r = (poly.eval(a) - direct).abs() / poly.scale.max(1.0);
                prop_assert!(r <= 1e-8, "residual {r:e} at {a}");
            }
            for r in poly.roots() {
                prop_assert!(poly.eval(r).abs() <= 1e-6 * poly.scale.max(1.0));
            }
            Ok(())
        })
        .unwrap();
}

fn random_polyhedron() -> impl Strategy<Value = OpenPolyhedron> {
    (2usize..4, 2usize..5).prop_flat_map(|(n, m)| {
        (prop::collection::vec(-2.0f64..2.0, n * m), prop::collection::vec(0.1f64..2.0, m)).prop_map(move |(a, b)| {
            OpenPolyhedron { a: Matrix::from_fn(m, n, |i, j| a[i * n + j]), b, strict: true }
        })
    })
}

pub fn fm_multipliers_are_sound() {
    runner(3, 128)
        .run(&(random_polyhedron(), prop::collection::vec(0.0f64..1.0, 40)), |(poly, pts)| {
            let pp = special::fm_project(&poly).unwrap();
            prop_assert!(pp.multipliers.iter().flatten().all(|&l| l >= 0.0));
            prop_assert!(pp.multiplier_residual(&poly) <= 1e-9, "{}", pp.multiplier_residual(&poly));
            // Nonnegative points of P lie in P′.
            let n = poly.a.cols();
            for c in pts.chunks(n).filter(|c| c.len() == n) {
                let x: Vec<f64> = c.iter().map(|v| 2.0 * v).collect();
                if poly.contains(&x) {
                    prop_assert!(pp.g.mul_vec(&x).iter().zip(&pp.h).all(|(l, r)| *l <= r + 1e-9));
                }
            }
            Ok(())
        })
        .unwrap();
}

pub fn diagonal_hull_matches_projection() {
    let strat = (2usize..4).prop_flat_map(|n| {
        (
            prop::collection::vec(-2.0f64..2.0, 2 * n),
            prop::collection::vec(0.1f64..2.0, n),
            prop::collection::vec(0.2f64..2.0, 3),
            prop::collection::vec(-1.5f64..1.5, 100 * n),
        )
    });
    let checked = std::cell::Cell::new(0usize);
    runner(4, 100)
        .run(&strat, |(a, pos, b, ys)| {
            let n = pos.len();
            let mut fs = vec![QuadraticFunction::new(Matrix::from_diag(&pos), vec![0.0; n], -b[0], true).unwrap()];
            for r in 0..2 {
                let d: Vec<f64> = a[r * n..(r + 1) * n].to_vec();
                fs.push(QuadraticFunction::new(Matrix::from_diag(&d), vec![0.0; n], -b[r + 1], true).unwrap());
            }
            let sys = QuadraticSystem::new(fs).unwrap();
            let h = special::diagonal_hull(&sys).unwrap();
            let funcs = h.description.functions(&sys);
            for y in ys.chunks(n) {
                let sq: Vec<f64> = y.iter().map(|v| v * v).collect();
                // Same inequality on both sides up to the normalization of λ.
                let in_proj = (0..h.projection.rows()).all(|k| {
                    let g = h.projection.g.row(k);
                    g.iter().zip(&sq).map(|(a, b)| a * b).sum::<f64>() < h.projection.h[k]
                });
                let in_aggs = funcs.iter().all(|f| f.eval(y) < 0.0);
                let margin = (0..h.projection.rows())
                    .map(|k| {
                        let g = h.projection.g.row(k);
                        (g.iter().zip(&sq).map(|(a, b)| a * b).sum::<f64>() - h.projection.h[k]).abs()
                    })
                    .fold(f64::INFINITY, f64::min);
                if margin > 1e-12 {
                    prop_assert_eq!(in_proj, in_aggs, "y = {:?}", y);
                }
                checked.set(checked.get() + 1);
            }
            Ok(())
        })
        .unwrap();
    assert!(checked.get() >= 10_000);
}

pub fn soc_roundtrip_and_variety() {
    let strat = (2usize..7).prop_flat_map(|n| prop::collection::vec(-3.0f64..3.0, n));
    runner(5, 256)
        .run(&strat, |x| {
            let y = hhc::soc_map(&x);
            let lhs = y[0] * y[1];
            let rhs: f64 = y[1..].iter().map(|v| v * v).sum();
            prop_assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(1.0));
            let back = hhc::soc_map(&hhc::soc_preimage(&y).unwrap());
            let scale = y.iter().map(|v| v.abs()).fold(1.0, f64::max);
            for (a, b) in back.iter().zip(&y) {
                prop_assert!((a - b).abs() <= 1e-10 * scale);
            }
            Ok(())
        })
        .unwrap();
}

pub fn normalized_family_basis() {
    let strat = (3usize..6).prop_flat_map(|k| {
        (prop::collection::vec(-1.0f64..1.0, k * k), prop::collection::vec(-1.0f64..1.0, k))
    });
    runner(6, 128)
        .run(&strat, |(r, ell)| {
            let k = ell.len();
            prop_assume!(ell.iter().map(|v| v * v).sum::<f64>() > 1e-2);
            let b = Matrix::from_fn(k, k, |i, j| r[i * k + j]);
            let mut f0 = &b.transpose() * &b;
            f0.add_scaled(0.5, &Matrix::identity(k));
            let fam = LinearFactorFamily { ell: ell.clone(), ells: vec![], f0_matrix: f0.clone() };
            let nb = hhc::normalize_pd_family(&fam).unwrap();
            prop_assert!((&f0.congruence(&nb.p) - &Matrix::identity(k)).max_abs() <= 1e-9);
            for j in 1..k {
                let v: f64 = ell.iter().zip(nb.p.column(j)).map(|(a, b)| a * b).sum();
                prop_assert!(v.abs() <= 1e-9);
            }
            Ok(())
        })
        .unwrap();
}

fn psd(k: usize) -> impl Strategy<Value = Matrix> {
    prop::collection::vec(-1.0f64..1.0, k * k).prop_map(move |v| {
        let b = Matrix::from_fn(k, k, |i, j| v[i * k + j]);
        &b.transpose() * &b
    })
}

pub fn improve_never_adds_negative_eigenvalues() {
    let strat = (2usize..5).prop_flat_map(|k| {
        (symmetric(k), symmetric(k), psd(k), prop::collection::vec(0.05f64..1.0, 3), 0.0f64..3.0)
    });
    runner(7, 128)
        .run(&strat, |(q1, q2, q3, lam, t)| {
            let sys = QuadraticSystem::new(
                [q1, q2, q3].iter().map(|q| QuadraticFunction::from_homogenized(q, true).unwrap()).collect(),
            )
            .unwrap();
            let lambda = AggregationWeights::new(lam).unwrap();
            let before = symlin::inertia(&sys.aggregate_matrix(lambda.as_slice())).unwrap().neg;
            let next = engine::improve(&sys, &lambda, &[0.0, 0.0, t], &[]).unwrap();
            let after = symlin::inertia(&sys.aggregate_matrix(next.as_slice())).unwrap().neg;
            prop_assert!(after <= before);
            Ok(())
        })
        .unwrap();
}

/// Small-integer direction with a negative entry and PD combination.
fn grid_witness(qs: &[Matrix; 3]) -> Option<([f64; 3], f64)> {
    let mut best: Option<([f64; 3], f64)> = None;
    for a in -3..=3 {
        for b in -3..=3 {
            for c in -3..=3 {
                if a >= 0 && b >= 0 && c >= 0 {
                    continue;
                }
                let v = [a as f64, b as f64, c as f64];
                let mut m = qs[0].scale(v[0]);
                m.add_scaled(v[1], &qs[1]);
                m.add_scaled(v[2], &qs[2]);
                let e = symlin::min_eig(&m).unwrap();
                if e > 1e-6 && best.is_none_or(|(_, b)| e > b) {
                    best = Some((v, e));
                }
            }
        }
    }
    best
}

pub fn support_reduction_terminates() {
    let strat = (4usize..7).prop_flat_map(|m| {
        (
            prop::collection::vec(symmetric(3), m),
            prop::collection::vec(prop::bool::ANY, m),
            prop::collection::vec(0.05f64..1.0, m),
        )
    });
    runner(8, 100)
        .run(&strat, |(rs, signs, lam)| {
            let m = rs.len();
            prop_assume!(signs.iter().any(|&s| s) && signs.iter().any(|&s| !s));
            // Q_i = 0.05 R_i ± I, so every triple has a mixed-sign PD combination.
            let qs: Vec<Matrix> = rs
                .iter()
                .zip(&signs)
                .map(|(r, &s)| {
                    let mut q = r.scale(0.05);
                    q.add_scaled(if s { 1.0 } else { -1.0 }, &Matrix::identity(3));
                    q
                })
                .collect();
            let sys = QuadraticSystem::new(
                qs.iter().map(|q| QuadraticFunction::from_homogenized(q, true).unwrap()).collect(),
            )
            .unwrap();
            let mut entries = Vec::new();
            for i in 0..m {
                for j in (i + 1)..m {
                    for k in (j + 1)..m {
                        let w = grid_witness(&[qs[i].clone(), qs[j].clone(), qs[k].clone()]);
                        entries.push(TripleEntry {
                            triple: [i, j, k],
                            coefficients: w.map(|x| x.0),
                            min_eig: w.map_or(f64::NEG_INFINITY, |x| x.1),
                        });
                    }
                }
            }
            let table = TripleWitnessTable { entries };
            prop_assume!(table.is_complete());
            let r = engine::support_reduce(&sys, &AggregationWeights::new(lam).unwrap(), &table).unwrap();
            prop_assert!(r.steps.len() <= m - 2);
            prop_assert!(r.lambda.support().len() <= 2);
            Ok(())
        })
        .unwrap();
}

pub fn escape_bound_post_check_on_concave_systems() {
    let strat = (1usize..4).prop_flat_map(|n| {
        (
            prop::collection::vec(psd(n), 1..4),
            prop::collection::vec(prop::collection::vec(-2.0f64..2.0, n), 3),
            prop::collection::vec(-2.0f64..2.0, 3),
            prop::collection::vec(-2.0f64..2.0, n),
        )
    });
    runner(9, 100)
        .run(&strat, |(ps, bs, cs, x)| {
            let n = x.len();
            let fs: Vec<QuadraticFunction> = ps
                .iter()
                .enumerate()
                .map(|(i, p)| {
                    let mut a = p.scale(-1.0);
                    a.add_scaled(-0.1, &Matrix::identity(n));
                    QuadraticFunction::new(a, bs[i].clone(), cs[i], true).unwrap()
                })
                .collect();
            let sys = QuadraticSystem::new(fs).unwrap();
            let mut v = vec![0.0; n];
            v[0] = 1.0;
            let curv = sys.constraints().iter().map(|f| f.a().quad(&v)).fold(f64::NEG_INFINITY, f64::max);
            let m = certificates::escape_bound(&sys, &x, &RecessionWitness { v, max_curvature: curv }).unwrap();
            prop_assert!(m.is_finite() && m > 0.0);
            Ok(())
        })
        .unwrap();
}

pub fn structural_verdict_survives_congruence() {
    let strat = (4usize..6).prop_flat_map(|k| {
        (
            prop::collection::vec(symmetric(k), 3),
            prop::collection::vec(-1.0f64..1.0, k * k),
            0.0f64..1.5,
        )
    });
    runner(10, 100)
        .run(&strat, |(mut qs, p, shift)| {
            let k = qs[0].rows();
            let opts = CertificateOptions {
                search: MaxMinEigOptions { iterations: 600, restarts: 4, ..MaxMinEigOptions::default() },
                ..CertificateOptions::default()
            };
            // Shift the first form so both PDLC outcomes occur.
            qs[0].add_scaled(shift * 3.0, &Matrix::identity(k));
            let pm = Matrix::from_fn(k, k, |i, j| p[i * k + j] + if i == j { 2.5 } else { 0.0 });
            prop_assume!(pm.determinant().abs() > 1e-2);
            let moved: Vec<Matrix> = qs.iter().map(|q| q.congruence(&pm).symmetrized()).collect();
            let a = hhc::hhc_structural_with(&qs, &opts).unwrap().verdict;
            let b = hhc::hhc_structural_with(&moved, &opts).unwrap().verdict;
            prop_assert_eq!(a, b);
            Ok(())
        })
        .unwrap();
}

pub fn membership_certificates_verify_and_repeat() {
    use aggrahull_core::oracle::{self, Membership, SamplerConfig};
    let strat = (2usize..4).prop_flat_map(|n| {
        (
            prop::collection::vec(prop::collection::vec(-2.0f64..2.0, n), 2),
            prop::collection::vec(0.2f64..1.0, 2),
            prop::collection::vec(-2.0f64..2.0, n),
        )
    });
    runner(11, 100)
        .run(&strat, |(centres, radii, x)| {
            let n = x.len();
            // Union of the outsides of two balls.
            let fs: Vec<QuadraticFunction> = centres
                .iter()
                .zip(&radii)
                .map(|(c, r)| {
                    let b: Vec<f64> = c.to_vec();
                    let cc = r * r - c.iter().map(|v| v * v).sum::<f64>();
                    QuadraticFunction::new(Matrix::identity(n).scale(-1.0), b, cc, true).unwrap()
                })
                .collect();
            let sys = QuadraticSystem::new(fs).unwrap();
            let cfg = SamplerConfig::default().with_seed(3).with_samples(50);
            let first = oracle::hull_member(&sys, &x, &[], &cfg);
            let second = oracle::hull_member(&sys, &x, &[], &cfg);
            prop_assert_eq!(&first, &second);
            if let Membership::Inside { certificate } = first {
                prop_assert!(certificate.verify(&sys, &x));
            }
            Ok(())
        })
        .unwrap();
}
