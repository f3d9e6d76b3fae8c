mod common;

use aggrahull_core::engine::{self, Evidence, GoodnessStatus, SccKind};
use aggrahull_core::oracle::{self, HullStatus, SamplerConfig};
use aggrahull_core::qform::AggregationWeights;
use aggrahull_core::{certificates, special, symlin};
use common::*;

fn expect_four(n: usize) {
    let sys = four_aggregations(n);
    let s = oracle::sample_s(&sys, &SamplerConfig::default().with_seed(11)).unwrap();
    let desc = engine::enumerate_hull(&sys, Evidence::open(&s.points)).unwrap();
    let targets = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [1.0, 0.0, 1.0], [0.0, 1.0, 1.0]];
    assert_eq!(desc.aggregations.len(), 4, "{:#?}", desc.lambdas());
    for t in &targets {
        assert!(desc.aggregations.iter().any(|a| same_direction(&a.lambda, t, 1e-8)), "missing {t:?}: {:?}", desc.lambdas());
    }
    let verdict = oracle::verify_hull(&sys, &desc.lambdas(), &SamplerConfig::default().with_seed(5), &[]).unwrap();
    assert_eq!(verdict.status, HullStatus::Consistent, "{verdict:#?}");
}

#[test]
fn four_aggregations_plane() {
    expect_four(2);
}

#[test]
fn four_aggregations_space() {
    expect_four(3);
}

#[test]
fn tangent_pencil_roots() {
    let sys = tangent_closed(2);
    let a = engine::pencil_analysis(&sys, 0, 1).unwrap();
    let alphas: Vec<f64> = a.gevs.iter().map(|r| r.alpha).collect();
    assert_eq!(alphas.len(), 2, "{a:?}");
    assert!((alphas[0] - 2.0 / 3.0).abs() <= 1e-9 && a.gevs[0].even);
    assert!((alphas[1] - 1.0).abs() <= 1e-9);
}

#[test]
fn tangent_closed_hull() {
    let sys = tangent_closed(2);
    let r = special::closed_hull(&sys, &SamplerConfig::default().with_seed(3)).unwrap();
    assert!(r.samples.minimizers.iter().any(|x| (x[0] - 1.0).abs() < 1e-4 && x[1].abs() < 1e-4));
    let l = r.aggregations.lambdas();
    assert_eq!(l.len(), 2, "{l:?}");
    assert!(l.iter().any(|x| same_direction(x, &[0.0, 1.0], 1e-8)));
    assert!(l.iter().any(|x| same_direction(x, &[2.0, 1.0], 1e-8)), "{l:?}");
}

#[test]
fn three_spheres_candidates_and_pdlc() {
    let sys = three_spheres();
    let d = special::sphere_hull(&sys).unwrap();
    assert_eq!(d.aggregations.len(), 4);
    assert!(certificates::verify_pdlc(&sys, &[-1.0, -1.0, -3.0]).unwrap().is_some());
    assert!(certificates::pdlc_witness(&sys).unwrap().is_some());
    assert!(special::sphere_rn_test(&sys).unwrap());
}

#[test]
fn parallelogram_not_pdlc_and_separated() {
    let sys = parallelogram(3);
    assert!(certificates::pdlc_witness(&sys).unwrap().is_none());
    let cfg = SamplerConfig::default().with_seed(17);
    let v = oracle::verify_hull(&sys, &[vec![1.0, 1.0, 1.0]], &cfg, &[vec![0.6, 0.0, 0.0]]).unwrap();
    assert_eq!(v.status, HullStatus::CounterexampleInAggNotInHull, "{v:#?}");
}

#[test]
fn orthant_gap_rejects_ball_weight() {
    let sys = orthant_gap(3);
    let q = sys.aggregate_matrix(&AggregationWeights::unit(4, 0).into_vec());
    let c = engine::classify(&q).unwrap();
    assert_eq!(c.kind, SccKind::ManyNegative);
    assert_eq!(c.inertia.neg, 3);
    let d = special::sphere_hull(&sys).unwrap();
    assert_eq!(d.aggregations.len(), 3);
    assert!(d.aggregations.iter().all(|a| a.lambda[0] == 0.0));
}

#[test]
fn disk_diagonal_hull() {
    let sys = unit_disk_diagonal();
    let h = special::diagonal_hull(&sys).unwrap();
    assert_eq!(h.description.aggregations.len(), 1);
    assert_eq!(h.description.aggregations[0].lambda, vec![1.0, 0.0, 0.0]);
}

#[test]
fn empty_ball_certificate() {
    let c = certificates::emptiness_certificate(&empty_ball(3)).unwrap().unwrap();
    assert!(c.margin >= 1.0 - 1e-6);
}

#[test]
fn goodness_on_four_aggregations() {
    let sys = four_aggregations(2);
    let s = oracle::sample_s(&sys, &SamplerConfig::default().with_seed(2)).unwrap();
    let good = engine::is_good(&sys, &AggregationWeights::new(vec![1.0, 0.0, 1.0]).unwrap(), Evidence::open(&s.points)).unwrap();
    assert_eq!(good.status, GoodnessStatus::Good);
    let q3 = sys.aggregate_matrix(&[0.0, 0.0, 1.0]);
    assert_eq!(symlin::inertia(&q3).unwrap().neg, 2);
}
