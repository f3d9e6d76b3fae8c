#![allow(dead_code)]

use aggrahull_core::{Matrix, QuadraticFunction, QuadraticSystem};

pub fn qf(a: Matrix, linear: &[f64], c: f64) -> QuadraticFunction {
    QuadraticFunction::with_linear(a, linear, c, true).unwrap()
}

fn diag_with_first(n: usize, first: f64, rest: f64) -> Matrix {
    Matrix::from_fn(n, n, |i, j| if i != j { 0.0 } else if i == 0 { first } else { rest })
}

fn e1(n: usize, s: f64) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[0] = s;
    v
}

/// Three quadratics whose hull needs f1, f2, f1+f3, f2+f3.
pub fn four_aggregations(n: usize) -> QuadraticSystem {
    QuadraticSystem::new(vec![
        qf(diag_with_first(n, -1.0, 1.0), &vec![0.0; n], 1.0),
        qf(diag_with_first(n, 1.0, 1.0), &e1(n, 5.0), -4.0),
        qf(diag_with_first(n, 0.0, -1.0), &e1(n, -1.0), 0.0),
    ])
    .unwrap()
}

/// `-x1² + x1` and the unit ball, closed.
pub fn tangent_closed(n: usize) -> QuadraticSystem {
    QuadraticSystem::new(vec![
        qf(diag_with_first(n, -1.0, 0.0), &e1(n, 1.0), 0.0),
        qf(Matrix::identity(n), &vec![0.0; n], -1.0),
    ])
    .unwrap()
    .with_strictness(false)
}

/// Hidden convexity without aggregation hull; true hull is a parallelogram
/// in (x1, x2).
pub fn parallelogram(n: usize) -> QuadraticSystem {
    let f1 = Matrix::from_fn(n, n, |i, j| match (i, j) {
        (0, 0) => 1.0,
        (1, 1) => -1.0,
        _ => 0.0,
    });
    let f2 = Matrix::from_fn(n, n, |i, j| if (i, j) == (0, 1) || (i, j) == (1, 0) { 0.5 } else { 0.0 });
    let f3 = Matrix::from_fn(n, n, |i, j| match (i, j) {
        (0, 0) => -1.0,
        (1, 1) => 1.0,
        (0, 1) | (1, 0) => -0.5,
        (i, j) if i == j => 1.0,
        _ => 0.0,
    });
    QuadraticSystem::new(vec![qf(f1, &vec![0.0; n], 0.0), qf(f2, &vec![0.0; n], 0.0), qf(f3, &vec![0.0; n], -1.0)])
        .unwrap()
}

pub fn three_spheres() -> QuadraticSystem {
    let id = Matrix::identity(3);
    QuadraticSystem::new(vec![
        qf(id.clone(), &[0.0, 0.0, -2.0], -1.0),
        qf(id.clone(), &[0.0, 0.0, 2.0], -4.0),
        qf(id.scale(-1.0), &[0.0; 3], 1.0),
    ])
    .unwrap()
}

/// Ball complement plus the n coordinate halfspaces x_i > 0.
pub fn orthant_gap(n: usize) -> QuadraticSystem {
    let mut fs = vec![qf(Matrix::identity(n).scale(-1.0), &vec![0.0; n], 1.0)];
    for i in 0..n {
        let mut l = vec![0.0; n];
        l[i] = -1.0;
        fs.push(qf(Matrix::zeros(n, n), &l, 0.0));
    }
    QuadraticSystem::new(fs).unwrap()
}

pub fn separable_matrices() -> Vec<Matrix> {
    vec![
        Matrix::from_diag(&[1.0, -1.0, -1.0]),
        Matrix::from_diag(&[-1.0, 1.0, -1.0]),
        Matrix::from_diag(&[-1.0, -1.0, 1.0]),
    ]
}

/// The separable forms as constraints with zero constant.
pub fn separable_triple() -> QuadraticSystem {
    QuadraticSystem::new(separable_matrices().into_iter().map(|a| qf(a, &[0.0; 3], 0.0)).collect()).unwrap()
}

/// x1² + x2² < 1 with x1² > 0, x2² > 0.
pub fn unit_disk_diagonal() -> QuadraticSystem {
    QuadraticSystem::new(vec![
        qf(Matrix::from_diag(&[1.0, 1.0]), &[0.0; 2], -1.0),
        qf(Matrix::from_diag(&[-1.0, 0.0]), &[0.0; 2], 0.0),
        qf(Matrix::from_diag(&[0.0, -1.0]), &[0.0; 2], 0.0),
    ])
    .unwrap()
}

pub fn empty_ball(n: usize) -> QuadraticSystem {
    QuadraticSystem::new(vec![qf(Matrix::identity(n), &vec![0.0; n], 1.0)]).unwrap()
}

/// Normalized λ matches `target` up to positive scaling.
pub fn same_direction(lambda: &[f64], target: &[f64], tol: f64) -> bool {
    let s: f64 = lambda.iter().sum();
    let t: f64 = target.iter().sum();
    lambda.iter().zip(target).all(|(a, b)| (a / s - b / t).abs() <= tol)
}
