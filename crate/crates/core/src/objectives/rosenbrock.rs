//! The n-variable Rosenbrock function, a degree-4 polynomial with a badly
//! conditioned Hessian at its global minimizer `x* = (1, ..., 1)`.

use crate::quartic::{Objective, QuarticPoly};
use nalgebra::DMatrix;

/// `f(x) = sum_{i=2}^n 100 (x_i - x_{i-1}^2)^2 + (1 - x_{i-1})^2`, n >= 2.
pub fn rosenbrock_value(x: &[f64]) -> f64 {
    assert!(x.len() >= 2, "Rosenbrock requires n >= 2");
    let mut f = 0.0;
    for i in 1..x.len() {
        let gap = x[i] - x[i - 1] * x[i - 1];
        let off = 1.0 - x[i - 1];
        f += 100.0 * gap * gap + off * off;
    }
    f
}

pub fn rosenbrock_grad(x: &[f64]) -> Vec<f64> {
    assert!(x.len() >= 2, "Rosenbrock requires n >= 2");
    let n = x.len();
    let mut g = vec![0.0; n];
    for i in 1..n {
        let gap = x[i] - x[i - 1] * x[i - 1];
        g[i - 1] += -400.0 * x[i - 1] * gap - 2.0 * (1.0 - x[i - 1]);
        g[i] += 200.0 * gap;
    }
    g
}

/// Analytic (tridiagonal) Hessian.
pub fn rosenbrock_hessian(x: &[f64]) -> DMatrix<f64> {
    assert!(x.len() >= 2, "Rosenbrock requires n >= 2");
    let n = x.len();
    let mut h = DMatrix::zeros(n, n);
    for i in 1..n {
        let gap = x[i] - x[i - 1] * x[i - 1];
        h[(i - 1, i - 1)] += -400.0 * gap + 800.0 * x[i - 1] * x[i - 1] + 2.0;
        h[(i, i)] += 200.0;
        h[(i - 1, i)] += -400.0 * x[i - 1];
        h[(i, i - 1)] += -400.0 * x[i - 1];
    }
    h
}

/// Condition number of the Hessian at `x` (extreme eigenvalue ratio).
pub fn rosenbrock_hessian_cond(x: &[f64]) -> f64 {
    let eigs = rosenbrock_hessian(x).symmetric_eigenvalues();
    let min = eigs.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = eigs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    max / min
}

/// [`Objective`] wrapper with an exact line restriction. The closed form
/// matters: interpolating near the minimizer loses the small coefficients to
/// cancellation and cripples the line search.
#[derive(Debug, Clone, Copy)]
pub struct Rosenbrock {
    n: usize,
}

impl Rosenbrock {
    pub fn new(n: usize) -> Self {
        assert!(n >= 2, "Rosenbrock requires n >= 2");
        Rosenbrock { n }
    }

    pub fn minimizer(&self) -> Vec<f64> {
        vec![1.0; self.n]
    }
}

impl Objective for Rosenbrock {
    fn dim(&self) -> usize {
        self.n
    }

    fn value(&self, x: &[f64]) -> f64 {
        rosenbrock_value(x)
    }

    fn grad(&self, x: &[f64]) -> Vec<f64> {
        rosenbrock_grad(x)
    }

    fn line_quartic(&self, x: &[f64], d: &[f64]) -> QuarticPoly {
        // Each pair term is 100 (A + B t + C t^2)^2 + (e - d_{i-1} t)^2 with
        // A = x_i - x_{i-1}^2, B = d_i - 2 x_{i-1} d_{i-1}, C = -d_{i-1}^2,
        // e = 1 - x_{i-1}.
        let (mut c4, mut c3, mut c2, mut c1, mut c0) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for i in 1..x.len() {
            let a = x[i] - x[i - 1] * x[i - 1];
            let b = d[i] - 2.0 * x[i - 1] * d[i - 1];
            let c = -d[i - 1] * d[i - 1];
            let e = 1.0 - x[i - 1];
            c4 += 100.0 * c * c;
            c3 += 200.0 * b * c;
            c2 += 100.0 * (b * b + 2.0 * a * c) + d[i - 1] * d[i - 1];
            c1 += 200.0 * a * b - 2.0 * e * d[i - 1];
            c0 += 100.0 * a * a + e * e;
        }
        QuarticPoly::new(c4, c3, c2, c1, c0)
    }
}
