//! Exact-line-search and constant-step gradient descent on diagonal
//! quadratics `f(x) = x' A x / 2`, together with the per-step shrinking
//! factor, the worst-case contraction and the repeated-eigenvalue reduction.

use crate::error::{Error, Result};

/// Components of a GD iterate smaller than this are snapped to exact zero so
/// that eigenvector seeds converge to the exact minimizer.
const SNAP_EPS: f64 = 1e-300;

/// Trajectories stop once the A-norm underflows below this, regardless of the
/// requested tolerance; the stored shrink factors stay accurate, the states
/// would not.
const ANORM_FLOOR: f64 = 1e-280;

/// Strictly decreasing positive eigenvalues of the diagonal Hessian, with the
/// inverse condition number `a` and the affine coordinates of the
/// intermediate eigenvalues.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    values: Vec<f64>,
    a: f64,
    alphas: Vec<f64>,
}

impl Spectrum {
    /// Builds a spectrum from strictly decreasing positive eigenvalues.
    /// Tied values are rejected; they must go through
    /// [`reduce_multiplicities`] first.
    pub fn new(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidSpectrum("empty eigenvalue list".into()));
        }
        for &v in values {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidSpectrum(format!(
                    "eigenvalues must be positive and finite, got {v}"
                )));
            }
        }
        for w in values.windows(2) {
            if w[0] <= w[1] {
                return Err(Error::InvalidSpectrum(format!(
                    "eigenvalues must be strictly decreasing, got {} then {}",
                    w[0], w[1]
                )));
            }
        }
        let n = values.len();
        let l1 = values[0];
        let ln = values[n - 1];
        let a = ln / l1;
        let alphas = if n > 2 {
            values[1..n - 1]
                .iter()
                .map(|&l| (l - ln) / (l1 - ln))
                .collect()
        } else {
            Vec::new()
        };
        Ok(Spectrum {
            values: values.to_vec(),
            a,
            alphas,
        })
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Inverse condition number `a = lambda_n / lambda_1` in `(0, 1]`.
    pub fn a(&self) -> f64 {
        self.a
    }

    /// Affine coordinates `alpha_i` of the intermediate eigenvalues:
    /// `lambda_i = alpha_i lambda_1 + (1 - alpha_i) lambda_n`, `i = 2..n-1`.
    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    /// Worst-case one-step contraction `(1 - a) / (1 + a)`.
    pub fn worst_case_roc(&self) -> f64 {
        (1.0 - self.a) / (1.0 + self.a)
    }

    /// The constant step size `2 / (lambda_1 + lambda_n)` that optimizes the
    /// rate of the linear iteration `x <- (I - s A) x`.
    pub fn optimal_constant_step(&self) -> f64 {
        2.0 / (self.values[0] + self.values[self.n() - 1])
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                got: x.len(),
            });
        }
        Ok(())
    }
}

/// States, per-step shrink factors and step sizes of a GD run.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub states: Vec<Vec<f64>>,
    pub shrink_factors: Vec<f64>,
    pub step_sizes: Vec<f64>,
}

impl Trajectory {
    /// Number of completed steps.
    pub fn steps(&self) -> usize {
        self.shrink_factors.len()
    }

    pub fn last_state(&self) -> &[f64] {
        self.states.last().expect("trajectory holds the seed")
    }
}

/// Compensated (Kahan) sum.
fn kahan<I: IntoIterator<Item = f64>>(it: I) -> f64 {
    let mut sum = 0.0;
    let mut c = 0.0;
    for v in it {
        let y = v - c;
        let t = sum + y;
        c = (t - sum) - y;
        sum = t;
    }
    sum
}

/// The weighted sums S_k = sum_i lambda_i^k x_i^2 for k = 1, 2, 3.
fn power_sums(x: &[f64], sp: &Spectrum) -> (f64, f64, f64) {
    let l = sp.values();
    let s1 = kahan(x.iter().zip(l).map(|(&xi, &li)| li * xi * xi));
    let s2 = kahan(x.iter().zip(l).map(|(&xi, &li)| li * li * xi * xi));
    let s3 = kahan(x.iter().zip(l).map(|(&xi, &li)| li * li * li * xi * xi));
    (s1, s2, s3)
}

/// Energy norm `sqrt(x' A x)`.
pub fn a_norm(x: &[f64], sp: &Spectrum) -> Result<f64> {
    sp.check_dim(x)?;
    let (s1, _, _) = power_sums(x, sp);
    Ok(s1.max(0.0).sqrt())
}

/// The exact-line-search step size `x'A^2x / x'A^3x` at `x`.
pub fn els_step_size(x: &[f64], sp: &Spectrum) -> Result<f64> {
    sp.check_dim(x)?;
    if x.iter().all(|&v| v == 0.0) {
        return Err(Error::ZeroVector);
    }
    let (_, s2, s3) = power_sums(x, sp);
    Ok(s2 / s3)
}

/// One exact-line-search GD step. Maps zero to zero; eigenvectors map to the
/// exact minimizer (tiny residual components are snapped to zero).
pub fn gd_step(x: &[f64], sp: &Spectrum) -> Result<Vec<f64>> {
    sp.check_dim(x)?;
    if x.iter().all(|&v| v == 0.0) {
        return Ok(vec![0.0; x.len()]);
    }
    let (_, s2, s3) = power_sums(x, sp);
    let s = s2 / s3;
    let y = x
        .iter()
        .zip(sp.values())
        .map(|(&xi, &li)| {
            let v = xi - s * li * xi;
            if v.abs() < SNAP_EPS {
                0.0
            } else {
                v
            }
        })
        .collect();
    Ok(y)
}

/// One-step shrinking factor `rho(x, lambda)`, the contraction of the A-norm
/// under [`gd_step`]. Zero exactly when `x` is an eigenvector.
pub fn shrink_factor(x: &[f64], sp: &Spectrum) -> Result<f64> {
    sp.check_dim(x)?;
    if x.iter().all(|&v| v == 0.0) {
        return Err(Error::ZeroVector);
    }
    let (s1, s2, s3) = power_sums(x, sp);
    // rho^2 can go infinitesimally negative in floating point; clamp.
    let rho2 = (1.0 - (s2 / s1) * (s2 / s3)).clamp(0.0, 1.0);
    Ok(rho2.sqrt())
}

/// Runs constant-step GD `x <- (I - s A) x` for `k` steps. The recorded
/// shrink factors are the realized A-norm ratios.
pub fn constant_step_gd(x0: &[f64], sp: &Spectrum, step: f64, k: usize) -> Result<Trajectory> {
    sp.check_dim(x0)?;
    if !(step >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "step must be nonnegative, got {step}"
        )));
    }
    let mut states = vec![x0.to_vec()];
    let mut shrink_factors = Vec::with_capacity(k);
    let mut step_sizes = Vec::with_capacity(k);
    let mut prev_norm = a_norm(x0, sp)?;
    for _ in 0..k {
        let x = states.last().unwrap();
        let y: Vec<f64> = x
            .iter()
            .zip(sp.values())
            .map(|(&xi, &li)| xi * (1.0 - step * li))
            .collect();
        let norm = a_norm(&y, sp)?;
        shrink_factors.push(if prev_norm > 0.0 { norm / prev_norm } else { 0.0 });
        step_sizes.push(step);
        prev_norm = norm;
        states.push(y);
    }
    Ok(Trajectory {
        states,
        shrink_factors,
        step_sizes,
    })
}

/// Runs exact-line-search GD from `x0` until `||x||_A <= tol * ||x0||_A`, the
/// A-norm underflows, or `max_k` steps are taken. Shrink factors and step
/// sizes are recorded per step.
pub fn els_gd_run(x0: &[f64], sp: &Spectrum, max_k: usize, tol: f64) -> Result<Trajectory> {
    sp.check_dim(x0)?;
    if x0.iter().all(|&v| v == 0.0) {
        return Err(Error::ZeroVector);
    }
    let norm0 = a_norm(x0, sp)?;
    let mut states = vec![x0.to_vec()];
    let mut shrink_factors = Vec::new();
    let mut step_sizes = Vec::new();
    for _ in 0..max_k {
        let x = states.last().unwrap().clone();
        if x.iter().all(|&v| v == 0.0) {
            break;
        }
        let norm = a_norm(&x, sp)?;
        if norm <= tol * norm0 || norm < ANORM_FLOOR {
            break;
        }
        shrink_factors.push(shrink_factor(&x, sp)?);
        step_sizes.push(els_step_size(&x, sp)?);
        states.push(gd_step(&x, sp)?);
    }
    Ok(Trajectory {
        states,
        shrink_factors,
        step_sizes,
    })
}

/// The seed attaining the worst-case contraction at every step: mass only on
/// the extremal coordinates with `lambda_1 |x_1| = lambda_n |x_n|`,
/// normalized to unit Euclidean norm.
pub fn worst_seed(sp: &Spectrum) -> Result<Vec<f64>> {
    let n = sp.n();
    if n < 2 {
        return Err(Error::DimensionTooSmall(2));
    }
    let mut x = vec![0.0; n];
    x[0] = sp.a();
    x[n - 1] = 1.0;
    let norm = (x[0] * x[0] + 1.0).sqrt();
    x[0] /= norm;
    x[n - 1] /= norm;
    Ok(x)
}

/// Collapses repeated eigenvalues: groups equal values, maps each block of
/// seed components to its Euclidean norm. The per-step shrink factors of the
/// reduced run equal those of the original.
pub fn reduce_multiplicities(x0: &[f64], values: &[f64]) -> Result<(Vec<f64>, Spectrum)> {
    if values.is_empty() {
        return Err(Error::InvalidSpectrum("empty eigenvalue list".into()));
    }
    if x0.len() != values.len() {
        return Err(Error::DimensionMismatch {
            expected: values.len(),
            got: x0.len(),
        });
    }
    for &v in values {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::InvalidSpectrum(format!(
                "eigenvalues must be positive and finite, got {v}"
            )));
        }
    }
    for w in values.windows(2) {
        if w[0] < w[1] {
            return Err(Error::InvalidSpectrum(format!(
                "eigenvalues must be nonincreasing, got {} then {}",
                w[0], w[1]
            )));
        }
    }
    let mut reduced_vals = Vec::new();
    let mut reduced_x = Vec::new();
    let mut i = 0;
    while i < values.len() {
        let mut j = i;
        while j < values.len() && values[j] == values[i] {
            j += 1;
        }
        reduced_vals.push(values[i]);
        let block_norm = kahan(x0[i..j].iter().map(|&v| v * v)).max(0.0).sqrt();
        reduced_x.push(block_norm);
        i = j;
    }
    Ok((reduced_x, Spectrum::new(&reduced_vals)?))
}
