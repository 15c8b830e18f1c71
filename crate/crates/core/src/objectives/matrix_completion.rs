//! Low-rank matrix completion as a degree-4 objective in the factor pair
//! `(X, Y)`: value, gradient, and the exact quartic restriction along a
//! joint direction.

use crate::error::{Error, Result};
use crate::quartic::QuarticPoly;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

/// Observed entries of a planted rank-`r` matrix, with the ground-truth
/// factors retained for error reporting.
#[derive(Debug, Clone)]
pub struct MatrixCompletionInstance {
    rows: usize,
    cols: usize,
    rank: usize,
    omega: Vec<(usize, usize)>,
    observed: Vec<f64>,
    x_true: DMatrix<f64>,
    y_true: DMatrix<f64>,
    seed: u64,
    sample_fraction: f64,
}

/// Seed-only serialization; matrices are regenerated.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct MatrixCompletionRecipe {
    pub kind: String,
    pub rows: usize,
    pub cols: usize,
    pub rank: usize,
    pub sample_fraction: f64,
    pub seed: u64,
}

/// Generates a planted instance: Gaussian factors, i.i.d. Bernoulli entry
/// sampling. Rejects an empty observation set.
pub fn gen_matrix_completion(
    rows: usize,
    cols: usize,
    rank: usize,
    sample_fraction: f64,
    seed: u64,
) -> Result<MatrixCompletionInstance> {
    if rows == 0 || cols == 0 || rank == 0 {
        return Err(Error::InvalidArgument("dimensions must be positive".into()));
    }
    if !(sample_fraction > 0.0 && sample_fraction <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "sample_fraction must be in (0, 1], got {sample_fraction}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = StandardNormal;
    let mut x_true = DMatrix::zeros(rows, rank);
    for i in 0..rows {
        for k in 0..rank {
            x_true[(i, k)] = normal.sample(&mut rng);
        }
    }
    let mut y_true = DMatrix::zeros(cols, rank);
    for j in 0..cols {
        for k in 0..rank {
            y_true[(j, k)] = normal.sample(&mut rng);
        }
    }
    let mut omega = Vec::new();
    let mut observed = Vec::new();
    for i in 0..rows {
        for j in 0..cols {
            if rng.random::<f64>() < sample_fraction {
                omega.push((i, j));
                observed.push(x_true.row(i).dot(&y_true.row(j)));
            }
        }
    }
    if omega.is_empty() {
        return Err(Error::EmptyObservations);
    }
    Ok(MatrixCompletionInstance {
        rows,
        cols,
        rank,
        omega,
        observed,
        x_true,
        y_true,
        seed,
        sample_fraction,
    })
}

impl MatrixCompletionInstance {
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.rows, self.cols, self.rank)
    }

    pub fn omega(&self) -> &[(usize, usize)] {
        &self.omega
    }

    pub fn observed(&self) -> &[f64] {
        &self.observed
    }

    pub fn factors_true(&self) -> (&DMatrix<f64>, &DMatrix<f64>) {
        (&self.x_true, &self.y_true)
    }

    pub fn recipe(&self) -> MatrixCompletionRecipe {
        MatrixCompletionRecipe {
            kind: "matrix_completion".into(),
            rows: self.rows,
            cols: self.cols,
            rank: self.rank,
            sample_fraction: self.sample_fraction,
            seed: self.seed,
        }
    }

    pub fn from_recipe(r: &MatrixCompletionRecipe) -> Result<Self> {
        gen_matrix_completion(r.rows, r.cols, r.rank, r.sample_fraction, r.seed)
    }

    fn check_factors(&self, x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<()> {
        if x.nrows() != self.rows || x.ncols() != self.rank {
            return Err(Error::DimensionMismatch {
                expected: self.rows * self.rank,
                got: x.nrows() * x.ncols(),
            });
        }
        if y.nrows() != self.cols || y.ncols() != self.rank {
            return Err(Error::DimensionMismatch {
                expected: self.cols * self.rank,
                got: y.nrows() * y.ncols(),
            });
        }
        Ok(())
    }
}

/// `sum_{(i,j) in Omega} [(X Y')_{ij} - M_{ij}]^2`.
pub fn mc_value(inst: &MatrixCompletionInstance, x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<f64> {
    inst.check_factors(x, y)?;
    Ok(inst
        .omega
        .iter()
        .zip(&inst.observed)
        .map(|(&(i, j), &m)| {
            let r = x.row(i).dot(&y.row(j)) - m;
            r * r
        })
        .sum())
}

/// Gradient with respect to both factors.
pub fn mc_grad(
    inst: &MatrixCompletionInstance,
    x: &DMatrix<f64>,
    y: &DMatrix<f64>,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    inst.check_factors(x, y)?;
    let mut gx = DMatrix::zeros(inst.rows, inst.rank);
    let mut gy = DMatrix::zeros(inst.cols, inst.rank);
    for (&(i, j), &m) in inst.omega.iter().zip(&inst.observed) {
        let r = 2.0 * (x.row(i).dot(&y.row(j)) - m);
        for k in 0..inst.rank {
            gx[(i, k)] += r * y[(j, k)];
            gy[(j, k)] += r * x[(i, k)];
        }
    }
    Ok((gx, gy))
}

/// Exact quartic coefficients of
/// `t -> sum_Omega [((X + t DX)(Y + t DY)')_{ij} - M_{ij}]^2`.
pub fn mc_line_quartic(
    inst: &MatrixCompletionInstance,
    x: &DMatrix<f64>,
    y: &DMatrix<f64>,
    dx: &DMatrix<f64>,
    dy: &DMatrix<f64>,
) -> Result<QuarticPoly> {
    inst.check_factors(x, y)?;
    inst.check_factors(dx, dy)?;
    let (mut c4, mut c3, mut c2, mut c1, mut c0) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (&(i, j), &m) in inst.omega.iter().zip(&inst.observed) {
        // per-entry residual is quadratic in t: r0 + b t + c t^2
        let r0 = x.row(i).dot(&y.row(j)) - m;
        let b = x.row(i).dot(&dy.row(j)) + dx.row(i).dot(&y.row(j));
        let c = dx.row(i).dot(&dy.row(j));
        c4 += c * c;
        c3 += 2.0 * b * c;
        c2 += b * b + 2.0 * r0 * c;
        c1 += 2.0 * r0 * b;
        c0 += r0 * r0;
    }
    Ok(QuarticPoly::new(c4, c3, c2, c1, c0))
}
