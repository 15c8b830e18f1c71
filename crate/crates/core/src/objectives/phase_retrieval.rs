//! Real phase retrieval with Gaussian sensor design: the quartic objective,
//! its gradient and Hessian, the O(mn) line-search coefficient pipeline and
//! spectral initialization.

use crate::error::{Error, Result};
use crate::quartic::{Objective, QuarticPoly};
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::sync::atomic::{AtomicUsize, Ordering};

/// A generated phase retrieval instance: sensors `a_j ~ N(0, I_n)` (columns
/// of an n x m matrix), measurements `y_j = (a_j' x*)^2`, and the planted
/// signal. Regenerable bit-identically from its [`PhaseRetrievalRecipe`].
#[derive(Debug)]
pub struct PhaseRetrievalInstance {
    sensors: DMatrix<f64>,
    y: DVector<f64>,
    x_true: DVector<f64>,
    seed: u64,
    normalized: bool,
    matvec_count: AtomicUsize,
}

/// Seed-only serialization of an instance; the matrices are regenerated, not
/// stored.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct PhaseRetrievalRecipe {
    pub kind: String,
    pub n: usize,
    pub m: usize,
    pub seed: u64,
    pub normalized: bool,
}

/// Generates an instance with the planted signal normalized to unit norm.
pub fn gen_phase_retrieval(n: usize, m: usize, seed: u64) -> Result<PhaseRetrievalInstance> {
    gen_phase_retrieval_with(n, m, seed, true)
}

/// As [`gen_phase_retrieval`]; `normalize = false` keeps the raw Gaussian
/// scale of the planted signal.
pub fn gen_phase_retrieval_with(
    n: usize,
    m: usize,
    seed: u64,
    normalize: bool,
) -> Result<PhaseRetrievalInstance> {
    if n == 0 || m == 0 {
        return Err(Error::InvalidArgument("n and m must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = StandardNormal;
    let mut x_true = DVector::from_fn(n, |_, _| normal.sample(&mut rng));
    if normalize {
        let norm = x_true.norm();
        x_true /= norm;
    }
    // column j is sensor a_j; filled column by column for reproducibility
    let mut sensors = DMatrix::zeros(n, m);
    for j in 0..m {
        for i in 0..n {
            sensors[(i, j)] = normal.sample(&mut rng);
        }
    }
    let y = DVector::from_fn(m, |j, _| {
        let dot = sensors.column(j).dot(&x_true);
        dot * dot
    });
    Ok(PhaseRetrievalInstance {
        sensors,
        y,
        x_true,
        seed,
        normalized: normalize,
        matvec_count: AtomicUsize::new(0),
    })
}

impl PhaseRetrievalInstance {
    pub fn n(&self) -> usize {
        self.sensors.nrows()
    }

    pub fn m(&self) -> usize {
        self.sensors.ncols()
    }

    pub fn x_true(&self) -> &[f64] {
        self.x_true.as_slice()
    }

    pub fn y(&self) -> &[f64] {
        self.y.as_slice()
    }

    pub fn sensor(&self, j: usize) -> Vec<f64> {
        self.sensors.column(j).iter().copied().collect()
    }

    pub fn recipe(&self) -> PhaseRetrievalRecipe {
        PhaseRetrievalRecipe {
            kind: "phase_retrieval".into(),
            n: self.n(),
            m: self.m(),
            seed: self.seed,
            normalized: self.normalized,
        }
    }

    pub fn from_recipe(r: &PhaseRetrievalRecipe) -> Result<Self> {
        gen_phase_retrieval_with(r.n, r.m, r.seed, r.normalized)
    }

    /// Number of n x m matrix-vector products performed so far.
    pub fn matvec_count(&self) -> usize {
        self.matvec_count.load(Ordering::Relaxed)
    }

    pub fn reset_matvec_count(&self) {
        self.matvec_count.store(0, Ordering::Relaxed);
    }

    /// `A' x`, one counted matrix-vector product.
    fn sensors_t(&self, x: &[f64]) -> DVector<f64> {
        self.matvec_count.fetch_add(1, Ordering::Relaxed);
        let xv = DVector::from_column_slice(x);
        self.sensors.tr_mul(&xv)
    }

    /// `A w`, one counted matrix-vector product.
    fn sensors_mul(&self, w: &DVector<f64>) -> DVector<f64> {
        self.matvec_count.fetch_add(1, Ordering::Relaxed);
        &self.sensors * w
    }

    /// Relative distance to the planted signal modulo the global sign.
    pub fn rel_error(&self, x: &[f64]) -> f64 {
        let xv = DVector::from_column_slice(x);
        let plus = (&xv - &self.x_true).norm();
        let minus = (&xv + &self.x_true).norm();
        plus.min(minus) / self.x_true.norm()
    }
}

/// Objective value `f(x) = (1/4m) sum_j [y_j - (a_j' x)^2]^2`.
pub fn pr_value(inst: &PhaseRetrievalInstance, x: &[f64]) -> f64 {
    let u = inst.sensors_t(x);
    let m = inst.m() as f64;
    u.iter()
        .zip(inst.y.iter())
        .map(|(&uj, &yj)| {
            let r = yj - uj * uj;
            r * r
        })
        .sum::<f64>()
        / (4.0 * m)
}

/// Gradient `-(1/m) sum_j [y_j - (a_j' x)^2] (a_j' x) a_j`.
pub fn pr_grad(inst: &PhaseRetrievalInstance, x: &[f64]) -> Vec<f64> {
    let u = inst.sensors_t(x);
    let m = inst.m() as f64;
    let w = DVector::from_fn(inst.m(), |j, _| (u[j] * u[j] - inst.y[j]) * u[j] / m);
    inst.sensors_mul(&w).as_slice().to_vec()
}

/// The line-search quartic of the coefficient pipeline, in the unscaled
/// convention: the returned polynomial equals `4m * f(x + t d)`. The argmin
/// over t is unaffected by the factor.
pub fn pr_line_quartic(inst: &PhaseRetrievalInstance, x: &[f64], d: &[f64]) -> QuarticPoly {
    let u = inst.sensors_t(x);
    let v = inst.sensors_t(d);
    quartic_from_uv(inst, &u, &v)
}

fn quartic_from_uv(inst: &PhaseRetrievalInstance, u: &DVector<f64>, v: &DVector<f64>) -> QuarticPoly {
    let mut gg = 0.0;
    let mut bg = 0.0;
    let mut bb = 0.0;
    let mut ag = 0.0;
    let mut ab = 0.0;
    let mut aa = 0.0;
    for j in 0..inst.m() {
        let alpha = u[j] * u[j] - inst.y[j];
        let beta = 2.0 * u[j] * v[j];
        let gamma = v[j] * v[j];
        gg += gamma * gamma;
        bg += beta * gamma;
        bb += beta * beta;
        ag += alpha * gamma;
        ab += alpha * beta;
        aa += alpha * alpha;
    }
    QuarticPoly::new(gg, 2.0 * bg, bb + 2.0 * ag, 2.0 * ab, aa)
}

impl Objective for PhaseRetrievalInstance {
    fn dim(&self) -> usize {
        self.n()
    }

    fn value(&self, x: &[f64]) -> f64 {
        pr_value(self, x)
    }

    fn grad(&self, x: &[f64]) -> Vec<f64> {
        pr_grad(self, x)
    }

    fn line_quartic(&self, x: &[f64], d: &[f64]) -> QuarticPoly {
        pr_line_quartic(self, x, d).scaled(1.0 / (4.0 * self.m() as f64))
    }

    /// The three-product pipeline: `A'x`, the gradient product, `A'd`.
    fn grad_and_line_quartic(&self, x: &[f64]) -> (Vec<f64>, QuarticPoly) {
        let m = self.m() as f64;
        let u = self.sensors_t(x);
        let w = DVector::from_fn(self.m(), |j, _| (u[j] * u[j] - self.y[j]) * u[j] / m);
        let g = self.sensors_mul(&w);
        let d: Vec<f64> = g.iter().map(|v| -v).collect();
        let v = self.sensors_t(&d);
        let q = quartic_from_uv(self, &u, &v).scaled(1.0 / (4.0 * m));
        (g.as_slice().to_vec(), q)
    }
}

/// Spectral initialization: `sqrt(mean y)` times the top eigenvector of
/// `(1/m) sum_j y_j a_j a_j'`, computed by power iteration, with the sign
/// fixed so the first nonzero coordinate is positive.
pub fn spectral_init(inst: &PhaseRetrievalInstance) -> Result<Vec<f64>> {
    let n = inst.n();
    let m = inst.m() as f64;
    let tol = 1e-10;
    let max_iter = 10_000;
    let mut v = DVector::from_element(n, 1.0 / (n as f64).sqrt());
    let mut converged = false;
    for _ in 0..max_iter {
        let u = inst.sensors_t(v.as_slice());
        let w = DVector::from_fn(inst.m(), |j, _| inst.y[j] * u[j] / m);
        let mut next = inst.sensors_mul(&w);
        let norm = next.norm();
        if norm == 0.0 {
            return Err(Error::NonConvergence(max_iter));
        }
        next /= norm;
        let align = next.dot(&v).abs();
        let done = 1.0 - align <= tol;
        v = next;
        if done {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NonConvergence(max_iter));
    }
    let scale = (inst.y.iter().sum::<f64>() / m).sqrt();
    let sign = v
        .iter()
        .find(|&&c| c != 0.0)
        .map(|&c| c.signum())
        .unwrap_or(1.0);
    Ok(v.iter().map(|&c| c * sign * scale).collect())
}

/// Condition number of the Hessian `(1/m) sum_j [3 (a_j'x)^2 - y_j] a_j a_j'`
/// at `x`, by a dense symmetric eigensolve.
#[derive(Debug, Clone, Copy)]
pub struct HessianCond {
    /// `lambda_max / lambda_min` when positive definite, otherwise the ratio
    /// of extreme absolute eigenvalues.
    pub cond: f64,
    pub positive_definite: bool,
}

pub fn hessian_cond(inst: &PhaseRetrievalInstance, x: &[f64]) -> HessianCond {
    let u = inst.sensors_t(x);
    let m = inst.m() as f64;
    let mut scaled = inst.sensors.clone();
    for j in 0..inst.m() {
        let w = (3.0 * u[j] * u[j] - inst.y[j]) / m;
        scaled.column_mut(j).scale_mut(w);
    }
    let h = &scaled * inst.sensors.transpose();
    let eigs = h.symmetric_eigenvalues();
    let min = eigs.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = eigs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if min > 0.0 {
        HessianCond {
            cond: max / min,
            positive_definite: true,
        }
    } else {
        let amin = eigs.iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min);
        let amax = eigs.iter().map(|v| v.abs()).fold(0.0, f64::max);
        HessianCond {
            cond: if amin > 0.0 { amax / amin } else { f64::INFINITY },
            positive_definite: false,
        }
    }
}
