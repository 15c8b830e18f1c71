//! Akaike's probability-simplex representation of exact-line-search GD:
//! the coordinate change `sigma`, the simplex map `T` and its reduced form
//! `Theta`, fixed-point stability, the attracting interval, and the rate
//! lower bound driven by an intermediate eigenvalue.

use crate::error::{Error, Result};
use crate::quadratic::Spectrum;
use nalgebra::DMatrix;

/// Which convention to use for the deviation parameter `delta` in the rate
/// lower bound: the signed minimum as displayed in the source formula, or the
/// minimum of absolute deviations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeltaConvention {
    SignedMin,
    AbsMin,
}

/// Stability data of the reduced map at the fixed point `[s; 0]`.
#[derive(Debug, Clone)]
pub struct StabilityReport {
    /// Fixed-point parameter in (0, 1).
    pub s: f64,
    /// Analytic Jacobian of `Theta` at `[s; 0]`, an (n-1) x (n-1) matrix.
    pub jacobian: DMatrix<f64>,
    /// Eigenvalues `mu_i(s)` of the period-2 Jacobian, for each intermediate
    /// eigenvalue, excluding the unit eigenvalue.
    pub mu: Vec<f64>,
    /// Whether `s` lies in the attracting interval.
    pub in_i: bool,
    /// True when `s` coincides (within 1e-12) with some `alpha_i` or
    /// `1 - alpha_i`, where the local-diffeomorphism argument degenerates.
    pub near_singularity: bool,
}

/// Outcome of iterating the even subsequence of the simplex map.
#[derive(Debug, Clone)]
pub struct LimitResult {
    /// Limit probability: the mass on the smallest eigenvalue in the even
    /// limit `[1-s, 0, ..., 0, s]`.
    pub s: f64,
    /// Number of `T^2` applications before the convergence check succeeded.
    pub iterations: usize,
    /// Final even-subsequence sup-norm displacement.
    pub residual: f64,
    /// Rate of convergence implied by `s`.
    pub roc: f64,
    pub converged: bool,
}

/// The attracting interval of limit probabilities, `[lo, hi]`, together with
/// the index (into the eigenvalue list) of the intermediate eigenvalue
/// closest to the midpoint of the extremes.
#[derive(Debug, Clone, Copy)]
pub struct AttractingInterval {
    pub lo: f64,
    pub hi: f64,
    /// 0-based index into `Spectrum::values`.
    pub i_star: usize,
}

impl AttractingInterval {
    pub fn contains(&self, s: f64) -> bool {
        s >= self.lo && s <= self.hi
    }

    pub fn half_width(&self) -> f64 {
        (self.hi - self.lo) / 2.0
    }
}

/// Eigenvalues mapped affinely so that `lambda_1 -> 1`, `lambda_n -> 0`.
/// The simplex map only depends on the eigenvalues through these, which keeps
/// it exactly independent of the condition number.
fn normalized_levels(sp: &Spectrum) -> Vec<f64> {
    let n = sp.n();
    let mut levels = Vec::with_capacity(n);
    levels.push(1.0);
    levels.extend_from_slice(sp.alphas());
    if n >= 2 {
        levels.push(0.0);
    }
    levels
}

/// Akaike coordinates of a GD state: `p_i = lambda_i^2 x_i^2 / sum_j ...`.
pub fn sigma(x: &[f64], sp: &Spectrum) -> Result<Vec<f64>> {
    if x.len() != sp.n() {
        return Err(Error::DimensionMismatch {
            expected: sp.n(),
            got: x.len(),
        });
    }
    if x.iter().all(|&v| v == 0.0) {
        return Err(Error::ZeroVector);
    }
    let mut p: Vec<f64> = x
        .iter()
        .zip(sp.values())
        .map(|(&xi, &li)| (li * xi) * (li * xi))
        .collect();
    let total: f64 = p.iter().sum();
    for v in &mut p {
        *v /= total;
    }
    Ok(p)
}

/// The canonical representative of `sigma^{-1}(p)`: `x_j = sqrt(p_j) / lambda_j`.
pub fn sigma_inv(p: &[f64], sp: &Spectrum) -> Result<Vec<f64>> {
    check_simplex(p, sp)?;
    Ok(p
        .iter()
        .zip(sp.values())
        .map(|(&pi, &li)| pi.max(0.0).sqrt() / li)
        .collect())
}

fn check_simplex(p: &[f64], sp: &Spectrum) -> Result<()> {
    if p.len() != sp.n() {
        return Err(Error::DimensionMismatch {
            expected: sp.n(),
            got: p.len(),
        });
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::NotOnSimplex(format!("coordinates sum to {total}")));
    }
    if p.iter().any(|&v| v < -1e-12) {
        return Err(Error::NotOnSimplex("negative coordinate".into()));
    }
    Ok(())
}

/// Mean of the eigenvalues under the distribution `p`.
fn mean_level(p: &[f64], levels: &[f64]) -> f64 {
    p.iter().zip(levels).map(|(&pi, &li)| pi * li).sum()
}

/// Variance of the eigenvalue distribution `p` (with the true eigenvalues).
pub fn variance(p: &[f64], sp: &Spectrum) -> Result<f64> {
    check_simplex(p, sp)?;
    let l = sp.values();
    let mean = mean_level(p, l);
    Ok(p.iter()
        .zip(l)
        .map(|(&pi, &li)| pi * (mean - li) * (mean - li))
        .sum())
}

/// One application of the simplex map:
/// `T(p)_i = p_i (mean - lambda_i)^2 / sum_j p_j (mean - lambda_j)^2`.
/// Rejects vertices (zero variance). The output is renormalized by its exact
/// sum to kill drift.
pub fn t_map(p: &[f64], sp: &Spectrum) -> Result<Vec<f64>> {
    check_simplex(p, sp)?;
    let levels = normalized_levels(sp);
    let mean = mean_level(p, &levels);
    let mut q: Vec<f64> = p
        .iter()
        .zip(&levels)
        .map(|(&pi, &li)| pi * (mean - li) * (mean - li))
        .collect();
    let total: f64 = q.iter().sum();
    if total <= 0.0 {
        return Err(Error::VertexInput);
    }
    for v in &mut q {
        *v /= total;
    }
    Ok(q)
}

/// The reduced map: the first `n-1` coordinates of `T` as a function of the
/// first `n-1` coordinates of `p` (with `p_n = 1 - sum`). The same rational
/// formula extends smoothly off the simplex, which is what finite-difference
/// probes rely on.
pub fn theta(p_reduced: &[f64], sp: &Spectrum) -> Result<Vec<f64>> {
    let n = sp.n();
    if p_reduced.len() != n - 1 {
        return Err(Error::DimensionMismatch {
            expected: n - 1,
            got: p_reduced.len(),
        });
    }
    let levels = normalized_levels(sp);
    let mut p = Vec::with_capacity(n);
    p.extend_from_slice(p_reduced);
    p.push(1.0 - p_reduced.iter().sum::<f64>());
    let mean = mean_level(&p, &levels);
    let denom: f64 = p
        .iter()
        .zip(&levels)
        .map(|(&pi, &li)| pi * (mean - li) * (mean - li))
        .sum();
    if denom == 0.0 {
        return Err(Error::VertexInput);
    }
    Ok(p[..n - 1]
        .iter()
        .zip(&levels[..n - 1])
        .map(|(&pi, &li)| pi * (mean - li) * (mean - li) / denom)
        .collect())
}

/// Iterates `T^2` from `p0` until the even subsequence stops moving (sup-norm
/// displacement and all middle coordinates below `tol`), and returns the
/// limit probability, i.e. the mass on the smallest eigenvalue.
pub fn limit_probability(
    p0: &[f64],
    sp: &Spectrum,
    tol: f64,
    max_iter: usize,
) -> Result<LimitResult> {
    check_simplex(p0, sp)?;
    let n = sp.n();
    if variance_normalized(p0, sp) <= 0.0 {
        return Err(Error::VertexInput);
    }
    if n == 2 {
        // T is an involution in 2-D: the even subsequence is constant.
        let s = p0[1];
        return Ok(LimitResult {
            s,
            iterations: 0,
            residual: 0.0,
            roc: roc_from_s(s, sp.a()),
            converged: true,
        });
    }
    let mut p = p0.to_vec();
    let mut residual = f64::INFINITY;
    for k in 0..max_iter {
        let q = t_map(&t_map(&p, sp)?, sp)?;
        residual = p
            .iter()
            .zip(&q)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let mid_max = q[1..n - 1].iter().cloned().fold(0.0, f64::max);
        p = q;
        if residual <= tol && mid_max <= tol {
            let s = p[n - 1];
            return Ok(LimitResult {
                s,
                iterations: k,
                residual,
                roc: roc_from_s(s, sp.a()),
                converged: true,
            });
        }
    }
    let s = p[n - 1];
    Ok(LimitResult {
        s,
        iterations: max_iter,
        residual,
        roc: roc_from_s(s, sp.a()),
        converged: false,
    })
}

fn variance_normalized(p: &[f64], sp: &Spectrum) -> f64 {
    let levels = normalized_levels(sp);
    let mean = mean_level(p, &levels);
    p.iter()
        .zip(&levels)
        .map(|(&pi, &li)| pi * (mean - li) * (mean - li))
        .sum()
}

/// Asymptotic rate implied by a limit probability `s`:
/// `sqrt(1 - (1 - s + s a)^{-1} (1 - s + s / a)^{-1})`.
pub fn roc_from_s(s: f64, a: f64) -> f64 {
    let rho2 = 1.0 - 1.0 / ((1.0 - s + s * a) * (1.0 - s + s / a));
    rho2.clamp(0.0, 1.0).sqrt()
}

/// Limit angle from the limit probability: `theta = atan(a^{-1} sqrt(s/(1-s)))`.
pub fn theta_from_s(s: f64, a: f64) -> f64 {
    if s >= 1.0 {
        return std::f64::consts::FRAC_PI_2;
    }
    ((s / (1.0 - s)).max(0.0).sqrt() / a).atan()
}

/// Inverse of [`theta_from_s`]: `s = a^2 sin^2 t / (cos^2 t + a^2 sin^2 t)`.
pub fn s_from_theta(theta: f64, a: f64) -> f64 {
    let (sin, cos) = theta.sin_cos();
    let num = a * a * sin * sin;
    num / (cos * cos + num)
}

/// Analytic Jacobian of the reduced map at the fixed point `[s; 0]`, the
/// period-2 multipliers `mu_i(s)`, and whether `s` is in the attracting
/// interval. Requires an intermediate eigenvalue.
pub fn jacobian_at_fixed_point(sv: f64, sp: &Spectrum) -> Result<StabilityReport> {
    let n = sp.n();
    if n < 3 {
        return Err(Error::NoIntermediateEigenvalue);
    }
    if !(sv > 0.0 && sv < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "fixed-point parameter must lie in (0, 1), got {sv}"
        )));
    }
    let alphas = sp.alphas();
    let dim = n - 1;
    let mut jac = DMatrix::zeros(dim, dim);
    jac[(0, 0)] = -1.0;
    for (j, &al) in alphas.iter().enumerate() {
        jac[(0, j + 1)] = -al * al / sv;
        jac[(j + 1, j + 1)] = (al - sv) * (al - sv) / (sv * (1.0 - sv));
    }
    let mu: Vec<f64> = alphas
        .iter()
        .map(|&al| {
            let r = (sv * (1.0 - sv) - al * (1.0 - al)) / (sv * (1.0 - sv));
            r * r
        })
        .collect();
    let near_singularity = alphas
        .iter()
        .any(|&al| (sv - al).abs() < 1e-12 || (sv - (1.0 - al)).abs() < 1e-12);
    let in_i = attracting_interval(sp)?.contains(sv);
    Ok(StabilityReport {
        s: sv,
        jacobian: jac,
        mu,
        in_i,
        near_singularity,
    })
}

/// The interval of limit probabilities whose fixed points carry no unstable
/// direction: `|s - 1/2| <= sqrt(1 - 2 alpha*(1 - alpha*)) / 2`, where
/// `alpha*` is the intermediate coordinate closest to 1/2.
pub fn attracting_interval(sp: &Spectrum) -> Result<AttractingInterval> {
    let alphas = sp.alphas();
    if alphas.is_empty() {
        return Err(Error::NoIntermediateEigenvalue);
    }
    let (k, &al) = alphas
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| {
            (*a - 0.5).abs().partial_cmp(&(*b - 0.5).abs()).unwrap()
        })
        .unwrap();
    let w = 0.5 * (1.0 - 2.0 * al * (1.0 - al)).max(0.0).sqrt();
    Ok(AttractingInterval {
        lo: 0.5 - w,
        hi: 0.5 + w,
        i_star: k + 1,
    })
}

/// Rate lower bound `(1-a) / sqrt((1+a)^2 + B a)` with
/// `B = 4 (1 + delta^2) / (1 - delta^2)` and `delta` the (signed, by default)
/// minimal relative deviation of an intermediate eigenvalue from the midpoint
/// of the extremes.
pub fn akaike_lower_bound(sp: &Spectrum) -> Result<f64> {
    akaike_lower_bound_with(sp, DeltaConvention::SignedMin)
}

pub fn akaike_lower_bound_with(sp: &Spectrum, conv: DeltaConvention) -> Result<f64> {
    let n = sp.n();
    if n < 3 {
        return Err(Error::NoIntermediateEigenvalue);
    }
    let l = sp.values();
    let (l1, ln) = (l[0], l[n - 1]);
    let mid = (l1 + ln) / 2.0;
    let half = (l1 - ln) / 2.0;
    let deltas = l[1..n - 1].iter().map(|&li| (li - mid) / half);
    let delta = match conv {
        DeltaConvention::SignedMin => deltas.fold(f64::INFINITY, f64::min),
        DeltaConvention::AbsMin => deltas.map(f64::abs).fold(f64::INFINITY, f64::min),
    };
    let d2 = delta * delta;
    if d2 >= 1.0 {
        return Err(Error::InvalidArgument(
            "delta^2 >= 1: no strict intermediate eigenvalue".into(),
        ));
    }
    let b = 4.0 * (1.0 + d2) / (1.0 - d2);
    let a = sp.a();
    Ok((1.0 - a) / ((1.0 + a) * (1.0 + a) + b * a).sqrt())
}
