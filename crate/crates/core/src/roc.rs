//! Rate-of-convergence estimation: per-seed estimates by two routes, the
//! 2-D closed forms and quadrature, Monte Carlo averages over the unit
//! sphere, and the limit-angle distribution.

use crate::akaike::{limit_probability, roc_from_s, sigma, theta_from_s};
use crate::error::{Error, Result};
use crate::quadratic::{els_step_size, gd_step, shrink_factor, Spectrum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use std::f64::consts::FRAC_PI_2;

/// Which route produced a [`RocEstimate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RocMethod {
    /// Geometric mean of per-step shrink factors over a stabilized tail window.
    GeometricMean,
    /// Simplex-map limit probability mapped through the rate formula.
    LimitProbability,
}

/// Estimated asymptotic rate for a single seed.
#[derive(Debug, Clone)]
pub struct RocEstimate {
    pub rho_star: f64,
    pub method: RocMethod,
    pub k_used: usize,
    pub residual: f64,
    /// Limit probability, when the limit-probability route ran.
    pub limit_s: Option<f64>,
    /// Estimate from the other route, when both ran.
    pub cross_check: Option<f64>,
    pub converged: bool,
}

/// Which moment of the shrink factor to average.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Moment {
    First,
    Second,
}

/// Averaged rate over uniform seeds, with Monte Carlo standard error
/// (zero for quadrature).
#[derive(Debug, Clone)]
pub struct AverageRocResult {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
    pub a: f64,
    pub non_converged: usize,
}

/// Histogram of limit angles over [0, pi/2], normalized to unit integral.
#[derive(Debug, Clone)]
pub struct AngleHistogram {
    pub bin_edges: Vec<f64>,
    pub densities: Vec<f64>,
    pub samples: usize,
    pub non_converged: usize,
}

/// Tail window length for the geometric-mean route.
const GEO_WINDOW: usize = 50;
/// Stabilization tolerance for successive window geometric means.
const GEO_STAB_TOL: f64 = 1e-8;

/// Estimates the asymptotic rate for seed `x0`: runs both routes and reports
/// the limit-probability value with the geometric-mean value as cross-check.
pub fn estimate_roc(x0: &[f64], sp: &Spectrum, tol: f64, max_k: usize) -> Result<RocEstimate> {
    let lp = estimate_roc_with(x0, sp, tol, max_k, RocMethod::LimitProbability)?;
    let gm = estimate_roc_with(x0, sp, tol, max_k, RocMethod::GeometricMean)?;
    Ok(RocEstimate {
        cross_check: Some(gm.rho_star),
        ..lp
    })
}

/// Estimates the asymptotic rate by the requested route only.
pub fn estimate_roc_with(
    x0: &[f64],
    sp: &Spectrum,
    tol: f64,
    max_k: usize,
    method: RocMethod,
) -> Result<RocEstimate> {
    if x0.iter().all(|&v| v == 0.0) {
        return Err(Error::ZeroVector);
    }
    match method {
        RocMethod::LimitProbability => {
            let p0 = sigma(x0, sp)?;
            if sp.n() >= 2 && is_vertex(&p0) {
                // eigenvector seed: one exact step, rate 0
                return Ok(RocEstimate {
                    rho_star: 0.0,
                    method,
                    k_used: 0,
                    residual: 0.0,
                    limit_s: None,
                    cross_check: None,
                    converged: true,
                });
            }
            let lim = limit_probability(&p0, sp, tol, max_k)?;
            Ok(RocEstimate {
                rho_star: lim.roc,
                method,
                k_used: lim.iterations,
                residual: lim.residual,
                limit_s: Some(lim.s),
                cross_check: None,
                converged: lim.converged,
            })
        }
        RocMethod::GeometricMean => geometric_mean_estimate(x0, sp, max_k),
    }
}

fn is_vertex(p: &[f64]) -> bool {
    p.iter().filter(|&&v| v > 0.0).count() <= 1
}

/// Runs exact-line-search GD and reports the geometric mean of the shrink
/// factors over the trailing window once it stabilizes.
fn geometric_mean_estimate(x0: &[f64], sp: &Spectrum, max_k: usize) -> Result<RocEstimate> {
    let mut x = x0.to_vec();
    let mut log_rhos: Vec<f64> = Vec::new();
    let mut prev_window: Option<f64> = None;
    let mut residual = f64::INFINITY;
    for k in 0..max_k {
        if x.iter().all(|&v| v == 0.0) {
            // reached the exact minimizer: rate is the geometric mean so far
            let g = window_geomean(&log_rhos, log_rhos.len());
            return Ok(RocEstimate {
                rho_star: g,
                method: RocMethod::GeometricMean,
                k_used: k,
                residual: 0.0,
                limit_s: None,
                cross_check: None,
                converged: true,
            });
        }
        let rho = shrink_factor(&x, sp)?;
        if rho == 0.0 {
            return Ok(RocEstimate {
                rho_star: 0.0,
                method: RocMethod::GeometricMean,
                k_used: k,
                residual: 0.0,
                limit_s: None,
                cross_check: None,
                converged: true,
            });
        }
        log_rhos.push(rho.ln());
        x = gd_step(&x, sp)?;
        if log_rhos.len() >= GEO_WINDOW {
            let g = window_geomean(&log_rhos, GEO_WINDOW);
            if let Some(prev) = prev_window {
                residual = (g - prev).abs();
                if residual <= GEO_STAB_TOL {
                    return Ok(RocEstimate {
                        rho_star: g,
                        method: RocMethod::GeometricMean,
                        k_used: log_rhos.len(),
                        residual,
                        limit_s: None,
                        cross_check: None,
                        converged: true,
                    });
                }
            }
            prev_window = Some(g);
        }
    }
    let g = window_geomean(&log_rhos, GEO_WINDOW.min(log_rhos.len()));
    Ok(RocEstimate {
        rho_star: g,
        method: RocMethod::GeometricMean,
        k_used: log_rhos.len(),
        residual,
        limit_s: None,
        cross_check: None,
        converged: false,
    })
}

fn window_geomean(log_rhos: &[f64], window: usize) -> f64 {
    if log_rhos.is_empty() || window == 0 {
        return 0.0;
    }
    let tail = &log_rhos[log_rhos.len() - window..];
    (tail.iter().sum::<f64>() / window as f64).exp()
}

/// Closed form of the 2-D average squared rate:
/// `sqrt(a) (1 - sqrt(a))^2 / ((1 + a)(1 - sqrt(a) + a))`.
pub fn average_sq_roc_closed_form_2d(a: f64) -> f64 {
    let r = a.sqrt();
    r * (1.0 - r) * (1.0 - r) / ((1.0 + a) * (1.0 - r + a))
}

/// 2-D average of the first or second moment of the rate over uniform seed
/// angles, by adaptive quadrature on [0, pi/2] to absolute tolerance `tol`.
pub fn average_roc_quadrature_2d(a: f64, which: Moment, tol: f64) -> Result<AverageRocResult> {
    if !(a > 0.0 && a <= 1.0) {
        return Err(Error::InvalidArgument(format!("a must be in (0, 1], got {a}")));
    }
    let f = |theta: f64| -> f64 {
        let (sin, cos) = theta.sin_cos();
        let s = a * a * sin * sin / (cos * cos + a * a * sin * sin);
        let rho = roc_from_s(s, a);
        match which {
            Moment::First => rho,
            Moment::Second => rho * rho,
        }
    };
    let integral = adaptive_quadrature(&f, 0.0, FRAC_PI_2, tol, 60);
    Ok(AverageRocResult {
        mean: integral / FRAC_PI_2,
        std_error: 0.0,
        samples: 0,
        a,
        non_converged: 0,
    })
}

// Embedded Gauss-Legendre pair used by the adaptive refinement.
const G7_X: [f64; 7] = [
    -9.49107912342758486e-1,
    -7.41531185599394460e-1,
    -4.05845151377397184e-1,
    0.0,
    4.05845151377397184e-1,
    7.41531185599394460e-1,
    9.49107912342758486e-1,
];
const G7_W: [f64; 7] = [
    1.29484966168870647e-1,
    2.79705391489276589e-1,
    3.81830050505118312e-1,
    4.17959183673468959e-1,
    3.81830050505118312e-1,
    2.79705391489276589e-1,
    1.29484966168870647e-1,
];
const G15_X: [f64; 15] = [
    -9.87992518020485377e-1,
    -9.37273392400705951e-1,
    -8.48206583410427206e-1,
    -7.24417731360170070e-1,
    -5.70972172608538830e-1,
    -3.94151347077563385e-1,
    -2.01194093997434514e-1,
    0.0,
    2.01194093997434514e-1,
    3.94151347077563385e-1,
    5.70972172608538830e-1,
    7.24417731360170070e-1,
    8.48206583410427206e-1,
    9.37273392400705951e-1,
    9.87992518020485377e-1,
];
const G15_W: [f64; 15] = [
    3.07532419961186465e-2,
    7.03660474881080689e-2,
    1.07159220467171773e-1,
    1.39570677926153908e-1,
    1.66269205816993781e-1,
    1.86161000015561878e-1,
    1.98431485327111246e-1,
    2.02578241925560898e-1,
    1.98431485327111246e-1,
    1.86161000015561878e-1,
    1.66269205816993781e-1,
    1.39570677926153908e-1,
    1.07159220467171773e-1,
    7.03660474881080689e-2,
    3.07532419961186465e-2,
];

fn gauss<const N: usize>(f: &impl Fn(f64) -> f64, a: f64, b: f64, x: &[f64; N], w: &[f64; N]) -> f64 {
    let half = (b - a) / 2.0;
    let mid = (a + b) / 2.0;
    let mut sum = 0.0;
    for i in 0..N {
        sum += w[i] * f(mid + half * x[i]);
    }
    sum * half
}

/// Adaptive bisection driven by an embedded 7/15-point Gauss pair: the
/// 15-point value is kept, the difference to the 7-point value estimates
/// the local error.
fn adaptive_quadrature(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: usize) -> f64 {
    let coarse = gauss(f, a, b, &G7_X, &G7_W);
    let fine = gauss(f, a, b, &G15_X, &G15_W);
    if (fine - coarse).abs() <= tol || depth == 0 {
        return fine;
    }
    let mid = (a + b) / 2.0;
    adaptive_quadrature(f, a, mid, tol / 2.0, depth - 1)
        + adaptive_quadrature(f, mid, b, tol / 2.0, depth - 1)
}

/// Derives an independent, reproducible RNG stream for sample `i` of a run
/// keyed by `seed`. The stream depends only on (seed, i), never on how
/// samples are partitioned across workers.
pub fn sample_rng(seed: u64, i: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&i.to_le_bytes());
    key[16..24].copy_from_slice(&0x9e37_79b9_7f4a_7c15u64.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

/// Uniform sample on the unit sphere in `R^n` (normalized Gaussian).
pub fn sample_unit_sphere<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    assert!(n >= 1, "dimension must be positive");
    loop {
        let x: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return x.into_iter().map(|v| v / norm).collect();
        }
    }
}

/// Standard Gaussian sample in `R^n`.
pub fn sample_standard_normal<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

/// Convergence tolerance for per-sample limit probabilities in bulk runs.
const MC_LIMIT_TOL: f64 = 1e-10;
/// Iteration cap for per-sample limit probabilities in bulk runs.
const MC_LIMIT_MAX_ITER: usize = 200_000;

/// Monte Carlo average rate over uniform seeds on the unit sphere.
/// Deterministic for a fixed `(seed, n_samples)`, independent of the worker
/// count: per-sample values are computed in parallel and reduced in index
/// order.
pub fn average_roc_monte_carlo(sp: &Spectrum, n_samples: usize, seed: u64) -> Result<AverageRocResult> {
    average_roc_monte_carlo_moment(sp, n_samples, seed, Moment::First)
}

/// Monte Carlo average of the chosen moment of the per-seed rate; the mean
/// of `Moment::Second` estimates E[rho*^2].
pub fn average_roc_monte_carlo_moment(
    sp: &Spectrum,
    n_samples: usize,
    seed: u64,
    which: Moment,
) -> Result<AverageRocResult> {
    if n_samples == 0 {
        return Err(Error::InvalidArgument("n_samples must be positive".into()));
    }
    let values: Vec<Option<f64>> = (0..n_samples as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = sample_rng(seed, i);
            let x = sample_unit_sphere(sp.n(), &mut rng);
            match estimate_roc_with(&x, sp, MC_LIMIT_TOL, MC_LIMIT_MAX_ITER, RocMethod::LimitProbability) {
                Ok(est) if est.converged => Some(match which {
                    Moment::First => est.rho_star,
                    Moment::Second => est.rho_star * est.rho_star,
                }),
                _ => None,
            }
        })
        .collect();
    let converged: Vec<f64> = values.iter().flatten().copied().collect();
    let non_converged = n_samples - converged.len();
    if converged.is_empty() {
        return Err(Error::NonConvergence(MC_LIMIT_MAX_ITER));
    }
    let m = converged.len() as f64;
    let mean = converged.iter().sum::<f64>() / m;
    let var = converged.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (m - 1.0).max(1.0);
    Ok(AverageRocResult {
        mean,
        std_error: (var / m).sqrt(),
        samples: converged.len(),
        a: sp.a(),
        non_converged,
    })
}

/// Estimates the distribution of limit angles over [0, pi/2] from uniform
/// seeds. Requires an intermediate eigenvalue. Non-converged samples are
/// excluded from the histogram and counted.
pub fn limit_angle_histogram(
    sp: &Spectrum,
    n_samples: usize,
    bins: usize,
    seed: u64,
) -> Result<AngleHistogram> {
    if sp.n() < 3 {
        return Err(Error::NoIntermediateEigenvalue);
    }
    if bins == 0 || n_samples == 0 {
        return Err(Error::InvalidArgument("bins and n_samples must be positive".into()));
    }
    let a = sp.a();
    let thetas: Vec<Option<f64>> = (0..n_samples as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = sample_rng(seed, i);
            let x = sample_unit_sphere(sp.n(), &mut rng);
            let p0 = sigma(&x, sp).ok()?;
            let lim = limit_probability(&p0, sp, MC_LIMIT_TOL, MC_LIMIT_MAX_ITER).ok()?;
            lim.converged.then(|| theta_from_s(lim.s, a))
        })
        .collect();

    let width = FRAC_PI_2 / bins as f64;
    let mut counts = vec![0usize; bins];
    let mut non_converged = 0usize;
    for t in &thetas {
        match t {
            Some(theta) => {
                let b = ((theta / width) as usize).min(bins - 1);
                counts[b] += 1;
            }
            None => non_converged += 1,
        }
    }
    let total = (n_samples - non_converged) as f64;
    let densities: Vec<f64> = counts.iter().map(|&c| c as f64 / (total * width)).collect();
    let bin_edges: Vec<f64> = (0..=bins).map(|i| i as f64 * width).collect();
    Ok(AngleHistogram {
        bin_edges,
        densities,
        samples: n_samples,
        non_converged,
    })
}

/// Exposes the exact-line-search step sequence alongside shrink factors;
/// thin wrapper kept here so CLI traces do not reach into the quadratic
/// module twice.
pub fn step_and_shrink(x: &[f64], sp: &Spectrum) -> Result<(f64, f64)> {
    Ok((els_step_size(x, sp)?, shrink_factor(x, sp)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadratic::worst_seed;

    fn spec(v: &[f64]) -> Spectrum {
        Spectrum::new(v).unwrap()
    }

    #[test]
    fn closed_form_examples() {
        assert_eq!(average_sq_roc_closed_form_2d(1.0), 0.0);
        let v = average_sq_roc_closed_form_2d(0.25);
        assert!((v - 0.5 * 0.25 / (1.25 * 0.75)).abs() < 1e-15);
        assert!(average_sq_roc_closed_form_2d(1e-12) < 1e-5);
    }

    #[test]
    fn quadrature_matches_closed_form() {
        for a in [0.5, 0.1, 0.01, 0.001] {
            let q = average_roc_quadrature_2d(a, Moment::Second, 1e-12).unwrap();
            let cf = average_sq_roc_closed_form_2d(a);
            assert!((q.mean - cf).abs() <= 1e-10 * cf.max(1e-30), "a={a}: {} vs {cf}", q.mean);
        }
        let q = average_roc_quadrature_2d(1.0, Moment::First, 1e-12).unwrap();
        assert!(q.mean.abs() < 1e-12);
    }

    #[test]
    fn estimate_equals_shrink_factor_in_2d() {
        let sp = spec(&[2.0, 1.0]);
        for x in [[1.0, 2.0], [0.3, -0.9], [5.0, 0.1]] {
            let est = estimate_roc(&x, &sp, 1e-12, 1000).unwrap();
            let rho = shrink_factor(&x, &sp).unwrap();
            assert!((est.rho_star - rho).abs() <= 1e-12);
        }
    }

    #[test]
    fn estimate_on_worst_seed() {
        let sp = spec(&[4.0, 2.5, 1.0]);
        let x0 = worst_seed(&sp).unwrap();
        let est = estimate_roc(&x0, &sp, 1e-12, 10_000).unwrap();
        assert!((est.rho_star - sp.worst_case_roc()).abs() < 1e-10);
        // the two routes agree
        assert!((est.rho_star - est.cross_check.unwrap()).abs() < 1e-6);
    }

    #[test]
    fn estimate_on_eigenvector() {
        let sp = spec(&[2.0, 1.0]);
        let est = estimate_roc(&[0.0, 1.0], &sp, 1e-12, 100).unwrap();
        assert_eq!(est.rho_star, 0.0);
    }

    #[test]
    fn sphere_sampler_basics() {
        let mut rng = sample_rng(42, 0);
        let x = sample_unit_sphere(1, &mut rng);
        assert!((x[0].abs() - 1.0).abs() < 1e-12);
        for n in [2, 5] {
            let x = sample_unit_sphere(n, &mut rng);
            let norm: f64 = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn sphere_sampler_mean_near_zero() {
        let n = 3;
        let samples = 20_000;
        let mut sums = vec![0.0; n];
        for i in 0..samples {
            let mut rng = sample_rng(7, i);
            let x = sample_unit_sphere(n, &mut rng);
            for (s, v) in sums.iter_mut().zip(&x) {
                *s += v;
            }
        }
        let bound = 4.0 / (samples as f64).sqrt();
        for s in sums {
            assert!((s / samples as f64).abs() < bound);
        }
    }

    #[test]
    fn monte_carlo_matches_quadrature_2d() {
        let a = 0.25;
        let sp = spec(&[1.0, a]);
        let mc = average_roc_monte_carlo(&sp, 20_000, 11).unwrap();
        let q = average_roc_quadrature_2d(a, Moment::First, 1e-12).unwrap();
        assert!(
            (mc.mean - q.mean).abs() <= 3.0 * mc.std_error,
            "mc {} quad {} se {}",
            mc.mean,
            q.mean,
            mc.std_error
        );
    }

    #[test]
    fn monte_carlo_deterministic() {
        let sp = spec(&[1.0, 0.25]);
        let r1 = average_roc_monte_carlo(&sp, 500, 3).unwrap();
        let r2 = average_roc_monte_carlo(&sp, 500, 3).unwrap();
        assert_eq!(r1.mean, r2.mean);
        assert_eq!(r1.std_error, r2.std_error);
    }

    #[test]
    fn jensen_consistency() {
        for a in [0.5, 0.05] {
            let m1 = average_roc_quadrature_2d(a, Moment::First, 1e-12).unwrap().mean;
            let m2 = average_roc_quadrature_2d(a, Moment::Second, 1e-12).unwrap().mean;
            assert!(m1 * m1 <= m2 + 1e-12);
        }
    }

    #[test]
    fn histogram_integrates_to_one() {
        let sp = spec(&[1.0, 0.55, 0.1]);
        let h = limit_angle_histogram(&sp, 2000, 64, 9).unwrap();
        let width = h.bin_edges[1] - h.bin_edges[0];
        let total: f64 = h.densities.iter().map(|d| d * width).sum();
        assert!((total - 1.0).abs() < 1e-9);
        assert!(limit_angle_histogram(&spec(&[2.0, 1.0]), 100, 10, 0).is_err());
    }
}
