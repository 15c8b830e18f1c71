//! Exact minimization of degree-<=4 line restrictions and the generic
//! exact-line-search GD driver for objectives that are quartic along lines.

use crate::error::{Error, Result};
use crate::quadratic::Spectrum;
use nalgebra::Matrix3;

/// Coefficients of `p(t) = c4 t^4 + c3 t^3 + c2 t^2 + c1 t + c0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuarticPoly {
    pub c4: f64,
    pub c3: f64,
    pub c2: f64,
    pub c1: f64,
    pub c0: f64,
}

impl QuarticPoly {
    pub fn new(c4: f64, c3: f64, c2: f64, c1: f64, c0: f64) -> Self {
        QuarticPoly { c4, c3, c2, c1, c0 }
    }

    /// Horner evaluation.
    pub fn eval(&self, t: f64) -> f64 {
        (((self.c4 * t + self.c3) * t + self.c2) * t + self.c1) * t + self.c0
    }

    pub fn scaled(&self, factor: f64) -> Self {
        QuarticPoly::new(
            self.c4 * factor,
            self.c3 * factor,
            self.c2 * factor,
            self.c1 * factor,
            self.c0 * factor,
        )
    }

    /// Zeroes leading coefficients that are negligible relative to the
    /// largest coefficient magnitude. Interpolated restrictions of
    /// lower-degree objectives carry roundoff-sized c4/c3 that would
    /// otherwise flip the boundedness classification.
    pub fn trimmed(&self, rel_eps: f64) -> Self {
        let scale = [self.c4, self.c3, self.c2, self.c1, self.c0]
            .iter()
            .map(|c| c.abs())
            .fold(0.0, f64::max);
        let cut = rel_eps * scale;
        let mut q = *self;
        if q.c4.abs() <= cut {
            q.c4 = 0.0;
            if q.c3.abs() <= cut {
                q.c3 = 0.0;
            }
        }
        q
    }
}

/// Result of a one-dimensional exact line search over `t >= 0`.
#[derive(Debug, Clone)]
pub struct LineSearchResult {
    pub t_star: f64,
    pub p_at_t: f64,
    /// Stationary points (and t = 0) that were examined.
    pub candidates: Vec<f64>,
}

/// Real roots of `a t^3 + b t^2 + c t + d`, multiplicities collapsed.
/// Closed form with a trigonometric/Cardano branch; falls back to a 3x3
/// companion-matrix eigensolve when the discriminant is near zero.
pub fn cubic_roots(a: f64, b: f64, c: f64, d: f64) -> Vec<f64> {
    if a == 0.0 {
        return quadratic_roots(b, c, d);
    }
    let (b, c, d) = (b / a, c / a, d / a);
    // depressed cubic u^3 + p u + q, t = u - b/3
    let shift = b / 3.0;
    let p = c - b * b / 3.0;
    let q = 2.0 * b * b * b / 27.0 - b * c / 3.0 + d;
    let disc = -4.0 * p * p * p - 27.0 * q * q;
    let scale = 4.0 * p.abs().powi(3) + 27.0 * q * q;
    if disc.abs() <= 1e-12 * scale.max(1e-300) {
        // Repeated roots. The triple root is handled analytically: its
        // companion matrix is nilpotent, which defeats iterative eigensolvers.
        if p.abs() <= 1e-12 * (c.abs() + b * b).max(1e-300) {
            return vec![-shift];
        }
        return companion_roots(b, c, d).unwrap_or_else(|| {
            // Double + simple root of the depressed cubic, in closed form.
            vec![-3.0 * q / (2.0 * p) - shift, 3.0 * q / p - shift]
        });
    }
    if disc > 0.0 {
        // three distinct real roots
        let m = 2.0 * (-p / 3.0).sqrt();
        let arg = (3.0 * q / (p * m)).clamp(-1.0, 1.0);
        let phi = arg.acos() / 3.0;
        (0..3)
            .map(|k| m * (phi - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos() - shift)
            .collect()
    } else {
        // one real root (Cardano)
        let half_q = q / 2.0;
        let sq = (half_q * half_q + p * p * p / 27.0).sqrt();
        let u = (-half_q + sq).cbrt() + (-half_q - sq).cbrt();
        vec![u - shift]
    }
}

fn quadratic_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    if a == 0.0 {
        if b == 0.0 {
            return Vec::new();
        }
        return vec![-c / b];
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return Vec::new();
    }
    let sq = disc.sqrt();
    // numerically stable split
    let q = -(b + b.signum() * sq) / 2.0;
    if q == 0.0 {
        return vec![0.0];
    }
    vec![q / a, c / q]
}

/// Roots of the monic cubic `t^3 + b t^2 + c t + d` via the eigenvalues of
/// its companion matrix; `None` when the Schur iteration does not converge.
fn companion_roots(b: f64, c: f64, d: f64) -> Option<Vec<f64>> {
    let m = Matrix3::new(0.0, 0.0, -d, 1.0, 0.0, -c, 0.0, 1.0, -b);
    let schur = nalgebra::linalg::Schur::try_new(m, 1e-14, 10_000)?;
    Some(
        schur
            .complex_eigenvalues()
            .iter()
            .filter(|ev| ev.im.abs() <= 1e-8 * (1.0 + ev.re.abs()))
            .map(|ev| ev.re)
            .collect(),
    )
}

/// Global minimizer of a bounded-below degree-<=4 polynomial over `t >= 0`.
/// Ties break toward smaller `t`; `t = 0` is always a candidate.
pub fn minimize_quartic_nonneg(q: &QuarticPoly) -> Result<LineSearchResult> {
    let stationary: Vec<f64> = if q.c4 > 0.0 {
        cubic_roots(4.0 * q.c4, 3.0 * q.c3, 2.0 * q.c2, q.c1)
    } else if q.c4 < 0.0 {
        return Err(Error::UnboundedBelow);
    } else if q.c3 != 0.0 {
        if q.c3 < 0.0 {
            return Err(Error::UnboundedBelow);
        }
        quadratic_roots(3.0 * q.c3, 2.0 * q.c2, q.c1)
    } else if q.c2 != 0.0 {
        if q.c2 < 0.0 {
            return Err(Error::UnboundedBelow);
        }
        vec![-q.c1 / (2.0 * q.c2)]
    } else if q.c1 < 0.0 {
        return Err(Error::UnboundedBelow);
    } else {
        Vec::new()
    };

    let mut candidates: Vec<f64> = std::iter::once(0.0)
        .chain(stationary.into_iter().filter(|&t| t >= 0.0 && t.is_finite()))
        .collect();
    candidates.sort_by(|x, y| x.partial_cmp(y).unwrap());
    candidates.dedup();

    let mut t_star = 0.0;
    let mut best = q.eval(0.0);
    for &t in &candidates[1..] {
        let v = q.eval(t);
        if v < best {
            best = v;
            t_star = t;
        }
    }
    Ok(LineSearchResult {
        t_star,
        p_at_t: best,
        candidates,
    })
}

/// An objective that restricts to a degree-<=4 polynomial along every line.
pub trait Objective {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
    fn grad(&self, x: &[f64]) -> Vec<f64>;

    /// Exact coefficients of `t -> value(x + t d)`. The default interpolates
    /// from five evaluations, which is exact (up to roundoff) for any
    /// objective of degree <= 4 along lines.
    fn line_quartic(&self, x: &[f64], d: &[f64]) -> QuarticPoly {
        line_restriction(self, x, d)
    }

    /// Gradient and line restriction along `d = -grad` in one call; concrete
    /// objectives override this to share intermediate products.
    fn grad_and_line_quartic(&self, x: &[f64]) -> (Vec<f64>, QuarticPoly) {
        let g = self.grad(x);
        let d: Vec<f64> = g.iter().map(|v| -v).collect();
        let q = self.line_quartic(x, &d);
        (g, q)
    }
}

/// Five-point interpolation of `t -> obj.value(x + t d)` at t = -2..2.
pub fn line_restriction<O: Objective + ?Sized>(obj: &O, x: &[f64], d: &[f64]) -> QuarticPoly {
    let at = |t: f64| -> f64 {
        let pt: Vec<f64> = x.iter().zip(d).map(|(&xi, &di)| xi + t * di).collect();
        obj.value(&pt)
    };
    let p0 = at(0.0);
    let (p1, pm1) = (at(1.0), at(-1.0));
    let (p2, pm2) = (at(2.0), at(-2.0));
    QuarticPoly::new(
        (p2 + pm2 - 4.0 * (p1 + pm1) + 6.0 * p0) / 24.0,
        (p2 - pm2 - 2.0 * (p1 - pm1)) / 12.0,
        (16.0 * (p1 + pm1) - (p2 + pm2) - 30.0 * p0) / 24.0,
        (8.0 * (p1 - pm1) - (p2 - pm2)) / 12.0,
        p0,
    )
}

/// Iterates, objective values, gradient norms and accepted step sizes of a
/// generic exact-line-search run.
#[derive(Debug, Clone)]
pub struct GenericTrajectory {
    pub states: Vec<Vec<f64>>,
    pub values: Vec<f64>,
    pub grad_norms: Vec<f64>,
    pub step_sizes: Vec<f64>,
    pub converged: bool,
    /// Line search returned t = 0 with the gradient still above tolerance.
    pub stalled: bool,
}

impl GenericTrajectory {
    pub fn steps(&self) -> usize {
        self.step_sizes.len()
    }

    pub fn last_state(&self) -> &[f64] {
        self.states.last().expect("trajectory holds the seed")
    }
}

/// Exact-line-search gradient descent on a generic quartic-along-lines
/// objective: `d = -grad f(x)`, `t* = argmin_{t>=0} f(x + t d)`, repeat until
/// the gradient norm drops below `tol_grad` or `max_k` steps.
pub fn els_gd_generic<O: Objective + ?Sized>(
    obj: &O,
    x0: &[f64],
    tol_grad: f64,
    max_k: usize,
) -> Result<GenericTrajectory> {
    if x0.len() != obj.dim() {
        return Err(Error::DimensionMismatch {
            expected: obj.dim(),
            got: x0.len(),
        });
    }
    let mut traj = GenericTrajectory {
        states: Vec::new(),
        values: Vec::new(),
        grad_norms: Vec::new(),
        step_sizes: Vec::new(),
        converged: false,
        stalled: false,
    };
    let mut x = x0.to_vec();
    for k in 0..=max_k {
        let (g, q) = obj.grad_and_line_quartic(&x);
        let gn = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        traj.states.push(x.clone());
        traj.values.push(q.c0);
        traj.grad_norms.push(gn);
        if gn <= tol_grad {
            traj.converged = true;
            break;
        }
        if k == max_k {
            break;
        }
        let q_trim = q.trimmed(1e-13);
        let res = match minimize_quartic_nonneg(&q_trim) {
            Ok(r) => r,
            Err(Error::UnboundedBelow) => {
                // The driver only follows descent rays of objectives bounded
                // below, so an apparently unbounded restriction means the
                // high-order coefficients are pure roundoff (tiny negative
                // c4 near a minimizer). Fall back to the quadratic
                // truncation, which carries the meaningful signal there.
                let q2 = QuarticPoly::new(0.0, 0.0, q_trim.c2, q_trim.c1, q_trim.c0);
                match minimize_quartic_nonneg(&q2) {
                    Ok(r) => r,
                    Err(_) => {
                        traj.stalled = true;
                        break;
                    }
                }
            }
            Err(e) => return Err(e),
        };
        if res.t_star == 0.0 {
            traj.stalled = true;
            break;
        }
        for (xi, gi) in x.iter_mut().zip(&g) {
            *xi -= res.t_star * gi;
        }
        traj.step_sizes.push(res.t_star);
    }
    Ok(traj)
}

/// The diagonal quadratic `f(x) = x' A x / 2` as a generic objective, for
/// cross-checking the generic driver against the specialized one.
#[derive(Debug, Clone)]
pub struct QuadraticObjective {
    spectrum: Spectrum,
}

impl QuadraticObjective {
    pub fn new(spectrum: Spectrum) -> Self {
        QuadraticObjective { spectrum }
    }
}

impl Objective for QuadraticObjective {
    fn dim(&self) -> usize {
        self.spectrum.n()
    }

    fn value(&self, x: &[f64]) -> f64 {
        0.5 * x
            .iter()
            .zip(self.spectrum.values())
            .map(|(&xi, &li)| li * xi * xi)
            .sum::<f64>()
    }

    fn grad(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.spectrum.values())
            .map(|(&xi, &li)| li * xi)
            .collect()
    }

    fn line_quartic(&self, x: &[f64], d: &[f64]) -> QuarticPoly {
        let l = self.spectrum.values();
        let dad: f64 = d.iter().zip(l).map(|(&di, &li)| li * di * di).sum();
        let dax: f64 = d.iter().zip(l).zip(x).map(|((&di, &li), &xi)| li * di * xi).sum();
        QuarticPoly::new(0.0, 0.0, 0.5 * dad, dax, self.value(x))
    }
}
