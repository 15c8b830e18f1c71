//! Implementations of the `optgd` subcommands.

use serde_json::json;

use optgd::objectives::{
    gen_phase_retrieval, hessian_cond, rosenbrock_hessian_cond, spectral_init,
    PhaseRetrievalInstance, Rosenbrock,
};
use optgd::{
    a_norm, akaike_lower_bound, average_roc_monte_carlo_moment, average_roc_quadrature_2d,
    els_gd_generic, els_gd_run, estimate_roc, limit_angle_histogram, minimize_quartic_nonneg,
    sample_rng, sample_standard_normal, sample_unit_sphere, worst_seed, Moment, Objective,
    Spectrum,
};

use crate::report::{fmt, write_meta, Csv};
use crate::{
    AverageRocArgs, CliError, HessianTableArgs, LimitAnglesArgs, PhaseRetrievalArgs,
    RocTraceArgs, RosenbrockArgs,
};

fn parse_f64_list(text: &str, flag: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .map_err(|_| CliError::Usage(format!("{flag}: cannot parse '{s}' as a number")))
        })
        .collect()
}

fn parse_usize_list(text: &str, flag: &str) -> Result<Vec<usize>, CliError> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<usize>()
                .map_err(|_| CliError::Usage(format!("{flag}: cannot parse '{s}' as an integer")))
        })
        .collect()
}

/// Builds the spectrum either from an explicit eigenvalue list or from
/// (n, a, interior normalized levels).
fn resolve_spectrum(
    lambda: &Option<String>,
    n: Option<usize>,
    a: Option<f64>,
    alpha: &Option<String>,
) -> Result<Spectrum, CliError> {
    if let Some(text) = lambda {
        return Ok(Spectrum::new(&parse_f64_list(text, "--lambda")?)?);
    }
    let (n, a) = match (n, a) {
        (Some(n), Some(a)) => (n, a),
        _ => {
            return Err(CliError::Usage(
                "provide either --lambda or both --n and --a".into(),
            ))
        }
    };
    if n < 2 {
        return Err(CliError::Usage("--n must be at least 2".into()));
    }
    if !(a > 0.0 && a < 1.0) {
        return Err(CliError::Usage("--a must lie in (0, 1)".into()));
    }
    let mut alphas: Vec<f64> = match alpha {
        Some(text) => parse_f64_list(text, "--alpha")?,
        // Equispaced interior levels when not specified.
        None => (1..n - 1)
            .map(|i| 1.0 - i as f64 / (n - 1) as f64)
            .collect(),
    };
    if alphas.len() != n - 2 {
        return Err(CliError::Usage(format!(
            "--alpha needs {} interior levels for --n {n}",
            n - 2
        )));
    }
    alphas.sort_by(|x, y| y.partial_cmp(x).expect("finite levels"));
    let mut values = vec![1.0];
    values.extend(alphas.iter().map(|al| a + al * (1.0 - a)));
    values.push(a);
    Ok(Spectrum::new(&values)?)
}

pub fn roc_trace(args: &RocTraceArgs) -> Result<(), CliError> {
    let sp = resolve_spectrum(&args.lambda, args.n, args.a, &args.alpha)?;
    let x0 = match &args.x0 {
        Some(text) if text == "worst" => worst_seed(&sp)?,
        Some(text) => {
            let v = parse_f64_list(text, "--x0")?;
            if v.len() != sp.n() {
                return Err(CliError::Usage(format!(
                    "--x0 has {} components, spectrum has {}",
                    v.len(),
                    sp.n()
                )));
            }
            v
        }
        None => sample_unit_sphere(sp.n(), &mut sample_rng(args.seed, 0)),
    };

    let traj = els_gd_run(&x0, &sp, args.max_k, args.tol)?;
    let norm0 = a_norm(&x0, &sp)?;
    let mut csv = Csv::new("k,a_norm,rho_k,s_k");
    for k in 1..=traj.steps() {
        csv.row(&[
            &k.to_string(),
            &fmt(a_norm(&traj.states[k], &sp)?),
            &fmt(traj.shrink_factors[k - 1]),
            &fmt(traj.step_sizes[k - 1]),
        ]);
    }
    csv.write(&args.out)?;

    let final_norm = a_norm(traj.last_state(), &sp)?;
    let converged = final_norm <= args.tol * norm0;
    let rate = estimate_roc(&x0, &sp, 1e-10, 200_000).ok();
    write_meta(
        &args.out,
        "roc-trace",
        args,
        json!({
            "spectrum": sp.values(),
            "a": sp.a(),
            "worst_case_roc": sp.worst_case_roc(),
            "steps": traj.steps(),
            "initial_a_norm": norm0,
            "final_a_norm": final_norm,
            "converged": converged,
            "rho_star": rate.as_ref().map(|r| r.rho_star),
            "limit_probability": rate.as_ref().and_then(|r| r.limit_s),
        }),
    )
}

pub fn average_roc(args: &AverageRocArgs) -> Result<(), CliError> {
    enum Case {
        Sweep(f64),
        Explicit(Spectrum),
    }
    let cases: Vec<Case> = match (&args.a, &args.lambda) {
        (Some(list), None) => parse_f64_list(list, "--a")?
            .into_iter()
            .map(Case::Sweep)
            .collect(),
        (None, Some(text)) => {
            vec![Case::Explicit(Spectrum::new(&parse_f64_list(
                text, "--lambda",
            )?)?)]
        }
        _ => {
            return Err(CliError::Usage(
                "provide exactly one of --a (sweep) or --lambda".into(),
            ))
        }
    };

    let mut csv = Csv::new("a,worst,average,sqrt_avg_square");
    let mut rows_meta = Vec::new();
    for case in &cases {
        let (a, sp) = match case {
            Case::Sweep(a) => {
                if !(*a > 0.0 && *a <= 1.0) {
                    return Err(CliError::Usage("--a values must lie in (0, 1]".into()));
                }
                if *a == 1.0 {
                    // Perfectly conditioned: one exact step from anywhere.
                    csv.row(&[&fmt(1.0), &fmt(0.0), &fmt(0.0), &fmt(0.0)]);
                    rows_meta.push(json!({"a": 1.0, "method": "exact"}));
                    continue;
                }
                (*a, Spectrum::new(&[1.0, *a])?)
            }
            Case::Explicit(sp) => (sp.a(), sp.clone()),
        };
        let method = match args.method.as_deref() {
            Some("quad") => "quad",
            Some("mc") => "mc",
            Some(other) => {
                return Err(CliError::Usage(format!(
                    "--method must be quad or mc, got '{other}'"
                )))
            }
            None if sp.n() == 2 => "quad",
            None => "mc",
        };
        if method == "quad" && sp.n() != 2 {
            return Err(CliError::Usage(
                "--method quad is exact only for n=2; use --method mc for n >= 3".into(),
            ));
        }
        let worst = sp.worst_case_roc();
        let (avg, sq, detail) = if method == "quad" {
            let first = average_roc_quadrature_2d(a, Moment::First, args.quad_tol)?;
            let second = average_roc_quadrature_2d(a, Moment::Second, args.quad_tol)?;
            (first.mean, second.mean, json!({"method": "quad"}))
        } else {
            let first = average_roc_monte_carlo_moment(&sp, args.samples, args.seed, Moment::First)?;
            let second =
                average_roc_monte_carlo_moment(&sp, args.samples, args.seed, Moment::Second)?;
            (
                first.mean,
                second.mean,
                json!({
                    "method": "mc",
                    "std_error": first.std_error,
                    "converged_samples": first.samples,
                    "non_converged": first.non_converged,
                }),
            )
        };
        csv.row(&[&fmt(a), &fmt(worst), &fmt(avg), &fmt(sq.sqrt())]);
        let mut row = json!({"a": a, "spectrum": sp.values()});
        row.as_object_mut()
            .expect("object")
            .extend(detail.as_object().expect("object").clone());
        rows_meta.push(row);
    }
    csv.write(&args.out)?;
    write_meta(&args.out, "average-roc", args, json!({ "rows": rows_meta }))
}

pub fn limit_angles(args: &LimitAnglesArgs) -> Result<(), CliError> {
    let sp = Spectrum::new(&parse_f64_list(&args.lambda, "--lambda")?)?;
    if sp.n() < 3 {
        return Err(CliError::Usage(
            "limit-angles needs an intermediate eigenvalue (n >= 3)".into(),
        ));
    }
    let hist = limit_angle_histogram(&sp, args.samples, args.bins, args.seed)?;
    let bound = akaike_lower_bound(&sp)?;
    let a = sp.a();

    let mut csv = Csv::new("label,bin_center,value");
    for b in 0..hist.densities.len() {
        let center = 0.5 * (hist.bin_edges[b] + hist.bin_edges[b + 1]);
        csv.row(&["bin", &fmt(center), &fmt(hist.densities[b])]);
    }
    csv.row(&["akaike_bound", "", &fmt(bound)]);
    csv.row(&["worst_roc", "", &fmt(sp.worst_case_roc())]);
    csv.row(&["atan_inv_a", "", &fmt((1.0 / a).atan())]);
    csv.write(&args.out)?;

    write_meta(
        &args.out,
        "limit-angles",
        args,
        json!({
            "spectrum": sp.values(),
            "a": a,
            "samples": hist.samples,
            "non_converged": hist.non_converged,
            "akaike_bound": bound,
            "worst_roc": sp.worst_case_roc(),
            "atan_inv_a": (1.0 / a).atan(),
        }),
    )
}

/// One descent run on the phase-retrieval objective, recording the relative
/// error and objective value per iteration. Stops at relative error `tol`.
fn pr_descend(
    inst: &PhaseRetrievalInstance,
    x0: Vec<f64>,
    constant_step: Option<f64>,
    tol: f64,
    max_k: usize,
) -> (Vec<(f64, f64)>, Vec<f64>, bool) {
    let mut x = x0;
    let mut track = vec![(inst.rel_error(&x), inst.value(&x))];
    let mut converged = track[0].0 <= tol;
    for _ in 0..max_k {
        if converged {
            break;
        }
        let (g, q) = inst.grad_and_line_quartic(&x);
        let t = match constant_step {
            Some(s) => s,
            None => match minimize_quartic_nonneg(&q) {
                Ok(ls) => ls.t_star,
                Err(_) => break,
            },
        };
        if t == 0.0 {
            break;
        }
        for (xi, gi) in x.iter_mut().zip(&g) {
            *xi -= t * gi;
        }
        track.push((inst.rel_error(&x), inst.value(&x)));
        converged = track.last().expect("nonempty").0 <= tol;
    }
    (track, x, converged)
}

pub fn phase_retrieval(args: &PhaseRetrievalArgs) -> Result<(), CliError> {
    let inst = gen_phase_retrieval(args.n, args.m, args.seed)?;
    let constant_step = match args.method.as_str() {
        "els" => None,
        "const" => Some(args.step),
        other => {
            return Err(CliError::Usage(format!(
                "--method must be els or const, got '{other}'"
            )))
        }
    };
    let x0 = match args.start.as_str() {
        "spectral" => spectral_init(&inst)?,
        "truth" => inst.x_true().to_vec(),
        other => {
            return Err(CliError::Usage(format!(
                "--start must be spectral or truth, got '{other}'"
            )))
        }
    };

    inst.reset_matvec_count();
    let (track, _x, converged) = pr_descend(&inst, x0, constant_step, args.tol, args.max_k);
    let matvecs = inst.matvec_count();

    let mut csv = Csv::new("k,rel_error,f");
    for (k, (err, f)) in track.iter().enumerate() {
        csv.row(&[&k.to_string(), &fmt(*err), &fmt(*f)]);
    }
    csv.write(&args.out)?;

    let hc = hessian_cond(&inst, inst.x_true());
    write_meta(
        &args.out,
        "phase-retrieval",
        args,
        json!({
            "iterations": track.len() - 1,
            "converged": converged,
            "final_rel_error": track.last().expect("nonempty").0,
            "hessian_cond_at_x_true": hc.cond,
            "hessian_positive_definite": hc.positive_definite,
            "matvec_count": matvecs,
        }),
    )?;
    if converged {
        Ok(())
    } else {
        Err(CliError::Numerical(format!(
            "relative error {} above tolerance {} after {} iterations (output retained)",
            track.last().expect("nonempty").0,
            args.tol,
            track.len() - 1
        )))
    }
}

pub fn rosenbrock(args: &RosenbrockArgs) -> Result<(), CliError> {
    if args.n < 2 {
        return Err(CliError::Usage("rosenbrock needs --n >= 2".into()));
    }
    let obj = Rosenbrock::new(args.n);
    let cond = rosenbrock_hessian_cond(&vec![1.0; args.n]);
    let a = 1.0 / cond;
    let wc = (1.0 - a) / (1.0 + a);

    // Gradient tolerance implying f below args.tol near the minimizer:
    // f ~ 0.5 g' H^{-1} g <= 0.5 |g|^2 / lambda_min.
    let tol_grad = (2.0 * args.tol / cond).sqrt().min(1e-8);

    let mut csv = Csv::new("series,k,f");
    let mut max_steps = 0usize;
    let mut reached = 0usize;
    for i in 0..args.seeds {
        // Starts are the minimizer plus standard Gaussian noise.
        let mut rng = sample_rng(args.seed, i as u64);
        let x0: Vec<f64> = sample_standard_normal(args.n, &mut rng)
            .into_iter()
            .map(|z| 1.0 + z)
            .collect();
        let traj = els_gd_generic(&obj, &x0, tol_grad, args.max_k)?;
        let series = format!("seed_{i:04}");
        for (k, f) in traj.values.iter().enumerate() {
            csv.row(&[&series, &k.to_string(), &fmt(*f)]);
        }
        max_steps = max_steps.max(traj.steps());
        if traj.values.iter().any(|&f| f < args.tol) {
            reached += 1;
        }
    }
    // Worst-case reference contraction of the objective value, normalized to
    // start at 1: each step shrinks the error norm by at most wc, the value
    // by wc^2.
    for k in 0..=max_steps {
        csv.row(&["reference", &k.to_string(), &fmt(wc.powi(2 * k as i32))]);
    }
    csv.write(&args.out)?;

    write_meta(
        &args.out,
        "rosenbrock",
        args,
        json!({
            "hessian_cond_at_minimizer": cond,
            "a": a,
            "worst_case_roc": wc,
            "runs_reaching_tol": reached,
            "max_steps": max_steps,
        }),
    )
}

pub fn hessian_table(args: &HessianTableArgs) -> Result<(), CliError> {
    let sizes = parse_usize_list(&args.sizes, "--sizes")?;
    if sizes.is_empty() {
        return Err(CliError::Usage("--sizes must not be empty".into()));
    }
    let mut csv = Csv::new("n,m,cond_at_xstar,cond_along_a1,cond_random_1,cond_random_2,cond_random_3");
    let mut rows_meta = Vec::new();
    for (idx, &n) in sizes.iter().enumerate() {
        if n < 2 {
            return Err(CliError::Usage("--sizes entries must be >= 2".into()));
        }
        let m = (n as f64 * (n as f64).log2()).round() as usize;
        let inst = gen_phase_retrieval(n, m, args.seed.wrapping_add(idx as u64))?;
        let xstar = inst.x_true().to_vec();

        let at_point = |x: &[f64]| hessian_cond(&inst, x).cond;
        let shifted = |dir: &[f64]| -> Vec<f64> {
            let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
            xstar
                .iter()
                .zip(dir)
                .map(|(xs, d)| xs + 0.5 * d / norm)
                .collect()
        };

        let cond_star = at_point(&xstar);
        let cond_a1 = at_point(&shifted(&inst.sensor(0)));
        let cond_rand: Vec<f64> = (0..3)
            .map(|j| {
                // Random directions drawn independently of the instance.
                let mut rng = sample_rng(args.seed ^ 0x5eed_d1e5, (idx * 8 + j) as u64);
                at_point(&shifted(&sample_unit_sphere(n, &mut rng)))
            })
            .collect();

        csv.row(&[
            &n.to_string(),
            &m.to_string(),
            &fmt(cond_star),
            &fmt(cond_a1),
            &fmt(cond_rand[0]),
            &fmt(cond_rand[1]),
            &fmt(cond_rand[2]),
        ]);
        rows_meta.push(json!({
            "n": n,
            "m": m,
            "cond_at_xstar": cond_star,
            "cond_along_a1": cond_a1,
            "cond_random": cond_rand,
        }));
    }
    csv.write(&args.out)?;
    write_meta(&args.out, "hessian-table", args, json!({ "rows": rows_meta }))
}
