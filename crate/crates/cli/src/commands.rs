//! One function per subcommand.

use serde_json::json;
use tht_core::acceptance::{eigenfunctions_by_magnitude, gaussian_control, reference_metrics, Acceptance, EIGEN_COUNT};
use tht_core::discretization::{
    uniform_matrix, wavelet_matrix, GridShift, OperatorMatrix, UniformParams, WaveletParams,
};
use tht_core::geometry::Side;
use tht_core::quadrature::QuadratureOptions;
use tht_core::spectrum::{compute_svd, transition_profile, zero_count, zero_count_outside, SingularSystem};
use tht_core::verify::{
    accumulation_experiment, check_commutation, check_gn_eigen, commutation_discrepancy_fn, log_singularity_fit,
    svd_from_sl, test_points, truncated_commutation_discrepancy, Metric, NestedRules, VerificationReport,
};
use tht_core::{Error, Result, RunConfig};

use crate::output::Outputs;
use crate::{
    AcceptanceArgs, DiscretizeArgs, EigensolveArgs, Figure, Finished, Kind, MatrixArgs, ReproduceArgs, Shift,
    SpectrumArgs, Suite, VerifyArgs,
};

fn build_matrix(rc: &RunConfig, a: &MatrixArgs) -> Result<OperatorMatrix> {
    let cfg = rc.configuration()?;
    match a.kind {
        Kind::Uniform => {
            let shift = match a.shift {
                Shift::Interleaved => GridShift::Interleaved,
                Shift::PlusHalf => GridShift::PlusHalf,
                Shift::MinusHalf => GridShift::MinusHalf,
            };
            uniform_matrix(
                &cfg,
                &UniformParams {
                    n: a.n,
                    step: a.step,
                    shift,
                },
            )
        }
        Kind::Wavelet => wavelet_matrix(
            &cfg,
            &WaveletParams {
                scale: a.scale,
                filter: a.filter.clone(),
                levels: a.levels,
            },
        ),
    }
}

fn matrix_parameters(a: &MatrixArgs) -> serde_json::Value {
    match a.kind {
        Kind::Uniform => json!({ "kind": "uniform", "n": a.n, "step": a.step, "shift": format!("{:?}", a.shift) }),
        Kind::Wavelet => json!({ "kind": "wavelet", "scale": a.scale, "filter": a.filter, "levels": a.levels }),
    }
}

fn sigma_rows(s: &[f64]) -> Vec<Vec<f64>> {
    s.iter().enumerate().map(|(i, &v)| vec![i as f64, v]).collect()
}

/// Columns `x, v_1, v_2, …` for several vectors on a shared grid.
fn vector_table(x: &[f64], columns: &[Vec<f64>]) -> Vec<Vec<f64>> {
    (0..x.len())
        .map(|i| std::iter::once(x[i]).chain(columns.iter().map(|c| c[i])).collect())
        .collect()
}

fn check(failures: &mut Vec<String>, ok: bool, what: String) {
    if !ok {
        failures.push(what);
    }
}

pub fn discretize(rc: &RunConfig, a: &DiscretizeArgs, out: &mut Outputs) -> Result<Finished> {
    let m = build_matrix(rc, &a.matrix)?;
    let path = out.path("matrix.bin");
    m.save(&path)?;
    out.record(path.clone());
    let mut side = path.into_os_string();
    side.push(".json");
    out.record(side.into());
    if a.csv {
        let mut buf = Vec::new();
        m.write_csv(&mut buf)?;
        out.write("matrix.csv", &buf)?;
    }
    let mut p = matrix_parameters(&a.matrix);
    p["rows"] = json!(m.nrows());
    p["cols"] = json!(m.ncols());
    Ok(Finished {
        parameters: p,
        failures: Vec::new(),
    })
}

fn write_vectors(out: &mut Outputs, s: &SingularSystem, indices: &[usize]) -> Result<()> {
    for &n in indices {
        if n >= s.len() {
            return Err(Error::InvalidArgument(format!(
                "vector index {n} out of range 0..{}",
                s.len()
            )));
        }
        let (x, f) = s.right_function(n);
        out.table(&format!("vectors/f_{n}.csv"), &["x", "value"], &vector_table(&x, &[f]))?;
        let (x, g) = s.left_function(n);
        out.table(&format!("vectors/g_{n}.csv"), &["x", "value"], &vector_table(&x, &[g]))?;
    }
    Ok(())
}

pub fn spectrum(rc: &RunConfig, a: &SpectrumArgs, out: &mut Outputs) -> Result<Finished> {
    let (m, mut p) = match &a.input {
        Some(path) => (
            OperatorMatrix::load(path)?,
            json!({ "input": path.display().to_string() }),
        ),
        None => (build_matrix(rc, &a.matrix)?, matrix_parameters(&a.matrix)),
    };
    let s = compute_svd(&m)?;
    let prof = transition_profile(&s.sigmas, a.profile[0], a.profile[1])?;
    out.table("sigmas.csv", &["index", "sigma"], &sigma_rows(&s.sigmas))?;
    let (dl, dr) = s.orthonormality_defect();
    let rec = s.reconstruction_error(&m.entries);
    out.json(
        "profile.json",
        &json!({
            "lo": a.profile[0],
            "hi": a.profile[1],
            "profile": prof,
            "left_gram_deviation": dl,
            "right_gram_deviation": dr,
            "reconstruction_error": rec,
            "count_below_1e-12": s.sigmas.iter().filter(|&&v| v < 1e-12).count(),
        }),
    )?;
    write_vectors(out, &s, &a.vectors)?;
    let mut failures = Vec::new();
    check(
        &mut failures,
        dl < 1e-8 && dr < 1e-8,
        format!("orthonormality defect ({dl:e}, {dr:e})"),
    );
    check(
        &mut failures,
        rec <= 1e-10 * m.entries.norm(),
        format!("reconstruction error {rec:e}"),
    );
    p["profile"] = json!(a.profile);
    Ok(Finished {
        parameters: p,
        failures,
    })
}

pub fn eigensolve(rc: &RunConfig, a: &EigensolveArgs, out: &mut Outputs) -> Result<Finished> {
    let cfg = rc.configuration()?;
    let params = rc.solver_params()?;
    let efs = eigenfunctions_by_magnitude(&cfg, a.count, &params, &NestedRules::default().object)?;
    let mut rows = Vec::new();
    for (k, ef) in efs.iter().enumerate() {
        rows.push(vec![k as f64, ef.lambda]);
        out.json(
            &format!("eigenpairs/eigen_{k}.json"),
            &json!({
                "index": k,
                "lambda": ef.lambda,
                "l11": ef.log_coeffs.0,
                "l21": ef.log_coeffs.1,
                "norm": ef.norm,
                "psi_at_a2": ef.eval(cfg.a2())?,
                "eps_match": ef.eps,
                "series_order": params.series_order,
            }),
        )?;
        let mut buf = Vec::new();
        ef.interior_samples.write_csv(&mut buf)?;
        out.write(&format!("eigenpairs/eigen_{k}.csv"), &buf)?;
    }
    out.table("eigenvalues.csv", &["index", "lambda"], &rows)?;
    let mut failures = Vec::new();
    check(
        &mut failures,
        efs.len() == a.count,
        format!("found {} of {} eigenpairs", efs.len(), a.count),
    );
    Ok(Finished {
        parameters: json!({ "count": a.count, "solver": params }),
        failures,
    })
}

fn commutation_suite(rc: &RunConfig, count: usize) -> Result<Vec<VerificationReport>> {
    let cfg = rc.configuration()?;
    let rules = NestedRules::default();
    let efs = eigenfunctions_by_magnitude(&cfg, count.min(4), &rc.solver_params()?, &rules.object)?;
    let pts = test_points(&cfg, 20, 0.15);
    let mut reports = efs
        .iter()
        .map(|ef| check_commutation(&cfg, ef, &pts, 0.15, 1e-4))
        .collect::<Result<Vec<_>>>()?;
    let gauss = commutation_discrepancy_fn(&cfg, gaussian_control, &pts, &rules.object)?;
    reports.push(VerificationReport::new(
        "commutation_gaussian_control",
        &(cfg, &pts),
        vec![Metric::at_least("max_relative_discrepancy", gauss, 1e-2)],
        vec!["exp(−(y − 4.5)²) on [a2, a4]".into()],
    ));
    if let Some(first) = efs.first() {
        let cut = truncated_commutation_discrepancy(&cfg, first, &pts, &QuadratureOptions::default())?;
        reports.push(VerificationReport::new(
            "commutation_truncated_control",
            &(cfg, first.lambda, &pts),
            vec![Metric::at_least("max_relative_discrepancy", cut, 1e-2)],
            vec![format!("eigenfunction λ = {} cut off at a3", first.lambda)],
        ));
    }
    Ok(reports)
}

fn svd_suite(rc: &RunConfig, count: usize) -> Result<Vec<VerificationReport>> {
    let cfg = rc.configuration()?;
    let rules = NestedRules::default();
    let efs = eigenfunctions_by_magnitude(&cfg, count, &rc.solver_params()?, &rules.object)?;
    let sys = svd_from_sl(&cfg, &efs, &rules)?;
    let pts = test_points(&cfg, 20, 0.15);
    let mut reports = vec![sys.report.clone()];
    for t in sys.triples.iter().filter(|t| t.sigma > 1e-3 && t.sigma < 1.0 - 1e-3) {
        reports.push(check_gn_eigen(&cfg, t, &pts, 0.15, 1e-4)?);
    }
    Ok(reports)
}

fn accumulation_suite(rc: &RunConfig) -> Result<Vec<VerificationReport>> {
    let cfg = rc.configuration()?;
    let base = 2.0 / (cfg.a3() - cfg.a2());
    let scales: Vec<f64> = [4.0, 8.0, 16.0, 32.0, 64.0].iter().map(|k| k * base).collect();
    let acc = accumulation_experiment(&cfg, &scales, &QuadratureOptions::default())?;
    let norm_err = acc.norms.iter().map(|n| (n - 1.0).abs()).fold(0.0, f64::max);
    let decreasing = acc.residuals.windows(2).all(|w| w[1] < w[0]);
    let metrics = vec![
        Metric::at_most("slope", acc.slope, -4.5),
        Metric::at_least("slope_lower", acc.slope, -5.5),
        Metric::at_most("norm_error", norm_err, 1e-10),
        Metric::at_least("strictly_decreasing", if decreasing { 1.0 } else { 0.0 }, 1.0),
    ];
    let notes = vec![format!("scales {:?}", acc.scales), format!("r(a) {:?}", acc.residuals)];
    Ok(vec![VerificationReport::new(
        "accumulation",
        &(cfg, &scales),
        metrics,
        notes,
    )])
}

fn logfit_suite(rc: &RunConfig) -> Result<Vec<VerificationReport>> {
    let acc = Acceptance::new(*rc)?;
    let cfg = acc.cfg;
    let u = acc.uniform()?;
    let window = (1.51 - cfg.a2(), 2.3 - cfg.a2());
    let mut reports = Vec::new();
    for n in [450, 453] {
        let (x, v) = u.svd.left_function(n);
        let fit = log_singularity_fit(&x, &v, cfg.a2(), Side::Right, window)?;
        reports.push(VerificationReport::new(
            &format!("logfit_g{n}"),
            &(cfg, u.params, n),
            vec![
                Metric::at_most("normalized_residual", fit.residual, 0.02),
                Metric::at_least("abs_c2", fit.c2.abs(), f64::MIN_POSITIVE),
            ],
            vec![format!("c1 = {}, c2 = {}, {} samples", fit.c1, fit.c2, fit.samples)],
        ));
    }
    Ok(reports)
}

pub fn verify(rc: &RunConfig, a: &VerifyArgs, out: &mut Outputs) -> Result<Finished> {
    let mut reports = Vec::new();
    let all = a.suite == Suite::All;
    if all || a.suite == Suite::Commutation {
        reports.extend(commutation_suite(rc, a.count)?);
    }
    if all || a.suite == Suite::Svd {
        reports.extend(svd_suite(rc, a.count)?);
    }
    if all || a.suite == Suite::Accumulation {
        reports.extend(accumulation_suite(rc)?);
    }
    if all || a.suite == Suite::Logfit {
        reports.extend(logfit_suite(rc)?);
    }
    reports.sort_by(|x, y| x.check.cmp(&y.check));
    match &a.json_out {
        Some(p) => {
            let mut bytes = serde_json::to_vec_pretty(&reports)?;
            bytes.push(b'\n');
            crate::output::write_atomic(p, &bytes)?;
            out.record(p.clone());
        }
        None => {
            out.json("report.json", &reports)?;
        }
    }
    let failures = reports
        .iter()
        .filter(|r| !r.passed)
        .map(|r| {
            let bad: Vec<String> = r
                .metrics
                .iter()
                .filter(|m| !m.passed)
                .map(|m| format!("{} = {:e}", m.name, m.value))
                .collect();
            format!("{}: {}", r.check, bad.join(", "))
        })
        .collect();
    Ok(Finished {
        parameters: json!({ "suite": format!("{:?}", a.suite), "count": a.count }),
        failures,
    })
}

pub fn reproduce(rc: &RunConfig, a: &ReproduceArgs, out: &mut Outputs) -> Result<Finished> {
    let mut failures = Vec::new();
    let acc = Acceptance::new(*rc)?;
    let cfg = acc.cfg;
    let overlap = (cfg.a2(), cfg.a3());
    let name = format!("{:?}", a.figure).to_lowercase();
    match a.figure {
        Figure::Fig4a => {
            let u = acc.uniform()?;
            out.table("fig4a_sigmas.csv", &["index", "sigma"], &sigma_rows(&u.svd.sigmas))?;
            let s = &u.svd.sigmas;
            check(&mut failures, s[0] >= 0.999, format!("largest σ {}", s[0]));
            check(
                &mut failures,
                s[s.len() - 1] <= 1e-12,
                format!("smallest σ {}", s[s.len() - 1]),
            );
        }
        Figure::Fig4b => {
            let m = wavelet_matrix(&cfg, &WaveletParams::default())?;
            let s = compute_svd(&m)?;
            out.table("fig4b_sigmas.csv", &["index", "sigma"], &sigma_rows(&s.sigmas))?;
            check(
                &mut failures,
                s.sigmas.iter().all(|&v| (0.0..=1.005).contains(&v)),
                "σ outside [0, 1.005]".into(),
            );
        }
        Figure::Fig5 | Figure::Fig6 => {
            let u = acc.uniform()?;
            let (indices, inside) = if a.figure == Figure::Fig5 {
                (448..452, true)
            } else {
                (452..456, false)
            };
            let idx: Vec<usize> = indices.collect();
            let f: Vec<(Vec<f64>, Vec<f64>)> = idx.iter().map(|&n| u.svd.right_function(n)).collect();
            let g: Vec<(Vec<f64>, Vec<f64>)> = idx.iter().map(|&n| u.svd.left_function(n)).collect();
            let fh: Vec<String> = std::iter::once("x".to_string())
                .chain(idx.iter().map(|n| format!("f{n}")))
                .collect();
            let gh: Vec<String> = std::iter::once("x".to_string())
                .chain(idx.iter().map(|n| format!("g{n}")))
                .collect();
            let fh: Vec<&str> = fh.iter().map(String::as_str).collect();
            let gh: Vec<&str> = gh.iter().map(String::as_str).collect();
            let fcols: Vec<Vec<f64>> = f.iter().map(|p| p.1.clone()).collect();
            let gcols: Vec<Vec<f64>> = g.iter().map(|p| p.1.clone()).collect();
            out.table(&format!("{name}_f.csv"), &fh, &vector_table(&f[0].0, &fcols))?;
            out.table(&format!("{name}_g.csv"), &gh, &vector_table(&g[0].0, &gcols))?;
            let mut counts = Vec::new();
            for (k, &n) in idx.iter().enumerate() {
                let (x, v) = &f[k];
                let (got, want) = if inside {
                    (zero_count(x, v, overlap, rc.theta), 451 - n)
                } else {
                    (zero_count_outside(x, v, overlap, rc.theta), n - 451)
                };
                check(
                    &mut failures,
                    got == want,
                    format!("f{n}: {got} zeros, expected {want}"),
                );
                counts.push(json!({ "index": n, "sigma": u.svd.sigmas[n], "zeros": got, "inside_overlap": inside }));
            }
            for m in reference_metrics(&u.svd.sigmas)
                .iter()
                .filter(|m| idx.iter().any(|n| m.name.ends_with(&n.to_string())))
            {
                check(&mut failures, m.passed, format!("{} = {:e}", m.name, m.value));
            }
            out.json(
                &format!("{name}_summary.json"),
                &json!({ "grid": u.params, "vectors": counts }),
            )?;
        }
        Figure::Fig7 => {
            let u = acc.uniform()?;
            let mut rows = Vec::new();
            let cols: Vec<(Vec<f64>, Vec<f64>)> = [450, 453].iter().map(|&n| u.svd.left_function(n)).collect();
            for (i, &x) in cols[0].0.iter().enumerate() {
                if x > cfg.a2() && x <= 2.3 {
                    rows.push(vec![x, (x - cfg.a2()).ln(), cols[0].1[i], cols[1].1[i]]);
                }
            }
            out.table("fig7_log_linear.csv", &["x", "ln_x_minus_a2", "g450", "g453"], &rows)?;
            check(
                &mut failures,
                rows.len() >= 4,
                format!("{} samples in (a2, 2.3]", rows.len()),
            );
        }
    }
    Ok(Finished {
        parameters: json!({ "figure": name }),
        failures,
    })
}

pub fn acceptance(rc: &RunConfig, a: &AcceptanceArgs, out: &mut Outputs) -> Result<Finished> {
    let acc = Acceptance::new(*rc)?;
    let ids: Vec<u8> = if a.only.is_empty() {
        (1..=10).collect()
    } else {
        a.only.clone()
    };
    let mut outcomes = Vec::new();
    for id in &ids {
        let o = acc.run(*id)?;
        println!("{}", o.line());
        outcomes.push(o);
    }
    out.json("acceptance.json", &outcomes)?;
    let failures = outcomes.iter().filter(|o| !o.passed).map(|o| o.line()).collect();
    let grid = outcomes
        .iter()
        .find(|o| o.id == 1)
        .and_then(|o| o.notes.first().cloned());
    Ok(Finished {
        parameters: json!({ "criteria": ids, "eigenpairs": EIGEN_COUNT, "grid_convention": grid }),
        failures,
    })
}
