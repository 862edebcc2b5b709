//! Implementations of the subcommands.

use crate::config::RunConfig;
use crate::manifest::ManifestBuilder;
use anyhow::{anyhow, bail, Context};
use curlgff::bounds::{self, FittedConstants};
use curlgff::estimators::{
    diffusion_coefficient, drift_part_transform, laplace_transform, sqrtlog_fit, LaplaceOptions,
    MsdCurve,
};
use curlgff::field;
use curlgff::resolvent::{self, MainLemmaSamples, OffdiagSample, ReplacementSample};
use curlgff::sde::{self, TrajectoryEnsemble};
use serde_json::json;

fn weight(cfg: &RunConfig) -> f64 {
    resolvent::spectral_weight(cfg.norm)
}

pub fn synth(cfg: &RunConfig, m: &mut ManifestBuilder) -> anyhow::Result<()> {
    let f = field::synthesize(&cfg.bump, &cfg.grid, cfg.master_seed, cfg.norm)?;
    let rms = f.omega_rms();
    let div = f.spectral_divergence_max();
    let xi = f.xi_values().expect("synth keeps the scalar field");
    let kurtosis = field::excess_kurtosis(xi);

    if cfg.synth.save_field {
        let mut buf = Vec::new();
        field::write_container(&mut buf, &f)?;
        m.emit("field.bin", "field::synthesize", &buf)?;
    }

    let seeds: Vec<u64> = (0..cfg.synth.covariance_seeds as u64)
        .map(|i| curlgff::rng::derive_seed(cfg.master_seed, curlgff::rng::Domain::FieldSynthesis, i))
        .collect();
    let rows = field::empirical_covariance(&cfg.bump, &cfg.grid, cfg.norm, &seeds, &cfg.synth.separations)?;
    m.emit("covariance.csv", "field::empirical_covariance", field::covariance_csv(&rows).as_bytes())?;

    let cov_ok = rows.iter().all(|r| (r.empirical - r.analytic).abs() <= 4.0 * r.stderr);
    let peclet: Vec<(f64, f64)> = [0.5, 0.05, 0.005]
        .iter()
        .map(|&k| Ok((k, field::peclet_integral(&cfg.bump, k, cfg.norm)?)))
        .collect::<anyhow::Result<_>>()?;
    let validation = json!({
        "divergence_max": div,
        "omega_rms": rms,
        "divergence_over_rms": div / rms,
        "divergence_pass": div <= 1e-12 * rms,
        "xi_excess_kurtosis": kurtosis,
        "kurtosis_pass": kurtosis.abs() < 0.2,
        "covariance_within_4se": cov_ok,
        "peclet": peclet.iter().map(|(k, v)| json!({"kappa": k, "value": v})).collect::<Vec<_>>(),
    });
    m.emit("validation.json", "field checks", serde_json::to_vec_pretty(&validation)?.as_slice())?;
    if div > 1e-12 * rms || !cov_ok {
        bail!("field validation failed (see validation.json)");
    }
    println!("synth: divergence/rms = {:.3e}, covariance within 4 SE: {cov_ok}", div / rms);
    Ok(())
}

pub fn simulate(cfg: &RunConfig, m: &mut ManifestBuilder) -> anyhow::Result<()> {
    let sim = cfg.sim.to_sim_config(cfg.master_seed);
    let field_spec = serde_json::to_vec(&json!({
        "bump": cfg.bump, "grid": cfg.grid, "norm": cfg.norm,
    }))?;
    m.record_input("field_spec", &field_spec);
    if cfg.sim.step_size_pilot {
        let chk = sde::step_size_check(&sim, &cfg.bump, &cfg.grid, cfg.norm, cfg.sim.pilot_paths)?;
        if !chk.pass {
            m.warn(format!(
                "step-size pilot: halving dt moved MSD(T) by {:.3e} (> 1 SE = {:.3e})",
                (chk.msd_at_horizon - chk.msd_at_horizon_half_dt).abs(),
                chk.combined_se
            ));
        }
        m.emit("step_size_check.json", "sde::step_size_check", serde_json::to_vec_pretty(&chk)?.as_slice())?;
    }
    let ens = sde::simulate_ensemble(&sim, &cfg.bump, &cfg.grid, cfg.norm)?;
    for w in &ens.warnings {
        m.warn(w.clone());
    }
    m.emit("ensemble.csv", "sde::simulate_ensemble", ens.to_csv()?.as_bytes())?;
    let msd = ens.msd_curve()?;
    println!(
        "simulate: {} paths to T = {}, MSD(T) = {:.4} +- {:.4}, faults = {}",
        sim.n_paths,
        sim.horizon,
        msd.values.last().unwrap(),
        msd.stderrs.last().unwrap(),
        ens.faults
    );
    Ok(())
}

fn read_ensemble_curves(path: &str) -> anyhow::Result<(MsdCurve, MsdCurve)> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {path}"))?;
    let msd = MsdCurve::from_csv(&text, "t", "msd", Some("msd_stderr"))?;
    let f1 = MsdCurve::from_csv(&text, "t", "f1_var", Some("f1_var_stderr"))?;
    Ok((msd, f1))
}

pub fn estimate(cfg: &RunConfig, m: &mut ManifestBuilder) -> anyhow::Result<()> {
    let input = cfg
        .estimate
        .input_csv
        .as_ref()
        .ok_or_else(|| anyhow!("estimate needs estimate.input_csv (an ensemble CSV)"))?;
    let bytes = std::fs::read(input)?;
    m.record_input("ensemble_csv", &bytes);
    let (msd, f1) = read_ensemble_curves(input)?;
    let horizon = msd.horizon();

    let d = diffusion_coefficient(&msd)?;
    m.emit("diffusion.csv", "estimators::diffusion_coefficient", d.to_csv("d").as_bytes())?;

    let opts = LaplaceOptions { allow_tail_extrapolation: cfg.estimate.allow_tail_extrapolation };
    let w = weight(cfg);
    let mut msd_rows = String::from("lambda,value,quad_err,trunc_err,lower_bound_ref\n");
    let mut f1_rows = String::from("lambda,value,quad_err,trunc_err,lower_bound_ref\n");
    for &lambda in &cfg.lambdas {
        if lambda * horizon < 20.0 && !opts.allow_tail_extrapolation {
            m.warn(format!(
                "lambda {lambda} skipped: lambda*T = {:.2} < 20 (truncation-dominated)",
                lambda * horizon
            ));
            continue;
        }
        // the two-level reference lives in the resolvent regime lambda < 1
        let lower_f1 = if lambda < 1.0 {
            let two_level =
                resolvent::solve_truncated_two(lambda, &cfg.bump, cfg.sandwich.resolution, w)?;
            Some(2.0 / (lambda * lambda) * two_level.value)
        } else {
            None
        };
        let em = laplace_transform(&msd, lambda, opts)?;
        let ef = drift_part_transform(&f1, lambda, opts)?;
        let fmt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
        msd_rows.push_str(&format!(
            "{},{},{},{},{}\n",
            lambda,
            em.value,
            em.quad_error,
            em.trunc_error,
            fmt(lower_f1.map(|l| 2.0 / (lambda * lambda) + l))
        ));
        f1_rows.push_str(&format!(
            "{},{},{},{},{}\n",
            lambda, ef.value, ef.quad_error, ef.trunc_error, fmt(lower_f1)
        ));
    }
    m.emit("laplace_msd.csv", "estimators::laplace_transform", msd_rows.as_bytes())?;
    m.emit("laplace_f1.csv", "estimators::drift_part_transform", f1_rows.as_bytes())?;

    let window = cfg.estimate.fit_window.unwrap_or((horizon / 100.0, horizon));
    match sqrtlog_fit(&d, window) {
        Ok(fit) => {
            m.emit("fit.json", "estimators::sqrtlog_fit", serde_json::to_vec_pretty(&fit)?.as_slice())?;
            println!(
                "estimate: D(t) ~ a (log t)^zeta with zeta = {:.4} +- {:.4}",
                fit.exponent, fit.exponent_stderr
            );
        }
        Err(e) => m.warn(format!("log-scaling fit skipped: {e}")),
    }
    Ok(())
}

pub fn bounds_cmd(cfg: &RunConfig, m: &mut ManifestBuilder) -> anyhow::Result<()> {
    // bound-function tables
    let mut table = String::from("x,z,L,LB1,LB2,LB3,UB1,UB2,UB3,sigma2,sigma3\n");
    for &z in &[1.0, 10.0, 100.0] {
        for &x in &curlgff::quad::log_spaced(1e-8, 10.0, 8) {
            table.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{}\n",
                x,
                z,
                bounds::big_l(x, z)?,
                bounds::lb(1, x, z)?,
                bounds::lb(2, x, z)?,
                bounds::lb(3, x, z)?,
                bounds::ub(1, x, z)?,
                bounds::ub(2, x, z)?,
                bounds::ub(3, x, z)?,
                bounds::sigma(2, x, z)?,
                bounds::sigma(3, x, z)?,
            ));
        }
    }
    m.emit("bound_functions.csv", "bounds tables", table.as_bytes())?;

    let cs = bounds::c_sequence(cfg.bounds.eps, 100_000, cfg.bounds.c3_policy)?;
    let mut seq = String::from("k,c\n");
    for k in 1..=64 {
        seq.push_str(&format!("{},{}\n", k, cs.c(k)));
    }
    m.emit("c_sequence.csv", "bounds::c_sequence", seq.as_bytes())?;

    let report = bounds::check_identities(10_000, cfg.master_seed)?;
    m.emit("identity_report.json", "bounds::check_identities", serde_json::to_vec_pretty(&report)?.as_slice())?;

    // validate K1, K2 against the recursion conditions with freshly fitted
    // lemma constants (small sweeps)
    let fitted = fit_constants_quick(cfg)?;
    let validation = bounds::validate_constants(&cfg.bounds, &fitted, 64, 64)?;
    m.set_fitted(serde_json::to_value(fitted)?);
    m.emit(
        "constants_validation.json",
        "bounds::validate_constants",
        serde_json::to_vec_pretty(&json!({
            "fitted": fitted,
            "validation": validation,
        }))?
        .as_slice(),
    )?;

    println!(
        "bounds: identity failures = {}, integral identity matches {:?}, c limits = ({:?}, {:?}), K-conditions ok = {}",
        report.failures,
        report.integral_identity,
        cs.even_limit,
        cs.odd_limit,
        validation.all_ok()
    );
    if report.failures > 0 {
        bail!("identity report has failures");
    }
    Ok(())
}

fn fit_constants_quick(cfg: &RunConfig) -> anyhow::Result<FittedConstants> {
    let rep = resolvent::check_replacement(
        resolvent::BoundFamily::Ub,
        &ReplacementSample::sweep(32, cfg.quadcheck.seed),
        &cfg.bump,
    )?;
    let off = resolvent::check_offdiag(&OffdiagSample::sweep(24, cfg.quadcheck.seed), &cfg.bump)?;
    let main = resolvent::check_main_lemmas(
        &MainLemmaSamples::sweep(24, cfg.quadcheck.seed),
        &cfg.bump,
        &cfg.bounds,
    )?;
    Ok(FittedConstants {
        c_diag: rep.fitted["C_Diag"],
        c_off: off.fitted["C_off"],
        c_rho: main[1].fitted["C"],
    })
}

pub fn iterate(cfg: &RunConfig, m: &mut ManifestBuilder) -> anyhow::Result<()> {
    let w = weight(cfg);
    let rows = resolvent::lambda_sweep(&cfg.lambdas, cfg.iterate.level_cap, &cfg.bump, w)?;
    m.emit("resolvent_sweep.csv", "resolvent::lambda_sweep", resolvent::sweep_csv(&rows).as_bytes())?;
    let detail: Vec<serde_json::Value> = rows
        .iter()
        .map(|r| {
            json!({
                "lambda": r.lambda,
                "k_schedule": r.k_schedule,
                "levels_run": r.levels_run,
                "early_stopped": r.early_stopped,
                "d_at_schedule": r.d_at_schedule,
                "d_final": r.d_final,
                "d_by_level": r.d_by_level,
            })
        })
        .collect();
    m.emit("resolvent_levels.json", "resolvent::iterate_resolvent", serde_json::to_vec_pretty(&detail)?.as_slice())?;

    if let Some(&lambda) = cfg.lambdas.last() {
        let out = resolvent::iterate_resolvent(lambda, cfg.iterate.level_cap, &cfg.bump, w)?;
        m.emit("multiplier.csv", "resolvent::diag_step", out.multiplier.to_csv().as_bytes())?;
        println!(
            "iterate: lambda = {lambda:.3e}, levels = {}, lambda^2 D_diag = {:.4}, angular constant = {:.4}",
            out.levels.len(),
            lambda * lambda * out.final_d(),
            out.angular_constant
        );
    }
    Ok(())
}

pub fn sandwich(cfg: &RunConfig, m: &mut ManifestBuilder) -> anyhow::Result<()> {
    let sim = cfg.sim.to_sim_config(cfg.master_seed);
    if cfg.sim.step_size_pilot {
        let chk = sde::step_size_check(&sim, &cfg.bump, &cfg.grid, cfg.norm, cfg.sim.pilot_paths)?;
        if !chk.pass {
            m.warn(format!(
                "step-size pilot: halving dt moved MSD(T) by {:.3e} (> 1 SE = {:.3e})",
                (chk.msd_at_horizon - chk.msd_at_horizon_half_dt).abs(),
                chk.combined_se
            ));
        }
    }
    let ens = sde::simulate_ensemble(&sim, &cfg.bump, &cfg.grid, cfg.norm)?;
    for w in &ens.warnings {
        m.warn(w.clone());
    }
    m.emit("ensemble.csv", "sde::simulate_ensemble", ens.to_csv()?.as_bytes())?;
    let f1 = ens.f1_var_curve()?;
    let w = weight(cfg);
    let mut rows = String::from("lambda,two_level,diag_only,free,mc_value,mc_se,slack_se_units,pass\n");
    let mut all_pass = true;
    for &lambda in &cfg.lambdas {
        let sol = resolvent::solve_truncated_two(lambda, &cfg.bump, cfg.sandwich.resolution, w)?;
        let (mc, se) = laplace_with_batch_se(&ens, &f1, lambda)?;
        let mc_half = lambda * lambda / 2.0 * mc;
        let mc_half_se = lambda * lambda / 2.0 * se;
        let pass = sol.value <= mc_half + 3.0 * mc_half_se;
        all_pass &= pass;
        rows.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            lambda,
            sol.value,
            sol.diag_only_value,
            sol.free_value,
            mc_half,
            mc_half_se,
            (mc_half - sol.value) / mc_half_se,
            pass
        ));
    }
    m.emit("sandwich.csv", "resolvent::solve_truncated_two vs MC", rows.as_bytes())?;
    println!("sandwich: all lambdas pass = {all_pass}");
    if !all_pass {
        bail!("two-level lower bound exceeded the Monte Carlo value");
    }
    Ok(())
}

fn laplace_with_batch_se(
    ens: &TrajectoryEnsemble,
    f1: &MsdCurve,
    lambda: f64,
) -> anyhow::Result<(f64, f64)> {
    let opts = LaplaceOptions::default();
    let est = drift_part_transform(f1, lambda, opts)?;
    let mut vals = Vec::new();
    for b in ens.batch_f1_var_values() {
        let n = b.len();
        let c = MsdCurve::new(f1.times.clone(), b, vec![0.0; n])?;
        vals.push(drift_part_transform(&c, lambda, opts)?.value);
    }
    let bn = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / bn;
    let se = (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (bn - 1.0) / bn).sqrt();
    Ok((est.value, se))
}

pub fn quadcheck(cfg: &RunConfig, m: &mut ManifestBuilder) -> anyhow::Result<()> {
    let n = cfg.quadcheck.samples;
    let seed = cfg.quadcheck.seed;

    let identity = bounds::check_identities(n.max(1000), seed)?;
    m.emit("identity_report.json", "bounds::check_identities", serde_json::to_vec_pretty(&identity)?.as_slice())?;

    let mut reports = Vec::new();
    for family in [resolvent::BoundFamily::Ub, resolvent::BoundFamily::Lb, resolvent::BoundFamily::One] {
        reports.push(resolvent::check_replacement(family, &ReplacementSample::sweep(n, seed), &cfg.bump)?);
    }
    let off = resolvent::check_offdiag(&OffdiagSample::sweep(n, seed), &cfg.bump)?;
    let main = resolvent::check_main_lemmas(&MainLemmaSamples::sweep(n, seed), &cfg.bump, &cfg.bounds)?;

    let fitted = FittedConstants {
        c_diag: reports.iter().map(|r| r.fitted["C_Diag"]).fold(f64::NEG_INFINITY, f64::max),
        c_off: off.fitted["C_off"],
        c_rho: main[1].fitted["C"],
    };
    let validation = bounds::validate_constants(&cfg.bounds, &fitted, 64, 64)?;
    m.set_fitted(serde_json::to_value(fitted)?);

    let mut all = Vec::new();
    all.extend(reports);
    all.push(off);
    all.extend(main);
    let mut pass = identity.failures == 0;
    for r in &all {
        pass &= r.pass;
    }
    m.emit("lemma_reports.json", "resolvent lemma audits", serde_json::to_vec_pretty(&all)?.as_slice())?;
    m.emit(
        "constants_validation.json",
        "bounds::validate_constants",
        serde_json::to_vec_pretty(&validation)?.as_slice(),
    )?;
    for r in &all {
        println!(
            "quadcheck: {} fitted {:?} stability {:.3} violations {} pass {}",
            r.lemma, r.fitted, r.stability_ratio, r.violations, r.pass
        );
    }
    if !pass {
        bail!("a lemma audit failed");
    }
    Ok(())
}

pub fn report(cfg: &RunConfig, m: &mut ManifestBuilder) -> anyhow::Result<()> {
    let w = weight(cfg);
    let rows = resolvent::lambda_sweep(&cfg.lambdas, cfg.iterate.level_cap, &cfg.bump, w)?;

    // optional Monte Carlo column from a previous simulate run
    let mc_curve = cfg
        .estimate
        .input_csv
        .as_ref()
        .map(|p| read_ensemble_curves(p))
        .transpose()?;

    let mut out = String::from(
        "lambda,k_schedule,levels,lambda2_d_schedule,lambda2_d_final,ratio_to_sqrtlog,envelope_lower,envelope_upper,mc_lambda2_d\n",
    );
    for r in &rows {
        let l2 = r.lambda * r.lambda;
        let env = bounds::envelope(r.lambda, cfg.bounds.eps, cfg.report.c_minus, cfg.report.c_plus);
        let (lo, hi) = match env {
            Ok((lo, hi)) => (format!("{}", l2 * lo), format!("{}", l2 * hi)),
            Err(_) => (String::new(), String::new()),
        };
        let mc = match &mc_curve {
            Some((msd, _)) if r.lambda * msd.horizon() >= 20.0 => {
                let est = laplace_transform(msd, r.lambda, LaplaceOptions::default())?;
                format!("{}", l2 * est.value)
            }
            _ => String::new(),
        };
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.lambda,
            r.k_schedule,
            r.levels_run,
            l2 * r.d_at_schedule,
            l2 * r.d_final,
            r.ratio_to_sqrtlog,
            lo,
            hi,
            mc
        ));
    }
    m.emit("report.csv", "aggregate MC / D_diag / envelope", out.as_bytes())?;
    println!("report: {} lambda rows", rows.len());
    Ok(())
}
