use std::fs;
use std::io::Write;
use std::path::Path;

use nctc::asym::{
    evaluate_asym, gd_asym, gen_asym_factors, init_asym_best_of, read_asym_factors, read_asym_observations,
    relative_step_asym, sample_asym_observations, write_asym_factors, write_asym_observations, AsymFactors,
    DEFAULT_ETA_ASYM,
};
use nctc::gd::{theoretical_step_bound, DEFAULT_ETA};
use nctc::{
    best_of_restarts, evaluate, gd_run, gen_factors, read_factors, read_observations, relative_step,
    sample_observations, write_factors, write_observations, FactorMatrix, TraceDetail,
};
use serde::Serialize;

use crate::args::{Command, CompleteArgs, EvalArgs, ExperimentArgs, GenArgs};
use crate::config::ExperimentConfig;
use crate::error::{io_err, json_err, CliError, Result};
use crate::experiment::{run_experiment, snr_slope, ExperimentOutput, Method};

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Gen(a) => gen(&a),
        Command::Complete(a) => complete(&a),
        Command::Eval(a) => eval(&a),
        Command::Experiment(a) => experiment(&a, Model::Symmetric, &[Method::Proposed]),
        Command::TpmCompare(a) => experiment(&a, Model::Symmetric, &[Method::Proposed, Method::Tpm]),
        Command::AsymGen(a) => asym_gen(&a),
        Command::AsymComplete(a) => asym_complete(&a),
        Command::AsymExperiment(a) => experiment(&a, Model::Asymmetric, &[Method::Proposed]),
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Model {
    Symmetric,
    Asymmetric,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(json_err(path))?;
    fs::write(path, text + "\n").map_err(io_err(path))
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(io_err(dir))
}

fn gen(a: &GenArgs) -> Result<()> {
    let [d] = a.d.0[..] else {
        return Err(CliError::Usage("gen takes a single --d".into()));
    };
    let truth = gen_factors(d, a.r, a.seed)?;
    let obs = sample_observations(&truth, a.p, a.sigma, a.seed)?.with_r_hint(a.r);
    create_dir(&a.out)?;
    write_factors(&truth, &a.out.join("Ustar.csv"))?;
    write_observations(&obs, &a.out.join("obs"))?;
    log::info!("{} canonical entries written to {}", obs.num_canonical(), a.out.display());
    Ok(())
}

fn asym_gen(a: &GenArgs) -> Result<()> {
    let [d1, d2, d3] = match a.d.0[..] {
        [d] => [d; 3],
        [d1, d2, d3] => [d1, d2, d3],
        _ => unreachable!("parser admits one or three sizes"),
    };
    let truth = gen_asym_factors(d1, d2, d3, a.r, a.seed)?;
    let obs = sample_asym_observations(&truth, a.p, a.sigma, a.seed)?;
    write_asym_factors(&truth, &a.out.join("truth"))?;
    write_asym_observations(&obs, &a.out.join("obs"))?;
    log::info!("{} entries written to {}", obs.len(), a.out.display());
    Ok(())
}

fn complete(a: &CompleteArgs) -> Result<()> {
    let obs = read_observations(&a.obs)?;
    let r = a
        .r
        .or(obs.r_hint())
        .ok_or_else(|| CliError::Usage("--r is required when the manifest records no rank".into()))?;
    let truth = a.truth.as_deref().map(read_factors).transpose()?;
    let u0 = best_of_restarts(&obs, r, a.l, a.eps_th, a.init_restarts, a.seed)?;
    let eta = relative_step(a.eta.unwrap_or(DEFAULT_ETA), &u0);
    if let Some(t) = &truth {
        log::info!("stepsize {eta:.3e}; theoretical bound {:.3e}", theoretical_step_bound(t));
    }
    let tr = gd_run(&obs, &u0, eta, a.iters, truth.as_ref())?;
    create_dir(&a.out)?;
    write_factors(&tr.final_factors, &a.out.join("U.csv"))?;
    tr.write_csv(&a.out.join("trace.csv"))?;
    if let Some(t) = &truth {
        let m = evaluate(&tr.final_factors, t, a.success_threshold)?;
        write_json(&a.out.join("metrics.json"), &m)?;
    }
    Ok(())
}

fn asym_complete(a: &CompleteArgs) -> Result<()> {
    let obs = read_asym_observations(&a.obs)?;
    let r = a.r.ok_or_else(|| CliError::Usage("asym-complete needs --r".into()))?;
    let truth = a.truth.as_deref().map(read_asym_factors).transpose()?;
    let init = init_asym_best_of(&obs, r, a.l, a.eps_th, a.init_restarts, a.seed)?;
    let eta = relative_step_asym(a.eta.unwrap_or(DEFAULT_ETA_ASYM), &init.factors);
    let tr = gd_asym(&obs, &init.factors, &init.reg_params(), eta, a.iters, truth.as_ref(), TraceDetail::Full)?;
    write_asym_factors(&tr.final_factors, &a.out)?;
    tr.write_csv(&a.out.join("trace.csv"))?;
    if let Some(t) = &truth {
        let m = evaluate_asym(&tr.final_factors, t, a.success_threshold)?;
        write_json(&a.out.join("metrics.json"), &m)?;
    }
    Ok(())
}

fn eval(a: &EvalArgs) -> Result<()> {
    let text = if a.estimate.is_dir() {
        let f: AsymFactors = read_asym_factors(&a.estimate)?;
        let m = evaluate_asym(&f, &read_asym_factors(&a.truth)?, a.success_threshold)?;
        serde_json::to_string_pretty(&m)
    } else {
        let u: FactorMatrix = read_factors(&a.estimate)?;
        let m = evaluate(&u, &read_factors(&a.truth)?, a.success_threshold)?;
        serde_json::to_string_pretty(&m)
    }
    .map_err(json_err(&a.estimate))?;
    // A closed pipe on stdout is not an error worth reporting.
    let _ = writeln!(std::io::stdout().lock(), "{text}");
    if let Some(out) = &a.out {
        fs::write(out, text + "\n").map_err(io_err(out))?;
    }
    Ok(())
}

fn experiment(a: &ExperimentArgs, model: Model, methods: &[Method]) -> Result<()> {
    let cfg = ExperimentConfig::load(&a.config)?;
    if cfg.kind.is_asymmetric() != (model == Model::Asymmetric) {
        let hint = if cfg.kind.is_asymmetric() { "use asym-experiment" } else { "use experiment" };
        return Err(CliError::Config(format!("kind {:?} does not fit this command; {hint}", cfg.kind)));
    }
    let out: ExperimentOutput = run_experiment(&cfg, methods, a.threads)?;
    out.write(&a.out)?;
    let aggs = out.aggregates();
    let mut stdout = std::io::stdout().lock();
    for g in &aggs {
        let _ = writeln!(
            stdout,
            "grid {:>2} {:<8} p={:.4} r={:<2} snr={:<6} success {}/{}",
            g.grid_index,
            format!("{:?}", g.method).to_lowercase(),
            g.p,
            g.r,
            g.snr.map_or("-".to_string(), |s| s.to_string()),
            g.successes,
            g.trials
        );
    }
    if let Some(s) = snr_slope(&aggs) {
        let _ = writeln!(stdout, "log-log slope of mean squared error vs SNR: {s:.3}");
    }
    Ok(())
}
