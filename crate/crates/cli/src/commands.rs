use std::fmt::Write as _;
use std::sync::Arc;

use anyhow::{anyhow, Error};
use gkdv_core::data::{gaussian_family, DataSpec};
use gkdv_core::norms::sobolev_norm;
use gkdv_core::solver::{field_csv, reference_integrate, solve, IvpProblem, PicardTrace};
use gkdv_core::verifier::{
    render_table, verify_contraction_scaling, verify_hausdorff_young, verify_multiplier_decay,
    verify_nonlinear_estimate, verify_selected_contraction, verify_smoothing,
    verify_threshold_conditions, verify_weighted_linear,
};
use gkdv_core::{EstimateReport, Trajectory};
use serde::Serialize;

use crate::config::{JobKind, RunConfig, Suite};
use crate::run::RunDir;

/// Exit code 2: the request itself is invalid. Exit code 1: the computation failed.
#[derive(Debug)]
pub enum Failure {
    Usage(Error),
    Compute(Error),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Compute(_) => 1,
        }
    }

    pub fn error(&self) -> &Error {
        match self {
            Failure::Usage(e) | Failure::Compute(e) => e,
        }
    }
}

fn usage(e: impl Into<Error>) -> Failure {
    Failure::Usage(e.into())
}

fn compute(e: impl Into<Error>) -> Failure {
    Failure::Compute(e.into())
}

/// Records a failed computation in the manifest before reporting it.
fn fail_run(dir: RunDir, e: Error) -> Failure {
    if let Err(io) = dir.finish(Some(format!("{e:#}"))) {
        return compute(io.context(format!("{e:#}")));
    }
    compute(e)
}

#[derive(Debug, Serialize)]
struct ReferenceCheck {
    steps: usize,
    relative_l2_at_t_final: f64,
}

#[derive(Debug, Serialize)]
struct SolveSummary {
    symbol: String,
    k: f64,
    s: f64,
    t_final: f64,
    r: f64,
    c_calibrated: Option<f64>,
    converged: bool,
    iterations: usize,
    max_contraction_ratio: Option<f64>,
    space_norm: f64,
    warnings: Vec<String>,
    snapshot_times: Vec<f64>,
    reference: Option<ReferenceCheck>,
}

pub struct SolveOutcome {
    pub run_id: String,
    pub trace: PicardTrace,
}

pub fn execute_solve(cfg: &RunConfig) -> Result<SolveOutcome, Failure> {
    let prob = cfg.problem().map_err(usage)?;
    let mut dir = RunDir::create(cfg, "solve").map_err(compute)?;
    match solve_into(cfg, &prob, &mut dir) {
        Ok(trace) => {
            let run_id = dir.run_id().to_string();
            dir.finish(None).map_err(compute)?;
            Ok(SolveOutcome { run_id, trace })
        }
        Err(e) => Err(fail_run(dir, e)),
    }
}

fn solve_into(cfg: &RunConfig, prob: &IvpProblem, dir: &mut RunDir) -> anyhow::Result<PicardTrace> {
    let (sol, trace) = solve(prob)?;
    let t_final = trace.t_final;
    let norm = prob.space_norm(&sol, t_final)?;
    let mut times = Vec::new();
    for (i, frac) in cfg.output.snapshot_fractions.iter().enumerate() {
        let t = frac * t_final;
        dir.write(
            &format!("data/snapshot_{i:02}.csv"),
            field_csv(&sol.at(t)?).as_bytes(),
        )?;
        times.push(t);
    }
    let reference = match cfg.output.reference_steps {
        Some(steps) => {
            let r = reference_integrate(prob, t_final, steps)?;
            let diff = sol.at(t_final)?.sub(r.final_state())?;
            let denom = sobolev_norm(r.final_state(), 0.0)?;
            let rel = sobolev_norm(&diff, 0.0)? / if denom > 0.0 { denom } else { 1.0 };
            dir.write(
                "data/reference_final.csv",
                field_csv(r.final_state()).as_bytes(),
            )?;
            Some(ReferenceCheck {
                steps,
                relative_l2_at_t_final: rel,
            })
        }
        None => None,
    };
    dir.write("data/space_norm.csv", norm.to_csv().as_bytes())?;
    dir.write_json("reports/picard_trace.json", &trace)?;
    let summary = SolveSummary {
        symbol: prob.symbol.name.clone(),
        k: prob.k,
        s: prob.s,
        t_final,
        r: trace.r,
        c_calibrated: trace.c_calibrated,
        converged: trace.converged,
        iterations: trace.iterates.len(),
        max_contraction_ratio: trace.max_ratio(),
        space_norm: norm.norm,
        warnings: prob.warnings(),
        snapshot_times: times,
        reference,
    };
    dir.write_json("reports/solve.json", &summary)?;
    Ok(trace)
}

pub fn cmd_solve(cfg: &RunConfig) -> Result<u8, Failure> {
    let out = execute_solve(cfg)?;
    let t = &out.trace;
    println!(
        "run {}: T = {:.6e}, r = {:.6e}, {} iterations, converged = {}",
        out.run_id,
        t.t_final,
        t.r,
        t.iterates.len(),
        t.converged
    );
    Ok(if t.converged { 0 } else { 1 })
}

fn rough_spec(cfg: &RunConfig, seed: u64) -> DataSpec {
    DataSpec::Rough {
        amplitude: cfg.verify.rough_amplitude,
        sigma: cfg.s,
        eps: 0.01,
        seed,
    }
}

fn leaves(suite: Suite) -> Vec<Suite> {
    use Suite::*;
    match suite {
        All => [leaves(Linear), leaves(Nonlinear), leaves(Smoothing)].concat(),
        Linear => vec![MultiplierDecay, WeightedLinear, Threshold, HausdorffYoung],
        Nonlinear => vec![NonlinearEstimate, Contraction, SelectedContraction],
        other => vec![other],
    }
}

fn run_checks(cfg: &RunConfig, seed: u64) -> anyhow::Result<Vec<EstimateReport>> {
    let sym = cfg.symbol()?;
    let grid = cfg.grid()?;
    let v = &cfg.verify;
    let rough = rough_spec(cfg, seed);
    let rough_problem = || -> anyhow::Result<IvpProblem> {
        Ok(
            IvpProblem::new(sym.clone(), cfg.k, cfg.mode, cfg.s, rough.build(&grid)?)?
                .with_settings(cfg.solver),
        )
    };
    let mut out = Vec::new();
    for leaf in leaves(v.suite) {
        match leaf {
            Suite::MultiplierDecay => {
                for &theta in &v.thetas {
                    out.push(verify_multiplier_decay(&sym, theta, v.tau_range)?);
                }
            }
            Suite::WeightedLinear => out.push(verify_weighted_linear(
                &sym, cfg.k, cfg.s, &rough, &grid, v.draws,
            )?),
            Suite::Threshold => out.push(verify_threshold_conditions(&sym, None)?),
            Suite::HausdorffYoung => {
                let fields = move |g: &gkdv_core::Grid| gaussian_family(g, 8, seed);
                out.push(verify_hausdorff_young(&fields, &grid, v.hausdorff_young_p)?)
            }
            Suite::NonlinearEstimate => {
                out.push(verify_nonlinear_estimate(&rough_problem()?, &v.t_range)?)
            }
            Suite::Contraction => out.push(verify_contraction_scaling(
                &rough_problem()?,
                &v.t_range,
                v.pairs,
                seed,
            )?),
            Suite::SelectedContraction => out.push(verify_selected_contraction(&cfg.problem()?)?),
            Suite::Smoothing => out.push(verify_smoothing(&rough_problem()?, &rough)?),
            Suite::All | Suite::Linear | Suite::Nonlinear => unreachable!("expanded by leaves"),
        }
    }
    Ok(out)
}

pub struct VerifyOutcome {
    pub run_id: String,
    pub reports: Vec<EstimateReport>,
}

impl VerifyOutcome {
    pub fn all_pass(&self) -> bool {
        self.reports.iter().all(|r| !r.verdict.is_failure())
    }
}

pub fn execute_verify(cfg: &RunConfig) -> Result<VerifyOutcome, Failure> {
    let seed = cfg.require_seed().map_err(usage)?;
    cfg.problem().map_err(usage)?;
    let mut dir = RunDir::create(cfg, "verify").map_err(compute)?;
    let reports = match run_checks(cfg, seed) {
        Ok(r) => r,
        Err(e) => return Err(fail_run(dir, e)),
    };
    let written = (|| -> anyhow::Result<()> {
        for r in &reports {
            dir.write_json(&format!("reports/{}.json", r.estimate_id), r)?;
        }
        dir.write("reports/summary.txt", render_table(&reports).as_bytes())
    })();
    if let Err(e) = written {
        return Err(fail_run(dir, e));
    }
    let run_id = dir.run_id().to_string();
    dir.finish(None).map_err(compute)?;
    Ok(VerifyOutcome { run_id, reports })
}

pub fn cmd_verify(cfg: &RunConfig) -> Result<u8, Failure> {
    let out = execute_verify(cfg)?;
    print!("{}", render_table(&out.reports));
    println!("run {}", out.run_id);
    Ok(if out.all_pass() { 0 } else { 1 })
}

struct SweepRow {
    k: f64,
    p: f64,
    s: f64,
    run_id: String,
    estimate_id: String,
    theoretical: f64,
    fitted: f64,
    verdict: String,
}

fn sweep_job(job: &RunConfig, kind: JobKind) -> Result<Vec<SweepRow>, Failure> {
    let p = job.symbol().map_err(usage)?.p;
    let row = |run_id: &str, id: &str, theo: f64, fit: f64, verdict: &str| SweepRow {
        k: job.k,
        p,
        s: job.s,
        run_id: run_id.to_string(),
        estimate_id: id.to_string(),
        theoretical: theo,
        fitted: fit,
        verdict: verdict.to_string(),
    };
    match kind {
        JobKind::Verify => {
            let out = execute_verify(job)?;
            Ok(out
                .reports
                .iter()
                .map(|r| {
                    row(
                        &out.run_id,
                        &r.estimate_id,
                        r.theoretical_exponent,
                        r.fitted_exponent,
                        r.verdict.label(),
                    )
                })
                .collect())
        }
        JobKind::Solve => {
            let out = execute_solve(job)?;
            let t = &out.trace;
            let verdict = if t.converged {
                "converged"
            } else {
                "not-converged"
            };
            Ok(vec![row(
                &out.run_id,
                "solve",
                t.omega,
                t.max_ratio().unwrap_or(0.0),
                verdict,
            )])
        }
    }
}

pub fn cmd_sweep(cfg: &RunConfig, jobs: usize) -> Result<u8, Failure> {
    if jobs == 0 {
        return Err(usage(anyhow!("--jobs must be at least 1")));
    }
    let job_cfgs = cfg.sweep_jobs().map_err(usage)?;
    let kind = cfg
        .sweep
        .as_ref()
        .map(|s| s.job)
        .expect("checked by sweep_jobs");
    if kind == JobKind::Verify {
        cfg.require_seed().map_err(usage)?;
    }
    for job in &job_cfgs {
        job.problem().map_err(usage)?;
    }
    let mut dir = RunDir::create(cfg, "sweep").map_err(compute)?;
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
        Ok(p) => p,
        Err(e) => return Err(fail_run(dir, e.into())),
    };
    let job_cfgs = Arc::new(job_cfgs);
    let results: Vec<Result<Vec<SweepRow>, Failure>> = pool.install(|| {
        use rayon::prelude::*;
        job_cfgs
            .par_iter()
            .map(|job| sweep_job(job, kind))
            .collect()
    });

    let mut csv =
        String::from("k,p,s,run_id,estimate_id,theoretical_exponent,fitted_exponent,verdict\n");
    let mut failed = false;
    for (job, res) in job_cfgs.iter().zip(&results) {
        match res {
            Ok(rows) => {
                for r in rows {
                    failed |= r.verdict == "fail" || r.verdict == "not-converged";
                    let _ = writeln!(
                        csv,
                        "{},{},{},{},{},{},{},{}",
                        r.k, r.p, r.s, r.run_id, r.estimate_id, r.theoretical, r.fitted, r.verdict
                    );
                }
            }
            Err(f) => {
                failed = true;
                eprintln!(
                    "job k = {}, symbol {}, s = {}: {:#}",
                    job.k,
                    job.symbol,
                    job.s,
                    f.error()
                );
                let _ = writeln!(
                    csv,
                    "{},,{},{},error,,,error",
                    job.k,
                    job.s,
                    job.run_id(kind.command())
                );
            }
        }
    }
    if let Err(e) = dir.write("data/sweep.csv", csv.as_bytes()) {
        return Err(fail_run(dir, e));
    }
    let run_id = dir.run_id().to_string();
    dir.finish(None).map_err(compute)?;
    print!("{csv}");
    println!("run {run_id}");
    Ok(if failed { 1 } else { 0 })
}
