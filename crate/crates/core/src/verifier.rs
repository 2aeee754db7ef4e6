//! Numerical checks of the linear and nonlinear estimates: power-law fits,
//! boundedness sweeps, contraction scaling and smoothing under refinement.
//!
//! Upper bounds are checked one-sided. A bound that holds only because the
//! probe is far from extremal is reported as [`Verdict::PassWeak`].

use std::fmt::Write as _;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{rough, DataSpec};
use crate::error::{Error, Result};
use crate::norms::{gamma_k, lebesgue_norm, sobolev_norm, x_norm, WeightedNormConfig};
use crate::semigroup::{apply_semigroup, smoothing_norm_profile, Propagator};
use crate::solver::{picard_iterate, solve, DuhamelMap, IvpProblem};
use crate::spectral::{derivative, Grid, GridSpec, SpectralField};
use crate::symbols::DissipativeSymbol;

/// Length and resolution used by the verification runs.
pub const VERIFY_LENGTH: f64 = 200.0 * std::f64::consts::PI;
pub const VERIFY_POINTS: usize = 1 << 13;

pub fn verification_grid() -> Grid {
    Grid::new(GridSpec::new(VERIFY_LENGTH, VERIFY_POINTS, 2.0 / 3.0).expect("valid spec"))
        .expect("valid grid")
}

/// Same length and dealias fraction, twice the points.
pub fn refined(grid: &Grid) -> Result<Grid> {
    let s = grid.spec();
    Grid::new(GridSpec::new(s.length, 2 * s.n_points, s.dealias_fraction)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    /// The bound holds but the probe decays away from it.
    PassWeak,
    Fail,
    /// Skipped: parameters outside the hypotheses of the estimate.
    Inadmissible,
}

impl Verdict {
    pub fn is_failure(self) -> bool {
        self == Verdict::Fail
    }

    pub fn label(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::PassWeak => "pass-weak",
            Verdict::Fail => "fail",
            Verdict::Inadmissible => "inadmissible",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub estimate_id: String,
    pub theoretical_exponent: f64,
    pub fitted_exponent: f64,
    /// Range of the swept variable used by the fit.
    pub fit_window: (f64, f64),
    /// Max deviation of `log y` from the fitted line.
    pub residual: f64,
    pub empirical_constant: f64,
    pub tolerance: f64,
    /// The pass rule in words.
    pub criterion: String,
    pub verdict: Verdict,
    pub notes: Vec<String>,
    /// `(x, y)` pairs behind the fit.
    pub samples: Vec<(f64, f64)>,
}

impl EstimateReport {
    fn inadmissible(id: &str, theoretical: f64, note: String) -> Self {
        Self {
            estimate_id: id.into(),
            theoretical_exponent: theoretical,
            fitted_exponent: 0.0,
            fit_window: (0.0, 0.0),
            residual: 0.0,
            empirical_constant: 0.0,
            tolerance: 0.0,
            criterion: "skipped".into(),
            verdict: Verdict::Inadmissible,
            notes: vec![note],
            samples: Vec::new(),
        }
    }
}

/// Aligned text table of reports.
pub fn render_table(reports: &[EstimateReport]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<28} {:>12} {:>12} {:>10} {:>12}  verdict",
        "estimate", "theory", "fitted", "tol", "constant"
    );
    for r in reports {
        let _ = writeln!(
            out,
            "{:<28} {:>12.6} {:>12.6} {:>10.4} {:>12.4e}  {}",
            r.estimate_id,
            r.theoretical_exponent,
            r.fitted_exponent,
            r.tolerance,
            r.empirical_constant,
            r.verdict.label()
        );
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub exponent: f64,
    pub constant: f64,
    /// `max |log y - fit|`.
    pub residual: f64,
}

/// Least-squares line through `(log x, log y)`.
pub fn fit_power_law(xs: &[f64], ys: &[f64]) -> Result<PowerLawFit> {
    if xs.len() != ys.len() {
        return Err(Error::Domain(format!(
            "fit needs matching lengths, got {} and {}",
            xs.len(),
            ys.len()
        )));
    }
    if xs.len() < 3 {
        return Err(Error::Domain(format!(
            "fit needs at least 3 points, got {}",
            xs.len()
        )));
    }
    if let Some(bad) = xs.iter().chain(ys).find(|v| !(**v > 0.0 && v.is_finite())) {
        return Err(Error::Domain(format!(
            "fit needs positive finite values, got {bad}"
        )));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Domain(
            "fit needs at least two distinct x values".into(),
        ));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = lx
        .iter()
        .zip(&ly)
        .map(|(x, y)| (y - intercept - slope * x).abs())
        .fold(0.0, f64::max);
    Ok(PowerLawFit {
        exponent: slope,
        constant: intercept.exp(),
        residual,
    })
}

/// `n` log-spaced points in `[lo, hi]`.
pub fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

/// Fit of `sup_xi (1 + |xi|)^theta e^{tau Phi}` against `tau`; target `-theta/p`
/// within 5%. The frequency lattice keeps the verification spacing and is
/// extended until no maximizer sits at its edge.
pub fn verify_multiplier_decay(
    sym: &DissipativeSymbol,
    theta: f64,
    tau_range: (f64, f64),
) -> Result<EstimateReport> {
    let decades = (tau_range.1 / tau_range.0).log10().max(1.0);
    let taus = log_space(
        tau_range.0,
        tau_range.1,
        (20.0 * decades).round() as usize + 1,
    );
    let mut n_points = VERIFY_POINTS;
    let profile = loop {
        let lattice = GridSpec::new(VERIFY_LENGTH, n_points, 2.0 / 3.0)?;
        match smoothing_norm_profile(sym, theta, &taus, &lattice) {
            Err(Error::Resolution(_)) if n_points < 1 << 24 => n_points *= 2,
            other => break other?,
        }
    };
    let fit = fit_power_law(&taus, &profile)?;
    let theory = -theta / sym.p;
    let tolerance = if theory == 0.0 {
        0.01
    } else {
        0.05 * theory.abs()
    };
    let ok = (fit.exponent - theory).abs() <= tolerance;
    Ok(EstimateReport {
        estimate_id: format!("multiplier-decay-theta{theta}"),
        theoretical_exponent: theory,
        fitted_exponent: fit.exponent,
        fit_window: tau_range,
        residual: fit.residual,
        empirical_constant: fit.constant,
        tolerance,
        criterion: "|fitted - theory| <= tolerance (5% of |theory|, 0.01 when theory = 0)".into(),
        verdict: if ok { Verdict::Pass } else { Verdict::Fail },
        notes: vec![
            format!(
                "symbol {}, frequency lattice of {n_points} points",
                sym.name
            ),
            format!(
                "relative deviation {:.4}",
                if theory == 0.0 {
                    fit.exponent.abs()
                } else {
                    (fit.exponent / theory - 1.0).abs()
                }
            ),
        ],
        samples: taus.into_iter().zip(profile).collect(),
    })
}

/// Decay of `||d_x V(t) w0||_{L^{2(k+1)}}` for rough data, the boundedness
/// of its weighted version, and the constant of `||V w0||_X <= C ||w0||_{H^s}`
/// over `draws` seeds.
pub fn verify_weighted_linear(
    sym: &DissipativeSymbol,
    k: f64,
    s: f64,
    data: &DataSpec,
    grid: &Grid,
    draws: usize,
) -> Result<EstimateReport> {
    let gamma = gamma_k(k)?;
    let p = sym.p;
    let q = 2.0 * (k + 1.0);
    let theory = -gamma / p;
    let times = log_space(1e-4, 1.0, 25);
    let prop = Propagator::new(sym.clone(), grid);
    let draws = if data.is_randomized() {
        draws.max(1)
    } else {
        1
    };
    let seeded = |i: usize| -> Result<SpectralField> {
        match *data {
            DataSpec::Rough {
                amplitude,
                sigma,
                eps,
                seed,
            } => rough(grid, amplitude, sigma, eps, seed.wrapping_add(i as u64)),
            ref other => other.build(grid),
        }
    };
    let cfg = WeightedNormConfig::new(s, k, p, 1.0)?;
    struct Draw {
        decay: Vec<f64>,
        constant: f64,
    }
    let results: Vec<Draw> = (0..draws)
        .into_par_iter()
        .map(|i| {
            let w0 = seeded(i)?;
            let decay = times
                .iter()
                .map(|&t| lebesgue_norm(&derivative(&apply_semigroup(&prop, &w0, t)?)?, q))
                .collect::<Result<Vec<_>>>()?;
            let traj = |t: f64| apply_semigroup(&prop, &w0, t);
            let constant = x_norm(&traj, &cfg)?.norm / sobolev_norm(&w0, s)?;
            Ok(Draw { decay, constant })
        })
        .collect::<Result<_>>()?;

    let mut notes = vec![format!(
        "symbol {}, k = {k}, s = {s}, {draws} draw(s), N = {}",
        sym.name,
        grid.n()
    )];
    let mut worst_exponent = f64::INFINITY;
    let mut worst_residual: f64 = 0.0;
    let mut weighted_slope = f64::NEG_INFINITY;
    let mut sup_weighted: f64 = 0.0;
    let mut spread: f64 = 0.0;
    for d in &results {
        let fit = fit_power_law(&times, &d.decay)?;
        worst_exponent = worst_exponent.min(fit.exponent);
        worst_residual = worst_residual.max(fit.residual);
        let weighted: Vec<f64> = times
            .iter()
            .zip(&d.decay)
            .map(|(t, v)| t.powf(gamma / p) * v)
            .collect();
        weighted_slope = weighted_slope.max(fit.exponent + gamma / p);
        let hi = weighted.iter().cloned().fold(0.0, f64::max);
        let lo = weighted.iter().cloned().fold(f64::INFINITY, f64::min);
        sup_weighted = sup_weighted.max(hi);
        spread = spread.max(hi / lo);
    }
    let constants: Vec<f64> = results.iter().map(|d| d.constant).collect();
    let c_max = constants.iter().cloned().fold(0.0, f64::max);
    let c_mean = constants.iter().sum::<f64>() / constants.len() as f64;
    let c_dev = constants
        .iter()
        .map(|c| (c / c_mean - 1.0).abs())
        .fold(0.0, f64::max);
    notes.push(format!(
        "weighted quantity: sup {sup_weighted:.4e}, sup/inf over [1e-4, 1] {spread:.3}"
    ));
    notes.push(format!(
        "empirical C per draw: max {c_max:.4e}, max deviation from mean {:.1}%",
        100.0 * c_dev
    ));

    let tolerance = 0.05;
    let decay_ok = worst_exponent >= theory - tolerance;
    let constant_ok = c_dev <= 0.2;
    let verdict = if !(decay_ok && constant_ok) {
        Verdict::Fail
    } else if weighted_slope > 0.1 {
        notes.push(format!(
            "weighted quantity vanishes as t -> 0 (slope {weighted_slope:.3}); probe not extremal"
        ));
        Verdict::PassWeak
    } else {
        Verdict::Pass
    };
    let samples = times
        .iter()
        .cloned()
        .zip(results[0].decay.iter().cloned())
        .collect();
    Ok(EstimateReport {
        estimate_id: format!("weighted-linear-k{k}-p{p}"),
        theoretical_exponent: theory,
        fitted_exponent: worst_exponent,
        fit_window: (times[0], times[times.len() - 1]),
        residual: worst_residual,
        empirical_constant: c_max,
        tolerance,
        criterion:
            "min fitted decay exponent >= -gamma_k/p - tolerance; per-draw C within 20% of the mean"
                .into(),
        verdict,
        notes,
        samples,
    })
}

/// `||int_0^t V(t - tau) N(v) dtau||` in the space norm of `[0, T]` for the free
/// evolution `v` of the problem data, fitted against `T`; one-sided against
/// `omega_k`.
pub fn verify_nonlinear_estimate(prob: &IvpProblem, t_range: &[f64]) -> Result<EstimateReport> {
    let omega = prob.omega();
    let id = format!("nonlinear-omega-k{}-p{}", prob.k, prob.symbol.p);
    if omega <= 0.0 {
        return Ok(EstimateReport::inadmissible(
            &id,
            omega,
            format!(
                "omega_k = {omega} <= 0 for p = {}, k = {}",
                prob.symbol.p, prob.k
            ),
        ));
    }
    let rows: Vec<(f64, f64, f64)> = t_range
        .par_iter()
        .map(|&t| {
            let map = Arc::new(DuhamelMap::new(prob, t)?);
            let free = map.free();
            let lhs = map
                .space_norm(&map.integral(map.integrate(map.forcing_of(&free)?)?))?
                .norm;
            let base = map.space_norm(&free)?.norm;
            Ok((t, lhs, base))
        })
        .collect::<Result<_>>()?;
    let window = (
        t_range.iter().cloned().fold(f64::INFINITY, f64::min),
        t_range.iter().cloned().fold(0.0, f64::max),
    );
    let tolerance = 0.1;
    let criterion = "fitted exponent >= omega_k - tolerance".to_string();
    if rows.iter().all(|r| r.1 == 0.0) {
        return Ok(EstimateReport {
            estimate_id: id,
            theoretical_exponent: omega,
            fitted_exponent: omega,
            fit_window: window,
            residual: 0.0,
            empirical_constant: 0.0,
            tolerance,
            criterion,
            verdict: Verdict::PassWeak,
            notes: vec!["zero probe: the left side vanishes for every T".into()],
            samples: rows.iter().map(|r| (r.0, r.1)).collect(),
        });
    }
    let ts: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let lhs: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let fit = fit_power_law(&ts, &lhs)?;
    let constant = rows
        .iter()
        .map(|(t, l, b)| l / (t.powf(omega) * b.powf(prob.k + 1.0)))
        .fold(0.0, f64::max);
    let verdict = if fit.exponent < omega - tolerance {
        Verdict::Fail
    } else if fit.exponent > omega + 0.5 {
        Verdict::PassWeak
    } else {
        Verdict::Pass
    };
    Ok(EstimateReport {
        estimate_id: id,
        theoretical_exponent: omega,
        fitted_exponent: fit.exponent,
        fit_window: window,
        residual: fit.residual,
        empirical_constant: constant,
        tolerance,
        criterion,
        verdict,
        notes: vec![format!(
            "symbol {}, empirical constant = max LHS / (T^omega ||v||^(k+1))",
            prob.symbol.name
        )],
        samples: ts.into_iter().zip(lhs).collect(),
    })
}

/// Seeded pairs around the problem data: `data + delta_i`, with rough
/// perturbations of regularity `s` scaled to a quarter of `||data||_{H^s}`.
fn ball_pairs(
    prob: &IvpProblem,
    pairs: usize,
    seed: u64,
) -> Result<Vec<(SpectralField, SpectralField)>> {
    let base = sobolev_norm(&prob.initial_data, prob.s)?;
    let size = if base > 0.0 { 0.25 * base } else { 0.1 };
    let delta = |i: u64| -> Result<SpectralField> {
        let d = rough(&prob.grid, 1.0, prob.s, 0.01, seed.wrapping_add(i))?;
        let n = sobolev_norm(&d, prob.s)?;
        Ok(d.scaled(size / n))
    };
    (0..pairs as u64)
        .map(|i| {
            let a = prob.initial_data.add(&delta(2 * i)?)?;
            let b = prob.initial_data.add(&delta(2 * i + 1)?)?;
            Ok((a, b))
        })
        .collect()
}

/// Largest observed `||Psi(v) - Psi(w)|| / ||v - w||` over free-evolution pairs,
/// for each `T`, fitted against `T`; target `omega_k` within 15%.
pub fn verify_contraction_scaling(
    prob: &IvpProblem,
    t_range: &[f64],
    pairs: usize,
    seed: u64,
) -> Result<EstimateReport> {
    let omega = prob.omega();
    let id = format!("contraction-omega-k{}-p{}", prob.k, prob.symbol.p);
    if omega <= 0.0 {
        return Ok(EstimateReport::inadmissible(
            &id,
            omega,
            format!(
                "omega_k = {omega} <= 0 for p = {}, k = {}",
                prob.symbol.p, prob.k
            ),
        ));
    }
    let prop = prob.propagator();
    let pairs = ball_pairs(prob, pairs, seed)?;
    let mut notes = vec![format!(
        "symbol {}, {} pairs, seed {seed}",
        prob.symbol.name,
        pairs.len()
    )];
    let mut rho = Vec::new();
    let mut times = Vec::new();
    for &t in t_range {
        let map = Arc::new(DuhamelMap::new(prob, t)?);
        let mut best: Option<f64> = None;
        for (a, b) in &pairs {
            let va = |s: f64| apply_semigroup(&prop, a, s);
            let vb = |s: f64| apply_semigroup(&prop, b, s);
            if let Some(r) = map.contraction_ratio(&va, &vb)? {
                best = Some(best.map_or(r, |m: f64| m.max(r)));
            }
        }
        match best {
            Some(r) => {
                times.push(t);
                rho.push(r);
            }
            None => notes.push(format!("T = {t}: every pair degenerate")),
        }
    }
    let fit = fit_power_law(&times, &rho)?;
    let tolerance = 0.15 * omega;
    let halvings: Vec<String> = times
        .windows(2)
        .zip(rho.windows(2))
        .map(|(t, r)| format!("{:.3}", (r[1] / r[0]).ln() / (t[1] / t[0]).ln()))
        .collect();
    notes.push(format!(
        "local exponents between consecutive T: [{}]",
        halvings.join(", ")
    ));
    let ok = (fit.exponent - omega).abs() <= tolerance;
    Ok(EstimateReport {
        estimate_id: id,
        theoretical_exponent: omega,
        fitted_exponent: fit.exponent,
        fit_window: (
            times.iter().cloned().fold(f64::INFINITY, f64::min),
            times.iter().cloned().fold(0.0, f64::max),
        ),
        residual: fit.residual,
        empirical_constant: fit.constant,
        tolerance,
        criterion: "|fitted - omega_k| <= 15% of omega_k".into(),
        verdict: if ok { Verdict::Pass } else { Verdict::Fail },
        notes,
        samples: times.into_iter().zip(rho).collect(),
    })
}

/// Runs the full selection rule and checks every per-iteration Picard ratio
/// against `1/2 + 0.05`.
pub fn verify_selected_contraction(prob: &IvpProblem) -> Result<EstimateReport> {
    let omega = prob.omega();
    let id = format!("contraction-ratio-k{}-p{}", prob.k, prob.symbol.p);
    if omega <= 0.0 {
        return Ok(EstimateReport::inadmissible(
            &id,
            0.5,
            format!(
                "omega_k = {omega} <= 0 for p = {}, k = {}",
                prob.symbol.p, prob.k
            ),
        ));
    }
    let (_, trace) = solve(prob)?;
    let worst = trace.max_ratio().unwrap_or(0.0);
    let tolerance = 0.05;
    let ok = trace.converged && worst <= 0.5 + tolerance;
    Ok(EstimateReport {
        estimate_id: id,
        theoretical_exponent: 0.5,
        fitted_exponent: worst,
        fit_window: (0.0, trace.t_final),
        residual: 0.0,
        empirical_constant: trace.c_calibrated.unwrap_or(0.0),
        tolerance,
        criterion: "converged and every Picard ratio <= 1/2 + tolerance".into(),
        verdict: if ok { Verdict::Pass } else { Verdict::Fail },
        notes: vec![format!(
            "r = {:.4e}, T = {:.4e}, {} iterations, converged = {}",
            trace.r,
            trace.t_final,
            trace.iterates.len(),
            trace.converged
        )],
        samples: trace
            .iterates
            .iter()
            .filter_map(|r| r.ratio.map(|x| (r.iteration as f64, x)))
            .collect(),
    })
}

/// Smoothing gain `mu`: `(p - 1 - s)/2` below `s = p - 1`, else `1/2`.
pub fn smoothing_gain(p: f64, s: f64) -> f64 {
    if s < p - 1.0 {
        0.5 * (p - 1.0 - s)
    } else {
        0.5
    }
}

/// Free and nonlinear smoothing under grid refinement, and continuity of the
/// Duhamel term at `t0 = T/2` in `H^{s + mu}`.
///
/// `data` is rebuilt on the base grid and on its refinement; the fixed point
/// on the refined grid reuses `(r, T)` of the base solve.
pub fn verify_smoothing(prob: &IvpProblem, data: &DataSpec) -> Result<EstimateReport> {
    let p = prob.symbol.p;
    let s = prob.s;
    let mu = smoothing_gain(p, s);
    let id = format!("smoothing-s{s}-p{p}");
    if prob.omega() <= 0.0 {
        return Ok(EstimateReport::inadmissible(
            &id,
            mu,
            format!("omega_k = {} <= 0; no fixed point to probe", prob.omega()),
        ));
    }
    let coarse_grid = prob.grid.clone();
    let fine_grid = refined(&coarse_grid)?;
    let coarse = IvpProblem {
        grid: coarse_grid.clone(),
        initial_data: data.build(&coarse_grid)?,
        ..prob.clone()
    };
    let fine = IvpProblem {
        grid: fine_grid.clone(),
        initial_data: data.build(&fine_grid)?,
        ..prob.clone()
    };
    let (sol_c, trace) = solve(&coarse)?;
    let t_final = trace.t_final;
    let t0 = 0.5 * t_final;
    let (sol_f, trace_f) = picard_iterate(
        &fine,
        trace.r,
        t_final,
        prob.settings.max_iter,
        prob.settings.tol,
    )?;
    let mut notes = vec![format!(
        "mu = {mu}, T = {t_final:.4e}, t_probe = {t0:.4e}, N = {} and {}",
        coarse_grid.n(),
        fine_grid.n()
    )];
    if !(trace.converged && trace_f.converged) {
        notes.push("a Picard iteration stopped before tolerance".into());
    }

    let s_free = s + 0.5 * (p - 1.0 - s);
    let free_norm = |pb: &IvpProblem| -> Result<f64> {
        sobolev_norm(
            &apply_semigroup(&pb.propagator(), &pb.initial_data, t0)?,
            s_free,
        )
    };
    let free_ratio = free_norm(&fine)? / free_norm(&coarse)?;
    let duhamel_at = |sol: &crate::solver::PicardSolution, t: f64| -> Result<SpectralField> {
        match sol.duhamel_part() {
            Some(d) => crate::norms::Trajectory::at(&d, t),
            None => Ok(SpectralField::zeros(&sol.map().problem().grid)),
        }
    };
    let nc = sobolev_norm(&duhamel_at(&sol_c, t0)?, s + mu)?;
    let nf = sobolev_norm(&duhamel_at(&sol_f, t0)?, s + mu)?;
    let nonlinear_ratio = if nc == 0.0 && nf == 0.0 { 1.0 } else { nf / nc };
    notes.push(format!(
        "free H^{s_free} ratio (2N/N) {free_ratio:.5}; Duhamel H^{} ratio {nonlinear_ratio:.5} ({nc:.4e} -> {nf:.4e})",
        s + mu
    ));

    let base = duhamel_at(&sol_c, t0)?;
    let mut gaps = Vec::new();
    let mut seq = Vec::new();
    for j in 1..=5 {
        let t = t0 + (t_final - t0) * 0.5f64.powi(j);
        let d = sobolev_norm(&duhamel_at(&sol_c, t)?.sub(&base)?, s + mu)?;
        gaps.push(t - t0);
        seq.push(d);
    }
    let decreasing = seq.windows(2).all(|w| w[1] < w[0]);
    notes.push(format!(
        "continuity sequence: [{}]",
        seq.iter()
            .map(|v| format!("{v:.3e}"))
            .collect::<Vec<_>>()
            .join(", ")
    ));
    let fit = if seq.iter().all(|v| *v > 0.0) {
        Some(fit_power_law(&gaps, &seq)?)
    } else {
        None
    };
    let tolerance = 0.1;
    let stable =
        (free_ratio - 1.0).abs() <= tolerance && (nonlinear_ratio - 1.0).abs() <= tolerance;
    let ok = stable && (decreasing || seq.iter().all(|v| *v == 0.0));
    Ok(EstimateReport {
        estimate_id: id,
        theoretical_exponent: 0.0,
        fitted_exponent: fit.map_or(0.0, |f| f.exponent),
        fit_window: (gaps[gaps.len() - 1], gaps[0]),
        residual: fit.map_or(0.0, |f| f.residual),
        empirical_constant: nonlinear_ratio,
        tolerance,
        criterion: "free and Duhamel norm ratios between N and 2N within 10%; continuity sequence strictly decreasing (fitted = its Hoelder exponent in t - t0)".into(),
        verdict: if ok { Verdict::Pass } else { Verdict::Fail },
        notes,
        samples: gaps.into_iter().zip(seq).collect(),
    })
}

/// `||f||_{L^p1} / ||f^||_{L^q1}` with the unitary transform
/// `f^(xi) = (2 pi)^{-1/2} int f e^{-i x xi} dx` sampled at the grid frequencies.
pub fn hausdorff_young_ratio(f: &SpectralField, p1: f64) -> Result<f64> {
    if !(p1 >= 2.0) {
        return Err(Error::Domain(format!(
            "Hausdorff-Young needs p1 >= 2, got {p1}"
        )));
    }
    let q1 = if p1.is_infinite() {
        1.0
    } else {
        p1 / (p1 - 1.0)
    };
    let grid = f.grid();
    let scale = grid.length() / (2.0 * std::f64::consts::PI).sqrt();
    let dxi = grid.spec().frequency_step();
    let sum: f64 = f.spec().iter().map(|c| (scale * c.norm()).powf(q1)).sum();
    let hat = (dxi * sum).powf(1.0 / q1);
    Ok(lebesgue_norm(f, p1)? / hat)
}

/// Max ratio over the field set on `grid` and on its refinement; passes when
/// finite and stable to 10%.
pub fn verify_hausdorff_young(
    fields: &dyn Fn(&Grid) -> Result<Vec<SpectralField>>,
    grid: &Grid,
    p1: f64,
) -> Result<EstimateReport> {
    let max_ratio = |g: &Grid| -> Result<f64> {
        let set = fields(g)?;
        let mut best: Option<f64> = None;
        for f in set.iter().filter(|f| !f.is_zero()) {
            let r = hausdorff_young_ratio(f, p1)?;
            best = Some(best.map_or(r, |b: f64| b.max(r)));
        }
        best.ok_or_else(|| Error::Degenerate("Hausdorff-Young needs a nonzero field".into()))
    };
    let fine_grid = refined(grid)?;
    let c0 = max_ratio(grid)?;
    let c1 = max_ratio(&fine_grid)?;
    let tolerance = 0.1;
    let ok = c0.is_finite() && c1.is_finite() && (c1 / c0 - 1.0).abs() <= tolerance;
    Ok(EstimateReport {
        estimate_id: format!("hausdorff-young-p{p1}"),
        theoretical_exponent: 0.0,
        fitted_exponent: (c1 / c0).ln() / 2f64.ln(),
        fit_window: (grid.n() as f64, fine_grid.n() as f64),
        residual: 0.0,
        empirical_constant: c0.max(c1),
        tolerance,
        criterion:
            "constant finite and within 10% between N and 2N (fitted = growth exponent in N)".into(),
        verdict: if ok { Verdict::Pass } else { Verdict::Fail },
        notes: vec![format!(
            "constants {c0:.6} (N = {}), {c1:.6} (N = {})",
            grid.n(),
            fine_grid.n()
        )],
        samples: vec![(grid.n() as f64, c0), (fine_grid.n() as f64, c1)],
    })
}

/// Re-checks the three large-frequency conditions at `10^4` log-spaced
/// frequencies in `[M, 1000 max(M, 1)]`. `m` overrides the computed threshold.
pub fn verify_threshold_conditions(
    sym: &DissipativeSymbol,
    m: Option<f64>,
) -> Result<EstimateReport> {
    let computed = sym.threshold_m(1e3, 1e-10)?;
    let m = m.unwrap_or(computed);
    if !(m > 0.0) {
        return Err(Error::Domain(format!(
            "threshold must be positive, got {m}"
        )));
    }
    let xs = log_space(m, 1e3 * m.max(1.0), 10_000);
    let violations: Vec<f64> = xs
        .iter()
        .cloned()
        .filter(|&x| !sym.threshold_conditions_hold(x))
        .collect();
    let mut notes = vec![format!(
        "symbol {}, computed M = {computed:.10}, scanned from {m:.10}",
        sym.name
    )];
    if let Some(first) = violations.first() {
        notes.push(format!(
            "{} violation(s), first at xi = {first:.10}, last at xi = {:.10}",
            violations.len(),
            violations[violations.len() - 1]
        ));
    }
    Ok(EstimateReport {
        estimate_id: format!("threshold-{}", sym.name),
        theoretical_exponent: 0.0,
        fitted_exponent: violations.len() as f64,
        fit_window: (xs[0], xs[xs.len() - 1]),
        residual: 0.0,
        empirical_constant: m,
        tolerance: 0.0,
        criterion: "zero violations of the threshold conditions (fitted = violation count)".into(),
        verdict: if violations.is_empty() {
            Verdict::Pass
        } else {
            Verdict::Fail
        },
        notes,
        samples: violations
            .iter()
            .map(|&x| (x, sym.phi(x)))
            .take(20)
            .collect(),
    })
}

/// Linear checks, valid for every `(k, p)`: multiplier decay at `theta = 1`,
/// the weighted linear estimate over 10 seeded draws and the threshold scan.
pub fn linear_suite(
    sym: &DissipativeSymbol,
    k: f64,
    s: f64,
    data: &DataSpec,
    grid: &Grid,
) -> Result<Vec<EstimateReport>> {
    Ok(vec![
        verify_multiplier_decay(sym, 1.0, (1e-4, 1e-2))?,
        verify_weighted_linear(sym, k, s, data, grid, 10)?,
        verify_threshold_conditions(sym, None)?,
    ])
}
