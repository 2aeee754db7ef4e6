//! Picard iteration on the Duhamel formula
//!
//! ```text
//! v(t) = V(t) v0 - int_0^t V(t - tau) N(v(tau)) dtau,
//! ```
//!
//! the radius/time selection rule that makes it a contraction, and an
//! independent ETDRK4 reference integrator.
//!
//! Non-integer powers use the sign-preserving convention `|v|^k v`, which
//! keeps the nonlinearity odd and real and agrees with `v^{k+1}` whenever
//! `k` is an integer.

use std::fmt::Write as _;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::norms::{
    default_sample_times, omega_k, sobolev_norm, x_norm, y_norm, NormReport, Trajectory,
    WeightedNormConfig,
};
use crate::quadrature::TimeMesh;
use crate::semigroup::{DuhamelState, MeshDuhamel, Propagator};
use crate::spectral::{Grid, SpectralField};
use crate::symbols::DissipativeSymbol;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Contour points for the ETDRK4 coefficients.
const CONTOUR_POINTS: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NonlinearMode {
    /// `N(v) = (P(v))_x`
    Conservative,
    /// `N(u) = P(u_x)`
    Gradient,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSettings {
    pub panels: usize,
    pub grading: f64,
    /// Log-spaced sample times of the space norm.
    pub n_samples: usize,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            panels: 16,
            grading: 2.0,
            n_samples: 20,
            max_iter: 60,
            tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone)]
pub struct IvpProblem {
    pub symbol: DissipativeSymbol,
    pub grid: Grid,
    pub k: f64,
    pub mode: NonlinearMode,
    /// Regularity label of the data; sets the Sobolev index of the space norm.
    pub s: f64,
    pub initial_data: SpectralField,
    /// Factor in front of the nonlinearity; 0 gives the linear problem.
    pub coupling: f64,
    pub settings: SolverSettings,
}

impl IvpProblem {
    pub fn new(
        symbol: DissipativeSymbol,
        k: f64,
        mode: NonlinearMode,
        s: f64,
        initial_data: SpectralField,
    ) -> Result<Self> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::Domain(format!("k must be positive, got {k}")));
        }
        initial_data.require_coherent()?;
        Ok(Self {
            symbol,
            grid: initial_data.grid().clone(),
            k,
            mode,
            s,
            initial_data,
            coupling: 1.0,
            settings: SolverSettings::default(),
        })
    }

    pub fn with_coupling(mut self, coupling: f64) -> Self {
        self.coupling = coupling;
        self
    }

    pub fn with_settings(mut self, settings: SolverSettings) -> Self {
        self.settings = settings;
        self
    }

    /// Same problem with other initial data on the same grid.
    pub fn with_data(&self, data: SpectralField) -> Result<Self> {
        if !self.grid.same_as(data.grid()) {
            return Err(Error::Structural(
                "data grid does not match the problem grid".into(),
            ));
        }
        data.require_coherent()?;
        let mut out = self.clone();
        out.initial_data = data;
        Ok(out)
    }

    pub fn propagator(&self) -> Propagator {
        Propagator::new(self.symbol.clone(), &self.grid)
    }

    pub fn omega(&self) -> f64 {
        omega_k(self.k, self.symbol.p)
    }

    /// Well-posedness hypotheses that the discrete problem does not need but the
    /// estimates do.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        match self.mode {
            NonlinearMode::Conservative if !(self.s > -1.0) => {
                out.push(format!("conservative mode expects s > -1, got {}", self.s))
            }
            NonlinearMode::Gradient if !(self.s > 0.0) => {
                out.push(format!("gradient mode expects s > 0, got {}", self.s))
            }
            _ => {}
        }
        if self.omega() <= 0.0 {
            out.push(format!(
                "omega_k = {} <= 0: contraction path unavailable for p = {}, k = {}",
                self.omega(),
                self.symbol.p,
                self.k
            ));
        }
        out
    }

    pub fn norm_config(&self, t_final: f64) -> Result<WeightedNormConfig> {
        WeightedNormConfig::with_sample_times(
            self.s,
            self.k,
            self.symbol.p,
            t_final,
            default_sample_times(t_final, self.settings.n_samples),
        )
    }

    /// `X_T` norm in conservative mode, `Y_T` in gradient mode.
    pub fn space_norm(&self, traj: &dyn Trajectory, t_final: f64) -> Result<NormReport> {
        let cfg = self.norm_config(t_final)?;
        match self.mode {
            NonlinearMode::Conservative => x_norm(traj, &cfg),
            NonlinearMode::Gradient => y_norm(traj, &cfg),
        }
    }
}

/// `P(v)`: `v^{k+1}` for integer `k`, `|v|^k v` otherwise.
pub fn pointwise_power(v: f64, k: f64) -> f64 {
    if k.fract() == 0.0 && k.abs() < 64.0 {
        v.powi(k as i32 + 1)
    } else {
        v.abs().powf(k) * v
    }
}

/// Coefficients of `coupling * N(v)` from those of `v`, dealiased on both
/// sides of the pointwise power.
fn nonlinear_spectrum(
    grid: &Grid,
    spec: &[Complex64],
    k: f64,
    mode: NonlinearMode,
    coupling: f64,
    time: f64,
) -> Result<Vec<Complex64>> {
    let gs = grid.spec();
    let cutoff = gs.cutoff() as i64;
    let xi = grid.wavenumbers();
    let n = grid.n();
    let keep = |j: usize| gs.mode_index(j).abs() < cutoff;
    let pre: Vec<Complex64> = (0..n)
        .map(|j| {
            if !keep(j) {
                ZERO
            } else if mode == NonlinearMode::Gradient {
                spec[j] * Complex64::new(0.0, xi[j])
            } else {
                spec[j]
            }
        })
        .collect();
    let u = SpectralField::from_trusted_coefficients(grid, pre);
    let powered: Vec<f64> = u.phys().iter().map(|&v| pointwise_power(v, k)).collect();
    if powered.iter().any(|v| !v.is_finite()) {
        return Err(Error::BlowUp {
            what: "nonlinearity".into(),
            time,
        });
    }
    let pf = SpectralField::from_samples(grid, powered)?;
    Ok((0..n)
        .map(|j| {
            if !keep(j) {
                ZERO
            } else if mode == NonlinearMode::Conservative {
                pf.spec()[j] * Complex64::new(0.0, coupling * xi[j])
            } else {
                pf.spec()[j] * coupling
            }
        })
        .collect())
}

/// `N(f)`: `(P(f))_x` or `P(f_x)`.
pub fn nonlinearity_eval(f: &SpectralField, k: f64, mode: NonlinearMode) -> Result<SpectralField> {
    f.require_coherent()?;
    let spec = nonlinear_spectrum(f.grid(), f.spec(), k, mode, 1.0, f64::NAN)?;
    Ok(SpectralField::from_trusted_coefficients(f.grid(), spec))
}

fn expand_half(n: usize, half: &[Complex64]) -> Vec<Complex64> {
    let mut spec = vec![ZERO; n];
    spec[0] = Complex64::new(half[0].re, 0.0);
    for j in 1..n / 2 {
        spec[j] = half[j];
        spec[n - j] = half[j].conj();
    }
    spec
}

/// The discrete Duhamel map on `[0, T]`: free evolution of the stored data
/// minus the product-integrated nonlinear term.
#[derive(Debug)]
pub struct DuhamelMap {
    prob: IvpProblem,
    duhamel: MeshDuhamel,
    t_final: f64,
    /// `lambda` on slots `0..=N/2`.
    lambda: Vec<Complex64>,
}

impl DuhamelMap {
    pub fn new(prob: &IvpProblem, t_final: f64) -> Result<Self> {
        if !(t_final > 0.0 && t_final <= 1.0) {
            return Err(Error::Domain(format!(
                "T must lie in (0, 1], got {t_final}"
            )));
        }
        let prop = prob.propagator();
        let mesh = TimeMesh::graded(t_final, prob.settings.panels, prob.settings.grading)?;
        let duhamel = MeshDuhamel::new(&prop, mesh);
        let half = prob.grid.n() / 2;
        let lambda = prob.grid.wavenumbers()[..=half]
            .iter()
            .map(|&xi| prop.exponent(xi))
            .collect();
        Ok(Self {
            prob: prob.clone(),
            duhamel,
            t_final,
            lambda,
        })
    }

    pub fn problem(&self) -> &IvpProblem {
        &self.prob
    }

    pub fn t_final(&self) -> f64 {
        self.t_final
    }

    pub fn node_times(&self) -> Vec<f64> {
        self.duhamel.node_times()
    }

    /// Half spectrum of `V(t) data`; the Nyquist slot is dropped.
    fn free_half(&self, data: &SpectralField, t: f64) -> Vec<Complex64> {
        let nyq = self.lambda.len() - 1;
        data.spec()[..=nyq]
            .iter()
            .zip(&self.lambda)
            .enumerate()
            .map(|(j, (c, l))| if j == nyq { ZERO } else { c * (l * t).exp() })
            .collect()
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if t >= 0.0 && t <= self.t_final {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "time {t} outside [0, {}]",
                self.t_final
            )))
        }
    }

    /// `coupling * N(v)` at every mesh node, from half spectra of `v` there.
    pub fn forcing_from_nodes(&self, nodes: &[Vec<Complex64>]) -> Result<Vec<Vec<Complex64>>> {
        let n = self.prob.grid.n();
        let times = self.node_times();
        let half = self.lambda.len();
        nodes
            .par_iter()
            .zip(times.par_iter())
            .map(|(v, &t)| {
                let spec = nonlinear_spectrum(
                    &self.prob.grid,
                    &expand_half(n, v),
                    self.prob.k,
                    self.prob.mode,
                    self.prob.coupling,
                    t,
                )?;
                Ok(spec[..half].to_vec())
            })
            .collect()
    }

    /// `coupling * N(v)` at every mesh node for a trajectory `v`.
    pub fn forcing_of(&self, traj: &dyn Trajectory) -> Result<Vec<Vec<Complex64>>> {
        let nodes: Vec<Vec<Complex64>> = self
            .node_times()
            .par_iter()
            .map(|&t| self.duhamel.half_spectrum(&traj.at(t)?))
            .collect::<Result<_>>()?;
        self.forcing_from_nodes(&nodes)
    }

    /// `||Psi(v) - Psi(w)|| / ||v - w||`, or `None` when `v` and `w` agree
    /// to `1e-12`.
    pub fn contraction_ratio(
        self: &Arc<Self>,
        v: &dyn Trajectory,
        w: &dyn Trajectory,
    ) -> Result<Option<f64>> {
        let diff = |t: f64| v.at(t)?.sub(&w.at(t)?);
        let den = self.space_norm(&diff)?.norm;
        if !(den >= 1e-12) {
            return Ok(None);
        }
        let fv = self.forcing_of(v)?;
        let fw = self.forcing_of(w)?;
        let df = fv
            .into_iter()
            .zip(fw)
            .map(|(a, b)| a.into_iter().zip(b).map(|(x, y)| x - y).collect())
            .collect();
        let num = self.space_norm(&self.integral(self.integrate(df)?))?.norm;
        Ok(Some(num / den))
    }

    pub fn integrate(&self, forcing: Vec<Vec<Complex64>>) -> Result<DuhamelState> {
        self.duhamel.accumulate(forcing)
    }

    pub fn space_norm(&self, traj: &dyn Trajectory) -> Result<NormReport> {
        self.prob.space_norm(traj, self.t_final)
    }

    /// Free evolution of the stored data.
    pub fn free(self: &Arc<Self>) -> PicardSolution {
        PicardSolution {
            map: Arc::clone(self),
            state: None,
        }
    }

    /// `V(t) v0 - int_0^t V(t - tau) F(tau) dtau`.
    pub fn iterate(self: &Arc<Self>, state: DuhamelState) -> PicardSolution {
        PicardSolution {
            map: Arc::clone(self),
            state: Some(state),
        }
    }

    /// The integral `int_0^t V(t - tau) F(tau) dtau` alone.
    pub fn integral(self: &Arc<Self>, state: DuhamelState) -> DuhamelTerm {
        DuhamelTerm {
            map: Arc::clone(self),
            state,
            sign: 1.0,
        }
    }

    fn node_values(&self, state: Option<&DuhamelState>) -> Vec<Vec<Complex64>> {
        let data = &self.prob.initial_data;
        self.node_times()
            .par_iter()
            .enumerate()
            .map(|(idx, &t)| {
                let mut v = self.free_half(data, t);
                if let Some(st) = state {
                    let d = self.duhamel.evaluate_node_half(st, idx);
                    for (a, b) in v.iter_mut().zip(d) {
                        *a -= b;
                    }
                }
                v
            })
            .collect()
    }
}

/// An iterate of the Duhamel map, evaluable at any `t in [0, T]`.
#[derive(Debug, Clone)]
pub struct PicardSolution {
    map: Arc<DuhamelMap>,
    state: Option<DuhamelState>,
}

impl PicardSolution {
    pub fn t_final(&self) -> f64 {
        self.map.t_final
    }

    pub fn map(&self) -> &Arc<DuhamelMap> {
        &self.map
    }

    /// Nonlinear part `v(t) - V(t) v0`.
    pub fn duhamel_part(&self) -> Option<DuhamelTerm> {
        self.state.clone().map(|s| self.map.integral(s).negated())
    }

    /// `||Psi(v) - v||` in the space norm.
    pub fn fixed_point_residual(&self) -> Result<f64> {
        let nodes = self.map.node_values(self.state.as_ref());
        let mut forcing = self.map.forcing_from_nodes(&nodes)?;
        if let Some(st) = &self.state {
            for (f, g) in forcing.iter_mut().zip(st.forcing()) {
                for (a, b) in f.iter_mut().zip(g) {
                    *a -= b;
                }
            }
        }
        let diff = self.map.integral(self.map.integrate(forcing)?);
        Ok(self.map.space_norm(&diff)?.norm)
    }
}

impl Trajectory for PicardSolution {
    fn at(&self, t: f64) -> Result<SpectralField> {
        self.map.check_time(t)?;
        if t == 0.0 {
            return Ok(self.map.prob.initial_data.clone());
        }
        let mut v = self.map.free_half(&self.map.prob.initial_data, t);
        if let Some(st) = &self.state {
            let d = self.map.duhamel.evaluate_half(st, t)?;
            for (a, b) in v.iter_mut().zip(d) {
                *a -= b;
            }
        }
        Ok(self.map.duhamel.to_field(&v))
    }
}

/// `int_0^t V(t - tau) F(tau) dtau` for stored node forcing `F`.
#[derive(Debug, Clone)]
pub struct DuhamelTerm {
    map: Arc<DuhamelMap>,
    state: DuhamelState,
    sign: f64,
}

impl DuhamelTerm {
    fn negated(mut self) -> Self {
        self.sign = -self.sign;
        self
    }
}

impl Trajectory for DuhamelTerm {
    fn at(&self, t: f64) -> Result<SpectralField> {
        self.map.check_time(t)?;
        let f = self.map.duhamel.evaluate(&self.state, t)?;
        Ok(if self.sign < 0.0 { f.scaled(-1.0) } else { f })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PicardRecord {
    pub iteration: usize,
    /// Space norm of `v^n`.
    pub iterate_norm: f64,
    /// Space norm of `v^n - v^{n-1}`.
    pub increment_norm: f64,
    /// `||v^n - v^{n-1}|| / ||v^{n-1} - v^{n-2}||`.
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PicardTrace {
    pub r: f64,
    pub t_final: f64,
    pub c_calibrated: Option<f64>,
    pub omega: f64,
    pub iterates: Vec<PicardRecord>,
    pub converged: bool,
}

impl PicardTrace {
    pub fn max_ratio(&self) -> Option<f64> {
        self.iterates
            .iter()
            .filter_map(|r| r.ratio)
            .fold(None, |m, r| Some(m.map_or(r, |m: f64| m.max(r))))
    }
}

/// `r = 4 c ||v0||_{H^s}`, `T = min(1, (1 / (4 c r^k))^{1/omega_k})`.
pub fn select_radius_and_time(prob: &IvpProblem, c: f64) -> Result<(f64, f64)> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::Domain(format!("c must be positive, got {c}")));
    }
    let omega = prob.omega();
    if !(omega > 0.0) {
        return Err(Error::Admissibility {
            k: prob.k,
            p: prob.symbol.p,
            omega,
        });
    }
    let r = 4.0 * c * sobolev_norm(&prob.initial_data, prob.s)?;
    if r == 0.0 {
        return Ok((0.0, 1.0));
    }
    let t = (1.0 / (4.0 * c * r.powf(prob.k)))
        .powf(1.0 / omega)
        .min(1.0);
    Ok((r, t))
}

/// Empirical constant of the contraction estimates on `[0, 1]`: twice the
/// largest of `||I[N(V v)]|| / ||V v||^{k+1}` and `||V v|| / ||v||_{H^s}`
/// over the nonzero probes.
pub fn calibrate_c(prob: &IvpProblem, probes: &[SpectralField]) -> Result<f64> {
    let mut best: Option<f64> = None;
    for probe in probes {
        if probe.is_zero() {
            continue;
        }
        let map = Arc::new(DuhamelMap::new(&prob.with_data(probe.clone())?, 1.0)?);
        let free = map.free();
        let free_norm = map.space_norm(&free)?.norm;
        let data_norm = sobolev_norm(probe, prob.s)?;
        let term = map.integral(map.integrate(map.forcing_of(&free)?)?);
        let nl = map.space_norm(&term)?.norm / free_norm.powf(prob.k + 1.0);
        let ratio = nl.max(free_norm / data_norm);
        if !ratio.is_finite() {
            return Err(Error::BlowUp {
                what: "calibration ratio".into(),
                time: 1.0,
            });
        }
        best = Some(best.map_or(ratio, |b: f64| b.max(ratio)));
    }
    best.map(|b| 2.0 * b)
        .ok_or_else(|| Error::Degenerate("calibration needs at least one nonzero probe".into()))
}

/// Picard iteration `v^{n+1} = Psi(v^n)` from `v^0 = V(t) v0`, stopping when
/// the space norm of the increment drops to `tol`.
pub fn picard_iterate(
    prob: &IvpProblem,
    r: f64,
    t_final: f64,
    max_iter: usize,
    tol: f64,
) -> Result<(PicardSolution, PicardTrace)> {
    let map = Arc::new(DuhamelMap::new(prob, t_final)?);
    let limit = 10.0 * r;
    let mut nodes = map.node_values(None);
    let mut current = map.free();
    let mut prev_forcing: Option<Vec<Vec<Complex64>>> = None;
    let mut prev_increment: Option<f64> = None;
    let mut iterates = Vec::new();
    let mut converged = false;
    for iteration in 1..=max_iter {
        let forcing = map.forcing_from_nodes(&nodes)?;
        let diff_forcing = match &prev_forcing {
            None => forcing.clone(),
            Some(pf) => forcing
                .iter()
                .zip(pf)
                .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - y).collect())
                .collect(),
        };
        let state = map.integrate(forcing.clone())?;
        let increment = map
            .space_norm(&map.integral(map.integrate(diff_forcing)?))?
            .norm;
        let next = map.iterate(state);
        let iterate_norm = map.space_norm(&next)?.norm;
        if !(iterate_norm.is_finite() && increment.is_finite()) {
            return Err(Error::BlowUp {
                what: format!("Picard iterate {iteration}"),
                time: t_final,
            });
        }
        if iterate_norm > limit {
            return Err(Error::Divergence {
                iteration,
                norm: iterate_norm,
                limit,
            });
        }
        let ratio = prev_increment.filter(|&p| p > 0.0).map(|p| increment / p);
        iterates.push(PicardRecord {
            iteration,
            iterate_norm,
            increment_norm: increment,
            ratio,
        });
        nodes = map.node_values(next.state.as_ref());
        current = next;
        prev_forcing = Some(forcing);
        prev_increment = Some(increment);
        if increment <= tol {
            converged = true;
            break;
        }
    }
    let trace = PicardTrace {
        r,
        t_final,
        c_calibrated: None,
        omega: prob.omega(),
        iterates,
        converged,
    };
    Ok((current, trace))
}

/// Calibrate `c`, select `(r, T)` and iterate to the fixed point.
pub fn solve(prob: &IvpProblem) -> Result<(PicardSolution, PicardTrace)> {
    let omega = prob.omega();
    if !(omega > 0.0) {
        return Err(Error::Admissibility {
            k: prob.k,
            p: prob.symbol.p,
            omega,
        });
    }
    let c = if prob.initial_data.is_zero() {
        None
    } else {
        Some(calibrate_c(prob, std::slice::from_ref(&prob.initial_data))?)
    };
    let (r, t) = select_radius_and_time(prob, c.unwrap_or(1.0))?;
    let (sol, mut trace) = picard_iterate(prob, r, t, prob.settings.max_iter, prob.settings.tol)?;
    trace.c_calibrated = c;
    Ok((sol, trace))
}

/// Output of [`reference_integrate`].
#[derive(Debug, Clone)]
pub struct ReferenceSolution {
    /// Times of the stored snapshots, ending at `T`.
    pub times: Vec<f64>,
    pub snapshots: Vec<SpectralField>,
    /// `L^2` norm after every step, starting with the data.
    pub l2_history: Vec<f64>,
}

impl ReferenceSolution {
    pub fn final_state(&self) -> &SpectralField {
        self.snapshots.last().expect("at least one snapshot")
    }
}

/// ETDRK4 coefficients `(E, E/2, Q, f1, f2, f3)` for `z = h lambda`, by
/// averaging over a circle around `z`. The radius is 2 when the unit circle
/// would pass close to the removable singularity at the origin.
fn etd_coefficients(z: Complex64, h: f64) -> [Complex64; 6] {
    let radius = if z.norm() < 1.5 { 2.0 } else { 1.0 };
    let mut acc = [ZERO; 4];
    for j in 0..CONTOUR_POINTS {
        let theta = std::f64::consts::TAU * (j as f64 + 0.5) / CONTOUR_POINTS as f64;
        let r = z + Complex64::from_polar(radius, theta);
        let er = r.exp();
        let r3 = r * r * r;
        acc[0] += ((r * 0.5).exp() - 1.0) / r;
        acc[1] += (-4.0 - r + er * (4.0 - 3.0 * r + r * r)) / r3;
        acc[2] += (2.0 + r + er * (r - 2.0)) / r3;
        acc[3] += (-4.0 - 3.0 * r - r * r + er * (4.0 - r)) / r3;
    }
    let m = h / CONTOUR_POINTS as f64;
    [
        z.exp(),
        (z * 0.5).exp(),
        acc[0] * m,
        acc[1] * m,
        acc[2] * m,
        acc[3] * m,
    ]
}

/// Fourth-order exponential time differencing with the full linear
/// multiplier treated exactly and `N` explicit; `n_steps` equal steps on `[0, T]`.
/// Records 16 evenly spaced snapshots plus the final state.
pub fn reference_integrate(
    prob: &IvpProblem,
    t_final: f64,
    n_steps: usize,
) -> Result<ReferenceSolution> {
    if n_steps < 1 {
        return Err(Error::Domain("n_steps must be >= 1".into()));
    }
    if !(t_final > 0.0 && t_final.is_finite()) {
        return Err(Error::Domain(format!("T must be positive, got {t_final}")));
    }
    let grid = &prob.grid;
    let n = grid.n();
    let h = t_final / n_steps as f64;
    let prop = prob.propagator();
    let nyq = grid.spec().nyquist_slot();
    let coef: Vec<[Complex64; 6]> = grid
        .wavenumbers()
        .iter()
        .enumerate()
        .map(|(j, &xi)| {
            if j == nyq {
                [ZERO; 6]
            } else {
                etd_coefficients(prop.exponent(xi) * h, h)
            }
        })
        .collect();
    let nonlinear = |v: &[Complex64], t: f64| -> Result<Vec<Complex64>> {
        let mut out = nonlinear_spectrum(grid, v, prob.k, prob.mode, prob.coupling, t)?;
        for c in out.iter_mut() {
            *c = -*c;
        }
        Ok(out)
    };
    let l2 = |v: &[Complex64]| (grid.length() * v.iter().map(|c| c.norm_sqr()).sum::<f64>()).sqrt();
    let record_every = (n_steps / 16).max(1);
    let mut v = prob.initial_data.spec().to_vec();
    let linear = prob.coupling == 0.0;
    let mut times = vec![0.0];
    let mut snapshots = vec![prob.initial_data.clone()];
    let mut l2_history = vec![l2(&v)];
    for step in 1..=n_steps {
        let t = (step - 1) as f64 * h;
        let next: Vec<Complex64> = if linear {
            v.iter().zip(&coef).map(|(c, k)| k[0] * c).collect()
        } else {
            let nv = nonlinear(&v, t)?;
            let a: Vec<Complex64> = (0..n)
                .map(|j| coef[j][1] * v[j] + coef[j][2] * nv[j])
                .collect();
            let na = nonlinear(&a, t + 0.5 * h)?;
            let b: Vec<Complex64> = (0..n)
                .map(|j| coef[j][1] * v[j] + coef[j][2] * na[j])
                .collect();
            let nb = nonlinear(&b, t + 0.5 * h)?;
            let c: Vec<Complex64> = (0..n)
                .map(|j| coef[j][1] * a[j] + coef[j][2] * (2.0 * nb[j] - nv[j]))
                .collect();
            let nc = nonlinear(&c, t + h)?;
            (0..n)
                .map(|j| {
                    let k = &coef[j];
                    k[0] * v[j] + k[3] * nv[j] + k[4] * 2.0 * (na[j] + nb[j]) + k[5] * nc[j]
                })
                .collect()
        };
        let before = *l2_history.last().unwrap();
        let after = l2(&next);
        if !after.is_finite() {
            return Err(Error::BlowUp {
                what: "reference solution".into(),
                time: step as f64 * h,
            });
        }
        if before > 0.0 && after > 10.0 * before {
            return Err(Error::Stability {
                step,
                growth: after / before,
            });
        }
        v = next;
        l2_history.push(after);
        if step % record_every == 0 || step == n_steps {
            times.push(if step == n_steps {
                t_final
            } else {
                step as f64 * h
            });
            snapshots.push(SpectralField::from_trusted_coefficients(grid, v.clone()));
        }
    }
    Ok(ReferenceSolution {
        times,
        snapshots,
        l2_history,
    })
}

/// Rows `x,value`.
pub fn field_csv(f: &SpectralField) -> String {
    let mut out = String::from("x,value\n");
    for (j, v) in f.phys().iter().enumerate() {
        let _ = writeln!(out, "{},{}", f.grid().spec().point(j), v);
    }
    out
}
