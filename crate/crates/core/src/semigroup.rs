//! The linear propagator `V(t)`, multiplier `exp(i t xi^3 + eta t Phi(xi))`,
//! and Duhamel integrals against it.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::expint::phi_functions;
use crate::quadrature::{TimeMesh, NODES_PER_PANEL};
use crate::spectral::{bracket, Grid, GridSpec, SpectralField};
use crate::symbols::DissipativeSymbol;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

#[derive(Debug, Clone)]
pub struct Propagator {
    symbol: DissipativeSymbol,
    grid: Grid,
}

impl Propagator {
    pub fn new(symbol: DissipativeSymbol, grid: &Grid) -> Self {
        Self {
            symbol,
            grid: grid.clone(),
        }
    }

    pub fn symbol(&self) -> &DissipativeSymbol {
        &self.symbol
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// `lambda(xi) = i xi^3 + eta Phi(xi)`, so that `V(t) = exp(t lambda)`.
    pub fn exponent(&self, xi: f64) -> Complex64 {
        Complex64::new(self.symbol.eta * self.symbol.phi(xi), xi * xi * xi)
    }

    /// Exponents in storage order.
    pub fn exponents(&self) -> Vec<Complex64> {
        self.grid
            .wavenumbers()
            .iter()
            .map(|&xi| self.exponent(xi))
            .collect()
    }

    fn check_grid(&self, f: &SpectralField) -> Result<()> {
        if self.grid.same_as(f.grid()) {
            Ok(())
        } else {
            Err(Error::Structural(format!(
                "field grid {:?} does not match propagator grid {:?}",
                f.grid().spec(),
                self.grid.spec()
            )))
        }
    }

    /// Multipliers `exp(t lambda_j)`, with the Nyquist rule applied.
    fn multipliers(&self, t: f64) -> Result<Vec<Complex64>> {
        let nyq = self.grid.spec().nyquist_slot();
        self.grid
            .wavenumbers()
            .iter()
            .enumerate()
            .map(|(j, &xi)| {
                let m = (self.exponent(xi) * t).exp();
                if !(m.re.is_finite() && m.im.is_finite()) {
                    return Err(Error::Evaluation { xi });
                }
                Ok(if j == nyq && m.im != 0.0 { ZERO } else { m })
            })
            .collect()
    }
}

/// `V(t) w0`.
pub fn apply_semigroup(prop: &Propagator, w0: &SpectralField, t: f64) -> Result<SpectralField> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!(
            "semigroup not invertible for eta > 0: need finite t >= 0, got {t}"
        )));
    }
    prop.check_grid(w0)?;
    w0.require_coherent()?;
    w0.with_slot_multipliers(&prop.multipliers(t)?)
}

/// `int_0^t V(t - tau) forcing(tau) dtau` by composite 4-point Gauss-Legendre
/// on the graded mesh `tau_j = t (j/panels)^grading`.
///
/// The forcing is sampled once per node, concurrently; the sum is taken in
/// node order so the result does not depend on scheduling.
pub fn duhamel_integral(
    prop: &Propagator,
    forcing: &(dyn Fn(f64) -> Result<SpectralField> + Sync),
    t: f64,
    panels: usize,
    grading: f64,
) -> Result<SpectralField> {
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::Domain(format!(
            "Duhamel end time must lie in (0, 1], got {t}"
        )));
    }
    let mesh = TimeMesh::graded(t, panels, grading)?;
    let nodes: Vec<(f64, f64)> = (0..mesh.panels())
        .flat_map(|m| (0..NODES_PER_PANEL).map(move |i| (m, i)))
        .map(|(m, i)| (mesh.node(m, i), mesh.weight(m, i)))
        .collect();
    let terms: Vec<Vec<Complex64>> = nodes
        .par_iter()
        .map(|&(tau, w)| {
            let f = forcing(tau)?;
            prop.check_grid(&f)?;
            f.require_coherent()?;
            let m = prop.multipliers(t - tau)?;
            Ok(f.spec().iter().zip(&m).map(|(c, mj)| c * mj * w).collect())
        })
        .collect::<Result<_>>()?;
    let mut acc = vec![ZERO; prop.grid.n()];
    for term in &terms {
        for (a, b) in acc.iter_mut().zip(term) {
            *a += b;
        }
    }
    Ok(SpectralField::from_trusted_coefficients(&prop.grid, acc))
}

/// `sup_xi (1 + |xi|)^theta exp(eta tau Phi(xi))` over the non-negative
/// frequencies of `lattice`, for each `tau`.
///
/// The lattice only supplies frequencies; pass a finer or longer one than the
/// solver grid when the maximizer escapes past its Nyquist frequency.
pub fn smoothing_norm_profile(
    sym: &DissipativeSymbol,
    theta: f64,
    taus: &[f64],
    lattice: &GridSpec,
) -> Result<Vec<f64>> {
    if !(theta >= 0.0) {
        return Err(Error::Domain(format!("theta must be >= 0, got {theta}")));
    }
    lattice.validate()?;
    let top = lattice.n_points / 2;
    let dxi = lattice.frequency_step();
    taus.iter()
        .map(|&tau| {
            if !(tau > 0.0 && tau <= 1.0) {
                return Err(Error::Domain(format!("tau must lie in (0, 1], got {tau}")));
            }
            let (arg, best) = (0..=top)
                .map(|j| {
                    let xi = j as f64 * dxi;
                    (j, theta * bracket(xi).ln() + sym.eta * tau * sym.phi(xi))
                })
                .fold(
                    (0, f64::NEG_INFINITY),
                    |acc, (j, v)| if v > acc.1 { (j, v) } else { acc },
                );
            if arg == top {
                return Err(Error::Resolution(format!(
                    "maximizer at the top lattice frequency {} for tau = {tau}; \
                     use a finer or larger frequency lattice",
                    top as f64 * dxi
                )));
            }
            Ok(best.exp())
        })
        .collect()
}

/// Product integration of `int_0^t V(t - sigma) F(sigma) dsigma` on a fixed
/// graded mesh of `[0, T]`.
///
/// `F` is known at the Gauss nodes of each panel and interpolated there by
/// its cubic Lagrange polynomial; the exponential factor is integrated
/// exactly per mode through the `phi` functions, so stiff modes
/// (`|lambda| dt >> 1`) cost nothing in accuracy. Since
/// `lambda(-xi) = conj(lambda(xi))`, only the half spectrum is stored.
#[derive(Debug, Clone)]
pub struct MeshDuhamel {
    grid: Grid,
    mesh: TimeMesh,
    /// `lambda` on slots `0..=N/2`.
    lambda: Vec<Complex64>,
    /// Monomial coefficients of the Lagrange basis on the reference nodes.
    basis: [[f64; NODES_PER_PANEL]; NODES_PER_PANEL],
    /// Per panel: `exp(lambda dt)` and full-panel weights.
    panel_step: Vec<StepWeights>,
    /// Per node, panel-major: propagation from the panel start and partial weights.
    node_step: Vec<StepWeights>,
}

#[derive(Debug, Clone)]
struct StepWeights {
    factor: Vec<Complex64>,
    weights: [Vec<Complex64>; NODES_PER_PANEL],
}

/// Forcing samples and running panel sums of one Duhamel integral.
#[derive(Debug, Clone)]
pub struct DuhamelState {
    forcing: Vec<Vec<Complex64>>,
    sums: Vec<Vec<Complex64>>,
}

impl DuhamelState {
    /// Half-spectrum forcing at the mesh nodes, panel-major.
    pub fn forcing(&self) -> &[Vec<Complex64>] {
        &self.forcing
    }
}

impl MeshDuhamel {
    pub fn new(prop: &Propagator, mesh: TimeMesh) -> Self {
        let grid = prop.grid().clone();
        let half = grid.n() / 2;
        let lambda: Vec<Complex64> = grid.wavenumbers()[..=half]
            .iter()
            .map(|&xi| prop.exponent(xi))
            .collect();
        let basis = lagrange_monomials(mesh.reference_nodes());
        let mut out = Self {
            grid,
            mesh,
            lambda,
            basis,
            panel_step: Vec::new(),
            node_step: Vec::new(),
        };
        out.panel_step = (0..out.mesh.panels())
            .into_par_iter()
            .map(|m| {
                let (a, b) = out.mesh.panel(m);
                out.step_weights(b - a, 1.0)
            })
            .collect();
        out.node_step = (0..out.mesh.panels() * NODES_PER_PANEL)
            .into_par_iter()
            .map(|idx| {
                let (m, i) = (idx / NODES_PER_PANEL, idx % NODES_PER_PANEL);
                let (a, b) = out.mesh.panel(m);
                let rho = out.mesh.reference_nodes()[i];
                out.step_weights((b - a) * rho, rho)
            })
            .collect();
        out
    }

    pub fn mesh(&self) -> &TimeMesh {
        &self.mesh
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn node_times(&self) -> Vec<f64> {
        self.mesh.nodes()
    }

    pub fn half_len(&self) -> usize {
        self.lambda.len()
    }

    /// Weights for integrating from a panel start over a length `h = rho dt`.
    /// `W_i = h sum_n a_{i,n} rho^n n! phi_{n+1}(lambda h)`.
    fn step_weights(&self, h: f64, rho: f64) -> StepWeights {
        let len = self.lambda.len();
        let mut factor = Vec::with_capacity(len);
        let mut weights: [Vec<Complex64>; NODES_PER_PANEL] =
            std::array::from_fn(|_| Vec::with_capacity(len));
        let scale: [f64; NODES_PER_PANEL] = [1.0, rho, 2.0 * rho * rho, 6.0 * rho * rho * rho];
        for &lam in &self.lambda {
            let phi = phi_functions(lam * h);
            factor.push(phi[0]);
            for (i, w) in weights.iter_mut().enumerate() {
                let mut acc = ZERO;
                for n in 0..NODES_PER_PANEL {
                    acc += phi[n + 1] * (self.basis[i][n] * scale[n]);
                }
                w.push(acc * h);
            }
        }
        StepWeights { factor, weights }
    }

    /// Half spectrum of a field, slots `0..=N/2`.
    pub fn half_spectrum(&self, f: &SpectralField) -> Result<Vec<Complex64>> {
        if !self.grid.same_as(f.grid()) {
            return Err(Error::Structural(
                "forcing grid does not match the propagator".into(),
            ));
        }
        f.require_coherent()?;
        Ok(f.spec()[..self.lambda.len()].to_vec())
    }

    /// Rebuild the Hermitian spectrum and synthesize; the Nyquist slot is
    /// dropped because the propagator is not real there.
    pub fn to_field(&self, half: &[Complex64]) -> SpectralField {
        let n = self.grid.n();
        let mut spec = vec![ZERO; n];
        spec[0] = Complex64::new(half[0].re, 0.0);
        for j in 1..n / 2 {
            spec[j] = half[j];
            spec[n - j] = half[j].conj();
        }
        SpectralField::from_trusted_coefficients(&self.grid, spec)
    }

    /// Panel sums `S_{m+1} = exp(lambda dt_m) S_m + sum_i W_{m,i} F_{m,i}`.
    pub fn accumulate(&self, forcing: Vec<Vec<Complex64>>) -> Result<DuhamelState> {
        let panels = self.mesh.panels();
        if forcing.len() != panels * NODES_PER_PANEL
            || forcing.iter().any(|f| f.len() != self.lambda.len())
        {
            return Err(Error::Structural(format!(
                "expected {} half spectra of length {}",
                panels * NODES_PER_PANEL,
                self.lambda.len()
            )));
        }
        let mut sums = Vec::with_capacity(panels + 1);
        sums.push(vec![ZERO; self.lambda.len()]);
        for m in 0..panels {
            let step = &self.panel_step[m];
            let prev = &sums[m];
            let next: Vec<Complex64> = (0..self.lambda.len())
                .map(|j| {
                    let mut acc = step.factor[j] * prev[j];
                    for i in 0..NODES_PER_PANEL {
                        acc += step.weights[i][j] * forcing[m * NODES_PER_PANEL + i][j];
                    }
                    acc
                })
                .collect();
            sums.push(next);
        }
        Ok(DuhamelState { forcing, sums })
    }

    fn combine(&self, state: &DuhamelState, m: usize, step: &StepWeights) -> Vec<Complex64> {
        let base = &state.sums[m];
        (0..self.lambda.len())
            .map(|j| {
                let mut acc = step.factor[j] * base[j];
                for i in 0..NODES_PER_PANEL {
                    acc += step.weights[i][j] * state.forcing[m * NODES_PER_PANEL + i][j];
                }
                acc
            })
            .collect()
    }

    /// Half spectrum of the integral at any `t` in `[0, T]`.
    pub fn evaluate_half(&self, state: &DuhamelState, t: f64) -> Result<Vec<Complex64>> {
        let m = self.mesh.locate(t)?;
        let (a, b) = self.mesh.panel(m);
        let h = (t - a).max(0.0);
        let step = self.step_weights(h, h / (b - a));
        Ok(self.combine(state, m, &step))
    }

    /// Half spectrum of the integral at node `idx` (panel-major).
    pub fn evaluate_node_half(&self, state: &DuhamelState, idx: usize) -> Vec<Complex64> {
        self.combine(state, idx / NODES_PER_PANEL, &self.node_step[idx])
    }

    pub fn evaluate(&self, state: &DuhamelState, t: f64) -> Result<SpectralField> {
        Ok(self.to_field(&self.evaluate_half(state, t)?))
    }
}

/// `basis[i][n]`: coefficient of `r^n` in the Lagrange polynomial of node `i`.
fn lagrange_monomials(nodes: &[f64]) -> [[f64; NODES_PER_PANEL]; NODES_PER_PANEL] {
    let mut out = [[0.0; NODES_PER_PANEL]; NODES_PER_PANEL];
    for i in 0..NODES_PER_PANEL {
        let mut poly = vec![1.0];
        let mut denom = 1.0;
        for (j, &rj) in nodes.iter().enumerate() {
            if j == i {
                continue;
            }
            let mut next = vec![0.0; poly.len() + 1];
            for (n, &c) in poly.iter().enumerate() {
                next[n + 1] += c;
                next[n] -= c * rj;
            }
            poly = next;
            denom *= nodes[i] - rj;
        }
        for n in 0..NODES_PER_PANEL {
            out[i][n] = poly[n] / denom;
        }
    }
    out
}
