//! Periodic grid, discrete Fourier pair and Fourier multipliers.
//!
//! The whole line is approximated by the torus `[-L/2, L/2)` sampled at
//! `N` points (`N` a power of two). Coefficients are those of the Fourier
//! series about `x = 0`:
//!
//! ```text
//! c_k = (1/N) sum_j f(x_j) exp(-i xi_k x_j),    f(x_j) = sum_k c_k exp(i xi_k x_j),
//! xi_k = 2 pi k / L,  k = -N/2 .. N/2 - 1,
//! ```
//!
//! so the physical-to-spectral direction carries the `1/N`. With this
//! normalization Parseval reads `h sum_j |f_j|^2 = L sum_k |c_k|^2`.
//!
//! Coefficients are stored in FFT order (non-negative modes first). The
//! Nyquist mode `-N/2` has no partner; a multiplier that is not real there
//! would break Hermitian symmetry, so such multipliers zero that mode.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance for the Hermitian check performed before synthesis.
const HERMITIAN_TOL: f64 = 1e-9;

fn default_dealias() -> f64 {
    2.0 / 3.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    /// Period; the domain is `[-length/2, length/2)`.
    pub length: f64,
    pub n_points: usize,
    /// Fraction of the `n_points/2` modes kept before nonlinear products.
    #[serde(default = "default_dealias")]
    pub dealias_fraction: f64,
}

impl Default for GridSpec {
    /// Verification grid: `length = 200 pi`, `N = 2^13`, 2/3 rule.
    fn default() -> Self {
        Self {
            length: 200.0 * std::f64::consts::PI,
            n_points: 1 << 13,
            dealias_fraction: 2.0 / 3.0,
        }
    }
}

impl GridSpec {
    pub fn new(length: f64, n_points: usize, dealias_fraction: f64) -> Result<Self> {
        let spec = Self {
            length,
            n_points,
            dealias_fraction,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.length.is_finite() && self.length > 0.0) {
            return Err(Error::Domain(format!(
                "grid length must be positive, got {}",
                self.length
            )));
        }
        if self.n_points < 4 || !self.n_points.is_power_of_two() {
            return Err(Error::Domain(format!(
                "n_points must be a power of two >= 4, got {}",
                self.n_points
            )));
        }
        if !(self.dealias_fraction > 0.0 && self.dealias_fraction <= 1.0) {
            return Err(Error::Domain(format!(
                "dealias_fraction must lie in (0, 1], got {}",
                self.dealias_fraction
            )));
        }
        if self.cutoff() < 1 {
            return Err(Error::Domain(
                "dealias cutoff index rounds to zero".to_string(),
            ));
        }
        Ok(())
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.n_points as f64
    }

    /// Smallest nonzero `|xi|`, the spectral gap of the torus.
    pub fn frequency_step(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.length
    }

    pub fn nyquist(&self) -> f64 {
        std::f64::consts::PI * self.n_points as f64 / self.length
    }

    /// Signed mode number of a storage slot.
    pub fn mode_index(&self, slot: usize) -> i64 {
        let n = self.n_points;
        if slot < n / 2 {
            slot as i64
        } else {
            slot as i64 - n as i64
        }
    }

    pub fn wavenumber(&self, slot: usize) -> f64 {
        self.mode_index(slot) as f64 * self.frequency_step()
    }

    /// Modes with `|k| >= cutoff` are removed by [`dealias`].
    pub fn cutoff(&self) -> usize {
        (self.dealias_fraction * (self.n_points / 2) as f64).round() as usize
    }

    pub fn point(&self, j: usize) -> f64 {
        -0.5 * self.length + j as f64 * self.spacing()
    }

    /// Storage slot of the unpaired mode `-N/2`.
    pub fn nyquist_slot(&self) -> usize {
        self.n_points / 2
    }
}

struct GridInner {
    spec: GridSpec,
    xi: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

/// Shared handle to a validated grid with its frequency table and FFT plans.
#[derive(Clone)]
pub struct Grid {
    inner: Arc<GridInner>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("spec", &self.inner.spec)
            .finish()
    }
}

impl Grid {
    pub fn new(spec: GridSpec) -> Result<Self> {
        spec.validate()?;
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(spec.n_points);
        let inverse = planner.plan_fft_inverse(spec.n_points);
        let xi = (0..spec.n_points).map(|j| spec.wavenumber(j)).collect();
        Ok(Self {
            inner: Arc::new(GridInner {
                spec,
                xi,
                forward,
                inverse,
            }),
        })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.inner.spec
    }

    pub fn n(&self) -> usize {
        self.inner.spec.n_points
    }

    pub fn length(&self) -> f64 {
        self.inner.spec.length
    }

    pub fn spacing(&self) -> f64 {
        self.inner.spec.spacing()
    }

    /// Frequencies in storage order.
    pub fn wavenumbers(&self) -> &[f64] {
        &self.inner.xi
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n()).map(|j| self.inner.spec.point(j)).collect()
    }

    pub fn same_as(&self, other: &Grid) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner) || self.inner.spec == other.inner.spec
    }

    fn check_same(&self, other: &Grid) -> Result<()> {
        if self.same_as(other) {
            Ok(())
        } else {
            Err(Error::Structural(format!(
                "grid mismatch: {:?} vs {:?}",
                self.spec(),
                other.spec()
            )))
        }
    }

    /// `(-1)^k`: phase between FFT order and coefficients about `x = 0`.
    fn shift_sign(slot: usize) -> f64 {
        if slot.is_multiple_of(2) {
            1.0
        } else {
            -1.0
        }
    }

    fn analyze(&self, phys: &[f64]) -> Vec<Complex64> {
        let n = self.n();
        let mut buf: Vec<Complex64> = phys.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.inner.forward.process(&mut buf);
        let scale = 1.0 / n as f64;
        for (k, c) in buf.iter_mut().enumerate() {
            *c *= scale * Self::shift_sign(k);
        }
        buf
    }

    fn synthesize(&self, spec: &[Complex64]) -> Vec<f64> {
        let mut buf: Vec<Complex64> = spec
            .iter()
            .enumerate()
            .map(|(k, &c)| c * Self::shift_sign(k))
            .collect();
        self.inner.inverse.process(&mut buf);
        buf.into_iter().map(|c| c.re).collect()
    }
}

/// A real periodic field with paired samples and Fourier coefficients.
#[derive(Clone)]
pub struct SpectralField {
    grid: Grid,
    phys: Vec<f64>,
    spec: Vec<Complex64>,
    coherent: bool,
}

impl fmt::Debug for SpectralField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectralField")
            .field("grid", self.grid.spec())
            .field("coherent", &self.coherent)
            .finish()
    }
}

impl SpectralField {
    /// Samples only; the spectrum is stale until [`forward_transform`].
    pub fn physical(grid: &Grid, phys: Vec<f64>) -> Result<Self> {
        if phys.len() != grid.n() {
            return Err(Error::Structural(format!(
                "{} samples for a grid of {} points",
                phys.len(),
                grid.n()
            )));
        }
        Ok(Self {
            grid: grid.clone(),
            spec: vec![Complex64::new(0.0, 0.0); grid.n()],
            phys,
            coherent: false,
        })
    }

    /// Coefficients only; samples are stale until [`inverse_transform`].
    pub fn spectral(grid: &Grid, spec: Vec<Complex64>) -> Result<Self> {
        if spec.len() != grid.n() {
            return Err(Error::Structural(format!(
                "{} coefficients for a grid of {} points",
                spec.len(),
                grid.n()
            )));
        }
        Ok(Self {
            grid: grid.clone(),
            phys: vec![0.0; grid.n()],
            spec,
            coherent: false,
        })
    }

    pub fn from_samples(grid: &Grid, phys: Vec<f64>) -> Result<Self> {
        forward_transform(&Self::physical(grid, phys)?)
    }

    pub fn from_coefficients(grid: &Grid, spec: Vec<Complex64>) -> Result<Self> {
        inverse_transform(&Self::spectral(grid, spec)?)
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(f64) -> f64) -> Result<Self> {
        let phys = (0..grid.n()).map(|j| f(grid.spec().point(j))).collect();
        Self::from_samples(grid, phys)
    }

    pub fn zeros(grid: &Grid) -> Self {
        Self {
            grid: grid.clone(),
            phys: vec![0.0; grid.n()],
            spec: vec![Complex64::new(0.0, 0.0); grid.n()],
            coherent: true,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn phys(&self) -> &[f64] {
        &self.phys
    }

    pub fn spec(&self) -> &[Complex64] {
        &self.spec
    }

    pub fn is_coherent(&self) -> bool {
        self.coherent
    }

    pub fn require_coherent(&self) -> Result<()> {
        if self.coherent {
            Ok(())
        } else {
            Err(Error::Structural(
                "field samples and coefficients are not coherent".to_string(),
            ))
        }
    }

    /// `L^2` norm squared from the coefficients, `L sum |c_k|^2`.
    pub fn energy(&self) -> f64 {
        self.grid.length() * self.spec.iter().map(|c| c.norm_sqr()).sum::<f64>()
    }

    pub fn is_zero(&self) -> bool {
        self.spec.iter().all(|c| c.re == 0.0 && c.im == 0.0) && self.phys.iter().all(|&v| v == 0.0)
    }

    /// `a * self + b * other`, applied to both representations.
    pub fn combine(&self, a: f64, other: &SpectralField, b: f64) -> Result<SpectralField> {
        self.grid.check_same(&other.grid)?;
        self.require_coherent()?;
        other.require_coherent()?;
        Ok(SpectralField {
            grid: self.grid.clone(),
            phys: self
                .phys
                .iter()
                .zip(&other.phys)
                .map(|(x, y)| a * x + b * y)
                .collect(),
            spec: self
                .spec
                .iter()
                .zip(&other.spec)
                .map(|(x, y)| x * a + y * b)
                .collect(),
            coherent: true,
        })
    }

    pub fn add(&self, other: &SpectralField) -> Result<SpectralField> {
        self.combine(1.0, other, 1.0)
    }

    pub fn sub(&self, other: &SpectralField) -> Result<SpectralField> {
        self.combine(1.0, other, -1.0)
    }

    pub fn scaled(&self, a: f64) -> SpectralField {
        SpectralField {
            grid: self.grid.clone(),
            phys: self.phys.iter().map(|x| a * x).collect(),
            spec: self.spec.iter().map(|c| c * a).collect(),
            coherent: self.coherent,
        }
    }

    /// Multiply coefficient slot `j` by `m[j]`, honouring the Nyquist rule,
    /// and resynthesize.
    pub(crate) fn with_slot_multipliers(&self, m: &[Complex64]) -> Result<SpectralField> {
        self.require_coherent()?;
        let nyq = self.grid.spec().nyquist_slot();
        let spec: Vec<Complex64> = self
            .spec
            .iter()
            .zip(m)
            .enumerate()
            .map(|(j, (&c, &mj))| {
                if j == nyq && mj.im != 0.0 {
                    Complex64::new(0.0, 0.0)
                } else {
                    c * mj
                }
            })
            .collect();
        let phys = self.grid.synthesize(&spec);
        Ok(SpectralField {
            grid: self.grid.clone(),
            phys,
            spec,
            coherent: true,
        })
    }

    /// Replace the coefficients and resynthesize without a symmetry check.
    /// Callers guarantee Hermitian input.
    pub(crate) fn from_trusted_coefficients(grid: &Grid, spec: Vec<Complex64>) -> SpectralField {
        let phys = grid.synthesize(&spec);
        SpectralField {
            grid: grid.clone(),
            phys,
            spec,
            coherent: true,
        }
    }
}

pub fn forward_transform(f: &SpectralField) -> Result<SpectralField> {
    if f.phys.len() != f.grid.n() {
        return Err(Error::Structural("sample count does not match grid".into()));
    }
    Ok(SpectralField {
        grid: f.grid.clone(),
        spec: f.grid.analyze(&f.phys),
        phys: f.phys.clone(),
        coherent: true,
    })
}

pub fn inverse_transform(f: &SpectralField) -> Result<SpectralField> {
    let spec = &f.spec;
    let n = f.grid.n();
    if spec.len() != n {
        return Err(Error::Structural(
            "coefficient count does not match grid".into(),
        ));
    }
    let scale = spec.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let tol = HERMITIAN_TOL * scale;
    let check = |slot: usize, dev: f64| -> Result<()> {
        if dev > tol {
            Err(Error::Symmetry {
                mode: f.grid.spec().mode_index(slot),
                deviation: dev,
            })
        } else {
            Ok(())
        }
    };
    check(0, spec[0].im.abs())?;
    check(n / 2, spec[n / 2].im.abs())?;
    for k in 1..n / 2 {
        check(k, (spec[k] - spec[n - k].conj()).norm())?;
    }
    Ok(SpectralField {
        grid: f.grid.clone(),
        phys: f.grid.synthesize(spec),
        spec: spec.clone(),
        coherent: true,
    })
}

/// Multiply every coefficient by `m(xi_k)`.
pub fn apply_multiplier(f: &SpectralField, m: impl Fn(f64) -> Complex64) -> Result<SpectralField> {
    f.require_coherent()?;
    let values = f
        .grid
        .wavenumbers()
        .iter()
        .map(|&xi| {
            let v = m(xi);
            if v.re.is_finite() && v.im.is_finite() {
                Ok(v)
            } else {
                Err(Error::Evaluation { xi })
            }
        })
        .collect::<Result<Vec<_>>>()?;
    f.with_slot_multipliers(&values)
}

/// Symbol of `D^s d/dx`: `i sgn(xi) |xi|^(s+1)`, zero at `xi = 0`.
pub fn shifted_derivative_symbol(xi: f64, s: f64) -> Complex64 {
    if xi == 0.0 {
        Complex64::new(0.0, 0.0)
    } else {
        Complex64::new(0.0, xi.signum() * xi.abs().powf(s + 1.0))
    }
}

/// `D_x^s d/dx` for `s > -1`.
pub fn fractional_derivative_shifted(f: &SpectralField, s: f64) -> Result<SpectralField> {
    if !(s > -1.0) {
        return Err(Error::Domain(format!("D^s d/dx needs s > -1, got {s}")));
    }
    if s == 0.0 {
        return derivative(f);
    }
    apply_multiplier(f, |xi| shifted_derivative_symbol(xi, s))
}

/// Spectral `d/dx`.
pub fn derivative(f: &SpectralField) -> Result<SpectralField> {
    apply_multiplier(f, |xi| Complex64::new(0.0, xi))
}

/// Bessel bracket `<xi> = 1 + |xi|`.
pub fn bracket(xi: f64) -> f64 {
    1.0 + xi.abs()
}

/// `J^s`, multiplier `(1 + |xi|)^s`.
pub fn bessel_potential(f: &SpectralField, s: f64) -> Result<SpectralField> {
    if s == 0.0 {
        f.require_coherent()?;
        return Ok(f.clone());
    }
    apply_multiplier(f, |xi| Complex64::new(bracket(xi).powf(s), 0.0))
}

/// Zero every mode with `|k| >= cutoff`.
pub fn dealias(f: &SpectralField) -> Result<SpectralField> {
    f.require_coherent()?;
    let spec = f.grid.spec();
    let cutoff = spec.cutoff() as i64;
    let m: Vec<Complex64> = (0..f.grid.n())
        .map(|j| {
            if spec.mode_index(j).abs() >= cutoff {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(1.0, 0.0)
            }
        })
        .collect();
    f.with_slot_multipliers(&m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn grid(length: f64, n: usize) -> Grid {
        Grid::new(GridSpec::new(length, n, 2.0 / 3.0).unwrap()).unwrap()
    }

    fn random_field(g: &Grid, seed: u64) -> SpectralField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let phys = (0..g.n()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        SpectralField::from_samples(g, phys).unwrap()
    }

    /// Band-limited below the Nyquist mode so odd multipliers are exact.
    fn band_limited(g: &Grid, seed: u64, kmax: usize) -> SpectralField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = g.n();
        let mut spec = vec![Complex64::new(0.0, 0.0); n];
        spec[0] = Complex64::new(rng.gen_range(-1.0..1.0), 0.0);
        for k in 1..=kmax {
            let c = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            spec[k] = c;
            spec[n - k] = c.conj();
        }
        SpectralField::from_coefficients(g, spec).unwrap()
    }

    fn max_diff(a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }

    fn max_abs(a: &[f64]) -> f64 {
        a.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    #[test]
    fn grid_validation() {
        assert!(GridSpec::new(1.0, 6, 0.5).is_err());
        assert!(GridSpec::new(-1.0, 8, 0.5).is_err());
        assert!(GridSpec::new(1.0, 8, 0.0).is_err());
        assert!(GridSpec::new(1.0, 8, 1.5).is_err());
        let g = GridSpec::default();
        assert_eq!(g.cutoff(), 2731);
        assert!((g.nyquist() - 40.96).abs() < 1e-12);
        assert_eq!(g.mode_index(g.nyquist_slot()), -4096);
    }

    #[test]
    fn constant_field_has_only_dc() {
        let g = grid(10.0, 64);
        let f = SpectralField::from_fn(&g, |_| 1.0).unwrap();
        assert!((f.spec()[0].re - 1.0).abs() < 1e-15);
        for c in &f.spec()[1..] {
            assert!(c.norm() < 1e-15);
        }
    }

    #[test]
    fn single_cosine_has_two_coefficients() {
        let l = 7.0;
        let g = grid(l, 64);
        let f = SpectralField::from_fn(&g, |x| (2.0 * PI * x / l).cos()).unwrap();
        let n = g.n();
        for (k, c) in f.spec().iter().enumerate() {
            if k == 1 || k == n - 1 {
                assert!((c.re - 0.5).abs() < 1e-14 && c.im.abs() < 1e-14);
            } else {
                assert!(c.norm() < 1e-14, "mode {k}: {c}");
            }
        }
    }

    #[test]
    fn parseval_random_fields() {
        for (n, seed) in [(16usize, 1u64), (256, 2), (4096, 3)] {
            let g = grid(3.0, n);
            let f = random_field(&g, seed);
            // direct summation of both sides
            let lhs: f64 = f.phys().iter().map(|v| v * v).sum::<f64>() * g.spacing();
            let rhs: f64 = f.spec().iter().map(|c| c.norm_sqr()).sum::<f64>() * g.length();
            assert!((lhs - rhs).abs() <= 1e-12 * lhs, "n = {n}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn round_trip_and_zero() {
        let g = grid(5.0, 512);
        let f = random_field(&g, 9);
        let back =
            inverse_transform(&SpectralField::spectral(&g, f.spec().to_vec()).unwrap()).unwrap();
        assert!(max_diff(back.phys(), f.phys()) <= 1e-12 * max_abs(f.phys()));
        let z = SpectralField::from_coefficients(&g, vec![Complex64::new(0.0, 0.0); 512]).unwrap();
        assert!(z.phys().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_mode_synthesis_matches_exponential() {
        let l = 4.0;
        let g = grid(l, 64);
        let n = g.n();
        let mut spec = vec![Complex64::new(0.0, 0.0); n];
        spec[3] = Complex64::new(1.0, 0.0);
        spec[n - 3] = Complex64::new(1.0, 0.0);
        let f = SpectralField::from_coefficients(&g, spec).unwrap();
        let xi = 2.0 * PI * 3.0 / l;
        for (j, v) in f.phys().iter().enumerate() {
            let x = g.spec().point(j);
            assert!((v - 2.0 * (xi * x).cos()).abs() < 1e-13);
        }
        assert!((max_abs(f.phys()) - 2.0).abs() < 1e-13);
    }

    #[test]
    fn non_hermitian_spectrum_rejected() {
        let g = grid(1.0, 16);
        let mut spec = vec![Complex64::new(0.0, 0.0); 16];
        spec[2] = Complex64::new(1.0, 0.0);
        let err = SpectralField::from_coefficients(&g, spec).unwrap_err();
        assert!(matches!(err, Error::Symmetry { mode: 2, .. }));
    }

    #[test]
    fn length_mismatch_is_structural() {
        let g = grid(1.0, 16);
        assert!(matches!(
            SpectralField::from_samples(&g, vec![0.0; 15]),
            Err(Error::Structural(_))
        ));
    }

    #[test]
    fn identity_and_derivative_multipliers() {
        let g = grid(2.0 * PI * 3.0, 256);
        let f = SpectralField::from_fn(&g, f64::sin).unwrap();
        let same = apply_multiplier(&f, |_| Complex64::new(1.0, 0.0)).unwrap();
        assert!(max_diff(same.phys(), f.phys()) < 1e-14);
        let d = apply_multiplier(&f, |xi| Complex64::new(0.0, xi)).unwrap();
        for (j, v) in d.phys().iter().enumerate() {
            assert!((v - g.spec().point(j).cos()).abs() < 1e-10);
        }
    }

    #[test]
    fn non_finite_multiplier_names_frequency() {
        let g = grid(2.0 * PI, 16);
        let f = SpectralField::from_fn(&g, f64::sin).unwrap();
        let err = apply_multiplier(&f, |xi| Complex64::new(1.0 / xi, 0.0)).unwrap_err();
        assert_eq!(err, Error::Evaluation { xi: 0.0 });
    }

    #[test]
    fn multiplier_composition() {
        let g = grid(9.0, 1024);
        let f = band_limited(&g, 4, 300);
        let m1 = |xi: f64| Complex64::new(0.0, xi);
        let m2 = |xi: f64| Complex64::new((1.0 + xi.abs()).powf(-0.7), 0.0);
        let two = apply_multiplier(&apply_multiplier(&f, m2).unwrap(), m1).unwrap();
        let one = apply_multiplier(&f, |xi| m1(xi) * m2(xi)).unwrap();
        let scale = max_abs(one.phys());
        assert!(max_diff(two.phys(), one.phys()) <= 1e-12 * scale);
    }

    #[test]
    fn shifted_derivative_cases() {
        let g = grid(2.0 * PI * 4.0, 512);
        let f = band_limited(&g, 5, 100);
        let d0 = fractional_derivative_shifted(&f, 0.0).unwrap();
        let dx = apply_multiplier(&f, |xi| Complex64::new(0.0, xi)).unwrap();
        assert_eq!(d0.spec(), dx.spec());

        let s1 = fractional_derivative_shifted(&f, 1.0).unwrap();
        let alt = apply_multiplier(&f, |xi| Complex64::new(0.0, xi * xi.abs())).unwrap();
        assert!(max_diff(s1.phys(), alt.phys()) <= 1e-12 * max_abs(alt.phys()));

        let half = fractional_derivative_shifted(&f, -0.5).unwrap();
        assert_eq!(half.spec()[0], Complex64::new(0.0, 0.0));
        assert!(half.phys().iter().all(|v| v.is_finite()));

        assert!(matches!(
            fractional_derivative_shifted(&f, -1.0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn bessel_potential_cases() {
        let l = 12.0;
        let g = grid(l, 256);
        let f = band_limited(&g, 6, 80);
        let id = bessel_potential(&f, 0.0).unwrap();
        assert_eq!(id.phys(), f.phys());
        let back = bessel_potential(&bessel_potential(&f, 1.3).unwrap(), -1.3).unwrap();
        assert!(max_diff(back.phys(), f.phys()) <= 1e-12 * max_abs(f.phys()));

        let n = g.n();
        let mut spec = vec![Complex64::new(0.0, 0.0); n];
        spec[4] = Complex64::new(0.3, 0.2);
        spec[n - 4] = spec[4].conj();
        let one = SpectralField::from_coefficients(&g, spec).unwrap();
        let out = bessel_potential(&one, 2.5).unwrap();
        let xi = 2.0 * PI * 4.0 / l;
        let expect = spec_at(&one, 4) * (1.0 + xi).powf(2.5);
        assert!((out.spec()[4] - expect).norm() < 1e-14);
    }

    fn spec_at(f: &SpectralField, k: usize) -> Complex64 {
        f.spec()[k]
    }

    #[test]
    fn dealias_projection() {
        let g = grid(3.0, 64);
        let cutoff = g.spec().cutoff();
        let low = band_limited(&g, 7, cutoff - 1);
        let same = dealias(&low).unwrap();
        assert!(max_diff(same.phys(), low.phys()) < 1e-14);

        let mut spec = vec![Complex64::new(0.0, 0.0); 64];
        spec[32] = Complex64::new(1.0, 0.0);
        let top = SpectralField::from_coefficients(&g, spec).unwrap();
        assert!(dealias(&top).unwrap().phys().iter().all(|&v| v == 0.0));

        let f = random_field(&g, 8);
        let once = dealias(&f).unwrap();
        let twice = dealias(&once).unwrap();
        assert!(once.energy() <= f.energy());
        assert_eq!(once.spec(), twice.spec());
    }

    #[test]
    fn incoherent_field_rejected() {
        let g = grid(1.0, 8);
        let f = SpectralField::physical(&g, vec![0.0; 8]).unwrap();
        assert!(matches!(dealias(&f), Err(Error::Structural(_))));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(24))]

            #[test]
            fn parseval_holds(seed in any::<u64>(), log_n in 3u32..11) {
                let g = grid(1.0 + (seed % 7) as f64, 1 << log_n);
                let f = random_field(&g, seed);
                let lhs: f64 = f.phys().iter().map(|v| v * v).sum::<f64>() * g.spacing();
                prop_assert!((lhs - f.energy()).abs() <= 1e-12 * lhs);
            }

            #[test]
            fn multiplier_is_linear(seed in any::<u64>(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
                let g = grid(5.0, 128);
                let f = band_limited(&g, seed, 60);
                let h = band_limited(&g, seed ^ 0x5555, 60);
                let m = |xi: f64| Complex64::new(-xi * xi, xi.powi(3));
                let lhs = apply_multiplier(&f.combine(a, &h, b).unwrap(), m).unwrap();
                let rhs = apply_multiplier(&f, m).unwrap()
                    .combine(a, &apply_multiplier(&h, m).unwrap(), b).unwrap();
                let scale = max_abs(lhs.phys()).max(1e-300);
                prop_assert!(max_diff(lhs.phys(), rhs.phys()) <= 1e-12 * scale);
            }

            #[test]
            fn dealias_idempotent_and_contractive(seed in any::<u64>()) {
                let g = grid(2.0, 256);
                let f = random_field(&g, seed);
                let once = dealias(&f).unwrap();
                prop_assert!(once.energy() <= f.energy() * (1.0 + 1e-14));
                let twice = dealias(&once).unwrap();
                prop_assert_eq!(twice.spec(), once.spec());
            }
        }
    }
}
