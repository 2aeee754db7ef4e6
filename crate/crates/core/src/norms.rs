//! Lebesgue and Sobolev norms on the grid and the time-weighted trajectory
//! norms built from them.
//!
//! For a trajectory `f` on `(0, T]`, `q = 2(k+1)` and `a = gamma_k / p`:
//!
//! ```text
//! X: sup_t ||f||_{H^s} + t^a (||f||_q + ||f_x||_q + ||D^s f_x||_q)
//! Y: sup_t ||f||_{H^s} + t^a (||f_x||_q + ||D^s f_x||_q)
//! Z: sup_t ||f||_{H^s} + t^a ||f||_{2k+1}
//! Z~: sup_t ||f||_{H^s} + t^{(1+|s|)/p} ||f_x||_2
//! ```
//!
//! The sup is a max over `sample_times`, so every report is a lower bound of
//! the continuum norm.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{bracket, derivative, fractional_derivative_shifted, SpectralField};

/// `(h sum |f_j|^q)^(1/q)`, or the max norm for `q = inf`.
pub fn lebesgue_norm(f: &SpectralField, q: f64) -> Result<f64> {
    if !(q >= 1.0) {
        return Err(Error::Domain(format!(
            "Lebesgue exponent must be >= 1, got {q}"
        )));
    }
    f.require_coherent()?;
    let max = f.phys().iter().fold(
        0.0f64,
        |m, v| if v.is_nan() { f64::NAN } else { m.max(v.abs()) },
    );
    if q.is_infinite() || max == 0.0 || !max.is_finite() {
        return Ok(max);
    }
    let h = f.grid().spacing();
    let sum: f64 = if q == 2.0 {
        f.phys().iter().map(|v| (v / max) * (v / max)).sum()
    } else {
        f.phys().iter().map(|v| (v.abs() / max).powf(q)).sum()
    };
    Ok(max * (h * sum).powf(1.0 / q))
}

/// `||J^s f||_{L^2}` with the bracket `1 + |xi|`, evaluated on the spectral side.
pub fn sobolev_norm(f: &SpectralField, s: f64) -> Result<f64> {
    if s == 0.0 {
        return lebesgue_norm(f, 2.0);
    }
    f.require_coherent()?;
    let sum: f64 = f
        .grid()
        .wavenumbers()
        .iter()
        .zip(f.spec())
        .map(|(&xi, c)| bracket(xi).powf(2.0 * s) * c.norm_sqr())
        .sum();
    Ok((f.grid().length() * sum).sqrt())
}

/// `gamma_k = (3k + 2) / (2(k + 1))`.
pub fn gamma_k(k: f64) -> Result<f64> {
    if !(k > 0.0) {
        return Err(Error::Domain(format!("k must be positive, got {k}")));
    }
    Ok((3.0 * k + 2.0) / (2.0 * (k + 1.0)))
}

/// `omega_k = (2p - 3k - 2) / (2p)`; callers decide what a nonpositive value means.
pub fn omega_k(k: f64, p: f64) -> f64 {
    (2.0 * p - 3.0 * k - 2.0) / (2.0 * p)
}

/// `n` log-spaced times in `[1e-4 t_final, t_final]`.
pub fn default_sample_times(t_final: f64, n: usize) -> Vec<f64> {
    let lo = (1e-4 * t_final).ln();
    let hi = t_final.ln();
    let mut out: Vec<f64> = (0..n)
        .map(|i| (lo + (hi - lo) * i as f64 / (n.max(2) - 1) as f64).exp())
        .collect();
    if let Some(last) = out.last_mut() {
        *last = t_final;
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedNormConfig {
    pub s: f64,
    pub k: f64,
    pub p: f64,
    pub t_final: f64,
    pub sample_times: Vec<f64>,
}

impl WeightedNormConfig {
    /// Default sampling: 20 log-spaced times in `[1e-4 T, T]`.
    pub fn new(s: f64, k: f64, p: f64, t_final: f64) -> Result<Self> {
        Self::with_sample_times(s, k, p, t_final, default_sample_times(t_final, 20))
    }

    pub fn with_sample_times(
        s: f64,
        k: f64,
        p: f64,
        t_final: f64,
        sample_times: Vec<f64>,
    ) -> Result<Self> {
        gamma_k(k)?;
        if !(p > 0.0) {
            return Err(Error::Domain(format!("p must be positive, got {p}")));
        }
        if !(t_final > 0.0 && t_final <= 1.0) {
            return Err(Error::Domain(format!(
                "T must lie in (0, 1], got {t_final}"
            )));
        }
        if sample_times.is_empty() {
            return Err(Error::Domain("no sample times".into()));
        }
        let ok = sample_times.iter().all(|&t| t > 0.0 && t <= t_final)
            && sample_times.windows(2).all(|w| w[0] < w[1]);
        if !ok {
            return Err(Error::Domain(format!(
                "sample times must be increasing and lie in (0, {t_final}]"
            )));
        }
        Ok(Self {
            s,
            k,
            p,
            t_final,
            sample_times,
        })
    }

    /// Weight exponent `gamma_k / p`.
    pub fn weight_exponent(&self) -> f64 {
        (3.0 * self.k + 2.0) / (2.0 * (self.k + 1.0)) / self.p
    }

    /// `2(k + 1)`.
    pub fn lebesgue_exponent(&self) -> f64 {
        2.0 * (self.k + 1.0)
    }
}

/// A time-dependent field; evaluations must be re-entrant.
pub trait Trajectory: Sync {
    fn at(&self, t: f64) -> Result<SpectralField>;
}

impl<F> Trajectory for F
where
    F: Fn(f64) -> Result<SpectralField> + Sync,
{
    fn at(&self, t: f64) -> Result<SpectralField> {
        self(t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormKind {
    X,
    Y,
    Z,
    ZTilde,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormSample {
    pub time: f64,
    pub component: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub kind: NormKind,
    /// `sup_t ||f(t)||_{H^s}` over the samples.
    pub h_s: f64,
    /// Per time: `hs`, the weighted components and their `total`.
    pub components: Vec<NormSample>,
    /// Max of the per-time totals.
    pub norm: f64,
}

impl NormReport {
    /// Rows `t,component,value`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,component,value\n");
        for c in &self.components {
            let _ = writeln!(out, "{},{},{}", c.time, c.component, c.value);
        }
        out
    }

    /// Values of one component in time order.
    pub fn series(&self, component: &str) -> Vec<(f64, f64)> {
        self.components
            .iter()
            .filter(|c| c.component == component)
            .map(|c| (c.time, c.value))
            .collect()
    }
}

fn finite(what: &str, time: f64, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::BlowUp {
            what: what.to_string(),
            time,
        })
    }
}

/// Shared driver: evaluate `weighted` at each sample time, add the `H^s` part.
fn weighted_report<F>(
    traj: &dyn Trajectory,
    cfg: &WeightedNormConfig,
    kind: NormKind,
    weighted: F,
) -> Result<NormReport>
where
    F: Fn(&SpectralField, f64) -> Result<Vec<(&'static str, f64)>> + Sync,
{
    let rows: Vec<Vec<NormSample>> = cfg
        .sample_times
        .par_iter()
        .map(|&t| {
            let f = traj.at(t)?;
            let hs = finite("hs", t, sobolev_norm(&f, cfg.s)?)?;
            let mut row = vec![NormSample {
                time: t,
                component: "hs".into(),
                value: hs,
            }];
            let mut total = hs;
            for (name, v) in weighted(&f, t)? {
                let v = finite(name, t, v)?;
                total += v;
                row.push(NormSample {
                    time: t,
                    component: name.into(),
                    value: v,
                });
            }
            row.push(NormSample {
                time: t,
                component: "total".into(),
                value: finite("total", t, total)?,
            });
            Ok(row)
        })
        .collect::<Result<_>>()?;
    let components: Vec<NormSample> = rows.into_iter().flatten().collect();
    let max_of = |name: &str| {
        components
            .iter()
            .filter(|c| c.component == name)
            .fold(0.0f64, |m, c| m.max(c.value))
    };
    Ok(NormReport {
        kind,
        h_s: max_of("hs"),
        norm: max_of("total"),
        components,
    })
}

pub fn x_norm(traj: &dyn Trajectory, cfg: &WeightedNormConfig) -> Result<NormReport> {
    let q = cfg.lebesgue_exponent();
    let a = cfg.weight_exponent();
    weighted_report(traj, cfg, NormKind::X, |f: &SpectralField, t: f64| {
        let w = t.powf(a);
        let dx = derivative(f)?;
        let ds = if cfg.s == 0.0 {
            dx.clone()
        } else {
            fractional_derivative_shifted(f, cfg.s)?
        };
        Ok(vec![
            ("w_lq", w * lebesgue_norm(f, q)?),
            ("w_dx_lq", w * lebesgue_norm(&dx, q)?),
            ("w_dsdx_lq", w * lebesgue_norm(&ds, q)?),
        ])
    })
}

pub fn y_norm(traj: &dyn Trajectory, cfg: &WeightedNormConfig) -> Result<NormReport> {
    let q = cfg.lebesgue_exponent();
    let a = cfg.weight_exponent();
    weighted_report(traj, cfg, NormKind::Y, |f: &SpectralField, t: f64| {
        let w = t.powf(a);
        let dx = derivative(f)?;
        let ds = if cfg.s == 0.0 {
            dx.clone()
        } else {
            fractional_derivative_shifted(f, cfg.s)?
        };
        Ok(vec![
            ("w_dx_lq", w * lebesgue_norm(&dx, q)?),
            ("w_dsdx_lq", w * lebesgue_norm(&ds, q)?),
        ])
    })
}

/// Uses `L^{2k+1}` in the weighted term, as the smoothing statement prints it.
pub fn z_norm(traj: &dyn Trajectory, cfg: &WeightedNormConfig) -> Result<NormReport> {
    let q = 2.0 * cfg.k + 1.0;
    let a = cfg.weight_exponent();
    weighted_report(traj, cfg, NormKind::Z, |f: &SpectralField, t: f64| {
        Ok(vec![("w_l2k1", t.powf(a) * lebesgue_norm(f, q)?)])
    })
}

pub fn z_tilde_norm(traj: &dyn Trajectory, cfg: &WeightedNormConfig) -> Result<NormReport> {
    let a = (1.0 + cfg.s.abs()) / cfg.p;
    weighted_report(traj, cfg, NormKind::ZTilde, |f: &SpectralField, t: f64| {
        Ok(vec![(
            "w_dx_l2",
            t.powf(a) * lebesgue_norm(&derivative(f)?, 2.0)?,
        )])
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semigroup::{apply_semigroup, Propagator};
    use crate::spectral::{Grid, GridSpec};
    use crate::symbols::builtin_symbol;
    use num_complex::Complex64;
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

    fn gaussian(g: &Grid) -> SpectralField {
        SpectralField::from_fn(g, |x| 0.3 * (-x * x / 4.0).exp()).unwrap()
    }

    #[test]
    fn lebesgue_cases() {
        let l = 7.5;
        let g = grid(l, 64);
        let c = SpectralField::from_fn(&g, |_| -2.0).unwrap();
        for q in [1.0, 2.0, 3.5, 6.0] {
            let v = lebesgue_norm(&c, q).unwrap();
            assert!((v - 2.0 * l.powf(1.0 / q)).abs() < 1e-13 * v);
        }
        assert_eq!(lebesgue_norm(&c, f64::INFINITY).unwrap(), 2.0);
        assert!(matches!(lebesgue_norm(&c, 0.5), Err(Error::Domain(_))));

        let g = grid(2.0 * PI, 64);
        let s = SpectralField::from_fn(&g, f64::sin).unwrap();
        let v = lebesgue_norm(&s, 4.0).unwrap();
        assert!((v - (0.75 * PI).powf(0.25)).abs() < 1e-13);

        let f = random_field(&g, 1);
        let l2 = lebesgue_norm(&f, 2.0).unwrap();
        assert!((l2 - f.energy().sqrt()).abs() < 1e-12 * l2);
    }

    #[test]
    fn sobolev_cases() {
        let l = 10.0;
        let g = grid(l, 128);
        let f = random_field(&g, 2);
        assert_eq!(
            sobolev_norm(&f, 0.0).unwrap(),
            lebesgue_norm(&f, 2.0).unwrap()
        );
        let n = g.n();
        let mut spec = vec![Complex64::new(0.0, 0.0); n];
        spec[5] = Complex64::new(0.2, 0.7);
        spec[n - 5] = spec[5].conj();
        let one = SpectralField::from_coefficients(&g, spec).unwrap();
        let xi = 2.0 * PI * 5.0 / l;
        let l2 = lebesgue_norm(&one, 2.0).unwrap();
        let hs = sobolev_norm(&one, 1.7).unwrap();
        assert!((hs - (1.0 + xi).powf(1.7) * l2).abs() < 1e-12 * hs);
        let mut last = 0.0;
        for s in [-1.5, -0.5, 0.0, 0.3, 2.0] {
            let v = sobolev_norm(&f, s).unwrap();
            assert!(v >= last);
            last = v;
        }
    }

    #[test]
    fn structure_constants() {
        assert_eq!(gamma_k(1.0).unwrap(), 1.25);
        assert_eq!(gamma_k(2.0).unwrap(), 4.0 / 3.0);
        let g = gamma_k(1000.0).unwrap();
        assert!(g > 1.49 && g < 1.5);
        assert!(gamma_k(0.0).is_err());
        assert_eq!(omega_k(1.0, 4.0), 0.375);
        assert_eq!(omega_k(1.0, 3.0), 1.0 / 6.0);
        assert_eq!(omega_k(1.0, 2.5), 0.0);
    }

    #[test]
    fn zero_trajectory_has_zero_norms() {
        let g = grid(20.0, 64);
        let cfg = WeightedNormConfig::new(0.0, 1.0, 4.0, 0.5).unwrap();
        let zero = |_t: f64| Ok(SpectralField::zeros(&g));
        assert_eq!(x_norm(&zero, &cfg).unwrap().norm, 0.0);
        assert_eq!(y_norm(&zero, &cfg).unwrap().norm, 0.0);
        assert_eq!(z_norm(&zero, &cfg).unwrap().norm, 0.0);
        assert_eq!(z_tilde_norm(&zero, &cfg).unwrap().norm, 0.0);
    }

    #[test]
    fn stationary_trajectory() {
        let g = grid(40.0, 256);
        let f = gaussian(&g);
        let cfg = WeightedNormConfig::new(0.5, 1.0, 4.0, 0.8).unwrap();
        let traj = |_t: f64| Ok(f.clone());
        let rep = x_norm(&traj, &cfg).unwrap();
        let w = rep.series("w_lq");
        let ratio = w[0].1 / w[w.len() - 1].1;
        let expect = 1e-4f64.powf(cfg.weight_exponent());
        assert!((ratio - expect).abs() < 1e-12 * expect);
        // sup attained at T for a stationary trajectory
        let last_total = rep.series("total").last().unwrap().1;
        assert_eq!(rep.norm, last_total);

        let zt = z_tilde_norm(&traj, &cfg).unwrap();
        let expect = sobolev_norm(&f, 0.5).unwrap()
            + 0.8f64.powf(1.5 / 4.0) * lebesgue_norm(&derivative(&f).unwrap(), 2.0).unwrap();
        assert!((zt.norm - expect).abs() < 1e-14 * expect);
        assert!(z_norm(&traj, &cfg).unwrap().norm.is_finite());
    }

    #[test]
    fn y_components_coincide_for_s_zero() {
        let g = grid(40.0, 256);
        let prop = Propagator::new(builtin_symbol("kdv-ks").unwrap(), &g);
        let f = gaussian(&g);
        let traj = |t: f64| apply_semigroup(&prop, &f, t);
        let cfg = WeightedNormConfig::new(0.0, 1.0, 4.0, 1.0).unwrap();
        let y = y_norm(&traj, &cfg).unwrap();
        let a = y.series("w_dx_lq");
        let b = y.series("w_dsdx_lq");
        for (u, v) in a.iter().zip(&b) {
            assert!((u.1 - v.1).abs() <= 1e-12 * u.1.max(1e-300));
        }
        let x = x_norm(&traj, &cfg).unwrap();
        assert!(y.norm <= x.norm);
    }

    #[test]
    fn homogeneity_and_triangle() {
        let g = grid(30.0, 128);
        let prop = Propagator::new(builtin_symbol("ostrovsky").unwrap(), &g);
        let f = random_field(&g, 3);
        let h = random_field(&g, 4);
        let cfg = WeightedNormConfig::new(0.3, 1.0, 3.0, 1.0).unwrap();
        let tf = |t: f64| apply_semigroup(&prop, &f, t);
        let th = |t: f64| apply_semigroup(&prop, &h, t);
        let tsum = |t: f64| apply_semigroup(&prop, &f.add(&h).unwrap(), t);
        let scaled = |t: f64| apply_semigroup(&prop, &f.scaled(-2.5), t);
        let nf = x_norm(&tf, &cfg).unwrap().norm;
        let nh = x_norm(&th, &cfg).unwrap().norm;
        let ns = x_norm(&scaled, &cfg).unwrap().norm;
        assert!((ns - 2.5 * nf).abs() < 1e-12 * ns);
        assert!(x_norm(&tsum, &cfg).unwrap().norm <= nf + nh + 1e-10);
    }

    #[test]
    fn blow_up_reported_with_time() {
        let g = grid(10.0, 16);
        let cfg = WeightedNormConfig::new(0.0, 1.0, 4.0, 1.0).unwrap();
        let bad = |t: f64| {
            let v = if t > 0.5 { f64::NAN } else { 1.0 };
            SpectralField::from_samples(&g, vec![v; 16])
        };
        let err = x_norm(&bad, &cfg).unwrap_err();
        assert!(matches!(err, Error::BlowUp { time, .. } if time > 0.5));
    }

    #[test]
    fn report_serializes() {
        let g = grid(10.0, 32);
        let f = gaussian(&g);
        let cfg =
            WeightedNormConfig::with_sample_times(0.0, 1.0, 4.0, 1.0, vec![0.5, 1.0]).unwrap();
        let rep = z_norm(&|_t: f64| Ok(f.clone()), &cfg).unwrap();
        let csv = rep.to_csv();
        assert!(csv.starts_with("t,component,value\n"));
        assert_eq!(csv.lines().count(), 1 + 2 * 3);
        assert!(WeightedNormConfig::with_sample_times(0.0, 1.0, 4.0, 1.0, vec![1.0, 0.5]).is_err());
    }
}
