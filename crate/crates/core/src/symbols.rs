//! Dissipative symbols `Phi(xi) = -|xi|^p + Phi_1(xi)` and their constants.
//!
//! Sign convention: the linear part `v_t + v_xxx + eta L v = 0` with
//! `(L f)^ = -Phi f^` has propagator `exp(i t xi^3 + eta t Phi(xi))`.
//! Built-ins:
//!
//! | name          | `Phi(xi)`          | p | q | C |
//! |---------------|--------------------|---|---|---|
//! | `kdv-burgers` | `-xi^2`            | 2 | 0 | 0 |
//! | `ostrovsky`   | `|xi| - |xi|^3`    | 3 | 1 | 1 |
//! | `kdv-ks`      | `xi^2 - xi^4`      | 4 | 2 | 1 |
//! | `pure-power:p`| `-|xi|^p`          | p | 0 | 0 |

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const BUILTINS: &str = "kdv-burgers, ostrovsky, kdv-ks, pure-power:<p>";

/// Lower-order part `Phi_1`, always a function of `|xi|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Perturbation {
    Zero,
    /// `Phi_1 = |xi|`
    AbsLinear,
    /// `Phi_1 = xi^2`
    Square,
    /// Piecewise-linear in `|xi|` through `(xi, Phi_1)` pairs, held constant
    /// past the last entry.
    Table(Vec<(f64, f64)>),
}

impl Perturbation {
    fn eval(&self, a: f64) -> f64 {
        match self {
            Perturbation::Zero => 0.0,
            Perturbation::AbsLinear => a,
            Perturbation::Square => a * a,
            Perturbation::Table(t) => interpolate(t, a),
        }
    }
}

fn interpolate(table: &[(f64, f64)], x: f64) -> f64 {
    let idx = table.partition_point(|&(xi, _)| xi <= x);
    if idx == 0 {
        table[0].1
    } else if idx == table.len() {
        table[table.len() - 1].1
    } else {
        let (x0, y0) = table[idx - 1];
        let (x1, y1) = table[idx];
        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DissipativeSymbol {
    pub name: String,
    pub p: f64,
    pub q: f64,
    /// `C` in `|Phi_1(xi)| <= C (1 + |xi|^q)`.
    pub c_phi1: f64,
    pub eta: f64,
    pub phi1: Perturbation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymbolConstants {
    pub threshold_m: f64,
    pub c_m: f64,
    pub sup_phi: f64,
}

/// Outcome of [`DissipativeSymbol::validate_decomposition`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecompositionCheck {
    pub holds: bool,
    pub first_violation: Option<f64>,
}

pub fn builtin_symbol(name: &str) -> Result<DissipativeSymbol> {
    let sym = match name {
        "kdv-burgers" => DissipativeSymbol::new(name, 2.0, 0.0, 0.0, 1.0, Perturbation::Zero),
        "ostrovsky" => DissipativeSymbol::new(name, 3.0, 1.0, 1.0, 1.0, Perturbation::AbsLinear),
        "kdv-ks" => DissipativeSymbol::new(name, 4.0, 2.0, 1.0, 1.0, Perturbation::Square),
        other => match other.strip_prefix("pure-power:") {
            Some(p) => {
                let p: f64 = p.parse().map_err(|_| lookup_error(name))?;
                DissipativeSymbol::pure_power(p)
            }
            None => return Err(lookup_error(name)),
        },
    }?;
    Ok(sym)
}

fn lookup_error(name: &str) -> Error {
    Error::Lookup {
        name: name.to_string(),
        available: BUILTINS.to_string(),
    }
}

impl DissipativeSymbol {
    pub fn new(
        name: &str,
        p: f64,
        q: f64,
        c_phi1: f64,
        eta: f64,
        phi1: Perturbation,
    ) -> Result<Self> {
        let sym = Self {
            name: name.to_string(),
            p,
            q,
            c_phi1,
            eta,
            phi1,
        };
        sym.validate()?;
        Ok(sym)
    }

    pub fn pure_power(p: f64) -> Result<Self> {
        Self::new(
            &format!("pure-power:{p}"),
            p,
            0.0,
            0.0,
            1.0,
            Perturbation::Zero,
        )
    }

    /// Custom symbol with a tabulated `Phi_1`; metadata is validated against
    /// the table, not inferred from it.
    pub fn tabulated(
        name: &str,
        p: f64,
        q: f64,
        c_phi1: f64,
        eta: f64,
        table: Vec<(f64, f64)>,
    ) -> Result<Self> {
        if table.len() < 2 {
            return Err(Error::Domain("Phi_1 table needs at least two rows".into()));
        }
        if table
            .iter()
            .any(|&(x, y)| !(x >= 0.0 && x.is_finite() && y.is_finite()))
        {
            return Err(Error::Domain(
                "Phi_1 table entries must be finite with xi >= 0".into(),
            ));
        }
        if table.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::Domain(
                "Phi_1 table must be strictly increasing in xi".into(),
            ));
        }
        let xi_max = table.last().unwrap().0.max(1.0);
        let sym = Self::new(name, p, q, c_phi1, eta, Perturbation::Table(table))?;
        let check = sym.validate_decomposition(xi_max, 4097);
        if !check.holds {
            return Err(Error::HypothesisViolation(format!(
                "tabulated Phi_1 exceeds C (1 + |xi|^q) at xi = {}",
                check.first_violation.unwrap()
            )));
        }
        Ok(sym)
    }

    pub fn with_eta(mut self, eta: f64) -> Result<Self> {
        self.eta = eta;
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        if !(self.p > 0.0 && self.p.is_finite()) {
            return Err(Error::Domain(format!(
                "leading order p must be positive, got {}",
                self.p
            )));
        }
        if !(self.q >= 0.0 && self.q < self.p) {
            return Err(Error::Domain(format!(
                "order of Phi_1 must satisfy 0 <= q < p, got q = {}, p = {}",
                self.q, self.p
            )));
        }
        if !(self.c_phi1 >= 0.0 && self.c_phi1.is_finite()) {
            return Err(Error::Domain(format!(
                "c_phi1 must be >= 0, got {}",
                self.c_phi1
            )));
        }
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(Error::Domain(format!(
                "eta must be positive, got {}",
                self.eta
            )));
        }
        Ok(())
    }

    pub fn phi1(&self, xi: f64) -> f64 {
        self.phi1.eval(xi.abs())
    }

    /// `Phi(xi)` without the finiteness check; used on hot paths.
    pub fn phi(&self, xi: f64) -> f64 {
        let a = xi.abs();
        -a.powf(self.p) + self.phi1.eval(a)
    }

    pub fn evaluate_phi(&self, xi: f64) -> Result<f64> {
        if !xi.is_finite() {
            return Err(Error::Domain(format!("xi must be finite, got {xi}")));
        }
        let v = self.phi(xi);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Evaluation { xi })
        }
    }

    /// Checks `|Phi_1(xi)| <= c_phi1 (1 + |xi|^q)` on `n_samples` points of `[0, xi_max]`.
    pub fn validate_decomposition(&self, xi_max: f64, n_samples: usize) -> DecompositionCheck {
        self.validate_decomposition_with(self.c_phi1, self.q, xi_max, n_samples)
    }

    /// Same check with trial constants in place of the stored metadata.
    pub fn validate_decomposition_with(
        &self,
        c: f64,
        q: f64,
        xi_max: f64,
        n_samples: usize,
    ) -> DecompositionCheck {
        let n = n_samples.max(2);
        for i in 0..n {
            let xi = xi_max * i as f64 / (n - 1) as f64;
            if self.phi1(xi).abs() > c * (1.0 + xi.powf(q)) {
                return DecompositionCheck {
                    holds: false,
                    first_violation: Some(xi),
                };
            }
        }
        DecompositionCheck {
            holds: true,
            first_violation: None,
        }
    }

    /// The three large-frequency conditions: `Phi < -1`,
    /// `|Phi_1| / |xi|^p <= 1/2` and `|Phi| >= |xi|^p / 2`.
    pub fn threshold_conditions_hold(&self, xi: f64) -> bool {
        let a = xi.abs();
        if a == 0.0 {
            return false;
        }
        let lead = a.powf(self.p);
        let phi1 = self.phi1(a);
        let phi = -lead + phi1;
        phi < -1.0 && phi1.abs() / lead <= 0.5 && phi.abs() >= 0.5 * lead
    }

    /// Smallest `M` such that every sampled `|xi| in [M, xi_max]` satisfies the
    /// threshold conditions; scan on `10^4` intervals, then bisection to `tol`.
    pub fn threshold_m(&self, xi_max: f64, tol: f64) -> Result<f64> {
        if !(xi_max > 0.0 && xi_max.is_finite()) {
            return Err(Error::Domain(format!(
                "xi_max must be positive, got {xi_max}"
            )));
        }
        if !self.threshold_conditions_hold(xi_max) {
            return Err(Error::HypothesisViolation(format!(
                "symbol `{}` fails the large-frequency conditions even at xi = {xi_max}",
                self.name
            )));
        }
        let n = 10_000usize;
        let sample = |i: usize| xi_max * i as f64 / n as f64;
        let last_bad = (0..n)
            .rev()
            .find(|&i| !self.threshold_conditions_hold(sample(i)));
        let Some(bad) = last_bad else {
            return Ok(sample(1));
        };
        let (mut lo, mut hi) = (sample(bad), sample(bad + 1));
        while hi - lo > tol {
            let mid = 0.5 * (lo + hi);
            if self.threshold_conditions_hold(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(hi)
    }

    /// `sup Phi` over `|xi| <= m`: dense sampling plus golden-section refinement.
    pub fn upper_bound_cm(&self, m: f64) -> f64 {
        let n = 4096usize;
        let xs = |i: usize| m * i as f64 / n as f64;
        let (best_i, best) =
            (0..=n)
                .map(|i| (i, self.phi(xs(i))))
                .fold(
                    (0, f64::NEG_INFINITY),
                    |acc, (i, v)| if v > acc.1 { (i, v) } else { acc },
                );
        let lo = xs(best_i.saturating_sub(1));
        let hi = xs((best_i + 1).min(n));
        let refined = golden_max(|x| self.phi(x), lo, hi, 1e-14 * m.max(1.0));
        // +0.0 normalizes a -0.0 sup
        best.max(refined) + 0.0
    }

    pub fn constants(&self, xi_max: f64, tol: f64) -> Result<SymbolConstants> {
        let threshold_m = self.threshold_m(xi_max, tol)?;
        Ok(SymbolConstants {
            threshold_m,
            c_m: self.upper_bound_cm(threshold_m),
            sup_phi: self.upper_bound_cm(xi_max),
        })
    }
}

fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    let mut best = f(a).max(f(b)).max(fc).max(fd);
    for _ in 0..200 {
        if b - a <= tol {
            break;
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
            best = best.max(fc);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
            best = best.max(fd);
        }
    }
    best
}

/// `omega_k > 0`, i.e. `p > 3k/2 + 1`.
pub fn contraction_admissible(p: f64, k: f64) -> bool {
    crate::norms::omega_k(k, p) > 0.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_metadata() {
        let b = builtin_symbol("kdv-burgers").unwrap();
        assert_eq!((b.p, b.q, b.c_phi1), (2.0, 0.0, 0.0));
        assert_eq!(b.evaluate_phi(1.0).unwrap(), -1.0);
        assert_eq!(b.phi1(3.7), 0.0);

        let o = builtin_symbol("ostrovsky").unwrap();
        assert_eq!(o.evaluate_phi(1.0).unwrap(), 0.0);
        assert_eq!(o.evaluate_phi(2.0).unwrap(), 2.0 - 8.0);

        let ks = builtin_symbol("kdv-ks").unwrap();
        assert_eq!(ks.evaluate_phi(1.0).unwrap(), 0.0);
        assert_eq!(ks.evaluate_phi(2.0).unwrap(), -12.0);

        let pp = builtin_symbol("pure-power:2").unwrap();
        assert_eq!(pp.evaluate_phi(0.0).unwrap(), 0.0);
        assert_eq!(pp.p, 2.0);
    }

    #[test]
    fn unknown_symbol_lists_builtins() {
        match builtin_symbol("benney-lin") {
            Err(Error::Lookup { available, .. }) => assert!(available.contains("kdv-ks")),
            other => panic!("unexpected {other:?}"),
        }
        assert!(builtin_symbol("pure-power:abc").is_err());
    }

    #[test]
    fn builtins_are_even() {
        for name in ["kdv-burgers", "ostrovsky", "kdv-ks", "pure-power:3.5"] {
            let s = builtin_symbol(name).unwrap();
            for xi in [0.1, 0.7, 1.0, 2.3, 11.0] {
                assert_eq!(s.phi(xi), s.phi(-xi));
            }
        }
    }

    #[test]
    fn invalid_metadata_rejected() {
        assert!(DissipativeSymbol::new("x", 2.0, 2.0, 1.0, 1.0, Perturbation::Zero).is_err());
        assert!(DissipativeSymbol::new("x", -1.0, 0.0, 1.0, 1.0, Perturbation::Zero).is_err());
        assert!(DissipativeSymbol::new("x", 2.0, 0.0, 1.0, 0.0, Perturbation::Zero).is_err());
        assert!(builtin_symbol("kdv-ks").unwrap().with_eta(-1.0).is_err());
    }

    #[test]
    fn decomposition_checks() {
        let pp = builtin_symbol("pure-power:3").unwrap();
        assert!(pp.validate_decomposition_with(0.0, 0.0, 100.0, 1000).holds);
        let o = builtin_symbol("ostrovsky").unwrap();
        assert!(o.validate_decomposition(1e3, 10_001).holds);
        let ks = builtin_symbol("kdv-ks").unwrap();
        let wrong = ks.validate_decomposition_with(1.0, 1.0, 100.0, 1001);
        assert!(!wrong.holds);
        // xi^2 > 1 + xi first for xi > golden ratio
        assert!(wrong.first_violation.unwrap() > 1.6);
    }

    #[test]
    fn tabulated_symbol_interpolates_and_validates() {
        let t = vec![(0.0, 0.0), (1.0, 1.0), (2.0, 4.0), (10.0, 50.0)];
        let s = DissipativeSymbol::tabulated("tab", 4.0, 2.0, 1.0, 1.0, t.clone()).unwrap();
        assert_eq!(s.phi1(1.5), 2.5);
        assert_eq!(s.phi1(-1.5), 2.5);
        assert_eq!(s.phi1(20.0), 50.0);
        assert!(DissipativeSymbol::tabulated("tab", 4.0, 1.0, 1.0, 1.0, t).is_err());
        assert!(DissipativeSymbol::tabulated("tab", 4.0, 2.0, 1.0, 1.0, vec![(0.0, 0.0)]).is_err());
    }

    #[test]
    fn threshold_pure_power_two() {
        let s = builtin_symbol("pure-power:2").unwrap();
        let m = s.threshold_m(50.0, 1e-10).unwrap();
        assert!((m - 1.0).abs() < 1e-9, "{m}");
    }

    #[test]
    fn threshold_kdv_ks_and_ostrovsky() {
        let ks = builtin_symbol("kdv-ks").unwrap();
        let m = ks.threshold_m(40.0, 1e-12).unwrap();
        assert!(m >= 2f64.sqrt() - 1e-12 && m < 2f64.sqrt() + 1e-10, "{m}");

        let o = builtin_symbol("ostrovsky").unwrap();
        let m = o.threshold_m(40.0, 1e-12).unwrap();
        assert!(m.powi(3) - m > 1.0);
        // real root of xi^3 - xi - 1 is the plastic number, below the returned M
        assert!(m > 1.324_717_957_244_746);
    }

    #[test]
    fn threshold_fails_when_range_too_small() {
        let ks = builtin_symbol("kdv-ks").unwrap();
        assert!(matches!(
            ks.threshold_m(1.0, 1e-8),
            Err(Error::HypothesisViolation(_))
        ));
    }

    #[test]
    fn cm_values() {
        for p in [0.5, 2.0, 4.0] {
            assert_eq!(
                DissipativeSymbol::pure_power(p)
                    .unwrap()
                    .upper_bound_cm(5.0),
                0.0
            );
        }
        let ks = builtin_symbol("kdv-ks").unwrap();
        assert!((ks.upper_bound_cm(2.0) - 0.25).abs() < 1e-14);
        let o = builtin_symbol("ostrovsky").unwrap();
        let exact = 2.0 / (3.0 * 3f64.sqrt());
        assert!((o.upper_bound_cm(1.5) - exact).abs() < 1e-14);
    }

    #[test]
    fn exponential_bounds_hold_pointwise() {
        for name in ["kdv-burgers", "ostrovsky", "kdv-ks", "pure-power:3"] {
            let s = builtin_symbol(name).unwrap();
            let c = s.constants(40.0, 1e-10).unwrap();
            for i in 0..=4000 {
                let xi = 40.0 * i as f64 / 4000.0;
                for t in [0.0, 0.1, 0.5, 1.0] {
                    let e = (t * s.phi(xi)).exp();
                    if xi >= c.threshold_m {
                        assert!(e <= (-t).exp() * (1.0 + 1e-15));
                    }
                    assert!(e <= (t * c.sup_phi).exp() * (1.0 + 1e-15));
                }
            }
        }
    }

    #[test]
    fn decomposition_monotone_in_constant() {
        let ks = builtin_symbol("kdv-ks").unwrap();
        let mut seen_true = false;
        for i in 0..40 {
            let c = 0.1 * i as f64;
            let ok = ks.validate_decomposition_with(c, 2.0, 50.0, 501).holds;
            assert!(!(seen_true && !ok));
            seen_true |= ok;
        }
        assert!(seen_true);
    }

    #[test]
    fn admissibility() {
        assert!(contraction_admissible(4.0, 1.0));
        assert!(contraction_admissible(3.0, 1.0));
        assert!(!contraction_admissible(2.5, 1.0));
        assert!(!contraction_admissible(2.0, 1.0));
        assert!(!contraction_admissible(4.0, 2.0));
    }
}
