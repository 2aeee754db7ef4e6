//! The `phi` functions of exponential integrators,
//! `phi_0(z) = e^z`, `phi_{k+1}(z) = (phi_k(z) - 1/k!) / z`,
//! equivalently `phi_k(z) = int_0^1 e^{(1-u) z} u^{k-1} / (k-1)! du`.

use num_complex::Complex64;

/// Below this modulus the recurrence loses digits; use the Taylor series.
/// Both branches are good to ~1e-15 relative at the switch.
const SERIES_RADIUS: f64 = 3.0;
const SERIES_TERMS: usize = 48;

/// `[phi_0, .., phi_4](z)`.
pub fn phi_functions(z: Complex64) -> [Complex64; 5] {
    if z.norm() < SERIES_RADIUS {
        phi_series(z)
    } else {
        phi_recurrence(z)
    }
}

/// `phi_k(z) = sum_j z^j / (j + k)!`
fn phi_series(z: Complex64) -> [Complex64; 5] {
    let mut out = [Complex64::new(0.0, 0.0); 5];
    {
        for (k, slot) in out.iter_mut().enumerate() {
            let mut fact = (1..=k).map(|v| v as f64).product::<f64>();
            let mut term_pow = Complex64::new(1.0, 0.0);
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..SERIES_TERMS {
                if j > 0 {
                    fact *= (j + k) as f64;
                    term_pow *= z;
                }
                acc += term_pow / fact;
            }
            *slot = acc;
        }
    }
    out
}

fn phi_recurrence(z: Complex64) -> [Complex64; 5] {
    let mut out = [Complex64::new(0.0, 0.0); 5];
    out[0] = z.exp();
    let mut inv_fact = 1.0;
    for k in 0..4 {
        out[k + 1] = (out[k] - inv_fact) / z;
        inv_fact /= (k + 1) as f64;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quad_phi(k: usize, z: Complex64) -> Complex64 {
        // midpoint rule on a fine grid, independent of both branches above
        let n = 200_000;
        let fact: f64 = (1..k).map(|v| v as f64).product();
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..n {
            let u = (i as f64 + 0.5) / n as f64;
            acc += ((1.0 - u) * z).exp() * u.powi(k as i32 - 1);
        }
        acc / (n as f64 * fact)
    }

    #[test]
    fn matches_integral_definition_on_both_branches() {
        for z in [
            Complex64::new(0.0, 0.0),
            Complex64::new(1e-6, -2e-6),
            Complex64::new(-0.7, 1.1),
            Complex64::new(1.9, 0.0),
            Complex64::new(-2.1, 0.3),
            Complex64::new(-30.0, 45.0),
            Complex64::new(0.2, 12.0),
        ] {
            let phi = phi_functions(z);
            for (k, &pk) in phi.iter().enumerate().skip(1) {
                let q = quad_phi(k, z);
                let err = (pk - q).norm() / q.norm().max(1e-300);
                assert!(err < 1e-8, "k = {k}, z = {z}: {err}");
            }
        }
    }

    #[test]
    fn branches_agree_at_switch_radius() {
        for i in 0..16 {
            let z = Complex64::from_polar(SERIES_RADIUS, i as f64 * std::f64::consts::TAU / 16.0);
            let a = phi_series(z);
            let b = phi_recurrence(z);
            for k in 0..5 {
                assert!((a[k] - b[k]).norm() < 1e-13 * a[k].norm(), "{z} {k}");
            }
        }
    }

    #[test]
    fn stiff_limit() {
        let z = Complex64::new(-1e8, 3e5);
        let phi = phi_functions(z);
        assert!((phi[1] * -z - 1.0).norm() < 1e-6);
        assert!(phi.iter().all(|c| c.re.is_finite() && c.im.is_finite()));
    }
}
