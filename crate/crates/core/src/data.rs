//! Initial-data generators.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{bracket, Grid, SpectralField};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSpec {
    Zero {},
    /// `amplitude exp(-((x - center) / width)^2)`.
    Gaussian {
        amplitude: f64,
        width: f64,
        #[serde(default)]
        center: f64,
    },
    /// Random-phase spectrum with amplitude `(1 + |xi|)^-(sigma + 1/2 + eps)`,
    /// just inside `H^sigma`.
    Rough {
        amplitude: f64,
        sigma: f64,
        #[serde(default = "default_eps")]
        eps: f64,
        seed: u64,
    },
}

fn default_eps() -> f64 {
    0.01
}

impl DataSpec {
    pub fn build(&self, grid: &Grid) -> Result<SpectralField> {
        match *self {
            DataSpec::Zero {} => Ok(SpectralField::zeros(grid)),
            DataSpec::Gaussian {
                amplitude,
                width,
                center,
            } => gaussian(grid, amplitude, width, center),
            DataSpec::Rough {
                amplitude,
                sigma,
                eps,
                seed,
            } => rough(grid, amplitude, sigma, eps, seed),
        }
    }

    pub fn is_randomized(&self) -> bool {
        matches!(self, DataSpec::Rough { .. })
    }
}

pub fn gaussian(grid: &Grid, amplitude: f64, width: f64, center: f64) -> Result<SpectralField> {
    if !(width > 0.0) {
        return Err(Error::Domain(format!(
            "Gaussian width must be positive, got {width}"
        )));
    }
    SpectralField::from_fn(grid, |x| {
        let z = (x - center) / width;
        amplitude * (-z * z).exp()
    })
}

/// Coefficients `c_k = A sqrt(2 pi) / L (1 + |xi_k|)^-alpha e^{i phi_k}`, which
/// discretize a line profile `A (1 + |xi|)^-alpha` independently of `N`.
/// Phases are drawn mode by mode from a seeded stream, so a grid of `2N`
/// points shares every low mode with the grid of `N` points.
pub fn rough(
    grid: &Grid,
    amplitude: f64,
    sigma: f64,
    eps: f64,
    seed: u64,
) -> Result<SpectralField> {
    if !(eps > 0.0) {
        return Err(Error::Domain(format!("eps must be positive, got {eps}")));
    }
    let alpha = sigma + 0.5 + eps;
    let n = grid.n();
    let scale = amplitude * (2.0 * std::f64::consts::PI).sqrt() / grid.length();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut spec = vec![Complex64::new(0.0, 0.0); n];
    let xi = grid.wavenumbers();
    let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
    spec[0] = Complex64::new(sign * scale, 0.0);
    for k in 1..n / 2 {
        let phase: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let c = Complex64::from_polar(scale * bracket(xi[k]).powf(-alpha), phase);
        spec[k] = c;
        spec[n - k] = c.conj();
    }
    SpectralField::from_coefficients(grid, spec)
}

/// `count` Gaussians with seeded amplitude in `[0.5, 2)`, width in `[0.5, 3)`
/// and center within the middle half of the domain.
pub fn gaussian_family(grid: &Grid, count: usize, seed: u64) -> Result<Vec<SpectralField>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let reach = 0.25 * grid.length();
    (0..count)
        .map(|_| {
            let amplitude = rng.gen_range(0.5..2.0);
            let width = rng.gen_range(0.5..3.0);
            let center = rng.gen_range(-reach..reach);
            gaussian(grid, amplitude, width, center)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::norms::sobolev_norm;
    use crate::spectral::GridSpec;

    fn grid(n: usize) -> Grid {
        Grid::new(GridSpec::new(40.0, n, 2.0 / 3.0).unwrap()).unwrap()
    }

    #[test]
    fn rough_data_is_seeded_and_nested() {
        let a = rough(&grid(256), 1.0, 0.0, 0.01, 7).unwrap();
        let b = rough(&grid(256), 1.0, 0.0, 0.01, 7).unwrap();
        assert_eq!(a.phys(), b.phys());
        let fine = rough(&grid(512), 1.0, 0.0, 0.01, 7).unwrap();
        for k in 0..128 {
            assert_eq!(a.spec()[k], fine.spec()[k]);
        }
        let c = rough(&grid(256), 1.0, 0.0, 0.01, 8).unwrap();
        assert_ne!(a.phys(), c.phys());
    }

    #[test]
    fn rough_norms_grow_slowly_above_sigma() {
        // H^sigma stays bounded under refinement; H^{sigma + 0.5} does not
        let coarse = rough(&grid(1024), 1.0, -0.5, 0.01, 3).unwrap();
        let fine = rough(&grid(4096), 1.0, -0.5, 0.01, 3).unwrap();
        let r0 = sobolev_norm(&fine, -0.5).unwrap() / sobolev_norm(&coarse, -0.5).unwrap();
        let r1 = sobolev_norm(&fine, 0.0).unwrap() / sobolev_norm(&coarse, 0.0).unwrap();
        assert!(r0 < 1.3 && r1 > 1.5, "{r0} {r1}");
    }

    #[test]
    fn spec_round_trip() {
        let spec = DataSpec::Rough {
            amplitude: 0.5,
            sigma: 0.0,
            eps: 0.01,
            seed: 11,
        };
        let json = serde_json::to_string(&spec).unwrap();
        let back: DataSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, spec);
        let g: DataSpec =
            serde_json::from_str(r#"{"kind":"gaussian","amplitude":0.1,"width":2.0}"#).unwrap();
        assert!(g.build(&grid(64)).is_ok());
        assert!(serde_json::from_str::<DataSpec>(r#"{"kind":"zero","x":1}"#).is_err());
    }
}
