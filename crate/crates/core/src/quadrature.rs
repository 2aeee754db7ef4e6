//! Gauss-Legendre rules and graded time meshes on `[0, t]`.

use crate::error::{Error, Result};

/// Nodes per panel used throughout the Duhamel machinery.
pub const NODES_PER_PANEL: usize = 4;

/// Gauss-Legendre nodes and weights on `[-1, 1]`, by Newton iteration on `P_n`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for j in 2..=n {
        let jf = j as f64;
        let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Breakpoints `tau_j = t (j / panels)^grading`, `j = 0..=panels`.
pub fn graded_breakpoints(t: f64, panels: usize, grading: f64) -> Result<Vec<f64>> {
    if panels < 1 {
        return Err(Error::Domain("need at least one panel".into()));
    }
    if !(grading >= 1.0) {
        return Err(Error::Domain(format!(
            "grading must be >= 1, got {grading}"
        )));
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!(
            "mesh end point must be positive, got {t}"
        )));
    }
    let mut b: Vec<f64> = (0..=panels)
        .map(|j| t * (j as f64 / panels as f64).powf(grading))
        .collect();
    b[panels] = t;
    Ok(b)
}

/// Composite 4-point Gauss-Legendre mesh on a graded partition of `[0, t_end]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeMesh {
    breakpoints: Vec<f64>,
    /// Reference nodes and weights on `[0, 1]`.
    ref_nodes: Vec<f64>,
    ref_weights: Vec<f64>,
}

impl TimeMesh {
    pub fn graded(t_end: f64, panels: usize, grading: f64) -> Result<Self> {
        let breakpoints = graded_breakpoints(t_end, panels, grading)?;
        let (x, w) = gauss_legendre(NODES_PER_PANEL);
        Ok(Self {
            breakpoints,
            ref_nodes: x.iter().map(|v| 0.5 * (v + 1.0)).collect(),
            ref_weights: w.iter().map(|v| 0.5 * v).collect(),
        })
    }

    pub fn t_end(&self) -> f64 {
        *self.breakpoints.last().unwrap()
    }

    pub fn panels(&self) -> usize {
        self.breakpoints.len() - 1
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn panel(&self, m: usize) -> (f64, f64) {
        (self.breakpoints[m], self.breakpoints[m + 1])
    }

    /// Nodes on `[0, 1]`.
    pub fn reference_nodes(&self) -> &[f64] {
        &self.ref_nodes
    }

    pub fn node(&self, m: usize, i: usize) -> f64 {
        let (a, b) = self.panel(m);
        a + (b - a) * self.ref_nodes[i]
    }

    pub fn weight(&self, m: usize, i: usize) -> f64 {
        let (a, b) = self.panel(m);
        (b - a) * self.ref_weights[i]
    }

    /// All nodes, panel by panel.
    pub fn nodes(&self) -> Vec<f64> {
        (0..self.panels())
            .flat_map(|m| (0..NODES_PER_PANEL).map(move |i| (m, i)))
            .map(|(m, i)| self.node(m, i))
            .collect()
    }

    /// Panel containing `t`: the `m` with `t in (tau_m, tau_{m+1}]`, and 0 for `t = 0`.
    pub fn locate(&self, t: f64) -> Result<usize> {
        if !(t >= 0.0 && t <= self.t_end()) {
            return Err(Error::Domain(format!(
                "time {t} outside mesh [0, {}]",
                self.t_end()
            )));
        }
        let idx = self.breakpoints.partition_point(|&b| b < t);
        Ok(idx.saturating_sub(1).min(self.panels() - 1))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn four_point_rule_matches_tabulated_values() {
        let (x, w) = gauss_legendre(4);
        let xs = [
            -0.861_136_311_594_052_6,
            -0.339_981_043_584_856_3,
            0.339_981_043_584_856_3,
            0.861_136_311_594_052_6,
        ];
        let ws = [
            0.347_854_845_137_453_9,
            0.652_145_154_862_546_1,
            0.652_145_154_862_546_1,
            0.347_854_845_137_453_9,
        ];
        for i in 0..4 {
            assert!((x[i] - xs[i]).abs() < 1e-15);
            assert!((w[i] - ws[i]).abs() < 1e-15);
        }
    }

    #[test]
    fn rule_is_exact_to_degree_2n_minus_1() {
        for n in 1..8 {
            let (x, w) = gauss_legendre(n);
            for deg in 0..2 * n {
                let q: f64 = x
                    .iter()
                    .zip(&w)
                    .map(|(xi, wi)| wi * xi.powi(deg as i32))
                    .sum();
                let exact = if deg % 2 == 1 {
                    0.0
                } else {
                    2.0 / (deg as f64 + 1.0)
                };
                assert!((q - exact).abs() < 1e-13, "n = {n}, deg = {deg}");
            }
        }
    }

    #[test]
    fn graded_mesh_clusters_at_zero() {
        let b = graded_breakpoints(2.0, 4, 2.0).unwrap();
        assert_eq!(b, vec![0.0, 0.125, 0.5, 1.125, 2.0]);
        assert!(graded_breakpoints(1.0, 0, 2.0).is_err());
        assert!(graded_breakpoints(1.0, 4, 0.5).is_err());
    }

    #[test]
    fn mesh_integrates_weak_singularity() {
        // int_0^1 tau^(-0.6) dtau = 2.5; the first panel limits the rate to g (1 - 0.6)
        let coarse = TimeMesh::graded(1.0, 8, 3.0).unwrap();
        let fine = TimeMesh::graded(1.0, 32, 3.0).unwrap();
        let integrate = |m: &TimeMesh| -> f64 {
            (0..m.panels())
                .flat_map(|p| (0..NODES_PER_PANEL).map(move |i| (p, i)))
                .map(|(p, i)| m.weight(p, i) * m.node(p, i).powf(-0.6))
                .sum()
        };
        let e1 = (integrate(&coarse) - 2.5).abs();
        let e2 = (integrate(&fine) - 2.5).abs();
        let rate = (e1 / e2).ln() / 4f64.ln();
        assert!(rate > 1.1, "{e1} {e2}");
    }

    #[test]
    fn locate_panels() {
        let m = TimeMesh::graded(1.0, 4, 1.0).unwrap();
        assert_eq!(m.locate(0.0).unwrap(), 0);
        assert_eq!(m.locate(0.25).unwrap(), 0);
        assert_eq!(m.locate(0.26).unwrap(), 1);
        assert_eq!(m.locate(1.0).unwrap(), 3);
        assert!(m.locate(1.1).is_err());
        assert_eq!(m.nodes().len(), 16);
    }
}
