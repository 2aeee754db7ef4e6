//! Run configuration. Parsing is strict: unknown keys abort before any
//! computation.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use gkdv_core::data::DataSpec;
use gkdv_core::solver::{IvpProblem, NonlinearMode, SolverSettings};
use gkdv_core::{builtin_symbol, DissipativeSymbol, Grid, GridSpec};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub symbol: SymbolSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(default)]
    pub grid: GridSpec,
    pub k: f64,
    #[serde(default)]
    pub s: f64,
    #[serde(default = "conservative")]
    pub mode: NonlinearMode,
    pub data: DataSpec,
    /// Required by every randomized experiment.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub solver: SolverSettings,
    #[serde(default)]
    pub output: OutputSettings,
    #[serde(default)]
    pub verify: VerifySettings,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSettings>,
    /// Output root; `GKDV_OUT` takes precedence.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

/// Either a built-in name (`kdv-burgers`, `ostrovsky`, `kdv-ks`,
/// `pure-power:<p>`) or an explicit definition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SymbolSpec {
    Named(String),
    Defined(SymbolDef),
}

/// Without `table`, `name` must be a built-in and any of `p`, `q`, `c_phi1`
/// given must agree with it. With `table`, `Phi_1` is interpolated from the
/// `(xi, Phi_1)` rows and `p`, `q`, `c_phi1` are required.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymbolDef {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_phi1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<Vec<(f64, f64)>>,
}

impl SymbolSpec {
    pub fn build(&self) -> Result<DissipativeSymbol> {
        let def = match self {
            SymbolSpec::Named(name) => return Ok(builtin_symbol(name)?),
            SymbolSpec::Defined(def) => def,
        };
        let sym = match &def.table {
            Some(table) => {
                let (Some(p), Some(q), Some(c)) = (def.p, def.q, def.c_phi1) else {
                    bail!(
                        "symbol `{}`: a tabulated Phi_1 needs p, q and c_phi1",
                        def.name
                    );
                };
                DissipativeSymbol::tabulated(&def.name, p, q, c, 1.0, table.clone())?
            }
            None => {
                let sym = builtin_symbol(&def.name)?;
                for (key, given, actual) in [
                    ("p", def.p, sym.p),
                    ("q", def.q, sym.q),
                    ("c_phi1", def.c_phi1, sym.c_phi1),
                ] {
                    if given.is_some_and(|g| g != actual) {
                        bail!(
                            "symbol `{}` has {key} = {actual}, config says {}",
                            def.name,
                            given.unwrap()
                        );
                    }
                }
                sym
            }
        };
        Ok(match def.eta {
            Some(eta) => sym.with_eta(eta)?,
            None => sym,
        })
    }
}

impl std::fmt::Display for SymbolSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SymbolSpec::Named(name) => f.write_str(name),
            SymbolSpec::Defined(def) => f.write_str(&def.name),
        }
    }
}

fn conservative() -> NonlinearMode {
    NonlinearMode::Conservative
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSettings {
    /// Snapshot times as fractions of the selected `T`.
    pub snapshot_fractions: Vec<f64>,
    /// When set, `solve` also runs the reference integrator with this many steps.
    pub reference_steps: Option<usize>,
}

impl Default for OutputSettings {
    fn default() -> Self {
        Self {
            snapshot_fractions: vec![0.0, 0.25, 0.5, 0.75, 1.0],
            reference_steps: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifySettings {
    pub suite: Suite,
    pub thetas: Vec<f64>,
    pub tau_range: (f64, f64),
    /// Final times for the nonlinear and contraction fits.
    pub t_range: Vec<f64>,
    /// Seeded rough-data draws for the weighted linear estimate.
    pub draws: usize,
    /// Seeded pairs for the contraction fit.
    pub pairs: usize,
    /// Amplitude of the rough probes.
    pub rough_amplitude: f64,
    /// Lebesgue exponent of the Hausdorff-Young check.
    pub hausdorff_young_p: f64,
}

impl Default for VerifySettings {
    fn default() -> Self {
        Self {
            suite: Suite::All,
            thetas: vec![1.0],
            tau_range: (1e-4, 1e-2),
            t_range: (0..6).rev().map(|j| 0.5f64.powi(j)).collect(),
            draws: 10,
            pairs: 4,
            rough_amplitude: 0.3,
            hausdorff_young_p: 4.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    All,
    Linear,
    Nonlinear,
    Smoothing,
    MultiplierDecay,
    WeightedLinear,
    Threshold,
    HausdorffYoung,
    NonlinearEstimate,
    Contraction,
    SelectedContraction,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JobKind {
    Verify,
    Solve,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSettings {
    pub k: Vec<f64>,
    /// Empty keeps the configured symbol; otherwise each `p` uses `pure-power:<p>`.
    #[serde(default)]
    pub p: Vec<f64>,
    #[serde(default)]
    pub s: Vec<f64>,
    #[serde(default = "verify_job")]
    pub job: JobKind,
    /// Suite run by verify jobs.
    #[serde(default = "default_estimate")]
    pub estimate: Suite,
}

impl JobKind {
    pub fn command(self) -> &'static str {
        match self {
            JobKind::Verify => "verify",
            JobKind::Solve => "solve",
        }
    }
}

fn verify_job() -> JobKind {
    JobKind::Verify
}

fn default_estimate() -> Suite {
    Suite::MultiplierDecay
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks that need no computation.
    pub fn validate(&self) -> Result<()> {
        self.symbol()?;
        self.grid.validate()?;
        if !(self.k > 0.0 && self.k.is_finite()) {
            bail!("k must be positive, got {}", self.k);
        }
        if self
            .output
            .snapshot_fractions
            .iter()
            .any(|f| !(0.0..=1.0).contains(f))
        {
            bail!("snapshot fractions must lie in [0, 1]");
        }
        let v = &self.verify;
        if !(v.tau_range.0 > 0.0 && v.tau_range.0 < v.tau_range.1 && v.tau_range.1 <= 1.0) {
            bail!("tau_range must satisfy 0 < lo < hi <= 1");
        }
        if v.t_range.len() < 3 || v.t_range.iter().any(|t| !(*t > 0.0 && *t <= 1.0)) {
            bail!("t_range needs at least 3 times in (0, 1]");
        }
        if let Some(sw) = &self.sweep {
            if sw.k.is_empty() {
                bail!("sweep.k must list at least one value");
            }
        }
        Ok(())
    }

    pub fn symbol(&self) -> Result<DissipativeSymbol> {
        let sym = self.symbol.build()?;
        Ok(match self.eta {
            Some(eta) => sym.with_eta(eta)?,
            None => sym,
        })
    }

    pub fn grid(&self) -> Result<Grid> {
        Ok(Grid::new(self.grid)?)
    }

    pub fn problem(&self) -> Result<IvpProblem> {
        let grid = self.grid()?;
        let data = self.data.build(&grid)?;
        Ok(
            IvpProblem::new(self.symbol()?, self.k, self.mode, self.s, data)?
                .with_settings(self.solver),
        )
    }

    pub fn require_seed(&self) -> Result<u64> {
        self.seed
            .context("`seed` is required for randomized experiments")
    }

    /// Canonical JSON; the output root is not part of the run identity.
    pub fn canonical_json(&self) -> Vec<u8> {
        let mut c = self.clone();
        c.output_dir = None;
        serde_json::to_vec(&c).expect("config serializes")
    }

    pub fn hash(&self) -> String {
        format!("{:x}", Sha256::digest(self.canonical_json()))
    }

    /// Identity of a run: the command together with the canonical config, so
    /// `solve` and `verify` on one config do not overwrite each other.
    pub fn run_id(&self, command: &str) -> String {
        let mut h = Sha256::new();
        h.update(command.as_bytes());
        h.update(b"\n");
        h.update(self.canonical_json());
        format!("{:x}", h.finalize())[..16].to_string()
    }

    /// `GKDV_OUT`, then `output_dir`, then `gkdv-runs`.
    pub fn output_root(&self) -> PathBuf {
        std::env::var_os("GKDV_OUT")
            .map(PathBuf::from)
            .or_else(|| self.output_dir.clone())
            .unwrap_or_else(|| PathBuf::from("gkdv-runs"))
    }

    /// Per-job configurations of a sweep, in cartesian order `k`, `p`, `s`.
    pub fn sweep_jobs(&self) -> Result<Vec<RunConfig>> {
        let Some(sw) = &self.sweep else {
            bail!("config has no `sweep` section");
        };
        let ps: Vec<Option<f64>> = if sw.p.is_empty() {
            vec![None]
        } else {
            sw.p.iter().map(|&p| Some(p)).collect()
        };
        let ss = if sw.s.is_empty() {
            vec![self.s]
        } else {
            sw.s.clone()
        };
        let mut jobs = Vec::new();
        for &k in &sw.k {
            for p in &ps {
                for &s in &ss {
                    let mut job = self.clone();
                    job.sweep = None;
                    job.k = k;
                    job.s = s;
                    if let Some(p) = p {
                        job.symbol = SymbolSpec::Named(format!("pure-power:{p}"));
                    }
                    job.verify.suite = sw.estimate;
                    job.validate()?;
                    jobs.push(job);
                }
            }
        }
        Ok(jobs)
    }
}
