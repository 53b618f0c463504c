//! Run configuration: a TOML (or echoed JSON) file with flag overrides.

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use willmore_core::metric::{Multipole, PerturbationKind, PerturbationSpec, TensorProfile};
use willmore_core::solver::{NewtonConfig, Preconditioner};
use willmore_core::surface::MIN_BANDLIMIT;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    VerifyIntegrals,
    VerifyIdentities,
    SchwarzschildExact,
    Spectrum,
    Solve,
    Foliate,
    DecaySweep,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::VerifyIntegrals => "verify-integrals",
            Command::VerifyIdentities => "verify-identities",
            Command::SchwarzschildExact => "schwarzschild-exact",
            Command::Spectrum => "spectrum",
            Command::Solve => "solve",
            Command::Foliate => "foliate",
            Command::DecaySweep => "decay-sweep",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MetricConfig {
    pub m: f64,
    pub kind: PerturbationKind,
    pub eta: f64,
    pub multipoles: Vec<Multipole>,
    pub tensor_profile: Option<TensorProfile>,
}

impl Default for MetricConfig {
    fn default() -> Self {
        MetricConfig { m: 1.0, kind: PerturbationKind::ExactSchwarzschild, eta: 0.0, multipoles: Vec::new(), tensor_profile: None }
    }
}

impl MetricConfig {
    pub fn spec(&self, eta: f64) -> PerturbationSpec {
        PerturbationSpec { kind: self.kind, eta, multipoles: self.multipoles.clone(), tensor_profile: self.tensor_profile }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Numerics {
    #[serde(rename = "L")]
    pub bandlimit: usize,
    pub residual_tol: f64,
    pub max_iters: usize,
    pub damping: usize,
    pub preconditioner: Preconditioner,
    pub regularize_floor: f64,
    pub polish_iters: usize,
    /// Metric-homotopy steps when a direct solve fails.
    pub continuation_steps: usize,
    /// Randomized restarts of `solve` used to check that the leaf is unique.
    pub restarts: usize,
}

impl Default for Numerics {
    fn default() -> Self {
        let n = NewtonConfig::default();
        Numerics {
            bandlimit: 16,
            residual_tol: n.residual_tol,
            max_iters: n.max_iters,
            damping: n.damping,
            preconditioner: n.preconditioner,
            regularize_floor: n.regularize_floor,
            polish_iters: n.polish_iters,
            continuation_steps: 8,
            restarts: 0,
        }
    }
}

impl Numerics {
    pub fn newton(&self) -> NewtonConfig {
        NewtonConfig {
            residual_tol: self.residual_tol,
            max_iters: self.max_iters,
            damping: self.damping,
            preconditioner: self.preconditioner,
            regularize_floor: self.regularize_floor,
            polish_iters: self.polish_iters,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Sweep {
    /// Multipliers; take precedence over `rs`.
    pub lambdas: Vec<f64>,
    /// Euclidean radii of the centered Schwarzschild spheres defining `λ(r)`.
    pub rs: Vec<f64>,
    pub etas: Vec<f64>,
    /// If set, a geometric ladder of this many leaves spans the range of
    /// `lambdas` (or `rs`).
    pub n_leaves: Option<usize>,
}

impl Default for Sweep {
    fn default() -> Self {
        Sweep { lambdas: Vec::new(), rs: vec![10.0], etas: Vec::new(), n_leaves: None }
    }
}

/// Graph used by `verify-identities`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GraphConfig {
    pub center: [f64; 3],
    pub axes: [f64; 3],
}

impl Default for GraphConfig {
    fn default() -> Self {
        GraphConfig { center: [0.5, -0.3, 0.2], axes: [5.0, 6.0, 8.0] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub command: Option<Command>,
    pub metric: MetricConfig,
    pub numerics: Numerics,
    pub sweep: Sweep,
    pub graph: GraphConfig,
    pub output_dir: PathBuf,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            command: None,
            metric: MetricConfig::default(),
            numerics: Numerics::default(),
            sweep: Sweep::default(),
            graph: GraphConfig::default(),
            output_dir: PathBuf::from("out"),
            seed: 0,
        }
    }
}

/// Command-line overrides; every set flag wins over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub m: Option<f64>,
    pub eta: Option<Vec<f64>>,
    pub lambda: Option<Vec<f64>>,
    pub r: Option<Vec<f64>>,
    pub bandlimit: Option<usize>,
    pub tol: Option<f64>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
}

impl RunConfig {
    /// Parse a config file; `.json` files are read as JSON (the echo in
    /// `run.json`), anything else as TOML.
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        if path.extension().is_some_and(|e| e == "json") {
            let v: serde_json::Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
            let v = v.get("config").cloned().unwrap_or(v);
            serde_json::from_value(v).with_context(|| format!("invalid config in {}", path.display()))
        } else {
            toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
        }
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(m) = o.m {
            self.metric.m = m;
        }
        if let Some(e) = &o.eta {
            self.sweep.etas = e.clone();
            if let Some(first) = e.first() {
                self.metric.eta = *first;
            }
        }
        if let Some(l) = &o.lambda {
            self.sweep.lambdas = l.clone();
        }
        if let Some(r) = &o.r {
            self.sweep.rs = r.clone();
            if o.lambda.is_none() {
                self.sweep.lambdas.clear();
            }
        }
        if let Some(l) = o.bandlimit {
            self.numerics.bandlimit = l;
        }
        if let Some(t) = o.tol {
            self.numerics.residual_tol = t;
        }
        if let Some(p) = &o.out {
            self.output_dir = p.clone();
        }
        if let Some(s) = o.seed {
            self.seed = s;
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.command.is_none() {
            bail!("command: missing (give it on the command line or as `command` in the config)");
        }
        if !(self.metric.m > 0.0) {
            bail!("metric.m must be positive, got {}", self.metric.m);
        }
        if self.numerics.bandlimit < MIN_BANDLIMIT {
            bail!("numerics.L must be at least {MIN_BANDLIMIT}, got {}", self.numerics.bandlimit);
        }
        self.numerics.newton().validate().map_err(|e| anyhow::anyhow!("numerics: {e}"))?;
        self.metric.spec(self.metric.eta).validate().map_err(|e| anyhow::anyhow!("metric: {e}"))?;
        let cmd = self.command.unwrap();
        let needs_lambda = matches!(cmd, Command::Spectrum | Command::Solve | Command::Foliate | Command::DecaySweep);
        if needs_lambda && self.sweep.lambdas.is_empty() && self.sweep.rs.is_empty() {
            bail!("sweep.lambdas / sweep.rs: both empty");
        }
        if cmd == Command::SchwarzschildExact && self.sweep.rs.is_empty() && self.sweep.lambdas.is_empty() {
            bail!("sweep.rs: empty");
        }
        if cmd == Command::DecaySweep && self.sweep.etas.is_empty() {
            bail!("sweep.etas: empty");
        }
        if self.sweep.lambdas.iter().chain(&self.sweep.rs).chain(&self.sweep.etas).any(|v| !v.is_finite() || *v <= 0.0) {
            bail!("sweep: lambdas, rs and etas must be positive");
        }
        if let Some(n) = self.sweep.n_leaves {
            if n < 2 || self.sweep.lambdas.len().max(self.sweep.rs.len()) < 2 {
                bail!("sweep.n_leaves needs n_leaves >= 2 and at least two lambdas or rs to span");
            }
        }
        if self.graph.axes.iter().any(|a| !(*a > 0.0)) {
            bail!("graph.axes must be positive");
        }
        Ok(())
    }

    /// Multipliers requested by the sweep, descending.
    pub fn lambdas(&self) -> Vec<f64> {
        let m = self.metric.m;
        let mut l: Vec<f64> = if !self.sweep.lambdas.is_empty() {
            match self.sweep.n_leaves {
                Some(n) => {
                    let lo = self.sweep.lambdas.iter().copied().fold(f64::INFINITY, f64::min);
                    let hi = self.sweep.lambdas.iter().copied().fold(0.0, f64::max);
                    willmore_core::oracle::geometric_ladder(lo, hi, n)
                }
                None => self.sweep.lambdas.clone(),
            }
        } else {
            let rs = match self.sweep.n_leaves {
                Some(n) => {
                    let lo = self.sweep.rs.iter().copied().fold(f64::INFINITY, f64::min);
                    let hi = self.sweep.rs.iter().copied().fold(0.0, f64::max);
                    willmore_core::oracle::geometric_ladder(lo, hi, n)
                }
                None => self.sweep.rs.clone(),
            };
            rs.iter().map(|&r| willmore_core::oracle::lambda_of_r(m, r)).collect()
        };
        l.sort_by(|a, b| b.total_cmp(a));
        l.dedup();
        l
    }

    pub fn ensure_output_dir(&self) -> Result<()> {
        std::fs::create_dir_all(&self.output_dir).with_context(|| format!("output_dir {} is not writable", self.output_dir.display()))?;
        let probe = self.output_dir.join(".write-test");
        std::fs::write(&probe, b"").with_context(|| format!("output_dir {} is not writable", self.output_dir.display()))?;
        std::fs::remove_file(probe).ok();
        Ok(())
    }
}
