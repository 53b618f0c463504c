//! Command implementations. Each returns its tables, checks and Newton
//! traces; writing files is left to the caller.

use crate::config::{Command, RunConfig};
use crate::report::{Cell, Table};
use anyhow::{anyhow, Result};
use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::sync::Arc;
use willmore_core::error::IterationRecord;
use willmore_core::metric::{MetricProvider, PerturbationKind, PerturbedMetric, SchwarzschildParams};
use willmore_core::oracle::{r_of_lambda, schwarzschild_jacobi_eigenvalues, verification_table};
use willmore_core::solver::{
    centered_seed, continue_metric, fit_sweep, foliate, leaf_report, solve_leaf_with_eta, sweep_slice, Leaf, LeafReport,
    NewtonConfig, REPORT_EIGENVALUES,
};
use willmore_core::spectral::QuadratureGrid;
use willmore_core::surface::{build_graph, geometry, Shape};
use willmore_core::willmore::{assemble, identity_suite, spectrum, wlambda_coercivity, IdentitySuite};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub relation: String,
    pub threshold: f64,
    pub pass: bool,
}

impl Check {
    pub fn at_most(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Check { name: name.into(), value, relation: "<=".into(), threshold, pass: value <= threshold }
    }

    pub fn above(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Check { name: name.into(), value, relation: ">".into(), threshold, pass: value > threshold }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub lambda: f64,
    pub eta: f64,
    pub iterations: Vec<IterationRecord>,
}

#[derive(Debug, Default)]
pub struct Outcome {
    pub tables: Vec<(String, Table)>,
    pub checks: Vec<Check>,
    pub traces: Vec<Trace>,
    /// Failures that did not abort the run.
    pub failures: Vec<String>,
}

/// Columns of `leaves.csv`, one row per leaf.
pub fn leaf_columns() -> Vec<String> {
    let mut c: Vec<String> = [
        "eta",
        "lambda",
        "r_target",
        "area",
        "r_e",
        "a_e_x",
        "a_e_y",
        "a_e_z",
        "tau",
        "r_s",
        "hawking",
        "lambda_gap",
        "a0_l2",
        "a0_sup",
        "grad_h_sup",
        "h_gap",
        "nu_gap",
        "lambda_ric_gap",
        "residual_norm",
        "integral_identity",
        "r_min",
        "willmore",
        "u_energy",
        "v_energy",
        "coercivity",
        "pohozaev_flux",
        "iterations",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    c.extend((0..REPORT_EIGENVALUES).map(|i| format!("mu_{i}")));
    c
}

pub fn leaf_table() -> Table {
    let cols = leaf_columns();
    Table::new(&cols.iter().map(String::as_str).collect::<Vec<_>>())
}

pub fn leaf_row(rep: &LeafReport, m: f64) -> Vec<Cell> {
    let d = &rep.diagnostics;
    let f = &rep.functionals;
    let mut row: Vec<Cell> = vec![
        d.eta_used.into(),
        rep.lambda.into(),
        r_of_lambda(m, rep.lambda).unwrap_or(f64::NAN).into(),
        d.area.into(),
        d.r_e.into(),
        d.a_e[0].into(),
        d.a_e[1].into(),
        d.a_e[2].into(),
        d.tau.into(),
        d.r_s.into(),
        d.hawking.into(),
        d.lambda_gap.into(),
        d.a0_l2.into(),
        d.a0_sup.into(),
        d.grad_h_sup.into(),
        d.h_gap.into(),
        d.nu_gap.into(),
        d.lambda_ric_gap.into(),
        d.residual_norm.into(),
        d.integral_identity.into(),
        d.r_min.into(),
        f.willmore.into(),
        f.u_energy.into(),
        f.v_energy.into(),
        rep.coercivity.into(),
        rep.pohozaev_flux.into(),
        rep.iterations.into(),
    ];
    for i in 0..REPORT_EIGENVALUES {
        row.push(rep.jacobi_eigenvalues.get(i).copied().unwrap_or(f64::NAN).into());
    }
    row
}

fn provider(cfg: &RunConfig, eta: f64) -> Result<Box<dyn MetricProvider + Send + Sync>> {
    let m = cfg.metric.m;
    Ok(match cfg.metric.kind {
        PerturbationKind::ExactSchwarzschild => Box::new(SchwarzschildParams::new(m)?),
        _ => Box::new(PerturbedMetric::new(m, cfg.metric.spec(eta))?),
    })
}

fn trace(leaf: &Leaf, eta: f64) -> Trace {
    Trace { lambda: leaf.lambda, eta, iterations: leaf.trace.clone() }
}

/// Direct solve from the centered sphere, falling back to metric
/// continuation from exact Schwarzschild.
pub fn solve_or_continue(
    provider: &dyn MetricProvider,
    lambda: f64,
    grid: Arc<QuadratureGrid>,
    cfg: &NewtonConfig,
    steps: usize,
    eta: f64,
) -> Result<Leaf> {
    let seed = centered_seed(grid, provider.mass(), lambda)?;
    match solve_leaf_with_eta(provider, lambda, &seed, cfg, eta) {
        Ok(l) => Ok(l),
        Err(direct) => continue_metric(provider, lambda, steps, &seed, cfg, eta)
            .map_err(|e| anyhow!("direct solve failed ({direct}); continuation failed ({e})")),
    }
}

fn closure_check(name: String, leaf: &Leaf, tol: f64) -> Check {
    let d = &leaf.diagnostics;
    Check::at_most(name, d.integral_identity.abs(), 10.0 * tol * d.area * leaf.lambda)
}

pub fn run(cfg: &RunConfig) -> Result<Outcome> {
    let cmd = cfg.command.ok_or_else(|| anyhow!("command: missing"))?;
    match cmd {
        Command::VerifyIntegrals => verify_integrals(cfg),
        Command::VerifyIdentities => verify_identities(cfg),
        Command::SchwarzschildExact => schwarzschild_exact(cfg),
        Command::Spectrum => spectrum_cmd(cfg),
        Command::Solve => solve(cfg),
        Command::Foliate => foliate_cmd(cfg),
        Command::DecaySweep => decay_sweep(cfg),
    }
}

fn verify_integrals(cfg: &RunConfig) -> Result<Outcome> {
    let rows = verification_table(cfg.metric.m)?;
    let mut t = Table::new(&["quantity", "radius", "offset_ratio", "k", "l", "closed", "reference", "rel_diff", "tolerance"]);
    let mut out = Outcome::default();
    let mut worst: Vec<(&str, f64, f64)> = Vec::new();
    for r in &rows {
        t.push(vec![
            r.quantity.into(),
            r.radius.into(),
            r.offset_ratio.into(),
            r.k.into(),
            r.l.into(),
            r.closed.into(),
            r.reference.into(),
            r.rel_diff.into(),
            r.tolerance.into(),
        ]);
        match worst.iter_mut().find(|w| w.0 == r.quantity) {
            Some(w) => w.1 = w.1.max(r.rel_diff),
            None => worst.push((r.quantity, r.rel_diff, r.tolerance)),
        }
    }
    for (q, v, tol) in worst {
        out.checks.push(Check::at_most(format!("{q}.max_rel_diff"), v, tol));
    }
    out.tables.push(("integrals.csv".into(), t));
    Ok(out)
}

/// Identity residuals at `L` and at `L/2` on the configured ellipsoid.
pub fn identity_pair(cfg: &RunConfig) -> Result<(usize, IdentitySuite, usize, IdentitySuite)> {
    let p = provider(cfg, cfg.metric.eta)?;
    let fine_l = cfg.numerics.bandlimit;
    let coarse_l = (fine_l / 2).max(willmore_core::surface::MIN_BANDLIMIT);
    let suite = |l| -> Result<IdentitySuite> {
        let g = build_graph(cfg.graph.center, &Shape::Ellipsoid(cfg.graph.axes), l)?;
        Ok(identity_suite(&geometry(&g, p.as_ref())?)?)
    };
    Ok((coarse_l, suite(coarse_l)?, fine_l, suite(fine_l)?))
}

/// Relative residual accepted at the fine level.
pub const IDENTITY_TOLERANCE: f64 = 1e-6;
/// Residuals at or below this level count as converged under refinement.
pub const ROUNDOFF_FLOOR: f64 = 1e-12;

fn verify_identities(cfg: &RunConfig) -> Result<Outcome> {
    let (cl, coarse, fl, fine) = identity_pair(cfg)?;
    let mut t = Table::new(&["identity", "coarse_L", "fine_L", "coarse", "fine", "ratio"]);
    let mut out = Outcome::default();
    for ((name, c), f) in IdentitySuite::NAMES.iter().zip(coarse.values()).zip(fine.values()) {
        t.push(vec![(*name).into(), cl.into(), fl.into(), c.into(), f.into(), (c / f).into()]);
        out.checks.push(Check::at_most(format!("{name}.fine"), f, IDENTITY_TOLERANCE));
        if cl < fl {
            let converged = f <= c / 10.0 || f <= ROUNDOFF_FLOOR;
            out.checks.push(Check {
                name: format!("{name}.refinement_or_floor"),
                value: c / f,
                relation: ">=".into(),
                threshold: 10.0,
                pass: converged,
            });
        }
    }
    out.tables.push(("identities.csv".into(), t));
    Ok(out)
}

fn schwarzschild_exact(cfg: &RunConfig) -> Result<Outcome> {
    let m = cfg.metric.m;
    let p = SchwarzschildParams::new(m)?;
    let grid = Arc::new(QuadratureGrid::new(cfg.numerics.bandlimit));
    let newton = cfg.numerics.newton();
    let mut t = leaf_table();
    let mut out = Outcome::default();
    for lam in cfg.lambdas() {
        let seed = centered_seed(grid.clone(), m, lam)?;
        let leaf = solve_leaf_with_eta(&p, lam, &seed, &newton, 0.0)?;
        let rep = leaf_report(&leaf, &p)?;
        let r = r_of_lambda(m, lam)?;
        out.checks.push(Check::at_most(format!("r={r:.6}.hawking_rel"), (rep.diagnostics.hawking / m - 1.0).abs(), 1e-7));
        out.checks.push(Check::at_most(format!("r={r:.6}.residual"), rep.diagnostics.residual_norm, newton.residual_tol));
        out.checks.push(Check::at_most(format!("r={r:.6}.lambda_gap"), rep.diagnostics.lambda_gap.abs(), 1e-12));
        out.checks.push(Check::at_most(format!("r={r:.6}.tau"), rep.diagnostics.tau, 1e-10));
        t.push(leaf_row(&rep, m));
        out.traces.push(trace(&leaf, 0.0));
    }
    out.tables.push(("leaves.csv".into(), t));
    Ok(out)
}

fn spectrum_cmd(cfg: &RunConfig) -> Result<Outcome> {
    let m = cfg.metric.m;
    let eta = cfg.metric.eta;
    let p = provider(cfg, eta)?;
    let grid = Arc::new(QuadratureGrid::new(cfg.numerics.bandlimit));
    let newton = cfg.numerics.newton();
    let exact = cfg.metric.kind == PerturbationKind::ExactSchwarzschild;
    let count = 25;
    let mut t = Table::new(&["lambda", "index", "mu", "predicted", "abs_diff"]);
    let mut out = Outcome::default();
    for lam in cfg.lambdas() {
        let leaf = solve_or_continue(p.as_ref(), lam, grid.clone(), &newton, cfg.numerics.continuation_steps, eta)?;
        let geom = geometry(&leaf.graph, p.as_ref())?;
        let a = assemble(&geom, lam);
        let sp = spectrum(&a, count)?;
        let predicted = if exact { schwarzschild_jacobi_eigenvalues(m, r_of_lambda(m, lam)?, count) } else { vec![f64::NAN; count] };
        let mut worst = 0.0f64;
        for (i, (mu, want)) in sp.values.iter().zip(&predicted).enumerate() {
            let diff = (mu - want).abs();
            if i < REPORT_EIGENVALUES {
                worst = worst.max(diff);
            }
            t.push(vec![lam.into(), i.into(), (*mu).into(), (*want).into(), diff.into()]);
        }
        if exact {
            out.checks.push(Check::at_most(format!("lambda={lam:.6e}.max_abs_diff_first9"), worst, 1e-8));
        }
        out.checks.push(Check::above(format!("lambda={lam:.6e}.coercivity"), wlambda_coercivity(&a)?, 0.0));
        out.traces.push(trace(&leaf, eta));
    }
    out.tables.push(("spectrum.csv".into(), t));
    Ok(out)
}

fn coefficient_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Relative size of the randomized perturbation of restart seeds.
pub const RESTART_NOISE: f64 = 0.01;

fn solve(cfg: &RunConfig) -> Result<Outcome> {
    let m = cfg.metric.m;
    let eta = cfg.metric.eta;
    let p = provider(cfg, eta)?;
    let grid = Arc::new(QuadratureGrid::new(cfg.numerics.bandlimit));
    let newton = cfg.numerics.newton();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut t = leaf_table();
    let mut out = Outcome::default();
    for lam in cfg.lambdas() {
        let leaf = solve_or_continue(p.as_ref(), lam, grid.clone(), &newton, cfg.numerics.continuation_steps, eta)?;
        let rep = leaf_report(&leaf, p.as_ref())?;
        out.checks.push(Check::at_most(format!("lambda={lam:.6e}.residual"), rep.diagnostics.residual_norm, newton.residual_tol));
        out.checks.push(closure_check(format!("lambda={lam:.6e}.closure"), &leaf, newton.residual_tol));
        if cfg.numerics.restarts > 0 {
            let mut worst = 0.0f64;
            for _ in 0..cfg.numerics.restarts {
                let seed = perturbed_seed(&leaf, &mut rng);
                let other = solve_leaf_with_eta(p.as_ref(), lam, &seed, &newton, eta)?;
                worst = worst.max(coefficient_distance(&other.graph.coeffs, &leaf.graph.coeffs));
            }
            out.checks.push(Check::at_most(format!("lambda={lam:.6e}.restart_distance"), worst, 1e-7));
        }
        t.push(leaf_row(&rep, m));
        out.traces.push(trace(&leaf, eta));
    }
    out.tables.push(("leaves.csv".into(), t));
    Ok(out)
}

/// Seed at coefficient distance at most `RESTART_NOISE · R_e` from the
/// leaf, spread over the degrees up to 4.
pub fn perturbed_seed(leaf: &Leaf, rng: &mut impl Rng) -> willmore_core::surface::RadialGraph {
    let n = willmore_core::harmonics::sh_count(4).min(leaf.graph.coeffs.len());
    let amp = RESTART_NOISE * leaf.diagnostics.r_e;
    let mut c = leaf.graph.coeffs.clone();
    for v in c.iter_mut().take(n) {
        *v += rng.gen_range(-1.0..1.0) * amp;
    }
    leaf.graph.with_coeffs(c)
}

fn foliate_cmd(cfg: &RunConfig) -> Result<Outcome> {
    let m = cfg.metric.m;
    let eta = cfg.metric.eta;
    let p = provider(cfg, eta)?;
    let grid = Arc::new(QuadratureGrid::new(cfg.numerics.bandlimit));
    let newton = cfg.numerics.newton();
    let lams = cfg.lambdas();
    let fol = foliate(p.as_ref(), &lams, grid, &newton, eta)?;
    let mut t = leaf_table();
    let mut out = Outcome::default();
    for leaf in &fol.leaves {
        let rep = leaf_report(leaf, p.as_ref())?;
        out.checks.push(closure_check(format!("lambda={:.6e}.closure", leaf.lambda), leaf, newton.residual_tol));
        t.push(leaf_row(&rep, m));
        out.traces.push(trace(leaf, eta));
    }
    if let Some((i, e)) = &fol.failure {
        out.failures.push(format!("leaf {i} (lambda = {}): {e}", lams[*i]));
    }
    out.checks.push(Check::at_most("converged_leaves_missing", (lams.len() - fol.leaves.len()) as f64, 0.0));
    if fol.leaves.len() > 1 {
        out.checks.push(Check::above("min_radial_gap", fol.min_radial_gap, 0.0));
    }
    out.checks.push(Check::at_most("monotonicity_violations", fol.monotonicity_violations as f64, 0.0));
    out.tables.push(("leaves.csv".into(), t));
    Ok(out)
}

fn decay_sweep(cfg: &RunConfig) -> Result<Outcome> {
    let m = cfg.metric.m;
    let newton = cfg.numerics.newton();
    let grid = Arc::new(QuadratureGrid::new(cfg.numerics.bandlimit));
    let rs: Vec<f64> = cfg.lambdas().iter().map(|&l| r_of_lambda(m, l)).collect::<willmore_core::Result<_>>()?;
    let slices: Vec<_> = cfg
        .sweep
        .etas
        .par_iter()
        .map(|&eta| -> Result<_> {
            let p = PerturbedMetric::new(m, cfg.metric.spec(eta))?;
            Ok(sweep_slice(&p, eta, &rs, grid.clone(), &newton))
        })
        .collect::<Result<_>>()?;
    let mut samples = Vec::new();
    let mut out = Outcome::default();
    let mut leaves = leaf_table();
    for (s, f) in slices {
        for x in &s {
            leaves.push(leaf_row(&x.report, m));
        }
        for fail in f {
            out.failures.push(format!("eta = {}, r = {}: {}", fail.eta, fail.r, fail.error));
        }
        samples.extend(s);
    }
    let mut t = Table::new(&["diagnostic", "slope_r", "slope_eta", "joint_eta", "joint_r", "samples"]);
    for f in fit_sweep(&samples) {
        t.push(vec![f.diagnostic.into(), f.slope_r.into(), f.slope_eta.into(), f.joint.0.into(), f.joint.1.into(), f.samples.into()]);
    }
    out.checks.push(Check::at_most("failed_samples", out.failures.len() as f64, 0.0));
    out.tables.push(("leaves.csv".into(), leaves));
    out.tables.push(("sweep.csv".into(), t));
    Ok(out)
}
