//! Newton solver for the area-constrained Willmore equation at fixed `λ`,
//! continuation in the metric and in `λ`, foliation assembly and the
//! measured decay diagnostics.

use crate::error::{Error, IterationRecord, NewtonFailure, Result};
use crate::harmonics::{sh_count, sh_degree_order};
use crate::metric::{Homotopy, MetricProvider, SchwarzschildParams};
use crate::oracle::{lambda_of_r, mean_curvature_schwarzschild, r_of_lambda};
use crate::surface::{approximating_sphere, build_graph_on, covector_dot, geometry, RadialGraph, Shape, SurfaceGeometry};
use crate::willmore::{
    assemble, functionals, integral_identity, pohozaev_flux, residual_scale, spectrum, willmore_residual,
    wlambda_coercivity, FunctionalRecord, Operators,
};
use alloc::boxed::Box;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::f64::consts::PI;
use nalgebra::{DMatrix, DVector};
#[allow(unused_imports)]
use num_traits::Float;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(rename_all = "kebab-case"))]
pub enum Preconditioner {
    None,
    /// Diagonal scaling by the exact operator of the centered Schwarzschild
    /// sphere with the same `λ`.
    #[default]
    SchwarzschildSphere,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(default))]
pub struct NewtonConfig {
    /// Target for `sup|F| / sup|λH|`.
    pub residual_tol: f64,
    pub max_iters: usize,
    /// Maximum number of step halvings per iteration.
    pub damping: usize,
    pub preconditioner: Preconditioner,
    /// Smallest admissible singular value of the (scaled) Jacobian, relative
    /// to `m² R_S⁻⁶` without preconditioning and to 1 with it.
    pub regularize_floor: f64,
    /// Extra iterations after convergence while the step keeps shrinking.
    pub polish_iters: usize,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        NewtonConfig {
            residual_tol: 1e-8,
            max_iters: 30,
            damping: 8,
            preconditioner: Preconditioner::SchwarzschildSphere,
            regularize_floor: 1e-6,
            polish_iters: 3,
        }
    }
}

impl NewtonConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.residual_tol > 0.0) || self.max_iters == 0 {
            return Err(Error::InvalidArgument("residual_tol must be positive and max_iters at least 1".into()));
        }
        Ok(())
    }
}

/// Scalar diagnostics of a converged leaf.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LeafDiagnostics {
    pub area: f64,
    pub r_e: f64,
    pub a_e: [f64; 3],
    pub tau: f64,
    /// `φ̄² R_e` with `φ̄ = 1 + m/2R_e`.
    pub r_s: f64,
    pub hawking: f64,
    /// `λ − 2m/R_S³`.
    pub lambda_gap: f64,
    pub a0_l2: f64,
    pub a0_sup: f64,
    pub grad_h_sup: f64,
    /// `sup |H − H̄^S|`.
    pub h_gap: f64,
    /// `sup |ν − φ⁻²ρ|_g`.
    pub nu_gap: f64,
    /// `sup |λ + Ric(ν,ν)|`.
    pub lambda_ric_gap: f64,
    pub residual_norm: f64,
    /// `λ|Σ| + ∫(|∇log H|² + |Å|² + Ric(ν,ν)) dμ`.
    pub integral_identity: f64,
    pub r_min: f64,
    pub eta_used: f64,
}

/// One solution of the equation at multiplier `lambda`.
#[derive(Debug, Clone)]
pub struct Leaf {
    pub lambda: f64,
    pub graph: RadialGraph,
    pub diagnostics: LeafDiagnostics,
    pub trace: Vec<IterationRecord>,
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Relative residual `sup|F| / sup|λH|`.
pub fn relative_residual(geom: &SurfaceGeometry, lambda: f64) -> f64 {
    sup(&willmore_residual(geom, lambda)) / residual_scale(geom, lambda)
}

/// Diagnostics of a surface relative to the Schwarzschild model of mass `m`.
pub fn diagnose(geom: &SurfaceGeometry, graph: &RadialGraph, m: f64, lambda: f64, eta: f64) -> LeafDiagnostics {
    let f = functionals(geom);
    let s = approximating_sphere(graph);
    let phib = 1.0 + m / (2.0 * s.r_e);
    let r_s = phib * phib * s.r_e;
    let h_bar = mean_curvature_schwarzschild(m, s.r_e);
    let (mut a0_sup, mut dh_sup, mut h_gap, mut nu_gap, mut lr, mut r_min) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64, f64::INFINITY);
    for g in &geom.nodes {
        a0_sup = a0_sup.max(g.a0_norm2.sqrt());
        dh_sup = dh_sup.max(covector_dot(&g.gamma_inv, &g.dh, &g.dh).sqrt());
        h_gap = h_gap.max((g.h - h_bar).abs());
        lr = lr.max((lambda + g.ric_nn).abs());
        let x = g.position;
        let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
        r_min = r_min.min(r);
        let phi = 1.0 + m / (2.0 * r);
        let d = [g.normal[0] - x[0] / (r * phi * phi), g.normal[1] - x[1] / (r * phi * phi), g.normal[2] - x[2] / (r * phi * phi)];
        let mut n2 = 0.0;
        for a in 0..3 {
            for b in 0..3 {
                n2 += g.metric[a][b] * d[a] * d[b];
            }
        }
        nu_gap = nu_gap.max(n2.sqrt());
    }
    LeafDiagnostics {
        area: f.area,
        r_e: s.r_e,
        a_e: s.a_e,
        tau: s.tau,
        r_s,
        hawking: f.hawking,
        lambda_gap: lambda - 2.0 * m / r_s.powi(3),
        a0_l2: f.u_energy.sqrt(),
        a0_sup,
        grad_h_sup: dh_sup,
        h_gap,
        nu_gap,
        lambda_ric_gap: lr,
        residual_norm: relative_residual(geom, lambda),
        integral_identity: integral_identity(geom, lambda),
        r_min,
        eta_used: eta,
    }
}

/// Nodal values of every basis harmonic of degree `≤ L`.
fn basis_values(graph: &RadialGraph) -> Vec<Vec<f64>> {
    let n = sh_count(graph.bandlimit());
    (0..n)
        .map(|j| {
            let mut c = alloc::vec![0.0; n];
            c[j] = 1.0;
            graph.grid.synthesize(&c)
        })
        .collect()
}

/// Jacobian of the projected residual with respect to the radial
/// coefficients: normal part through `W_λ`, tangential part by transport.
fn jacobian(geom: &SurfaceGeometry, graph: &RadialGraph, basis: &[Vec<f64>], residual: &[f64], lambda: f64) -> DMatrix<f64> {
    let grid = &geom.grid;
    let l = graph.bandlimit();
    let nodes = geom.len();
    let ops = Operators::new(geom);
    let df = grid.derivs(residual);
    let mut speed = Vec::with_capacity(nodes);
    let mut transport = Vec::with_capacity(nodes);
    for node in 0..nodes {
        let g = &geom.nodes[node];
        let w = grid.directions[node];
        let gw = |v: &[f64; 3]| {
            let mut s = 0.0;
            for a in 0..3 {
                for b in 0..3 {
                    s += g.metric[a][b] * w[a] * v[b];
                }
            }
            s
        };
        speed.push(gw(&g.normal));
        let q = [gw(&g.tangents[0]), gw(&g.tangents[1])];
        transport.push(covector_dot(&g.gamma_inv, &q, &df.first(node)));
    }
    let n = basis.len();
    let mut j = DMatrix::zeros(n, n);
    for (col, y) in basis.iter().enumerate() {
        let alpha: Vec<f64> = y.iter().zip(&speed).map(|(a, b)| a * b).collect();
        let d = grid.derivs(&alpha);
        let mut image = ops.apply_wlambda_derivs(&d, lambda);
        for node in 0..nodes {
            image[node] += y[node] * transport[node];
        }
        let c = grid.analyze(&image, l);
        j.set_column(col, &DVector::from_vec(c));
    }
    j
}

/// Diagonal of the Jacobian of the centered Schwarzschild sphere of
/// Euclidean radius `r`, in the harmonic basis.
fn sphere_diagonal(m: f64, r: f64, lambda: f64, l: usize) -> Result<Vec<f64>> {
    let phi = 1.0 + m / (2.0 * r);
    let rs = phi * phi * r;
    let h = mean_curvature_schwarzschild(m, r);
    let jet = crate::metric::schwarzschild_jet(SchwarzschildParams { m }, [r, 0.0, 0.0])?;
    let nu = phi.powi(-2);
    let ric_nn = jet.ricci[0][0] * nu * nu;
    let dnu = jet.nabla_ricci[0][0][0] * nu * nu * nu;
    let a2 = 0.5 * h * h;
    Ok((0..sh_count(l))
        .map(|j| {
            let (deg, _) = sh_degree_order(j);
            let mu = (deg * (deg + 1)) as f64 / (rs * rs) - a2 - ric_nn;
            let w = mu * mu + 0.5 * h * h * mu - h * dnu - lambda * mu;
            let v = (w * phi * phi).abs();
            if v > 0.0 {
                v
            } else {
                1.0
            }
        })
        .collect())
}

struct Trial {
    graph: RadialGraph,
    geom: SurfaceGeometry,
    residual: Vec<f64>,
    rel: f64,
}

fn evaluate(provider: &dyn MetricProvider, graph: RadialGraph, lambda: f64) -> core::result::Result<Trial, NewtonFailure> {
    if graph.validate().is_err() {
        return Err(NewtonFailure::InvalidGraph);
    }
    let geom = geometry(&graph, provider).map_err(|_| NewtonFailure::InvalidGraph)?;
    if geom.nodes.iter().any(|g| !(g.h > 0.0)) {
        return Err(NewtonFailure::NonPositiveMeanCurvature);
    }
    let residual = willmore_residual(&geom, lambda);
    let rel = sup(&residual) / residual_scale(&geom, lambda);
    if !rel.is_finite() {
        return Err(NewtonFailure::Diverged);
    }
    Ok(Trial { graph, geom, residual, rel })
}

fn fail(reason: NewtonFailure, trace: Vec<IterationRecord>) -> Error {
    Error::Newton { reason, trace }
}

/// Solve the equation at fixed `λ` from `initial`.
pub fn solve_leaf(provider: &dyn MetricProvider, lambda: f64, initial: &RadialGraph, cfg: &NewtonConfig) -> Result<Leaf> {
    solve_leaf_with_eta(provider, lambda, initial, cfg, 0.0)
}

pub fn solve_leaf_with_eta(
    provider: &dyn MetricProvider,
    lambda: f64,
    initial: &RadialGraph,
    cfg: &NewtonConfig,
    eta: f64,
) -> Result<Leaf> {
    cfg.validate()?;
    if !(lambda > 0.0) {
        return Err(Error::InvalidArgument(alloc::format!("lambda must be positive, got {lambda}")));
    }
    let m = provider.mass();
    let mut trace = Vec::new();
    let mut cur = evaluate(provider, initial.clone(), lambda).map_err(|r| fail(r, Vec::new()))?;
    let basis = basis_values(initial);
    let l = initial.bandlimit();
    let size = (initial.coeffs[0] / (4.0 * PI).sqrt()).abs();
    let mut converged_at: Option<usize> = None;
    let mut last_step = f64::INFINITY;
    for it in 0..cfg.max_iters {
        if cur.rel <= cfg.residual_tol && converged_at.is_none() {
            converged_at = Some(it);
        }
        if let Some(c) = converged_at {
            if it - c >= cfg.polish_iters || last_step <= 1e-13 * size {
                break;
            }
        }
        let jac = jacobian(&cur.geom, &cur.graph, &basis, &cur.residual, lambda);
        let rhs = DVector::from_vec(cur.graph.grid.analyze(&cur.residual, l)) * -1.0;
        let r_e = approximating_sphere(&cur.graph).r_e;
        let (scale, floor_scale) = match cfg.preconditioner {
            Preconditioner::None => (alloc::vec![1.0; basis.len()], m.max(1e-300).powi(2) * ((1.0 + m / (2.0 * r_e)).powi(2) * r_e).powi(-6)),
            Preconditioner::SchwarzschildSphere => (sphere_diagonal(m, r_e, lambda, l)?, 1.0),
        };
        let mut jp = jac;
        for (c, s) in scale.iter().enumerate() {
            let mut col = jp.column_mut(c);
            col /= *s;
        }
        let svd = jp.svd(true, true);
        let smin = svd.singular_values.iter().copied().fold(f64::INFINITY, f64::min);
        if !(smin >= cfg.regularize_floor * floor_scale) {
            return Err(fail(NewtonFailure::SingularJacobian, trace));
        }
        let y = svd.solve(&rhs, 0.0).map_err(|_| fail(NewtonFailure::SingularJacobian, trace.clone()))?;
        let delta: Vec<f64> = y.iter().zip(&scale).map(|(y, s)| y / s).collect();
        let step_norm = delta.iter().map(|d| d * d).sum::<f64>().sqrt() / (4.0 * PI).sqrt();
        let mut t = 1.0;
        let mut accepted = None;
        let mut last_reason = NewtonFailure::Diverged;
        for _ in 0..=cfg.damping {
            let coeffs: Vec<f64> = cur.graph.coeffs.iter().zip(&delta).map(|(c, d)| c + t * d).collect();
            match evaluate(provider, cur.graph.with_coeffs(coeffs), lambda) {
                Ok(trial) if converged_at.is_some() || trial.rel < cur.rel || trial.rel <= cfg.residual_tol => {
                    accepted = Some(trial);
                    break;
                }
                Ok(_) => last_reason = NewtonFailure::Diverged,
                Err(r) => last_reason = r,
            }
            t *= 0.5;
        }
        let Some(trial) = accepted else {
            return Err(fail(last_reason, trace));
        };
        trace.push(IterationRecord { iteration: it + 1, residual: trial.rel, step_norm: t * step_norm, step_scale: t });
        if converged_at.is_some() && trial.rel > 10.0 * cur.rel.max(cfg.residual_tol) {
            // polishing made things worse; keep the converged iterate
            break;
        }
        last_step = t * step_norm;
        cur = trial;
    }
    if cur.rel > cfg.residual_tol {
        return Err(fail(NewtonFailure::MaxIterations, trace));
    }
    let diagnostics = diagnose(&cur.geom, &cur.graph, m, lambda, eta);
    Ok(Leaf { lambda, graph: cur.graph, diagnostics, trace })
}

/// Centered sphere of Schwarzschild radius `r_of_lambda(m, λ)` on `grid`.
pub fn centered_seed(grid: Arc<crate::spectral::QuadratureGrid>, m: f64, lambda: f64) -> Result<RadialGraph> {
    let r = r_of_lambda(m, lambda)?;
    build_graph_on(grid, [0.0; 3], &Shape::Sphere(r))
}

/// March the metric from exact Schwarzschild (`t = 0`) to `target`
/// (`t = 1`) at fixed `λ`, seeding each step with the previous leaf and
/// halving the step on failure.
pub fn continue_metric(
    target: &dyn MetricProvider,
    lambda: f64,
    steps: usize,
    seed: &RadialGraph,
    cfg: &NewtonConfig,
    eta: f64,
) -> Result<Leaf> {
    let m = target.mass();
    let start = SchwarzschildParams::new(m)?;
    let mut leaf = solve_leaf_with_eta(&start, lambda, seed, cfg, 0.0)?;
    let mut t = 0.0;
    let mut dt = 1.0 / steps.max(1) as f64;
    let min_dt = dt / 1024.0;
    while t < 1.0 {
        let next = (t + dt).min(1.0);
        let h = Homotopy { start: &start, end: target, t: next };
        match solve_leaf_with_eta(&h, lambda, &leaf.graph, cfg, eta * next) {
            Ok(l) => {
                leaf = l;
                t = next;
            }
            Err(_) => {
                dt *= 0.5;
                if dt < min_dt {
                    return Err(Error::Continuation { t_last: t });
                }
            }
        }
    }
    Ok(leaf)
}

/// Multipliers `λ(r)` for radii spaced geometrically in `[r_min, r_max]`,
/// descending in `λ`.
pub fn lambda_ladder(m: f64, r_min: f64, r_max: f64, n: usize) -> Vec<f64> {
    crate::oracle::geometric_ladder(r_min, r_max, n).iter().map(|&r| lambda_of_r(m, r)).collect()
}

/// Ordered leaves of a foliation and the checks between neighbours.
#[derive(Debug, Clone)]
pub struct FoliationResult {
    /// Sorted by `λ` descending (inside out).
    pub leaves: Vec<Leaf>,
    /// `min (u_outer − u_inner)` over nodes and adjacent pairs.
    pub min_radial_gap: f64,
    pub monotonicity_violations: usize,
    /// Index and error of the first failed leaf, if any.
    pub failure: Option<(usize, Error)>,
}

/// Largest `λ` ratio between consecutive solves; intermediate leaves are
/// solved for seeding only.
pub const MAX_LADDER_RATIO: f64 = 1.3;

fn shifted_seed(leaf: &Leaf, m: f64, lambda: f64) -> Result<RadialGraph> {
    let dr = r_of_lambda(m, lambda)? - r_of_lambda(m, leaf.lambda)?;
    let mut c = leaf.graph.coeffs.clone();
    c[0] += dr * (4.0 * PI).sqrt();
    Ok(leaf.graph.with_coeffs(c))
}

/// Solve a ladder of multipliers from the innermost leaf outwards. The first
/// leaf is solved directly from the centered sphere and, failing that, by
/// metric continuation.
pub fn foliate(
    provider: &dyn MetricProvider,
    lambdas: &[f64],
    grid: Arc<crate::spectral::QuadratureGrid>,
    cfg: &NewtonConfig,
    eta: f64,
) -> Result<FoliationResult> {
    let m = provider.mass();
    let mut ls = lambdas.to_vec();
    ls.sort_by(|a, b| b.total_cmp(a));
    ls.dedup();
    if ls.is_empty() || ls.iter().any(|l| !(*l > 0.0)) {
        return Err(Error::InvalidArgument("lambda ladder must be non-empty and positive".into()));
    }
    let mut leaves: Vec<Leaf> = Vec::new();
    let mut failure = None;
    for (i, &lam) in ls.iter().enumerate() {
        let res = match leaves.last() {
            None => {
                let seed = centered_seed(grid.clone(), m, lam)?;
                solve_leaf_with_eta(provider, lam, &seed, cfg, eta).or_else(|_| continue_metric(provider, lam, 8, &seed, cfg, eta))
            }
            Some(prev) => step_to(provider, prev, lam, cfg, eta),
        };
        match res {
            Ok(l) => leaves.push(l),
            Err(e) => {
                failure = Some((i, Error::Ladder { index: i, source: Box::new(e) }));
                break;
            }
        }
    }
    let mut gap = f64::INFINITY;
    let mut violations = 0;
    for w in leaves.windows(2) {
        let (inner, outer) = (w[0].graph.radii(), w[1].graph.radii());
        for (a, b) in inner.iter().zip(&outer) {
            gap = gap.min(b - a);
        }
        if w[1].diagnostics.hawking < w[0].diagnostics.hawking - 1e-9 {
            violations += 1;
        }
    }
    Ok(FoliationResult { leaves, min_radial_gap: gap, monotonicity_violations: violations, failure })
}

/// Continue from `prev` to multiplier `lam`, inserting intermediate
/// multipliers so that consecutive ratios stay below `MAX_LADDER_RATIO`.
pub fn step_to(provider: &dyn MetricProvider, prev: &Leaf, lam: f64, cfg: &NewtonConfig, eta: f64) -> Result<Leaf> {
    let m = provider.mass();
    let ratio = (prev.lambda / lam).abs();
    let k = (ratio.ln() / MAX_LADDER_RATIO.ln()).ceil().max(1.0) as usize;
    let mut cur = prev.clone();
    for s in 1..=k {
        let target = prev.lambda * (lam / prev.lambda).powf(s as f64 / k as f64);
        let target = if s == k { lam } else { target };
        let seed = shifted_seed(&cur, m, target)?;
        cur = solve_leaf_with_eta(provider, target, &seed, cfg, eta)?;
    }
    Ok(cur)
}

/// Leaf row: diagnostics, functionals, the lowest Jacobi eigenvalues and the
/// coercivity constant of `W_λ`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LeafReport {
    pub lambda: f64,
    pub diagnostics: LeafDiagnostics,
    pub functionals: FunctionalRecord,
    pub jacobi_eigenvalues: Vec<f64>,
    pub coercivity: f64,
    pub pohozaev_flux: f64,
    pub iterations: usize,
}

/// Number of Jacobi eigenvalues in a report row.
pub const REPORT_EIGENVALUES: usize = 9;

pub fn leaf_report(leaf: &Leaf, provider: &dyn MetricProvider) -> Result<LeafReport> {
    let geom = geometry(&leaf.graph, provider)?;
    let a = assemble(&geom, leaf.lambda);
    let sp = spectrum(&a, REPORT_EIGENVALUES)?;
    let d = &leaf.diagnostics;
    let ae = (d.a_e[0] * d.a_e[0] + d.a_e[1] * d.a_e[1] + d.a_e[2] * d.a_e[2]).sqrt();
    let b = if ae > 0.0 { [d.a_e[0] / ae, d.a_e[1] / ae, d.a_e[2] / ae] } else { [0.0, 0.0, 1.0] };
    Ok(LeafReport {
        lambda: leaf.lambda,
        diagnostics: leaf.diagnostics,
        functionals: functionals(&geom),
        jacobi_eigenvalues: sp.values,
        coercivity: wlambda_coercivity(&a)?,
        pohozaev_flux: pohozaev_flux(&geom, b),
        iterations: leaf.trace.len(),
    })
}

/// One sample of the decay sweep.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SweepSample {
    pub eta: f64,
    /// Requested Euclidean radius; the leaf multiplier is `λ(r)`.
    pub r: f64,
    pub report: LeafReport,
}

/// Fitted decay exponents of one diagnostic.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DecayFit {
    pub diagnostic: alloc::string::String,
    /// Mean over `η` slices of the log-log slope against `r_min`.
    pub slope_r: f64,
    /// Mean over radius slices of the log-log slope against `η`.
    pub slope_eta: f64,
    /// Exponents of the joint fit `ln y = c + a ln η + b ln r_min`, as `(a, b)`.
    pub joint: (f64, f64),
    pub slope_r_per_eta: Vec<f64>,
    pub slope_eta_per_r: Vec<f64>,
    pub samples: usize,
}

/// Failure of one sweep sample.
#[derive(Debug)]
pub struct SweepFailure {
    pub eta: f64,
    pub r: f64,
    pub error: Error,
}

#[derive(Debug)]
pub struct SweepResult {
    pub samples: Vec<SweepSample>,
    pub failures: Vec<SweepFailure>,
    pub fits: Vec<DecayFit>,
}

/// Names of the diagnostics fitted by the decay sweep.
pub const SWEEP_DIAGNOSTICS: [&str; 8] =
    ["tau", "a0_sup", "h_gap", "grad_h_sup", "nu_gap", "lambda_gap", "lambda_ric_gap", "pohozaev_flux"];

pub fn sweep_value(s: &SweepSample, name: &str) -> f64 {
    let d = &s.report.diagnostics;
    match name {
        "tau" => d.tau,
        "a0_sup" => d.a0_sup,
        "h_gap" => d.h_gap,
        "grad_h_sup" => d.grad_h_sup,
        "nu_gap" => d.nu_gap,
        "lambda_gap" => d.lambda_gap.abs(),
        "lambda_ric_gap" => d.lambda_ric_gap,
        "pohozaev_flux" => s.report.pohozaev_flux.abs(),
        _ => f64::NAN,
    }
}

/// Least-squares slope of `ln|y|` against `ln x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    if x.len() < 2 {
        return f64::NAN;
    }
    let pts: Vec<(f64, f64)> = x.iter().zip(y).map(|(x, y)| (x.ln(), y.abs().ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Joint least-squares fit of `ln|y| = c + a ln η + b ln r`, returned as `(a, b)`.
pub fn fit_power_law(eta: &[f64], r: &[f64], y: &[f64]) -> (f64, f64) {
    let n = y.len();
    if n < 3 {
        return (f64::NAN, f64::NAN);
    }
    let a = DMatrix::from_fn(n, 3, |i, j| match j {
        0 => 1.0,
        1 => eta[i].ln(),
        _ => r[i].ln(),
    });
    let b = DVector::from_fn(n, |i, _| y[i].abs().ln());
    match a.svd(true, true).solve(&b, 1e-12) {
        Ok(x) => (x[1], x[2]),
        Err(_) => (f64::NAN, f64::NAN),
    }
}

fn distinct(v: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::new();
    for x in v {
        if !out.contains(&x) {
            out.push(x);
        }
    }
    out
}

fn mean(v: &[f64]) -> f64 {
    let f: Vec<f64> = v.iter().copied().filter(|x| x.is_finite()).collect();
    if f.is_empty() {
        f64::NAN
    } else {
        f.iter().sum::<f64>() / f.len() as f64
    }
}

pub fn fit_diagnostic(samples: &[SweepSample], name: &str) -> DecayFit {
    let y = |s: &SweepSample| sweep_value(s, name);
    let rmin = |s: &SweepSample| s.report.diagnostics.r_min;
    let per_eta: Vec<f64> = distinct(samples.iter().map(|s| s.eta))
        .into_iter()
        .map(|e| {
            let sl: Vec<&SweepSample> = samples.iter().filter(|s| s.eta == e).collect();
            loglog_slope(&sl.iter().map(|s| rmin(s)).collect::<Vec<_>>(), &sl.iter().map(|s| y(s)).collect::<Vec<_>>())
        })
        .collect();
    let per_r: Vec<f64> = distinct(samples.iter().map(|s| s.r))
        .into_iter()
        .map(|r| {
            let sl: Vec<&SweepSample> = samples.iter().filter(|s| s.r == r).collect();
            loglog_slope(&sl.iter().map(|s| s.eta).collect::<Vec<_>>(), &sl.iter().map(|s| y(s)).collect::<Vec<_>>())
        })
        .collect();
    let joint = fit_power_law(
        &samples.iter().map(|s| s.eta).collect::<Vec<_>>(),
        &samples.iter().map(rmin).collect::<Vec<_>>(),
        &samples.iter().map(y).collect::<Vec<_>>(),
    );
    DecayFit {
        diagnostic: name.into(),
        slope_r: mean(&per_eta),
        slope_eta: mean(&per_r),
        joint,
        slope_r_per_eta: per_eta,
        slope_eta_per_r: per_r,
        samples: samples.len(),
    }
}

pub fn fit_sweep(samples: &[SweepSample]) -> Vec<DecayFit> {
    SWEEP_DIAGNOSTICS.iter().map(|n| fit_diagnostic(samples, n)).collect()
}

/// Leaves of one metric at the multipliers `λ(r)`, `r ∈ rs`, reported.
/// Samples after a failed leaf are reported as failures.
pub fn sweep_slice(
    provider: &dyn MetricProvider,
    eta: f64,
    rs: &[f64],
    grid: Arc<crate::spectral::QuadratureGrid>,
    cfg: &NewtonConfig,
) -> (Vec<SweepSample>, Vec<SweepFailure>) {
    let m = provider.mass();
    let mut rs = rs.to_vec();
    rs.sort_by(f64::total_cmp);
    let lambdas: Vec<f64> = rs.iter().map(|&r| lambda_of_r(m, r)).collect();
    let mut samples = Vec::new();
    let mut failures = Vec::new();
    match foliate(provider, &lambdas, grid, cfg, eta) {
        Ok(fol) => {
            for (leaf, &r) in fol.leaves.iter().zip(&rs) {
                match leaf_report(leaf, provider) {
                    Ok(report) => samples.push(SweepSample { eta, r, report }),
                    Err(error) => failures.push(SweepFailure { eta, r, error }),
                }
            }
            if let Some((i, error)) = fol.failure {
                failures.push(SweepFailure { eta, r: rs[i], error });
                for &r in &rs[i + 1..] {
                    failures.push(SweepFailure { eta, r, error: Error::Continuation { t_last: 0.0 } });
                }
            }
        }
        Err(error) => failures.push(SweepFailure { eta, r: rs[0], error }),
    }
    (samples, failures)
}

/// Decay sweep over `η ∈ etas` and `r ∈ rs` for the family `spec` (its own
/// `eta` is replaced), then fitted.
pub fn decay_sweep(
    spec: &crate::metric::PerturbationSpec,
    m: f64,
    etas: &[f64],
    rs: &[f64],
    grid: Arc<crate::spectral::QuadratureGrid>,
    cfg: &NewtonConfig,
) -> Result<SweepResult> {
    if etas.is_empty() || rs.is_empty() {
        return Err(Error::InvalidArgument("decay sweep needs non-empty eta and r lists".into()));
    }
    let mut samples = Vec::new();
    let mut failures = Vec::new();
    for &eta in etas {
        let mut s = spec.clone();
        s.eta = eta;
        let metric = crate::metric::PerturbedMetric::new(m, s)?;
        let (a, b) = sweep_slice(&metric, eta, rs, grid.clone(), cfg);
        samples.extend(a);
        failures.extend(b);
    }
    let fits = fit_sweep(&samples);
    Ok(SweepResult { samples, failures, fits })
}
