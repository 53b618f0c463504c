//! Willmore-type functionals, the residual of the area-constrained Willmore
//! equation, its linearisation and dense Galerkin assemblies.

use crate::error::{Error, Result};
use crate::harmonics::sh_count;
use crate::metric::MetricProvider;
use crate::spectral::ChartDerivs;
use crate::surface::{covector_dot, tensor_dot, SurfaceGeometry};
use alloc::vec::Vec;
use core::f64::consts::PI;
use nalgebra::{DMatrix, DVector};
#[allow(unused_imports)]
use num_traits::Float;

/// Integrated quantities of a closed surface.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FunctionalRecord {
    /// `½∫H² dμ`.
    pub willmore: f64,
    /// `∫|Å|² dμ`.
    pub u_energy: f64,
    /// `2∫G(ν,ν) dμ`.
    pub v_energy: f64,
    pub area: f64,
    pub hawking: f64,
}

/// `|Σ|^{1/2} (16π)^{-3/2} (16π − 2W)`.
pub fn hawking_mass(area: f64, willmore: f64) -> f64 {
    area.sqrt() * (16.0 * PI).powf(-1.5) * (16.0 * PI - 2.0 * willmore)
}

fn g_nn(geom: &SurfaceGeometry, node: usize) -> f64 {
    let n = &geom.nodes[node];
    n.ric_nn - 0.5 * n.scalar_m
}

pub fn functionals(geom: &SurfaceGeometry) -> FunctionalRecord {
    let n = geom.len();
    let (mut w, mut u, mut v, mut a) = (0.0, 0.0, 0.0, 0.0);
    for node in 0..n {
        let g = &geom.nodes[node];
        let mu = geom.measure(node);
        w += 0.5 * g.h * g.h * mu;
        u += g.a0_norm2 * mu;
        v += 2.0 * g_nn(geom, node) * mu;
        a += mu;
    }
    FunctionalRecord { willmore: w, u_energy: u, v_energy: v, area: a, hawking: hawking_mass(a, w) }
}

/// `−ΔH − H|Å|² − Ric(ν,ν)H − λH` at every node.
pub fn willmore_residual(geom: &SurfaceGeometry, lambda: f64) -> Vec<f64> {
    geom.nodes.iter().map(|g| -g.lap_h - g.h * g.a0_norm2 - g.ric_nn * g.h - lambda * g.h).collect()
}

/// `sup |λH|`, the scale against which residuals are reported.
pub fn residual_scale(geom: &SurfaceGeometry, lambda: f64) -> f64 {
    geom.nodes.iter().fold(0.0f64, |m, g| m.max((lambda * g.h).abs()))
}

/// `λ|Σ| + ∫(|∇ log H|² + |Å|² + Ric(ν,ν)) dμ`, which vanishes on solutions.
pub fn integral_identity(geom: &SurfaceGeometry, lambda: f64) -> f64 {
    let mut s = lambda * geom.area();
    for node in 0..geom.len() {
        let g = &geom.nodes[node];
        let dlog = [g.dh[0] / g.h, g.dh[1] / g.h];
        s += (covector_dot(&g.gamma_inv, &dlog, &dlog) + g.a0_norm2 + g.ric_nn) * geom.measure(node);
    }
    s
}

/// `∫ G(b, ν) dμ` for a constant Cartesian vector `b`.
pub fn pohozaev_flux(geom: &SurfaceGeometry, b: [f64; 3]) -> f64 {
    let mut s = 0.0;
    for node in 0..geom.len() {
        let g = &geom.nodes[node];
        let mut v = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                v += (g.ricci[i][j] - 0.5 * g.scalar_m * g.metric[i][j]) * b[i] * g.normal[j];
            }
        }
        s += v * geom.measure(node);
    }
    s
}

/// Jacobi operator `L` and linearised Willmore operator `W` on a surface,
/// with the zeroth-order coefficients cached.
pub struct Operators<'a> {
    pub geom: &'a SurfaceGeometry,
    /// `|A|² + Ric(ν,ν)`.
    jacobi_potential: Vec<f64>,
    /// Zeroth-order coefficient of `W` beyond `LL + ½H²L`.
    willmore_potential: Vec<f64>,
}

impl<'a> Operators<'a> {
    pub fn new(geom: &'a SurfaceGeometry) -> Self {
        let mut jp = Vec::with_capacity(geom.len());
        let mut wp = Vec::with_capacity(geom.len());
        for g in &geom.nodes {
            let gi = &g.gamma_inv;
            jp.push(g.a_norm2 + g.ric_nn);
            let p = covector_dot(gi, &g.dh, &g.dh) + 2.0 * covector_dot(gi, &g.omega, &g.dh) + g.h * g.lap_h
                + 2.0 * tensor_dot(gi, &g.hess_h, &g.a0)
                + 2.0 * g.h * g.h * g.a0_norm2
                + 2.0 * g.h * tensor_dot(gi, &g.a0, &g.t)
                - g.h * g.dnu_ric_nn;
            wp.push(p);
        }
        Operators { geom, jacobi_potential: jp, willmore_potential: wp }
    }

    pub fn apply_l(&self, alpha: &[f64]) -> Vec<f64> {
        self.apply_l_derivs(&self.geom.grid.derivs(alpha))
    }

    /// `Lα` from precomputed chart derivatives of `α`.
    pub fn apply_l_derivs(&self, d: &ChartDerivs) -> Vec<f64> {
        let lap = self.geom.laplace_from_derivs(d);
        (0..self.geom.len()).map(|n| -lap[n] - d.v[n] * self.jacobi_potential[n]).collect()
    }

    pub fn apply_w(&self, alpha: &[f64]) -> Vec<f64> {
        self.apply_w_derivs(&self.geom.grid.derivs(alpha))
    }

    /// `Wα` in the two-dimensional form with `ω = Ric(ν,·)^T`.
    pub fn apply_w_derivs(&self, d: &ChartDerivs) -> Vec<f64> {
        let la = self.apply_l_derivs(d);
        let lla = self.apply_l(&la);
        let geom = self.geom;
        (0..geom.len())
            .map(|n| {
                let g = &geom.nodes[n];
                let gi = &g.gamma_inv;
                let da = d.first(n);
                let hess = geom.hessian(d, n);
                let mut a0_da_dh = 0.0;
                for i in 0..2 {
                    for j in 0..2 {
                        let ui = gi[i][0] * da[0] + gi[i][1] * da[1];
                        let vj = gi[j][0] * g.dh[0] + gi[j][1] * g.dh[1];
                        a0_da_dh += g.a0[i][j] * ui * vj;
                    }
                }
                lla[n] + 0.5 * g.h * g.h * la[n]
                    + 2.0 * g.h * tensor_dot(gi, &g.a0, &hess)
                    + 2.0 * g.h * covector_dot(gi, &g.omega, &da)
                    + 2.0 * a0_da_dh
                    + d.v[n] * self.willmore_potential[n]
            })
            .collect()
    }

    /// `W_λ α = Wα − λ Lα`.
    pub fn apply_wlambda_derivs(&self, d: &ChartDerivs, lambda: f64) -> Vec<f64> {
        let w = self.apply_w_derivs(d);
        let l = self.apply_l_derivs(d);
        w.iter().zip(&l).map(|(w, l)| w - lambda * l).collect()
    }
}

/// Dense Galerkin matrices in the basis of real spherical harmonics of
/// degree `≤ L` used as normal speeds.
#[derive(Debug, Clone)]
pub struct OperatorAssembly {
    pub bandlimit: usize,
    pub mass: DMatrix<f64>,
    pub l_mat: DMatrix<f64>,
    pub w_mat: DMatrix<f64>,
    pub wlam_mat: DMatrix<f64>,
    pub lambda: f64,
}

/// Nodal values (rows) of every basis function (columns), with derivatives.
pub fn basis_derivs(geom: &SurfaceGeometry) -> Vec<ChartDerivs> {
    let grid = &geom.grid;
    let n = sh_count(grid.bandlimit);
    (0..n)
        .map(|j| {
            let mut c = alloc::vec![0.0; n];
            c[j] = 1.0;
            grid.synthesize_derivs(&c)
        })
        .collect()
}

fn galerkin(geom: &SurfaceGeometry, basis: &DMatrix<f64>, cols: &[Vec<f64>]) -> DMatrix<f64> {
    let nodes = geom.len();
    let mut image = DMatrix::zeros(nodes, cols.len());
    for (j, c) in cols.iter().enumerate() {
        for i in 0..nodes {
            image[(i, j)] = c[i] * geom.measure(i);
        }
    }
    basis.transpose() * image
}

/// Assemble mass, `L`, `W` and `W_λ = W − λL`.
pub fn assemble(geom: &SurfaceGeometry, lambda: f64) -> OperatorAssembly {
    let ops = Operators::new(geom);
    let basis = basis_derivs(geom);
    let nodes = geom.len();
    let n = basis.len();
    let b = DMatrix::from_fn(nodes, n, |i, j| basis[j].v[i]);
    let ones: Vec<Vec<f64>> = basis.iter().map(|d| d.v.clone()).collect();
    let ls: Vec<Vec<f64>> = basis.iter().map(|d| ops.apply_l_derivs(d)).collect();
    let ws: Vec<Vec<f64>> = basis.iter().map(|d| ops.apply_w_derivs(d)).collect();
    let mass = galerkin(geom, &b, &ones);
    let l_mat = galerkin(geom, &b, &ls);
    let w_mat = galerkin(geom, &b, &ws);
    let wlam_mat = &w_mat - &l_mat * lambda;
    OperatorAssembly { bandlimit: geom.grid.bandlimit, mass, l_mat, w_mat, wlam_mat, lambda }
}

/// `‖S − Sᵀ‖_F / ‖S‖_F`.
pub fn asymmetry(m: &DMatrix<f64>) -> f64 {
    (m - m.transpose()).norm() / m.norm()
}

/// Generalised eigenpairs of a symmetric pencil `(K, M)`, ascending.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub values: Vec<f64>,
    /// Mass-orthonormal eigenvectors as columns, in the harmonic basis.
    pub vectors: DMatrix<f64>,
}

fn sym(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Cholesky factor `C` of the mass matrix and `C⁻¹ K C⁻ᵀ`.
fn reduce(k: &DMatrix<f64>, mass: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let chol = sym(mass).cholesky().ok_or(Error::NotPositiveDefinite)?;
    let c = chol.l();
    let x = c.solve_lower_triangular(&sym(k)).ok_or(Error::Eigen("singular mass factor"))?;
    let y = c.solve_lower_triangular(&x.transpose()).ok_or(Error::Eigen("singular mass factor"))?;
    Ok((c, sym(&y)))
}

pub fn generalized_spectrum(k: &DMatrix<f64>, mass: &DMatrix<f64>) -> Result<Spectrum> {
    let (c, r) = reduce(k, mass)?;
    let nr = r.nrows();
    let eig = r.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    if eig.eigenvalues.iter().any(|v| !v.is_finite()) {
        return Err(Error::Eigen("non-finite eigenvalue"));
    }
    order.sort_by(|a, b| eig.eigenvalues[*a].total_cmp(&eig.eigenvalues[*b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let z = DMatrix::from_fn(nr, order.len(), |i, j| eig.eigenvectors[(i, order[j])]);
    let vectors = c.transpose().solve_upper_triangular(&z).ok_or(Error::Eigen("singular mass factor"))?;
    Ok(Spectrum { values, vectors })
}

/// Lowest `k` generalised eigenvalues of `(L, mass)` with eigenvectors.
pub fn spectrum(a: &OperatorAssembly, k: usize) -> Result<Spectrum> {
    let mut s = generalized_spectrum(&a.l_mat, &a.mass)?;
    let k = k.min(s.values.len());
    s.values.truncate(k);
    s.vectors = s.vectors.columns(0, k).into_owned();
    Ok(s)
}

/// Smallest eigenvalue of `W_λ` on the mass-orthogonal complement of the
/// lowest eigenvector of `L`.
pub fn wlambda_coercivity(a: &OperatorAssembly) -> Result<f64> {
    let (_, wl) = reduce(&a.wlam_mat, &a.mass)?;
    let (_, l) = reduce(&a.l_mat, &a.mass)?;
    let eig = l.symmetric_eigen();
    let i0 = (0..eig.eigenvalues.len())
        .min_by(|a, b| eig.eigenvalues[*a].total_cmp(&eig.eigenvalues[*b]))
        .ok_or(Error::Eigen("empty basis"))?;
    let v0: DVector<f64> = eig.eigenvectors.column(i0).into_owned();
    // Householder reflection mapping v0 to ±e₁
    let n = v0.len();
    let mut w = v0.clone();
    let s = if w[0] >= 0.0 { 1.0 } else { -1.0 };
    w[0] += s * v0.norm();
    let wn = w.norm_squared();
    let h = DMatrix::<f64>::identity(n, n) - (&w * w.transpose()) * (2.0 / wn);
    let r = &h * wl * &h;
    let block = sym(&r.view((1, 1), (n - 1, n - 1)).into_owned());
    let ev = block.symmetric_eigenvalues();
    ev.iter().copied().fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.min(v)))).ok_or(Error::Eigen("empty complement"))
}

/// Functional whose first variation is checked.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(rename_all = "kebab-case"))]
pub enum Variation {
    Area,
    Willmore,
    U,
    V,
}

/// First variation of a functional along normal speed `α`, by formula.
pub fn first_variation(geom: &SurfaceGeometry, which: Variation, alpha: &[f64]) -> f64 {
    let d = geom.grid.derivs(alpha);
    let ops = Operators::new(geom);
    match which {
        Variation::Area => geom.integrate(&geom.nodes.iter().zip(alpha).map(|(g, a)| g.h * a).collect::<Vec<_>>()),
        Variation::Willmore => {
            let h = geom.mean_curvature();
            let lh = ops.apply_l(&h);
            geom.integrate(&(0..geom.len()).map(|n| (lh[n] + 0.5 * h[n].powi(3)) * alpha[n]).collect::<Vec<_>>())
        }
        Variation::U => {
            let f: Vec<f64> = (0..geom.len())
                .map(|n| {
                    let g = &geom.nodes[n];
                    let gi = &g.gamma_inv;
                    let hess = geom.hessian(&d, n);
                    -(2.0 * tensor_dot(gi, &g.a0, &hess)
                        + 2.0 * alpha[n] * tensor_dot(gi, &g.a0, &g.ric_t)
                        + alpha[n] * g.h * g.a0_norm2)
                })
                .collect();
            geom.integrate(&f)
        }
        Variation::V => {
            let f: Vec<f64> = (0..geom.len())
                .map(|n| {
                    let g = &geom.nodes[n];
                    let dnu_g = g.dnu_ric_nn - 0.5 * g.dnu_scalar;
                    let gnn = g.ric_nn - 0.5 * g.scalar_m;
                    // G(ν, ∇f) = ω(∇f) since g(ν, tangent) = 0
                    let om = covector_dot(&g.gamma_inv, &g.omega, &d.first(n));
                    2.0 * (alpha[n] * (dnu_g + g.h * gnn) - 2.0 * om)
                })
                .collect();
            geom.integrate(&f)
        }
    }
}

fn functional_value(geom: &SurfaceGeometry, which: Variation) -> f64 {
    let f = functionals(geom);
    match which {
        Variation::Area => f.area,
        Variation::Willmore => f.willmore,
        Variation::U => f.u_energy,
        Variation::V => f.v_energy,
    }
}

/// Outcome of a finite-difference comparison over a sweep of step sizes.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FdCheck {
    pub analytic: f64,
    pub steps: Vec<f64>,
    pub errors: Vec<f64>,
    /// Minimum relative error over the steps.
    pub rel_error: f64,
}

fn displaced(geom: &SurfaceGeometry, provider: &dyn MetricProvider, alpha: &[f64], s: f64) -> Result<SurfaceGeometry> {
    let nu: Vec<[f64; 3]> = geom.nodes.iter().map(|g| g.normal).collect();
    SurfaceGeometry::new(geom.embedding.displaced(alpha, &nu, s), provider)
}

/// Default step sweep relative to the surface size.
pub fn default_steps(geom: &SurfaceGeometry) -> Vec<f64> {
    let r = (geom.area() / (4.0 * PI)).sqrt();
    [1e-2, 3e-3, 1e-3, 3e-4, 1e-4].iter().map(|s| s * r * 1e-1).collect()
}

/// Central finite differences of a functional along `x + sαν` against
/// the first-variation formula.
pub fn variation_fd_check(
    geom: &SurfaceGeometry,
    provider: &dyn MetricProvider,
    which: Variation,
    alpha: &[f64],
    steps: &[f64],
) -> Result<FdCheck> {
    let analytic = first_variation(geom, which, alpha);
    let mut errors = Vec::with_capacity(steps.len());
    for &h in steps {
        let p = functional_value(&displaced(geom, provider, alpha, h)?, which);
        let m = functional_value(&displaced(geom, provider, alpha, -h)?, which);
        let fd = (p - m) / (2.0 * h);
        errors.push((fd - analytic).abs() / analytic.abs().max(f64::MIN_POSITIVE));
    }
    let rel_error = errors.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(FdCheck { analytic, steps: steps.to_vec(), errors, rel_error })
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

fn sup(a: &[f64]) -> f64 {
    a.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Pointwise finite-difference checks of `Lα` (for `H`) and `Wα` (for
/// `LH + ½H³`). Errors are sup-norm relative to the analytic field.
pub fn linearization_fd_check(
    geom: &SurfaceGeometry,
    provider: &dyn MetricProvider,
    alpha: &[f64],
    steps: &[f64],
) -> Result<(FdCheck, FdCheck)> {
    let ops = Operators::new(geom);
    let la = ops.apply_l(alpha);
    let wa = ops.apply_w(alpha);
    let field = |g: &SurfaceGeometry| -> (Vec<f64>, Vec<f64>) {
        let h = g.mean_curvature();
        let lh = Operators::new(g).apply_l(&h);
        let e = (0..g.len()).map(|n| lh[n] + 0.5 * h[n].powi(3)).collect();
        (h, e)
    };
    let (mut el, mut ew) = (Vec::new(), Vec::new());
    for &s in steps {
        let (hp, ep) = field(&displaced(geom, provider, alpha, s)?);
        let (hm, em) = field(&displaced(geom, provider, alpha, -s)?);
        let dh: Vec<f64> = hp.iter().zip(&hm).map(|(p, m)| (p - m) / (2.0 * s)).collect();
        let de: Vec<f64> = ep.iter().zip(&em).map(|(p, m)| (p - m) / (2.0 * s)).collect();
        el.push(sup_diff(&dh, &la) / sup(&la));
        ew.push(sup_diff(&de, &wa) / sup(&wa));
    }
    let mk = |errors: Vec<f64>, a: &[f64]| FdCheck {
        analytic: sup(a),
        steps: steps.to_vec(),
        rel_error: errors.iter().copied().fold(f64::INFINITY, f64::min),
        errors,
    };
    Ok((mk(el, &la), mk(ew, &wa)))
}

/// Finite-difference check of `d m_H / ds` against
/// `(16π)^{-3/2} · ½|Σ|^{-1/2} (∫Hα)(16π − 4λ|Σ| − ∫H²)`, valid on solutions.
pub fn hawking_variation_check(
    geom: &SurfaceGeometry,
    provider: &dyn MetricProvider,
    lambda: f64,
    alpha: &[f64],
    steps: &[f64],
) -> Result<FdCheck> {
    let f = functionals(geom);
    let hal = first_variation(geom, Variation::Area, alpha);
    let analytic = (16.0 * PI).powf(-1.5) * 0.5 / f.area.sqrt() * hal * (16.0 * PI - 4.0 * lambda * f.area - 2.0 * f.willmore);
    let mut errors = Vec::new();
    for &h in steps {
        let p = functionals(&displaced(geom, provider, alpha, h)?).hawking;
        let m = functionals(&displaced(geom, provider, alpha, -h)?).hawking;
        errors.push(((p - m) / (2.0 * h) - analytic).abs() / analytic.abs());
    }
    let rel_error = errors.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(FdCheck { analytic, steps: steps.to_vec(), errors, rel_error })
}

/// Relative residuals of the pointwise and integrated identities on one
/// surface.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IdentitySuite {
    pub gauss: f64,
    pub codazzi: f64,
    pub simons: f64,
    /// `|∫Sc^Σ dμ − 8π| / 8π`.
    pub gauss_bonnet: f64,
    /// `|∫g^e(b,ν^e)dμ^e| / (|b| |Σ|_e)` for a fixed oblique `b`.
    pub translation_flux: f64,
    /// `|W − U − V − 8π| / 8π`.
    pub integrated_gauss: f64,
}

impl IdentitySuite {
    pub const NAMES: [&'static str; 6] = ["gauss", "codazzi", "simons", "gauss_bonnet", "translation_flux", "integrated_gauss"];

    pub fn values(&self) -> [f64; 6] {
        [self.gauss, self.codazzi, self.simons, self.gauss_bonnet, self.translation_flux, self.integrated_gauss]
    }

    pub fn max(&self) -> f64 {
        self.values().iter().fold(0.0f64, |m, v| m.max(*v))
    }
}

pub fn identity_suite(geom: &SurfaceGeometry) -> Result<IdentitySuite> {
    let r = crate::surface::identity_residuals(geom, None)?.relative_sup();
    let sc: Vec<f64> = geom.nodes.iter().map(|n| n.scalar_sigma).collect();
    let b = [0.48, -0.6, 0.64];
    let area_e = geom.euclidean()?.area();
    let f = functionals(geom);
    Ok(IdentitySuite {
        gauss: r[0],
        codazzi: r[1],
        simons: r[2],
        gauss_bonnet: (geom.integrate(&sc) - 8.0 * PI).abs() / (8.0 * PI),
        translation_flux: crate::surface::translation_flux(geom, b)?.abs() / area_e,
        integrated_gauss: (f.willmore - f.u_energy - f.v_energy - 8.0 * PI).abs() / (8.0 * PI),
    })
}
