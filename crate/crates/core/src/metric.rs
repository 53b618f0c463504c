//! Ambient 3-metrics with analytic derivatives up to ∇Ric.
//!
//! Curvature convention: `R(∂_i,∂_j)∂_k = ∇_i∇_j∂_k − ∇_j∇_i∂_k`,
//! `Riem_{ijkl} = g(R(∂_i,∂_j)∂_k, ∂_l)` and `Ric_{il} = g^{jk} Riem_{ijkl}`,
//! so round spheres have positive Ricci curvature.

use crate::error::{Error, Result};
use crate::harmonics::irregular_solid;
use crate::jet::Jet3;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

pub type Mat3 = [[f64; 3]; 3];
pub type Tensor3 = [[[f64; 3]; 3]; 3];
pub type Tensor4 = [[[[f64; 3]; 3]; 3]; 3];

/// Mass parameter of the spatial Schwarzschild metric `φ⁴ g^e`, `φ = 1 + m/2r`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SchwarzschildParams {
    pub m: f64,
}

impl SchwarzschildParams {
    pub fn new(m: f64) -> Result<Self> {
        if !(m > 0.0) {
            return Err(Error::InvalidArgument(alloc::format!("mass must be positive, got {m}")));
        }
        Ok(SchwarzschildParams { m })
    }
}

/// Metric components and their coordinate derivatives up to third order.
/// `dg[a][i][j] = ∂_a g_ij`, `d2g[a][b][i][j] = ∂_a∂_b g_ij`, and so on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricTaylor {
    pub g: Mat3,
    pub dg: [Mat3; 3],
    pub d2g: [[Mat3; 3]; 3],
    pub d3g: [[[Mat3; 3]; 3]; 3],
}

impl MetricTaylor {
    /// Assemble from one jet per component (upper triangle mirrored).
    pub fn from_components(c: &[[Jet3; 3]; 3]) -> Self {
        let mut t = MetricTaylor {
            g: [[0.0; 3]; 3],
            dg: [[[0.0; 3]; 3]; 3],
            d2g: [[[[0.0; 3]; 3]; 3]; 3],
            d3g: [[[[[0.0; 3]; 3]; 3]; 3]; 3],
        };
        for i in 0..3 {
            for j in 0..3 {
                let e = if i <= j { &c[i][j] } else { &c[j][i] };
                t.g[i][j] = e.v;
                for a in 0..3 {
                    t.dg[a][i][j] = e.d1[a];
                    for b in 0..3 {
                        t.d2g[a][b][i][j] = e.d2[a][b];
                        for cc in 0..3 {
                            t.d3g[a][b][cc][i][j] = e.d3[a][b][cc];
                        }
                    }
                }
            }
        }
        t
    }

    /// Conformally flat data `ψ⁴ δ_ij`.
    pub fn conformal(psi: &Jet3) -> Self {
        let p4 = psi.powi(4);
        let z = Jet3::constant(0.0);
        Self::from_components(&[[p4, z, z], [z, p4, z], [z, z, p4]])
    }

    /// `(1 − t)·a + t·b` for every stored component.
    pub fn lerp(a: &Self, b: &Self, t: f64) -> Self {
        let mut out = *a;
        let s = 1.0 - t;
        for i in 0..3 {
            for j in 0..3 {
                out.g[i][j] = s * a.g[i][j] + t * b.g[i][j];
                for p in 0..3 {
                    out.dg[p][i][j] = s * a.dg[p][i][j] + t * b.dg[p][i][j];
                    for q in 0..3 {
                        out.d2g[p][q][i][j] = s * a.d2g[p][q][i][j] + t * b.d2g[p][q][i][j];
                        for r in 0..3 {
                            out.d3g[p][q][r][i][j] = s * a.d3g[p][q][r][i][j] + t * b.d3g[p][q][r][i][j];
                        }
                    }
                }
            }
        }
        out
    }
}

/// Pointwise ambient geometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricJet {
    pub g: Mat3,
    pub g_inv: Mat3,
    /// `christoffel[k][i][j] = Γ^k_ij`.
    pub christoffel: Tensor3,
    pub riemann: Tensor4,
    pub ricci: Mat3,
    /// `nabla_ricci[a][i][j] = (∇_a Ric)_ij`.
    pub nabla_ricci: Tensor3,
    pub scalar: f64,
    pub taylor: MetricTaylor,
}

pub(crate) fn det3(m: &Mat3) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

pub(crate) fn inv3(m: &Mat3) -> Option<Mat3> {
    let d = det3(m);
    if !(d.abs() > 0.0) || !d.is_finite() {
        return None;
    }
    let mut r = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let (a, b) = ((j + 1) % 3, (j + 2) % 3);
            let (c, e) = ((i + 1) % 3, (i + 2) % 3);
            r[i][j] = (m[a][c] * m[b][e] - m[a][e] * m[b][c]) / d;
        }
    }
    Some(r)
}

fn positive_definite(m: &Mat3) -> bool {
    m[0][0] > 0.0 && m[0][0] * m[1][1] - m[0][1] * m[1][0] > 0.0 && det3(m) > 0.0
}

fn mat_mul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut r = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            r[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    r
}

/// Riemann tensor of a 3-manifold from its Ricci tensor.
pub fn riemann_from_ricci(jet: &MetricJet) -> Tensor4 {
    let (g, ric, sc) = (&jet.g, &jet.ricci, jet.scalar);
    let mut r = [[[[0.0; 3]; 3]; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                for l in 0..3 {
                    r[i][j][k][l] = ric[i][l] * g[j][k] - ric[i][k] * g[j][l] - ric[j][l] * g[i][k]
                        + ric[j][k] * g[i][l]
                        - 0.5 * sc * (g[i][l] * g[j][k] - g[i][k] * g[j][l]);
                }
            }
        }
    }
    r
}

impl MetricJet {
    /// Curvature of a general metric from its third-order Taylor data.
    pub fn from_taylor(t: MetricTaylor) -> Result<Self> {
        if !positive_definite(&t.g) {
            return Err(Error::NotPositiveDefinite);
        }
        let gi = inv3(&t.g).ok_or(Error::NotPositiveDefinite)?;
        let mut dgi = [[[0.0; 3]; 3]; 3];
        for a in 0..3 {
            let m = mat_mul(&mat_mul(&gi, &t.dg[a]), &gi);
            for i in 0..3 {
                for j in 0..3 {
                    dgi[a][i][j] = -m[i][j];
                }
            }
        }
        let mut d2gi = [[[[0.0; 3]; 3]; 3]; 3];
        for a in 0..3 {
            for b in 0..3 {
                let m1 = mat_mul(&mat_mul(&dgi[b], &t.dg[a]), &gi);
                let m2 = mat_mul(&mat_mul(&gi, &t.d2g[a][b]), &gi);
                let m3 = mat_mul(&mat_mul(&gi, &t.dg[a]), &dgi[b]);
                for i in 0..3 {
                    for j in 0..3 {
                        d2gi[a][b][i][j] = -(m1[i][j] + m2[i][j] + m3[i][j]);
                    }
                }
            }
        }
        // first-kind symbols Γ_{l,ij} and derivatives
        let mut c1 = [[[0.0; 3]; 3]; 3];
        let mut dc1 = [[[[0.0; 3]; 3]; 3]; 3];
        let mut d2c1 = [[[[[0.0; 3]; 3]; 3]; 3]; 3];
        for l in 0..3 {
            for i in 0..3 {
                for j in 0..3 {
                    c1[l][i][j] = 0.5 * (t.dg[i][j][l] + t.dg[j][i][l] - t.dg[l][i][j]);
                    for a in 0..3 {
                        dc1[a][l][i][j] = 0.5 * (t.d2g[a][i][j][l] + t.d2g[a][j][i][l] - t.d2g[a][l][i][j]);
                        for b in 0..3 {
                            d2c1[a][b][l][i][j] =
                                0.5 * (t.d3g[a][b][i][j][l] + t.d3g[a][b][j][i][l] - t.d3g[a][b][l][i][j]);
                        }
                    }
                }
            }
        }
        let mut gam = [[[0.0; 3]; 3]; 3];
        let mut dgam = [[[[0.0; 3]; 3]; 3]; 3];
        let mut d2gam = [[[[[0.0; 3]; 3]; 3]; 3]; 3];
        for k in 0..3 {
            for i in 0..3 {
                for j in 0..3 {
                    let mut s = 0.0;
                    for l in 0..3 {
                        s += gi[k][l] * c1[l][i][j];
                    }
                    gam[k][i][j] = s;
                    for a in 0..3 {
                        let mut s = 0.0;
                        for l in 0..3 {
                            s += dgi[a][k][l] * c1[l][i][j] + gi[k][l] * dc1[a][l][i][j];
                        }
                        dgam[a][k][i][j] = s;
                        for b in 0..3 {
                            let mut s = 0.0;
                            for l in 0..3 {
                                s += d2gi[a][b][k][l] * c1[l][i][j]
                                    + dgi[a][k][l] * dc1[b][l][i][j]
                                    + dgi[b][k][l] * dc1[a][l][i][j]
                                    + gi[k][l] * d2c1[a][b][l][i][j];
                            }
                            d2gam[a][b][k][i][j] = s;
                        }
                    }
                }
            }
        }
        let mut ric = [[0.0; 3]; 3];
        let mut dric = [[[0.0; 3]; 3]; 3];
        for j in 0..3 {
            for k in 0..3 {
                let mut s = 0.0;
                for i in 0..3 {
                    s += dgam[i][i][j][k] - dgam[j][i][i][k];
                    for p in 0..3 {
                        s += gam[i][i][p] * gam[p][j][k] - gam[i][j][p] * gam[p][i][k];
                    }
                }
                ric[j][k] = s;
                for a in 0..3 {
                    let mut s = 0.0;
                    for i in 0..3 {
                        s += d2gam[a][i][i][j][k] - d2gam[a][j][i][i][k];
                        for p in 0..3 {
                            s += dgam[a][i][i][p] * gam[p][j][k] + gam[i][i][p] * dgam[a][p][j][k]
                                - dgam[a][i][j][p] * gam[p][i][k]
                                - gam[i][j][p] * dgam[a][p][i][k];
                        }
                    }
                    dric[a][j][k] = s;
                }
            }
        }
        Ok(Self::finish(t, gi, gam, ric, dric))
    }

    /// Fast path for `g = ψ⁴ δ` with `ψ` supplied to third order.
    pub fn conformally_flat(psi: &Jet3) -> Result<Self> {
        if !(psi.v > 0.0) {
            return Err(Error::NotPositiveDefinite);
        }
        let f = psi.ln().scale(2.0);
        let p4 = psi.v.powi(4);
        let mut gi = [[0.0; 3]; 3];
        let mut gam = [[[0.0; 3]; 3]; 3];
        for i in 0..3 {
            gi[i][i] = 1.0 / p4;
        }
        for k in 0..3 {
            for i in 0..3 {
                for j in 0..3 {
                    let mut s = 0.0;
                    if k == i {
                        s += f.d1[j];
                    }
                    if k == j {
                        s += f.d1[i];
                    }
                    if i == j {
                        s -= f.d1[k];
                    }
                    gam[k][i][j] = s;
                }
            }
        }
        let lap = f.laplacian();
        let grad2: f64 = f.d1.iter().map(|x| x * x).sum();
        let mut ric = [[0.0; 3]; 3];
        let mut dric = [[[0.0; 3]; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                ric[i][j] = -(f.d2[i][j] - f.d1[i] * f.d1[j]) - if i == j { lap + grad2 } else { 0.0 };
                for a in 0..3 {
                    let dlap: f64 = (0..3).map(|k| f.d3[k][k][a]).sum();
                    let dgrad2: f64 = (0..3).map(|k| 2.0 * f.d1[k] * f.d2[k][a]).sum();
                    dric[a][i][j] = -(f.d3[a][i][j] - f.d2[a][i] * f.d1[j] - f.d1[i] * f.d2[a][j])
                        - if i == j { dlap + dgrad2 } else { 0.0 };
                }
            }
        }
        Ok(Self::finish(MetricTaylor::conformal(psi), gi, gam, ric, dric))
    }

    fn finish(t: MetricTaylor, gi: Mat3, gam: Tensor3, ric: Mat3, dric: Tensor3) -> Self {
        let mut nric = [[[0.0; 3]; 3]; 3];
        for a in 0..3 {
            for i in 0..3 {
                for j in 0..3 {
                    let mut s = dric[a][i][j];
                    for p in 0..3 {
                        s -= gam[p][a][i] * ric[p][j] + gam[p][a][j] * ric[i][p];
                    }
                    nric[a][i][j] = s;
                }
            }
        }
        let mut scalar = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                scalar += gi[i][j] * ric[i][j];
            }
        }
        let mut jet = MetricJet {
            g: t.g,
            g_inv: gi,
            christoffel: gam,
            riemann: [[[[0.0; 3]; 3]; 3]; 3],
            ricci: ric,
            nabla_ricci: nric,
            scalar,
            taylor: t,
        };
        jet.riemann = riemann_from_ricci(&jet);
        jet
    }

    /// `g(u, v)`.
    pub fn dot(&self, u: &[f64; 3], v: &[f64; 3]) -> f64 {
        let mut s = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                s += self.g[i][j] * u[i] * v[j];
            }
        }
        s
    }

    /// `∇_a Sc = g^{ij} ∇_a Ric_ij`.
    pub fn scalar_gradient(&self) -> [f64; 3] {
        let mut d = [0.0; 3];
        for (a, da) in d.iter_mut().enumerate() {
            for i in 0..3 {
                for j in 0..3 {
                    *da += self.g_inv[i][j] * self.nabla_ricci[a][i][j];
                }
            }
        }
        d
    }

    /// Einstein tensor `Ric − ½ Sc g`.
    pub fn einstein(&self) -> Mat3 {
        let mut e = self.ricci;
        for i in 0..3 {
            for j in 0..3 {
                e[i][j] -= 0.5 * self.scalar * self.g[i][j];
            }
        }
        e
    }

    /// Divergence `g^{ai} ∇_a G_ij` of the Einstein tensor (zero by Bianchi).
    pub fn einstein_divergence(&self) -> [f64; 3] {
        let ds = self.scalar_gradient();
        let mut out = [0.0; 3];
        for (j, o) in out.iter_mut().enumerate() {
            for a in 0..3 {
                for i in 0..3 {
                    *o += self.g_inv[a][i] * (self.nabla_ricci[a][i][j] - 0.5 * ds[a] * self.g[i][j]);
                }
            }
        }
        out
    }
}

fn norm(x: &[f64; 3]) -> f64 {
    (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()
}

/// `φ = 1 + m/(2|x|)` and its Euclidean gradient `−(m/2r²)ρ`.
pub fn conformal_factor(m: f64, x: [f64; 3]) -> Result<(f64, [f64; 3])> {
    let r = norm(&x);
    if !(r > 0.0) {
        return Err(Error::Domain(x, "origin"));
    }
    let c = -m / (2.0 * r * r * r);
    Ok((1.0 + m / (2.0 * r), [c * x[0], c * x[1], c * x[2]]))
}

fn schwarzschild_psi(m: f64, x: [f64; 3]) -> Result<Jet3> {
    if !(norm(&x) > 0.0) {
        return Err(Error::Domain(x, "origin"));
    }
    let [jx, jy, jz] = Jet3::coordinates(x);
    let r2 = jx * jx + jy * jy + jz * jz;
    Ok(r2.powf(-0.5).scale(0.5 * m) + 1.0)
}

/// Spatial Schwarzschild metric at `x`.
pub fn schwarzschild_jet(params: SchwarzschildParams, x: [f64; 3]) -> Result<MetricJet> {
    MetricJet::conformally_flat(&schwarzschild_psi(params.m, x)?)
}

/// Family of perturbations of Schwarzschild used as test metrics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum PerturbationKind {
    ExactSchwarzschild,
    ConformalHarmonic,
    TensorPerturbation,
}

/// One decaying harmonic `coeff · r^{-(l+1)} Y_{l,order}` in the conformal factor.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Multipole {
    pub degree: usize,
    pub order: i32,
    pub coeff: f64,
}

/// Smooth symmetric tensor bump `B · w² / (w² + |x − c|²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TensorProfile {
    pub amplitude: Mat3,
    pub center: [f64; 3],
    pub width: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PerturbationSpec {
    pub kind: PerturbationKind,
    pub eta: f64,
    #[cfg_attr(feature = "serde", serde(default))]
    pub multipoles: Vec<Multipole>,
    #[cfg_attr(feature = "serde", serde(default))]
    pub tensor_profile: Option<TensorProfile>,
}

impl PerturbationSpec {
    pub fn exact() -> Self {
        PerturbationSpec { kind: PerturbationKind::ExactSchwarzschild, eta: 0.0, multipoles: Vec::new(), tensor_profile: None }
    }

    pub fn conformal_harmonic(eta: f64, multipoles: Vec<Multipole>) -> Self {
        PerturbationSpec { kind: PerturbationKind::ConformalHarmonic, eta, multipoles, tensor_profile: None }
    }

    pub fn tensor(eta: f64, profile: TensorProfile) -> Self {
        PerturbationSpec { kind: PerturbationKind::TensorPerturbation, eta, multipoles: Vec::new(), tensor_profile: Some(profile) }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |s: alloc::string::String| Err(Error::InvalidArgument(s));
        if !(self.eta >= 0.0) || !self.eta.is_finite() {
            return bad(alloc::format!("eta must be non-negative, got {}", self.eta));
        }
        match self.kind {
            PerturbationKind::ExactSchwarzschild if self.eta != 0.0 => {
                return bad("exact-schwarzschild requires eta = 0".into());
            }
            PerturbationKind::TensorPerturbation => match &self.tensor_profile {
                None => return bad("tensor-perturbation requires a tensor_profile".into()),
                Some(p) => {
                    if !(p.width > 0.0) {
                        return bad("tensor profile width must be positive".into());
                    }
                    for i in 0..3 {
                        for j in 0..3 {
                            if p.amplitude[i][j] != p.amplitude[j][i] {
                                return bad("tensor profile amplitude must be symmetric".into());
                            }
                        }
                    }
                }
            },
            _ => {}
        }
        for mp in &self.multipoles {
            if mp.degree == 0 || mp.order.unsigned_abs() as usize > mp.degree {
                return bad(alloc::format!("invalid multipole (l={}, m={})", mp.degree, mp.order));
            }
        }
        Ok(())
    }

    /// Conformal factor `ψ = φ + η Σ c r^{-(l+1)} Y_lm` as a jet.
    fn psi(&self, m: f64, x: [f64; 3]) -> Result<Jet3> {
        let mut psi = schwarzschild_psi(m, x)?;
        if self.kind == PerturbationKind::ConformalHarmonic {
            for mp in &self.multipoles {
                psi = psi + irregular_solid(mp.degree, mp.order, x).scale(self.eta * mp.coeff);
            }
        }
        if !(psi.v > 0.0) {
            return Err(Error::Domain(x, "conformal factor is not positive"));
        }
        Ok(psi)
    }
}

/// Metric of the perturbation family at `x`.
pub fn perturbed_jet(spec: &PerturbationSpec, m: f64, x: [f64; 3]) -> Result<MetricJet> {
    let psi = spec.psi(m, x)?;
    match (spec.kind, &spec.tensor_profile) {
        (PerturbationKind::TensorPerturbation, Some(p)) => {
            let mut t = MetricTaylor::conformal(&psi);
            let h = tensor_bump(p, x);
            for i in 0..3 {
                for j in 0..3 {
                    let b = p.amplitude[i][j] * spec.eta;
                    t.g[i][j] += b * h.v;
                    for a in 0..3 {
                        t.dg[a][i][j] += b * h.d1[a];
                        for c in 0..3 {
                            t.d2g[a][c][i][j] += b * h.d2[a][c];
                            for e in 0..3 {
                                t.d3g[a][c][e][i][j] += b * h.d3[a][c][e];
                            }
                        }
                    }
                }
            }
            MetricJet::from_taylor(t).map_err(|_| Error::Domain(x, "perturbed metric is not positive definite"))
        }
        _ => MetricJet::conformally_flat(&psi),
    }
}

fn tensor_bump(p: &TensorProfile, x: [f64; 3]) -> Jet3 {
    let [jx, jy, jz] = Jet3::coordinates([x[0] - p.center[0], x[1] - p.center[1], x[2] - p.center[2]]);
    let w2 = p.width * p.width;
    ((jx * jx + jy * jy + jz * jz) + w2).recip().scale(w2)
}

/// Jet of `(1 − t) g_a + t g_b`, with curvature recomputed from the
/// interpolated metric derivatives.
pub fn homotopy_jet(a: &MetricJet, b: &MetricJet, t: f64) -> Result<MetricJet> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::InvalidArgument(alloc::format!("homotopy parameter {t} outside [0, 1]")));
    }
    if t == 0.0 {
        return Ok(*a);
    }
    if t == 1.0 {
        return Ok(*b);
    }
    MetricJet::from_taylor(MetricTaylor::lerp(&a.taylor, &b.taylor, t))
}

/// Source of ambient geometry for surfaces.
pub trait MetricProvider: Sync {
    fn jet(&self, x: [f64; 3]) -> Result<MetricJet>;
    /// Mass of the Schwarzschild background the metric is compared against.
    fn mass(&self) -> f64;
}

/// Euclidean space.
#[derive(Debug, Clone, Copy, Default)]
pub struct Flat;

impl MetricProvider for Flat {
    fn jet(&self, _x: [f64; 3]) -> Result<MetricJet> {
        MetricJet::conformally_flat(&Jet3::constant(1.0))
    }
    fn mass(&self) -> f64 {
        0.0
    }
}

impl MetricProvider for SchwarzschildParams {
    fn jet(&self, x: [f64; 3]) -> Result<MetricJet> {
        schwarzschild_jet(*self, x)
    }
    fn mass(&self) -> f64 {
        self.m
    }
}

/// Schwarzschild mass plus a perturbation specification.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbedMetric {
    pub m: f64,
    pub spec: PerturbationSpec,
}

impl PerturbedMetric {
    pub fn new(m: f64, spec: PerturbationSpec) -> Result<Self> {
        SchwarzschildParams::new(m)?;
        spec.validate()?;
        Ok(PerturbedMetric { m, spec })
    }
}

impl MetricProvider for PerturbedMetric {
    fn jet(&self, x: [f64; 3]) -> Result<MetricJet> {
        perturbed_jet(&self.spec, self.m, x)
    }
    fn mass(&self) -> f64 {
        self.m
    }
}

/// Linear path `g_t = (1 − t) g_start + t g_end`.
pub struct Homotopy<'a> {
    pub start: &'a dyn MetricProvider,
    pub end: &'a dyn MetricProvider,
    pub t: f64,
}

impl MetricProvider for Homotopy<'_> {
    fn jet(&self, x: [f64; 3]) -> Result<MetricJet> {
        if self.t == 0.0 {
            return self.start.jet(x);
        }
        if self.t == 1.0 {
            return self.end.jet(x);
        }
        homotopy_jet(&self.start.jet(x)?, &self.end.jet(x)?, self.t)
    }
    fn mass(&self) -> f64 {
        (1.0 - self.t) * self.start.mass() + self.t * self.end.mass()
    }
}

/// Weighted deviations from Schwarzschild as in the decay definition.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EtaEstimate {
    pub metric: f64,
    pub christoffel: f64,
    pub ricci: f64,
    pub nabla_ricci: f64,
    pub max: f64,
}

/// Sup over `radii × directions` of `r²|g−g^S|`, `r³|Γ−Γ^S|`, `r⁴|Ric−Ric^S|`
/// and `r⁵|∇Ric−∇^S Ric^S|` in the Cartesian componentwise max norm.
pub fn measure_eta(spec: &PerturbationSpec, m: f64, radii: &[f64], directions: &[[f64; 3]]) -> Result<EtaEstimate> {
    let mut e = EtaEstimate::default();
    let params = SchwarzschildParams { m };
    for &r in radii {
        if !(r > 0.0) {
            return Err(Error::InvalidArgument(alloc::format!("sample radius must be positive, got {r}")));
        }
        for d in directions {
            let n = norm(d);
            let x = [r * d[0] / n, r * d[1] / n, r * d[2] / n];
            let a = perturbed_jet(spec, m, x)?;
            let b = schwarzschild_jet(params, x)?;
            let mut dg: f64 = 0.0;
            let mut dr: f64 = 0.0;
            let mut dc: f64 = 0.0;
            let mut dn: f64 = 0.0;
            for i in 0..3 {
                for j in 0..3 {
                    dg = dg.max((a.g[i][j] - b.g[i][j]).abs());
                    dr = dr.max((a.ricci[i][j] - b.ricci[i][j]).abs());
                    for k in 0..3 {
                        dc = dc.max((a.christoffel[k][i][j] - b.christoffel[k][i][j]).abs());
                        dn = dn.max((a.nabla_ricci[k][i][j] - b.nabla_ricci[k][i][j]).abs());
                    }
                }
            }
            e.metric = e.metric.max(r * r * dg);
            e.christoffel = e.christoffel.max(r.powi(3) * dc);
            e.ricci = e.ricci.max(r.powi(4) * dr);
            e.nabla_ricci = e.nabla_ricci.max(r.powi(5) * dn);
        }
    }
    e.max = e.metric.max(e.christoffel).max(e.ricci).max(e.nabla_ricci);
    Ok(e)
}
