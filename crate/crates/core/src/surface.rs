//! Closed star-shaped surfaces as radial graphs over the unit sphere and
//! their extrinsic and intrinsic geometry in an ambient metric.
//!
//! Chart indices are `0 = θ` (colatitude) and `1 = φ` (longitude) of the
//! reference sphere. The outward normal `ν` is unit for the ambient metric,
//! `A(X, Y) = g(∇_X ν, Y)`, so round spheres have `H > 0`.

use crate::error::{Error, Result};
use crate::harmonics::sh_count;
use crate::metric::{Mat3, MetricProvider};
use crate::spectral::{ChartDerivs, QuadratureGrid};
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::f64::consts::PI;
#[allow(unused_imports)]
use num_traits::Float;

pub type Mat2 = [[f64; 2]; 2];

pub(crate) fn inv2(m: &Mat2) -> Option<Mat2> {
    let d = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    if !(d > 0.0) || !d.is_finite() {
        return None;
    }
    Some([[m[1][1] / d, -m[0][1] / d], [-m[1][0] / d, m[0][0] / d]])
}

/// `⟨S, T⟩ = γ^{ik} γ^{jl} S_ij T_kl`.
pub fn tensor_dot(gi: &Mat2, s: &Mat2, t: &Mat2) -> f64 {
    let mut v = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    v += gi[i][k] * gi[j][l] * s[i][j] * t[k][l];
                }
            }
        }
    }
    v
}

/// `γ^{ij} a_i b_j`.
pub fn covector_dot(gi: &Mat2, a: &[f64; 2], b: &[f64; 2]) -> f64 {
    let mut v = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            v += gi[i][j] * a[i] * b[j];
        }
    }
    v
}

fn dot3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn bilinear(m: &Mat3, u: &[f64; 3], v: &[f64; 3]) -> f64 {
    let mut s = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            s += m[i][j] * u[i] * v[j];
        }
    }
    s
}

/// Requested radial shape about the graph center.
#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    Sphere(f64),
    /// Semi-axes along the coordinate directions.
    Ellipsoid([f64; 3]),
    /// Real spherical-harmonic coefficients of the radius function.
    Coefficients(Vec<f64>),
}

/// Surface `x(ω) = center + u(ω) ω` with `u` band-limited to `grid.bandlimit`.
#[derive(Debug, Clone)]
pub struct RadialGraph {
    pub center: [f64; 3],
    pub coeffs: Vec<f64>,
    pub grid: Arc<QuadratureGrid>,
}

/// Smallest bandlimit accepted for graphs.
pub const MIN_BANDLIMIT: usize = 8;

/// Build a radial graph on a fresh grid of bandlimit `l`.
pub fn build_graph(center: [f64; 3], shape: &Shape, l: usize) -> Result<RadialGraph> {
    if l < MIN_BANDLIMIT {
        return Err(Error::InvalidArgument(alloc::format!("bandlimit must be at least {MIN_BANDLIMIT}, got {l}")));
    }
    build_graph_on(Arc::new(QuadratureGrid::new(l)), center, shape)
}

/// Build a radial graph on an existing grid.
pub fn build_graph_on(grid: Arc<QuadratureGrid>, center: [f64; 3], shape: &Shape) -> Result<RadialGraph> {
    let l = grid.bandlimit;
    if l < MIN_BANDLIMIT {
        return Err(Error::InvalidArgument(alloc::format!("bandlimit must be at least {MIN_BANDLIMIT}, got {l}")));
    }
    let coeffs = match shape {
        Shape::Sphere(r) => {
            if !(*r > 0.0) {
                return Err(Error::InvalidArgument(alloc::format!("sphere radius must be positive, got {r}")));
            }
            let mut c = alloc::vec![0.0; sh_count(l)];
            c[0] = r * (4.0 * PI).sqrt();
            c
        }
        Shape::Ellipsoid(ax) => {
            if ax.iter().any(|a| !(*a > 0.0)) {
                return Err(Error::InvalidArgument(alloc::format!("ellipsoid axes must be positive, got {ax:?}")));
            }
            let u: Vec<f64> = grid
                .directions
                .iter()
                .map(|w| 1.0 / ((w[0] / ax[0]).powi(2) + (w[1] / ax[1]).powi(2) + (w[2] / ax[2]).powi(2)).sqrt())
                .collect();
            grid.analyze(&u, l)
        }
        Shape::Coefficients(c) => {
            if c.len() != sh_count(l) {
                return Err(Error::InvalidArgument(alloc::format!(
                    "expected {} coefficients for bandlimit {l}, got {}",
                    sh_count(l),
                    c.len()
                )));
            }
            c.clone()
        }
    };
    let g = RadialGraph { center, coeffs, grid };
    g.validate()?;
    Ok(g)
}

impl RadialGraph {
    pub fn bandlimit(&self) -> usize {
        self.grid.bandlimit
    }

    /// Radius function at the nodes.
    pub fn radii(&self) -> Vec<f64> {
        self.grid.synthesize(&self.coeffs)
    }

    pub fn validate(&self) -> Result<()> {
        if self.coeffs.len() != sh_count(self.grid.bandlimit) {
            return Err(Error::InvalidArgument("coefficient vector does not match the grid bandlimit".into()));
        }
        if self.coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument("radial coefficients must be finite".into()));
        }
        if let Some(i) = self.radii().iter().position(|u| !(*u > 0.0)) {
            return Err(Error::InvalidArgument(alloc::format!("graph is not star-shaped at node {i}")));
        }
        Ok(())
    }

    pub fn with_coeffs(&self, coeffs: Vec<f64>) -> RadialGraph {
        RadialGraph { center: self.center, coeffs, grid: self.grid.clone() }
    }

    /// Embedding with exact chart derivatives of `center + u ω`.
    pub fn embedding(&self) -> Embedding {
        let grid = &self.grid;
        let d = grid.synthesize_derivs(&self.coeffs);
        let n = grid.len();
        let mut x = Vec::with_capacity(n);
        let mut dx = Vec::with_capacity(n);
        let mut ddx = Vec::with_capacity(n);
        for node in 0..n {
            let f = grid.frame(node);
            let u = d.v[node];
            let du = [d.t[node], d.p[node]];
            let ddu = d.second(node);
            let mut p = [0.0; 3];
            let mut t = [[0.0; 3]; 2];
            let mut tt = [[[0.0; 3]; 2]; 2];
            for c in 0..3 {
                p[c] = self.center[c] + u * f.w[c];
                for i in 0..2 {
                    t[i][c] = du[i] * f.w[c] + u * f.d1[i][c];
                    for j in 0..2 {
                        tt[i][j][c] = ddu[i][j] * f.w[c] + du[i] * f.d1[j][c] + du[j] * f.d1[i][c] + u * f.d2[i][j][c];
                    }
                }
            }
            x.push(p);
            dx.push(t);
            ddx.push(tt);
        }
        Embedding { grid: grid.clone(), x, dx, ddx }
    }
}

/// Nodal positions of a parametrised sphere and their chart derivatives.
#[derive(Debug, Clone)]
pub struct Embedding {
    pub grid: Arc<QuadratureGrid>,
    pub x: Vec<[f64; 3]>,
    pub dx: Vec<[[f64; 3]; 2]>,
    pub ddx: Vec<[[[f64; 3]; 2]; 2]>,
}

impl Embedding {
    /// Embedding from nodal positions; components are projected to the
    /// transform degree and differentiated spectrally.
    pub fn from_points(grid: Arc<QuadratureGrid>, points: Vec<[f64; 3]>) -> Embedding {
        let n = grid.len();
        let comps: Vec<ChartDerivs> =
            (0..3).map(|c| grid.derivs(&points.iter().map(|p| p[c]).collect::<Vec<_>>())).collect();
        let mut x = Vec::with_capacity(n);
        let mut dx = Vec::with_capacity(n);
        let mut ddx = Vec::with_capacity(n);
        for node in 0..n {
            let mut p = [0.0; 3];
            let mut t = [[0.0; 3]; 2];
            let mut tt = [[[0.0; 3]; 2]; 2];
            for c in 0..3 {
                let d = &comps[c];
                p[c] = d.v[node];
                t[0][c] = d.t[node];
                t[1][c] = d.p[node];
                tt[0][0][c] = d.tt[node];
                tt[0][1][c] = d.tp[node];
                tt[1][0][c] = d.tp[node];
                tt[1][1][c] = d.pp[node];
            }
            x.push(p);
            dx.push(t);
            ddx.push(tt);
        }
        Embedding { grid, x, dx, ddx }
    }

    /// `x + s·f·v` at every node, re-differentiated spectrally.
    pub fn displaced(&self, f: &[f64], v: &[[f64; 3]], s: f64) -> Embedding {
        let pts = self
            .x
            .iter()
            .zip(f)
            .zip(v)
            .map(|((x, f), v)| [x[0] + s * f * v[0], x[1] + s * f * v[1], x[2] + s * f * v[2]])
            .collect();
        Embedding::from_points(self.grid.clone(), pts)
    }

    /// Euclidean area element per unit solid angle at each node.
    pub fn euclidean_density(&self) -> Vec<f64> {
        (0..self.x.len())
            .map(|n| {
                let c = cross(&self.dx[n][0], &self.dx[n][1]);
                dot3(&c, &c).sqrt() / self.grid.sin_theta[self.grid.ring(n)]
            })
            .collect()
    }
}

/// Geometry at a single node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeGeometry {
    pub position: [f64; 3],
    pub tangents: [[f64; 3]; 2],
    pub gamma: Mat2,
    pub gamma_inv: Mat2,
    /// Area element per unit solid angle of the reference sphere.
    pub area_density: f64,
    pub normal: [f64; 3],
    pub a: Mat2,
    pub a0: Mat2,
    pub h: f64,
    pub a_norm2: f64,
    pub a0_norm2: f64,
    /// `Ric(ν, ∂_i)`.
    pub omega: [f64; 2],
    pub ric_nn: f64,
    /// `Ric(∂_i, ∂_j)`.
    pub ric_t: Mat2,
    /// `Ric^T + G(ν,ν) γ`, equal to `Riem(∂_i, ν, ν, ∂_j)`.
    pub t: Mat2,
    pub scalar_sigma: f64,
    pub scalar_m: f64,
    /// `(∇_ν Ric)(ν, ν)`.
    pub dnu_ric_nn: f64,
    /// `dSc(ν)`.
    pub dnu_scalar: f64,
    /// Surface Christoffel symbols `Γ^k_ij` as `[k][i][j]`.
    pub christoffel: [Mat2; 2],
    pub dh: [f64; 2],
    /// Covariant Hessian of `H`.
    pub hess_h: Mat2,
    pub lap_h: f64,
    /// Ambient Ricci and metric components, kept for tensor contractions.
    pub ricci: Mat3,
    pub metric: Mat3,
}

/// Geometry of an embedded sphere at every node of its grid.
#[derive(Debug, Clone)]
pub struct SurfaceGeometry {
    pub grid: Arc<QuadratureGrid>,
    pub embedding: Embedding,
    pub nodes: Vec<NodeGeometry>,
    /// Chart derivatives of the metric components `γ_ij`: `[k][i][j]` and `[k][l][i][j]`.
    pub dgamma: Vec<[Mat2; 2]>,
    pub ddgamma: Vec<[[Mat2; 2]; 2]>,
}

/// Geometry of a radial graph.
pub fn geometry(graph: &RadialGraph, provider: &dyn MetricProvider) -> Result<SurfaceGeometry> {
    graph.validate()?;
    SurfaceGeometry::new(graph.embedding(), provider)
}

/// Chart derivatives of a symmetric 2-tensor field via its Cartesian
/// extension `P = T_ij e^i ⊗ e^j`, whose components are smooth on S².
pub fn tensor_chart_derivs(grid: &QuadratureGrid, t: &[Mat2]) -> (Vec<[Mat2; 2]>, Vec<[[Mat2; 2]; 2]>) {
    let n = grid.len();
    let pairs = [(0usize, 0usize), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)];
    let mut comp = alloc::vec![alloc::vec![0.0; n]; 6];
    for node in 0..n {
        let f = grid.frame(node);
        let e = f.coframe(grid.sin_theta[grid.ring(node)]);
        for (q, &(a, b)) in pairs.iter().enumerate() {
            let mut s = 0.0;
            for i in 0..2 {
                for j in 0..2 {
                    s += t[node][i][j] * e[i][a] * e[j][b];
                }
            }
            comp[q][node] = s;
        }
    }
    let d: Vec<ChartDerivs> = comp.iter().map(|c| grid.derivs(c)).collect();
    let mut d1 = Vec::with_capacity(n);
    let mut d2 = Vec::with_capacity(n);
    for node in 0..n {
        let f = grid.frame(node);
        let mut p = [[0.0; 3]; 3];
        let mut pk = [[[0.0; 3]; 3]; 2];
        let mut pkl = [[[[0.0; 3]; 3]; 2]; 2];
        for (q, &(a, b)) in pairs.iter().enumerate() {
            let dq = &d[q];
            let vals = [dq.v[node], dq.t[node], dq.p[node], dq.tt[node], dq.tp[node], dq.pp[node]];
            for (x, y) in [(a, b), (b, a)] {
                p[x][y] = vals[0];
                pk[0][x][y] = vals[1];
                pk[1][x][y] = vals[2];
                pkl[0][0][x][y] = vals[3];
                pkl[0][1][x][y] = vals[4];
                pkl[1][0][x][y] = vals[4];
                pkl[1][1][x][y] = vals[5];
            }
        }
        let w1 = &f.d1;
        let w2 = &f.d2;
        let w3 = &f.d3;
        let mut t1 = [[[0.0; 2]; 2]; 2];
        let mut t2 = [[[[0.0; 2]; 2]; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    t1[k][i][j] = bilinear(&p, &w2[i][k], &w1[j])
                        + bilinear(&pk[k], &w1[i], &w1[j])
                        + bilinear(&p, &w1[i], &w2[j][k]);
                    for l in 0..2 {
                        t2[k][l][i][j] = bilinear(&p, &w3[i][k][l], &w1[j])
                            + bilinear(&pk[l], &w2[i][k], &w1[j])
                            + bilinear(&p, &w2[i][k], &w2[j][l])
                            + bilinear(&pk[k], &w2[i][l], &w1[j])
                            + bilinear(&pkl[k][l], &w1[i], &w1[j])
                            + bilinear(&pk[k], &w1[i], &w2[j][l])
                            + bilinear(&p, &w2[i][l], &w2[j][k])
                            + bilinear(&pk[l], &w1[i], &w2[j][k])
                            + bilinear(&p, &w1[i], &w3[j][k][l]);
                    }
                }
            }
        }
        d1.push(t1);
        d2.push(t2);
    }
    (d1, d2)
}

/// Chart derivatives `∂_k c_i` (as `[k][i]`) of a covector field.
pub fn covector_chart_derivs(grid: &QuadratureGrid, c: &[[f64; 2]]) -> Vec<Mat2> {
    let n = grid.len();
    let mut comp = alloc::vec![alloc::vec![0.0; n]; 3];
    for node in 0..n {
        let e = grid.frame(node).coframe(grid.sin_theta[grid.ring(node)]);
        for a in 0..3 {
            comp[a][node] = c[node][0] * e[0][a] + c[node][1] * e[1][a];
        }
    }
    let d: Vec<ChartDerivs> = comp.iter().map(|c| grid.derivs(c)).collect();
    (0..n)
        .map(|node| {
            let f = grid.frame(node);
            let p = [d[0].v[node], d[1].v[node], d[2].v[node]];
            let pk = [[d[0].t[node], d[1].t[node], d[2].t[node]], [d[0].p[node], d[1].p[node], d[2].p[node]]];
            let mut out = [[0.0; 2]; 2];
            for k in 0..2 {
                for i in 0..2 {
                    out[k][i] = dot3(&f.d2[i][k], &p) + dot3(&f.d1[i], &pk[k]);
                }
            }
            out
        })
        .collect()
}

/// Gauss curvature from the metric and its chart derivatives (Brioschi).
fn gauss_curvature(g: &Mat2, dg: &[Mat2; 2], ddg: &[[Mat2; 2]; 2]) -> f64 {
    let (e, f, gg) = (g[0][0], g[0][1], g[1][1]);
    let (eu, ev) = (dg[0][0][0], dg[1][0][0]);
    let (fu, fv) = (dg[0][0][1], dg[1][0][1]);
    let (gu, gv) = (dg[0][1][1], dg[1][1][1]);
    let evv = ddg[1][1][0][0];
    let fuv = ddg[0][1][0][1];
    let guu = ddg[0][0][1][1];
    let det3 = |m: [[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let m1 = [[-0.5 * evv + fuv - 0.5 * guu, 0.5 * eu, fu - 0.5 * ev], [fv - 0.5 * gu, e, f], [0.5 * gv, f, gg]];
    let m2 = [[0.0, 0.5 * ev, 0.5 * gu], [0.5 * ev, e, f], [0.5 * gu, f, gg]];
    let d = e * gg - f * f;
    (det3(m1) - det3(m2)) / (d * d)
}

impl SurfaceGeometry {
    pub fn new(embedding: Embedding, provider: &dyn MetricProvider) -> Result<Self> {
        let grid = embedding.grid.clone();
        let n = grid.len();
        let mut nodes = Vec::with_capacity(n);
        for node in 0..n {
            let x = embedding.x[node];
            let jet = provider.jet(x)?;
            let t = embedding.dx[node];
            let g = &jet.g;
            let mut gamma = [[0.0; 2]; 2];
            for i in 0..2 {
                for j in 0..2 {
                    gamma[i][j] = bilinear(g, &t[i], &t[j]);
                }
            }
            let gamma_inv = inv2(&gamma).ok_or(Error::DegenerateTangent(node))?;
            let det = gamma[0][0] * gamma[1][1] - gamma[0][1] * gamma[1][0];
            // normal: raise the Euclidean cross-product covector and normalise
            let c = cross(&t[0], &t[1]);
            let mut nu = [0.0; 3];
            for a in 0..3 {
                for b in 0..3 {
                    nu[a] += jet.g_inv[a][b] * c[b];
                }
            }
            let len = dot3(&nu, &c).sqrt();
            if !(len > 0.0) {
                return Err(Error::DegenerateTangent(node));
            }
            for v in nu.iter_mut() {
                *v /= len;
            }
            // ∇_{∂_i} ∂_j and its normal / tangential parts
            let mut a = [[0.0; 2]; 2];
            let mut c1 = [[[0.0; 2]; 2]; 2];
            let tt = &embedding.ddx[node];
            for i in 0..2 {
                for j in 0..2 {
                    let mut dv = tt[i][j];
                    for (k, dvk) in dv.iter_mut().enumerate() {
                        for p in 0..3 {
                            for q in 0..3 {
                                *dvk += jet.christoffel[k][p][q] * t[i][p] * t[j][q];
                            }
                        }
                    }
                    a[i][j] = -bilinear(g, &nu, &dv);
                    for l in 0..2 {
                        c1[l][i][j] = bilinear(g, &dv, &t[l]);
                    }
                }
            }
            let sym = 0.5 * (a[0][1] + a[1][0]);
            a[0][1] = sym;
            a[1][0] = sym;
            let mut christoffel = [[[0.0; 2]; 2]; 2];
            for k in 0..2 {
                for i in 0..2 {
                    for j in 0..2 {
                        christoffel[k][i][j] = gamma_inv[k][0] * c1[0][i][j] + gamma_inv[k][1] * c1[1][i][j];
                    }
                }
            }
            let h = (0..2).map(|i| (0..2).map(|j| gamma_inv[i][j] * a[i][j]).sum::<f64>()).sum::<f64>();
            let mut a0 = a;
            for i in 0..2 {
                for j in 0..2 {
                    a0[i][j] -= 0.5 * h * gamma[i][j];
                }
            }
            let ric = &jet.ricci;
            let ric_nn = bilinear(ric, &nu, &nu);
            let omega = [bilinear(ric, &nu, &t[0]), bilinear(ric, &nu, &t[1])];
            let mut ric_t = [[0.0; 2]; 2];
            for i in 0..2 {
                for j in 0..2 {
                    ric_t[i][j] = bilinear(ric, &t[i], &t[j]);
                }
            }
            let g_nn = ric_nn - 0.5 * jet.scalar;
            let mut tt_form = ric_t;
            for i in 0..2 {
                for j in 0..2 {
                    tt_form[i][j] += g_nn * gamma[i][j];
                }
            }
            let mut dnu_ric_nn = 0.0;
            for p in 0..3 {
                for i in 0..3 {
                    for j in 0..3 {
                        dnu_ric_nn += nu[p] * nu[i] * nu[j] * jet.nabla_ricci[p][i][j];
                    }
                }
            }
            let ds = jet.scalar_gradient();
            let a_norm2 = tensor_dot(&gamma_inv, &a, &a);
            let a0_norm2 = tensor_dot(&gamma_inv, &a0, &a0);
            nodes.push(NodeGeometry {
                position: x,
                tangents: t,
                gamma,
                gamma_inv,
                area_density: det.sqrt() / grid.sin_theta[grid.ring(node)],
                normal: nu,
                a,
                a0,
                h,
                a_norm2,
                a0_norm2,
                omega,
                ric_nn,
                ric_t,
                t: tt_form,
                scalar_sigma: 0.0,
                scalar_m: jet.scalar,
                dnu_ric_nn,
                dnu_scalar: dot3(&ds, &nu),
                christoffel,
                dh: [0.0; 2],
                hess_h: [[0.0; 2]; 2],
                lap_h: 0.0,
                ricci: jet.ricci,
                metric: jet.g,
            });
        }
        let gammas: Vec<Mat2> = nodes.iter().map(|n| n.gamma).collect();
        let (dgamma, ddgamma) = tensor_chart_derivs(&grid, &gammas);
        for (node, ng) in nodes.iter_mut().enumerate() {
            ng.scalar_sigma = 2.0 * gauss_curvature(&ng.gamma, &dgamma[node], &ddgamma[node]);
        }
        let mut geom = SurfaceGeometry { grid, embedding, nodes, dgamma, ddgamma };
        let hvals: Vec<f64> = geom.nodes.iter().map(|n| n.h).collect();
        let dh = geom.grid.derivs(&hvals);
        for node in 0..n {
            let dhn = geom.gradient(&dh, node);
            let hess = geom.hessian(&dh, node);
            let lap = geom.trace(node, &hess);
            let ng = &mut geom.nodes[node];
            ng.dh = dhn;
            ng.hess_h = hess;
            ng.lap_h = lap;
        }
        Ok(geom)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Quadrature weight of `dμ` at each node.
    pub fn measure(&self, node: usize) -> f64 {
        self.nodes[node].area_density * self.grid.weights[node]
    }

    /// `∫_Σ f dμ`.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        (0..self.len()).map(|n| f[n] * self.measure(n)).sum()
    }

    pub fn area(&self) -> f64 {
        (0..self.len()).map(|n| self.measure(n)).sum()
    }

    /// `L²(dμ)` inner product.
    pub fn inner(&self, f: &[f64], g: &[f64]) -> f64 {
        (0..self.len()).map(|n| f[n] * g[n] * self.measure(n)).sum()
    }

    pub fn gradient(&self, d: &ChartDerivs, node: usize) -> [f64; 2] {
        d.first(node)
    }

    /// Covariant Hessian `f_ij − Γ^k_ij f_k`.
    pub fn hessian(&self, d: &ChartDerivs, node: usize) -> Mat2 {
        let g = &self.nodes[node];
        let f1 = d.first(node);
        let mut h = d.second(node);
        for i in 0..2 {
            for j in 0..2 {
                h[i][j] -= g.christoffel[0][i][j] * f1[0] + g.christoffel[1][i][j] * f1[1];
            }
        }
        h
    }

    /// `γ^{ij} T_ij`.
    pub fn trace(&self, node: usize, t: &Mat2) -> f64 {
        let gi = &self.nodes[node].gamma_inv;
        gi[0][0] * t[0][0] + gi[0][1] * t[0][1] + gi[1][0] * t[1][0] + gi[1][1] * t[1][1]
    }

    /// Laplace–Beltrami operator of a nodal field.
    pub fn laplace_beltrami(&self, f: &[f64]) -> Vec<f64> {
        let d = self.grid.derivs(f);
        self.laplace_from_derivs(&d)
    }

    pub fn laplace_from_derivs(&self, d: &ChartDerivs) -> Vec<f64> {
        (0..self.len()).map(|n| self.trace(n, &self.hessian(d, n))).collect()
    }

    pub fn mean_curvature(&self) -> Vec<f64> {
        self.nodes.iter().map(|n| n.h).collect()
    }

    /// Euclidean-frame position, normal and mean curvature fields of the
    /// same embedding in flat space.
    pub fn euclidean(&self) -> Result<SurfaceGeometry> {
        SurfaceGeometry::new(self.embedding.clone(), &crate::metric::Flat)
    }
}

/// `∫ g^e(b, ν^e) dμ^e` of the same embedding; zero on closed surfaces.
pub fn translation_flux(geom: &SurfaceGeometry, b: [f64; 3]) -> Result<f64> {
    let e = geom.euclidean()?;
    let f: Vec<f64> = e.nodes.iter().map(|n| dot3(&n.normal, &b)).collect();
    Ok(e.integrate(&f))
}

/// Euclidean area radius, center of gravity and their ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ApproximatingSphere {
    pub r_e: f64,
    pub a_e: [f64; 3],
    pub tau: f64,
}

pub fn approximating_sphere(graph: &RadialGraph) -> ApproximatingSphere {
    approximating_sphere_of(&graph.embedding())
}

pub fn approximating_sphere_of(e: &Embedding) -> ApproximatingSphere {
    let dens = e.euclidean_density();
    let mut area = 0.0;
    let mut c = [0.0; 3];
    for (n, d) in dens.iter().enumerate() {
        let w = d * e.grid.weights[n];
        area += w;
        for k in 0..3 {
            c[k] += w * e.x[n][k];
        }
    }
    let a_e = [c[0] / area, c[1] / area, c[2] / area];
    let r_e = (area / (4.0 * PI)).sqrt();
    ApproximatingSphere { r_e, a_e, tau: dot3(&a_e, &a_e).sqrt() / r_e }
}

/// Pointwise residuals of the Gauss, Codazzi, Simons and Schwarzschild
/// conformal relations, with the magnitude of the largest term of each.
#[derive(Debug, Clone)]
pub struct IdentityResiduals {
    pub gauss: Vec<f64>,
    pub codazzi: Vec<f64>,
    pub simons: Vec<f64>,
    /// Present only when a Schwarzschild mass is supplied.
    pub conformal: Option<Vec<f64>>,
    pub gauss_scale: f64,
    pub codazzi_scale: f64,
    pub simons_scale: f64,
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

impl IdentityResiduals {
    /// Sup-norms of the residuals relative to their term scales; the
    /// conformal residual is already relative.
    pub fn relative_sup(&self) -> [f64; 4] {
        [
            sup(&self.gauss) / self.gauss_scale,
            sup(&self.codazzi) / self.codazzi_scale,
            sup(&self.simons) / self.simons_scale,
            self.conformal.as_deref().map(sup).unwrap_or(0.0),
        ]
    }
}

/// Intrinsic `Γ^p_li` as `[p][l][i]` and `∂_k Γ^p_li` as `[k][p][l][i]`.
fn christoffel_with_derivs(gi: &Mat2, dg: &[Mat2; 2], ddg: &[[Mat2; 2]; 2]) -> ([Mat2; 2], [[Mat2; 2]; 2]) {
    let mut c1 = [[[0.0; 2]; 2]; 2];
    let mut dc1 = [[[[0.0; 2]; 2]; 2]; 2];
    for q in 0..2 {
        for l in 0..2 {
            for i in 0..2 {
                c1[q][l][i] = 0.5 * (dg[l][i][q] + dg[i][l][q] - dg[q][l][i]);
                for k in 0..2 {
                    dc1[k][q][l][i] = 0.5 * (ddg[k][l][i][q] + ddg[k][i][l][q] - ddg[k][q][l][i]);
                }
            }
        }
    }
    let mut dgi = [[[0.0; 2]; 2]; 2];
    for k in 0..2 {
        for p in 0..2 {
            for q in 0..2 {
                let mut s = 0.0;
                for a in 0..2 {
                    for b in 0..2 {
                        s -= gi[p][a] * dg[k][a][b] * gi[b][q];
                    }
                }
                dgi[k][p][q] = s;
            }
        }
    }
    let mut gam = [[[0.0; 2]; 2]; 2];
    let mut dgam = [[[[0.0; 2]; 2]; 2]; 2];
    for p in 0..2 {
        for l in 0..2 {
            for i in 0..2 {
                for q in 0..2 {
                    gam[p][l][i] += gi[p][q] * c1[q][l][i];
                    for k in 0..2 {
                        dgam[k][p][l][i] += dgi[k][p][q] * c1[q][l][i] + gi[p][q] * dc1[k][q][l][i];
                    }
                }
            }
        }
    }
    (gam, dgam)
}

/// First covariant derivative `∇_l Å_ij` (as `[l][i][j]`) and the rough
/// Laplacian `ΔÅ_ij` at every node.
pub fn traceless_derivatives(geom: &SurfaceGeometry) -> (Vec<[Mat2; 2]>, Vec<Mat2>) {
    let a0: Vec<Mat2> = geom.nodes.iter().map(|g| g.a0).collect();
    let (da0, dda0) = tensor_chart_derivs(&geom.grid, &a0);
    let mut nabla = Vec::with_capacity(geom.len());
    let mut lap_out = Vec::with_capacity(geom.len());
    for node in 0..geom.len() {
        let g = &geom.nodes[node];
        let gi = &g.gamma_inv;
        let (gam, dgam) = christoffel_with_derivs(gi, &geom.dgamma[node], &geom.ddgamma[node]);
        let d1 = &da0[node];
        let d2 = &dda0[node];
        let t = &g.a0;
        let mut nab = [[[0.0; 2]; 2]; 2];
        for l in 0..2 {
            for i in 0..2 {
                for j in 0..2 {
                    let mut s = d1[l][i][j];
                    for p in 0..2 {
                        s -= gam[p][l][i] * t[p][j] + gam[p][l][j] * t[i][p];
                    }
                    nab[l][i][j] = s;
                }
            }
        }
        let mut lap = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                let mut s = 0.0;
                for k in 0..2 {
                    for l in 0..2 {
                        // ∂_k (∇_l Å_ij) minus connection terms
                        let mut dd = d2[k][l][i][j];
                        for p in 0..2 {
                            dd -= dgam[k][p][l][i] * t[p][j] + gam[p][l][i] * d1[k][p][j];
                            dd -= dgam[k][p][l][j] * t[i][p] + gam[p][l][j] * d1[k][i][p];
                            dd -= gam[p][k][l] * nab[p][i][j] + gam[p][k][i] * nab[l][p][j] + gam[p][k][j] * nab[l][i][p];
                        }
                        s += gi[k][l] * dd;
                    }
                }
                lap[i][j] = s;
            }
        }
        nabla.push(nab);
        lap_out.push(lap);
    }
    (nabla, lap_out)
}

/// Covariant derivative `∇_i ω_j` (as `[i][j]`) of `ω = Ric(ν, ·)`.
pub fn omega_derivative(geom: &SurfaceGeometry) -> Vec<Mat2> {
    let omega: Vec<[f64; 2]> = geom.nodes.iter().map(|g| g.omega).collect();
    let domega = covector_chart_derivs(&geom.grid, &omega);
    (0..geom.len())
        .map(|node| {
            let g = &geom.nodes[node];
            let mut out = [[0.0; 2]; 2];
            for i in 0..2 {
                for j in 0..2 {
                    out[i][j] = domega[node][i][j] - g.christoffel[0][i][j] * g.omega[0] - g.christoffel[1][i][j] * g.omega[1];
                }
            }
            out
        })
        .collect()
}

/// Right-hand side of the Simons identity for `ΔÅ` at a node. The `∇ω`
/// term enters symmetrised; its antisymmetric part `½ dω` does not vanish
/// in general.
pub fn simons_rhs(g: &NodeGeometry, nabla_omega: &Mat2) -> Mat2 {
    let gi = &g.gamma_inv;
    let t = &g.a0;
    let tv = &g.tangents;
    let riem = |i: usize, j: usize, k: usize, l: usize| -> f64 {
        let ric = |a: usize, b: usize| bilinear(&g.ricci, &tv[a], &tv[b]);
        let gg = |a: usize, b: usize| g.gamma[a][b];
        ric(i, l) * gg(j, k) - ric(i, k) * gg(j, l) - ric(j, l) * gg(i, k) + ric(j, k) * gg(i, l)
            - 0.5 * g.scalar_m * (gg(i, l) * gg(j, k) - gg(i, k) * gg(j, l))
    };
    // Å_j^k as [k][j] and Å^{kl}
    let mut mixed = [[0.0; 2]; 2];
    let mut up = [[0.0; 2]; 2];
    for k in 0..2 {
        for j in 0..2 {
            mixed[k][j] = gi[k][0] * t[0][j] + gi[k][1] * t[1][j];
        }
    }
    for k in 0..2 {
        for l in 0..2 {
            up[k][l] = mixed[k][0] * gi[0][l] + mixed[k][1] * gi[1][l];
        }
    }
    let div_omega = (0..2).map(|i| (0..2).map(|j| gi[i][j] * nabla_omega[i][j]).sum::<f64>()).sum::<f64>();
    let mut r = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            let mut v = g.hess_h[i][j] - 0.5 * g.lap_h * g.gamma[i][j];
            let aa: f64 = (0..2).map(|k| mixed[k][i] * t[k][j]).sum();
            v += g.h * aa + 0.5 * g.h * g.h * t[i][j] - g.a0_norm2 * t[i][j] - 0.5 * g.h * g.a0_norm2 * g.gamma[i][j];
            for k in 0..2 {
                for l in 0..2 {
                    for m in 0..2 {
                        v += mixed[k][j] * gi[l][m] * riem(l, i, k, m);
                    }
                    v += up[k][l] * riem(i, k, j, l);
                }
            }
            v += nabla_omega[i][j] + nabla_omega[j][i] - div_omega * g.gamma[i][j];
            r[i][j] = v;
        }
    }
    r
}

/// Evaluate the geometric identities on `geom`. The conformal relations to
/// the Euclidean geometry are checked when `schwarzschild_mass` is given.
pub fn identity_residuals(geom: &SurfaceGeometry, schwarzschild_mass: Option<f64>) -> Result<IdentityResiduals> {
    let n = geom.len();
    let (nabla, lap) = traceless_derivatives(geom);
    let nom = omega_derivative(geom);
    let mut gauss = Vec::with_capacity(n);
    let mut codazzi = Vec::with_capacity(n);
    let mut simons = Vec::with_capacity(n);
    let (mut gs, mut cs, mut ss) = (0.0f64, 0.0f64, 0.0f64);
    for node in 0..n {
        let g = &geom.nodes[node];
        let gi = &g.gamma_inv;
        let rhs = g.scalar_m - 2.0 * g.ric_nn + g.h * g.h - g.a_norm2;
        gauss.push(g.scalar_sigma - rhs);
        gs = gs.max(g.scalar_sigma.abs()).max(g.h * g.h).max(g.a_norm2).max((2.0 * g.ric_nn).abs());
        // div Å − ½ dH − ω
        let mut res_c = [0.0; 2];
        for j in 0..2 {
            let div: f64 = (0..2).map(|i| (0..2).map(|k| gi[i][k] * nabla[node][i][k][j]).sum::<f64>()).sum();
            res_c[j] = div - 0.5 * g.dh[j] - g.omega[j];
        }
        codazzi.push(covector_dot(gi, &res_c, &res_c).sqrt());
        cs = cs.max(covector_dot(gi, &g.dh, &g.dh).sqrt()).max(covector_dot(gi, &g.omega, &g.omega).sqrt());
        let r = simons_rhs(g, &nom[node]);
        let mut res_s = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                res_s[i][j] = lap[node][i][j] - r[i][j];
            }
        }
        simons.push(tensor_dot(gi, &res_s, &res_s).sqrt());
        let lap_norm = tensor_dot(gi, &lap[node], &lap[node]).sqrt();
        let hess_norm = tensor_dot(gi, &g.hess_h, &g.hess_h).sqrt();
        ss = ss.max(lap_norm).max(hess_norm).max(g.h * g.h * g.a0_norm2.sqrt()).max(g.h.powi(3));
    }
    let conformal = match schwarzschild_mass {
        None => None,
        Some(m) => Some(conformal_residual(geom, m)?),
    };
    Ok(IdentityResiduals {
        gauss,
        codazzi,
        simons,
        conformal,
        gauss_scale: gs,
        codazzi_scale: cs.max(f64::MIN_POSITIVE),
        simons_scale: ss.max(f64::MIN_POSITIVE),
    })
}

/// Pointwise relative error of the normal, area element and mean curvature
/// against their expressions through the Euclidean geometry and `φ`.
pub fn conformal_residual(geom: &SurfaceGeometry, m: f64) -> Result<Vec<f64>> {
    let e = geom.euclidean()?;
    let mut out = Vec::with_capacity(geom.len());
    for (gs, ge) in geom.nodes.iter().zip(&e.nodes) {
        let x = gs.position;
        let r = dot3(&x, &x).sqrt();
        let phi = 1.0 + m / (2.0 * r);
        let dphi = -m / (2.0 * r * r) * dot3(&x, &ge.normal) / r;
        let mut nu_err: f64 = 0.0;
        for k in 0..3 {
            nu_err = nu_err.max((gs.normal[k] - ge.normal[k] / (phi * phi)).abs() * phi * phi);
        }
        let mu_err = (gs.area_density / (phi.powi(4) * ge.area_density) - 1.0).abs();
        let hs = ge.h / (phi * phi) + 4.0 * dphi / phi.powi(3);
        let h_err = (gs.h - hs).abs() / gs.h.abs().max(hs.abs());
        out.push(nu_err.max(mu_err).max(h_err));
    }
    Ok(out)
}
