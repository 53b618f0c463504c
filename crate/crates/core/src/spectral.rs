//! Gauss–Legendre × uniform-longitude grids with real spherical-harmonic
//! analysis and synthesis, including chart derivatives in (θ, φ).

use crate::harmonics::{legendre_table, sh_count, sh_index, tri_index};
use crate::quadrature::gauss_legendre;
use alloc::vec::Vec;
use core::f64::consts::{PI, SQRT_2};
#[allow(unused_imports)]
use num_traits::Float;

/// Values of a scalar field and its chart derivatives at every node.
#[derive(Debug, Clone, Default)]
pub struct ChartDerivs {
    pub v: Vec<f64>,
    pub t: Vec<f64>,
    pub p: Vec<f64>,
    pub tt: Vec<f64>,
    pub tp: Vec<f64>,
    pub pp: Vec<f64>,
}

impl ChartDerivs {
    pub fn first(&self, node: usize) -> [f64; 2] {
        [self.t[node], self.p[node]]
    }

    pub fn second(&self, node: usize) -> [[f64; 2]; 2] {
        [[self.tt[node], self.tp[node]], [self.tp[node], self.pp[node]]]
    }
}

/// Derivatives of the unit-sphere parametrisation ω(θ, φ) at one node,
/// indexed by chart direction (0 = θ, 1 = φ).
#[derive(Debug, Clone, Copy)]
pub struct SphereFrame {
    pub w: [f64; 3],
    pub d1: [[f64; 3]; 2],
    pub d2: [[[f64; 3]; 2]; 2],
    pub d3: [[[[f64; 3]; 2]; 2]; 2],
}

impl SphereFrame {
    pub fn new(theta: f64, phi: f64) -> Self {
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        let w = [st * cp, st * sp, ct];
        let wt = [ct * cp, ct * sp, -st];
        let wp = [-st * sp, st * cp, 0.0];
        let wtt = [-w[0], -w[1], -w[2]];
        let wtp = [-ct * sp, ct * cp, 0.0];
        let wpp = [-st * cp, -st * sp, 0.0];
        let wttt = [-wt[0], -wt[1], -wt[2]];
        let wttp = [-wp[0], -wp[1], -wp[2]];
        let wtpp = [-ct * cp, -ct * sp, 0.0];
        let wppp = [-wp[0], -wp[1], 0.0];
        SphereFrame {
            w,
            d1: [wt, wp],
            d2: [[wtt, wtp], [wtp, wpp]],
            d3: [[[wttt, wttp], [wttp, wtpp]], [[wttp, wtpp], [wtpp, wppp]]],
        }
    }

    /// Dual co-frame: `e^i(ω_j) = δ^i_j`, tangent to the sphere.
    pub fn coframe(&self, sin_t: f64) -> [[f64; 3]; 2] {
        let s2 = sin_t * sin_t;
        [self.d1[0], [self.d1[1][0] / s2, self.d1[1][1] / s2, self.d1[1][2] / s2]]
    }
}

/// Product quadrature grid on S² with spectral transforms up to `degree`.
///
/// Fields that are products of band-limited data are projected to `degree`
/// (twice the bandlimit by default), and the rule integrates spherical
/// polynomials of degree `2·degree + 1` exactly.
#[derive(Debug, Clone)]
pub struct QuadratureGrid {
    pub bandlimit: usize,
    pub degree: usize,
    pub nlat: usize,
    pub nlon: usize,
    pub theta: Vec<f64>,
    pub cos_theta: Vec<f64>,
    pub sin_theta: Vec<f64>,
    pub phi: Vec<f64>,
    /// Quadrature weight of each node for `∫ f dΩ`.
    pub weights: Vec<f64>,
    /// Unit direction of each node.
    pub directions: Vec<[f64; 3]>,
    ntri: usize,
    plm: Vec<f64>,
    dplm: Vec<f64>,
    d2plm: Vec<f64>,
    cos_mphi: Vec<f64>,
    sin_mphi: Vec<f64>,
}

impl QuadratureGrid {
    /// Grid for fields of bandlimit `l` with transform degree `2l`.
    pub fn new(l: usize) -> Self {
        Self::with_degree(l, 2 * l)
    }

    pub fn with_degree(bandlimit: usize, degree: usize) -> Self {
        let degree = degree.max(bandlimit);
        let nlat = degree + 1;
        let nlon = 2 * degree + 2;
        let (x, w) = gauss_legendre(nlat);
        // colatitude ascending from the north pole
        let cos_theta: Vec<f64> = x.iter().rev().copied().collect();
        let lat_w: Vec<f64> = w.iter().rev().copied().collect();
        let sin_theta: Vec<f64> = cos_theta.iter().map(|c| (1.0 - c * c).sqrt()).collect();
        let theta: Vec<f64> = cos_theta.iter().map(|c| c.acos()).collect();
        let phi: Vec<f64> = (0..nlon).map(|k| 2.0 * PI * k as f64 / nlon as f64).collect();
        let mut weights = Vec::with_capacity(nlat * nlon);
        let mut directions = Vec::with_capacity(nlat * nlon);
        for j in 0..nlat {
            for k in 0..nlon {
                weights.push(lat_w[j] * 2.0 * PI / nlon as f64);
                let (sp, cp) = phi[k].sin_cos();
                directions.push([sin_theta[j] * cp, sin_theta[j] * sp, cos_theta[j]]);
            }
        }
        let ntri = tri_index(degree, degree) + 1;
        let mut plm = Vec::with_capacity(nlat * ntri);
        let mut dplm = Vec::with_capacity(nlat * ntri);
        let mut d2plm = Vec::with_capacity(nlat * ntri);
        for j in 0..nlat {
            let (c, s) = (cos_theta[j], sin_theta[j]);
            let p = legendre_table(degree, c, s);
            let cot = c / s;
            let mut dp = alloc::vec![0.0; ntri];
            let mut d2p = alloc::vec![0.0; ntri];
            for l in 0..=degree {
                for m in 0..=l {
                    let (lf, mf) = (l as f64, m as f64);
                    let prev = if l > m { p[tri_index(l - 1, m)] } else { 0.0 };
                    let coef = ((2.0 * lf + 1.0) / (2.0 * lf - 1.0) * (lf * lf - mf * mf)).sqrt();
                    let pv = p[tri_index(l, m)];
                    let d = if l == 0 { 0.0 } else { (lf * c * pv - coef * prev) / s };
                    dp[tri_index(l, m)] = d;
                    d2p[tri_index(l, m)] = -cot * d - (lf * (lf + 1.0) - mf * mf / (s * s)) * pv;
                }
            }
            plm.extend_from_slice(&p);
            dplm.extend_from_slice(&dp);
            d2plm.extend_from_slice(&d2p);
        }
        let mut cos_mphi = Vec::with_capacity((degree + 1) * nlon);
        let mut sin_mphi = Vec::with_capacity((degree + 1) * nlon);
        for m in 0..=degree {
            for &p in &phi {
                let (s, c) = (m as f64 * p).sin_cos();
                cos_mphi.push(c);
                sin_mphi.push(s);
            }
        }
        QuadratureGrid {
            bandlimit,
            degree,
            nlat,
            nlon,
            theta,
            cos_theta,
            sin_theta,
            phi,
            weights,
            directions,
            ntri,
            plm,
            dplm,
            d2plm,
            cos_mphi,
            sin_mphi,
        }
    }

    pub fn len(&self) -> usize {
        self.nlat * self.nlon
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Latitude ring of a node.
    pub fn ring(&self, node: usize) -> usize {
        node / self.nlon
    }

    pub fn frame(&self, node: usize) -> SphereFrame {
        let j = node / self.nlon;
        let k = node % self.nlon;
        SphereFrame::new(self.theta[j], self.phi[k])
    }

    /// `∫_{S²} f dΩ` by the product rule.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        f.iter().zip(&self.weights).map(|(f, w)| f * w).sum()
    }

    /// Spherical-harmonic coefficients of degree `≤ deg` of nodal values.
    pub fn analyze(&self, values: &[f64], deg: usize) -> Vec<f64> {
        assert!(deg <= self.degree && values.len() == self.len());
        let mut coeffs = alloc::vec![0.0; sh_count(deg)];
        let mut a = alloc::vec![0.0; deg + 1];
        let mut b = alloc::vec![0.0; deg + 1];
        for j in 0..self.nlat {
            let row = &values[j * self.nlon..(j + 1) * self.nlon];
            for m in 0..=deg {
                let cm = &self.cos_mphi[m * self.nlon..(m + 1) * self.nlon];
                let sm = &self.sin_mphi[m * self.nlon..(m + 1) * self.nlon];
                let mut sa = 0.0;
                let mut sb = 0.0;
                for k in 0..self.nlon {
                    sa += row[k] * cm[k];
                    sb += row[k] * sm[k];
                }
                a[m] = sa;
                b[m] = sb;
            }
            let wj = self.weights[j * self.nlon];
            let p = &self.plm[j * self.ntri..(j + 1) * self.ntri];
            for l in 0..=deg {
                coeffs[sh_index(l, 0)] += wj * p[tri_index(l, 0)] * a[0];
                for m in 1..=l {
                    let f = wj * SQRT_2 * p[tri_index(l, m)];
                    coeffs[sh_index(l, m as i32)] += f * a[m];
                    coeffs[sh_index(l, -(m as i32))] += f * b[m];
                }
            }
        }
        coeffs
    }

    fn degree_of(len: usize) -> usize {
        let l = (len as f64).sqrt() as usize;
        assert_eq!(l * l, len, "coefficient vector length must be a square");
        l - 1
    }

    /// Nodal values of a coefficient vector.
    pub fn synthesize(&self, coeffs: &[f64]) -> Vec<f64> {
        let deg = Self::degree_of(coeffs.len());
        assert!(deg <= self.degree);
        let mut out = alloc::vec![0.0; self.len()];
        let mut a = alloc::vec![0.0; deg + 1];
        let mut b = alloc::vec![0.0; deg + 1];
        for j in 0..self.nlat {
            let p = &self.plm[j * self.ntri..(j + 1) * self.ntri];
            self.ring_coefficients(coeffs, deg, p, &mut a, &mut b);
            let row = &mut out[j * self.nlon..(j + 1) * self.nlon];
            for m in 0..=deg {
                let cm = &self.cos_mphi[m * self.nlon..(m + 1) * self.nlon];
                let sm = &self.sin_mphi[m * self.nlon..(m + 1) * self.nlon];
                for k in 0..self.nlon {
                    row[k] += a[m] * cm[k] + b[m] * sm[k];
                }
            }
        }
        out
    }

    fn ring_coefficients(&self, coeffs: &[f64], deg: usize, p: &[f64], a: &mut [f64], b: &mut [f64]) {
        for m in 0..=deg {
            let mut sa = 0.0;
            let mut sb = 0.0;
            for l in m..=deg {
                let pv = p[tri_index(l, m)];
                if m == 0 {
                    sa += coeffs[sh_index(l, 0)] * pv;
                } else {
                    sa += coeffs[sh_index(l, m as i32)] * pv;
                    sb += coeffs[sh_index(l, -(m as i32))] * pv;
                }
            }
            let f = if m == 0 { 1.0 } else { SQRT_2 };
            a[m] = f * sa;
            b[m] = f * sb;
        }
    }

    /// Nodal values and chart derivatives of a coefficient vector.
    pub fn synthesize_derivs(&self, coeffs: &[f64]) -> ChartDerivs {
        let deg = Self::degree_of(coeffs.len());
        assert!(deg <= self.degree);
        let n = self.len();
        let mut d = ChartDerivs {
            v: alloc::vec![0.0; n],
            t: alloc::vec![0.0; n],
            p: alloc::vec![0.0; n],
            tt: alloc::vec![0.0; n],
            tp: alloc::vec![0.0; n],
            pp: alloc::vec![0.0; n],
        };
        let z = || alloc::vec![0.0; deg + 1];
        let (mut a, mut b, mut da, mut db, mut d2a, mut d2b) = (z(), z(), z(), z(), z(), z());
        for j in 0..self.nlat {
            let r = j * self.ntri..(j + 1) * self.ntri;
            self.ring_coefficients(coeffs, deg, &self.plm[r.clone()], &mut a, &mut b);
            self.ring_coefficients(coeffs, deg, &self.dplm[r.clone()], &mut da, &mut db);
            self.ring_coefficients(coeffs, deg, &self.d2plm[r], &mut d2a, &mut d2b);
            let o = j * self.nlon;
            for m in 0..=deg {
                let mf = m as f64;
                let cm = &self.cos_mphi[m * self.nlon..(m + 1) * self.nlon];
                let sm = &self.sin_mphi[m * self.nlon..(m + 1) * self.nlon];
                for k in 0..self.nlon {
                    let (c, s) = (cm[k], sm[k]);
                    d.v[o + k] += a[m] * c + b[m] * s;
                    d.t[o + k] += da[m] * c + db[m] * s;
                    d.tt[o + k] += d2a[m] * c + d2b[m] * s;
                    d.p[o + k] += mf * (b[m] * c - a[m] * s);
                    d.tp[o + k] += mf * (db[m] * c - da[m] * s);
                    d.pp[o + k] -= mf * mf * (a[m] * c + b[m] * s);
                }
            }
        }
        d
    }

    /// Chart derivatives of nodal values, projected to the transform degree.
    pub fn derivs(&self, values: &[f64]) -> ChartDerivs {
        self.synthesize_derivs(&self.analyze(values, self.degree))
    }

    /// Projection of nodal values onto harmonics of degree `≤ deg`.
    pub fn project(&self, values: &[f64], deg: usize) -> Vec<f64> {
        self.synthesize(&self.analyze(values, deg))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harmonics::real_sh;

    #[test]
    fn analysis_inverts_synthesis() {
        let g = QuadratureGrid::new(6);
        let n = sh_count(g.degree);
        let c: Vec<f64> = (0..n).map(|i| ((i * 37 % 11) as f64 - 5.0) / 7.0).collect();
        let v = g.synthesize(&c);
        let back = g.analyze(&v, g.degree);
        for (x, y) in c.iter().zip(&back) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn synthesis_matches_pointwise_evaluation() {
        let g = QuadratureGrid::new(5);
        let n = sh_count(5);
        let c: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        let v = g.synthesize(&c);
        for node in [0, 17, 55, g.len() - 1] {
            let y = real_sh(5, g.directions[node]);
            let expect: f64 = y.iter().zip(&c).map(|(a, b)| a * b).sum();
            assert!((v[node] - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn chart_derivatives_match_finite_differences() {
        let g = QuadratureGrid::new(5);
        let n = sh_count(5);
        let c: Vec<f64> = (0..n).map(|i| (i as f64 * 0.91).cos()).collect();
        let d = g.synthesize_derivs(&c);
        let f = |t: f64, p: f64| {
            let y = real_sh(5, [t.sin() * p.cos(), t.sin() * p.sin(), t.cos()]);
            y.iter().zip(&c).map(|(a, b)| a * b).sum::<f64>()
        };
        let h = 1e-4;
        for node in [3, 40, 71] {
            let t = g.theta[node / g.nlon];
            let p = g.phi[node % g.nlon];
            let ft = (f(t + h, p) - f(t - h, p)) / (2.0 * h);
            let fp = (f(t, p + h) - f(t, p - h)) / (2.0 * h);
            let ftt = (f(t + h, p) - 2.0 * f(t, p) + f(t - h, p)) / (h * h);
            let fpp = (f(t, p + h) - 2.0 * f(t, p) + f(t, p - h)) / (h * h);
            let ftp = (f(t + h, p + h) - f(t + h, p - h) - f(t - h, p + h) + f(t - h, p - h)) / (4.0 * h * h);
            assert!((d.t[node] - ft).abs() < 1e-7);
            assert!((d.p[node] - fp).abs() < 1e-7);
            assert!((d.tt[node] - ftt).abs() < 1e-5);
            assert!((d.pp[node] - fpp).abs() < 1e-5);
            assert!((d.tp[node] - ftp).abs() < 1e-5);
        }
    }

    #[test]
    fn quadrature_exact_for_products_up_to_twice_degree() {
        let g = QuadratureGrid::new(8);
        // Y_{l,m}^2 integrates to one for l up to the transform degree
        for l in [0usize, 5, 16] {
            for m in [-(l as i32), 0, l as i32] {
                let v: Vec<f64> = g.directions.iter().map(|w| real_sh(l, *w)[sh_index(l, m)]).collect();
                let sq: Vec<f64> = v.iter().map(|x| x * x).collect();
                assert!((g.integrate(&sq) - 1.0).abs() < 1e-12);
            }
        }
    }
}
