//! Closed-form sphere integrals and the exact Schwarzschild solution,
//! together with a quadrature adjudicator.
//!
//! Integrals are taken over the Euclidean sphere `S_R(a e₁)` with outward
//! unit normal `N`; `cos φ = N·e₁` and `r = |x|`, so that
//! `r² = R² + 2Ra cos φ + a²`.

use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre;
use alloc::vec::Vec;
use core::f64::consts::PI;
#[allow(unused_imports)]
use num_traits::Float;

/// Parameters of `C_k^l(R, a) = ∫_{S_R(a e₁)} cos^l φ / r^k dμ^e`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SphereIntegralSpec {
    pub radius: f64,
    pub offset: f64,
    pub k: u32,
    pub l: u32,
}

/// Below this ratio `a/R` the Gegenbauer expansion is used.
const SERIES_CROSSOVER: f64 = 0.1;

fn check_sphere(radius: f64, offset: f64) -> Result<()> {
    if !(radius > 0.0) || !(offset >= 0.0) || !(offset < radius) {
        return Err(Error::InvalidArgument(alloc::format!(
            "sphere integrals need 0 <= a < R, got R = {radius}, a = {offset}"
        )));
    }
    Ok(())
}

fn binomial(n: u32, k: u32) -> f64 {
    let mut b = 1.0;
    for i in 0..k {
        b = b * (n - i) as f64 / (i + 1) as f64;
    }
    b
}

/// Closed form of `C_k^l`.
pub fn c_kl(spec: SphereIntegralSpec) -> Result<f64> {
    let SphereIntegralSpec { radius: r, offset: a, k, l } = spec;
    check_sphere(r, a)?;
    if a / r < SERIES_CROSSOVER {
        Ok(r.powi(2 - k as i32) * c_kl_series(k, l, a / r))
    } else {
        Ok(c_kl_reduced(r, a, k, l))
    }
}

// (2πR/a)(2Ra)^{-l} ∫_{R-a}^{R+a} r^{1-k} (r² - R² - a²)^l dr with the
// binomial expansion integrated term by term.
fn c_kl_reduced(r: f64, a: f64, k: u32, l: u32) -> f64 {
    let s = r * r + a * a;
    let (lo, hi) = (r - a, r + a);
    let mut sum = 0.0;
    for j in 0..=l {
        let p = 1 - k as i32 + 2 * j as i32;
        let prim = if p == -1 {
            2.0 * (a / r).atanh()
        } else {
            (hi.powi(p + 1) - lo.powi(p + 1)) / (p + 1) as f64
        };
        sum += binomial(l, j) * (-s).powi((l - j) as i32) * prim;
    }
    2.0 * PI * r / a * (2.0 * r * a).powi(-(l as i32)) * sum
}

// Unit-radius value via (1 + 2τc + τ²)^{-k/2} = Σ C_n^{(k/2)}(-c) τⁿ.
fn c_kl_series(k: u32, l: u32, tau: f64) -> f64 {
    let nmax = 80usize;
    let (x, w) = gauss_legendre((nmax + l as usize) / 2 + 2);
    let alpha = k as f64 / 2.0;
    let mut moments = alloc::vec![0.0; nmax + 1];
    for (c, wc) in x.iter().zip(&w) {
        let y = -c;
        let cl = c.powi(l as i32);
        let mut prev = 1.0;
        let mut cur = 2.0 * alpha * y;
        moments[0] += wc * cl;
        if nmax >= 1 {
            moments[1] += wc * cl * cur;
        }
        for n in 2..=nmax {
            let nf = n as f64;
            let next = (2.0 * y * (nf + alpha - 1.0) * cur - (nf + 2.0 * alpha - 2.0) * prev) / nf;
            prev = cur;
            cur = next;
            moments[n] += wc * cl * cur;
        }
    }
    let mut sum = 0.0;
    let mut tn = 1.0;
    for mom in moments {
        sum += mom * tn;
        tn *= tau;
        if tn == 0.0 {
            break;
        }
    }
    2.0 * PI * sum
}

/// `E₁ = C₃⁰ − 3R²C₅⁰ − 6Ra C₅¹ − 3a²C₅²`, the sphere integral of the
/// normal–normal Schwarzschild Ricci curvature divided by `m`.
pub fn e1(radius: f64, offset: f64) -> Result<f64> {
    let c = |k, l| c_kl(SphereIntegralSpec { radius, offset, k, l });
    let (r, a) = (radius, offset);
    Ok(c(3, 0)? - 3.0 * r * r * c(5, 0)? - 6.0 * r * a * c(5, 1)? - 3.0 * a * a * c(5, 2)?)
}

/// `∫_{S_R(a e₁)} (3m/r) g^e(e₁, N) dμ^e = 3m C₁¹ = −4πma`, independent of `R`.
pub fn e2(m: f64, offset: f64) -> f64 {
    -4.0 * PI * m * offset
}

/// `3m C₁¹(R, a)` evaluated through the sphere-integral closed form.
pub fn e2_from_sphere_integral(m: f64, radius: f64, offset: f64) -> Result<f64> {
    Ok(3.0 * m * c_kl(SphereIntegralSpec { radius, offset, k: 1, l: 1 })?)
}

/// Below this `τ` the power series of `f` is used.
pub const F_TAU_CROSSOVER: f64 = 1e-3;

/// Closed form of `f(τ)` appearing in the off-center variation of `V`.
pub fn f_tau(tau: f64) -> Result<f64> {
    if !(tau >= 0.0) || !(tau < 1.0) {
        return Err(Error::InvalidArgument(alloc::format!("f(tau) needs 0 <= tau < 1, got {tau}")));
    }
    if tau < F_TAU_CROSSOVER {
        return Ok(f_tau_series(tau));
    }
    let t2 = tau * tau;
    let log = -2.0 * tau.atanh();
    let num = 3.0 * (t2 * t2 * t2 - 3.0 * t2 * t2 + 3.0 * t2 - 1.0) * log + 6.0 * t2 * t2 * tau - 16.0 * t2 * tau - 6.0 * tau;
    let den = t2 * ((1.0 + tau) * (1.0 - tau)).powi(3);
    Ok(num / den)
}

/// `f(τ) = −32 Σ_n 3·binom(n+3, 3)/(2n+3) τ^{2n+1}`.
pub fn f_tau_series(tau: f64) -> f64 {
    let t2 = tau * tau;
    let mut term = tau;
    let mut sum = 0.0;
    for n in 0..200u32 {
        let c = 3.0 * binomial(n + 3, 3) / (2 * n + 3) as f64;
        let add = c * term;
        sum += add;
        if add.abs() <= 1e-18 * sum.abs() {
            break;
        }
        term *= t2;
    }
    -32.0 * sum
}

/// Mean curvature of the centered Schwarzschild sphere of Euclidean radius `r_e`.
pub fn mean_curvature_schwarzschild(m: f64, r_e: f64) -> f64 {
    let phi = 1.0 + m / (2.0 * r_e);
    2.0 / (phi * phi * r_e) - 2.0 * m / (phi.powi(3) * r_e * r_e)
}

/// `Q = m²π / (4 φ̄⁷ H̄^S R_e³) · f(τ)`.
pub fn q_closed(m: f64, r_e: f64, tau: f64) -> Result<f64> {
    let phi = 1.0 + m / (2.0 * r_e);
    let h = mean_curvature_schwarzschild(m, r_e);
    Ok(m * m * PI / (4.0 * phi.powi(7) * h * r_e.powi(3)) * f_tau(tau)?)
}

/// `λ(r) = 2m r⁻³ (1 + m/2r)⁻⁶` for the centered sphere of radius `r`.
pub fn lambda_of_r(m: f64, r: f64) -> f64 {
    let phi = 1.0 + m / (2.0 * r);
    2.0 * m / (r * r * r * phi.powi(6))
}

/// Inverse of [`lambda_of_r`] on the branch `r > m`.
pub fn r_of_lambda(m: f64, lambda: f64) -> Result<f64> {
    let top = lambda_of_r(m, m);
    if !(m > 0.0) || !(lambda > 0.0) || !(lambda < top) {
        return Err(Error::InvalidArgument(alloc::format!(
            "lambda = {lambda} is outside (0, {top}) for m = {m}"
        )));
    }
    let target = lambda.ln();
    let mut s = (2.0 * m / lambda).powf(1.0 / 3.0).max(m * 1.0001).ln();
    for _ in 0..200 {
        let r = s.exp();
        let phi = 1.0 + m / (2.0 * r);
        let g = lambda_of_r(m, r).ln() - target;
        let dg = 3.0 * (m / (r * phi) - 1.0);
        let step = g / dg;
        s -= step;
        if step.abs() < 1e-15 {
            break;
        }
    }
    Ok(s.exp())
}

/// Integral over `S_R(a e₁)` of `f(x, N)` with a Gauss–Legendre rule in
/// `cos φ` and the trapezoid rule in the azimuth about `e₁`; the resolution
/// doubles until two successive values agree to `1e-11` relative to `∫|f|`.
pub fn quad_sphere<F: Fn([f64; 3], [f64; 3]) -> f64>(f: F, radius: f64, offset: f64, resolution: usize) -> Result<f64> {
    Ok(quad_sphere_with_abs(f, radius, offset, resolution)?.0)
}

/// [`quad_sphere`] together with the same rule applied to `|f|`.
pub fn quad_sphere_with_abs<F: Fn([f64; 3], [f64; 3]) -> f64>(
    f: F,
    radius: f64,
    offset: f64,
    resolution: usize,
) -> Result<(f64, f64)> {
    check_sphere(radius, offset)?;
    let eval = |n: usize| {
        let naz = n.clamp(4, 512);
        let (x, w) = gauss_legendre(n);
        let mut total = 0.0;
        let mut abs = 0.0;
        for (c, wc) in x.iter().zip(&w) {
            let s = (1.0 - c * c).sqrt();
            for j in 0..naz {
                let (sp, cp) = (2.0 * PI * j as f64 / naz as f64).sin_cos();
                let nrm = [*c, s * cp, s * sp];
                let p = [offset + radius * nrm[0], radius * nrm[1], radius * nrm[2]];
                let v = f(p, nrm) * wc * 2.0 * PI / naz as f64 * radius * radius;
                total += v;
                abs += v.abs();
            }
        }
        (total, abs)
    };
    let mut n = resolution.max(8);
    let (mut prev, _) = eval(n);
    let mut achieved = f64::INFINITY;
    while n <= 8192 {
        n *= 2;
        let (cur, abs) = eval(n);
        achieved = (cur - prev).abs() / abs.max(f64::MIN_POSITIVE);
        if achieved <= 1e-11 {
            return Ok((cur, abs));
        }
        prev = cur;
    }
    Err(Error::QuadratureNonConvergence { achieved })
}

/// Integrand of `Q` over `S_{R_e}(a_e)` with `b = a_e/|a_e|`:
/// `3 m² /(φ̄⁷ H̄^S) · r⁻⁵ g(ρ,N)(g(b,N) − g(ρ,N) g(b,ρ))`.
pub fn q_integrand(m: f64, r_e: f64, x: [f64; 3], n: [f64; 3]) -> f64 {
    let phi = 1.0 + m / (2.0 * r_e);
    let h = mean_curvature_schwarzschild(m, r_e);
    let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
    let rho = [x[0] / r, x[1] / r, x[2] / r];
    let rn = rho[0] * n[0] + rho[1] * n[1] + rho[2] * n[2];
    3.0 * m * m / (phi.powi(7) * h) * r.powi(-5) * rn * (n[0] - rn * rho[0])
}

/// Lattice of `(k, l)` pairs needed by the sphere-integral closed forms.
pub const CKL_PAIRS: [(u32, u32); 12] =
    [(1, 1), (3, 0), (3, 1), (5, 0), (5, 1), (5, 2), (6, 1), (6, 2), (8, 0), (8, 1), (8, 2), (8, 3)];

/// Integrand `cos^l φ / r^k` for the quadrature adjudicator.
pub fn c_kl_integrand(k: u32, l: u32) -> impl Fn([f64; 3], [f64; 3]) -> f64 {
    move |x, n| {
        let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
        n[0].powi(l as i32) * r.powi(-(k as i32))
    }
}

/// Sorted list of radii sampled geometrically between two bounds.
pub fn geometric_ladder(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n <= 1 {
        return alloc::vec![lo];
    }
    (0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).collect()
}

/// One closed form compared against its reference value.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OracleCheck {
    pub quantity: &'static str,
    pub radius: f64,
    pub offset_ratio: f64,
    pub k: u32,
    pub l: u32,
    pub closed: f64,
    pub reference: f64,
    /// `|closed − reference|` over the larger of both magnitudes and the
    /// integral of the absolute integrand.
    pub rel_diff: f64,
    pub tolerance: f64,
}

impl OracleCheck {
    pub fn passed(&self) -> bool {
        self.rel_diff <= self.tolerance
    }
}

/// Radii and offset ratios on which the closed forms are checked.
pub const ORACLE_RADII: [f64; 3] = [1.0, 2.0, 10.0];
pub const ORACLE_OFFSETS: [f64; 4] = [0.0, 0.1, 0.3, 0.6];
/// Agreement required between a closed form and quadrature.
pub const ORACLE_TOLERANCE: f64 = 1e-9;

/// Every closed form on the `ORACLE_RADII × ORACLE_OFFSETS` lattice against
/// adaptive quadrature, plus the exact values of `E₁`, `E₂` and `f(0.01)`.
pub fn verification_table(m: f64) -> Result<Vec<OracleCheck>> {
    let mut out = Vec::new();
    let rel = |a: f64, b: f64, s: f64| (a - b).abs() / a.abs().max(b.abs()).max(s).max(f64::MIN_POSITIVE);
    for radius in ORACLE_RADII {
        for t in ORACLE_OFFSETS {
            let offset = t * radius;
            let row = |quantity, k, l, closed: f64, reference: f64, scale: f64, tolerance| OracleCheck {
                quantity,
                radius,
                offset_ratio: t,
                k,
                l,
                closed,
                reference,
                rel_diff: rel(closed, reference, scale),
                tolerance,
            };
            for (k, l) in CKL_PAIRS {
                let closed = c_kl(SphereIntegralSpec { radius, offset, k, l })?;
                let quad = quad_sphere(c_kl_integrand(k, l), radius, offset, 32)?;
                let scale = quad_sphere(c_kl_integrand(k, 0), radius, offset, 32)?;
                out.push(row("c_kl", k, l, closed, quad, scale, ORACLE_TOLERANCE));
            }
            let ricci = |x: [f64; 3], n: [f64; 3]| {
                let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
                let rn = (x[0] * n[0] + x[1] * n[1] + x[2] * n[2]) / r2.sqrt();
                (1.0 - 3.0 * rn * rn) / (r2 * r2.sqrt())
            };
            let e1v = e1(radius, offset)?;
            let (v, s) = quad_sphere_with_abs(ricci, radius, offset, 32)?;
            out.push(row("e1_quadrature", 0, 0, e1v, v, s, ORACLE_TOLERANCE));
            out.push(row("e1_exact", 0, 0, e1v, -8.0 * PI / radius, 0.0, ORACLE_TOLERANCE));
            let first = |x: [f64; 3], n: [f64; 3]| 3.0 * m * n[0] / (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
            let e2v = e2_from_sphere_integral(m, radius, offset)?;
            let (v, s) = quad_sphere_with_abs(first, radius, offset, 32)?;
            out.push(row("e2_quadrature", 0, 0, e2v, v, s, ORACLE_TOLERANCE));
            out.push(row("e2_exact", 0, 0, e2v, e2(m, offset), s, ORACLE_TOLERANCE));
            let q = |x, n| q_integrand(m, radius, x, n);
            let (v, s) = quad_sphere_with_abs(q, radius, offset, 32)?;
            out.push(row("q", 0, 0, q_closed(m, radius, t)?, v, s, ORACLE_TOLERANCE));
        }
    }
    let f = f_tau(0.01)?;
    out.push(OracleCheck {
        quantity: "f_tau_0.01",
        radius: 1.0,
        offset_ratio: 0.01,
        k: 0,
        l: 0,
        closed: f,
        reference: -0.32,
        rel_diff: (f / -0.32 - 1.0).abs(),
        tolerance: 0.02,
    });
    Ok(out)
}

/// The lowest `n` eigenvalues `l(l+1)` of `−Δ` on the unit sphere, with
/// multiplicity `2l+1`.
pub fn unit_sphere_eigenvalues(n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n);
    let mut l = 0usize;
    while out.len() < n {
        for _ in 0..(2 * l + 1) {
            if out.len() < n {
                out.push((l * (l + 1)) as f64);
            }
        }
        l += 1;
    }
    out
}

/// Jacobi eigenvalues `(ν − 2)/R_S² + 3λ` of the centered Schwarzschild
/// sphere of Euclidean radius `r`.
pub fn schwarzschild_jacobi_eigenvalues(m: f64, r: f64, n: usize) -> Vec<f64> {
    let rs = (1.0 + m / (2.0 * r)).powi(2) * r;
    let lam = lambda_of_r(m, r);
    unit_sphere_eigenvalues(n).into_iter().map(|nu| (nu - 2.0) / (rs * rs) + 3.0 * lam).collect()
}
