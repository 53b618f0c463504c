//! Real orthonormal spherical harmonics and the matching solid harmonics.
//!
//! `Y_{l,0} = P̄_l^0(cos θ)`, `Y_{l,m} = √2 P̄_l^m(cos θ) cos mφ` and
//! `Y_{l,-m} = √2 P̄_l^m(cos θ) sin mφ` for `m > 0`, where `P̄` carries the
//! `L²(S²)` normalisation and no Condon–Shortley phase.

use crate::jet::Jet3;
use alloc::vec::Vec;
use core::f64::consts::{PI, SQRT_2};
#[allow(unused_imports)]
use num_traits::Float;

/// Number of real harmonics of degree at most `l`.
pub const fn sh_count(l: usize) -> usize {
    (l + 1) * (l + 1)
}

/// Position of `(l, m)` in a coefficient vector, `-l ≤ m ≤ l`.
pub const fn sh_index(l: usize, m: i32) -> usize {
    ((l * l + l) as i64 + m as i64) as usize
}

/// Inverse of [`sh_index`].
pub fn sh_degree_order(idx: usize) -> (usize, i32) {
    let l = (idx as f64).sqrt() as usize;
    let l = if (l + 1) * (l + 1) <= idx { l + 1 } else if l * l > idx { l - 1 } else { l };
    (l, idx as i32 - (l * l + l) as i32)
}

/// Offset of `(l, m)`, `0 ≤ m ≤ l`, in a triangular Legendre table.
pub const fn tri_index(l: usize, m: usize) -> usize {
    l * (l + 1) / 2 + m
}

/// Normalised associated Legendre values `P̄_l^m(cos θ)` for `l ≤ lmax`,
/// laid out by [`tri_index`].
pub fn legendre_table(lmax: usize, cos_t: f64, sin_t: f64) -> Vec<f64> {
    let mut p = alloc::vec![0.0; tri_index(lmax, lmax) + 1];
    let mut pmm = 1.0 / (4.0 * PI).sqrt();
    for m in 0..=lmax {
        if m > 0 {
            let mf = m as f64;
            pmm *= ((2.0 * mf + 1.0) / (2.0 * mf)).sqrt() * sin_t;
        }
        p[tri_index(m, m)] = pmm;
        if m < lmax {
            p[tri_index(m + 1, m)] = (2.0 * m as f64 + 3.0).sqrt() * cos_t * pmm;
        }
        for l in (m + 2)..=lmax {
            let (lf, mf) = (l as f64, m as f64);
            let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
            let b = (((lf - 1.0) * (lf - 1.0) - mf * mf) / (4.0 * (lf - 1.0) * (lf - 1.0) - 1.0)).sqrt();
            p[tri_index(l, m)] = a * (cos_t * p[tri_index(l - 1, m)] - b * p[tri_index(l - 2, m)]);
        }
    }
    p
}

/// All real harmonics of degree `≤ lmax` at the unit vector `w`.
pub fn real_sh(lmax: usize, w: [f64; 3]) -> Vec<f64> {
    let cos_t = w[2].clamp(-1.0, 1.0);
    let rho = (w[0] * w[0] + w[1] * w[1]).sqrt();
    let phi = if rho > 0.0 { w[1].atan2(w[0]) } else { 0.0 };
    let p = legendre_table(lmax, cos_t, rho);
    let mut y = alloc::vec![0.0; sh_count(lmax)];
    for l in 0..=lmax {
        y[sh_index(l, 0)] = p[tri_index(l, 0)];
        for m in 1..=l {
            let (s, c) = (m as f64 * phi).sin_cos();
            let v = SQRT_2 * p[tri_index(l, m)];
            y[sh_index(l, m as i32)] = v * c;
            y[sh_index(l, -(m as i32))] = v * s;
        }
    }
    y
}

fn factorial_ratio(l: usize, m: usize) -> f64 {
    // (l-m)!/(l+m)!
    let mut r = 1.0;
    for k in (l - m + 1)..=(l + m) {
        r /= k as f64;
    }
    r
}

/// Regular solid harmonic `r^l Y_{lm}(x/r)` as a polynomial jet.
pub fn regular_solid(l: usize, m: i32, x: [f64; 3]) -> Jet3 {
    let [jx, jy, jz] = Jet3::coordinates(x);
    let am = m.unsigned_abs() as usize;
    // (x + i y)^|m|
    let mut c = Jet3::constant(1.0);
    let mut s = Jet3::constant(0.0);
    for _ in 0..am {
        let c2 = jx * c - jy * s;
        let s2 = jx * s + jy * c;
        c = c2;
        s = s2;
    }
    let r2 = jx * jx + jy * jy + jz * jz;
    let mut dfact = 1.0;
    for k in 1..=am {
        dfact *= (2 * k - 1) as f64;
    }
    let mut p_prev = Jet3::constant(0.0);
    let mut p = Jet3::constant(dfact);
    for ll in (am + 1)..=l {
        let lf = ll as f64;
        let next = if ll == am + 1 {
            jz * p * (2.0 * am as f64 + 1.0)
        } else {
            (jz * p * (2.0 * lf - 1.0) - r2 * p_prev * (lf + am as f64 - 1.0)) * (1.0 / (lf - am as f64))
        };
        p_prev = p;
        p = next;
    }
    let mut norm = ((2.0 * l as f64 + 1.0) / (4.0 * PI) * factorial_ratio(l, am)).sqrt();
    if m != 0 {
        norm *= SQRT_2;
    }
    let angular = if m >= 0 { c } else { s };
    (p * angular).scale(norm)
}

/// Decaying solid harmonic `r^{-(l+1)} Y_{lm}(x/r)`, harmonic away from 0.
pub fn irregular_solid(l: usize, m: i32, x: [f64; 3]) -> Jet3 {
    let [jx, jy, jz] = Jet3::coordinates(x);
    let r2 = jx * jx + jy * jy + jz * jz;
    regular_solid(l, m, x) * r2.powf(-(2.0 * l as f64 + 1.0) / 2.0)
}
