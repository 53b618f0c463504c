//! Third-order Taylor jets in three variables, used to differentiate
//! conformal factors and tensor profiles analytically.

use core::ops::{Add, Mul, Neg, Sub};

/// Value together with all partial derivatives up to third order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet3 {
    pub v: f64,
    pub d1: [f64; 3],
    pub d2: [[f64; 3]; 3],
    pub d3: [[[f64; 3]; 3]; 3],
}

impl Jet3 {
    pub const fn constant(v: f64) -> Self {
        Jet3 { v, d1: [0.0; 3], d2: [[0.0; 3]; 3], d3: [[[0.0; 3]; 3]; 3] }
    }

    /// The coordinate function `x_i` evaluated at `value`.
    pub fn variable(i: usize, value: f64) -> Self {
        let mut j = Self::constant(value);
        j.d1[i] = 1.0;
        j
    }

    pub fn coordinates(x: [f64; 3]) -> [Jet3; 3] {
        [Self::variable(0, x[0]), Self::variable(1, x[1]), Self::variable(2, x[2])]
    }

    pub fn scale(mut self, s: f64) -> Self {
        self.v *= s;
        for a in 0..3 {
            self.d1[a] *= s;
            for b in 0..3 {
                self.d2[a][b] *= s;
                for c in 0..3 {
                    self.d3[a][b][c] *= s;
                }
            }
        }
        self
    }

    /// `F(self)` given `F` and its first three derivatives at `self.v`.
    pub fn compose(&self, f0: f64, f1: f64, f2: f64, f3: f64) -> Self {
        let u = self;
        let mut out = Self::constant(f0);
        for a in 0..3 {
            out.d1[a] = f1 * u.d1[a];
            for b in 0..3 {
                out.d2[a][b] = f2 * u.d1[a] * u.d1[b] + f1 * u.d2[a][b];
                for c in 0..3 {
                    out.d3[a][b][c] = f3 * u.d1[a] * u.d1[b] * u.d1[c]
                        + f2 * (u.d2[a][b] * u.d1[c] + u.d2[a][c] * u.d1[b] + u.d2[b][c] * u.d1[a])
                        + f1 * u.d3[a][b][c];
                }
            }
        }
        out
    }

    pub fn powf(&self, p: f64) -> Self {
        #[allow(unused_imports)]
        use num_traits::Float;
        let x = self.v;
        let f0 = x.powf(p);
        let f1 = p * x.powf(p - 1.0);
        let f2 = p * (p - 1.0) * x.powf(p - 2.0);
        let f3 = p * (p - 1.0) * (p - 2.0) * x.powf(p - 3.0);
        self.compose(f0, f1, f2, f3)
    }

    pub fn powi(&self, n: i32) -> Self {
        #[allow(unused_imports)]
        use num_traits::Float;
        let x = self.v;
        let nf = n as f64;
        let p = |k: i32| if n - k == 0 { 1.0 } else { x.powi(n - k) };
        self.compose(x.powi(n), nf * p(1), nf * (nf - 1.0) * p(2), nf * (nf - 1.0) * (nf - 2.0) * p(3))
    }

    pub fn recip(&self) -> Self {
        let x = self.v;
        let r = 1.0 / x;
        self.compose(r, -r * r, 2.0 * r * r * r, -6.0 * r * r * r * r)
    }

    pub fn ln(&self) -> Self {
        #[allow(unused_imports)]
        use num_traits::Float;
        let x = self.v;
        let r = 1.0 / x;
        self.compose(x.ln(), r, -r * r, 2.0 * r * r * r)
    }

    pub fn sqrt(&self) -> Self {
        self.powf(0.5)
    }

    pub fn laplacian(&self) -> f64 {
        self.d2[0][0] + self.d2[1][1] + self.d2[2][2]
    }
}

impl Add for Jet3 {
    type Output = Jet3;
    fn add(mut self, o: Jet3) -> Jet3 {
        self.v += o.v;
        for a in 0..3 {
            self.d1[a] += o.d1[a];
            for b in 0..3 {
                self.d2[a][b] += o.d2[a][b];
                for c in 0..3 {
                    self.d3[a][b][c] += o.d3[a][b][c];
                }
            }
        }
        self
    }
}

impl Sub for Jet3 {
    type Output = Jet3;
    fn sub(self, o: Jet3) -> Jet3 {
        self + (-o)
    }
}

impl Neg for Jet3 {
    type Output = Jet3;
    fn neg(self) -> Jet3 {
        self.scale(-1.0)
    }
}

impl Add<f64> for Jet3 {
    type Output = Jet3;
    fn add(mut self, o: f64) -> Jet3 {
        self.v += o;
        self
    }
}

impl Mul<f64> for Jet3 {
    type Output = Jet3;
    fn mul(self, s: f64) -> Jet3 {
        self.scale(s)
    }
}

impl Mul for Jet3 {
    type Output = Jet3;
    fn mul(self, w: Jet3) -> Jet3 {
        let u = &self;
        let mut out = Jet3::constant(u.v * w.v);
        for a in 0..3 {
            out.d1[a] = u.d1[a] * w.v + u.v * w.d1[a];
            for b in 0..3 {
                out.d2[a][b] =
                    u.d2[a][b] * w.v + u.d1[a] * w.d1[b] + u.d1[b] * w.d1[a] + u.v * w.d2[a][b];
                for c in 0..3 {
                    out.d3[a][b][c] = u.d3[a][b][c] * w.v
                        + u.d2[a][b] * w.d1[c]
                        + u.d2[a][c] * w.d1[b]
                        + u.d2[b][c] * w.d1[a]
                        + u.d1[a] * w.d2[b][c]
                        + u.d1[b] * w.d2[a][c]
                        + u.d1[c] * w.d2[a][b]
                        + u.v * w.d3[a][b][c];
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eval(f: impl Fn([Jet3; 3]) -> Jet3, x: [f64; 3]) -> Jet3 {
        f(Jet3::coordinates(x))
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let f = |x: [Jet3; 3]| {
            let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
            (x[0] * x[1] + 1.5) * r2.powf(-1.5) + (x[2] + 3.0).ln()
        };
        let x0 = [0.7, -0.4, 1.1];
        let j = eval(f, x0);
        let h = 1e-5;
        for a in 0..3 {
            let mut xp = x0;
            let mut xm = x0;
            xp[a] += h;
            xm[a] -= h;
            let (jp, jm) = (eval(f, xp), eval(f, xm));
            assert!(((jp.v - jm.v) / (2.0 * h) - j.d1[a]).abs() < 1e-8);
            for b in 0..3 {
                assert!(((jp.d1[b] - jm.d1[b]) / (2.0 * h) - j.d2[a][b]).abs() < 1e-7);
                for c in 0..3 {
                    let fd = (jp.d2[b][c] - jm.d2[b][c]) / (2.0 * h);
                    assert!((fd - j.d3[a][b][c]).abs() < 1e-6, "{a}{b}{c}");
                }
            }
        }
    }

    #[test]
    fn newtonian_potential_is_harmonic() {
        let j = eval(|x| (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).powf(-0.5), [0.3, 1.2, -2.0]);
        assert!(j.laplacian().abs() < 1e-14);
    }
}
