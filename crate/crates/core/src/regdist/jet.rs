//! Second-order jets in the three variables `X = (x', x_n, y)`.

use std::ops::{Add, Mul, Neg, Sub};

/// Value, gradient and Hessian of a scalar function at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet {
    pub v: f64,
    pub g: [f64; 3],
    pub h: [[f64; 3]; 3],
}

impl Jet {
    pub fn constant(v: f64) -> Self {
        Self {
            v,
            g: [0.0; 3],
            h: [[0.0; 3]; 3],
        }
    }

    /// The coordinate function `X_i` evaluated at `value`.
    pub fn variable(i: usize, value: f64) -> Self {
        let mut j = Self::constant(value);
        j.g[i] = 1.0;
        j
    }

    /// `f ∘ self` given `f`, `f'`, `f''` at `self.v`.
    pub fn compose(self, f0: f64, f1: f64, f2: f64) -> Self {
        let mut out = Self::constant(f0);
        for i in 0..3 {
            out.g[i] = f1 * self.g[i];
            for k in 0..3 {
                out.h[i][k] = f1 * self.h[i][k] + f2 * self.g[i] * self.g[k];
            }
        }
        out
    }

    pub fn scale(self, c: f64) -> Self {
        self.compose(c * self.v, c, 0.0)
    }

    pub fn add_scalar(self, c: f64) -> Self {
        self.compose(self.v + c, 1.0, 0.0)
    }

    pub fn sqrt(self) -> Self {
        let r = self.v.sqrt();
        self.compose(r, 0.5 / r, -0.25 / (r * self.v))
    }

    pub fn powf(self, p: f64) -> Self {
        let v = self.v;
        let f0 = v.powf(p);
        self.compose(f0, p * f0 / v, p * (p - 1.0) * f0 / (v * v))
    }

    pub fn recip(self) -> Self {
        let v = self.v;
        self.compose(1.0 / v, -1.0 / (v * v), 2.0 / (v * v * v))
    }

    pub fn div(self, other: Self) -> Self {
        self * other.recip()
    }

    pub fn grad_norm(&self) -> f64 {
        self.g.iter().map(|g| g * g).sum::<f64>().sqrt()
    }

    pub fn laplacian(&self) -> f64 {
        self.h[0][0] + self.h[1][1] + self.h[2][2]
    }

    /// `L_a = div(|y|^a ∇)` applied at a point with `y ≠ 0`.
    pub fn la(&self, a: f64, y: f64) -> f64 {
        y.abs().powf(a) * (self.laplacian() + a * self.g[2] / y)
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(mut self, o: Jet) -> Jet {
        self.v += o.v;
        for i in 0..3 {
            self.g[i] += o.g[i];
            for k in 0..3 {
                self.h[i][k] += o.h[i][k];
            }
        }
        self
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        self + (-o)
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        let mut out = Jet::constant(self.v * o.v);
        for i in 0..3 {
            out.g[i] = self.g[i] * o.v + self.v * o.g[i];
            for k in 0..3 {
                out.h[i][k] = self.h[i][k] * o.v
                    + self.v * o.h[i][k]
                    + self.g[i] * o.g[k]
                    + self.g[k] * o.g[i];
            }
        }
        out
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, c: f64) -> Jet {
        self.scale(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_check(f: impl Fn([f64; 3]) -> Jet, x: [f64; 3]) {
        let j = f(x);
        let e = 1e-4;
        for i in 0..3 {
            let mut xp = x;
            let mut xm = x;
            xp[i] += e;
            xm[i] -= e;
            let (p, m) = (f(xp), f(xm));
            let gi = (p.v - m.v) / (2.0 * e);
            assert!((gi - j.g[i]).abs() < 1e-6 * (1.0 + gi.abs()), "g[{i}] {gi} {}", j.g[i]);
            for k in 0..3 {
                let hik = (p.g[k] - m.g[k]) / (2.0 * e);
                assert!((hik - j.h[i][k]).abs() < 1e-6 * (1.0 + hik.abs()), "h[{i}][{k}]");
            }
        }
    }

    #[test]
    fn algebra_matches_finite_differences() {
        let f = |x: [f64; 3]| {
            let (a, b, c) = (
                Jet::variable(0, x[0]),
                Jet::variable(1, x[1]),
                Jet::variable(2, x[2]),
            );
            let r = (a * a + b * b + c * c).sqrt();
            let q = (r + b).scale(0.5).powf(0.3);
            q.div(r.add_scalar(1.0)) - (a * c).recip() * 0.1
        };
        fd_check(f, [0.3, -0.2, 0.5]);
        fd_check(f, [-0.7, 0.4, 0.25]);
    }

    #[test]
    fn la_of_radial_profile() {
        // |y|^{1-a} is a-harmonic in y.
        let a = 0.4;
        let y = 0.3;
        let j = Jet::variable(2, y).powf(1.0 - a);
        assert!(j.la(a, y).abs() < 1e-12);
    }
}
