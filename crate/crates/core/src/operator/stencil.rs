//! Face-centered five-point discretization of `div(W ∇u)` for separable
//! weights `W(x, y) = c |x|^{ex} |y|^{ey}`.
//!
//! The factor of the weight that varies along a face is averaged over the
//! face; the factor that varies across it enters through its harmonic mean
//! between the two nodes. Every face weight stays finite and positive,
//! including faces touching `y = 0` where `|y|^a` vanishes or blows up, and
//! the one-dimensional profiles `|y|^{1-a}` are reproduced exactly.

use rayon::prelude::*;

use super::grid::{Field, Grid2D};
use crate::error::{Error, Result};
use crate::geometry::Params;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Weight {
    pub coef: f64,
    pub ex: f64,
    pub ey: f64,
}

impl Weight {
    /// `|y|^a`, the weight of `L_a`.
    pub fn la(params: &Params) -> Self {
        Self {
            coef: 1.0,
            ex: 0.0,
            ey: params.a(),
        }
    }

    /// `|2 z1 z2|^a`, the weight of the zipped operator.
    pub fn la_bar(params: &Params) -> Self {
        Self {
            coef: 2f64.powf(params.a()),
            ex: params.a(),
            ey: params.a(),
        }
    }

    pub fn unit() -> Self {
        Self {
            coef: 1.0,
            ex: 0.0,
            ey: 0.0,
        }
    }

    pub fn value(&self, x: f64, y: f64) -> f64 {
        self.coef * point_power(x, self.ex) * point_power(y, self.ey)
    }
}

fn point_power(t: f64, p: f64) -> f64 {
    if p == 0.0 {
        1.0
    } else {
        t.abs().powf(p)
    }
}

/// How the weight factor that varies across a face is sampled.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum FaceRule {
    /// Harmonic mean of `|t|^p` over the gap `[c - h/2, c + h/2]` between
    /// the two nodes: the exact two-point flux of the profile `|t|^{1-p}`,
    /// which carries a nonzero flux through `t = 0`.
    #[default]
    HarmonicMean,
    /// `|c|^p` at the face center: exact for the flux of `t^2`, the leading
    /// profile of fields that are even and smooth across `t = 0`.
    Midpoint,
}

fn normal_weight(rule: FaceRule, c: f64, h: f64, p: f64) -> f64 {
    if p == 0.0 {
        return 1.0;
    }
    match rule {
        FaceRule::HarmonicMean => 1.0 / face_average(c, h, -p),
        FaceRule::Midpoint => c.abs().powf(p),
    }
}

/// Mean of `|t|^p` over `[c - h/2, c + h/2]`.
pub fn face_average(c: f64, h: f64, p: f64) -> f64 {
    if p == 0.0 {
        return 1.0;
    }
    let half = 0.5 * h;
    let ac = c.abs();
    if ac > half {
        // (|c|^p / (2δ(p+1))) ((1+δ)^{p+1} - (1-δ)^{p+1}), δ = h / (2|c|),
        // written with expm1/ln_1p to avoid cancellation for small δ.
        let delta = half / ac;
        let q = p + 1.0;
        let diff = (q * delta.ln_1p()).exp_m1() - (q * (-delta).ln_1p()).exp_m1();
        ac.powf(p) * diff / (2.0 * delta * q)
    } else {
        let prim = |t: f64| t.signum() * t.abs().powf(p + 1.0) / (p + 1.0);
        (prim(c + half) - prim(c - half)) / h
    }
}

/// Per-node face weights of the discrete operator. For a reflected grid the
/// south face of row 0 mirrors the north face.
#[derive(Clone, Debug)]
pub struct Stencil {
    pub grid: Grid2D,
    pub weight: Weight,
    pub east: Vec<f64>,
    pub west: Vec<f64>,
    pub north: Vec<f64>,
    pub south: Vec<f64>,
    /// Optional multiplier applied to the operator at each node (e.g.
    /// `(4|z|^2)^{-1}` for the zipped operator).
    pub scale: Option<Vec<f64>>,
}

impl Stencil {
    pub fn new(grid: Grid2D, weight: Weight) -> Self {
        Self::with_rule(grid, weight, FaceRule::HarmonicMean)
    }

    pub fn with_rule(grid: Grid2D, weight: Weight, rule: FaceRule) -> Self {
        let n = grid.len();
        let h = grid.h;
        let mut east = vec![0.0; n];
        let mut west = vec![0.0; n];
        let mut north = vec![0.0; n];
        let mut south = vec![0.0; n];
        let col_avg: Vec<f64> = (0..grid.nx).map(|i| face_average(grid.x(i), h, weight.ex)).collect();
        let row_avg: Vec<f64> = (0..grid.ny)
            .map(|j| {
                if grid.reflected && j == 0 {
                    // Row-0 cell is [-h/2, h/2]; its east/west faces span it.
                    face_average(0.0, h, weight.ey)
                } else {
                    face_average(grid.y(j), h, weight.ey)
                }
            })
            .collect();
        for j in 0..grid.ny {
            let y = grid.y(j);
            for i in 0..grid.nx {
                let x = grid.x(i);
                let k = grid.index(i, j);
                east[k] = weight.coef * normal_weight(rule, x + 0.5 * h, h, weight.ex) * row_avg[j];
                west[k] = weight.coef * normal_weight(rule, x - 0.5 * h, h, weight.ex) * row_avg[j];
                north[k] = weight.coef * col_avg[i] * normal_weight(rule, y + 0.5 * h, h, weight.ey);
                south[k] = if grid.reflected && j == 0 {
                    north[k]
                } else {
                    weight.coef * col_avg[i] * normal_weight(rule, y - 0.5 * h, h, weight.ey)
                };
            }
        }
        Self {
            grid,
            weight,
            east,
            west,
            north,
            south,
            scale: None,
        }
    }

    pub fn with_scale(mut self, scale: Vec<f64>) -> Self {
        assert_eq!(scale.len(), self.grid.len());
        self.scale = Some(scale);
        self
    }

    /// Nodes where the operator is defined: interior nodes, plus row 0 of a
    /// reflected grid away from the side walls.
    #[inline]
    pub fn has_stencil(&self, i: usize, j: usize) -> bool {
        !self.grid.is_outer_boundary(i, j)
    }

    /// Horizontal and vertical parts of the unscaled operator at an interior
    /// node.
    #[inline]
    pub fn parts(&self, u: &[f64], i: usize, j: usize) -> (f64, f64) {
        let g = &self.grid;
        let k = g.index(i, j);
        let h2 = g.h * g.h;
        let uc = u[k];
        let ue = u[k + 1];
        let uw = u[k - 1];
        let un = u[k + g.nx];
        let us = if g.reflected && j == 0 { un } else { u[k - g.nx] };
        let horizontal = (self.east[k] * (ue - uc) + self.west[k] * (uw - uc)) / h2;
        let vertical = (self.north[k] * (un - uc) + self.south[k] * (us - uc)) / h2;
        (horizontal, vertical)
    }

    #[inline]
    pub fn node_scale(&self, k: usize) -> f64 {
        self.scale.as_ref().map_or(1.0, |s| s[k])
    }

    /// Discrete operator on every interior node; outer-boundary nodes are 0.
    pub fn apply(&self, f: &Field) -> Result<Field> {
        if !f.grid.same_shape(&self.grid) {
            return Err(Error::GridMismatch("field and stencil grids differ".into()));
        }
        let g = self.grid;
        let u = &f.values;
        let mut out = vec![0.0; g.len()];
        out.par_chunks_mut(g.nx).enumerate().for_each(|(j, row)| {
            for (i, slot) in row.iter_mut().enumerate() {
                if self.has_stencil(i, j) {
                    let (hx, vy) = self.parts(u, i, j);
                    *slot = self.node_scale(g.index(i, j)) * (hx + vy);
                }
            }
        });
        Field::from_values(g, out)
    }

    /// Residual together with a cancellation scale at every node with a
    /// stencil. Along each axis the face-flux difference splits exactly as
    /// `W̄ δ²u + δW δu` (the discrete `W ∂²u` and `∂W ∂u`); the scale is the
    /// sum of the absolute values of these four terms, scaled like the
    /// residual.
    pub fn residual_parts(&self, f: &Field) -> Result<(Field, Field)> {
        if !f.grid.same_shape(&self.grid) {
            return Err(Error::GridMismatch("field and stencil grids differ".into()));
        }
        let g = self.grid;
        let h2 = g.h * g.h;
        let u = &f.values;
        let mut res = vec![0.0; g.len()];
        let mut scale = vec![0.0; g.len()];
        for j in 0..g.ny {
            for i in 0..g.nx {
                if !self.has_stencil(i, j) {
                    continue;
                }
                let k = g.index(i, j);
                let uc = u[k];
                let (ue, uw, un) = (u[k + 1], u[k - 1], u[k + g.nx]);
                let us = if g.reflected && j == 0 { un } else { u[k - g.nx] };
                let split = |wp: f64, wm: f64, up: f64, um: f64| {
                    let second = 0.5 * (wp + wm) * (up - 2.0 * uc + um) / h2;
                    let first = 0.5 * (wp - wm) * (up - um) / h2;
                    (second, first)
                };
                let (sx, fx) = split(self.east[k], self.west[k], ue, uw);
                let (sy, fy) = split(self.north[k], self.south[k], un, us);
                let c = self.node_scale(k);
                res[k] = c * (sx + fx + sy + fy);
                scale[k] = c.abs() * (sx.abs() + fx.abs() + sy.abs() + fy.abs());
            }
        }
        Ok((Field::from_values(g, res)?, Field::from_values(g, scale)?))
    }

    /// Weighted Dirichlet energy `½ Σ_faces W_f (Δu)^2`, with the faces of a
    /// reflected row 0 counted with their half cells.
    pub fn energy(&self, u: &[f64]) -> f64 {
        let g = &self.grid;
        let mut e = 0.0;
        for j in 0..g.ny {
            let vol = if g.reflected && j == 0 { 0.5 } else { 1.0 };
            for i in 0..g.nx {
                let k = g.index(i, j);
                if i + 1 < g.nx {
                    let d = u[k + 1] - u[k];
                    e += vol * self.east[k] * d * d;
                }
                if j + 1 < g.ny {
                    let d = u[k + g.nx] - u[k];
                    e += self.north[k] * d * d;
                }
            }
        }
        0.5 * e
    }
}

/// `L_a f` on every interior node.
pub fn apply_la(f: &Field, params: &Params) -> Result<Field> {
    Stencil::new(f.grid, Weight::la(params)).apply(f)
}

/// Stencil of the zipped operator `(4|z|^2)^{-1} div(|2 z1 z2|^a ∇u)`. The
/// node scale is 0 at the origin, where it is undefined.
pub fn la_bar_stencil(grid: Grid2D, params: &Params) -> Stencil {
    let scale = (0..grid.len())
        .map(|k| {
            let (i, j) = (k % grid.nx, k / grid.nx);
            let (x, y) = (grid.x(i), grid.y(j));
            let r2 = x * x + y * y;
            if r2 == 0.0 {
                0.0
            } else {
                0.25 / r2
            }
        })
        .collect();
    Stencil::new(grid, Weight::la_bar(params)).with_scale(scale)
}

/// `L̄_a f` on every interior node.
pub fn apply_la_bar(f: &Field, params: &Params) -> Result<Field> {
    la_bar_stencil(f.grid, params).apply(f)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn face_average_matches_quadrature() {
        for &p in &[-0.7, -0.5, 0.3, 0.9] {
            for &(c, h) in &[(0.0, 0.1), (0.05, 0.1), (0.3, 0.1), (5.0, 0.01), (-0.2, 0.1)] {
                let gl = crate::quadrature::GaussLegendre::new(40);
                // Split at 0 so the quadrature sees a smooth integrand.
                let (lo, hi) = (c - 0.5 * h, c + 0.5 * h);
                let f = |t: f64| t.abs().powf(p);
                let exact = if lo <= 0.0 && hi >= 0.0 {
                    let pr = |t: f64| t.abs().powf(p + 1.0) / (p + 1.0);
                    (pr(lo) + pr(hi)) / h
                } else {
                    gl.integrate(lo, hi, f) / h
                };
                let got = face_average(c, h, p);
                assert!((got - exact).abs() < 1e-12 * exact, "p={p} c={c}: {got} vs {exact}");
            }
        }
    }

    #[test]
    fn constant_is_annihilated() {
        let p = Params::from_a(-0.4).unwrap();
        let g = Grid2D::reflected(9, 7, 0.1, -0.4).unwrap();
        let f = Field::from_fn(g, |_, _| 3.5);
        let r = apply_la(&f, &p).unwrap();
        assert!(r.values.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn harmonic_quadratic_at_a_zero() {
        let p = Params::from_a(0.0).unwrap();
        let g = Grid2D::new(11, 11, 0.1, -0.5, -0.5).unwrap();
        let f = Field::from_fn(g, |x, y| x * x - y * y);
        let r = apply_la(&f, &p).unwrap();
        assert!(r.values.iter().all(|v| v.abs() < 1e-10));
    }

    #[test]
    fn one_dimensional_profiles_are_exact() {
        // |y|^{2s} is a-harmonic for y != 0 and even; the harmonic-mean face
        // weights reproduce it on every row, including the reflected row 0.
        for s in [0.2, 0.5, 0.85] {
            let p = Params::from_s(s).unwrap();
            let g = Grid2D::reflected(9, 9, 1.0 / 8.0, -0.5).unwrap();
            let f = Field::from_fn(g, |_, y| y.abs().powf(2.0 * s));
            let r = apply_la(&f, &p).unwrap();
            for j in 1..g.ny - 1 {
                for i in 1..g.nx - 1 {
                    assert!(r.at(i, j).abs() < 1e-11, "s={s} ({i},{j}): {}", r.at(i, j));
                }
            }
        }
        // ū_0 ∝ |z1|^{2s} sgn z1 under the zipped operator.
        let p = Params::from_a(-0.5).unwrap();
        let g = Grid2D::new(9, 9, 0.25, -1.0, -1.0).unwrap();
        let f = Field::from_fn(g, |x, _| x.signum() * x.abs().powf(2.0 * p.s()));
        let r = apply_la_bar(&f, &p).unwrap();
        assert!(r.values.iter().all(|v| v.abs() < 1e-11));
    }

    #[test]
    fn la_bar_reduces_at_a_zero() {
        let p = Params::from_a(0.0).unwrap();
        let g = Grid2D::new(9, 9, 0.125, -0.5, -0.5).unwrap();
        let f = Field::from_fn(g, |x, y| (x * 3.0).sin() * y.exp());
        let bar = apply_la_bar(&f, &p).unwrap();
        let plain = apply_la(&f, &p).unwrap();
        for j in 1..8 {
            for i in 1..8 {
                let (x, y) = (g.x(i), g.y(j));
                let r2 = x * x + y * y;
                if r2 > 0.0 {
                    let expect = plain.at(i, j) / (4.0 * r2);
                    assert!((bar.at(i, j) - expect).abs() < 1e-12 * (1.0 + expect.abs()));
                }
            }
        }
    }

    #[test]
    fn reflected_stencil_matches_full_grid_for_even_data() {
        let p = Params::from_a(0.4).unwrap();
        let full = Grid2D::new(9, 9, 0.125, -0.5, -0.5).unwrap();
        let half = Grid2D::reflected(9, 5, 0.125, -0.5).unwrap();
        let u = |x: f64, y: f64| (x + 0.3).powi(2) * (1.0 + y * y) + y.abs().powf(1.6);
        let rf = apply_la(&Field::from_fn(full, u), &p).unwrap();
        let rh = apply_la(&Field::from_fn(half, u), &p).unwrap();
        for j in 0..4 {
            for i in 1..8 {
                let a = rf.at(i, j + 4);
                let b = rh.at(i, j);
                assert!((a - b).abs() < 1e-12 * (1.0 + a.abs()), "{i} {j}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn stencil_is_symmetric_after_half_cell_scaling() {
        let p = Params::from_a(-0.6).unwrap();
        let g = Grid2D::reflected(6, 5, 0.2, -0.5).unwrap();
        let st = Stencil::new(g, Weight::la(&p));
        for j in 0..g.ny - 1 {
            let vol = if j == 0 { 0.5 } else { 1.0 };
            for i in 0..g.nx - 1 {
                let k = g.index(i, j);
                // Horizontal coupling within a row.
                assert!((st.east[k] - st.west[k + 1]).abs() < 1e-14 * st.east[k]);
                // Vertical coupling: row j north vs row j+1 south, with the
                // row-0 south face doubled before scaling.
                let up = g.index(i, j + 1);
                let down_coupling = vol * if j == 0 { st.north[k] + st.south[k] } else { st.north[k] };
                let up_coupling = st.south[up];
                assert!((down_coupling - up_coupling).abs() < 1e-14 * up_coupling);
            }
        }
    }
}
