//! Polynomials in `(x, r)`, the approximating-polynomial linear systems,
//! blow-up homogeneity slopes and polynomial fits of boundary-Harnack
//! quotients.
//!
//! Multi-indices carry two slots: `mu[0]` is the power of the tangential
//! variable `x'` (always 0 when `dim == 1`) and `mu[1]` the power of the
//! normal variable `x_n`.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::{profile_from_distance, Params, Point, SlitGeometry};
use crate::obstacle::{extend_obstacle, free_boundary, FreeBoundaryPoint, ObstacleSolution, Side};
use crate::operator::{apply_la, Field, Grid2D};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Monomial {
    pub mu: [u32; 2],
    pub m: u32,
}

impl Monomial {
    pub const fn new(mu: [u32; 2], m: u32) -> Self {
        Self { mu, m }
    }

    pub fn degree(&self) -> u32 {
        self.mu[0] + self.mu[1] + self.m
    }

    fn fits(&self, dim: usize, degree: u32) -> bool {
        (dim == 2 || self.mu[0] == 0) && self.degree() <= degree
    }
}

/// All monomials of total degree `<= degree`, ordered by total degree, then
/// by the power of `r`, then by `mu`. This is the elimination order.
pub fn monomials(dim: usize, degree: u32) -> Vec<Monomial> {
    let mut out = Vec::new();
    for g in 0..=degree {
        for m in 0..=g {
            let rest = g - m;
            if dim == 1 {
                out.push(Monomial::new([0, rest], m));
            } else {
                for t in 0..=rest {
                    out.push(Monomial::new([t, rest - t], m));
                }
            }
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub mono: Monomial,
    pub coeff: f64,
}

/// `P(x, r) = Σ p_{μm} x^μ r^m` with every monomial of degree `<= degree`
/// stored (zero-extended).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolyXR {
    pub dim: usize,
    pub degree: u32,
    pub terms: Vec<Term>,
}

impl PolyXR {
    pub fn zeros(dim: usize, degree: u32) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidParams(format!("dimension {dim} is not 1 or 2")));
        }
        let terms = monomials(dim, degree)
            .into_iter()
            .map(|mono| Term { mono, coeff: 0.0 })
            .collect();
        Ok(Self { dim, degree, terms })
    }

    /// Coefficient of a monomial; 0 for any monomial outside the polynomial.
    pub fn get(&self, mono: Monomial) -> f64 {
        if !mono.fits(self.dim, self.degree) {
            return 0.0;
        }
        self.terms
            .iter()
            .find(|t| t.mono == mono)
            .map_or(0.0, |t| t.coeff)
    }

    pub fn set(&mut self, mono: Monomial, coeff: f64) -> Result<()> {
        match self.terms.iter_mut().find(|t| t.mono == mono) {
            Some(t) => {
                t.coeff = coeff;
                Ok(())
            }
            None => Err(Error::InvalidParams(format!(
                "monomial {mono:?} does not fit dimension {} and degree {}",
                self.dim, self.degree
            ))),
        }
    }

    /// `‖P‖ = max |p_{μm}|`.
    pub fn norm(&self) -> f64 {
        self.terms.iter().map(|t| t.coeff.abs()).fold(0.0, f64::max)
    }

    pub fn eval(&self, xp: f64, xn: f64, r: f64) -> f64 {
        self.terms
            .iter()
            .map(|t| t.coeff * xp.powi(t.mono.mu[0] as i32) * xn.powi(t.mono.mu[1] as i32) * r.powi(t.mono.m as i32))
            .sum()
    }

    pub fn max_abs_diff(&self, other: &PolyXR) -> f64 {
        let degree = self.degree.max(other.degree);
        let dim = self.dim.max(other.dim);
        monomials(dim, degree)
            .into_iter()
            .map(|m| (self.get(m) - other.get(m)).abs())
            .fold(0.0, f64::max)
    }
}

/// One coefficient `c^{μm}_{σl}` of the perturbation: it multiplies
/// `p_{col}` in the equation of `row = (σ, l)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Perturbation {
    pub row: Monomial,
    pub col: Monomial,
    pub value: f64,
}

/// The system
/// `A_{σl} = (l+1)(l+2+2σ_n) p_{σ,l+1} + 2s(σ_n+1) p_{σ+n̄,l}
///         + Σ_i (σ_i+1)(σ_i+2) p_{σ+2ī,l-1} + c^{μm}_{σl} p_{μm}`
/// for `|σ| + l <= k`, whose unknowns are the coefficients with `m >= 1` of a
/// degree `k + 1` polynomial and whose data are `A` and the seed `p_{μ0}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ApproxSystem {
    pub k: u32,
    pub dim: usize,
    pub params: Params,
    pub perturbation: Vec<Perturbation>,
    /// `A_{σl}` as a degree-`k` polynomial.
    pub rhs: PolyXR,
    /// `p_{μ0}` as a degree-`k+1` polynomial with no `r` terms.
    pub seed: PolyXR,
}

impl ApproxSystem {
    /// Flat system (`c ≡ 0`) with zero data.
    pub fn flat(k: u32, dim: usize, params: Params) -> Result<Self> {
        Ok(Self {
            k,
            dim,
            params,
            perturbation: Vec::new(),
            rhs: PolyXR::zeros(dim, k)?,
            seed: PolyXR::zeros(dim, k + 1)?,
        })
    }

    /// Random data in `[-1, 1]` and, when `c_max > 0`, a dense perturbation
    /// with entries in `[-c_max, c_max]` obeying the grading condition.
    pub fn random(k: u32, dim: usize, params: Params, c_max: f64, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut sys = Self::flat(k, dim, params)?;
        for t in sys.rhs.terms.iter_mut() {
            t.coeff = rng.gen_range(-1.0..=1.0);
        }
        for t in sys.seed.terms.iter_mut() {
            if t.mono.m == 0 {
                t.coeff = rng.gen_range(-1.0..=1.0);
            }
        }
        if c_max > 0.0 {
            let rows = monomials(dim, k);
            for row in &rows {
                for col in monomials(dim, row.degree()) {
                    sys.perturbation.push(Perturbation {
                        row: *row,
                        col,
                        value: rng.gen_range(-c_max..=c_max),
                    });
                }
            }
        }
        Ok(sys)
    }

    /// Grading condition `|μ| + m <= |σ| + l <= k`, plus shape checks on the
    /// data.
    pub fn validate(&self) -> Result<()> {
        if self.rhs.dim != self.dim || self.seed.dim != self.dim {
            return Err(Error::InvalidParams("system data have the wrong dimension".into()));
        }
        if self.rhs.degree != self.k || self.seed.degree != self.k + 1 {
            return Err(Error::InvalidParams(format!(
                "rhs must have degree {} and seed degree {}",
                self.k,
                self.k + 1
            )));
        }
        if let Some(t) = self.seed.terms.iter().find(|t| t.mono.m > 0 && t.coeff != 0.0) {
            return Err(Error::InvalidParams(format!(
                "seed may only fix p_(μ,0); got a coefficient on {:?}",
                t.mono
            )));
        }
        for c in &self.perturbation {
            let ok = c.row.fits(self.dim, self.k) && c.col.fits(self.dim, c.row.degree());
            if !ok {
                return Err(Error::StructureViolation {
                    mu: c.col.mu,
                    m: c.col.m,
                    sigma: c.row.mu,
                    l: c.row.m,
                });
            }
        }
        Ok(())
    }

    fn leading(&self, row: Monomial) -> f64 {
        let l = row.m as f64;
        (l + 1.0) * (l + 2.0 + 2.0 * row.mu[1] as f64)
    }

    /// Every term of equation `row` except the leading `p_{σ,l+1}` one.
    fn lower_terms(&self, row: Monomial, p: &PolyXR) -> f64 {
        let s = self.params.s();
        let (sigma, l) = (row.mu, row.m);
        let mut acc = 2.0 * s * (sigma[1] as f64 + 1.0) * p.get(Monomial::new([sigma[0], sigma[1] + 1], l));
        if l >= 1 {
            for i in 0..2 {
                if i == 0 && self.dim == 1 {
                    continue;
                }
                let mut mu = sigma;
                mu[i] += 2;
                let f = (sigma[i] as f64 + 1.0) * (sigma[i] as f64 + 2.0);
                acc += f * p.get(Monomial::new(mu, l - 1));
            }
        }
        for c in self.perturbation.iter().filter(|c| c.row == row) {
            acc += c.value * p.get(c.col);
        }
        acc
    }

    /// `A_{σl}` of a degree-`k+1` polynomial.
    pub fn recompute_rhs(&self, p: &PolyXR) -> Result<PolyXR> {
        let mut a = PolyXR::zeros(self.dim, self.k)?;
        for row in monomials(self.dim, self.k) {
            let lead = self.leading(row) * p.get(Monomial::new(row.mu, row.m + 1));
            a.set(row, lead + self.lower_terms(row, p))?;
        }
        Ok(a)
    }
}

/// Solves for `p_{σ,l+1}` by graded elimination (increasing `|σ| + l`, then
/// increasing `l`): every other coefficient in equation `(σ, l)` is a seed or
/// was determined earlier.
pub fn solve_approx_system(sys: &ApproxSystem) -> Result<PolyXR> {
    sys.validate()?;
    let mut p = PolyXR::zeros(sys.dim, sys.k + 1)?;
    for t in &sys.seed.terms {
        if t.mono.m == 0 {
            p.set(t.mono, t.coeff)?;
        }
    }
    for row in monomials(sys.dim, sys.k) {
        let value = (sys.rhs.get(row) - sys.lower_terms(row, &p)) / sys.leading(row);
        p.set(Monomial::new(row.mu, row.m + 1), value)?;
    }
    Ok(p)
}

/// Degree-`k` polynomial `P̄` with `A ≡ 0` in the flat system, so that
/// `Ū_a P̄` is a-harmonic off the slit. The seed supplies `p_{μ0}`.
pub fn a_harmonic_companion(k: u32, params: Params, seed: &PolyXR) -> Result<PolyXR> {
    if seed.terms.iter().any(|t| t.coeff != 0.0 && (t.mono.m > 0 || t.mono.degree() > k)) {
        return Err(Error::InvalidParams(format!(
            "companion seed must be a polynomial in x of degree <= {k}"
        )));
    }
    if k == 0 {
        let mut p = PolyXR::zeros(seed.dim, 0)?;
        p.set(Monomial::new([0, 0], 0), seed.get(Monomial::new([0, 0], 0)))?;
        return Ok(p);
    }
    let mut sys = ApproxSystem::flat(k - 1, seed.dim, params)?;
    for t in sys.seed.terms.iter_mut() {
        t.coeff = seed.get(t.mono);
    }
    solve_approx_system(&sys)
}

/// `max |L_h(Ū_a P)| / |y|^a` over grid nodes with `1/4 <= r <= 3/4` and
/// `y >= 1/8`, for a one-dimensional `P` on the flat slit.
pub fn a_harmonic_residual(p: &PolyXR, params: &Params, h: f64) -> Result<f64> {
    if p.dim != 1 {
        return Err(Error::InvalidParams("the flat slit needs a one-dimensional polynomial".into()));
    }
    let grid = Grid2D::covering_reflected(-1.0, 1.0, 1.0, h)?;
    let s = params.s();
    let f = Field::from_fn(grid, |x, y| {
        profile_from_distance(x, y, s) * p.eval(0.0, x, x.hypot(y))
    });
    let lf = apply_la(&f, params)?;
    let mut worst = 0.0f64;
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let (x, y) = (grid.x(i), grid.y(j));
            let r = x.hypot(y);
            if (0.25..=0.75).contains(&r) && y >= 0.125 {
                worst = worst.max(lf.at(i, j).abs() / y.powf(params.a()));
            }
        }
    }
    Ok(worst)
}

/// Polar sample counts used to evaluate `sup_{B_λ} |f|`.
pub const BALL_RADII: usize = 24;
pub const BALL_ANGLES: usize = 96;

/// `sup_{B_λ(center)} |f|` from bilinear interpolation on a polar sample set.
pub fn ball_sup(f: &Field, center: &Point, lambda: f64) -> Result<f64> {
    let (cx, cy) = (center.xn, center.y);
    let mut sup = f
        .interpolate(cx, cy)
        .ok_or_else(|| Error::InvalidParams("center lies outside the grid".into()))?
        .abs();
    for k in 1..=BALL_RADII {
        let rad = lambda * k as f64 / BALL_RADII as f64;
        for m in 0..BALL_ANGLES {
            let t = 2.0 * PI * m as f64 / BALL_ANGLES as f64;
            let v = f.interpolate(cx + rad * t.cos(), cy + rad * t.sin()).ok_or_else(|| {
                Error::InvalidParams(format!("ball of radius {lambda} leaves the grid"))
            })?;
            sup = sup.max(v.abs());
        }
    }
    Ok(sup)
}

/// Least-squares slope of `ln sup_{B_λ} |f|` against `ln λ`. The center is
/// read as the slit-plane point `(x_n, y)`. Sampling on a polar set rather
/// than on grid nodes keeps the effective ball radius equal to `λ`.
pub fn homogeneity_slope(f: &Field, center: &Point, scales: &[f64]) -> Result<f64> {
    if scales.len() < 2 {
        return Err(Error::InvalidParams("homogeneity slope needs at least two scales".into()));
    }
    let min = 4.0 * f.grid.h;
    if let Some(&bad) = scales.iter().find(|&&l| !(l >= min * (1.0 - 1e-12))) {
        return Err(Error::Unresolved { scale: bad, min });
    }
    let sups = scales
        .iter()
        .map(|&l| ball_sup(f, center, l))
        .collect::<Result<Vec<_>>>()?;
    let (imax, _) = scales
        .iter()
        .enumerate()
        .fold((0, f64::MIN), |acc, (i, &l)| if l > acc.1 { (i, l) } else { acc });
    if sups[imax] == 0.0 {
        return Err(Error::Undefined(format!(
            "f vanishes on the largest ball (radius {})",
            scales[imax]
        )));
    }
    if sups.iter().any(|&v| v == 0.0) {
        return Err(Error::Undefined("f vanishes on a ball; the slope is undefined".into()));
    }
    crate::regdist::log_log_slope(scales, &sups)
        .ok_or_else(|| Error::Undefined("scales must be distinct".into()))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct QuotientFit {
    pub poly: PolyXR,
    /// Outer radii `R` of the annuli `R/2 <= r < R`.
    pub annulus_radii: Vec<f64>,
    /// 95th percentile of `|u/U - P|` on each annulus.
    pub residuals: Vec<f64>,
    /// Slope of `ln residual` against `ln R`; `None` for an exact fit.
    pub residual_exponent: Option<f64>,
    pub exact: bool,
    pub nodes: usize,
}

pub const DEFAULT_ANNULI: [f64; 5] = [0.5, 0.25, 0.125, 0.0625, 0.03125];
/// Quantile of the residual reported per annulus.
pub const RESIDUAL_QUANTILE: f64 = 0.95;
/// Largest accepted condition number of the scaled fit matrix.
const FIT_CONDITION_LIMIT: f64 = 1e10;

fn quantile(mut v: Vec<f64>, q: f64) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(|a, b| a.total_cmp(b));
    let idx = ((v.len() - 1) as f64 * q).round() as usize;
    v[idx]
}

/// Weighted least-squares fit of `u/U` by monomials `x^μ r^m` of degree
/// `<= degree` over the annuli `R/2 <= r < R` centered at the edge point
/// `x = 0` of the `x' = 0` section. Each annulus carries equal total weight;
/// nodes closer than `2h` to the slit are dropped.
pub fn quotient_expand(
    u: &Field,
    big_u: &Field,
    geom: &SlitGeometry,
    degree: u32,
    annuli: &[f64],
) -> Result<QuotientFit> {
    if !u.grid.same_shape(&big_u.grid) {
        return Err(Error::GridMismatch("u and U live on different grids".into()));
    }
    if annuli.is_empty() {
        return Err(Error::InvalidParams("no annuli given".into()));
    }
    let g = u.grid;
    let h = g.h;
    let monos = monomials(1, degree);
    let mut rows: Vec<(usize, f64, f64, f64)> = Vec::new();
    for j in 0..g.ny {
        for i in 0..g.nx {
            let (x, y) = (g.x(i), g.y(j));
            let d = geom.signed_distance(0.0, x)?;
            let r = d.hypot(y);
            let to_slit = if d <= 0.0 { y.abs() } else { r };
            if to_slit < 2.0 * h {
                continue;
            }
            let Some(a) = annuli.iter().position(|&big| r >= 0.5 * big && r < big) else {
                continue;
            };
            let den = big_u.at(i, j);
            if !(den > 0.0) {
                return Err(Error::InvalidParams(format!(
                    "U = {den} is not positive off the slit at ({x}, {y})"
                )));
            }
            rows.push((a, x, r, u.at(i, j) / den));
        }
    }
    let mut counts = vec![0usize; annuli.len()];
    for row in &rows {
        counts[row.0] += 1;
    }
    if counts.iter().any(|&c| c < monos.len()) {
        return Err(Error::IllConditioned(format!(
            "annuli hold {counts:?} nodes, fewer than the {} unknowns in one of them",
            monos.len()
        )));
    }
    let n = rows.len();
    let mut mat = DMatrix::<f64>::zeros(n, monos.len());
    let mut rhs = DVector::<f64>::zeros(n);
    for (k, &(a, x, r, q)) in rows.iter().enumerate() {
        let w = 1.0 / (counts[a] as f64).sqrt();
        for (c, mono) in monos.iter().enumerate() {
            mat[(k, c)] = w * x.powi(mono.mu[1] as i32) * r.powi(mono.m as i32);
        }
        rhs[k] = w * q;
    }
    let scale: Vec<f64> = (0..monos.len()).map(|c| mat.column(c).norm().max(f64::MIN_POSITIVE)).collect();
    for (c, sc) in scale.iter().enumerate() {
        mat.column_mut(c).scale_mut(1.0 / sc);
    }
    let svd = mat.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > 0.0) || smax / smin > FIT_CONDITION_LIMIT {
        return Err(Error::IllConditioned(format!(
            "fit matrix condition number {:.3e}; the annuli are too thin",
            smax / smin
        )));
    }
    let sol = svd
        .solve(&rhs, 0.0)
        .map_err(|e| Error::IllConditioned(e.to_string()))?;
    let mut poly = PolyXR::zeros(1, degree)?;
    for (c, mono) in monos.iter().enumerate() {
        poly.set(*mono, sol[c] / scale[c])?;
    }

    let mut per: Vec<Vec<f64>> = vec![Vec::new(); annuli.len()];
    let mut qmax = 0.0f64;
    for &(a, x, r, q) in &rows {
        per[a].push((q - poly.eval(0.0, x, r)).abs());
        qmax = qmax.max(q.abs());
    }
    let residuals: Vec<f64> = per.into_iter().map(|v| quantile(v, RESIDUAL_QUANTILE)).collect();
    let exact = residuals.iter().all(|&r| r <= 1e-10 * qmax.max(1.0));
    let residual_exponent = if exact {
        None
    } else {
        crate::regdist::log_log_slope(annuli, &residuals)
    };
    Ok(QuotientFit {
        poly,
        annulus_radii: annuli.to_vec(),
        residuals,
        residual_exponent,
        exact,
        nodes: n,
    })
}

/// Order of the Taylor extension of the obstacle used to form `ṽ - φ̃`.
pub const BLOWUP_TAYLOR_ORDER: usize = 4;

/// `ṽ - φ̃` on the solution grid, with `φ̃` the a-harmonic Taylor extension
/// of the obstacle about `x0`.
pub fn obstacle_gap_field(sol: &ObstacleSolution, x0: f64) -> Result<Field> {
    let preset = sol
        .preset
        .ok_or_else(|| Error::InvalidParams("the obstacle has no analytic preset to extend".into()))?;
    let ext = extend_obstacle(&preset, x0, &sol.params, BLOWUP_TAYLOR_ORDER, *sol.grid())?;
    sol.field.zip_with(&ext, |v, e| v - e)
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct FreeBoundaryBlowup {
    pub point: FreeBoundaryPoint,
    pub slope: f64,
}

/// Homogeneity slope of `ṽ - φ̃` at every detected free-boundary point.
pub fn free_boundary_homogeneity(sol: &ObstacleSolution, scales: &[f64]) -> Result<Vec<FreeBoundaryBlowup>> {
    let points = free_boundary(sol);
    if points.is_empty() {
        return Err(Error::Undefined("the solution has no free-boundary point".into()));
    }
    points
        .into_iter()
        .map(|point| {
            let w = obstacle_gap_field(sol, point.x)?;
            let slope = homogeneity_slope(&w, &Point::flat(point.x, 0.0), scales)?;
            Ok(FreeBoundaryBlowup { point, slope })
        })
        .collect()
}

/// Copy of `f` on a grid translated so that `fb` sits at `x = 0` and, for a
/// left endpoint, mirrored so that the non-contact side is `x > 0`.
fn recenter(f: &Field, fb: &FreeBoundaryPoint) -> Result<Field> {
    let g = f.grid;
    let (x0, flip) = match fb.side {
        Side::Right => (g.x0 - fb.x, false),
        Side::Left => (fb.x - g.x_max(), true),
    };
    let ng = Grid2D { x0, ..g };
    let mut out = Field::zeros(ng);
    for j in 0..g.ny {
        for i in 0..g.nx {
            let src = if flip { g.nx - 1 - i } else { i };
            out.set(i, j, f.at(src, j));
        }
    }
    Ok(out)
}

/// Fit of `∂_n(ṽ - φ̃) / Ū_a` about a free-boundary point, with `n` the
/// direction of the thin space pointing away from the contact set and `Ū_a`
/// the flat profile whose slit is the contact side. In two dimensions the
/// free boundary is a point, so the outward thin-space derivative stands in
/// for the tangential derivatives of higher dimensions.
pub fn free_boundary_quotient(
    sol: &ObstacleSolution,
    fb: &FreeBoundaryPoint,
    degree: u32,
    annuli: &[f64],
) -> Result<QuotientFit> {
    let w = recenter(&obstacle_gap_field(sol, fb.x)?, fb)?;
    let g = w.grid;
    let mut dw = Field::zeros(g);
    for j in 0..g.ny {
        for i in 0..g.nx {
            let v = if i == 0 {
                (w.at(1, j) - w.at(0, j)) / g.h
            } else if i + 1 == g.nx {
                (w.at(i, j) - w.at(i - 1, j)) / g.h
            } else {
                (w.at(i + 1, j) - w.at(i - 1, j)) / (2.0 * g.h)
            };
            dw.set(i, j, v);
        }
    }
    let s = sol.params.s();
    let big = Field::from_fn(g, |x, y| profile_from_distance(x, y, s));
    quotient_expand(&dw, &big, &SlitGeometry::flat(), degree, annuli)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(s: f64) -> Params {
        Params::from_s(s).unwrap()
    }

    #[test]
    fn monomial_counts_and_order() {
        assert_eq!(monomials(1, 3).len(), 10);
        assert_eq!(monomials(2, 2).len(), 10);
        let m = monomials(2, 4);
        for w in m.windows(2) {
            assert!((w[0].degree(), w[0].m) <= (w[1].degree(), w[1].m));
        }
    }

    #[test]
    fn k0_hand_elimination() {
        let s = 0.3;
        let mut sys = ApproxSystem::flat(0, 1, params(s)).unwrap();
        sys.rhs.set(Monomial::new([0, 0], 0), 0.7).unwrap();
        sys.seed.set(Monomial::new([0, 1], 0), 0.4).unwrap();
        let p = solve_approx_system(&sys).unwrap();
        let expect = (0.7 - 2.0 * s * 0.4) / 2.0;
        assert!((p.get(Monomial::new([0, 0], 1)) - expect).abs() < 1e-15);
    }

    #[test]
    fn homogeneous_system_gives_zero() {
        let sys = ApproxSystem::flat(4, 2, params(0.4)).unwrap();
        let p = solve_approx_system(&sys).unwrap();
        assert_eq!(p.norm(), 0.0);
    }

    #[test]
    fn round_trip_random_instances() {
        for seed in 0..20 {
            for (dim, c) in [(1, 0.0), (2, 0.0), (1, 0.1), (2, 0.1)] {
                let sys = ApproxSystem::random(4, dim, params(0.35), c, seed).unwrap();
                let p = solve_approx_system(&sys).unwrap();
                let a = sys.recompute_rhs(&p).unwrap();
                assert!(a.max_abs_diff(&sys.rhs) < 1e-12);
                for t in sys.seed.terms.iter().filter(|t| t.mono.m == 0) {
                    assert_eq!(p.get(t.mono), t.coeff);
                }
            }
        }
    }

    #[test]
    fn structure_violation_names_the_index() {
        let mut sys = ApproxSystem::flat(2, 1, params(0.5)).unwrap();
        sys.perturbation.push(Perturbation {
            row: Monomial::new([0, 1], 0),
            col: Monomial::new([0, 1], 1),
            value: 0.01,
        });
        match solve_approx_system(&sys) {
            Err(Error::StructureViolation { mu, m, sigma, l }) => {
                assert_eq!((mu, m, sigma, l), ([0, 1], 1, [0, 1], 0));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn companion_of_degree_one_is_the_known_solution() {
        // Ū_a (x - s r) is a-harmonic off the slit.
        let s = 0.3;
        let mut seed = PolyXR::zeros(1, 1).unwrap();
        seed.set(Monomial::new([0, 1], 0), 1.0).unwrap();
        let p = a_harmonic_companion(1, params(s), &seed).unwrap();
        assert!((p.get(Monomial::new([0, 0], 1)) + s).abs() < 1e-15);
        let mut c = PolyXR::zeros(1, 0).unwrap();
        c.set(Monomial::new([0, 0], 0), 2.5).unwrap();
        let p0 = a_harmonic_companion(0, params(s), &c).unwrap();
        assert_eq!(p0.terms.len(), 1);
        assert_eq!(p0.get(Monomial::new([0, 0], 0)), 2.5);
    }

    /// Coefficients of `Σ_i b_i ((r+x)/2)^i ((r-x)/2)^{j-i}` in `x^μ r^m`.
    fn zipped_quotient(j: u32, s: f64) -> PolyXR {
        let b = crate::spectral::recursion_coefficients(j as usize, s);
        let binom = |n: u32, k: u32| (0..k).fold(1.0, |acc, t| acc * (n - t) as f64 / (t + 1) as f64);
        let mut p = PolyXR::zeros(1, j).unwrap();
        for (i, bi) in b.iter().enumerate() {
            let i = i as u32;
            for u in 0..=i {
                for v in 0..=(j - i) {
                    // ((r+x)/2)^i picks x^u r^{i-u}; ((r-x)/2)^{j-i} picks (-x)^v r^{j-i-v}.
                    let c = bi * binom(i, u) * binom(j - i, v) * (-1f64).powi(v as i32) / 2f64.powi(j as i32);
                    let mono = Monomial::new([0, u + v], j - u - v);
                    p.set(mono, p.get(mono) + c).unwrap();
                }
            }
        }
        p
    }

    #[test]
    fn companion_matches_spectral_functions() {
        for s in [0.25, 0.5, 0.75] {
            for j in 0..=5 {
                let want = zipped_quotient(j, s);
                let mut seed = PolyXR::zeros(1, j).unwrap();
                let top = Monomial::new([0, j], 0);
                seed.set(top, want.get(top)).unwrap();
                let got = a_harmonic_companion(j, params(s), &seed).unwrap();
                assert!(got.max_abs_diff(&want) < 1e-10 * want.norm(), "s {s} j {j}");
            }
        }
    }

    #[test]
    fn companion_residual_is_second_order() {
        let pr = params(0.35);
        let mut seed = PolyXR::zeros(1, 2).unwrap();
        seed.set(Monomial::new([0, 0], 0), 0.5).unwrap();
        seed.set(Monomial::new([0, 1], 0), -0.3).unwrap();
        seed.set(Monomial::new([0, 2], 0), 1.0).unwrap();
        let p = a_harmonic_companion(2, pr, &seed).unwrap();
        let e1 = a_harmonic_residual(&p, &pr, 1.0 / 32.0).unwrap();
        let e2 = a_harmonic_residual(&p, &pr, 1.0 / 64.0).unwrap();
        let order = (e1 / e2).log2();
        assert!(order > 1.8, "{e1} {e2} {order}");
    }

    #[test]
    fn slope_of_profile_is_s_and_scale_invariant() {
        let s = 0.3;
        let g = Grid2D::covering_reflected(-1.0, 1.0, 1.0, 1.0 / 128.0).unwrap();
        let f = Field::from_fn(g, |x, y| profile_from_distance(x, y, s));
        let c = Point::flat(0.0, 0.0);
        let scales = [0.5, 0.25, 0.125, 0.0625];
        let slope = homogeneity_slope(&f, &c, &scales).unwrap();
        assert!((slope - s).abs() < 0.02, "{slope}");
        let f3 = f.map(|v| 3.0 * v);
        assert_eq!(homogeneity_slope(&f3, &c, &scales).unwrap().to_bits(), slope.to_bits());
        assert!(matches!(
            homogeneity_slope(&f, &c, &[0.5, 0.01]),
            Err(Error::Unresolved { .. })
        ));
        let z = Field::zeros(g);
        assert!(matches!(homogeneity_slope(&z, &c, &scales), Err(Error::Undefined(_))));
    }

    #[test]
    fn zipped_first_function_has_slope_s_plus_one() {
        let s = 0.4;
        let u1 = crate::spectral::HomogeneousSolution::raw(1, params(s));
        let g = Grid2D::covering(-1.0, 1.0, -1.0, 1.0, 1.0 / 128.0).unwrap();
        let f = Field::from_fn(g, |x, y| {
            let (z1, z2) = crate::spectral::unzip(x, y);
            u1.eval(z1, z2)
        });
        let slope = homogeneity_slope(&f, &Point::flat(0.0, 0.0), &[0.5, 0.25, 0.125, 0.0625]).unwrap();
        assert!((slope - (s + 1.0)).abs() < 0.02, "{slope}");
    }

    #[test]
    fn exact_quotient_is_recovered() {
        let s = 0.4;
        let g = Grid2D::covering_reflected(-0.5, 0.5, 0.5, 1.0 / 128.0).unwrap();
        let big = Field::from_fn(g, |x, y| profile_from_distance(x, y, s));
        let u = Field::from_fn(g, |x, y| profile_from_distance(x, y, s) * (1.0 + x + x.hypot(y)));
        let fit = quotient_expand(&u, &big, &SlitGeometry::flat(), 1, &DEFAULT_ANNULI).unwrap();
        assert!(fit.exact);
        assert!((fit.poly.get(Monomial::new([0, 0], 0)) - 1.0).abs() < 1e-6);
        assert!((fit.poly.get(Monomial::new([0, 1], 0)) - 1.0).abs() < 1e-6);
        assert!((fit.poly.get(Monomial::new([0, 0], 1)) - 1.0).abs() < 1e-6);
        let same = quotient_expand(&big, &big, &SlitGeometry::flat(), 2, &DEFAULT_ANNULI).unwrap();
        assert!(same.exact);
        assert!((same.poly.get(Monomial::new([0, 0], 0)) - 1.0).abs() < 1e-12);
        assert!(same.residuals.iter().all(|&r| r < 1e-12));
    }

    #[test]
    fn swapped_quotient_inverts_constant_term() {
        let s = 0.4;
        let g = Grid2D::covering_reflected(-0.5, 0.5, 0.5, 1.0 / 128.0).unwrap();
        let big = Field::from_fn(g, |x, y| profile_from_distance(x, y, s));
        let q = |x: f64, y: f64| 2.0 + 0.1 * x + 0.05 * x.hypot(y);
        let u = Field::from_fn(g, |x, y| profile_from_distance(x, y, s) * q(x, y));
        let flat = SlitGeometry::flat();
        let fwd = quotient_expand(&u, &big, &flat, 2, &DEFAULT_ANNULI).unwrap();
        let inv = quotient_expand(&big, &u, &flat, 2, &DEFAULT_ANNULI).unwrap();
        let c0 = Monomial::new([0, 0], 0);
        assert!((inv.poly.get(c0) - 1.0 / fwd.poly.get(c0)).abs() < 1e-4);
    }

    #[test]
    fn thin_annuli_are_flagged() {
        let g = Grid2D::covering_reflected(-1.0, 1.0, 1.0, 1.0 / 16.0).unwrap();
        let f = Field::from_fn(g, |x, y| profile_from_distance(x, y, 0.5));
        assert!(matches!(
            quotient_expand(&f, &f, &SlitGeometry::flat(), 3, &[0.1]),
            Err(Error::IllConditioned(_))
        ));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn round_trip_is_identity(k in 0u32..=4, dim in 1usize..=2, c in 0.0f64..0.1, seed: u64, s in 0.05f64..0.95) {
                let sys = ApproxSystem::random(k, dim, params(s), c, seed).unwrap();
                let p = solve_approx_system(&sys).unwrap();
                prop_assert!(sys.recompute_rhs(&p).unwrap().max_abs_diff(&sys.rhs) < 1e-12);
            }

            #[test]
            fn solution_is_linear_in_the_data(k in 0u32..=3, seed: u64, t in -3.0f64..3.0) {
                let sys = ApproxSystem::random(k, 2, params(0.5), 0.05, seed).unwrap();
                let mut scaled = sys.clone();
                for term in scaled.rhs.terms.iter_mut().chain(scaled.seed.terms.iter_mut()) {
                    term.coeff *= t;
                }
                let p = solve_approx_system(&sys).unwrap();
                let q = solve_approx_system(&scaled).unwrap();
                for (a, b) in p.terms.iter().zip(&q.terms) {
                    prop_assert!((t * a.coeff - b.coeff).abs() <= 1e-12 * (1.0 + b.coeff.abs()));
                }
            }

            #[test]
            fn graded_perturbations_never_violate(k in 0u32..=4, seed: u64) {
                let sys = ApproxSystem::random(k, 2, params(0.3), 0.1, seed).unwrap();
                prop_assert!(sys.validate().is_ok());
            }
        }
    }
}
