//! Zip coordinates `x = z1² − z2², y = 2 z1 z2`, the homogeneous solutions
//! `ū_j` of the zipped operator, their weighted boundary expansion, the
//! monotone functional `φ(λ, u)` and the two Green identities.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::Params;
use crate::operator::{la_bar_stencil, Field, Grid2D};
use crate::quadrature::{CircleRule, GaussLegendre};

/// Default truncation of boundary expansions.
pub const DEFAULT_J: usize = 12;

/// `(x, y) = (z1² − z2², 2 z1 z2)`.
pub fn zip(z1: f64, z2: f64) -> (f64, f64) {
    ((z1 - z2) * (z1 + z2), 2.0 * z1 * z2)
}

/// Inverse of [`zip`] on the branch `z1 >= 0`. Points of the slit
/// `{x <= 0, y = 0}` map to the `z2`-axis.
pub fn unzip(x: f64, y: f64) -> (f64, f64) {
    let r = x.hypot(y);
    if r == 0.0 {
        return (0.0, 0.0);
    }
    if x >= 0.0 {
        let z1 = (0.5 * (r + x)).sqrt();
        (z1, y / (2.0 * z1))
    } else {
        let b = (0.5 * (r - x)).sqrt();
        let z2 = if y.is_sign_negative() { -b } else { b };
        (y.abs() / (2.0 * b), z2)
    }
}

/// `ω̄_a = |2 z1 z2|^a`.
pub fn weight(params: &Params, z1: f64, z2: f64) -> f64 {
    (2.0 * z1 * z2).abs().powf(params.a())
}

/// `‖ω̄_a‖_{L¹(∂D_1)}` under the given rule.
pub fn weight_mass(params: &Params, rule: &CircleRule) -> f64 {
    rule.integrate(|c, s| weight(params, c, s))
}

/// Coefficients of `Q̄_j`: `b_0 = 1` and
/// `b_i = −(j−i+1)(j−i+1−s) / (i (i+s)) · b_{i−1}`.
pub fn recursion_coefficients(j: usize, s: f64) -> Vec<f64> {
    let mut b = Vec::with_capacity(j + 1);
    b.push(1.0);
    for i in 1..=j {
        let (fi, fj) = (i as f64, j as f64);
        let ratio = -((fj - fi + 1.0) * (fj - fi + 1.0 - s)) / (fi * (fi + s));
        b.push(ratio * b[i - 1]);
    }
    b
}

/// `ū_j(z) = |z1|^{−a} z1 Σ_i b_i z1^{2i} z2^{2(j−i)}`, homogeneous of degree
/// `2s + 2j`, odd in `z1`, even in `z2`.
#[derive(Clone, Debug, Serialize)]
pub struct HomogeneousSolution {
    pub j: usize,
    #[serde(skip)]
    pub params: Params,
    pub b: Vec<f64>,
    pub normalized: bool,
}

impl HomogeneousSolution {
    /// Unnormalized solution with `b_0 = 1`.
    pub fn raw(j: usize, params: Params) -> Self {
        Self {
            j,
            params,
            b: recursion_coefficients(j, params.s()),
            normalized: false,
        }
    }

    pub fn degree(&self) -> f64 {
        2.0 * self.params.s() + 2.0 * self.j as f64
    }

    /// `Q̄_j(z1², z2²)` with its partial derivatives in `z1` and `z2`.
    fn q_parts(&self, z1: f64, z2: f64) -> (f64, f64, f64) {
        let (a2, b2) = (z1 * z1, z2 * z2);
        let j = self.j;
        let mut q = 0.0;
        let mut q1 = 0.0;
        let mut q2 = 0.0;
        for (i, &bi) in self.b.iter().enumerate() {
            let e1 = i as i32;
            let e2 = (j - i) as i32;
            q += bi * a2.powi(e1) * b2.powi(e2);
            if i > 0 {
                q1 += bi * 2.0 * i as f64 * z1.powi(2 * e1 - 1) * b2.powi(e2);
            }
            if j > i {
                q2 += bi * 2.0 * (j - i) as f64 * a2.powi(e1) * z2.powi(2 * e2 - 1);
            }
        }
        (q, q1, q2)
    }

    pub fn eval(&self, z1: f64, z2: f64) -> f64 {
        if z1 == 0.0 {
            return 0.0;
        }
        let (q, _, _) = self.q_parts(z1, z2);
        z1.signum() * z1.abs().powf(2.0 * self.params.s()) * q
    }

    /// Analytic gradient. Infinite in `z1` on the `z2`-axis when `s < 1/2`.
    pub fn gradient(&self, z1: f64, z2: f64) -> [f64; 2] {
        let s = self.params.s();
        let (q, q1, q2) = self.q_parts(z1, z2);
        let p = z1.abs().powf(2.0 * s);
        let dp = 2.0 * s * z1.abs().powf(2.0 * s - 1.0);
        [dp * q + z1.signum() * p * q1, z1.signum() * p * q2]
    }

    /// `∂_ν ū_j = z · ∇ū_j` on the unit circle.
    pub fn radial_derivative(&self, z1: f64, z2: f64) -> f64 {
        let g = self.gradient(z1, z2);
        z1 * g[0] + z2 * g[1]
    }

    /// Weighted boundary norm `(∫_{∂D_1} ū_j² ω̄_a dσ)^{1/2}`.
    pub fn boundary_norm(&self, rule: &CircleRule) -> f64 {
        rule.integrate(|c, s| {
            let u = self.eval(c, s);
            u * u * weight(&self.params, c, s)
        })
        .sqrt()
    }

    fn scaled(mut self, factor: f64) -> Self {
        for b in &mut self.b {
            *b *= factor;
        }
        self
    }
}

/// Normalized `ū_j` (`b_0 > 0`). The normalization under the standard rule is
/// audited against the refined rule; a disagreement above `1e-8` means the
/// quadrature no longer resolves this `j`.
pub fn make_basis(j: usize, params: Params) -> Result<HomogeneousSolution> {
    let rule = CircleRule::standard();
    let audit = CircleRule::refined();
    make_basis_with(j, params, &rule, &audit)
}

fn make_basis_with(
    j: usize,
    params: Params,
    rule: &CircleRule,
    audit: &CircleRule,
) -> Result<HomogeneousSolution> {
    let raw = HomogeneousSolution::raw(j, params);
    let norm = raw.boundary_norm(rule);
    let check = raw.boundary_norm(audit);
    if !norm.is_finite() || norm == 0.0 || ((norm - check) / check).abs() > 1e-8 {
        return Err(Error::Quadrature(format!(
            "ū_{j} at a = {}: norm {norm:.12e} vs refined {check:.12e}",
            params.a()
        )));
    }
    let mut u = raw.scaled(1.0 / norm);
    u.normalized = true;
    Ok(u)
}

/// The orthonormal family `{ι_a, ū_0, …, ū_J}` on `∂D_1`.
#[derive(Clone, Debug)]
pub struct SpectralBasis {
    pub params: Params,
    pub functions: Vec<HomogeneousSolution>,
    /// `‖ω̄_a‖_{L¹(∂D_1)}`.
    pub mass: f64,
    /// The constant of unit weighted norm, `mass^{-1/2}`.
    pub iota: f64,
    pub rule: CircleRule,
}

impl SpectralBasis {
    pub fn new(params: Params, j_max: usize) -> Result<Self> {
        let rule = CircleRule::standard();
        let audit = CircleRule::refined();
        let functions = (0..=j_max)
            .map(|j| make_basis_with(j, params, &rule, &audit))
            .collect::<Result<Vec<_>>>()?;
        let mass = weight_mass(&params, &rule);
        Ok(Self {
            params,
            functions,
            mass,
            iota: mass.powf(-0.5),
            rule,
        })
    }

    pub fn j_max(&self) -> usize {
        self.functions.len() - 1
    }

    /// Member `k` of `[ι_a, ū_0, …, ū_J]` at a point.
    fn member(&self, k: usize, z1: f64, z2: f64) -> f64 {
        if k == 0 {
            self.iota
        } else {
            self.functions[k - 1].eval(z1, z2)
        }
    }

    /// Gram matrix of `[ι_a, ū_0, …, ū_J]` under `rule`.
    pub fn gram(&self, rule: &CircleRule) -> DMatrix<f64> {
        let n = self.functions.len() + 1;
        let mut g = DMatrix::zeros(n, n);
        for ((c, s), w) in rule.points() {
            let om = w * weight(&self.params, c, s);
            let vals: Vec<f64> = (0..n).map(|k| self.member(k, c, s)).collect();
            for p in 0..n {
                for q in p..n {
                    g[(p, q)] += om * vals[p] * vals[q];
                }
            }
        }
        for p in 0..n {
            for q in 0..p {
                g[(p, q)] = g[(q, p)];
            }
        }
        g
    }

    /// Projection of boundary samples taken at the nodes of `self.rule`.
    pub fn project_samples(&self, samples: &[f64]) -> Result<SpectralExpansion> {
        if samples.len() != self.rule.len() {
            return Err(Error::InvalidParams(format!(
                "{} samples for a rule with {} nodes",
                samples.len(),
                self.rule.len()
            )));
        }
        let n = self.functions.len() + 1;
        let mut coeffs = vec![0.0; n];
        for (((c, s), w), &g) in self.rule.points().zip(samples) {
            let om = w * weight(&self.params, c, s) * g;
            for (k, ck) in coeffs.iter_mut().enumerate() {
                *ck += om * self.member(k, c, s);
            }
        }
        Ok(SpectralExpansion {
            params: self.params,
            iota: self.iota,
            const_coeff: coeffs[0],
            coeffs: coeffs[1..].to_vec(),
            functions: self.functions.clone(),
        })
    }

    /// Projection of boundary data given as a function on `∂D_1`.
    pub fn project<F: Fn(f64, f64) -> f64>(&self, g: F) -> SpectralExpansion {
        let samples: Vec<f64> = self.rule.points().map(|((c, s), _)| g(c, s)).collect();
        self.project_samples(&samples)
            .expect("sample count matches the rule by construction")
    }

    /// Expansion with given coefficients over `[ū_0, …]`.
    pub fn expansion(&self, const_coeff: f64, coeffs: &[f64]) -> Result<SpectralExpansion> {
        if coeffs.len() > self.functions.len() {
            return Err(Error::InvalidParams(format!(
                "{} coefficients for a basis truncated at J = {}",
                coeffs.len(),
                self.j_max()
            )));
        }
        Ok(SpectralExpansion {
            params: self.params,
            iota: self.iota,
            const_coeff,
            coeffs: coeffs.to_vec(),
            functions: self.functions[..coeffs.len()].to_vec(),
        })
    }
}

/// `c_a ι_a + Σ_j c_j ū_j`.
#[derive(Clone, Debug)]
pub struct SpectralExpansion {
    pub params: Params,
    pub iota: f64,
    pub const_coeff: f64,
    pub coeffs: Vec<f64>,
    pub functions: Vec<HomogeneousSolution>,
}

impl SpectralExpansion {
    /// Value at any `z`; each `ū_j` is evaluated directly, so homogeneity is
    /// exact.
    pub fn evaluate(&self, z1: f64, z2: f64) -> f64 {
        self.const_coeff * self.iota
            + self
                .coeffs
                .iter()
                .zip(&self.functions)
                .map(|(c, u)| c * u.eval(z1, z2))
                .sum::<f64>()
    }

    pub fn gradient(&self, z1: f64, z2: f64) -> [f64; 2] {
        let mut g = [0.0; 2];
        for (c, u) in self.coeffs.iter().zip(&self.functions) {
            let d = u.gradient(z1, z2);
            g[0] += c * d[0];
            g[1] += c * d[1];
        }
        g
    }

    /// Interior extension at `|z| < 1` with the heuristic truncation bound
    /// `|z|^{2s+2J+2} (|c_J| + |c_{J−1}|)`.
    pub fn extend(&self, z1: f64, z2: f64) -> Result<(f64, f64)> {
        let rho = z1.hypot(z2);
        if !(rho < 1.0) {
            return Err(Error::InvalidParams(format!("|z| = {rho} is not inside D_1")));
        }
        Ok((self.evaluate(z1, z2), self.tail_bound(rho)))
    }

    pub fn tail_bound(&self, rho: f64) -> f64 {
        let n = self.coeffs.len();
        if n == 0 {
            return 0.0;
        }
        let last = self.coeffs[n - 1].abs() + if n > 1 { self.coeffs[n - 2].abs() } else { 0.0 };
        rho.powf(2.0 * self.params.s() + 2.0 * n as f64) * last
    }

    /// Value at a slit-plane point `(x, y)` through [`unzip`].
    pub fn zipped(&self, x: f64, y: f64) -> f64 {
        let (z1, z2) = unzip(x, y);
        self.evaluate(z1, z2)
    }
}

/// Discrete `L̄_a` residual of `u` sampled on `[-1, 1]²` with spacing `h`,
/// over nodes with `|z1|, |z2| >= band` and `|z| <= 1`. Returns the largest
/// absolute residual and that value relative to the largest sum of absolute
/// values of the residual's axis parts on the same nodes.
pub fn basis_residual(u: &HomogeneousSolution, h: f64, band: f64) -> Result<(f64, f64)> {
    let g = Grid2D::covering(-1.0, 1.0, -1.0, 1.0, h)?;
    let f = Field::from_fn(g, |z1, z2| u.eval(z1, z2));
    let (res, scale) = la_bar_stencil(g, &u.params).residual_parts(&f)?;
    let (mut worst, mut sc) = (0.0f64, 0.0f64);
    for j in 1..g.ny - 1 {
        for i in 1..g.nx - 1 {
            let (z1, z2) = (g.x(i), g.y(j));
            if z1.abs() < band - 1e-12 || z2.abs() < band - 1e-12 || z1.hypot(z2) > 1.0 {
                continue;
            }
            let k = g.index(i, j);
            worst = worst.max(res.values[k].abs());
            sc = sc.max(scale.values[k]);
        }
    }
    if sc == 0.0 {
        return Err(Error::InvalidParams(format!("no nodes at distance {band} from the axes")));
    }
    Ok((worst, worst / sc))
}

/// `φ(λ, u)`: the `ω̄_a`-weighted average of `u²` over `∂D_λ`.
pub fn phi_functional<F: Fn(f64, f64) -> f64>(u: F, params: &Params, lambda: f64) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidParams("λ must be positive".into()));
    }
    let rule = CircleRule::standard();
    // ω̄_a on ∂D_λ is λ^{2a} |sin 2θ|^a; the power of λ cancels in the average.
    let mut num = 0.0;
    let mut den = 0.0;
    for ((c, s), w) in rule.points() {
        let om = w * weight(params, c, s);
        let v = u(lambda * c, lambda * s);
        num += om * v * v;
        den += om;
    }
    Ok(num / den)
}

/// `φ(λ, u)` for a field sampled on a grid covering `D_λ`, by bilinear
/// interpolation. Radii below `4h` are refused.
pub fn phi_functional_field(f: &Field, params: &Params, lambda: f64) -> Result<f64> {
    let min = 4.0 * f.grid.h;
    if lambda < min {
        return Err(Error::Unresolved { scale: lambda, min });
    }
    let covered = CircleRule::standard()
        .points()
        .all(|((c, s), _)| f.interpolate(lambda * c, lambda * s).is_some());
    if !covered {
        return Err(Error::GridMismatch(format!("grid does not cover ∂D_{lambda}")));
    }
    phi_functional(|z1, z2| f.interpolate(z1, z2).unwrap_or(0.0), params, lambda)
}

/// Both sides of the two Green identities on `D_λ`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct GreenReport {
    /// `∫_{D_λ} ∇u·∇v ω̄_a dz`.
    pub volume: f64,
    /// `∫_{∂D_λ} u ∂_ν v ω̄_a dσ`.
    pub surface_uv: f64,
    /// `∫_{∂D_λ} v ∂_ν u ω̄_a dσ`.
    pub surface_vu: f64,
    /// `|volume − surface_uv|`.
    pub identity1: f64,
    /// `|surface_uv − surface_vu|`.
    pub identity2: f64,
}

/// Green identities for functions given with their gradients. The volume
/// integral uses polar coordinates: Gauss–Legendre panels graded toward the
/// origin in the radius and the graded circle rule in the angle.
pub fn green_check_fn<U, V>(u: U, v: V, params: &Params, lambda: f64) -> Result<GreenReport>
where
    U: Fn(f64, f64) -> (f64, [f64; 2]),
    V: Fn(f64, f64) -> (f64, [f64; 2]),
{
    if !(lambda > 0.0) {
        return Err(Error::InvalidParams("λ must be positive".into()));
    }
    let rule = CircleRule::standard();
    let gl = GaussLegendre::new(16);
    let mut volume = 0.0;
    let mut lo = 0.0;
    let levels = 30;
    for level in (0..levels).rev() {
        let hi = lambda * 0.5f64.powi(level);
        for (rho, wr) in gl.mapped(lo, hi) {
            for ((c, s), wt) in rule.points() {
                let (z1, z2) = (rho * c, rho * s);
                let (_, gu) = u(z1, z2);
                let (_, gv) = v(z1, z2);
                volume += wr * wt * rho * weight(params, z1, z2) * (gu[0] * gv[0] + gu[1] * gv[1]);
            }
        }
        lo = hi;
    }
    let mut surface_uv = 0.0;
    let mut surface_vu = 0.0;
    for ((c, s), wt) in rule.points() {
        let (z1, z2) = (lambda * c, lambda * s);
        let (uu, gu) = u(z1, z2);
        let (vv, gv) = v(z1, z2);
        let om = wt * lambda * weight(params, z1, z2);
        surface_uv += om * uu * (c * gv[0] + s * gv[1]);
        surface_vu += om * vv * (c * gu[0] + s * gu[1]);
    }
    Ok(GreenReport {
        volume,
        surface_uv,
        surface_vu,
        identity1: (volume - surface_uv).abs(),
        identity2: (surface_uv - surface_vu).abs(),
    })
}

/// Green identities for grid fields. Values come from bilinear
/// interpolation and gradients from bilinear interpolation of centered
/// differences, so both sides agree only to `O(h)`.
pub fn green_check(u: &Field, v: &Field, params: &Params, lambda: f64) -> Result<GreenReport> {
    if !u.grid.same_shape(&v.grid) {
        return Err(Error::GridMismatch("u and v live on different grids".into()));
    }
    let min = 4.0 * u.grid.h;
    if lambda < min {
        return Err(Error::Unresolved { scale: lambda, min });
    }
    let (ux, uy) = centered_gradient(u);
    let (vx, vy) = centered_gradient(v);
    let sample = |f: &Field, gx: &Field, gy: &Field, z1: f64, z2: f64| {
        (
            f.interpolate(z1, z2).unwrap_or(0.0),
            [
                gx.interpolate(z1, z2).unwrap_or(0.0),
                gy.interpolate(z1, z2).unwrap_or(0.0),
            ],
        )
    };
    let covered = [(lambda, 0.0), (-lambda, 0.0), (0.0, lambda), (0.0, -lambda)]
        .iter()
        .all(|&(a, b)| u.interpolate(a, b).is_some());
    if !covered {
        return Err(Error::GridMismatch(format!("grid does not cover D_{lambda}")));
    }
    green_check_fn(
        |z1, z2| sample(u, &ux, &uy, z1, z2),
        |z1, z2| sample(v, &vx, &vy, z1, z2),
        params,
        lambda,
    )
}

fn centered_gradient(f: &Field) -> (Field, Field) {
    let g = f.grid;
    let mut gx = Field::zeros(g);
    let mut gy = Field::zeros(g);
    for j in 0..g.ny {
        for i in 0..g.nx {
            let dx = if i == 0 {
                (f.at(1, j) - f.at(0, j)) / g.h
            } else if i == g.nx - 1 {
                (f.at(i, j) - f.at(i - 1, j)) / g.h
            } else {
                (f.at(i + 1, j) - f.at(i - 1, j)) / (2.0 * g.h)
            };
            let dy = if j == 0 {
                (f.at(i, 1) - f.at(i, 0)) / g.h
            } else if j == g.ny - 1 {
                (f.at(i, j) - f.at(i, j - 1)) / g.h
            } else {
                (f.at(i, j + 1) - f.at(i, j - 1)) / (2.0 * g.h)
            };
            gx.set(i, j, dx);
            gy.set(i, j, dy);
        }
    }
    (gx, gy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn zip_examples() {
        assert_eq!(zip(1.0, 0.0), (1.0, 0.0));
        assert_eq!(zip(0.0, 1.0), (-1.0, 0.0));
        let (z1, z2) = unzip(-1.0, 0.0);
        assert_eq!((z1, z2), (0.0, 1.0));
    }

    #[test]
    fn recursion_ratio() {
        let s = 0.5;
        let b = recursion_coefficients(1, s);
        assert!((b[1] / b[0] + 1.0 / 3.0).abs() < 1e-15);
        for j in 0..9 {
            let b = recursion_coefficients(j, 0.3);
            for i in 1..=j {
                let (fi, fj) = (i as f64, j as f64);
                let expected = -((fj - fi + 1.0) * (fj - fi + 1.0 - 0.3)) / (fi * (fi + 0.3));
                assert!((b[i] / b[i - 1] - expected).abs() < 1e-14 * expected.abs());
            }
        }
    }

    #[test]
    fn u0_at_a_zero_is_z1_over_root_pi() {
        let p = Params::from_a(0.0).unwrap();
        let u = make_basis(0, p).unwrap();
        assert!((u.b[0] - 1.0 / PI.sqrt()).abs() < 1e-12);
        assert!((u.eval(0.3, 0.7) - 0.3 / PI.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn u1_at_a_zero_is_harmonic_cubic() {
        // ū_1 ∝ z1 z2² − z1³/3; its Laplacian 2 z1 − 2 z1 vanishes.
        let p = Params::from_a(0.0).unwrap();
        let u = HomogeneousSolution::raw(1, p);
        let (z1, z2) = (0.4, -0.9);
        assert!((u.eval(z1, z2) - (z1 * z2 * z2 - z1.powi(3) / 3.0)).abs() < 1e-14);
    }

    #[test]
    fn symmetries_and_axis_zero() {
        let p = Params::from_a(-0.5).unwrap();
        for j in 0..6 {
            let u = make_basis(j, p).unwrap();
            assert!(u.b[0] > 0.0);
            assert_eq!(u.eval(0.0, 0.8), 0.0);
            let (z1, z2) = (0.37, 0.61);
            assert_eq!(u.eval(-z1, z2), -u.eval(z1, z2));
            assert_eq!(u.eval(z1, -z2), u.eval(z1, z2));
            // Homogeneity of degree 2s + 2j.
            let t: f64 = 0.3;
            let lhs = u.eval(t * z1, t * z2);
            let rhs = t.powf(u.degree()) * u.eval(z1, z2);
            assert!((lhs - rhs).abs() < 1e-13 * rhs.abs().max(1e-300));
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let p = Params::from_a(0.5).unwrap();
        let u = make_basis(3, p).unwrap();
        let h = 1e-6;
        for &(z1, z2) in &[(0.3, 0.4), (-0.5, 0.2), (0.7, -0.6)] {
            let g = u.gradient(z1, z2);
            let fx = (u.eval(z1 + h, z2) - u.eval(z1 - h, z2)) / (2.0 * h);
            let fy = (u.eval(z1, z2 + h) - u.eval(z1, z2 - h)) / (2.0 * h);
            assert!((g[0] - fx).abs() < 1e-7 && (g[1] - fy).abs() < 1e-7);
        }
    }

    #[test]
    fn unit_mass_extension_is_homogeneous_evaluation() {
        let p = Params::from_s(0.3).unwrap();
        let basis = SpectralBasis::new(p, 4).unwrap();
        let e = basis.expansion(0.0, &[1.0]).unwrap();
        let (z1, z2) = (0.5 * 0.6, 0.5 * 0.8);
        let (v, _) = e.extend(z1, z2).unwrap();
        assert_eq!(v, basis.functions[0].eval(z1, z2));
        assert!(e.extend(0.9, 0.9).is_err());
    }

    #[test]
    fn phi_of_constant_and_of_basis() {
        let p = Params::from_a(0.5).unwrap();
        assert!((phi_functional(|_, _| 1.0, &p, 0.4).unwrap() - 1.0).abs() < 1e-14);
        let u = make_basis(2, p).unwrap();
        let one = phi_functional(|a, b| u.eval(a, b), &p, 1.0).unwrap();
        let half = phi_functional(|a, b| u.eval(a, b), &p, 0.5).unwrap();
        let slope = (one / half).ln() / 2f64.ln();
        assert!((slope - 2.0 * u.degree()).abs() < 1e-10);
    }

    #[test]
    fn green_identity_two_for_equal_functions() {
        let p = Params::from_a(-0.3).unwrap();
        let u = make_basis(0, p).unwrap();
        let f = |a: f64, b: f64| (u.eval(a, b), u.gradient(a, b));
        let rep = green_check_fn(f, f, &p, 0.8).unwrap();
        assert_eq!(rep.identity2, 0.0);
        assert!(rep.identity1 < 1e-9 * rep.volume.abs());
    }
}
