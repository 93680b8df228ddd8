//! Localized fractional obstacle problem through the extension: the obstacle
//! extension, a projected SOR solver, complementarity diagnostics and
//! free-boundary extraction. Everything lives on a reflected grid; row 0 is
//! the thin space `{y = 0}` that carries the constraint.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Params;
use crate::operator::{flux_at_column, FaceRule, Field, Grid2D, Stencil, Weight};

/// Half-width of the default box `[-2, 2] × [0, 2]`.
pub const BOX_HALF_WIDTH: f64 = 2.0;
pub const BOX_HEIGHT: f64 = 2.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PresetKind {
    /// `A (1 - (x/w)^2)`
    Quadratic,
    /// `A (2 exp(-(x/w)^2) - 1)`
    Bump,
    /// `A (cos(x/w) - 1/2)`
    Cos,
}

impl std::str::FromStr for PresetKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quadratic" => Ok(Self::Quadratic),
            "bump" => Ok(Self::Bump),
            "cos" => Ok(Self::Cos),
            other => Err(Error::InvalidParams(format!(
                "unknown obstacle preset {other:?} (expected quadratic, bump or cos)"
            ))),
        }
    }
}

/// Analytic obstacle with derivatives of every order.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObstaclePreset {
    pub kind: PresetKind,
    pub amplitude: f64,
    pub width: f64,
}

impl ObstaclePreset {
    pub fn new(kind: PresetKind, amplitude: f64, width: f64) -> Result<Self> {
        if !(amplitude.is_finite() && width.is_finite() && width > 0.0) {
            return Err(Error::InvalidParams(format!(
                "obstacle needs finite amplitude and width > 0, got {amplitude}, {width}"
            )));
        }
        Ok(Self {
            kind,
            amplitude,
            width,
        })
    }

    /// Preset with its default amplitude and width; the quadratic default is
    /// `1/2 - x^2`.
    pub fn standard(kind: PresetKind) -> Self {
        let width = match kind {
            PresetKind::Quadratic => std::f64::consts::FRAC_1_SQRT_2,
            PresetKind::Bump | PresetKind::Cos => 0.5,
        };
        Self {
            kind,
            amplitude: 0.5,
            width,
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        self.derivative(x, 0)
    }

    /// `n`-th derivative at `x`.
    pub fn derivative(&self, x: f64, n: usize) -> f64 {
        let (a, w) = (self.amplitude, self.width);
        let t = x / w;
        let scale = a / w.powi(n as i32);
        match self.kind {
            PresetKind::Quadratic => match n {
                0 => a * (1.0 - t * t),
                1 => -2.0 * scale * t,
                2 => -2.0 * scale,
                _ => 0.0,
            },
            PresetKind::Bump => {
                let g = 2.0 * scale * hermite(n, t) * (-t * t).exp();
                let g = if n % 2 == 1 { -g } else { g };
                if n == 0 {
                    g - a
                } else {
                    g
                }
            }
            PresetKind::Cos => {
                let c = scale * (t + n as f64 * std::f64::consts::FRAC_PI_2).cos();
                if n == 0 {
                    c - 0.5 * a
                } else {
                    c
                }
            }
        }
    }
}

/// Physicists' Hermite polynomial `H_n(t)`.
fn hermite(n: usize, t: f64) -> f64 {
    let (mut h0, mut h1) = (1.0, 2.0 * t);
    if n == 0 {
        return h0;
    }
    for k in 1..n {
        let h2 = 2.0 * t * h1 - 2.0 * k as f64 * h0;
        h0 = h1;
        h1 = h2;
    }
    h1
}

/// Coefficients `c_0 = 1`, `c_j = 2j (2j + a - 1) c_{j-1}` for `j ≤ n`.
pub fn extension_coefficients(params: &Params, n: usize) -> Vec<f64> {
    let a = params.a();
    let mut c = vec![1.0];
    for j in 1..=n {
        let jf = j as f64;
        c.push(2.0 * jf * (2.0 * jf + a - 1.0) * c[j - 1]);
    }
    c
}

/// `φ̃(x, y) = φ(x) + Σ_{j=1}^{⌊m/2⌋+1} (-1)^j / c_j · y^{2j} (T⁰)^{(2j)}(x)`,
/// with `T⁰` the order-`m` Taylor polynomial of `φ` at `x0`. It satisfies
/// `L_a φ̃ = |y|^a (φ - T⁰)''`.
#[derive(Clone, Debug)]
pub struct ObstacleExtension {
    pub preset: ObstaclePreset,
    pub params: Params,
    pub x0: f64,
    pub order: usize,
    /// `φ^{(k)}(x0)` for `k = 0..=m`.
    taylor: Vec<f64>,
    coeffs: Vec<f64>,
}

impl ObstacleExtension {
    pub fn new(preset: ObstaclePreset, params: Params, x0: f64, order: usize) -> Result<Self> {
        if order < 2 {
            return Err(Error::InvalidParams(format!(
                "Taylor order must be at least 2, got {order}"
            )));
        }
        let taylor = (0..=order).map(|k| preset.derivative(x0, k)).collect();
        let coeffs = extension_coefficients(&params, order / 2 + 1);
        Ok(Self {
            preset,
            params,
            x0,
            order,
            taylor,
            coeffs,
        })
    }

    /// `(T⁰)^{(n)}(x)`.
    pub fn taylor_derivative(&self, x: f64, n: usize) -> f64 {
        let dx = x - self.x0;
        let mut sum = 0.0;
        let mut fact = 1.0;
        let mut pow = 1.0;
        for k in n..=self.order {
            if k > n {
                fact *= (k - n) as f64;
                pow *= dx;
            }
            sum += self.taylor[k] * pow / fact;
        }
        if n > self.order {
            0.0
        } else {
            sum
        }
    }

    pub fn value(&self, x: f64, y: f64) -> f64 {
        let y2 = y * y;
        let mut out = self.preset.value(x);
        let mut ypow = 1.0;
        for j in 1..self.coeffs.len() {
            ypow *= y2;
            let sign = if j % 2 == 1 { -1.0 } else { 1.0 };
            out += sign / self.coeffs[j] * ypow * self.taylor_derivative(x, 2 * j);
        }
        out
    }

    /// Exact right-hand side `L_a φ̃ = |y|^a (φ'' - (T⁰)'')`.
    pub fn la_value(&self, x: f64, y: f64) -> f64 {
        let d = self.preset.derivative(x, 2) - self.taylor_derivative(x, 2);
        if d == 0.0 {
            0.0
        } else {
            y.abs().powf(self.params.a()) * d
        }
    }
}

/// `φ̃` sampled on `grid`.
pub fn extend_obstacle(
    preset: &ObstaclePreset,
    x0: f64,
    params: &Params,
    order: usize,
    grid: Grid2D,
) -> Result<Field> {
    let ext = ObstacleExtension::new(*preset, *params, x0, order)?;
    Ok(Field::from_fn(grid, |x, y| ext.value(x, y)))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ObstacleSettings {
    /// Relaxation for rows above `y = 0`; defaults to the SOR optimum of the
    /// unweighted Laplacian on the reflected box.
    pub omega: Option<f64>,
    /// Relaxation on the constrained row.
    pub omega_row: f64,
    pub tol: f64,
    /// Sweep cap on the finest grid; defaults to `200 · max(nx, ny)`.
    pub max_iter: Option<usize>,
    /// Start from interpolated solutions on successively coarser grids.
    pub nested: bool,
}

impl Default for ObstacleSettings {
    fn default() -> Self {
        Self {
            omega: None,
            omega_row: 1.5,
            tol: 1e-12,
            max_iter: None,
            nested: true,
        }
    }
}

impl ObstacleSettings {
    pub fn validate(&self) -> Result<()> {
        for w in self.omega.iter().chain(std::iter::once(&self.omega_row)) {
            if !(*w > 0.0 && *w < 2.0) {
                return Err(Error::InvalidParams(format!(
                    "relaxation parameter {w} must lie in (0, 2)"
                )));
            }
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParams("tolerance must be positive".into()));
        }
        if self.max_iter == Some(0) {
            return Err(Error::InvalidParams("max_iter must be positive".into()));
        }
        Ok(())
    }

    fn omega_for(&self, grid: &Grid2D) -> f64 {
        self.omega.unwrap_or_else(|| {
            let lx = (grid.nx - 1) as f64 * grid.h;
            let ly = 2.0 * (grid.ny - 1) as f64 * grid.h;
            let pi_h = std::f64::consts::PI * grid.h;
            let rho = 0.5 * ((pi_h / lx).cos() + (pi_h / ly).cos());
            2.0 / (1.0 + (1.0 - rho * rho).sqrt())
        })
    }
}

#[derive(Clone, Debug)]
pub struct ObstacleProblem {
    pub params: Params,
    pub grid: Grid2D,
    /// `φ` at the row-0 nodes.
    pub obstacle: Vec<f64>,
    pub taylor_order: usize,
    /// Constant Dirichlet value on the outer boundary.
    pub box_boundary: f64,
    /// Analytic source of `obstacle`, when there is one.
    pub preset: Option<ObstaclePreset>,
}

impl ObstacleProblem {
    pub fn new(
        params: Params,
        grid: Grid2D,
        obstacle: Vec<f64>,
        taylor_order: usize,
        box_boundary: f64,
    ) -> Result<Self> {
        let prob = Self {
            params,
            grid,
            obstacle,
            taylor_order,
            box_boundary,
            preset: None,
        };
        prob.validate()?;
        Ok(prob)
    }

    /// Preset obstacle on the default box with spacing `h`, boundary value 0.
    pub fn from_preset(params: Params, preset: ObstaclePreset, h: f64) -> Result<Self> {
        let grid = Grid2D::covering_reflected(-BOX_HALF_WIDTH, BOX_HALF_WIDTH, BOX_HEIGHT, h)?;
        let obstacle = (0..grid.nx).map(|i| preset.value(grid.x(i))).collect();
        let mut prob = Self::new(params, grid, obstacle, 4, 0.0)?;
        prob.preset = Some(preset);
        Ok(prob)
    }

    pub fn validate(&self) -> Result<()> {
        let g = &self.grid;
        if !g.reflected {
            return Err(Error::GridMismatch("obstacle problems need a reflected grid".into()));
        }
        if self.obstacle.len() != g.nx {
            return Err(Error::GridMismatch(format!(
                "{} obstacle samples for {} columns",
                self.obstacle.len(),
                g.nx
            )));
        }
        if let Some(i) = self.obstacle.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { i, j: 0 });
        }
        if !self.box_boundary.is_finite() {
            return Err(Error::InvalidParams("box boundary value must be finite".into()));
        }
        if self.taylor_order < 2 {
            return Err(Error::InvalidParams(format!(
                "Taylor order must be at least 2, got {}",
                self.taylor_order
            )));
        }
        for i in [0, g.nx - 1] {
            if self.obstacle[i] >= self.box_boundary {
                return Err(Error::InvalidParams(format!(
                    "obstacle {} at x = {} does not lie below the box boundary value {}",
                    self.obstacle[i],
                    g.x(i),
                    self.box_boundary
                )));
            }
        }
        Ok(())
    }

    /// Same problem on the grid with twice the spacing, if the node counts
    /// allow exact subsampling.
    fn coarsened(&self) -> Option<Self> {
        let g = &self.grid;
        if (g.nx - 1) % 2 != 0 || (g.ny - 1) % 2 != 0 || g.nx < 33 || g.ny < 17 {
            return None;
        }
        let grid = Grid2D::reflected((g.nx - 1) / 2 + 1, (g.ny - 1) / 2 + 1, 2.0 * g.h, g.x0).ok()?;
        Some(Self {
            grid,
            obstacle: self.obstacle.iter().step_by(2).copied().collect(),
            ..self.clone()
        })
    }

    pub fn solve(&self, settings: &ObstacleSettings) -> Result<ObstacleSolution> {
        solve_obstacle(self, settings)
    }
}

#[derive(Clone, Debug)]
pub struct ObstacleSolution {
    pub params: Params,
    pub field: Field,
    pub obstacle: Vec<f64>,
    /// Row-0 contact mask.
    pub contact: Vec<bool>,
    pub iterations: usize,
    /// Final projected residual (diagonal-normalized).
    pub residual: f64,
    pub history: Vec<f64>,
    pub preset: Option<ObstaclePreset>,
    pub taylor_order: usize,
}

impl ObstacleSolution {
    pub fn grid(&self) -> &Grid2D {
        &self.field.grid
    }

    pub fn contact_count(&self) -> usize {
        self.contact.iter().filter(|c| **c).count()
    }
}

/// Face rule of the obstacle stencil. Near `y = 0` the solution is locally
/// `A + B y^{1-a} + C y^2`, with `B ≠ 0` only above the contact set. For
/// `a > 0` the flux profile `y^{1-a}` has an unbounded derivative and is
/// reproduced exactly by the harmonic mean; for `a < 0` it is `C^1` and the
/// midpoint rule, exact for the even profile, is the better match. The two
/// rules coincide at `a = 0`.
pub fn obstacle_face_rule(params: &Params) -> FaceRule {
    if params.a() > 0.0 {
        FaceRule::HarmonicMean
    } else {
        FaceRule::Midpoint
    }
}

/// Per-node relaxation data: neighbour weights over the diagonal.
struct Relaxer {
    grid: Grid2D,
    east: Vec<f64>,
    west: Vec<f64>,
    north: Vec<f64>,
    south: Vec<f64>,
}

impl Relaxer {
    fn new(grid: Grid2D, params: &Params) -> Self {
        let st = Stencil::with_rule(grid, Weight::la(params), obstacle_face_rule(params));
        let n = grid.len();
        let mut r = Self {
            grid,
            east: vec![0.0; n],
            west: vec![0.0; n],
            north: vec![0.0; n],
            south: vec![0.0; n],
        };
        for k in 0..n {
            let d = st.east[k] + st.west[k] + st.north[k] + st.south[k];
            if d > 0.0 {
                r.east[k] = st.east[k] / d;
                r.west[k] = st.west[k] / d;
                r.north[k] = st.north[k] / d;
                r.south[k] = st.south[k] / d;
            }
        }
        r
    }

    /// Gauss-Seidel target value at an unpinned node.
    #[inline]
    fn target(&self, u: &[f64], i: usize, j: usize) -> f64 {
        let g = &self.grid;
        let k = g.index(i, j);
        let un = u[k + g.nx];
        let us = if j == 0 { un } else { u[k - g.nx] };
        self.east[k] * u[k + 1] + self.west[k] * u[k - 1] + self.north[k] * un + self.south[k] * us
    }

    /// Diagonal-normalized stencil residual `target - u` at an unpinned node.
    #[inline]
    fn residual(&self, u: &[f64], i: usize, j: usize) -> f64 {
        self.target(u, i, j) - u[self.grid.index(i, j)]
    }

    /// Projected residual: `|target - u|` off row 0, and the natural
    /// complementarity residual `|min(u - φ, u - target)|` on it.
    fn projected_residual(&self, u: &[f64], phi: &[f64]) -> f64 {
        let g = &self.grid;
        let mut worst: f64 = 0.0;
        for j in 0..g.ny - 1 {
            for i in 1..g.nx - 1 {
                let r = self.residual(u, i, j);
                let v = if j == 0 {
                    (u[i] - phi[i]).min(-r).abs()
                } else {
                    r.abs()
                };
                worst = worst.max(v);
            }
        }
        worst
    }
}

const CHECK_EVERY: usize = 10;

/// Projected SOR for `ṽ ≥ φ` on row 0, `L_a ṽ ≤ 0`, with complementarity,
/// `ṽ` even in `y` and constant on the outer boundary.
pub fn solve_obstacle(prob: &ObstacleProblem, settings: &ObstacleSettings) -> Result<ObstacleSolution> {
    prob.validate()?;
    settings.validate()?;
    let mut chain = vec![prob.clone()];
    if settings.nested {
        while let Some(c) = chain.last().unwrap().coarsened() {
            chain.push(c);
        }
    }
    let mut start: Option<Field> = None;
    let mut total = 0;
    let mut result = None;
    for (level, p) in chain.iter().enumerate().rev() {
        let g = p.grid;
        let initial = match &start {
            None => Field::from_fn(g, |_, _| p.box_boundary),
            Some(coarse) => Field::from_fn(g, |x, y| coarse.interpolate(x, y).unwrap_or(p.box_boundary)),
        };
        // Coarse levels only provide a starting guess.
        let tol = if level == 0 { settings.tol } else { settings.tol.max(1e-3 * g.h * g.h) };
        let cap = if level == 0 {
            settings.max_iter.unwrap_or(200 * g.nx.max(g.ny))
        } else {
            200 * g.nx.max(g.ny)
        };
        let sol = psor(p, initial, settings, tol, cap)?;
        total += sol.iterations;
        start = Some(sol.field.clone());
        result = Some(sol);
    }
    let mut sol = result.expect("at least one level");
    sol.iterations = total;
    Ok(sol)
}

fn psor(
    prob: &ObstacleProblem,
    initial: Field,
    settings: &ObstacleSettings,
    tol: f64,
    cap: usize,
) -> Result<ObstacleSolution> {
    let g = prob.grid;
    let rx = Relaxer::new(g, &prob.params);
    let phi = &prob.obstacle;
    let omega = settings.omega_for(&g);
    let omega_row = settings.omega_row;
    let mut u = initial.values;
    for i in 0..g.nx {
        for j in 0..g.ny {
            if g.is_outer_boundary(i, j) {
                u[g.index(i, j)] = prob.box_boundary;
            }
        }
        u[i] = u[i].max(phi[i]);
    }
    let mut clamped = vec![false; g.nx];
    let mut history = Vec::new();
    for it in 1..=cap {
        for i in 1..g.nx - 1 {
            let t = rx.target(&u, i, 0);
            let cand = u[i] + omega_row * (t - u[i]);
            clamped[i] = cand < phi[i];
            u[i] = cand.max(phi[i]);
        }
        for j in 1..g.ny - 1 {
            for i in 1..g.nx - 1 {
                let k = g.index(i, j);
                let t = rx.target(&u, i, j);
                u[k] += omega * (t - u[k]);
            }
        }
        if it % CHECK_EVERY == 0 || it == cap {
            let r = rx.projected_residual(&u, phi);
            history.push(r);
            if !r.is_finite() {
                return Err(Error::NoConvergence {
                    iterations: it,
                    residual: r,
                    history,
                });
            }
            if r < tol {
                let contact = (0..g.nx)
                    .map(|i| clamped[i] && u[i] - phi[i] < 10.0 * tol)
                    .collect();
                return Ok(ObstacleSolution {
                    params: prob.params,
                    field: Field::from_values(g, u)?,
                    obstacle: phi.clone(),
                    contact,
                    iterations: it,
                    residual: r,
                    history,
                    preset: prob.preset,
                    taylor_order: prob.taylor_order,
                });
            }
        }
    }
    Err(Error::NoConvergence {
        iterations: cap,
        residual: history.last().copied().unwrap_or(f64::NAN),
        history,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplementarityMetrics {
    /// (i) max diagonal-normalized stencil residual over unconstrained nodes.
    pub stencil_residual: f64,
    /// (ii) min over contact columns of `-flux` (`(-Δ)^s v ≥ 0` wants ≥ 0).
    pub contact_flux_min: f64,
    /// (iii) max `|flux|` over free row-0 columns outside the exclusion band.
    pub free_flux_max: f64,
    /// Columns closer than this to a free-boundary point are left out of (iii).
    pub band: f64,
}

/// Default exclusion band around free-boundary points for metric (iii).
pub const FLUX_BAND: f64 = 0.125;

pub fn complementarity_audit(sol: &ObstacleSolution) -> Result<ComplementarityMetrics> {
    complementarity_audit_with(sol, FLUX_BAND, 1.0)
}

/// Audit with an explicit exclusion band; `flux_sign` multiplies the
/// extrapolated flux (`1.0` is the correct convention).
pub fn complementarity_audit_with(
    sol: &ObstacleSolution,
    band: f64,
    flux_sign: f64,
) -> Result<ComplementarityMetrics> {
    let g = *sol.grid();
    let rx = Relaxer::new(g, &sol.params);
    let u = &sol.field.values;
    let mut stencil_residual: f64 = 0.0;
    for j in 0..g.ny - 1 {
        for i in 1..g.nx - 1 {
            if j == 0 && sol.contact[i] {
                continue;
            }
            stencil_residual = stencil_residual.max(rx.residual(u, i, j).abs());
        }
    }
    let fb: Vec<f64> = free_boundary(sol).iter().map(|p| p.x).collect();
    let mut contact_flux_min = f64::INFINITY;
    let mut free_flux_max: f64 = 0.0;
    for i in 1..g.nx - 1 {
        let x = g.x(i);
        if sol.contact[i] {
            let flux = flux_sign * flux_at_column(&sol.field, &sol.params, i)?;
            contact_flux_min = contact_flux_min.min(-flux);
        } else if fb.iter().all(|xf| (x - xf).abs() >= band) {
            let flux = flux_sign * flux_at_column(&sol.field, &sol.params, i)?;
            free_flux_max = free_flux_max.max(flux.abs());
        }
    }
    if contact_flux_min == f64::INFINITY {
        contact_flux_min = 0.0;
    }
    Ok(ComplementarityMetrics {
        stencil_residual,
        contact_flux_min,
        free_flux_max,
        band,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    /// Contact set lies to the right of the point.
    Left,
    /// Contact set lies to the left of the point.
    Right,
}

impl std::fmt::Display for Side {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Side::Left => "left",
            Side::Right => "right",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FreeBoundaryPoint {
    pub x: f64,
    pub side: Side,
    /// Row-0 index of the outermost contact node.
    pub node: usize,
}

/// Endpoints of every contact run on row 0. Each point is placed between the
/// last contact node and the first free node by extrapolating
/// `(ṽ - φ)^{1/(1+s)}`, which is linear in the distance for a regular point,
/// from the first two free nodes.
pub fn free_boundary(sol: &ObstacleSolution) -> Vec<FreeBoundaryPoint> {
    let g = sol.grid();
    let c = &sol.contact;
    let p = 1.0 / (1.0 + sol.params.s());
    let gap = |i: usize| (sol.field.values[i] - sol.obstacle[i]).max(0.0).powf(p);
    let mut out = Vec::new();
    for i in 0..g.nx {
        if !c[i] {
            continue;
        }
        if i > 0 && !c[i - 1] {
            let x = refine(g.x(i), g.x(i - 1), gap(i - 1), (i >= 2).then(|| gap(i - 2)), g.h);
            out.push(FreeBoundaryPoint {
                x,
                side: Side::Left,
                node: i,
            });
        }
        if i + 1 < g.nx && !c[i + 1] {
            let x = refine(g.x(i), g.x(i + 1), gap(i + 1), (i + 2 < g.nx).then(|| gap(i + 2)), g.h);
            out.push(FreeBoundaryPoint {
                x,
                side: Side::Right,
                node: i,
            });
        }
    }
    out
}

/// Zero of the line through `(x1, g1)` and the next free node, kept within
/// the cell `[x_contact, x1]`.
fn refine(x_contact: f64, x1: f64, g1: f64, g2: Option<f64>, h: f64) -> f64 {
    let dir = (x1 - x_contact).signum();
    let t = match g2 {
        Some(g2) if g2 > g1 && g1 > 0.0 => (g1 / (g2 - g1)).min(1.0),
        _ => 0.0,
    };
    x1 - dir * t * h
}
