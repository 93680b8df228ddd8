//! Dirichlet solves for the weighted five-point operator: SOR and
//! Jacobi-preconditioned conjugate gradients on the symmetrized system.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::grid::{Field, Grid2D};
use super::stencil::{Stencil, Weight};
use crate::error::{Error, Result};
use crate::geometry::{Params, SlitGeometry};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    #[default]
    Sor,
    Cg,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverSettings {
    pub method: Method,
    pub omega: f64,
    pub tol: f64,
    /// Defaults to `200 · max(nx, ny)` when absent.
    pub max_iter: Option<usize>,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            method: Method::Sor,
            omega: 1.8,
            tol: 1e-10,
            max_iter: None,
        }
    }
}

impl SolverSettings {
    pub fn cg() -> Self {
        Self {
            method: Method::Cg,
            ..Self::default()
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let s: Self = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega > 0.0 && self.omega < 2.0) {
            return Err(Error::InvalidParams(format!(
                "relaxation parameter {} must lie in (0, 2)",
                self.omega
            )));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParams("tolerance must be positive".into()));
        }
        if self.max_iter == Some(0) {
            return Err(Error::InvalidParams("max_iter must be positive".into()));
        }
        Ok(())
    }

    pub fn iteration_cap(&self, grid: &Grid2D) -> usize {
        self.max_iter.unwrap_or(200 * grid.nx.max(grid.ny))
    }
}

#[derive(Clone, Debug)]
pub struct Solution {
    pub field: Field,
    pub iterations: usize,
    pub residual: f64,
    pub history: Vec<f64>,
}

/// A linear problem `L u = rhs` on the free nodes with `u` pinned elsewhere.
#[derive(Clone, Debug)]
pub struct LinearProblem {
    pub stencil: Stencil,
    /// `true` for nodes whose value is prescribed.
    pub pinned: Vec<bool>,
    /// Initial guess; holds the prescribed values at pinned nodes.
    pub initial: Field,
    /// Right-hand side of the unscaled operator; zero when absent.
    pub rhs: Option<Vec<f64>>,
}

impl LinearProblem {
    /// Pins the outer boundary; additional pins can be set afterwards.
    pub fn new(stencil: Stencil, initial: Field) -> Result<Self> {
        if !initial.grid.same_shape(&stencil.grid) {
            return Err(Error::GridMismatch("initial field and stencil grids differ".into()));
        }
        initial.validate()?;
        let g = stencil.grid;
        let pinned = (0..g.len())
            .map(|k| g.is_outer_boundary(k % g.nx, k / g.nx))
            .collect();
        Ok(Self {
            stencil,
            pinned,
            initial,
            rhs: None,
        })
    }

    /// Half-cell factor making the system symmetric on a reflected grid.
    #[inline]
    fn volume(&self, j: usize) -> f64 {
        if self.stencil.grid.reflected && j == 0 {
            0.5
        } else {
            1.0
        }
    }

    /// Diagonal of the symmetrized matrix `-vol · h² · L`.
    fn diagonal(&self) -> Vec<f64> {
        let st = &self.stencil;
        let g = st.grid;
        (0..g.len())
            .map(|k| {
                let j = k / g.nx;
                let vol = self.volume(j);
                vol * (st.east[k] + st.west[k] + st.north[k] + st.south[k])
            })
            .collect()
    }

    /// `y = S u` restricted to free rows, where `S = -vol · h² · L`; pinned
    /// entries of `u` are treated as given (set them to 0 to get the pure
    /// free-free product).
    fn matvec(&self, u: &[f64], out: &mut [f64]) {
        let st = &self.stencil;
        let g = st.grid;
        let h2 = g.h * g.h;
        out.par_chunks_mut(g.nx).enumerate().for_each(|(j, row)| {
            let vol = self.volume(j);
            for (i, slot) in row.iter_mut().enumerate() {
                let k = g.index(i, j);
                if self.pinned[k] {
                    *slot = 0.0;
                } else {
                    let (hx, vy) = st.parts(u, i, j);
                    *slot = -vol * h2 * (hx + vy);
                }
            }
        });
    }

    /// Symmetrized right-hand side `b` such that the solution satisfies
    /// `S u_free = b` (pinned values moved over).
    fn rhs_vector(&self) -> Vec<f64> {
        let g = self.stencil.grid;
        let h2 = g.h * g.h;
        let mut pinned_only = self.initial.values.clone();
        for (k, v) in pinned_only.iter_mut().enumerate() {
            if !self.pinned[k] {
                *v = 0.0;
            }
        }
        let mut b = vec![0.0; g.len()];
        self.matvec(&pinned_only, &mut b);
        for (k, bk) in b.iter_mut().enumerate() {
            if self.pinned[k] {
                *bk = 0.0;
            } else {
                let f = self.rhs.as_ref().map_or(0.0, |r| r[k]);
                *bk = -*bk - self.volume(k / g.nx) * h2 * f;
            }
        }
        b
    }

    /// Relative residual `‖b − S u‖₂ / ‖b‖₂` (absolute when `b = 0`).
    pub fn relative_residual(&self, u: &[f64]) -> f64 {
        let b = self.rhs_vector();
        let mut free_u = u.to_vec();
        for (k, v) in free_u.iter_mut().enumerate() {
            if self.pinned[k] {
                *v = 0.0;
            }
        }
        let mut su = vec![0.0; u.len()];
        self.matvec(&free_u, &mut su);
        let num: f64 = b.iter().zip(&su).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
        let den: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
        if den > 0.0 {
            num / den
        } else {
            num
        }
    }

    pub fn solve(&self, settings: &SolverSettings) -> Result<Solution> {
        settings.validate()?;
        match settings.method {
            Method::Sor => self.solve_sor(settings, None),
            Method::Cg => self.solve_cg(settings),
        }
    }

    /// SOR sweeps in lexicographic order. When `observer` is given it is
    /// called with the iterate after every sweep.
    pub fn solve_sor(
        &self,
        settings: &SolverSettings,
        mut observer: Option<&mut dyn FnMut(&[f64])>,
    ) -> Result<Solution> {
        let st = &self.stencil;
        let g = st.grid;
        let h2 = g.h * g.h;
        let omega = settings.omega;
        let cap = settings.iteration_cap(&g);
        let b = self.rhs_vector();
        let bnorm = b.iter().map(|x| x * x).sum::<f64>().sqrt();
        let mut u = self.initial.values.clone();
        let rhs = self.rhs.as_deref();
        let mut history = Vec::new();
        let check_every = 1;
        for it in 1..=cap {
            for j in 0..g.ny {
                for i in 0..g.nx {
                    let k = g.index(i, j);
                    if self.pinned[k] {
                        continue;
                    }
                    let us = if g.reflected && j == 0 { u[k + g.nx] } else { u[k - g.nx] };
                    let num = st.east[k] * u[k + 1]
                        + st.west[k] * u[k - 1]
                        + st.north[k] * u[k + g.nx]
                        + st.south[k] * us
                        - h2 * rhs.map_or(0.0, |r| r[k]);
                    let diag = st.east[k] + st.west[k] + st.north[k] + st.south[k];
                    u[k] += omega * (num / diag - u[k]);
                }
            }
            if let Some(obs) = observer.as_mut() {
                obs(&u);
            }
            if it % check_every == 0 || it == cap {
                let r = self.residual_norm(&u, &b);
                let rel = if bnorm > 0.0 { r / bnorm } else { r };
                history.push(rel);
                if !rel.is_finite() {
                    return Err(Error::NoConvergence {
                        iterations: it,
                        residual: rel,
                        history,
                    });
                }
                if rel < settings.tol {
                    return Ok(Solution {
                        field: Field::from_values(g, u)?,
                        iterations: it,
                        residual: rel,
                        history,
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

    fn residual_norm(&self, u: &[f64], b: &[f64]) -> f64 {
        let mut free_u = u.to_vec();
        for (k, v) in free_u.iter_mut().enumerate() {
            if self.pinned[k] {
                *v = 0.0;
            }
        }
        let mut su = vec![0.0; u.len()];
        self.matvec(&free_u, &mut su);
        b.iter()
            .zip(&su)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt()
    }

    /// Jacobi-preconditioned CG on the free nodes.
    pub fn solve_cg(&self, settings: &SolverSettings) -> Result<Solution> {
        let g = self.stencil.grid;
        let n = g.len();
        let cap = settings.iteration_cap(&g);
        let b = self.rhs_vector();
        let bnorm = b.iter().map(|x| x * x).sum::<f64>().sqrt();
        let diag = self.diagonal();
        let inv: Vec<f64> = (0..n)
            .map(|k| if self.pinned[k] { 0.0 } else { 1.0 / diag[k] })
            .collect();

        let mut x: Vec<f64> = (0..n)
            .map(|k| if self.pinned[k] { 0.0 } else { self.initial.values[k] })
            .collect();
        let mut ax = vec![0.0; n];
        self.matvec(&x, &mut ax);
        let mut r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let norm = |v: &[f64]| v.par_iter().map(|t| t * t).sum::<f64>().sqrt();
        let scale = if bnorm > 0.0 { bnorm } else { 1.0 };
        let mut history = vec![norm(&r) / scale];
        let finish = |x: Vec<f64>, iterations: usize, residual: f64, history: Vec<f64>| {
            let mut values = x;
            for (k, v) in values.iter_mut().enumerate() {
                if self.pinned[k] {
                    *v = self.initial.values[k];
                }
            }
            Ok(Solution {
                field: Field::from_values(g, values)?,
                iterations,
                residual,
                history,
            })
        };
        if history[0] < settings.tol {
            let res = history[0];
            return finish(x, 0, res, history);
        }
        let mut z: Vec<f64> = r.iter().zip(&inv).map(|(a, b)| a * b).collect();
        let mut p = z.clone();
        let mut rz: f64 = r.par_iter().zip(&z).map(|(a, b)| a * b).sum();
        let mut ap = vec![0.0; n];
        for it in 1..=cap {
            self.matvec(&p, &mut ap);
            let pap: f64 = p.par_iter().zip(&ap).map(|(a, b)| a * b).sum();
            if !(pap > 0.0) {
                break;
            }
            let alpha = rz / pap;
            x.par_iter_mut().zip(&p).for_each(|(xi, pi)| *xi += alpha * pi);
            r.par_iter_mut().zip(&ap).for_each(|(ri, api)| *ri -= alpha * api);
            let rel = norm(&r) / scale;
            history.push(rel);
            if !rel.is_finite() {
                break;
            }
            if rel < settings.tol {
                // Confirm with the true residual rather than the recursive one.
                let mut check = vec![0.0; n];
                self.matvec(&x, &mut check);
                let true_rel = b
                    .iter()
                    .zip(&check)
                    .map(|(bi, ci)| (bi - ci) * (bi - ci))
                    .sum::<f64>()
                    .sqrt()
                    / scale;
                if true_rel < settings.tol {
                    return finish(x, it, true_rel, history);
                }
                r = b.iter().zip(&check).map(|(bi, ci)| bi - ci).collect();
            }
            z.par_iter_mut()
                .zip(r.par_iter().zip(&inv))
                .for_each(|(zi, (ri, di))| *zi = ri * di);
            let rz_new: f64 = r.par_iter().zip(&z).map(|(a, b)| a * b).sum();
            let beta = rz_new / rz;
            rz = rz_new;
            p.par_iter_mut().zip(&z).for_each(|(pi, zi)| *pi = zi + beta * *pi);
        }
        Err(Error::NoConvergence {
            iterations: history.len() - 1,
            residual: history.last().copied().unwrap_or(f64::NAN),
            history,
        })
    }
}

/// Nodes of the slit: rows on `{y = 0}` where `d(x) <= 0`.
pub fn slit_mask(geom: &SlitGeometry, grid: &Grid2D) -> Result<Vec<bool>> {
    let mut mask = vec![false; grid.len()];
    if let Some(j) = grid.row_of(0.0) {
        for i in 0..grid.nx {
            if geom.signed_distance(0.0, grid.x(i))? <= 0.0 {
                mask[grid.index(i, j)] = true;
            }
        }
    }
    Ok(mask)
}

/// Solves `L_a u = source` in the box minus the slit, with `u = boundary` on
/// the outer boundary and `u = slit_value(x)` on slit nodes.
pub fn dirichlet_solve<B, S>(
    geom: &SlitGeometry,
    params: &Params,
    grid: &Grid2D,
    boundary: B,
    slit_value: S,
    source: Option<&Field>,
    settings: &SolverSettings,
) -> Result<Solution>
where
    B: Fn(f64, f64) -> f64,
    S: Fn(f64) -> f64,
{
    let stencil = Stencil::new(*grid, Weight::la(params));
    let slit = slit_mask(geom, grid)?;
    let mut initial = Field::zeros(*grid);
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let k = grid.index(i, j);
            let (x, y) = (grid.x(i), grid.y(j));
            if slit[k] {
                initial.values[k] = slit_value(x);
            } else if grid.is_outer_boundary(i, j) {
                initial.values[k] = boundary(x, y);
            }
        }
    }
    let mut problem = LinearProblem::new(stencil, initial)?;
    for (p, s) in problem.pinned.iter_mut().zip(&slit) {
        *p |= *s;
    }
    if let Some(src) = source {
        if !src.grid.same_shape(grid) {
            return Err(Error::GridMismatch("source and solve grids differ".into()));
        }
        src.validate()?;
        problem.rhs = Some(src.values.clone());
    }
    problem.solve(settings)
}
