use std::fmt::Write as _;
use std::io::BufRead;

use crate::error::{Error, Result};

/// Uniform grid with square cells. Node `(i, j)` sits at
/// `(x0 + i h, y0 + j h)`; a reflected grid has `y0 = 0` and represents the
/// upper half of a field that is even in `y`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid2D {
    pub nx: usize,
    pub ny: usize,
    pub h: f64,
    pub x0: f64,
    pub y0: f64,
    pub reflected: bool,
}

impl Grid2D {
    pub fn new(nx: usize, ny: usize, h: f64, x0: f64, y0: f64) -> Result<Self> {
        Self::build(nx, ny, h, x0, y0, false)
    }

    /// Upper-half grid with row 0 on `{y = 0}`.
    pub fn reflected(nx: usize, ny: usize, h: f64, x0: f64) -> Result<Self> {
        Self::build(nx, ny, h, x0, 0.0, true)
    }

    /// Grid covering `[x_lo, x_hi] × [y_lo, y_hi]` with spacing `h`; the
    /// extents must be multiples of `h`.
    pub fn covering(x_lo: f64, x_hi: f64, y_lo: f64, y_hi: f64, h: f64) -> Result<Self> {
        let nx = cells(x_hi - x_lo, h)? + 1;
        let ny = cells(y_hi - y_lo, h)? + 1;
        Self::new(nx, ny, h, x_lo, y_lo)
    }

    /// Reflected grid covering `[x_lo, x_hi] × [0, y_hi]`.
    pub fn covering_reflected(x_lo: f64, x_hi: f64, y_hi: f64, h: f64) -> Result<Self> {
        let nx = cells(x_hi - x_lo, h)? + 1;
        let ny = cells(y_hi, h)? + 1;
        Self::reflected(nx, ny, h, x_lo)
    }

    fn build(nx: usize, ny: usize, h: f64, x0: f64, y0: f64, reflected: bool) -> Result<Self> {
        if nx < 3 || ny < 3 {
            return Err(Error::GridTooSmall { nx, ny });
        }
        if !(h > 0.0) || !h.is_finite() || !x0.is_finite() || !y0.is_finite() {
            return Err(Error::InvalidParams(format!(
                "grid needs finite h > 0 and finite origin, got h = {h}"
            )));
        }
        Ok(Self {
            nx,
            ny,
            h,
            x0,
            y0,
            reflected,
        })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.h
    }

    #[inline]
    pub fn y(&self, j: usize) -> f64 {
        if self.reflected {
            j as f64 * self.h
        } else {
            self.y0 + j as f64 * self.h
        }
    }

    pub fn x_max(&self) -> f64 {
        self.x(self.nx - 1)
    }

    pub fn y_max(&self) -> f64 {
        self.y(self.ny - 1)
    }

    /// Nodes on the outer boundary of the box. The bottom row of a reflected
    /// grid is the symmetry line, not a boundary.
    pub fn is_outer_boundary(&self, i: usize, j: usize) -> bool {
        i == 0 || i == self.nx - 1 || j == self.ny - 1 || (j == 0 && !self.reflected)
    }

    /// Column whose abscissa is `x`, if `x` is on a grid line.
    pub fn column_of(&self, x: f64) -> Option<usize> {
        let t = (x - self.x0) / self.h;
        let i = t.round();
        if (t - i).abs() < 1e-9 && i >= 0.0 && (i as usize) < self.nx {
            Some(i as usize)
        } else {
            None
        }
    }

    /// Row whose ordinate is `y`, if `y` is on a grid line.
    pub fn row_of(&self, y: f64) -> Option<usize> {
        let t = (y - self.y(0)) / self.h;
        let j = t.round();
        if (t - j).abs() < 1e-9 && j >= 0.0 && (j as usize) < self.ny {
            Some(j as usize)
        } else {
            None
        }
    }

    pub fn same_shape(&self, other: &Grid2D) -> bool {
        self.nx == other.nx
            && self.ny == other.ny
            && self.reflected == other.reflected
            && (self.h - other.h).abs() <= 1e-12 * self.h
            && (self.x0 - other.x0).abs() <= 1e-12 * self.h.max(self.x0.abs())
            && (self.y0 - other.y0).abs() <= 1e-12 * self.h.max(self.y0.abs())
    }
}

fn cells(extent: f64, h: f64) -> Result<usize> {
    let n = extent / h;
    let r = n.round();
    if !(r >= 2.0) || (n - r).abs() > 1e-9 * r.max(1.0) {
        return Err(Error::InvalidParams(format!(
            "extent {extent} is not a multiple (>= 2) of h = {h}"
        )));
    }
    Ok(r as usize)
}

/// Node values on a grid, stored row-major (`j` outer, `i` inner).
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    pub grid: Grid2D,
    pub values: Vec<f64>,
}

impl Field {
    pub fn zeros(grid: Grid2D) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn from_fn<F: Fn(f64, f64) -> f64>(grid: Grid2D, f: F) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for j in 0..grid.ny {
            let y = grid.y(j);
            for i in 0..grid.nx {
                values.push(f(grid.x(i), y));
            }
        }
        Self { grid, values }
    }

    pub fn from_values(grid: Grid2D, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for a {}x{} grid",
                values.len(),
                grid.nx,
                grid.ny
            )));
        }
        Ok(Self { grid, values })
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = self.grid.index(i, j);
        self.values[k] = v;
    }

    /// Rejects NaN or infinite entries.
    pub fn validate(&self) -> Result<()> {
        match self.values.iter().position(|v| !v.is_finite()) {
            None => Ok(()),
            Some(k) => Err(Error::NonFinite {
                i: k % self.grid.nx,
                j: k / self.grid.nx,
            }),
        }
    }

    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_with<F: Fn(f64, f64) -> f64>(&self, other: &Field, f: F) -> Result<Self> {
        if !self.grid.same_shape(&other.grid) {
            return Err(Error::GridMismatch("fields live on different grids".into()));
        }
        Ok(Self {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    /// Bilinear interpolation; `None` outside the grid. A reflected grid
    /// answers for `y < 0` by symmetry.
    pub fn interpolate(&self, x: f64, y: f64) -> Option<f64> {
        let g = &self.grid;
        let y = if g.reflected { y.abs() } else { y };
        let tx = (x - g.x0) / g.h;
        let ty = (y - g.y(0)) / g.h;
        let eps = 1e-12;
        if tx < -eps || ty < -eps || tx > (g.nx - 1) as f64 + eps || ty > (g.ny - 1) as f64 + eps {
            return None;
        }
        let i = (tx.floor().max(0.0) as usize).min(g.nx - 2);
        let j = (ty.floor().max(0.0) as usize).min(g.ny - 2);
        let fx = (tx - i as f64).clamp(0.0, 1.0);
        let fy = (ty - j as f64).clamp(0.0, 1.0);
        let v00 = self.at(i, j);
        let v10 = self.at(i + 1, j);
        let v01 = self.at(i, j + 1);
        let v11 = self.at(i + 1, j + 1);
        Some(
            v00 * (1.0 - fx) * (1.0 - fy)
                + v10 * fx * (1.0 - fy)
                + v01 * (1.0 - fx) * fy
                + v11 * fx * fy,
        )
    }

    /// CSV with header `x,y,value`, row-major. Banner lines, if any, are
    /// written first as `#` comments.
    pub fn to_csv(&self, banner: &[String]) -> String {
        let mut out = String::with_capacity(self.values.len() * 40);
        for line in banner {
            let _ = writeln!(out, "# {line}");
        }
        out.push_str("x,y,value\n");
        for j in 0..self.grid.ny {
            let y = self.grid.y(j);
            for i in 0..self.grid.nx {
                let _ = writeln!(out, "{:e},{:e},{:e}", self.grid.x(i), y, self.at(i, j));
            }
        }
        out
    }

    /// Parses the CSV written by [`Field::to_csv`]. The grid is reconstructed
    /// from the coordinates and must be uniform with square cells; a grid
    /// whose lowest row is `y = 0` is read back as reflected when
    /// `reflected` is set.
    pub fn from_csv<R: BufRead>(reader: R, reflected: bool) -> Result<Self> {
        let mut header_seen = false;
        let mut rows: Vec<(f64, f64, f64)> = Vec::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            if !header_seen {
                let cols: Vec<&str> = trimmed.split(',').map(str::trim).collect();
                if cols != ["x", "y", "value"] {
                    return Err(Error::Csv(format!(
                        "line {}: expected header \"x,y,value\"",
                        lineno + 1
                    )));
                }
                header_seen = true;
                continue;
            }
            let mut parts = trimmed.split(',');
            let mut next = || -> Result<f64> {
                let tok = parts
                    .next()
                    .ok_or_else(|| Error::Csv(format!("line {}: missing column", lineno + 1)))?;
                tok.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Csv(format!("line {}: bad number {tok:?}", lineno + 1)))
            };
            let x = next()?;
            let y = next()?;
            let v = next()?;
            if parts.next().is_some() {
                return Err(Error::Csv(format!("line {}: too many columns", lineno + 1)));
            }
            rows.push((x, y, v));
        }
        if !header_seen {
            return Err(Error::Csv("missing header".into()));
        }
        if rows.is_empty() {
            return Err(Error::Csv("no data rows".into()));
        }
        let y_first = rows[0].1;
        let nx = rows.iter().take_while(|r| r.1 == y_first).count();
        if nx < 2 || rows.len() % nx != 0 {
            return Err(Error::Csv("rows do not form a rectangular grid".into()));
        }
        let ny = rows.len() / nx;
        let h = rows[1].0 - rows[0].0;
        if !(h > 0.0) {
            return Err(Error::Csv("x must increase along a row".into()));
        }
        let x0 = rows[0].0;
        let tol = 1e-9 * h.max(x0.abs());
        for (k, r) in rows.iter().enumerate() {
            let (i, j) = (k % nx, k / nx);
            let ex = x0 + i as f64 * h;
            let ey = y_first + j as f64 * h;
            if (r.0 - ex).abs() > tol + 1e-9 * ex.abs() || (r.1 - ey).abs() > tol + 1e-9 * ey.abs() {
                return Err(Error::Csv(format!(
                    "row {} at ({}, {}) breaks the uniform grid",
                    k + 1,
                    r.0,
                    r.1
                )));
            }
        }
        let grid = if reflected && y_first == 0.0 {
            Grid2D::reflected(nx, ny, h, x0)
        } else {
            Grid2D::new(nx, ny, h, x0, y_first)
        }
        .map_err(|e| Error::Csv(e.to_string()))?;
        let field = Field::from_values(grid, rows.into_iter().map(|r| r.2).collect())?;
        field.validate().map_err(|e| Error::Csv(e.to_string()))?;
        Ok(field)
    }
}
