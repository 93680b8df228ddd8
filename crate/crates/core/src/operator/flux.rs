use super::grid::Field;
use crate::error::{Error, Result};
use crate::geometry::Params;

/// Above this `s` the two-row extrapolation is too ill-conditioned to trust.
pub const FLUX_S_LIMIT: f64 = 0.95;

/// Extrapolated `lim_{y→0+} y^a ∂_y u` at column abscissa `x`.
///
/// Fits `u(x, y) ≈ u(x, 0) + L y^{1-a} / (1-a)` separately from rows 1 and 2
/// and removes the leading `O(h^{1+a})` error of the even part by Richardson
/// extrapolation. This is the un-normalized extension flux: `(-Δ)^s v` is
/// `-L` times a dimensional constant that is not applied here.
pub fn flux_limit(f: &Field, params: &Params, x: f64) -> Result<f64> {
    let g = &f.grid;
    if !g.reflected {
        return Err(Error::GridMismatch("flux needs a reflected grid".into()));
    }
    let i = g
        .column_of(x)
        .ok_or_else(|| Error::GridMismatch(format!("x = {x} is not on a grid column")))?;
    flux_at_column(f, params, i)
}

pub fn flux_at_column(f: &Field, params: &Params, i: usize) -> Result<f64> {
    let g = &f.grid;
    if params.s() >= FLUX_S_LIMIT {
        return Err(Error::IllConditioned(format!(
            "s = {} >= {FLUX_S_LIMIT}: y^(1-a) is nearly quadratic and the rows cannot separate it",
            params.s()
        )));
    }
    let a = params.a();
    let q = 1.0 - a;
    let (u0, u1, u2) = (f.at(i, 0), f.at(i, 1), f.at(i, 2));
    let l1 = (u1 - u0) * q / g.h.powf(q);
    let l2 = (u2 - u0) * q / (2.0 * g.h).powf(q);
    let k = 2f64.powf(1.0 + a);
    Ok((k * l1 - l2) / (k - 1.0))
}
