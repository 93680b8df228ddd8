//! The weighted operator `L_a u = div(|y|^a ∇u)` on uniform grids, Dirichlet
//! solves in slit domains and the extension flux.

pub mod flux;
pub mod grid;
pub mod solve;
pub mod stencil;

pub use flux::{flux_at_column, flux_limit, FLUX_S_LIMIT};
pub use grid::{Field, Grid2D};
pub use solve::{dirichlet_solve, slit_mask, LinearProblem, Method, Solution, SolverSettings};
pub use stencil::{apply_la, FaceRule, apply_la_bar, la_bar_stencil, Stencil, Weight};
