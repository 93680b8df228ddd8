//! End-to-end checks that chain several modules together.

use slit_harmonic::analysis::{free_boundary_quotient, homogeneity_slope, DEFAULT_ANNULI};
use slit_harmonic::geometry::{profile_from_distance, GeometrySpec};
use slit_harmonic::obstacle::{free_boundary, ObstaclePreset, ObstacleProblem, ObstacleSettings, PresetKind};
use slit_harmonic::operator::{dirichlet_solve, Field, Grid2D, SolverSettings};
use slit_harmonic::spectral::SpectralBasis;
use slit_harmonic::{Params, Point, SlitGeometry};

fn spectral_solve_error(p: Params, h: f64) -> f64 {
    let basis = SpectralBasis::new(p, 4).unwrap();
    let e = basis.expansion(0.0, &[0.3, -0.5, 0.25, 0.1, -0.05]).unwrap();
    let g = Grid2D::covering_reflected(-1.0, 1.0, 1.0, h).unwrap();
    let sol = dirichlet_solve(
        &SlitGeometry::flat(),
        &p,
        &g,
        |x, y| e.zipped(x, y),
        |_| 0.0,
        None,
        &SolverSettings::cg(),
    )
    .unwrap();
    let mut err = 0.0f64;
    for j in 0..g.ny {
        for i in 0..g.nx {
            let (x, y) = (g.x(i), g.y(j));
            if x.hypot(y) <= 0.5 {
                err = err.max((sol.field.at(i, j) - e.zipped(x, y)).abs());
            }
        }
    }
    err
}

#[test]
fn spectral_data_solve_converges_under_refinement() {
    for s in [0.5, 0.75] {
        let p = Params::from_s(s).unwrap();
        let coarse = spectral_solve_error(p, 1.0 / 32.0);
        let fine = spectral_solve_error(p, 1.0 / 64.0);
        assert!(fine < 0.8 * coarse, "s = {s}: {coarse:.3e} -> {fine:.3e}");
    }
}

#[test]
fn curved_geometry_document_drives_a_solve() {
    let geom = GeometrySpec::from_json(
        r#"{"mode": "curve", "gamma": {"kind": "power", "amplitude": 0.2, "exponent": 1.5}, "alpha": 0.5}"#,
    )
    .and_then(|s| s.build())
    .unwrap();
    assert!(!geom.is_flat());
    let p = Params::from_s(0.5).unwrap();
    let g = Grid2D::covering_reflected(-1.0, 1.0, 1.0, 1.0 / 32.0).unwrap();
    let bc = |x: f64, y: f64| geom.profile_u_a(&p, &Point::curve(0.0, x, y)).unwrap();
    let sol = dirichlet_solve(&geom, &p, &g, bc, |_| 0.0, None, &SolverSettings::cg()).unwrap();
    // Away from the edge the solution stays close to the regularized profile.
    let (i, j) = (g.nx - 4, g.ny / 2);
    let (x, y) = (g.x(i), g.y(j));
    assert!((sol.field.at(i, j) - bc(x, y)).abs() < 0.05 * bc(x, y).abs());
    assert!(sol.field.values.iter().all(|v| v.is_finite()));
}

#[test]
fn field_csv_round_trip_preserves_homogeneity() {
    let s = 0.5;
    let g = Grid2D::covering_reflected(-1.0, 1.0, 1.0, 1.0 / 64.0).unwrap();
    let f = Field::from_fn(g, |x, y| profile_from_distance(x, y, s));
    let text = f.to_csv(&["profile".to_string()]);
    let back = Field::from_csv(text.as_bytes(), true).unwrap();
    assert_eq!(back.grid.nx, f.grid.nx);
    assert_eq!(back.grid.ny, f.grid.ny);
    assert_eq!(back.values, f.values);
    let slope = homogeneity_slope(&back, &Point::flat(0.0, 0.0), &[0.5, 0.25, 0.125]).unwrap();
    assert!((slope - s).abs() < 0.02, "{slope}");
}

#[test]
fn free_boundary_quotient_settles_to_a_constant() {
    let p = Params::from_s(0.5).unwrap();
    let preset = ObstaclePreset::standard(PresetKind::Quadratic);
    let mut constants = Vec::new();
    for n in [64.0, 128.0] {
        let sol = ObstacleProblem::from_preset(p, preset, 1.0 / n)
            .unwrap()
            .solve(&ObstacleSettings::default())
            .unwrap();
        let points = free_boundary(&sol);
        assert_eq!(points.len(), 2);
        let fit = free_boundary_quotient(&sol, &points[1], 0, &DEFAULT_ANNULI[..4]).unwrap();
        let r = &fit.residuals;
        assert!(r[r.len() - 1] < 0.5 * r[0], "{r:?}");
        constants.push(fit.poly.terms[0].coeff);
    }
    let drift = (constants[1] - constants[0]).abs() / constants[1].abs();
    assert!(drift < 0.05, "{constants:?}");
}

#[test]
fn obstacle_free_boundary_is_symmetric_for_symmetric_data() {
    let p = Params::from_s(0.25).unwrap();
    for kind in [PresetKind::Quadratic, PresetKind::Bump, PresetKind::Cos] {
        let sol = ObstacleProblem::from_preset(p, ObstaclePreset::standard(kind), 1.0 / 64.0)
            .unwrap()
            .solve(&ObstacleSettings::default())
            .unwrap();
        let pts = free_boundary(&sol);
        assert_eq!(pts.len(), 2, "{kind:?}");
        assert!((pts[0].x + pts[1].x).abs() < 1e-8, "{kind:?}: {:?}", (pts[0].x, pts[1].x));
    }
}
