//! Acceptance suite. Prints one PASS/FAIL line per criterion and never
//! aborts on a FAIL, so the full picture is always visible. Runs without the
//! libtest harness: `cargo test -p slit-harmonic --test acceptance`.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use slit_harmonic::analysis::{
    a_harmonic_companion, a_harmonic_residual, free_boundary_homogeneity, solve_approx_system, ApproxSystem,
    Monomial, PolyXR,
};
use slit_harmonic::geometry::profile_from_distance;
use slit_harmonic::obstacle::{
    complementarity_audit, ObstaclePreset, ObstacleProblem, ObstacleSettings, ObstacleSolution, PresetKind,
};
use slit_harmonic::operator::{dirichlet_solve, Grid2D, SolverSettings};
use slit_harmonic::quadrature::CircleRule;
use slit_harmonic::regdist::{amplitude_sweep, barrier_check, EstimateSettings, SWEEP_SLOPE_TOLERANCE};
use slit_harmonic::spectral::{basis_residual, make_basis, phi_functional, SpectralBasis};
use slit_harmonic::{Params, SlitGeometry};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

const A_VALUES: [f64; 3] = [-0.5, 0.0, 0.5];
const S_VALUES: [f64; 3] = [0.25, 0.5, 0.75];
const J_MAX: usize = 8;

/// Residuals below this are roundoff: the function is reproduced exactly by
/// the stencil and has no measurable order.
const ROUNDOFF_RESIDUAL: f64 = 1e-9;

fn basis_harmonicity() -> Outcome {
    // Fixed physical band so that the same node set is compared across h.
    let band = 1.0 / 16.0;
    let mut worst_order = f64::INFINITY;
    let mut worst_rel = 0.0f64;
    let mut exact = 0;
    let mut failures = Vec::new();
    for a in A_VALUES {
        let p = Params::from_a(a).unwrap();
        for j in 0..=J_MAX {
            let u = make_basis(j, p).unwrap();
            let mut abs = Vec::new();
            let mut rel = Vec::new();
            for n in [64usize, 128, 256] {
                let (m, r) = basis_residual(&u, 1.0 / n as f64, band).unwrap();
                abs.push(m);
                rel.push(r);
            }
            if abs.iter().all(|&r| r < ROUNDOFF_RESIDUAL) {
                exact += 1;
                continue;
            }
            worst_rel = worst_rel.max(rel[2]);
            let order = (abs[0] / abs[1]).log2().min((abs[1] / abs[2]).log2());
            worst_order = worst_order.min(order);
            if order < 1.8 || rel[2] >= 1e-3 {
                failures.push(format!("a={a} j={j} order {order:.2} rel {:.1e}", rel[2]));
            }
        }
    }
    outcome(
        failures.is_empty(),
        format!(
            "min order {worst_order:.2} (≥ 1.8), max rel residual at h=1/256 {worst_rel:.1e} (< 1e-3), {exact} exact{}",
            if failures.is_empty() { String::new() } else { format!("; failing: {}", failures.join(", ")) }
        ),
    )
}

fn orthonormality() -> Outcome {
    let mut worst = 0.0f64;
    for a in A_VALUES {
        let basis = SpectralBasis::new(Params::from_a(a).unwrap(), J_MAX).unwrap();
        let g = basis.gram(&CircleRule::refined());
        for p in 0..g.nrows() {
            for q in 0..g.ncols() {
                let id = if p == q { 1.0 } else { 0.0 };
                worst = worst.max((g[(p, q)] - id).abs());
            }
        }
    }
    outcome(worst < 1e-6, format!("max |G - I| = {worst:.2e} (< 1e-6)"))
}

fn eigen_relation() -> Outcome {
    let mut worst = 0.0f64;
    for a in A_VALUES {
        let p = Params::from_a(a).unwrap();
        for j in 0..=J_MAX {
            let u = make_basis(j, p).unwrap();
            let lambda = u.degree();
            for k in 0..2000 {
                let t = 2.0 * std::f64::consts::PI * (k as f64 + 0.5) / 2000.0;
                let (c, s) = (t.cos(), t.sin());
                worst = worst.max((u.radial_derivative(c, s) - lambda * u.eval(c, s)).abs());
            }
        }
    }
    outcome(worst < 1e-6, format!("max |∂_ν ū_j - (2s+2j) ū_j| = {worst:.2e} (< 1e-6)"))
}

fn monotonicity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let lambdas: Vec<f64> = (0..9).map(|k| 2f64.powi(k - 8)).collect();
    let mut worst_drop = 0.0f64;
    let bases: Vec<SpectralBasis> = A_VALUES
        .iter()
        .map(|&a| SpectralBasis::new(Params::from_a(a).unwrap(), J_MAX).unwrap())
        .collect();
    for trial in 0..20 {
        let basis = &bases[trial % 3];
        let coeffs: Vec<f64> = (0..=J_MAX).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let e = basis.expansion(rng.gen_range(-1.0..=1.0), &coeffs).unwrap();
        let phis: Vec<f64> = lambdas
            .iter()
            .map(|&l| phi_functional(|z1, z2| e.evaluate(z1, z2), &basis.params, l).unwrap())
            .collect();
        for w in phis.windows(2) {
            worst_drop = worst_drop.max(w[0] - w[1]);
        }
    }
    outcome(
        worst_drop <= 1e-8,
        format!("20 expansions, 9 radii: largest decrease {worst_drop:.2e} (slack 1e-8)"),
    )
}

fn spectral_fd_agreement() -> Outcome {
    let h = 1.0 / 128.0;
    let g = Grid2D::covering_reflected(-1.0, 1.0, 1.0, h).unwrap();
    let geom = SlitGeometry::flat();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut parts = Vec::new();
    let mut pass = true;
    for a in A_VALUES {
        let p = Params::from_a(a).unwrap();
        let basis = SpectralBasis::new(p, J_MAX).unwrap();
        let coeffs: Vec<f64> = (0..=J_MAX)
            .map(|k| rng.gen_range(-1.0..=1.0) / (1.0 + k as f64))
            .collect();
        let c0 = rng.gen_range(-1.0..=1.0);
        let e = basis.expansion(c0, &coeffs).unwrap();
        let slit = c0 * e.iota;
        let sol = dirichlet_solve(&geom, &p, &g, |x, y| e.zipped(x, y), |_| slit, None, &SolverSettings::cg())
            .unwrap();
        let (mut err, mut sup) = (0.0f64, 0.0f64);
        for j in 0..g.ny {
            for i in 0..g.nx {
                let (x, y) = (g.x(i), g.y(j));
                if x.hypot(y) > 0.5 {
                    continue;
                }
                let exact = e.zipped(x, y);
                err = err.max((sol.field.at(i, j) - exact).abs());
                sup = sup.max(exact.abs());
            }
        }
        let rel = err / sup;
        pass &= rel < 0.02;
        parts.push(format!("a={a}: {:.2}%", 100.0 * rel));
    }
    outcome(pass, format!("sup-norm error on D_1/2 at 256²: {} (< 2%)", parts.join(", ")))
}

fn flat_closed_form() -> Outcome {
    let h = 1.0 / 256.0;
    let g = Grid2D::covering_reflected(-1.0, 1.0, 1.0, h).unwrap();
    let p = Params::from_a(0.0).unwrap();
    // Re((x + iy)^{1/2}) = ((r + x)/2)^{1/2} for y >= 0.
    let exact = |x: f64, y: f64| profile_from_distance(x, y, 0.5);
    let sol = dirichlet_solve(&SlitGeometry::flat(), &p, &g, exact, |_| 0.0, None, &SolverSettings::cg()).unwrap();
    let (mut err, mut sup) = (0.0f64, 0.0f64);
    for j in 0..g.ny {
        for i in 0..g.nx {
            let (x, y) = (g.x(i), g.y(j));
            let to_slit = if x <= 0.0 { y } else { x.hypot(y) };
            if to_slit < 0.05 {
                continue;
            }
            let u = exact(x, y);
            err = err.max((sol.field.at(i, j) - u).abs());
            sup = sup.max(u.abs());
        }
    }
    let rel = err / sup;
    outcome(rel < 0.02, format!("sup-norm error {:.3}% (< 2%), {} CG iterations", 100.0 * rel, sol.iterations))
}

fn obstacle_solve(s: f64, n: usize) -> ObstacleSolution {
    let p = Params::from_s(s).unwrap();
    let prob = ObstacleProblem::from_preset(p, ObstaclePreset::standard(PresetKind::Quadratic), 1.0 / n as f64).unwrap();
    prob.solve(&ObstacleSettings::default()).unwrap()
}

fn complementarity(solves: &[(f64, ObstacleSolution, ObstacleSolution)]) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (s, coarse, fine) in solves {
        let admissible = [coarse, fine]
            .iter()
            .all(|sol| (0..sol.grid().nx).all(|i| sol.field.at(i, 0) >= sol.obstacle[i]));
        let mc = complementarity_audit(coarse).unwrap();
        let mf = complementarity_audit(fine).unwrap();
        let ratio = mc.free_flux_max / mf.free_flux_max;
        let ok = admissible
            && mf.stencil_residual < 1e-8
            && mc.stencil_residual < 1e-8
            && mf.contact_flux_min >= -1e-6
            && mc.contact_flux_min >= -1e-6
            && ratio >= 2.0;
        pass &= ok;
        parts.push(format!(
            "s={s}: admissible {admissible}, residual {:.1e}, min contact flux {:.1e}, off-contact flux ratio {ratio:.1}",
            mf.stencil_residual.max(mc.stencil_residual),
            mf.contact_flux_min.min(mc.contact_flux_min)
        ));
    }
    outcome(pass, parts.join("; "))
}

fn regular_point_homogeneity(solves: &[(f64, ObstacleSolution, ObstacleSolution)]) -> Outcome {
    let scales = [1.0 / 8.0, 1.0 / 16.0, 1.0 / 32.0];
    let mut pass = true;
    let mut parts = Vec::new();
    for (s, _, fine) in solves {
        let blowups = free_boundary_homogeneity(fine, &scales).unwrap();
        let slopes: Vec<String> = blowups.iter().map(|b| format!("{:.3}", b.slope)).collect();
        pass &= blowups.iter().all(|b| (b.slope - (1.0 + s)).abs() <= 0.1);
        parts.push(format!("s={s}: [{}] vs {:.2}", slopes.join(", "), 1.0 + s));
    }
    outcome(pass, format!("slopes at free-boundary points: {}", parts.join("; ")))
}

fn estimate_suite() -> Outcome {
    let geom = SlitGeometry::power(0.2, 0.5).unwrap();
    let p = Params::from_s(0.5).unwrap();
    let sweep = amplitude_sweep(&geom, &p, &[1.0, 0.5, 0.25], &EstimateSettings::default()).unwrap();
    let report = &sweep.reports[0];
    let fits: Vec<String> = report
        .estimates
        .iter()
        .map(|e| {
            format!(
                "{} {:.2}/{:.1}",
                e.estimate.name(),
                e.fitted_exponent.unwrap_or(f64::NAN),
                e.stated_exponent
            )
        })
        .collect();
    let slopes: Vec<String> = sweep.slopes.iter().map(|s| format!("{s:.2}")).collect();
    outcome(
        report.pass && sweep.pass,
        format!(
            "fitted/stated [{}] within 0.05: {} (one-sided: {}); amplitude slopes [{}] within {SWEEP_SLOPE_TOLERANCE} of 1: {} (≥ {}: {})",
            fits.join(", "),
            report.pass,
            report.bound_consistent,
            slopes.join(", "),
            sweep.pass,
            1.0 - SWEEP_SLOPE_TOLERANCE,
            sweep.at_least_linear
        ),
    )
}

fn approx_round_trip() -> Outcome {
    let mut worst = 0.0f64;
    let mut count = 0;
    for seed in 0..100u64 {
        let k = (seed % 5) as u32;
        let dim = 1 + (seed / 5 % 2) as usize;
        let c = if seed % 2 == 0 { 0.0 } else { 0.1 };
        let p = Params::from_s(0.1 + 0.8 * (seed as f64 / 100.0)).unwrap();
        let sys = ApproxSystem::random(k, dim, p, c, seed).unwrap();
        let sol = solve_approx_system(&sys).unwrap();
        worst = worst.max(sys.recompute_rhs(&sol).unwrap().max_abs_diff(&sys.rhs));
        count += 1;
    }
    let p = Params::from_s(0.35).unwrap();
    let mut seed = PolyXR::zeros(1, 2).unwrap();
    seed.set(Monomial::new([0, 0], 0), 0.5).unwrap();
    seed.set(Monomial::new([0, 1], 0), -0.3).unwrap();
    seed.set(Monomial::new([0, 2], 0), 1.0).unwrap();
    let comp = a_harmonic_companion(2, p, &seed).unwrap();
    let e1 = a_harmonic_residual(&comp, &p, 1.0 / 32.0).unwrap();
    let e2 = a_harmonic_residual(&comp, &p, 1.0 / 64.0).unwrap();
    let e3 = a_harmonic_residual(&comp, &p, 1.0 / 128.0).unwrap();
    let order = (e1 / e2).log2().min((e2 / e3).log2());
    outcome(
        worst < 1e-12 && order >= 1.8,
        format!("{count} instances, max defect {worst:.1e} (< 1e-12); companion residual order {order:.2} (h²)"),
    )
}

fn barrier_sign() -> Outcome {
    let r = barrier_check(&Params::from_s(0.5).unwrap(), 0.25).unwrap();
    outcome(
        r.pass,
        format!(
            "fitted c on grid {:.4} over {} nodes, closed form {:.4} (continuum {:.4}), violations {}",
            r.grid_min_c, r.grid_nodes, r.closed_form_min_c, r.flat_lower_bound, r.grid_violations
        ),
    )
}

fn selected(index: usize) -> bool {
    match std::env::var("ACCEPTANCE_ONLY") {
        Ok(list) => list.split(',').any(|t| t.trim().parse() == Ok(index)),
        Err(_) => true,
    }
}

/// Runs one criterion and prints its line; returns `None` when not selected.
fn report(index: usize, name: &str, limit: f64, run: impl FnOnce() -> Outcome) -> Option<bool> {
    if !selected(index) {
        return None;
    }
    let t = Instant::now();
    let o = run();
    let secs = t.elapsed().as_secs_f64();
    let in_time = secs < limit;
    let status = if o.pass && in_time { "PASS" } else { "FAIL" };
    println!("{status} {index:>2} {name}: {} [{secs:.1}s, limit {limit:.0}s]", o.detail);
    Some(o.pass && in_time)
}

fn main() {
    println!("acceptance suite");
    let mut results = Vec::new();
    results.push(report(1, "basis a-harmonicity", 30.0, basis_harmonicity));
    results.push(report(2, "orthonormality", 5.0, orthonormality));
    results.push(report(3, "eigen-relation", 1.0, eigen_relation));
    results.push(report(4, "monotonicity", 10.0, monotonicity));
    results.push(report(5, "spectral-FD agreement", 60.0, spectral_fd_agreement));
    results.push(report(6, "flat-profile closed form", 60.0, flat_closed_form));
    if selected(7) || selected(8) {
        let t = Instant::now();
        let solves: Vec<(f64, ObstacleSolution, ObstacleSolution)> = S_VALUES
            .iter()
            .map(|&s| (s, obstacle_solve(s, 64), obstacle_solve(s, 128)))
            .collect();
        let solve_secs = t.elapsed().as_secs_f64();
        println!("     obstacle solves shared by 7 and 8: {solve_secs:.1}s");
        results.push(report(7, "obstacle complementarity", 120.0 - solve_secs, || complementarity(&solves)));
        results.push(report(8, "regular-point homogeneity", 30.0, || regular_point_homogeneity(&solves)));
    }
    results.push(report(9, "estimate suite", 60.0, estimate_suite));
    results.push(report(10, "approximating-system round trip", 10.0, approx_round_trip));
    results.push(report(11, "barrier sign", 10.0, barrier_sign));
    let ran: Vec<bool> = results.into_iter().flatten().collect();
    let passed = ran.iter().filter(|&&p| p).count();
    println!("{passed}/{} criteria passed", ran.len());
}
