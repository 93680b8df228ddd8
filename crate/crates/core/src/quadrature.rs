//! Gauss–Legendre rules and a graded composite rule on the unit circle for
//! integrands carrying the weight `|sin 2θ|^a`.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
#[derive(Clone, Debug)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes from Newton iteration on `P_n`, seeded with the Tricomi
    /// approximation.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss–Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for k in 0..n.div_ceil(2) {
            let mut x = (PI * (k as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d.is_finite() {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[k] = -x;
            nodes[n - 1 - k] = x;
            weights[k] = w;
            weights[n - 1 - k] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, a: f64, b: f64, f: F) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Composite rule in the angle on `[0, 2π)`.
#[derive(Clone, Debug)]
pub struct CircleRule {
    pub theta: Vec<f64>,
    /// `(cos θ, sin θ)` computed from the offset to the nearest axis, so the
    /// small coordinate keeps full relative precision near the axes.
    pub points: Vec<(f64, f64)>,
    pub weights: Vec<f64>,
}

impl CircleRule {
    /// Each of the eight arcs `[kπ/4, (k+1)π/4]` is split into panels graded
    /// geometrically (ratio `ratio`, `levels` panels) toward its end on a
    /// coordinate axis, where `|sin 2θ|^a` is singular or degenerate.
    pub fn graded(levels: usize, ratio: f64, points: usize) -> Self {
        assert!(levels >= 1 && ratio > 0.0 && ratio < 1.0);
        let gl = GaussLegendre::new(points);
        // Panel breakpoints on [0, π/4] measured from the axis end.
        let mut breaks = vec![0.0];
        for level in (0..levels).rev() {
            breaks.push(FRAC_PI_4 * ratio.powi(level as i32));
        }
        let mut theta = Vec::new();
        let mut points = Vec::new();
        let mut weights = Vec::new();
        for arc in 0..8usize {
            // Even arcs start on axis arc/2, odd arcs end on axis arc/2 + 1.
            let (axis, sign) = if arc % 2 == 0 {
                (arc / 2, 1.0)
            } else {
                (arc / 2 + 1, -1.0)
            };
            for win in breaks.windows(2) {
                for (t, w) in gl.mapped(win[0], win[1]) {
                    let delta = sign * t;
                    let (sd, cd) = delta.sin_cos();
                    let point = match axis % 4 {
                        0 => (cd, sd),
                        1 => (-sd, cd),
                        2 => (-cd, -sd),
                        _ => (sd, -cd),
                    };
                    theta.push(axis as f64 * FRAC_PI_2 + delta);
                    points.push(point);
                    weights.push(w);
                }
            }
        }
        Self {
            theta,
            points,
            weights,
        }
    }

    /// Production rule.
    pub fn standard() -> Self {
        Self::graded(32, 0.1, 20)
    }

    /// Independent finer rule used to audit the standard one.
    pub fn refined() -> Self {
        Self::graded(48, 0.07, 28)
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    /// Points `(cos θ, sin θ)` with their weights.
    pub fn points(&self) -> impl Iterator<Item = ((f64, f64), f64)> + '_ {
        self.points.iter().copied().zip(self.weights.iter().copied())
    }

    pub fn integrate<F: Fn(f64, f64) -> f64>(&self, f: F) -> f64 {
        self.points().map(|((c, s), w)| w * f(c, s)).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_polynomial_exactness() {
        for n in [1, 2, 5, 16, 33] {
            let gl = GaussLegendre::new(n);
            assert!((gl.weights.iter().sum::<f64>() - 2.0).abs() < 1e-14);
            for k in 0..(2 * n) {
                let exact = if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
                let got = gl.integrate(-1.0, 1.0, |x| x.powi(k as i32));
                assert!((got - exact).abs() < 1e-13, "n={n} k={k}: {got} vs {exact}");
            }
        }
    }

    #[test]
    fn circle_rule_integrates_the_weight() {
        let rule = CircleRule::standard();
        let total = rule.integrate(|_, _| 1.0);
        assert!((total - 2.0 * PI).abs() < 1e-13);
        let abs_sin = rule.integrate(|c, s| (2.0 * c * s).abs());
        assert!((abs_sin - 4.0).abs() < 1e-13);
        // ∫_0^{2π} |sin 2θ|^{-1/2} dθ = 4 ∫_0^{π/2} sin(u)^{-1/2} du
        //   = 4 · Γ(1/4)² / (2 √(2π)).
        let gamma_quarter = 3.625_609_908_221_908_3_f64;
        let expected = 4.0 * gamma_quarter * gamma_quarter / (2.0 * (2.0 * PI).sqrt());
        let got = rule.integrate(|c, s| (2.0 * c * s).abs().powf(-0.5));
        assert!((got - expected).abs() < 1e-9 * expected, "{got} vs {expected}");
    }

    #[test]
    fn standard_and_refined_rules_agree() {
        let a = -0.5;
        let f = |c: f64, s: f64| (2.0 * c * s).abs().powf(a) * (1.0 + c * c * s);
        let x = CircleRule::standard().integrate(f);
        let y = CircleRule::refined().integrate(f);
        assert!((x - y).abs() < 1e-10 * y.abs());
    }
}
