//! Slit geometry: the edge curve, signed and slit distances, normal and
//! curvature of the parallel curves, and the canonical profile
//! `U_a = ((r + d) / 2)^s`.
//!
//! Sign convention, used everywhere in the crate: `d > 0` where `x_n > γ(x')`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of dense samples of the edge curve used for the foot-point scan.
pub const CURVE_SAMPLES: usize = 1 << 16;

/// Step used when curvature falls back to finite differences of `d`.
pub const CURVATURE_FD_STEP: f64 = 1e-4;

/// The exponent pair `(a, s)` with `a = 1 - 2s`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Params {
    a: f64,
    s: f64,
}

impl Params {
    pub fn from_s(s: f64) -> Result<Self> {
        if !(s > 0.0 && s < 1.0) {
            return Err(Error::InvalidParams(format!("s = {s} must lie in (0, 1)")));
        }
        Ok(Self { a: 1.0 - 2.0 * s, s })
    }

    pub fn from_a(a: f64) -> Result<Self> {
        if !(a > -1.0 && a < 1.0) {
            return Err(Error::InvalidParams(format!("a = {a} must lie in (-1, 1)")));
        }
        Ok(Self { a, s: 0.5 * (1.0 - a) })
    }

    #[inline]
    pub fn a(&self) -> f64 {
        self.a
    }

    #[inline]
    pub fn s(&self) -> f64 {
        self.s
    }
}

/// A point `X = (x', x_n, y)`. In flat (n = 1) mode `x'` is ignored and
/// `x = x_n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub xp: f64,
    pub xn: f64,
    pub y: f64,
}

impl Point {
    pub fn flat(x: f64, y: f64) -> Self {
        Self { xp: 0.0, xn: x, y }
    }

    pub fn curve(xp: f64, xn: f64, y: f64) -> Self {
        Self { xp, xn, y }
    }

    /// The pair `z = (x_n, y)`.
    pub fn z(&self) -> (f64, f64) {
        (self.xn, self.y)
    }

    pub fn spatial(&self) -> (f64, f64) {
        (self.xp, self.xn)
    }

    pub fn is_finite(&self) -> bool {
        self.xp.is_finite() && self.xn.is_finite() && self.y.is_finite()
    }
}

/// Graph curve `x_n = γ(x')` with analytic derivatives.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum EdgeCurve {
    /// `γ(t) = amplitude * |t|^exponent`, exponent > 1.
    Power { amplitude: f64, exponent: f64 },
}

impl EdgeCurve {
    pub fn value(&self, t: f64) -> f64 {
        match *self {
            EdgeCurve::Power { amplitude, exponent } => amplitude * t.abs().powf(exponent),
        }
    }

    pub fn d1(&self, t: f64) -> f64 {
        match *self {
            EdgeCurve::Power { amplitude, exponent } => {
                if t == 0.0 {
                    0.0
                } else {
                    amplitude * exponent * t.abs().powf(exponent - 1.0) * t.signum()
                }
            }
        }
    }

    /// Second derivative; infinite at `t = 0` when the exponent is below 2.
    pub fn d2(&self, t: f64) -> f64 {
        match *self {
            EdgeCurve::Power { amplitude, exponent } => {
                if exponent == 2.0 {
                    2.0 * amplitude
                } else if t == 0.0 {
                    if exponent > 2.0 {
                        0.0
                    } else {
                        f64::INFINITY * amplitude.signum()
                    }
                } else {
                    amplitude * exponent * (exponent - 1.0) * t.abs().powf(exponent - 2.0)
                }
            }
        }
    }

    /// Signed curvature of the graph with respect to the upward normal.
    pub fn curvature(&self, t: f64) -> f64 {
        let g1 = self.d1(t);
        self.d2(t) / (1.0 + g1 * g1).powf(1.5)
    }

    /// Upward unit normal `(-γ', 1) / sqrt(1 + γ'^2)`.
    pub fn normal(&self, t: f64) -> [f64; 2] {
        let g1 = self.d1(t);
        let n = (1.0 + g1 * g1).sqrt();
        [-g1 / n, 1.0 / n]
    }

    pub fn scaled(&self, factor: f64) -> Self {
        match *self {
            EdgeCurve::Power { amplitude, exponent } => EdgeCurve::Power {
                amplitude: amplitude * factor,
                exponent,
            },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SlitMode {
    /// The slit `{x <= 0, y = 0}` in the `(x, y)` plane.
    Flat,
    /// The slit `{x_n <= γ(x'), y = 0}` with `|x'| <= half_width`.
    Curve { curve: EdgeCurve, half_width: f64 },
}

/// Nearest point on the edge for a spatial point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Foot {
    /// Parameter of the foot point, `(tau, γ(tau))`.
    pub tau: f64,
    /// Signed distance `d`.
    pub distance: f64,
    /// Distance gap to the second-best local minimum of the foot search;
    /// `INFINITY` when there is no competing candidate.
    pub gap: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SlitGeometry {
    mode: SlitMode,
    holder_exponent: f64,
}

impl SlitGeometry {
    pub fn flat() -> Self {
        Self {
            mode: SlitMode::Flat,
            holder_exponent: 1.0,
        }
    }

    /// Graph edge in the normalized frame: `γ(0) = 0` and `γ'(0) = 0` are
    /// checked.
    pub fn curve(curve: EdgeCurve, holder_exponent: f64, half_width: f64) -> Result<Self> {
        if curve.value(0.0).abs() > 1e-14 || curve.d1(0.0).abs() > 1e-14 {
            return Err(Error::InvalidParams(
                "edge curve must satisfy γ(0) = 0 and γ'(0) = 0".into(),
            ));
        }
        let EdgeCurve::Power { amplitude, exponent } = curve;
        if !(exponent > 1.0) || !amplitude.is_finite() {
            return Err(Error::InvalidParams(format!(
                "power curve needs exponent > 1 and finite amplitude, got {exponent}, {amplitude}"
            )));
        }
        if !(holder_exponent > 0.0 && holder_exponent <= 1.0) {
            return Err(Error::InvalidParams(format!(
                "Hölder exponent {holder_exponent} must lie in (0, 1]"
            )));
        }
        if !(half_width > 0.0) {
            return Err(Error::InvalidParams("half width must be positive".into()));
        }
        Ok(Self {
            mode: SlitMode::Curve { curve, half_width },
            holder_exponent,
        })
    }

    /// `γ(t) = amplitude |t|^(1 + alpha)` on `|t| <= 2`.
    pub fn power(amplitude: f64, alpha: f64) -> Result<Self> {
        Self::curve(
            EdgeCurve::Power {
                amplitude,
                exponent: 1.0 + alpha,
            },
            alpha,
            2.0,
        )
    }

    pub fn mode(&self) -> SlitMode {
        self.mode
    }

    pub fn holder_exponent(&self) -> f64 {
        self.holder_exponent
    }

    pub fn is_flat(&self) -> bool {
        matches!(self.mode, SlitMode::Flat)
    }

    /// Same geometry with the curve amplitude multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        match self.mode {
            SlitMode::Flat => *self,
            SlitMode::Curve { curve, half_width } => Self {
                mode: SlitMode::Curve {
                    curve: curve.scaled(factor),
                    half_width,
                },
                holder_exponent: self.holder_exponent,
            },
        }
    }

    /// Nearest edge point for the spatial point `(xp, xn)` (curve mode) or
    /// `x = xn` (flat mode).
    pub fn foot(&self, xp: f64, xn: f64) -> Result<Foot> {
        match self.mode {
            SlitMode::Flat => Ok(Foot {
                tau: 0.0,
                distance: xn,
                gap: f64::INFINITY,
            }),
            SlitMode::Curve { curve, half_width } => curve_foot(&curve, half_width, xp, xn),
        }
    }

    /// Foot point searched only in `[center - window, center + window]`,
    /// for points known to lie near one whose foot is `center`. Falls back to
    /// the global search when the minimum sits on the window edge. The
    /// returned `gap` is always `INFINITY` (no cut-locus detection).
    pub fn foot_local(&self, xp: f64, xn: f64, center: f64, window: f64) -> Result<Foot> {
        match self.mode {
            SlitMode::Flat => self.foot(xp, xn),
            SlitMode::Curve { curve, half_width } => {
                if !(xp.abs() <= half_width) || !xn.is_finite() {
                    return Err(Error::OutOfDomain { x: xp, xn, half_width });
                }
                let lo = (center - window).max(-half_width);
                let hi = (center + window).min(half_width);
                let dist2 = |tau: f64| {
                    let dx = tau - xp;
                    let dy = curve.value(tau) - xn;
                    dx * dx + dy * dy
                };
                const N: usize = 16;
                let step = (hi - lo) / N as f64;
                let (mut best_k, mut best) = (0, f64::INFINITY);
                for k in 0..=N {
                    let v = dist2(lo + k as f64 * step);
                    if v < best {
                        best = v;
                        best_k = k;
                    }
                }
                if (best_k == 0 && lo > -half_width) || (best_k == N && hi < half_width) {
                    return self.foot(xp, xn);
                }
                let a = lo + best_k.saturating_sub(1) as f64 * step;
                let b = lo + (best_k + 1).min(N) as f64 * step;
                let tau = refine_foot(&curve, xp, xn, a, b);
                let tau = if dist2(tau) <= best { tau } else { lo + best_k as f64 * step };
                let sign = if xn > curve.value(xp) {
                    1.0
                } else if xn < curve.value(xp) {
                    -1.0
                } else {
                    0.0
                };
                Ok(Foot {
                    tau,
                    distance: sign * dist2(tau).sqrt(),
                    gap: f64::INFINITY,
                })
            }
        }
    }

    /// Unit normal `∇_x d` at a foot parameter: the upward normal of the
    /// graph, or `(0, 1)` in flat mode.
    pub fn normal_at(&self, tau: f64) -> [f64; 2] {
        match self.mode {
            SlitMode::Flat => [0.0, 1.0],
            SlitMode::Curve { curve, .. } => curve.normal(tau),
        }
    }

    /// Edge point `(τ, γ(τ))`, or `(τ, 0)` in flat mode.
    pub fn edge_point(&self, tau: f64) -> [f64; 2] {
        match self.mode {
            SlitMode::Flat => [tau, 0.0],
            SlitMode::Curve { curve, .. } => [tau, curve.value(tau)],
        }
    }

    pub fn signed_distance(&self, xp: f64, xn: f64) -> Result<f64> {
        Ok(self.foot(xp, xn)?.distance)
    }

    /// `r = (y^2 + d^2)^{1/2}`.
    pub fn slit_distance(&self, p: &Point) -> Result<f64> {
        let d = self.signed_distance(p.xp, p.xn)?;
        Ok(d.hypot(p.y))
    }

    /// Unit normal `ν = ∇_x d` (as `(ν', ν_n)`) and `κ = -Δ_x d`.
    pub fn normal_curvature(&self, xp: f64, xn: f64) -> Result<([f64; 2], f64)> {
        match self.mode {
            SlitMode::Flat => Ok(([0.0, 1.0], 0.0)),
            SlitMode::Curve { curve, .. } => {
                let foot = self.foot(xp, xn)?;
                if foot.gap < 1e-9 * (1.0 + foot.distance.abs()) {
                    return Err(Error::CutLocus { gap: foot.gap });
                }
                let nu = curve.normal(foot.tau);
                let k = curve.curvature(foot.tau);
                let kappa = if k.is_finite() {
                    k / (1.0 - foot.distance * k)
                } else {
                    self.curvature_fd(xp, xn)?
                };
                Ok((nu, kappa))
            }
        }
    }

    fn curvature_fd(&self, xp: f64, xn: f64) -> Result<f64> {
        let h = CURVATURE_FD_STEP;
        let d0 = self.signed_distance(xp, xn)?;
        let lap = self.signed_distance(xp + h, xn)?
            + self.signed_distance(xp - h, xn)?
            + self.signed_distance(xp, xn + h)?
            + self.signed_distance(xp, xn - h)?
            - 4.0 * d0;
        Ok(-lap / (h * h))
    }

    /// `U_a = ((r + d) / 2)^s`, evaluated through the equivalent form
    /// `|y|^{2s} / (2^s (r - d)^s)` when `d < 0` to avoid cancellation.
    pub fn profile_u_a(&self, params: &Params, p: &Point) -> Result<f64> {
        let d = self.signed_distance(p.xp, p.xn)?;
        Ok(profile_from_distance(d, p.y, params.s()))
    }
}

/// `U_a` as a function of `(d, y)`.
pub fn profile_from_distance(d: f64, y: f64, s: f64) -> f64 {
    let r = d.hypot(y);
    if r == 0.0 {
        return 0.0;
    }
    if d >= 0.0 {
        (0.5 * (r + d)).powf(s)
    } else {
        profile_alternative(d, y, s)
    }
}

/// `((r + d) / 2)^s` evaluated literally.
pub fn profile_primary(d: f64, y: f64, s: f64) -> f64 {
    let r = d.hypot(y);
    (0.5 * (r + d)).max(0.0).powf(s)
}

/// `|y|^{2s} / (2^s (r - d)^s)`.
pub fn profile_alternative(d: f64, y: f64, s: f64) -> f64 {
    let r = d.hypot(y);
    if r == 0.0 {
        return 0.0;
    }
    y.abs().powf(2.0 * s) / (2.0f64.powf(s) * (r - d).powf(s))
}

fn curve_foot(curve: &EdgeCurve, half_width: f64, t: f64, xn: f64) -> Result<Foot> {
    if !(t.abs() <= half_width) || !xn.is_finite() {
        return Err(Error::OutOfDomain { x: t, xn, half_width });
    }
    let n = CURVE_SAMPLES;
    let dt = 2.0 * half_width / (n - 1) as f64;
    let sample = |k: usize| -half_width + k as f64 * dt;
    let dist2 = |tau: f64| {
        let dx = tau - t;
        let dy = curve.value(tau) - xn;
        dx * dx + dy * dy
    };

    // The vertical distance bounds the true distance, so the foot lies in
    // |tau - t| <= |x_n - γ(t)|.
    let vertical = (xn - curve.value(t)).abs();
    let lo_t = (t - vertical).max(-half_width);
    let hi_t = (t + vertical).min(half_width);
    let lo = (((lo_t + half_width) / dt).floor() as isize - 1).max(0) as usize;
    let hi = ((((hi_t + half_width) / dt).ceil() as isize + 1) as usize).min(n - 1);

    let mut best_k = lo;
    let mut best = f64::INFINITY;
    let values: Vec<f64> = (lo..=hi).map(|k| dist2(sample(k))).collect();
    for (offset, &v) in values.iter().enumerate() {
        if v < best {
            best = v;
            best_k = lo + offset;
        }
    }
    // Competing local minima (for cut-locus detection).
    let mut second = f64::INFINITY;
    for (offset, &v) in values.iter().enumerate() {
        let k = lo + offset;
        if k.abs_diff(best_k) <= 4 {
            continue;
        }
        let left = if offset > 0 { values[offset - 1] } else { f64::INFINITY };
        let right = values.get(offset + 1).copied().unwrap_or(f64::INFINITY);
        if v <= left && v <= right && v < second {
            second = v;
        }
    }

    let a = sample(best_k.saturating_sub(1));
    let b = sample((best_k + 1).min(n - 1));
    let tau = refine_foot(curve, t, xn, a, b);
    let d2 = dist2(tau).min(best);
    let tau = if dist2(tau) <= best { tau } else { sample(best_k) };

    if (best_k == 0 && t - vertical < -half_width) || (best_k == n - 1 && t + vertical > half_width)
    {
        return Err(Error::OutOfDomain { x: t, xn, half_width });
    }

    let dist = d2.sqrt();
    let sign = if xn > curve.value(t) {
        1.0
    } else if xn < curve.value(t) {
        -1.0
    } else {
        0.0
    };
    let gap = if second.is_finite() {
        (second.sqrt() - dist).max(0.0)
    } else {
        f64::INFINITY
    };
    Ok(Foot {
        tau,
        distance: sign * dist,
        gap,
    })
}

/// Safeguarded Newton iteration on the foot-point equation
/// `(tau - t) + (γ(tau) - x_n) γ'(tau) = 0` inside `[a, b]`.
fn refine_foot(curve: &EdgeCurve, t: f64, xn: f64, mut a: f64, mut b: f64) -> f64 {
    let f = |tau: f64| (tau - t) + (curve.value(tau) - xn) * curve.d1(tau);
    let mut fa = f(a);
    let fb = f(b);
    if !(fa <= 0.0 && fb >= 0.0) {
        return golden_min(curve, t, xn, a, b);
    }
    let mut tau = 0.5 * (a + b);
    let mut step_old = b - a;
    for _ in 0..200 {
        let ft = f(tau);
        if ft == 0.0 {
            return tau;
        }
        if (ft < 0.0) == (fa < 0.0) {
            a = tau;
            fa = ft;
        } else {
            b = tau;
        }
        if b - a <= 1e-15 * (1.0 + tau.abs()) {
            break;
        }
        let g1 = curve.d1(tau);
        let dft = 1.0 + g1 * g1 + (curve.value(tau) - xn) * curve.d2(tau);
        let newton = tau - ft / dft;
        // Bisect whenever Newton leaves the bracket or fails to halve the
        // previous step.
        let step = (newton - tau).abs();
        tau = if dft.is_finite() && dft > 0.0 && newton > a && newton < b && 2.0 * step < step_old
        {
            step_old = step;
            newton
        } else {
            step_old = b - a;
            0.5 * (a + b)
        };
        if step_old == 0.0 {
            break;
        }
    }
    tau
}

fn golden_min(curve: &EdgeCurve, t: f64, xn: f64, mut a: f64, mut b: f64) -> f64 {
    let dist2 = |tau: f64| {
        let dx = tau - t;
        let dy = curve.value(tau) - xn;
        dx * dx + dy * dy
    };
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    for _ in 0..100 {
        if dist2(c) < dist2(d) {
            b = d;
        } else {
            a = c;
        }
        c = b - ratio * (b - a);
        d = a + ratio * (b - a);
        if (b - a).abs() < 1e-15 {
            break;
        }
    }
    0.5 * (a + b)
}

/// Geometry document: `{"mode": "flat"|"curve", "gamma": {...}, "alpha": α}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeometrySpec {
    pub mode: GeometryMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<EdgeCurve>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub half_width: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeometryMode {
    Flat,
    Curve,
}

impl GeometrySpec {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn build(&self) -> Result<SlitGeometry> {
        match self.mode {
            GeometryMode::Flat => Ok(SlitGeometry::flat()),
            GeometryMode::Curve => {
                let curve = self
                    .gamma
                    .ok_or_else(|| Error::InvalidParams("curve mode needs \"gamma\"".into()))?;
                let alpha = match (self.alpha, curve) {
                    (Some(a), _) => a,
                    (None, EdgeCurve::Power { exponent, .. }) => (exponent - 1.0).min(1.0),
                };
                SlitGeometry::curve(curve, alpha, self.half_width.unwrap_or(2.0))
            }
        }
    }
}
