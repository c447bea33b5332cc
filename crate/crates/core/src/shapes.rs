//! Wulff profiles `W(x)` and their two-point translates.
//!
//! Every profile is even, vanishes at the origin and increases strictly on
//! `[0, a)` where `a` is the support radius (possibly infinite). The cone is
//! the one non-strictly-convex member of the catalog.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{invalid, Error, Result};

pub const DEFAULT_PROFILE_NODES: usize = 4096;
pub const DEFAULT_PROFILE_TOLERANCE: f64 = 1e-8;
/// Absolute tolerance on the apex position for the bisection path.
pub const ROOT_TOLERANCE: f64 = 1e-10;

/// `1 - K2·x/J2` at the outermost tabulated node.
const EDGE_GAP: f64 = 1e-6;
/// `J2·tanθ` at the first non-zero tabulated node.
const FIRST_SLOPE: f64 = 1e-3;
const MAX_BISECTIONS: usize = 400;
const MAX_BRACKET_DOUBLINGS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeKind {
    Cone,
    Parabola,
    Semicircle,
    SosWulff,
}

impl fmt::Display for ShapeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            ShapeKind::Cone => "cone",
            ShapeKind::Parabola => "parabola",
            ShapeKind::Semicircle => "semicircle",
            ShapeKind::SosWulff => "sos_wulff",
        };
        f.write_str(name)
    }
}

/// Terms of the solid-on-solid projected surface tension at slope `t`:
/// `(f, sigma, dsigma/dt)`.
fn sos_tension(j2: f64, t: f64) -> (f64, f64, f64) {
    let u = j2 * t;
    // sqrt(1 + u^2) - 1 without cancellation
    let f = u * u / ((1.0 + u * u).sqrt() + 1.0);
    let sigma = f - ((f + 2.0) / j2).ln();
    let dsigma = j2 * j2 * t / (f + 2.0);
    (f, sigma, dsigma)
}

/// Point `(x, W)` of the normalised SOS Wulff half-profile at slope `t >= 0`.
fn sos_wulff_point(j2: f64, k2: f64, t: f64) -> (f64, f64) {
    let (_, sigma, dsigma) = sos_tension(j2, t);
    let x = (dsigma / k2).abs();
    let z = -(sigma - t * dsigma) / k2;
    (x, z - (2.0 / j2).ln() / k2)
}

fn hermite(x0: f64, x1: f64, w0: f64, w1: f64, m0: f64, m1: f64, x: f64) -> f64 {
    let h = x1 - x0;
    let (mut m0, mut m1) = (m0, m1);
    let delta = (w1 - w0) / h;
    if delta > 0.0 {
        // Fritsch-Carlson
        let alpha = m0 / delta;
        let beta = m1 / delta;
        let r2 = alpha * alpha + beta * beta;
        if r2 > 9.0 {
            let tau = 3.0 / r2.sqrt();
            m0 = tau * alpha * delta;
            m1 = tau * beta * delta;
        }
    }
    let s = (x - x0) / h;
    let s2 = s * s;
    let s3 = s2 * s;
    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = s3 - 2.0 * s2 + s;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = s3 - s2;
    h00 * w0 + h10 * h * m0 + h01 * w1 + h11 * h * m1
}

/// Tabulated half-profile of the solid-on-solid Wulff shape.
///
/// Nodes come from the parametric equations in the slope `t = tanθ`:
/// `x(t) = |σ̃'(t)| / K2` and `z(t) = -(σ̃(t) - t σ̃'(t)) / K2`, with
/// `σ̃(t) = f(t) - ln((f(t) + 2) / J2)` and `f(t) = sqrt(1 + (J2 t)^2) - 1`.
/// The height is shifted by `-(1/K2) ln(2/J2)` so that `W(0) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct WulffProfile {
    j2: f64,
    k2: f64,
    x: Vec<f64>,
    w: Vec<f64>,
    slope: Vec<f64>,
    max_error: f64,
}

impl WulffProfile {
    pub fn build(j2: f64, k2: f64, node_count: usize) -> Result<Self> {
        if !(j2 > 0.0 && j2.is_finite() && k2 > 0.0 && k2.is_finite()) {
            return Err(invalid(format!("j2 and k2 must be positive, got j2={j2}, k2={k2}")));
        }
        if node_count < 2 {
            return Err(invalid("a Wulff profile needs at least 2 nodes"));
        }
        let r = 1.0 - EDGE_GAP;
        let t_max = 2.0 * r / (1.0 - r * r) / j2;
        let t_min = (FIRST_SLOPE / j2).min(t_max);

        let mut t = Vec::with_capacity(node_count);
        t.push(0.0);
        if node_count == 2 {
            t.push(t_max);
        } else {
            let span = (t_max / t_min).ln();
            let steps = (node_count - 2) as f64;
            for i in 0..node_count - 1 {
                t.push(t_min * (span * i as f64 / steps).exp());
            }
            t[node_count - 1] = t_max;
        }

        let mut x = Vec::with_capacity(node_count);
        let mut w = Vec::with_capacity(node_count);
        for &ti in &t {
            let (xi, wi) = sos_wulff_point(j2, k2, ti);
            x.push(xi);
            w.push(wi);
        }
        // the shift is exact at t = 0 up to rounding
        w[0] = 0.0;
        for i in 1..node_count {
            if x[i].is_nan() || w[i].is_nan() || x[i] <= x[i - 1] || w[i] <= w[i - 1] {
                return Err(Error::Internal(format!(
                    "Wulff profile not monotone at node {i}: x {} -> {}, W {} -> {}",
                    x[i - 1],
                    x[i],
                    w[i - 1],
                    w[i]
                )));
            }
        }

        let mut profile = WulffProfile {
            j2,
            k2,
            x,
            w,
            slope: t,
            max_error: 0.0,
        };

        // Check the interpolant against the parametric curve between nodes.
        let mut max_error: f64 = 0.0;
        for i in 0..node_count - 1 {
            let (ta, tb) = (profile.slope[i], profile.slope[i + 1]);
            let tm = if ta > 0.0 { (ta * tb).sqrt() } else { 0.5 * tb };
            let (xm, wm) = sos_wulff_point(j2, k2, tm);
            let err = (profile.interpolate(xm) - wm).abs() / wm.abs().max(1.0);
            max_error = max_error.max(err);
        }
        profile.max_error = max_error;
        Ok(profile)
    }

    pub fn j2(&self) -> f64 {
        self.j2
    }

    pub fn k2(&self) -> f64 {
        self.k2
    }

    /// Nominal support radius `J2 / K2`.
    pub fn nominal_support(&self) -> f64 {
        self.j2 / self.k2
    }

    /// Largest tabulated `x`.
    pub fn x_max(&self) -> f64 {
        *self.x.last().expect("profile has nodes")
    }

    pub fn nodes(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.x.iter().copied().zip(self.w.iter().copied())
    }

    /// `dW/dx` at each node (equal to the slope parameter `tanθ`).
    pub fn slopes(&self) -> &[f64] {
        &self.slope
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Worst relative interpolation error measured at the geometric
    /// mid-slope of every cell.
    pub fn max_interpolation_error(&self) -> f64 {
        self.max_error
    }

    /// Interpolated `W(|x|)`; the caller guarantees `|x| <= x_max`.
    fn interpolate(&self, x: f64) -> f64 {
        let ax = x.abs();
        let n = self.x.len();
        let hi = self.x.partition_point(|&xi| xi < ax).clamp(1, n - 1);
        let lo = hi - 1;
        hermite(
            self.x[lo],
            self.x[hi],
            self.w[lo],
            self.w[hi],
            self.slope[lo],
            self.slope[hi],
            ax,
        )
    }
}

/// A symmetric convex profile `W`.
#[derive(Debug, Clone)]
pub enum ShapeModel {
    /// `W(x) = λ|x|`
    Cone { lambda: f64 },
    /// `W(x) = λx²`
    Parabola { lambda: f64 },
    /// `W(x) = 1/λ - sqrt(1/λ² - x²)`, support `|x| < 1/λ`
    Semicircle { lambda: f64 },
    /// Tabulated solid-on-solid Wulff shape, support `|x| < J2/K2`
    SosWulff(Arc<WulffProfile>),
}

fn check_lambda(lambda: f64) -> Result<f64> {
    if lambda > 0.0 && lambda.is_finite() {
        Ok(lambda)
    } else {
        Err(invalid(format!("lambda must be positive and finite, got {lambda}")))
    }
}

impl ShapeModel {
    pub fn cone(lambda: f64) -> Result<Self> {
        Ok(ShapeModel::Cone {
            lambda: check_lambda(lambda)?,
        })
    }

    pub fn parabola(lambda: f64) -> Result<Self> {
        Ok(ShapeModel::Parabola {
            lambda: check_lambda(lambda)?,
        })
    }

    pub fn semicircle(lambda: f64) -> Result<Self> {
        Ok(ShapeModel::Semicircle {
            lambda: check_lambda(lambda)?,
        })
    }

    /// SOS Wulff shape with the default table size and tolerance.
    pub fn sos_wulff(j2: f64, k2: f64) -> Result<Self> {
        let profile = WulffProfile::build(j2, k2, DEFAULT_PROFILE_NODES)?;
        Self::from_profile(profile, DEFAULT_PROFILE_TOLERANCE)
    }

    pub fn from_profile(profile: WulffProfile, tolerance: f64) -> Result<Self> {
        if profile.max_interpolation_error() > tolerance {
            return Err(Error::ProfileTooCoarse {
                achieved: profile.max_interpolation_error(),
                tolerance,
            });
        }
        Ok(ShapeModel::SosWulff(Arc::new(profile)))
    }

    pub fn kind(&self) -> ShapeKind {
        match self {
            ShapeModel::Cone { .. } => ShapeKind::Cone,
            ShapeModel::Parabola { .. } => ShapeKind::Parabola,
            ShapeModel::Semicircle { .. } => ShapeKind::Semicircle,
            ShapeModel::SosWulff(_) => ShapeKind::SosWulff,
        }
    }

    /// The `λ` parameter, for the shapes that have one.
    pub fn lambda(&self) -> Option<f64> {
        match *self {
            ShapeModel::Cone { lambda }
            | ShapeModel::Parabola { lambda }
            | ShapeModel::Semicircle { lambda } => Some(lambda),
            ShapeModel::SosWulff(_) => None,
        }
    }

    pub fn profile(&self) -> Option<&WulffProfile> {
        match self {
            ShapeModel::SosWulff(p) => Some(p),
            _ => None,
        }
    }

    /// Open support radius `a`; `W` is defined for `|x| < a`.
    pub fn support_radius(&self) -> f64 {
        match self {
            ShapeModel::Cone { .. } | ShapeModel::Parabola { .. } => f64::INFINITY,
            ShapeModel::Semicircle { lambda } => 1.0 / lambda,
            ShapeModel::SosWulff(p) => p.x_max(),
        }
    }

    pub fn has_full_support(&self) -> bool {
        self.support_radius().is_infinite()
    }

    pub fn is_strictly_convex(&self) -> bool {
        !matches!(self, ShapeModel::Cone { .. })
    }

    /// Does `W` have a closed-form two-point construction?
    pub fn has_closed_form(&self) -> bool {
        matches!(self, ShapeModel::Cone { .. } | ShapeModel::Parabola { .. })
    }

    pub fn in_support(&self, x: f64) -> bool {
        x.abs() < self.support_radius()
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        if !self.in_support(x) || x.is_nan() {
            return Err(Error::Domain {
                x,
                support: self.support_radius(),
            });
        }
        Ok(self.eval_in_support(x))
    }

    /// `W(x)` without the support check.
    pub(crate) fn eval_in_support(&self, x: f64) -> f64 {
        match self {
            ShapeModel::Cone { lambda } => lambda * x.abs(),
            ShapeModel::Parabola { lambda } => lambda * x * x,
            ShapeModel::Semicircle { lambda } => {
                let r = 1.0 / lambda;
                // r - sqrt(r^2 - x^2), rewritten to avoid cancellation near 0
                let x2 = x * x;
                x2 / (r + (r * r - x2).max(0.0).sqrt())
            }
            ShapeModel::SosWulff(p) => p.interpolate(x),
        }
    }

    /// Smallest `x >= 0` with `W(x) >= height`, or `None` if `W` never
    /// reaches that height inside its support.
    pub fn inverse(&self, height: f64) -> Option<f64> {
        if height <= 0.0 {
            return Some(0.0);
        }
        match *self {
            ShapeModel::Cone { lambda } => Some(height / lambda),
            ShapeModel::Parabola { lambda } => Some((height / lambda).sqrt()),
            ShapeModel::Semicircle { lambda } => {
                let r = 1.0 / lambda;
                (height < r).then(|| (r * r - (r - height) * (r - height)).sqrt())
            }
            ShapeModel::SosWulff(ref p) => {
                let a = p.x_max();
                if p.interpolate(a) < height {
                    return None;
                }
                let (mut lo, mut hi) = (0.0, a);
                for _ in 0..MAX_BISECTIONS {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    if p.interpolate(mid) >= height {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                Some(hi)
            }
        }
    }

    /// Translate of `W` through `(j, h_j)` and `(k, h_k)`, using closed forms
    /// where they exist.
    pub fn two_point(&self, j: f64, h_j: f64, k: f64, h_k: f64) -> Result<TwoPointShape> {
        if let Some(tp) = self.degenerate(j, h_j, k, h_k)? {
            return Ok(tp);
        }
        match *self {
            ShapeModel::Cone { lambda } => {
                let apex_x = (h_j - h_k + lambda * (j + k)) / (2.0 * lambda);
                Ok(TwoPointShape {
                    shape: self.clone(),
                    apex_x,
                    apex_h: h_j - lambda * (apex_x - j),
                    anchors: [(j, h_j), (k, h_k)],
                    closed_form: true,
                })
            }
            ShapeModel::Parabola { lambda } => {
                let apex_x = 0.5 * (j + k) - (h_k - h_j) / (2.0 * lambda * (k - j));
                Ok(TwoPointShape {
                    shape: self.clone(),
                    apex_x,
                    apex_h: h_j - lambda * (j - apex_x) * (j - apex_x),
                    anchors: [(j, h_j), (k, h_k)],
                    closed_form: true,
                })
            }
            ShapeModel::Semicircle { lambda } => self.semicircle_two_point(lambda, j, h_j, k, h_k),
            ShapeModel::SosWulff(_) => self.two_point_generic(j, h_j, k, h_k),
        }
    }

    /// Translate of `W` through both anchors by bisection on the apex
    /// position, for any shape. The contact-height difference
    /// `W(k - x*) - W(j - x*)` decreases in `x*`, which brackets the root.
    pub fn two_point_generic(&self, j: f64, h_j: f64, k: f64, h_k: f64) -> Result<TwoPointShape> {
        if let Some(tp) = self.degenerate(j, h_j, k, h_k)? {
            return Ok(tp);
        }
        let dh = h_k - h_j;
        let unreachable = || Error::UnreachablePair { j, h_j, k, h_k };
        let g = |xs: f64| self.eval_in_support(k - xs) - self.eval_in_support(j - xs) - dh;

        let a = self.support_radius();
        let (mut lo, mut hi);
        if a.is_finite() {
            let eps = 1e-12 * a.max(1.0);
            lo = k - a + eps;
            hi = j + a - eps;
            if lo >= hi || g(lo) < 0.0 || g(hi) > 0.0 {
                return Err(unreachable());
            }
        } else {
            lo = j - 1.0;
            hi = k + 1.0;
            let mut step = 1.0;
            let mut doublings = 0;
            while g(lo) < 0.0 {
                lo -= step;
                step *= 2.0;
                doublings += 1;
                if doublings > MAX_BRACKET_DOUBLINGS {
                    return Err(unreachable());
                }
            }
            step = 1.0;
            while g(hi) > 0.0 {
                hi += step;
                step *= 2.0;
                doublings += 1;
                if doublings > MAX_BRACKET_DOUBLINGS {
                    return Err(unreachable());
                }
            }
        }

        let (lo0, hi0) = (lo, hi);
        let mut iterations = 0;
        while hi - lo > ROOT_TOLERANCE {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let gm = g(mid);
            if gm == 0.0 {
                lo = mid;
                hi = mid;
                break;
            }
            if gm > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            iterations += 1;
            if iterations > MAX_BISECTIONS {
                return Err(Error::RootFind {
                    lo: lo0,
                    hi: hi0,
                    g_lo: g(lo0),
                    g_hi: g(hi0),
                    iterations,
                });
            }
        }
        let apex_x = 0.5 * (lo + hi);
        // split the residual between the anchors
        let apex_h = 0.5
            * ((h_j - self.eval_in_support(j - apex_x)) + (h_k - self.eval_in_support(k - apex_x)));
        Ok(TwoPointShape {
            shape: self.clone(),
            apex_x,
            apex_h,
            anchors: [(j, h_j), (k, h_k)],
            closed_form: false,
        })
    }

    fn degenerate(&self, j: f64, h_j: f64, k: f64, h_k: f64) -> Result<Option<TwoPointShape>> {
        if !(j.is_finite() && k.is_finite() && h_j.is_finite() && h_k.is_finite()) {
            return Err(invalid("two-point anchors must be finite"));
        }
        if j > k {
            return Err(invalid(format!("anchors out of order: j = {j} > k = {k}")));
        }
        if j < k {
            return Ok(None);
        }
        if h_j != h_k {
            return Err(invalid(format!(
                "coincident anchors at {j} with different heights {h_j} and {h_k}"
            )));
        }
        Ok(Some(TwoPointShape {
            shape: self.clone(),
            apex_x: j,
            apex_h: h_j,
            anchors: [(j, h_j), (k, h_k)],
            closed_form: true,
        }))
    }

    /// Lower arc of the circle of radius `1/λ` through both anchors.
    fn semicircle_two_point(
        &self,
        lambda: f64,
        j: f64,
        h_j: f64,
        k: f64,
        h_k: f64,
    ) -> Result<TwoPointShape> {
        let r = 1.0 / lambda;
        let (dx, dy) = (k - j, h_k - h_j);
        let d2 = dx * dx + dy * dy;
        let unreachable = Error::UnreachablePair { j, h_j, k, h_k };
        if d2 >= 4.0 * r * r {
            return Err(unreachable);
        }
        let d = d2.sqrt();
        let off = (r * r - 0.25 * d2).sqrt();
        // unit normal to the chord pointing upwards
        let (nx, ny) = (-dy / d, dx / d);
        let cx = 0.5 * (j + k) + off * nx;
        let cy = 0.5 * (h_j + h_k) + off * ny;
        // both anchors must sit strictly on the lower half of the circle
        if !(h_j < cy && h_k < cy) {
            return Err(unreachable);
        }
        Ok(TwoPointShape {
            shape: self.clone(),
            apex_x: cx,
            apex_h: cy - r,
            anchors: [(j, h_j), (k, h_k)],
            closed_form: true,
        })
    }
}

/// The translate `x -> h* + W(x - x*)` of a shape pinned at two anchors.
#[derive(Debug, Clone)]
pub struct TwoPointShape {
    shape: ShapeModel,
    pub apex_x: f64,
    pub apex_h: f64,
    pub anchors: [(f64, f64); 2],
    closed_form: bool,
}

impl TwoPointShape {
    pub fn shape(&self) -> &ShapeModel {
        &self.shape
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        let [(j, h_j), (k, h_k)] = self.anchors;
        if self.closed_form && j < k {
            match self.shape {
                ShapeModel::Cone { lambda } => {
                    return Ok((h_j - lambda * (x - j)).max(h_k + lambda * (x - k)));
                }
                ShapeModel::Parabola { lambda } => {
                    return Ok(lambda * (x - j) * (x - k)
                        + (k - x) / (k - j) * h_j
                        + (j - x) / (j - k) * h_k);
                }
                _ => {}
            }
        }
        Ok(self.apex_h + self.shape.eval(x - self.apex_x)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sos_closed_form(j2: f64, k2: f64, x: f64) -> f64 {
        let r = k2 * x / j2;
        -(1.0 - r * r).ln() / k2
    }

    #[test]
    fn closed_form_evaluations() {
        assert_eq!(ShapeModel::cone(0.5).unwrap().eval(-4.0).unwrap(), 2.0);
        assert_eq!(ShapeModel::parabola(0.25).unwrap().eval(2.0).unwrap(), 1.0);
        let sc = ShapeModel::semicircle(0.5).unwrap().eval(1.0).unwrap();
        assert!((sc - (2.0 - 3f64.sqrt())).abs() < 1e-15);
        let sos = ShapeModel::sos_wulff(5.0, 0.125).unwrap();
        assert_eq!(sos.eval(0.0).unwrap(), 0.0);
    }

    #[test]
    fn out_of_support_is_a_domain_error() {
        let sc = ShapeModel::semicircle(0.5).unwrap();
        assert!(matches!(sc.eval(2.0), Err(Error::Domain { support, .. }) if support == 2.0));
        let sos = ShapeModel::sos_wulff(5.0, 0.125).unwrap();
        assert!(matches!(sos.eval(40.0), Err(Error::Domain { .. })));
        assert!(ShapeModel::cone(-1.0).is_err());
    }

    #[test]
    fn sos_profile_support_and_normalisation() {
        let p = WulffProfile::build(5.0, 0.125, DEFAULT_PROFILE_NODES).unwrap();
        assert_eq!(p.nominal_support(), 40.0);
        assert!((p.x_max() - 40.0).abs() < 0.1);
        assert!(p.x_max() >= 0.999 * 40.0);
        assert_eq!(p.nodes().next(), Some((0.0, 0.0)));
        assert!(p.max_interpolation_error() < DEFAULT_PROFILE_TOLERANCE);
        for (j2, k2) in [(1.0, 1.0), (30.0, 2.0), (0.3, 5.0)] {
            let s = ShapeModel::sos_wulff(j2, k2).unwrap();
            assert!(s.eval(0.0).unwrap().abs() < 1e-9);
        }
    }

    #[test]
    fn sos_profile_matches_logarithmic_closed_form() {
        for (j2, k2) in [(5.0, 0.125), (30.0, 2.0), (1.0, 1.0)] {
            let s = ShapeModel::sos_wulff(j2, k2).unwrap();
            let a = j2 / k2;
            for i in 0..=1000 {
                let x = -0.9999 * a + 1.9998 * a * i as f64 / 1000.0;
                let exact = sos_closed_form(j2, k2, x);
                let got = s.eval(x).unwrap();
                assert!(
                    (got - exact).abs() <= 1e-8 * exact.abs().max(1.0),
                    "j2={j2} k2={k2} x={x}: {got} vs {exact}"
                );
            }
        }
    }

    #[test]
    fn sos_slope_table_is_tan_theta() {
        let p = WulffProfile::build(5.0, 0.5, 512).unwrap();
        let xs: Vec<(f64, f64)> = p.nodes().collect();
        // node 0 sits at the origin, so the first centred secant is skewed
        for i in 2..xs.len() - 1 {
            let (x0, w0) = xs[i - 1];
            let (x1, w1) = xs[i + 1];
            let secant = (w1 - w0) / (x1 - x0);
            let t = p.slopes()[i];
            assert!((secant - t).abs() <= 0.02 * t.max(1e-3), "node {i}: {secant} vs {t}");
        }
    }

    #[test]
    fn sos_scaling_against_unit_pressure_reference() {
        let j2 = 5.0;
        let reference = ShapeModel::sos_wulff(j2, 1.0).unwrap();
        let k2 = 0.25;
        let scaled = ShapeModel::sos_wulff(j2, k2).unwrap();
        let a = j2 / k2;
        for i in 0..100 {
            let x = -0.99 * a + 1.98 * a * i as f64 / 99.0;
            let lhs = scaled.eval(x).unwrap();
            let rhs = reference.eval(k2 * x).unwrap() / k2;
            assert!((lhs - rhs).abs() <= 1e-7 * lhs.abs().max(1.0), "x={x}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn coarse_profile_is_rejected() {
        let p = WulffProfile::build(5.0, 0.125, 8).unwrap();
        assert!(matches!(
            ShapeModel::from_profile(p, DEFAULT_PROFILE_TOLERANCE),
            Err(Error::ProfileTooCoarse { .. })
        ));
        assert!(WulffProfile::build(5.0, 0.125, 1).is_err());
        assert!(WulffProfile::build(0.0, 0.125, 10).is_err());
    }

    #[test]
    fn two_point_examples() {
        let p1 = ShapeModel::parabola(1.0).unwrap();
        let tp = p1.two_point(0.0, 1.0, 2.0, 1.0).unwrap();
        assert_eq!(tp.apex_x, 1.0);
        assert_eq!(tp.apex_h, 0.0);
        assert_eq!(tp.eval(1.0).unwrap(), 0.0);

        let p = ShapeModel::parabola(0.5).unwrap();
        let tp = p.two_point(0.0, 0.0, 3.0, 3.0).unwrap();
        assert!((tp.apex_x - 0.5).abs() < 1e-15);
        assert!((tp.apex_h + 0.125).abs() < 1e-15);
        assert!(tp.eval(1.0).unwrap().abs() < 1e-15);
        assert!((tp.eval(3.0).unwrap() - 3.0).abs() < 1e-15);
        let generic = p.two_point_generic(0.0, 0.0, 3.0, 3.0).unwrap();
        assert!((generic.apex_x - 0.5).abs() < 1e-9);
        assert!((generic.apex_h + 0.125).abs() < 1e-9);
        assert!(generic.eval(1.0).unwrap().abs() < 1e-9);

        let c = ShapeModel::cone(0.5).unwrap();
        let tp = c.two_point(0.0, 2.0, 4.0, 0.0).unwrap();
        assert_eq!(tp.eval(2.0).unwrap(), 1.0);
        assert_eq!(tp.eval(0.0).unwrap(), 2.0);
    }

    #[test]
    fn degenerate_anchors_give_single_contact_shape() {
        let p = ShapeModel::parabola(0.5).unwrap();
        let tp = p.two_point(2.0, 1.0, 2.0, 1.0).unwrap();
        assert_eq!(tp.eval(4.0).unwrap(), 3.0);
        assert!(p.two_point(2.0, 1.0, 2.0, 1.5).is_err());
        assert!(p.two_point(3.0, 1.0, 2.0, 1.0).is_err());
    }

    #[test]
    fn unreachable_pairs_are_reported() {
        let sc = ShapeModel::semicircle(0.9).unwrap();
        assert!(matches!(
            sc.two_point(0.0, 0.0, 3.0, 0.0),
            Err(Error::UnreachablePair { .. })
        ));
        assert!(matches!(
            sc.two_point_generic(0.0, 0.0, 3.0, 0.0),
            Err(Error::UnreachablePair { .. })
        ));
        // height gap larger than the semicircle can climb
        assert!(matches!(
            sc.two_point(0.0, 0.0, 1.0, 5.0),
            Err(Error::UnreachablePair { .. })
        ));
        let sos = ShapeModel::sos_wulff(1.0, 1.0).unwrap();
        assert!(matches!(
            sos.two_point(0.0, 0.0, 3.0, 0.0),
            Err(Error::UnreachablePair { .. })
        ));
    }

    #[test]
    fn semicircle_closed_form_agrees_with_bisection() {
        let sc = ShapeModel::semicircle(0.2).unwrap();
        for &(j, hj, k, hk) in &[(0.0, 1.0, 3.0, 1.5), (0.0, 2.0, 5.0, 0.3), (1.0, 0.0, 2.0, 0.7)] {
            let a = sc.two_point(j, hj, k, hk).unwrap();
            let b = sc.two_point_generic(j, hj, k, hk).unwrap();
            assert!((a.apex_x - b.apex_x).abs() < 1e-8);
            assert!((a.apex_h - b.apex_h).abs() < 1e-8);
        }
    }

    #[test]
    fn inverse_heights() {
        assert_eq!(ShapeModel::cone(0.5).unwrap().inverse(2.0), Some(4.0));
        assert_eq!(ShapeModel::parabola(0.25).unwrap().inverse(1.0), Some(2.0));
        assert_eq!(ShapeModel::semicircle(1.0).unwrap().inverse(2.0), None);
        let sos = ShapeModel::sos_wulff(5.0, 0.5).unwrap();
        let x = sos.inverse(3.0).unwrap();
        assert!((sos.eval(x).unwrap() - 3.0).abs() < 1e-9);
    }

    fn shapes() -> Vec<ShapeModel> {
        vec![
            ShapeModel::cone(0.7).unwrap(),
            ShapeModel::parabola(0.3).unwrap(),
            ShapeModel::semicircle(0.1).unwrap(),
            ShapeModel::sos_wulff(5.0, 0.125).unwrap(),
            ShapeModel::sos_wulff(2.0, 1.0).unwrap(),
        ]
    }

    #[test]
    fn even_normalised_increasing_convex() {
        for s in shapes() {
            let a = s.support_radius().min(50.0);
            let n = 2001;
            let xs: Vec<f64> = (0..n).map(|i| -0.999 * a + 1.998 * a * i as f64 / (n - 1) as f64).collect();
            let ws: Vec<f64> = xs.iter().map(|&x| s.eval(x).unwrap()).collect();
            assert_eq!(s.eval(0.0).unwrap(), 0.0);
            for (&x, &w) in xs.iter().zip(&ws) {
                assert!((s.eval(-x).unwrap() - w).abs() <= 1e-12 * w.max(1.0));
            }
            let half = n / 2;
            for i in half + 1..n {
                assert!(ws[i] > ws[i - 1], "{:?} not increasing at {}", s.kind(), xs[i]);
            }
            for i in 1..n - 1 {
                let d2 = ws[i + 1] - 2.0 * ws[i] + ws[i - 1];
                assert!(d2 >= -1e-9, "{:?} second difference {d2} at {}", s.kind(), xs[i]);
            }
        }
    }

    proptest! {
        #[test]
        fn anchors_reproduced(j in -20.0f64..20.0, gap in 0.5f64..15.0, hj in 0.0f64..4.0, hk in 0.0f64..4.0) {
            let k = j + gap;
            for s in shapes() {
                let tp = match s.two_point(j, hj, k, hk) {
                    Ok(tp) => tp,
                    Err(Error::UnreachablePair { .. }) => continue,
                    Err(e) => panic!("{e}"),
                };
                // the cone only reaches pairs whose slope is below λ
                if let ShapeModel::Cone { lambda } = s {
                    if (hk - hj).abs() > lambda * gap { continue; }
                }
                let tol = if s.has_closed_form() { 1e-8 } else { 1e-6 };
                prop_assert!((tp.eval(j).unwrap() - hj).abs() < tol, "{:?}", s.kind());
                prop_assert!((tp.eval(k).unwrap() - hk).abs() < tol, "{:?}", s.kind());
                prop_assert!(s.in_support(j - tp.apex_x) && s.in_support(k - tp.apex_x));
            }
        }

        #[test]
        fn parabola_generic_matches_closed_form(
            lambda in 0.01f64..2.0, j in -50.0f64..50.0, gap in 0.5f64..40.0,
            hj in 0.0f64..10.0, hk in 0.0f64..10.0,
            probes in proptest::collection::vec(-1.0f64..2.0, 100),
        ) {
            let p = ShapeModel::parabola(lambda).unwrap();
            let k = j + gap;
            let closed = p.two_point(j, hj, k, hk).unwrap();
            let generic = p.two_point_generic(j, hj, k, hk).unwrap();
            let slope_bound = 2.0 * lambda * (gap + (hk - hj).abs() / (lambda * gap) + 1.0);
            let tol = 1e-8 + slope_bound * 2.0 * ROOT_TOLERANCE;
            for u in probes {
                let x = j + u * gap;
                let a = closed.eval(x).unwrap();
                let b = generic.eval(x).unwrap();
                prop_assert!((a - b).abs() <= tol * a.abs().max(1.0), "x={x}: {a} vs {b}");
            }
        }

        #[test]
        fn translates_cross_at_most_once(
            x1 in -5.0f64..5.0, h1 in -3.0f64..3.0, x2 in -5.0f64..5.0, h2 in -3.0f64..3.0,
        ) {
            prop_assume!((x1 - x2).abs() > 1e-3 || (h1 - h2).abs() > 1e-3);
            for s in shapes().into_iter().filter(|s| s.is_strictly_convex()) {
                let a = s.support_radius().min(40.0);
                let lo = x1.max(x2) - 0.999 * a;
                let hi = x1.min(x2) + 0.999 * a;
                if lo >= hi { continue; }
                let mut changes = 0;
                let mut last_sign = 0i8;
                for i in 0..=4000 {
                    let x = lo + (hi - lo) * i as f64 / 4000.0;
                    let d = (h1 + s.eval(x - x1).unwrap()) - (h2 + s.eval(x - x2).unwrap());
                    let sign = if d > 1e-9 { 1 } else if d < -1e-9 { -1 } else { 0 };
                    if sign != 0 {
                        if last_sign != 0 && sign != last_sign { changes += 1; }
                        last_sign = sign;
                    }
                }
                prop_assert!(changes <= 1, "{:?}: {changes} sign changes", s.kind());
            }
        }
    }
}
