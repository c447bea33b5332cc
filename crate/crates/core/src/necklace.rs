//! The envelope interface `I(x)` and its contact set.
//!
//! On a finite window `[0, L]` the envelope is the supremum of two-point
//! shapes `W(j, h_j, k, h_k; x)` over anchor pairs `j <= x <= k` and the
//! contact set is `{i : I(i) = h_i}`. Both endpoints are always contacts.
//!
//! The contact set is the unique ordered subset in which every non-contact
//! lies strictly below the shape hung from its two neighbouring contacts,
//! and every contact lies on or above the shape hung from its two
//! neighbouring contacts. Checking only neighbours suffices because two
//! translates of a strictly convex shape cross at most once, which is what
//! makes the left-to-right stack scan correct.

use std::sync::OnceLock;

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::shapes::{ShapeModel, TwoPointShape};
use crate::substrate::{Boundary, Substrate};

/// Largest window accepted by the cubic brute-force oracle by default.
pub const BRUTEFORCE_CAP: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Contact {
    pub site: usize,
    pub height: f64,
}

/// How `contact_set_with` decides which sites are contacts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    /// Tent criterion for the cone, hull scan for the parabola, stack
    /// scan otherwise.
    Auto,
    /// Stack scan with the shape's own two-point construction.
    Stack,
    /// Stack scan with two-point shapes found by bisection, even where a
    /// closed form exists.
    StackGeneric,
    /// Upper concave hull of `(i, h_i - λ i²)`; parabola only.
    Hull,
    /// `h_i >= h_j - λ|i - j|` for every `j`; cone only.
    Tent,
}

/// A breach of the local necklace conditions found by [`Necklace::verify`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    /// A non-contact site reaches the shape hung from its neighbouring contacts.
    Interior { site: usize, height: f64, shape: f64 },
    /// A contact lies below the shape hung from its neighbouring contacts.
    Unstable { site: usize, height: f64, shape: f64 },
    /// A window endpoint is missing from the contact set.
    Endpoint { site: usize },
    /// The gap shape could not be built.
    Shape(Error),
}

#[derive(Debug)]
pub struct Necklace {
    contacts: Vec<Contact>,
    shape: ShapeModel,
    window: (usize, usize),
    period: Option<usize>,
    gaps: Vec<OnceLock<Result<TwoPointShape>>>,
}

impl Necklace {
    fn new(contacts: Vec<Contact>, shape: ShapeModel, window: (usize, usize), period: Option<usize>) -> Self {
        let gap_count = match period {
            Some(_) => contacts.len(),
            None => contacts.len().saturating_sub(1),
        };
        Necklace {
            contacts,
            shape,
            window,
            period,
            gaps: (0..gap_count).map(|_| OnceLock::new()).collect(),
        }
    }

    pub fn contacts(&self) -> &[Contact] {
        &self.contacts
    }

    pub fn sites(&self) -> Vec<usize> {
        self.contacts.iter().map(|c| c.site).collect()
    }

    pub fn shape(&self) -> &ShapeModel {
        &self.shape
    }

    pub fn window(&self) -> (usize, usize) {
        self.window
    }

    pub fn period(&self) -> Option<usize> {
        self.period
    }

    /// Gaps `l_n = b_n - b_{n-1}`; for a periodic necklace the wrap-around
    /// gap comes last.
    pub fn gap_lengths(&self) -> Vec<usize> {
        let mut gaps: Vec<usize> = self.contacts.windows(2).map(|w| w[1].site - w[0].site).collect();
        if let Some(n) = self.period {
            let first = self.contacts[0].site;
            let last = self.contacts[self.contacts.len() - 1].site;
            gaps.push(first + n - last);
        }
        gaps
    }

    /// Anchors `(b_n, x_n)` and `(b_{n+1}, x_{n+1})` of gap `g`, unwrapped
    /// onto the real line.
    fn gap_anchors(&self, g: usize) -> ((f64, f64), (f64, f64)) {
        let a = self.contacts[g];
        match (self.period, self.contacts.get(g + 1)) {
            (_, Some(b)) => ((a.site as f64, a.height), (b.site as f64, b.height)),
            (Some(n), None) => {
                let b = self.contacts[0];
                ((a.site as f64, a.height), ((b.site + n) as f64, b.height))
            }
            (None, None) => unreachable!("gap index past the last contact"),
        }
    }

    fn gap_shape(&self, g: usize) -> Result<&TwoPointShape> {
        self.gaps[g]
            .get_or_init(|| {
                let ((j, hj), (k, hk)) = self.gap_anchors(g);
                self.shape.two_point(j, hj, k, hk)
            })
            .as_ref()
            .map_err(Clone::clone)
    }

    /// Envelope height `I(x)`.
    pub fn envelope_eval(&self, x: f64) -> Result<f64> {
        let (lo, hi) = (self.window.0 as f64, self.window.1 as f64);
        let x = match self.period {
            Some(n) => x.rem_euclid(n as f64),
            None => {
                if !(x >= lo && x <= hi) {
                    return Err(Error::OutsideWindow { x, lo, hi });
                }
                x
            }
        };
        let idx = self.contacts.partition_point(|c| (c.site as f64) <= x);
        if idx > 0 && self.contacts[idx - 1].site as f64 == x {
            return Ok(self.contacts[idx - 1].height);
        }
        match self.period {
            Some(n) => {
                if idx == 0 || idx == self.contacts.len() {
                    let g = self.contacts.len() - 1;
                    let xu = if idx == 0 { x + n as f64 } else { x };
                    self.gap_shape(g)?.eval(xu)
                } else {
                    self.gap_shape(idx - 1)?.eval(x)
                }
            }
            None => self.gap_shape(idx - 1)?.eval(x),
        }
    }

    /// Envelope at every site of the window.
    pub fn envelope_at_sites(&self) -> Result<Vec<f64>> {
        (self.window.0..=self.window.1)
            .map(|i| self.envelope_eval(i as f64))
            .collect()
    }

    /// Checks the local conditions against the substrate the necklace was
    /// built from.
    pub fn verify(&self, substrate: &Substrate) -> std::result::Result<(), Violation> {
        let h = substrate.heights();
        let n = h.len();
        let unwrap_height = |site: usize| h[site % n];
        if self.period.is_none() {
            for site in [self.window.0, self.window.1] {
                if self.contacts.first().map(|c| c.site) != Some(self.window.0)
                    || self.contacts.last().map(|c| c.site) != Some(self.window.1)
                {
                    return Err(Violation::Endpoint { site });
                }
            }
        }
        for g in 0..self.gaps.len() {
            let ((j, _), (k, _)) = self.gap_anchors(g);
            let tp = self.gap_shape(g).map_err(Violation::Shape)?;
            for i in (j as usize + 1)..(k as usize) {
                let shape = tp.eval(i as f64).map_err(Violation::Shape)?;
                let height = unwrap_height(i);
                if height >= shape {
                    return Err(Violation::Interior { site: i % n, height, shape });
                }
            }
        }
        let m = self.contacts.len();
        let interior: Box<dyn Iterator<Item = usize>> = match self.period {
            Some(_) => Box::new(0..m),
            None => Box::new(1..m.saturating_sub(1)),
        };
        for c in interior {
            let (prev, next) = match self.period {
                Some(p) => {
                    let prev = if c == 0 { self.contacts[m - 1].site as f64 - p as f64 } else { self.contacts[c - 1].site as f64 };
                    let next = if c + 1 == m { (self.contacts[0].site + p) as f64 } else { self.contacts[c + 1].site as f64 };
                    (prev, next)
                }
                None => (self.contacts[c - 1].site as f64, self.contacts[c + 1].site as f64),
            };
            let hp = unwrap_height(prev.rem_euclid(n as f64) as usize);
            let hn = unwrap_height(next as usize);
            let tp = self.shape.two_point(prev, hp, next, hn).map_err(Violation::Shape)?;
            let here = self.contacts[c];
            let shape = tp.eval(here.site as f64).map_err(Violation::Shape)?;
            if here.height < shape {
                return Err(Violation::Unstable { site: here.site, height: here.height, shape });
            }
        }
        Ok(())
    }
}

fn build(substrate: &Substrate, shape: &ShapeModel, sites: Vec<usize>) -> Necklace {
    let h = substrate.heights();
    let contacts = sites
        .into_iter()
        .map(|site| Contact { site, height: h[site] })
        .collect();
    Necklace::new(contacts, shape.clone(), (0, h.len() - 1), None)
}

/// Contact set of the substrate viewed as a finite window.
pub fn contact_set(substrate: &Substrate, shape: &ShapeModel) -> Result<Necklace> {
    contact_set_with(substrate, shape, Algorithm::Auto)
}

pub fn contact_set_with(substrate: &Substrate, shape: &ShapeModel, algorithm: Algorithm) -> Result<Necklace> {
    let sites = contact_sites(substrate.heights(), shape, algorithm)?;
    Ok(build(substrate, shape, sites))
}

/// Contact indices for a raw height slice.
pub fn contact_sites(h: &[f64], shape: &ShapeModel, algorithm: Algorithm) -> Result<Vec<usize>> {
    if h.len() < 2 {
        return Err(invalid("a substrate needs at least 2 sites"));
    }
    let algorithm = match (algorithm, shape) {
        (Algorithm::Auto, ShapeModel::Cone { .. }) => Algorithm::Tent,
        (Algorithm::Auto, ShapeModel::Parabola { .. }) => Algorithm::Hull,
        (Algorithm::Auto, _) => Algorithm::Stack,
        (a, _) => a,
    };
    match algorithm {
        Algorithm::Tent => match *shape {
            ShapeModel::Cone { lambda } => Ok(tent_sites(h, lambda)),
            _ => Err(invalid("the tent criterion applies to the cone only")),
        },
        Algorithm::Hull => match *shape {
            ShapeModel::Parabola { lambda } => Ok(hull_sites(h, lambda)),
            _ => Err(invalid("the hull transform applies to the parabola only")),
        },
        Algorithm::Stack => stack_sites(h, |j, hj, k, hk| shape.two_point(j, hj, k, hk)),
        Algorithm::StackGeneric => stack_sites(h, |j, hj, k, hk| shape.two_point_generic(j, hj, k, hk)),
        Algorithm::Auto => unreachable!(),
    }
}

fn stack_sites<F>(h: &[f64], two_point: F) -> Result<Vec<usize>>
where
    F: Fn(f64, f64, f64, f64) -> Result<TwoPointShape>,
{
    let mut stack: Vec<usize> = Vec::with_capacity(h.len());
    for k in 0..h.len() {
        while stack.len() >= 2 {
            let m = stack[stack.len() - 1];
            let p = stack[stack.len() - 2];
            let tp = two_point(p as f64, h[p], k as f64, h[k])?;
            if h[m] < tp.eval(m as f64)? {
                stack.pop();
            } else {
                break;
            }
        }
        stack.push(k);
    }
    Ok(stack)
}

/// Upper concave hull of `(i, h_i - λ i²)` by a monotone-chain scan.
///
/// `h_m >= W(p, h_p, k, h_k; m)` for the parabola is exactly the statement
/// that the shifted point `m` is on or above the chord from `p` to `k`.
/// Chord slopes are formed from height differences so the `λ i²` terms
/// never have to be subtracted at large `i`.
fn hull_sites(h: &[f64], lambda: f64) -> Vec<usize> {
    let slope = |a: usize, b: usize| {
        (h[b] - h[a]) / (b - a) as f64 - lambda * (a + b) as f64
    };
    let mut stack: Vec<usize> = Vec::with_capacity(h.len());
    for k in 0..h.len() {
        while stack.len() >= 2 {
            let m = stack[stack.len() - 1];
            let p = stack[stack.len() - 2];
            if slope(p, m) < slope(m, k) {
                stack.pop();
            } else {
                break;
            }
        }
        stack.push(k);
    }
    stack
}

/// Cone contacts: endpoints, plus interior sites no tent `h_j - λ|i - j|`
/// rises above.
fn tent_sites(h: &[f64], lambda: f64) -> Vec<usize> {
    let n = h.len();
    // best_right[i] = max_{k > i} (h_k - λ k)
    let mut best_right = vec![f64::NEG_INFINITY; n];
    for i in (0..n - 1).rev() {
        best_right[i] = best_right[i + 1].max(h[i + 1] - lambda * (i + 1) as f64);
    }
    let mut sites = vec![0];
    let mut best_left = h[0];
    for i in 1..n - 1 {
        let x = i as f64;
        if h[i] + lambda * x >= best_left && h[i] - lambda * x >= best_right[i] {
            sites.push(i);
        }
        best_left = best_left.max(h[i] + lambda * x);
    }
    sites.push(n - 1);
    sites
}

/// Ground-truth contact set: site `i` is a contact iff `h_i` reaches every
/// two-point shape anchored at `j < i < k` in the window.
pub fn contact_set_bruteforce(substrate: &Substrate, shape: &ShapeModel) -> Result<Necklace> {
    contact_set_bruteforce_capped(substrate, shape, BRUTEFORCE_CAP)
}

pub fn contact_set_bruteforce_capped(substrate: &Substrate, shape: &ShapeModel, cap: usize) -> Result<Necklace> {
    let h = substrate.heights();
    let n = h.len();
    if n > cap {
        return Err(invalid(format!("brute-force oracle limited to {cap} sites, got {n}")));
    }
    let mut is_contact = vec![true; n];
    for j in 0..n {
        for k in j + 2..n {
            let tp = shape.two_point(j as f64, h[j], k as f64, h[k])?;
            for i in j + 1..k {
                if is_contact[i] && h[i] < tp.eval(i as f64)? {
                    is_contact[i] = false;
                }
            }
        }
    }
    let sites = (0..n).filter(|&i| is_contact[i]).collect();
    Ok(build(substrate, shape, sites))
}

/// Contact set of a periodic substrate.
///
/// The heights are tiled three times and the contacts of the middle copy
/// are kept. This is exact once the middle copy is much longer than the
/// longest gap.
pub fn periodic_contact_set(substrate: &Substrate, shape: &ShapeModel) -> Result<Necklace> {
    if substrate.boundary() != Boundary::Periodic {
        return Err(invalid("periodic_contact_set needs a periodic substrate"));
    }
    let h = substrate.heights();
    let n = h.len();
    let tiled: Vec<f64> = h.iter().chain(h).chain(h).copied().collect();
    let sites = contact_sites(&tiled, shape, Algorithm::Auto)?;
    let contacts = sites
        .into_iter()
        .filter(|&s| s >= n && s < 2 * n)
        .map(|s| Contact { site: s - n, height: h[s - n] })
        .collect();
    Ok(Necklace::new(contacts, shape.clone(), (0, n - 1), Some(n)))
}

/// Number of sites to drop at each window edge so that the contact
/// statistics of the interior match the infinite line: the distance at
/// which `W` exceeds `ln n + 10`, far above the typical largest height.
pub fn interior_margin(shape: &ShapeModel, n: usize) -> usize {
    let target = (n.max(2) as f64).ln() + 10.0;
    match shape.inverse(target) {
        Some(x) => x.ceil() as usize,
        None => (2.0 * shape.support_radius()).ceil() as usize,
    }
}

/// Envelope computed directly as an infimum of lowered shapes.
///
/// Apex positions are laid on a grid; above each apex the shape is lowered
/// until it touches the substrate, and the envelope is the lower envelope
/// of the resulting translates.
#[derive(Debug, Clone)]
pub struct SampledEnvelope {
    shape: ShapeModel,
    apexes: Vec<(f64, f64)>,
}

impl SampledEnvelope {
    pub fn apexes(&self) -> &[(f64, f64)] {
        &self.apexes
    }

    /// `min` over apexes within the support of `h* + W(x - x*)`;
    /// `+inf` when no lowered shape covers `x`.
    pub fn eval(&self, x: f64) -> f64 {
        let a = self.shape.support_radius();
        let (lo, hi) = if a.is_finite() {
            (
                self.apexes.partition_point(|&(xs, _)| xs <= x - a),
                self.apexes.partition_point(|&(xs, _)| xs < x + a),
            )
        } else {
            (0, self.apexes.len())
        };
        self.apexes[lo..hi]
            .iter()
            .filter(|&&(xs, _)| self.shape.in_support(x - xs))
            .map(|&(xs, hs)| hs + self.shape.eval_in_support(x - xs))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn at_sites(&self, n: usize) -> Vec<f64> {
        (0..n).map(|i| self.eval(i as f64)).collect()
    }
}

pub fn envelope_bruteforce(substrate: &Substrate, shape: &ShapeModel, grid_step: f64) -> Result<SampledEnvelope> {
    if !(grid_step > 0.0 && grid_step.is_finite()) {
        return Err(invalid(format!("grid_step must be positive, got {grid_step}")));
    }
    let h = substrate.heights();
    let n = h.len();
    let a = shape.support_radius();
    let extension = if a.is_finite() {
        a
    } else {
        // far enough out that a shape through an endpoint clears every
        // other site: W(E)/E >= height range
        let range = h.iter().copied().fold(0.0, f64::max) - h.iter().copied().fold(f64::INFINITY, f64::min);
        let cap = 4.0 * n as f64 + 100.0;
        let mut e: f64 = 1.0;
        while e < cap && shape.eval_in_support(e) / e < range.max(1e-12) {
            e *= 2.0;
        }
        e.min(cap)
    };
    let start = -extension;
    let end = (n - 1) as f64 + extension;
    let steps = ((end - start) / grid_step).floor() as usize;
    let mut apexes = Vec::with_capacity(steps + 1);
    for s in 0..=steps {
        let xs = start + s as f64 * grid_step;
        let (lo, hi) = if a.is_finite() {
            (((xs - a).floor().max(-1.0) + 1.0) as usize, ((xs + a).ceil().min(n as f64)) as usize)
        } else {
            (0, n)
        };
        let touch = (lo..hi.min(n))
            .filter(|&i| shape.in_support(i as f64 - xs))
            .map(|i| h[i] - shape.eval_in_support(i as f64 - xs))
            .fold(f64::NEG_INFINITY, f64::max);
        if touch.is_finite() {
            apexes.push((xs, touch));
        }
    }
    Ok(SampledEnvelope {
        shape: shape.clone(),
        apexes,
    })
}
