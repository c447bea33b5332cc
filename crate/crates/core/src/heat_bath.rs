//! Exact single-site heat-bath sampling for solid-on-solid chains.
//!
//! With neighbours at heights `a <= b`, the conditional density of one site is
//!
//! ```text
//! p(h) ∝ exp(-J (|h - a| + |h - b|) - K h),   h >= floor
//! ```
//!
//! The exponent is piecewise linear with kinks at `a` and `b`, so the
//! density is a mixture of at most three truncated exponentials. Segment
//! masses are kept in log space and each segment is inverted in closed form.

use rand::Rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Conditional {
    pub left: f64,
    pub right: f64,
    pub coupling: f64,
    pub field: f64,
    pub floor: f64,
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    lo: f64,
    hi: f64,
    slope: f64,
    log_mass: f64,
}

impl Conditional {
    fn exponent(&self, h: f64) -> f64 {
        -self.coupling * ((h - self.left).abs() + (h - self.right).abs()) - self.field * h
    }

    fn segments(&self) -> ([Segment; 3], usize) {
        let (a, b) = if self.left <= self.right {
            (self.left, self.right)
        } else {
            (self.right, self.left)
        };
        let j = self.coupling;
        let k = self.field;
        let pieces = [
            (f64::NEG_INFINITY, a, 2.0 * j - k),
            (a, b, -k),
            (b, f64::INFINITY, -(2.0 * j + k)),
        ];
        let empty = Segment {
            lo: 0.0,
            hi: 0.0,
            slope: 0.0,
            log_mass: f64::NEG_INFINITY,
        };
        let mut out = [empty; 3];
        let mut count = 0;
        for (lo, hi, slope) in pieces {
            let lo = lo.max(self.floor);
            if hi <= lo {
                continue;
            }
            out[count] = Segment {
                lo,
                hi,
                slope,
                log_mass: self.log_mass(lo, hi, slope),
            };
            count += 1;
        }
        (out, count)
    }

    /// `ln ∫_lo^hi exp(exponent(h)) dh` on a linear piece.
    fn log_mass(&self, lo: f64, hi: f64, slope: f64) -> f64 {
        let w = hi - lo;
        if slope > 0.0 {
            assert!(hi.is_finite(), "increasing segment must be bounded");
            self.exponent(hi) + (-(-slope * w).exp_m1() / slope).ln()
        } else if slope < 0.0 {
            if w.is_infinite() {
                self.exponent(lo) - (-slope).ln()
            } else {
                self.exponent(lo) + (-(slope * w).exp_m1() / -slope).ln()
            }
        } else {
            self.exponent(lo) + w.ln()
        }
    }

    /// Draws one height from the conditional law.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let (segs, count) = self.segments();
        let segs = &segs[..count];
        let max = segs
            .iter()
            .map(|s| s.log_mass)
            .fold(f64::NEG_INFINITY, f64::max);
        let weights: [f64; 3] = std::array::from_fn(|i| {
            segs.get(i).map_or(0.0, |s| (s.log_mass - max).exp())
        });
        let total: f64 = weights.iter().sum();
        let mut pick = rng.random::<f64>() * total;
        let mut chosen = count - 1;
        for (i, w) in weights.iter().enumerate().take(count) {
            if pick < *w {
                chosen = i;
                break;
            }
            pick -= w;
        }
        let s = segs[chosen];
        let u: f64 = rng.random();
        let w = s.hi - s.lo;
        let h = if s.slope < 0.0 {
            s.lo + (u * (s.slope * w).exp_m1()).ln_1p() / s.slope
        } else if s.slope > 0.0 {
            s.hi + (u * (-s.slope * w).exp_m1()).ln_1p() / s.slope
        } else {
            s.lo + u * w
        };
        h.clamp(s.lo, s.hi)
    }

    /// Closed-form conditional CDF.
    pub fn cdf(&self, h: f64) -> f64 {
        if h <= self.floor {
            return 0.0;
        }
        let (segs, count) = self.segments();
        let segs = &segs[..count];
        let max = segs
            .iter()
            .map(|s| s.log_mass)
            .fold(f64::NEG_INFINITY, f64::max);
        let total: f64 = segs.iter().map(|s| (s.log_mass - max).exp()).sum();
        let mut acc = 0.0;
        for s in segs {
            if h >= s.hi {
                acc += (s.log_mass - max).exp();
            } else if h > s.lo {
                acc += (self.log_mass(s.lo, h, s.slope) - max).exp();
            }
        }
        (acc / total).clamp(0.0, 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::integrate;
    use crate::seed::rng_from_seed;

    /// CDF by direct numerical integration of the unnormalised density.
    fn quadrature_cdf(c: &Conditional, probes: &[f64]) -> Vec<f64> {
        // the exponent is concave, so its maximum sits at the floor or a kink
        let peak = [c.floor, c.left, c.right]
            .iter()
            .filter(|&&h| h >= c.floor)
            .map(|&h| c.exponent(h))
            .fold(f64::NEG_INFINITY, f64::max);
        let density = |h: f64| (c.exponent(h) - peak).exp();
        let top = c.left.max(c.right).max(c.floor) + 60.0 / (c.coupling + c.field);
        let mut bps = vec![c.left, c.right];
        bps.retain(|&p| p > c.floor);
        let total = integrate(density, c.floor, top, &bps, 1e-13, 2000).unwrap().value;
        probes
            .iter()
            .map(|&p| {
                let bp: Vec<f64> = bps.iter().copied().filter(|&b| b < p).collect();
                integrate(density, c.floor, p, &bp, 1e-13, 2000).unwrap().value / total
            })
            .collect()
    }

    fn cases() -> Vec<Conditional> {
        vec![
            Conditional { left: 1.0, right: 3.0, coupling: 1.0, field: 0.5, floor: 0.0 },
            Conditional { left: 2.5, right: 0.2, coupling: 30.0, field: 2.0, floor: 1.0 },
            Conditional { left: 0.3, right: 0.3, coupling: 0.25, field: 0.5, floor: 0.0 },
            Conditional { left: 4.0, right: 5.0, coupling: 1.0, field: 3.0, floor: 0.0 },
            Conditional { left: 0.0, right: 2.0, coupling: 5.0, field: 0.125, floor: 3.0 },
            Conditional { left: 1.0, right: 2.0, coupling: 0.0, field: 1.0, floor: 0.5 },
        ]
    }

    #[test]
    fn closed_form_cdf_matches_quadrature() {
        for c in cases() {
            let top = c.left.max(c.right).max(c.floor) + 5.0;
            let probes: Vec<f64> = (1..50).map(|i| c.floor + (top - c.floor) * i as f64 / 50.0).collect();
            let reference = quadrature_cdf(&c, &probes);
            for (&p, &r) in probes.iter().zip(&reference) {
                assert!((c.cdf(p) - r).abs() < 1e-9, "{c:?} at {p}: {} vs {r}", c.cdf(p));
            }
        }
    }

    #[test]
    fn samples_follow_the_conditional_law() {
        let mut rng = rng_from_seed(11);
        for c in cases() {
            let n = 1_000_000;
            let mut draws: Vec<f64> = (0..n).map(|_| c.sample(&mut rng)).collect();
            draws.sort_by(|a, b| a.total_cmp(b));
            assert!(draws[0] >= c.floor);
            let top = c.left.max(c.right).max(c.floor) + 5.0;
            let probes: Vec<f64> = (1..200).map(|i| c.floor + (top - c.floor) * i as f64 / 200.0).collect();
            let reference = quadrature_cdf(&c, &probes);
            let mut worst: f64 = 0.0;
            for (&p, &r) in probes.iter().zip(&reference) {
                let emp = draws.partition_point(|&d| d <= p) as f64 / n as f64;
                worst = worst.max((emp - r).abs());
            }
            assert!(worst < 0.005, "{c:?}: max CDF deviation {worst}");
        }
    }
}
