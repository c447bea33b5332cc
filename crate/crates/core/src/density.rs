//! Density of the contact process, `P(0 ∈ B)`.
//!
//! For the cone `W(x) = λ|x|` site 0 is a contact iff `h_0 >= h_i - λ|i|`
//! for every `i != 0`, so
//!
//! ```text
//! P(0 ∈ B) = ∫_0^∞ e^{-x} Π_{i>=1} (1 - e^{-x-λi})² dx
//!          = ∫_0^1 Π_{i>=1} (1 - y q^i)² dy,      q = e^{-λ}.
//! ```

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::necklace::{contact_sites, interior_margin, Algorithm};
use crate::quadrature::integrate;
use crate::seed::stream_rng;
use crate::shapes::{ShapeKind, ShapeModel};
use crate::stats::Welford;
use crate::substrate::iid_exponential_heights;

/// Terms with `y q^i` below this are summed as a geometric tail.
const PRODUCT_CUTOFF: f64 = 1e-16;
const EXACT_ABS_TOL: f64 = 1e-10;

/// `ln Π_{i>=1} (1 - y q^i)` with the tail beyond the cutoff folded in as
/// its first-order geometric sum.
fn log_product(y: f64, q: f64, one_minus_q: f64) -> f64 {
    let mut sum = 0.0;
    let mut term = y * q;
    while term >= PRODUCT_CUTOFF {
        sum += (-term).ln_1p();
        term *= q;
    }
    // Σ_{i>I} -ln(1 - y q^i) = Σ y q^i (1 + O(y q^i)), relative error < 1e-16
    sum - term / one_minus_q
}

/// `P(0 ∈ B)` for the cone by adaptive quadrature.
pub fn cone_density_exact(lambda: f64) -> Result<f64> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(invalid(format!("lambda must be positive, got {lambda}")));
    }
    let q = (-lambda).exp();
    let one_minus_q = -(-lambda).exp_m1();
    let integrand = |y: f64| (2.0 * log_product(y, q, one_minus_q)).exp();
    // the integrand falls off on the scale y ~ λ
    let breaks: Vec<f64> = [0.25, 1.0, 4.0, 16.0]
        .iter()
        .map(|c| c * lambda)
        .filter(|&b| b < 1.0)
        .collect();
    let r = integrate(integrand, 0.0, 1.0, &breaks, EXACT_ABS_TOL, 2000)?;
    Ok(r.value.clamp(0.0, 1.0))
}

/// Upper bound `(1 - e^{-λ}) / (2 e^{-λ}) · (1 - exp(-2 e^{-λ} / (1 - e^{-λ})))`.
pub fn cone_density_upper(lambda: f64) -> Result<f64> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(invalid(format!("lambda must be positive, got {lambda}")));
    }
    let c = (-lambda).exp() / -(-lambda).exp_m1();
    Ok((-(-2.0 * c).exp_m1()) / (2.0 * c))
}

/// Lower bound, valid for `0 < λ < 1`:
/// `1/(2c) · (1 - exp(-2 λ ln(1/λ) c)) · exp(-2 (λ ln(1/λ))² c₂)` with
/// `c = e^{-λ}/(1 - e^{-λ})` and `c₂ = e^{-2λ}/(1 - e^{-2λ})`.
pub fn cone_density_lower(lambda: f64) -> Result<f64> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(invalid(format!("the lower bound needs 0 < lambda < 1, got {lambda}")));
    }
    let c = (-lambda).exp() / -(-lambda).exp_m1();
    let c2 = (-2.0 * lambda).exp() / -(-2.0 * lambda).exp_m1();
    let l = lambda * (1.0 / lambda).ln();
    Ok(-(-2.0 * l * c).exp_m1() / (2.0 * c) * (-2.0 * l * l * c2).exp())
}

/// Upper bound for the parabola, valid for `0 < λ < π/4`:
/// `3 sqrt(λ/π) (1 + e^{2 - sqrt(π/λ)}/3) / (1 - 2 sqrt(λ/π))`.
pub fn parabola_density_upper(lambda: f64) -> Result<f64> {
    let pi = std::f64::consts::PI;
    if !(lambda > 0.0 && lambda < pi / 4.0) {
        return Err(invalid(format!("the parabola bound needs 0 < lambda < pi/4, got {lambda}")));
    }
    let r = (lambda / pi).sqrt();
    Ok(3.0 * r * (1.0 + (2.0 - (pi / lambda).sqrt()).exp() / 3.0) / (1.0 - 2.0 * r))
}

#[derive(Debug, Clone, Serialize)]
pub struct DensityEstimate {
    pub shape: ShapeKind,
    pub lambda: Option<f64>,
    pub p_hat: f64,
    pub se: f64,
    pub samples: usize,
    pub n: usize,
    pub sites_used: usize,
    pub margin: usize,
    pub seed: u64,
}

/// Fraction of contact sites among the interior sites of `samples`
/// independent iid-exponential substrates of length `n`.
///
/// Sample `s` uses the stream `derive_seed(master_seed, s)`. The standard
/// error comes from the spread of per-substrate fractions, since sites
/// within one substrate are correlated through the envelope.
pub fn empirical_density(shape: &ShapeModel, n: usize, samples: usize, master_seed: u64) -> Result<DensityEstimate> {
    if samples == 0 {
        return Err(invalid("need at least one sample"));
    }
    let margin = interior_margin(shape, n);
    if n <= 2 * margin {
        return Err(invalid(format!(
            "n = {n} leaves no interior after trimming {margin} sites per edge; use n > {}",
            2 * margin
        )));
    }
    let interior = n - 2 * margin;
    let fractions: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|s| {
            let mut rng = stream_rng(master_seed, s as u64);
            let h = iid_exponential_heights(n, &mut rng)?;
            let sites = contact_sites(&h, shape, Algorithm::Auto)?;
            let count = sites.iter().filter(|&&b| b >= margin && b < n - margin).count();
            Ok(count as f64 / interior as f64)
        })
        .collect::<Result<Vec<f64>>>()?;
    let mut acc = Welford::default();
    fractions.iter().for_each(|&f| acc.push(f));
    Ok(DensityEstimate {
        shape: shape.kind(),
        lambda: shape.lambda(),
        p_hat: acc.mean(),
        se: acc.se(),
        samples,
        n,
        sites_used: interior * samples,
        margin,
        seed: master_seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    // ∫_0^1 Π(1 - y q^i)^2 dy evaluated independently (30-digit mpmath
    // q-Pochhammer quadrature for λ >= 0.05; float64 scipy quadrature of the
    // log-sum for the rest; the two agree to 1e-16 where both were run).
    const EXACT: [(f64, f64); 9] = [
        (100.0, 1.0),
        (2.0, 0.853_365_078_964_214_7),
        (0.5, 0.283_735_759_041_152_6),
        (0.2, 0.105_274_064_931_639_1),
        (0.1, 0.051_282_645_032_863_15),
        (0.05, 0.025_316_490_397_228_66),
        (0.01, 0.005_012_531_381_062_158),
        (1e-3, 5.001_250_312_630_277e-4),
        (1e-4, 5.000_125_003_125_069e-5),
    ];

    #[test]
    fn exact_density_matches_reference_values() {
        for (lambda, want) in EXACT {
            let got = cone_density_exact(lambda).unwrap();
            assert!((got - want).abs() < 1e-10, "λ={lambda}: {got} vs {want}");
        }
    }

    #[test]
    fn exact_density_limits() {
        let r = cone_density_exact(1e-4).unwrap() / 1e-4;
        assert!((0.49..=0.51).contains(&r));
        assert!(cone_density_exact(100.0).unwrap() >= 1.0 - 1e-6);
        assert!(cone_density_exact(0.0).is_err());
    }

    #[test]
    fn ratio_decreases_towards_one_half() {
        let lambdas = [0.5, 0.2, 0.1, 0.05, 0.01, 1e-3, 1e-4];
        let ratios: Vec<f64> = lambdas.iter().map(|&l| cone_density_exact(l).unwrap() / l).collect();
        for w in ratios.windows(2) {
            assert!(w[1] < w[0]);
            assert!(w[1] > 0.5);
        }
    }

    #[test]
    fn cone_bounds_sandwich_exact() {
        for lambda in [0.01, 0.05, 0.1, 0.2, 0.3, 0.5] {
            let lo = cone_density_lower(lambda).unwrap();
            let ex = cone_density_exact(lambda).unwrap();
            let hi = cone_density_upper(lambda).unwrap();
            assert!(lo <= ex && ex <= hi, "λ={lambda}: {lo} {ex} {hi}");
        }
    }

    #[test]
    fn cone_bound_values() {
        // direct 30-digit evaluation of the closed forms
        assert!((cone_density_upper(0.1).unwrap() - 0.052_585_458_748_067_12).abs() < 1e-15);
        assert!((cone_density_upper(1e-4).unwrap() / 5e-5 - 1.0).abs() < 0.01);
        assert!((cone_density_lower(0.5).unwrap() - 0.185_151_092_693_716_1).abs() < 1e-15);
        assert!(cone_density_lower(0.5).unwrap() < cone_density_upper(0.5).unwrap());
        let r = cone_density_lower(1e-4).unwrap() / 1e-4;
        assert!((0.45..=0.5).contains(&r), "{r}");
        assert!(cone_density_lower(1.0).is_err());
    }

    #[test]
    fn parabola_bound_values() {
        let v = parabola_density_upper(0.04).unwrap();
        assert!((v - 0.4373).abs() < 5e-5, "{v}");
        let pi = std::f64::consts::PI;
        let lead = 3.0 * (0.01 / pi).sqrt() / (1.0 - 2.0 * (0.01 / pi).sqrt());
        assert!((parabola_density_upper(0.01).unwrap() / lead - 1.0).abs() < 1e-3);
        for lambda in [1e-4, 1e-5, 1e-6] {
            let r = parabola_density_upper(lambda).unwrap() / (3.0 * (lambda / pi).sqrt());
            assert!((r - 1.0).abs() < 0.05);
        }
        assert!(parabola_density_upper(pi / 4.0).is_err());
    }

    #[test]
    fn steep_cone_every_site_is_a_contact() {
        let est = empirical_density(&ShapeModel::cone(100.0).unwrap(), 2000, 4, 1).unwrap();
        assert!(est.p_hat >= 0.999);
    }

    #[test]
    fn empty_interior_is_rejected() {
        let r = empirical_density(&ShapeModel::cone(0.01).unwrap(), 100, 2, 1);
        assert!(r.is_err());
    }

    #[test]
    fn estimate_independent_of_thread_count() {
        let shape = ShapeModel::parabola(0.1).unwrap();
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = one.install(|| empirical_density(&shape, 5000, 12, 9).unwrap());
        let b = four.install(|| empirical_density(&shape, 5000, 12, 9).unwrap());
        assert_eq!(a.p_hat.to_bits(), b.p_hat.to_bits());
        assert_eq!(a.se.to_bits(), b.se.to_bits());
    }
}
