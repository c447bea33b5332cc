//! Local Gibbs factors for the finite-volume necklace.
//!
//! On the window `[0, L]` the necklace is encoded as `N >= 1` gaps
//! `l_1..l_N` summing to `L` and contact heights `x_0..x_N`. With
//!
//! ```text
//! F(x_0, l_1, x_1)            = Π_{i=1}^{l_1-1} P(h < W(0, x_0, l_1, x_1; i))
//! G(x_{-1}, l_0, x_0, l_1, x_1) = 1{x_0 >= W(-l_0, x_{-1}, l_1, x_1; 0)}
//! ```
//!
//! the pattern has density `Π e^{-x_n} Π F Π G`, and the partition function
//! sums it over every composition of `L`.

use rayon::prelude::*;
use rand_distr::{Distribution, Exp1};
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::necklace::{contact_sites, Algorithm};
use crate::seed::stream_rng;
use crate::shapes::ShapeModel;
use crate::stats::{Estimate, Welford};
use crate::substrate::iid_exponential_heights;

/// Draws per parallel block; fixes the index-to-stream mapping.
const BLOCK: usize = 4096;
pub const MAX_PARTITION_L: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GibbsPattern {
    gaps: Vec<usize>,
    heights: Vec<f64>,
}

impl GibbsPattern {
    pub fn new(gaps: Vec<usize>, heights: Vec<f64>) -> Result<Self> {
        if gaps.is_empty() {
            return Err(invalid("a pattern needs at least one gap"));
        }
        if gaps.contains(&0) {
            return Err(invalid("gaps must be positive"));
        }
        if heights.len() != gaps.len() + 1 {
            return Err(invalid(format!(
                "{} gaps need {} heights, got {}",
                gaps.len(),
                gaps.len() + 1,
                heights.len()
            )));
        }
        if heights.iter().any(|&x| !(x >= 0.0 && x.is_finite())) {
            return Err(invalid("heights must be finite and nonnegative"));
        }
        Ok(GibbsPattern { gaps, heights })
    }

    pub fn n(&self) -> usize {
        self.gaps.len()
    }

    pub fn length(&self) -> usize {
        self.gaps.iter().sum()
    }

    pub fn gaps(&self) -> &[usize] {
        &self.gaps
    }

    pub fn heights(&self) -> &[f64] {
        &self.heights
    }
}

/// Probability that iid Exponential(1) heights at the `l1 - 1` sites
/// between two contacts all stay below the shape hung from them.
pub fn factor_f(shape: &ShapeModel, x0: f64, l1: usize, x1: f64) -> Result<f64> {
    if l1 == 0 {
        return Err(invalid("gap must be positive"));
    }
    if l1 == 1 {
        return Ok(1.0);
    }
    let tp = shape.two_point(0.0, x0, l1 as f64, x1)?;
    let mut f = 1.0;
    for i in 1..l1 {
        let w = tp.eval(i as f64)?;
        if w <= 0.0 {
            return Ok(0.0);
        }
        f *= -(-w).exp_m1();
    }
    Ok(f)
}

/// Local stability of the middle contact.
pub fn factor_g(shape: &ShapeModel, x_prev: f64, l0: usize, x0: f64, l1: usize, x_next: f64) -> Result<bool> {
    if l0 == 0 || l1 == 0 {
        return Err(invalid("gaps must be positive"));
    }
    let tp = shape.two_point(-(l0 as f64), x_prev, l1 as f64, x_next)?;
    Ok(x0 >= tp.eval(0.0)?)
}

/// `Π F · Π G` without the exponential prior.
fn factor_product(shape: &ShapeModel, gaps: &[usize], x: &[f64]) -> Result<f64> {
    let n = gaps.len();
    for m in 1..n {
        if !factor_g(shape, x[m - 1], gaps[m - 1], x[m], gaps[m], x[m + 1])? {
            return Ok(0.0);
        }
    }
    let mut w = 1.0;
    for m in 0..n {
        w *= factor_f(shape, x[m], gaps[m], x[m + 1])?;
        if w == 0.0 {
            break;
        }
    }
    Ok(w)
}

/// Unnormalised density of a pattern with respect to counting measure on
/// gaps and Lebesgue measure on heights.
pub fn gibbs_weight(shape: &ShapeModel, pattern: &GibbsPattern) -> Result<f64> {
    let prior: f64 = pattern.heights.iter().map(|x| (-x).exp()).product();
    Ok(prior * factor_product(shape, &pattern.gaps, &pattern.heights)?)
}

/// All compositions of `l` into positive parts, in lexicographic order.
pub fn compositions(l: usize) -> Vec<Vec<usize>> {
    fn rec(rest: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if rest == 0 {
            out.push(prefix.clone());
            return;
        }
        for first in 1..=rest {
            prefix.push(first);
            rec(rest - first, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if l > 0 {
        rec(l, &mut Vec::new(), &mut out);
    }
    out
}

fn check_length(l: usize) -> Result<()> {
    if l == 0 || l > MAX_PARTITION_L {
        return Err(invalid(format!("window length must be in 1..={MAX_PARTITION_L}, got {l}")));
    }
    Ok(())
}

/// Per-draw `Π F Π G` for every signature, averaged under the iid
/// Exponential(1) prior on heights. Row `s` of the result pairs with
/// `signatures[s]`; the last entry is the per-draw total.
fn prior_averages(shape: &ShapeModel, signatures: &[Vec<usize>], mc_samples: usize, seed: u64) -> Result<Vec<Welford>> {
    if mc_samples < 2 {
        return Err(invalid("need at least 2 Monte-Carlo samples"));
    }
    let heights_needed = signatures.iter().map(|s| s.len() + 1).max().unwrap_or(1);
    let blocks = mc_samples.div_ceil(BLOCK);
    let per_block: Vec<Vec<Welford>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream_rng(seed, b as u64);
            let count = BLOCK.min(mc_samples - b * BLOCK);
            let mut acc = vec![Welford::default(); signatures.len() + 1];
            let mut x = vec![0.0; heights_needed];
            for _ in 0..count {
                x.iter_mut().for_each(|v| *v = Exp1.sample(&mut rng));
                let mut total = 0.0;
                for (sig, a) in signatures.iter().zip(acc.iter_mut()) {
                    let w = factor_product(shape, sig, &x[..sig.len() + 1])?;
                    a.push(w);
                    total += w;
                }
                acc[signatures.len()].push(total);
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    let mut acc = vec![Welford::default(); signatures.len() + 1];
    for block in &per_block {
        for (a, b) in acc.iter_mut().zip(block) {
            a.merge(b);
        }
    }
    Ok(acc)
}

/// Monte-Carlo estimate of the partition function on `[0, L]`.
pub fn partition_function(shape: &ShapeModel, l: usize, mc_samples: usize, seed: u64) -> Result<Estimate> {
    check_length(l)?;
    let sigs = compositions(l);
    let acc = prior_averages(shape, &sigs, mc_samples, seed)?;
    Ok(acc[sigs.len()].estimate())
}

/// Probability of one gap signature, heights integrated out.
pub fn pattern_probability(shape: &ShapeModel, l: usize, signature: &[usize], mc_samples: usize, seed: u64) -> Result<Estimate> {
    if signature.is_empty() || signature.contains(&0) || signature.iter().sum::<usize>() != l {
        return Err(invalid(format!("signature {signature:?} is not a composition of {l}")));
    }
    let acc = prior_averages(shape, &[signature.to_vec()], mc_samples, seed)?;
    Ok(acc[0].estimate())
}

#[derive(Debug, Clone, Serialize)]
pub struct SignatureProbability {
    pub gaps: Vec<usize>,
    pub gibbs: Estimate,
}

/// Probabilities of every signature of `[0, L]` from one shared set of
/// draws, together with their sum (the partition function).
pub fn signature_probabilities(shape: &ShapeModel, l: usize, mc_samples: usize, seed: u64) -> Result<(Estimate, Vec<SignatureProbability>)> {
    check_length(l)?;
    let sigs = compositions(l);
    let acc = prior_averages(shape, &sigs, mc_samples, seed)?;
    let probs = sigs
        .into_iter()
        .zip(&acc)
        .map(|(gaps, a)| SignatureProbability { gaps, gibbs: a.estimate() })
        .collect();
    Ok((acc[acc.len() - 1].estimate(), probs))
}

/// Frequencies of each gap signature of `[0, L]` among `substrates`
/// directly simulated iid-exponential windows of `L + 1` sites, in the
/// order of [`compositions`].
pub fn empirical_signature_frequencies(shape: &ShapeModel, l: usize, substrates: usize, seed: u64) -> Result<Vec<(Vec<usize>, Estimate)>> {
    check_length(l)?;
    if substrates == 0 {
        return Err(invalid("need at least one substrate"));
    }
    let sigs = compositions(l);
    let index_of = |gaps: &[usize]| sigs.iter().position(|s| s.as_slice() == gaps);
    let blocks = substrates.div_ceil(BLOCK);
    let per_block: Vec<Vec<u64>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream_rng(seed, b as u64);
            let count = BLOCK.min(substrates - b * BLOCK);
            let mut hits = vec![0u64; sigs.len()];
            for _ in 0..count {
                let h = iid_exponential_heights(l + 1, &mut rng)?;
                let sites = contact_sites(&h, shape, Algorithm::Auto)?;
                let gaps: Vec<usize> = sites.windows(2).map(|w| w[1] - w[0]).collect();
                let idx = index_of(&gaps).expect("contacts always include both endpoints");
                hits[idx] += 1;
            }
            Ok(hits)
        })
        .collect::<Result<_>>()?;
    let mut hits = vec![0u64; sigs.len()];
    for block in &per_block {
        for (h, b) in hits.iter_mut().zip(block) {
            *h += b;
        }
    }
    let total = substrates as f64;
    Ok(sigs
        .into_iter()
        .zip(hits)
        .map(|(s, c)| {
            let p = c as f64 / total;
            (s, Estimate { value: p, se: (p * (1.0 - p) / total).sqrt() })
        })
        .collect())
}
