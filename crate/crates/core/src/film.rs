//! Thermal SOS film over a quenched substrate.
//!
//! The film has energy `H2 = J2 Σ |h_i - h_{i+1}| + K2 Σ h_i` at `kT = 1`
//! with the hard constraint `h2_i >= h1_i`, periodic boundary, and is
//! sampled by sequential exact heat-bath sweeps.

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::necklace::{envelope_bruteforce, periodic_contact_set};
use crate::seed::rng_from_seed;
use crate::shapes::{ShapeKind, ShapeModel};
use crate::stats::{median, Estimate, Welford};
use crate::substrate::{heat_bath_sweep, Boundary, Substrate};

pub const DEFAULT_BATCHES: usize = 20;
pub const DEFAULT_EXCLUSION: f64 = 1.0;
/// Apex spacing of the sampled envelope used when a gap has no two-point shape.
pub const FALLBACK_GRID_STEP: f64 = 0.01;

#[derive(Debug, Clone)]
pub struct FilmState {
    substrate: Substrate,
    j2: f64,
    k2: f64,
    h2: Vec<f64>,
    sweeps: usize,
    measured: usize,
    sums: Vec<f64>,
    batches: Vec<Vec<f64>>,
    min_clearance: Vec<f64>,
    max_height: Vec<f64>,
    mean_height: Estimate,
}

impl FilmState {
    pub fn substrate(&self) -> &Substrate {
        &self.substrate
    }

    pub fn j2(&self) -> f64 {
        self.j2
    }

    pub fn k2(&self) -> f64 {
        self.k2
    }

    /// Final configuration.
    pub fn heights(&self) -> &[f64] {
        &self.h2
    }

    /// Total sweeps performed, burn-in included.
    pub fn sweeps(&self) -> usize {
        self.sweeps
    }

    pub fn measured_sweeps(&self) -> usize {
        self.measured
    }

    /// Thermal average `h̄2_i`.
    pub fn averages(&self) -> Vec<f64> {
        self.sums.iter().map(|s| s / self.measured as f64).collect()
    }

    /// Standard error of each `h̄2_i` from batch means.
    pub fn average_se(&self) -> Vec<f64> {
        (0..self.h2.len())
            .map(|i| {
                let mut w = Welford::default();
                self.batches.iter().for_each(|b| w.push(b[i]));
                w.se()
            })
            .collect()
    }

    /// Smallest `h2_i - h1_i` seen at each site during measurement.
    pub fn min_clearance(&self) -> &[f64] {
        &self.min_clearance
    }

    pub fn max_height(&self) -> &[f64] {
        &self.max_height
    }

    /// Spatial mean of `h̄2` with a batch-means error bar.
    pub fn mean_height(&self) -> Estimate {
        self.mean_height
    }
}

/// Runs `burn_in` discarded sweeps and `measure` measured sweeps.
///
/// The film starts at `h1_i + Exponential(k2)`. Measured sweeps are split
/// into `DEFAULT_BATCHES` consecutive batches for error bars.
pub fn film_heat_bath_run(substrate: &Substrate, j2: f64, k2: f64, burn_in: usize, measure: usize, seed: u64) -> Result<FilmState> {
    if substrate.boundary() != Boundary::Periodic {
        return Err(invalid("the film needs a periodic substrate"));
    }
    if !(j2 >= 0.0 && j2.is_finite()) {
        return Err(invalid(format!("j2 must be >= 0, got {j2}")));
    }
    if !(k2 > 0.0 && k2.is_finite()) {
        return Err(invalid(format!("k2 must be > 0, got {k2}")));
    }
    if measure < 2 {
        return Err(invalid("need at least 2 measurement sweeps"));
    }
    let h1 = substrate.heights();
    let n = h1.len();
    let mut rng = rng_from_seed(seed);
    let mut h2: Vec<f64> = h1
        .iter()
        .map(|&f| f + rand_distr::Distribution::<f64>::sample(&rand_distr::Exp1, &mut rng) / k2)
        .collect();
    for _ in 0..burn_in {
        heat_bath_sweep(&mut h2, Some(h1), j2, k2, &mut rng);
    }

    let batch_count = DEFAULT_BATCHES.min(measure);
    let batch_len = measure / batch_count;
    let mut sums = vec![0.0; n];
    // the last batch absorbs the remainder
    let mut batches = vec![vec![0.0; n]; batch_count];
    let mut batch_sizes = vec![0usize; batch_count];
    let mut min_clearance = vec![f64::INFINITY; n];
    let mut max_height = vec![f64::NEG_INFINITY; n];
    for sweep in 0..measure {
        heat_bath_sweep(&mut h2, Some(h1), j2, k2, &mut rng);
        let b = (sweep / batch_len).min(batch_count - 1);
        batch_sizes[b] += 1;
        for i in 0..n {
            let h = h2[i];
            sums[i] += h;
            batches[b][i] += h;
            min_clearance[i] = min_clearance[i].min(h - h1[i]);
            max_height[i] = max_height[i].max(h);
        }
    }
    for (b, &size) in batches.iter_mut().zip(&batch_sizes) {
        b.iter_mut().for_each(|v| *v /= size as f64);
    }

    let mut spatial = Welford::default();
    for b in &batches {
        spatial.push(b.iter().sum::<f64>() / n as f64);
    }
    let mean_height = Estimate {
        value: sums.iter().sum::<f64>() / (n * measure) as f64,
        se: spatial.se(),
    };
    Ok(FilmState {
        substrate: substrate.clone(),
        j2,
        k2,
        h2,
        sweeps: burn_in + measure,
        measured: measure,
        sums,
        batches,
        min_clearance,
        max_height,
        mean_height,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvelopeSource {
    /// Two-point shapes between the periodic contacts.
    Necklace,
    /// Lowered shapes on an apex grid; used when some gap is wider than
    /// the shape's support.
    Sampled,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeviationStats {
    pub sites: usize,
    pub median_abs: f64,
    pub mean: f64,
    pub max_abs: f64,
}

impl DeviationStats {
    fn from(d: &[f64]) -> Self {
        let abs: Vec<f64> = d.iter().map(|x| x.abs()).collect();
        DeviationStats {
            sites: d.len(),
            median_abs: median(&abs).unwrap_or(f64::NAN),
            mean: if d.is_empty() { f64::NAN } else { d.iter().sum::<f64>() / d.len() as f64 },
            max_abs: abs.iter().copied().fold(f64::NAN, f64::max),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DeviationReport {
    pub envelope_source: EnvelopeSource,
    pub contacts: usize,
    pub exclusion_threshold: f64,
    pub h1: Vec<f64>,
    pub h2_avg: Vec<f64>,
    pub envelope: Vec<f64>,
    /// `h̄2_i - I(i)`.
    pub deviation: Vec<f64>,
    /// Sites where no lowered shape reaches; always zero for the necklace.
    pub uncovered: usize,
    pub all: DeviationStats,
    /// Sites with `I(i) - h1_i >= exclusion_threshold`.
    pub outside_exclusion: DeviationStats,
    pub mean_film_height: Estimate,
}

/// Compares the thermal average of `film` with the periodic necklace of
/// its substrate built from `shape`.
pub fn compare_film_to_necklace(film: &FilmState, shape: &ShapeModel, exclusion_threshold: f64) -> Result<DeviationReport> {
    let profile = match shape.kind() {
        ShapeKind::SosWulff => shape.profile().expect("sos shape has a profile"),
        other => return Err(invalid(format!("the film comparison needs an sos_wulff shape, got {other}"))),
    };
    let same = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs());
    if !same(profile.j2(), film.j2) || !same(profile.k2(), film.k2) {
        return Err(invalid(format!(
            "shape built for j2={}, k2={} but the film used j2={}, k2={}",
            profile.j2(),
            profile.k2(),
            film.j2,
            film.k2
        )));
    }
    if exclusion_threshold.is_nan() || exclusion_threshold < 0.0 {
        return Err(invalid(format!("exclusion threshold must be >= 0, got {exclusion_threshold}")));
    }

    let substrate = &film.substrate;
    let h1 = substrate.heights();
    let n = h1.len();
    let necklace = periodic_contact_set(substrate, shape)
        .and_then(|nk| Ok((nk.envelope_at_sites()?, nk.contacts().len())));
    let (envelope, contacts, source) = match necklace {
        Ok((env, contacts)) => (env, contacts, EnvelopeSource::Necklace),
        Err(Error::UnreachablePair { .. }) => {
            let tiled: Vec<f64> = h1.iter().chain(h1).chain(h1).copied().collect();
            let tiled = Substrate::from_heights(tiled, Boundary::Window)?;
            let sampled = envelope_bruteforce(&tiled, shape, FALLBACK_GRID_STEP)?;
            let env: Vec<f64> = (0..n).map(|i| sampled.eval((i + n) as f64)).collect();
            let contacts = env.iter().zip(h1).filter(|(e, h)| (*e - *h).abs() <= 1e-9).count();
            (env, contacts, EnvelopeSource::Sampled)
        }
        Err(e) => return Err(e),
    };

    let h2_avg = film.averages();
    let deviation: Vec<f64> = h2_avg.iter().zip(&envelope).map(|(a, e)| a - e).collect();
    let finite: Vec<f64> = deviation.iter().copied().filter(|d| d.is_finite()).collect();
    let outside: Vec<f64> = (0..n)
        .filter(|&i| envelope[i].is_finite() && envelope[i] - h1[i] >= exclusion_threshold)
        .map(|i| deviation[i])
        .collect();
    Ok(DeviationReport {
        envelope_source: source,
        contacts,
        exclusion_threshold,
        h1: h1.to_vec(),
        h2_avg,
        envelope,
        uncovered: n - finite.len(),
        all: DeviationStats::from(&finite),
        outside_exclusion: DeviationStats::from(&outside),
        deviation,
        mean_film_height: film.mean_height,
    })
}
