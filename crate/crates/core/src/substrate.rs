//! Random substrates: iid exponential heights and heat-bath SOS chains.

use rand_distr::{Distribution, Exp1};
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::heat_bath::Conditional;
use crate::seed::{rng_from_seed, SimRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    /// Finite window; nothing exists outside.
    Window,
    /// Site `n` is site `0`.
    Periodic,
}

/// Parameters of the substrate Hamiltonian
/// `H1 = J1 Σ |h_i - h_{i+1}| + K1 Σ h_i` and the sweep schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SosParams {
    pub j1: f64,
    pub k1: f64,
    pub sweeps: usize,
    pub burn_in: usize,
}

impl SosParams {
    pub const DEFAULT_BURN_IN: usize = 100;

    pub fn new(j1: f64, k1: f64) -> Self {
        SosParams {
            j1,
            k1,
            sweeps: 1,
            burn_in: Self::DEFAULT_BURN_IN,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.j1 >= 0.0 && self.j1.is_finite()) {
            return Err(invalid(format!("j1 must be >= 0, got {}", self.j1)));
        }
        if !(self.k1 > 0.0 && self.k1.is_finite()) {
            return Err(invalid(format!("k1 must be > 0, got {}", self.k1)));
        }
        if self.sweeps == 0 {
            return Err(invalid("sweeps must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "generator", rename_all = "snake_case")]
pub enum Provenance {
    IidExponential { seed: u64 },
    Sos { params: SosParams, seed: u64 },
    Explicit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Substrate {
    heights: Vec<f64>,
    boundary: Boundary,
    provenance: Provenance,
}

impl Substrate {
    pub fn from_heights(heights: Vec<f64>, boundary: Boundary) -> Result<Self> {
        Self::with_provenance(heights, boundary, Provenance::Explicit)
    }

    fn with_provenance(heights: Vec<f64>, boundary: Boundary, provenance: Provenance) -> Result<Self> {
        if heights.len() < 2 {
            return Err(invalid(format!(
                "a substrate needs at least 2 sites, got {}",
                heights.len()
            )));
        }
        if let Some((i, h)) = heights
            .iter()
            .enumerate()
            .find(|(_, h)| !(**h >= 0.0 && h.is_finite()))
        {
            return Err(invalid(format!("height {h} at site {i} is not a finite nonnegative number")));
        }
        Ok(Substrate {
            heights,
            boundary,
            provenance,
        })
    }

    pub fn heights(&self) -> &[f64] {
        &self.heights
    }

    pub fn len(&self) -> usize {
        self.heights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heights.is_empty()
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn with_boundary(mut self, boundary: Boundary) -> Self {
        self.boundary = boundary;
        self
    }

    /// Periodic rotation by `shift` sites: new site `i` holds old site
    /// `i - shift (mod n)`.
    pub fn rotated(&self, shift: usize) -> Substrate {
        let mut heights = self.heights.clone();
        heights.rotate_right(shift % self.len());
        Substrate {
            heights,
            boundary: self.boundary,
            provenance: Provenance::Explicit,
        }
    }
}

/// `n` iid Exponential(1) heights in window mode.
pub fn gen_iid_exponential(n: usize, seed: u64) -> Result<Substrate> {
    let mut rng = rng_from_seed(seed);
    let heights = iid_exponential_heights(n, &mut rng)?;
    Substrate::with_provenance(heights, Boundary::Window, Provenance::IidExponential { seed })
}

pub(crate) fn iid_exponential_heights(n: usize, rng: &mut SimRng) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(invalid(format!("a substrate needs at least 2 sites, got {n}")));
    }
    Ok((0..n).map(|_| Exp1.sample(rng)).collect())
}

/// One sequential heat-bath sweep over a periodic SOS chain with a per-site
/// lower bound.
pub(crate) fn heat_bath_sweep(
    heights: &mut [f64],
    floors: Option<&[f64]>,
    coupling: f64,
    field: f64,
    rng: &mut SimRng,
) {
    let n = heights.len();
    for i in 0..n {
        let cond = Conditional {
            left: heights[(i + n - 1) % n],
            right: heights[(i + 1) % n],
            coupling,
            field,
            floor: floors.map_or(0.0, |f| f[i]),
        };
        heights[i] = cond.sample(rng);
    }
}

/// SOS substrate under `H1` at `kT = 1` with periodic boundary.
///
/// Starts from iid Exponential(rate `k1`) heights, runs `burn_in` discarded
/// sweeps and then `sweeps` more, returning the final configuration.
pub fn gen_sos_substrate(n: usize, params: SosParams, seed: u64) -> Result<Substrate> {
    params.validate()?;
    let mut rng = rng_from_seed(seed);
    let mut heights: Vec<f64> = iid_exponential_heights(n, &mut rng)?
        .into_iter()
        .map(|h| h / params.k1)
        .collect();
    for _ in 0..params.burn_in + params.sweeps {
        heat_bath_sweep(&mut heights, None, params.j1, params.k1, &mut rng);
    }
    Substrate::with_provenance(heights, Boundary::Periodic, Provenance::Sos { params, seed })
}
