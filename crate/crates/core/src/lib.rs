//! Films over one-dimensional random substrates modelled as a necklace of
//! Wulff shapes.
//!
//! The crate is organised bottom-up:
//!
//! * [`shapes`]: symmetric convex profiles `W(x)` (cone, parabola,
//!   semicircle and the tabulated solid-on-solid Wulff shape) and the
//!   two-point translates hanging between substrate points.
//! * [`substrate`]: iid exponential and heat-bath SOS substrates.
//! * [`necklace`]: the envelope `I(x)` and its contact set, with fast stack /
//!   hull / tent algorithms and brute-force oracles.
//! * [`density`]: the exact contact density for the cone, closed-form bounds,
//!   and Monte-Carlo density estimates.
//! * [`gibbs`]: local Gibbs factors, finite-volume weights and the partition
//!   function.
//! * [`film`]: heat-bath Monte-Carlo of an SOS film over a quenched substrate
//!   and its comparison with the necklace.

pub mod density;
pub mod error;
pub mod film;
pub mod gibbs;
pub mod heat_bath;
pub mod necklace;
pub mod quadrature;
pub mod seed;
pub mod shapes;
pub mod stats;
pub mod substrate;

pub use error::{Error, Result};
pub use necklace::Necklace;
pub use shapes::{ShapeKind, ShapeModel, TwoPointShape, WulffProfile};
pub use substrate::{Boundary, Substrate};
