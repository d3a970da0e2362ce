//! Distributed occupancy-grid mapping for robot swarms.
//!
//! The crate provides the full pipeline for a swarm of range-sensing robots
//! that map an unknown 2D environment:
//!
//! * [`grid`] — occupancy grids, map metrics (entropy, coverage, error,
//!   consensus spread) and PGM import/export,
//! * [`sensor`] — beam casting, the Gaussian forward range model, the range
//!   marginal along a beam and the heuristic inverse sensor model,
//! * [`explore`] — information-correlated Levy walks: truncated power-law
//!   step lengths, per-beam mutual information and heading selection,
//! * [`consensus`] — geometric-mean map fusion over a time-varying pairwise
//!   interaction schedule, with its log-domain consensus dynamics and the
//!   predicted per-cell limits,
//! * [`tda`] — persistent homology of cubical sublevel filtrations and
//!   adaptive occupancy thresholds read off the barcode,
//! * [`sim`] — a deterministic, seeded world simulator tying it together.
//!
//! All probability math is generic over the scalar type through the [`Real`]
//! trait; concrete `f64` aliases are exported at the crate root and are what
//! the simulator and CLI use.

use std::fmt;
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FromPrimitive};

pub mod consensus;
pub mod error;
pub mod explore;
pub mod fixtures;
pub mod grid;
pub mod pgm;
pub mod sensor;
pub mod sim;
pub mod tda;
pub mod util;

pub use error::{Error, Result};

/// Scalar type used by the probability and information math.
///
/// Implemented for `f32` and `f64`. The blanket impl keeps the bound list in
/// one place; modules only ever write `R: Real`.
pub trait Real:
    Float
    + FromPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum
    + fmt::Debug
    + fmt::Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Lift an `f64` constant into the scalar type.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("constant not representable in scalar type")
    }

    /// Base-2 logarithm.
    fn log2r(self) -> Self {
        self.log2()
    }
}

impl<T> Real for T where
    T: Float
        + FromPrimitive
        + AddAssign
        + SubAssign
        + MulAssign
        + DivAssign
        + Sum
        + fmt::Debug
        + fmt::Display
        + Default
        + Send
        + Sync
        + 'static
{
}

/// Default clamping floor for occupancy probabilities.
///
/// The multiplicative measurement update drives free-cell probabilities
/// toward zero; the floor keeps them strictly positive so the log-domain
/// consensus dynamics stay defined.
pub const DEFAULT_P_MIN: f64 = 1e-3;

/// Default cap on per-cell measurement updates. Once a cell has absorbed this
/// many scan updates, further measurement factors are ignored (map sharing is
/// never capped).
pub const DEFAULT_MEAS_CAP: u32 = 20;

/// Occupancy grid over `f64`, the scalar used by the simulator and CLI.
pub type Grid = grid::OccupancyGrid<f64>;
/// Sensor specification over `f64`.
pub type Sensor = sensor::SensorSpec<f64>;
/// Inverse-model parameters over `f64`.
pub type InverseModel = sensor::InverseModelParams<f64>;
/// Levy step-length parameters over `f64`.
pub type Levy = explore::LevyParams<f64>;
