//! Solution trajectories of linear fractional-order systems `D^α X = A X`.
//!
//! The crate evaluates Mittag-Leffler functions and the matrix solution
//! operator `E_α(A t^α)`, builds sampled trajectories, relates a trajectory
//! restarted from `X(t₁)` to the original through `Y = T X`, and analyses the
//! resulting curves: planar Frenet apparatus, self-intersections, and the
//! rotation angle of `T` as a function of the order.

pub mod bifurcation;
pub mod cli;
pub mod error;
pub mod frenet;
pub mod gamma;
pub mod geometry;
pub mod matrix_ml;
pub mod mittag_leffler;
pub mod sum;
pub mod trajectory;

mod precise;

pub use error::{Error, Result};
pub use mittag_leffler::{FracOrder, MlSeriesResult, SeriesConfig};
