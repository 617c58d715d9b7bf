//! Multi-source adaptation toolkit.
//!
//! * [`minimax`]: stochastic corrected gradient descent-ascent for mixture
//!   weights over source domains, with the stationary-gap measure.
//! * [`coerm`]: projected-GD solver for `alpha`-weighted ERMs and batch
//!   solving of many of them.
//! * [`wstar_net`]: a two-layer ReLU network trained by bilevel GD to
//!   predict `w*(alpha)`.
//! * [`online`]: label-efficient online nonparametric regression of
//!   `w*(alpha)` over the simplex.
//!
//! [`domains`] supplies loss models and synthetic instances (including
//! quadratic suites with closed-form `w*(alpha)`); [`primitives`] the
//! projections, smoothing function and seeded streams.

// `!(x > 0.0)` style guards are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod coerm;
pub mod domains;
pub mod error;
pub mod minimax;
pub mod online;
pub mod parallel;
pub mod primitives;
pub mod wstar_net;

pub use error::{Error, Result};
pub use parallel::Exec;
pub use primitives::{MixtureWeights, ModelParams, RngStream, SmoothAbs};
