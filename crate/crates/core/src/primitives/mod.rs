//! Numeric building blocks shared by every solver: projections onto the
//! probability simplex and the parameter ball, the smoothed absolute value,
//! seeded random streams and small dense-vector helpers.

pub(crate) mod ball;
mod rng;
mod simplex;
mod smooth;
pub mod vector;

pub use ball::{project_ball, ModelParams, DEFAULT_DOMAIN_RADIUS};
pub use rng::{sample_dirichlet, RngStream};
pub use simplex::{project_simplex, MixtureWeights, SIMPLEX_TOLERANCE};
pub use smooth::SmoothAbs;
