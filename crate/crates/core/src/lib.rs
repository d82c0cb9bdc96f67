//! Meeting times of independent random walks in a one-dimensional random
//! environment in the recurrent (Sinai) regime, reflected at the origin.
//!
//! * [`env`]: environment laws, generation, the potential, Brownian landscapes.
//! * [`landscape`]: stable points and wells, elevation, barriers, the depth
//!   functional `zeta` and the multiscale cascade.
//! * [`simulate`]: exact event-driven simulation of the walks and survival curves.
//! * [`oracle`]: exact quenched computations on finite state spaces.
//! * [`lawcheck`]: the limiting law of `zeta` and Kolmogorov-Smirnov tests.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod env;
pub mod error;
pub mod landscape;
pub mod lawcheck;
pub mod oracle;
pub mod rng;
pub mod simulate;

pub use error::{Error, Result};
