//! Deterministic analysis of a potential landscape.

mod cascade;
mod diagnostics;
mod functional;
mod stable;

pub use cascade::{
    construct_cascade, elevation_excess, update_identity_residuals, CascadeLevel, CascadeStep,
    CascadeTrace, StepRule,
};
pub use diagnostics::{t_good_diagnostics, DiagnosticsReport, GoodnessMetrics};
pub use functional::{barrier_h, elevation, zeta, zeta_detail, Barrier, ZetaDetail};
pub use stable::{first_stable_point, stable_points, wells, StableDecomposition};
