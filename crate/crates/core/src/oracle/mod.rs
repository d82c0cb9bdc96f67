//! Exact quenched computations on finite state spaces.

mod birth_death;
mod survival;
mod tuple;

pub use birth_death::{
    hit_before, invariant_measure, spectral_gap, spectral_gap_capped, ReflectedInterval, DEFAULT_GAP_CAP,
};
pub use survival::{
    exact_survival, exact_survival_grid, exact_survival_with, tail_exponent, Backend, OracleLimits,
    SurvivalOptions, SurvivalRecord, TailExponent,
};
pub use tuple::{PairGrid, TupleChain};
