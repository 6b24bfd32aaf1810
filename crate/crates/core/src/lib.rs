pub mod dop;
pub mod expansion;
pub mod quad;
pub mod scalar;
pub mod symbolic;
pub mod ladder;
pub mod lattice;
pub mod rng;
pub mod ruin;
pub mod stats;
pub mod step;
pub mod tail;
