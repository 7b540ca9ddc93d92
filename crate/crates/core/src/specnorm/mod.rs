//! H∞ norm with peak frequency, and frequency grids.

mod grid;
mod hinf;

pub use grid::{default_grid, FrequencyGrid};
pub use hinf::{gain_at, hinf_norm, hinf_norm_ss, PeakGain, DEFAULT_TOL};
