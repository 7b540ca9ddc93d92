//! Multi-loop disk margins.
//!
//! Independent disk perturbations `f_i ∈ D(α, σ)` in several channels
//! are pulled out into a diagonal `Δ`, leaving the stable system
//! `M = S + (σ-1)/2 I` seen at the perturbation points. The loop is
//! destabilized exactly when `det(I - M(jω)Δ) = 0`, so the margin is the
//! reciprocal of the peak structured singular value of `M`.

mod bounds;
mod multiloop;

pub use bounds::{mu_diag, mu_diag_seeded, MuResult, DEFAULT_SEED};
pub use multiloop::{
    build_m, build_m_from_loop, loop_at_a_time, loop_at_a_time_margins, multiloop_margin, multiloop_margin_with,
    verify_multiloop_destabilizing, AnalysisPoints, LoopLocation, MDeltaSystem, MultiLoopOptions, MultiLoopResult,
    MultiLoopVerification,
};
