//! Disk margins.
//!
//! A loop perturbation `f` is drawn from the set
//!
//! ```text
//! D(α, σ) = { (2 + (1-σ)δ) / (2 - (1+σ)δ) : |δ| < α }
//! ```
//!
//! which always contains the nominal `f = 1` and is bounded by a circle
//! centred on the real axis. `σ` skews the set towards gain increase
//! (`σ > 0`) or decrease (`σ < 0`).

mod geometry;
mod margin;
mod perturb;

pub use geometry::{
    disk_geometry, gain_phase_tradeoff, guaranteed_margins, nyquist_exclusion, perturbation_of, safe_region_curve,
    DiskGeometry, DiskKind, DiskSpec, ExclusionDisk, TradeoffQuery, TradeoffRange,
};
pub(crate) use margin::shifted_sensitivity;
pub use margin::{
    disk_margin, disk_margin_with_tol, freq_margin_trace, guaranteed_gm_pm, DiskMarginResult, MarginTrace,
};
pub use perturb::{
    all_pass_realization, verify_destabilizing, worst_perturbation_lti, LoopFactor, PerturbationLti, Verdict,
    VerificationReport,
};
