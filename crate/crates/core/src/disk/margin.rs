use alloc::vec::Vec;

use num_complex::Complex64;

use super::geometry::{disk_geometry, perturbation_of, phase_from_intercepts};
use super::{DiskGeometry, DiskSpec, TradeoffQuery, TradeoffRange};
use crate::lti::{is_stable, sensitivity_pair, LtiModel, System};
use crate::specnorm::{hinf_norm, FrequencyGrid};
use crate::{Error, Result};

/// Norm tolerance used by [`disk_margin`].
pub const DISK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct DiskMarginResult {
    /// `alpha` is the disk margin `α_max`.
    pub spec: DiskSpec,
    /// `‖S + (σ-1)/2‖∞`, the reciprocal of `α_max`.
    pub peak_gain: f64,
    /// rad/s, possibly [`crate::OMEGA_INF`].
    pub omega_crit: f64,
    /// Smallest destabilizing uncertainty, `|δ0| = α_max`.
    pub delta0: Complex64,
    /// Destabilizing loop factor; `None` stands for `f0 = ∞` (the loop
    /// itself vanishes at `ω_crit`).
    pub f0: Option<Complex64>,
    pub geometry: DiskGeometry,
    pub guaranteed_gm: (f64, f64),
    /// Radians, `+∞` when every phase-only variation is tolerated.
    pub guaranteed_pm: f64,
}

impl DiskMarginResult {
    pub fn alpha(&self) -> f64 {
        self.spec.alpha
    }

    pub fn sigma(&self) -> f64 {
        self.spec.sigma
    }

    pub fn tradeoff(&self, query: TradeoffQuery) -> Result<TradeoffRange> {
        super::gain_phase_tradeoff(self.spec, query)
    }
}

/// `M = S + (σ-1)/2` for a square loop, after checking that the nominal
/// closed loop is well-posed and stable.
pub(crate) fn shifted_sensitivity(l: &LtiModel, sigma: f64) -> Result<LtiModel> {
    let (s, _) = sensitivity_pair(l).map_err(|e| match e {
        Error::AlgebraicLoop => Error::IllPosed,
        e => e,
    })?;
    if !is_stable(&s)? {
        return Err(Error::NominallyUnstable);
    }
    let shift = 0.5 * (sigma - 1.0);
    let m = match s.system() {
        System::Tf(t) => System::Tf(t.add_constant(shift)),
        System::Ss(g) => System::Ss(g.add_identity(shift)?),
    };
    Ok(LtiModel::negative(m))
}

/// Disk margin of a SISO loop for skew `σ`:
/// `α_max = 1 / ‖S + (σ-1)/2‖∞`.
pub fn disk_margin(l: &LtiModel, sigma: f64) -> Result<DiskMarginResult> {
    disk_margin_with_tol(l, sigma, DISK_TOL)
}

pub fn disk_margin_with_tol(l: &LtiModel, sigma: f64, tol: f64) -> Result<DiskMarginResult> {
    if !l.is_siso() {
        return Err(Error::Dimension("disk margin needs a SISO loop".into()));
    }
    if !sigma.is_finite() {
        return Err(Error::Domain("skew must be finite".into()));
    }
    let m = shifted_sensitivity(l, sigma)?;
    let peak = hinf_norm(&m, tol)?;
    let alpha = 1.0 / peak.value;
    let spec = DiskSpec::new(alpha, sigma);
    let geometry = disk_geometry(spec)?;

    let (delta0, f0) = if peak.value == 0.0 {
        let f = if 1.0 + sigma == 0.0 {
            None
        } else {
            Some(Complex64::new(-(1.0 - sigma) / (1.0 + sigma), 0.0))
        };
        (Complex64::new(f64::INFINITY, 0.0), f)
    } else {
        let mut d = Complex64::new(1.0, 0.0) / m.eval_siso(peak.frequency)?;
        if peak.frequency == 0.0 || peak.frequency.is_infinite() {
            d.im = 0.0;
        }
        (d, perturbation_of(d, sigma))
    };

    Ok(DiskMarginResult {
        spec,
        peak_gain: peak.value,
        omega_crit: peak.frequency,
        delta0,
        f0,
        geometry,
        guaranteed_gm: (geometry.gamma_min, geometry.gamma_max),
        guaranteed_pm: phase_from_intercepts(&geometry),
    })
}

/// `((γ_min, γ_max), φ_m)` guaranteed by a disk margin.
pub fn guaranteed_gm_pm(result: &DiskMarginResult) -> ((f64, f64), f64) {
    (result.guaranteed_gm, result.guaranteed_pm)
}

/// Frequency-dependent disk margin `α_max(ω) = |S(jω) + (σ-1)/2|^{-1}`
/// with the matching gain and phase guarantees. Samples that fall on a
/// pole of `S` hold `NaN` and are listed in `flagged`.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginTrace {
    pub grid: FrequencyGrid,
    pub sigma: f64,
    pub alpha_of_omega: Vec<f64>,
    pub gm_of_omega: Vec<(f64, f64)>,
    pub pm_of_omega: Vec<f64>,
    pub flagged: Vec<usize>,
}

impl MarginTrace {
    /// Weaker of the two gain guarantees, `min(1/γ_min, γ_max)`. An
    /// intercept at or below zero guarantees that whole side of the gain
    /// axis and counts as `+∞`.
    pub fn gamma_m(&self) -> Vec<f64> {
        let side = |x: f64| if x > 0.0 { x } else { f64::INFINITY };
        self.gm_of_omega
            .iter()
            .map(|&(lo, hi)| {
                if lo.is_nan() || hi.is_nan() {
                    f64::NAN
                } else {
                    side(1.0 / lo).min(side(hi))
                }
            })
            .collect()
    }

    /// Smallest sampled margin and its frequency.
    pub fn min_alpha(&self) -> Option<(f64, f64)> {
        self.alpha_of_omega
            .iter()
            .zip(self.grid.points())
            .filter(|(a, _)| !a.is_nan())
            .min_by(|a, b| a.0.total_cmp(b.0))
            .map(|(a, w)| (*a, *w))
    }
}

pub fn freq_margin_trace(l: &LtiModel, sigma: f64, grid: &FrequencyGrid) -> Result<MarginTrace> {
    if !l.is_siso() {
        return Err(Error::Dimension("margin trace needs a SISO loop".into()));
    }
    let m = shifted_sensitivity(l, sigma)?;
    let n = grid.len();
    let mut alpha = Vec::with_capacity(n);
    let mut gm = Vec::with_capacity(n);
    let mut pm = Vec::with_capacity(n);
    let mut flagged = Vec::new();
    for (i, &w) in grid.points().iter().enumerate() {
        let a = match m.eval_siso(w) {
            Ok(z) => 1.0 / z.norm(),
            Err(Error::PoleOnAxis(_)) => {
                flagged.push(i);
                alpha.push(f64::NAN);
                gm.push((f64::NAN, f64::NAN));
                pm.push(f64::NAN);
                continue;
            }
            Err(e) => return Err(e),
        };
        let g = disk_geometry(DiskSpec::new(a, sigma))?;
        alpha.push(a);
        gm.push((g.gamma_min, g.gamma_max));
        pm.push(phase_from_intercepts(&g));
    }
    Ok(MarginTrace {
        grid: grid.clone(),
        sigma,
        alpha_of_omega: alpha,
        gm_of_omega: gm,
        pm_of_omega: pm,
        flagged,
    })
}
