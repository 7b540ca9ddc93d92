use alloc::format;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_complex::Complex64;
#[cfg_attr(feature = "std", allow(unused_imports))]
use num_traits::Float;

use super::bounds::{mu_bounds, Effort, MuResult, DEFAULT_SEED};
use crate::classical::{classical_margins, ClassicalMargins};
use crate::disk::{
    all_pass_realization, disk_geometry, disk_margin, perturbation_of, shifted_sensitivity, DiskGeometry,
    DiskMarginResult, DiskSpec,
};
use crate::lti::{poles, scalar_close, ChannelFactor, LtiModel, StateSpace, System, MINREAL_TOL};
use crate::optim::golden_max;
use crate::specnorm::FrequencyGrid;
use crate::{Error, Result};

/// Where independent disk perturbations enter a `(P, K)` loop. The loop
/// is `u = -K y` with the sign-normalized controller.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AnalysisPoints {
    /// One perturbation per plant input.
    Input,
    /// One perturbation per plant output.
    Output,
    /// Plant inputs followed by plant outputs.
    InputOutput,
    /// Subset of the input-output channels (`0..n_u` are plant inputs,
    /// `n_u..n_u+n_y` plant outputs).
    Channels(Vec<usize>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoopLocation {
    Input,
    Output,
}

/// Stable `M = S + (σ-1)/2 I` at the perturbation points.
#[derive(Debug, Clone, PartialEq)]
pub struct MDeltaSystem {
    pub m: LtiModel,
    pub n: usize,
    pub sigma: f64,
    /// Negative-feedback loop at the perturbation points, kept for
    /// closing perturbed loops.
    pub loop_at_points: LtiModel,
    /// Channels of `loop_at_points` that carry perturbations.
    pub channels: Vec<usize>,
}

fn controller_loop(p: &LtiModel, k: &LtiModel, location: LoopLocation) -> Result<StateSpace> {
    let (ps, ks) = (p.to_ss()?, k.to_ss()?);
    if ks.n_inputs() != ps.n_outputs() || ks.n_outputs() != ps.n_inputs() {
        return Err(Error::Input(format!(
            "plant is {}x{} but controller is {}x{}",
            ps.n_outputs(),
            ps.n_inputs(),
            ks.n_outputs(),
            ks.n_inputs()
        )));
    }
    match location {
        LoopLocation::Input => ps.series(&ks),
        LoopLocation::Output => ks.series(&ps),
    }
}

/// Loop `[[0, K], [-P, 0]]` at plant inputs and outputs. Closing it
/// through `diag(f_u, f_y)` reproduces `u_p = f_u u`, `y_m = f_y y`.
fn io_loop(p: &LtiModel, k: &LtiModel) -> Result<StateSpace> {
    let (ps, ks) = (p.to_ss()?, k.to_ss()?);
    if ks.n_inputs() != ps.n_outputs() || ks.n_outputs() != ps.n_inputs() {
        return Err(Error::Input(format!(
            "plant is {}x{} but controller is {}x{}",
            ps.n_outputs(),
            ps.n_inputs(),
            ks.n_outputs(),
            ks.n_inputs()
        )));
    }
    let (nu, ny) = (ps.n_inputs(), ps.n_outputs());
    let g = StateSpace::block_diag(&[ks, ps.neg()])?;
    // inputs (e_u, e_y) -> (e_y to K, e_u to P); outputs (K e_y, -P e_u)
    let mut route = DMatrix::zeros(ny + nu, nu + ny);
    for i in 0..ny {
        route[(i, nu + i)] = 1.0;
    }
    for i in 0..nu {
        route[(ny + i, i)] = 1.0;
    }
    StateSpace::static_gain(route).series(&g)
}

fn points_loop(p: &LtiModel, k: &LtiModel, points: &AnalysisPoints) -> Result<(StateSpace, Vec<usize>)> {
    let (nu, ny) = (p.n_inputs(), p.n_outputs());
    match points {
        AnalysisPoints::Input => Ok((controller_loop(p, k, LoopLocation::Input)?, (0..nu).collect())),
        AnalysisPoints::Output => Ok((controller_loop(p, k, LoopLocation::Output)?, (0..ny).collect())),
        AnalysisPoints::InputOutput => Ok((io_loop(p, k)?, (0..nu + ny).collect())),
        AnalysisPoints::Channels(ch) => {
            if ch.is_empty() {
                return Err(Error::Input("channel list is empty".into()));
            }
            if let Some(bad) = ch.iter().find(|&&c| c >= nu + ny) {
                return Err(Error::Input(format!(
                    "channel {bad} out of range for {} input-output channels",
                    nu + ny
                )));
            }
            let mut sorted = ch.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != ch.len() {
                return Err(Error::Input("channel list has duplicates".into()));
            }
            Ok((io_loop(p, k)?, ch.clone()))
        }
    }
}

/// `M` for perturbations at the given points of the `(P, K)` loop.
pub fn build_m(p: &LtiModel, k: &LtiModel, points: &AnalysisPoints, sigma: f64) -> Result<MDeltaSystem> {
    let (l, channels) = points_loop(p, k, points)?;
    build_m_from_loop(&LtiModel::negative(l), &channels, sigma)
}

/// `M` for perturbations in selected channels of a square
/// negative-feedback loop; the other channels stay closed at nominal.
pub fn build_m_from_loop(l: &LtiModel, channels: &[usize], sigma: f64) -> Result<MDeltaSystem> {
    if !sigma.is_finite() {
        return Err(Error::Domain("skew must be finite".into()));
    }
    let n = l.n_inputs();
    if l.n_outputs() != n {
        return Err(Error::Input("loop at the analysis points must be square".into()));
    }
    if channels.is_empty() || channels.iter().any(|&c| c >= n) {
        return Err(Error::Input("channel index out of range".into()));
    }
    let m_full = shifted_sensitivity(&LtiModel::negative(l.to_ss()?), sigma)?;
    let m = m_full.to_ss()?.select(channels, channels)?;
    let m = LtiModel::negative(m.minreal(MINREAL_TOL));
    if m.system().poles()?.iter().any(|p| p.re >= 0.0) {
        return Err(Error::NominallyUnstable);
    }
    Ok(MDeltaSystem {
        m,
        n: channels.len(),
        sigma,
        loop_at_points: l.clone(),
        channels: channels.to_vec(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiLoopOptions {
    /// Log points of the sweep; `0` and `∞` are always added.
    pub grid_points: usize,
    /// Explicit grid; overrides `grid_points`.
    pub grid: Option<FrequencyGrid>,
    pub seed: u64,
}

impl Default for MultiLoopOptions {
    fn default() -> Self {
        Self {
            grid_points: 400,
            grid: None,
            seed: DEFAULT_SEED,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiLoopResult {
    /// `1 / peak μ upper bound`: the margin is at least this.
    pub alpha_lower: f64,
    /// `1 / peak μ lower bound`: a perturbation of this size destabilizes.
    pub alpha_upper: f64,
    pub omega_crit: f64,
    /// Diagonal of the destabilizing `Δ`, `‖Δ‖ = alpha_upper`.
    pub delta_worst: Vec<Complex64>,
    /// Loop factors `f_i` matching `delta_worst`; `None` for `f_i = ∞`.
    pub f_worst: Vec<Option<Complex64>>,
    pub geometry: DiskGeometry,
    pub sigma: f64,
    /// μ bounds at the critical frequency.
    pub mu_at_crit: MuResult,
    /// Bracket wider than 10% after refinement.
    pub inconclusive: bool,
}

pub fn multiloop_margin(sys: &MDeltaSystem) -> Result<MultiLoopResult> {
    multiloop_margin_with(sys, &MultiLoopOptions::default())
}

/// Peak of the μ bounds of `M(jω)` over a log grid, with golden-section
/// refinement of the upper bound around the three largest samples.
pub fn multiloop_margin_with(sys: &MDeltaSystem, opts: &MultiLoopOptions) -> Result<MultiLoopResult> {
    let m = &sys.m;
    let grid = match &opts.grid {
        Some(g) => g.clone(),
        None => crate::specnorm::default_grid(m, opts.grid_points.max(2))?,
    };
    let mu_at = |w: f64, effort: Effort| -> Result<MuResult> {
        let mut r = mu_bounds(&m.eval_freq(w)?, opts.seed, effort)?;
        r.frequency = Some(w);
        Ok(r)
    };

    let pts = grid.points();
    let mut samples: Vec<MuResult> = Vec::with_capacity(pts.len());
    for &w in pts {
        samples.push(mu_at(w, Effort::Quick)?);
    }

    // local maxima of the upper bound, largest first
    let mut idx: Vec<usize> = (0..samples.len()).collect();
    idx.sort_by(|&a, &b| samples[b].upper.total_cmp(&samples[a].upper));
    let mut peaks = Vec::new();
    for &i in &idx {
        let left = i.checked_sub(1).map_or(f64::NEG_INFINITY, |j| samples[j].upper);
        let right = samples.get(i + 1).map_or(f64::NEG_INFINITY, |s| s.upper);
        if samples[i].upper >= left && samples[i].upper >= right {
            peaks.push(i);
        }
        if peaks.len() == 3 {
            break;
        }
    }

    let mut full: Vec<MuResult> = Vec::new();
    for &i in &peaks {
        let w = pts[i];
        if !(w > 0.0 && w.is_finite()) {
            full.push(mu_at(w, Effort::Full)?);
            continue;
        }
        let lo = if i > 0 && pts[i - 1] > 0.0 { pts[i - 1] } else { w / 2.0 };
        let hi = if i + 1 < pts.len() && pts[i + 1].is_finite() {
            pts[i + 1]
        } else {
            w * 2.0
        };
        let (x, _) = golden_max(
            |x| mu_at(x.exp(), Effort::Quick).map_or(0.0, |r| r.upper),
            lo.ln(),
            hi.ln(),
            1e-9,
        );
        full.push(mu_at(x.exp(), Effort::Full)?);
        full.push(mu_at(w, Effort::Full)?);
    }
    let mut peak_upper = full.iter().fold(0.0_f64, |a, r| a.max(r.upper));
    // quick upper bounds are conservative; tighten any that still exceed
    // the refined peak
    for s in samples.iter_mut() {
        if s.upper > peak_upper {
            let w = s.frequency.unwrap_or(0.0);
            *s = mu_at(w, Effort::Full)?;
            peak_upper = peak_upper.max(s.upper);
        }
    }

    let crit = samples
        .iter()
        .chain(full.iter())
        .max_by(|a, b| a.lower.total_cmp(&b.lower))
        .ok_or(Error::Numerical("empty frequency sweep"))?
        .clone();
    let omega_crit = crit.frequency.unwrap_or(0.0);
    let peak_upper = peak_upper.max(crit.upper);

    let alpha_lower = 1.0 / peak_upper;
    let alpha_upper = 1.0 / crit.lower;
    let delta_worst = crit
        .delta_worst
        .clone()
        .unwrap_or_else(|| alloc::vec![Complex64::new(f64::INFINITY, 0.0); sys.n]);
    let f_worst = delta_worst.iter().map(|d| perturbation_of(*d, sys.sigma)).collect();
    let geometry = disk_geometry(DiskSpec::new(alpha_lower, sys.sigma))?;
    Ok(MultiLoopResult {
        alpha_lower,
        alpha_upper,
        omega_crit,
        delta_worst,
        f_worst,
        geometry,
        sigma: sys.sigma,
        inconclusive: alpha_upper > 1.1 * alpha_lower,
        mu_at_crit: crit,
    })
}

/// SISO negative-feedback loop seen at one channel with all other
/// channels closed.
pub fn loop_at_a_time(p: &LtiModel, k: &LtiModel, channel: usize, location: LoopLocation) -> Result<LtiModel> {
    let l = controller_loop(p, k, location)?;
    let n = l.n_inputs();
    if channel >= n {
        return Err(Error::Input(format!("channel {channel} out of range for {n} channels")));
    }
    let others: Vec<usize> = (0..n).filter(|&c| c != channel).collect();
    let li = l.close_channels(&others).map_err(|e| match e {
        Error::IllPosed => Error::NominallyUnstable,
        e => e,
    })?;
    let li = li.minreal(MINREAL_TOL);
    let sys = match li.to_tf() {
        Ok(t) => System::Tf(t.minreal(1e-8).unwrap_or(t)),
        Err(_) => System::Ss(li),
    };
    Ok(LtiModel::negative(sys))
}

/// Classical and disk margins of one broken loop.
pub fn loop_at_a_time_margins(
    p: &LtiModel,
    k: &LtiModel,
    channel: usize,
    location: LoopLocation,
    sigma: f64,
) -> Result<(ClassicalMargins, DiskMarginResult)> {
    let li = loop_at_a_time(p, k, channel, location)?;
    // stability of the fully closed loop is not implied by the SISO loop
    let full = controller_loop(p, k, location)?;
    shifted_sensitivity(&LtiModel::negative(full), sigma)?;
    Ok((classical_margins(&li)?, disk_margin(&li, sigma)?))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiLoopVerification {
    pub stable: bool,
    pub ill_posed: bool,
    /// Closed-loop pole with the largest real part.
    pub rightmost_pole: Option<Complex64>,
    /// Closed-loop pole nearest `jω` and its distance.
    pub nearest_pole: Option<Complex64>,
    pub distance: f64,
    pub omega: f64,
}

/// Closes every perturbed channel through its factor `f_i`. Complex
/// factors are realized by first-order all-pass systems matched at `ω`.
pub fn verify_multiloop_destabilizing(
    p: &LtiModel,
    k: &LtiModel,
    points: &AnalysisPoints,
    f_list: &[Complex64],
    omega: f64,
) -> Result<MultiLoopVerification> {
    let (l, channels) = points_loop(p, k, points)?;
    if f_list.len() != channels.len() {
        return Err(Error::Input(format!(
            "{} factors for {} perturbed channels",
            f_list.len(),
            channels.len()
        )));
    }
    let n = l.n_inputs();
    let mut factors: Vec<ChannelFactor> = (0..n).map(|_| ChannelFactor::Gain(1.0)).collect();
    for (&c, f) in channels.iter().zip(f_list) {
        factors[c] = match all_pass_realization(*f, omega)? {
            (t, None) => ChannelFactor::Gain(t.num().leading() / t.den().leading()),
            (t, Some(_)) => ChannelFactor::Dynamic(t),
        };
    }
    let closed = match scalar_close(&LtiModel::negative(l), &factors) {
        Ok(t) => t,
        Err(Error::IllPosed) => {
            return Ok(MultiLoopVerification {
                stable: false,
                ill_posed: true,
                rightmost_pole: None,
                nearest_pole: None,
                distance: f64::INFINITY,
                omega,
            })
        }
        Err(e) => return Err(e),
    };
    let ps = poles(&closed)?;
    let rightmost = ps.iter().copied().max_by(|a, b| a.re.total_cmp(&b.re));
    let target = Complex64::new(0.0, if omega.is_finite() { omega } else { 0.0 });
    let nearest = ps
        .iter()
        .map(|&z| if z.im < 0.0 { z.conj() } else { z })
        .min_by(|a, b| (a - target).norm().total_cmp(&(b - target).norm()));
    Ok(MultiLoopVerification {
        stable: ps.iter().all(|z| z.re < 0.0),
        ill_posed: false,
        rightmost_pole: rightmost,
        nearest_pole: nearest,
        distance: match nearest {
            Some(z) if omega.is_finite() => (z - target).norm(),
            _ => f64::INFINITY,
        },
        omega,
    })
}
