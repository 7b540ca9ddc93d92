//! Classical gain-only and phase-only margins of a SISO loop.
//!
//! A gain `g` (or phase factor `e^{-jφ}`) puts a closed-loop pole at
//! `s = jω` exactly when `1 + f L(jω) = 0`, so the candidate margins are
//! read off the phase crossovers (`L(jω)` on the negative real axis) and
//! the gain crossovers (`|L(jω)| = 1`). The reported margins bound the
//! connected stable interval containing the nominal loop; any further
//! stable intervals are listed separately.

use alloc::vec::Vec;

use num_complex::Complex64;
#[cfg_attr(feature = "std", allow(unused_imports))]
use num_traits::Float;

use crate::lti::{complex_closed_loop_poles, LtiModel, StateSpace};
use crate::specnorm::default_grid;
use crate::{linalg, Error, Result};

/// Log points used to bracket crossovers.
const CROSSOVER_GRID: usize = 4000;
const REFINE_ITERS: usize = 80;

#[derive(Debug, Clone, PartialEq)]
pub struct GainMargins {
    /// Lower gain margin; `0` when no gain reduction destabilizes.
    pub g_lower: f64,
    /// Upper gain margin; `+∞` when no gain increase destabilizes.
    pub g_upper: f64,
    pub freq_lower: Option<f64>,
    pub freq_upper: Option<f64>,
    /// Frequencies where `L(jω)` crosses the negative real axis.
    pub phase_crossover_freqs: Vec<f64>,
    /// Stable gain intervals other than `(g_lower, g_upper)`.
    pub other_stable_intervals: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseMargin {
    /// Radians; `+∞` when no phase variation destabilizes.
    pub phi_upper: f64,
    pub freq: Option<f64>,
    /// Frequencies where `|L(jω)| = 1`.
    pub gain_crossover_freqs: Vec<f64>,
    /// Stable phase intervals (radians, positive side) beyond `phi_upper`.
    pub other_stable_intervals: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalMargins {
    pub g_lower: f64,
    pub g_upper: f64,
    pub gain_crossover_freqs: Vec<f64>,
    pub phase_crossover_freqs: Vec<f64>,
    pub phi_upper: f64,
    /// Frequency of the binding gain margin (upper if finite, else lower).
    pub critical_gain_freq: Option<f64>,
    pub critical_phase_freq: Option<f64>,
    pub gain: GainMargins,
    pub phase: PhaseMargin,
}

pub fn classical_margins(l: &LtiModel) -> Result<ClassicalMargins> {
    let gain = gain_margins(l)?;
    let phase = phase_margin(l)?;
    let critical_gain_freq = if gain.g_upper.is_finite() {
        gain.freq_upper
    } else {
        gain.freq_lower
    };
    Ok(ClassicalMargins {
        g_lower: gain.g_lower,
        g_upper: gain.g_upper,
        gain_crossover_freqs: phase.gain_crossover_freqs.clone(),
        phase_crossover_freqs: gain.phase_crossover_freqs.clone(),
        phi_upper: phase.phi_upper,
        critical_gain_freq,
        critical_phase_freq: phase.freq,
        gain,
        phase,
    })
}

struct Loop {
    ss: StateSpace,
    model: LtiModel,
}

impl Loop {
    fn new(l: &LtiModel) -> Result<Self> {
        if !l.is_siso() {
            return Err(Error::Dimension("classical margins need a SISO loop".into()));
        }
        let ss = l.to_ss()?;
        let me = Self { ss, model: l.clone() };
        if !me.stable_with_gain(1.0)? {
            return Err(Error::NominallyUnstable);
        }
        Ok(me)
    }

    fn eval(&self, w: f64) -> Option<Complex64> {
        self.model.eval_siso(w).ok()
    }

    fn stable_with_gain(&self, g: f64) -> Result<bool> {
        let d = self.ss.d()[(0, 0)];
        let den = 1.0 + g * d;
        if den == 0.0 {
            return Err(Error::IllPosed);
        }
        let a = self.ss.a() - self.ss.b() * self.ss.c() * (g / den);
        Ok(linalg::eigenvalues(&a)?.iter().all(|p| p.re < 0.0))
    }

    fn stable_with_phase(&self, phi: f64) -> Result<bool> {
        let f = Complex64::from_polar(1.0, -phi);
        Ok(complex_closed_loop_poles(&self.ss, f)?.iter().all(|p| p.re < 0.0))
    }

    /// Sample grid augmented with the imaginary parts of lightly damped
    /// poles so that narrow resonances are bracketed.
    fn sample_grid(&self) -> Result<Vec<f64>> {
        let mut w: Vec<f64> = default_grid(&self.model, CROSSOVER_GRID)?.finite_positive().collect();
        for p in self.model.system().poles().unwrap_or_default() {
            let wi = p.im.abs();
            if wi > 0.0 {
                w.push(wi);
                w.push(wi * (1.0 - 1e-3));
                w.push(wi * (1.0 + 1e-3));
            }
        }
        w.sort_by(f64::total_cmp);
        w.dedup();
        Ok(w)
    }

    /// Roots of a real-valued function of frequency bracketed by sign
    /// changes on the sample grid, refined by log-bisection.
    fn crossings(&self, grid: &[f64], h: impl Fn(Complex64) -> f64) -> Vec<f64> {
        let mut out = Vec::new();
        let vals: Vec<Option<f64>> = grid.iter().map(|&w| self.eval(w).map(&h)).collect();
        for i in 0..grid.len().saturating_sub(1) {
            let (Some(a), Some(b)) = (vals[i], vals[i + 1]) else {
                continue;
            };
            if a == 0.0 {
                out.push(grid[i]);
                continue;
            }
            if a * b >= 0.0 {
                continue;
            }
            let (mut lo, mut hi) = (grid[i].ln(), grid[i + 1].ln());
            let mut flo = a;
            for _ in 0..REFINE_ITERS {
                let mid = 0.5 * (lo + hi);
                let Some(fm) = self.eval(mid.exp()).map(&h) else {
                    break;
                };
                if fm == 0.0 {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if fm * flo < 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                    flo = fm;
                }
                if hi - lo < 1e-14 {
                    break;
                }
            }
            out.push((0.5 * (lo + hi)).exp());
        }
        out
    }
}

/// Gain-only margins `(g_lower, g_upper)` with their crossover frequencies.
pub fn gain_margins(l: &LtiModel) -> Result<GainMargins> {
    let lp = Loop::new(l)?;
    let grid = lp.sample_grid()?;
    let mut candidates: Vec<(f64, f64)> = Vec::new(); // (gain, frequency)
    let mut crossovers = Vec::new();
    for w in lp.crossings(&grid, |z| z.im) {
        let Some(z) = lp.eval(w) else { continue };
        if z.re < 0.0 && z.im.abs() <= 1e-6 * z.norm() {
            crossovers.push(w);
            candidates.push((1.0 / z.norm(), w));
        }
    }
    for w in [0.0, f64::INFINITY] {
        if let Some(z) = lp.eval(w) {
            if z.re < 0.0 && z.im == 0.0 {
                crossovers.push(w);
                candidates.push((-1.0 / z.re, w));
            }
        }
    }
    crossovers.sort_by(f64::total_cmp);

    let upper = candidates
        .iter()
        .filter(|(g, _)| *g > 1.0)
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .copied();
    let lower = candidates
        .iter()
        .filter(|(g, _)| *g < 1.0)
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .copied();

    let mut cuts: Vec<f64> = candidates.iter().map(|c| c.0).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut other = Vec::new();
    let mut edges = Vec::with_capacity(cuts.len() + 2);
    edges.push(0.0);
    edges.extend_from_slice(&cuts);
    edges.push(f64::INFINITY);
    for win in edges.windows(2) {
        let (a, b) = (win[0], win[1]);
        if a < 1.0 && 1.0 < b {
            continue;
        }
        let probe = match (a == 0.0, b.is_infinite()) {
            (true, _) => b / 2.0,
            (_, true) => 2.0 * a,
            _ => (a * b).sqrt(),
        };
        if lp.stable_with_gain(probe).unwrap_or(false) {
            other.push((a, b));
        }
    }

    Ok(GainMargins {
        g_lower: lower.map_or(0.0, |c| c.0),
        g_upper: upper.map_or(f64::INFINITY, |c| c.0),
        freq_lower: lower.map(|c| c.1),
        freq_upper: upper.map(|c| c.1),
        phase_crossover_freqs: crossovers,
        other_stable_intervals: other,
    })
}

/// Phase-only margin `φ_U` (radians) and its crossover frequency.
pub fn phase_margin(l: &LtiModel) -> Result<PhaseMargin> {
    let lp = Loop::new(l)?;
    let grid = lp.sample_grid()?;
    let mut candidates: Vec<(f64, f64)> = Vec::new();
    let mut crossovers = Vec::new();
    for w in lp.crossings(&grid, |z| z.norm().ln()) {
        let Some(z) = lp.eval(w) else { continue };
        if (z.norm() - 1.0).abs() <= 1e-6 {
            crossovers.push(w);
            // 1 + e^{-jφ} L = 0  <=>  φ = arg(-L)
            candidates.push(((-z).arg().abs(), w));
        }
    }
    let best = candidates.iter().min_by(|a, b| a.0.total_cmp(&b.0)).copied();

    let mut cuts: Vec<f64> = candidates.iter().map(|c| c.0).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut other = Vec::new();
    if let Some(&first) = cuts.first() {
        let mut edges = cuts.clone();
        if *edges.last().unwrap() < core::f64::consts::PI {
            edges.push(core::f64::consts::PI);
        }
        for win in edges.windows(2) {
            let probe = 0.5 * (win[0] + win[1]);
            if win[0] >= first && lp.stable_with_phase(probe).unwrap_or(false) {
                other.push((win[0], win[1]));
            }
        }
    }

    Ok(PhaseMargin {
        phi_upper: best.map_or(f64::INFINITY, |c| c.0),
        freq: best.map(|c| c.1),
        gain_crossover_freqs: crossovers,
        other_stable_intervals: other,
    })
}

/// Closed-loop stability of the loop scaled by a real gain.
pub fn stable_with_gain(l: &LtiModel, g: f64) -> Result<bool> {
    let ss = l.to_ss()?;
    if !l.is_siso() {
        return Err(Error::Dimension("SISO loop required".into()));
    }
    let d = ss.d()[(0, 0)];
    if 1.0 + g * d == 0.0 {
        return Err(Error::IllPosed);
    }
    let a = ss.a() - ss.b() * ss.c() * (g / (1.0 + g * d));
    Ok(linalg::eigenvalues(&a)?.iter().all(|p| p.re < 0.0))
}
