use alloc::vec::Vec;

#[cfg_attr(feature = "std", allow(unused_imports))]
use num_traits::Float;

use crate::lti::{LtiModel, System};
use crate::{Error, Result};

/// Strictly increasing frequencies in rad/s. May contain `0` and the
/// `+∞` sentinel.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyGrid {
    points: Vec<f64>,
}

impl FrequencyGrid {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Input("frequency grid is empty".into()));
        }
        if points.iter().any(|w| w.is_nan() || *w < 0.0) {
            return Err(Error::Input("grid frequencies must be >= 0".into()));
        }
        if points.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Input("grid must be strictly increasing".into()));
        }
        Ok(Self { points })
    }

    /// `n` log-spaced points from `lo` to `hi` inclusive.
    pub fn logspace(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if !(lo > 0.0 && hi > lo && hi.is_finite()) || n < 2 {
            return Err(Error::Input("logspace needs 0 < lo < hi and n >= 2".into()));
        }
        let (a, b) = (lo.log10(), hi.log10());
        let step = (b - a) / (n - 1) as f64;
        let mut points: Vec<f64> = (0..n).map(|i| 10f64.powf(a + step * i as f64)).collect();
        points[0] = lo;
        points[n - 1] = hi;
        Self::new(points)
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Finite, strictly positive part of the grid.
    pub fn finite_positive(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().copied().filter(|w| *w > 0.0 && w.is_finite())
    }

    /// Copy of the grid with `0` and `+∞` added.
    pub fn with_sentinels(&self) -> Self {
        let mut points = Vec::with_capacity(self.points.len() + 2);
        if self.points[0] > 0.0 {
            points.push(0.0);
        }
        points.extend_from_slice(&self.points);
        if points.last().is_some_and(|w| w.is_finite()) {
            points.push(f64::INFINITY);
        }
        Self { points }
    }
}

/// Magnitudes of the nonzero poles and zeros of a model.
pub(crate) fn feature_frequencies(m: &System) -> Vec<f64> {
    let mut roots = m.poles().unwrap_or_default();
    if let System::Tf(t) = m {
        roots.extend(t.zeros().unwrap_or_default());
    }
    roots
        .iter()
        .map(|z| z.norm())
        .filter(|r| *r > 1e-12 && r.is_finite())
        .collect()
}

/// Log grid spanning two decades beyond the smallest and largest nonzero
/// pole/zero magnitudes (default window `[1e-2, 1e2]` without dynamics),
/// with `n` log points plus the `0` and `+∞` sentinels.
pub fn default_grid(m: &LtiModel, n: usize) -> Result<FrequencyGrid> {
    default_grid_for(m.system(), n)
}

pub(crate) fn default_grid_for(m: &System, n: usize) -> Result<FrequencyGrid> {
    if n < 2 {
        return Err(Error::Input("grid needs at least two points".into()));
    }
    let feats = feature_frequencies(m);
    let (lo, hi) = if feats.is_empty() {
        (1e-2, 1e2)
    } else {
        let min = feats.iter().copied().fold(f64::INFINITY, f64::min);
        let max = feats.iter().copied().fold(0.0, f64::max);
        (min / 100.0, max * 100.0)
    };
    Ok(FrequencyGrid::logspace(lo, hi, n)?.with_sentinels())
}
