use alloc::vec::Vec;

use nalgebra::DMatrix;
#[cfg_attr(feature = "std", allow(unused_imports))]
use num_traits::Float;

use super::grid::default_grid_for;
use crate::linalg;
use crate::lti::{LtiModel, StateSpace, System};
use crate::optim::golden_max;
use crate::{Error, Result};

pub const DEFAULT_TOL: f64 = 1e-6;

/// Gains within this relative distance of the maximum count as ties; the
/// lowest such frequency is reported.
const TIE_TOL: f64 = 1e-9;

/// Peak gain of a stable system and a frequency where it is attained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakGain {
    pub value: f64,
    /// rad/s; `0` and `+∞` are reported exactly.
    pub frequency: f64,
}

/// Largest singular value of `G(jω)`.
pub fn gain_at(g: &StateSpace, omega: f64) -> Result<f64> {
    Ok(linalg::max_singular_value(&g.eval_freq(omega)?))
}

/// H∞ norm of a stable, proper model with the frequency of the peak.
///
/// A coarse log grid gives the initial lower bound. Candidate levels are
/// then tested through the imaginary-axis eigenvalues of the associated
/// Hamiltonian matrix: a level strictly below the peak always produces
/// such eigenvalues, and the gain at the midpoints between them lifts the
/// lower bound. The bracket is bisected until its relative width is
/// below `tol`.
pub fn hinf_norm(m: &LtiModel, tol: f64) -> Result<PeakGain> {
    if !m.system().is_proper() {
        return Err(Error::Domain("H-infinity norm of an improper model".into()));
    }
    let g = m.to_ss()?;
    hinf_with_grid(&g, m.system(), tol)
}

pub fn hinf_norm_ss(g: &StateSpace, tol: f64) -> Result<PeakGain> {
    hinf_with_grid(g, &System::Ss(g.clone()), tol)
}

fn hinf_with_grid(g: &StateSpace, shape: &System, tol: f64) -> Result<PeakGain> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::Input("tolerance must be positive".into()));
    }
    let poles = g.poles()?;
    if poles.iter().any(|p| p.re >= 0.0) {
        return Err(Error::Domain("H-infinity norm of an unstable model".into()));
    }
    let mut grid: Vec<f64> = default_grid_for(shape, 60)?.points().to_vec();
    // resonances sit at |Im p|, which the log grid may step over
    grid.extend(poles.iter().map(|p| p.im.abs()).filter(|w| *w > 0.0));
    grid.extend(poles.iter().map(|p| p.norm()).filter(|w| *w > 0.0));
    grid.sort_by(f64::total_cmp);
    grid.dedup();

    let mut lo = 0.0_f64;
    let mut peak_w = 0.0;
    for &w in &grid {
        let v = gain_at(g, w)?;
        if v > lo * (1.0 + TIE_TOL) {
            lo = v;
            peak_w = w;
        }
    }
    if lo == 0.0 {
        return Ok(PeakGain {
            value: 0.0,
            frequency: 0.0,
        });
    }
    if g.n_states() == 0 {
        return Ok(PeakGain {
            value: lo,
            frequency: 0.0,
        });
    }

    let probe = |gamma: f64, lo: &mut f64, peak_w: &mut f64| -> Result<bool> {
        let freqs = imaginary_axis_frequencies(g, gamma)?;
        if freqs.is_empty() {
            return Ok(false);
        }
        let mut best = (0.0_f64, 0.0);
        for w in midpoints(&freqs) {
            let v = gain_at(g, w)?;
            if v > best.0 {
                best = (v, w);
            }
        }
        if best.0 > *lo {
            if best.0 > *lo * (1.0 + TIE_TOL) {
                *peak_w = best.1;
            }
            *lo = best.0;
        }
        Ok(best.0 >= gamma)
    };

    // grow an upper bound geometrically
    let mut hi = 10.0 * lo;
    let mut grow = 0;
    while probe(hi, &mut lo, &mut peak_w)? {
        hi *= 10.0;
        grow += 1;
        if grow > 30 {
            return Err(Error::Numerical("no H-infinity upper bound found"));
        }
    }

    let mut iter = 0;
    while hi > lo * (1.0 + 2.0 * tol) {
        let gamma = (0.5 * (lo + hi)).max(lo * (1.0 + tol));
        if !probe(gamma, &mut lo, &mut peak_w)? {
            hi = gamma;
        }
        iter += 1;
        if iter > 200 {
            return Err(Error::Numerical("H-infinity bisection did not converge"));
        }
    }

    // polish the peak location
    if peak_w > 0.0 && peak_w.is_finite() {
        let (x, v) = golden_max(
            |x| gain_at(g, peak_w * 10f64.powf(x)).unwrap_or(0.0),
            -0.02,
            0.02,
            1e-12,
        );
        if v > lo * (1.0 + 1e-15) {
            lo = v;
            peak_w *= 10f64.powf(x);
        }
    }
    Ok(PeakGain {
        value: lo,
        frequency: peak_w,
    })
}

fn midpoints(freqs: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * freqs.len() + 1);
    let mut prev = 0.0;
    out.push(0.0);
    for &w in freqs {
        out.push(0.5 * (prev + w));
        out.push(w);
        prev = w;
    }
    out.push(2.0 * prev + 1.0);
    out
}

/// Nonnegative frequencies `ω` at which `gamma` is a singular value of
/// `G(jω)`, from the imaginary eigenvalues of the Hamiltonian matrix.
fn imaginary_axis_frequencies(g: &StateSpace, gamma: f64) -> Result<Vec<f64>> {
    let (a, b, c, d) = (g.a(), g.b(), g.c(), g.d());
    let n = g.n_states();
    let (p, m) = d.shape();
    let g2 = gamma * gamma;
    let r = DMatrix::identity(m, m) * g2 - d.transpose() * d;
    let s = DMatrix::identity(p, p) * g2 - d * d.transpose();
    let r_inv = r.try_inverse().ok_or(Error::Numerical("singular Hamiltonian weight"))?;
    let s_inv = s.try_inverse().ok_or(Error::Numerical("singular Hamiltonian weight"))?;
    let a_h = a + b * &r_inv * d.transpose() * c;
    let mut h = DMatrix::zeros(2 * n, 2 * n);
    h.view_mut((0, 0), (n, n)).copy_from(&a_h);
    h.view_mut((0, n), (n, n))
        .copy_from(&(b * &r_inv * b.transpose() * gamma));
    h.view_mut((n, 0), (n, n))
        .copy_from(&(c.transpose() * &s_inv * c * (-gamma)));
    h.view_mut((n, n), (n, n)).copy_from(&(-a_h.transpose()));
    let scale = linalg::max_abs(&h).max(1.0);
    let mut freqs: Vec<f64> = linalg::eigenvalues(&h)?
        .into_iter()
        .filter(|z| z.im >= 0.0 && z.re.abs() <= 1e-8 * scale.max(z.norm()))
        .map(|z| z.im)
        .collect();
    freqs.sort_by(f64::total_cmp);
    freqs.dedup_by(|x, y| (*x - *y).abs() <= 1e-12 * y.abs().max(1.0));
    Ok(freqs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn static_gain() {
        let r = hinf_norm(&LtiModel::gain(-4.0), DEFAULT_TOL).unwrap();
        assert_eq!(r.value, 4.0);
        assert_eq!(r.frequency, 0.0);
    }

    #[test]
    fn low_pass_peaks_at_dc() {
        let r = hinf_norm(&LtiModel::tf(&[1.0], &[1.0, 1.0]).unwrap(), DEFAULT_TOL).unwrap();
        assert_relative_eq!(r.value, 1.0, max_relative = 1e-12);
        assert_eq!(r.frequency, 0.0);
    }

    #[test]
    fn high_pass_peaks_at_infinity() {
        let r = hinf_norm(&LtiModel::tf(&[2.0, 0.0], &[1.0, 1.0]).unwrap(), DEFAULT_TOL).unwrap();
        assert_relative_eq!(r.value, 2.0, max_relative = 1e-12);
        assert_eq!(r.frequency, f64::INFINITY);
    }

    #[test]
    fn resonance_peak() {
        // 1/(s^2 + 2 ζ s + 1), peak 1/(2ζ sqrt(1-ζ^2)) at sqrt(1-2ζ^2)
        let z: f64 = 0.05;
        let r = hinf_norm(&LtiModel::tf(&[1.0], &[1.0, 2.0 * z, 1.0]).unwrap(), 1e-9).unwrap();
        assert_relative_eq!(r.value, 1.0 / (2.0 * z * (1.0 - z * z).sqrt()), max_relative = 1e-9);
        assert_relative_eq!(r.frequency, (1.0 - 2.0 * z * z).sqrt(), max_relative = 1e-6);
    }

    #[test]
    fn rejects_unstable_and_improper() {
        assert!(matches!(
            hinf_norm(&LtiModel::tf(&[1.0], &[1.0, -1.0]).unwrap(), DEFAULT_TOL),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            hinf_norm(&LtiModel::tf(&[1.0, 0.0, 0.0], &[1.0, 1.0]).unwrap(), DEFAULT_TOL),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn hamiltonian_frequencies_are_level_crossings() {
        let g = LtiModel::tf(&[1.0], &[1.0, 0.2, 1.0]).unwrap().to_ss().unwrap();
        let freqs = imaginary_axis_frequencies(&g, 2.0).unwrap();
        assert_eq!(freqs.len(), 2);
        for w in freqs {
            assert_relative_eq!(gain_at(&g, w).unwrap(), 2.0, max_relative = 1e-8);
        }
    }
}
