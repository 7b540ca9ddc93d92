use num_complex::Complex64;
#[cfg_attr(feature = "std", allow(unused_imports))]
use num_traits::Float;

use crate::lti::{poles, scalar_close, ChannelFactor, LtiModel, TransferFunction};
use crate::{Error, Result};

/// Imaginary parts below this fraction of the magnitude count as real.
const REAL_TOL: f64 = 1e-12;

/// Real-coefficient, first-order realization of a worst-case disk
/// perturbation.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationLti {
    /// Constant, or `±c (s-β)/(s+β)`; `|δ̂(jω)| = |δ0|` at every `ω`.
    pub delta_hat: TransferFunction,
    /// `f̂ = (2 + (1-σ)δ̂) / (2 - (1+σ)δ̂)` with monic denominator.
    pub f_hat: TransferFunction,
    /// All-pass corner `β`; `None` for a constant perturbation.
    pub beta: Option<f64>,
}

/// Stable first-order system `v̂` with `|v̂(jω)| = |v|` for all `ω` and
/// `v̂(jω0) = v`. Real values give a constant.
pub fn all_pass_realization(v: Complex64, omega0: f64) -> Result<(TransferFunction, Option<f64>)> {
    if v.im.abs() <= REAL_TOL * v.norm() {
        return Ok((TransferFunction::gain(v.re), None));
    }
    if omega0.is_nan() || omega0 <= 0.0 || omega0.is_infinite() {
        return Err(Error::Domain(
            "a complex value can only be matched at a finite, nonzero frequency".into(),
        ));
    }
    // v = ±c e^{jφ} with φ in (0, π); the all-pass (s-β)/(s+β) has phase
    // π - 2 atan(ω/β) at jω
    let (k, phi) = if v.im > 0.0 {
        (v.norm(), v.arg())
    } else {
        (-v.norm(), (-v).arg())
    };
    let beta = omega0 * (0.5 * phi).tan();
    let tf = TransferFunction::from_coeffs(&[k, -k * beta], &[1.0, beta])?;
    Ok((tf, Some(beta)))
}

/// Dynamic perturbation that realizes the critical `δ0` at `ω0` while
/// staying on the boundary of `D(|δ0|, σ)` at every frequency.
pub fn worst_perturbation_lti(delta0: Complex64, omega0: f64, sigma: f64) -> Result<PerturbationLti> {
    if delta0.norm() == 0.0 || !delta0.is_finite() {
        return Err(Error::Domain("critical uncertainty must be finite and nonzero".into()));
    }
    let (delta_hat, beta) = all_pass_realization(delta0, omega0)?;
    let n = delta_hat.num();
    let d = delta_hat.den();
    let num = d.scale(2.0).add(&n.scale(1.0 - sigma));
    let den = d.scale(2.0).sub(&n.scale(1.0 + sigma));
    let lead = den.leading();
    if den.is_zero() || den.degree() < d.degree() || lead.abs() <= 1e-12 * den.norm() {
        return Err(Error::Construction(
            "perturbation reaches 2/(1+sigma); f-hat would be improper".into(),
        ));
    }
    let f_hat = TransferFunction::new(num, den)?.normalized();
    if f_hat.poles().unwrap_or_default().iter().any(|p| p.re >= 0.0) {
        return Err(Error::Construction(
            "perturbation crosses 2/(1+sigma); f-hat would be unstable".into(),
        ));
    }
    Ok(PerturbationLti { delta_hat, f_hat, beta })
}

/// A loop factor to test for destabilization.
#[derive(Debug, Clone, PartialEq)]
pub enum LoopFactor {
    /// Realized by a first-order all-pass matched at `ω0`.
    Value(Complex64),
    Dynamic(TransferFunction),
}

impl From<f64> for LoopFactor {
    fn from(g: f64) -> Self {
        LoopFactor::Value(Complex64::new(g, 0.0))
    }
}

impl From<Complex64> for LoopFactor {
    fn from(f: Complex64) -> Self {
        LoopFactor::Value(f)
    }
}

impl From<&PerturbationLti> for LoopFactor {
    fn from(p: &PerturbationLti) -> Self {
        LoopFactor::Dynamic(p.f_hat.clone())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    /// A closed-loop pole sits at `jω0` within tolerance.
    Destabilizing,
    NotDestabilizing,
    /// `1 + f L(∞) = 0`: the closed loop is not well-posed.
    IllPosed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    pub verdict: Verdict,
    pub omega0: f64,
    /// Closed-loop pole nearest to `jω0`.
    pub nearest_pole: Option<Complex64>,
    pub distance: f64,
    pub tolerance: f64,
    /// Every closed-loop pole strictly in the left half-plane.
    pub closed_loop_stable: bool,
    /// `|1 / (1 + f(jω0) L(jω0))|`; very large when the perturbation
    /// places a pole at `jω0`.
    pub sensitivity_gain: f64,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.verdict != Verdict::NotDestabilizing
    }
}

/// Closes a SISO loop through `f` and checks for a closed-loop pole at
/// `jω0`. The verdict is `Destabilizing` when the nearest pole is within
/// `1e-4 max(1, ω0)`.
pub fn verify_destabilizing(l: &LtiModel, f: &LoopFactor, omega0: f64) -> Result<VerificationReport> {
    if !l.is_siso() {
        return Err(Error::Dimension("verification needs a SISO loop".into()));
    }
    if omega0.is_nan() || omega0 < 0.0 {
        return Err(Error::Domain("frequency must be nonnegative".into()));
    }
    let tf = match f {
        LoopFactor::Value(v) if omega0.is_infinite() && v.im == 0.0 => TransferFunction::gain(v.re),
        LoopFactor::Value(v) => all_pass_realization(*v, omega0)?.0,
        LoopFactor::Dynamic(t) => t.clone(),
    };
    let tolerance = 1e-4 * omega0.max(1.0);
    let fl = tf.eval_freq(omega0).and_then(|fv| Ok(fv * l.eval_siso(omega0)?));
    let sensitivity_gain = match fl {
        Ok(z) => 1.0 / (1.0 + z).norm(),
        Err(Error::PoleOnAxis(_)) => 0.0,
        Err(e) => return Err(e),
    };

    let factor = if tf.num().degree() == 0 && tf.den().degree() == 0 {
        ChannelFactor::Gain(tf.num().leading() / tf.den().leading())
    } else {
        ChannelFactor::Dynamic(tf)
    };
    let closed = match scalar_close(l, &[factor]) {
        Ok(t) => t,
        Err(Error::IllPosed) => {
            return Ok(VerificationReport {
                verdict: Verdict::IllPosed,
                omega0,
                nearest_pole: None,
                distance: f64::INFINITY,
                tolerance,
                closed_loop_stable: false,
                sensitivity_gain: f64::INFINITY,
            })
        }
        Err(e) => return Err(e),
    };
    let p = poles(&closed)?;
    let closed_loop_stable = p.iter().all(|p| p.re < 0.0);
    let target = Complex64::new(0.0, if omega0.is_finite() { omega0 } else { 0.0 });
    let nearest = p
        .iter()
        .map(|&z| {
            let z = if z.im < 0.0 { z.conj() } else { z };
            (z, (z - target).norm())
        })
        .min_by(|a, b| a.1.total_cmp(&b.1));
    let (nearest_pole, distance) = match nearest {
        Some((z, d)) if omega0.is_finite() => (Some(z), d),
        Some((z, _)) => (Some(z), f64::INFINITY),
        None => (None, f64::INFINITY),
    };
    let verdict = if distance <= tolerance {
        Verdict::Destabilizing
    } else {
        Verdict::NotDestabilizing
    };
    Ok(VerificationReport {
        verdict,
        omega0,
        nearest_pole,
        distance,
        tolerance,
        closed_loop_stable,
        sensitivity_gain,
    })
}
