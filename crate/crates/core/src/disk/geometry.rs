use alloc::format;
use alloc::vec::Vec;

use num_complex::Complex64;
#[cfg_attr(feature = "std", allow(unused_imports))]
use num_traits::Float;

use crate::{Error, Result};

/// Relative tolerance for classifying `α|1+σ| = 2` as the half-plane case.
const HALF_PLANE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiskSpec {
    pub alpha: f64,
    pub sigma: f64,
}

impl DiskSpec {
    pub fn new(alpha: f64, sigma: f64) -> Self {
        Self { alpha, sigma }
    }

    pub fn balanced(alpha: f64) -> Self {
        Self { alpha, sigma: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiskKind {
    /// Interior of a disk, `α < 2/|1+σ|`.
    Interior,
    /// Half-plane, `α = 2/|1+σ|`; one intercept is infinite.
    HalfPlane,
    /// Exterior of a disk, `α > 2/|1+σ|`.
    Exterior,
}

/// Shape of `D(α, σ)` in the complex plane. Gains are absolute, angles
/// are in radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiskGeometry {
    /// Image of `δ = -α`.
    pub gamma_min: f64,
    /// Image of `δ = +α`; `+∞` for the usual half-plane.
    pub gamma_max: f64,
    pub center: f64,
    pub radius: f64,
    /// Largest phase of any member; `+∞` when the set reaches the origin
    /// or is unbounded in every direction.
    pub phi_max: f64,
    pub kind: DiskKind,
}

/// Perturbation `f` for a normalized uncertainty `δ`. `None` is `f = ∞`.
pub fn perturbation_of(delta: Complex64, sigma: f64) -> Option<Complex64> {
    let den = 2.0 - (1.0 + sigma) * delta;
    if den == Complex64::new(0.0, 0.0) {
        return None;
    }
    Some((2.0 + (1.0 - sigma) * delta) / den)
}

fn check_spec(spec: DiskSpec) -> Result<()> {
    if spec.alpha.is_nan() || spec.alpha <= 0.0 {
        return Err(Error::Domain(format!("disk size must be positive, got {}", spec.alpha)));
    }
    if !spec.sigma.is_finite() {
        return Err(Error::Domain("skew must be finite".into()));
    }
    Ok(())
}

pub fn disk_geometry(spec: DiskSpec) -> Result<DiskGeometry> {
    check_spec(spec)?;
    let DiskSpec { alpha, sigma } = spec;
    let reach = alpha * (1.0 + sigma).abs();
    let kind = if alpha.is_infinite() {
        DiskKind::Exterior
    } else if (reach - 2.0).abs() <= HALF_PLANE_TOL * 2.0 {
        DiskKind::HalfPlane
    } else if reach < 2.0 {
        DiskKind::Interior
    } else {
        DiskKind::Exterior
    };

    if alpha.is_infinite() {
        // every f except the single point -(1-σ)/(1+σ)
        let p = -(1.0 - sigma) / (1.0 + sigma);
        return Ok(DiskGeometry {
            gamma_min: p,
            gamma_max: p,
            center: p,
            radius: 0.0,
            phi_max: f64::INFINITY,
            kind,
        });
    }

    let lo_den = 2.0 + alpha * (1.0 + sigma);
    let hi_den = 2.0 - alpha * (1.0 + sigma);
    let (gamma_min, gamma_max) = if kind == DiskKind::HalfPlane {
        // finite intercept at exactly α = 2/|1+σ|
        let x0 = sigma / (1.0 + sigma);
        if 1.0 + sigma > 0.0 {
            (x0, f64::INFINITY)
        } else {
            (f64::INFINITY, x0)
        }
    } else {
        (
            (2.0 - alpha * (1.0 - sigma)) / lo_den,
            (2.0 + alpha * (1.0 - sigma)) / hi_den,
        )
    };

    let (center, radius, phi_max) = match kind {
        DiskKind::Interior => {
            let c = 0.5 * (gamma_min + gamma_max);
            let r = 0.5 * (gamma_max - gamma_min);
            let phi = if r <= c { (r / c).asin() } else { f64::INFINITY };
            (c, r, phi)
        }
        DiskKind::HalfPlane => {
            // {Re f > x0} when it contains 1 to the right of the boundary
            let x0 = if gamma_max.is_infinite() { gamma_min } else { gamma_max };
            let phi = if (0.0..1.0).contains(&x0) {
                core::f64::consts::FRAC_PI_2
            } else {
                f64::INFINITY
            };
            (f64::INFINITY, f64::INFINITY, phi)
        }
        DiskKind::Exterior => (
            0.5 * (gamma_min + gamma_max),
            0.5 * (gamma_max - gamma_min).abs(),
            f64::INFINITY,
        ),
    };

    Ok(DiskGeometry {
        gamma_min,
        gamma_max,
        center,
        radius,
        phi_max,
        kind,
    })
}

/// Guaranteed gain-only and phase-only variations `((γ_min, γ_max), φ_m)`
/// of a disk: the real-axis intercepts and the angle at which the unit
/// circle leaves the set. `φ_m = +∞` when the whole unit circle is inside.
pub fn guaranteed_margins(spec: DiskSpec) -> Result<((f64, f64), f64)> {
    let g = disk_geometry(spec)?;
    Ok(((g.gamma_min, g.gamma_max), phase_from_intercepts(&g)))
}

pub(crate) fn phase_from_intercepts(g: &DiskGeometry) -> f64 {
    let cos_phi = if g.kind == DiskKind::HalfPlane {
        if g.gamma_max.is_infinite() {
            g.gamma_min
        } else {
            g.gamma_max
        }
    } else {
        let s = g.gamma_min + g.gamma_max;
        if s == 0.0 {
            return f64::INFINITY;
        }
        (1.0 + g.gamma_min * g.gamma_max) / s
    };
    if cos_phi.abs() > 1.0 {
        f64::INFINITY
    } else {
        cos_phi.acos()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TradeoffQuery {
    /// Absolute gain variation `γ`.
    Gain(f64),
    /// Phase variation `φ` in radians.
    Phase(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TradeoffRange {
    /// Phase variations `(-φ, φ)` allowed together with the queried gain.
    /// `π` means every phase.
    Phase(f64),
    /// Gains `(lo, hi)` allowed together with the queried phase.
    Gain(f64, f64),
    /// The query lies outside the disk.
    Empty,
}

/// Points `γ e^{jφ}` on the disk boundary satisfy
/// `γ² - γ(γ_min + γ_max)cos φ + γ_min γ_max = 0`. Given one of `γ`, `φ`
/// this returns the admissible range of the other.
pub fn gain_phase_tradeoff(spec: DiskSpec, query: TradeoffQuery) -> Result<TradeoffRange> {
    let g = disk_geometry(spec)?;
    if g.kind != DiskKind::Interior {
        return Err(Error::Unsupported(
            "gain/phase trade-off requires an interior-disk geometry".into(),
        ));
    }
    let s = g.gamma_min + g.gamma_max;
    let p = g.gamma_min * g.gamma_max;
    match query {
        TradeoffQuery::Gain(gamma) => {
            if gamma.is_nan() || gamma <= 0.0 || s == 0.0 {
                return Ok(TradeoffRange::Empty);
            }
            let c = (gamma * gamma + p) / (gamma * s);
            if c > 1.0 {
                Ok(TradeoffRange::Empty)
            } else if c < -1.0 {
                Ok(TradeoffRange::Phase(core::f64::consts::PI))
            } else {
                Ok(TradeoffRange::Phase(c.acos()))
            }
        }
        TradeoffQuery::Phase(phi) => {
            let b = s * phi.cos();
            let disc = b * b - 4.0 * p;
            if disc < 0.0 {
                return Ok(TradeoffRange::Empty);
            }
            let r = disc.sqrt();
            let (lo, hi) = (0.5 * (b - r), 0.5 * (b + r));
            if hi <= 0.0 {
                return Ok(TradeoffRange::Empty);
            }
            Ok(TradeoffRange::Gain(lo.max(0.0), hi))
        }
    }
}

/// Boundary of the safe gain/phase region as `(gain dB, phase deg)` for
/// `δ = α e^{jθ}`, `θ ∈ [0, π]`. A boundary point at infinity is
/// reported as `(+∞, 0)`.
pub fn safe_region_curve(spec: DiskSpec, n: usize) -> Result<Vec<(f64, f64)>> {
    check_spec(spec)?;
    if n < 2 {
        return Err(Error::Input("safe region curve needs at least 2 points".into()));
    }
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let theta = core::f64::consts::PI * i as f64 / (n - 1) as f64;
        let delta = Complex64::from_polar(spec.alpha, theta);
        let pt = match perturbation_of(delta, spec.sigma) {
            Some(f) if f.is_finite() => (20.0 * f.norm().log10(), f.arg().to_degrees()),
            _ => (f64::INFINITY, 0.0),
        };
        out.push(pt);
    }
    Ok(out)
}

/// The region `{-1/f : f ∈ D(α, σ)}` that the Nyquist curve of a loop
/// with disk margin `α` must avoid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExclusionDisk {
    pub center: f64,
    pub radius: f64,
    /// `(-1/γ_min, -1/γ_max)`.
    pub intercepts: (f64, f64),
}

pub fn nyquist_exclusion(spec: DiskSpec) -> Result<ExclusionDisk> {
    let g = disk_geometry(spec)?;
    if g.kind != DiskKind::Interior {
        return Err(Error::Unsupported(format!(
            "exclusion region needs an interior disk (alpha*|1+sigma| < 2), got alpha={} sigma={}",
            spec.alpha, spec.sigma
        )));
    }
    if !(g.gamma_min > 0.0 && g.gamma_min < 1.0) {
        return Err(Error::Unsupported(format!(
            "exclusion region needs 0 < gamma_min < 1, got {}",
            g.gamma_min
        )));
    }
    if !(g.gamma_max > 1.0 && g.gamma_max.is_finite()) {
        return Err(Error::Unsupported(format!(
            "exclusion region needs 1 < gamma_max < inf, got {}",
            g.gamma_max
        )));
    }
    let a = -1.0 / g.gamma_min;
    let b = -1.0 / g.gamma_max;
    Ok(ExclusionDisk {
        center: 0.5 * (a + b),
        radius: 0.5 * (b - a),
        intercepts: (a, b),
    })
}
