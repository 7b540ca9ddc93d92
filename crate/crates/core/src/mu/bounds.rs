use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DVector;
use num_complex::Complex64;
#[cfg_attr(feature = "std", allow(unused_imports))]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::linalg::{complex_eigenvalues, max_singular_value, CMatrix};
use crate::optim::nelder_mead;
use crate::{Error, Result};

pub const DEFAULT_SEED: u64 = 0x5eed_d15c;

const RESTARTS: usize = 5;
const PHASE_ITERS: usize = 30;
/// Log-scalings are kept in this range so that channels that do not
/// couple cannot push the search to overflow.
const LOG_D_LIMIT: f64 = 30.0;

/// Bounds on the structured singular value for diagonal complex
/// uncertainty, `μ(M) = 1 / min{ ‖Δ‖ : det(I - MΔ) = 0 }`.
#[derive(Debug, Clone, PartialEq)]
pub struct MuResult {
    pub upper: f64,
    pub lower: f64,
    /// Diagonal of a `Δ` with `‖Δ‖ = 1/lower` and `det(I - MΔ) = 0`;
    /// `None` when `lower = 0`.
    pub delta_worst: Option<Vec<Complex64>>,
    /// Set by frequency sweeps.
    pub frequency: Option<f64>,
    /// Optimal diagonal scaling for the upper bound.
    pub scaling: Vec<f64>,
    /// Lower-bound search reached the upper bound within `1e-6`.
    pub converged: bool,
}

pub fn mu_diag(m: &CMatrix) -> Result<MuResult> {
    mu_diag_seeded(m, DEFAULT_SEED)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Effort {
    /// One simplex pass for the upper bound, no restarts or polishing
    /// for the lower bound. Both remain valid bounds.
    Quick,
    Full,
}

/// Upper bound: `inf_D σ̄(D M D⁻¹)` over positive diagonal `D`, started
/// from Osborne balancing and refined by simplex search in `log D`.
/// Lower bound: `max_Q ρ(QM)` over unitary diagonal `Q`, searched by a
/// phase-alignment power iteration from the scaled singular vectors and
/// from seeded random restarts, each polished by simplex search.
pub fn mu_diag_seeded(m: &CMatrix, seed: u64) -> Result<MuResult> {
    mu_bounds(m, seed, Effort::Full)
}

pub(crate) fn mu_bounds(m: &CMatrix, seed: u64, effort: Effort) -> Result<MuResult> {
    let n = m.nrows();
    if n == 0 || m.ncols() != n {
        return Err(Error::Dimension("mu needs a nonempty square matrix".into()));
    }
    if !m.iter().all(|z| z.is_finite()) {
        return Err(Error::Domain("matrix has non-finite entries".into()));
    }
    if n == 1 {
        let v = m[(0, 0)];
        let r = v.norm();
        return Ok(MuResult {
            upper: r,
            lower: r,
            delta_worst: (r > 0.0).then(|| vec![v.inv()]),
            frequency: None,
            scaling: vec![1.0],
            converged: true,
        });
    }

    let (upper, logd) = upper_bound(m, effort);
    let scaled = scale(m, &logd);
    let mut lb = Lower::new(m, effort);
    // phases that align the top singular vectors of the scaled matrix
    // achieve the upper bound whenever it is tight
    let svd = scaled.clone().svd(true, true);
    if let (Some(u), Some(vt)) = (svd.u.as_ref(), svd.v_t.as_ref()) {
        let k = (0..svd.singular_values.len())
            .max_by(|&i, &j| svd.singular_values[i].total_cmp(&svd.singular_values[j]))
            .unwrap_or(0);
        let theta: Vec<f64> = (0..n).map(|i| (vt[(k, i)].conj() / u[(i, k)]).arg()).collect();
        lb.search(&theta);
    }
    if effort == Effort::Quick {
        return Ok(MuResult {
            upper,
            lower: lb.best.min(upper),
            delta_worst: lb.delta(),
            frequency: None,
            scaling: logd.iter().map(|x| x.exp()).collect(),
            converged: lb.best >= upper * (1.0 - 1e-6),
        });
    }
    lb.search(&vec![0.0; n]);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..RESTARTS {
        if lb.best >= upper * (1.0 - 1e-9) {
            break;
        }
        let theta: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * core::f64::consts::TAU).collect();
        lb.search(&theta);
    }

    let lower = lb.best.min(upper);
    let delta_worst = lb.delta();
    Ok(MuResult {
        upper,
        lower,
        delta_worst,
        frequency: None,
        scaling: logd.iter().map(|x| x.exp()).collect(),
        converged: lb.best >= upper * (1.0 - 1e-6),
    })
}

fn scale(m: &CMatrix, logd: &[f64]) -> CMatrix {
    let n = m.nrows();
    CMatrix::from_fn(n, n, |i, j| m[(i, j)] * (logd[i] - logd[j]).exp())
}

fn upper_bound(m: &CMatrix, effort: Effort) -> (f64, Vec<f64>) {
    let n = m.nrows();
    let plain = max_singular_value(m);
    let mut logd = osborne(m);
    let cost = |x: &[f64]| -> f64 {
        let mut full = Vec::with_capacity(n);
        full.push(0.0);
        full.extend(x.iter().map(|v| v.clamp(-LOG_D_LIMIT, LOG_D_LIMIT)));
        max_singular_value(&scale(m, &full))
    };
    let mut x: Vec<f64> = logd[1..].to_vec();
    let mut fx = cost(&x);
    let passes: &[f64] = match effort {
        Effort::Quick => &[0.3],
        Effort::Full => &[0.5, 0.05, 0.005],
    };
    for &step in passes {
        let (xn, fnew) = nelder_mead(&cost, &x, step, 1e-13, 4000);
        if fnew <= fx {
            x = xn;
            fx = fnew;
        }
    }
    logd = core::iter::once(0.0)
        .chain(x.iter().map(|v| v.clamp(-LOG_D_LIMIT, LOG_D_LIMIT)))
        .collect();
    if plain < fx {
        return (plain, vec![0.0; n]);
    }
    (fx, logd)
}

/// Diagonal balancing of `|M|` (row and column 2-norms equalized),
/// normalized so that the first scaling is 1.
fn osborne(m: &CMatrix) -> Vec<f64> {
    let n = m.nrows();
    let abs: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| m[(i, j)].norm()).collect()).collect();
    let mut logd = vec![0.0; n];
    for _ in 0..50 {
        let mut moved = 0.0_f64;
        for i in 0..n {
            let mut row = 0.0;
            let mut col = 0.0;
            for j in 0..n {
                if j != i {
                    let r = abs[i][j] * (logd[i] - logd[j]).exp();
                    let c = abs[j][i] * (logd[j] - logd[i]).exp();
                    row += r * r;
                    col += c * c;
                }
            }
            if row > 0.0 && col > 0.0 {
                let step = 0.25 * (col / row).ln();
                logd[i] = (logd[i] + step).clamp(-LOG_D_LIMIT, LOG_D_LIMIT);
                moved = moved.max(step.abs());
            }
        }
        if moved < 1e-10 {
            break;
        }
    }
    let base = logd[0];
    logd.iter().map(|x| x - base).collect()
}

/// Running best of `ρ(QM)` over unitary diagonal `Q`.
struct Lower<'a> {
    m: &'a CMatrix,
    effort: Effort,
    best: f64,
    theta: Vec<f64>,
    lambda: Complex64,
}

impl<'a> Lower<'a> {
    fn new(m: &'a CMatrix, effort: Effort) -> Self {
        Self {
            m,
            effort,
            best: 0.0,
            theta: vec![0.0; m.nrows()],
            lambda: Complex64::new(0.0, 0.0),
        }
    }

    fn qm(&self, theta: &[f64]) -> CMatrix {
        let n = self.m.nrows();
        CMatrix::from_fn(n, n, |i, j| Complex64::from_polar(1.0, theta[i]) * self.m[(i, j)])
    }

    fn dominant(&self, theta: &[f64]) -> Option<Complex64> {
        complex_eigenvalues(&self.qm(theta))
            .ok()?
            .into_iter()
            .max_by(|a, b| a.norm().total_cmp(&b.norm()))
    }

    fn offer(&mut self, theta: &[f64]) -> f64 {
        let Some(lambda) = self.dominant(theta) else {
            return 0.0;
        };
        let r = lambda.norm();
        if r > self.best {
            self.best = r;
            self.theta = theta.to_vec();
            self.lambda = lambda;
        }
        r
    }

    /// Phase-alignment power iteration: with `x` the dominant eigenvector
    /// of `QM`, choose `Q` so that `Q M x` points along `x` entrywise.
    fn power(&mut self, theta0: &[f64]) -> Vec<f64> {
        let n = self.m.nrows();
        let mut theta = theta0.to_vec();
        let mut x = DVector::from_fn(n, |i, _| Complex64::new(1.0 + 0.1 * i as f64, 0.0));
        let mut last = 0.0;
        for _ in 0..PHASE_ITERS {
            let r = self.offer(&theta);
            let qm = self.qm(&theta);
            // a few power steps for the dominant eigenvector
            for _ in 0..20 {
                let y = &qm * &x;
                let nrm = y.norm();
                if nrm == 0.0 {
                    return theta;
                }
                x = y / Complex64::new(nrm, 0.0);
            }
            let a = self.m * &x;
            for i in 0..n {
                if a[i].norm() > 0.0 && x[i].norm() > 0.0 {
                    theta[i] = (x[i] / a[i]).arg();
                }
            }
            if (r - last).abs() <= 1e-13 * r.max(1e-300) {
                break;
            }
            last = r;
        }
        self.offer(&theta);
        theta
    }

    fn search(&mut self, theta0: &[f64]) {
        let theta = self.power(theta0);
        if self.effort == Effort::Quick {
            return;
        }
        let n = theta.len();
        let fixed = theta[0];
        let cost = |x: &[f64]| -> f64 {
            let mut t = Vec::with_capacity(n);
            t.push(fixed);
            t.extend_from_slice(x);
            -self.dominant(&t).map_or(0.0, |l| l.norm())
        };
        let (x, _) = nelder_mead(cost, &theta[1..], 0.3, 1e-13, 2000);
        let mut t = vec![fixed];
        t.extend(x);
        self.offer(&t);
    }

    fn delta(&self) -> Option<Vec<Complex64>> {
        if self.best == 0.0 {
            return None;
        }
        // ρ(QM) = |λ| and det(I - QM/λ) = 0, so Δ = Q/λ
        Some(
            self.theta
                .iter()
                .map(|&t| Complex64::from_polar(1.0, t) / self.lambda)
                .collect(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::complex_det;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn det_residual(m: &CMatrix, r: &MuResult) -> f64 {
        let d = r.delta_worst.as_ref().unwrap();
        let n = m.nrows();
        let md = CMatrix::from_fn(n, n, |i, j| m[(i, j)] * d[j]);
        complex_det(&(CMatrix::identity(n, n) - md)).norm()
    }

    #[test]
    fn scalar() {
        let m = CMatrix::from_element(1, 1, c(3.0, 4.0));
        let r = mu_diag(&m).unwrap();
        assert_eq!(r.upper, 5.0);
        assert_eq!(r.lower, 5.0);
        assert!(det_residual(&m, &r) < 1e-15);
    }

    #[test]
    fn identity() {
        let m = CMatrix::identity(2, 2);
        let r = mu_diag(&m).unwrap();
        assert_relative_eq!(r.upper, 1.0, max_relative = 1e-9);
        assert_relative_eq!(r.lower, 1.0, max_relative = 1e-9);
    }

    #[test]
    fn rank_one_is_exact() {
        // μ(u v*) = Σ |u_i v_i|
        let u = [c(1.0, 0.5), c(-0.3, 2.0), c(0.7, -0.1)];
        let v = [c(0.2, 1.0), c(1.5, 0.0), c(-0.4, 0.9)];
        let m = CMatrix::from_fn(3, 3, |i, j| u[i] * v[j].conj());
        let exact: f64 = (0..3).map(|i| (u[i] * v[i]).norm()).sum();
        let r = mu_diag(&m).unwrap();
        assert_relative_eq!(r.lower, exact, max_relative = 1e-6);
        assert!(r.upper >= exact * (1.0 - 1e-9));
        assert_relative_eq!(r.upper, exact, max_relative = 1e-3);
    }

    #[test]
    fn zero_matrix() {
        let r = mu_diag(&CMatrix::zeros(2, 2)).unwrap();
        assert_eq!(r.upper, 0.0);
        assert_eq!(r.lower, 0.0);
        assert!(r.delta_worst.is_none());
    }

    #[test]
    fn triangular_is_spectral_radius() {
        let m = CMatrix::from_row_slice(2, 2, &[c(0.5, 0.0), c(100.0, 3.0), c(0.0, 0.0), c(0.0, -2.0)]);
        let r = mu_diag(&m).unwrap();
        assert_relative_eq!(r.lower, 2.0, max_relative = 1e-9);
        assert_relative_eq!(r.upper, 2.0, max_relative = 1e-4);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(mu_diag(&CMatrix::zeros(2, 3)).is_err());
        assert!(mu_diag(&CMatrix::zeros(0, 0)).is_err());
    }

    fn matrix(n: usize) -> impl Strategy<Value = CMatrix> {
        proptest::collection::vec(-3.0f64..3.0, 2 * n * n)
            .prop_map(move |v| CMatrix::from_fn(n, n, |i, j| c(v[2 * (i * n + j)], v[2 * (i * n + j) + 1])))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn sandwich_and_residual(m in matrix(3)) {
            let r = mu_diag(&m).unwrap();
            prop_assert!(r.lower <= r.upper * (1.0 + 1e-12));
            prop_assert!(r.upper <= max_singular_value(&m) * (1.0 + 1e-12));
            let rho = complex_eigenvalues(&m).unwrap().iter().fold(0.0f64, |a, z| a.max(z.norm()));
            prop_assert!(r.lower >= rho * (1.0 - 1e-9));
            prop_assert!(det_residual(&m, &r) <= 1e-9 * (1.0 + max_singular_value(&m)));
            let d = r.delta_worst.unwrap();
            let dn = d.iter().fold(0.0f64, |a, z| a.max(z.norm()));
            prop_assert!((dn * r.lower - 1.0).abs() <= 1e-9);
            prop_assert!(r.upper <= r.lower * 1.005, "gap {} {}", r.lower, r.upper);
        }

        #[test]
        fn homogeneous(m in matrix(2), k in 0.1f64..5.0, ph in 0.0f64..6.0) {
            let a = mu_diag(&m).unwrap();
            let s = Complex64::from_polar(k, ph);
            let b = mu_diag(&(m.clone() * s)).unwrap();
            prop_assert!((b.upper - k * a.upper).abs() <= 1e-9 * (1.0 + k * a.upper));
            prop_assert!((b.lower - k * a.lower).abs() <= 1e-9 * (1.0 + k * a.lower));
        }
    }
}
