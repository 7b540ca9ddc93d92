use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
#[cfg_attr(feature = "std", allow(unused_imports))]
use num_traits::Float;

use crate::linalg;
use crate::{Error, Result};

/// Real polynomial in `s`, coefficients in descending powers.
///
/// Leading zeros are stripped on construction; the zero polynomial is
/// stored as `[0.0]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::EmptyPolynomial);
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::Input("non-finite polynomial coefficient".into()));
        }
        Ok(Self::from_vec_trimmed(coeffs))
    }

    fn from_vec_trimmed(coeffs: Vec<f64>) -> Self {
        let first = coeffs.iter().position(|&c| c != 0.0);
        let coeffs = match first {
            Some(i) => coeffs[i..].to_vec(),
            None => vec![0.0],
        };
        Self { coeffs }
    }

    pub fn constant(c: f64) -> Self {
        Self { coeffs: vec![c] }
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    pub fn one() -> Self {
        Self::constant(1.0)
    }

    /// The monomial `s`.
    pub fn s() -> Self {
        Self { coeffs: vec![1.0, 0.0] }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.len() == 1 && self.coeffs[0] == 0.0
    }

    pub fn leading(&self) -> f64 {
        self.coeffs[0]
    }

    /// Coefficient of `s^k`, zero beyond the degree.
    pub fn coeff_of_power(&self, k: usize) -> f64 {
        if k > self.degree() {
            0.0
        } else {
            self.coeffs[self.degree() - k]
        }
    }

    pub fn eval(&self, s: Complex64) -> Complex64 {
        self.coeffs.iter().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * s + c)
    }

    pub fn eval_real(&self, x: f64) -> f64 {
        self.coeffs.iter().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn derivative(&self) -> Self {
        let d = self.degree();
        if d == 0 {
            return Self::zero();
        }
        let coeffs = self.coeffs[..d]
            .iter()
            .enumerate()
            .map(|(i, &c)| c * (d - i) as f64)
            .collect();
        Self::from_vec_trimmed(coeffs)
    }

    pub fn scale(&self, k: f64) -> Self {
        Self::from_vec_trimmed(self.coeffs.iter().map(|c| c * k).collect())
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut out = vec![0.0; n];
        for (i, c) in self.coeffs.iter().rev().enumerate() {
            out[n - 1 - i] += c;
        }
        for (i, c) in other.coeffs.iter().rev().enumerate() {
            out[n - 1 - i] += c;
        }
        Self::from_vec_trimmed(out)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = vec![0.0; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self::from_vec_trimmed(out)
    }

    /// Euclidean norm of the coefficient vector.
    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    /// Monic polynomial `gain · Π (s - r)`. Complex roots must appear in
    /// conjugate pairs; imaginary residue in the product is discarded.
    pub fn from_roots(roots: &[Complex64], gain: f64) -> Self {
        let mut acc = vec![Complex64::new(1.0, 0.0)];
        for r in roots {
            let mut next = vec![Complex64::new(0.0, 0.0); acc.len() + 1];
            for (i, c) in acc.iter().enumerate() {
                next[i] += c;
                next[i + 1] -= c * r;
            }
            acc = next;
        }
        Self::from_vec_trimmed(acc.iter().map(|c| c.re * gain).collect())
    }

    /// All roots with multiplicity, from the eigenvalues of the companion
    /// matrix followed by a guarded Newton polish.
    pub fn roots(&self) -> Result<Vec<Complex64>> {
        if self.is_zero() || self.degree() == 0 {
            return Err(Error::NoRoots);
        }
        let mut coeffs = self.coeffs.clone();
        let mut zeros = 0;
        while coeffs.len() > 1 && *coeffs.last().unwrap() == 0.0 {
            coeffs.pop();
            zeros += 1;
        }
        let mut roots = vec![Complex64::new(0.0, 0.0); zeros];
        let n = coeffs.len() - 1;
        match n {
            0 => {}
            1 => roots.push(Complex64::new(-coeffs[1] / coeffs[0], 0.0)),
            _ => {
                let lead = coeffs[0];
                let mut companion = DMatrix::<f64>::zeros(n, n);
                for j in 0..n {
                    companion[(0, j)] = -coeffs[j + 1] / lead;
                }
                for i in 1..n {
                    companion[(i, i - 1)] = 1.0;
                }
                let reduced = Polynomial { coeffs };
                let deriv = reduced.derivative();
                for r in linalg::eigenvalues(&companion)? {
                    roots.push(polish(&reduced, &deriv, r));
                }
            }
        }
        Ok(roots)
    }
}

fn polish(p: &Polynomial, dp: &Polynomial, mut r: Complex64) -> Complex64 {
    let mut res = p.eval(r).norm();
    for _ in 0..3 {
        let d = dp.eval(r);
        if d.norm() == 0.0 {
            break;
        }
        let cand = r - p.eval(r) / d;
        let cand_res = p.eval(cand).norm();
        if cand_res < res && cand.re.is_finite() && cand.im.is_finite() {
            r = cand;
            res = cand_res;
        } else {
            break;
        }
    }
    // keep real roots exactly real when the imaginary part is noise
    if r.im.abs() <= 1e-12 * r.norm().max(1e-300) {
        r.im = 0.0;
    }
    r
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let d = self.degree();
        let mut first = true;
        for (i, &c) in self.coeffs.iter().enumerate() {
            let p = d - i;
            if c == 0.0 && !(d == 0) {
                continue;
            }
            if !first {
                f.write_str(if c < 0.0 { " - " } else { " + " })?;
            } else if c < 0.0 {
                f.write_str("-")?;
            }
            first = false;
            let a = c.abs();
            match p {
                0 => write!(f, "{a}")?,
                1 if a == 1.0 => f.write_str("s")?,
                1 => write!(f, "{a}s")?,
                _ if a == 1.0 => write!(f, "s^{p}")?,
                _ => write!(f, "{a}s^{p}")?,
            }
        }
        Ok(())
    }
}
