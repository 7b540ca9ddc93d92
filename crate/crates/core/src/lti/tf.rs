use alloc::vec::Vec;
use core::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
#[cfg_attr(feature = "std", allow(unused_imports))]
use num_traits::Float;

use super::{Polynomial, StateSpace};
use crate::{Error, Result};

/// SISO rational transfer function `num(s) / den(s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferFunction {
    num: Polynomial,
    den: Polynomial,
}

impl TransferFunction {
    pub fn new(num: Polynomial, den: Polynomial) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::ZeroDenominator);
        }
        Ok(Self { num, den })
    }

    pub fn from_coeffs(num: &[f64], den: &[f64]) -> Result<Self> {
        Self::new(Polynomial::new(num.to_vec())?, Polynomial::new(den.to_vec())?)
    }

    pub fn gain(k: f64) -> Self {
        Self {
            num: Polynomial::constant(k),
            den: Polynomial::one(),
        }
    }

    pub fn num(&self) -> &Polynomial {
        &self.num
    }

    pub fn den(&self) -> &Polynomial {
        &self.den
    }

    pub fn is_proper(&self) -> bool {
        self.num.is_zero() || self.num.degree() <= self.den.degree()
    }

    pub fn is_strictly_proper(&self) -> bool {
        self.num.is_zero() || self.num.degree() < self.den.degree()
    }

    pub fn eval(&self, s: Complex64) -> Result<Complex64> {
        let d = self.den.eval(s);
        let n = self.num.eval(s);
        let scale = self.den.norm() * s.norm().max(1.0).powi(self.den.degree() as i32);
        if d.norm() <= 1e-14 * scale {
            if n.norm() <= 1e-14 * scale.max(self.num.norm()) {
                // common root of numerator and denominator: use l'Hopital
                return TransferFunction::new(self.num.derivative(), self.den.derivative())?.eval(s);
            }
            return Err(Error::PoleOnAxis(s.im));
        }
        Ok(n / d)
    }

    /// Frequency response `G(jω)`; `ω = +∞` returns the high-frequency
    /// limit of a proper transfer function.
    pub fn eval_freq(&self, omega: f64) -> Result<Complex64> {
        if omega.is_infinite() {
            return Ok(Complex64::new(self.feedthrough()?, 0.0));
        }
        self.eval(Complex64::new(0.0, omega))
    }

    /// Value at `s = ∞` (zero for strictly proper models).
    pub fn feedthrough(&self) -> Result<f64> {
        if !self.is_proper() {
            return Err(Error::Improper);
        }
        if self.is_strictly_proper() {
            Ok(0.0)
        } else {
            Ok(self.num.leading() / self.den.leading())
        }
    }

    pub fn poles(&self) -> Result<Vec<Complex64>> {
        if self.den.degree() == 0 {
            return Ok(Vec::new());
        }
        self.den.roots()
    }

    pub fn zeros(&self) -> Result<Vec<Complex64>> {
        if self.num.is_zero() || self.num.degree() == 0 {
            return Ok(Vec::new());
        }
        self.num.roots()
    }

    pub fn scale(&self, k: f64) -> Self {
        Self {
            num: self.num.scale(k),
            den: self.den.clone(),
        }
    }

    pub fn neg(&self) -> Self {
        self.scale(-1.0)
    }

    pub fn add(&self, other: &Self) -> Self {
        if self.den == other.den {
            return Self {
                num: self.num.add(&other.num),
                den: self.den.clone(),
            };
        }
        Self {
            num: self.num.mul(&other.den).add(&other.num.mul(&self.den)),
            den: self.den.mul(&other.den),
        }
    }

    pub fn add_constant(&self, c: f64) -> Self {
        Self {
            num: self.num.add(&self.den.scale(c)),
            den: self.den.clone(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        Self {
            num: self.num.mul(&other.num),
            den: self.den.mul(&other.den),
        }
    }

    /// Denominator made monic; the response is unchanged.
    pub fn normalized(&self) -> Self {
        let k = self.den.leading();
        Self {
            num: self.num.scale(1.0 / k),
            den: self.den.scale(1.0 / k),
        }
    }

    /// Cancels numerator/denominator roots that agree within `tol`
    /// (relative to the root magnitude).
    pub fn minreal(&self, tol: f64) -> Result<Self> {
        let nz = self.zeros()?;
        let np = self.poles()?;
        if nz.is_empty() || np.is_empty() {
            return Ok(self.normalized());
        }
        let mut poles = np;
        let mut zeros = Vec::new();
        for z in nz {
            let hit = poles.iter().position(|p| (p - z).norm() <= tol * z.norm().max(1.0));
            match hit {
                Some(i) => {
                    poles.swap_remove(i);
                }
                None => zeros.push(z),
            }
        }
        let k = self.num.leading() / self.den.leading();
        Self::new(Polynomial::from_roots(&zeros, k), Polynomial::from_roots(&poles, 1.0))
    }

    /// Controllable canonical realization. `D` carries the direct term.
    pub fn to_ss(&self) -> Result<StateSpace> {
        if !self.is_proper() {
            return Err(Error::Improper);
        }
        let tf = self.normalized();
        let n = tf.den.degree();
        let d = if tf.num.degree() == n && !tf.num.is_zero() {
            tf.num.leading()
        } else {
            0.0
        };
        if n == 0 {
            return StateSpace::new(
                DMatrix::zeros(0, 0),
                DMatrix::zeros(0, 1),
                DMatrix::zeros(1, 0),
                DMatrix::from_element(1, 1, d),
            );
        }
        let rem = tf.num.sub(&tf.den.scale(d));
        let mut a = DMatrix::zeros(n, n);
        let mut b = DMatrix::zeros(n, 1);
        let mut c = DMatrix::zeros(1, n);
        for j in 0..n {
            a[(0, j)] = -tf.den.coeff_of_power(n - 1 - j);
            c[(0, j)] = rem.coeff_of_power(n - 1 - j);
        }
        for i in 1..n {
            a[(i, i - 1)] = 1.0;
        }
        b[(0, 0)] = 1.0;
        StateSpace::new(a, b, c, DMatrix::from_element(1, 1, d))
    }
}

impl fmt::Display for TransferFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}) / ({})", self.num, self.den)
    }
}
