use alloc::format;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{Polynomial, TransferFunction};
use crate::linalg::{self, CMatrix};
use crate::{Error, Result};

/// Continuous-time state-space model `x' = A x + B u`, `y = C x + D u`.
/// Zero states is a static gain `D`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpace {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    c: DMatrix<f64>,
    d: DMatrix<f64>,
}

impl StateSpace {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, c: DMatrix<f64>, d: DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::Dimension(format!("A is {}x{}", n, a.ncols())));
        }
        if b.nrows() != n || c.ncols() != n {
            return Err(Error::Dimension(format!(
                "B has {} rows and C has {} columns, expected {n}",
                b.nrows(),
                c.ncols()
            )));
        }
        if d.nrows() != c.nrows() || d.ncols() != b.ncols() {
            return Err(Error::Dimension(format!(
                "D is {}x{}, expected {}x{}",
                d.nrows(),
                d.ncols(),
                c.nrows(),
                b.ncols()
            )));
        }
        if a.iter()
            .chain(b.iter())
            .chain(c.iter())
            .chain(d.iter())
            .any(|x| !x.is_finite())
        {
            return Err(Error::Input("non-finite state-space entry".into()));
        }
        Ok(Self { a, b, c, d })
    }

    pub fn static_gain(d: DMatrix<f64>) -> Self {
        let (p, m) = d.shape();
        Self {
            a: DMatrix::zeros(0, 0),
            b: DMatrix::zeros(0, m),
            c: DMatrix::zeros(p, 0),
            d,
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::static_gain(DMatrix::identity(n, n))
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }
    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }
    pub fn c(&self) -> &DMatrix<f64> {
        &self.c
    }
    pub fn d(&self) -> &DMatrix<f64> {
        &self.d
    }

    pub fn n_states(&self) -> usize {
        self.a.nrows()
    }
    pub fn n_inputs(&self) -> usize {
        self.b.ncols()
    }
    pub fn n_outputs(&self) -> usize {
        self.c.nrows()
    }

    pub fn poles(&self) -> Result<Vec<Complex64>> {
        linalg::eigenvalues(&self.a)
    }

    /// `C (sI - A)^{-1} B + D`.
    pub fn eval(&self, s: Complex64) -> Result<CMatrix> {
        let d = linalg::complexify(&self.d);
        let n = self.n_states();
        if n == 0 {
            return Ok(d);
        }
        let mut si_a = linalg::complexify(&self.a).map(|x| -x);
        for i in 0..n {
            si_a[(i, i)] += s;
        }
        let lu = si_a.lu();
        let scale = linalg::max_abs(&self.a).max(s.norm()).max(1.0);
        let u = lu.u();
        let min_pivot = (0..n).map(|i| u[(i, i)].norm()).fold(f64::INFINITY, f64::min);
        if min_pivot <= 1e-13 * scale {
            return Err(Error::PoleOnAxis(s.im));
        }
        let x = lu.solve(&linalg::complexify(&self.b)).ok_or(Error::PoleOnAxis(s.im))?;
        Ok(linalg::complexify(&self.c) * x + d)
    }

    /// Frequency response; `ω = +∞` evaluates the feedthrough `D`.
    pub fn eval_freq(&self, omega: f64) -> Result<CMatrix> {
        if omega.is_infinite() {
            return Ok(linalg::complexify(&self.d));
        }
        self.eval(Complex64::new(0.0, omega))
    }

    /// Transfer function of the `(i, j)` entry.
    pub fn entry_tf(&self, i: usize, j: usize) -> Result<TransferFunction> {
        if i >= self.n_outputs() || j >= self.n_inputs() {
            return Err(Error::Dimension(format!("entry ({i},{j}) out of range")));
        }
        let dij = self.d[(i, j)];
        let n = self.n_states();
        if n == 0 {
            return Ok(TransferFunction::gain(dij));
        }
        let b = self.b.column(j).into_owned();
        let c = self.c.row(i).into_owned();
        // det(sI - A + b c) = det(sI - A) (1 + c (sI - A)^{-1} b)
        let den = Polynomial::from_roots(&linalg::eigenvalues(&self.a)?, 1.0);
        let closed = &self.a - &b * &c;
        let den_closed = Polynomial::from_roots(&linalg::eigenvalues(&closed)?, 1.0);
        let num = den_closed.sub(&den).add(&den.scale(dij));
        TransferFunction::new(num, den)
    }

    /// Transfer function of a SISO model.
    pub fn to_tf(&self) -> Result<TransferFunction> {
        if self.n_inputs() != 1 || self.n_outputs() != 1 {
            return Err(Error::Dimension("to_tf needs a SISO model".into()));
        }
        self.entry_tf(0, 0)
    }

    pub fn scale(&self, k: f64) -> Self {
        Self {
            a: self.a.clone(),
            b: self.b.clone(),
            c: &self.c * k,
            d: &self.d * k,
        }
    }

    pub fn neg(&self) -> Self {
        self.scale(-1.0)
    }

    /// Adds `k·I` to the feedthrough of a square model.
    pub fn add_identity(&self, k: f64) -> Result<Self> {
        if self.n_inputs() != self.n_outputs() {
            return Err(Error::Dimension("add_identity needs a square model".into()));
        }
        let mut out = self.clone();
        for i in 0..out.d.nrows() {
            out.d[(i, i)] += k;
        }
        Ok(out)
    }

    /// `self` followed by `next`: the transfer matrix `next · self`.
    pub fn series(&self, next: &Self) -> Result<Self> {
        if self.n_outputs() != next.n_inputs() {
            return Err(Error::Dimension(format!(
                "series: {} outputs feed {} inputs",
                self.n_outputs(),
                next.n_inputs()
            )));
        }
        let (n1, n2) = (self.n_states(), next.n_states());
        let mut a = DMatrix::zeros(n1 + n2, n1 + n2);
        a.view_mut((0, 0), (n1, n1)).copy_from(&self.a);
        a.view_mut((n1, n1), (n2, n2)).copy_from(&next.a);
        a.view_mut((n1, 0), (n2, n1)).copy_from(&(&next.b * &self.c));
        let mut b = DMatrix::zeros(n1 + n2, self.n_inputs());
        b.view_mut((0, 0), (n1, self.n_inputs())).copy_from(&self.b);
        b.view_mut((n1, 0), (n2, self.n_inputs()))
            .copy_from(&(&next.b * &self.d));
        let mut c = DMatrix::zeros(next.n_outputs(), n1 + n2);
        c.view_mut((0, 0), (next.n_outputs(), n1))
            .copy_from(&(&next.d * &self.c));
        c.view_mut((0, n1), (next.n_outputs(), n2)).copy_from(&next.c);
        let d = &next.d * &self.d;
        Self::new(a, b, c, d)
    }

    /// Sum of two models with identical input/output sizes.
    pub fn parallel(&self, other: &Self) -> Result<Self> {
        if self.n_inputs() != other.n_inputs() || self.n_outputs() != other.n_outputs() {
            return Err(Error::Dimension("parallel: shapes differ".into()));
        }
        let (n1, n2) = (self.n_states(), other.n_states());
        let mut a = DMatrix::zeros(n1 + n2, n1 + n2);
        a.view_mut((0, 0), (n1, n1)).copy_from(&self.a);
        a.view_mut((n1, n1), (n2, n2)).copy_from(&other.a);
        let mut b = DMatrix::zeros(n1 + n2, self.n_inputs());
        b.view_mut((0, 0), (n1, self.n_inputs())).copy_from(&self.b);
        b.view_mut((n1, 0), (n2, self.n_inputs())).copy_from(&other.b);
        let mut c = DMatrix::zeros(self.n_outputs(), n1 + n2);
        c.view_mut((0, 0), (self.n_outputs(), n1)).copy_from(&self.c);
        c.view_mut((0, n1), (self.n_outputs(), n2)).copy_from(&other.c);
        Self::new(a, b, c, &self.d + &other.d)
    }

    /// Block-diagonal append of several models.
    pub fn block_diag(parts: &[Self]) -> Result<Self> {
        let n: usize = parts.iter().map(Self::n_states).sum();
        let m: usize = parts.iter().map(Self::n_inputs).sum();
        let p: usize = parts.iter().map(Self::n_outputs).sum();
        let mut a = DMatrix::zeros(n, n);
        let mut b = DMatrix::zeros(n, m);
        let mut c = DMatrix::zeros(p, n);
        let mut d = DMatrix::zeros(p, m);
        let (mut xo, mut uo, mut yo) = (0, 0, 0);
        for g in parts {
            let (nx, nu, ny) = (g.n_states(), g.n_inputs(), g.n_outputs());
            a.view_mut((xo, xo), (nx, nx)).copy_from(&g.a);
            b.view_mut((xo, uo), (nx, nu)).copy_from(&g.b);
            c.view_mut((yo, xo), (ny, nx)).copy_from(&g.c);
            d.view_mut((yo, uo), (ny, nu)).copy_from(&g.d);
            xo += nx;
            uo += nu;
            yo += ny;
        }
        Self::new(a, b, c, d)
    }

    /// Keeps the listed outputs (rows) and inputs (columns).
    pub fn select(&self, outputs: &[usize], inputs: &[usize]) -> Result<Self> {
        if outputs.iter().any(|&i| i >= self.n_outputs()) || inputs.iter().any(|&j| j >= self.n_inputs()) {
            return Err(Error::Dimension("channel index out of range".into()));
        }
        let b = self.b.select_columns(inputs);
        let c = self.c.select_rows(outputs);
        let d = self.d.select_rows(outputs).select_columns(inputs);
        Self::new(self.a.clone(), b, c, d)
    }

    /// Sensitivity `(I + G)^{-1}` of a square loop.
    pub fn inverse_return_difference(&self) -> Result<Self> {
        let p = self.n_outputs();
        if p != self.n_inputs() {
            return Err(Error::Dimension("loop must be square".into()));
        }
        let e = (DMatrix::identity(p, p) + &self.d)
            .try_inverse()
            .ok_or(Error::AlgebraicLoop)?;
        let a = &self.a - &self.b * &e * &self.c;
        let b = &self.b * &e;
        let c = -(&e * &self.c);
        Self::new(a, b, c, e)
    }

    /// Closes unity negative feedback around the listed channels of a
    /// square loop (`z_k = -y_k`) and returns the loop seen at the
    /// remaining channels.
    pub fn close_channels(&self, closed: &[usize]) -> Result<Self> {
        let p = self.n_outputs();
        if p != self.n_inputs() {
            return Err(Error::Dimension("loop must be square".into()));
        }
        if closed.iter().any(|&k| k >= p) {
            return Err(Error::Dimension("channel index out of range".into()));
        }
        let open: Vec<usize> = (0..p).filter(|k| !closed.contains(k)).collect();
        if closed.is_empty() {
            return Ok(self.clone());
        }
        let bo = self.b.select_columns(&open);
        let bc = self.b.select_columns(closed);
        let co = self.c.select_rows(&open);
        let cc = self.c.select_rows(closed);
        let d_oo = self.d.select_rows(&open).select_columns(&open);
        let d_oc = self.d.select_rows(&open).select_columns(closed);
        let d_co = self.d.select_rows(closed).select_columns(&open);
        let d_cc = self.d.select_rows(closed).select_columns(closed);
        let k = closed.len();
        let e = (DMatrix::identity(k, k) + &d_cc).try_inverse().ok_or(Error::IllPosed)?;
        // z_c = -E (C_c x + D_co z_o)
        let a = &self.a - &bc * &e * &cc;
        let b = &bo - &bc * &e * &d_co;
        let c = &co - &d_oc * &e * &cc;
        let d = &d_oo - &d_oc * &e * &d_co;
        Self::new(a, b, c, d)
    }

    /// Minimal realization by removing unreachable then unobservable
    /// states with orthogonal projections.
    pub fn minreal(&self, tol: f64) -> Self {
        if self.n_states() == 0 {
            return self.clone();
        }
        let q = linalg::reachable_basis(&self.a, &self.b, tol);
        let a = q.transpose() * &self.a * &q;
        let b = q.transpose() * &self.b;
        let c = &self.c * &q;
        let at = a.transpose();
        let ct = c.transpose();
        let q2 = linalg::reachable_basis(&at, &ct, tol);
        let a2 = q2.transpose() * &a * &q2;
        let b2 = q2.transpose() * &b;
        let c2 = &c * &q2;
        Self {
            a: a2,
            b: b2,
            c: c2,
            d: self.d.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn diagonal_poles() {
        let a = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(alloc::vec![-1.0, -2.0]));
        let ss = StateSpace::new(a, DMatrix::zeros(2, 1), DMatrix::zeros(1, 2), DMatrix::zeros(1, 1)).unwrap();
        let mut p: Vec<f64> = ss.poles().unwrap().iter().map(|z| z.re).collect();
        p.sort_by(f64::total_cmp);
        assert_eq!(p, alloc::vec![-2.0, -1.0]);
    }

    #[test]
    fn static_gain_everywhere() {
        let g = StateSpace::static_gain(DMatrix::from_element(1, 1, 3.0));
        for w in [0.0, 1.0, 1e6, f64::INFINITY] {
            assert_eq!(g.eval_freq(w).unwrap()[(0, 0)].re, 3.0);
        }
    }

    #[test]
    fn dimension_mismatch() {
        let r = StateSpace::new(
            DMatrix::zeros(2, 2),
            DMatrix::zeros(3, 1),
            DMatrix::zeros(1, 2),
            DMatrix::zeros(1, 1),
        );
        assert!(matches!(r, Err(Error::Dimension(_))));
    }

    #[test]
    fn sensitivity_of_integrator() {
        let l = TransferFunction::from_coeffs(&[1.0], &[1.0, 0.0])
            .unwrap()
            .to_ss()
            .unwrap();
        let s = l.inverse_return_difference().unwrap();
        let v = s.eval_freq(1.0).unwrap()[(0, 0)];
        // s/(s+1) at s = j
        let expect = Complex64::new(0.0, 1.0) / Complex64::new(1.0, 1.0);
        assert_relative_eq!(v.re, expect.re, epsilon = 1e-14);
        assert_relative_eq!(v.im, expect.im, epsilon = 1e-14);
    }

    #[test]
    fn minreal_removes_duplicated_modes() {
        let g = TransferFunction::from_coeffs(&[1.0], &[1.0, 3.0, 2.0])
            .unwrap()
            .to_ss()
            .unwrap();
        let dup = g.parallel(&g).unwrap(); // 2 G with four states
        let r = dup.minreal(1e-9);
        assert_eq!(r.n_states(), 2);
        let w = 0.7;
        let x = dup.eval_freq(w).unwrap()[(0, 0)];
        let y = r.eval_freq(w).unwrap()[(0, 0)];
        assert_relative_eq!(x.re, y.re, epsilon = 1e-12);
        assert_relative_eq!(x.im, y.im, epsilon = 1e-12);
    }

    #[test]
    fn close_channels_matches_scalar_algebra() {
        // diagonal loop diag(1/s, 2/(s+1)): closing channel 1 leaves 1/s
        let g1 = TransferFunction::from_coeffs(&[1.0], &[1.0, 0.0])
            .unwrap()
            .to_ss()
            .unwrap();
        let g2 = TransferFunction::from_coeffs(&[2.0], &[1.0, 1.0])
            .unwrap()
            .to_ss()
            .unwrap();
        let l = StateSpace::block_diag(&[g1, g2]).unwrap();
        let li = l.close_channels(&[1]).unwrap();
        let v = li.eval_freq(2.0).unwrap()[(0, 0)];
        assert_relative_eq!(v.im, -0.5, epsilon = 1e-14);
        assert_relative_eq!(v.re, 0.0, epsilon = 1e-14);
    }
}
