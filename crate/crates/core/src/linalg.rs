//! Dense linear-algebra helpers shared by the analysis modules.

use alloc::vec::Vec;

use nalgebra::{DMatrix, Schur};
use num_complex::Complex64;

use crate::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

const SCHUR_MAX_ITER: usize = 10_000;

/// Real matrix lifted to the complex field.
pub fn complexify(m: &DMatrix<f64>) -> CMatrix {
    m.map(|x| Complex64::new(x, 0.0))
}

/// Diagonal similarity scaling by powers of two so that row and column
/// norms are comparable. Eigenvalues are unchanged and come out more
/// accurately for companion and other badly scaled matrices.
fn balance(a: &mut DMatrix<f64>) {
    let n = a.nrows();
    let radix = 2.0_f64;
    let mut converged = false;
    let mut sweeps = 0;
    while !converged && sweeps < 100 {
        converged = true;
        sweeps += 1;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += a[(j, i)].abs();
                    r += a[(i, j)].abs();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut c2 = c;
            while c2 < r / radix {
                c2 *= radix;
                f *= radix;
            }
            while c2 >= r * radix {
                c2 /= radix;
                f /= radix;
            }
            if (c2 + r / f) < 0.95 * s {
                converged = false;
                for j in 0..n {
                    a[(i, j)] /= f;
                }
                for j in 0..n {
                    a[(j, i)] *= f;
                }
            }
        }
    }
}

/// Eigenvalues of a real square matrix.
pub fn eigenvalues(a: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::Dimension("eigenvalues of a non-square matrix".into()));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    if a.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numerical("non-finite matrix entry"));
    }
    let mut b = a.clone();
    balance(&mut b);
    let schur = Schur::try_new(b, f64::EPSILON, SCHUR_MAX_ITER)
        .ok_or(Error::Numerical("eigenvalue iteration did not converge"))?;
    Ok(schur
        .complex_eigenvalues()
        .iter()
        .map(|z| Complex64::new(z.re, z.im))
        .collect())
}

/// Eigenvalues of a complex square matrix.
pub fn complex_eigenvalues(a: &CMatrix) -> Result<Vec<Complex64>> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::Dimension("eigenvalues of a non-square matrix".into()));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    if n == 1 {
        return Ok(alloc::vec![a[(0, 0)]]);
    }
    let schur = Schur::try_new(a.clone(), f64::EPSILON, SCHUR_MAX_ITER)
        .ok_or(Error::Numerical("eigenvalue iteration did not converge"))?;
    let (_, t) = schur.unpack();
    Ok((0..n).map(|i| t[(i, i)]).collect())
}

/// Largest singular value; zero for empty matrices.
pub fn max_singular_value(m: &CMatrix) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    if m.nrows() == 1 && m.ncols() == 1 {
        return m[(0, 0)].norm();
    }
    m.clone().singular_values().iter().fold(0.0_f64, |acc, &s| acc.max(s))
}

/// Spectral radius of a complex square matrix.
pub fn spectral_radius(m: &CMatrix) -> Result<f64> {
    Ok(complex_eigenvalues(m)?.iter().fold(0.0_f64, |acc, z| acc.max(z.norm())))
}

/// Determinant of a small complex matrix via LU.
pub fn complex_det(m: &CMatrix) -> Complex64 {
    if m.nrows() == 0 {
        return Complex64::new(1.0, 0.0);
    }
    m.clone().lu().determinant()
}

/// Infinity-norm style magnitude used for relative tolerances.
pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

/// Orthonormal basis of the Krylov space spanned by `b, a b, a² b, ...`
/// (the reachable subspace of the pair). Rank decisions use the relative
/// tolerance `tol`.
pub fn reachable_basis(a: &DMatrix<f64>, b: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    let n = a.nrows();
    let scale = max_abs(a).max(max_abs(b)).max(1.0);
    let mut basis: Vec<nalgebra::DVector<f64>> = Vec::new();
    let mut frontier: Vec<nalgebra::DVector<f64>> = (0..b.ncols()).map(|j| b.column(j).into_owned()).collect();
    while !frontier.is_empty() && basis.len() < n {
        let mut next = Vec::new();
        for mut v in frontier {
            let norm0 = v.norm();
            if norm0 <= tol * scale {
                continue;
            }
            // two passes of Gram-Schmidt
            for _ in 0..2 {
                for q in &basis {
                    let p = q.dot(&v);
                    v.axpy(-p, q, 1.0);
                }
            }
            let norm = v.norm();
            if norm > tol * scale.max(norm0) && basis.len() < n {
                v /= norm;
                next.push(a * &v);
                basis.push(v);
            }
        }
        frontier = next;
    }
    if basis.is_empty() {
        return DMatrix::zeros(n, 0);
    }
    DMatrix::from_columns(&basis)
}
