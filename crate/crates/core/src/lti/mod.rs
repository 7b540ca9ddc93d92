//! LTI model representations, interconnections, poles and frequency
//! response.

mod poly;
mod ss;
mod tf;

use alloc::format;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_complex::Complex64;

pub use poly::Polynomial;
pub use ss::StateSpace;
pub use tf::TransferFunction;

use crate::linalg::CMatrix;
use crate::{Error, Result};

/// Relative tolerance used when reducing assembled transfer matrices.
pub const MINREAL_TOL: f64 = 1e-9;

/// Sign of the feedback path the loop was declared with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FeedbackSign {
    #[default]
    Negative,
    Positive,
}

/// Underlying representation of a model.
#[derive(Debug, Clone, PartialEq)]
pub enum System {
    Tf(TransferFunction),
    Ss(StateSpace),
}

impl System {
    pub fn n_inputs(&self) -> usize {
        match self {
            System::Tf(_) => 1,
            System::Ss(s) => s.n_inputs(),
        }
    }

    pub fn n_outputs(&self) -> usize {
        match self {
            System::Tf(_) => 1,
            System::Ss(s) => s.n_outputs(),
        }
    }

    pub fn is_siso(&self) -> bool {
        self.n_inputs() == 1 && self.n_outputs() == 1
    }

    pub fn to_ss(&self) -> Result<StateSpace> {
        match self {
            System::Tf(t) => t.to_ss(),
            System::Ss(s) => Ok(s.clone()),
        }
    }

    pub fn neg(&self) -> Self {
        match self {
            System::Tf(t) => System::Tf(t.neg()),
            System::Ss(s) => System::Ss(s.neg()),
        }
    }

    pub fn scale(&self, k: f64) -> Self {
        match self {
            System::Tf(t) => System::Tf(t.scale(k)),
            System::Ss(s) => System::Ss(s.scale(k)),
        }
    }

    pub fn poles(&self) -> Result<Vec<Complex64>> {
        match self {
            System::Tf(t) => t.poles(),
            System::Ss(s) => s.poles(),
        }
    }

    pub fn eval(&self, s: Complex64) -> Result<CMatrix> {
        match self {
            System::Tf(t) => Ok(DMatrix::from_element(1, 1, t.eval(s)?)),
            System::Ss(m) => m.eval(s),
        }
    }

    /// Frequency response at any real `ω` (negative values allowed);
    /// `+∞` gives the feedthrough.
    pub fn eval_freq(&self, omega: f64) -> Result<CMatrix> {
        match self {
            System::Tf(t) => Ok(DMatrix::from_element(1, 1, t.eval_freq(omega)?)),
            System::Ss(m) => m.eval_freq(omega),
        }
    }

    /// Scalar response of a SISO model.
    pub fn eval_siso(&self, omega: f64) -> Result<Complex64> {
        if !self.is_siso() {
            return Err(Error::Dimension("SISO model required".into()));
        }
        Ok(self.eval_freq(omega)?[(0, 0)])
    }

    pub fn is_proper(&self) -> bool {
        match self {
            System::Tf(t) => t.is_proper(),
            System::Ss(_) => true,
        }
    }
}

impl From<TransferFunction> for System {
    fn from(t: TransferFunction) -> Self {
        System::Tf(t)
    }
}

impl From<StateSpace> for System {
    fn from(s: StateSpace) -> Self {
        System::Ss(s)
    }
}

/// A plant, controller or loop together with its declared feedback sign.
///
/// The stored system is already normalized to negative feedback: a loop
/// declared with positive feedback is negated on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct LtiModel {
    system: System,
    sign: FeedbackSign,
}

impl LtiModel {
    pub fn new(system: impl Into<System>, sign: FeedbackSign) -> Self {
        let system = system.into();
        let system = match sign {
            FeedbackSign::Negative => system,
            FeedbackSign::Positive => system.neg(),
        };
        Self { system, sign }
    }

    /// Model already in the negative-feedback convention.
    pub fn negative(system: impl Into<System>) -> Self {
        Self::new(system, FeedbackSign::Negative)
    }

    pub fn tf(num: &[f64], den: &[f64]) -> Result<Self> {
        Ok(Self::negative(TransferFunction::from_coeffs(num, den)?))
    }

    pub fn gain(k: f64) -> Self {
        Self::negative(TransferFunction::gain(k))
    }

    /// MIMO model from a rectangular matrix of SISO entries. Entries are
    /// realized individually, block-assembled and reduced to a minimal
    /// realization.
    pub fn from_tf_matrix(rows: &[Vec<TransferFunction>], sign: FeedbackSign) -> Result<Self> {
        let p = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        if p == 0 || m == 0 {
            return Err(Error::Input("transfer matrix must be nonempty".into()));
        }
        if rows.iter().any(|r| r.len() != m) {
            return Err(Error::Input("transfer matrix rows differ in length".into()));
        }
        if p == 1 && m == 1 {
            return Ok(Self::new(rows[0][0].clone(), sign));
        }
        let mut parts = Vec::with_capacity(p * m);
        for row in rows {
            for entry in row {
                parts.push(entry.to_ss()?);
            }
        }
        // Block diagonal of all entries, then route inputs and sum outputs.
        let diag = StateSpace::block_diag(&parts)?;
        let mut fan_out = DMatrix::zeros(p * m, m);
        let mut sum = DMatrix::zeros(p, p * m);
        for i in 0..p {
            for j in 0..m {
                fan_out[(i * m + j, j)] = 1.0;
                sum[(i, i * m + j)] = 1.0;
            }
        }
        let g = StateSpace::static_gain(fan_out)
            .series(&diag)?
            .series(&StateSpace::static_gain(sum))?;
        Ok(Self::new(g.minreal(MINREAL_TOL), sign))
    }

    pub fn system(&self) -> &System {
        &self.system
    }

    pub fn sign(&self) -> FeedbackSign {
        self.sign
    }

    /// The system as it was declared (before sign normalization).
    pub fn declared(&self) -> System {
        match self.sign {
            FeedbackSign::Negative => self.system.clone(),
            FeedbackSign::Positive => self.system.neg(),
        }
    }

    pub fn n_inputs(&self) -> usize {
        self.system.n_inputs()
    }

    pub fn n_outputs(&self) -> usize {
        self.system.n_outputs()
    }

    pub fn is_siso(&self) -> bool {
        self.system.is_siso()
    }

    pub fn to_ss(&self) -> Result<StateSpace> {
        self.system.to_ss()
    }

    pub fn eval_freq(&self, omega: f64) -> Result<CMatrix> {
        self.system.eval_freq(omega)
    }

    pub fn eval_siso(&self, omega: f64) -> Result<Complex64> {
        self.system.eval_siso(omega)
    }
}

/// Poles: denominator roots for transfer functions, eigenvalues of `A`
/// for state-space models.
pub fn poles(m: &LtiModel) -> Result<Vec<Complex64>> {
    m.system.poles()
}

/// Stability test with a configurable margin: every pole must satisfy
/// `Re p < -margin`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityOptions {
    pub margin: f64,
}

impl Default for StabilityOptions {
    fn default() -> Self {
        Self { margin: 0.0 }
    }
}

pub fn is_stable(m: &LtiModel) -> Result<bool> {
    is_stable_with(m, StabilityOptions::default())
}

pub fn is_stable_with(m: &LtiModel, opts: StabilityOptions) -> Result<bool> {
    Ok(poles(m)?.iter().all(|p| p.re < -opts.margin))
}

/// Frequency response `G(jω)`; `1×1` for SISO models.
pub fn eval_freq(m: &LtiModel, omega: f64) -> Result<CMatrix> {
    m.eval_freq(omega)
}

/// Sensitivity `S = (I + L)^{-1}` and complementary sensitivity
/// `T = I - S` of a square loop.
pub fn sensitivity_pair(l: &LtiModel) -> Result<(LtiModel, LtiModel)> {
    if l.n_inputs() != l.n_outputs() {
        return Err(Error::Dimension(format!(
            "loop is {}x{}, must be square",
            l.n_outputs(),
            l.n_inputs()
        )));
    }
    match &l.system {
        System::Tf(t) => {
            let cl_den = t.den().add(t.num());
            if cl_den.is_zero() || cl_den.degree() < t.den().degree() {
                return Err(Error::AlgebraicLoop);
            }
            let s = TransferFunction::new(t.den().clone(), cl_den.clone())?;
            let tt = TransferFunction::new(t.num().clone(), cl_den)?;
            Ok((LtiModel::negative(s), LtiModel::negative(tt)))
        }
        System::Ss(g) => {
            let s = g.inverse_return_difference()?;
            let t = StateSpace::new(
                s.a().clone(),
                s.b().clone(),
                -s.c(),
                DMatrix::identity(g.n_outputs(), g.n_outputs()) - s.d(),
            )?;
            Ok((LtiModel::negative(s), LtiModel::negative(t)))
        }
    }
}

/// Canonical realization of a proper transfer function.
pub fn tf_to_ss(tf: &TransferFunction) -> Result<StateSpace> {
    tf.to_ss()
}

/// Transfer function of a SISO state-space model.
pub fn ss_to_tf(ss: &StateSpace) -> Result<TransferFunction> {
    ss.to_tf()
}

/// Per-channel loop factor used when closing a perturbed loop.
#[derive(Debug, Clone, PartialEq)]
pub enum ChannelFactor {
    Gain(f64),
    Dynamic(TransferFunction),
}

impl ChannelFactor {
    fn to_ss(&self) -> Result<StateSpace> {
        match self {
            ChannelFactor::Gain(g) => Ok(StateSpace::static_gain(DMatrix::from_element(1, 1, *g))),
            ChannelFactor::Dynamic(t) => t.to_ss(),
        }
    }
}

/// Closed loop `T_f = (I + L F)^{-1} L F` under negative feedback with
/// the perturbed loop `L F`, `F = diag(f_i)` acting at the loop inputs.
/// All states of `L` and `F` are retained, so the poles are exactly the
/// closed-loop poles.
pub fn scalar_close(l: &LtiModel, factors: &[ChannelFactor]) -> Result<LtiModel> {
    if factors.len() != l.n_inputs() {
        return Err(Error::Dimension(format!(
            "{} channel factors for a loop with {} inputs",
            factors.len(),
            l.n_inputs()
        )));
    }
    if l.n_inputs() != l.n_outputs() {
        return Err(Error::Dimension("loop must be square".into()));
    }
    if let (System::Tf(t), [ChannelFactor::Gain(g)]) = (&l.system, factors) {
        let num = t.num().scale(*g);
        let den = t.den().add(&num);
        if den.is_zero() || den.degree() < t.den().degree() {
            return Err(Error::IllPosed);
        }
        return Ok(LtiModel::negative(TransferFunction::new(num, den)?));
    }
    let f = StateSpace::block_diag(&factors.iter().map(ChannelFactor::to_ss).collect::<Result<Vec<_>>>()?)?;
    let lf = f.series(&l.to_ss()?)?;
    let s = lf.inverse_return_difference().map_err(|e| match e {
        Error::AlgebraicLoop => Error::IllPosed,
        e => e,
    })?;
    let p = lf.n_outputs();
    let t = StateSpace::new(s.a().clone(), s.b().clone(), -s.c(), DMatrix::identity(p, p) - s.d())?;
    Ok(LtiModel::negative(t))
}

/// Closed-loop state matrix for a loop closed through a complex scalar
/// factor on every channel (used for phase-only perturbation checks).
pub(crate) fn complex_closed_loop_poles(l: &StateSpace, f: Complex64) -> Result<Vec<Complex64>> {
    use crate::linalg::{complex_eigenvalues, complexify};
    let p = l.n_outputs();
    let d = complexify(l.d()) * f;
    let e = (CMatrix::identity(p, p) + d).try_inverse().ok_or(Error::IllPosed)?;
    let a = complexify(l.a()) - complexify(l.b()) * e * complexify(l.c()) * f;
    complex_eigenvalues(&a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn example1() -> LtiModel {
        LtiModel::tf(&[25.0], &[1.0, 10.0, 10.0, 10.0]).unwrap()
    }

    fn sorted(mut p: Vec<Complex64>) -> Vec<Complex64> {
        p.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        p
    }

    #[test]
    fn example1_closed_loop_poles() {
        let cl = scalar_close(&example1(), &[ChannelFactor::Gain(1.0)]).unwrap();
        let p = sorted(poles(&cl).unwrap());
        assert_relative_eq!(p[0].re, -9.33, max_relative = 0.01);
        assert_relative_eq!(p[1].re, -0.33, max_relative = 0.02);
        assert_relative_eq!(p[1].im.abs(), 1.91, max_relative = 0.01);
        assert!(is_stable(&cl).unwrap());
    }

    #[test]
    fn example5_denominator_poles() {
        // s (s+1)^2 (s^2 + 0.18 s + 100)
        let den = Polynomial::new(alloc::vec![1.0, 0.0])
            .unwrap()
            .mul(&Polynomial::new(alloc::vec![1.0, 2.0, 1.0]).unwrap())
            .mul(&Polynomial::new(alloc::vec![1.0, 0.18, 100.0]).unwrap());
        let m = LtiModel::negative(TransferFunction::new(Polynomial::one(), den).unwrap());
        let p = sorted(poles(&m).unwrap());
        assert_relative_eq!(p[0].re, -1.0, epsilon = 1e-6);
        assert_relative_eq!(p[1].re, -1.0, epsilon = 1e-6);
        assert_relative_eq!(p[2].re, -0.09, epsilon = 1e-9);
        assert_relative_eq!(p[2].im.abs(), 9.9996, epsilon = 1e-4);
        assert_eq!(p[4].norm(), 0.0);
    }

    #[test]
    fn stability_of_first_order() {
        assert!(is_stable(&LtiModel::tf(&[1.0], &[1.0, 1.0]).unwrap()).unwrap());
        assert!(!is_stable(&LtiModel::tf(&[1.0], &[1.0, -1.0]).unwrap()).unwrap());
        let opts = StabilityOptions { margin: 2.0 };
        assert!(!is_stable_with(&LtiModel::tf(&[1.0], &[1.0, 1.0]).unwrap(), opts).unwrap());
    }

    #[test]
    fn sensitivity_of_integrator() {
        let (s, t) = sensitivity_pair(&LtiModel::tf(&[1.0], &[1.0, 0.0]).unwrap()).unwrap();
        let System::Tf(s) = s.system() else { panic!() };
        let System::Tf(t) = t.system() else { panic!() };
        assert_eq!(s.num().coeffs(), &[1.0, 0.0]);
        assert_eq!(s.den().coeffs(), &[1.0, 1.0]);
        assert_eq!(t.num().coeffs(), &[1.0]);
        assert_eq!(t.den().coeffs(), &[1.0, 1.0]);
    }

    #[test]
    fn sensitivity_of_zero_loop() {
        let (s, t) = sensitivity_pair(&LtiModel::gain(0.0)).unwrap();
        assert_eq!(s.eval_siso(3.0).unwrap().re, 1.0);
        assert_eq!(t.eval_siso(3.0).unwrap().re, 0.0);
    }

    #[test]
    fn sensitivity_at_dc() {
        let (s, _) = sensitivity_pair(&example1()).unwrap();
        assert_relative_eq!(s.eval_siso(0.0).unwrap().re, 1.0 / 3.5, epsilon = 1e-15);
    }

    #[test]
    fn algebraic_loop_detected() {
        let l = LtiModel::gain(-1.0);
        assert_eq!(sensitivity_pair(&l), Err(Error::AlgebraicLoop));
        let ss = LtiModel::negative(TransferFunction::gain(-1.0).to_ss().unwrap());
        assert_eq!(sensitivity_pair(&ss), Err(Error::AlgebraicLoop));
    }

    #[test]
    fn positive_feedback_is_negated() {
        let m = LtiModel::new(
            TransferFunction::from_coeffs(&[-1.0], &[1.0, 0.0]).unwrap(),
            FeedbackSign::Positive,
        );
        assert_relative_eq!(m.eval_siso(1.0).unwrap().im, -1.0);
        assert_relative_eq!(m.declared().eval_siso(1.0).unwrap().im, 1.0);
    }

    #[test]
    fn closing_at_upper_gain_margin_puts_poles_on_axis() {
        let cl = scalar_close(&example1(), &[ChannelFactor::Gain(3.6)]).unwrap();
        let p = poles(&cl).unwrap();
        let axis = p.iter().filter(|z| z.re.abs() < 1e-8).collect::<Vec<_>>();
        assert_eq!(axis.len(), 2);
        assert_relative_eq!(axis[0].im.abs(), 3.16, max_relative = 0.01);
    }

    #[test]
    fn zero_factor_keeps_open_loop_poles() {
        let l = LtiModel::tf(&[1.0, 2.0], &[1.0, 3.0, 5.0]).unwrap();
        let cl = scalar_close(&l, &[ChannelFactor::Gain(0.0)]).unwrap();
        let a = sorted(poles(&cl).unwrap());
        let b = sorted(poles(&l).unwrap());
        for (x, y) in a.iter().zip(&b) {
            assert_relative_eq!(x.re, y.re, epsilon = 1e-12);
        }
        let ss = LtiModel::negative(l.to_ss().unwrap());
        let cl = scalar_close(&ss, &[ChannelFactor::Gain(0.0)]).unwrap();
        assert_eq!(poles(&cl).unwrap().len(), 2);
    }

    #[test]
    fn channel_count_checked() {
        let r = scalar_close(&example1(), &[ChannelFactor::Gain(1.0), ChannelFactor::Gain(1.0)]);
        assert!(matches!(r, Err(Error::Dimension(_))));
    }

    #[test]
    fn ill_posed_closure() {
        let l = LtiModel::tf(&[2.0, 1.0], &[1.0, 3.0]).unwrap(); // L(inf) = 2
        assert_eq!(scalar_close(&l, &[ChannelFactor::Gain(-0.5)]), Err(Error::IllPosed));
    }

    #[test]
    fn transfer_matrix_is_reduced() {
        // P = 1/(s^2+a^2) [[s-a^2, a(s+1)], [-a(s+1), s-a^2]] has McMillan degree 2
        let a = 10.0;
        let den = [1.0, 0.0, a * a];
        let e = |n: &[f64]| TransferFunction::from_coeffs(n, &den).unwrap();
        let rows = alloc::vec![
            alloc::vec![e(&[1.0, -a * a]), e(&[a, a])],
            alloc::vec![e(&[-a, -a]), e(&[1.0, -a * a])],
        ];
        let p = LtiModel::from_tf_matrix(&rows, FeedbackSign::Negative).unwrap();
        let ss = p.to_ss().unwrap();
        assert_eq!(ss.n_states(), 2);
        let w = 3.0;
        let g = p.eval_freq(w).unwrap();
        let s = Complex64::new(0.0, w);
        let expect = (s - a * a) / (s * s + a * a);
        assert_relative_eq!(g[(0, 0)].re, expect.re, epsilon = 1e-10);
        assert_relative_eq!(g[(0, 0)].im, expect.im, epsilon = 1e-10);
    }
}
