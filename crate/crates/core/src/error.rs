use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("polynomial must have at least one coefficient")]
    EmptyPolynomial,
    #[error("degree-0 polynomial has no roots")]
    NoRoots,
    #[error("denominator is identically zero")]
    ZeroDenominator,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("model is improper")]
    Improper,
    #[error("s = j{0} is a pole of the model")]
    PoleOnAxis(f64),
    #[error("algebraic loop: I + L(s) is singular")]
    AlgebraicLoop,
    #[error("feedback interconnection is ill-posed")]
    IllPosed,
    #[error("nominal closed loop is unstable")]
    NominallyUnstable,
    #[error("{0}")]
    Domain(String),
    #[error("unsupported case: {0}")]
    Unsupported(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("construction failed: {0}")]
    Construction(String),
    #[error("numerical failure: {0}")]
    Numerical(&'static str),
}
