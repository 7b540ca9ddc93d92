//! Model files.
//!
//! ```json
//! {
//!   "model": { "tf": { "num": [25], "den": [1, 10, 10, 10] } },
//!   "feedback": "negative"
//! }
//! ```
//!
//! `model` holds exactly one of `tf`, `tfm` (rows of `{num, den}`) or
//! `ss` (`A`, `B`, `C`, `D` as lists of rows). Coefficients run from the
//! highest power down. An optional `controller` block of the same shape
//! turns the file into a `(P, K)` pair; `feedback` then applies to the
//! controller.

use std::path::Path;

use dmkit_core::{FeedbackSign, LtiModel, StateSpace, System, TransferFunction};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Feedback {
    #[default]
    Negative,
    Positive,
}

impl From<Feedback> for FeedbackSign {
    fn from(f: Feedback) -> Self {
        match f {
            Feedback::Negative => FeedbackSign::Negative,
            Feedback::Positive => FeedbackSign::Positive,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TfSpec {
    pub num: Vec<f64>,
    pub den: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SsSpec {
    #[serde(rename = "A", default)]
    pub a: Vec<Vec<f64>>,
    #[serde(rename = "B", default)]
    pub b: Vec<Vec<f64>>,
    #[serde(rename = "C", default)]
    pub c: Vec<Vec<f64>>,
    #[serde(rename = "D")]
    pub d: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tf: Option<TfSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tfm: Option<Vec<Vec<TfSpec>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ss: Option<SsSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub model: ModelSpec,
    #[serde(default)]
    pub feedback: Feedback,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub controller: Option<ModelSpec>,
}

fn tf(spec: &TfSpec) -> Result<TransferFunction, CliError> {
    Ok(TransferFunction::from_coeffs(&spec.num, &spec.den)?)
}

fn matrix(name: &str, rows: &[Vec<f64>], nrows: usize, ncols: usize) -> Result<DMatrix<f64>, CliError> {
    if rows.iter().all(Vec::is_empty) && (nrows == 0 || ncols == 0) {
        return Ok(DMatrix::zeros(nrows, ncols));
    }
    if rows.len() != nrows || rows.iter().any(|r| r.len() != ncols) {
        return Err(CliError::input(format!("{name} must be {nrows}x{ncols}")));
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Ok(DMatrix::from_row_slice(nrows, ncols, &flat))
}

fn state_space(spec: &SsSpec) -> Result<StateSpace, CliError> {
    let ny = spec.d.len();
    let nu = spec.d.first().map_or(0, Vec::len);
    if ny == 0 || nu == 0 {
        return Err(CliError::input("D must be a nonempty matrix"));
    }
    let n = spec.a.len();
    let a = matrix("A", &spec.a, n, n)?;
    let b = matrix("B", &spec.b, n, nu)?;
    let c = matrix("C", &spec.c, ny, n)?;
    let d = matrix("D", &spec.d, ny, nu)?;
    Ok(StateSpace::new(a, b, c, d)?)
}

impl ModelSpec {
    pub fn to_system(&self, sign: FeedbackSign) -> Result<LtiModel, CliError> {
        let count = [self.tf.is_some(), self.tfm.is_some(), self.ss.is_some()]
            .iter()
            .filter(|x| **x)
            .count();
        if count != 1 {
            return Err(CliError::input("model needs exactly one of tf, tfm, ss"));
        }
        if let Some(t) = &self.tf {
            return Ok(LtiModel::new(tf(t)?, sign));
        }
        if let Some(rows) = &self.tfm {
            let rows = rows
                .iter()
                .map(|r| r.iter().map(tf).collect::<Result<Vec<_>, _>>())
                .collect::<Result<Vec<_>, _>>()?;
            return Ok(LtiModel::from_tf_matrix(&rows, sign)?);
        }
        let ss = state_space(self.ss.as_ref().expect("counted above"))?;
        Ok(LtiModel::new(ss, sign))
    }
}

/// A parsed model file with its sign-normalized systems.
#[derive(Debug, Clone)]
pub struct LoadedModel {
    pub file: ModelFile,
    /// Plant, or the whole loop when there is no controller.
    pub plant: LtiModel,
    pub controller: Option<LtiModel>,
    /// SHA-256 of the file bytes, lowercase hex.
    pub digest: String,
}

impl LoadedModel {
    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CliError> {
        let text = std::str::from_utf8(bytes).map_err(|_| CliError::input("model file is not UTF-8"))?;
        let file: ModelFile =
            serde_json::from_str(text).map_err(|e| CliError::input(format!("malformed model file: {e}")))?;
        Self::from_file(file, format!("{:x}", Sha256::digest(bytes)))
    }

    pub fn from_file(file: ModelFile, digest: String) -> Result<Self, CliError> {
        let sign = FeedbackSign::from(file.feedback);
        let (plant, controller) = match &file.controller {
            None => (file.model.to_system(sign)?, None),
            Some(k) => (file.model.to_system(FeedbackSign::Negative)?, Some(k.to_system(sign)?)),
        };
        Ok(Self {
            file,
            plant,
            controller,
            digest,
        })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let bytes = std::fs::read(path).map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))?;
        Self::from_bytes(&bytes)
    }

    /// Negative-feedback SISO loop `L`. With a controller this is `K P`.
    pub fn siso_loop(&self) -> Result<LtiModel, CliError> {
        let l = match &self.controller {
            None => self.plant.clone(),
            Some(k) => {
                if !(self.plant.is_siso() && k.is_siso()) {
                    return Err(CliError::input("command needs a SISO loop; use mimo for MIMO (P, K)"));
                }
                let sys = match (self.plant.system(), k.system()) {
                    (System::Tf(p), System::Tf(k)) => p.mul(k),
                    _ => self.plant.to_ss()?.series(&k.to_ss()?)?.to_tf()?,
                };
                LtiModel::negative(sys)
            }
        };
        if !l.is_siso() {
            return Err(CliError::input(format!(
                "command needs a SISO loop, model is {}x{}",
                l.n_outputs(),
                l.n_inputs()
            )));
        }
        Ok(l)
    }
}
