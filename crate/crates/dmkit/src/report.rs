//! Result documents.
//!
//! Numbers are stored in absolute units and radians. Infinite values are
//! written as the strings `"inf"` / `"-inf"` (`"nan"` for samples that
//! could not be evaluated). `*_db` fields are left out when the absolute
//! value is 0 or infinite.

use std::fmt;

use dmkit_core::{Complex64, TransferFunction};
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub const SCHEMA_VERSION: u32 = 1;

/// `f64` that survives JSON with its non-finite values.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Num(pub f64);

impl Num {
    pub fn get(self) -> f64 {
        self.0
    }
}

impl From<f64> for Num {
    fn from(x: f64) -> Self {
        Num(x)
    }
}

impl fmt::Display for Num {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let x = self.0;
        if x.is_nan() {
            f.write_str("nan")
        } else if x == f64::INFINITY {
            f.write_str("inf")
        } else if x == f64::NEG_INFINITY {
            f.write_str("-inf")
        } else {
            // shortest representation that parses back to the same value
            write!(f, "{x:?}")
        }
    }
}

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            s.serialize_f64(self.0)
        } else {
            s.serialize_str(&self.to_string())
        }
    }
}

impl<'de> Deserialize<'de> for Num {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Num;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a number or one of \"inf\", \"-inf\", \"nan\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Num, E> {
                Ok(Num(v))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Num, E> {
                Ok(Num(v as f64))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Num, E> {
                Ok(Num(v as f64))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Num, E> {
                match v {
                    "inf" => Ok(Num(f64::INFINITY)),
                    "-inf" => Ok(Num(f64::NEG_INFINITY)),
                    "nan" => Ok(Num(f64::NAN)),
                    _ => Err(E::invalid_value(de::Unexpected::Str(v), &self)),
                }
            }
        }
        d.deserialize_any(V)
    }
}

/// Gain in dB, `None` for 0, infinite or negative gains.
pub fn db(x: f64) -> Option<f64> {
    (x > 0.0 && x.is_finite()).then(|| 20.0 * x.log10())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexNum {
    pub re: Num,
    pub im: Num,
}

impl From<Complex64> for ComplexNum {
    fn from(z: Complex64) -> Self {
        Self {
            re: Num(z.re),
            im: Num(z.im),
        }
    }
}

impl ComplexNum {
    pub fn get(self) -> Complex64 {
        Complex64::new(self.re.0, self.im.0)
    }
}

/// Coefficients from the highest power down.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TfCoeffs {
    pub num: Vec<Num>,
    pub den: Vec<Num>,
}

impl From<&TransferFunction> for TfCoeffs {
    fn from(t: &TransferFunction) -> Self {
        let c = |p: &[f64]| p.iter().copied().map(Num).collect();
        Self {
            num: c(t.num().coeffs()),
            den: c(t.den().coeffs()),
        }
    }
}

/// Gain value with its dB form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gain {
    pub value: Num,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub db: Option<f64>,
}

impl From<f64> for Gain {
    fn from(x: f64) -> Self {
        Self {
            value: Num(x),
            db: db(x),
        }
    }
}

/// Angle in radians with its degree form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Angle {
    pub rad: Num,
    pub deg: Num,
}

impl From<f64> for Angle {
    fn from(x: f64) -> Self {
        Self {
            rad: Num(x),
            deg: Num(x.to_degrees()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Info,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub level: Level,
    pub code: String,
    pub message: String,
}

impl Diagnostic {
    pub fn info(code: &str, message: impl Into<String>) -> Self {
        Self {
            level: Level::Info,
            code: code.into(),
            message: message.into(),
        }
    }

    pub fn warning(code: &str, message: impl Into<String>) -> Self {
        Self {
            level: Level::Warning,
            code: code.into(),
            message: message.into(),
        }
    }
}

/// Echo of the command line that produced a document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommandEcho {
    pub name: String,
    pub model: String,
    pub skew: Num,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<String>,
    pub worst_case: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<String>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputInfo {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultDocument<R> {
    pub schema_version: u32,
    pub tool: String,
    pub version: String,
    pub command: CommandEcho,
    pub input: InputInfo,
    pub results: R,
    pub diagnostics: Vec<Diagnostic>,
    /// RFC 3339 UTC; the only field that changes between identical runs.
    pub generated_at: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassicalReport {
    pub g_lower: Gain,
    pub g_upper: Gain,
    pub freq_lower: Option<Num>,
    pub freq_upper: Option<Num>,
    pub phi_upper: Angle,
    pub phase_freq: Option<Num>,
    pub gain_crossover_freqs: Vec<Num>,
    pub phase_crossover_freqs: Vec<Num>,
    /// Further stable gain ranges disconnected from the one containing 1.
    pub other_stable_gain_intervals: Vec<[Num; 2]>,
    pub closed_loop_poles: Vec<ComplexNum>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiskReport {
    pub kind: String,
    pub gamma_min: Gain,
    pub gamma_max: Gain,
    pub center: Num,
    pub radius: Num,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationSummary {
    pub verdict: String,
    pub passed: bool,
    pub omega0: Num,
    pub nearest_pole: Option<ComplexNum>,
    pub distance: Num,
    pub tolerance: Num,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorstCaseReport {
    /// All-pass pole; absent when the perturbation is a constant.
    pub beta: Option<Num>,
    pub delta_hat: TfCoeffs,
    pub f_hat: TfCoeffs,
    pub verification: VerificationSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiskMarginReport {
    pub sigma: Num,
    pub alpha: Num,
    pub peak_gain: Num,
    pub omega_crit: Num,
    pub delta0: ComplexNum,
    /// Absent when the destabilizing factor is infinite.
    pub f0: Option<ComplexNum>,
    pub disk: DiskReport,
    pub phi_m: Angle,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub worst_case: Option<WorstCaseReport>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub omega: Num,
    pub alpha: Num,
    pub gamma_min: Num,
    pub gamma_max: Num,
    pub gamma_m: Num,
    pub phi_m_deg: Num,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceReport {
    pub sigma: Num,
    pub min_alpha: Num,
    pub min_alpha_freq: Num,
    pub rows: Vec<TraceRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoopAtATimeRow {
    pub location: String,
    pub channel: usize,
    pub g_lower: Gain,
    pub g_upper: Gain,
    pub phi_upper: Angle,
    pub alpha: Num,
    pub gamma_min: Gain,
    pub gamma_max: Gain,
    pub phi_m: Angle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiLoopCheck {
    pub stable: bool,
    pub ill_posed: bool,
    pub nearest_pole: Option<ComplexNum>,
    pub distance: Num,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MimoReport {
    pub sigma: Num,
    pub points: String,
    /// Perturbed channels: plant inputs `0..n_u`, then plant outputs.
    pub channels: Vec<usize>,
    pub alpha_lower: Num,
    pub alpha_upper: Num,
    pub omega_crit: Num,
    pub mu_upper: Num,
    pub mu_lower: Num,
    /// Guarantees of the disk with `alpha_lower`.
    pub gamma_min: Gain,
    pub gamma_max: Gain,
    pub phi_m: Angle,
    pub delta_worst: Vec<ComplexNum>,
    /// `null` entries stand for an infinite factor.
    pub f_worst: Vec<Option<ComplexNum>>,
    pub inconclusive: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub worst_case_check: Option<MultiLoopCheck>,
    pub loop_at_a_time: Vec<LoopAtATimeRow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NyquistSample {
    pub omega: Num,
    pub re: Num,
    pub im: Num,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExclusionReport {
    pub sigma: Num,
    pub alpha: Num,
    pub center: Num,
    pub radius: Num,
    /// Real-axis points of the excluded disk.
    pub intercepts: [Num; 2],
    pub omega_crit: Num,
    /// `-1/f0`, the point where the Nyquist curve touches the disk.
    pub tangency_point: Option<ComplexNum>,
    /// Smallest `|L(jω) - center|` over the samples.
    pub min_center_distance: Num,
    pub sample_count: usize,
}
