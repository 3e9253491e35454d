//! Markovian sensing models: validation, built-in families, Liouvillian
//! assembly and JSON (de)serialization.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mat::{all_finite, c, cr, hermiticity_defect, CMat};

/// Errors from model construction, I/O and operator assembly.
#[derive(Debug, Error)]
pub enum ModelError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed model JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("schema violation: {0}")]
    Schema(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// A GKSL model whose generator depends on the estimated parameter.
///
/// `hamiltonian_dot` and `jump_dots` hold the derivatives of `H` and of the
/// jump operators with respect to the parameter, evaluated at the operating
/// point. All matrices are `dim x dim`; `jumps` and `jump_dots` are aligned
/// index by index.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovianModel {
    pub hamiltonian: CMat,
    pub hamiltonian_dot: CMat,
    pub jumps: Vec<CMat>,
    pub jump_dots: Vec<CMat>,
    pub label: String,
}

impl MarkovianModel {
    /// Hilbert-space dimension `d`.
    pub fn dim(&self) -> usize {
        self.hamiltonian.nrows()
    }

    /// Number of jump operators `n`.
    pub fn n_jumps(&self) -> usize {
        self.jumps.len()
    }
}

/// One violated model invariant; `Display` gives a human-readable message.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NonHermitian { which: String, defect: f64 },
    NotSquare { which: String, rows: usize, cols: usize },
    DimensionMismatch { which: String, expected: usize, got: usize },
    JumpListLengthMismatch { jumps: usize, jump_dots: usize },
    NonFinite { which: String },
    EmptyDimension,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NonHermitian { which, defect } => {
                write!(f, "{which} is not Hermitian (max deviation {defect:.3e})")
            }
            Violation::NotSquare { which, rows, cols } => {
                write!(f, "{which} is not square ({rows}x{cols})")
            }
            Violation::DimensionMismatch {
                which,
                expected,
                got,
            } => write!(f, "{which} is {got}x{got}, expected {expected}x{expected}"),
            Violation::JumpListLengthMismatch { jumps, jump_dots } => write!(
                f,
                "jump list has {jumps} operators but derivative list has {jump_dots}"
            ),
            Violation::NonFinite { which } => write!(f, "{which} has non-finite entries"),
            Violation::EmptyDimension => write!(f, "model dimension is zero"),
        }
    }
}

/// Outcome of [`validate_model`]; all violations are reported, not just the
/// first one found.
#[derive(Debug, Clone, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks structural and Hermiticity invariants of a model.
///
/// `tol` bounds the acceptable max-entry deviation of `H` and `Hdot` from
/// their adjoints. Jump operators are arbitrary matrices and only need the
/// right shape and finite entries.
pub fn validate_model(m: &MarkovianModel, tol: f64) -> ValidationReport {
    let mut v = Vec::new();
    let d = m.dim();
    if d == 0 {
        v.push(Violation::EmptyDimension);
    }

    let check_shape = |name: &str, mat: &CMat, v: &mut Vec<Violation>| {
        if !mat.is_square() {
            v.push(Violation::NotSquare {
                which: name.to_string(),
                rows: mat.nrows(),
                cols: mat.ncols(),
            });
        } else if mat.nrows() != d {
            v.push(Violation::DimensionMismatch {
                which: name.to_string(),
                expected: d,
                got: mat.nrows(),
            });
        }
        if !all_finite(mat) {
            v.push(Violation::NonFinite {
                which: name.to_string(),
            });
        }
    };

    check_shape("H", &m.hamiltonian, &mut v);
    check_shape("Hdot", &m.hamiltonian_dot, &mut v);
    for (k, l) in m.jumps.iter().enumerate() {
        check_shape(&format!("L[{k}]"), l, &mut v);
    }
    for (k, l) in m.jump_dots.iter().enumerate() {
        check_shape(&format!("Ldot[{k}]"), l, &mut v);
    }

    if m.jumps.len() != m.jump_dots.len() {
        v.push(Violation::JumpListLengthMismatch {
            jumps: m.jumps.len(),
            jump_dots: m.jump_dots.len(),
        });
    }

    for (name, mat) in [("H", &m.hamiltonian), ("Hdot", &m.hamiltonian_dot)] {
        if mat.is_square() && all_finite(mat) {
            let defect = hermiticity_defect(mat);
            if defect > tol {
                v.push(Violation::NonHermitian {
                    which: name.to_string(),
                    defect,
                });
            }
        }
    }

    ValidationReport { violations: v }
}

/// Built-in single-qubit families used throughout the test suite.
///
/// All use `H = 0` and `Hdot = omega * sigma_z` at the operating point; they
/// differ in how the single dephasing jump operator depends on the parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BuiltinModelId {
    /// Dephasing along the signal axis, parameter-independent noise.
    ParallelDephasing,
    /// Dephasing tilted by a fixed angle `pi/15` from the signal axis.
    RotatedDephasing,
    /// Dephasing whose *strength* carries the parameter: `Ldot = L`.
    StrengthDephasing,
    /// Dephasing whose *axis* carries the parameter: `Ldot` orthogonal to `L`.
    DirectionDephasing,
    /// Unitary evolution, no jump operators.
    Noiseless,
}

impl BuiltinModelId {
    /// Short code used on the command line and in labels.
    pub fn code(self) -> &'static str {
        match self {
            BuiltinModelId::ParallelDephasing => "PD",
            BuiltinModelId::RotatedDephasing => "RD",
            BuiltinModelId::StrengthDephasing => "PDDS",
            BuiltinModelId::DirectionDephasing => "PDDD",
            BuiltinModelId::Noiseless => "NOISELESS",
        }
    }

    pub const ALL: [BuiltinModelId; 5] = [
        BuiltinModelId::ParallelDephasing,
        BuiltinModelId::RotatedDephasing,
        BuiltinModelId::StrengthDephasing,
        BuiltinModelId::DirectionDephasing,
        BuiltinModelId::Noiseless,
    ];
}

impl fmt::Display for BuiltinModelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for BuiltinModelId {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "PD" => Ok(BuiltinModelId::ParallelDephasing),
            "RD" => Ok(BuiltinModelId::RotatedDephasing),
            "PDDS" => Ok(BuiltinModelId::StrengthDephasing),
            "PDDD" => Ok(BuiltinModelId::DirectionDephasing),
            "NOISELESS" => Ok(BuiltinModelId::Noiseless),
            other => Err(ModelError::InvalidParameter(format!(
                "unknown builtin model '{other}' (expected PD, RD, PDDS, PDDD or NOISELESS)"
            ))),
        }
    }
}

/// Tilt angle of the rotated-dephasing family.
pub const ROTATED_DEPHASING_ANGLE: f64 = std::f64::consts::PI / 15.0;

fn sigma_x() -> CMat {
    CMat::from_row_slice(2, 2, &[cr(0.0), cr(1.0), cr(1.0), cr(0.0)])
}

fn sigma_z() -> CMat {
    CMat::from_row_slice(2, 2, &[cr(1.0), cr(0.0), cr(0.0), cr(-1.0)])
}

/// `sigma(theta) = cos(theta) sigma_z + sin(theta) sigma_x`.
fn sigma_axis(theta: f64) -> CMat {
    sigma_z().scale(theta.cos()) + sigma_x().scale(theta.sin())
}

/// Constructs a built-in model at its operating point.
///
/// `omega` scales the signal Hamiltonian; `gamma >= 0` is the dephasing
/// rate (ignored by `Noiseless`). The jump normalisation is
/// `sqrt(gamma/2) * sigma(axis)`.
pub fn builtin_model(
    id: BuiltinModelId,
    omega: f64,
    gamma: f64,
) -> Result<MarkovianModel, ModelError> {
    if !omega.is_finite() || !gamma.is_finite() {
        return Err(ModelError::InvalidParameter(
            "omega and gamma must be finite".into(),
        ));
    }
    if gamma < 0.0 {
        return Err(ModelError::InvalidParameter(format!(
            "gamma must be non-negative, got {gamma}"
        )));
    }

    let d = 2;
    let zero = CMat::zeros(d, d);
    let h = zero.clone();
    let hdot = sigma_z().scale(omega);
    let amp = (gamma / 2.0).sqrt();

    let (jumps, jump_dots) = match id {
        BuiltinModelId::ParallelDephasing => {
            (vec![sigma_z().scale(amp)], vec![zero.clone()])
        }
        BuiltinModelId::RotatedDephasing => (
            vec![sigma_axis(ROTATED_DEPHASING_ANGLE).scale(amp)],
            vec![zero.clone()],
        ),
        BuiltinModelId::StrengthDephasing => {
            // Strength encoding: L(x) = e^x * sqrt(gamma/2) sigma_z, so Ldot = L.
            let l = sigma_z().scale(amp);
            (vec![l.clone()], vec![l])
        }
        BuiltinModelId::DirectionDephasing => {
            // Axis encoding: L(x) = sqrt(gamma/2) sigma(x), so Ldot is the
            // orthogonal axis at x = 0.
            (vec![sigma_z().scale(amp)], vec![sigma_x().scale(amp)])
        }
        BuiltinModelId::Noiseless => (Vec::new(), Vec::new()),
    };

    Ok(MarkovianModel {
        hamiltonian: h,
        hamiltonian_dot: hdot,
        jumps,
        jump_dots,
        label: id.code().to_string(),
    })
}

/// Matrix form of the GKSL generator acting on row-major vectorised states.
///
/// Returns the `d^2 x d^2` matrix of
/// `-i (H (x) 1 - 1 (x) H^T) + sum_k [ L_k (x) conj(L_k)
///   - (1/2)(L_k^dag L_k (x) 1 + 1 (x) (L_k^dag L_k)^T) ]`.
pub fn liouvillian_matrix(m: &MarkovianModel) -> Result<CMat, ModelError> {
    let d = m.dim();
    for (name, mat) in [("H", &m.hamiltonian), ("Hdot", &m.hamiltonian_dot)] {
        if mat.shape() != (d, d) {
            return Err(ModelError::DimensionMismatch(format!(
                "{name} must be {d}x{d}"
            )));
        }
    }
    for (k, l) in m.jumps.iter().enumerate() {
        if l.shape() != (d, d) {
            return Err(ModelError::DimensionMismatch(format!(
                "L[{k}] must be {d}x{d}"
            )));
        }
    }

    let id = CMat::identity(d, d);
    let h = &m.hamiltonian;
    let mut out = (h.kronecker(&id) - id.kronecker(&h.transpose())) * Complex64::new(0.0, -1.0);
    for l in &m.jumps {
        let lbar = l.map(|z| z.conj());
        let ldl = l.adjoint() * l;
        out += l.kronecker(&lbar);
        out -= (ldl.kronecker(&id) + id.kronecker(&ldl.transpose())).scale(0.5);
    }
    Ok(out)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    dim: usize,
    label: String,
    #[serde(rename = "H")]
    h: Vec<Vec<[f64; 2]>>,
    #[serde(rename = "Hdot")]
    hdot: Vec<Vec<[f64; 2]>>,
    #[serde(rename = "L")]
    l: Vec<Vec<Vec<[f64; 2]>>>,
    #[serde(rename = "Ldot")]
    ldot: Vec<Vec<Vec<[f64; 2]>>>,
}

fn matrix_to_rows(m: &CMat) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

fn rows_to_matrix(name: &str, rows: &[Vec<[f64; 2]>], d: usize) -> Result<CMat, ModelError> {
    if rows.len() != d {
        return Err(ModelError::Schema(format!(
            "{name}: expected {d} rows, found {}",
            rows.len()
        )));
    }
    let mut m = CMat::zeros(d, d);
    for (i, row) in rows.iter().enumerate() {
        if row.len() != d {
            return Err(ModelError::Schema(format!(
                "{name}: row {i} has {} entries, expected {d}",
                row.len()
            )));
        }
        for (j, &[re, im]) in row.iter().enumerate() {
            if !re.is_finite() || !im.is_finite() {
                return Err(ModelError::Schema(format!(
                    "{name}: non-finite entry at ({i}, {j})"
                )));
            }
            m[(i, j)] = c(re, im);
        }
    }
    Ok(m)
}

/// Serialises a model to the JSON schema used by [`load_model`].
pub fn model_to_json(m: &MarkovianModel) -> String {
    let file = ModelFile {
        dim: m.dim(),
        label: m.label.clone(),
        h: matrix_to_rows(&m.hamiltonian),
        hdot: matrix_to_rows(&m.hamiltonian_dot),
        l: m.jumps.iter().map(matrix_to_rows).collect(),
        ldot: m.jump_dots.iter().map(matrix_to_rows).collect(),
    };
    let mut s = serde_json::to_string_pretty(&file).expect("model serialisation cannot fail");
    s.push('\n');
    s
}

/// Parses a model from its JSON form, checking shapes and finiteness.
pub fn model_from_json(text: &str) -> Result<MarkovianModel, ModelError> {
    let file: ModelFile = serde_json::from_str(text)?;
    let d = file.dim;
    if d == 0 {
        return Err(ModelError::Schema("dim must be positive".into()));
    }
    if file.l.len() != file.ldot.len() {
        return Err(ModelError::Schema(format!(
            "L has {} operators but Ldot has {}",
            file.l.len(),
            file.ldot.len()
        )));
    }
    let jumps = file
        .l
        .iter()
        .enumerate()
        .map(|(k, rows)| rows_to_matrix(&format!("L[{k}]"), rows, d))
        .collect::<Result<Vec<_>, _>>()?;
    let jump_dots = file
        .ldot
        .iter()
        .enumerate()
        .map(|(k, rows)| rows_to_matrix(&format!("Ldot[{k}]"), rows, d))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(MarkovianModel {
        hamiltonian: rows_to_matrix("H", &file.h, d)?,
        hamiltonian_dot: rows_to_matrix("Hdot", &file.hdot, d)?,
        jumps,
        jump_dots,
        label: file.label,
    })
}

/// Writes a model as JSON to `path`.
pub fn save_model(m: &MarkovianModel, path: &Path) -> Result<(), ModelError> {
    std::fs::write(path, model_to_json(m))?;
    Ok(())
}

/// Reads a model from a JSON file written by [`save_model`].
pub fn load_model(path: &Path) -> Result<MarkovianModel, ModelError> {
    let text = std::fs::read_to_string(path)?;
    model_from_json(&text)
}
