//! JSON file formats for plant models and certificates.
//!
//! All matrices are stored as nested arrays of **columns**
//! (`[[col1], [col2], …]`), matching the column-stacking convention used
//! everywhere else in the crate. File writes go through a temp file and
//! an atomic rename.

use crate::contraction::{ContractionCertificate, DECAY_MARGIN, EQUALITY_TOL, METZLER_TOL};
use crate::numerics::Matrix;
use crate::plants::{corners, motor_position_model, motor_speed_model, IntervalMatrix, PlantModel, SynthesisModel};
use crate::polytope::VPolytope;
use crate::search::{SearchConfig, SearchReport, SearchStatus, StepMode};
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FileError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("matrix columns must be non-empty and of equal length")]
    RaggedMatrix,
    #[error("model invalid: {0}")]
    Model(#[from] crate::plants::PlantError),
    #[error("polytope invalid: {0}")]
    Polytope(#[from] crate::polytope::PolytopeError),
    #[error("--gamma only applies to motor models")]
    GammaNotApplicable,
    #[error("certificate file inconsistent: {0}")]
    BadCertificate(String),
}

/// Matrix as an array of columns.
pub type ColumnArrays = Vec<Vec<f64>>;

pub fn matrix_to_columns(m: &Matrix) -> ColumnArrays {
    (0..m.ncols())
        .map(|j| m.column(j).iter().copied().collect())
        .collect()
}

pub fn matrix_from_columns(cols: &ColumnArrays) -> Result<Matrix, FileError> {
    let m = cols.len();
    let n = cols.first().map_or(0, |c| c.len());
    if m == 0 || n == 0 || cols.iter().any(|c| c.len() != n) {
        return Err(FileError::RaggedMatrix);
    }
    let flat: Vec<f64> = cols.iter().flatten().copied().collect();
    Ok(Matrix::from_column_slice(n, m, &flat))
}

/// On-disk plant model description.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModelFile {
    Single {
        a: ColumnArrays,
    },
    Hull {
        a_list: Vec<ColumnArrays>,
    },
    Synthesis {
        a_list: Vec<ColumnArrays>,
        b_list: Vec<ColumnArrays>,
        c: ColumnArrays,
    },
    Interval {
        lower: ColumnArrays,
        upper: ColumnArrays,
    },
    MotorSpeed {
        #[serde(skip_serializing_if = "Option::is_none")]
        gamma: Option<f64>,
    },
    MotorPosition {
        #[serde(skip_serializing_if = "Option::is_none")]
        gamma: Option<f64>,
    },
}

impl ModelFile {
    /// Builds the runtime model; `gamma_override` (from the command
    /// line) wins over the file's `gamma`, which wins over the defaults
    /// 10 (speed) and 4 (position).
    pub fn to_plant_model(&self, gamma_override: Option<f64>) -> Result<PlantModel, FileError> {
        if gamma_override.is_some()
            && !matches!(self, ModelFile::MotorSpeed { .. } | ModelFile::MotorPosition { .. })
        {
            return Err(FileError::GammaNotApplicable);
        }
        let model = match self {
            ModelFile::Single { a } => PlantModel::Single(matrix_from_columns(a)?),
            ModelFile::Hull { a_list } => PlantModel::Hull(
                a_list
                    .iter()
                    .map(matrix_from_columns)
                    .collect::<Result<_, _>>()?,
            ),
            ModelFile::Synthesis { a_list, b_list, c } => PlantModel::Synthesis(SynthesisModel {
                a_list: a_list
                    .iter()
                    .map(matrix_from_columns)
                    .collect::<Result<_, _>>()?,
                b_list: b_list
                    .iter()
                    .map(matrix_from_columns)
                    .collect::<Result<_, _>>()?,
                c: matrix_from_columns(c)?,
            }),
            ModelFile::Interval { lower, upper } => {
                let im = IntervalMatrix::new(matrix_from_columns(lower)?, matrix_from_columns(upper)?)?;
                PlantModel::Hull(corners(&im)?)
            }
            ModelFile::MotorSpeed { gamma } => {
                motor_speed_model(gamma_override.or(*gamma).unwrap_or(10.0))?
            }
            ModelFile::MotorPosition { gamma } => {
                motor_position_model(gamma_override.or(*gamma).unwrap_or(4.0))?
            }
        };
        model.validate()?;
        Ok(model)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ToleranceEcho {
    pub equality: f64,
    pub metzler: f64,
    pub decay_margin: f64,
}

impl Default for ToleranceEcho {
    fn default() -> Self {
        ToleranceEcho {
            equality: EQUALITY_TOL,
            metzler: METZLER_TOL,
            decay_margin: DECAY_MARGIN,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ConfigEcho {
    pub vertices: usize,
    pub max_iter: usize,
    pub epsilon0: Option<f64>,
    pub eps_shrink: f64,
    pub eps_grow: f64,
    pub eta_tol: f64,
    pub seed: u64,
    pub step: String,
    pub restarts: usize,
    pub kappa: f64,
}

impl ConfigEcho {
    pub fn from_config(cfg: &SearchConfig) -> Self {
        ConfigEcho {
            vertices: cfg.vertex_count,
            max_iter: cfg.max_iter,
            epsilon0: cfg.epsilon0,
            eps_shrink: cfg.eps_shrink,
            eps_grow: cfg.eps_grow,
            eta_tol: cfg.eta_tol,
            seed: cfg.seed,
            step: match cfg.step_mode {
                StepMode::Full => "full".into(),
                StepMode::Fast => "fast".into(),
            },
            restarts: cfg.restarts,
            kappa: cfg.kappa,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TraceSummary {
    pub status: String,
    pub iterations: usize,
    pub restart_index: usize,
    pub restarts_used: usize,
    pub final_eta: f64,
}

pub fn status_name(status: SearchStatus) -> &'static str {
    match status {
        SearchStatus::Certified => "certified",
        SearchStatus::MaxIter => "max-iter",
        SearchStatus::Stalled => "stalled",
    }
}

/// On-disk certificate: the polytope, the per-plant `M` matrices, the
/// rate, the gain when present, and enough provenance (model, tolerances,
/// configuration, trace summary) to reproduce and re-verify the run.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CertificateFile {
    pub v: ColumnArrays,
    pub m_list: Vec<ColumnArrays>,
    pub eta: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<ColumnArrays>,
    pub model: ModelFile,
    pub tolerances: ToleranceEcho,
    pub config: ConfigEcho,
    pub trace_summary: TraceSummary,
}

impl CertificateFile {
    pub fn from_report(
        report: &SearchReport,
        model: &ModelFile,
        cfg: &SearchConfig,
    ) -> Option<Self> {
        let cert = report.certificate.as_ref()?;
        Some(CertificateFile {
            v: matrix_to_columns(cert.v.vertices()),
            m_list: cert.m_list.iter().map(matrix_to_columns).collect(),
            eta: cert.eta,
            k: cert.gain.as_ref().map(matrix_to_columns),
            model: model.clone(),
            tolerances: ToleranceEcho::default(),
            config: ConfigEcho::from_config(cfg),
            trace_summary: TraceSummary {
                status: status_name(report.status).into(),
                iterations: report.trace.len().saturating_sub(1),
                restart_index: report.restart_index,
                restarts_used: report.restarts_used,
                final_eta: cert.eta,
            },
        })
    }

    /// Rebuilds the runtime certificate (and the model it certifies).
    pub fn to_certificate(&self) -> Result<(ContractionCertificate, PlantModel), FileError> {
        let v = VPolytope::new(matrix_from_columns(&self.v)?)?;
        let m_list = self
            .m_list
            .iter()
            .map(matrix_from_columns)
            .collect::<Result<Vec<_>, _>>()?;
        let m = v.vertex_count();
        for mm in &m_list {
            if mm.nrows() != m || mm.ncols() != m {
                return Err(FileError::BadCertificate(format!(
                    "M block is {}×{}, expected {m}×{m}",
                    mm.nrows(),
                    mm.ncols()
                )));
            }
        }
        let gain = self.k.as_ref().map(|k| matrix_from_columns(k)).transpose()?;
        let model = self.model.to_plant_model(None)?;
        Ok((
            ContractionCertificate {
                v,
                m_list,
                eta: self.eta,
                gain,
            },
            model,
        ))
    }
}

fn write_atomic(path: &Path, contents: &str) -> Result<(), FileError> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<ModelFile, FileError> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

pub fn save_model(path: &Path, model: &ModelFile) -> Result<(), FileError> {
    write_atomic(path, &serde_json::to_string_pretty(model)?)
}

pub fn load_certificate(path: &Path) -> Result<CertificateFile, FileError> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

pub fn save_certificate(path: &Path, cert: &CertificateFile) -> Result<(), FileError> {
    write_atomic(path, &serde_json::to_string_pretty(cert)?)
}

/// Points file: a JSON array of coordinate arrays.
pub fn load_points(path: &Path) -> Result<Vec<Vec<f64>>, FileError> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}
