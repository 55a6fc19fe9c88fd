//! On-disk formats: model files (JSON), covariance sequences (CSV), report
//! and filter-bank files (JSON), sample paths (CSV with a JSON sidecar).
//!
//! Every structured output embeds the tool version, the full parameter set
//! and a SHA-256 digest of the input model, and carries no timestamps, so
//! re-running a command with the same inputs is byte-identical.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use std::io::Write;
use std::path::Path;
use thiserror::Error;

use crate::corpus::{BuiltinModel, CorpusError};
use crate::dpc::FilterBank;
use crate::matrix::{ComplexMatrix, MatrixError};
use crate::regularity::RegularityReport;
use crate::spectral::{
    CovarianceSequence, FrequencyGrid, SpectralAtom, SpectralError, SpectralMeasure,
};
use crate::timedomain::SamplePath;

pub const TOOL_NAME: &str = "specdpc";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum IoError {
    #[error("i/o error on {path}: {source}")]
    File {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("invalid model file: {0}")]
    Model(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
}

fn read_file(path: &Path) -> Result<String, IoError> {
    std::fs::read_to_string(path).map_err(|source| IoError::File {
        path: path.display().to_string(),
        source,
    })
}

fn write_file(path: &Path, contents: &str) -> Result<(), IoError> {
    std::fs::write(path, contents).map_err(|source| IoError::File {
        path: path.display().to_string(),
        source,
    })
}

/// Complex matrix as nested rows of `[re, im]` pairs.
pub fn matrix_to_json(m: &ComplexMatrix) -> Vec<Vec<[f64; 2]>> {
    (0..m.rows())
        .map(|i| (0..m.cols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

pub fn matrix_from_json(rows: &[Vec<[f64; 2]>]) -> Result<ComplexMatrix, IoError> {
    if rows.is_empty() || rows[0].is_empty() {
        return Err(IoError::Model("empty matrix".into()));
    }
    let cols = rows[0].len();
    let mut data = Vec::with_capacity(rows.len() * cols);
    for row in rows {
        if row.len() != cols {
            return Err(IoError::Model("ragged matrix rows".into()));
        }
        for &[re, im] in row {
            data.push(Complex64::new(re, im));
        }
    }
    Ok(ComplexMatrix::new(rows.len(), cols, data)?)
}

/// Density payload of a model file: a builtin reference or an inline array
/// of one matrix per grid node.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DensitySpec {
    Builtin(String),
    Inline(Vec<Vec<Vec<[f64; 2]>>>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AtomSpec {
    pub omega: f64,
    pub mass: Vec<Vec<[f64; 2]>>,
}

/// Model file schema.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelFile {
    pub dim: usize,
    pub grid_size: usize,
    pub density: DensitySpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub builtin_params: Option<Value>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub atoms: Vec<AtomSpec>,
    #[serde(default)]
    pub singular_continuous: bool,
}

/// Where a model came from, with the digest embedded in every output.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelDescriptor {
    pub source: String,
    pub digest: String,
    pub grid_size: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub params: Option<Value>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    hex_string(&hasher.finalize())
}

fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Resolve a CLI model argument: either `builtin:<id>` (sampled on a grid
/// of `grid_size` nodes with default parameters) or a path to a model file
/// (whose own `grid_size` governs).
pub fn resolve_model(
    spec: &str,
    grid_size: usize,
) -> Result<(SpectralMeasure, ModelDescriptor), IoError> {
    if let Some(id) = spec.strip_prefix("builtin:") {
        let model = BuiltinModel::parse(id, None)?;
        let grid = FrequencyGrid::new(grid_size)?;
        let measure = model.build(grid)?;
        let canonical = format!("builtin:{id}?grid={grid_size}");
        Ok((
            measure,
            ModelDescriptor {
                source: format!("builtin:{id}"),
                digest: sha256_hex(canonical.as_bytes()),
                grid_size,
                params: None,
            },
        ))
    } else {
        let path = Path::new(spec);
        let raw = read_file(path)?;
        let (measure, mut desc) = load_model_str(&raw)?;
        desc.source = spec.to_string();
        Ok((measure, desc))
    }
}

/// Parse a model file from its JSON text.
pub fn load_model_str(raw: &str) -> Result<(SpectralMeasure, ModelDescriptor), IoError> {
    let file: ModelFile = serde_json::from_str(raw)?;
    let grid = FrequencyGrid::new(file.grid_size)?;
    let atoms: Vec<SpectralAtom> = file
        .atoms
        .iter()
        .map(|a| {
            Ok(SpectralAtom {
                omega: a.omega,
                mass: matrix_from_json(&a.mass)?,
            })
        })
        .collect::<Result<_, IoError>>()?;
    let measure = match &file.density {
        DensitySpec::Builtin(id) => {
            let id = id.strip_prefix("builtin:").unwrap_or(id);
            let model = BuiltinModel::parse(id, file.builtin_params.as_ref())?;
            if model.dim() != file.dim {
                return Err(IoError::Model(format!(
                    "dim {} does not match builtin `{id}` (dim {})",
                    file.dim,
                    model.dim()
                )));
            }
            model.build(grid)?
        }
        DensitySpec::Inline(nodes) => {
            if nodes.len() != file.grid_size {
                return Err(IoError::Model(format!(
                    "density has {} nodes, grid_size is {}",
                    nodes.len(),
                    file.grid_size
                )));
            }
            let density = nodes
                .iter()
                .map(|rows| matrix_from_json(rows))
                .collect::<Result<Vec<_>, _>>()?;
            SpectralMeasure::new(grid, file.dim, density, Vec::new(), false)?
        }
    };
    let measure = measure
        .with_atoms(atoms)?
        .with_singular_continuous(file.singular_continuous);
    let desc = ModelDescriptor {
        source: "<inline>".into(),
        digest: sha256_hex(raw.as_bytes()),
        grid_size: file.grid_size,
        params: file.builtin_params.clone(),
    };
    Ok((measure, desc))
}

/// Serialize a measure to the model-file schema (inline density).
pub fn model_to_json(measure: &SpectralMeasure) -> ModelFile {
    ModelFile {
        dim: measure.dim(),
        grid_size: measure.grid().size(),
        density: DensitySpec::Inline(measure.density().iter().map(matrix_to_json).collect()),
        builtin_params: None,
        atoms: measure
            .atoms()
            .iter()
            .map(|a| AtomSpec {
                omega: a.omega,
                mass: matrix_to_json(&a.mass),
            })
            .collect(),
        singular_continuous: measure.singular_continuous(),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ToolInfo {
    pub name: String,
    pub version: String,
}

impl ToolInfo {
    pub fn current() -> Self {
        Self {
            name: TOOL_NAME.into(),
            version: TOOL_VERSION.into(),
        }
    }
}

/// Report file: classification plus provenance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportFile {
    pub tool: ToolInfo,
    pub input: ModelDescriptor,
    pub report: RegularityReport,
}

pub fn write_report(path: &Path, report: &ReportFile) -> Result<(), IoError> {
    write_file(path, &to_pretty_json(report)?)
}

pub fn to_pretty_json<T: Serialize>(value: &T) -> Result<String, IoError> {
    Ok(serde_json::to_string_pretty(value)?)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TapJ {
    pub j: i64,
    pub matrix: Vec<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TapM {
    pub m: i64,
    pub matrix: Vec<Vec<[f64; 2]>>,
}

/// Filter-bank file: analysis/synthesis taps, the direct filter, truncation
/// accounting and the error certificate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FilterFile {
    pub tool: ToolInfo,
    pub input: ModelDescriptor,
    pub rank: usize,
    pub sided: crate::eigenfield::Sidedness,
    pub gauge: String,
    pub tail_energy: f64,
    pub taps: Vec<TapJ>,
    pub direct: Vec<TapM>,
    pub certificate: crate::dpc::ApproximationCertificate,
}

pub fn filter_to_file(bank: &FilterBank, input: ModelDescriptor) -> FilterFile {
    FilterFile {
        tool: ToolInfo::current(),
        input,
        rank: bank.rank,
        sided: bank.sidedness,
        gauge: bank.gauge.label().into(),
        tail_energy: bank.tail_energy,
        taps: bank
            .taps
            .iter()
            .map(|(j, m)| TapJ {
                j: *j,
                matrix: matrix_to_json(m),
            })
            .collect(),
        direct: bank
            .direct
            .iter()
            .map(|(m, w)| TapM {
                m: *m,
                matrix: matrix_to_json(w),
            })
            .collect(),
        certificate: bank.certificate.clone(),
    }
}

pub fn write_filter(path: &Path, file: &FilterFile) -> Result<(), IoError> {
    write_file(path, &to_pretty_json(file)?)
}

/// Covariance CSV: rows `h,i,j,re,im` for `h = 0..=H`, `i, j = 1..=d`.
pub fn save_covariance_csv(cov: &CovarianceSequence, path: &Path) -> Result<(), IoError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["h", "i", "j", "re", "im"])?;
    for h in 0..=cov.max_lag() {
        let c = cov.at(h as i64);
        for i in 0..cov.dim() {
            for j in 0..cov.dim() {
                w.write_record([
                    h.to_string(),
                    (i + 1).to_string(),
                    (j + 1).to_string(),
                    format!("{:e}", c[(i, j)].re),
                    format!("{:e}", c[(i, j)].im),
                ])?;
            }
        }
    }
    w.flush().map_err(|source| IoError::File {
        path: path.display().to_string(),
        source,
    })?;
    Ok(())
}

pub fn load_covariance_csv(path: &Path) -> Result<CovarianceSequence, IoError> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut entries: Vec<(usize, usize, usize, Complex64)> = Vec::new();
    let mut max_h = 0usize;
    let mut dim = 0usize;
    for record in reader.records() {
        let record = record?;
        let parse =
            |idx: usize| -> Result<f64, IoError> {
                record
                    .get(idx)
                    .ok_or_else(|| IoError::Model("short CSV row".into()))?
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| IoError::Model(format!("bad number in CSV: {e}")))
            };
        let h = parse(0)? as usize;
        let i = parse(1)? as usize;
        let j = parse(2)? as usize;
        if i == 0 || j == 0 {
            return Err(IoError::Model("channel indices are 1-based".into()));
        }
        max_h = max_h.max(h);
        dim = dim.max(i).max(j);
        entries.push((h, i - 1, j - 1, Complex64::new(parse(3)?, parse(4)?)));
    }
    if dim == 0 {
        return Err(IoError::Model("empty covariance CSV".into()));
    }
    let mut mats = vec![ComplexMatrix::zeros(dim, dim); max_h + 1];
    for (h, i, j, z) in entries {
        mats[h][(i, j)] = z;
    }
    Ok(CovarianceSequence::new(dim, mats)?)
}

/// Sample-path CSV header: `t, re_1, im_1, ..., re_d, im_d`.
pub fn save_path_csv(path_data: &SamplePath, path: &Path) -> Result<(), IoError> {
    let file = std::fs::File::create(path).map_err(|source| IoError::File {
        path: path.display().to_string(),
        source,
    })?;
    let mut w = std::io::BufWriter::new(file);
    let mut header = String::from("t");
    for i in 1..=path_data.dim {
        header.push_str(&format!(",re_{i},im_{i}"));
    }
    let io_err = |source: std::io::Error| IoError::File {
        path: path.display().to_string(),
        source,
    };
    writeln!(w, "{header}").map_err(io_err)?;
    for (t, row) in path_data.values.iter().enumerate() {
        let mut line = t.to_string();
        for z in row {
            line.push_str(&format!(",{:e},{:e}", z.re, z.im));
        }
        writeln!(w, "{line}").map_err(io_err)?;
    }
    w.flush().map_err(io_err)?;
    Ok(())
}

/// Sidecar metadata for a sample-path CSV.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PathSidecar {
    pub tool: ToolInfo,
    pub input: ModelDescriptor,
    pub seed: u64,
    pub length: usize,
    pub generator: String,
    pub burn_in: usize,
    pub real_valued: bool,
}

pub fn write_sidecar(path: &Path, sidecar: &PathSidecar) -> Result<(), IoError> {
    write_file(path, &to_pretty_json(sidecar)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::covariance_from_measure;
    use std::f64::consts::PI;

    #[test]
    fn builtin_shorthand_resolves() {
        let (measure, desc) = resolve_model("builtin:regular", 256).unwrap();
        assert_eq!(measure.dim(), 3);
        assert_eq!(measure.grid().size(), 256);
        assert_eq!(desc.source, "builtin:regular");
        assert_eq!(desc.digest.len(), 64);
        // Same spec, same digest; different grid, different digest.
        let (_, desc2) = resolve_model("builtin:regular", 256).unwrap();
        assert_eq!(desc.digest, desc2.digest);
        let (_, desc3) = resolve_model("builtin:regular", 512).unwrap();
        assert_ne!(desc.digest, desc3.digest);
    }

    #[test]
    fn model_file_roundtrip_inline() {
        let (measure, _) = resolve_model("builtin:type3_candidate", 64).unwrap();
        let json = serde_json::to_string(&model_to_json(&measure)).unwrap();
        let (back, desc) = load_model_str(&json).unwrap();
        assert_eq!(back.dim(), 3);
        assert_eq!(desc.grid_size, 64);
        for m in 0..64 {
            let gap = back
                .density_at(m)
                .sub(measure.density_at(m))
                .frobenius_norm();
            assert!(gap < 1e-12);
        }
    }

    #[test]
    fn model_file_with_builtin_reference_and_params() {
        let raw = r#"{
            "dim": 1,
            "grid_size": 128,
            "density": "builtin:scalar_ma1",
            "builtin_params": {"theta": 0.25}
        }"#;
        let (measure, _) = load_model_str(raw).unwrap();
        assert_eq!(measure.dim(), 1);
        // f(0) = |1 + 0.25|^2 / 2 pi at omega = 0.
        let mid = measure.grid().size() / 2;
        assert!((measure.density_at(mid)[(0, 0)].re - 1.5625 / (2.0 * PI)).abs() < 1e-12);
    }

    #[test]
    fn model_file_with_atoms() {
        let raw = r#"{
            "dim": 2,
            "grid_size": 64,
            "density": "builtin:scalar_white",
            "atoms": [{"omega": 1.0, "mass": [[[1.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [2.0, 0.0]]]}]
        }"#;
        // dim mismatch with the builtin must be rejected.
        assert!(matches!(load_model_str(raw), Err(IoError::Model(_))));
        let fixed = raw.replace("\"dim\": 2", "\"dim\": 1").replace(
            "[[[1.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [2.0, 0.0]]]",
            "[[[1.0, 0.0]]]",
        );
        let (measure, _) = load_model_str(&fixed).unwrap();
        assert_eq!(measure.atoms().len(), 1);
        assert_eq!(measure.atoms()[0].mass[(0, 0)].re, 1.0);
    }

    #[test]
    fn malformed_model_files_are_rejected() {
        assert!(load_model_str("not json").is_err());
        assert!(load_model_str(r#"{"dim": 2, "grid_size": 7, "density": "builtin:regular"}"#).is_err());
        let short = r#"{"dim": 1, "grid_size": 64, "density": [[[[1.0, 0.0]]]]}"#;
        assert!(matches!(load_model_str(short), Err(IoError::Model(_))));
    }

    #[test]
    fn covariance_csv_roundtrip() {
        let (measure, _) = resolve_model("builtin:regular", 128).unwrap();
        let cov = covariance_from_measure(&measure, 5);
        let dir = std::env::temp_dir().join("specdpc_io_test");
        std::fs::create_dir_all(&dir).unwrap();
        let file = dir.join("cov.csv");
        save_covariance_csv(&cov, &file).unwrap();
        let back = load_covariance_csv(&file).unwrap();
        assert_eq!(back.dim(), 3);
        assert_eq!(back.max_lag(), 5);
        for h in 0..=5 {
            let gap = back.at(h).sub(&cov.at(h)).frobenius_norm();
            assert!(gap < 1e-12, "h={h}");
        }
    }

    #[test]
    fn path_csv_layout() {
        let path_data = SamplePath {
            dim: 2,
            values: vec![
                vec![Complex64::new(1.0, -2.0), Complex64::new(0.5, 0.0)],
                vec![Complex64::new(0.0, 0.25), Complex64::new(-1.0, 1.0)],
            ],
            seed: 9,
            generator: "test".into(),
            burn_in: 0,
        };
        let dir = std::env::temp_dir().join("specdpc_io_test");
        std::fs::create_dir_all(&dir).unwrap();
        let file = dir.join("path.csv");
        save_path_csv(&path_data, &file).unwrap();
        let text = std::fs::read_to_string(&file).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "t,re_1,im_1,re_2,im_2");
        assert!(lines.next().unwrap().starts_with("0,1e0,-2e0,5e-1,0e0"));
    }
}
