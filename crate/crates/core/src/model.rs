//! Fitted projection models and their on-disk format.
//!
//! The model file is little-endian binary: magic `G2DL`, version `u32`,
//! `d1: u32`, `r1: u32`, then the projection matrix row-major as `f64`.

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::solver::{SolverConfig, SolverTrace};

const MAGIC: &[u8; 4] = b"G2DL";
const VERSION: u32 = 1;

/// How a model was produced. Only the iterative solver guarantees
/// orthonormal directions; the eigen baseline's eigenvectors are generally
/// not mutually orthogonal.
#[derive(Debug, Clone)]
pub enum ModelSource {
    G2dlda(SolverConfig),
    Eigen2dlda { ridge: f64, eigenvalues: Vec<f64> },
    Loaded,
}

/// A d1 x r1 projection matrix with provenance and per-direction traces.
#[derive(Debug, Clone)]
pub struct ProjectionModel {
    w: DMatrix<f64>,
    source: ModelSource,
    traces: Vec<SolverTrace>,
}

impl ProjectionModel {
    pub(crate) fn new(w: DMatrix<f64>, source: ModelSource, traces: Vec<SolverTrace>) -> Self {
        ProjectionModel { w, source, traces }
    }

    /// The projection matrix; columns are the fitted directions.
    pub fn w(&self) -> &DMatrix<f64> {
        &self.w
    }

    /// Column `s` as a direction vector.
    pub fn direction(&self, s: usize) -> DVector<f64> {
        self.w.column(s).into_owned()
    }

    pub fn input_rows(&self) -> usize {
        self.w.nrows()
    }

    pub fn num_directions(&self) -> usize {
        self.w.ncols()
    }

    pub fn source(&self) -> &ModelSource {
        &self.source
    }

    pub fn traces(&self) -> &[SolverTrace] {
        &self.traces
    }

    /// Whether this producer promises mutually orthonormal directions.
    pub fn orthonormal_producer(&self) -> bool {
        matches!(self.source, ModelSource::G2dlda(_))
    }

    /// Max-entry deviation of `W^T W` from the identity.
    pub fn orthonormality_error(&self) -> f64 {
        let gram = self.w.transpose() * &self.w;
        (gram - DMatrix::identity(self.w.ncols(), self.w.ncols())).amax()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let (d1, r1) = self.w.shape();
        let mut out = Vec::with_capacity(16 + d1 * r1 * 8);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(d1 as u32).to_le_bytes());
        out.extend_from_slice(&(r1 as u32).to_le_bytes());
        for i in 0..d1 {
            for j in 0..r1 {
                out.extend_from_slice(&self.w[(i, j)].to_le_bytes());
            }
        }
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        let bad = |reason: &str| Error::ModelFormat {
            path: path.to_path_buf(),
            reason: reason.to_string(),
        };
        if bytes.len() < 16 {
            return Err(bad("file shorter than header"));
        }
        if &bytes[0..4] != MAGIC {
            return Err(bad("bad magic (expected G2DL)"));
        }
        let word = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap());
        let version = word(4);
        if version != VERSION {
            return Err(bad(&format!("unsupported version {version}")));
        }
        let d1 = word(8) as usize;
        let r1 = word(12) as usize;
        let expected = 16 + d1 * r1 * 8;
        if bytes.len() != expected {
            return Err(bad(&format!(
                "expected {expected} bytes for a {d1}x{r1} model, found {}",
                bytes.len()
            )));
        }
        let mut w = DMatrix::zeros(d1, r1);
        for i in 0..d1 {
            for j in 0..r1 {
                let at = 16 + (i * r1 + j) * 8;
                w[(i, j)] = f64::from_le_bytes(bytes[at..at + 8].try_into().unwrap());
            }
        }
        Ok(ProjectionModel::new(w, ModelSource::Loaded, Vec::new()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    #[test]
    fn save_load_roundtrip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.g2dl");
        let w = dmatrix![1.0, 0.25; -3.5, 1e-300; 0.0, 42.125];
        let model = ProjectionModel::new(w.clone(), ModelSource::Loaded, Vec::new());
        model.save(&path).unwrap();
        let back = ProjectionModel::load(&path).unwrap();
        assert_eq!(back.w(), &w);
    }

    #[test]
    fn rejects_corrupt_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.g2dl");
        std::fs::write(&path, b"NOPE\x01\x00\x00\x00").unwrap();
        assert!(matches!(
            ProjectionModel::load(&path),
            Err(Error::ModelFormat { .. })
        ));

        let truncated = dir.path().join("short.g2dl");
        let mut bytes = Vec::new();
        bytes.extend_from_slice(b"G2DL");
        bytes.extend_from_slice(&1u32.to_le_bytes());
        bytes.extend_from_slice(&2u32.to_le_bytes());
        bytes.extend_from_slice(&2u32.to_le_bytes());
        bytes.extend_from_slice(&[0u8; 8]); // only one of four values
        std::fs::write(&truncated, bytes).unwrap();
        assert!(matches!(
            ProjectionModel::load(&truncated),
            Err(Error::ModelFormat { .. })
        ));
    }
}
