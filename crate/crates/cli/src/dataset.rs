//! JSON dataset files: `{"n": 2, "matrices": [[[1, 0], [0, 1]]], "labels": [...], "weights": [...]}`.

use std::path::Path;

use serde::{Deserialize, Serialize};
use spdgeom::{SpdDataset, SpdMatrix};

use crate::error::CliError;

const SYMMETRY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetFile {
    pub n: usize,
    pub matrices: Vec<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
}

impl DatasetFile {
    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let file: DatasetFile =
            serde_json::from_str(text).map_err(|e| CliError::Usage(format!("invalid dataset: {e}")))?;
        file.points()?;
        Ok(file)
    }

    pub fn from_points(points: &[SpdMatrix]) -> Self {
        let n = points.first().map(|p| p.dim()).unwrap_or(0);
        Self {
            n,
            matrices: points.iter().map(rows).collect(),
            labels: None,
            weights: None,
        }
    }

    /// Validated SPD points: square `n×n`, no ragged rows, symmetric within
    /// `1e-9` relative to the largest entry, positive definite.
    pub fn points(&self) -> Result<Vec<SpdMatrix>, CliError> {
        if self.n == 0 {
            return Err(CliError::Usage("dataset dimension n must be >= 1".into()));
        }
        if let Some(labels) = &self.labels {
            if labels.len() != self.matrices.len() {
                return Err(CliError::Usage(format!(
                    "{} labels for {} matrices",
                    labels.len(),
                    self.matrices.len()
                )));
            }
        }
        self.matrices
            .iter()
            .enumerate()
            .map(|(k, m)| self.matrix(k, m))
            .collect()
    }

    fn matrix(&self, k: usize, rows: &[Vec<f64>]) -> Result<SpdMatrix, CliError> {
        let n = self.n;
        if rows.len() != n || rows.iter().any(|r| r.len() != n) {
            return Err(CliError::Usage(format!(
                "matrix {k}: expected {n} rows of {n} entries"
            )));
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        let scale = flat.iter().fold(1.0_f64, |acc, x| acc.max(x.abs()));
        for i in 0..n {
            for j in 0..i {
                if (rows[i][j] - rows[j][i]).abs() > SYMMETRY_TOL * scale {
                    return Err(CliError::Usage(format!(
                        "matrix {k}: not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        SpdMatrix::from_row_slice(n, &flat).map_err(|e| CliError::Usage(format!("matrix {k}: {e}")))
    }

    pub fn dataset(&self) -> Result<SpdDataset, CliError> {
        let points = self.points()?;
        match &self.weights {
            Some(w) => SpdDataset::with_weights(points, w.clone()),
            None => SpdDataset::new(points),
        }
        .map_err(CliError::usage)
    }
}

/// Row lists of a symmetric matrix.
pub fn rows(m: &SpdMatrix) -> Vec<Vec<f64>> {
    let n = m.dim();
    (0..n)
        .map(|i| (0..n).map(|j| m.matrix()[(i, j)]).collect())
        .collect()
}

pub fn load(path: &Path) -> Result<DatasetFile, CliError> {
    DatasetFile::read(path)
}
