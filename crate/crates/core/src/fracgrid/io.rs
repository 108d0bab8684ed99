use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::grid::Grid;
use super::operator::Spectrum;
use crate::error::{Error, Result};

/// Little-endian float64 bytes of a matrix in row-major order.
pub fn matrix_bytes(m: &DMatrix<f64>) -> Vec<u8> {
    let mut out = Vec::with_capacity(m.len() * 8);
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.extend_from_slice(&m[(i, j)].to_le_bytes());
        }
    }
    out
}

pub fn checksum(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}

#[derive(Debug, Serialize, Deserialize)]
struct MatrixSidecar {
    rows: usize,
    cols: usize,
    checksum: String,
    #[serde(default)]
    meta: serde_json::Value,
}

/// Writes `path` (binary) and a JSON sidecar next to it with shape, checksum and `meta`.
pub fn write_matrix(path: &Path, m: &DMatrix<f64>, meta: serde_json::Value) -> Result<()> {
    let bytes = matrix_bytes(m);
    let sidecar = MatrixSidecar {
        rows: m.nrows(),
        cols: m.ncols(),
        checksum: checksum(&bytes),
        meta,
    };
    fs::write(path, &bytes)?;
    fs::write(sidecar_path(path), serde_json::to_string_pretty(&sidecar)?)?;
    Ok(())
}

/// Reads a matrix written by [`write_matrix`], verifying the checksum.
pub fn read_matrix(path: &Path) -> Result<(DMatrix<f64>, serde_json::Value)> {
    let sidecar: MatrixSidecar = serde_json::from_str(&fs::read_to_string(sidecar_path(path))?)?;
    let bytes = fs::read(path)?;
    if checksum(&bytes) != sidecar.checksum || bytes.len() != sidecar.rows * sidecar.cols * 8 {
        return Err(Error::Checksum(path.display().to_string()));
    }
    let values: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    let m = DMatrix::from_row_slice(sidecar.rows, sidecar.cols, &values);
    Ok((m, sidecar.meta))
}

#[derive(Debug, Serialize, Deserialize)]
struct SpectrumSidecar {
    #[serde(rename = "N_tot")]
    n_tot: usize,
    #[serde(rename = "L")]
    half_width: f64,
    h: f64,
    checksum: String,
}

/// Caches a decomposition: first row holds eigenvalues, the remaining rows the eigenvectors.
pub fn save_spectrum(path: &Path, grid: &Grid, spectrum: &Spectrum) -> Result<()> {
    let n = spectrum.len();
    let mut m = DMatrix::zeros(n + 1, n);
    m.row_mut(0).copy_from(&spectrum.eigvals.transpose());
    m.rows_mut(1, n).copy_from(&spectrum.eigvecs);
    let bytes = matrix_bytes(&m);
    let sidecar = SpectrumSidecar {
        n_tot: n,
        half_width: grid.half_width(),
        h: grid.h(),
        checksum: checksum(&bytes),
    };
    fs::write(path, &bytes)?;
    fs::write(sidecar_path(path), serde_json::to_string_pretty(&sidecar)?)?;
    Ok(())
}

/// Loads a cached decomposition if it matches `grid`.
pub fn load_spectrum(path: &Path, grid: &Grid) -> Result<Spectrum> {
    let sidecar: SpectrumSidecar = serde_json::from_str(&fs::read_to_string(sidecar_path(path))?)?;
    if sidecar.n_tot != grid.len()
        || sidecar.half_width != grid.half_width()
        || sidecar.h != grid.h()
    {
        return Err(Error::Checksum(format!(
            "{} was built for another grid",
            path.display()
        )));
    }
    let bytes = fs::read(path)?;
    let n = sidecar.n_tot;
    if checksum(&bytes) != sidecar.checksum || bytes.len() != (n + 1) * n * 8 {
        return Err(Error::Checksum(path.display().to_string()));
    }
    let vals: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    let eigvals = DVector::from_column_slice(&vals[..n]);
    let eigvecs = DMatrix::from_row_slice(n, n, &vals[n..]);
    Ok(Spectrum { eigvals, eigvecs })
}
