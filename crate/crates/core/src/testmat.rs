//! Stewart test matrices, error metrics and a small binary matrix format.

use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::{dim_err, PqrError, Result};
use crate::linalg::{matmul, reference_qr, Matrix};

/// File magic of the binary matrix format.
pub const MAGIC: &[u8; 8] = b"PQRMAT01";

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StewartSpec {
    pub rows: usize,
    pub cols: usize,
    pub kappa: f64,
    pub seed: u64,
}

impl StewartSpec {
    pub fn new(rows: usize, cols: usize, kappa: f64, seed: u64) -> Self {
        Self {
            rows,
            cols,
            kappa,
            seed,
        }
    }
}

/// Standard normal samples by Box-Muller, both outputs of each pair used.
pub fn gaussian_matrix(rows: usize, cols: usize, rng: &mut impl Rng) -> Matrix {
    let len = rows * cols;
    let mut data = Vec::with_capacity(len + 1);
    while data.len() < len {
        let u1 = 1.0 - rng.random::<f64>();
        let u2: f64 = rng.random();
        let r = (-2.0 * u1.ln()).sqrt();
        let t = 2.0 * std::f64::consts::PI * u2;
        data.push(r * t.cos());
        data.push(r * t.sin());
    }
    data.truncate(len);
    Matrix::from_col_major(rows, cols, data).expect("length matches")
}

/// `σ_j = κ^{(j−m+1)/(m−1)}`, from `1/κ` up to `1`.
pub fn stewart_singular_values(m: usize, kappa: f64) -> Vec<f64> {
    if m == 1 {
        return vec![1.0];
    }
    (0..m)
        .map(|j| kappa.powf((j as f64 - (m as f64 - 1.0)) / (m as f64 - 1.0)))
        .collect()
}

/// `X = UΣVᵀ` with Haar-like orthonormal `U` (rows×cols) and `V` (cols×cols).
///
/// `U` is drawn from ChaCha20 stream 0 and `V` from stream 1 of `seed`.
pub fn stewart_matrix(spec: &StewartSpec) -> Result<Matrix> {
    if spec.rows < spec.cols {
        return dim_err(format!(
            "Stewart matrix needs rows >= cols, got {}x{}",
            spec.rows, spec.cols
        ));
    }
    if !(spec.kappa >= 1.0) || !spec.kappa.is_finite() {
        return Err(PqrError::InvalidPlan(format!(
            "condition number {} must be finite and >= 1",
            spec.kappa
        )));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(spec.seed);
    rng.set_stream(0);
    let (u, _) = reference_qr(&gaussian_matrix(spec.rows, spec.cols, &mut rng))?;
    rng.set_stream(1);
    rng.set_word_pos(0);
    let (v, _) = reference_qr(&gaussian_matrix(spec.cols, spec.cols, &mut rng))?;
    let sigma = stewart_singular_values(spec.cols, spec.kappa);
    let us = Matrix::from_fn(spec.rows, spec.cols, |i, j| u[(i, j)] * sigma[j]);
    matmul(&us, &v.transpose(), false)
}

/// `‖I − QᵀQ‖_F`.
pub fn ortho_error(q: &Matrix) -> f64 {
    let g = matmul(q, q, true).expect("QᵀQ always conforms");
    let mut sum = 0.0;
    for j in 0..g.cols() {
        for i in 0..g.rows() {
            let d = if i == j { 1.0 } else { 0.0 } - g[(i, j)];
            sum += d * d;
        }
    }
    sum.sqrt()
}

/// `‖A − QR‖_F / ‖A‖_F` (0 for `A = 0` with an exact factorization).
pub fn residual_error(a: &Matrix, q: &Matrix, r: &Matrix) -> Result<f64> {
    let diff = a.sub(&matmul(q, r, false)?)?.frobenius_norm();
    let scale = a.frobenius_norm();
    Ok(if scale == 0.0 { diff } else { diff / scale })
}

/// Writes `m` as magic, rows and cols (u64 little endian), then column-major f64 little endian.
pub fn write_matrix(mut w: impl Write, m: &Matrix) -> std::io::Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&(m.rows() as u64).to_le_bytes())?;
    w.write_all(&(m.cols() as u64).to_le_bytes())?;
    for v in m.as_slice() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()
}

pub fn read_matrix(mut r: impl Read) -> Result<Matrix> {
    let io = |e: std::io::Error| PqrError::Format(e.to_string());
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(io)?;
    if &magic != MAGIC {
        return Err(PqrError::Format("bad magic".into()));
    }
    let mut word = [0u8; 8];
    r.read_exact(&mut word).map_err(io)?;
    let rows = u64::from_le_bytes(word) as usize;
    r.read_exact(&mut word).map_err(io)?;
    let cols = u64::from_le_bytes(word) as usize;
    let len = rows
        .checked_mul(cols)
        .ok_or_else(|| PqrError::Format("size overflow".into()))?;
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes).map_err(io)?;
    if bytes.len() != len * 8 {
        return Err(PqrError::Format(format!(
            "payload of {} bytes for a {rows}x{cols} matrix",
            bytes.len()
        )));
    }
    let data = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    Matrix::from_col_major(rows, cols, data)
}
