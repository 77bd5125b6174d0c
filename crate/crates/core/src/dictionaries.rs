//! Dictionary generators. Every generator returns unit-norm columns and is a
//! pure function of its parameters and seed.
//!
//! Random draws use `ChaCha8Rng::seed_from_u64(seed)` and `StandardNormal`,
//! filling the matrix column by column.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{Matrix, TAU_NUM};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DictionaryKind {
    Gaussian,
    Hybrid { t_max: f64 },
    Convolutive { sigma: f64, downsample: usize },
    Example1 { theta1: f64, theta2: f64 },
    Custom,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dictionary {
    matrix: Matrix,
    kind: DictionaryKind,
    seed: Option<u64>,
}

fn normalize_columns(mut a: Matrix) -> Result<Matrix> {
    for (column, mut c) in a.column_iter_mut().enumerate() {
        let norm = c.norm();
        if norm == 0.0 {
            return Err(Error::EmptyRow { column });
        }
        c /= norm;
    }
    Ok(a)
}

fn check_dims(m: usize, n: usize) -> Result<()> {
    if m == 0 || n == 0 {
        return Err(invalid(format!("dimensions must be positive, got {m}x{n}")));
    }
    Ok(())
}

fn gaussian_matrix(m: usize, n: usize, rng: &mut ChaCha8Rng) -> Matrix {
    Matrix::from_iterator(m, n, (0..m * n).map(|_| rng.sample::<f64, _>(StandardNormal)))
}

/// Pulse width in samples: `⌈6σ⌉`, at least 1.
pub fn pulse_length(sigma: f64) -> usize {
    ((6.0 * sigma).ceil() as usize).max(1)
}

/// Gaussian pulse sampled on the centered grid `t = i - (L-1)/2`.
pub fn gaussian_pulse(sigma: f64) -> Vec<f64> {
    let len = pulse_length(sigma);
    let center = (len as f64 - 1.0) / 2.0;
    (0..len)
        .map(|i| {
            let t = i as f64 - center;
            (-t * t / (2.0 * sigma * sigma)).exp()
        })
        .collect()
}

/// Unnormalized convolution matrix behind [`Dictionary::convolutive`].
pub fn convolution_matrix(n: usize, sigma: f64, downsample: usize) -> Matrix {
    let h = gaussian_pulse(sigma);
    let full_rows = n + h.len() - 1;
    let rows = full_rows.div_ceil(downsample.max(1));
    Matrix::from_fn(rows, n, |r, j| match (r * downsample).checked_sub(j) {
        Some(k) if k < h.len() => h[k],
        _ => 0.0,
    })
}

impl Dictionary {
    pub fn gaussian(m: usize, n: usize, seed: u64) -> Result<Self> {
        check_dims(m, n)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok(Self {
            matrix: normalize_columns(gaussian_matrix(m, n, &mut rng))?,
            kind: DictionaryKind::Gaussian,
            seed: Some(seed),
        })
    }

    /// Columns `α_i (g_i + t_i 1)` with `t_i ~ U[0, t_max]`.
    ///
    /// The Gaussian part is drawn first, exactly as in [`Dictionary::gaussian`],
    /// so `t_max = 0` reproduces the Gaussian dictionary bit for bit.
    pub fn hybrid(m: usize, n: usize, t_max: f64, seed: u64) -> Result<Self> {
        check_dims(m, n)?;
        if !(t_max >= 0.0 && t_max.is_finite()) {
            return Err(invalid(format!("t_max must be finite and >= 0, got {t_max}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut a = gaussian_matrix(m, n, &mut rng);
        for mut c in a.column_iter_mut() {
            let t = t_max * rng.random::<f64>();
            c.add_scalar_mut(t);
        }
        Ok(Self {
            matrix: normalize_columns(a)?,
            kind: DictionaryKind::Hybrid { t_max },
            seed: Some(seed),
        })
    }

    /// Full convolution with a truncated Gaussian pulse, `(n + L - 1) × n`,
    /// keeping rows `0, d, 2d, ...`.
    pub fn convolutive(n: usize, sigma: f64, downsample: usize) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(invalid(format!("sigma must be positive, got {sigma}")));
        }
        if downsample == 0 {
            return Err(invalid("downsample factor must be >= 1"));
        }
        check_dims(1, n)?;
        let a = convolution_matrix(n, sigma, downsample);
        Ok(Self {
            matrix: normalize_columns(a)?,
            kind: DictionaryKind::Convolutive { sigma, downsample },
            seed: None,
        })
    }

    /// The 3×4 dictionary with two pairs of atoms at angles `θ1`, `θ2`.
    pub fn example1(theta1: f64, theta2: f64) -> Result<Self> {
        let half_pi = std::f64::consts::FRAC_PI_2;
        for t in [theta1, theta2] {
            if !(t > 0.0 && t < half_pi) {
                return Err(invalid(format!("angles must lie in (0, pi/2), got {t}")));
            }
        }
        let (s1, c1) = theta1.sin_cos();
        let (s2, c2) = theta2.sin_cos();
        #[rustfmt::skip]
        let matrix = Matrix::from_row_slice(3, 4, &[
            c1,  c1,  0.0, 0.0,
            -s1, s1,  c2,  c2,
            0.0, 0.0, s2,  -s2,
        ]);
        Ok(Self {
            matrix,
            kind: DictionaryKind::Example1 { theta1, theta2 },
            seed: None,
        })
    }

    /// Wraps a matrix whose columns are already unit norm.
    pub fn custom(matrix: Matrix) -> Result<Self> {
        check_dims(matrix.nrows(), matrix.ncols())?;
        if matrix.iter().any(|x| !x.is_finite()) {
            return Err(invalid("matrix has non-finite entries"));
        }
        for (column, c) in matrix.column_iter().enumerate() {
            let norm = c.norm();
            if (norm - 1.0).abs() > TAU_NUM {
                return Err(Error::NotNormalized { column, norm });
            }
        }
        Ok(Self {
            matrix,
            kind: DictionaryKind::Custom,
            seed: None,
        })
    }

    /// Normalizes the columns of an arbitrary finite matrix.
    pub fn from_unnormalized(matrix: Matrix) -> Result<Self> {
        if matrix.iter().any(|x| !x.is_finite()) {
            return Err(invalid("matrix has non-finite entries"));
        }
        check_dims(matrix.nrows(), matrix.ncols())?;
        Self::custom(normalize_columns(matrix)?)
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> Matrix {
        self.matrix
    }

    pub fn kind(&self) -> &DictionaryKind {
        &self.kind
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn rows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn cols(&self) -> usize {
        self.matrix.ncols()
    }

    /// Largest `|⟨a_i, a_j⟩|` over distinct atoms.
    pub fn coherence(&self) -> f64 {
        let g = self.matrix.transpose() * &self.matrix;
        let n = self.cols();
        let mut best: f64 = 0.0;
        for j in 0..n {
            for i in 0..j {
                best = best.max(g[(i, j)].abs());
            }
        }
        best
    }

    /// One row per line, entries separated by single spaces.
    pub fn to_text(&self) -> String {
        matrix_to_text(&self.matrix)
    }
}

pub fn matrix_to_text(a: &Matrix) -> String {
    let mut out = String::new();
    for row in a.row_iter() {
        let line = row.iter().map(|x| format!("{x:e}")).collect::<Vec<_>>().join(" ");
        writeln!(out, "{line}").unwrap();
    }
    out
}

/// Parses the format written by [`matrix_to_text`]. Blank lines and lines
/// starting with `#` are skipped.
pub fn matrix_from_text(text: &str) -> Result<Matrix> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = line
            .split_whitespace()
            .map(|tok| {
                tok.parse::<f64>()
                    .map_err(|e| invalid(format!("line {}: {tok:?}: {e}", lineno + 1)))
            })
            .collect::<Result<Vec<_>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(invalid(format!(
                    "line {}: expected {} entries, found {}",
                    lineno + 1,
                    first.len(),
                    row.len()
                )));
            }
        }
        rows.push(row);
    }
    let m = rows.len();
    let n = rows.first().map_or(0, Vec::len);
    check_dims(m, n)?;
    Ok(Matrix::from_fn(m, n, |i, j| rows[i][j]))
}
