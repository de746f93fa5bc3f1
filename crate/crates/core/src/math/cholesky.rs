//! Correlation matrices and their lower Cholesky factors.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Negative pivots smaller in magnitude than this are treated as zero.
pub const PIVOT_TOLERANCE: f64 = 1e-10;

const SYMMETRY_TOLERANCE: f64 = 1e-12;

/// A validated correlation matrix: symmetric, unit diagonal, entries in
/// `[-1, 1]`, positive semi-definite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct CorrelationMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl CorrelationMatrix {
    /// Validates a dense row-major matrix.
    pub fn new(n: usize, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != n * n {
            return Err(Error::domain(format!(
                "correlation matrix needs {} entries, got {}",
                n * n,
                entries.len()
            )));
        }
        for i in 0..n {
            if entries[i * n + i] != 1.0 {
                return Err(Error::domain(format!("diagonal entry {i} is not 1")));
            }
            for j in 0..n {
                let v = entries[i * n + j];
                if !(-1.0..=1.0).contains(&v) {
                    return Err(Error::domain(format!("entry ({i}, {j}) = {v} is outside [-1, 1]")));
                }
                if (v - entries[j * n + i]).abs() > SYMMETRY_TOLERANCE {
                    return Err(Error::domain(format!("entry ({i}, {j}) breaks symmetry")));
                }
            }
        }
        let matrix = Self { n, entries };
        cholesky_lower(&matrix)?;
        Ok(matrix)
    }

    /// `(1 − ρ)I + ρJ`. Valid for `ρ ∈ [−1/(n−1), 1]`.
    pub fn uniform(n: usize, rho: f64) -> Result<Self> {
        let mut entries = vec![rho; n * n];
        for i in 0..n {
            entries[i * n + i] = 1.0;
        }
        Self::new(n, entries)
    }

    pub fn identity(n: usize) -> Self {
        let mut entries = vec![0.0; n * n];
        for i in 0..n {
            entries[i * n + i] = 1.0;
        }
        Self { n, entries }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    /// Principal submatrix on `indices` (in the given order).
    pub fn principal(&self, indices: &[usize]) -> Self {
        let m = indices.len();
        let mut entries = Vec::with_capacity(m * m);
        for &i in indices {
            for &j in indices {
                entries.push(self.get(i, j));
            }
        }
        Self { n: m, entries }
    }

    /// Common off-diagonal value if the matrix is equicorrelated.
    pub fn uniform_value(&self) -> Option<f64> {
        if self.n < 2 {
            return Some(0.0);
        }
        let rho = self.get(0, 1);
        (0..self.n)
            .all(|i| (0..self.n).all(|j| i == j || self.get(i, j) == rho))
            .then_some(rho)
    }
}

impl TryFrom<Vec<Vec<f64>>> for CorrelationMatrix {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::domain("correlation matrix is not square"));
        }
        Self::new(n, rows.into_iter().flatten().collect())
    }
}

impl From<CorrelationMatrix> for Vec<Vec<f64>> {
    fn from(m: CorrelationMatrix) -> Self {
        m.entries.chunks(m.n.max(1)).map(<[f64]>::to_vec).collect()
    }
}

/// Dense lower-triangular factor stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct LowerTriangular {
    n: usize,
    entries: Vec<f64>,
}

impl LowerTriangular {
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    /// `out = L z`.
    pub fn mul_vec(&self, z: &[f64], out: &mut [f64]) {
        for i in 0..self.n {
            let row = &self.entries[i * self.n..i * self.n + i + 1];
            out[i] = row.iter().zip(z).map(|(l, z)| l * z).sum();
        }
    }

    /// `L Lᵀ` as a dense row-major matrix.
    pub fn gram(&self) -> Vec<f64> {
        let n = self.n;
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                out[i * n + j] = (0..=i.min(j)).map(|k| self.get(i, k) * self.get(j, k)).sum();
            }
        }
        out
    }
}

/// Lower Cholesky factor `L` with `L Lᵀ = corr` and nonnegative diagonal.
///
/// Semi-definite matrices are accepted: a pivot in `[-1e-10, 0]` becomes a
/// zero column, provided the entries below it are consistent with that.
pub fn cholesky_lower(corr: &CorrelationMatrix) -> Result<LowerTriangular> {
    let n = corr.n;
    let mut l = vec![0.0; n * n];
    for j in 0..n {
        let pivot = corr.get(j, j) - (0..j).map(|k| l[j * n + k] * l[j * n + k]).sum::<f64>();
        if pivot < -PIVOT_TOLERANCE {
            return Err(Error::NotPositiveSemiDefinite { index: j, pivot });
        }
        let diag = pivot.max(0.0).sqrt();
        l[j * n + j] = diag;
        for i in j + 1..n {
            let residual =
                corr.get(i, j) - (0..j).map(|k| l[i * n + k] * l[j * n + k]).sum::<f64>();
            if diag > 0.0 {
                l[i * n + j] = residual / diag;
            } else if residual.abs() > PIVOT_TOLERANCE.sqrt() {
                return Err(Error::NotPositiveSemiDefinite { index: j, pivot });
            }
        }
    }
    Ok(LowerTriangular { n, entries: l })
}

/// Closed-form Cholesky factor of the equicorrelation matrix `(1 − ρ)I + ρJ`.
///
/// Every row below the diagonal of column `j` holds the same value `c_j`, and
/// the factor of any `m × m` leading block is the leading block of the full
/// factor. Multiplication therefore costs O(n) and the factor of an
/// alive-set of size `m` is just a prefix.
#[derive(Debug, Clone, PartialEq)]
pub struct EquicorrelationFactor {
    rho: f64,
    below: Vec<f64>,
    diag: Vec<f64>,
}

impl EquicorrelationFactor {
    pub fn new(n: usize, rho: f64) -> Self {
        let mut below = Vec::with_capacity(n);
        let mut diag = Vec::with_capacity(n);
        let mut sum_sq = 0.0_f64;
        for _ in 0..n {
            let d = (1.0 - sum_sq).max(0.0).sqrt();
            let c = if d > 1e-300 { (rho - sum_sq) / d } else { 0.0 };
            diag.push(d);
            below.push(c);
            sum_sq += c * c;
        }
        Self { rho, below, diag }
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    /// `out[l] = Σ_{q<l} c_q z[q] + d_l z[l]` for the first `z.len()` rows.
    #[inline]
    pub fn mul_prefix(&self, z: &[f64], out: &mut [f64]) {
        let mut acc = 0.0;
        for (l, &zl) in z.iter().enumerate() {
            out[l] = acc + self.diag[l] * zl;
            acc += self.below[l] * zl;
        }
    }

    pub fn to_dense(&self) -> LowerTriangular {
        let n = self.dim();
        let mut entries = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..i {
                entries[i * n + j] = self.below[j];
            }
            entries[i * n + i] = self.diag[i];
        }
        LowerTriangular { n, entries }
    }
}
