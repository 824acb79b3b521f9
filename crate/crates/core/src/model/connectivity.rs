use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative tolerance for exact structural identities (zero row/column sums).
pub(crate) const STRUCTURAL_TOL: f64 = 1e-12;

/// Independent pass/fail flags for the three connectivity requirements.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConnectivityReport {
    pub metzler: bool,
    pub irreducible: bool,
    pub row_sum_zero: bool,
}

impl ConnectivityReport {
    pub fn is_valid(&self) -> bool {
        self.metzler && self.irreducible && self.row_sum_zero
    }

    /// Human-readable names of the failed properties.
    pub fn failures(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if !self.metzler {
            out.push("Metzler (negative off-diagonal entry)");
        }
        if !self.irreducible {
            out.push("irreducible (patch graph not strongly connected)");
        }
        if !self.row_sum_zero {
            out.push("row-sum-zero (D·1 != 0)");
        }
        out
    }
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// Reachability closure on the positive off-diagonal pattern.
fn strongly_connected(m: &DMatrix<f64>) -> bool {
    let n = m.nrows();
    let mut reach = vec![false; n * n];
    for i in 0..n {
        for j in 0..n {
            reach[i * n + j] = i == j || m[(i, j)] > 0.0;
        }
    }
    // Warshall
    for k in 0..n {
        for i in 0..n {
            if !reach[i * n + k] {
                continue;
            }
            for j in 0..n {
                if reach[k * n + j] {
                    reach[i * n + j] = true;
                }
            }
        }
    }
    reach.iter().all(|&r| r)
}

/// Checks the Metzler, irreducibility and zero-row-sum properties of `m`.
///
/// Panics if `m` is not square; non-finite entries fail every check.
pub fn validate_connectivity(m: &DMatrix<f64>) -> ConnectivityReport {
    assert!(m.is_square(), "connectivity matrix must be square");
    if m.iter().any(|v| !v.is_finite()) || m.nrows() == 0 {
        return ConnectivityReport {
            metzler: false,
            irreducible: false,
            row_sum_zero: false,
        };
    }
    let n = m.nrows();
    let metzler = (0..n).all(|i| (0..n).all(|j| i == j || m[(i, j)] >= 0.0));
    let tol = STRUCTURAL_TOL * max_abs(m);
    let row_sum_zero = m.row_iter().all(|row| row.sum().abs() <= tol);
    ConnectivityReport {
        metzler,
        irreducible: strongly_connected(m),
        row_sum_zero,
    }
}

/// A validated P×P patch connectivity matrix 𝓓.
#[derive(Debug, Clone, PartialEq)]
pub struct ConnectivityMatrix(DMatrix<f64>);

impl ConnectivityMatrix {
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        if !entries.is_square() || entries.nrows() == 0 {
            return Err(Error::InvalidConnectivity(format!(
                "matrix must be square and non-empty, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        let report = validate_connectivity(&entries);
        if !report.is_valid() {
            return Err(Error::InvalidConnectivity(report.failures().join("; ")));
        }
        Ok(Self(entries))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidConnectivity(
                "rows must all have length P".into(),
            ));
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    /// The 1×1 zero matrix of an isolated patch.
    pub fn isolated() -> Self {
        Self(DMatrix::zeros(1, 1))
    }

    /// Complete graph on `patches` nodes with unit rates.
    pub fn complete(patches: usize) -> Self {
        let n = patches as f64;
        Self(DMatrix::from_fn(patches, patches, |i, j| {
            if i == j {
                -(n - 1.0)
            } else {
                1.0
            }
        }))
    }

    pub fn patches(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn get(&self, p: usize, k: usize) -> f64 {
        self.0[(p, k)]
    }
}

/// Builds M = Σ_{i<j} x_ij M_ij, which preserves total volume (1ᵀM = 0) and
/// keeps the volumes fixed (M V = 0).
///
/// Only the strictly upper triangle of `weights` is read; any other non-zero
/// entry is rejected.
pub fn volume_matrix(volumes: &[f64], weights: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = volumes.len();
    if n == 0 {
        return Err(Error::InvalidInput("at least one volume required".into()));
    }
    if weights.shape() != (n, n) {
        return Err(Error::DimensionMismatch(format!(
            "weights are {}x{}, expected {n}x{n}",
            weights.nrows(),
            weights.ncols()
        )));
    }
    if let Some(v) = volumes.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
        return Err(Error::InvalidInput(format!("volumes must be > 0, got {v}")));
    }
    let mut any_positive = false;
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let x = weights[(i, j)];
            if !x.is_finite() {
                return Err(Error::InvalidInput("weights must be finite".into()));
            }
            if j <= i {
                if x != 0.0 {
                    return Err(Error::InvalidInput(format!(
                        "weight ({i},{j}) is outside the strict upper triangle"
                    )));
                }
                continue;
            }
            if x < 0.0 {
                return Err(Error::InvalidInput(format!("weight ({i},{j}) is negative")));
            }
            if x > 0.0 {
                any_positive = true;
            }
            m[(i, i)] -= x * volumes[j];
            m[(i, j)] += x * volumes[i];
            m[(j, i)] += x * volumes[j];
            m[(j, j)] -= x * volumes[i];
        }
    }
    if !any_positive && n > 1 {
        return Err(Error::InvalidInput("all pair weights are zero".into()));
    }
    Ok(m)
}

/// Conjugates a volume-preserving matrix by diag(V): D̂ = diag(V)⁻¹ M diag(V).
/// The result has zero row sums and governs densities.
pub fn renormalize_to_density(m: &DMatrix<f64>, volumes: &[f64]) -> Result<DMatrix<f64>> {
    let n = volumes.len();
    if m.shape() != (n, n) {
        return Err(Error::DimensionMismatch(format!(
            "matrix is {}x{}, volumes have length {n}",
            m.nrows(),
            m.ncols()
        )));
    }
    if volumes.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::InvalidInput("volumes must be > 0".into()));
    }
    let v = DVector::from_column_slice(volumes);
    let vmax = v.amax();
    let scale = max_abs(m) * vmax.max(1.0);
    let tol = 1e-10 * scale.max(f64::MIN_POSITIVE);
    let col_sums = m.row_sum();
    if col_sums.iter().any(|s| s.abs() > tol) {
        return Err(Error::InvalidInput(
            "matrix does not conserve total volume (1ᵀM != 0)".into(),
        ));
    }
    if (m * &v).iter().any(|s| s.abs() > tol) {
        return Err(Error::InvalidInput(
            "volumes are not stationary (M·V != 0)".into(),
        ));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| {
        m[(i, j)] * volumes[j] / volumes[i]
    }))
}
