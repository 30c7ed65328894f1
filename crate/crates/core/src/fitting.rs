//! Least-squares and exact-interpolation solvers for basis coefficients.

use nalgebra::{DMatrix, DVector};

use crate::error::{Result, SegError};

/// Condition-number estimate above which a square sample system is treated
/// as singular.
pub const MAX_CONDITION: f64 = 1e12;

/// Relative size of the smallest `R` diagonal entry (against the largest)
/// below which a least-squares design is rank deficient.
pub const RANK_TOL: f64 = 1e-10;

/// Relative residual norm below which a column is considered dependent on
/// the columns already selected by [`independent_columns`].
const SELECT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub coeffs: Vec<f64>,
    /// `|f - Pα|` per pixel.
    pub residuals: Vec<f64>,
}

impl FitResult {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }
}

/// Minimizes `‖f − Pα‖₂` through a thin Householder QR of the design.
pub fn fit_least_squares(pixels: &[f64], design: &DMatrix<f64>) -> Result<FitResult> {
    let (m, k) = design.shape();
    if pixels.len() != m {
        return Err(SegError::mismatch(format!("{m} pixels"), pixels.len()));
    }
    if m < k || k == 0 {
        return Err(SegError::RankDeficient);
    }
    let qr = design.clone().qr();
    let r = qr.r();
    let diag_max = r.diagonal().amax();
    let diag_min = r.diagonal().iter().fold(f64::INFINITY, |a, v| a.min(v.abs()));
    if !(diag_max > 0.0) || diag_min < RANK_TOL * diag_max {
        return Err(SegError::RankDeficient);
    }
    let f = DVector::from_column_slice(pixels);
    let mut rhs = f.clone();
    qr.q_tr_mul(&mut rhs);
    let rhs = rhs.rows(0, k).into_owned();
    let alpha = r
        .solve_upper_triangular(&rhs)
        .ok_or(SegError::RankDeficient)?;
    let coeffs: Vec<f64> = alpha.iter().copied().collect();
    let residuals = abs_residuals(pixels, design, &coeffs);
    Ok(FitResult { coeffs, residuals })
}

/// Solves the square system `rows · α = pixels` exactly.
///
/// Fails with [`SegError::SingularSample`] when the 1-norm condition
/// estimate exceeds [`MAX_CONDITION`].
pub fn solve_exact(sample_pixels: &[f64], sample_rows: &DMatrix<f64>) -> Result<Vec<f64>> {
    let (m, k) = sample_rows.shape();
    if m != k {
        return Err(SegError::mismatch(format!("{k}x{k} system"), format!("{m}x{k}")));
    }
    if sample_pixels.len() != k {
        return Err(SegError::mismatch(format!("{k} samples"), sample_pixels.len()));
    }
    let lu = sample_rows.clone().lu();
    let inverse = lu.try_inverse().ok_or(SegError::SingularSample {
        condition: f64::INFINITY,
    })?;
    let condition = one_norm(sample_rows) * one_norm(&inverse);
    if !condition.is_finite() || condition > MAX_CONDITION {
        return Err(SegError::SingularSample { condition });
    }
    let b = DVector::from_column_slice(sample_pixels);
    let alpha = lu
        .solve(&b)
        .ok_or(SegError::SingularSample { condition })?;
    Ok(alpha.iter().copied().collect())
}

fn one_norm(a: &DMatrix<f64>) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `P·α`.
pub fn predict(coeffs: &[f64], design: &DMatrix<f64>) -> Vec<f64> {
    assert_eq!(coeffs.len(), design.ncols(), "coefficient count must match design");
    let mut out = vec![0.0; design.nrows()];
    for (col, &a) in design.column_iter().zip(coeffs) {
        if a == 0.0 {
            continue;
        }
        for (o, &p) in out.iter_mut().zip(col.iter()) {
            *o += a * p;
        }
    }
    out
}

pub fn abs_residuals(pixels: &[f64], design: &DMatrix<f64>, coeffs: &[f64]) -> Vec<f64> {
    let mut r = predict(coeffs, design);
    for (r, &f) in r.iter_mut().zip(pixels) {
        *r = (f - *r).abs();
    }
    r
}

/// Greedy selection, in column order, of a maximal set of linearly
/// independent columns.
///
/// Edge blocks restrict the basis to a strip where some frequencies alias;
/// this keeps the lowest-order representative of each dependent group.
pub fn independent_columns(design: &DMatrix<f64>) -> Vec<usize> {
    let mut kept: Vec<DVector<f64>> = Vec::new();
    let mut idx = Vec::new();
    for (j, col) in design.column_iter().enumerate() {
        let norm = col.norm();
        if norm == 0.0 {
            continue;
        }
        let mut v = col.into_owned();
        for _ in 0..2 {
            for q in &kept {
                let d = q.dot(&v);
                v.axpy(-d, q, 1.0);
            }
        }
        let rn = v.norm();
        if rn > SELECT_TOL * norm {
            kept.push(v / rn);
            idx.push(j);
        }
        if kept.len() == design.nrows() {
            break;
        }
    }
    idx
}

/// Copies the listed columns of `design` into a new matrix.
pub fn select_columns(design: &DMatrix<f64>, cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(design.nrows(), cols.len(), |r, c| design[(r, cols[c])])
}

/// Copies the listed rows of `design` into a new matrix.
pub fn select_rows(design: &DMatrix<f64>, rows: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), design.ncols(), |r, c| design[(rows[r], c)])
}

/// Scatters coefficients of a column subset back into a full-width vector,
/// zero for unselected columns.
pub fn expand_coeffs(sub: &[f64], cols: &[usize], width: usize) -> Vec<f64> {
    let mut full = vec![0.0; width];
    for (&c, &a) in cols.iter().zip(sub) {
        full[c] = a;
    }
    full
}
