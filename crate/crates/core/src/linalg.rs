//! Small dense linear-algebra helpers over `nalgebra`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub type Mat = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Pivot ratio below which an LU factorisation is treated as singular.
const PIVOT_RATIO_FLOOR: f64 = 1e-13;

pub fn from_rows(rows: &[Vec<f64>]) -> Mat {
    let n = rows.len();
    let m = rows.first().map_or(0, |r| r.len());
    Mat::from_fn(n, m, |i, j| rows[i][j])
}

pub fn to_rows(m: &Mat) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

pub fn diag(v: &[f64]) -> Mat {
    Mat::from_diagonal(&Vector::from_column_slice(v))
}

pub fn vector(v: &[f64]) -> Vector {
    Vector::from_column_slice(v)
}

/// Solve `a x = b` by LU with partial pivoting.
pub fn solve(a: &Mat, b: &Vector, what: &str) -> Result<Vector> {
    let lu = a.clone().lu();
    let u = lu.u();
    let diag: Vec<f64> = (0..u.nrows()).map(|i| u[(i, i)].abs()).collect();
    let max = diag.iter().cloned().fold(0.0, f64::max);
    let min = diag.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(max > 0.0) || min / max < PIVOT_RATIO_FLOOR {
        return Err(Error::SingularSolve(format!(
            "{what}: pivot ratio {:.3e}",
            if max > 0.0 { min / max } else { 0.0 }
        )));
    }
    lu.solve(b)
        .filter(|x| x.iter().all(|v| v.is_finite()))
        .ok_or_else(|| Error::SingularSolve(what.to_string()))
}

/// Solve `a X = b` for a matrix right-hand side.
pub fn solve_mat(a: &Mat, b: &Mat, what: &str) -> Result<Mat> {
    let mut out = Mat::zeros(b.nrows(), b.ncols());
    for j in 0..b.ncols() {
        let col = solve(a, &b.column(j).into_owned(), what)?;
        out.set_column(j, &col);
    }
    Ok(out)
}

/// Solve the row-vector system `x a = b`.
pub fn solve_left(a: &Mat, b: &Vector, what: &str) -> Result<Vector> {
    solve(&a.transpose(), b, what)
}

/// Row vector times matrix, returned as a column vector.
pub fn row_times(x: &Vector, m: &Mat) -> Vector {
    m.tr_mul(x)
}

pub fn max_abs(v: &Vector) -> f64 {
    v.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

/// Spectral radius via the complex eigenvalues of a square matrix.
pub fn spectral_radius(m: &Mat) -> f64 {
    m.complex_eigenvalues()
        .iter()
        .fold(0.0, |acc, z| acc.max(z.norm()))
}
