//! Small dense linear algebra on row-major `Vec<Vec<f64>>` matrices.

pub type Matrix = Vec<Vec<f64>>;

pub fn zeros(n: usize, m: usize) -> Matrix {
    vec![vec![0.0; m]; n]
}

pub fn identity(n: usize) -> Matrix {
    let mut a = zeros(n, n);
    for (i, row) in a.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    a
}

pub fn transpose(a: &Matrix) -> Matrix {
    let (n, m) = (a.len(), a.first().map_or(0, Vec::len));
    let mut t = zeros(m, n);
    for i in 0..n {
        for j in 0..m {
            t[j][i] = a[i][j];
        }
    }
    t
}

pub fn mat_mul(a: &Matrix, b: &Matrix) -> Matrix {
    let (n, k, m) = (a.len(), b.len(), b.first().map_or(0, Vec::len));
    let mut c = zeros(n, m);
    for i in 0..n {
        for l in 0..k {
            let x = a[i][l];
            if x == 0.0 {
                continue;
            }
            for j in 0..m {
                c[i][j] += x * b[l][j];
            }
        }
    }
    c
}

pub fn mat_vec(a: &Matrix, x: &[f64]) -> Vec<f64> {
    a.iter().map(|row| row.iter().zip(x).map(|(r, v)| r * v).sum()).collect()
}

pub fn max_abs_diff(a: &Matrix, b: &Matrix) -> f64 {
    a.iter()
        .zip(b)
        .flat_map(|(r, s)| r.iter().zip(s).map(|(x, y)| (x - y).abs()))
        .fold(0.0, f64::max)
}

/// Lower-triangular Cholesky factor, or `None` if the matrix is not
/// numerically positive definite.
pub fn cholesky(a: &Matrix) -> Option<Matrix> {
    let n = a.len();
    let mut l = zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            if i == j {
                let d = a[i][i] - s;
                if d.is_nan() || d <= 0.0 {
                    return None;
                }
                l[i][i] = d.sqrt();
            } else {
                l[i][j] = (a[i][j] - s) / l[j][j];
            }
        }
    }
    Some(l)
}

/// Solves `A x = b` by Gaussian elimination with partial pivoting.
/// Returns `None` when a pivot falls below `tol` relative to the matrix scale.
pub fn solve(a: &Matrix, b: &[f64]) -> Option<Vec<f64>> {
    let n = a.len();
    let scale = a.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs())).max(f64::MIN_POSITIVE);
    let tol = 1e-13 * scale;
    let mut m: Matrix = a.iter().zip(b).map(|(row, bi)| row.iter().copied().chain([*bi]).collect()).collect();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[piv][col].abs() <= tol {
            return None;
        }
        m.swap(col, piv);
        for r in col + 1..n {
            let f = m[r][col] / m[col][col];
            if f != 0.0 {
                for c in col..=n {
                    m[r][c] -= f * m[col][c];
                }
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| m[i][j] * x[j]).sum();
        x[i] = (m[i][n] - s) / m[i][i];
    }
    Some(x)
}

pub fn determinant(a: &Matrix) -> f64 {
    let n = a.len();
    let mut m = a.clone();
    let mut det = 1.0;
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs())).unwrap();
        if m[piv][col] == 0.0 {
            return 0.0;
        }
        if piv != col {
            m.swap(col, piv);
            det = -det;
        }
        det *= m[col][col];
        for r in col + 1..n {
            let f = m[r][col] / m[col][col];
            for c in col..n {
                m[r][c] -= f * m[col][c];
            }
        }
    }
    det
}

pub fn inverse(a: &Matrix) -> Option<Matrix> {
    let n = a.len();
    let cols: Option<Vec<Vec<f64>>> = (0..n)
        .map(|j| {
            let e: Vec<f64> = (0..n).map(|i| if i == j { 1.0 } else { 0.0 }).collect();
            solve(a, &e)
        })
        .collect();
    Some(transpose(&cols?))
}

/// Largest `m` (from a halving ladder) such that `A - m I` passes Cholesky;
/// a certified lower bound on the smallest eigenvalue up to rounding.
pub fn definite_margin(a: &Matrix) -> Option<f64> {
    let n = a.len();
    cholesky(a)?;
    let scale = a.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs()));
    let mut m = scale;
    // stop near 1e-9 relative: semidefinite forms are not certified
    for _ in 0..30 {
        let shifted: Matrix = (0..n)
            .map(|i| (0..n).map(|j| a[i][j] - if i == j { m } else { 0.0 }).collect())
            .collect();
        if cholesky(&shifted).is_some() {
            // back off by half for a rounding cushion
            return Some(m / 2.0);
        }
        m /= 2.0;
    }
    None
}
