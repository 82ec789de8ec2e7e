use crate::linalg::{mat_mul, max_abs_diff, solve, transpose, Matrix};

use super::{CertError, QuadraticCertificate};

const RESIDUAL_TOL: f64 = 1e-9;

/// Solves `AᵀP + PA = −Q` for symmetric `P` by vectorizing over the
/// `n(n+1)/2` upper-triangular unknowns.
pub fn solve_lyapunov_linear(vars: &[String], a: &Matrix, q: &Matrix) -> Result<QuadraticCertificate, CertError> {
    let n = a.len();
    if vars.len() != n || a.iter().chain(q.iter()).any(|r| r.len() != n) || q.len() != n {
        return Err(CertError::Dimension(format!("A and Q must be {n}x{n} over {} variables", vars.len())));
    }
    let idx = |i: usize, j: usize| {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        i * n - i * (i + 1) / 2 + j
    };
    let m = n * (n + 1) / 2;
    let mut sys = vec![vec![0.0; m]; m];
    let mut rhs = vec![0.0; m];
    for i in 0..n {
        for j in i..n {
            let row = idx(i, j);
            // (AᵀP)ᵢⱼ = Σₖ Aₖᵢ Pₖⱼ and (PA)ᵢⱼ = Σₖ Pᵢₖ Aₖⱼ
            for k in 0..n {
                sys[row][idx(k, j)] += a[k][i];
                sys[row][idx(i, k)] += a[k][j];
            }
            rhs[row] = -q[i][j];
        }
    }
    let sol = solve(&sys, &rhs).ok_or_else(|| CertError::NoQuadratic("Lyapunov system is singular".into()))?;
    let p: Matrix = (0..n).map(|i| (0..n).map(|j| sol[idx(i, j)]).collect()).collect();

    let (atp, pa) = (mat_mul(&transpose(a), &p), mat_mul(&p, a));
    let lhs: Matrix = (0..n).map(|i| (0..n).map(|j| atp[i][j] + pa[i][j]).collect()).collect();
    let neg_q: Matrix = q.iter().map(|r| r.iter().map(|x| -x).collect()).collect();
    let residual = max_abs_diff(&lhs, &neg_q);
    if !(residual <= RESIDUAL_TOL) {
        return Err(CertError::NoQuadratic(format!("residual {residual:e} exceeds tolerance")));
    }
    QuadraticCertificate::new(vars.to_vec(), p).map_err(|_| CertError::NoQuadratic("A is not Hurwitz: P is not positive definite".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::identity;

    fn xy() -> Vec<String> {
        vec!["x1".into(), "x2".into()]
    }

    #[test]
    fn negative_identity() {
        let a = vec![vec![-1.0, 0.0], vec![0.0, -1.0]];
        let c = solve_lyapunov_linear(&xy(), &a, &identity(2)).unwrap();
        assert!(max_abs_diff(&c.p, &vec![vec![0.5, 0.0], vec![0.0, 0.5]]) < 1e-12);
    }

    #[test]
    fn unstable_rejected() {
        let a = vec![vec![1.0, 0.0], vec![0.0, -1.0]];
        assert!(matches!(solve_lyapunov_linear(&xy(), &a, &identity(2)), Err(CertError::NoQuadratic(_))));
        let singular = vec![vec![0.0, 0.0], vec![0.0, -1.0]];
        assert!(solve_lyapunov_linear(&xy(), &singular, &identity(2)).is_err());
    }
}
