//! Dense two-phase primal simplex with Bland's rule.
//!
//! Solves `maximize cᵀx` subject to rows `aᵀx {≤,≥,=} b` and `x ≥ 0`.
//! Bland's rule (lowest eligible index enters and leaves) rules out cycling,
//! and the fixed pivot order makes results reproducible.

const EPS: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Debug, PartialEq)]
pub enum LpResult {
    Optimal { x: Vec<f64>, value: f64 },
    Infeasible,
    Unbounded,
}

struct Tableau {
    /// rows × (cols + 1); the last column is the right-hand side
    t: Vec<Vec<f64>>,
    basis: Vec<usize>,
    cols: usize,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize, obj: &mut [f64]) {
        let piv = self.t[r][c];
        for v in self.t[r].iter_mut() {
            *v /= piv;
        }
        let prow = self.t[r].clone();
        for (i, row) in self.t.iter_mut().enumerate() {
            if i != r && row[c] != 0.0 {
                let f = row[c];
                for (x, p) in row.iter_mut().zip(&prow) {
                    *x -= f * p;
                }
            }
        }
        if obj[c] != 0.0 {
            let f = obj[c];
            for (x, p) in obj.iter_mut().zip(&prow) {
                *x -= f * p;
            }
        }
        self.basis[r] = c;
    }

    /// Minimizes the reduced-cost row `obj` (last entry = −objective value)
    /// over columns allowed by `eligible`.
    fn run(&mut self, obj: &mut [f64], eligible: &dyn Fn(usize) -> bool) -> bool {
        loop {
            let Some(c) = (0..self.cols).find(|&j| eligible(j) && obj[j] < -EPS) else { return true };
            let mut best: Option<(f64, usize, usize)> = None;
            for (i, row) in self.t.iter().enumerate() {
                if row[c] > EPS {
                    let ratio = row[self.cols] / row[c];
                    let better = match best {
                        None => true,
                        Some((br, _, bb)) => ratio < br - EPS || (ratio <= br + EPS && self.basis[i] < bb),
                    };
                    if better {
                        best = Some((ratio, i, self.basis[i]));
                    }
                }
            }
            match best {
                Some((_, r, _)) => self.pivot(r, c, obj),
                None => return false,
            }
        }
    }
}

pub fn solve(c: &[f64], rows: &[(Vec<f64>, Sense, f64)]) -> LpResult {
    let n = c.len();
    let m = rows.len();
    // normalize to nonnegative right-hand sides
    let rows: Vec<(Vec<f64>, Sense, f64)> = rows
        .iter()
        .map(|(a, s, b)| {
            if *b < 0.0 {
                let flipped = match s {
                    Sense::Le => Sense::Ge,
                    Sense::Ge => Sense::Le,
                    Sense::Eq => Sense::Eq,
                };
                (a.iter().map(|x| -x).collect(), flipped, -b)
            } else {
                (a.clone(), *s, *b)
            }
        })
        .collect();
    let n_slack = rows.iter().filter(|r| r.1 != Sense::Eq).count();
    let n_art = rows.iter().filter(|r| r.1 != Sense::Le).count();
    let cols = n + n_slack + n_art;
    let art_start = n + n_slack;
    let mut t = vec![vec![0.0; cols + 1]; m];
    let mut basis = vec![0; m];
    let (mut si, mut ai) = (n, art_start);
    for (i, (a, s, b)) in rows.iter().enumerate() {
        t[i][..n].copy_from_slice(&a[..n]);
        t[i][cols] = *b;
        match s {
            Sense::Le => {
                t[i][si] = 1.0;
                basis[i] = si;
                si += 1;
            }
            Sense::Ge => {
                t[i][si] = -1.0;
                si += 1;
                t[i][ai] = 1.0;
                basis[i] = ai;
                ai += 1;
            }
            Sense::Eq => {
                t[i][ai] = 1.0;
                basis[i] = ai;
                ai += 1;
            }
        }
    }
    let mut tab = Tableau { t, basis, cols };

    // phase 1: minimize the sum of artificials
    let mut obj = vec![0.0; cols + 1];
    for j in art_start..cols {
        obj[j] = 1.0;
    }
    for i in 0..m {
        if tab.basis[i] >= art_start {
            for (o, x) in obj.iter_mut().zip(&tab.t[i]) {
                *o -= x;
            }
        }
    }
    tab.run(&mut obj, &|_| true);
    if -obj[cols] > 1e-7 {
        return LpResult::Infeasible;
    }
    // drive remaining artificials out of the basis; drop redundant rows
    let mut i = 0;
    while i < tab.t.len() {
        if tab.basis[i] >= art_start {
            match (0..art_start).find(|&j| tab.t[i][j].abs() > EPS) {
                Some(j) => {
                    let mut dummy = vec![0.0; cols + 1];
                    tab.pivot(i, j, &mut dummy);
                }
                None => {
                    tab.t.remove(i);
                    tab.basis.remove(i);
                    continue;
                }
            }
        }
        i += 1;
    }

    // phase 2: minimize −cᵀx
    let mut obj = vec![0.0; cols + 1];
    for j in 0..n {
        obj[j] = -c[j];
    }
    for i in 0..tab.t.len() {
        let b = tab.basis[i];
        if obj[b] != 0.0 {
            let f = obj[b];
            for (o, x) in obj.iter_mut().zip(&tab.t[i]) {
                *o -= f * x;
            }
        }
    }
    if !tab.run(&mut obj, &|j| j < art_start) {
        return LpResult::Unbounded;
    }
    let mut x = vec![0.0; n];
    for (i, &b) in tab.basis.iter().enumerate() {
        if b < n {
            x[b] = tab.t[i][cols];
        }
    }
    let value = c.iter().zip(&x).map(|(a, b)| a * b).sum();
    LpResult::Optimal { x, value }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opt(r: LpResult) -> (Vec<f64>, f64) {
        match r {
            LpResult::Optimal { x, value } => (x, value),
            other => panic!("expected optimum, got {other:?}"),
        }
    }

    #[test]
    fn textbook() {
        // max 3x + 5y, x ≤ 4, 2y ≤ 12, 3x + 2y ≤ 18 → (2, 6), 36
        let (x, v) = opt(solve(
            &[3.0, 5.0],
            &[
                (vec![1.0, 0.0], Sense::Le, 4.0),
                (vec![0.0, 2.0], Sense::Le, 12.0),
                (vec![3.0, 2.0], Sense::Le, 18.0),
            ],
        ));
        assert!((v - 36.0).abs() < 1e-9);
        assert!((x[0] - 2.0).abs() < 1e-9 && (x[1] - 6.0).abs() < 1e-9);
    }

    #[test]
    fn phase_one_constraints() {
        // max −x − y with x + y ≥ 2, x − y = 0 → (1, 1)
        let (x, v) = opt(solve(&[-1.0, -1.0], &[(vec![1.0, 1.0], Sense::Ge, 2.0), (vec![1.0, -1.0], Sense::Eq, 0.0)]));
        assert!((v + 2.0).abs() < 1e-9 && (x[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn infeasible_and_unbounded() {
        assert_eq!(solve(&[1.0], &[(vec![1.0], Sense::Le, 1.0), (vec![1.0], Sense::Ge, 2.0)]), LpResult::Infeasible);
        assert_eq!(solve(&[1.0], &[(vec![1.0], Sense::Ge, 1.0)]), LpResult::Unbounded);
    }

    #[test]
    fn degenerate_redundant_equalities() {
        let (x, _) = opt(solve(&[1.0], &[(vec![1.0], Sense::Eq, 1.0), (vec![2.0], Sense::Eq, 2.0)]));
        assert!((x[0] - 1.0).abs() < 1e-9);
    }
}
