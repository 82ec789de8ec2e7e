//! Derivative-free counterexample search: Halton-seeded multi-start
//! Nelder–Mead over a box.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::hp::eval::{eval_term, Environment};
use crate::hp::{State, Term};
use crate::icp::{lie_derivative, IntervalBox};

use super::BarrierCertificate;

pub const DEFAULT_STARTS: usize = 64;
const PRIMES: [u32; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

/// Radical inverse of `i` in base `PRIMES[dim]`.
pub fn halton(i: usize, dim: usize) -> f64 {
    let b = PRIMES[dim % PRIMES.len()] as usize;
    let (mut f, mut r, mut i) = (1.0, 0.0, i);
    while i > 0 {
        f /= b as f64;
        r += f * (i % b) as f64;
        i /= b;
    }
    r
}

fn clamp(x: &mut [f64], b: &IntervalBox) {
    for (v, iv) in x.iter_mut().zip(&b.ivs) {
        *v = v.clamp(iv.lo, iv.hi);
    }
}

/// Nelder–Mead from `x0` with an initial simplex of `step` per axis, points
/// clamped to the box.
pub fn nelder_mead(f: &dyn Fn(&[f64]) -> f64, x0: &[f64], step: &[f64], b: &IntervalBox, iters: usize) -> (Vec<f64>, f64) {
    let n = x0.len();
    let eval = |x: &[f64]| {
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), eval(x0)));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += if x[i] + step[i] <= b.ivs[i].hi { step[i] } else { -step[i] };
        clamp(&mut x, b);
        let v = eval(&x);
        simplex.push((x, v));
    }
    let point = |c: &[f64], d: &[f64], k: f64| {
        let mut x: Vec<f64> = c.iter().zip(d).map(|(ci, di)| ci + k * (di - ci)).collect();
        clamp(&mut x, b);
        x
    };
    for _ in 0..iters {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let spread = simplex[n].1 - simplex[0].1;
        if spread.abs() < 1e-14 && simplex[n].1.is_finite() {
            break;
        }
        let centroid: Vec<f64> = (0..n).map(|j| simplex[..n].iter().map(|p| p.0[j]).sum::<f64>() / n as f64).collect();
        let worst = simplex[n].0.clone();
        let xr = point(&centroid, &worst, -1.0);
        let fr = eval(&xr);
        if fr < simplex[0].1 {
            let xe = point(&centroid, &worst, -2.0);
            let fe = eval(&xe);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
        } else {
            let xc = point(&centroid, &worst, 0.5);
            let fc = eval(&xc);
            if fc < simplex[n].1 {
                simplex[n] = (xc, fc);
            } else {
                let best = simplex[0].0.clone();
                for p in simplex.iter_mut().skip(1) {
                    p.0 = point(&best, &p.0, 0.5);
                    p.1 = eval(&p.0);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    simplex.swap_remove(0)
}

/// Best local minimum of `cost` over `starts` Halton points (randomly shifted
/// by `seed`); ties resolve to the lowest start index.
pub fn multistart(cost: &dyn Fn(&State) -> f64, domain: &IntervalBox, seed: u64, starts: usize) -> Option<(State, f64)> {
    let n = domain.vars.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
    let to_state = |x: &[f64]| -> State { domain.vars.iter().cloned().zip(x.iter().copied()).collect() };
    let f = |x: &[f64]| cost(&to_state(x));
    let step: Vec<f64> = domain.ivs.iter().map(|iv| 0.05 * iv.width().max(1e-9)).collect();
    let mut best: Option<(Vec<f64>, f64)> = None;
    for s in 0..starts {
        let x0: Vec<f64> =
            (0..n).map(|d| domain.ivs[d].lo + ((halton(s + 1, d) + shift[d]) % 1.0) * domain.ivs[d].width()).collect();
        let (x, v) = nelder_mead(&f, &x0, &step, domain, 200 * n.max(1));
        if best.as_ref().is_none_or(|b| v < b.1) {
            best = Some((x, v));
        }
    }
    best.map(|(x, v)| (to_state(&x), v))
}

/// A point of the domain where `V̇ > 0`, if the optimizer finds one.
pub fn counterexample_search(v: &BarrierCertificate, field: &[(String, Term)], domain: &IntervalBox, seed: u64) -> Option<State> {
    let vdot = lie_derivative(&v.term(), field);
    let env = Environment::new();
    let cost = |s: &State| eval_term(s, &env, &vdot).map(|d| -d).unwrap_or(f64::INFINITY);
    let (x, c) = multistart(&cost, domain, seed, DEFAULT_STARTS)?;
    (c < -1e-10).then_some(x)
}
