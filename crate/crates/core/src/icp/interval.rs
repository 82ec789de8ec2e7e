//! Closed real intervals with outward rounding by a fixed relative slack.
//!
//! Every IEEE operation is correctly rounded, so widening each computed bound
//! by `1e-12 * |bound|` covers the rounding error; exact zeros stay exact.

use std::fmt;

use serde::{Deserialize, Serialize};

pub const SLACK: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

fn down(x: f64) -> f64 {
    if x.is_finite() {
        x - SLACK * x.abs()
    } else {
        x
    }
}

fn up(x: f64) -> f64 {
    if x.is_finite() {
        x + SLACK * x.abs()
    } else {
        x
    }
}

/// Product treating `0 * inf` as 0, as interval multiplication requires.
fn mul0(a: f64, b: f64) -> f64 {
    if a == 0.0 || b == 0.0 {
        0.0
    } else {
        a * b
    }
}

impl Interval {
    pub const ENTIRE: Interval = Interval { lo: f64::NEG_INFINITY, hi: f64::INFINITY };

    pub fn new(lo: f64, hi: f64) -> Interval {
        debug_assert!(lo <= hi || lo.is_nan() || hi.is_nan(), "empty interval [{lo}, {hi}]");
        Interval { lo, hi }
    }

    pub fn point(x: f64) -> Interval {
        Interval { lo: x, hi: x }
    }

    fn rounded(lo: f64, hi: f64) -> Interval {
        if lo.is_nan() || hi.is_nan() {
            return Interval::ENTIRE;
        }
        Interval { lo: down(lo), hi: up(hi) }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn mid(&self) -> f64 {
        if self.lo.is_finite() && self.hi.is_finite() {
            0.5 * self.lo + 0.5 * self.hi
        } else if self.lo.is_finite() {
            self.lo
        } else if self.hi.is_finite() {
            self.hi
        } else {
            0.0
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn is_finite(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    /// Intersection, `None` when disjoint.
    pub fn meet(&self, other: &Interval) -> Option<Interval> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (lo <= hi).then_some(Interval { lo, hi })
    }

    pub fn hull(&self, other: &Interval) -> Interval {
        Interval { lo: self.lo.min(other.lo), hi: self.hi.max(other.hi) }
    }

    pub fn mag(&self) -> f64 {
        self.lo.abs().max(self.hi.abs())
    }

    /// Smallest absolute value over the interval.
    pub fn mig(&self) -> f64 {
        if self.contains(0.0) {
            0.0
        } else {
            self.lo.abs().min(self.hi.abs())
        }
    }

    pub fn neg(self) -> Interval {
        Interval { lo: -self.hi, hi: -self.lo }
    }

    pub fn add(self, o: Interval) -> Interval {
        Interval::rounded(self.lo + o.lo, self.hi + o.hi)
    }

    pub fn sub(self, o: Interval) -> Interval {
        Interval::rounded(self.lo - o.hi, self.hi - o.lo)
    }

    pub fn mul(self, o: Interval) -> Interval {
        let c = [mul0(self.lo, o.lo), mul0(self.lo, o.hi), mul0(self.hi, o.lo), mul0(self.hi, o.hi)];
        Interval::rounded(c.iter().copied().fold(f64::INFINITY, f64::min), c.iter().copied().fold(f64::NEG_INFINITY, f64::max))
    }

    pub fn scale(self, k: f64) -> Interval {
        self.mul(Interval::point(k))
    }

    /// Division; a divisor containing 0 yields the whole line.
    pub fn div(self, o: Interval) -> Interval {
        if o.contains(0.0) {
            return Interval::ENTIRE;
        }
        self.mul(Interval::rounded(1.0 / o.hi, 1.0 / o.lo))
    }

    /// Tight natural power: even powers of a sign-changing interval start at 0.
    pub fn powi(self, n: u32) -> Interval {
        if n == 0 {
            return Interval::point(1.0);
        }
        if n == 1 {
            return self;
        }
        let p = |x: f64| x.powi(n as i32);
        // powi is not correctly rounded; widen by n slack units
        let widen = |iv: Interval| {
            let w = |x: f64, s: f64| if x.is_finite() { x + s * n as f64 * SLACK * x.abs() } else { x };
            Interval { lo: w(iv.lo, -1.0), hi: w(iv.hi, 1.0) }
        };
        if n % 2 == 1 || self.lo >= 0.0 {
            widen(Interval { lo: p(self.lo), hi: p(self.hi) })
        } else if self.hi <= 0.0 {
            widen(Interval { lo: p(self.hi), hi: p(self.lo) })
        } else {
            widen(Interval { lo: 0.0, hi: p(self.mag()) })
        }
    }

    /// Square root restricted to the defined part; wholly negative arguments
    /// give the full range `[0, inf)`.
    pub fn sqrt(self) -> Interval {
        if self.hi < 0.0 {
            return Interval { lo: 0.0, hi: f64::INFINITY };
        }
        Interval::rounded(self.lo.max(0.0).sqrt(), self.hi.sqrt())
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_is_tight() {
        let sq = Interval::new(-2.0, 3.0).powi(2);
        assert_eq!(sq.lo, 0.0);
        assert!((sq.hi - 9.0).abs() < 1e-10);
        let cube = Interval::new(-2.0, 3.0).powi(3);
        assert!(cube.lo <= -8.0 && cube.hi >= 27.0);
    }

    #[test]
    fn zero_stays_exact() {
        let z = Interval::point(0.0).add(Interval::point(0.0));
        assert_eq!(z, Interval::point(0.0));
        assert_eq!(Interval::new(0.0, 1.0).mul(Interval::new(0.0, 2.0)).lo, 0.0);
    }

    #[test]
    fn singular_division_and_sqrt() {
        assert_eq!(Interval::point(1.0).div(Interval::new(-1.0, 1.0)), Interval::ENTIRE);
        let s = Interval::new(0.25, 4.0).sqrt();
        assert!(s.lo <= 0.5 && s.lo > 0.4999 && s.hi >= 2.0 && s.hi < 2.0001);
        assert_eq!(Interval::new(-1.0, 4.0).sqrt().lo, 0.0);
    }

    #[test]
    fn mul_with_infinity() {
        let r = Interval::new(0.0, 1.0).mul(Interval::new(0.0, f64::INFINITY));
        assert_eq!(r.lo, 0.0);
        assert_eq!(r.hi, f64::INFINITY);
    }

    #[test]
    fn outward_rounding_covers_sum() {
        let r = Interval::point(0.1).add(Interval::point(0.2));
        assert!(r.lo < 0.3 && r.hi > 0.3);
    }
}
