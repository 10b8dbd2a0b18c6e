//! Certified sign decisions for expressions that are linear in θ.
//!
//! Two modes: outward-rounded `f64` intervals around a double θ, and an exact
//! mode for quadratic irrationals `θ = (p + q√D)/r` where every sign reduces to
//! integer comparisons.

use std::cmp::Ordering;
use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn point(x: f64) -> Self {
        Interval { lo: x, hi: x }
    }

    pub fn new(lo: f64, hi: f64) -> Self {
        assert!(lo <= hi, "empty interval [{lo}, {hi}]");
        Interval { lo, hi }
    }

    /// `[x - r, x + r]`, rounded outward.
    pub fn around(x: f64, r: f64) -> Self {
        Interval { lo: (x - r).next_down(), hi: (x + r).next_up() }
    }

    pub fn from_int(n: i64) -> Self {
        let x = n as f64;
        if x as i64 == n && x.abs() < 9.0e15 {
            Interval::point(x)
        } else {
            Interval { lo: x.next_down(), hi: x.next_up() }
        }
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains_zero(&self) -> bool {
        self.lo <= 0.0 && self.hi >= 0.0
    }

    /// Sign if the interval excludes zero.
    pub fn sign(&self) -> Option<Ordering> {
        if self.lo > 0.0 {
            Some(Ordering::Greater)
        } else if self.hi < 0.0 {
            Some(Ordering::Less)
        } else {
            None
        }
    }

    pub fn certainly_lt(&self, other: &Interval) -> bool {
        self.hi < other.lo
    }

    pub fn recip(self) -> Option<Interval> {
        if self.contains_zero() {
            None
        } else {
            Some(Interval { lo: (1.0 / self.hi).next_down(), hi: (1.0 / self.lo).next_up() })
        }
    }

    pub fn sqr(self) -> Interval {
        if self.lo >= 0.0 {
            self * self
        } else if self.hi <= 0.0 {
            (-self) * (-self)
        } else {
            let m = self.lo.abs().max(self.hi.abs());
            Interval { lo: 0.0, hi: (m * m).next_up() }
        }
    }
}

impl Add for Interval {
    type Output = Interval;
    fn add(self, o: Interval) -> Interval {
        Interval { lo: (self.lo + o.lo).next_down(), hi: (self.hi + o.hi).next_up() }
    }
}

impl Sub for Interval {
    type Output = Interval;
    fn sub(self, o: Interval) -> Interval {
        Interval { lo: (self.lo - o.hi).next_down(), hi: (self.hi - o.lo).next_up() }
    }
}

impl Neg for Interval {
    type Output = Interval;
    fn neg(self) -> Interval {
        Interval { lo: -self.hi, hi: -self.lo }
    }
}

impl Mul for Interval {
    type Output = Interval;
    fn mul(self, o: Interval) -> Interval {
        let p = [self.lo * o.lo, self.lo * o.hi, self.hi * o.lo, self.hi * o.hi];
        let lo = p.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = p.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        Interval { lo: lo.next_down(), hi: hi.next_up() }
    }
}

/// Panics when the divisor straddles zero; callers check `recip` first when
/// that can happen.
#[allow(clippy::suspicious_arithmetic_impl)]
impl Div for Interval {
    type Output = Interval;
    fn div(self, o: Interval) -> Interval {
        self * o.recip().expect("interval division by an interval containing zero")
    }
}

/// `(p + q√D) / r` with `D > 1` squarefree and `r > 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct QuadIrrational {
    pub p: i64,
    pub q: i64,
    pub d: i64,
    pub r: i64,
}

impl QuadIrrational {
    pub fn new(p: i64, q: i64, d: i64, r: i64) -> Result<Self> {
        if r <= 0 || d <= 1 || q == 0 {
            return Err(Error::InvalidParameter(format!("({p} + {q}*sqrt({d}))/{r} is not a quadratic irrational")));
        }
        let s = (d as f64).sqrt().round() as i64;
        if s * s == d {
            return Err(Error::InvalidParameter(format!("{d} is a perfect square")));
        }
        Ok(QuadIrrational { p, q, d, r })
    }

    pub fn value(&self) -> f64 {
        (self.p as f64 + self.q as f64 * (self.d as f64).sqrt()) / self.r as f64
    }

    /// Exact sign of `x + yθ`.
    pub fn sign_linear(&self, x: i64, y: i64) -> Ordering {
        // r(x + yθ) = (r x + y p) + (y q) √D
        let a = self.r as i128 * x as i128 + y as i128 * self.p as i128;
        let b = y as i128 * self.q as i128;
        sign_a_plus_b_sqrt(a, b, self.d as i128)
    }
}

/// Sign of `a + b√d` for `d` not a perfect square.
fn sign_a_plus_b_sqrt(a: i128, b: i128, d: i128) -> Ordering {
    match (a.cmp(&0), b.cmp(&0)) {
        (Ordering::Equal, s) => s,
        (s, Ordering::Equal) => s,
        (Ordering::Greater, Ordering::Greater) => Ordering::Greater,
        (Ordering::Less, Ordering::Less) => Ordering::Less,
        (Ordering::Greater, Ordering::Less) => (a * a).cmp(&(b * b * d)),
        (Ordering::Less, Ordering::Greater) => (b * b * d).cmp(&(a * a)),
    }
}

/// The deformation parameter θ as used by certified comparisons.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Theta {
    /// A double standing in for an irrational number; enclosures carry one
    /// ulp of slack on each side.
    Float(f64),
    Quadratic(QuadIrrational),
}

impl Theta {
    pub fn sqrt2_minus_1() -> Self {
        Theta::Quadratic(QuadIrrational { p: -1, q: 1, d: 2, r: 1 })
    }

    pub fn golden_conjugate() -> Self {
        Theta::Quadratic(QuadIrrational { p: -1, q: 1, d: 5, r: 2 })
    }

    pub fn value(&self) -> f64 {
        match self {
            Theta::Float(t) => *t,
            Theta::Quadratic(q) => q.value(),
        }
    }

    pub fn interval(&self) -> Interval {
        let t = self.value();
        Interval { lo: t.next_down(), hi: t.next_up() }
    }

    /// Certified sign of `x + yθ`.
    pub fn sign_linear(&self, x: i64, y: i64) -> Result<Ordering> {
        match self {
            Theta::Quadratic(q) => Ok(q.sign_linear(x, y)),
            Theta::Float(_) => {
                let v = Interval::from_int(x) + Interval::from_int(y) * self.interval();
                v.sign().ok_or_else(|| Error::UncertifiedSign(format!("{x} + {y}*theta")))
            }
        }
    }

    /// Enclosure of `x + yθ`.
    pub fn linear(&self, x: i64, y: i64) -> Interval {
        Interval::from_int(x) + Interval::from_int(y) * self.interval()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_arithmetic_encloses() {
        let a = Interval::point(0.1);
        let b = Interval::point(0.2);
        let s = a + b;
        assert!(s.lo <= 0.1 + 0.2 && 0.1 + 0.2 <= s.hi);
        let p = Interval::new(-1.0, 2.0) * Interval::new(-3.0, 0.5);
        assert!(p.lo <= -6.0 && p.hi >= 3.0);
        assert!(Interval::new(-1.0, 1.0).recip().is_none());
        assert_eq!(Interval::new(-2.0, 1.0).sqr().lo, 0.0);
    }

    #[test]
    fn quadratic_signs_match_high_precision() {
        let t = Theta::sqrt2_minus_1();
        // 2 - θ > 0 and 3 - 7θ > 0 (7θ ≈ 2.899)
        assert_eq!(t.sign_linear(2, -1).unwrap(), Ordering::Greater);
        assert_eq!(t.sign_linear(3, -7).unwrap(), Ordering::Greater);
        // convergents of √2 - 1: 2/5, 5/12, 12/29
        assert_eq!(t.sign_linear(-2, 5).unwrap(), Ordering::Greater); // 5θ ≈ 2.071
        assert_eq!(t.sign_linear(-5, 12).unwrap(), Ordering::Less); // 12θ ≈ 4.970
        assert_eq!(t.sign_linear(0, 0).unwrap(), Ordering::Equal);
        for x in -30..30 {
            for y in -30..30 {
                let v = x as f64 + y as f64 * t.value();
                if v.abs() > 1e-9 {
                    assert_eq!(t.sign_linear(x, y).unwrap(), v.partial_cmp(&0.0).unwrap());
                }
            }
        }
    }

    #[test]
    fn float_mode_certifies_or_refuses() {
        let t = Theta::Float(std::f64::consts::PI - 3.0);
        assert_eq!(t.sign_linear(1, -7).unwrap(), Ordering::Greater);
        assert_eq!(t.sign_linear(1, -8).unwrap(), Ordering::Less);
        let exact = Theta::Float(0.5);
        assert!(matches!(exact.sign_linear(1, -2), Err(Error::UncertifiedSign(_))));
    }

    #[test]
    fn rejects_perfect_squares() {
        assert!(QuadIrrational::new(0, 1, 4, 1).is_err());
        assert!(QuadIrrational::new(-1, 1, 5, 2).is_ok());
    }
}
