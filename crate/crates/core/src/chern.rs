//! Integer-level bundle arithmetic: SL₂(ℤ) completion, Morita parameter θ′,
//! Euler form, Hom-bundle data, duals and the Fourier–Mukai Chern map.
//!
//! Every order or equality decision goes through integers; floating values
//! are for display and for feeding the numerical modules.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::Theta;

pub fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Returns `(g, x, y)` with `a x + b y = g = gcd(a, b) ≥ 0`.
pub fn ext_gcd(a: i64, b: i64) -> (i64, i64, i64) {
    let (mut r0, mut r1) = (a, b);
    let (mut s0, mut s1) = (1i64, 0i64);
    let (mut t0, mut t1) = (0i64, 1i64);
    while r1 != 0 {
        let q = r0.div_euclid(r1);
        (r0, r1) = (r1, r0 - q * r1);
        (s0, s1) = (s1, s0 - q * s1);
        (t0, t1) = (t1, t0 - q * t1);
    }
    if r0 < 0 {
        (-r0, -s0, -t0)
    } else {
        (r0, s0, t0)
    }
}

/// Degree/rank data of `E_{d,c}(θ)^{⊕copies}`: `deg = c`, `rk = cθ + d`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ChernPair {
    pub c: i64,
    pub d: i64,
    pub copies: u32,
}

impl ChernPair {
    pub fn new(c: i64, d: i64) -> Self {
        ChernPair { c, d, copies: 1 }
    }

    pub fn with_copies(c: i64, d: i64, copies: u32) -> Self {
        ChernPair { c, d, copies }
    }

    /// Checks coprimality and certified positivity of the rank.
    pub fn validate(&self, theta: &Theta) -> Result<()> {
        if gcd(self.c, self.d) != 1 {
            return Err(Error::NotCoprime { c: self.c, d: self.d });
        }
        if self.copies == 0 {
            return Err(Error::InvalidParameter("copies must be positive".into()));
        }
        if theta.sign_linear(self.d, self.c)? != Ordering::Greater {
            return Err(Error::NonPositiveRank { c: self.c, d: self.d, rank: self.rank(theta.value()) });
        }
        Ok(())
    }

    pub fn rank(&self, theta: f64) -> f64 {
        self.c as f64 * theta + self.d as f64
    }

    pub fn slope(&self, theta: f64) -> f64 {
        self.c as f64 / self.rank(theta)
    }

    pub fn is_standard(&self) -> bool {
        gcd(self.c, self.d) == 1
    }
}

/// The canonical completion `(a, b)` with `ad − bc = 1` and `0 ≤ a < |c|`
/// (for `c = 0`, `a = d = ±1` and `b = 0`).
pub fn complete_sl2(c: i64, d: i64) -> Result<(i64, i64)> {
    if gcd(c, d) != 1 {
        return Err(Error::NotCoprime { c, d });
    }
    if c == 0 {
        return Ok((d, 0));
    }
    let m = c.abs();
    // a d ≡ 1 (mod |c|)
    let (_, x, _) = ext_gcd(d.rem_euclid(m), m);
    let a = if m == 1 { 0 } else { x.rem_euclid(m) };
    let b = (a * d - 1) / c;
    debug_assert_eq!(a * d - b * c, 1);
    Ok((a, b))
}

/// `θ′ = (aθ + b)/(cθ + d)`, the parameter of `End(E_{d,c}(θ))`.
pub fn theta_prime(c: i64, d: i64, theta: f64) -> Result<f64> {
    let (a, b) = complete_sl2(c, d)?;
    let rk = c as f64 * theta + d as f64;
    if !(rk > 0.0) {
        return Err(Error::NonPositiveRank { c, d, rank: rk });
    }
    Ok((a as f64 * theta + b as f64) / rk)
}

/// Inverse Möbius map: recovers θ from θ′ for the completed matrix of `(c, d)`.
pub fn theta_from_prime(c: i64, d: i64, theta_p: f64) -> Result<f64> {
    let (a, b) = complete_sl2(c, d)?;
    // inverse of [[a, b], [c, d]] is [[d, -b], [-c, a]]
    Ok((d as f64 * theta_p - b as f64) / (-(c as f64) * theta_p + a as f64))
}

/// `χ(E₁, E₂) = rk(E₁)deg(E₂) − rk(E₂)deg(E₁)`; the θ terms cancel.
pub fn euler_form(e1: &ChernPair, e2: &ChernPair) -> i64 {
    e1.copies as i64 * e2.copies as i64 * (e1.d * e2.c - e2.d * e1.c)
}

/// `μ(E₁) < μ(E₂)` for positive-rank pairs, decided exactly.
pub fn slope_less(e1: &ChernPair, e2: &ChernPair) -> bool {
    e1.d * e2.c - e2.d * e1.c > 0
}

/// Chern data of `Hom(E₀, E)` viewed as a standard bundle over `θ′(E₀)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HomBundle {
    /// The Hom bundle as `E_{d′,c′}(θ′)^{⊕copies}`.
    pub pair: ChernPair,
    pub theta: f64,
    pub rk_ratio: f64,
    /// `rk(E) rk(E₀) (μ(E) − μ(E₀))` evaluated in floating point.
    pub deg_float: f64,
    /// The certified integer degree, equal to `euler_form(E₀, E)`.
    pub deg: i64,
    pub mu_prime: f64,
}

pub fn hom_bundle(e0: &ChernPair, e: &ChernPair, theta: f64) -> Result<HomBundle> {
    let (a0, b0) = complete_sl2(e0.c, e0.d)?;
    let r0 = e0.rank(theta);
    let r = e.rank(theta);
    if !(r0 > 0.0) {
        return Err(Error::NonPositiveRank { c: e0.c, d: e0.d, rank: r0 });
    }
    if !(r > 0.0) {
        return Err(Error::NonPositiveRank { c: e.c, d: e.d, rank: r });
    }
    let copies = e0.copies * e.copies;
    let deg_float = copies as f64 * (e.c as f64 * r0 - e0.c as f64 * r);
    let deg = euler_form(e0, e);
    if (deg_float - deg as f64).abs() > 1e-9 * (1.0 + deg_float.abs()) {
        return Err(Error::NonIntegralDegree { value: deg_float });
    }
    let c1 = e.c * e0.d - e.d * e0.c;
    let d1 = e.d * a0 - e.c * b0;
    let theta1 = theta_prime(e0.c, e0.d, theta)?;
    Ok(HomBundle {
        pair: ChernPair::with_copies(c1, d1, copies),
        theta: theta1,
        rk_ratio: r / r0,
        deg_float,
        deg,
        mu_prime: r0 * r0 * (e.c as f64 / r - e0.c as f64 / r0),
    })
}

/// The dual `E_{d,c}(θ)^∨ ≅ E_{a,−c}(θ′)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualSpec {
    pub c: i64,
    pub d: i64,
    pub theta: f64,
}

pub fn dual_spec(c: i64, d: i64, theta: f64) -> Result<DualSpec> {
    let (a, _) = complete_sl2(c, d)?;
    let tp = theta_prime(c, d, theta)?;
    let rank = -(c as f64) * tp + a as f64;
    if !(rank > 0.0) {
        return Err(Error::NonPositiveRank { c: -c, d: a, rank });
    }
    Ok(DualSpec { c: -c, d: a, theta: tp })
}

/// `(deg, rk)` of the Fourier–Mukai image: `(d, −c)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FmChern {
    pub deg: i64,
    pub rk: i64,
}

pub fn fm_chern(e: &ChernPair) -> FmChern {
    FmChern { deg: e.d, rk: -e.c }
}

/// Membership test for the heart: `deg − θ·rk > 0`, certified.
pub fn stability(k: &FmChern, theta: &Theta) -> Result<bool> {
    Ok(theta.sign_linear(k.deg, -k.rk)? == Ordering::Greater)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum FmSlope {
    Finite(f64),
    /// `rk = 0` on the Fourier–Mukai side (`c = 0`): a torsion class.
    Torsion,
}

/// `μ(𝒮(E)) = θ − 1/μ(E)`.
pub fn fm_slope(e: &ChernPair, theta: f64) -> FmSlope {
    if e.c == 0 {
        FmSlope::Torsion
    } else {
        FmSlope::Finite(theta - 1.0 / e.slope(theta))
    }
}
