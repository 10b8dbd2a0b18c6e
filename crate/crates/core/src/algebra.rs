//! Finite-band model of the smooth noncommutative torus algebra `A_θ`.
//!
//! An element is a finite sum `Σ a_{m,n} U₁^m U₂^n` whose coefficients are
//! `k × k` complex matrices (`k = 1` for scalars). Products obey
//! `U₁U₂ = e^{2πiθ} U₂U₁`, so reordering `U₂^{n₁} U₁^{m₂}` produces the
//! phase `e^{-2πiθ n₁ m₂}`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;

/// `e^{2πi x}` with the argument reduced mod 1 first.
pub fn cis_turns(x: f64) -> C64 {
    let r = x - x.round();
    C64::from_polar(1.0, 2.0 * PI * r)
}

/// The pair `(θ, τ)` plus truncation band and working tolerance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TorusParams {
    pub theta: f64,
    pub tau: C64,
    pub band: u32,
    pub eps: f64,
}

impl TorusParams {
    pub fn new(theta: f64, tau: C64, band: u32, eps: f64) -> Result<Self> {
        if !theta.is_finite() {
            return Err(Error::InvalidParameter(format!("theta = {theta}")));
        }
        if !(tau.im != 0.0 && tau.re.is_finite() && tau.im.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "tau = {tau} must have nonzero finite imaginary part"
            )));
        }
        if !(eps > 0.0) {
            return Err(Error::InvalidParameter(format!("eps = {eps} must be positive")));
        }
        Ok(TorusParams { theta, tau, band, eps })
    }

    /// Riemann–Roch and vanishing computations assume `Im τ < 0`.
    pub fn require_lower_half_plane(&self) -> Result<()> {
        require_lower_half_plane(self.tau)
    }
}

pub fn require_lower_half_plane(tau: C64) -> Result<()> {
    if tau.im < 0.0 {
        Ok(())
    } else {
        Err(Error::TauOrientation(tau.im))
    }
}

/// A finite Fourier series over `A_θ` with matrix coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct TorusElement {
    theta: f64,
    k: usize,
    band: u32,
    coeffs: BTreeMap<(i64, i64), CMat>,
}

impl TorusElement {
    pub fn zero(theta: f64, k: usize, band: u32) -> Self {
        assert!(k > 0, "coefficient dimension must be positive");
        TorusElement { theta, k, band, coeffs: BTreeMap::new() }
    }

    pub fn one(theta: f64, k: usize) -> Self {
        let mut e = Self::zero(theta, k, 0);
        e.coeffs.insert((0, 0), CMat::identity(k, k));
        e
    }

    /// Scalar monomial `c · U₁^m U₂^n`.
    pub fn monomial(theta: f64, m: i64, n: i64, c: C64) -> Self {
        let band = m.unsigned_abs().max(n.unsigned_abs()) as u32;
        let mut e = Self::zero(theta, 1, band);
        e.coeffs.insert((m, n), CMat::from_element(1, 1, c));
        e
    }

    pub fn u1(theta: f64) -> Self {
        Self::monomial(theta, 1, 0, C64::new(1.0, 0.0))
    }

    pub fn u2(theta: f64) -> Self {
        Self::monomial(theta, 0, 1, C64::new(1.0, 0.0))
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn band(&self) -> u32 {
        self.band
    }

    pub fn coeff(&self, m: i64, n: i64) -> Option<&CMat> {
        self.coeffs.get(&(m, n))
    }

    /// Scalar coefficient (entry `(0,0)` of the matrix), zero when absent.
    pub fn scalar_coeff(&self, m: i64, n: i64) -> C64 {
        self.coeffs.get(&(m, n)).map_or(C64::new(0.0, 0.0), |a| a[(0, 0)])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(i64, i64), &CMat)> {
        self.coeffs.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.coeffs.len()
    }

    pub fn set_coeff(&mut self, m: i64, n: i64, a: CMat) -> Result<()> {
        if a.nrows() != self.k || a.ncols() != self.k {
            return Err(Error::DimensionMismatch { left: self.k, right: a.nrows().max(a.ncols()) });
        }
        if m.unsigned_abs() > self.band as u64 || n.unsigned_abs() > self.band as u64 {
            return Err(Error::InvalidParameter(format!(
                "term ({m}, {n}) lies outside band {}",
                self.band
            )));
        }
        self.coeffs.insert((m, n), a);
        Ok(())
    }

    pub fn set_scalar(&mut self, m: i64, n: i64, c: C64) -> Result<()> {
        self.set_coeff(m, n, CMat::from_element(1, 1, c))
    }

    /// Drop every term outside `[-band, band]²` and shrink the declared band.
    pub fn truncate(&self, band: u32) -> Self {
        let b = band as i64;
        let coeffs = self
            .coeffs
            .iter()
            .filter(|((m, n), _)| m.abs() <= b && n.abs() <= b)
            .map(|(k, v)| (*k, v.clone()))
            .collect();
        TorusElement { theta: self.theta, k: self.k, band: band.min(self.band), coeffs }
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.theta != other.theta {
            return Err(Error::AlgebraMismatch { left: self.theta, right: other.theta });
        }
        if self.k != other.k {
            return Err(Error::DimensionMismatch { left: self.k, right: other.k });
        }
        Ok(())
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut out = self.clone();
        for v in out.coeffs.values_mut() {
            *v *= s;
        }
        out
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        out.band = self.band.max(other.band);
        for (key, v) in &other.coeffs {
            out.coeffs
                .entry(*key)
                .and_modify(|a| *a += v)
                .or_insert_with(|| v.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    /// Twisted convolution. The band of the product is the sum of the bands.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let mut out = Self::zero(self.theta, self.k, self.band + other.band);
        for (&(m1, n1), a) in &self.coeffs {
            for (&(m2, n2), b) in &other.coeffs {
                let phase = cis_turns(-self.theta * (n1 * m2) as f64);
                let term = (a * b) * phase;
                out.coeffs
                    .entry((m1 + m2, n1 + n2))
                    .and_modify(|c| *c += &term)
                    .or_insert(term);
            }
        }
        Ok(out)
    }

    /// Antilinear anti-involution with `U_i* = U_i^{-1}`; matrix coefficients
    /// are conjugate-transposed.
    pub fn star(&self) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .map(|(&(m, n), a)| {
                let phase = cis_turns(-self.theta * (m * n) as f64);
                ((-m, -n), a.adjoint() * phase)
            })
            .collect();
        TorusElement { theta: self.theta, k: self.k, band: self.band, coeffs }
    }

    /// `a_{0,0}`, or its matrix trace.
    pub fn trace(&self) -> C64 {
        self.coeffs.get(&(0, 0)).map_or(C64::new(0.0, 0.0), |a| a.trace())
    }

    /// The derivation `δ_τ`: multiply the `(m,n)` coefficient by `2πi(mτ+n)`.
    pub fn delta_tau(&self, tau: C64) -> Self {
        self.diagonal_map(|m, n| C64::new(0.0, 2.0 * PI) * (tau * m as f64 + n as f64))
    }

    pub(crate) fn diagonal_map(&self, f: impl Fn(i64, i64) -> C64) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .map(|(&(m, n), a)| ((m, n), a * f(m, n)))
            .collect();
        TorusElement { theta: self.theta, k: self.k, band: self.band, coeffs }
    }

    pub fn l2_norm(&self) -> f64 {
        self.coeffs.values().map(|a| a.norm_squared()).sum::<f64>().sqrt()
    }

    /// `C(φ) = Σ ‖a_{m,n}‖₂` (operator norms of the coefficients).
    pub fn coeff_norm(&self) -> f64 {
        self.coeffs
            .values()
            .map(|a| {
                if a.nrows() == 1 {
                    a[(0, 0)].norm()
                } else {
                    a.clone().singular_values().max()
                }
            })
            .sum()
    }

    /// Largest absolute coefficient entry whose term sits on the outer ring of
    /// the band.
    pub fn band_edge_magnitude(&self) -> f64 {
        let b = self.band as i64;
        self.coeffs
            .iter()
            .filter(|((m, n), _)| m.abs() == b || n.abs() == b)
            .map(|(_, a)| a.iter().map(|z| z.norm()).fold(0.0, f64::max))
            .fold(0.0, f64::max)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&ElementJson::from(self))?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let j: ElementJson = serde_json::from_str(s)?;
        j.try_into()
    }
}

/// JSON layout: header `{band, k, theta}` and one record per nonzero term.
#[derive(Debug, Serialize, Deserialize)]
pub struct ElementJson {
    pub band: u32,
    pub k: usize,
    pub theta: f64,
    pub coeffs: Vec<CoeffRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CoeffRecord {
    pub m: i64,
    pub n: i64,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl From<&TorusElement> for ElementJson {
    fn from(e: &TorusElement) -> Self {
        let coeffs = e
            .coeffs
            .iter()
            .map(|(&(m, n), a)| CoeffRecord {
                m,
                n,
                re: (0..e.k).map(|i| (0..e.k).map(|j| a[(i, j)].re).collect()).collect(),
                im: (0..e.k).map(|i| (0..e.k).map(|j| a[(i, j)].im).collect()).collect(),
            })
            .collect();
        ElementJson { band: e.band, k: e.k, theta: e.theta, coeffs }
    }
}

impl TryFrom<ElementJson> for TorusElement {
    type Error = Error;

    fn try_from(j: ElementJson) -> Result<Self> {
        if j.k == 0 {
            return Err(Error::Serialization("k must be positive".into()));
        }
        let mut e = TorusElement::zero(j.theta, j.k, j.band);
        for rec in j.coeffs {
            if rec.re.len() != j.k || rec.im.len() != j.k {
                return Err(Error::Serialization(format!("term ({}, {}) has wrong shape", rec.m, rec.n)));
            }
            let mut a = CMat::zeros(j.k, j.k);
            for i in 0..j.k {
                if rec.re[i].len() != j.k || rec.im[i].len() != j.k {
                    return Err(Error::Serialization(format!("term ({}, {}) has wrong shape", rec.m, rec.n)));
                }
                for jj in 0..j.k {
                    a[(i, jj)] = C64::new(rec.re[i][jj], rec.im[i][jj]);
                }
            }
            e.set_coeff(rec.m, rec.n, a)?;
        }
        Ok(e)
    }
}

/// Random element with coefficients uniform in the unit square, used by
/// sweeps and tests.
pub fn random_element<R: rand::Rng>(rng: &mut R, theta: f64, k: usize, band: u32) -> TorusElement {
    let mut e = TorusElement::zero(theta, k, band);
    let b = band as i64;
    for m in -b..=b {
        for n in -b..=b {
            let a = CMat::from_fn(k, k, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
            e.coeffs.insert((m, n), a);
        }
    }
    e
}

/// Rescale `e` so that its coefficient norm `C(φ)` equals `target`.
pub fn with_coeff_norm(e: &TorusElement, target: f64) -> TorusElement {
    let c = e.coeff_norm();
    if c == 0.0 {
        e.clone()
    } else {
        e.scale(C64::new(target / c, 0.0))
    }
}
