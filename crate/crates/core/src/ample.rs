//! Ample sequences of standard bundles, the Chern data of right twists, the
//! vanishing constant `C(E)` and dimension tables of the associated ℤ-algebra.
//!
//! Entry `k` of a sequence is `E_n` with `n = −(k+1)`. Every inequality that
//! involves θ is decided by [`Theta`]: exactly for quadratic irrationals,
//! with outward-rounded intervals otherwise.

use std::cmp::Ordering;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::algebra::{TorusElement, C64};
use crate::chern::{euler_form, gcd, slope_less, ChernPair};
use crate::error::{Error, Result};
use crate::interval::{Interval, Theta};

const MAX_COPRIME_SCAN: i64 = 64;

/// Certified sign of `rk(c, d) − floor`.
fn rank_minus_floor(theta: &Theta, c: i64, d: i64, floor: f64) -> Result<Ordering> {
    if floor.fract() == 0.0 && floor.abs() < 1e15 {
        return theta.sign_linear(d - floor as i64, c);
    }
    let v = theta.linear(d, c) - Interval::point(floor);
    v.sign().ok_or_else(|| Error::UncertifiedSign(format!("{d} + {c}*theta - {floor}")))
}

fn rank_interval(theta: &Theta, e: &ChernPair) -> Interval {
    theta.linear(e.d, e.c)
}

/// Enclosure of `μ(E)`; `None` when the rank enclosure touches zero.
fn slope_interval(theta: &Theta, e: &ChernPair) -> Option<Interval> {
    let r = rank_interval(theta, e);
    r.recip().map(|inv| Interval::from_int(e.c) * inv)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeSequence {
    #[serde(skip, default = "default_theta")]
    pub theta: Theta,
    pub theta_value: f64,
    pub rk_floor: f64,
    /// `entries[k]` is `E_{−(k+1)}`.
    pub entries: Vec<ChernPair>,
    /// How far the coprimality scan moved `d` past the smallest admissible value.
    pub scan_excess: Vec<i64>,
}

fn default_theta() -> Theta {
    Theta::Float(0.0)
}

impl SlopeSequence {
    /// A sequence given explicitly (for checking external data).
    pub fn from_entries(theta: Theta, rk_floor: f64, entries: Vec<ChernPair>) -> Self {
        let n = entries.len();
        SlopeSequence { theta, theta_value: theta.value(), rk_floor, entries, scan_excess: vec![0; n] }
    }

    pub fn index(k: usize) -> i64 {
        -(k as i64 + 1)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn slope(&self, k: usize) -> f64 {
        self.entries[k].slope(self.theta_value)
    }

    pub fn rank(&self, k: usize) -> f64 {
        self.entries[k].rank(self.theta_value)
    }
}

/// `E_{−n} = (−n, d)` with `d` the smallest integer such that `d − nθ > rk_floor`
/// and `gcd(n, d) = 1`. Returns the pair and the coprimality excess.
pub fn ample_entry(theta: &Theta, n: i64, rk_floor: f64) -> Result<(ChernPair, i64)> {
    if n <= 0 {
        return Err(Error::InvalidParameter(format!("entry index {n} must be positive")));
    }
    let c = -n;
    let mut d = (n as f64 * theta.value() + rk_floor).floor() as i64 - 1;
    while rank_minus_floor(theta, c, d, rk_floor)? != Ordering::Greater {
        d += 1;
    }
    let d_min = d;
    while gcd(c, d) != 1 {
        d += 1;
        if d - d_min > MAX_COPRIME_SCAN {
            return Err(Error::InvalidParameter(format!("no coprime d within {MAX_COPRIME_SCAN} of {d_min} for c = {c}")));
        }
    }
    Ok((ChernPair::new(c, d), d - d_min))
}

pub fn gen_ample_sequence(theta: Theta, count: usize, rk_floor: f64) -> Result<SlopeSequence> {
    if !(rk_floor > 0.0 && rk_floor.is_finite()) {
        return Err(Error::InvalidParameter(format!("rank floor {rk_floor} must be positive")));
    }
    let mut entries = Vec::with_capacity(count);
    let mut scan_excess = Vec::with_capacity(count);
    for k in 0..count {
        let (e, x) = ample_entry(&theta, k as i64 + 1, rk_floor)?;
        entries.push(e);
        scan_excess.push(x);
    }
    Ok(SlopeSequence { theta, theta_value: theta.value(), rk_floor, entries, scan_excess })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AmpleReport {
    pub entries: usize,
    pub floor_ok: bool,
    /// Diagnostic only: the construction keeps ranks in a bounded window, so
    /// slopes fall at a linear rate but need not fall at every step.
    pub monotone_ok: bool,
    /// Indices `n` whose slope is not below the slope of `E_{n+1}`.
    pub non_monotone: Vec<i64>,
    /// `μ(E_n) < n / (2R)` for every entry, `R` the largest rank.
    pub divergence_ok: bool,
    /// `rk(𝒮E_n) = −deg E_n` strictly increasing and `μ(𝒮E_n) − θ > floor/rk(𝒮E_n)`.
    pub fm_ok: bool,
    pub failures: Vec<String>,
    pub passed: bool,
}

pub fn ample_check(seq: &SlopeSequence) -> AmpleReport {
    let theta = &seq.theta;
    let mut failures = Vec::new();
    let mut floor_ok = true;
    let mut fm_ok = true;
    for (k, e) in seq.entries.iter().enumerate() {
        let n = SlopeSequence::index(k);
        match rank_minus_floor(theta, e.c, e.d, seq.rk_floor) {
            Ok(Ordering::Greater) => {}
            Ok(_) => {
                floor_ok = false;
                failures.push(format!("E_{n} = ({}, {}): rank not above {}", e.c, e.d, seq.rk_floor));
            }
            Err(err) => {
                floor_ok = false;
                failures.push(format!("E_{n}: {err}"));
            }
        }
        // 𝒮-side: rk = −c > 0, increasing, and (rk(E) − floor)/rk(𝒮E) > 0
        let fm_rank = -e.c;
        let increasing = k == 0 || fm_rank > -seq.entries[k - 1].c;
        if fm_rank <= 0 || !increasing {
            fm_ok = false;
            failures.push(format!("E_{n}: Fourier-Mukai rank {fm_rank} is not positive and increasing"));
        }
    }
    let non_monotone: Vec<i64> = (1..seq.len())
        .filter(|&k| !slope_less(&seq.entries[k], &seq.entries[k - 1]))
        .map(SlopeSequence::index)
        .collect();
    let r_max = seq.entries.iter().map(|e| rank_interval(theta, e).hi).fold(0.0, f64::max);
    let mut divergence_ok = seq.len() >= 2;
    if r_max > 0.0 && floor_ok {
        for (k, e) in seq.entries.iter().enumerate() {
            // μ < −(k+1)/(2R)  ⟺  2cR < −(k+1)·rk  (rk > 0)
            let lhs = Interval::from_int(2 * e.c) * Interval::point(r_max);
            let rhs = Interval::from_int(-(k as i64 + 1)) * rank_interval(theta, e);
            if !(lhs.hi <= rhs.lo) {
                divergence_ok = false;
                failures.push(format!("E_{}: slope above the linear-rate envelope", SlopeSequence::index(k)));
                break;
            }
        }
    } else {
        divergence_ok = false;
    }
    let passed = floor_ok && divergence_ok && fm_ok;
    AmpleReport { entries: seq.len(), floor_ok, monotone_ok: non_monotone.is_empty(), non_monotone, divergence_ok, fm_ok, failures, passed }
}

/// Chern data of the right twist `F_i` in `0 → E_i → Hom(E_i, E_{i0})*⊗E_{i0} → F_i → 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Twist {
    pub chi: i64,
    pub c: i64,
    pub d: i64,
    pub rank: f64,
    /// `c/rk` from the Chern data.
    pub mu_chern: f64,
    /// `μ₀ + (μ₀ − μᵢ)/(r₀²(μ₀ − μᵢ) − 1)`.
    pub mu_closed: f64,
}

impl Twist {
    pub fn agreement(&self) -> f64 {
        (self.mu_chern - self.mu_closed).abs()
    }
}

pub fn twist_chern(ei: &ChernPair, ei0: &ChernPair, theta: &Theta) -> Result<Twist> {
    let chi = euler_form(ei, ei0);
    if chi <= 0 {
        return Err(Error::TwistLeavesHeart(format!("chi(E_i, E_i0) = {chi} is not positive")));
    }
    let c = chi * ei0.c - ei.c;
    let d = chi * ei0.d - ei.d;
    // rk(F) = χ r₀ − rᵢ > 0 is the heart condition deg − θ·rk > 0 on the 𝒮 side
    if theta.sign_linear(d, c)? != Ordering::Greater {
        return Err(Error::TwistLeavesHeart(format!("rank of F = ({c}, {d}) is not positive")));
    }
    let t = theta.value();
    let rank = d as f64 + c as f64 * t;
    let (mu0, mui) = (ei0.slope(t), ei.slope(t));
    let r0 = ei0.rank(t);
    let mu_closed = mu0 + (mu0 - mui) / (r0 * r0 * (mu0 - mui) - 1.0);
    Ok(Twist { chi, c, d, rank, mu_chern: c as f64 / rank, mu_closed })
}

/// Margin in the strict inequality `C₀C(φ)/√(μ(E) − C) < 1`.
pub const VANISHING_MARGIN: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VanishingBound {
    pub c_bound: f64,
    pub mu: f64,
    /// `1/(2√(π|Im τ|))`.
    pub c0: f64,
    /// `Σ‖a_{m,n}‖`.
    pub c_phi: f64,
}

/// `C = μ(E) − (C₀·C(φ)/(1 − margin))²`; for `φ = 0`, `μ(E)` minus a
/// relative `1e−12`.
pub fn vanishing_bound(e: &ChernPair, theta: f64, phi: &TorusElement, tau: C64) -> Result<VanishingBound> {
    if tau.im >= 0.0 {
        return Err(Error::TauOrientation(tau.im));
    }
    let mu = e.slope(theta);
    let c0 = 1.0 / (2.0 * (PI * tau.im.abs()).sqrt());
    let c_phi = phi.coeff_norm();
    let c_bound = if c_phi == 0.0 {
        mu - 1e-12 * mu.abs().max(1.0)
    } else {
        mu - (c0 * c_phi / (1.0 - VANISHING_MARGIN)).powi(2)
    };
    Ok(VanishingBound { c_bound, mu, c0, c_phi })
}

/// `true` when `μ(E) < bound` is certified.
fn slope_below(theta: &Theta, e: &ChernPair, bound: f64) -> bool {
    if !bound.is_finite() {
        return bound == f64::INFINITY;
    }
    slope_interval(theta, e).is_some_and(|m| m.hi < bound)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZAlgebraDims {
    /// Indices `n` of the window, ascending.
    pub indices: Vec<i64>,
    /// `dims[p][q] = dim A_{n_p n_q}`; `None` where the vanishing criterion
    /// could not be certified.
    pub dims: Vec<Vec<Option<i64>>>,
}

fn window_positions(seq: &SlopeSequence, window: (usize, usize)) -> Result<Vec<usize>> {
    let (start, end) = window;
    if start >= end || end > seq.len() {
        return Err(Error::InvalidParameter(format!("window {start}..{end} outside a sequence of {}", seq.len())));
    }
    // ascending n means descending entry position
    Ok((start..end).rev().collect())
}

/// `dim Hom(E_i, E_j) = χ(E_i, E_j)` for `i < j` once `Ext¹` vanishes, which
/// holds when `μ(E_i) < μ(E_j)`; `window` is a range of entry positions.
pub fn zalgebra_dims(seq: &SlopeSequence, window: (usize, usize)) -> Result<ZAlgebraDims> {
    let pos = window_positions(seq, window)?;
    let w = pos.len();
    let mut dims = vec![vec![Some(0); w]; w];
    for p in 0..w {
        dims[p][p] = Some(1);
        for q in p + 1..w {
            let (ei, ej) = (&seq.entries[pos[p]], &seq.entries[pos[q]]);
            let chi = euler_form(ei, ej);
            dims[p][q] = (slope_less(ei, ej) && chi > 0).then_some(chi);
        }
    }
    Ok(ZAlgebraDims { indices: pos.iter().map(|&k| SlopeSequence::index(k)).collect(), dims })
}

/// `dim Hom(E_i, E) = χ(E_i, E)` for entries with certified `μ(E_i) < C`.
pub fn module_dims(seq: &SlopeSequence, e: &ChernPair, window: (usize, usize), c_bound: f64) -> Result<Vec<(i64, Option<i64>)>> {
    let pos = window_positions(seq, window)?;
    Ok(pos
        .into_iter()
        .map(|k| {
            let ei = &seq.entries[k];
            (SlopeSequence::index(k), slope_below(&seq.theta, ei, c_bound).then(|| euler_form(ei, e)))
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FingenWitness {
    pub i0: i64,
    /// Every `i ≤ i1` in the sequence passes the twist guard with `μ(F_i) < C`.
    pub i1: i64,
    /// Upper end of the enclosure of `μ(E_{i0}) + 2/r_{i0}²`.
    pub first_inequality: f64,
    /// Entries verified below `i1` (inclusive).
    pub tail: usize,
    pub max_mu_f: f64,
    /// `μ_{i0} + 1/r_{i0}²`, the limit of `μ(F_i)`.
    pub limit: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FingenReport {
    pub witness: Option<FingenWitness>,
    pub message: String,
}

/// Minimum number of verified entries below `i1`.
pub const FINGEN_MIN_TAIL: usize = 3;

/// Enclosure of `μ(E) + 2/rk(E)²`.
fn fingen_first(theta: &Theta, e: &ChernPair) -> Option<Interval> {
    let r = rank_interval(theta, e);
    let mu = slope_interval(theta, e)?;
    Some(mu + Interval::from_int(2) * r.sqr().recip()?)
}

/// Enclosure of `μ(F_i)` when the twist guard passes.
pub fn twist_slope_interval(ei: &ChernPair, ei0: &ChernPair, theta: &Theta) -> Option<Interval> {
    let t = twist_chern(ei, ei0, theta).ok()?;
    let f = ChernPair { c: t.c, d: t.d, copies: 1 };
    slope_interval(theta, &f)
}

pub fn fingen_check(seq: &SlopeSequence, e: &ChernPair, c_bound: f64) -> FingenReport {
    if !c_bound.is_finite() {
        return FingenReport { witness: None, message: "no witness: C is not finite".into() };
    }
    let theta = &seq.theta;
    for k0 in 0..seq.len() {
        let e0 = &seq.entries[k0];
        let Some(first) = fingen_first(theta, e0) else { continue };
        if !(first.hi < c_bound) {
            continue;
        }
        // walk up from the bottom while entries keep passing
        let mut k1 = seq.len();
        let mut max_mu_f = f64::NEG_INFINITY;
        while k1 > k0 + 1 {
            let ei = &seq.entries[k1 - 1];
            match twist_slope_interval(ei, e0, theta) {
                Some(m) if m.hi < c_bound => {
                    max_mu_f = max_mu_f.max(m.hi);
                    k1 -= 1;
                }
                _ => break,
            }
        }
        let tail = seq.len() - k1;
        if tail >= FINGEN_MIN_TAIL {
            let t = seq.theta_value;
            let r0 = e0.rank(t);
            return FingenReport {
                witness: Some(FingenWitness {
                    i0: SlopeSequence::index(k0),
                    i1: SlopeSequence::index(k1),
                    first_inequality: first.hi,
                    tail,
                    max_mu_f,
                    limit: e0.slope(t) + 1.0 / (r0 * r0),
                }),
                message: format!("witness found for E = ({}, {})", e.c, e.d),
            };
        }
    }
    FingenReport { witness: None, message: "no witness in the available window; extend sequence".into() }
}

/// `|μ(F_i) − (μ_{i0} + 1/r_{i0}²)|` at the entries `E_{−n}` for each `n`,
/// generated directly so that far-out indices are cheap. Entries whose twist
/// leaves the heart are skipped.
pub fn twist_limit_errors(theta: &Theta, rk_floor: f64, e0: &ChernPair, ns: &[i64]) -> Result<Vec<(i64, f64)>> {
    let t = theta.value();
    let r0 = e0.rank(t);
    let limit = e0.slope(t) + 1.0 / (r0 * r0);
    let mut out = Vec::with_capacity(ns.len());
    for &n in ns {
        let (ei, _) = ample_entry(theta, n, rk_floor)?;
        match twist_chern(&ei, e0, theta) {
            Ok(tw) => out.push((-n, (tw.mu_closed - limit).abs())),
            Err(Error::TwistLeavesHeart(_)) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}
