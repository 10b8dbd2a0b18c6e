//! C interface to `nctorus`.
//!
//! Every function returns an [`NctStatus`]; results go through out-pointers.
//! The message of the most recent failure on the calling thread is available
//! from [`nct_last_error`]. Handles created by `nct_*_new` must be released with
//! the matching `nct_*_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use nctorus::algebra::C64;
use nctorus::ample::ample_entry;
use nctorus::chern::{complete_sl2, dual_spec, euler_form, theta_prime, ChernPair};
use nctorus::dolbeault::{cohomology, curvature_constant, q_norm_bound, CohomologyOptions, HoloStructure};
use nctorus::error::Error;
use nctorus::interval::Theta;
use nctorus::module::BundleSpec;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NctStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParameter = 2,
    NonPositiveRank = 3,
    NotCoprime = 4,
    TauOrientation = 5,
    /// Rank gap, sign or quadrature could not be certified.
    CertificationFailure = 6,
    Internal = 7,
    Panic = 8,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(err: &Error) -> NctStatus {
    if err.is_certification_failure() {
        return NctStatus::CertificationFailure;
    }
    match err {
        Error::InvalidParameter(_) | Error::TrivialBundle(_) | Error::ZeroSlope => NctStatus::InvalidParameter,
        Error::NonPositiveRank { .. } => NctStatus::NonPositiveRank,
        Error::NotCoprime { .. } => NctStatus::NotCoprime,
        Error::TauOrientation(_) => NctStatus::TauOrientation,
        _ => NctStatus::Internal,
    }
}

fn guard(f: impl FnOnce() -> Result<(), Error>) -> NctStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => NctStatus::Ok,
        Ok(Err(e)) => {
            set_error(&e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic");
            NctStatus::Panic
        }
    }
}

macro_rules! require {
    ($($p:ident),+) => {
        if $($p.is_null())||+ {
            set_error("null pointer argument");
            return NctStatus::NullPointer;
        }
    };
}

/// Message of the last failure on this thread. The pointer stays valid until
/// the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn nct_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Opaque holomorphic structure `∇̄ = ∇̄_τ + 2πiz` on `E_{d,c}(θ)^{⊕copies}`.
pub struct NctBundle {
    hs: HoloStructure,
}

/// Creates a bundle handle. `out` receives null on failure.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn nct_bundle_new(
    c: i64,
    d: i64,
    copies: usize,
    theta: f64,
    tau_re: f64,
    tau_im: f64,
    z_re: f64,
    z_im: f64,
    out: *mut *mut NctBundle,
) -> NctStatus {
    require!(out);
    *out = ptr::null_mut();
    guard(|| {
        ChernPair::with_copies(c, d, copies as u32).validate(&Theta::Float(theta))?;
        let spec = BundleSpec::new(c, d, theta, copies)?;
        let hs = HoloStructure::standard(spec, C64::new(tau_re, tau_im), C64::new(z_re, z_im))?;
        *out = Box::into_raw(Box::new(NctBundle { hs }));
        Ok(())
    })
}

/// # Safety
/// `bundle` must be null or a handle from [`nct_bundle_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nct_bundle_free(bundle: *mut NctBundle) {
    if !bundle.is_null() {
        drop(Box::from_raw(bundle));
    }
}

/// `rk = cθ + d` and `μ = c/rk` of one copy.
///
/// # Safety
/// `bundle` must be a live handle; `rank` and `slope` valid out-pointers.
#[no_mangle]
pub unsafe extern "C" fn nct_bundle_rank(bundle: *const NctBundle, rank: *mut f64, slope: *mut f64) -> NctStatus {
    require!(bundle, rank, slope);
    let spec = &(*bundle).hs.spec;
    *rank = spec.rank();
    *slope = spec.mu();
    NctStatus::Ok
}

/// Certified `dim H⁰`, `dim H¹` at truncation `n` (0 selects the default).
/// `min_gap` receives the smaller of the two singular-value gaps.
///
/// # Safety
/// `bundle` must be a live handle; the out-pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn nct_cohomology(
    bundle: *const NctBundle,
    n: usize,
    h0: *mut usize,
    h1: *mut usize,
    min_gap: *mut f64,
) -> NctStatus {
    require!(bundle, h0, h1, min_gap);
    guard(|| {
        let opts = if n == 0 { CohomologyOptions::default() } else { CohomologyOptions::with_n(n) };
        let r = cohomology(&(*bundle).hs, &opts)?;
        *h0 = r.h0;
        *h1 = r.h1;
        *min_gap = r.gap_report.min_gap();
        Ok(())
    })
}

/// Upper bound on the norm of the inverse-type operator `Q`.
///
/// # Safety
/// `bundle` must be a live handle; `out` a valid out-pointer.
#[no_mangle]
pub unsafe extern "C" fn nct_q_bound(bundle: *const NctBundle, out: *mut f64) -> NctStatus {
    require!(bundle, out);
    guard(|| {
        *out = q_norm_bound(&(*bundle).hs)?;
        Ok(())
    })
}

/// Measured and predicted curvature constant of `[∇̄, ∇̄*]`.
///
/// # Safety
/// `bundle` must be a live handle; the out-pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn nct_curvature(
    bundle: *const NctBundle,
    seed: u64,
    measured: *mut f64,
    expected: *mut f64,
) -> NctStatus {
    require!(bundle, measured, expected);
    guard(|| {
        let r = curvature_constant(&(*bundle).hs, seed)?;
        *measured = r.measured;
        *expected = r.expected;
        Ok(())
    })
}

/// Morita data of `E_{d,c}(θ)`.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct NctMorita {
    /// Completion `[[a, b], [c, d]] ∈ SL₂(ℤ)`.
    pub a: i64,
    pub b: i64,
    /// `θ′ = (aθ + b)/(cθ + d)`.
    pub theta_prime: f64,
    pub rank: f64,
    pub dual_c: i64,
    pub dual_d: i64,
    pub dual_theta: f64,
}

/// # Safety
/// `out` must be a valid out-pointer.
#[no_mangle]
pub unsafe extern "C" fn nct_morita_info(c: i64, d: i64, theta: f64, out: *mut NctMorita) -> NctStatus {
    require!(out);
    guard(|| {
        let e = ChernPair::new(c, d);
        e.validate(&Theta::Float(theta))?;
        let (a, b) = complete_sl2(c, d)?;
        let dual = dual_spec(c, d, theta)?;
        *out = NctMorita {
            a,
            b,
            theta_prime: theta_prime(c, d, theta)?,
            rank: e.rank(theta),
            dual_c: dual.c,
            dual_d: dual.d,
            dual_theta: dual.theta,
        };
        Ok(())
    })
}

/// `χ(E₁, E₂)` for single copies.
#[no_mangle]
pub extern "C" fn nct_euler_form(c1: i64, d1: i64, c2: i64, d2: i64) -> i64 {
    euler_form(&ChernPair::new(c1, d1), &ChernPair::new(c2, d2))
}

/// The entry `E_{−n} = (−n, d)` of the ample sequence above `rk_floor`.
///
/// # Safety
/// `c` and `d` must be valid out-pointers.
#[no_mangle]
pub unsafe extern "C" fn nct_ample_entry(theta: f64, n: i64, rk_floor: f64, c: *mut i64, d: *mut i64) -> NctStatus {
    require!(c, d);
    guard(|| {
        let (e, _) = ample_entry(&Theta::Float(theta), n, rk_floor)?;
        *c = e.c;
        *d = e.d;
        Ok(())
    })
}
