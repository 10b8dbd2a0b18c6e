//! The operators `∇̄ = ∇̄_z + φ` and `∇̄*`, the Hermite ladder in the gauge-reduced
//! frame, the one-sided inverse `Q`, Sobolev norms and certified cohomology.
//!
//! On `E_{d,c}(θ)` the standard operator is `∇̄_z f = f′ + 2πi(τμx + z) f`.
//! Writing `2πiτμ = λ + iκ` and `2πiz = b_r + i·b_i`, the substitution
//! `f(x) = e^{−iκx²/2 − i·b_i·x} g(x + b_r/λ)` turns `∇̄_z` into `g′ + λy·g`,
//! which is a ladder operator on the width-`|λ|` Hermite functions.

use std::f64::consts::PI;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::{CMat, TorusElement, C64};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::module::{
    apply_element_grid, apply_element_modes, to_hermite, BundleSpec, HermiteFrame, ModeSection, Section, SectionGrid,
    SectionHermite, Side,
};
use crate::rank::{certified_kernel, certify, RankCertificate, DEFAULT_REL_THRESHOLD, DEFAULT_REQUIRED_GAP};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// An endomorphism added to the standard operator. On `E_{d,c}(θ)` it is a
/// left action over `θ′`; on duals it is a right action over the base.
#[derive(Clone, Debug, PartialEq)]
pub struct Perturbation {
    pub element: TorusElement,
    pub side: Side,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HoloStructure {
    pub spec: BundleSpec,
    pub tau: C64,
    pub z: C64,
    pub phi: Option<Perturbation>,
}

impl HoloStructure {
    pub fn standard(spec: BundleSpec, tau: C64, z: C64) -> Result<Self> {
        if !(tau.im != 0.0 && tau.im.is_finite() && tau.re.is_finite()) {
            return Err(Error::InvalidParameter(format!("tau = {tau} must have nonzero imaginary part")));
        }
        if !(z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::InvalidParameter(format!("z = {z}")));
        }
        Ok(HoloStructure { spec, tau, z, phi: None })
    }

    /// `∇̄_z + φ` with `φ` acting on the left (over `θ′`).
    pub fn perturbed(spec: BundleSpec, tau: C64, z: C64, phi: TorusElement) -> Result<Self> {
        Self::standard(spec, tau, z)?.with_perturbation(Perturbation { element: phi, side: Side::Left })
    }

    pub fn with_perturbation(mut self, p: Perturbation) -> Result<Self> {
        self.spec.check_element(&p.element, p.side)?;
        self.phi = Some(p);
        Ok(self)
    }

    /// The same structure with `φ` replaced by `t·φ`.
    pub fn scaled_perturbation(&self, t: f64) -> Self {
        let mut out = self.clone();
        if let Some(p) = &mut out.phi {
            p.element = p.element.scale(C64::new(t, 0.0));
        }
        out
    }

    pub fn standard_part(&self) -> Self {
        HoloStructure { phi: None, ..self.clone() }
    }

    pub fn is_standard(&self) -> bool {
        self.phi.is_none()
    }

    /// `a = 2πiτμ` in `∇̄_z = D + a x + b`.
    pub fn multiplier(&self) -> C64 {
        C64::new(0.0, 2.0 * PI) * self.tau * self.spec.mu()
    }

    /// `b = 2πiz`.
    pub fn offset(&self) -> C64 {
        C64::new(0.0, 2.0 * PI) * self.z
    }

    /// `λ = Re(2πiτμ) = −2πμ·Im τ`; `[∇̄, ∇̄*] = 2λ`.
    pub fn lambda(&self) -> f64 {
        self.multiplier().re
    }

    /// The frame in which `∇̄_z` is a ladder operator.
    pub fn ladder_frame(&self) -> Result<HermiteFrame> {
        if self.spec.c == 0 {
            return Err(Error::TrivialBundle("the trivial module has no Hermite frame"));
        }
        let a = self.multiplier();
        let b = self.offset();
        let f = HermiteFrame { lambda: a.re, kappa: a.im, shift: b.re / a.re, drift: b.im };
        f.validate()?;
        Ok(f)
    }

    /// `2πi(mτ + n + z)`, the eigenvalue of `∇̄_z` on `U₁^m U₂^n` when `c = 0`.
    pub fn mode_symbol(&self, m: i64, n: i64) -> C64 {
        C64::new(0.0, 2.0 * PI) * (self.tau * m as f64 + n as f64 + self.z)
    }

    fn element(&self, adjoint: bool) -> Option<(TorusElement, Side)> {
        self.phi.as_ref().map(|p| (if adjoint { p.element.star() } else { p.element.clone() }, p.side))
    }
}

/// Inverse of the unitary gauge change: samples of `y ↦ (Gf)(y)` where
/// `f(x) = e^{−iκx²/2 − i·drift·x} (Gf)(x + shift)`.
pub fn gauge_reduce(f: &SectionGrid, frame: &HermiteFrame) -> Result<SectionGrid> {
    let g = f.grid;
    let moved = f.map_blocks(|_, _, b| g.shift(b, frame.shift))?;
    Ok(moved.multiply(|_, y| {
        let x = y - frame.shift;
        C64::from_polar(1.0, frame.drift * x + 0.5 * frame.kappa * x * x)
    }))
}

/// Inverse of [`gauge_reduce`].
pub fn gauge_restore(h: &SectionGrid, frame: &HermiteFrame) -> Result<SectionGrid> {
    let g = h.grid;
    let moved = h.map_blocks(|_, _, b| g.shift(b, -frame.shift))?;
    Ok(moved.multiply(|_, x| C64::from_polar(1.0, -frame.drift * x - 0.5 * frame.kappa * x * x)))
}

/// Ladder action of `∇̄_z` (or its adjoint) on orthonormal frame coefficients.
/// The output has one more level than the input, so no information is lost.
pub fn ladder_apply(coeffs: &[C64], lambda: f64, adjoint: bool) -> Vec<C64> {
    let n = coeffs.len();
    let mut out = vec![ZERO; n + 1];
    let l = lambda.abs();
    for (k, &v) in coeffs.iter().enumerate() {
        if v == ZERO {
            continue;
        }
        match (lambda > 0.0, adjoint) {
            (true, false) => {
                if k > 0 {
                    out[k - 1] += v * (2.0 * k as f64 * l).sqrt();
                }
            }
            (true, true) => out[k + 1] += v * (2.0 * (k + 1) as f64 * l).sqrt(),
            (false, false) => out[k + 1] -= v * (2.0 * (k + 1) as f64 * l).sqrt(),
            (false, true) => {
                if k > 0 {
                    out[k - 1] -= v * (2.0 * k as f64 * l).sqrt();
                }
            }
        }
    }
    out
}

/// Matrix of the ladder operator from `cols` levels into `rows` levels.
pub fn ladder_matrix(lambda: f64, rows: usize, cols: usize, adjoint: bool) -> CMat {
    let mut m = CMat::zeros(rows, cols);
    for k in 0..cols {
        let mut e = vec![ZERO; cols];
        e[k] = C64::new(1.0, 0.0);
        for (r, v) in ladder_apply(&e, lambda, adjoint).into_iter().enumerate() {
            if r < rows && v != ZERO {
                m[(r, k)] = v;
            }
        }
    }
    m
}

fn resize(h: &SectionHermite, n: usize) -> SectionHermite {
    let mut out = SectionHermite::zeros(h.spec, h.frame, n);
    for copy in 0..h.spec.copies {
        for sector in 0..h.spec.sectors() {
            let src = h.block(copy, sector);
            let k = src.len().min(n);
            out.block_mut(copy, sector)[..k].copy_from_slice(&src[..k]);
        }
    }
    out
}

/// Frame coefficients `⟨g, b_r⟩` by the trapezoid rule on the grid of `g`.
/// Exact to spectral accuracy when `g` is localized and resolved, which makes
/// it the projection of choice after translations and modulations.
pub fn project_on_frame(g: &SectionGrid, n: usize, frame: HermiteFrame) -> Result<SectionHermite> {
    let grid = g.grid;
    let dx = grid.spacing();
    let mut out = SectionHermite::zeros(g.spec, frame, n);
    for j in 0..grid.points {
        let b = frame.basis_values(n, grid.x(j));
        for copy in 0..g.spec.copies {
            for sector in 0..g.spec.sectors() {
                let v = g.block(copy, sector)[j];
                if v == ZERO {
                    continue;
                }
                for (c, bv) in out.block_mut(copy, sector).iter_mut().zip(&b) {
                    *c += bv.conj() * v * dx;
                }
            }
        }
    }
    Ok(out)
}

fn frames_match(a: &HermiteFrame, b: &HermiteFrame) -> bool {
    let close = |x: f64, y: f64| (x - y).abs() <= 1e-12 * (1.0 + x.abs().max(y.abs()));
    close(a.lambda, b.lambda) && close(a.kappa, b.kappa) && close(a.shift, b.shift) && close(a.drift, b.drift)
}

/// Largest translation and frequency a perturbation introduces on a grid.
fn perturbation_reach(spec: &BundleSpec, elem: &TorusElement, side: Side) -> (f64, f64) {
    let band = elem.band() as f64;
    match side {
        Side::Right => (band / spec.mu().abs(), 2.0 * PI * band),
        Side::Left => (band / spec.c.unsigned_abs() as f64, 2.0 * PI * band / spec.rank()),
    }
}

fn apply_operator(f: &Section, hs: &HoloStructure, adjoint: bool) -> Result<Section> {
    if f.spec() != &hs.spec {
        return Err(Error::SpecMismatch("section and structure live on different bundles".into()));
    }
    let elem = hs.element(adjoint);
    match f {
        Section::Grid(g) => {
            if hs.spec.c == 0 {
                return Err(Error::TrivialBundle("grid sections need c != 0; use mode sections for A_theta"));
            }
            let (a, b) = (hs.multiplier(), hs.offset());
            let d = g.derivative();
            let mut out = g.multiply(|_, x| if adjoint { a.conj() * x + b.conj() } else { a * x + b });
            let sign = if adjoint { -1.0 } else { 1.0 };
            let out_d = d.scale(C64::new(sign, 0.0));
            out = out.add(&out_d)?;
            if let Some((e, side)) = elem {
                out = out.add(&apply_element_grid(g, &e, side)?)?;
            }
            Ok(Section::Grid(out))
        }
        Section::Hermite(h) => {
            let frame = hs.ladder_frame()?;
            if !frames_match(&frame, &h.frame) {
                return Err(Error::Representation(
                    "Hermite sections must be expressed in the ladder frame of the structure".into(),
                ));
            }
            let mut out = SectionHermite::zeros(h.spec, h.frame, h.n + 1);
            for copy in 0..h.spec.copies {
                for sector in 0..h.spec.sectors() {
                    let v = ladder_apply(h.block(copy, sector), frame.lambda, adjoint);
                    out.block_mut(copy, sector).copy_from_slice(&v);
                }
            }
            if let Some((e, side)) = elem {
                let (shift, freq) = perturbation_reach(&h.spec, &e, side);
                let grid = frame.grid_for(h.n + 1, shift, freq)?;
                let moved = apply_element_grid(&h.to_grid(grid), &e, side)?;
                let p = project_on_frame(&moved, h.n + 1, frame)?;
                let sum: Vec<C64> = out.coeffs().iter().zip(p.coeffs()).map(|(a, b)| a + b).collect();
                out = SectionHermite::from_coeffs(h.spec, frame, h.n + 1, sum)?;
            }
            Ok(Section::Hermite(out))
        }
        Section::Modes(m) => {
            let tau = hs.tau;
            let z = hs.z;
            let mut out = m.map_parts(|p| {
                if adjoint {
                    p.diagonal_map(|j, k| C64::new(0.0, -2.0 * PI) * (tau.conj() * j as f64 + k as f64 + z.conj()))
                } else {
                    p.diagonal_map(|j, k| C64::new(0.0, 2.0 * PI) * (tau * j as f64 + k as f64 + z))
                }
            });
            if let Some((e, side)) = elem {
                out = out.add(&apply_element_modes(m, &e, side)?)?;
            }
            Ok(Section::Modes(out))
        }
    }
}

/// `∇̄ f`. Hermite sections must be in [`HoloStructure::ladder_frame`] and gain
/// one level.
pub fn nabla_z(f: &Section, hs: &HoloStructure) -> Result<Section> {
    apply_operator(f, hs, false)
}

/// `∇̄* f = ∇̄_z* f + φ* f`.
pub fn nabla_z_adjoint(f: &Section, hs: &HoloStructure) -> Result<Section> {
    apply_operator(f, hs, true)
}

/// `⟨f, g⟩` on any pair of sections in the same representation. Hermite
/// sections of different lengths are compared on their common levels (the
/// missing levels are zero).
pub fn section_inner(f: &Section, g: &Section) -> Result<C64> {
    match (f, g) {
        (Section::Grid(a), Section::Grid(b)) => a.inner(b),
        (Section::Modes(a), Section::Modes(b)) => a.inner(b),
        (Section::Hermite(a), Section::Hermite(b)) => {
            let n = a.n.max(b.n);
            resize(a, n).inner(&resize(b, n))
        }
        _ => Err(Error::Representation("inner product across representations".into())),
    }
}

pub fn section_norm(f: &Section) -> f64 {
    match f {
        Section::Grid(a) => a.norm(),
        Section::Hermite(a) => a.norm(),
        Section::Modes(a) => a.norm(),
    }
}

fn section_sub_scaled(f: &Section, g: &Section, s: C64) -> Result<Section> {
    match (f, g) {
        (Section::Grid(a), Section::Grid(b)) => Ok(Section::Grid(a.sub(&b.scale(s))?)),
        (Section::Modes(a), Section::Modes(b)) => Ok(Section::Modes(a.add(&b.map_parts(|p| p.scale(-s)))?)),
        (Section::Hermite(a), Section::Hermite(b)) => {
            let n = a.n.max(b.n);
            let (a, b) = (resize(a, n), resize(b, n));
            let v = a.coeffs().iter().zip(b.coeffs()).map(|(x, y)| x - s * y).collect();
            Ok(Section::Hermite(SectionHermite::from_coeffs(a.spec, a.frame, n, v)?))
        }
        _ => Err(Error::Representation("difference across representations".into())),
    }
}

/// Measured and expected curvature constant `[∇̄, ∇̄*]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvatureReport {
    /// Mean Rayleigh quotient `⟨Cf, f⟩/⟨f, f⟩` over the test sections.
    pub measured: f64,
    /// `−4πμ·Im τ`.
    pub expected: f64,
    /// Worst `‖Cf − expected·f‖ / (scale·‖f‖)`; `scale` is `|expected|`, or
    /// `‖∇̄∇̄*f‖/‖f‖` when the expected value is 0.
    pub deviation: f64,
}

pub const CURVATURE_TOL: f64 = 1e-8;

/// Commutator `∇̄∇̄* − ∇̄*∇̄` on random localized sections (grid representation
/// for `c ≠ 0`, modes for `c = 0`).
pub fn curvature_constant(hs: &HoloStructure, seed: u64) -> Result<CurvatureReport> {
    if !hs.is_standard() {
        return Err(Error::InvalidParameter("the curvature identity is checked on standard structures".into()));
    }
    let expected = -4.0 * PI * hs.spec.mu() * hs.tau.im;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = 4;
    let mut measured = 0.0;
    let mut deviation: f64 = 0.0;
    for _ in 0..samples {
        let f = if hs.spec.c == 0 {
            let parts = (0..hs.spec.copies)
                .map(|_| crate::algebra::random_element(&mut rng, hs.spec.theta, 1, 4))
                .collect();
            Section::Modes(ModeSection::new(hs.spec, parts)?)
        } else {
            let frame = hs.ladder_frame()?;
            let n = 8;
            let coeffs = (0..hs.spec.blocks() * n).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
            let h = SectionHermite::from_coeffs(hs.spec, frame, n, coeffs)?;
            Section::Grid(h.to_grid(frame.grid_for(n + 4, 0.0, 0.0)?))
        };
        let up = nabla_z(&nabla_z_adjoint(&f, hs)?, hs)?;
        let down = nabla_z_adjoint(&nabla_z(&f, hs)?, hs)?;
        let comm = section_sub_scaled(&up, &down, C64::new(1.0, 0.0))?;
        let nf = section_norm(&f);
        measured += section_inner(&comm, &f)?.re / (nf * nf);
        let resid = section_norm(&section_sub_scaled(&comm, &f, C64::new(expected, 0.0))?);
        let scale = if expected != 0.0 { expected.abs() } else { section_norm(&up) / nf };
        deviation = deviation.max(resid / (scale * nf));
    }
    let report = CurvatureReport { measured: measured / samples as f64, expected, deviation };
    if deviation > CURVATURE_TOL {
        return Err(Error::NonScalarCommutator { deviation });
    }
    Ok(report)
}

/// The one-sided inverse of a standard `∇̄`: right inverse for `λ > 0`, left
/// inverse for `λ < 0`, diagonal on modes for `c = 0`.
#[derive(Clone, Debug)]
pub struct QOperator {
    hs: HoloStructure,
}

pub fn build_q(hs: &HoloStructure) -> Result<QOperator> {
    if !hs.is_standard() {
        return Err(Error::InvalidParameter("Q is built for standard structures".into()));
    }
    Ok(QOperator { hs: hs.clone() })
}

impl QOperator {
    /// `Q` on `n` ladder levels (levels that would leave the truncation are dropped).
    pub fn ladder_matrix(&self, n: usize) -> Result<CMat> {
        let lambda = self.hs.ladder_frame()?.lambda;
        let l = lambda.abs();
        let mut m = CMat::zeros(n, n);
        for k in 0..n {
            if lambda > 0.0 {
                if k + 1 < n {
                    m[(k + 1, k)] = C64::new(1.0 / (2.0 * (k + 1) as f64 * l).sqrt(), 0.0);
                }
            } else if k > 0 {
                m[(k - 1, k)] = C64::new(-1.0 / (2.0 * k as f64 * l).sqrt(), 0.0);
            }
        }
        Ok(m)
    }

    pub fn apply_hermite(&self, f: &SectionHermite) -> Result<SectionHermite> {
        let frame = self.hs.ladder_frame()?;
        if !frames_match(&frame, &f.frame) {
            return Err(Error::Representation("Q acts on sections in the ladder frame".into()));
        }
        // the bidiagonal action of `ladder_matrix`, without forming it
        let (lambda, n) = (frame.lambda, f.n);
        let l = lambda.abs();
        let mut out = SectionHermite::zeros(f.spec, f.frame, n);
        for copy in 0..f.spec.copies {
            for sector in 0..f.spec.sectors() {
                let src = f.block(copy, sector).to_vec();
                let dst = out.block_mut(copy, sector);
                for k in 0..n {
                    if lambda > 0.0 {
                        if k + 1 < n {
                            dst[k + 1] = src[k] / (2.0 * (k + 1) as f64 * l).sqrt();
                        }
                    } else if k > 0 {
                        dst[k - 1] = -src[k] / (2.0 * k as f64 * l).sqrt();
                    }
                }
            }
        }
        Ok(out)
    }

    /// Grid sections are conjugated through `n` ladder levels.
    pub fn apply_grid(&self, f: &SectionGrid, n: usize) -> Result<SectionGrid> {
        let frame = self.hs.ladder_frame()?;
        Ok(self.apply_hermite(&to_hermite(f, n, frame)?)?.to_grid(f.grid))
    }

    /// `a_{m,n} ↦ a_{m,n} / 2πi(mτ+n+z)`, zero where the symbol vanishes.
    pub fn apply_modes(&self, f: &ModeSection) -> ModeSection {
        let hs = &self.hs;
        f.map_parts(|p| {
            p.diagonal_map(|m, n| {
                let s = hs.mode_symbol(m, n);
                if s.norm() < 1e-12 {
                    ZERO
                } else {
                    1.0 / s
                }
            })
        })
    }

    pub fn apply(&self, f: &Section, n: usize) -> Result<Section> {
        match f {
            Section::Hermite(h) => Ok(Section::Hermite(self.apply_hermite(h)?)),
            Section::Grid(g) => Ok(Section::Grid(self.apply_grid(g, n)?)),
            Section::Modes(m) => Ok(Section::Modes(self.apply_modes(m))),
        }
    }
}

/// `1/(2√(π|Im τ·μ|))`, the operator-norm bound of `Q`.
pub fn q_norm_bound(hs: &HoloStructure) -> Result<f64> {
    let mu = hs.spec.mu();
    if hs.spec.c == 0 || mu == 0.0 {
        return Err(Error::ZeroSlope);
    }
    Ok(1.0 / (2.0 * (PI * (hs.tau.im * mu).abs()).sqrt()))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SobolevNorms {
    pub s: usize,
    /// `(Σ_{i≤s} ‖∇̄^i e‖²)^{1/2}`.
    pub plain: f64,
    /// `(Σ_{i≤s} ⟨e, (∇̄*∇̄)^i e⟩)^{1/2}`.
    pub primed: f64,
    pub ratio: f64,
}

/// Default largest order for which grid/Hermite data stay accurate.
pub const SOBOLEV_MAX_ORDER: usize = 4;

pub fn sobolev_norm(e: &Section, s: usize, hs: &HoloStructure) -> Result<SobolevNorms> {
    let mut plain = 0.0;
    let mut cur = e.clone();
    for i in 0..=s {
        if i > 0 {
            cur = nabla_z(&cur, hs)?;
        }
        plain += section_norm(&cur).powi(2);
    }
    let mut primed = 0.0;
    let mut cur = e.clone();
    for i in 0..=s {
        if i > 0 {
            cur = nabla_z_adjoint(&nabla_z(&cur, hs)?, hs)?;
        }
        primed += section_inner(e, &cur)?.re;
    }
    let (plain, primed) = (plain.sqrt(), primed.max(0.0).sqrt());
    Ok(SobolevNorms { s, plain, primed, ratio: if primed > 0.0 { plain / primed } else { f64::NAN } })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CohomologyOptions {
    /// Hermite levels per sector and copy.
    pub n: usize,
    /// Extra output levels for the rectangular operator matrices; `None` means
    /// `max(n/4, 8)`.
    pub extra: Option<usize>,
    /// Mode band for `c = 0` standard structures.
    pub modes: usize,
    /// Mode band for perturbed `c = 0` structures (dense assembly).
    pub perturbed_modes: usize,
    pub rel_threshold: f64,
    pub required_gap: f64,
}

impl Default for CohomologyOptions {
    fn default() -> Self {
        CohomologyOptions {
            n: 128,
            extra: None,
            modes: 24,
            perturbed_modes: 8,
            rel_threshold: DEFAULT_REL_THRESHOLD,
            required_gap: DEFAULT_REQUIRED_GAP,
        }
    }
}

impl CohomologyOptions {
    pub fn with_n(n: usize) -> Self {
        CohomologyOptions { n, ..Default::default() }
    }

    pub fn extra_levels(&self) -> usize {
        self.extra.unwrap_or((self.n / 4).max(8))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub nabla: RankCertificate,
    pub adjoint: RankCertificate,
}

impl GapReport {
    pub fn min_gap(&self) -> f64 {
        self.nabla.gap.min(self.adjoint.gap)
    }
}

#[derive(Clone, Debug)]
pub struct CohomologyResult {
    pub h0: usize,
    pub h1: usize,
    pub chi: i64,
    /// Orthonormal basis of `ker ∇̄` (ladder-frame Hermite sections, or modes).
    pub harmonic0: Vec<Section>,
    /// Orthonormal basis of `ker ∇̄*`.
    pub harmonic1: Vec<Section>,
    pub gap_report: GapReport,
}

/// Matrices of an operator in a finite orthonormal basis: the standard part
/// and the perturbation, with a common column and row layout.
#[derive(Clone, Debug)]
pub struct OperatorMatrices {
    /// One block of the block-diagonal standard part (every copy and sector
    /// carries the same block).
    pub block: CMat,
    pub blocks: usize,
    /// Perturbation, when present, over all blocks.
    pub phi: Option<CMat>,
}

impl OperatorMatrices {
    pub fn dense(&self, t: f64) -> CMat {
        let (r, c) = self.block.shape();
        let mut m = CMat::zeros(r * self.blocks, c * self.blocks);
        for b in 0..self.blocks {
            m.view_mut((b * r, b * c), (r, c)).copy_from(&self.block);
        }
        if let Some(p) = &self.phi {
            m += p * C64::new(t, 0.0);
        }
        m
    }
}

fn mode_index(band: usize, m: i64, n: i64) -> Option<usize> {
    let b = band as i64;
    if m.abs() > b || n.abs() > b {
        return None;
    }
    let w = 2 * band + 1;
    Some((m + b) as usize * w + (n + b) as usize)
}

fn mode_count(band: usize) -> usize {
    (2 * band + 1).pow(2)
}

/// `⟨b_r, ψ b_k⟩` over all blocks, where `ψ` is the perturbation (or its star)
/// and `b_k` the ladder frame.
fn perturbation_matrix(hs: &HoloStructure, frame: &HermiteFrame, cols: usize, rows: usize, adjoint: bool) -> Result<Option<CMat>> {
    let Some((elem, side)) = hs.element(adjoint) else { return Ok(None) };
    let spec = hs.spec;
    let (shift, freq) = perturbation_reach(&spec, &elem, side);
    let grid: Grid = frame.grid_for(rows.max(cols), shift, freq)?;
    let p = grid.points;
    let basis: Vec<Vec<C64>> = (0..p).map(|j| frame.basis_values(rows, grid.x(j))).collect();
    let dx = grid.spacing();
    let nb = spec.blocks();
    let sectors = spec.sectors();
    let mut out = CMat::zeros(nb * rows, nb * cols);
    for src in 0..nb {
        for k in 0..cols {
            let mut f = SectionGrid::zeros(spec, grid);
            {
                let blk = f.block_mut(src / sectors, src % sectors);
                for j in 0..p {
                    blk[j] = basis[j][k];
                }
            }
            let g = apply_element_grid(&f, &elem, side)?;
            for dst in 0..nb {
                let y = g.block(dst / sectors, dst % sectors);
                if y.iter().all(|v| *v == ZERO) {
                    continue;
                }
                let mut acc = vec![ZERO; rows];
                for j in 0..p {
                    if y[j] == ZERO {
                        continue;
                    }
                    for (r, a) in acc.iter_mut().enumerate() {
                        *a += basis[j][r].conj() * y[j];
                    }
                }
                for (r, a) in acc.into_iter().enumerate() {
                    out[(dst * rows + r, src * cols + k)] = a * dx;
                }
            }
        }
    }
    Ok(Some(out))
}

fn mode_perturbation_matrix(hs: &HoloStructure, band: usize, adjoint: bool) -> Result<Option<(CMat, usize)>> {
    let Some((elem, side)) = hs.element(adjoint) else { return Ok(None) };
    let spec = hs.spec;
    let rows_band = band + elem.band() as usize;
    let (nc, nr) = (mode_count(band), mode_count(rows_band));
    let mut out = CMat::zeros(spec.copies * nr, spec.copies * nc);
    let b = band as i64;
    for copy in 0..spec.copies {
        for m in -b..=b {
            for n in -b..=b {
                let mut parts = vec![TorusElement::zero(spec.theta, 1, 0); spec.copies];
                parts[copy] = TorusElement::monomial(spec.theta, m, n, C64::new(1.0, 0.0));
                let img = apply_element_modes(&ModeSection::new(spec, parts)?, &elem, side)?;
                let col = copy * nc + mode_index(band, m, n).expect("inside band");
                for (dst, part) in img.parts.iter().enumerate() {
                    for (&(i, j), v) in part.iter() {
                        if let Some(r) = mode_index(rows_band, i, j) {
                            out[(dst * nr + r, col)] += v[(0, 0)];
                        }
                    }
                }
            }
        }
    }
    Ok(Some((out, rows_band)))
}

/// Rectangular matrices of `∇̄` (or `∇̄*`) in the ladder frame: `n` input
/// levels, `n + extra` output levels per block.
pub fn operator_matrices(hs: &HoloStructure, opts: &CohomologyOptions, adjoint: bool) -> Result<OperatorMatrices> {
    let n = opts.n;
    let rows = n + opts.extra_levels();
    let frame = hs.ladder_frame()?;
    Ok(OperatorMatrices {
        block: ladder_matrix(frame.lambda, rows, n, adjoint),
        blocks: hs.spec.blocks(),
        phi: perturbation_matrix(hs, &frame, n, rows, adjoint)?,
    })
}

fn kernel_sections(hs: &HoloStructure, n: usize, basis: Vec<DVector<C64>>) -> Result<Vec<Section>> {
    let frame = hs.ladder_frame()?;
    basis
        .into_iter()
        .map(|v| Ok(Section::Hermite(SectionHermite::from_coeffs(hs.spec, frame, n, v.as_slice().to_vec())?)))
        .collect()
}

fn replicated_kernel(
    block: &CMat,
    blocks: usize,
    opts: &CohomologyOptions,
) -> Result<(RankCertificate, Vec<DVector<C64>>)> {
    let (cert, basis) = certified_kernel(block, opts.rel_threshold, opts.required_gap)?;
    let cols = block.ncols();
    let mut full = Vec::new();
    for b in 0..blocks {
        for v in &basis {
            let mut w = DVector::zeros(cols * blocks);
            w.rows_mut(b * cols, cols).copy_from(v);
            full.push(w);
        }
    }
    let cert = RankCertificate { kernel_dim: cert.kernel_dim * blocks, columns: cols * blocks, ..cert };
    Ok((cert, full))
}

fn hermite_kernel(opts: &CohomologyOptions, mats: &OperatorMatrices, t: f64) -> Result<(RankCertificate, Vec<DVector<C64>>)> {
    if mats.phi.is_none() || t == 0.0 {
        replicated_kernel(&mats.block, mats.blocks, opts)
    } else {
        certified_kernel(&mats.dense(t), opts.rel_threshold, opts.required_gap)
    }
}

fn mode_sections(spec: BundleSpec, band: usize, basis: Vec<DVector<C64>>) -> Result<Vec<Section>> {
    let b = band as i64;
    let nc = mode_count(band);
    basis
        .into_iter()
        .map(|v| {
            let mut parts = Vec::with_capacity(spec.copies);
            for copy in 0..spec.copies {
                let mut e = TorusElement::zero(spec.theta, 1, band as u32);
                for m in -b..=b {
                    for n in -b..=b {
                        let x = v[copy * nc + mode_index(band, m, n).expect("inside band")];
                        if x != ZERO {
                            e.set_scalar(m, n, x)?;
                        }
                    }
                }
                parts.push(e);
            }
            Ok(Section::Modes(ModeSection::new(spec, parts)?))
        })
        .collect()
}

fn trivial_cohomology(hs: &HoloStructure, opts: &CohomologyOptions) -> Result<CohomologyResult> {
    let spec = hs.spec;
    if hs.phi.is_none() {
        // diagonal: the kernel of ∇̄ and of ∇̄* are the modes where the symbol vanishes
        let band = opts.modes;
        let b = band as i64;
        let mut diag = Vec::new();
        for _ in 0..spec.copies {
            for m in -b..=b {
                for n in -b..=b {
                    diag.push(hs.mode_symbol(m, n));
                }
            }
        }
        let sv: Vec<f64> = diag.iter().map(|s| s.norm()).collect();
        let cert = certify(&sv, sv.len(), opts.rel_threshold, opts.required_gap)?;
        let basis: Vec<DVector<C64>> = sv
            .iter()
            .enumerate()
            .filter(|(_, &s)| s < cert.threshold)
            .map(|(i, _)| {
                let mut v = DVector::zeros(sv.len());
                v[i] = C64::new(1.0, 0.0);
                v
            })
            .collect();
        let h = mode_sections(spec, band, basis)?;
        let k = h.len();
        return Ok(CohomologyResult {
            h0: k,
            h1: k,
            chi: 0,
            harmonic0: h.clone(),
            harmonic1: h,
            gap_report: GapReport { nabla: cert.clone(), adjoint: cert },
        });
    }
    let band = opts.perturbed_modes;
    let mut kernels = Vec::new();
    for adjoint in [false, true] {
        let (phi, rows_band) = mode_perturbation_matrix(hs, band, adjoint)?.expect("perturbed");
        let mut m = phi;
        let (nc, nr) = (mode_count(band), mode_count(rows_band));
        let b = band as i64;
        for copy in 0..spec.copies {
            for i in -b..=b {
                for j in -b..=b {
                    let s = hs.mode_symbol(i, j);
                    let s = if adjoint { -s.conj() } else { s };
                    let col = copy * nc + mode_index(band, i, j).unwrap();
                    let row = copy * nr + mode_index(rows_band, i, j).unwrap();
                    m[(row, col)] += s;
                }
            }
        }
        let (cert, basis) = certified_kernel(&m, opts.rel_threshold, opts.required_gap)?;
        kernels.push((cert, mode_sections(spec, band, basis)?));
    }
    let (c1, k1) = kernels.pop().unwrap();
    let (c0, k0) = kernels.pop().unwrap();
    Ok(CohomologyResult {
        h0: k0.len(),
        h1: k1.len(),
        chi: k0.len() as i64 - k1.len() as i64,
        harmonic0: k0,
        harmonic1: k1,
        gap_report: GapReport { nabla: c0, adjoint: c1 },
    })
}

/// `H⁰ = ker ∇̄` and `H¹ ≅ ker ∇̄*` at finite truncation, with gap certificates.
pub fn cohomology(hs: &HoloStructure, opts: &CohomologyOptions) -> Result<CohomologyResult> {
    if hs.spec.c == 0 {
        return trivial_cohomology(hs, opts);
    }
    let forward = operator_matrices(hs, opts, false)?;
    let backward = operator_matrices(hs, opts, true)?;
    cohomology_from_matrices(hs, opts, &forward, &backward, 1.0)
}

/// Certified `dim ker ∇̄` (or `dim ker ∇̄*` when `adjoint`) with a kernel basis;
/// half the work of [`cohomology`] when only one group is needed.
pub fn kernel_dimension(hs: &HoloStructure, opts: &CohomologyOptions, adjoint: bool) -> Result<(RankCertificate, Vec<Section>)> {
    if hs.spec.c == 0 {
        let r = trivial_cohomology(hs, opts)?;
        return Ok(if adjoint { (r.gap_report.adjoint, r.harmonic1) } else { (r.gap_report.nabla, r.harmonic0) });
    }
    let mats = operator_matrices(hs, opts, adjoint)?;
    let (cert, basis) = hermite_kernel(opts, &mats, 1.0)?;
    Ok((cert, kernel_sections(hs, opts.n, basis)?))
}

fn cohomology_from_matrices(
    hs: &HoloStructure,
    opts: &CohomologyOptions,
    forward: &OperatorMatrices,
    backward: &OperatorMatrices,
    t: f64,
) -> Result<CohomologyResult> {
    let (c0, b0) = hermite_kernel(opts, forward, t)?;
    let (c1, b1) = hermite_kernel(opts, backward, t)?;
    let (h0, h1) = (c0.kernel_dim, c1.kernel_dim);
    Ok(CohomologyResult {
        h0,
        h1,
        chi: h0 as i64 - h1 as i64,
        harmonic0: kernel_sections(hs, opts.n, b0)?,
        harmonic1: kernel_sections(hs, opts.n, b1)?,
        gap_report: GapReport { nabla: c0, adjoint: c1 },
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EulerCheck {
    pub chi: i64,
    pub deg: i64,
    pub ok: bool,
    pub h0: usize,
    pub h1: usize,
    pub min_gap: f64,
}

/// Numerical `h⁰ − h¹` against `copies·c`.
pub fn euler_char_check(hs: &HoloStructure, opts: &CohomologyOptions) -> Result<EulerCheck> {
    if hs.tau.im >= 0.0 {
        return Err(Error::TauOrientation(hs.tau.im));
    }
    let r = cohomology(hs, opts)?;
    let deg = hs.spec.copies as i64 * hs.spec.c;
    Ok(EulerCheck { chi: r.chi, deg, ok: r.chi == deg, h0: r.h0, h1: r.h1, min_gap: r.gap_report.min_gap() })
}

/// `χ(∇̄₀ + tφ)` along `tgrid`. The operator matrices are assembled once and
/// rescaled.
pub fn index_homotopy(hs0: &HoloStructure, phi: &TorusElement, tgrid: &[f64], opts: &CohomologyOptions) -> Result<Vec<i64>> {
    if hs0.tau.im >= 0.0 {
        return Err(Error::TauOrientation(hs0.tau.im));
    }
    let side = if hs0.spec.c == 0 { Side::Left } else { hs0.phi.as_ref().map_or(Side::Left, |p| p.side) };
    let hs = hs0.standard_part().with_perturbation(Perturbation { element: phi.clone(), side })?;
    let wrap = |t: f64, e: Error| Error::HomotopyGap { t, source: Box::new(e) };
    if hs.spec.c == 0 {
        return tgrid
            .iter()
            .map(|&t| {
                let ht = if t == 0.0 { hs.standard_part() } else { hs.scaled_perturbation(t) };
                let o = CohomologyOptions { modes: opts.perturbed_modes, ..opts.clone() };
                trivial_cohomology(&ht, &o).map(|r| r.chi).map_err(|e| wrap(t, e))
            })
            .collect();
    }
    let forward = operator_matrices(&hs, opts, false)?;
    let backward = operator_matrices(&hs, opts, true)?;
    tgrid
        .iter()
        .map(|&t| {
            cohomology_from_matrices(&hs, opts, &forward, &backward, t)
                .map(|r| r.chi)
                .map_err(|e| wrap(t, e))
        })
        .collect()
}
