//! The pairings `b` and `t` between `E^∨ = E_{a,−c}(θ′)` and `E = E_{d,c}(θ)`,
//! the antilinear map `σ`, the dual holomorphic structure and Serre pairings.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::{random_element, TorusElement, C64};
use crate::dolbeault::{
    cohomology, nabla_z, nabla_z_adjoint, section_norm, CohomologyOptions, CohomologyResult, HoloStructure, Perturbation,
};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::module::{apply_element_grid, BundleSpec, HermiteFrame, ModeSection, Section, SectionGrid, SectionHermite, Side};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

fn spec_close(a: &BundleSpec, b: &BundleSpec) -> bool {
    a.c == b.c && a.d == b.d && a.copies == b.copies && (a.theta - b.theta).abs() <= 1e-12 * (1.0 + a.theta.abs())
}

fn require_dual_pair(dual: &BundleSpec, spec: &BundleSpec) -> Result<()> {
    if !spec_close(dual, &spec.dual()?) {
        return Err(Error::SpecMismatch(format!(
            "E_({},{}) over {} is not the dual of E_({},{}) over {}",
            dual.d, dual.c, dual.theta, spec.d, spec.c, spec.theta
        )));
    }
    Ok(())
}

/// `⟨f₁, f₂⟩ = Σ_α ∫ f₁(x, α) conj f₂(x, α) dx`.
pub fn hermitian_form(f1: &SectionGrid, f2: &SectionGrid) -> Result<C64> {
    f1.inner(f2)
}

/// `σ(f)(x, α) = conj f(rk·x, −aα)`, sampled on `(L/rk, P)` so that every
/// output node is an input node.
pub fn sigma(f: &SectionGrid) -> Result<SectionGrid> {
    let spec = f.spec;
    if spec.c == 0 {
        return Err(Error::TrivialBundle("sigma on A_theta is the star; use sigma_modes"));
    }
    let dual = spec.dual()?;
    let (a, _) = spec.completion();
    let rk = spec.rank();
    let grid = Grid::new(f.grid.half_width / rk, f.grid.points)?;
    let mut out = SectionGrid::zeros(dual, grid);
    for copy in 0..spec.copies {
        for alpha in 0..dual.sectors() {
            let src = spec.sector_index(-a * alpha as i64);
            let vals: Vec<C64> = f.block(copy, src).iter().map(|v| v.conj()).collect();
            out.block_mut(copy, alpha).copy_from_slice(&vals);
        }
    }
    Ok(out)
}

/// Inverse of [`sigma`]: `f(x, β) = conj g(x/rk, −dβ)` on `(L·rk, P)`.
pub fn sigma_inv(g: &SectionGrid, target: &BundleSpec) -> Result<SectionGrid> {
    require_dual_pair(&g.spec, target)?;
    let rk = target.rank();
    let d = target.d;
    let grid = Grid::new(g.grid.half_width * rk, g.grid.points)?;
    let mut out = SectionGrid::zeros(*target, grid);
    for copy in 0..target.copies {
        for beta in 0..target.sectors() {
            let src = g.spec.sector_index(-d * beta as i64);
            let vals: Vec<C64> = g.block(copy, src).iter().map(|v| v.conj()).collect();
            out.block_mut(copy, beta).copy_from_slice(&vals);
        }
    }
    Ok(out)
}

/// `σ` on `A_θ^{⊕n}`: the star of each copy.
pub fn sigma_modes(f: &ModeSection) -> ModeSection {
    f.map_parts(|p| p.star())
}

/// `b(f₁, f₂) = Σ_α ∫ f₁(x/rk, α) f₂(x, −aα) dx` with `f₁ ∈ E^∨`, `f₂ ∈ E`.
/// When `f₁` lives on `(L/rk, P)` its samples are used directly; otherwise it
/// is interpolated.
pub fn pairing_b(f1: &SectionGrid, f2: &SectionGrid) -> Result<C64> {
    let spec = f2.spec;
    if spec.c == 0 {
        return Err(Error::TrivialBundle("use pairing_b_modes on A_theta"));
    }
    require_dual_pair(&f1.spec, &spec)?;
    let rk = spec.rank();
    let (a, _) = spec.completion();
    let g2 = f2.grid;
    let matched = f1.grid.points == g2.points && (f1.grid.half_width * rk - g2.half_width).abs() <= 1e-12 * g2.half_width;
    let pts: Vec<f64> = g2.nodes().iter().map(|x| x / rk).collect();
    let mut s = ZERO;
    for copy in 0..spec.copies {
        for alpha in 0..f1.spec.sectors() {
            let v2 = f2.block(copy, spec.sector_index(-a * alpha as i64));
            let v1: Vec<C64> = if matched { f1.block(copy, alpha).to_vec() } else { f1.grid.interpolate(f1.block(copy, alpha), &pts) };
            s += v1.iter().zip(v2).map(|(p, q)| p * q).sum::<C64>();
        }
    }
    Ok(s * g2.spacing())
}

/// `b = tr(f₁ f₂)` summed over copies on `A_θ^{⊕n}`.
pub fn pairing_b_modes(f1: &ModeSection, f2: &ModeSection) -> Result<C64> {
    if f1.parts.len() != f2.parts.len() {
        return Err(Error::DimensionMismatch { left: f1.parts.len(), right: f2.parts.len() });
    }
    let mut s = ZERO;
    for (p, q) in f1.parts.iter().zip(&f2.parts) {
        s += p.mul(q)?.trace();
    }
    Ok(s)
}

/// `t(f₁, f₂)` truncated to a band, with its band-edge decay.
#[derive(Clone, Debug)]
pub struct PairingT {
    pub value: TorusElement,
    pub edge_magnitude: f64,
    /// Largest coefficient modulus in the band.
    pub peak: f64,
    /// Set when the band edge carries more than `1e−6·peak`.
    pub decay_warning: bool,
}

pub const DECAY_TOL: f64 = 1e-6;

/// `t(f₁, f₂) = Σ_{m,n} b(U₂^{−n}U₁^{−m} f₁, f₂) U₁^m U₂^n` over `|m|, |n| ≤ band`.
/// The words act on `E^∨` from the left through its own generators.
pub fn pairing_t(f1: &SectionGrid, f2: &SectionGrid, band: u32) -> Result<PairingT> {
    let spec = f2.spec;
    require_dual_pair(&f1.spec, &spec)?;
    let theta_left = f1.spec.theta_prime();
    let b = band as i64;
    let mut value = TorusElement::zero(spec.theta, 1, band);
    for m in -b..=b {
        for n in -b..=b {
            let w = TorusElement::monomial(theta_left, 0, -n, C64::new(1.0, 0.0))
                .mul(&TorusElement::monomial(theta_left, -m, 0, C64::new(1.0, 0.0)))?;
            let moved = apply_element_grid(f1, &w, Side::Left)?;
            let v = pairing_b(&moved, f2)?;
            if v != ZERO {
                value.set_scalar(m, n, v)?;
            }
        }
    }
    let edge_magnitude = value.band_edge_magnitude();
    let peak = value.iter().map(|(_, c)| c[(0, 0)].norm()).fold(0.0, f64::max);
    Ok(PairingT { value, edge_magnitude, peak, decay_warning: edge_magnitude > DECAY_TOL * peak.max(f64::MIN_POSITIVE) })
}

/// `∇̄_{E^∨}` on `E^∨ = E_{a,−c}(θ′)` with `z′ = −rk·z`; a left perturbation
/// `φ` becomes the right action of `−rk·φ`.
pub fn dual_structure(hs: &HoloStructure) -> Result<HoloStructure> {
    let rk = hs.spec.rank();
    let spec = hs.spec.dual()?;
    let base = HoloStructure::standard(spec, hs.tau, -hs.z * rk)?;
    match &hs.phi {
        None => Ok(base),
        Some(p) if p.side == Side::Left => base.with_perturbation(Perturbation {
            element: p.element.scale(C64::new(-rk, 0.0)),
            side: Side::Right,
        }),
        Some(_) => Err(Error::InvalidParameter("dual structures are built from left perturbations".into())),
    }
}

fn require_dual_structure(e: &HoloStructure, edual: &HoloStructure) -> Result<()> {
    let expected = dual_structure(e)?;
    require_dual_pair(&edual.spec, &e.spec)?;
    let close = |a: C64, b: C64| (a - b).norm() <= 1e-12 * (1.0 + a.norm());
    let phi_ok = match (&expected.phi, &edual.phi) {
        (None, None) => true,
        (Some(p), Some(q)) => p.side == q.side && p.element.sub(&q.element).is_ok_and(|d| d.l2_norm() <= 1e-12 * (1.0 + p.element.l2_norm())),
        _ => false,
    };
    if !close(expected.tau, edual.tau) || !close(expected.z, edual.z) || !phi_ok {
        return Err(Error::SpecMismatch("structure is not the dual of the given one".into()));
    }
    Ok(())
}

/// `max ‖∇̄_{E^∨} g + rk·σ ∇̄_E* σ⁻¹ g‖ / ‖∇̄_{E^∨} g‖` over seeded random
/// localized test sections `g`.
pub fn adjoint_identity_residual(e: &HoloStructure, edual: &HoloStructure, seed: u64) -> Result<f64> {
    require_dual_structure(e, edual)?;
    let rk = e.spec.rank();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..4 {
        if e.spec.c == 0 {
            let parts = (0..edual.spec.copies).map(|_| random_element(&mut rng, edual.spec.theta, 1, 3)).collect();
            let g = Section::Modes(ModeSection::new(edual.spec, parts)?);
            let Section::Modes(gm) = &g else { unreachable!() };
            let lhs = nabla_z(&g, edual)?;
            let back = nabla_z_adjoint(&Section::Modes(sigma_modes(gm)), e)?;
            let Section::Modes(back) = back else { unreachable!() };
            let rhs = sigma_modes(&back).map_parts(|p| p.scale(C64::new(rk, 0.0)));
            let Section::Modes(lhs) = lhs else { unreachable!() };
            worst = worst.max(lhs.add(&rhs)?.norm() / lhs.norm());
            continue;
        }
        let frame = edual.ladder_frame()?;
        let n = 6;
        let coeffs = (0..edual.spec.blocks() * n).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        let h = SectionHermite::from_coeffs(edual.spec, frame, n, coeffs)?;
        let grid = matched_grid(&frame, &e.ladder_frame()?, n + 4, rk, 0.0)?;
        let g = h.to_grid(grid);
        let Section::Grid(lhs) = nabla_z(&Section::Grid(g.clone()), edual)? else { unreachable!() };
        let Section::Grid(mid) = nabla_z_adjoint(&Section::Grid(sigma_inv(&g, &e.spec)?), e)? else { unreachable!() };
        let rhs = sigma(&mid)?.scale(C64::new(rk, 0.0));
        worst = worst.max(lhs.add(&rhs)?.norm() / lhs.norm());
    }
    Ok(worst)
}

/// A grid for sections of `E^∨` (frame `dual`) whose `σ⁻¹`-image on
/// `(L·rk, P)` resolves sections of `E` (frame `base`).
fn matched_grid(dual: &HermiteFrame, base: &HermiteFrame, count: usize, rk: f64, max_shift: f64) -> Result<Grid> {
    let l = (dual.extent(count) + max_shift).max((base.extent(count) + max_shift) / rk);
    let k = dual.max_frequency(count, l).max(base.max_frequency(count, l * rk) * rk) * 1.15;
    Grid::resolving(l, k)
}

/// Gram matrix of a Serre pairing and its nondegeneracy certificate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairingReport {
    /// Rows: classes on `E^∨`; columns: classes on `E`.
    pub gram_re: Vec<Vec<f64>>,
    pub gram_im: Vec<Vec<f64>>,
    pub rows: usize,
    pub cols: usize,
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub perfect: bool,
}

impl PairingReport {
    pub fn ratio(&self) -> f64 {
        if self.rows == 0 && self.cols == 0 {
            1.0
        } else if self.sigma_max > 0.0 {
            self.sigma_min / self.sigma_max
        } else {
            0.0
        }
    }
}

pub const SERRE_REL_THRESHOLD: f64 = 1e-6;

fn report_from(gram: DMatrix<C64>) -> PairingReport {
    let (rows, cols) = gram.shape();
    let sv: Vec<f64> = if rows > 0 && cols > 0 { gram.clone().singular_values().iter().cloned().collect() } else { Vec::new() };
    let sigma_max = sv.iter().cloned().fold(0.0, f64::max);
    let sigma_min = if rows == cols { sv.iter().cloned().fold(f64::INFINITY, f64::min) } else { 0.0 };
    let sigma_min = if sigma_min.is_infinite() { 0.0 } else { sigma_min };
    let perfect = rows == cols && (rows == 0 || sigma_min >= SERRE_REL_THRESHOLD * sigma_max);
    PairingReport {
        gram_re: (0..rows).map(|i| (0..cols).map(|j| gram[(i, j)].re).collect()).collect(),
        gram_im: (0..rows).map(|i| (0..cols).map(|j| gram[(i, j)].im).collect()).collect(),
        rows,
        cols,
        sigma_min,
        sigma_max,
        perfect,
    }
}

/// The Serre pairing between `H^i(E)` and `H^{1−i}(E^∨)` on harmonic
/// representatives, through `b = tr∘t`.
pub fn serre_gram(e: &HoloStructure, i: u8, opts: &CohomologyOptions) -> Result<PairingReport> {
    if i > 1 {
        return Err(Error::InvalidParameter(format!("cohomological degree {i}")));
    }
    let edual = dual_structure(e)?;
    let ce = cohomology(e, opts)?;
    let cd = cohomology(&edual, opts)?;
    serre_gram_from(e, &edual, &ce, &cd, i)
}

/// As [`serre_gram`] with precomputed cohomology of `E` and `E^∨`.
pub fn serre_gram_from(e: &HoloStructure, edual: &HoloStructure, ce: &CohomologyResult, cd: &CohomologyResult, i: u8) -> Result<PairingReport> {
    let (on_e, on_dual) = if i == 0 { (&ce.harmonic0, &cd.harmonic1) } else { (&ce.harmonic1, &cd.harmonic0) };
    let mut gram = DMatrix::zeros(on_dual.len(), on_e.len());
    if on_e.is_empty() || on_dual.is_empty() {
        return Ok(report_from(gram));
    }
    if e.spec.c == 0 {
        for (r, g) in on_dual.iter().enumerate() {
            for (s, f) in on_e.iter().enumerate() {
                let (Section::Modes(g), Section::Modes(f)) = (g, f) else {
                    return Err(Error::Representation("harmonic forms of A_theta are mode sections".into()));
                };
                gram[(r, s)] = pairing_b_modes(g, f)?;
            }
        }
        return Ok(report_from(gram));
    }
    let fe = e.ladder_frame()?;
    let fd = edual.ladder_frame()?;
    let count = match &on_e[0] {
        Section::Hermite(h) => h.n,
        _ => return Err(Error::Representation("harmonic forms are ladder-frame sections".into())),
    };
    let rk = e.spec.rank();
    let grid_d = matched_grid(&fd, &fe, count, rk, 0.0)?;
    let grid_e = Grid::new(grid_d.half_width * rk, grid_d.points)?;
    let to_grid = |s: &Section, g: Grid| -> Result<SectionGrid> {
        match s {
            Section::Hermite(h) => Ok(h.to_grid(g)),
            Section::Grid(x) => Ok(x.clone()),
            Section::Modes(_) => Err(Error::Representation("mode section on a nontrivial bundle".into())),
        }
    };
    let fs: Vec<SectionGrid> = on_e.iter().map(|s| to_grid(s, grid_e)).collect::<Result<_>>()?;
    let gs: Vec<SectionGrid> = on_dual.iter().map(|s| to_grid(s, grid_d)).collect::<Result<_>>()?;
    for (r, g) in gs.iter().enumerate() {
        for (s, f) in fs.iter().enumerate() {
            gram[(r, s)] = pairing_b(g, f)?;
        }
    }
    Ok(report_from(gram))
}

/// Frame norms of sections in the Hermite representation, for diagnostics.
pub fn harmonic_norms(r: &CohomologyResult) -> (Vec<f64>, Vec<f64>) {
    (r.harmonic0.iter().map(section_norm).collect(), r.harmonic1.iter().map(section_norm).collect())
}
