//! The standard modules `E_{d,c}(θ)^{⊕n} = 𝒮(ℝ × ℤ/cℤ)^{⊕n}` with the right
//! `A_θ`-action, the left `A_{θ′}`-action and three finite representations:
//! samples on a periodized grid, coefficients in a (possibly gauge-twisted)
//! Hermite basis, and Fourier modes for the trivial module `A_θ` (`c = 0`).

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::algebra::{cis_turns, TorusElement, C64};
use crate::chern::{complete_sl2, gcd, ChernPair};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::hermite::{self, gauss_hermite, required_order};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Left,
    Right,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Generator {
    U1,
    U2,
}

/// `E_{d,c}(θ)^{⊕copies}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BundleSpec {
    pub c: i64,
    pub d: i64,
    pub theta: f64,
    pub copies: usize,
}

impl BundleSpec {
    pub fn new(c: i64, d: i64, theta: f64, copies: usize) -> Result<Self> {
        if gcd(c, d) != 1 {
            return Err(Error::NotCoprime { c, d });
        }
        if c == 0 && d != 1 {
            return Err(Error::InvalidParameter("the trivial module needs (c, d) = (0, 1)".into()));
        }
        if copies == 0 {
            return Err(Error::InvalidParameter("copies must be positive".into()));
        }
        let rank = c as f64 * theta + d as f64;
        if !(rank > 0.0) {
            return Err(Error::NonPositiveRank { c, d, rank });
        }
        Ok(BundleSpec { c, d, theta, copies })
    }

    pub fn trivial(theta: f64, copies: usize) -> Result<Self> {
        Self::new(0, 1, theta, copies)
    }

    pub fn from_pair(pair: &ChernPair, theta: f64) -> Result<Self> {
        Self::new(pair.c, pair.d, theta, pair.copies as usize)
    }

    pub fn pair(&self) -> ChernPair {
        ChernPair::with_copies(self.c, self.d, self.copies as u32)
    }

    pub fn rank(&self) -> f64 {
        self.c as f64 * self.theta + self.d as f64
    }

    pub fn mu(&self) -> f64 {
        self.c as f64 / self.rank()
    }

    pub fn sectors(&self) -> usize {
        self.c.unsigned_abs().max(1) as usize
    }

    pub fn blocks(&self) -> usize {
        self.sectors() * self.copies
    }

    pub fn completion(&self) -> (i64, i64) {
        complete_sl2(self.c, self.d).expect("validated at construction")
    }

    /// Parameter of the endomorphism algebra (the left action).
    pub fn theta_prime(&self) -> f64 {
        let (a, b) = self.completion();
        (a as f64 * self.theta + b as f64) / self.rank()
    }

    /// `E^∨ ≅ E_{a,−c}(θ′)` with the same number of copies.
    pub fn dual(&self) -> Result<BundleSpec> {
        let (a, _) = self.completion();
        if self.c == 0 {
            return Ok(*self);
        }
        BundleSpec::new(-self.c, a, self.theta_prime(), self.copies)
    }

    pub fn sector_index(&self, alpha: i64) -> usize {
        alpha.rem_euclid(self.sectors() as i64) as usize
    }

    fn same_module(&self, other: &BundleSpec) -> Result<()> {
        if self != other {
            return Err(Error::SpecMismatch(format!(
                "E_({},{})^{} over {} vs E_({},{})^{} over {}",
                self.d, self.c, self.copies, self.theta, other.d, other.c, other.copies, other.theta
            )));
        }
        Ok(())
    }

    pub(crate) fn check_element(&self, a: &TorusElement, side: Side) -> Result<()> {
        let expected = match side {
            Side::Right => self.theta,
            Side::Left => self.theta_prime(),
        };
        if (a.theta() - expected).abs() > 1e-12 * (1.0 + expected.abs()) {
            return Err(Error::AlgebraMismatch { left: expected, right: a.theta() });
        }
        if a.k() != 1 && a.k() != self.copies {
            return Err(Error::DimensionMismatch { left: self.copies, right: a.k() });
        }
        Ok(())
    }
}

/// Samples `f(x_j, α)` for every copy and sector.
#[derive(Clone, Debug, PartialEq)]
pub struct SectionGrid {
    pub spec: BundleSpec,
    pub grid: Grid,
    values: Vec<C64>,
}

impl SectionGrid {
    pub fn zeros(spec: BundleSpec, grid: Grid) -> Self {
        let n = spec.blocks() * grid.points;
        SectionGrid { spec, grid, values: vec![C64::new(0.0, 0.0); n] }
    }

    pub fn from_fn(spec: BundleSpec, grid: Grid, f: impl Fn(usize, usize, f64) -> C64) -> Self {
        let mut s = Self::zeros(spec, grid);
        for copy in 0..spec.copies {
            for sector in 0..spec.sectors() {
                for (j, v) in s.block_mut(copy, sector).iter_mut().enumerate() {
                    *v = f(copy, sector, grid.x(j));
                }
            }
        }
        s
    }

    pub fn from_values(spec: BundleSpec, grid: Grid, values: Vec<C64>) -> Result<Self> {
        if values.len() != spec.blocks() * grid.points {
            return Err(Error::DimensionMismatch { left: spec.blocks() * grid.points, right: values.len() });
        }
        Ok(SectionGrid { spec, grid, values })
    }

    fn offset(&self, copy: usize, sector: usize) -> usize {
        (copy * self.spec.sectors() + sector) * self.grid.points
    }

    pub fn block(&self, copy: usize, sector: usize) -> &[C64] {
        let o = self.offset(copy, sector);
        &self.values[o..o + self.grid.points]
    }

    pub fn block_mut(&mut self, copy: usize, sector: usize) -> &mut [C64] {
        let o = self.offset(copy, sector);
        let p = self.grid.points;
        &mut self.values[o..o + p]
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    fn compatible(&self, other: &SectionGrid) -> Result<()> {
        self.spec.same_module(&other.spec)?;
        let (g, h) = (self.grid, other.grid);
        if g.points != h.points || (g.half_width - h.half_width).abs() > 1e-12 * g.half_width {
            return Err(Error::Representation(format!("grids differ: {:?} vs {:?}", self.grid, other.grid)));
        }
        Ok(())
    }

    pub fn add(&self, other: &SectionGrid) -> Result<SectionGrid> {
        self.compatible(other)?;
        let mut out = self.clone();
        for (a, b) in out.values.iter_mut().zip(&other.values) {
            *a += b;
        }
        Ok(out)
    }

    pub fn sub(&self, other: &SectionGrid) -> Result<SectionGrid> {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, s: C64) -> SectionGrid {
        let mut out = self.clone();
        for a in &mut out.values {
            *a *= s;
        }
        out
    }

    /// `Σ_α ∫ f₁ conj(f₂) dx` by the trapezoid rule.
    pub fn inner(&self, other: &SectionGrid) -> Result<C64> {
        self.compatible(other)?;
        Ok(self.grid.inner(&self.values, &other.values))
    }

    pub fn norm(&self) -> f64 {
        self.grid.norm(&self.values)
    }

    pub fn max_abs_diff(&self, other: &SectionGrid) -> Result<f64> {
        self.compatible(other)?;
        Ok(self.values.iter().zip(&other.values).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max))
    }

    /// Apply `g` to every block independently.
    pub fn map_blocks(&self, mut g: impl FnMut(usize, usize, &[C64]) -> Result<Vec<C64>>) -> Result<SectionGrid> {
        let mut out = Self::zeros(self.spec, self.grid);
        for copy in 0..self.spec.copies {
            for sector in 0..self.spec.sectors() {
                let v = g(copy, sector, self.block(copy, sector))?;
                out.block_mut(copy, sector).copy_from_slice(&v);
            }
        }
        Ok(out)
    }

    /// Spectral derivative in `x` of every block.
    pub fn derivative(&self) -> SectionGrid {
        self.map_blocks(|_, _, b| Ok(self.grid.derivative(b))).expect("infallible")
    }

    /// Multiply every sample by `w(sector, x)`.
    pub fn multiply(&self, w: impl Fn(usize, f64) -> C64) -> SectionGrid {
        let grid = self.grid;
        self.map_blocks(|_, sector, b| Ok(b.iter().enumerate().map(|(j, v)| v * w(sector, grid.x(j))).collect()))
            .expect("infallible")
    }

    /// Writes `copy,sector,x,re,im` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["copy", "sector", "x", "re", "im"]).map_err(csv_err)?;
        for copy in 0..self.spec.copies {
            for sector in 0..self.spec.sectors() {
                for (j, v) in self.block(copy, sector).iter().enumerate() {
                    w.write_record(&[
                        copy.to_string(),
                        sector.to_string(),
                        format!("{:.17e}", self.grid.x(j)),
                        format!("{:.17e}", v.re),
                        format!("{:.17e}", v.im),
                    ])
                    .map_err(csv_err)?;
                }
            }
        }
        w.flush().map_err(|e| Error::Serialization(e.to_string()))?;
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Serialization(e.to_string())
}

/// Right generator `U₁`: `fU₁(x, α) = f(x − 1/μ, α − 1)`.
pub fn act_u1(f: &SectionGrid) -> Result<SectionGrid> {
    require_nontrivial(&f.spec)?;
    apply_word(f, 1, 0, Side::Right)
}

/// Right generator `U₂`: `fU₂(x, α) = e^{2πi(x − αd/c)} f(x, α)`.
pub fn act_u2(f: &SectionGrid) -> Result<SectionGrid> {
    require_nontrivial(&f.spec)?;
    apply_word(f, 0, 1, Side::Right)
}

/// Left generators of `A_{θ′}`: `U₁f(x, α) = f(x − 1/c, α − a)`,
/// `U₂f(x, α) = e^{2πi(x/(cθ+d) − α/c)} f(x, α)`.
pub fn act_left(f: &SectionGrid, gen: Generator) -> Result<SectionGrid> {
    require_nontrivial(&f.spec)?;
    match gen {
        Generator::U1 => apply_word(f, 1, 0, Side::Left),
        Generator::U2 => apply_word(f, 0, 1, Side::Left),
    }
}

fn require_nontrivial(spec: &BundleSpec) -> Result<()> {
    if spec.c == 0 {
        Err(Error::TrivialBundle("grid sections need c != 0; use mode sections for A_theta"))
    } else {
        Ok(())
    }
}

fn apply_word(f: &SectionGrid, m: i64, n: i64, side: Side) -> Result<SectionGrid> {
    let a = TorusElement::monomial(
        match side {
            Side::Right => f.spec.theta,
            Side::Left => f.spec.theta_prime(),
        },
        m,
        n,
        C64::new(1.0, 0.0),
    );
    apply_element_grid(f, &a, side)
}

/// Geometry of the word `U₁^m U₂^n` on a grid section: the translation in
/// `x`, the sector offset, and the modulation phase (in turns) at `(x, α)`.
struct WordGeometry {
    spec: BundleSpec,
    side: Side,
}

impl WordGeometry {
    fn translation(&self, m: i64) -> f64 {
        match self.side {
            Side::Right => m as f64 / self.spec.mu(),
            Side::Left => m as f64 / self.spec.c as f64,
        }
    }

    fn sector_offset(&self, m: i64) -> i64 {
        match self.side {
            Side::Right => m,
            Side::Left => m * self.spec.completion().0,
        }
    }

    fn phase_turns(&self, m: i64, n: i64, alpha: i64, x: f64) -> f64 {
        let c = self.spec.c as f64;
        match self.side {
            // (f U₁^m) U₂^n
            Side::Right => n as f64 * (x - alpha as f64 * self.spec.d as f64 / c),
            // U₁^m (U₂^n f)
            Side::Left => {
                let a = self.spec.completion().0;
                n as f64 * ((x - m as f64 / c) / self.spec.rank() - (alpha - m * a) as f64 / c)
            }
        }
    }
}

/// `f ↦ f·a` (right, over `θ`) or `f ↦ a·f` (left, over `θ′`). Matrix
/// coefficients mix copies: `(f·a)_j = Σ_i f_i a_{ij}`, `(a·f)_i = Σ_j a_{ij} f_j`.
pub fn apply_element_grid(f: &SectionGrid, a: &TorusElement, side: Side) -> Result<SectionGrid> {
    let spec = f.spec;
    require_nontrivial(&spec)?;
    spec.check_element(a, side)?;
    let grid = f.grid;
    let geo = WordGeometry { spec, side };
    let sectors = spec.sectors();
    let copies = spec.copies;
    let k = a.k();

    let mut by_m: BTreeMap<i64, Vec<(i64, &crate::algebra::CMat)>> = BTreeMap::new();
    for (&(m, n), coef) in a.iter() {
        by_m.entry(m).or_default().push((n, coef));
    }

    let nonzero: Vec<bool> = (0..copies * sectors)
        .map(|b| f.values[b * grid.points..(b + 1) * grid.points].iter().any(|v| *v != C64::new(0.0, 0.0)))
        .collect();
    let spectra: Vec<Option<Vec<C64>>> = (0..copies * sectors)
        .map(|b| nonzero[b].then(|| grid.fft(&f.values[b * grid.points..(b + 1) * grid.points])))
        .collect();

    let mut out = SectionGrid::zeros(spec, grid);
    let xs = grid.nodes();
    for (&m, terms) in &by_m {
        let t = geo.translation(m);
        if t.abs() >= grid.half_width {
            return Err(Error::GridTooSmall { shift: t, half_width: grid.half_width });
        }
        let off = geo.sector_offset(m);
        // translated[src_copy][out_sector] = f_src(x − t, α − off)
        let mut translated: Vec<Vec<Option<Vec<C64>>>> = vec![vec![None; sectors]; copies];
        for (src, row) in translated.iter_mut().enumerate() {
            for (alpha, slot) in row.iter_mut().enumerate() {
                let from = spec.sector_index(alpha as i64 - off);
                if let Some(sp) = &spectra[src * sectors + from] {
                    let mut s = sp.clone();
                    grid.shift_spectrum(&mut s, t);
                    *slot = Some(grid.ifft(&s));
                }
            }
        }
        for &(n, coef) in terms {
            for alpha in 0..sectors {
                if translated.iter().all(|row| row[alpha].is_none()) {
                    continue;
                }
                let phase: Vec<C64> = xs.iter().map(|&x| cis_turns(geo.phase_turns(m, n, alpha as i64, x))).collect();
                for src in 0..copies {
                    let Some(tv) = &translated[src][alpha] else { continue };
                    for dst in 0..copies {
                        let w = if k == 1 {
                            if src != dst {
                                continue;
                            }
                            coef[(0, 0)]
                        } else {
                            match side {
                                Side::Right => coef[(src, dst)],
                                Side::Left => coef[(dst, src)],
                            }
                        };
                        if w == C64::new(0.0, 0.0) {
                            continue;
                        }
                        let blk = out.block_mut(dst, alpha);
                        for j in 0..grid.points {
                            blk[j] += w * phase[j] * tv[j];
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Elements of `A_θ^{⊕copies}`, one scalar series per copy.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeSection {
    pub spec: BundleSpec,
    pub parts: Vec<TorusElement>,
}

impl ModeSection {
    pub fn new(spec: BundleSpec, parts: Vec<TorusElement>) -> Result<Self> {
        if spec.c != 0 {
            return Err(Error::Representation("mode sections describe the trivial module only".into()));
        }
        if parts.len() != spec.copies {
            return Err(Error::DimensionMismatch { left: spec.copies, right: parts.len() });
        }
        for p in &parts {
            if p.k() != 1 || p.theta() != spec.theta {
                return Err(Error::Representation("mode sections hold scalar series over theta".into()));
            }
        }
        Ok(ModeSection { spec, parts })
    }

    pub fn inner(&self, other: &ModeSection) -> Result<C64> {
        self.spec.same_module(&other.spec)?;
        let mut s = C64::new(0.0, 0.0);
        for (a, b) in self.parts.iter().zip(&other.parts) {
            for (key, v) in a.iter() {
                s += v[(0, 0)] * b.scalar_coeff(key.0, key.1).conj();
            }
        }
        Ok(s)
    }

    pub fn norm(&self) -> f64 {
        self.parts.iter().map(|p| p.l2_norm().powi(2)).sum::<f64>().sqrt()
    }

    pub fn map_parts(&self, f: impl Fn(&TorusElement) -> TorusElement) -> ModeSection {
        ModeSection { spec: self.spec, parts: self.parts.iter().map(f).collect() }
    }

    pub fn add(&self, other: &ModeSection) -> Result<ModeSection> {
        self.spec.same_module(&other.spec)?;
        let parts = self.parts.iter().zip(&other.parts).map(|(a, b)| a.add(b)).collect::<Result<_>>()?;
        Ok(ModeSection { spec: self.spec, parts })
    }
}

/// Scalar entry `(i, j)` of a matrix-coefficient element.
pub fn matrix_entry(a: &TorusElement, i: usize, j: usize) -> TorusElement {
    let mut e = TorusElement::zero(a.theta(), 1, a.band());
    for (&(m, n), c) in a.iter() {
        let v = if a.k() == 1 {
            if i == j {
                c[(0, 0)]
            } else {
                C64::new(0.0, 0.0)
            }
        } else {
            c[(i, j)]
        };
        if v != C64::new(0.0, 0.0) {
            e.set_scalar(m, n, v).expect("inside band");
        }
    }
    e
}

pub fn apply_element_modes(f: &ModeSection, a: &TorusElement, side: Side) -> Result<ModeSection> {
    f.spec.check_element(a, side)?;
    let n = f.spec.copies;
    let mut parts = Vec::with_capacity(n);
    for out in 0..n {
        let mut acc = TorusElement::zero(f.spec.theta, 1, 0);
        for src in 0..n {
            let entry = match side {
                Side::Right => matrix_entry(a, src, out),
                Side::Left => matrix_entry(a, out, src),
            };
            if entry.num_terms() == 0 {
                continue;
            }
            let term = match side {
                Side::Right => f.parts[src].mul(&entry)?,
                Side::Left => entry.mul(&f.parts[src])?,
            };
            acc = acc.add(&term)?;
        }
        parts.push(acc);
    }
    Ok(ModeSection { spec: f.spec, parts })
}

/// A gauge-twisted Hermite frame: basis functions
/// `b_n(x) = e^{−iκx²/2 − i·drift·x} h_n(x + shift)` with `h_n` of width `|λ|`.
/// `kappa = shift = drift = 0` is the plain basis `e_n = f_n/‖f_n‖`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HermiteFrame {
    pub lambda: f64,
    pub kappa: f64,
    pub shift: f64,
    pub drift: f64,
}

impl HermiteFrame {
    pub fn plain(lambda: f64) -> Self {
        HermiteFrame { lambda, kappa: 0.0, shift: 0.0, drift: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.lambda == 0.0 || !self.lambda.is_finite() {
            return Err(Error::InvalidParameter(format!("Hermite width lambda = {}", self.lambda)));
        }
        Ok(())
    }

    /// `b_0(x), …, b_{count−1}(x)`.
    pub fn basis_values(&self, count: usize, x: f64) -> Vec<C64> {
        let h = hermite::scaled_hermite_functions(count, self.lambda, x + self.shift);
        let ph = C64::from_polar(1.0, -0.5 * self.kappa * x * x - self.drift * x);
        h.into_iter().map(|v| ph * v).collect()
    }

    /// `(Gf)(y) = e^{i·drift(y−s)} e^{iκ(y−s)²/2} f(y − s)` maps the frame onto
    /// plain Hermite functions; returns the source point and the phase.
    fn pullback(&self, y: f64) -> (f64, C64) {
        let x = y - self.shift;
        (x, C64::from_polar(1.0, self.drift * x + 0.5 * self.kappa * x * x))
    }

    /// Half-width containing the first `count` basis functions to ~1e−16.
    pub fn extent(&self, count: usize) -> f64 {
        ((2.0 * count as f64 + 1.0).sqrt() + 9.0) / self.lambda.abs().sqrt() + self.shift.abs()
    }

    /// Largest angular frequency present in the first `count` basis functions
    /// over `[-half_width, half_width]`.
    pub fn max_frequency(&self, count: usize, half_width: f64) -> f64 {
        ((2.0 * count as f64 + 1.0).sqrt() + 9.0) * self.lambda.abs().sqrt()
            + self.kappa.abs() * half_width
            + self.drift.abs()
    }

    /// A grid that resolves the first `count` basis functions after translations
    /// up to `max_shift` and modulations up to `extra_frequency`.
    pub fn grid_for(&self, count: usize, max_shift: f64, extra_frequency: f64) -> Result<Grid> {
        let l = self.extent(count) + max_shift;
        let k = self.max_frequency(count, l) + extra_frequency;
        Grid::resolving(l, k * 1.15)
    }
}

/// Coefficients in an orthonormal Hermite frame, laid out `[copy][sector][n]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SectionHermite {
    pub spec: BundleSpec,
    pub frame: HermiteFrame,
    pub n: usize,
    coeffs: Vec<C64>,
}

impl SectionHermite {
    pub fn zeros(spec: BundleSpec, frame: HermiteFrame, n: usize) -> Self {
        SectionHermite { spec, frame, n, coeffs: vec![C64::new(0.0, 0.0); spec.blocks() * n] }
    }

    pub fn from_coeffs(spec: BundleSpec, frame: HermiteFrame, n: usize, coeffs: Vec<C64>) -> Result<Self> {
        frame.validate()?;
        if coeffs.len() != spec.blocks() * n {
            return Err(Error::DimensionMismatch { left: spec.blocks() * n, right: coeffs.len() });
        }
        Ok(SectionHermite { spec, frame, n, coeffs })
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn block(&self, copy: usize, sector: usize) -> &[C64] {
        let o = (copy * self.spec.sectors() + sector) * self.n;
        &self.coeffs[o..o + self.n]
    }

    pub fn block_mut(&mut self, copy: usize, sector: usize) -> &mut [C64] {
        let o = (copy * self.spec.sectors() + sector) * self.n;
        let n = self.n;
        &mut self.coeffs[o..o + n]
    }

    /// Coefficient of the unnormalized `f_n` (plain frames).
    pub fn unnormalized_coeff(&self, copy: usize, sector: usize, n: usize) -> Result<C64> {
        Ok(self.block(copy, sector)[n] / hermite::norm_sq(n, self.frame.lambda)?.sqrt())
    }

    pub fn eval(&self, copy: usize, sector: usize, x: f64) -> C64 {
        let b = self.frame.basis_values(self.n, x);
        self.block(copy, sector).iter().zip(&b).map(|(c, v)| c * v).sum()
    }

    pub fn to_grid(&self, grid: Grid) -> SectionGrid {
        let mut out = SectionGrid::zeros(self.spec, grid);
        for j in 0..grid.points {
            let b = self.frame.basis_values(self.n, grid.x(j));
            for copy in 0..self.spec.copies {
                for sector in 0..self.spec.sectors() {
                    let v: C64 = self.block(copy, sector).iter().zip(&b).map(|(c, v)| c * v).sum();
                    out.block_mut(copy, sector)[j] = v;
                }
            }
        }
        out
    }

    pub fn inner(&self, other: &SectionHermite) -> Result<C64> {
        self.spec.same_module(&other.spec)?;
        if self.frame != other.frame || self.n != other.n {
            return Err(Error::Representation("Hermite sections in different frames".into()));
        }
        Ok(self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a * b.conj()).sum())
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn to_json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct J<'a> {
            spec: &'a BundleSpec,
            frame: &'a HermiteFrame,
            n: usize,
            re: Vec<f64>,
            im: Vec<f64>,
        }
        let j = J {
            spec: &self.spec,
            frame: &self.frame,
            n: self.n,
            re: self.coeffs.iter().map(|c| c.re).collect(),
            im: self.coeffs.iter().map(|c| c.im).collect(),
        };
        Ok(serde_json::to_string_pretty(&j)?)
    }
}

/// Project grid data onto the first `n` functions of `frame` using a
/// Gauss–Hermite rule of order `2n + 8`.
pub fn to_hermite(f: &SectionGrid, n: usize, frame: HermiteFrame) -> Result<SectionHermite> {
    to_hermite_with_order(f, n, frame, required_order(n))
}

pub fn to_hermite_with_order(f: &SectionGrid, n: usize, frame: HermiteFrame, order: usize) -> Result<SectionHermite> {
    frame.validate()?;
    if order < required_order(n) {
        return Err(Error::QuadratureTooSmall { order, n, suggested: order.saturating_sub(8) / 2 });
    }
    let rule = gauss_hermite(order);
    let l = frame.lambda.abs();
    let sl = l.sqrt();
    let scale = l.powf(-0.25);
    let mut out = SectionHermite::zeros(f.spec, frame, n);
    let (points, phases): (Vec<f64>, Vec<C64>) = rule.nodes.iter().map(|&t| frame.pullback(t / sl)).unzip();
    let psi: Vec<Vec<f64>> = rule.nodes.iter().map(|&t| hermite::hermite_functions(n, t)).collect();
    for copy in 0..f.spec.copies {
        for sector in 0..f.spec.sectors() {
            let vals = f.grid.interpolate(f.block(copy, sector), &points);
            let blk = out.block_mut(copy, sector);
            for (k, v) in vals.iter().enumerate() {
                let g = v * phases[k] * rule.weights[k] * scale;
                for (c, p) in blk.iter_mut().zip(&psi[k]) {
                    *c += g * p;
                }
            }
        }
    }
    Ok(out)
}

/// The unnormalized basis function `f_n` in copy 0, sector 0, as an element of a
/// width-`λ` Hermite section truncated at `truncation`.
pub fn hermite_basis(spec: BundleSpec, n: usize, lambda: f64, truncation: usize) -> Result<SectionHermite> {
    if n >= truncation {
        return Err(Error::InvalidParameter(format!("basis index {n} beyond truncation {truncation}")));
    }
    let frame = HermiteFrame::plain(lambda);
    frame.validate()?;
    let mut s = SectionHermite::zeros(spec, frame, truncation);
    s.block_mut(0, 0)[n] = C64::new(hermite::norm_sq(n, lambda)?.sqrt(), 0.0);
    Ok(s)
}

pub use hermite::norm_sq;

/// Any of the three representations.
#[derive(Clone, Debug, PartialEq)]
pub enum Section {
    Grid(SectionGrid),
    Hermite(SectionHermite),
    Modes(ModeSection),
}

impl Section {
    pub fn spec(&self) -> &BundleSpec {
        match self {
            Section::Grid(s) => &s.spec,
            Section::Hermite(s) => &s.spec,
            Section::Modes(s) => &s.spec,
        }
    }
}

/// Linear extension of the generator actions. Hermite sections are routed
/// through a grid that resolves their frame and projected back.
pub fn apply_torus_element(f: &Section, a: &TorusElement, side: Side) -> Result<Section> {
    match f {
        Section::Grid(g) => Ok(Section::Grid(apply_element_grid(g, a, side)?)),
        Section::Modes(m) => Ok(Section::Modes(apply_element_modes(m, a, side)?)),
        Section::Hermite(h) => {
            let spec = h.spec;
            let band = a.band() as f64;
            let (shift, freq) = match side {
                Side::Right => (band / spec.mu().abs(), 2.0 * PI * band),
                Side::Left => (band / spec.c.unsigned_abs() as f64, 2.0 * PI * band / spec.rank()),
            };
            let grid = h.frame.grid_for(h.n, shift, freq)?;
            let g = apply_element_grid(&h.to_grid(grid), a, side)?;
            Ok(Section::Hermite(to_hermite(&g, h.n, h.frame)?))
        }
    }
}

/// Localization diagnostics for grid data.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    /// Fraction of `‖f‖²` carried by `|x| > L/2`.
    pub outer_mass: f64,
    /// Largest sample modulus in the outermost 1% of the grid on either side.
    pub edge_max: f64,
    /// Fraction of spectral energy in the top eighth of the frequency range.
    pub spectral_tail: f64,
    pub ok: bool,
}

pub fn tail_report(f: &SectionGrid, tol: f64) -> TailReport {
    let g = f.grid;
    let mut total = 0.0;
    let mut outer = 0.0;
    let mut edge_max: f64 = 0.0;
    let mut spec_total = 0.0;
    let mut spec_tail = 0.0;
    let edge = (g.points / 100).max(1);
    let p = g.points;
    for copy in 0..f.spec.copies {
        for sector in 0..f.spec.sectors() {
            let b = f.block(copy, sector);
            for (j, v) in b.iter().enumerate() {
                let w = v.norm_sqr();
                total += w;
                if g.x(j).abs() > g.half_width / 2.0 {
                    outer += w;
                }
                if j < edge || j >= p - edge {
                    edge_max = edge_max.max(v.norm());
                }
            }
            for (j, v) in g.fft(b).iter().enumerate() {
                let w = v.norm_sqr();
                spec_total += w;
                let k = if j < p / 2 { j } else { p - j };
                if k >= p / 2 - p / 16 {
                    spec_tail += w;
                }
            }
        }
    }
    let outer_mass = if total > 0.0 { outer / total } else { 0.0 };
    let spectral_tail = if spec_total > 0.0 { spec_tail / spec_total } else { 0.0 };
    TailReport { outer_mass, edge_max, spectral_tail, ok: outer_mass < tol && spectral_tail < tol }
}

#[cfg(test)]
mod tests {
    use super::*;

    const THETA: f64 = std::f64::consts::SQRT_2 - 1.0;

    fn gaussian(spec: BundleSpec, grid: Grid, x0: f64) -> SectionGrid {
        SectionGrid::from_fn(spec, grid, |copy, sector, x| {
            let y = x - x0 - 0.1 * sector as f64;
            C64::new(1.0, 0.1 * y) * (-(y * y) / 2.0).exp() * (1.0 + copy as f64)
        })
    }

    #[test]
    fn spec_validation() {
        assert!(BundleSpec::new(2, 4, THETA, 1).is_err());
        assert!(BundleSpec::new(-3, 1, THETA, 1).is_err());
        assert!(BundleSpec::new(0, 2, THETA, 1).is_err());
        let s = BundleSpec::new(3, 2, THETA, 2).unwrap();
        assert_eq!(s.sectors(), 3);
        assert_eq!(s.blocks(), 6);
        assert_eq!(s.dual().unwrap().c, -3);
    }

    #[test]
    fn u1_twice_is_translation_by_two_over_mu() {
        let spec = BundleSpec::new(1, 1, THETA, 1).unwrap();
        let g = Grid::default();
        let f = SectionGrid::from_fn(spec, g, |_, _, x| C64::new((-x * x / 2.0).exp(), 0.0));
        let twice = act_u1(&act_u1(&f).unwrap()).unwrap();
        let s = 2.0 / spec.mu();
        let direct = SectionGrid::from_fn(spec, g, |_, _, x| C64::new((-(x - s) * (x - s) / 2.0).exp(), 0.0));
        assert!(twice.max_abs_diff(&direct).unwrap() < 1e-9);
    }

    #[test]
    fn u2_at_sector_zero_is_plain_modulation() {
        let spec = BundleSpec::new(3, 2, THETA, 1).unwrap();
        let g = Grid::default();
        let f = gaussian(spec, g, 0.0);
        let h = act_u2(&f).unwrap();
        for j in 0..g.points {
            let e = f.block(0, 0)[j] * C64::from_polar(1.0, 2.0 * PI * g.x(j));
            assert!((h.block(0, 0)[j] - e).norm() < 1e-14);
            for s in 0..3 {
                assert!((h.block(0, s)[j].norm() - f.block(0, s)[j].norm()).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn right_and_left_relations() {
        for (c, d) in [(1, 1), (3, 2), (-1, 2), (2, 1), (-2, 3)] {
            let spec = BundleSpec::new(c, d, THETA, 1).unwrap();
            let g = Grid::default();
            let f = gaussian(spec, g, 0.2);
            let q = cis_turns(THETA);
            let lhs = act_u2(&act_u1(&f).unwrap()).unwrap();
            let rhs = act_u1(&act_u2(&f).unwrap()).unwrap().scale(q);
            assert!(lhs.max_abs_diff(&rhs).unwrap() < 1e-9, "right ({c},{d})");

            let qp = cis_turns(spec.theta_prime());
            let lhs = act_left(&act_left(&f, Generator::U2).unwrap(), Generator::U1).unwrap();
            let rhs = act_left(&act_left(&f, Generator::U1).unwrap(), Generator::U2).unwrap().scale(qp);
            assert!(lhs.max_abs_diff(&rhs).unwrap() < 1e-9, "left ({c},{d})");

            for gen in [Generator::U1, Generator::U2] {
                let a = act_u1(&act_left(&f, gen).unwrap()).unwrap();
                let b = act_left(&act_u1(&f).unwrap(), gen).unwrap();
                assert!(a.max_abs_diff(&b).unwrap() < 1e-9);
                let a = act_u2(&act_left(&f, gen).unwrap()).unwrap();
                let b = act_left(&act_u2(&f).unwrap(), gen).unwrap();
                assert!(a.max_abs_diff(&b).unwrap() < 1e-9);
            }
        }
    }

    #[test]
    fn grid_too_small() {
        let spec = BundleSpec::new(1, 1, THETA, 1).unwrap();
        let g = Grid::new(0.5, 64).unwrap();
        let f = SectionGrid::zeros(spec, g);
        assert!(matches!(act_u1(&f), Err(Error::GridTooSmall { .. })));
    }

    #[test]
    fn hermite_round_trip() {
        let spec = BundleSpec::new(1, 1, THETA, 1).unwrap();
        let g = Grid::default();
        let f = SectionGrid::from_fn(spec, g, |_, _, x| C64::new((-x * x / 2.0).exp() * x.cos(), 0.0));
        let h = to_hermite(&f, 128, HermiteFrame::plain(1.0)).unwrap();
        let back = h.to_grid(g);
        assert!(back.max_abs_diff(&f).unwrap() < 1e-8);

        let f0 = SectionGrid::from_fn(spec, g, |_, _, x| C64::new((-x * x / 2.0).exp(), 0.0));
        let h0 = to_hermite(&f0, 16, HermiteFrame::plain(1.0)).unwrap();
        assert!((h0.unnormalized_coeff(0, 0, 0).unwrap() - 1.0).norm() < 1e-10);
        for n in 1..16 {
            assert!(h0.block(0, 0)[n].norm() < 1e-10);
        }
        assert!(matches!(
            to_hermite_with_order(&f0, 16, HermiteFrame::plain(1.0), 30),
            Err(Error::QuadratureTooSmall { suggested: 11, .. })
        ));
    }

    #[test]
    fn twisted_frame_round_trip() {
        let spec = BundleSpec::new(2, 1, THETA, 1).unwrap();
        let frame = HermiteFrame { lambda: 3.0, kappa: 1.7, shift: 0.4, drift: -0.9 };
        let mut h = SectionHermite::zeros(spec, frame, 12);
        h.block_mut(0, 1)[3] = C64::new(0.5, -0.25);
        h.block_mut(0, 0)[0] = C64::new(1.0, 0.0);
        let grid = frame.grid_for(12, 0.0, 0.0).unwrap();
        let back = to_hermite(&h.to_grid(grid), 12, frame).unwrap();
        let err: f64 = back.coeffs().iter().zip(h.coeffs()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-10, "{err}");
    }

    #[test]
    fn torus_element_application() {
        let spec = BundleSpec::new(2, 1, THETA, 2).unwrap();
        let g = Grid::default();
        let f = gaussian(spec, g, 0.0);
        let one = TorusElement::one(THETA, 1);
        let s = Section::Grid(f.clone());
        assert_eq!(apply_torus_element(&s, &one, Side::Right).unwrap(), Section::Grid(apply_element_grid(&f, &one, Side::Right).unwrap()));
        let via_element = apply_element_grid(&f, &TorusElement::u1(THETA), Side::Right).unwrap();
        assert!(via_element.max_abs_diff(&act_u1(&f).unwrap()).unwrap() < 1e-15);

        // words compose like the algebra: f·(ab) = (f·a)·b
        let a = TorusElement::u1(THETA).add(&TorusElement::monomial(THETA, -1, 1, C64::new(0.3, 0.2))).unwrap();
        let b = TorusElement::u2(THETA).add(&TorusElement::monomial(THETA, 1, -1, C64::new(-0.7, 0.1))).unwrap();
        let ab = a.mul(&b).unwrap();
        let lhs = apply_element_grid(&f, &ab, Side::Right).unwrap();
        let rhs = apply_element_grid(&apply_element_grid(&f, &a, Side::Right).unwrap(), &b, Side::Right).unwrap();
        assert!(lhs.max_abs_diff(&rhs).unwrap() < 1e-9);

        // left: (ab)·f = a·(b·f)
        let tp = spec.theta_prime();
        let a = TorusElement::u1(tp).add(&TorusElement::monomial(tp, 0, -1, C64::new(0.3, 0.2))).unwrap();
        let b = TorusElement::u2(tp).add(&TorusElement::monomial(tp, -1, 1, C64::new(-0.7, 0.1))).unwrap();
        let ab = a.mul(&b).unwrap();
        let lhs = apply_element_grid(&f, &ab, Side::Left).unwrap();
        let rhs = apply_element_grid(&apply_element_grid(&f, &b, Side::Left).unwrap(), &a, Side::Left).unwrap();
        assert!(lhs.max_abs_diff(&rhs).unwrap() < 1e-9);
    }

    #[test]
    fn matrix_coefficients_mix_copies() {
        let spec = BundleSpec::new(1, 1, THETA, 2).unwrap();
        let g = Grid::default();
        let f = gaussian(spec, g, 0.0);
        let mut a = TorusElement::zero(THETA, 2, 0);
        let mut m = crate::algebra::CMat::zeros(2, 2);
        m[(0, 1)] = C64::new(1.0, 0.0);
        a.set_coeff(0, 0, m).unwrap();
        let r = apply_element_grid(&f, &a, Side::Right).unwrap();
        // (f·a)_1 = f_0
        let err = r.block(1, 0).iter().zip(f.block(0, 0)).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-14);
        assert!(r.block(0, 0).iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn mode_sections() {
        let spec = BundleSpec::trivial(THETA, 1).unwrap();
        let f = ModeSection::new(spec, vec![TorusElement::u2(THETA)]).unwrap();
        let r = apply_element_modes(&f, &TorusElement::u1(THETA), Side::Right).unwrap();
        assert_eq!(r.parts[0], TorusElement::u2(THETA).mul(&TorusElement::u1(THETA)).unwrap());
        let l = apply_element_modes(&f, &TorusElement::u1(THETA), Side::Left).unwrap();
        assert_eq!(l.parts[0], TorusElement::u1(THETA).mul(&TorusElement::u2(THETA)).unwrap());
    }

    #[test]
    fn tail_of_gaussian_is_small() {
        let spec = BundleSpec::new(1, 1, THETA, 1).unwrap();
        let f = gaussian(spec, Grid::default(), 0.0);
        let r = tail_report(&f, 1e-12);
        assert!(r.ok, "{r:?}");
        let wide = SectionGrid::from_fn(spec, Grid::default(), |_, _, x| C64::new((-x * x / 200.0).exp(), 0.0));
        assert!(!tail_report(&wide, 1e-12).ok);
    }

    #[test]
    fn basis_norms() {
        let spec = BundleSpec::new(1, 1, THETA, 1).unwrap();
        let f3 = hermite_basis(spec, 3, 1.0, 8).unwrap();
        assert!((f3.norm().powi(2) - 48.0 * PI.sqrt()).abs() < 1e-10);
        assert!(hermite_basis(spec, 8, 1.0, 8).is_err());
    }
}
