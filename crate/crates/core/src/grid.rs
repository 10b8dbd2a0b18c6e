//! Uniform periodized grid on `[-L, L)` with FFT-based translation,
//! differentiation and trigonometric interpolation.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use crate::algebra::C64;
use crate::error::{Error, Result};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(n)
        } else {
            p.plan_fft_forward(n)
        }
    })
}

/// Nodes `x_j = −L + 2Lj/P`, `j = 0..P`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    pub half_width: f64,
    pub points: usize,
}

impl Default for Grid {
    fn default() -> Self {
        Grid { half_width: 12.0, points: 1024 }
    }
}

impl Grid {
    pub fn new(half_width: f64, points: usize) -> Result<Self> {
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::InvalidParameter(format!("grid half-width {half_width}")));
        }
        if points < 4 || !points.is_power_of_two() {
            return Err(Error::InvalidParameter(format!("grid size {points} must be a power of two >= 4")));
        }
        Ok(Grid { half_width, points })
    }

    /// Smallest power-of-two grid on `[-L, L)` whose Nyquist wavenumber exceeds
    /// `k_max`.
    pub fn resolving(half_width: f64, k_max: f64) -> Result<Self> {
        let needed = (2.0 * half_width * k_max / PI).ceil().max(16.0) as usize;
        Grid::new(half_width, needed.next_power_of_two())
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.points as f64
    }

    pub fn x(&self, j: usize) -> f64 {
        -self.half_width + self.spacing() * j as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.points).map(|j| self.x(j)).collect()
    }

    /// Angular wavenumber of FFT bin `j`.
    pub fn wavenumber(&self, j: usize) -> f64 {
        let p = self.points as i64;
        let jj = j as i64;
        let m = if jj < p / 2 { jj } else { jj - p };
        PI * m as f64 / self.half_width
    }

    pub fn nyquist(&self) -> f64 {
        PI / self.spacing()
    }

    pub fn fft(&self, values: &[C64]) -> Vec<C64> {
        assert_eq!(values.len(), self.points);
        let mut buf = values.to_vec();
        plan(self.points, false).process(&mut buf);
        buf
    }

    /// Inverse FFT including the `1/P` normalization.
    pub fn ifft(&self, spectrum: &[C64]) -> Vec<C64> {
        assert_eq!(spectrum.len(), self.points);
        let mut buf = spectrum.to_vec();
        plan(self.points, true).process(&mut buf);
        let s = 1.0 / self.points as f64;
        for v in &mut buf {
            *v *= s;
        }
        buf
    }

    /// Samples of `x ↦ f(x − s)`.
    pub fn shift(&self, values: &[C64], s: f64) -> Result<Vec<C64>> {
        if s == 0.0 {
            return Ok(values.to_vec());
        }
        if s.abs() >= self.half_width {
            return Err(Error::GridTooSmall { shift: s, half_width: self.half_width });
        }
        let mut spec = self.fft(values);
        self.shift_spectrum(&mut spec, s);
        Ok(self.ifft(&spec))
    }

    pub(crate) fn shift_spectrum(&self, spec: &mut [C64], s: f64) {
        let p = self.points;
        for (j, v) in spec.iter_mut().enumerate() {
            if j == p / 2 {
                // the Nyquist mode is real-symmetric; shifting it by a
                // non-lattice amount has no consistent phase
                *v *= (self.wavenumber(j) * s).cos();
            } else {
                *v *= C64::from_polar(1.0, -self.wavenumber(j) * s);
            }
        }
    }

    /// Spectral derivative (Nyquist mode zeroed).
    pub fn derivative(&self, values: &[C64]) -> Vec<C64> {
        let mut spec = self.fft(values);
        let p = self.points;
        for (j, v) in spec.iter_mut().enumerate() {
            if j == p / 2 {
                *v = C64::new(0.0, 0.0);
            } else {
                *v *= C64::new(0.0, self.wavenumber(j));
            }
        }
        self.ifft(&spec)
    }

    /// Trigonometric interpolant evaluated at arbitrary points; zero outside
    /// `[-L, L)`.
    pub fn interpolate(&self, values: &[C64], points: &[f64]) -> Vec<C64> {
        let spec = self.ifft_coefficients(values);
        points.iter().map(|&x| self.eval_spectrum(&spec, x)).collect()
    }

    fn ifft_coefficients(&self, values: &[C64]) -> Vec<C64> {
        let s = 1.0 / self.points as f64;
        self.fft(values).into_iter().map(|v| v * s).collect()
    }

    fn eval_spectrum(&self, spec: &[C64], x: f64) -> C64 {
        if x < -self.half_width || x >= self.half_width {
            return C64::new(0.0, 0.0);
        }
        let p = self.points;
        let t = x + self.half_width;
        let step = C64::from_polar(1.0, PI * t / self.half_width);
        // positive frequencies 0..P/2 and negative frequencies via conjugate walk
        let mut acc = spec[0];
        let mut w = C64::new(1.0, 0.0);
        for j in 1..p / 2 {
            w *= step;
            acc += spec[j] * w + spec[p - j] * w.conj();
        }
        w *= step;
        acc += spec[p / 2] * C64::new(w.re, 0.0);
        acc
    }

    /// `Σ_j f_j conj(g_j) · Δx`.
    pub fn inner(&self, f: &[C64], g: &[C64]) -> C64 {
        f.iter().zip(g).map(|(a, b)| a * b.conj()).sum::<C64>() * self.spacing()
    }

    pub fn norm(&self, f: &[C64]) -> f64 {
        (f.iter().map(|a| a.norm_sqr()).sum::<f64>() * self.spacing()).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian(g: &Grid, x0: f64) -> Vec<C64> {
        g.nodes().iter().map(|&x| C64::new((-(x - x0) * (x - x0) / 2.0).exp(), 0.0)).collect()
    }

    fn max_diff(a: &[C64], b: &[C64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    #[test]
    fn shift_matches_direct_translation() {
        let g = Grid::default();
        let f = gaussian(&g, 0.0);
        let s = 0.7;
        let once = g.shift(&g.shift(&f, s).unwrap(), s).unwrap();
        assert!(max_diff(&once, &gaussian(&g, 2.0 * s)) < 1e-12);
        assert!(matches!(g.shift(&f, 12.5), Err(Error::GridTooSmall { .. })));
    }

    #[test]
    fn derivative_of_gaussian() {
        let g = Grid::default();
        let f = gaussian(&g, 0.3);
        let d = g.derivative(&f);
        let exact: Vec<C64> = g.nodes().iter().zip(&f).map(|(&x, v)| v * -(x - 0.3)).collect();
        assert!(max_diff(&d, &exact) < 1e-11);
    }

    #[test]
    fn interpolation_off_grid() {
        let g = Grid::new(10.0, 256).unwrap();
        let f = gaussian(&g, -0.5);
        let pts = [0.123, -3.3, 4.71, 9.99, -10.0];
        let vals = g.interpolate(&f, &pts);
        for (x, v) in pts.iter().zip(&vals) {
            let e = (-(x + 0.5) * (x + 0.5) / 2.0).exp();
            assert!((v.re - e).abs() < 1e-12 && v.im.abs() < 1e-12, "{x}");
        }
        assert_eq!(g.interpolate(&f, &[10.0])[0], C64::new(0.0, 0.0));
    }

    #[test]
    fn inner_product_is_trapezoid() {
        let g = Grid::default();
        let f = gaussian(&g, 0.0);
        let n2 = g.inner(&f, &f).re;
        assert!((n2 - PI.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn resolving_picks_power_of_two() {
        let g = Grid::resolving(12.0, 100.0).unwrap();
        assert!(g.points.is_power_of_two());
        assert!(g.nyquist() >= 100.0);
    }
}
