//! Hermite functions and Gauss–Hermite quadrature.
//!
//! `ψ_n(t) = H_n(t) e^{−t²/2} / sqrt(2ⁿ n! √π)` are evaluated by the stable
//! three-term recurrence. The width-`λ` basis is `h_n(x) = |λ|^{1/4} ψ_n(√|λ| x)`,
//! the normalization of `f_n(x) = H_n(√|λ| x) e^{−|λ| x²/2}`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// `ψ_0(t), …, ψ_{count−1}(t)`.
pub fn hermite_functions(count: usize, t: f64) -> Vec<f64> {
    let mut out = vec![0.0; count];
    if count == 0 {
        return out;
    }
    out[0] = PI.powf(-0.25) * (-0.5 * t * t).exp();
    if count > 1 {
        out[1] = std::f64::consts::SQRT_2 * t * out[0];
    }
    for n in 1..count.saturating_sub(1) {
        let nf = n as f64;
        out[n + 1] = (2.0 / (nf + 1.0)).sqrt() * t * out[n] - (nf / (nf + 1.0)).sqrt() * out[n - 1];
    }
    out
}

/// `h_0(x), …, h_{count−1}(x)` for width `|λ|`.
pub fn scaled_hermite_functions(count: usize, lambda: f64, x: f64) -> Vec<f64> {
    let l = lambda.abs();
    let s = l.powf(0.25);
    let mut v = hermite_functions(count, l.sqrt() * x);
    for a in &mut v {
        *a *= s;
    }
    v
}

/// `‖f_n‖² = 2ⁿ n! √π / √|λ|`.
pub fn norm_sq(n: usize, lambda: f64) -> Result<f64> {
    if lambda == 0.0 || !lambda.is_finite() {
        return Err(Error::InvalidParameter(format!("lambda = {lambda}")));
    }
    let ln = n as f64 * std::f64::consts::LN_2 + ln_factorial(n) + 0.5 * PI.ln() - 0.5 * lambda.abs().ln();
    let v = ln.exp();
    if !v.is_finite() {
        return Err(Error::InvalidParameter(format!("norm of f_{n} overflows a double")));
    }
    Ok(v)
}

fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// Gauss–Hermite rule in the "function" normalization:
/// `∫ g(t) dt ≈ Σ_k weights[k] g(nodes[k])`, exact when `g = ψ_m ψ_n` with
/// `m + n < 2·order`.
#[derive(Debug, Clone)]
pub struct GaussHermite {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussHermite {
    /// Golub–Welsch eigenvalues polished by Newton steps on `ψ_order`.
    pub fn new(order: usize) -> Self {
        assert!(order > 0);
        let mut jac = DMatrix::<f64>::zeros(order, order);
        for k in 1..order {
            let b = (k as f64 / 2.0).sqrt();
            jac[(k, k - 1)] = b;
            jac[(k - 1, k)] = b;
        }
        let eig = SymmetricEigen::new(jac);
        let mut nodes: Vec<f64> = eig.eigenvalues.iter().cloned().collect();
        nodes.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let q = order as f64;
        for t in nodes.iter_mut() {
            for _ in 0..3 {
                let psi = hermite_functions(order + 1, *t);
                let p = psi[order];
                let dp = (2.0 * q).sqrt() * psi[order - 1] - *t * p;
                if dp != 0.0 {
                    let step = p / dp;
                    if step.is_finite() {
                        *t -= step;
                    }
                }
            }
        }
        let weights = nodes
            .iter()
            .map(|&t| 1.0 / hermite_functions(order, t).iter().map(|v| v * v).sum::<f64>())
            .collect();
        GaussHermite { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }
}

/// Shared rules, built once per order.
pub fn gauss_hermite(order: usize) -> Arc<GaussHermite> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GaussHermite>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(r) = cache.lock().unwrap().get(&order) {
        return r.clone();
    }
    let rule = Arc::new(GaussHermite::new(order));
    cache.lock().unwrap().insert(order, rule.clone());
    rule
}

/// Minimum quadrature order used to project onto `n` Hermite functions.
pub fn required_order(n: usize) -> usize {
    2 * n + 8
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_norms() {
        assert!((norm_sq(0, 1.0).unwrap() - PI.sqrt()).abs() < 1e-15);
        assert!((norm_sq(0, 4.0).unwrap() - PI.sqrt() / 2.0).abs() < 1e-15);
        assert!((norm_sq(3, 1.0).unwrap() - 48.0 * PI.sqrt()).abs() < 1e-12);
        assert!(norm_sq(2, 0.0).is_err());
        assert!(norm_sq(400, 1.0).is_err());
    }

    #[test]
    fn low_order_hermite_values() {
        // ψ_2(t) = (4t² − 2) e^{−t²/2} / sqrt(8 √π)
        let t = 0.37;
        let v = hermite_functions(3, t);
        let exact = (4.0 * t * t - 2.0) * (-t * t / 2.0).exp() / (8.0 * PI.sqrt()).sqrt();
        assert!((v[2] - exact).abs() < 1e-14);
    }

    #[test]
    fn quadrature_orthonormality() {
        let q = gauss_hermite(72);
        let n = 32;
        let vals: Vec<Vec<f64>> = q.nodes.iter().map(|&t| hermite_functions(n, t)).collect();
        for a in 0..n {
            for b in 0..n {
                let s: f64 = (0..q.order()).map(|k| q.weights[k] * vals[k][a] * vals[k][b]).sum();
                let e = if a == b { 1.0 } else { 0.0 };
                assert!((s - e).abs() < 1e-12, "({a},{b}) {s}");
            }
        }
    }

    #[test]
    fn quadrature_norm_of_f2_matches_closed_form() {
        // f_2(x) = H_2(√λ x) e^{−λx²/2}, H_2(y) = 4y² − 2
        let lambda: f64 = 2.5;
        let q = gauss_hermite(16);
        let s = lambda.sqrt();
        let quad: f64 = q
            .nodes
            .iter()
            .zip(&q.weights)
            .map(|(&t, &w)| {
                let x = t / s;
                let f = (4.0 * t * t - 2.0) * (-lambda * x * x / 2.0).exp();
                w * f * f / s
            })
            .sum();
        assert!((quad - norm_sq(2, lambda).unwrap()).abs() < 1e-10 * quad);
    }

    #[test]
    fn nodes_are_roots() {
        let q = gauss_hermite(40);
        for &t in &q.nodes {
            let v = hermite_functions(41, t);
            assert!(v[40].abs() < 1e-12);
        }
        let total: f64 = q.weights.iter().sum::<f64>();
        assert!(total > 0.0);
    }
}
