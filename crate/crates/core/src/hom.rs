//! Holomorphic structures on `Hom(E₀, E)` realized as standard bundles over
//! `θ′(E₀)`.

use crate::algebra::{TorusElement, C64};
use crate::chern::{hom_bundle, ChernPair, HomBundle};
use crate::dolbeault::{HoloStructure, Perturbation};
use crate::error::Result;
use crate::module::{BundleSpec, Side};

/// The same coefficients over another parameter (used when two parameters
/// differ by an integer and define the same algebra).
pub fn with_theta(a: &TorusElement, theta: f64) -> TorusElement {
    let mut out = TorusElement::zero(theta, a.k(), a.band());
    for (&(m, n), c) in a.iter() {
        out.set_coeff(m, n, c.clone()).expect("same band and size");
    }
    out
}

/// `Hom(E₀, E)` with the standard structure at `z = 0`, plus `rk(E₀)·φ` when a
/// perturbation `φ ∈ End(E)` is given. `End(Hom(E₀, E))` is `A_{θ′(E)+k}`, so
/// `φ` acts through the left generators of the Hom bundle.
pub fn hom_structure(e0: &ChernPair, e: &ChernPair, theta: f64, tau: C64, phi: Option<&TorusElement>) -> Result<(HomBundle, HoloStructure)> {
    let hb = hom_bundle(e0, e, theta)?;
    let spec = BundleSpec::from_pair(&hb.pair, hb.theta)?;
    let base = HoloStructure::standard(spec, tau, C64::new(0.0, 0.0))?;
    let hs = match phi {
        None => base,
        Some(p) => {
            let r0 = e0.rank(theta);
            let element = with_theta(p, spec.theta_prime()).scale(C64::new(r0, 0.0));
            base.with_perturbation(Perturbation { element, side: Side::Left })?
        }
    };
    Ok((hb, hs))
}

#[cfg(test)]
mod tests {
    use super::*;

    const THETA: f64 = std::f64::consts::SQRT_2 - 1.0;

    #[test]
    fn hom_end_parameter_matches_target_end_up_to_integers() {
        let e = ChernPair::new(1, 1);
        for (c0, d0) in [(-1, 2), (-2, 3), (1, 0), (-3, 2)] {
            let (_, hs) = hom_structure(&ChernPair::new(c0, d0), &e, THETA, C64::new(0.0, -1.0), None).unwrap();
            let target = BundleSpec::new(1, 1, THETA, 1).unwrap().theta_prime();
            let diff = hs.spec.theta_prime() - target;
            assert!((diff - diff.round()).abs() < 1e-12, "({c0},{d0}) {diff}");
            let expected_rank = e.rank(THETA) / ChernPair::new(c0, d0).rank(THETA);
            assert!((hs.spec.rank() - expected_rank).abs() < 1e-12);
        }
    }
}
