//! Frozen values from independent oracles (closed forms, integer arithmetic
//! in exact quadratic fields).

use nctorus::algebra::{TorusElement, C64};
use nctorus::ample::{gen_ample_sequence, twist_chern, vanishing_bound};
use nctorus::chern::{euler_form, ChernPair};
use nctorus::dolbeault::{cohomology, curvature_constant, q_norm_bound, CohomologyOptions, HoloStructure};
use nctorus::interval::Theta;
use nctorus::module::BundleSpec;

const THETA: f64 = std::f64::consts::SQRT_2 - 1.0;

fn standard(c: i64, d: i64, tau: C64) -> HoloStructure {
    HoloStructure::standard(BundleSpec::new(c, d, THETA, 1).unwrap(), tau, C64::new(0.0, 0.0)).unwrap()
}

#[test]
fn curvature_constants() {
    let r = curvature_constant(&standard(1, 1, C64::new(0.0, -1.0)), 1).unwrap();
    assert!((r.expected - 8.885765876316732).abs() < 1e-12);
    let r = curvature_constant(&standard(-2, 3, C64::new(1.0, -1.0)), 2).unwrap();
    assert!((r.expected + 11.573519597301505).abs() < 1e-11);
    assert!((r.measured - r.expected).abs() < 1e-8 * r.expected.abs());
}

#[test]
fn q_bounds() {
    assert!((q_norm_bound(&standard(1, 1, C64::new(0.0, -1.0))).unwrap() - 0.33546913348270696).abs() < 1e-15);
    assert!((q_norm_bound(&standard(2, 1, C64::new(0.0, -1.0))).unwrap() - 0.26972356913452045).abs() < 1e-15);
}

#[test]
fn first_sequence_entries() {
    let s = gen_ample_sequence(Theta::sqrt2_minus_1(), 4, 1.0).unwrap();
    let pairs: Vec<(i64, i64)> = s.entries.iter().map(|e| (e.c, e.d)).collect();
    assert_eq!(pairs, vec![(-1, 2), (-2, 3), (-3, 4), (-4, 3)]);
    assert!((s.slope(0) + 0.6306019374818708).abs() < 1e-13);
}

#[test]
fn first_passing_twist_pair() {
    // scanning i0 = −1, −2, … and then i < i0: the first pair passing the guard
    let t = Theta::sqrt2_minus_1();
    let s = gen_ample_sequence(t, 50, 1.0).unwrap();
    let mut first = None;
    'outer: for k0 in 0..50 {
        for k in k0 + 1..50 {
            if let Ok(tw) = twist_chern(&s.entries[k], &s.entries[k0], &t) {
                first = Some((k, k0, tw));
                break 'outer;
            }
        }
    }
    let (k, k0, tw) = first.unwrap();
    assert_eq!((k, k0), (2, 0));
    assert_eq!((tw.chi, tw.c, tw.d), (2, 1, 0));
    assert!((tw.mu_chern - 2.414213562373095).abs() < 1e-12);
    assert!(tw.agreement() < 1e-10);
}

#[test]
fn euler_form_of_small_pairs() {
    assert_eq!(euler_form(&ChernPair::new(-1, 2), &ChernPair::new(1, 1)), 3);
    assert_eq!(euler_form(&ChernPair::with_copies(-3, 5, 2), &ChernPair::new(-1, 2)), 2);
}

#[test]
fn standard_dimensions() {
    let tau = C64::new(0.0, -1.0);
    let opts = CohomologyOptions::with_n(64);
    for (c, d, h0, h1) in [(3, 2, 3, 0), (-3, 2, 0, 3), (1, 0, 1, 0)] {
        let r = cohomology(&standard(c, d, tau), &opts).unwrap();
        assert_eq!((r.h0, r.h1), (h0, h1), "({c},{d})");
    }
}

#[test]
fn vanishing_constant_closed_form() {
    let e = ChernPair::new(1, 1);
    let phi = TorusElement::u1(THETA).scale(C64::new(0.2, 0.0));
    let vb = vanishing_bound(&e, THETA, &phi, C64::new(0.0, -1.0)).unwrap();
    // μ − (0.2/(2√π·0.9))²
    assert!((vb.c_bound - (0.7071067811865475 - 0.003929751681281368)).abs() < 1e-14, "{}", vb.c_bound);
}
