mod common;

use proptest::prelude::*;
use qmsde::transform::TransformError;
use qmsde::{catalog, compute_alpha, rho_max, transform, Side, TransformParams, TransformedSde};
use rand::rngs::StdRng;
use rand::SeedableRng;

#[test]
fn random_configuration_suite() {
    common::transform_suite(2024).unwrap();
}

#[test]
fn transformed_coefficients_exx1_and_ex2() {
    for name in ["exx1", "ex2"] {
        let entry = catalog::entry(name).unwrap();
        let sde = TransformedSde::new(&entry.problem, None).unwrap();
        common::transformed_coefficient_checks(&sde).unwrap();
        let nu = TransformedSde::new(&entry.problem, Some(0.1)).unwrap();
        common::transformed_coefficient_checks(&nu).unwrap();
    }
}

#[test]
fn exx1_midpoint_and_diffusion() {
    let sde = TransformedSde::new(&catalog::exx1(), Some(0.1)).unwrap();
    assert_eq!(sde.mu_tilde(0.0).unwrap(), 0.5);
    assert_eq!(sde.sigma_tilde(0.0).unwrap(), 1.0);
    // Outside the bump the transform is the identity.
    assert_eq!(sde.mu_tilde(0.5).unwrap(), 1.5);
    assert_eq!(sde.mu_tilde(-0.5).unwrap(), 0.0);
    let x = 0.05;
    let y = sde.params().g_eval(x);
    let s = sde.sigma_tilde(y).unwrap();
    assert!((s - sde.params().g_prime(x)).abs() < 1e-12);
}

#[test]
fn ex2_transformed_diffusion_is_one() {
    let sde = TransformedSde::new(&catalog::ex2(catalog::EX2_DEFAULT_NU).unwrap(), None).unwrap();
    assert_eq!(sde.params().nu(), catalog::EX2_DEFAULT_NU);
    for k in 0..=400 {
        let y = -0.2 + 0.4 * k as f64 / 400.0;
        let c = sde.coefficients(y).unwrap();
        assert!((c.sigma - 1.0).abs() < 1e-12, "y = {y}: {}", c.sigma);
        assert!(c.sigma_delta.abs() < 1e-9, "y = {y}: {}", c.sigma_delta);
    }
}

#[test]
fn alpha_examples() {
    assert_eq!(compute_alpha(&catalog::exx1()).unwrap(), vec![-0.5]);
    assert_eq!(compute_alpha(&catalog::exx2()).unwrap(), vec![0.0]);
    assert!(compute_alpha(&catalog::gbm()).unwrap().is_empty());
    assert!(matches!(
        TransformedSde::new(&catalog::exx22(), None),
        Err(TransformError::ClassB)
    ));
}

#[test]
fn inadmissible_nu_reports_rho() {
    let err = TransformedSde::new(&catalog::exx1(), Some(0.3)).unwrap_err();
    assert!(matches!(err, TransformError::InadmissibleNu { rho, .. } if rho == 0.25));
    assert!(err.to_string().contains("0.25"), "{err}");
    assert!(TransformParams::new(vec![0.0], vec![-0.5], 0.0).is_err());
    assert!(TransformParams::new(vec![0.0, 0.0], vec![1.0, 1.0], 0.01).is_err());
    assert!(TransformParams::new(vec![0.0], vec![1.0, 1.0], 0.01).is_err());
}

#[test]
fn hand_evaluated_examples() {
    assert_eq!(rho_max(&[0.0], &[-0.5]).unwrap(), 0.25);
    assert_eq!(rho_max(&[0.0], &[0.0]).unwrap(), f64::INFINITY);
    assert_eq!(rho_max(&[0.0, 1.0], &[1.0, 1.0]).unwrap(), 0.125);
    assert_eq!(transform::bump_phi(0.5), 0.31640625);
    assert_eq!(transform::bump_phi(0.0), 1.0);
    for u in [-2.0, -1.0, 1.0, 2.0] {
        assert_eq!(transform::bump_phi(u), 0.0);
    }
    let t = TransformParams::new(vec![0.0], vec![-0.5], 0.2).unwrap();
    assert_eq!(t.g_eval(0.1), 0.09841796875);
    // Bisection oracle for the inverse.
    let (mut lo, mut hi) = (0.0f64, 0.2f64);
    for _ in 0..200 {
        let m = 0.5 * (lo + hi);
        if t.g_eval(m) < 0.09841796875 {
            lo = m;
        } else {
            hi = m;
        }
    }
    let inv = t.g_inverse(0.09841796875, 1e-14).unwrap();
    assert!((inv - 0.1).abs() < 1e-12 && (inv - lo).abs() < 1e-12);
    assert_eq!(t.g_second(0.0, Side::Left).unwrap(), 1.0);
    assert_eq!(t.g_second(0.0, Side::Right).unwrap(), -1.0);
    assert!(t.g_second(0.0, Side::Interior).is_err());
    assert!(t.g_third(0.0).is_err());
    assert_eq!(t.g_third(0.5).unwrap(), 0.0);
    let id = TransformParams::new(vec![0.0], vec![0.0], 1.0).unwrap();
    for x in [-3.0, -0.4, 0.0, 0.3, 7.0] {
        assert_eq!(id.g_eval(x), x);
        assert_eq!(id.g_inverse(x, 1e-12).unwrap(), x);
        if x != 0.0 {
            assert_eq!(id.g_third(x).unwrap(), 0.0);
        }
    }
}

fn arb_params() -> impl Strategy<Value = TransformParams> {
    (1usize..=3, any::<u64>()).prop_map(|(k, seed)| {
        let mut rng = StdRng::seed_from_u64(seed);
        common::random_params(&mut rng, k)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn round_trip(t in arb_params(), u in -3.0..3.0f64) {
        let x = t.z()[0] + u * t.nu();
        let back = t.g_inverse(t.g_eval(x), 1e-12).unwrap();
        prop_assert!((back - x).abs() <= 1e-10);
    }

    #[test]
    fn strictly_increasing(t in arb_params(), u in -2.0..2.0f64, gap in 1e-9..1e-2f64) {
        let x = t.z()[t.z().len() - 1] + u * t.nu();
        prop_assert!(t.g_eval(x) < t.g_eval(x + gap));
        prop_assert!(t.g_prime(x) >= t.g_prime_lower_bound());
    }

    #[test]
    fn nodes_are_fixed(t in arb_params()) {
        prop_assert!(common::check_nodes(&t).is_ok());
        prop_assert!(common::check_one_sided(&t).is_ok());
    }
}
