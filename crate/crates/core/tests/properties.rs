use nnghmc::samplers::properties::{self, sign_flipped_leapfrog, standard_leapfrog, Check};

fn assert_all(checks: &[Check]) {
    for c in checks {
        println!("{:<28} {} value={:.4e} ({})", c.name, if c.passed { "ok" } else { "FAILED" }, c.value, c.detail);
    }
    assert!(checks.iter().all(|c| c.passed));
}

#[test]
fn reversibility_for_every_oracle() {
    assert_all(&properties::reversibility(standard_leapfrog, 11));
}

#[test]
fn sign_flip_is_caught_by_the_suite() {
    let report = properties::verify_all(sign_flipped_leapfrog).unwrap();
    assert!(!report.all_passed());
    let failing: Vec<_> = report.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
    assert!(failing.contains(&"reversibility/exact"), "{failing:?}");
}

#[test]
fn leapfrog_preserves_volume_under_a_network() {
    assert_all(&properties::volume_preservation(standard_leapfrog, 3));
}

#[test]
fn energy_error_is_second_order() {
    assert_all(&[properties::energy_scaling(standard_leapfrog, 5)]);
}

#[test]
fn vanishing_perturbations_vanish_in_dh_dt() {
    assert_all(&[properties::perturbation_limit(standard_leapfrog, 7)]);
}

#[test]
fn local_and_global_error_bounds() {
    assert_all(&[properties::local_error_bound(9), properties::global_error_bound(standard_leapfrog, 9)]);
}

#[test]
fn analytic_gradients_match_finite_differences() {
    let mut checks = properties::target_gradients(13).unwrap();
    checks.push(properties::backprop_gradients(13));
    assert_all(&checks);
}

#[test]
fn ess_of_ar1() {
    assert_all(&[properties::ess_ar1(17)]);
}

#[test]
fn zero_gradient_chain_keeps_the_target() {
    assert_all(&[properties::zero_oracle_exactness(200_000, 19).unwrap()]);
}

#[test]
fn full_verify_passes() {
    let report = properties::verify_all(standard_leapfrog).unwrap();
    assert_all(&report.checks);
}
