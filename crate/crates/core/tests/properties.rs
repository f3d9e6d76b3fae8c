mod suites;

#[test]
fn inertia_matches_descartes_and_sylvester() {
    suites::inertia_matches_descartes_and_sylvester();
}

#[test]
fn pencil_polynomial_reevaluates() {
    suites::pencil_polynomial_reevaluates();
}

#[test]
fn fm_multipliers_are_sound() {
    suites::fm_multipliers_are_sound();
}

#[test]
fn diagonal_hull_matches_projection() {
    suites::diagonal_hull_matches_projection();
}

#[test]
fn soc_roundtrip_and_variety() {
    suites::soc_roundtrip_and_variety();
}

#[test]
fn normalized_family_basis() {
    suites::normalized_family_basis();
}

#[test]
fn improve_never_adds_negative_eigenvalues() {
    suites::improve_never_adds_negative_eigenvalues();
}

#[test]
fn support_reduction_terminates() {
    suites::support_reduction_terminates();
}

#[test]
fn escape_bound_post_check_on_concave_systems() {
    suites::escape_bound_post_check_on_concave_systems();
}

#[test]
fn structural_verdict_survives_congruence() {
    suites::structural_verdict_survives_congruence();
}

#[test]
fn membership_certificates_verify_and_repeat() {
    suites::membership_certificates_verify_and_repeat();
}
