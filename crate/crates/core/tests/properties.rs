mod props;

#[test]
fn moment_semiring_laws() {
    props::semiring_laws(1000).unwrap();
}

#[test]
fn interval_operations_are_monotone() {
    props::interval_monotonicity(1000).unwrap();
}

#[test]
fn expectation_matches_quadrature() {
    props::expectation_vs_quadrature(500, 1e-6).unwrap();
}

#[test]
fn simplex_matches_vertex_enumeration() {
    props::simplex_vs_vertices(200, 1e-9).unwrap();
}

#[test]
fn interpreter_is_deterministic_and_fair() {
    props::interpreter_checks(30).unwrap();
}
