mod common;

use common::criteria;

#[test]
fn cantor_dimension_chain() {
    criteria::cantor_chain().assert();
}

#[test]
fn box_counting_strings_match_closed_forms() {
    criteria::box_counting_strings().assert();
}

#[test]
fn lattice_closed_forms_match_partial_sums() {
    criteria::lattice_closed_forms().assert();
}

#[test]
fn complex_dimensions_and_residues() {
    criteria::complex_dimensions().assert();
}

#[test]
fn moran_solver() {
    criteria::moran().assert();
}

#[test]
fn integral_transform_gap() {
    criteria::integral_transform().assert();
}

#[test]
fn explicit_counting_formula_converges() {
    criteria::explicit_formula().assert();
}

#[test]
fn distance_tube_identity() {
    criteria::distance_tube_identity().assert();
}

#[test]
fn cantor_residue_brackets() {
    criteria::residue_content().assert();
}

#[test]
fn measurable_residue_matches_content() {
    criteria::measurable_case().assert();
}

#[test]
fn log_periodic_analysis() {
    criteria::log_periodic().assert();
}
