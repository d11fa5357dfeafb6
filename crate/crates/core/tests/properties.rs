#[path = "support/props.rs"]
mod props;

#[test]
fn dominators_match_path_definition() {
    props::dominators_match_path_definition();
}

#[test]
fn transfer_functions_are_monotone() {
    props::transfer_functions_are_monotone();
}

#[test]
fn scope_analysis_predicts_observed_stores() {
    props::scope_analysis_predicts_observed_stores();
}

#[test]
fn every_pass_preserves_behaviour() {
    props::every_pass_preserves_behaviour();
}
