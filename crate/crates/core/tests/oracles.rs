//! Closed-form quantities checked against independent dense or Monte Carlo
//! computations.

mod common;
#[path = "suites/oracles.rs"]
mod suite;

#[test]
fn incremental_inverse_matches_dense_inverse() {
    suite::incremental_inverse_matches_dense_inverse();
}

#[test]
fn duplicated_rows_factor_with_a_nugget() {
    suite::duplicated_rows_factor_with_a_nugget();
}

#[test]
fn block_predict_matches_dense_conditional() {
    suite::block_predict_matches_dense_conditional();
}

#[test]
fn log_marginal_satisfies_chain_rule() {
    suite::log_marginal_satisfies_chain_rule();
}

#[test]
fn predictive_density_matches_reference_student_t() {
    suite::predictive_density_matches_reference_student_t();
}

#[test]
fn predictive_density_integrates_to_one() {
    suite::predictive_density_integrates_to_one();
}

#[test]
fn ei_closed_form_constant() {
    suite::ei_closed_form_constant();
}

#[test]
fn ei_matches_monte_carlo() {
    suite::ei_matches_monte_carlo();
}

#[test]
fn ei_cdf_term_matches_reference_student_t() {
    suite::ei_cdf_term_matches_reference_student_t();
}
