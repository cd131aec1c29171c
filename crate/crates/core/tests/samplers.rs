//! Sampler correctness against grid quadrature and analytic targets.

mod common;
#[path = "suites/samplers.rs"]
mod suite;

#[test]
fn mh_chain_matches_grid_posterior() {
    suite::mh_chain_matches_grid_posterior();
}

#[test]
fn independence_initialization_matches_grid_posterior() {
    suite::independence_initialization_matches_grid_posterior();
}

#[test]
fn mcmc_recovers_exponential_prior() {
    suite::mcmc_recovers_exponential_prior();
}

#[test]
fn prior_draw_initialization_recovers_exponential_prior() {
    suite::prior_draw_initialization_recovers_exponential_prior();
}

#[test]
fn prior_only_acceptance_matches_analytic_rate() {
    suite::prior_only_acceptance_matches_analytic_rate();
}

#[test]
fn rejuvenated_parameters_stay_in_window() {
    suite::rejuvenated_parameters_stay_in_window();
}

#[test]
fn gibbs_marginal_matches_grid_quadrature() {
    suite::gibbs_marginal_matches_grid_quadrature();
}

#[test]
fn gibbs_blocks_satisfy_detailed_balance() {
    suite::gibbs_blocks_satisfy_detailed_balance();
}
