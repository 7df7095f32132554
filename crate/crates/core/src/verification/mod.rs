//! Comparison theorems executed as numerical checks on scenarios.

mod checks;
mod registry;
mod report;
mod scenario;

use rayon::prelude::*;

pub use checks::{
    check_focal_radius, check_hessian_comparison, check_hk_bound, check_integral_bound, check_ray_lemmas,
    check_structural, hk_model_volume, ray_structural_residuals, run_check, thm1_preconditions, volume_table,
    StructuralResiduals, VolumeRow, DENSITY_RESIDUAL_TOL, FOCAL_EQUALITY_TOL, JACOBI_RESIDUAL_TOL,
    RICCATI_RESIDUAL_TOL, TAYLOR_TOL, WRONSKIAN_TOL,
};
pub use registry::{bump_torus, Registry};
pub use report::{CheckReport, Status, SuiteReport, Summary};
pub use scenario::{
    Certification, CheckKind, Context, DeclaredFacts, RhoSamples, Scenario, CERTIFICATION_SAMPLES, MINIMALITY_TOL,
};

/// Every enabled check of one scenario, in check order.
pub fn run_scenario(scenario: &Scenario) -> Vec<CheckReport> {
    let mut kinds = scenario.checks.clone();
    kinds.sort();
    kinds.dedup();
    match Context::new(scenario) {
        Ok(ctx) => kinds.iter().map(|&k| run_check(&ctx, k)).collect(),
        Err(e) => kinds
            .iter()
            .map(|&k| CheckReport::new(&scenario.name, k, Status::Error).with_message(e.to_string()))
            .collect(),
    }
}

/// Runs scenarios concurrently and aggregates in scenario-name order.
pub fn run_suite(name: &str, scenarios: &[Scenario]) -> SuiteReport {
    let mut sorted: Vec<&Scenario> = scenarios.iter().collect();
    sorted.sort_by(|a, b| a.name.cmp(&b.name));
    let checks: Vec<Vec<CheckReport>> = sorted.par_iter().map(|s| run_scenario(s)).collect();
    SuiteReport::new(name, sorted.len(), checks.into_iter().flatten().collect())
}
