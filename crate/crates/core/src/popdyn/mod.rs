//! Age-structured population models.

pub mod blowfly;
pub mod sardine;

pub use blowfly::{
    blowfly_objective, blowfly_propagate, blowfly_residuals, fit_blowfly, simulate_blowfly, survival_prob,
    synthesize_deaths, AgeStructuredState, BlowflyFit, BlowflyModel, BlowflySeries, DeathNoise, SimulationMode,
    Survival, DEFAULT_MAX_AGE,
};
pub use sardine::{fit_sardine, predict_sardine, predict_sardine_cohorts, SardineFit, SardineTable};
