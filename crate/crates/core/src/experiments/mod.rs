//! Monte Carlo coverage, the worked examples as checks, and grid diagnostics
//! for the closure and atom-freeness conditions.

mod conditions;
mod coverage;
mod reproduce;
mod scenario;

pub use conditions::{
    check_conditions, closure_condition, grid_zero_set, AtomCheck, ConditionsReport, LabelCheck,
};
pub use coverage::{run_coverage, wilson_interval, CoverageOptions, CoverageReport};
pub use reproduce::{all_fixture_ids, reproduce_examples, ExampleOptions, ExampleRow};
pub use scenario::{Application, Scenario, ScenarioOverrides, SCENARIO_IDS};

use thiserror::Error;

use crate::domain::DomainError;
use crate::piecewise::PiecewiseError;
use crate::randfield::RandFieldError;
use crate::regions::RegionsError;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("repetition count must be at least 1")]
    BadR,
    #[error("unknown scenario '{0}'")]
    UnknownScenario(String),
    #[error("unknown fixture '{0}'")]
    UnknownFixture(String),
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Regions(#[from] RegionsError),
    #[error(transparent)]
    RandField(#[from] RandFieldError),
    #[error(transparent)]
    Piecewise(#[from] PiecewiseError),
    #[error(transparent)]
    Domain(#[from] DomainError),
}
