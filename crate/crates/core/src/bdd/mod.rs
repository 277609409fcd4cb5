//! Given-When-Then scenarios: parsing, step binding, execution and reports.

mod builtins;
mod parser;
mod report;
mod runner;
mod steps;

pub use builtins::{register_builtin_steps, LOAD_LEVEL_STEP};
pub use parser::{parse_feature, FeatureFile, Keyword, Phase, Scenario, Step};
pub use report::{
    write_report, FailureSnapshot, FeatureResult, Format, Report, RunMetadata, ScenarioResult, StepResult, StepStatus,
    Totals, UnknownFormat,
};
pub use runner::{
    derive_seed, run_feature, run_features, run_scenario, RunError, RunOptions, StepContext, StepError, LEAF_SCRIPT,
    SNAPSHOT_TRACE,
};
pub use steps::{Arg, DuplicatePattern, Handler, MatchError, StepBinding, StepDefinition, StepRegistry};
