//! Experiment harness: scene layouts, the stationary and non-stationary
//! agent loops, coverage and prediction-error metrics, evaluation suites
//! and run outputs.

mod config;
mod coverage;
mod eval;
mod gradients;
mod output;
mod run;
mod scenes;

pub use config::{Mode, RunConfig};
pub use coverage::{action_coverage, CoverageMatrix};
pub use eval::{
    collision_suite, eval_generalization, eval_multi_focus, eval_one_frame, eval_rollout, frame_errors,
    CaseError, EvalReport, HorizonError, OraclePredictor, RolloutCase, ROLLOUT_HORIZONS,
};
pub use gradients::gradient_checks;
pub use output::{load_models, reward_reading, save_models, write_csv, write_run, LoadedModels, Summary};
pub use run::{run_nonstationary, run_stationary, Agent, InteractionRecord, MetricsRow, RunOutcome};
pub use scenes::{make_bounded_scene, make_scene, MASSES, NONSTATIONARY_HALF_EXTENT, RADII};
