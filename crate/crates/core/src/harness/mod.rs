//! Experiment harness: expression parsing, configs, sup-error scans,
//! reports and the invariant suite behind the CLI.

pub mod config;
pub mod experiment;
pub mod expr;
pub mod presets;
pub mod verify;

pub use config::{ExperimentConfig, FunctionSource, Format, Omega, OmegaConfig};
pub use experiment::{
    build_extremal, compute_bound, estimate_sup_error, estimate_sup_error_fallible, fd_derivative,
    run_experiment, BoundReport, ErrorReport, Exec, RunOptions, SupEstimate,
};
pub use expr::{parse_function, Expr};
pub use presets::Preset;
pub use verify::{run_verify, VerifyCheck, VerifyReport};
