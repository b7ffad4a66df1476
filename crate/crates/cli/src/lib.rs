//! Config-driven experiment runner comparing preconditioner designs on the
//! reference problems. Each run writes one convergence CSV per design and a
//! summary table.

pub mod config;
pub mod experiment;

pub use config::{
    ConfigError, DesignChoice, DesignSpec, ExperimentConfig, GsrSection, MnrSection, Task, TaskConfig, UnmixSection,
};
pub use experiment::{build_instance, run_designs, run_experiment, DesignRun, Instance, Outcome, Report, SUMMARY_HEADER};
