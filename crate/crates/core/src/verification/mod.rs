//! Statistics harness: rescalings, the coupled construction, and the named
//! checks that tie the simulators to their closed-form laws.

pub mod config;
pub mod coupling;
pub mod criteria;
pub mod report;
pub mod rescale;

pub use config::VerifyConfig;
pub use coupling::{run_coupling_experiment, CouplingParams, CouplingRun};
pub use criteria::{run_suite, select, variance_rate_bound_check, Criterion, Suite, ACCEPTANCE, EXTRA};
pub use report::{write_json, write_summary_csv, Check, Metric, TestReport};
pub use rescale::{RescaleKind, RescaleSpec};
