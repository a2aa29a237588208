//! Ground truth: direct evaluation of the target functions, exhaustive
//! stabilization checks on small instances, memory audits and scaling fits.

mod audit;
mod exhaustive;
mod scaling;
mod value;

pub use audit::{audit_memory, default_plan, AuditError, AuditPlan, AuditReport};
pub use exhaustive::{
    all_inputs, explore, verify_exhaustive, ConfigGraph, Exploration, Verdict, VerifyRecord, DEFAULT_GUARD,
};
pub use scaling::{fit_power_law, scaling_report, PowerFit, ScalingError, ScalingReport, ScalingSample, SizeMean};
pub use value::{color_counts, oracle_value, Expected, FunctionId, OracleError, Scorer};
