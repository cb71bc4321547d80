//! Structured-search estimates of basis constants and per-instance checks
//! of the inequalities relating them.

mod checks;
mod estimate;
mod family;
mod known;

pub use checks::{
    passes, run_check, run_check_with, CheckContext, CheckId, CheckInstance, CheckMode, CheckReport, CheckSetup,
    ModeRequest, KEPT_INSTANCES, MAX_FAILURES,
};
pub use estimate::{
    cardinality_profile, estimate, estimate_from_profile, known_value, reevaluate, ConstantEstimate, ConstantName, EstimateStatus,
    ProfileEntry, Witness, DENOM_GUARD, SIGMA_NUMERIC_MAX_M,
};
pub use family::SearchFamily;
pub use known::{known_constants, partially_greedy_constant, KnownConstants};
