//! Whittle index computation for a single two-state partially observed arm.
//!
//! The production path is [`fast_whittle_infinite`] (closed-form threshold
//! occupancies) plus the logistic [`finite_whittle`] interpolation. The
//! bisection/value-iteration solver in [`search`] is the structure-free
//! reference, and [`checks`] turns the structural guarantees into executable
//! reports.

pub mod checks;
pub mod fast;
pub mod finite;
pub mod search;
pub mod table;
pub mod value;

pub use checks::{
    check_general_condition, check_indexability, check_theorem_conditions, check_value_bounds, BeliefValueFn,
    GeneralConditionReport, IndexabilityReport, TheoremHorizon, TheoremReport, ValueBoundsReport, VALUE_BOUND_TOL,
};
pub use fast::{fast_whittle_infinite, FastIndex, ThresholdModel, ThresholdPolicyEval, AVERAGE_REWARD_PROXY};
pub use finite::{finite_whittle, FiniteIndex};
pub use search::{exact_finite_whittle, one_step_index, whittle_binary_search, SearchOptions};
pub use table::{write_index_csv, HorizonKind, IndexTable};
pub use value::{value_iteration, Action, BeliefChainMdp, Horizon, TailRule, ValueSolution};
