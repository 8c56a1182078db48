//! pilab: a workbench for policy iteration on finite discounted MDPs.
//!
//! The crate has three layers:
//!
//! * a data model with dual arithmetic (exact rationals or doubles):
//!   instances, policies, value functions, improvement sets, and the
//!   dominance partial order on policies;
//! * an iteration engine running the improvement loop under pluggable
//!   selection strategies (greedy, seeded random subsets, single-switch
//!   rules), recording a full per-iteration trace;
//! * a brute-force oracle that enumerates all `k^n` policies, builds the
//!   complete partial order, and machine-checks the structural properties
//!   the engine relies on, instance by instance.
//!
//! On top sit seeded instance generation with a bit-exact text format,
//! closed-form iteration bounds, a CSV experiment harness, and the `pilab`
//! command-line tool (`solve`, `verify`, `experiment`, `gen`).

pub mod bounds;
pub mod cli;
pub mod engine;
pub mod experiment;
pub mod instance;
pub mod mdp;
pub mod modification;
pub mod oracle;
pub mod order;
pub mod rng;
pub mod scalar;
pub mod solve;
pub mod verify;

pub use engine::{run_policy_iteration, SequentialRule, Strategy, Trace};
pub use instance::{builtin_instance, parse_mdp, random_mdp, serialize_mdp, GenSpec};
pub use mdp::{Mdp, Policy, QFunction, ValueFunction, Violation};
pub use modification::{modification_set, modify, reduce_to_well_defined, ModificationSet};
pub use oracle::{build_policy_order, enumerate_policies, LemmaReport, PolicyOrder};
pub use order::{compare, compare_values, Comparison};
pub use scalar::{Rational, Scalar};
pub use solve::{evaluate_policy, q_values};

use thiserror::Error as ThisError;

/// Errors across the workbench.
#[derive(Debug, ThisError)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("modification set is not well defined")]
    NotWellDefined,

    #[error("selection from an empty set")]
    EmptySelection,

    #[error("linear system is singular")]
    SingularSystem,

    #[error("cap exceeded: {0}")]
    CapExceeded(String),

    #[error("unknown builtin instance `{0}`")]
    UnknownBuiltin(String),

    #[error("builtin instance `{0}` is reserved but not implemented")]
    Reserved(String),

    #[error("unsupported strategy `{0}`")]
    UnsupportedStrategy(String),

    #[error("{0} requires exact arithmetic; float mode is refused for verification")]
    ExactRequired(String),

    #[error("instance mismatch: {0}")]
    InstanceMismatch(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
