//! Reference interpreter and differential testing harness.

pub mod differential;
pub mod interp;

pub use differential::{differential, Verdict};
pub use interp::{interpret, ExecutionResult, Status, DEFAULT_STEP_BUDGET};
