pub(crate) mod layout;
pub mod decompose;
pub mod full;
pub mod plan;
pub mod recursive;
pub mod shift;

pub use decompose::{decompose_balanced, Decomposition};
pub use full::{finish_construction, full_construction, full_construction_with_limit, FinishLengths, FullOutcome, FullRun, StageFailure};
pub use recursive::{recursive_step, recursive_step_with_limit, Certificate, StepOutcome, StepSpans};
pub use shift::{reflect, reflect_mirrored, shift, shift_mirrored};
