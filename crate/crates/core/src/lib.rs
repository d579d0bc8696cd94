//! Optimal contracts between a principal and an agent who hold different
//! beliefs about how actions map to outputs.

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod belief;
pub mod cara;
pub mod cli;
pub mod compstat;
pub mod error;
pub mod first_best;
pub mod instance;
pub mod io;
pub mod oracle;
pub mod program;
pub mod random;
pub mod second_best;
pub mod shape;
pub mod spread;
pub mod utility;

pub use belief::{Distribution, MlrpOrder};
pub use error::{Error, Result};
pub use instance::{ActionSpec, ProblemInstance};
pub use shape::Monotonicity;
pub use utility::{UtilityFamily, UtilityModel};
