//! Picard solver for backward equations driven by `B ∘ c` and a rough driver
//! with forward or Marcus jumps, on a recombining tree.

pub mod apriori;
pub mod envelope;
pub mod norms;
pub mod problem;
pub mod residual;
pub mod scheme;
pub mod solve;
pub mod stretch;
pub mod tree;

pub use apriori::{apriori_bound, default_eps_bar};
pub use envelope::{picard_envelope_check, EnvelopeReport};
pub use norms::{bmo_norm_estimate, expected_z_energy, p2_norm_estimate, NormEstimate};
pub use problem::{ContinuousScheme, JumpMode, Problem};
pub use scheme::{picard_step, Iterate};
pub use solve::{residual_check, solve_on_tree, solve_rbsde, Diagnostics, Solution, SolverConfig};
pub use stretch::{time_stretched_solve, StretchResult};
pub use tree::{StepKind, TreeModel};
