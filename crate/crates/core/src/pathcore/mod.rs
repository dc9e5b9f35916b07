//! Path containers, exact p-variation, controls and partitions.

pub mod ops;
pub mod partition;
pub mod path;
pub mod pvar;

pub use partition::{find_partition, Partition};
pub use path::{GridPath, Locus, PathMode};
pub use pvar::{control_eval, p_var_full, p_variation, Endpoint};
