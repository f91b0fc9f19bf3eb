//! Reward machine inference from traces.

pub mod exact;
pub mod prefix_tree;
pub mod rpni;
pub mod sample;

pub use exact::{minimal_consistent_machine, DEFAULT_BUDGET, DEFAULT_K_MAX};
pub use prefix_tree::{build_prefix_tree, PrefixTree};
pub use rpni::rpni_rm;
pub use sample::{sample_insert, Insert, Sample};
