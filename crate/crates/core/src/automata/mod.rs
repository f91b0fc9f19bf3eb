//! Reward machines, guards, text serialization, state equivalence and DFA
//! encodings.

pub mod dfa;
pub mod equivalence;
pub mod format;
pub mod guard;
pub mod label;
pub mod machine;

pub use dfa::{dfa_inequivalence_witness, machine_to_dfa, Dfa, IoSymbol};
pub use equivalence::{machines_equivalent, state_equivalence, StateEquivalence};
pub use format::{load_machine, parse_machine, save_machine, write_machine};
pub use guard::{expand_guard, guard_for_labels, parse_guard, GuardExpr};
pub use label::{Label, PropSet, MAX_PROPS};
pub use machine::{
    complete_with_sink, is_consistent, run, PartialRewardMachine, Reward, RewardMachine, Trace,
};
