use std::collections::VecDeque;

use super::sample::Sample;
use crate::automata::{Label, PartialRewardMachine, Reward};

/// Tree-shaped partial machine with one state per distinct label prefix of a
/// sample. States are numbered breadth-first with children in label order,
/// so the root is 0 and parents precede children.
#[derive(Clone, Debug)]
pub struct PrefixTree {
    machine: PartialRewardMachine,
    /// `(parent, label, reward)` of the edge into each non-root state.
    incoming: Vec<Option<(usize, Label, Reward)>>,
}

impl PrefixTree {
    pub fn machine(&self) -> &PartialRewardMachine {
        &self.machine
    }

    pub fn num_states(&self) -> usize {
        self.incoming.len()
    }

    pub fn incoming(&self, u: usize) -> Option<(usize, Label, Reward)> {
        self.incoming[u]
    }
}

pub fn build_prefix_tree(x: &Sample) -> PrefixTree {
    let trie = x.trie();
    let mut machine = PartialRewardMachine::new(x.props().clone());
    let mut incoming = vec![None];
    let mut queue = VecDeque::from([(0usize, 0usize)]);
    while let Some((node, id)) = queue.pop_front() {
        for (&l, &(child, r)) in &trie[node] {
            let cid = machine.add_state();
            machine
                .set(id, l, cid, r)
                .expect("labels were checked on insert");
            incoming.push(Some((id, l, r)));
            queue.push_back((child, cid));
        }
    }
    PrefixTree { machine, incoming }
}
