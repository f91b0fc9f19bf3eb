//! State-merging inference (red/blue RPNI adapted to Mealy outputs).

use std::collections::{BTreeMap, VecDeque};

use super::prefix_tree::build_prefix_tree;
use super::sample::Sample;
use crate::automata::machine::reward_key;
use crate::automata::{Label, PartialRewardMachine, Reward, RewardMachine};

enum Undo {
    Edge(usize, Label, Option<(usize, Reward)>),
    Parent(usize, Option<(usize, Label)>),
    Dead(usize),
}

struct Merger {
    edges: Vec<BTreeMap<Label, (usize, Reward)>>,
    parent: Vec<Option<(usize, Label)>>,
    dead: Vec<bool>,
    log: Vec<Undo>,
}

impl Merger {
    fn set_edge(&mut self, from: usize, l: Label, to: usize, r: Reward) {
        let old = self.edges[from].insert(l, (to, r));
        self.log.push(Undo::Edge(from, l, old));
    }

    fn set_parent(&mut self, u: usize, p: (usize, Label)) {
        let old = self.parent[u].replace(p);
        self.log.push(Undo::Parent(u, old));
    }

    fn kill(&mut self, u: usize) {
        self.dead[u] = true;
        self.log.push(Undo::Dead(u));
    }

    fn rollback(&mut self) {
        while let Some(op) = self.log.pop() {
            match op {
                Undo::Edge(from, l, Some(old)) => {
                    self.edges[from].insert(l, old);
                }
                Undo::Edge(from, l, None) => {
                    self.edges[from].remove(&l);
                }
                Undo::Parent(u, old) => self.parent[u] = old,
                Undo::Dead(u) => self.dead[u] = false,
            }
        }
    }

    /// Redirects the edge into blue state `q` to red state `r` and folds the
    /// subtree of `q` into `r`. Returns `false` on an output conflict.
    fn try_merge(&mut self, r: usize, q: usize) -> bool {
        let (p, l) = self.parent[q].expect("blue states have a parent");
        let (_, reward) = self.edges[p][&l];
        self.set_edge(p, l, r, reward);
        let mut stack = vec![(r, q)];
        while let Some((a, b)) = stack.pop() {
            self.kill(b);
            let outgoing: Vec<(Label, (usize, Reward))> =
                self.edges[b].iter().map(|(&l, &e)| (l, e)).collect();
            for (l, (b2, rb)) in outgoing {
                match self.edges[a].get(&l).copied() {
                    Some((a2, ra)) => {
                        if reward_key(ra) != reward_key(rb) {
                            return false;
                        }
                        if a2 != b2 {
                            stack.push((a2, b2));
                        }
                    }
                    None => {
                        self.set_edge(a, l, b2, rb);
                        self.set_parent(b2, (a, l));
                    }
                }
            }
        }
        true
    }
}

/// Infers a machine consistent with every trace of `x`: builds the prefix
/// tree, then visits blue states in breadth-first order and merges each into
/// the first red state that keeps outputs consistent (promoting it to red
/// otherwise). Undefined transitions go to a sink emitting `default_reward`.
pub fn rpni_rm(x: &Sample, default_reward: Reward) -> RewardMachine {
    let tree = build_prefix_tree(x);
    let pt = tree.machine();
    let n = pt.num_states();
    let mut m = Merger {
        edges: (0..n)
            .map(|u| pt.edges(u).map(|(l, t, r)| (l, (t, r))).collect())
            .collect(),
        parent: (0..n)
            .map(|u| tree.incoming(u).map(|(p, l, _)| (p, l)))
            .collect(),
        dead: vec![false; n],
        log: Vec::new(),
    };
    let mut red = vec![0usize];
    let mut is_red = vec![false; n];
    is_red[0] = true;
    loop {
        let blue = red
            .iter()
            .flat_map(|&u| m.edges[u].values().map(|&(t, _)| t))
            .filter(|&t| !is_red[t])
            .min();
        let Some(q) = blue else { break };
        let mut merged = false;
        for &r in &red {
            m.log.clear();
            if m.try_merge(r, q) {
                merged = true;
                break;
            }
            m.rollback();
        }
        m.log.clear();
        if !merged {
            red.push(q);
            red.sort_unstable();
            is_red[q] = true;
        }
    }
    debug_assert!(red.iter().all(|&u| !m.dead[u]));

    // Renumber reachable states breadth-first.
    let mut ids = vec![usize::MAX; n];
    let mut order = vec![0usize];
    ids[0] = 0;
    let mut queue = VecDeque::from([0usize]);
    while let Some(u) = queue.pop_front() {
        for &(t, _) in m.edges[u].values() {
            if ids[t] == usize::MAX {
                ids[t] = order.len();
                order.push(t);
                queue.push_back(t);
            }
        }
    }
    let mut out = PartialRewardMachine::new(x.props().clone());
    for _ in 1..order.len() {
        out.add_state();
    }
    for (i, &u) in order.iter().enumerate() {
        for (&l, &(t, r)) in &m.edges[u] {
            out.set(i, l, ids[t], r)
                .expect("labels come from the sample");
        }
    }
    out.complete_with_sink(default_reward)
}
