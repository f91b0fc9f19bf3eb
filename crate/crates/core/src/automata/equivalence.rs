//! State equivalence between reward machines by Moore partition refinement.

use std::collections::HashMap;

use super::machine::{reward_key, RewardMachine};
use crate::error::{Error, Result};

/// Equivalence classes over the disjoint union of two machines' states.
/// `v ∼ v̂` iff both produce the same rewards on every label sequence.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StateEquivalence {
    left: Vec<usize>,
    right: Vec<usize>,
}

impl StateEquivalence {
    pub fn related(&self, v1: usize, v2: usize) -> bool {
        self.left[v1] == self.right[v2]
    }

    /// Block id of a state of the first machine.
    pub fn class_left(&self, v: usize) -> usize {
        self.left[v]
    }

    /// Block id of a state of the second machine.
    pub fn class_right(&self, v: usize) -> usize {
        self.right[v]
    }

    /// All related pairs `(v1, v2)` in lexicographic order.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (v1, c1) in self.left.iter().enumerate() {
            for (v2, c2) in self.right.iter().enumerate() {
                if c1 == c2 {
                    out.push((v1, v2));
                }
            }
        }
        out
    }

    /// Lowest-id state of the first machine related to `v2`, if any.
    pub fn first_left_match(&self, v2: usize) -> Option<usize> {
        self.left.iter().position(|&c| c == self.right[v2])
    }
}

pub fn state_equivalence(m1: &RewardMachine, m2: &RewardMachine) -> Result<StateEquivalence> {
    if m1.props() != m2.props() {
        return Err(Error::UniverseMismatch {
            left: m1.props().to_string(),
            right: m2.props().to_string(),
        });
    }
    let n1 = m1.num_states();
    let n = n1 + m2.num_states();
    let machine = |u: usize| if u < n1 { (m1, u) } else { (m2, u - n1) };
    let labels: Vec<_> = m1.props().labels().collect();

    // Initial partition: states with identical output rows.
    let mut block = assign(n, |u| {
        let (m, v) = machine(u);
        labels
            .iter()
            .map(|&l| reward_key(m.sigma(v, l)))
            .collect::<Vec<_>>()
    });
    let mut count = block.iter().max().map_or(0, |b| b + 1);
    loop {
        let refined = assign(n, |u| {
            let (m, v) = machine(u);
            let offset = if u < n1 { 0 } else { n1 };
            let mut sig = Vec::with_capacity(labels.len() + 1);
            sig.push(block[u] as u64);
            sig.extend(labels.iter().map(|&l| block[m.delta(v, l) + offset] as u64));
            sig
        });
        let new_count = refined.iter().max().map_or(0, |b| b + 1);
        block = refined;
        if new_count == count {
            break;
        }
        count = new_count;
    }
    let right = block.split_off(n1);
    Ok(StateEquivalence { left: block, right })
}

/// Numbers elements by first occurrence of their signature.
fn assign<K: std::hash::Hash + Eq>(n: usize, mut sig: impl FnMut(usize) -> K) -> Vec<usize> {
    let mut ids = HashMap::new();
    (0..n)
        .map(|u| {
            let next = ids.len();
            *ids.entry(sig(u)).or_insert(next)
        })
        .collect()
}

/// `true` iff the initial states of both machines are equivalent.
pub fn machines_equivalent(m1: &RewardMachine, m2: &RewardMachine) -> Result<bool> {
    Ok(state_equivalence(m1, m2)?.related(m1.initial(), m2.initial()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automata::label::{Label, PropSet};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn props(n: usize) -> PropSet {
        PropSet::new(["p", "q", "r"][..n].iter().copied()).unwrap()
    }

    /// Exhaustive oracle: compare outputs on every label sequence up to `depth`.
    fn brute_force(
        m1: &RewardMachine,
        v1: usize,
        m2: &RewardMachine,
        v2: usize,
        depth: usize,
    ) -> bool {
        let labels: Vec<Label> = m1.props().labels().collect();
        let mut frontier = vec![(v1, v2)];
        for _ in 0..depth {
            let mut next = Vec::new();
            for &(a, b) in &frontier {
                for &l in &labels {
                    let (a2, r1) = m1.step(a, l);
                    let (b2, r2) = m2.step(b, l);
                    if r1 != r2 {
                        return false;
                    }
                    next.push((a2, b2));
                }
            }
            next.sort_unstable();
            next.dedup();
            frontier = next;
        }
        true
    }

    #[test]
    fn constant_machines_are_equivalent() {
        let a = RewardMachine::constant(props(2), 0.0);
        let b = RewardMachine::constant(props(2), 0.0);
        assert_eq!(state_equivalence(&a, &b).unwrap().pairs(), vec![(0, 0)]);
        let c = RewardMachine::constant(props(2), 1.0);
        assert!(state_equivalence(&a, &c).unwrap().pairs().is_empty());
    }

    #[test]
    fn universe_mismatch() {
        let a = RewardMachine::constant(props(1), 0.0);
        let b = RewardMachine::constant(props(2), 0.0);
        assert!(matches!(
            state_equivalence(&a, &b),
            Err(Error::UniverseMismatch { .. })
        ));
    }

    #[test]
    fn agrees_with_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let p = props(rng.gen_range(1..=2));
            let m1 = RewardMachine::random(p.clone(), rng.gen_range(1..=4), &[0.0, 1.0], &mut rng);
            let m2 = RewardMachine::random(p, rng.gen_range(1..=4), &[0.0, 1.0], &mut rng);
            let eq = state_equivalence(&m1, &m2).unwrap();
            let depth = m1.num_states() * m2.num_states();
            for v1 in 0..m1.num_states() {
                for v2 in 0..m2.num_states() {
                    assert_eq!(eq.related(v1, v2), brute_force(&m1, v1, &m2, v2, depth));
                }
            }
        }
    }

    #[test]
    fn permuted_machine_is_equivalent_statewise() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = RewardMachine::random(props(2), 4, &[0.0, 1.0], &mut rng);
        let pm = m.permuted(&[3, 1, 0, 2]).unwrap();
        let eq = state_equivalence(&m, &pm).unwrap();
        for (v, &w) in [3, 1, 0, 2].iter().enumerate() {
            assert!(eq.related(v, w));
        }
    }

    proptest! {
        #[test]
        fn relation_properties(seed in any::<u64>(), n1 in 1usize..5, n2 in 1usize..5) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = props(2);
            let m1 = RewardMachine::random(p.clone(), n1, &[0.0, 1.0], &mut rng);
            let m2 = RewardMachine::random(p.clone(), n2, &[0.0, 1.0], &mut rng);
            let e12 = state_equivalence(&m1, &m2).unwrap();
            let e21 = state_equivalence(&m2, &m1).unwrap();
            let e11 = state_equivalence(&m1, &m1).unwrap();
            for v in 0..n1 {
                prop_assert!(e11.related(v, v));
            }
            for v1 in 0..n1 {
                for v2 in 0..n2 {
                    prop_assert_eq!(e12.related(v1, v2), e21.related(v2, v1));
                    if e12.related(v1, v2) {
                        for l in p.labels() {
                            prop_assert!(e12.related(m1.delta(v1, l), m2.delta(v2, l)));
                        }
                        // transitivity through m2
                        for w in 0..n1 {
                            if e12.related(w, v2) {
                                prop_assert!(e11.related(v1, w));
                            }
                        }
                    }
                }
            }
        }
    }
}
