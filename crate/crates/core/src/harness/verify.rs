//! Offline checks: agreement of two machines on the label sequences an MDP
//! can produce, and equality of optimal q-values across equivalent states.

use std::collections::{BTreeMap, HashMap, VecDeque};

use crate::automata::machine::reward_key;
use crate::automata::{state_equivalence, Label, RewardMachine};
use crate::error::{Error, Result};
use crate::mdp::{product, value_iteration, LabeledMdp, DEFAULT_MAX_SWEEPS};

fn check_universes<M: LabeledMdp + ?Sized>(
    mdp: &M,
    m1: &RewardMachine,
    m2: &RewardMachine,
) -> Result<()> {
    for m in [m1, m2] {
        if m.props() != mdp.props() {
            return Err(Error::UniverseMismatch {
                left: mdp.props().to_string(),
                right: m.props().to_string(),
            });
        }
    }
    Ok(())
}

/// Breadth-first search over `(MDP states compatible with λ, m1 state, m2
/// state)`, building the determinized label automaton of the MDP on the fly.
/// Exploration below a node stops once `m2` enters a state in `stop`.
fn search<M: LabeledMdp + ?Sized>(
    mdp: &M,
    m1: &RewardMachine,
    m2: &RewardMachine,
    horizon: usize,
    stop: &[bool],
) -> Result<Option<Vec<Label>>> {
    if horizon < 1 {
        return Err(Error::input("horizon must be at least 1"));
    }
    check_universes(mdp, m1, m2)?;
    let words = mdp.num_states().div_ceil(64);
    let mut start = vec![0u64; words];
    start[mdp.initial() / 64] |= 1 << (mdp.initial() % 64);
    let root = (start, m1.initial(), m2.initial());

    // Per node: parent index and the label leading to it.
    let mut nodes: Vec<(usize, Label)> = vec![(usize::MAX, Label::EMPTY)];
    let mut seen: HashMap<(Vec<u64>, usize, usize), usize> = HashMap::new();
    let mut queue = VecDeque::from([(root.clone(), 0usize, 0usize)]);
    seen.insert(root, 0);
    let path = |nodes: &[(usize, Label)], mut i: usize, last: Label| {
        let mut out = vec![last];
        while i != 0 {
            out.push(nodes[i].1);
            i = nodes[i].0;
        }
        out.reverse();
        out
    };
    while let Some(((set, v1, v2), id, depth)) = queue.pop_front() {
        if depth == horizon {
            continue;
        }
        let mut succ: BTreeMap<Label, Vec<u64>> = BTreeMap::new();
        for (w, &bits) in set.iter().enumerate() {
            let mut b = bits;
            while b != 0 {
                let s = w * 64 + b.trailing_zeros() as usize;
                b &= b - 1;
                for a in 0..mdp.num_actions() {
                    for t in mdp.transitions(s, a).iter().filter(|t| t.prob > 0.0) {
                        let next = succ.entry(t.label).or_insert_with(|| vec![0; words]);
                        next[t.next / 64] |= 1 << (t.next % 64);
                    }
                }
            }
        }
        for (l, next) in succ {
            let (u1, r1) = m1.step(v1, l);
            let (u2, r2) = m2.step(v2, l);
            if reward_key(r1) != reward_key(r2) {
                return Ok(Some(path(&nodes, id, l)));
            }
            if stop[u2] {
                continue;
            }
            let key = (next, u1, u2);
            if !seen.contains_key(&key) {
                nodes.push((id, l));
                let nid = nodes.len() - 1;
                seen.insert(key.clone(), nid);
                queue.push_back((key, nid, depth + 1));
            }
        }
    }
    Ok(None)
}

/// A shortest label sequence of length at most `horizon` that the MDP can
/// produce and on which `m1` and `m2` emit different rewards, if any.
pub fn check_equivalence_on_attainable<M: LabeledMdp + ?Sized>(
    mdp: &M,
    m1: &RewardMachine,
    m2: &RewardMachine,
    horizon: usize,
) -> Result<Option<Vec<Label>>> {
    search(mdp, m1, m2, horizon, &vec![false; m2.num_states()])
}

/// As [`check_equivalence_on_attainable`], but sequences end when the
/// reference machine `m2` reaches one of its goal states, since episodes
/// terminate there and nothing after it can be observed.
pub fn check_episodic_equivalence<M: LabeledMdp + ?Sized>(
    mdp: &M,
    m1: &RewardMachine,
    m2: &RewardMachine,
    horizon: usize,
) -> Result<Option<Vec<Label>>> {
    search(mdp, m1, m2, horizon, &m2.goal_states())
}

#[derive(Clone, Debug, PartialEq)]
pub struct TransferReport {
    /// A distinguishing attainable sequence; when present nothing was compared.
    pub witness: Option<Vec<Label>>,
    /// Number of `∼`-related state pairs compared.
    pub pairs: usize,
    pub max_deviation: f64,
    pub tol: f64,
}

impl TransferReport {
    pub fn holds(&self) -> bool {
        self.witness.is_none() && self.max_deviation <= 2.0 * self.tol
    }
}

/// Solves both product MDPs to `tol` and reports the largest difference of
/// `q*(s, v, a)` and `q*(s, v̂, a)` over equivalent pairs `v ∼ v̂`.
pub fn verify_transfer_theorem<M: LabeledMdp + ?Sized>(
    mdp: &M,
    m1: &RewardMachine,
    m2: &RewardMachine,
    tol: f64,
) -> Result<TransferReport> {
    let witness = check_equivalence_on_attainable(mdp, m1, m2, usize::MAX)?;
    if witness.is_some() {
        return Ok(TransferReport {
            witness,
            pairs: 0,
            max_deviation: f64::NAN,
            tol,
        });
    }
    let q1 = value_iteration(&product(mdp, m1)?, tol, DEFAULT_MAX_SWEEPS)?;
    let q2 = value_iteration(&product(mdp, m2)?, tol, DEFAULT_MAX_SWEEPS)?;
    let pairs = state_equivalence(m1, m2)?.pairs();
    let mut max_deviation: f64 = 0.0;
    for &(v1, v2) in &pairs {
        for s in 0..mdp.num_states() {
            for a in 0..mdp.num_actions() {
                max_deviation = max_deviation.max((q1.q(s, v1, a) - q2.q(s, v2, a)).abs());
            }
        }
    }
    Ok(TransferReport {
        witness: None,
        pairs: pairs.len(),
        max_deviation,
        tol,
    })
}
