use super::LabeledMdp;
use crate::automata::RewardMachine;
use crate::error::{Error, Result};

/// One entry of a product transition row.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProductTransition {
    pub next: usize,
    pub prob: f64,
    pub reward: f64,
}

/// Product of a labeled MDP with a reward machine. Product state `(s, v)` has
/// id `s * |V| + v`; the machine consumes the label of each transition as it
/// is taken, and the reward `σ(v, L(s, a, s'))` becomes Markovian.
#[derive(Clone, Debug)]
pub struct ProductMdp {
    mdp_states: usize,
    machine_states: usize,
    actions: usize,
    initial: usize,
    discount: f64,
    rows: Vec<Vec<ProductTransition>>,
}

impl ProductMdp {
    pub fn id(&self, s: usize, v: usize) -> usize {
        s * self.machine_states + v
    }

    pub fn split(&self, x: usize) -> (usize, usize) {
        (x / self.machine_states, x % self.machine_states)
    }

    pub fn num_states(&self) -> usize {
        self.mdp_states * self.machine_states
    }

    pub fn mdp_states(&self) -> usize {
        self.mdp_states
    }

    pub fn machine_states(&self) -> usize {
        self.machine_states
    }

    pub fn num_actions(&self) -> usize {
        self.actions
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }

    pub fn transitions(&self, x: usize, a: usize) -> &[ProductTransition] {
        &self.rows[x * self.actions + a]
    }
}

pub fn product<M: LabeledMdp + ?Sized>(mdp: &M, machine: &RewardMachine) -> Result<ProductMdp> {
    if mdp.props() != machine.props() {
        return Err(Error::UniverseMismatch {
            left: mdp.props().to_string(),
            right: machine.props().to_string(),
        });
    }
    let (ns, nv, na) = (mdp.num_states(), machine.num_states(), mdp.num_actions());
    let mut rows = Vec::with_capacity(ns * nv * na);
    for s in 0..ns {
        for v in 0..nv {
            for a in 0..na {
                rows.push(
                    mdp.transitions(s, a)
                        .iter()
                        .map(|t| {
                            let (v2, r) = machine.step(v, t.label);
                            ProductTransition {
                                next: t.next * nv + v2,
                                prob: t.prob,
                                reward: r,
                            }
                        })
                        .collect(),
                );
            }
        }
    }
    Ok(ProductMdp {
        mdp_states: ns,
        machine_states: nv,
        actions: na,
        initial: mdp.initial() * nv + machine.initial(),
        discount: mdp.discount(),
        rows,
    })
}
