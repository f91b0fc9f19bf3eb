//! Minimal consistent machine by bounded backtracking search.
//!
//! For `k = 1, 2, …` the prefix-tree states are assigned, in breadth-first
//! order, to one of `k` classes such that the induced class transition and
//! output functions stay functional and reproduce every sample output. This
//! is the same constraint system a SAT encoding would state; the first `k`
//! with a solution gives a minimal machine.

use super::prefix_tree::build_prefix_tree;
use super::sample::Sample;
use crate::automata::machine::reward_key;
use crate::automata::{Reward, RewardMachine};
use crate::error::{Error, Result};

pub const DEFAULT_K_MAX: usize = 10;
pub const DEFAULT_BUDGET: u64 = 10_000_000;

enum Trail {
    Delta(usize),
    Sigma(usize),
}

struct Frame {
    node: usize,
    next: usize,
    trail_len: usize,
    used: usize,
}

/// Returns `Ok(None)` when no machine with at most `k_max` states is
/// consistent, and `Err(BudgetExhausted)` when the search runs out of
/// node expansions first.
pub fn minimal_consistent_machine(
    x: &Sample,
    k_max: usize,
    budget: u64,
) -> Result<Option<RewardMachine>> {
    let tree = build_prefix_tree(x);
    let n = tree.num_states();
    let labels = x.props().label_count();
    let edges: Vec<(usize, usize, Reward)> = (1..n)
        .map(|u| {
            let (p, l, r) = tree.incoming(u).expect("non-root state");
            (p, l.index(), r)
        })
        .collect();
    let mut expansions = 0u64;
    for k in 1..=k_max {
        let mut class = vec![0usize; n];
        let mut delta: Vec<Option<usize>> = vec![None; k * labels];
        let mut sigma: Vec<Option<Reward>> = vec![None; k * labels];
        let mut trail: Vec<Trail> = Vec::new();
        let mut frames: Vec<Frame> = Vec::new();
        let mut used = 1;
        let mut u = 1;
        let found = 'search: loop {
            // Propagate forced assignments until a choice or a conflict.
            let mut conflict = false;
            while u < n {
                let (p, l, r) = edges[u - 1];
                let idx = class[p] * labels + l;
                match (delta[idx], sigma[idx]) {
                    (Some(d), Some(s)) => {
                        if reward_key(s) != reward_key(r) {
                            conflict = true;
                            break;
                        }
                        class[u] = d;
                        u += 1;
                    }
                    _ => {
                        frames.push(Frame {
                            node: u,
                            next: 0,
                            trail_len: trail.len(),
                            used,
                        });
                        break;
                    }
                }
            }
            if u == n && !conflict {
                break 'search true;
            }
            // Take the next untried option of the innermost choice point.
            loop {
                let Some(f) = frames.last_mut() else {
                    break 'search false;
                };
                while trail.len() > f.trail_len {
                    match trail.pop().expect("trail entry") {
                        Trail::Delta(i) => delta[i] = None,
                        Trail::Sigma(i) => sigma[i] = None,
                    }
                }
                used = f.used;
                // A fresh class is only tried once (symmetry breaking).
                let limit = k.min(f.used + 1);
                if f.next >= limit {
                    frames.pop();
                    continue;
                }
                let choice = f.next;
                f.next += 1;
                expansions += 1;
                if expansions > budget {
                    return Err(Error::BudgetExhausted { budget, states: k });
                }
                u = f.node;
                let (p, l, r) = edges[u - 1];
                let idx = class[p] * labels + l;
                delta[idx] = Some(choice);
                sigma[idx] = Some(r);
                trail.push(Trail::Delta(idx));
                trail.push(Trail::Sigma(idx));
                class[u] = choice;
                used = used.max(choice + 1);
                u += 1;
                continue 'search;
            }
        };
        if found {
            let m = RewardMachine::from_fn(x.props().clone(), used, 0, |v, l| {
                let idx = v * labels + l.index();
                (delta[idx].unwrap_or(v), sigma[idx].unwrap_or(0.0))
            })?;
            return Ok(Some(m));
        }
    }
    Ok(None)
}
