use std::io::Write;

use super::ProductMdp;
use crate::error::{Error, Result};

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_SWEEPS: usize = 1_000_000;

/// Action values `q(s, v, a)` over a product MDP.
#[derive(Clone, Debug, PartialEq)]
pub struct ValueTable {
    machine_states: usize,
    actions: usize,
    q: Vec<f64>,
    pub sweeps: usize,
    /// Sup-norm change of the last sweep.
    pub residual: f64,
}

impl ValueTable {
    pub fn q(&self, s: usize, v: usize, a: usize) -> f64 {
        self.q[(s * self.machine_states + v) * self.actions + a]
    }

    /// `max_a q(s, v, a)`.
    pub fn value(&self, s: usize, v: usize) -> f64 {
        let x = s * self.machine_states + v;
        max(&self.q[x * self.actions..(x + 1) * self.actions])
    }

    pub fn mdp_states(&self) -> usize {
        self.q.len() / (self.machine_states * self.actions)
    }

    pub fn machine_states(&self) -> usize {
        self.machine_states
    }

    pub fn num_actions(&self) -> usize {
        self.actions
    }

    /// Writes `s,v,a,q` rows with a header.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "s,v,a,q")?;
        for s in 0..self.mdp_states() {
            for v in 0..self.machine_states {
                for a in 0..self.actions {
                    writeln!(out, "{s},{v},{a},{}", self.q(s, v, a))?;
                }
            }
        }
        Ok(())
    }
}

fn max(xs: &[f64]) -> f64 {
    xs.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// One synchronous Bellman optimality sweep; returns the sup-norm change.
fn sweep(p: &ProductMdp, gamma: f64, q: &[f64], out: &mut [f64]) -> f64 {
    let na = p.num_actions();
    let values: Vec<f64> = q.chunks(na).map(max).collect();
    let mut residual: f64 = 0.0;
    for x in 0..p.num_states() {
        for a in 0..na {
            let new: f64 = p
                .transitions(x, a)
                .iter()
                .map(|t| t.prob * (t.reward + gamma * values[t.next]))
                .sum();
            let i = x * na + a;
            residual = residual.max((new - q[i]).abs());
            out[i] = new;
        }
    }
    residual
}

/// Iterates the Bellman optimality operator from `q = 0` until the iterate is
/// within `tol` of the fixed point in sup-norm (using the contraction bound
/// `γ/(1-γ) · residual`).
pub fn value_iteration(p: &ProductMdp, tol: f64, max_sweeps: usize) -> Result<ValueTable> {
    let gamma = p.discount();
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::input(format!("discount {gamma} outside [0, 1)")));
    }
    let n = p.num_states() * p.num_actions();
    let mut q = vec![0.0; n];
    let mut next = vec![0.0; n];
    let target = if gamma == 0.0 {
        f64::INFINITY
    } else {
        tol * (1.0 - gamma) / gamma
    };
    let mut residual = f64::INFINITY;
    for sweeps in 1..=max_sweeps {
        residual = sweep(p, gamma, &q, &mut next);
        std::mem::swap(&mut q, &mut next);
        if residual <= target {
            return Ok(ValueTable {
                machine_states: p.machine_states(),
                actions: p.num_actions(),
                q,
                sweeps,
                residual,
            });
        }
    }
    Err(Error::NoConvergence {
        sweeps: max_sweeps,
        residual,
    })
}

/// Optimal `k`-horizon action values with discount `gamma`:
/// `q_0 = 0`, `q_{i+1}(x, a) = Σ p(x, a, x') (r + γ max_a' q_i(x', a'))`.
/// With `gamma = 1` this is the best expected undiscounted reward over `k`
/// steps.
pub fn k_horizon_q(p: &ProductMdp, k: usize, gamma: f64) -> ValueTable {
    let n = p.num_states() * p.num_actions();
    let mut q = vec![0.0; n];
    let mut next = vec![0.0; n];
    let mut residual = 0.0;
    for _ in 0..k {
        residual = sweep(p, gamma, &q, &mut next);
        std::mem::swap(&mut q, &mut next);
    }
    ValueTable {
        machine_states: p.machine_states(),
        actions: p.num_actions(),
        q,
        sweeps: k,
        residual,
    }
}
