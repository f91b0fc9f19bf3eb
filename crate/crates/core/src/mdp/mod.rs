//! Labeled MDPs, trajectories, attainability, products with reward machines
//! and value iteration.

mod product;
mod value;

pub use product::{product, ProductMdp};
pub use value::{k_horizon_q, value_iteration, ValueTable, DEFAULT_MAX_SWEEPS, DEFAULT_TOL};

use rand::Rng;

use crate::automata::{Label, PropSet};
use crate::error::{Error, Result};

/// One entry of a sparse transition row.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Transition {
    pub next: usize,
    pub prob: f64,
    /// `L(s, a, next)`.
    pub label: Label,
}

/// A finite MDP whose transitions carry labels over a proposition universe.
pub trait LabeledMdp: Sync {
    fn props(&self) -> &PropSet;
    fn num_states(&self) -> usize;
    fn num_actions(&self) -> usize;
    fn initial(&self) -> usize;
    fn discount(&self) -> f64;
    /// Sparse successor distribution `p(s, a, ·)` with labels.
    fn transitions(&self, s: usize, a: usize) -> &[Transition];

    /// `L(s, a, s')`, or `None` when `s'` is not a successor.
    fn label(&self, s: usize, a: usize, next: usize) -> Option<Label> {
        self.transitions(s, a)
            .iter()
            .find(|t| t.next == next)
            .map(|t| t.label)
    }
}

/// Explicit table-backed MDP. All environments build one of these.
#[derive(Clone, Debug)]
pub struct TabularMdp {
    props: PropSet,
    states: usize,
    actions: usize,
    initial: usize,
    discount: f64,
    rows: Vec<Vec<Transition>>,
}

impl TabularMdp {
    /// `rows[s * actions + a]` is the distribution `p(s, a, ·)`.
    pub fn new(
        props: PropSet,
        actions: usize,
        initial: usize,
        discount: f64,
        rows: Vec<Vec<Transition>>,
    ) -> Result<Self> {
        if actions == 0 || rows.is_empty() || !rows.len().is_multiple_of(actions) {
            return Err(Error::input(
                "transition rows do not match the action count",
            ));
        }
        let states = rows.len() / actions;
        if initial >= states {
            return Err(Error::input(format!(
                "initial state {initial} out of range"
            )));
        }
        if !(0.0..1.0).contains(&discount) {
            return Err(Error::input(format!("discount {discount} outside [0, 1)")));
        }
        for (i, row) in rows.iter().enumerate() {
            let mut total = 0.0;
            for t in row {
                if t.next >= states || t.prob.is_nan() || t.prob < 0.0 {
                    return Err(Error::input(format!(
                        "bad transition from state {} action {}",
                        i / actions,
                        i % actions
                    )));
                }
                props.check_label(t.label)?;
                total += t.prob;
            }
            if (total - 1.0).abs() > 1e-9 {
                return Err(Error::input(format!(
                    "row for state {} action {} sums to {total}",
                    i / actions,
                    i % actions
                )));
            }
        }
        Ok(TabularMdp {
            props,
            states,
            actions,
            initial,
            discount,
            rows,
        })
    }

    pub fn with_discount(mut self, discount: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&discount) {
            return Err(Error::input(format!("discount {discount} outside [0, 1)")));
        }
        self.discount = discount;
        Ok(self)
    }
}

impl LabeledMdp for TabularMdp {
    fn props(&self) -> &PropSet {
        &self.props
    }
    fn num_states(&self) -> usize {
        self.states
    }
    fn num_actions(&self) -> usize {
        self.actions
    }
    fn initial(&self) -> usize {
        self.initial
    }
    fn discount(&self) -> f64 {
        self.discount
    }
    fn transitions(&self, s: usize, a: usize) -> &[Transition] {
        &self.rows[s * self.actions + a]
    }
}

/// Samples `s' ~ p(s, a, ·)` and returns it with its label.
pub fn simulate_step<M, R>(mdp: &M, s: usize, a: usize, rng: &mut R) -> Result<(usize, Label)>
where
    M: LabeledMdp + ?Sized,
    R: Rng + ?Sized,
{
    if s >= mdp.num_states() || a >= mdp.num_actions() {
        return Err(Error::input(format!(
            "state {s} or action {a} out of range"
        )));
    }
    Ok(sample_step(mdp, s, a, rng))
}

/// Unchecked variant used in the learning loops.
pub(crate) fn sample_step<M, R>(mdp: &M, s: usize, a: usize, rng: &mut R) -> (usize, Label)
where
    M: LabeledMdp + ?Sized,
    R: Rng + ?Sized,
{
    let row = mdp.transitions(s, a);
    if let [only] = row {
        return (only.next, only.label);
    }
    let mut u: f64 = rng.gen();
    for t in row {
        if u < t.prob {
            return (t.next, t.label);
        }
        u -= t.prob;
    }
    let last = row
        .iter()
        .rev()
        .find(|t| t.prob > 0.0)
        .unwrap_or(&row[row.len() - 1]);
    (last.next, last.label)
}

/// `s0 a0 s1 … ak s(k+1)`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Trajectory {
    pub states: Vec<usize>,
    pub actions: Vec<usize>,
}

impl Trajectory {
    pub fn start(s: usize) -> Self {
        Trajectory {
            states: vec![s],
            actions: Vec::new(),
        }
    }

    pub fn push(&mut self, a: usize, next: usize) {
        self.actions.push(a);
        self.states.push(next);
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }
}

/// Label sequence `L(s0,a0,s1) … L(sk,ak,sk+1)` of a trajectory.
pub fn trace_of<M: LabeledMdp + ?Sized>(mdp: &M, traj: &Trajectory) -> Result<Vec<Label>> {
    if traj.states.len() != traj.actions.len() + 1 {
        return Err(Error::input(
            "trajectory must have one more state than actions",
        ));
    }
    traj.actions
        .iter()
        .enumerate()
        .map(|(i, &a)| {
            let (s, next) = (traj.states[i], traj.states[i + 1]);
            if s >= mdp.num_states() || a >= mdp.num_actions() {
                return Err(Error::input(format!("step {i} out of range")));
            }
            mdp.label(s, a, next)
                .ok_or_else(|| Error::input(format!("step {i}: {s} -> {next} has probability 0")))
        })
        .collect()
}

/// `true` iff some trajectory of positive probability and length at most
/// `horizon` from the initial state induces `labels`.
pub fn attainable<M: LabeledMdp + ?Sized>(mdp: &M, labels: &[Label], horizon: usize) -> bool {
    if labels.len() > horizon {
        return false;
    }
    let n = mdp.num_states();
    let mut frontier = vec![false; n];
    frontier[mdp.initial()] = true;
    for &l in labels {
        let mut next = vec![false; n];
        let mut any = false;
        for s in (0..n).filter(|&s| frontier[s]) {
            for a in 0..mdp.num_actions() {
                for t in mdp.transitions(s, a) {
                    if t.prob > 0.0 && t.label == l {
                        next[t.next] = true;
                        any = true;
                    }
                }
            }
        }
        if !any {
            return false;
        }
        frontier = next;
    }
    true
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Corridor `0 - 1 - … - (n-1)`, actions left/right, `g` on entering the end.
    pub(crate) fn corridor(n: usize) -> TabularMdp {
        let props = PropSet::new(["g"]).unwrap();
        let g = props.label(["g"]).unwrap();
        let mut rows = Vec::new();
        for s in 0..n {
            for a in 0..2 {
                let next = if a == 0 {
                    s.saturating_sub(1)
                } else {
                    (s + 1).min(n - 1)
                };
                let label = if next == n - 1 && next != s {
                    g
                } else {
                    Label::EMPTY
                };
                rows.push(vec![Transition {
                    next,
                    prob: 1.0,
                    label,
                }]);
            }
        }
        TabularMdp::new(props, 2, 0, 0.9, rows).unwrap()
    }

    fn coin() -> TabularMdp {
        let props = PropSet::new(["h"]).unwrap();
        let h = props.label(["h"]).unwrap();
        let row = vec![
            Transition {
                next: 0,
                prob: 0.9,
                label: Label::EMPTY,
            },
            Transition {
                next: 1,
                prob: 0.05,
                label: h,
            },
            Transition {
                next: 2,
                prob: 0.05,
                label: Label::EMPTY,
            },
        ];
        TabularMdp::new(props, 1, 0, 0.9, vec![row.clone(), row.clone(), row]).unwrap()
    }

    #[test]
    fn rejects_malformed_rows() {
        let props = PropSet::new(["h"]).unwrap();
        let bad = vec![vec![Transition {
            next: 0,
            prob: 0.5,
            label: Label::EMPTY,
        }]];
        assert!(TabularMdp::new(props.clone(), 1, 0, 0.9, bad).is_err());
        let out = vec![vec![Transition {
            next: 3,
            prob: 1.0,
            label: Label::EMPTY,
        }]];
        assert!(TabularMdp::new(props.clone(), 1, 0, 0.9, out).is_err());
        let lbl = vec![vec![Transition {
            next: 0,
            prob: 1.0,
            label: Label(4),
        }]];
        assert!(TabularMdp::new(props, 1, 0, 0.9, lbl).is_err());
    }

    #[test]
    fn deterministic_row() {
        let m = corridor(8);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..10 {
            assert_eq!(simulate_step(&m, 6, 1, &mut rng).unwrap().0, 7);
        }
        assert!(simulate_step(&m, 8, 0, &mut rng).is_err());
    }

    #[test]
    fn slip_frequencies() {
        let m = coin();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mut counts = [0usize; 3];
        let n = 100_000;
        for _ in 0..n {
            counts[simulate_step(&m, 0, 0, &mut rng).unwrap().0] += 1;
        }
        for (c, p) in counts.iter().zip([0.9, 0.05, 0.05]) {
            assert!((*c as f64 / n as f64 - p).abs() < 0.01);
        }
    }

    #[test]
    fn seeded_simulation_is_reproducible() {
        let m = coin();
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..50)
                .map(|_| simulate_step(&m, 0, 0, &mut rng).unwrap().0)
                .collect::<Vec<_>>()
        };
        assert_eq!(draw(7), draw(7));
    }

    #[test]
    fn trace_of_walks_labels() {
        let m = corridor(3);
        assert!(trace_of(&m, &Trajectory::start(0)).unwrap().is_empty());
        let mut t = Trajectory::start(0);
        t.push(1, 1);
        t.push(1, 2);
        t.push(1, 2);
        let g = m.props().label(["g"]).unwrap();
        assert_eq!(
            trace_of(&m, &t).unwrap(),
            vec![Label::EMPTY, g, Label::EMPTY]
        );
        let mut bad = Trajectory::start(0);
        bad.push(1, 2);
        assert!(trace_of(&m, &bad).is_err());
    }

    #[test]
    fn attainability() {
        let m = corridor(3);
        let g = m.props().label(["g"]).unwrap();
        assert!(attainable(&m, &[], 0));
        assert!(!attainable(&m, &[g], 5));
        assert!(attainable(&m, &[Label::EMPTY, g], 5));
        assert!(!attainable(&m, &[Label::EMPTY, g], 1));
        assert!(!attainable(&m, &[Label::EMPTY, g, g], 5));
    }
}
