use std::collections::BTreeMap;

use rand::Rng;

use super::label::{Label, PropSet};
use crate::error::{Error, Result};

/// Rewards are compared exactly; environments emit values from a small finite
/// set, and inference treats them as discrete output symbols.
pub type Reward = f64;

/// Hashable key for a reward that identifies `0.0` and `-0.0`.
pub(crate) fn reward_key(r: Reward) -> u64 {
    if r == 0.0 {
        0f64.to_bits()
    } else {
        r.to_bits()
    }
}

/// A paired label sequence and reward sequence of equal length.
#[derive(Clone, Debug, PartialEq)]
pub struct Trace {
    pub labels: Vec<Label>,
    pub rewards: Vec<Reward>,
}

impl Trace {
    pub fn new(labels: Vec<Label>, rewards: Vec<Reward>) -> Result<Self> {
        if labels.len() != rewards.len() {
            return Err(Error::input(format!(
                "trace has {} labels but {} rewards",
                labels.len(),
                rewards.len()
            )));
        }
        if let Some(r) = rewards.iter().find(|r| !r.is_finite()) {
            return Err(Error::input(format!("non-finite reward {r} in trace")));
        }
        Ok(Trace { labels, rewards })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// A total, deterministic Mealy machine from labels to rewards.
///
/// Transition and output tables are dense over all `2^|P|` labels and indexed
/// by `state * label_count + label`.
#[derive(Clone, Debug, PartialEq)]
pub struct RewardMachine {
    props: PropSet,
    initial: usize,
    next: Vec<usize>,
    output: Vec<Reward>,
}

impl RewardMachine {
    pub fn new(
        props: PropSet,
        initial: usize,
        next: Vec<usize>,
        output: Vec<Reward>,
    ) -> Result<Self> {
        let labels = props.label_count();
        if next.is_empty() || !next.len().is_multiple_of(labels) || next.len() != output.len() {
            return Err(Error::input(format!(
                "transition table of length {} and output table of length {} do not match \
                 {labels} labels",
                next.len(),
                output.len()
            )));
        }
        let states = next.len() / labels;
        if initial >= states {
            return Err(Error::input(format!(
                "initial state v{initial} out of range"
            )));
        }
        if let Some(t) = next.iter().find(|&&t| t >= states) {
            return Err(Error::input(format!("transition target v{t} out of range")));
        }
        if let Some(r) = output.iter().find(|r| !r.is_finite()) {
            return Err(Error::input(format!("non-finite output {r}")));
        }
        Ok(RewardMachine {
            props,
            initial,
            next,
            output,
        })
    }

    /// Builds a machine by evaluating `f(state, label) -> (next, reward)`.
    pub fn from_fn<F>(props: PropSet, states: usize, initial: usize, mut f: F) -> Result<Self>
    where
        F: FnMut(usize, Label) -> (usize, Reward),
    {
        let labels = props.label_count();
        let mut next = Vec::with_capacity(states * labels);
        let mut output = Vec::with_capacity(states * labels);
        for v in 0..states {
            for l in props.labels() {
                let (t, r) = f(v, l);
                next.push(t);
                output.push(r);
            }
        }
        Self::new(props, initial, next, output)
    }

    /// Single-state machine emitting `reward` on every label.
    pub fn constant(props: PropSet, reward: Reward) -> Self {
        Self::from_fn(props, 1, 0, |_, _| (0, reward)).expect("constant machine is well formed")
    }

    /// Random total machine; used by property tests and the acceptance suite.
    pub fn random<R: Rng + ?Sized>(
        props: PropSet,
        states: usize,
        rewards: &[Reward],
        rng: &mut R,
    ) -> Self {
        assert!(states > 0 && !rewards.is_empty());
        Self::from_fn(props, states, 0, |_, _| {
            (
                rng.gen_range(0..states),
                rewards[rng.gen_range(0..rewards.len())],
            )
        })
        .expect("random machine is well formed")
    }

    pub fn props(&self) -> &PropSet {
        &self.props
    }

    pub fn num_states(&self) -> usize {
        self.next.len() / self.props.label_count()
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    fn idx(&self, v: usize, l: Label) -> usize {
        v * self.props.label_count() + l.index()
    }

    pub fn delta(&self, v: usize, l: Label) -> usize {
        self.next[self.idx(v, l)]
    }

    pub fn sigma(&self, v: usize, l: Label) -> Reward {
        self.output[self.idx(v, l)]
    }

    /// One transition: `(δ(v, l), σ(v, l))`.
    pub fn step(&self, v: usize, l: Label) -> (usize, Reward) {
        let i = self.idx(v, l);
        (self.next[i], self.output[i])
    }

    /// Rewards produced on `labels` starting from the initial state.
    pub fn run(&self, labels: &[Label]) -> Result<Vec<Reward>> {
        self.run_from(self.initial, labels)
    }

    pub fn run_from(&self, start: usize, labels: &[Label]) -> Result<Vec<Reward>> {
        if start >= self.num_states() {
            return Err(Error::input(format!("state v{start} out of range")));
        }
        let mut v = start;
        let mut out = Vec::with_capacity(labels.len());
        for &l in labels {
            self.props.check_label(l)?;
            let (nv, r) = self.step(v, l);
            out.push(r);
            v = nv;
        }
        Ok(out)
    }

    /// State reached after reading `labels` from the initial state.
    pub fn state_after(&self, labels: &[Label]) -> Result<usize> {
        let mut v = self.initial;
        for &l in labels {
            self.props.check_label(l)?;
            v = self.delta(v, l);
        }
        Ok(v)
    }

    /// `true` iff the machine reproduces the trace's rewards exactly.
    pub fn is_consistent(&self, trace: &Trace) -> Result<bool> {
        if trace.labels.len() != trace.rewards.len() {
            return Err(Error::input("trace labels and rewards differ in length"));
        }
        let mut v = self.initial;
        for (&l, &r) in trace.labels.iter().zip(&trace.rewards) {
            self.props.check_label(l)?;
            let (nv, out) = self.step(v, l);
            if out != r {
                return Ok(false);
            }
            v = nv;
        }
        Ok(true)
    }

    /// Distinct output values, sorted ascending.
    pub fn reward_values(&self) -> Vec<Reward> {
        let mut rs = self.output.clone();
        rs.sort_by(f64::total_cmp);
        rs.dedup_by(|a, b| reward_key(*a) == reward_key(*b));
        rs
    }

    /// States reachable from the initial state.
    pub fn reachable(&self) -> Vec<bool> {
        let mut seen = vec![false; self.num_states()];
        let mut stack = vec![self.initial];
        seen[self.initial] = true;
        while let Some(v) = stack.pop() {
            for l in self.props.labels() {
                let t = self.delta(v, l);
                if !seen[t] {
                    seen[t] = true;
                    stack.push(t);
                }
            }
        }
        seen
    }

    /// Goal states: absorbing with zero output on every label, and entered by
    /// at least one positive-reward edge from another state. Episodes of the
    /// benchmark tasks end once the ground-truth machine reaches one.
    pub fn goal_states(&self) -> Vec<bool> {
        let n = self.num_states();
        let absorbing: Vec<bool> = (0..n)
            .map(|v| self.props.labels().all(|l| self.step(v, l) == (v, 0.0)))
            .collect();
        let mut goal = vec![false; n];
        for v in 0..n {
            for l in self.props.labels() {
                let (t, r) = self.step(v, l);
                if t != v && absorbing[t] && r > 0.0 {
                    goal[t] = true;
                }
            }
        }
        goal
    }

    /// Relabels states so that old state `v` becomes `perm[v]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<RewardMachine> {
        let n = self.num_states();
        let mut seen = vec![false; n];
        if perm.len() != n
            || perm
                .iter()
                .any(|&p| p >= n || std::mem::replace(&mut seen[p], true))
        {
            return Err(Error::input("state permutation is not a bijection"));
        }
        let mut inverse = vec![0; n];
        for (old, &new) in perm.iter().enumerate() {
            inverse[new] = old;
        }
        Self::from_fn(self.props.clone(), n, perm[self.initial], |v, l| {
            let (t, r) = self.step(inverse[v], l);
            (perm[t], r)
        })
    }
}

/// A reward machine whose transition and output functions may be undefined.
/// Inference builds these before totalizing them with a sink.
#[derive(Clone, Debug, PartialEq)]
pub struct PartialRewardMachine {
    props: PropSet,
    initial: usize,
    edges: Vec<BTreeMap<Label, (usize, Reward)>>,
}

impl PartialRewardMachine {
    /// A machine with a single state and no transitions.
    pub fn new(props: PropSet) -> Self {
        PartialRewardMachine {
            props,
            initial: 0,
            edges: vec![BTreeMap::new()],
        }
    }

    pub fn props(&self) -> &PropSet {
        &self.props
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn num_states(&self) -> usize {
        self.edges.len()
    }

    pub fn add_state(&mut self) -> usize {
        self.edges.push(BTreeMap::new());
        self.edges.len() - 1
    }

    /// Defines `δ(from, label) = to` and `σ(from, label) = reward`.
    pub fn set(&mut self, from: usize, label: Label, to: usize, reward: Reward) -> Result<()> {
        self.props.check_label(label)?;
        if from >= self.edges.len() || to >= self.edges.len() {
            return Err(Error::input("transition endpoint out of range"));
        }
        self.edges[from].insert(label, (to, reward));
        Ok(())
    }

    pub fn get(&self, from: usize, label: Label) -> Option<(usize, Reward)> {
        self.edges.get(from)?.get(&label).copied()
    }

    pub fn edges(&self, from: usize) -> impl Iterator<Item = (Label, usize, Reward)> + '_ {
        self.edges[from].iter().map(|(&l, &(t, r))| (l, t, r))
    }

    pub fn transition_count(&self) -> usize {
        self.edges.iter().map(BTreeMap::len).sum()
    }

    /// Output on `labels`, or `None` once an undefined transition is hit.
    pub fn run(&self, labels: &[Label]) -> Option<Vec<Reward>> {
        let mut v = self.initial;
        let mut out = Vec::with_capacity(labels.len());
        for &l in labels {
            let (t, r) = self.get(v, l)?;
            out.push(r);
            v = t;
        }
        Some(out)
    }

    /// Totalizes the machine. Every undefined `(state, label)` pair is routed
    /// to a fresh absorbing sink that outputs `default_reward`; the sink is
    /// only added when at least one pair is undefined.
    pub fn complete_with_sink(&self, default_reward: Reward) -> RewardMachine {
        let labels = self.props.label_count();
        let n = self.edges.len();
        let missing = self.transition_count() < n * labels;
        let states = if missing { n + 1 } else { n };
        let sink = n;
        RewardMachine::from_fn(self.props.clone(), states, self.initial, |v, l| {
            if v == sink {
                return (sink, default_reward);
            }
            self.edges[v]
                .get(&l)
                .copied()
                .unwrap_or((sink, default_reward))
        })
        .expect("completed machine is well formed")
    }
}

/// Free-function form of [`RewardMachine::run`].
pub fn run(machine: &RewardMachine, labels: &[Label]) -> Result<Vec<Reward>> {
    machine.run(labels)
}

/// Free-function form of [`RewardMachine::is_consistent`].
pub fn is_consistent(machine: &RewardMachine, trace: &Trace) -> Result<bool> {
    machine.is_consistent(trace)
}

/// Free-function form of [`PartialRewardMachine::complete_with_sink`].
pub fn complete_with_sink(m: &PartialRewardMachine, default_reward: Reward) -> RewardMachine {
    m.complete_with_sink(default_reward)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn props(names: &[&str]) -> PropSet {
        PropSet::new(names.iter().copied()).unwrap()
    }

    /// Two-step "w then h" machine: v0 -w/0-> v1 -h/1-> v2.
    fn stick() -> RewardMachine {
        let p = props(&["w", "t", "h", "f", "i"]);
        let (w, h) = (p.index_of("w").unwrap(), p.index_of("h").unwrap());
        RewardMachine::from_fn(p, 3, 0, |v, l| match v {
            0 if l.contains(w) => (1, 0.0),
            1 if l.contains(h) => (2, 1.0),
            _ => (v, 0.0),
        })
        .unwrap()
    }

    #[test]
    fn run_follows_transitions() {
        let m = stick();
        let p = m.props().clone();
        let lam = [p.label(["w"]).unwrap(), p.label(["h"]).unwrap()];
        assert_eq!(m.run(&lam).unwrap(), vec![0.0, 1.0]);
        assert_eq!(m.run(&[]).unwrap(), Vec::<f64>::new());
    }

    #[test]
    fn run_rejects_labels_outside_universe() {
        let m = stick();
        assert!(matches!(m.run(&[Label(1 << 7)]), Err(Error::Input(_))));
    }

    /// Reference interpreter working from the raw tables.
    fn naive_run(
        next: &[usize],
        out: &[f64],
        labels_per_state: usize,
        init: usize,
        lam: &[Label],
    ) -> Vec<f64> {
        let mut v = init;
        let mut res = Vec::new();
        for l in lam {
            res.push(out[v * labels_per_state + l.index()]);
            v = next[v * labels_per_state + l.index()];
        }
        res
    }

    #[test]
    fn run_matches_naive_table_walk() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let p = props(&["a", "b"]);
            let next: Vec<usize> = (0..12).map(|_| rng.gen_range(0..3)).collect();
            let out: Vec<f64> = (0..12).map(|_| rng.gen_range(0..2) as f64).collect();
            let m = RewardMachine::new(p, 0, next.clone(), out.clone()).unwrap();
            let lam: Vec<Label> = (0..5).map(|_| Label(rng.gen_range(0..4))).collect();
            assert_eq!(m.run(&lam).unwrap(), naive_run(&next, &out, 4, 0, &lam));
        }
    }

    #[test]
    fn consistency_is_run_then_compare() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let p = props(&["a", "b"]);
            let m = RewardMachine::random(p, 3, &[0.0, 1.0], &mut rng);
            let n = rng.gen_range(0..6);
            let lam: Vec<Label> = (0..n).map(|_| Label(rng.gen_range(0..4))).collect();
            let rho: Vec<f64> = (0..n).map(|_| rng.gen_range(0..2) as f64).collect();
            let t = Trace::new(lam.clone(), rho.clone()).unwrap();
            assert_eq!(m.is_consistent(&t).unwrap(), m.run(&lam).unwrap() == rho);
            let own = Trace::new(lam.clone(), m.run(&lam).unwrap()).unwrap();
            assert!(m.is_consistent(&own).unwrap());
        }
    }

    #[test]
    fn trace_lengths_must_agree() {
        assert!(Trace::new(vec![Label::EMPTY], vec![]).is_err());
        assert!(Trace::new(vec![Label::EMPTY], vec![f64::NAN]).is_err());
    }

    #[test]
    fn sink_completion_of_empty_machine() {
        let p = props(&["a", "b"]);
        let m = PartialRewardMachine::new(p.clone()).complete_with_sink(0.0);
        assert_eq!(m.num_states(), 2);
        for l in p.labels() {
            assert_eq!(m.step(0, l), (1, 0.0));
            assert_eq!(m.step(1, l), (1, 0.0));
        }
    }

    #[test]
    fn sink_completion_of_two_step_prefix_tree() {
        let p = props(&["a"]);
        let a = p.label(["a"]).unwrap();
        let mut pt = PartialRewardMachine::new(p);
        let v1 = pt.add_state();
        let v2 = pt.add_state();
        pt.set(0, a, v1, 0.0).unwrap();
        pt.set(v1, Label::EMPTY, v2, 1.0).unwrap();
        let m = pt.complete_with_sink(0.0);
        assert_eq!(m.num_states(), 4);
        assert_eq!(m.run(&[a, Label::EMPTY]).unwrap(), vec![0.0, 1.0]);
        assert_eq!(m.step(0, Label::EMPTY), (3, 0.0));
    }

    #[test]
    fn sink_completion_keeps_total_machine() {
        let p = props(&["a"]);
        let mut pt = PartialRewardMachine::new(p.clone());
        for l in p.labels() {
            pt.set(0, l, 0, l.index() as f64).unwrap();
        }
        let m = pt.complete_with_sink(0.0);
        assert_eq!(m.num_states(), 1);
        assert_eq!(m.sigma(0, Label(1)), 1.0);
    }

    #[test]
    fn goal_states_need_a_positive_entry() {
        let m = stick();
        assert_eq!(m.goal_states(), vec![false, false, true]);
        let p = props(&["a"]);
        let sink_only = RewardMachine::from_fn(p, 2, 0, |v, l| {
            if v == 0 && l.contains(0) {
                (1, 0.0)
            } else {
                (v, 0.0)
            }
        })
        .unwrap();
        assert_eq!(sink_only.goal_states(), vec![false, false]);
    }

    #[test]
    fn permutation_preserves_behaviour() {
        let m = stick();
        let pm = m.permuted(&[2, 0, 1]).unwrap();
        assert_eq!(pm.initial(), 2);
        let p = m.props().clone();
        let lam = [
            p.label(["h"]).unwrap(),
            p.label(["w"]).unwrap(),
            p.label(["h"]).unwrap(),
        ];
        assert_eq!(pm.run(&lam).unwrap(), m.run(&lam).unwrap());
        assert!(m.permuted(&[0, 0, 1]).is_err());
    }

    proptest! {
        #[test]
        fn run_is_length_preserving_and_prefix_monotone(
            seed in any::<u64>(),
            a in prop::collection::vec(0u32..4, 0..8),
            b in prop::collection::vec(0u32..4, 0..8),
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = RewardMachine::random(props(&["a", "b"]), 3, &[0.0, 1.0, 2.0], &mut rng);
            let la: Vec<Label> = a.into_iter().map(Label).collect();
            let lb: Vec<Label> = b.into_iter().map(Label).collect();
            let whole: Vec<Label> = la.iter().chain(&lb).copied().collect();
            let ra = m.run(&la).unwrap();
            let rw = m.run(&whole).unwrap();
            prop_assert_eq!(rw.len(), whole.len());
            prop_assert_eq!(&rw[..ra.len()], &ra[..]);
        }
    }
}
