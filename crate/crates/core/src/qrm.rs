//! Q-learning with reward machines: one q-table per machine state, updated
//! counterfactually for every machine state on each environment step.

use rand::Rng;

use crate::automata::{Label, Reward, RewardMachine, Trace};
use crate::environments::TaskSpec;
use crate::error::{Error, Result};
use crate::mdp::{sample_step, LabeledMdp};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Hyper {
    pub alpha: f64,
    pub epsilon: f64,
    pub gamma: f64,
}

impl Default for Hyper {
    fn default() -> Self {
        Hyper {
            alpha: 0.1,
            epsilon: 0.1,
            gamma: 0.9,
        }
    }
}

impl Hyper {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::input(format!("alpha {} outside (0, 1]", self.alpha)));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(Error::input(format!(
                "epsilon {} outside [0, 1]",
                self.epsilon
            )));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::input(format!("gamma {} outside [0, 1]", self.gamma)));
        }
        Ok(())
    }
}

/// `q^v(s, a)` for every machine state `v`.
#[derive(Clone, Debug, PartialEq)]
pub struct QTableSet {
    mdp_states: usize,
    actions: usize,
    tables: Vec<Vec<f64>>,
    pub hyper: Hyper,
}

impl QTableSet {
    /// Zero-initialized tables.
    pub fn new(machine_states: usize, mdp_states: usize, actions: usize, hyper: Hyper) -> Self {
        QTableSet {
            mdp_states,
            actions,
            tables: vec![vec![0.0; mdp_states * actions]; machine_states],
            hyper,
        }
    }

    pub fn for_machine<M: LabeledMdp + ?Sized>(
        machine: &RewardMachine,
        mdp: &M,
        hyper: Hyper,
    ) -> Self {
        Self::new(
            machine.num_states(),
            mdp.num_states(),
            mdp.num_actions(),
            hyper,
        )
    }

    pub fn machine_states(&self) -> usize {
        self.tables.len()
    }

    pub fn mdp_states(&self) -> usize {
        self.mdp_states
    }

    pub fn num_actions(&self) -> usize {
        self.actions
    }

    pub fn table(&self, v: usize) -> &[f64] {
        &self.tables[v]
    }

    pub fn table_mut(&mut self, v: usize) -> &mut [f64] {
        &mut self.tables[v]
    }

    /// Replaces the tables, keeping dimensions and hyperparameters.
    pub(crate) fn with_tables(&self, tables: Vec<Vec<f64>>) -> Self {
        QTableSet {
            mdp_states: self.mdp_states,
            actions: self.actions,
            tables,
            hyper: self.hyper,
        }
    }

    pub fn row(&self, v: usize, s: usize) -> &[f64] {
        &self.tables[v][s * self.actions..(s + 1) * self.actions]
    }

    pub fn get(&self, v: usize, s: usize, a: usize) -> f64 {
        self.tables[v][s * self.actions + a]
    }

    pub fn set(&mut self, v: usize, s: usize, a: usize, q: f64) {
        self.tables[v][s * self.actions + a] = q;
    }

    pub fn max(&self, v: usize, s: usize) -> f64 {
        self.row(v, s)
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// One tabular update toward `r + γ · max_a' q^{v'}(s', a')`.
    pub fn update(&mut self, v: usize, s: usize, a: usize, r: Reward, v2: usize, s2: usize) {
        let target = r + self.hyper.gamma * self.max(v2, s2);
        let alpha = self.hyper.alpha;
        let q = &mut self.tables[v][s * self.actions + a];
        *q += alpha * (target - *q);
    }
}

/// Uniform action with probability `epsilon`, otherwise a maximizer of `row`
/// with ties broken uniformly at random.
pub fn epsilon_greedy<R: Rng + ?Sized>(row: &[f64], epsilon: f64, rng: &mut R) -> usize {
    if epsilon > 0.0 && rng.gen::<f64>() < epsilon {
        return rng.gen_range(0..row.len());
    }
    greedy(row, rng)
}

pub(crate) fn greedy<R: Rng + ?Sized>(row: &[f64], rng: &mut R) -> usize {
    let best = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let ties = row.iter().filter(|&&q| q == best).count();
    if ties == 1 {
        return row.iter().position(|&q| q == best).expect("maximum exists");
    }
    let pick = rng.gen_range(0..ties);
    row.iter()
        .enumerate()
        .filter(|(_, &q)| q == best)
        .nth(pick)
        .map(|(a, _)| a)
        .expect("tie index in range")
}

/// Where step rewards come from during an episode.
#[derive(Clone, Copy, Debug)]
pub enum RewardSource<'a> {
    /// The reward machine being learned with; the episode ends when it enters
    /// one of its goal states.
    Machine,
    /// Rewards observed from the environment, i.e. the task's ground-truth
    /// machine; the episode ends when the task's goal is reached.
    Environment(&'a TaskSpec),
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeResult {
    pub trace: Trace,
    pub total_reward: Reward,
    pub steps: usize,
}

fn check_keys<M: LabeledMdp + ?Sized>(
    mdp: &M,
    machine: &RewardMachine,
    q: &QTableSet,
) -> Result<()> {
    if q.machine_states() != machine.num_states()
        || q.mdp_states() != mdp.num_states()
        || q.num_actions() != mdp.num_actions()
    {
        return Err(Error::input(format!(
            "q-tables sized {}×{}×{} do not match machine/MDP {}×{}×{}",
            q.machine_states(),
            q.mdp_states(),
            q.num_actions(),
            machine.num_states(),
            mdp.num_states(),
            mdp.num_actions()
        )));
    }
    if machine.props() != mdp.props() {
        return Err(Error::UniverseMismatch {
            left: mdp.props().to_string(),
            right: machine.props().to_string(),
        });
    }
    Ok(())
}

/// Runs one QRM episode: ε-greedy actions from `q^v`, the machine tracks the
/// label sequence, `q^v` is updated with the chosen reward source and every
/// other `q^v̂` with the machine's own counterfactual transition and output.
pub fn qrm_episode<M, R>(
    mdp: &M,
    machine: &RewardMachine,
    q: &mut QTableSet,
    eplength: usize,
    source: RewardSource<'_>,
    rng: &mut R,
) -> Result<EpisodeResult>
where
    M: LabeledMdp + ?Sized,
    R: Rng + ?Sized,
{
    check_keys(mdp, machine, q)?;
    let own_goal = match source {
        RewardSource::Machine => machine.goal_states(),
        RewardSource::Environment(_) => Vec::new(),
    };
    let mut s = mdp.initial();
    let mut v = machine.initial();
    let mut truth_v = match source {
        RewardSource::Environment(t) => t.machine.initial(),
        RewardSource::Machine => 0,
    };
    let mut labels: Vec<Label> = Vec::new();
    let mut rewards = Vec::new();
    let mut total = 0.0;
    for _ in 0..eplength {
        let a = epsilon_greedy(q.row(v, s), q.hyper.epsilon, rng);
        let (s2, l) = sample_step(mdp, s, a, rng);
        let (v2, hyp_r) = machine.step(v, l);
        let (r, done) = match source {
            RewardSource::Machine => (hyp_r, own_goal[v2]),
            RewardSource::Environment(t) => {
                let (tv2, r) = t.machine.step(truth_v, l);
                truth_v = tv2;
                (r, t.is_terminal(tv2))
            }
        };
        q.update(v, s, a, r, v2, s2);
        for vh in (0..machine.num_states()).filter(|&vh| vh != v) {
            let (vh2, rh) = machine.step(vh, l);
            q.update(vh, s, a, rh, vh2, s2);
        }
        labels.push(l);
        rewards.push(r);
        total += r;
        s = s2;
        v = v2;
        if done {
            break;
        }
    }
    let steps = labels.len();
    Ok(EpisodeResult {
        trace: Trace { labels, rewards },
        total_reward: total,
        steps,
    })
}

/// Mean undiscounted reward of greedy (ε = 0) rollouts that pick actions from
/// `q` under `machine` and collect rewards from `source`.
pub fn greedy_policy_value<M, R>(
    mdp: &M,
    machine: &RewardMachine,
    q: &QTableSet,
    episodes: usize,
    eplength: usize,
    source: RewardSource<'_>,
    rng: &mut R,
) -> Result<f64>
where
    M: LabeledMdp + ?Sized,
    R: Rng + ?Sized,
{
    check_keys(mdp, machine, q)?;
    if episodes == 0 {
        return Ok(0.0);
    }
    let own_goal = machine.goal_states();
    let mut sum = 0.0;
    for _ in 0..episodes {
        let (mut s, mut v) = (mdp.initial(), machine.initial());
        let mut truth_v = match source {
            RewardSource::Environment(t) => t.machine.initial(),
            RewardSource::Machine => 0,
        };
        for _ in 0..eplength {
            let a = greedy(q.row(v, s), rng);
            let (s2, l) = sample_step(mdp, s, a, rng);
            let (v2, hyp_r) = machine.step(v, l);
            let done = match source {
                RewardSource::Machine => {
                    sum += hyp_r;
                    own_goal[v2]
                }
                RewardSource::Environment(t) => {
                    let (tv2, r) = t.machine.step(truth_v, l);
                    truth_v = tv2;
                    sum += r;
                    t.is_terminal(tv2)
                }
            };
            s = s2;
            v = v2;
            if done {
                break;
            }
        }
    }
    Ok(sum / episodes as f64)
}
