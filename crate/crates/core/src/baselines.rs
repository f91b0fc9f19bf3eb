//! QAS: plain Q-learning over environment states augmented with the set of
//! propositions seen so far in the episode.

use rand::Rng;

use crate::environments::TaskSpec;
use crate::error::{Error, Result};
use crate::jirp::{episode_rng, EvalCadence, EvalPoint, JirpConfig, RunMetrics};
use crate::mdp::{sample_step, LabeledMdp};
use crate::qrm::{epsilon_greedy, greedy, Hyper, QTableSet};

/// `(s, seen)` packed as `s · 2^|P| + seen`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AugmentedState {
    pub state: usize,
    pub seen: u32,
}

impl AugmentedState {
    pub fn id(self, props: usize) -> usize {
        (self.state << props) | self.seen as usize
    }
}

#[derive(Clone, Debug)]
pub struct QasOutcome {
    /// One table over augmented states (machine dimension 1).
    pub q: QTableSet,
    pub metrics: RunMetrics,
}

pub fn augmented_state_count<M: LabeledMdp + ?Sized>(mdp: &M) -> usize {
    mdp.num_states() << mdp.props().len()
}

struct Episode {
    total: f64,
    steps: usize,
}

/// Runs one episode; learns when `learn` is set, otherwise acts greedily.
fn episode<M, R>(
    mdp: &M,
    task: &TaskSpec,
    q: &mut QTableSet,
    eplength: usize,
    learn: bool,
    rng: &mut R,
) -> Episode
where
    M: LabeledMdp + ?Sized,
    R: Rng + ?Sized,
{
    let np = mdp.props().len();
    let Hyper {
        alpha,
        epsilon,
        gamma,
    } = q.hyper;
    let mut x = AugmentedState {
        state: mdp.initial(),
        seen: 0,
    };
    let mut v = task.machine.initial();
    let mut total = 0.0;
    let mut steps = 0;
    while steps < eplength {
        let id = x.id(np);
        let a = if learn {
            epsilon_greedy(q.row(0, id), epsilon, rng)
        } else {
            greedy(q.row(0, id), rng)
        };
        let (s2, l) = sample_step(mdp, x.state, a, rng);
        let (v2, r) = task.machine.step(v, l);
        let done = task.is_terminal(v2);
        let x2 = AugmentedState {
            state: s2,
            seen: x.seen | l.bits(),
        };
        if learn {
            let target = if done {
                r
            } else {
                r + gamma * q.max(0, x2.id(np))
            };
            let old = q.get(0, id, a);
            q.set(0, id, a, old + alpha * (target - old));
        }
        total += r;
        steps += 1;
        x = x2;
        v = v2;
        if done {
            break;
        }
    }
    Episode { total, steps }
}

/// Q-learning over augmented states with the environment's rewards. Uses the
/// budget, cadence, hyperparameters and seed of `cfg`; the learner fields are
/// ignored.
pub fn qas_run<M: LabeledMdp + ?Sized>(
    mdp: &M,
    task: &TaskSpec,
    cfg: &JirpConfig,
) -> Result<QasOutcome> {
    cfg.validate()?;
    if task.machine.props() != mdp.props() {
        return Err(Error::UniverseMismatch {
            left: mdp.props().to_string(),
            right: task.machine.props().to_string(),
        });
    }
    let mut q = QTableSet::new(1, augmented_state_count(mdp), mdp.num_actions(), cfg.hyper);
    let mut metrics = RunMetrics::default();
    let mut evals = 0u64;
    let mut evaluate = |q: &mut QTableSet, metrics: &mut RunMetrics, at: u64| {
        let mut rng = episode_rng(cfg.seed, 2 * evals + 1);
        evals += 1;
        let sum: f64 = (0..cfg.eval_rollouts)
            .map(|_| episode(mdp, task, q, cfg.eplength, false, &mut rng).total)
            .sum();
        metrics.evals.push(EvalPoint {
            step: at,
            episode: metrics.episodes,
            reward: if cfg.eval_rollouts == 0 {
                0.0
            } else {
                sum / cfg.eval_rollouts as f64
            },
        });
    };
    evaluate(&mut q, &mut metrics, 0);
    let mut next_step = match cfg.eval {
        EvalCadence::Steps(n) => n,
        EvalCadence::Episodes(_) => 0,
    };
    let max_episodes = cfg.max_episodes.unwrap_or(usize::MAX);
    while metrics.steps < cfg.max_steps && metrics.episodes < max_episodes {
        let len = (cfg.max_steps - metrics.steps).min(cfg.eplength as u64) as usize;
        let mut rng = episode_rng(cfg.seed, 2 * metrics.episodes as u64);
        let ep = episode(mdp, task, &mut q, len, true, &mut rng);
        metrics.steps += ep.steps as u64;
        metrics.episodes += 1;
        match cfg.eval {
            EvalCadence::Episodes(n) => {
                if metrics.episodes.is_multiple_of(n) {
                    let at = metrics.steps;
                    evaluate(&mut q, &mut metrics, at);
                }
            }
            EvalCadence::Steps(n) => {
                while next_step <= metrics.steps {
                    evaluate(&mut q, &mut metrics, next_step);
                    next_step += n;
                }
            }
        }
    }
    Ok(QasOutcome { q, metrics })
}
