//! Joint inference of reward machines and policies.
//!
//! Episodes are run with QRM under the current hypothesis machine while the
//! environment supplies the true rewards. Traces the hypothesis cannot
//! explain are counterexamples; they grow the sample from which a new
//! hypothesis is inferred. The base variant re-infers after every
//! counterexample and restarts from zero q-tables; the optimized variant
//! batches counterexamples over `N` episodes and transfers q-tables between
//! equivalent machine states.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::automata::{state_equivalence, RewardMachine, Trace};
use crate::environments::TaskSpec;
use crate::error::{Error, Result};
use crate::inference::{
    minimal_consistent_machine, rpni_rm, Insert, Sample, DEFAULT_BUDGET, DEFAULT_K_MAX,
};
use crate::mdp::LabeledMdp;
use crate::qrm::{greedy_policy_value, qrm_episode, Hyper, QTableSet, RewardSource};

/// Name of the generator behind [`episode_rng`], reported in run metadata.
pub const RNG_NAME: &str = "ChaCha8";

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Learner {
    Rpni,
    Exact { k_max: usize, budget: u64 },
}

impl Learner {
    pub fn exact() -> Self {
        Learner::Exact {
            k_max: DEFAULT_K_MAX,
            budget: DEFAULT_BUDGET,
        }
    }

    pub fn infer(&self, x: &Sample) -> Result<RewardMachine> {
        match *self {
            Learner::Rpni => Ok(rpni_rm(x, 0.0)),
            Learner::Exact { k_max, budget } => {
                minimal_consistent_machine(x, k_max, budget)?.ok_or(Error::NoMachine { k_max })
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variant {
    /// Re-infer on every counterexample and re-initialize the q-tables.
    Base,
    /// Batch counterexamples and transfer q-tables.
    Optimized,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EvalCadence {
    /// After every `n`-th training episode.
    Episodes(usize),
    /// Whenever the step counter crosses a multiple of `n`; the point is
    /// recorded at that multiple.
    Steps(u64),
}

#[derive(Clone, Debug)]
pub struct JirpConfig {
    pub eplength: usize,
    pub batch: usize,
    /// Training stops once this many environment steps were taken; the last
    /// episode is cut short to land on it exactly.
    pub max_steps: u64,
    pub max_episodes: Option<usize>,
    pub learner: Learner,
    pub variant: Variant,
    pub hyper: Hyper,
    pub eval: EvalCadence,
    pub eval_rollouts: usize,
    pub seed: u64,
    /// Starting hypothesis; a one-state machine emitting 0 when absent.
    pub initial: Option<RewardMachine>,
}

impl JirpConfig {
    pub fn new(task: &TaskSpec, max_steps: u64, seed: u64) -> Self {
        JirpConfig {
            eplength: task.eplength,
            batch: task.batch,
            max_steps,
            max_episodes: None,
            learner: Learner::Rpni,
            variant: Variant::Optimized,
            hyper: Hyper::default(),
            eval: EvalCadence::Episodes(100),
            eval_rollouts: 20,
            seed,
            initial: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.eplength == 0 {
            return Err(Error::input("eplength must be at least 1"));
        }
        if self.batch == 0 {
            return Err(Error::input("batch period must be at least 1"));
        }
        match self.eval {
            EvalCadence::Episodes(0) | EvalCadence::Steps(0) => {
                Err(Error::input("evaluation cadence must be positive"))
            }
            _ => self.hyper.validate(),
        }
    }
}

/// Generator for one episode (or evaluation) of a run: the run seed picks
/// the key, `stream` picks an independent ChaCha stream.
pub fn episode_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalPoint {
    pub step: u64,
    pub episode: usize,
    pub reward: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct InferenceRecord {
    /// Episodes completed when the new machine was installed.
    pub episode: usize,
    pub step: u64,
    pub sample_size: usize,
    pub states: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CounterexampleRecord {
    pub episode: usize,
    pub step: u64,
    pub trace: Trace,
    /// Index into [`RunMetrics::machines`] of the hypothesis that failed.
    pub machine: usize,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunMetrics {
    pub evals: Vec<EvalPoint>,
    pub inferences: Vec<InferenceRecord>,
    pub counterexamples: Vec<CounterexampleRecord>,
    /// Every hypothesis in order of use; entry 0 is the initial machine.
    pub machines: Vec<RewardMachine>,
    pub steps: u64,
    pub episodes: usize,
}

#[derive(Clone, Debug)]
pub struct JirpOutcome {
    pub machine: RewardMachine,
    pub q: QTableSet,
    pub sample: Sample,
    pub metrics: RunMetrics,
}

/// Fresh tables for `new`; each state's table is copied from the
/// lowest-id equivalent state of `old`, or left at zero without a match.
pub fn transfer_q(q: &QTableSet, old: &RewardMachine, new: &RewardMachine) -> Result<QTableSet> {
    if q.machine_states() != old.num_states() {
        return Err(Error::input(format!(
            "q-tables cover {} machine states, machine has {}",
            q.machine_states(),
            old.num_states()
        )));
    }
    let eq = state_equivalence(old, new)?;
    let size = q.mdp_states() * q.num_actions();
    let tables = (0..new.num_states())
        .map(|v| match eq.first_left_match(v) {
            Some(u) => q.table(u).to_vec(),
            None => vec![0.0; size],
        })
        .collect();
    Ok(q.with_tables(tables))
}

fn add_to_sample(x: &mut Sample, t: Trace) -> Result<()> {
    match x.insert(t)? {
        Insert::Conflict => Err(Error::Conflict(
            "environment produced two reward sequences for one label sequence".into(),
        )),
        _ => Ok(()),
    }
}

/// Greedy rollouts of the current policy, recorded at step `at`.
#[allow(clippy::too_many_arguments)]
fn evaluate<M: LabeledMdp + ?Sized>(
    mdp: &M,
    task: &TaskSpec,
    cfg: &JirpConfig,
    h: &RewardMachine,
    q: &QTableSet,
    metrics: &mut RunMetrics,
    index: &mut u64,
    at: u64,
) -> Result<()> {
    // Odd streams are reserved for evaluation, even ones for training.
    let mut rng = episode_rng(cfg.seed, 2 * *index + 1);
    *index += 1;
    let source = RewardSource::Environment(task);
    let reward = greedy_policy_value(mdp, h, q, cfg.eval_rollouts, cfg.eplength, source, &mut rng)?;
    metrics.evals.push(EvalPoint {
        step: at,
        episode: metrics.episodes,
        reward,
    });
    Ok(())
}

/// Runs JIRP on `mdp` with rewards from `task` as configured.
pub fn run_jirp<M: LabeledMdp + ?Sized>(
    mdp: &M,
    task: &TaskSpec,
    cfg: &JirpConfig,
) -> Result<JirpOutcome> {
    cfg.validate()?;
    let props = mdp.props().clone();
    if task.machine.props() != &props {
        return Err(Error::UniverseMismatch {
            left: props.to_string(),
            right: task.machine.props().to_string(),
        });
    }
    let mut h = cfg
        .initial
        .clone()
        .unwrap_or_else(|| RewardMachine::constant(props.clone(), 0.0));
    let mut q = QTableSet::for_machine(&h, mdp, cfg.hyper);
    let mut x = Sample::new(props);
    let mut pending: Vec<Trace> = Vec::new();
    let mut metrics = RunMetrics {
        machines: vec![h.clone()],
        ..RunMetrics::default()
    };
    let source = RewardSource::Environment(task);
    let mut evals = 0u64;
    evaluate(mdp, task, cfg, &h, &q, &mut metrics, &mut evals, 0)?;
    let mut next_step = match cfg.eval {
        EvalCadence::Steps(n) => n,
        EvalCadence::Episodes(_) => 0,
    };

    let max_episodes = cfg.max_episodes.unwrap_or(usize::MAX);
    while metrics.steps < cfg.max_steps && metrics.episodes < max_episodes {
        let len = (cfg.max_steps - metrics.steps).min(cfg.eplength as u64) as usize;
        let mut rng = episode_rng(cfg.seed, 2 * metrics.episodes as u64);
        let res = qrm_episode(mdp, &h, &mut q, len, source, &mut rng)?;
        metrics.steps += res.steps as u64;
        metrics.episodes += 1;

        if !h.is_consistent(&res.trace)? {
            metrics.counterexamples.push(CounterexampleRecord {
                episode: metrics.episodes,
                step: metrics.steps,
                trace: res.trace.clone(),
                machine: metrics.machines.len() - 1,
            });
            match cfg.variant {
                Variant::Base => {
                    add_to_sample(&mut x, res.trace)?;
                    h = cfg.learner.infer(&x)?;
                    q = QTableSet::for_machine(&h, mdp, cfg.hyper);
                    record_inference(&mut metrics, &x, &h);
                }
                Variant::Optimized => pending.push(res.trace),
            }
        }
        if cfg.variant == Variant::Optimized
            && metrics.episodes.is_multiple_of(cfg.batch)
            && !pending.is_empty()
        {
            for t in pending.drain(..) {
                add_to_sample(&mut x, t)?;
            }
            let h_new = cfg.learner.infer(&x)?;
            q = transfer_q(&q, &h, &h_new)?;
            h = h_new;
            record_inference(&mut metrics, &x, &h);
        }

        match cfg.eval {
            EvalCadence::Episodes(n) => {
                if metrics.episodes.is_multiple_of(n) {
                    let at = metrics.steps;
                    evaluate(mdp, task, cfg, &h, &q, &mut metrics, &mut evals, at)?;
                }
            }
            EvalCadence::Steps(n) => {
                while next_step <= metrics.steps {
                    evaluate(mdp, task, cfg, &h, &q, &mut metrics, &mut evals, next_step)?;
                    next_step += n;
                }
            }
        }
    }
    Ok(JirpOutcome {
        machine: h,
        q,
        sample: x,
        metrics,
    })
}

fn record_inference(metrics: &mut RunMetrics, x: &Sample, h: &RewardMachine) {
    metrics.inferences.push(InferenceRecord {
        episode: metrics.episodes,
        step: metrics.steps,
        sample_size: x.len(),
        states: h.num_states(),
    });
    metrics.machines.push(h.clone());
}

pub fn jirp_base<M: LabeledMdp + ?Sized>(
    mdp: &M,
    task: &TaskSpec,
    cfg: &JirpConfig,
) -> Result<JirpOutcome> {
    run_jirp(
        mdp,
        task,
        &JirpConfig {
            variant: Variant::Base,
            ..cfg.clone()
        },
    )
}

pub fn jirp_optimized<M: LabeledMdp + ?Sized>(
    mdp: &M,
    task: &TaskSpec,
    cfg: &JirpConfig,
) -> Result<JirpOutcome> {
    run_jirp(
        mdp,
        task,
        &JirpConfig {
            variant: Variant::Optimized,
            ..cfg.clone()
        },
    )
}
