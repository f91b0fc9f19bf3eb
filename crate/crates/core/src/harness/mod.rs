//! Experiment runner and offline verification suites.

pub mod verify;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::automata::{save_machine, RewardMachine};
use crate::baselines::qas_run;
use crate::environments::{load_task, GridMap, TaskSpec};
use crate::error::{Error, Result};
use crate::jirp::{
    run_jirp, EvalCadence, EvalPoint, JirpConfig, Learner, RunMetrics, Variant, RNG_NAME,
};
use crate::mdp::{k_horizon_q, product, LabeledMdp, TabularMdp};
use crate::qrm::Hyper;

pub use verify::{
    check_episodic_equivalence, check_equivalence_on_attainable, verify_transfer_theorem,
    TransferReport,
};

/// Environment variable naming the default root for experiment output.
pub const OUT_ENV: &str = "RMLEARN_OUT";

/// Width of the step buckets in `curve_mean.csv`.
pub const BUCKET: u64 = 10;

/// Fraction of the optimum that counts as converged.
pub const CONVERGED: f64 = 0.9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    JirpRpni,
    JirpExact,
    JirpBase,
    Qas,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::JirpRpni,
        Method::JirpExact,
        Method::JirpBase,
        Method::Qas,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::JirpRpni => "jirp-rpni",
            Method::JirpExact => "jirp-exact",
            Method::JirpBase => "jirp-base",
            Method::Qas => "qas",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::UnknownMethod(s.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub task: String,
    pub method: Method,
    pub seeds: Vec<u64>,
    /// Environment steps per seed.
    pub budget: u64,
    pub eplength: Option<usize>,
    pub batch: Option<usize>,
    pub out: Option<PathBuf>,
    pub hyper: Hyper,
    /// Evaluate every this many environment steps.
    pub eval_every: u64,
    pub rollouts: usize,
    /// Replacement grid map for the task's family.
    pub map: Option<PathBuf>,
    pub k_max: usize,
    pub search_budget: u64,
}

impl ExperimentConfig {
    pub fn new(task: impl Into<String>, method: Method) -> Self {
        ExperimentConfig {
            task: task.into(),
            method,
            seeds: (0..10).collect(),
            budget: 150_000,
            eplength: None,
            batch: None,
            out: None,
            hyper: Hyper::default(),
            eval_every: 1_000,
            rollouts: 20,
            map: None,
            k_max: crate::inference::DEFAULT_K_MAX,
            search_budget: crate::inference::DEFAULT_BUDGET,
        }
    }

    /// Sets one field from its textual form; keys match the CLI flags.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
            v.parse()
                .map_err(|_| Error::input(format!("`{key}` expects a number, got `{v}`")))
        }
        match key {
            "task" => self.task = value.to_string(),
            "method" => self.method = Method::parse(value)?,
            "seeds" => self.seeds = parse_seeds(value)?,
            "budget" => self.budget = num(key, value)?,
            "eplength" => self.eplength = Some(num(key, value)?),
            "batch" => self.batch = Some(num(key, value)?),
            "out" => self.out = Some(PathBuf::from(value)),
            "alpha" => self.hyper.alpha = num(key, value)?,
            "epsilon" => self.hyper.epsilon = num(key, value)?,
            "gamma" => self.hyper.gamma = num(key, value)?,
            "eval-every" => self.eval_every = num(key, value)?,
            "rollouts" => self.rollouts = num(key, value)?,
            "map" => self.map = Some(PathBuf::from(value)),
            "k-max" => self.k_max = num(key, value)?,
            "search-budget" => self.search_budget = num(key, value)?,
            _ => return Err(Error::input(format!("unknown setting `{key}`"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(i + 1, 1, "expected `key = value`"))?;
            self.set(k.trim(), v.trim())
                .map_err(|e| Error::parse(i + 1, 1, e.to_string()))?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::input("at least one seed is required"));
        }
        if self.eval_every == 0 {
            return Err(Error::input("eval-every must be positive"));
        }
        Method::parse(self.method.as_str())?;
        self.hyper.validate()
    }

    /// Output directory: the configured one, else `<$RMLEARN_OUT or runs>/<task>-<method>`.
    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| {
            let root =
                std::env::var_os(OUT_ENV).map_or_else(|| PathBuf::from("runs"), PathBuf::from);
            root.join(format!(
                "{}-{}",
                self.task.replace('/', "-"),
                self.method.as_str()
            ))
        })
    }

    fn run_config(&self, task: &TaskSpec, seed: u64) -> JirpConfig {
        let (learner, variant) = match self.method {
            Method::JirpRpni | Method::Qas => (Learner::Rpni, Variant::Optimized),
            Method::JirpExact => (self.exact(), Variant::Optimized),
            Method::JirpBase => (self.exact(), Variant::Base),
        };
        JirpConfig {
            eplength: self.eplength.unwrap_or(task.eplength),
            batch: self.batch.unwrap_or(task.batch),
            learner,
            variant,
            hyper: self.hyper,
            eval: EvalCadence::Steps(self.eval_every),
            eval_rollouts: self.rollouts,
            ..JirpConfig::new(task, self.budget, seed)
        }
    }

    fn exact(&self) -> Learner {
        Learner::Exact {
            k_max: self.k_max,
            budget: self.search_budget,
        }
    }
}

pub fn parse_seeds(s: &str) -> Result<Vec<u64>> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        match part.split_once("..") {
            Some((a, b)) => {
                let (a, b): (u64, u64) = (
                    a.parse()
                        .map_err(|_| Error::input(format!("bad seed range `{part}`")))?,
                    b.parse()
                        .map_err(|_| Error::input(format!("bad seed range `{part}`")))?,
                );
                out.extend(a..b);
            }
            None => out.push(
                part.parse()
                    .map_err(|_| Error::input(format!("bad seed `{part}`")))?,
            ),
        }
    }
    Ok(out)
}

/// Best expected undiscounted reward over one episode of `task`.
pub fn optimum<M: LabeledMdp + ?Sized>(mdp: &M, task: &TaskSpec, eplength: usize) -> Result<f64> {
    let p = product(mdp, &task.machine)?;
    Ok(k_horizon_q(&p, eplength, 1.0).value(mdp.initial(), task.machine.initial()))
}

#[derive(Clone, Debug)]
pub struct SeedRun {
    pub seed: u64,
    pub metrics: RunMetrics,
    /// Final hypothesis; `None` for the baseline.
    pub machine: Option<RewardMachine>,
}

impl SeedRun {
    /// First evaluation step reaching `fraction` of `optimum`.
    pub fn steps_to(&self, optimum: f64, fraction: f64) -> Option<u64> {
        self.metrics
            .evals
            .iter()
            .find(|e| e.reward >= fraction * optimum)
            .map(|e| e.step)
    }

    pub fn final_reward(&self) -> f64 {
        self.metrics.evals.last().map_or(0.0, |e| e.reward)
    }
}

#[derive(Clone, Debug)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub optimum: f64,
    pub runs: Vec<SeedRun>,
}

#[derive(Serialize)]
struct SeedSummary {
    seed: u64,
    final_reward: f64,
    steps_to_90: Option<u64>,
    inferences: usize,
    counterexamples: usize,
    final_machine_states: Option<usize>,
    episodes: usize,
    steps: u64,
}

#[derive(Serialize)]
struct Summary<'a> {
    task: &'a str,
    method: &'a str,
    rng: &'a str,
    budget: u64,
    eval_every: u64,
    optimum: f64,
    converged_seeds: usize,
    median_steps_to_90: Option<u64>,
    seeds: Vec<SeedSummary>,
}

impl ExperimentResult {
    /// Median over seeds of the evaluation reward at each evaluation step.
    pub fn median_curve(&self) -> Vec<(u64, f64)> {
        let mut steps: Vec<u64> = self
            .runs
            .iter()
            .flat_map(|r| r.metrics.evals.iter().map(|e| e.step))
            .collect();
        steps.sort_unstable();
        steps.dedup();
        steps
            .into_iter()
            .map(|step| {
                let mut vals: Vec<f64> = self
                    .runs
                    .iter()
                    .filter_map(|r| {
                        r.metrics
                            .evals
                            .iter()
                            .find(|e| e.step == step)
                            .map(|e| e.reward)
                    })
                    .collect();
                (step, median(&mut vals))
            })
            .collect()
    }

    pub fn curve_csv(&self) -> String {
        let mut out = String::from("step,seed,eval_reward\n");
        for r in &self.runs {
            for EvalPoint { step, reward, .. } in &r.metrics.evals {
                let _ = writeln!(out, "{step},{},{reward}", r.seed);
            }
        }
        out
    }

    /// Mean evaluation reward over all seeds per step bucket.
    pub fn bucket_csv(&self) -> String {
        let mut buckets: std::collections::BTreeMap<u64, (f64, usize)> = Default::default();
        for r in &self.runs {
            for e in &r.metrics.evals {
                let b = buckets.entry(e.step / BUCKET * BUCKET).or_default();
                b.0 += e.reward;
                b.1 += 1;
            }
        }
        let mut out = String::from("step,mean_eval_reward,points\n");
        for (step, (sum, n)) in buckets {
            let _ = writeln!(out, "{step},{},{n}", sum / n as f64);
        }
        out
    }

    pub fn summary_json(&self) -> Result<String> {
        let seeds = self
            .runs
            .iter()
            .map(|r| SeedSummary {
                seed: r.seed,
                final_reward: r.final_reward(),
                steps_to_90: r.steps_to(self.optimum, CONVERGED),
                inferences: r.metrics.inferences.len(),
                counterexamples: r.metrics.counterexamples.len(),
                final_machine_states: r.machine.as_ref().map(RewardMachine::num_states),
                episodes: r.metrics.episodes,
                steps: r.metrics.steps,
            })
            .collect::<Vec<_>>();
        let summary = Summary {
            task: &self.config.task,
            method: self.config.method.as_str(),
            rng: RNG_NAME,
            budget: self.config.budget,
            eval_every: self.config.eval_every,
            optimum: self.optimum,
            converged_seeds: seeds.iter().filter(|s| s.steps_to_90.is_some()).count(),
            median_steps_to_90: self
                .median_curve()
                .into_iter()
                .find(|&(_, r)| r >= CONVERGED * self.optimum)
                .map(|(s, _)| s),
            seeds,
        };
        Ok(serde_json::to_string_pretty(&summary)? + "\n")
    }

    /// Writes `curve.csv`, `curve_mean.csv`, `summary.json` and one machine
    /// file per hypothesis under `machines/seed-<n>/`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        let put = |name: &str, text: String| {
            let path = dir.join(name);
            fs::write(&path, text).map_err(|e| Error::file(&path, e))
        };
        fs::create_dir_all(dir).map_err(|e| Error::file(dir, e))?;
        put("curve.csv", self.curve_csv())?;
        put("curve_mean.csv", self.bucket_csv())?;
        put("summary.json", self.summary_json()?)?;
        for r in &self.runs {
            if r.machine.is_none() {
                continue;
            }
            let sub = dir.join("machines").join(format!("seed-{}", r.seed));
            fs::create_dir_all(&sub).map_err(|e| Error::file(&sub, e))?;
            for (i, m) in r.metrics.machines.iter().enumerate() {
                save_machine(m, sub.join(format!("h{i:03}.rm")))?;
            }
        }
        Ok(())
    }
}

fn median(vals: &mut [f64]) -> f64 {
    if vals.is_empty() {
        return f64::NAN;
    }
    vals.sort_by(f64::total_cmp);
    let n = vals.len();
    if n % 2 == 1 {
        vals[n / 2]
    } else {
        (vals[n / 2 - 1] + vals[n / 2]) / 2.0
    }
}

pub fn load_experiment_task(cfg: &ExperimentConfig) -> Result<(TabularMdp, TaskSpec)> {
    let map = cfg.map.as_ref().map(GridMap::load).transpose()?;
    load_task(&cfg.task, map.as_ref())
}

/// Runs every seed (in parallel) and returns the collected metrics. Nothing
/// is written; see [`ExperimentResult::write`].
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let (mdp, task) = load_experiment_task(cfg)?;
    let eplength = cfg.eplength.unwrap_or(task.eplength);
    let optimum = optimum(&mdp, &task, eplength)?;
    let runs = cfg
        .seeds
        .par_iter()
        .map(|&seed| {
            let rc = cfg.run_config(&task, seed);
            Ok(match cfg.method {
                Method::Qas => SeedRun {
                    seed,
                    metrics: qas_run(&mdp, &task, &rc)?.metrics,
                    machine: None,
                },
                _ => {
                    let out = run_jirp(&mdp, &task, &rc)?;
                    SeedRun {
                        seed,
                        metrics: out.metrics,
                        machine: Some(out.machine),
                    }
                }
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ExperimentResult {
        config: cfg.clone(),
        optimum,
        runs,
    })
}
