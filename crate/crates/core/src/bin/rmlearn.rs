use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use rmlearn::automata::{load_machine, write_machine};
use rmlearn::environments::load_task;
use rmlearn::harness::{
    check_episodic_equivalence, check_equivalence_on_attainable, run_experiment,
    verify_transfer_theorem, ExperimentConfig, Method, OUT_ENV,
};
use rmlearn::inference::{
    minimal_consistent_machine, rpni_rm, Sample, DEFAULT_BUDGET, DEFAULT_K_MAX,
};
use rmlearn::mdp::DEFAULT_TOL;
use rmlearn::Error;

#[derive(Parser)]
#[command(
    name = "rmlearn",
    version,
    about = "Learn reward machines jointly with Q-learning"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train on a task for every seed and write curves, summary and machines.
    Run(RunArgs),
    /// Search for an attainable label sequence on which two machines differ.
    CheckEquiv {
        #[arg(long)]
        mdp: String,
        #[arg(long)]
        m1: PathBuf,
        #[arg(long)]
        m2: PathBuf,
        #[arg(long, default_value_t = 50)]
        horizon: usize,
        /// Stop at goal states of m2, as episodes do.
        #[arg(long)]
        episodic: bool,
    },
    /// Compare optimal q-values of two machines across equivalent states.
    VerifyTransfer {
        #[arg(long)]
        task: String,
        #[arg(long)]
        m1: PathBuf,
        #[arg(long)]
        m2: PathBuf,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
    },
    /// Infer a machine from a sample file and print it.
    Learn {
        #[arg(long)]
        sample: PathBuf,
        #[arg(long, value_enum, default_value_t = LearnerArg::Rpni)]
        learner: LearnerArg,
        #[arg(long, default_value_t = DEFAULT_K_MAX)]
        k_max: usize,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum LearnerArg {
    Rpni,
    Exact,
}

#[derive(clap::Args)]
struct RunArgs {
    /// `key = value` file; flags given on the command line take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    task: Option<String>,
    #[arg(long)]
    method: Option<String>,
    /// Comma-separated seeds; `a..b` ranges allowed.
    #[arg(long)]
    seeds: Option<String>,
    /// Environment steps per seed.
    #[arg(long)]
    budget: Option<u64>,
    #[arg(long)]
    eplength: Option<usize>,
    #[arg(long)]
    batch: Option<usize>,
    /// Output directory (default: $RMLEARN_OUT/<task>-<method>, or runs/...).
    #[arg(long, env = OUT_ENV)]
    out: Option<PathBuf>,
    #[arg(long)]
    eval_every: Option<u64>,
    #[arg(long)]
    rollouts: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    /// Grid map replacing the task family's default.
    #[arg(long)]
    map: Option<PathBuf>,
}

impl RunArgs {
    fn config(&self) -> Result<ExperimentConfig, Error> {
        let mut cfg = ExperimentConfig::new("", Method::JirpRpni);
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path).map_err(|e| Error::File {
                path: path.clone(),
                source: e,
            })?;
            cfg.apply_text(&text)?;
        }
        let flags: [(&str, Option<String>); 12] = [
            ("task", self.task.clone()),
            ("method", self.method.clone()),
            ("seeds", self.seeds.clone()),
            ("budget", self.budget.map(|v| v.to_string())),
            ("eplength", self.eplength.map(|v| v.to_string())),
            ("batch", self.batch.map(|v| v.to_string())),
            ("eval-every", self.eval_every.map(|v| v.to_string())),
            ("rollouts", self.rollouts.map(|v| v.to_string())),
            ("alpha", self.alpha.map(|v| v.to_string())),
            ("epsilon", self.epsilon.map(|v| v.to_string())),
            ("gamma", self.gamma.map(|v| v.to_string())),
            ("map", self.map.as_ref().map(|p| p.display().to_string())),
        ];
        for (k, v) in flags {
            if let Some(v) = v {
                cfg.set(k, &v)?;
            }
        }
        if self.out.is_some() {
            cfg.out = self.out.clone();
        }
        if cfg.task.is_empty() {
            return Err(Error::Input(
                "no task given (use --task or `task =` in the config file)".into(),
            ));
        }
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::Run(args) => {
            let cfg = args.config()?;
            let result = run_experiment(&cfg)?;
            let dir = cfg.out_dir();
            result.write(&dir)?;
            let converged = result
                .runs
                .iter()
                .filter(|r| r.steps_to(result.optimum, 0.9).is_some())
                .count();
            println!(
                "{} {}: optimum {:.4}, {}/{} seeds reached 90% within {} steps; output in {}",
                cfg.task,
                cfg.method.as_str(),
                result.optimum,
                converged,
                result.runs.len(),
                cfg.budget,
                dir.display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::CheckEquiv {
            mdp,
            m1,
            m2,
            horizon,
            episodic,
        } => {
            let (mdp, _) = load_task(&mdp, None)?;
            let (m1, m2) = (load_machine(m1)?, load_machine(m2)?);
            let witness = if episodic {
                check_episodic_equivalence(&mdp, &m1, &m2, horizon)?
            } else {
                check_equivalence_on_attainable(&mdp, &m1, &m2, horizon)?
            };
            match witness {
                None => {
                    println!("equivalent on attainable sequences up to length {horizon}");
                    Ok(ExitCode::SUCCESS)
                }
                Some(w) => {
                    let props = m1.props();
                    let text: Vec<String> = w.iter().map(|&l| props.format_label(l)).collect();
                    println!("witness: {}", text.join(" "));
                    println!("m1 rewards: {:?}", m1.run(&w)?);
                    println!("m2 rewards: {:?}", m2.run(&w)?);
                    Ok(ExitCode::from(1))
                }
            }
        }
        Command::VerifyTransfer { task, m1, m2, tol } => {
            let (mdp, _) = load_task(&task, None)?;
            let report =
                verify_transfer_theorem(&mdp, &load_machine(m1)?, &load_machine(m2)?, tol)?;
            if let Some(w) = &report.witness {
                println!(
                    "precondition violated: machines differ on an attainable sequence of length {}",
                    w.len()
                );
                return Ok(ExitCode::from(1));
            }
            println!(
                "{} equivalent pairs, max q deviation {:e} (bound {:e}): {}",
                report.pairs,
                report.max_deviation,
                2.0 * tol,
                if report.holds() { "ok" } else { "VIOLATED" }
            );
            Ok(if report.holds() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
        Command::Learn {
            sample,
            learner,
            k_max,
            budget,
            out,
        } => {
            let x = Sample::load(sample)?;
            let m = match learner {
                LearnerArg::Rpni => rpni_rm(&x, 0.0),
                LearnerArg::Exact => minimal_consistent_machine(&x, k_max, budget)?
                    .ok_or(Error::NoMachine { k_max })?,
            };
            let text = write_machine(&m);
            match out {
                Some(path) => {
                    std::fs::write(&path, text).map_err(|e| Error::File { path, source: e })?
                }
                None => print!("{text}"),
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::UnknownTask(_)
                | Error::UnknownMethod(_)
                | Error::Input(_)
                | Error::Parse { .. } => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}
