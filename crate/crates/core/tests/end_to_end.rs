use rmlearn::environments::{load_task, traffic_world};
use rmlearn::harness::optimum;
use rmlearn::jirp::{run_jirp, JirpConfig};

#[test]
fn office_coffee_task_reaches_near_optimal_reward() {
    let (mdp, task) = load_task("office/2.1", None).unwrap();
    let best = optimum(&mdp, &task, task.eplength).unwrap();
    let cfg = JirpConfig::new(&task, 60_000, 2);
    let out = run_jirp(&mdp, &task, &cfg).unwrap();
    let last = out.metrics.evals.last().unwrap();
    assert!(last.reward >= 0.9 * best, "{} vs {best}", last.reward);
    assert!(!out.metrics.counterexamples.is_empty());
}

#[test]
fn traffic_task_is_learned() {
    let (mdp, task) = traffic_world().unwrap();
    let cfg = JirpConfig::new(&task, 100_000, 0);
    let out = run_jirp(&mdp, &task, &cfg).unwrap();
    let best = optimum(&mdp, &task, task.eplength).unwrap();
    assert!(out.metrics.evals.last().unwrap().reward >= 0.9 * best);
    // Every counterexample was consistent with the final machine.
    for t in out.sample.traces() {
        assert!(out.machine.is_consistent(t).unwrap());
    }
}
