use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rmlearn::automata::{parse_machine, Trace};
use rmlearn::environments::office_world;
use rmlearn::inference::Sample;

fn rmlearn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rmlearn"))
        .args(args)
        .env_remove("RMLEARN_OUT")
        .output()
        .expect("binary runs")
}

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("data")
        .join(name)
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn unknown_task_and_method_exit_2() {
    assert_eq!(
        rmlearn(&["run", "--task", "office/9.9", "--budget", "10"])
            .status
            .code(),
        Some(2)
    );
    let out = rmlearn(&[
        "run",
        "--task",
        "office/2.1",
        "--method",
        "sarsa",
        "--budget",
        "10",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("sarsa"));
}

#[test]
fn runs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = rmlearn(&[
            "run",
            "--task",
            "office/2.1",
            "--seeds",
            "0,1",
            "--budget",
            "3000",
            "--eval-every",
            "500",
            "--out",
            path_str(&out),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        out
    };
    let (a, b) = (run("a"), run("b"));
    for f in ["curve.csv", "curve_mean.csv", "summary.json"] {
        assert_eq!(
            std::fs::read(a.join(f)).unwrap(),
            std::fs::read(b.join(f)).unwrap(),
            "{f}"
        );
    }
    let curve = std::fs::read_to_string(a.join("curve.csv")).unwrap();
    assert_eq!(curve.lines().next(), Some("step,seed,eval_reward"));
    // Steps 0, 500, ..., 3000 for each of two seeds.
    assert_eq!(curve.lines().count(), 1 + 2 * 7);
    assert!(a.join("machines/seed-0/h000.rm").exists());
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.cfg");
    std::fs::write(
        &cfg,
        "# small run\ntask = office/2.2\nmethod = qas\nseeds = 3\nbudget = 100000\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = rmlearn(&[
        "run",
        "--config",
        path_str(&cfg),
        "--budget",
        "1000",
        "--out",
        path_str(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["task"], "office/2.2");
    assert_eq!(summary["method"], "qas");
    assert_eq!(summary["budget"], 1000);
    assert_eq!(summary["seeds"][0]["steps"], 1000);

    std::fs::write(&cfg, "task = office/2.2\nbudget = lots\n").unwrap();
    assert_eq!(
        rmlearn(&["run", "--config", path_str(&cfg)]).status.code(),
        Some(2)
    );
}

#[test]
fn learn_from_sample_file() {
    let (_, tasks) = office_world().unwrap();
    let truth = &tasks[0].machine;
    let p = truth.props();
    let l = |name: &str| p.label([name]).unwrap();
    let mut x = Sample::new(p.clone());
    for w in [
        vec![l("c"), l("o")],
        vec![l("o")],
        vec![l("c"), l("c"), l("o")],
        vec![l("a"), l("c"), l("b"), l("o")],
    ] {
        let r = truth.run(&w).unwrap();
        x.insert(Trace::new(w, r).unwrap()).unwrap();
    }
    let dir = tempfile::tempdir().unwrap();
    let sample = dir.path().join("x.txt");
    std::fs::write(&sample, x.to_text()).unwrap();
    for learner in ["rpni", "exact"] {
        let machine = dir.path().join(format!("{learner}.rm"));
        let o = rmlearn(&[
            "learn",
            "--sample",
            path_str(&sample),
            "--learner",
            learner,
            "--out",
            path_str(&machine),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let m = parse_machine(&std::fs::read_to_string(&machine).unwrap()).unwrap();
        assert!(
            x.traces().iter().all(|t| m.is_consistent(t).unwrap()),
            "{learner}"
        );
    }
}

#[test]
fn traffic_machines_check_equivalent() {
    let (truth, inferred) = (
        data("machines/traffic.rm"),
        data("machines/traffic-inferred.rm"),
    );
    let o = rmlearn(&[
        "check-equiv",
        "--mdp",
        "traffic",
        "--m1",
        path_str(&inferred),
        "--m2",
        path_str(&truth),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    let o = rmlearn(&[
        "verify-transfer",
        "--task",
        "traffic",
        "--m1",
        path_str(&truth),
        "--m2",
        path_str(&inferred),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
}

#[test]
fn check_equiv_prints_a_witness() {
    let (a, b) = (
        data("machines/office-2.1.rm"),
        data("machines/office-2.2.rm"),
    );
    let o = rmlearn(&[
        "check-equiv",
        "--mdp",
        "office/2.1",
        "--m1",
        path_str(&a),
        "--m2",
        path_str(&b),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("witness:"));
}
