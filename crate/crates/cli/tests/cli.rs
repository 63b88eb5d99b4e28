use std::fs;
use std::process::Command;

fn macrpo() -> Command {
    Command::new(env!("CARGO_BIN_EXE_macrpo"))
}

const SMALL: [&str; 10] = [
    "--set", "n_envs=2", "--set", "horizon=8", "--set", "actor_hidden=6", "--set", "critic_hidden=6", "--set",
    "eval_episodes=5",
];

#[test]
fn runs_each_series_and_writes_a_plot() {
    let dir = tempfile::tempdir().unwrap();
    let status = macrpo()
        .args(["--env", "diagnostic", "--variant", "lstm-icf,ff-nic", "--beta", "0,1", "--seeds", "1,2"])
        .args(["--iterations", "2", "--plot", "--quiet", "--out"])
        .arg(dir.path())
        .args(SMALL)
        .status()
        .unwrap();
    assert!(status.success());
    for sub in ["lstm-icf-beta0", "lstm-icf-beta1", "ff-nic-beta0", "ff-nic-beta1"] {
        let d = dir.path().join(sub);
        for f in ["seed_1.csv", "seed_2.csv", "aggregate.csv", "config.txt", "manifest.txt"] {
            assert!(d.join(f).exists(), "{sub}/{f}");
        }
        let csv = fs::read_to_string(d.join("seed_1.csv")).unwrap();
        assert_eq!(csv.lines().count(), 3);
    }
    let svg = fs::read_to_string(dir.path().join("plot.svg")).unwrap();
    assert_eq!(svg.matches("class=\"legend-entry\"").count(), 4);
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# diagnostic run\nenv=diagnostic\nbeta=0.5\niterations=7\n").unwrap();
    let status = macrpo()
        .arg("--config")
        .arg(&cfg)
        .args(["--beta", "1", "--iterations", "1", "--quiet", "--out"])
        .arg(dir.path())
        .args(SMALL)
        .status()
        .unwrap();
    assert!(status.success());
    let written = fs::read_to_string(dir.path().join("lstm-icf-beta1").join("config.txt")).unwrap();
    assert!(written.lines().any(|l| l == "beta=1"));
    assert!(written.lines().any(|l| l == "iterations=1"));
    assert!(written.lines().any(|l| l == "env=diagnostic"));
}

#[test]
fn bad_input_fails_with_a_message() {
    let out = macrpo().args(["--variant", "lstm-xyz"]).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("lstm-xyz"));
    let out = macrpo().args(["--set", "gamma=1.5"]).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("gamma"));
}
