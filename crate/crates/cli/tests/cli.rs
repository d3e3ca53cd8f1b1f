use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn drprice(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_drprice"));
    cmd.args(args)
        .env_remove("DRPRICE_SEED")
        .env_remove("DRPRICE_OUT")
        .env("RUST_LOG", "error");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("cfg.toml");
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn help_documents_config_keys() {
    let out = drprice(&["--help"], &[]);
    let text = stdout(&out);
    for key in [
        "revenue_c",
        "noise_sd",
        "replications",
        "fit_window_start/end",
        "gap_estimator",
    ] {
        assert!(text.contains(key), "missing {key}");
    }
    let sub = stdout(&drprice(&["regret", "--help"], &[]));
    assert!(sub.contains("DRPRICE_SEED") && sub.contains("DRPRICE_OUT"));
}

#[test]
fn offline_prints_capacity_and_prices() {
    let out = drprice(&["offline", "--seed", "3"], &[]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.starts_with("key,value\n"));
    assert!(text.lines().any(|l| l.starts_with("y_star,")));
    assert!(text.contains("t,d_t,lambda_star,Q_star,stage_cost"));
}

#[test]
fn simulate_prints_episode_columns() {
    let out = drprice(
        &["simulate", "--experiment", "blocked-dt:4", "--seed", "2"],
        &[],
    );
    assert!(out.status.success());
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "t,d_t,lambda_online,lambda_star,gamma1_hat,gamma2_hat,Q_online,Q_star,cost_online,cost_star"
    );
    assert_eq!(lines.count(), 100);
}

#[test]
fn seed_precedence_is_file_env_flag() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "seed = 1\nusers = 5\nhorizon = 6\n");
    let run = |extra: &[&str], env: &[(&str, &str)]| {
        let mut args = vec!["simulate", "--config", cfg.as_str()];
        args.extend_from_slice(extra);
        stdout(&drprice(&args, env))
    };
    let from_file = run(&[], &[]);
    let from_env = run(&[], &[("DRPRICE_SEED", "2")]);
    let from_flag = run(&["--seed", "3"], &[("DRPRICE_SEED", "2")]);
    let direct = |seed: &str| run(&["--seed", seed], &[]);
    assert_eq!(from_file, direct("1"));
    assert_eq!(from_env, direct("2"));
    assert_eq!(from_flag, direct("3"));
    assert_ne!(from_file, from_env);
}

#[test]
fn regret_writes_artifacts_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "users = 30\nhorizon = 40\n");
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    for out in [&out_a, &out_b] {
        let o = drprice(
            &[
                "regret",
                "--config",
                &cfg,
                "--reps",
                "50",
                "--seed",
                "4",
                "--out",
                out.to_str().unwrap(),
            ],
            &[],
        );
        assert!(
            o.status.code() == Some(0) || o.status.code() == Some(2),
            "{:?}",
            o
        );
        let summary = stdout(&o);
        assert!(summary.trim_start().starts_with('{'));
        assert!(summary.contains("\"log_bound\""));
    }
    for f in ["episode.csv", "regret.csv"] {
        assert_eq!(
            fs::read(out_a.join(f)).unwrap(),
            fs::read(out_b.join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn regret_with_one_replication_fails_after_writing_episode() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("one");
    let o = drprice(
        &["regret", "--reps", "1"],
        &[("DRPRICE_OUT", out.to_str().unwrap())],
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("need ≥ 2 replications"));
    assert!(out.join("episode.csv").exists());
    assert!(!out.join("regret.csv").exists());
}

#[test]
fn bad_arguments_are_rejected() {
    assert!(!drprice(&["simulate", "--experiment", "weekly"], &[])
        .status
        .success());
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "beta_i_min = 9.0\n");
    let o = drprice(&["offline", "--config", &cfg], &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("beta_i"));
}
