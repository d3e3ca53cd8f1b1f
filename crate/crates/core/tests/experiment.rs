use std::collections::BTreeMap;
use std::fs;

use proptest::prelude::*;

use drprice::analysis::GapEstimator;
use drprice::experiment::{self, repeated_slots, ExperimentConfig, ExperimentKind};
use drprice::rng::scenario_rng;
use drprice::Error;

fn small(kind: ExperimentKind) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::preset(kind);
    cfg.users = 20;
    cfg.horizon = 40;
    cfg.replications = 20;
    cfg
}

fn kind_strategy() -> impl Strategy<Value = ExperimentKind> {
    prop_oneof![
        Just(ExperimentKind::Baseline),
        Just(ExperimentKind::ParamSet2),
        (0.0f64..=1.0).prop_map(ExperimentKind::RepeatedDt),
        (1usize..20).prop_map(ExperimentKind::BlockedDt),
    ]
}

fn config_strategy() -> impl Strategy<Value = ExperimentConfig> {
    (
        kind_strategy(),
        1usize..500,
        1usize..500,
        0.01f64..5.0,
        any::<u64>(),
        any::<bool>(),
        prop::option::of(-10.0f64..10.0),
        prop::option::of(0.0f64..1.0),
        prop_oneof![Just(GapEstimator::Expected), Just(GapEstimator::Realized)],
    )
        .prop_map(|(kind, users, horizon, c, seed, coupled, y, l0, est)| {
            let mut cfg = ExperimentConfig::preset(kind);
            cfg.users = users;
            cfg.horizon = horizon;
            cfg.revenue_c = c;
            cfg.seed = seed;
            cfg.coupled_noise = coupled;
            cfg.y_capacity = y;
            cfg.lambda_init = l0;
            cfg.gap_estimator = est;
            cfg
        })
}

proptest! {
    #[test]
    fn config_round_trip_is_idempotent(cfg in config_strategy()) {
        let text = cfg.to_toml_string().unwrap();
        let parsed = ExperimentConfig::from_toml_str(&text).unwrap();
        prop_assert_eq!(&parsed, &cfg);
        prop_assert_eq!(parsed.to_toml_string().unwrap(), text);
    }

    #[test]
    fn repeated_demand_has_ceiling_count_of_identical_slots(p in 0.0f64..=1.0, horizon in 1usize..300, seed in any::<u64>()) {
        let mut cfg = ExperimentConfig::preset(ExperimentKind::RepeatedDt(p));
        cfg.users = 3;
        cfg.horizon = horizon;
        let s = experiment::build_scenario(&cfg, &mut scenario_rng(seed)).unwrap();
        let mut counts: BTreeMap<u64, usize> = BTreeMap::new();
        for d in s.demand.values() {
            *counts.entry(d.to_bits()).or_default() += 1;
        }
        let k = repeated_slots(p, horizon);
        let largest = counts.values().copied().max().unwrap();
        // i.i.d. continuous draws never collide, so only the shared value repeats
        prop_assert_eq!(largest, k.max(1));
        prop_assert_eq!(k, ((p * horizon as f64) - 1e-9).ceil().max(0.0) as usize);
    }
}

#[test]
fn reference_fractions_give_exact_counts() {
    for (p, k) in [(0.0, 0), (0.2, 20), (0.3, 30), (0.4, 40)] {
        assert_eq!(repeated_slots(p, 100), k);
    }
}

#[test]
fn blocked_demand_has_25_blocks_of_4() {
    let cfg = ExperimentConfig::preset(ExperimentKind::BlockedDt(4));
    let s = experiment::build_scenario(&cfg, &mut scenario_rng(9)).unwrap();
    let d = s.demand.values();
    let mut distinct: Vec<u64> = d.iter().map(|v| v.to_bits()).collect();
    distinct.sort_unstable();
    distinct.dedup();
    assert_eq!(distinct.len(), 25);
    for block in d.chunks(4) {
        assert!(block.iter().all(|v| *v == block[0]));
    }
}

#[test]
fn presets_sample_from_their_intervals() {
    let cfg = ExperimentConfig::preset(ExperimentKind::ParamSet2);
    let s = experiment::build_scenario(&cfg, &mut scenario_rng(10)).unwrap();
    assert_eq!((s.users(), s.horizon()), (100, 100));
    for u in s.population.users() {
        assert!((1.0..=3.0).contains(&u.alpha) && (3.0..=10.0).contains(&u.beta));
    }
    assert!(s.demand.values().iter().all(|d| (2.0..=5.0).contains(d)));
    assert_eq!(s.alpha_rev, cfg.revenue_c * s.demand.max());
}

#[test]
fn scenario_depends_only_on_seed() {
    let cfg = ExperimentConfig::default();
    let a = experiment::build_scenario(&cfg, &mut scenario_rng(1)).unwrap();
    let b = experiment::build_scenario(&cfg, &mut scenario_rng(1)).unwrap();
    let c = experiment::build_scenario(&cfg, &mut scenario_rng(2)).unwrap();
    assert_eq!(a.population, b.population);
    assert_eq!(a.demand, b.demand);
    assert_ne!(a.demand, c.demand);
}

#[test]
fn single_replication_still_writes_episode() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small(ExperimentKind::Baseline);
    cfg.replications = 1;
    cfg.out_dir = dir.path().to_path_buf();
    let (run, artifacts) = experiment::run_experiment(&cfg).unwrap();
    assert_eq!(run.report.unwrap_err(), "need ≥ 2 replications, got 1");
    assert!(artifacts.regret_csv.is_none());
    let episode = fs::read_to_string(&artifacts.episode_csv).unwrap();
    assert_eq!(
        episode.lines().next().unwrap(),
        "t,d_t,lambda_online,lambda_star,gamma1_hat,gamma2_hat,Q_online,Q_star,cost_online,cost_star"
    );
    assert_eq!(episode.lines().count(), 41);
    let summary = fs::read_to_string(&artifacts.summary_json).unwrap();
    assert!(summary.contains("need ≥ 2 replications"));
}

#[test]
fn artifacts_have_fixed_columns() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small(ExperimentKind::Baseline);
    cfg.out_dir = dir.path().to_path_buf();
    let (_, artifacts) = experiment::run_experiment(&cfg).unwrap();
    let regret = fs::read_to_string(artifacts.regret_csv.unwrap()).unwrap();
    assert_eq!(
        regret.lines().next().unwrap(),
        "t,R_t_mean,R_t_se,cum_regret,lambda_bias,lambda_var,gamma1_bias,gamma1_var"
    );
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(artifacts.summary_json).unwrap()).unwrap();
    assert!(summary["regret"]["log_bound"]["k1"].is_number());
    assert!(summary["checks"]["price_tracking"].is_boolean());
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small(ExperimentKind::RepeatedDt(0.3));
    cfg.seed = 77;
    let mut outputs = Vec::new();
    for sub in ["a", "b"] {
        cfg.out_dir = dir.path().join(sub);
        let (_, a) = experiment::run_experiment(&cfg).unwrap();
        outputs.push((
            fs::read(a.episode_csv).unwrap(),
            fs::read(a.regret_csv.unwrap()).unwrap(),
        ));
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn offline_csv_lists_capacity_and_path() {
    let cfg = small(ExperimentKind::Baseline);
    let s = experiment::build_scenario(&cfg, &mut scenario_rng(0)).unwrap();
    let sol = drprice::offline::solve_optimal(&s);
    let mut buf = Vec::new();
    experiment::write_offline_csv(&s, &sol, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("key,value\n"));
    assert!(text.contains(&format!("y_star,{}\n", sol.y_star)));
    assert!(text.contains("t,d_t,lambda_star,Q_star,stage_cost\n"));
    assert_eq!(
        text.lines()
            .filter(|l| l.starts_with(|c: char| c.is_ascii_digit()))
            .count(),
        40
    );
}

#[test]
fn sweep_writes_every_kind() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small(ExperimentKind::Baseline);
    cfg.out_dir = dir.path().to_path_buf();
    let rows = experiment::run_sweep(&cfg).unwrap();
    assert_eq!(rows.len(), ExperimentKind::sweep_grid().len());
    for kind in ExperimentKind::sweep_grid() {
        assert!(dir.path().join(kind.slug()).join("episode.csv").exists());
    }
    let table = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert_eq!(table.lines().count(), rows.len() + 1);
}

#[test]
fn io_errors_carry_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let mut cfg = small(ExperimentKind::Baseline);
    cfg.out_dir = blocker.join("sub");
    let err = experiment::run_experiment(&cfg).unwrap_err();
    assert!(matches!(err, Error::Io { .. }));
    assert!(err.to_string().contains("file/sub"), "{err}");
}

#[test]
fn config_file_errors_are_reported() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    fs::write(&path, "d_min = 7.0\n").unwrap();
    let err = ExperimentConfig::load(&path).unwrap_err();
    assert!(err.to_string().contains("bad.toml"), "{err}");
    assert!(matches!(
        ExperimentConfig::load(&dir.path().join("missing.toml")),
        Err(Error::Io { .. })
    ));
}
