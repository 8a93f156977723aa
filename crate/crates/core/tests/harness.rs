mod common;

use std::path::Path;

use uwsched::harness::export::{read_csv, summary_rows, write_csv, write_sweep, RunRow, SummaryRow};
use uwsched::harness::sweep::{run_single, run_sweep, Axis};
use uwsched::harness::{run_episode, run_seed, Estimate, RunMetrics, ScenarioConfig, Scheme, SchemePlan, Summary};
use uwsched::Error;

fn configs_dir() -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn quick(horizon: usize, runs: usize) -> ScenarioConfig {
    let mut c = ScenarioConfig::default();
    c.slotting.horizon = horizon;
    c.runs = runs;
    c
}

#[test]
fn shipped_configs_load_and_validate() {
    let mut names: Vec<_> = std::fs::read_dir(configs_dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    names.sort();
    assert!(names.len() >= 5);
    for path in names {
        let config = ScenarioConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        config.network_spec().unwrap();
        config.fdm_network_spec().unwrap();
    }
    let main = ScenarioConfig::load(&configs_dir().join("paper_4x4.json")).unwrap();
    let topo = main.topology.build();
    assert_eq!((topo.n_pu(), topo.n_su()), (4, 4));
    assert_eq!(main.radio.center_khz, 32.0);
    assert_eq!(main.beta, 0.8);
    assert_eq!(main, ScenarioConfig::default());
}

#[test]
fn validation_reports_every_bad_field() {
    let err = ScenarioConfig::parse(r#"{"traffic": {"alpha1": 0.3, "alpha2": 0.3}, "beta": 1.5, "runs": 0}"#).unwrap_err();
    let Error::Validation(issues) = err else { panic!("expected validation error") };
    let paths: Vec<&str> = issues.iter().map(|i| i.path.as_str()).collect();
    assert!(paths.contains(&"traffic.alpha1"));
    assert!(paths.contains(&"beta"));
    assert!(paths.contains(&"runs"));
}

#[test]
fn malformed_configs_are_rejected() {
    assert!(matches!(ScenarioConfig::parse(r#"{"bogus": 1}"#), Err(Error::Parse(_))));
    assert!(matches!(ScenarioConfig::parse("{"), Err(Error::Parse(_))));
    let empty_plan = r#"{"band_plan": {"channels": [], "guard_khz": 0.2}}"#;
    assert!(matches!(ScenarioConfig::parse(empty_plan), Err(Error::Validation(_))));
    let above_surface = r#"{"topology": {"kind": "explicit", "pu_nodes": [[0,0,10],[100,0,-10]], "su_nodes": [[0,0,-5],[0,100,-5]]}}"#;
    assert!(matches!(ScenarioConfig::parse(above_surface), Err(Error::Validation(_))));
    assert!(ScenarioConfig::load(Path::new("/nonexistent/config.json")).is_err());
}

#[test]
fn config_round_trips_through_json() {
    let config = ScenarioConfig::default();
    let text = serde_json::to_string(&config).unwrap();
    assert_eq!(ScenarioConfig::parse(&text).unwrap(), config);
}

#[test]
fn single_run_matches_direct_episode() {
    let mut config = quick(45, 1);
    config.seed = 99;
    for scheme in [Scheme::Ccts, Scheme::Dcts, Scheme::Ia] {
        let point = run_single(config.clone(), &[scheme]).unwrap();
        let result = &point.results[0];
        let arm = uwsched::harness::Arm::build(config.network_spec().unwrap(), &config, true).unwrap();
        let plan = SchemePlan::build(scheme, &arm, &config).unwrap();
        let mut policy = plan.policy(&arm, &config);
        let direct = run_episode(&arm, policy.as_mut(), 0, run_seed(99, 0), 45).unwrap();
        assert_eq!(result.runs, vec![direct]);
    }
}

#[test]
fn silent_runs_carry_no_secondary_bits() {
    let point = run_single(quick(60, 4), &[Scheme::Silent]).unwrap();
    for r in &point.results[0].runs {
        assert_eq!(r.su_bits, 0);
        assert_eq!(r.su_active_slots, 0);
    }
    assert_eq!(point.results[0].summary.pu_ratio.mean, 1.0);
}

#[test]
fn full_protection_leaves_primaries_intact() {
    let mut config = quick(120, 6);
    config.beta = 1.0;
    let point = run_single(config, &[Scheme::Ccts, Scheme::Dcts, Scheme::Ctdm, Scheme::Cfdm]).unwrap();
    for r in &point.results {
        let s = &r.summary;
        assert!(s.pu_ratio.mean >= 1.0 - 2.0 * s.pu_ratio.stderr - 1e-12, "{}", r.scheme);
        if matches!(r.scheme, Scheme::Dcts | Scheme::Ctdm | Scheme::Cfdm) {
            assert!(s.su.mean <= 2.0 * s.su.stderr, "{}: {}", r.scheme, s.su.mean);
        }
    }
}

#[test]
fn duplicated_runs_keep_mean_and_shrink_stderr() {
    let runs: Vec<RunMetrics> = (0..40)
        .map(|k| RunMetrics {
            run: k,
            seed: k as u64,
            slots: 100,
            pu_bits: (k as u64 * 7919) % 1000,
            su_bits: (k as u64 * 104_729) % 3000,
            su_active_slots: 0,
            su_overlap_bits: 0,
        })
        .collect();
    let doubled: Vec<RunMetrics> = runs.iter().chain(&runs).cloned().collect();
    let a = Summary::build(&runs, &runs, 3.0, 4000.0).unwrap();
    let b = Summary::build(&doubled, &doubled, 3.0, 4000.0).unwrap();
    assert!((a.total.mean - b.total.mean).abs() < 1e-12);
    let n = runs.len() as f64;
    // Exact shrink factor with the unbiased variance; about 1/√2.
    let factor = ((n - 1.0) / (2.0 * n - 1.0)).sqrt();
    assert!((b.total.stderr - a.total.stderr * factor).abs() < 1e-12);
    assert!((factor - std::f64::consts::FRAC_1_SQRT_2).abs() < 0.01);
    assert!(Summary::build(&[], &[], 3.0, 4000.0).is_err());
}

#[test]
fn combined_stderr_is_quadrature_sum() {
    let a = Estimate::of(&[1.0, 2.0, 4.0]);
    let b = Estimate::of(&[0.0, 5.0]);
    assert!((a.combined_stderr(&b) - (a.stderr.powi(2) + b.stderr.powi(2)).sqrt()).abs() < 1e-15);
}

#[test]
fn csv_round_trip_and_empty_tables() {
    let dir = tempfile::tempdir().unwrap();
    let points = run_sweep(&quick(30, 3), Axis::Alpha2, &[0.2, 0.4], &[Scheme::Dcts, Scheme::Silent]).unwrap();
    write_sweep(dir.path(), &points).unwrap();
    let rows: Vec<SummaryRow> = read_csv(&dir.path().join("summary.csv")).unwrap();
    assert_eq!(rows, summary_rows(&points));
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[0].axis, "alpha2");
    let runs: Vec<RunRow> = read_csv(&dir.path().join("runs.csv")).unwrap();
    assert_eq!(runs.len(), 12);

    let empty = dir.path().join("empty.csv");
    write_csv::<SummaryRow>(&empty, &[]).unwrap();
    let text = std::fs::read_to_string(&empty).unwrap();
    assert_eq!(text.lines().count(), 1);
    assert!(text.starts_with("axis,value,scheme,runs,pu_mean"));
    assert!(read_csv::<SummaryRow>(&empty).unwrap().is_empty());
}

#[test]
fn sweeps_are_deterministic_across_thread_counts() {
    let config = quick(30, 5);
    let render = |threads: usize| -> Vec<u8> {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        let dir = tempfile::tempdir().unwrap();
        pool.install(|| {
            let points = run_sweep(&config, Axis::Beta, &[0.7, 0.9], &Scheme::ALL).unwrap();
            write_sweep(dir.path(), &points).unwrap();
        });
        ["summary.csv", "summary_long.csv", "runs.csv"]
            .iter()
            .flat_map(|f| std::fs::read(dir.path().join(f)).unwrap())
            .collect()
    };
    assert_eq!(render(1), render(3));
}

#[test]
fn sweep_axes_reject_bad_input() {
    let config = quick(10, 1);
    assert!(run_sweep(&config, Axis::Beta, &[], &[Scheme::Silent]).is_err());
    assert!(run_sweep(&config, Axis::Alpha2, &[1.5], &[Scheme::Silent]).is_err());
    let explicit = ScenarioConfig::load(&configs_dir().join("irregular_3x3.json")).unwrap();
    assert!(Axis::Distance.apply(&explicit, 1000.0).is_err());
}

#[test]
fn common_random_numbers_across_schemes() {
    let point = run_single(quick(60, 3), &[Scheme::Silent, Scheme::Ctdm]).unwrap();
    let seeds = |k: usize| point.results[k].runs.iter().map(|r| r.seed).collect::<Vec<_>>();
    assert_eq!(seeds(0), seeds(1));
    assert_eq!(point.results[0].silent, point.results[1].silent);
}
