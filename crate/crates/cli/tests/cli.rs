//! End-to-end behaviour of the command-line front end: file formats,
//! configuration precedence and exit codes.

use std::path::Path;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sweepwave::limit::run_limit;
use sweepwave::params::ModelParams;
use sweepwave_cli::emit::{write_limit_csv, LimitTable};
use sweepwave_cli::main_with;
use sweepwave_cli::run::{EXIT_NON_GENERIC, EXIT_OK, EXIT_RUNTIME, EXIT_USAGE};

fn run(args: &[&str], out: &Path) -> i32 {
    let mut v = vec!["sweepwave".to_string()];
    v.extend(args.iter().map(|s| s.to_string()));
    v.push("--out".into());
    v.push(out.display().to_string());
    main_with(v)
}

fn report(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

fn round_trip(p: &ModelParams<f64>, horizon: f64, probes: usize, seed: u64) -> Result<(), String> {
    let Ok(path) = run_limit(p, horizon, 2000) else {
        return Ok(());
    };
    let mut buf = Vec::new();
    write_limit_csv(&mut buf, &path).unwrap();
    let table = LimitTable::parse(std::str::from_utf8(&buf).unwrap()).map_err(|e| e.to_string())?;
    if path.events.is_empty() {
        return Ok(());
    }
    // emitted values are bit-identical to the evaluator at event times
    for (row, &s) in table.times.iter().enumerate() {
        for (j, &y) in table.levels[row].iter().enumerate() {
            let e = path.eval(j, s).unwrap();
            if y != e {
                return Err(format!("row {row} type {j}: {y} vs {e}"));
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = path.type_count();
    for _ in 0..probes {
        let j = rng.random_range(0..k + 2);
        let t = rng.random_range(0.0..=path.end());
        let want = path.eval(j, t).unwrap();
        let got = table.eval(p, j, t).ok_or("table could not evaluate")?;
        let tol = 1e-12 * (1.0 + want.abs() + t);
        if (got - want).abs() > tol {
            return Err(format!("{p:?} y_{j}({t}): {got} vs {want}"));
        }
    }
    Ok(())
}

#[test]
fn limit_csv_round_trip_at_a_thousand_probes() {
    let cases = [
        (0.01, 1.3, 0.0, 30.0),
        (0.01, 1.8, 0.0, 30.0),
        (0.01, 1.95, 0.0, 30.0),
        (0.1, 2.4, 0.0, 20.0),
        (0.01, 1.2, 0.0013, 40.0),
        (1.0, 5.5, 0.0, 10.0),
    ];
    for (i, &(g, a, r, h)) in cases.iter().enumerate() {
        let p = ModelParams::new(g, a, r, 1e-3).unwrap();
        round_trip(&p, h, 1000, i as u64).unwrap();
    }
}

#[test]
fn regime_one_birth_table() {
    let dir = tempfile::tempdir().unwrap();
    let code = run(&["limit", "--gamma", "0.01", "--alpha", "1.3", "--rho", "0", "--horizon", "5"], dir.path());
    assert_eq!(code, EXIT_OK);
    let text = std::fs::read_to_string(dir.path().join("birth_times.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("k,b_k,gap_k"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    let expect = [(2.0, 0.7, 0.7), (3.0, 1.397, 0.697), (4.0, 2.094, 0.697)];
    for (row, (k, b, g)) in rows.iter().zip(expect) {
        assert_eq!(row[0], k);
        assert!((row[1] - b).abs() < 1e-12 && (row[2] - g).abs() < 1e-12, "{row:?}");
    }
    assert!(!text.contains('\r'));
    let rep = report(dir.path());
    for key in ["params", "seed", "version", "command", "payload", "config"] {
        assert!(rep.get(key).is_some(), "missing {key}");
    }
    assert_eq!(rep["command"], "limit");
}

#[test]
fn horizon_zero_gives_headers_only() {
    let dir = tempfile::tempdir().unwrap();
    let code = run(&["limit", "--gamma", "0.01", "--alpha", "1.3", "--horizon", "0"], dir.path());
    assert_eq!(code, EXIT_OK);
    let limit = std::fs::read_to_string(dir.path().join("limit_path.csv")).unwrap();
    assert_eq!(limit.lines().count(), 1);
    assert!(limit.starts_with("event_index,s_n,kind,new_dominant_or_new_type,y_0"));
    let births = std::fs::read_to_string(dir.path().join("birth_times.csv")).unwrap();
    assert_eq!(births, "k,b_k,gap_k\n");
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"gamma": 0.01, "alpha": 1.3, "horizon": 2, "mu": 0.0001}"#).unwrap();
    let out = dir.path().join("out");
    let code = run(
        &["limit", "--config", cfg.to_str().unwrap(), "--gamma", "0.1"],
        &out,
    );
    assert_eq!(code, EXIT_OK);
    let rep = report(&out);
    assert_eq!(rep["params"]["gamma"], 0.1);
    assert_eq!(rep["params"]["alpha"], 1.3);
    assert_eq!(rep["config"]["params"]["mu"], 0.0001);
    assert_eq!(rep["config"]["horizon"], 2.0);
}

#[test]
fn missing_alpha_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["limit", "--gamma", "0.01", "--horizon", "1"], dir.path()), EXIT_USAGE);
    assert!(!dir.path().join("report.json").exists());
}

#[test]
fn malformed_config_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, "{\n  \"gamma\": 0.01,\n  \"alpah\": 1.3\n}\n").unwrap();
    assert_eq!(run(&["limit", "--config", cfg.to_str().unwrap()], dir.path()), EXIT_USAGE);
}

#[test]
fn non_generic_parameters_exit_two_with_wave() {
    let dir = tempfile::tempdir().unwrap();
    let code = run(&["limit", "--gamma", "1", "--alpha", "1.5", "--horizon", "5"], dir.path());
    assert_eq!(code, EXIT_NON_GENERIC);
    let rep = report(dir.path());
    assert_eq!(rep["payload"]["exit_code"], 2);
    assert_eq!(rep["payload"]["wave"], 3);
    assert_eq!(rep["config"]["params"]["alpha"], 1.5);
}

#[test]
fn event_budget_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let code = run(
        &["simulate", "--gamma", "0.1", "--alpha", "1.3", "--stop-type", "5", "--max-events", "1000"],
        dir.path(),
    );
    assert_eq!(code, EXIT_RUNTIME);
    assert_eq!(report(dir.path())["seed"], 0);
}

#[test]
fn conflicting_stops_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let code = run(
        &["simulate", "--gamma", "0.1", "--alpha", "1.3", "--stop-type", "2", "--stop-time", "5"],
        dir.path(),
    );
    assert_eq!(code, EXIT_USAGE);
}

#[test]
fn trajectory_csv_shape() {
    let dir = tempfile::tempdir().unwrap();
    let code = run(
        &["simulate", "--gamma", "0.1", "--alpha", "1.3", "--mu", "0.01", "--stop-type", "2", "--seed", "9", "--max-type-columns", "3"],
        dir.path(),
    );
    assert_eq!(code, EXIT_OK);
    let text = std::fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,N,types,x_0,x_1,x_2,x_3"));
    for line in lines {
        let (head, quoted) = line.split_once(",\"").unwrap();
        let (sparse, tail) = quoted.split_once("\",").unwrap();
        let n: u64 = head.split(',').nth(1).unwrap().parse().unwrap();
        let pairs: Vec<(usize, u64)> = sparse
            .split(';')
            .map(|kv| {
                let (k, v) = kv.split_once(':').unwrap();
                (k.parse().unwrap(), v.parse().unwrap())
            })
            .collect();
        assert_eq!(pairs.iter().map(|p| p.1).sum::<u64>(), n);
        let cols: Vec<u64> = tail.split(',').map(|x| x.parse().unwrap()).collect();
        for (j, c) in cols.iter().enumerate() {
            assert_eq!(*c, pairs.iter().find(|p| p.0 == j).map_or(0, |p| p.1));
        }
    }
    // same seed, same file
    let again = tempfile::tempdir().unwrap();
    run(
        &["simulate", "--gamma", "0.1", "--alpha", "1.3", "--mu", "0.01", "--stop-type", "2", "--seed", "9", "--max-type-columns", "3"],
        again.path(),
    );
    assert_eq!(text, std::fs::read_to_string(again.path().join("trajectory.csv")).unwrap());
}

#[test]
fn output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("from_env");
    std::env::set_var(sweepwave_cli::OUT_ENV, &out);
    let code = main_with(["sweepwave", "blowup", "--gamma", "1", "--alpha", "5.5"]);
    std::env::remove_var(sweepwave_cli::OUT_ENV);
    assert_eq!(code, EXIT_OK);
    assert_eq!(report(&out)["payload"]["certified"], true);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn round_trip_random_params(gamma in 0.01f64..1.0, alpha in 1.01f64..3.0, rho in 0.0f64..0.01, seed in any::<u64>()) {
        let p = ModelParams::new(gamma, alpha, rho, 1e-3).unwrap();
        prop_assert!(round_trip(&p, 5.0, 100, seed).is_ok(), "{:?}", round_trip(&p, 5.0, 100, seed));
    }
}
