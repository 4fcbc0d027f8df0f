//! End-to-end tests of the `isac-select` binary: exit codes, output
//! schemas, determinism and the library-level sweep API.

use std::path::PathBuf;
use std::process::{Command, Output};

use isac_select::{parse_sweep_csv, run_sweep, SweepRow, SweepSpec};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_isac-select"))
}

fn scenario_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn smoke() -> String {
    scenario_dir().join("smoke.json").display().to_string()
}

fn run_ok(args: &[&str]) -> Output {
    let out = bin().args(args).output().expect("binary runs");
    assert!(
        out.status.success(),
        "command failed: {:?}\nstderr: {}",
        args,
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

#[test]
fn validate_accepts_shipped_scenarios() {
    for name in ["setup1.json", "setup2.json", "smoke.json"] {
        let path = scenario_dir().join(name);
        run_ok(&["validate", "--scenario", &path.display().to_string()]);
    }
}

#[test]
fn validate_rejects_bad_scenarios_with_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    let text = std::fs::read_to_string(scenario_dir().join("smoke.json"))
        .unwrap()
        .replace("\"num_rf_chains\": 3", "\"num_rf_chains\": 7");
    std::fs::write(&path, text).unwrap();
    let out = bin()
        .args(["validate", "--scenario", &path.display().to_string()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("num_rf_chains"));

    let missing = dir.path().join("missing.json");
    let out = bin()
        .args(["validate", "--scenario", &missing.display().to_string()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn unknown_method_is_a_usage_error() {
    let out = bin()
        .args(["solve", "--scenario", &smoke(), "--method", "greedy"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn empty_mu_list_is_a_usage_error() {
    let out = bin()
        .args([
            "sweep",
            "--scenario",
            &smoke(),
            "--method",
            "dp",
            "--mu",
            "",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn es_budget_exceeded_exits_4_on_solve() {
    let out = bin()
        .args([
            "solve",
            "--scenario",
            &smoke(),
            "--method",
            "es",
            "--es-budget",
            "5",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("budget"));
}

#[test]
fn sweep_with_failing_cell_exits_5_and_records_the_row() {
    // budget 5 < C(6,3) = 20 fails every es cell; dp cells still succeed
    let out = bin()
        .args([
            "sweep",
            "--scenario",
            &smoke(),
            "--method",
            "dp,es",
            "--mu",
            "0.0",
            "--es-budget",
            "5",
            "--no-timestamp",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(5));
    let rows = parse_sweep_csv(&String::from_utf8_lossy(&out.stdout)).unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].is_ok(), "dp row should succeed");
    match &rows[1] {
        SweepRow::Failed { message, .. } => assert!(message.contains("budget")),
        other => panic!("expected failed es row, got {other:?}"),
    }
}

#[test]
fn sweep_rows_are_ordered_and_es_dominates_dp() {
    let out = run_ok(&[
        "sweep",
        "--scenario",
        &smoke(),
        "--method",
        "es,dp",
        "--no-timestamp",
    ]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.starts_with("# isac-select v1\n"));
    let rows = parse_sweep_csv(&text).unwrap();
    // 3 mu values x 2 methods, sorted by (mu, method)
    assert_eq!(rows.len(), 6);
    let keys: Vec<_> = rows.iter().map(|r| r.key()).collect();
    let mut sorted = keys.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    assert_eq!(keys, sorted);
    for pair in rows.chunks(2) {
        let (SweepRow::Ok(dp), SweepRow::Ok(es)) = (&pair[0], &pair[1]) else {
            panic!("unexpected failure rows");
        };
        assert_eq!(dp.method, isac_core::Method::Dp);
        assert_eq!(es.method, isac_core::Method::Es);
        assert!(es.objective <= dp.objective + 1e-12);
        assert_eq!(es.inner_solves, 20);
        assert_eq!(dp.inner_solves, 73);
    }
}

#[test]
fn sweep_is_byte_identical_without_timestamps() {
    let args = [
        "sweep",
        "--scenario",
        &smoke(),
        "--method",
        "dp",
        "--mu",
        "0.01,1.0",
        "--no-timestamp",
    ];
    let a = run_ok(&args);
    let b = run_ok(&args);
    assert_eq!(a.stdout, b.stdout);
    // wall-time column is zeroed in deterministic mode
    let rows = parse_sweep_csv(&String::from_utf8_lossy(&a.stdout)).unwrap();
    for row in rows {
        if let SweepRow::Ok(p) = row {
            assert_eq!(p.wall_time_s, 0.0);
        }
    }
}

#[test]
fn sweep_csv_roundtrips_losslessly() {
    let out = run_ok(&[
        "sweep",
        "--scenario",
        &smoke(),
        "--method",
        "dp,ula",
        "--no-timestamp",
    ]);
    let text = String::from_utf8_lossy(&out.stdout).to_string();
    let rows = parse_sweep_csv(&text).unwrap();
    let again = isac_select::sweep_to_csv(&rows, None);
    assert_eq!(text, again);
}

#[test]
fn sweep_json_matches_csv_values() {
    let csv = run_ok(&[
        "sweep", "--scenario", &smoke(), "--method", "ula", "--mu", "1.0", "--no-timestamp",
    ]);
    let json = run_ok(&[
        "sweep", "--scenario", &smoke(), "--method", "ula", "--mu", "1.0", "--no-timestamp",
        "--format", "json",
    ]);
    let rows = parse_sweep_csv(&String::from_utf8_lossy(&csv.stdout)).unwrap();
    let doc: serde_json::Value = serde_json::from_slice(&json.stdout).unwrap();
    assert_eq!(doc["schema"], "isac-select v1");
    assert_eq!(doc["generated"], serde_json::Value::Null);
    let SweepRow::Ok(p) = &rows[0] else {
        panic!("ula cell failed")
    };
    assert_eq!(doc["rows"][0]["objective"].as_f64().unwrap(), p.objective);
    assert_eq!(doc["rows"][0]["inner_solves"].as_u64().unwrap(), 1);
}

#[test]
fn beampattern_exports_grid_rows() {
    let out = run_ok(&[
        "beampattern",
        "--scenario",
        &smoke(),
        "--mu",
        "0.0",
        "--method",
        "dp",
        "--no-timestamp",
    ]);
    let text = String::from_utf8_lossy(&out.stdout);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "# isac-select v1");
    assert_eq!(lines[1], "theta_deg,power,desired_scaled");
    assert_eq!(lines.len(), 2 + 61);
    // finite nonnegative power everywhere, mainlobes dominate sidelobes
    let mut lobe = (0.0, 0usize);
    let mut side = (0.0, 0usize);
    for line in &lines[2..] {
        let f: Vec<f64> = line.split(',').map(|v| v.parse().unwrap()).collect();
        assert!(f[1].is_finite() && f[1] >= -1e-10);
        let in_lobe = (f[0] + 30.0).abs() <= 9.0 || (f[0] - 30.0).abs() <= 9.0;
        if in_lobe {
            lobe = (lobe.0 + f[1], lobe.1 + 1);
        } else {
            side = (side.0 + f[1], side.1 + 1);
        }
    }
    let lobe_mean = lobe.0 / lobe.1 as f64;
    let side_mean = side.0 / side.1 as f64;
    assert!(
        lobe_mean > side_mean,
        "mainlobe mean {lobe_mean} vs sidelobe mean {side_mean}"
    );
}

#[test]
fn beampattern_for_ula_uses_the_reduced_array() {
    let out = run_ok(&[
        "beampattern",
        "--scenario",
        &smoke(),
        "--mu",
        "0.0",
        "--method",
        "ula",
        "--no-timestamp",
    ]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(text.lines().count(), 2 + 61);
}

#[test]
fn solve_json_reports_selection_and_convergence() {
    let out = run_ok(&[
        "solve",
        "--scenario",
        &smoke(),
        "--mu",
        "1.0",
        "--method",
        "dp",
        "--format",
        "json",
        "--no-timestamp",
    ]);
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["schema"], "isac-select v1");
    assert_eq!(doc["selection"].as_array().unwrap().len(), 3);
    assert_eq!(doc["converged"], serde_json::Value::Bool(true));
    assert_eq!(doc["point"]["inner_solves"].as_u64().unwrap(), 73);
}

#[test]
fn seed_flag_overrides_the_file_seed() {
    let a = run_ok(&[
        "solve", "--scenario", &smoke(), "--method", "ula", "--seed", "3", "--no-timestamp",
    ]);
    let b = run_ok(&[
        "solve", "--scenario", &smoke(), "--method", "ula", "--seed", "4", "--no-timestamp",
    ]);
    let ra = parse_sweep_csv(&String::from_utf8_lossy(&a.stdout)).unwrap();
    let rb = parse_sweep_csv(&String::from_utf8_lossy(&b.stdout)).unwrap();
    let (SweepRow::Ok(pa), SweepRow::Ok(pb)) = (&ra[0], &rb[0]) else {
        panic!("solve failed")
    };
    assert_eq!(pa.seed, 3);
    assert_eq!(pb.seed, 4);
    assert_ne!(pa.rate_bpcu, pb.rate_bpcu);
}

#[test]
fn library_sweep_api_runs_seed_batches() {
    let scenario = isac_core::Scenario::from_path(scenario_dir().join("smoke.json")).unwrap();
    let spec = SweepSpec {
        mu_values: vec![0.01],
        methods: vec![isac_core::Method::Ula],
        seeds: vec![Some(2), Some(1)],
        rate_only: false,
        es_budget: 100,
        zero_wall_time: true,
    };
    let rows = run_sweep(&scenario, &spec).unwrap();
    assert_eq!(rows.len(), 2);
    // seeds come back sorted
    assert_eq!(rows[0].key().2, 1);
    assert_eq!(rows[1].key().2, 2);

    let empty = SweepSpec {
        mu_values: vec![],
        ..spec
    };
    assert!(matches!(
        run_sweep(&scenario, &empty),
        Err(isac_select::CliError::Usage(_))
    ));
}
