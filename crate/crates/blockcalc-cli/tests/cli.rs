//! End-to-end tests of the `blockcalc` binary: exit codes, output
//! formats, spec files, overrides, and the rule that the CLI adds no
//! computation of its own.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use blockcalc::conflict_model::{
    key_collision_prob, model_success_rate, pairwise_failure_probs, AccessPattern,
    KeyDistribution,
};
use blockcalc::distributions::{overlap_area, zipf_pmf, ZipfSpec};
use blockcalc::latency_model::{
    expected_latency, BlockDesign, EnvironmentParams, FittedLatencyModel,
};
use blockcalc::simulator::{run_experiment, ClientBehavior, SimConfig};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_blockcalc"))
        .args(args)
        .output()
        .expect("binary must launch")
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

/// Value of a `key = value` stdout line.
fn field(stdout: &str, key: &str) -> String {
    stdout
        .lines()
        .find_map(|l| l.strip_prefix(&format!("{key} = ")))
        .unwrap_or_else(|| panic!("no field {key} in: {stdout}"))
        .to_string()
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("process must exit normally")
}

fn read_csv(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap_or_else(|e| panic!("cannot read {}: {e}", path.display()))
        .lines()
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn forward(range: u32, alpha: f64) -> KeyDistribution {
    KeyDistribution::from_zipf(&ZipfSpec::forward(range, alpha)).unwrap()
}

#[test]
fn overlap_matches_library() {
    let out = run(&["overlap", "--alpha", "1.05", "--range", "100"]);
    assert_eq!(exit_code(&out), 0);
    let stdout = stdout_of(&out);
    let fwd = zipf_pmf(&ZipfSpec::forward(100, 1.05)).unwrap();
    let rev = zipf_pmf(&ZipfSpec::reversed(100, 1.05)).unwrap();
    assert_eq!(
        field(&stdout, "overlap_area"),
        format!("{:.6}", overlap_area(&fwd, &rev).unwrap())
    );
    assert_eq!(
        field(&stdout, "p_wwfail"),
        format!("{:.6}", key_collision_prob(&KeyDistribution::from_pmf(&rev)))
    );
}

#[test]
fn model_success_matches_library() {
    let out = run(&[
        "model", "success", "--alpha", "1.05", "--range", "50", "--bs", "16",
        "--rp", "0.3", "--write-dist", "reversed",
    ]);
    assert_eq!(exit_code(&out), 0);
    let stdout = stdout_of(&out);
    let pattern = AccessPattern::new(
        0.3,
        forward(50, 1.05),
        KeyDistribution::from_zipf(&ZipfSpec::reversed(50, 1.05)).unwrap(),
    )
    .unwrap();
    let fp = pairwise_failure_probs(&pattern);
    assert_eq!(field(&stdout, "p_b_fail"), format!("{:.6}", fp.p_b_fail));
    assert_eq!(
        field(&stdout, "success_rate"),
        format!("{:.6}", model_success_rate(&pattern, 16))
    );
}

#[test]
fn model_latency_values() {
    let out = run(&[
        "model", "latency", "--bs", "16", "--bto", "2", "--rate", "8",
        "--c0", "0.003", "--c1", "0.12",
    ]);
    assert_eq!(exit_code(&out), 0);
    let stdout = stdout_of(&out);
    assert_eq!(field(&stdout, "wait_seconds"), "1.000000");
    assert_eq!(field(&stdout, "latency_seconds"), "1.168000");
    assert!(!stdout.contains("saturated"), "no diagnostic without --bp-rate");

    let out = run(&[
        "model", "latency", "--bs", "1", "--bto", "2", "--rate", "16",
        "--c0", "0.003", "--c1", "0.12", "--bp-rate", "11.85",
    ]);
    assert_eq!(field(&stdout_of(&out), "saturated"), "true");
}

#[test]
fn simulate_matches_library() {
    let out = run(&[
        "simulate", "--case", "1", "--alpha", "1.05", "--range", "50",
        "--bs", "4", "--trials", "5", "--ops", "200", "--seed", "9",
    ]);
    assert_eq!(exit_code(&out), 0);
    let stdout = stdout_of(&out);

    let behavior = ClientBehavior::all_write(forward(50, 1.05));
    let model = model_success_rate(behavior.pattern(), 4);
    let mut config = SimConfig::new(behavior, 4);
    config.seed = 9;
    config.total_operations = 200;
    let band = run_experiment(&config, 5).unwrap();
    assert_eq!(field(&stdout, "model"), format!("{model:.6}"));
    assert_eq!(field(&stdout, "p1"), format!("{:.6}", band.p1));
    assert_eq!(field(&stdout, "p50"), format!("{:.6}", band.p50));
    assert_eq!(field(&stdout, "p99"), format!("{:.6}", band.p99));
}

#[test]
fn simulate_writes_trace() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.csv");
    let out = run(&[
        "simulate", "--case", "2", "--bs", "4", "--trials", "2", "--ops", "100",
        "--trace", trace.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0);
    let rows = read_csv(&trace);
    assert_eq!(rows[0], ["block_index", "slot", "client", "op", "key", "verdict"]);
    assert_eq!(rows.len(), 1 + 100, "25 blocks of 4 slots");
    assert_eq!(rows[1][0], "1");
    assert_eq!(rows[1][1], "1");
    assert_eq!(rows[1][5], "Success", "slot 1 always commits");
}

#[test]
fn config_errors_exit_2() {
    for args in [
        vec!["overlap", "--alpha", "0.9"],
        vec!["overlap", "--no-such-flag"],
        vec!["simulate", "--bs", "8", "--clients", "2"],
        vec!["experiment", "nosuch-preset"],
        vec!["model", "success", "--rp", "1.5"],
        vec!["simulate", "--case", "4"],
        vec!["simulate", "--trials", "0"],
    ] {
        let out = run(&args);
        assert_eq!(exit_code(&out), 2, "args {args:?}: {}", stderr_of(&out));
    }
}

#[test]
fn data_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let bad_header = dir.path().join("bad_header.csv");
    fs::write(&bad_header, "wrong,header\n1,2\n").unwrap();
    let same_bs = dir.path().join("same_bs.csv");
    fs::write(
        &same_bs,
        "bs,bto_seconds,arrival_rate,measured_latency_seconds\n4,2,8,0.5\n4,2,8,0.6\n",
    )
    .unwrap();
    let single = dir.path().join("single.csv");
    fs::write(
        &single,
        "bs,bto_seconds,arrival_rate,measured_latency_seconds\n4,2,8,0.5\n",
    )
    .unwrap();
    let bad_row = dir.path().join("bad_row.csv");
    fs::write(
        &bad_row,
        "bs,bto_seconds,arrival_rate,measured_latency_seconds\n4,2,8,oops\n",
    )
    .unwrap();

    let missing = run(&["fit", "/no/such/file.csv"]);
    assert_eq!(exit_code(&missing), 3);

    let out = run(&["fit", bad_header.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 3);
    assert!(stderr_of(&out).contains("line 1"), "{}", stderr_of(&out));

    let out = run(&["fit", bad_row.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 3);
    assert!(stderr_of(&out).contains("line 2"), "{}", stderr_of(&out));

    assert_eq!(exit_code(&run(&["fit", same_bs.to_str().unwrap()])), 3);
    assert_eq!(exit_code(&run(&["fit", single.to_str().unwrap()])), 3);
}

#[test]
fn spec_file_validation_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        // Unknown field.
        "kind = \"case1_all_write\"\nnot_a_field = 1\n[sweep]\nparameter = \"alpha\"\nvalues = [1.01]\n",
        // Not strictly increasing.
        "kind = \"case1_all_write\"\n[sweep]\nparameter = \"alpha\"\nvalues = [1.05, 1.01]\n",
        // Empty values.
        "kind = \"case1_all_write\"\n[sweep]\nparameter = \"alpha\"\nvalues = []\n",
        // rp sweep is meaningless for all-write clients.
        "kind = \"case1_all_write\"\n[sweep]\nparameter = \"rp\"\nvalues = [0.1, 0.2]\n",
        // Non-integral block size.
        "kind = \"case2_read_write\"\n[sweep]\nparameter = \"bs\"\nvalues = [1.5, 2.0]\n",
        // Unknown kind.
        "kind = \"case9\"\n[sweep]\nparameter = \"alpha\"\nvalues = [1.01]\n",
    ];
    for (i, text) in cases.iter().enumerate() {
        let path = dir.path().join(format!("spec{i}.toml"));
        fs::write(&path, text).unwrap();
        let out = run(&["experiment", path.to_str().unwrap()]);
        assert_eq!(exit_code(&out), 2, "case {i}: {}", stderr_of(&out));
    }
}

#[test]
fn experiment_file_runs_with_overrides_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("sweep.toml");
    fs::write(
        &spec,
        "kind = \"case1_all_write\"\n\
         [sweep]\n\
         parameter = \"alpha\"\n\
         values = [1.03, 1.05]\n\
         [fixed]\n\
         bs = 4\n\
         range = 50\n\
         trials = 4\n\
         ops = 200\n\
         seed = 7\n",
    )
    .unwrap();
    let out1 = dir.path().join("out1");
    let out2 = dir.path().join("out2");
    for out_dir in [&out1, &out2] {
        let out = run(&[
            "experiment",
            spec.to_str().unwrap(),
            "--out",
            out_dir.to_str().unwrap(),
        ]);
        assert_eq!(exit_code(&out), 0, "{}", stderr_of(&out));
    }
    assert_eq!(
        fs::read(out1.join("sweep.csv")).unwrap(),
        fs::read(out2.join("sweep.csv")).unwrap(),
        "reruns must be byte-identical"
    );
    assert!(out1.join("sweep.py").exists());

    // The emitted model and median columns equal direct library calls.
    let rows = read_csv(&out1.join("sweep.csv"));
    assert_eq!(rows[0], ["value", "model", "p1", "p50", "p99"]);
    for (row, alpha) in rows[1..].iter().zip([1.03f64, 1.05]) {
        let behavior = ClientBehavior::all_write(forward(50, alpha));
        let model = model_success_rate(behavior.pattern(), 4);
        let mut config = SimConfig::new(behavior, 4);
        config.seed = 7;
        config.total_operations = 200;
        let band = run_experiment(&config, 4).unwrap();
        assert_eq!(row[0], format!("{alpha}"));
        assert_eq!(row[1], format!("{model:.6}"));
        assert_eq!(row[3], format!("{:.6}", band.p50));
    }

    // A CLI override changes the outcome deterministically.
    let out3 = dir.path().join("out3");
    let out = run(&[
        "experiment",
        spec.to_str().unwrap(),
        "--out",
        out3.to_str().unwrap(),
        "--seed",
        "8",
    ]);
    assert_eq!(exit_code(&out), 0);
    assert_ne!(
        fs::read(out1.join("sweep.csv")).unwrap(),
        fs::read(out3.join("sweep.csv")).unwrap(),
        "a different seed must change the band"
    );
}

#[test]
fn table3_preset_matches_library() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["experiment", "table3", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(exit_code(&out), 0);
    let rows = read_csv(&dir.path().join("table3.csv"));
    assert_eq!(rows[0], ["alpha", "p_wwfail", "overlap"]);
    assert_eq!(rows.len(), 6);
    for row in &rows[1..] {
        let alpha: f64 = row[0].parse().unwrap();
        let fwd = zipf_pmf(&ZipfSpec::forward(100, alpha)).unwrap();
        let rev = zipf_pmf(&ZipfSpec::reversed(100, alpha)).unwrap();
        assert_eq!(
            row[1],
            format!("{:.6}", key_collision_prob(&KeyDistribution::from_pmf(&rev)))
        );
        assert_eq!(row[2], format!("{:.6}", overlap_area(&fwd, &rev).unwrap()));
    }
}

#[test]
fn fit_recovers_noise_free_coefficients() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("clean.csv");
    let truth = FittedLatencyModel::new(0.004, 0.2);
    let mut text = String::from("bs,bto_seconds,arrival_rate,measured_latency_seconds\n");
    for bs in [2u32, 4, 8, 16] {
        let design = BlockDesign::new(bs, 1.5).unwrap();
        let env = EnvironmentParams::new(8.0, 1.0, 1.0, 1.0, 1.0).unwrap();
        let latency = expected_latency(&env, &design, &truth);
        text.push_str(&format!("{bs},1.5,8,{latency}\n"));
    }
    fs::write(&data, text).unwrap();

    let table = dir.path().join("fit.csv");
    let out = run(&[
        "fit",
        data.to_str().unwrap(),
        "--bp-rate",
        "11.85",
        "--out",
        table.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0, "{}", stderr_of(&out));
    let stdout = stdout_of(&out);
    let c0: f64 = field(&stdout, "c0").parse().unwrap();
    let c1: f64 = field(&stdout, "c1").parse().unwrap();
    assert!((c0 - 0.004).abs() < 1e-9, "c0 = {c0}");
    assert!((c1 - 0.2).abs() < 1e-9, "c1 = {c1}");

    let rows = read_csv(&table);
    assert_eq!(rows[0], ["bs", "measured", "predicted", "rel_error", "saturated"]);
    for row in &rows[1..] {
        let rel: f64 = row[3].parse().unwrap();
        assert!(rel.abs() < 1e-9, "row {row:?}");
        assert_eq!(row[4], "false");
    }
}

#[test]
fn latency_sweep_reads_measurement_files() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("measured.csv");
    let truth = FittedLatencyModel::new(0.004, 0.2);
    let mut text = String::from("bs,bto_seconds,arrival_rate,measured_latency_seconds\n");
    for bs in [2u32, 4, 8, 16] {
        let design = BlockDesign::new(bs, 2.0).unwrap();
        let env = EnvironmentParams::new(8.0, 1.0, 1.0, 1.0, 1.0).unwrap();
        text.push_str(&format!(
            "{bs},2,8,{}\n",
            expected_latency(&env, &design, &truth)
        ));
    }
    fs::write(&data, text).unwrap();

    let spec = dir.path().join("latency.toml");
    fs::write(
        &spec,
        format!(
            "kind = \"latency_sweep\"\n\
             [sweep]\n\
             parameter = \"bs\"\n\
             values = [2, 4, 8, 16]\n\
             [fixed]\n\
             measurements = \"{}\"\n",
            data.display()
        ),
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let out = run(&[
        "experiment",
        spec.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0, "{}", stderr_of(&out));
    let rows = read_csv(&out_dir.join("latency.csv"));
    assert_eq!(rows.len(), 5);
    for row in &rows[1..] {
        let rel: f64 = row[3].parse().unwrap();
        assert!(rel.abs() < 1e-9, "noise-free file must round trip: {row:?}");
    }
    assert!(
        !out_dir.join("latency_measurements.csv").exists(),
        "file-backed sweeps must not synthesize measurements"
    );
}
