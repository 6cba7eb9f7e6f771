//! End-to-end runs of the `interscribe` binary.

use std::io::Write;
use std::process::{Command, Output};

use interscribe::report::RunReport;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_interscribe"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(args: &[&str]) -> (RunReport, String) {
    let mut all = args.to_vec();
    all.push("--json");
    let out = run(&all);
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report = RunReport::from_json(&stdout).expect("valid report");
    (report, stdout)
}

fn exit_code(args: &[&str]) -> i32 {
    run(args).status.code().expect("exit code")
}

#[test]
fn theta_for_the_standard_pair() {
    let (report, _) = json(&["theta", "--c", "0.5", "--r", "0.2", "--digits", "24"]);
    assert_eq!(report.theta.as_deref(), Some("0.418833985394304193770079"));
    assert_eq!(report.inputs["digits"], "24");
    assert_eq!(report.stages[0].name, "baby");
    assert_eq!(report.stages[0].steps, "12");
    let qs: Vec<&str> = report.convergents.iter().take(5).map(|r| r.q.as_str()).collect();
    assert_eq!(qs, ["2", "5", "7", "12", "31"]);
    assert!(report.verdict.is_none());
}

#[test]
fn theta_report_round_trips_byte_for_byte() {
    let (report, text) = json(&["theta", "--c", "0.5", "--r", "0.2", "--verify"]);
    assert_eq!(format!("{}\n", report.to_json()), text);
    for key in [
        "\"inputs\"",
        "\"stages\"",
        "\"convergents\"",
        "\"theta\"",
        "\"oracle_theta\"",
        "\"agreement_digits\"",
        "\"elapsed_seconds\"",
    ] {
        assert!(text.contains(key), "missing {key}");
    }
}

#[test]
fn theta_at_100_digits_agrees_with_the_oracle() {
    let (report, _) = json(&["theta", "--c", "0.5", "--r", "0.2", "--digits", "100", "--verify"]);
    let theta = report.theta.unwrap();
    assert_eq!(theta.trim_start_matches("0.").len(), 100);
    assert!(report.agreement_digits.unwrap() >= 98);
    assert!(report.elapsed_seconds.parse::<f64>().unwrap() < 5.0);
}

#[test]
fn chapple_pair_closes_at_one_third() {
    let (report, _) = json(&["theta", "--c", "0.2", "--r", "0.48"]);
    assert_eq!(report.extras["closure"], "1/3");
    assert_eq!(report.theta.as_deref(), Some("0.333333333333333333333333"));
}

#[test]
fn incomplete_integral_through_a_circle_pair() {
    let (report, _) = json(&["theta", "--psi", "0.7", "--k2", "0.5", "--digits", "20", "--verify"]);
    for key in ["beta", "F", "K", "F_oracle", "c", "r"] {
        assert!(report.extras.contains_key(key), "missing {key}");
    }
    assert!(report.extras["F_agreement_digits"].parse::<u32>().unwrap() >= 18);
}

#[test]
fn exit_codes() {
    assert_eq!(exit_code(&["theta", "--c", "0.5", "--r", "0.2", "--digits", "24"]), 0);
    assert_eq!(exit_code(&["theta", "--c", "0.9", "--r", "0.2"]), 2);
    assert_eq!(exit_code(&["theta", "--c", "0.5"]), 2);
    assert_eq!(exit_code(&["nr", "--a", "2.5", "--b1", "0.4", "--budget", "100"]), 2);
    assert_eq!(exit_code(&["nr", "--a", "0.6", "--b1", "0.4", "--start", "7"]), 2);
    // A disc whose third eigenvalue sits at its centre leaves the branch the
    // vertex procedure follows.
    let off_branch = [
        "nr", "--a", "0", "--b1", "0.4", "--b2", "0", "--c1", "0.5", "--c2", "0.5", "--c3", "0.5", "--budget", "100",
    ];
    assert_eq!(exit_code(&off_branch), 3);
    assert_eq!(exit_code(&["theta", "--c", "0.5", "--r", "0.2", "--budget", "3"]), 4);
    assert_eq!(
        exit_code(&[
            "ellipse",
            "--a",
            "0.5",
            "--b",
            "0.4",
            "--c",
            "0.4",
            "--budget",
            "100",
            "--eps-stop",
            "1e-20"
        ]),
        4
    );
}

#[test]
fn config_file_fills_in_flags_and_flags_win() {
    let mut file = tempfile::NamedTempFile::new().unwrap();
    writeln!(
        file,
        "json = true\ndigits = 30\n[theta]\nc = \"0.5\"\nr = \"0.2\"\ndigits = 12"
    )
    .unwrap();
    let path = file.path().to_str().unwrap();
    let out = run(&["theta", "--config", path]);
    assert!(out.status.success());
    let report = RunReport::from_json(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(report.theta.as_deref(), Some("0.418833985394"));
    let out = run(&["theta", "--config", path, "--digits", "6"]);
    let report = RunReport::from_json(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(report.theta.as_deref(), Some("0.418834"));
}

#[test]
fn ellipse_table_through_row_twelve() {
    let (report, _) = json(&[
        "ellipse", "--a", "0.5", "--b", "0.4", "--c", "0.4", "--budget", "252070", "--verify",
    ]);
    let row = &report.convergents[11];
    assert_eq!(
        (row.j.as_str(), row.q.as_str(), row.p.as_str()),
        ("12", "252069", "78451")
    );
    assert_eq!(report.extras["bracket"], "holds");
}

#[test]
fn ellipse_from_weights_matches_ellipse_from_axes() {
    let (axes, _) = json(&["ellipse", "--a", "0.5", "--b", "0.4", "--c", "0.4", "--budget", "2000"]);
    // a² = 0.25, b² = 0.16, c = 0.4: α₀ = 0.2356, α₁ = 0.064, α₂ = −0.09,
    // cos ψ₁ = (0.41 − 0.36)/(0.36 − 0.09).
    let (weights, _) = json(&[
        "ellipse",
        "--alpha0",
        "0.2356",
        "--alpha1",
        "0.064",
        "--alpha2",
        "-0.09",
        "--cos-psi1",
        "0.185185185185185185185185185185185185185185185185185185",
        "--budget",
        "2000",
    ]);
    assert_eq!(axes.convergents, weights.convergents);
}

#[test]
fn nr_regular_run_with_trace() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.csv");
    let (report, _) = json(&[
        "nr",
        "--a",
        "0.6",
        "--b1",
        "0.4",
        "--b2",
        "0.4",
        "--start",
        "5",
        "--budget",
        "20000",
        "--trace",
        trace.to_str().unwrap(),
    ]);
    let records: Vec<&str> = report.extras["records"].split(' ').collect();
    assert_eq!(
        &records[1..10],
        ["2", "3", "8", "11", "19", "182", "201", "383", "10925"]
    );
    assert_eq!(report.verdict.as_ref().unwrap().kind, "regular");
    let text = std::fs::read_to_string(&trace).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("k,cos_psi,sin_psi,lambda_sq,log_h"));
    assert_eq!(lines.clone().count(), 20001);
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first.len(), 5);
    assert_eq!(first[0], "0");
}

#[test]
fn nr_short_run_has_no_verdict() {
    let (report, _) = json(&["nr", "--a", "0.6", "--b1", "0.4", "--budget", "500"]);
    assert!(report.verdict.is_none());
    assert_eq!(report.stages[0].steps, "500");
}

#[test]
fn nr_attractive_polygon_from_a_custom_start() {
    let (report, text) = json(&[
        "nr",
        "--a",
        "0.7200001",
        "--b1",
        "0.72",
        "--b2",
        "0.72",
        "--z0",
        "0.997910504956172999592891236,-0.064611331035011368320516583",
        "--budget",
        "40000",
    ]);
    let verdict = report.verdict.as_ref().unwrap();
    assert_eq!(verdict.kind, "attractive");
    assert_eq!(verdict.period.as_deref(), Some("18337"));
    assert!(verdict.product.as_deref().unwrap().starts_with("0.702972"));
    let last = report.convergents.last().unwrap();
    assert_eq!((last.q.as_str(), last.p.as_str()), ("18337", "5341"));
    assert_eq!(format!("{}\n", report.to_json()), text);
}

#[test]
fn verify_sweep_in_parallel() {
    let out = run(&["verify", "--jobs", "2", "--samples", "2", "--seed", "7", "--json"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = RunReport::from_json(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(report.stages.len(), 5);
    assert!(report.extras.values().all(|v| v.ends_with("pass")));
}

#[test]
fn verify_single_pair() {
    assert_eq!(exit_code(&["verify", "--c", "0.3", "--r", "0.4", "--digits", "30"]), 0);
    assert_eq!(exit_code(&["verify", "--c", "0.3", "--r", "0.9"]), 2);
}
