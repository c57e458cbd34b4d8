use std::f64::consts::{FRAC_PI_4, FRAC_PI_8, LN_2, SQRT_2};
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use povm_core::aspect::{
    bivariate_marginals, joint_probabilities, AnalyzerAngles, AspectConfig, ChshReport,
};
use povm_core::fine::MarginalSet;
use povm_core::measure::MeasureJson;
use povm_core::operator::MatrixJson;
use povm_core::srt::{interference_pvm, path_pvm, srt_povm, SrtConfig};
use povm_core::{ProbabilityTable, State};
use serde_json::Value;
use tempfile::TempDir;

fn povm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_povm"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = povm(args);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    stdout(&out)
}

fn write_json<T: serde::Serialize>(dir: &TempDir, name: &str, value: &T) -> String {
    let path = dir.path().join(name);
    fs::write(&path, serde_json::to_string(value).unwrap()).unwrap();
    path.to_str().unwrap().to_owned()
}

fn csv_rows(text: &str) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
        .collect();
    (header, rows)
}

#[test]
fn sweep_csv_three_points() {
    let (header, rows) = csv_rows(&ok(&["srt", "sweep", "--points", "3"]));
    assert_eq!(header, ["a", "J_lambda", "J_mu", "bound", "slack"]);
    assert_eq!(rows.iter().map(|r| r[0]).collect::<Vec<_>>(), [0.0, 0.5, 1.0]);
    for r in &rows {
        assert!(r[4] >= -1e-12, "slack {}", r[4]);
        assert!((r[3] - LN_2).abs() < 1e-12);
    }
    assert!(rows[0][4].abs() < 1e-12 && rows[2][4].abs() < 1e-12);
    assert!((rows[1][1] - 0.47738562622110964).abs() < 1e-12);
    assert!((rows[1][2] - 0.4164955306996875).abs() < 1e-12);
}

#[test]
fn sweep_csv_and_json_agree_bit_for_bit() {
    let (_, rows) = csv_rows(&ok(&["srt", "sweep", "--points", "11", "--phase", "0.4"]));
    let json: Value = serde_json::from_str(&ok(&[
        "srt", "sweep", "--points", "11", "--phase", "0.4", "--format", "json",
    ]))
    .unwrap();
    for (r, j) in rows.iter().zip(json.as_array().unwrap()) {
        for (k, key) in ["a", "J_lambda", "J_mu", "bound", "slack"].iter().enumerate() {
            assert_eq!(r[k].to_bits(), j[key].as_f64().unwrap().to_bits(), "{key}");
        }
    }
}

#[test]
fn worker_count_does_not_change_output() {
    let args = ["srt", "sweep", "--points", "201"];
    let one = ok(&[&args[..], &["--jobs", "1"]].concat());
    let four = ok(&[&args[..], &["--jobs", "4"]].concat());
    assert_eq!(one, four);
}

#[test]
fn standard_composite_reaches_tsirelson() {
    let json: Value = serde_json::from_str(&ok(&[
        "aspect",
        "standard-composite",
        "--angles",
        "0,0.7853981634,0.3926990817,1.1780972451",
    ]))
    .unwrap();
    let s = json["max_abs_s"].as_f64().unwrap();
    assert!((s - 2.0 * SQRT_2).abs() < 1e-6, "{s}");
    assert_eq!(json["chsh"]["values"].as_array().unwrap().len(), 8);
}

#[test]
fn emitted_measure_round_trips_exactly() {
    let text = ok(&["srt", "--absorber", "0.3", "--phase", "1.1", "--emit", "povm"]);
    let parsed: MeasureJson = serde_json::from_str(&text).unwrap();
    let expected = MeasureJson::from(&srt_povm(&SrtConfig::new(0.3, 1.1).unwrap()).unwrap());
    assert_eq!(parsed, expected);
    assert!(parsed.to_povm(1e-9).is_ok());
}

#[test]
fn emitted_tables_round_trip_exactly() {
    let angles = AnalyzerAngles::new(0.1, 0.9, 0.4, 2.2);
    let config = AspectConfig::new(0.3, 0.8, angles, State::singlet()).unwrap();
    let joint = joint_probabilities(&config).unwrap();
    let marginals = bivariate_marginals(&joint).unwrap();
    let base = [
        "aspect", "--gamma1", "0.3", "--gamma2", "0.8", "--angles", "0.1,0.9,0.4,2.2", "--state", "bell",
    ];
    let emit = |what: &str| ok(&[&base[..], &["--emit", what]].concat());

    let got: ProbabilityTable = serde_json::from_str(&emit("joint")).unwrap();
    assert_eq!(got, joint);
    let got: MarginalSet = serde_json::from_str(&emit("marginals")).unwrap();
    assert_eq!(got, marginals);
    let got: ChshReport = serde_json::from_str(&emit("chsh")).unwrap();
    assert_eq!(got, marginals.chsh().unwrap());
}

#[test]
fn joint_csv_lists_sixteen_outcomes() {
    let text = ok(&[
        "aspect", "--gamma1", "0.5", "--gamma2", "0.5", "--angles", "0,1,2,3", "--emit", "joint", "--format", "csv",
    ]);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("m1,n1,m2,n2,p"));
    let total: f64 = lines
        .map(|l| l.rsplit(',').next().unwrap().parse::<f64>().unwrap())
        .sum();
    assert!((total - 1.0).abs() < 1e-12);
}

#[test]
fn fine_exit_codes() {
    let dir = TempDir::new().unwrap();
    let config = AspectConfig::new(0.5, 0.5, AnalyzerAngles::tsirelson(), State::singlet()).unwrap();
    let sound = bivariate_marginals(&joint_probabilities(&config).unwrap()).unwrap();
    let path = write_json(&dir, "sound.json", &sound);
    let before = fs::read(&path).unwrap();
    let out = povm(&["fine", "--marginals", &path]);
    assert_eq!(out.status.code(), Some(0));
    let report: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["verdict"], "feasible");
    assert!(report["residual"].as_f64().unwrap() <= 1e-9);
    assert_eq!(fs::read(&path).unwrap(), before, "input untouched");

    let composite: Value = serde_json::from_str(&ok(&[
        "aspect",
        "standard-composite",
        "--angles",
        &format!("0,{FRAC_PI_4},{FRAC_PI_8},{}", 3.0 * FRAC_PI_8),
    ]))
    .unwrap();
    let path = write_json(&dir, "violating.json", &composite["marginals"]);
    let out = povm(&["fine", "--marginals", &path]);
    assert_eq!(out.status.code(), Some(2));
    let report: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["verdict"], "infeasible");
    assert!(report["certificate"]["value"].as_f64().unwrap().abs() > 2.0);

    let half = [[0.5, 0.0], [0.0, 0.5]];
    let signaling = MarginalSet::from_rows([half, half, half, [[1.0, 0.0], [0.0, 0.0]]]).unwrap();
    let path = write_json(&dir, "signaling.json", &signaling);
    let out = povm(&["fine", "--marginals", &path]);
    assert_eq!(out.status.code(), Some(3));
    let report: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["no_signaling"]["pass"], false);
}

#[test]
fn martens_from_files() {
    let dir = TempDir::new().unwrap();
    let bivariate = dir.path().join("biv.json");
    ok(&[
        "srt", "--absorber", "0.25", "--phase", "0.6", "--emit", "bivariate", "--out",
        bivariate.to_str().unwrap(),
    ]);
    let pvm1 = write_json(&dir, "p.json", &MeasureJson::from(path_pvm().as_povm()));
    let pvm2 = write_json(&dir, "q.json", &MeasureJson::from(interference_pvm(0.6).as_povm()));
    let args = ["martens", "--bivariate", bivariate.to_str().unwrap(), "--pvm1", &pvm1, "--pvm2", &pvm2];
    let report: Value = serde_json::from_str(&ok(&args)).unwrap();
    assert!((report["J_lambda"].as_f64().unwrap() - 0.3127515147113674).abs() < 1e-10);
    assert!((report["J_mu"].as_f64().unwrap() - 0.5623351446188084).abs() < 1e-10);
    let (header, rows) = csv_rows(&ok(&[&args[..], &["--format", "csv"]].concat()));
    assert_eq!(header, ["J_lambda", "J_mu", "bound", "slack"]);
    assert!(rows[0][3] >= 0.0);

    // a non-projective measure is rejected as a PVM
    let out = povm(&["martens", "--bivariate", bivariate.to_str().unwrap(), "--pvm1", bivariate.to_str().unwrap(), "--pvm2", &pvm2]);
    assert_eq!(out.status.code(), Some(65));
}

#[test]
fn probabilities_from_state_file() {
    let dir = TempDir::new().unwrap();
    let plus = MatrixJson {
        dim: 2,
        entries: vec![[1.0, 0.0], [0.0, 0.0], [0.0, 0.0], [0.0, 0.0]],
    };
    let state = write_json(&dir, "rho.json", &plus);
    let table: ProbabilityTable = serde_json::from_str(&ok(&[
        "srt", "--absorber", "0.5", "--emit", "probabilities", "--state", &state,
    ]))
    .unwrap();
    assert_eq!(table.shape(), &[2, 2]);
    // path "+" with certainty
    assert!((table.get(&[0, 0]) + table.get(&[0, 1]) - 1.0).abs() < 1e-12);
    let out = povm(&["srt", "--absorber", "0.5", "--emit", "probabilities"]);
    assert_eq!(out.status.code(), Some(65));
}

#[test]
fn measure_validate() {
    let dir = TempDir::new().unwrap();
    let good = dir.path().join("good.json");
    ok(&["srt", "--absorber", "0.7", "--emit", "povm", "--out", good.to_str().unwrap()]);
    let report: Value = serde_json::from_str(&ok(&["measure", "validate", good.to_str().unwrap()])).unwrap();
    assert_eq!(report["valid"], true);
    assert_eq!(report["outcomes"], 3);

    let mut broken: MeasureJson = serde_json::from_str(&fs::read_to_string(&good).unwrap()).unwrap();
    broken.elements[0].entries[0][0] += 0.1;
    let bad = write_json(&dir, "bad.json", &broken);
    let out = povm(&["measure", "validate", &bad]);
    assert_eq!(out.status.code(), Some(1));
    let report: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["valid"], false);
    assert!(report["violation"].is_string());

    assert!(!Path::new(&dir.path().join("missing.json")).exists());
    let out = povm(&["measure", "validate", dir.path().join("missing.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(74));
}

#[test]
fn usage_and_validation_exit_codes() {
    assert_eq!(povm(&["frobnicate"]).status.code(), Some(64));
    assert_eq!(povm(&[]).status.code(), Some(64));
    assert_eq!(povm(&["srt", "--absorber", "1.5"]).status.code(), Some(65));
    assert_eq!(povm(&["srt", "sweep", "--points", "1"]).status.code(), Some(65));
    assert_eq!(povm(&["aspect", "--gamma1", "0.5", "--gamma2", "0.5", "--angles", "0,1,2"]).status.code(), Some(65));
    assert_eq!(povm(&["aspect", "--gamma1", "0.5", "--angles", "0,1,2,3"]).status.code(), Some(65));
    assert_eq!(povm(&["--tol", "-1", "srt", "sweep"]).status.code(), Some(65));
    assert_eq!(povm(&["srt", "sweep", "--jobs", "0"]).status.code(), Some(65));
    assert_eq!(povm(&["srt", "--absorber", "x"]).status.code(), Some(65));
    assert_eq!(povm(&["--help"]).status.code(), Some(0));
}

#[test]
fn selfcheck_is_seeded() {
    let a = ok(&["selfcheck", "--samples", "30", "--seed", "11"]);
    let b = ok(&["selfcheck", "--samples", "30", "--seed", "11", "--jobs", "1"]);
    assert_eq!(a, b);
    let report: Value = serde_json::from_str(&a).unwrap();
    assert_eq!(report["pass"], true);
    assert_eq!(report["seed"], 11);
}
