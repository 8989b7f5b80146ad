use std::process::Command;

use fauxpas_cli::{compute, parse_json_report, render_csv, render_json, render_table, Format, Overrides, RunConfig, VariantSelector};
use fauxpas_core::history::DEFAULT_HISTORY_CAP;
use fauxpas_core::PredictionProfile;
use proptest::prelude::*;

fn config(variant: VariantSelector) -> RunConfig {
    RunConfig {
        scenario: "curtain".into(),
        variant,
        format: Format::Json,
        overrides: Overrides::default(),
        oracle: false,
        seed: None,
        max_histories: DEFAULT_HISTORY_CAP,
    }
}

fn bits(p: &PredictionProfile) -> Vec<u64> {
    p.values().iter().map(|v| v.to_bits()).collect()
}

fn fauxpas(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_fauxpas")).args(args).output().unwrap()
}

#[test]
fn json_round_trips_bit_exact() {
    let report = compute(&config(VariantSelector::Both)).unwrap();
    let back = parse_json_report(&render_json(&report)).unwrap();
    assert_eq!(back, report);
    for (a, b) in report.profiles.iter().zip(&back.profiles) {
        assert_eq!(bits(a), bits(b));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn json_round_trips_under_overrides(eps in 0.001f64..0.499, r in 0.1f64..20.0, te in -3.0f64..3.0) {
        let mut c = config(VariantSelector::Both);
        c.overrides.epsilon = Some(eps);
        c.overrides.rationality = Some(r);
        c.overrides.theta_eval = Some(te);
        let report = compute(&c).unwrap();
        let back = parse_json_report(&render_json(&report)).unwrap();
        prop_assert_eq!(&back, &report);
        for (a, b) in report.profiles.iter().zip(&back.profiles) {
            prop_assert_eq!(bits(a), bits(b));
        }
    }
}

#[test]
fn table_and_json_hold_identical_numbers() {
    let report = compute(&config(VariantSelector::Both)).unwrap();
    let table = render_table(&report);
    for field in PredictionProfile::FIELDS {
        let line = table
            .lines()
            .find(|l| l.split_whitespace().next() == Some(field))
            .unwrap_or_else(|| panic!("missing {field}"));
        let cells: Vec<&str> = line.split_whitespace().collect();
        for (i, p) in report.profiles.iter().enumerate() {
            let shown: f64 = cells[i + 1].parse().unwrap();
            let value = p.fields().into_iter().find(|f| f.0 == field).unwrap().1;
            assert_eq!(shown.to_bits(), value.to_bits(), "{field}");
        }
    }
}

#[test]
fn csv_has_one_row_per_profile_field() {
    let report = compute(&config(VariantSelector::Shared)).unwrap();
    let csv = render_csv(&report);
    for field in PredictionProfile::FIELDS {
        let rows: Vec<&str> = csv.lines().filter(|l| l.starts_with(&format!("shared,{field},"))).collect();
        assert_eq!(rows.len(), 1, "{field}");
    }
    assert!(!csv.contains("diverging,"));
}

#[test]
fn effective_configuration_is_echoed() {
    let mut c = config(VariantSelector::Shared);
    c.overrides.epsilon = Some(0.1);
    let report = compute(&c).unwrap();
    assert_eq!(report.config.overrides, vec!["epsilon".to_string()]);
    assert!(render_table(&report).contains("epsilon"));
}

#[test]
fn table_run_flags_the_diverging_variant() {
    let out = fauxpas(&["run", "--scenario", "curtains", "--variant", "both", "--format", "table"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("shared: expected-insult"));
    assert!(text.contains("contrast"));
    assert!(text.contains("# configuration"));
}

#[test]
fn oracle_flag_reports_tiny_deviation() {
    let out = fauxpas(&["run", "--format", "json", "--oracle"]);
    assert!(out.status.success());
    let report = parse_json_report(&String::from_utf8(out.stdout).unwrap()).unwrap();
    let check = report.oracle.unwrap();
    assert!(check.quantities > 80);
    assert!(check.max_deviation < 1e-9);
}

#[test]
fn negative_theta_and_hypothesis_priors() {
    let out = fauxpas(&[
        "run", "--variant", "shared", "--format", "json", "--theta-eval", "-1",
        "--hypothesis-prior", "benign=0.5", "--hypothesis-prior", "harmful=0.5",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = parse_json_report(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(report.config.scenario.speaker_model.theta_eval, -1.0);
    assert_eq!(report.config.scenario.hypotheses[1].prior, 0.5);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let unknown = dir.path().join("unknown.toml");
    std::fs::write(&unknown, "colour = 1\n").unwrap();
    let impossible = dir.path().join("impossible.toml");
    std::fs::write(&impossible, "[priors]\nability_high = 1.0\n").unwrap();
    let code = |args: &[&str]| fauxpas(args).status.code().unwrap();
    assert_eq!(code(&["run", "--variant", "shared"]), 0);
    assert_eq!(code(&["run", "--scenario", unknown.to_str().unwrap()]), 2);
    assert_eq!(code(&["run", "--scenario", "no-such-scenario"]), 2);
    assert_eq!(code(&["run", "--epsilon", "0.6"]), 2);
    assert_eq!(code(&["run", "--hypothesis-prior", "harmful=0.5"]), 2);
    assert_eq!(code(&["run", "--scenario", impossible.to_str().unwrap()]), 3);
    assert_eq!(code(&["run", "--max-histories", "5"]), 4);
    let err = String::from_utf8(fauxpas(&["run", "--scenario", unknown.to_str().unwrap()]).stderr).unwrap();
    assert!(err.contains("colour"), "{err}");
}

#[test]
fn listing() {
    let dir = tempfile::tempdir().unwrap();
    let out = fauxpas(&["list", "--dir", dir.path().to_str().unwrap()]);
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 5);
    std::fs::write(dir.path().join("mine.toml"), "name = \"mine\"\n").unwrap();
    std::fs::write(dir.path().join("notes.txt"), "x").unwrap();
    let out = fauxpas(&["list", "--dir", dir.path().to_str().unwrap()]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 6);
    assert!(text.lines().last().unwrap().ends_with("mine.toml"));
    let user = text.lines().last().unwrap();
    assert!(fauxpas(&["run", "--scenario", user]).status.success());
    assert_eq!(fauxpas(&["list"]).stdout, b"curtain\nstory-prize\nwine-bottle\ncupcakes\nparking\n");
}
