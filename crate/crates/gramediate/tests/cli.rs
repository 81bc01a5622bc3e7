//! End-to-end tests of the command-line surface.

use std::process::Command;

fn gramediate(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_gramediate"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json_of(out: &std::process::Output) -> serde_json::Value {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("valid json on stdout")
}

#[test]
fn fit_reports_the_reference_statistics() {
    let out = gramediate(&[
        "fit",
        "--data",
        "builtin",
        "--vars",
        "SSC-W,SSC-F,TIME",
        "--model",
        "[SSC-W,SSC-F][SSC-W,TIME]",
    ]);
    let v = json_of(&out);
    let r = &v["result"];
    assert!((r["g2"].as_f64().unwrap() - 18.79).abs() < 0.01);
    assert_eq!(r["df"].as_u64().unwrap(), 24);
    assert!((r["pvalue"].as_f64().unwrap() - 0.763).abs() < 0.001);
    assert_eq!(v["config"]["data"], "builtin");
}

#[test]
fn fit_restricts_to_the_model_variables_when_vars_is_absent() {
    let out = gramediate(&["fit", "--model", "[SSC-W][SSC-F][TIME]"]);
    let v = json_of(&out);
    assert_eq!(v["result"]["df"].as_u64().unwrap(), 39);
    assert!((v["result"]["g2"].as_f64().unwrap() - 859.80).abs() < 0.01);
}

#[test]
fn fit_compare_reports_the_nested_test() {
    let out = gramediate(&[
        "fit",
        "--vars",
        "SSC-W,SSC-F,TIME",
        "--compare",
        "[SSC-W,SSC-F][SSC-W,TIME]",
        "[SSC-W,SSC-F][SSC-W,TIME][SSC-F,TIME]",
    ]);
    let v = json_of(&out);
    let c = &v["result"]["comparison"];
    assert!((c["delta_g2"].as_f64().unwrap() - 4.04).abs() < 0.01);
    assert_eq!(c["delta_df"].as_u64().unwrap(), 6);
    assert!((c["pvalue"].as_f64().unwrap() - 0.671).abs() < 0.001);
}

#[test]
fn fit_all_3var_emits_eight_rows_with_exact_df() {
    let out = gramediate(&["fit", "--vars", "SSC-W,SSC-F,TIME", "--all-3var"]);
    let v = json_of(&out);
    let rows = v["result"].as_array().unwrap();
    assert_eq!(rows.len(), 8);
    let dfs: Vec<u64> = rows.iter().map(|r| r["df"].as_u64().unwrap()).collect();
    assert_eq!(dfs, vec![39, 33, 33, 30, 24, 24, 27, 18]);
}

#[test]
fn enumerate_counts_four_variable_models() {
    let out = gramediate(&["enumerate", "--nvars", "4"]);
    let v = json_of(&out);
    assert_eq!(v["result"]["count"].as_u64().unwrap(), 114);
    assert_eq!(v["result"]["models"].as_array().unwrap().len(), 114);
}

#[test]
fn mediators_pipeline_selects_weakness() {
    let out = gramediate(&["mediators", "--data", "builtin", "--treatment", "IC"]);
    let v = json_of(&out);
    let r = &v["result"];
    assert_eq!(r["model"], "[SSC-F,SSC-W][SSC-W,TIME][SSC-W,IC]");
    assert_eq!(r["graphical"], true);
    assert_eq!(r["candidates"], serde_json::json!([["SSC-W"]]));

    let dot = gramediate(&["mediators", "--treatment", "IC", "--format", "dot"]);
    assert!(dot.status.success());
    let text = String::from_utf8_lossy(&dot.stdout);
    assert!(text.contains("\"SSC-F\" -- \"SSC-W\""));
}

#[test]
fn search_output_is_byte_identical_across_runs() {
    let a = gramediate(&["search", "--data", "builtin"]);
    let b = gramediate(&["search", "--data", "builtin"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let v: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v["result"]["agreed"], "[SSC-F,SSC-W][SSC-W,TIME][SSC-W,IC]");
}

#[test]
fn validate_emits_plottable_csv_with_baseline() {
    let out = gramediate(&[
        "validate",
        "--target",
        "model5",
        "--vars",
        "SSC-W,SSC-F,TIME",
        "--q",
        "0.9",
        "--reps",
        "25",
        "--seed",
        "3",
        "--format",
        "csv",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("q,replicates,consensus_reached,target_recovered,proportion,baseline"));
    assert!(text.contains("# seed=3"));
    let row = text.lines().last().unwrap();
    assert!(row.starts_with("0.9,25,"));
    assert!(row.ends_with(&format!("{}", 1.0 / 9.0)));
}

#[test]
fn mediate_is_deterministic_given_seed_flag_or_env() {
    let args = [
        "mediate",
        "--treatment",
        "IC",
        "--mediator",
        "SSC-W",
        "--outcome",
        "SSC-F",
        "--covariates",
        "TIME",
        "--nboot",
        "40",
        "--seed",
        "5",
    ];
    let a = gramediate(&args);
    let b = gramediate(&args);
    assert_eq!(a.stdout, b.stdout);
    let v = json_of(&a);
    assert!((v["result"]["acme_control"][0]["estimate"].as_f64().unwrap() - 0.0634).abs() < 2e-3);

    // env var supplies the seed when the flag is absent
    let with_env = Command::new(env!("CARGO_BIN_EXE_gramediate"))
        .args([
            "mediate",
            "--treatment",
            "IC",
            "--mediator",
            "SSC-W",
            "--outcome",
            "SSC-F",
            "--covariates",
            "TIME",
            "--nboot",
            "40",
        ])
        .env("GRAMEDIATE_SEED", "5")
        .output()
        .unwrap();
    assert_eq!(with_env.stdout, a.stdout);
}

#[test]
fn csv_input_with_inferred_schema_matches_builtin() {
    let records = gramediate::embedded_dataset().expand().unwrap();
    let dir = std::env::temp_dir().join("gramediate_cli_test");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("data.csv");
    std::fs::write(&path, records.to_csv()).unwrap();

    let from_csv = gramediate(&[
        "fit",
        "--data",
        path.to_str().unwrap(),
        "--vars",
        "SSC-W,SSC-F,TIME",
        "--model",
        "[SSC-W,SSC-F][SSC-W,TIME]",
    ]);
    let v = json_of(&from_csv);
    assert!((v["result"]["g2"].as_f64().unwrap() - 18.79).abs() < 0.01);
}

#[test]
fn errors_exit_nonzero_with_json_payload() {
    let out = gramediate(&["fit", "--model", "[NOPE]"]);
    assert!(!out.status.success());
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).expect("error json on stderr");
    assert!(err["error"].as_str().unwrap().contains("NOPE"));
}
