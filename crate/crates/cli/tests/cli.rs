mod common;

use common::*;

fn validate(schema_name: &str, value: &serde_json::Value) {
    let schema = schema(schema_name);
    let validator = jsonschema::validator_for(&schema).unwrap();
    let errors: Vec<String> = validator
        .iter_errors(value)
        .map(|e| e.to_string())
        .collect();
    assert!(errors.is_empty(), "{schema_name}: {errors:?}\n{value:#}");
}

#[test]
fn lint_exit_codes() {
    let out = run(&[
        "lint",
        &fixture("tautology.mitl"),
        "--delta",
        "1",
        "--horizon",
        "50",
        "--format",
        "json",
    ]);
    assert_eq!(code(&out), 1);
    let report = json(&out);
    validate("lint", &report);
    assert_eq!(report["issues"].as_array().unwrap().len(), 1);
    assert_eq!(report["issues"][0]["kind"], "tautology");

    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("p.mitl");
    std::fs::write(&p, "p\n").unwrap();
    let out = run(&["lint", p.to_str().unwrap(), "--format", "json"]);
    assert_eq!(code(&out), 0);
    validate("lint", &json(&out));

    let out = run(&["lint", &fixture("until.mitl")]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("Until"));
}

#[test]
fn lint_reports_vacuity_in_text_and_json() {
    let out = run(&[
        "lint",
        &fixture("request_response.mitl"),
        "--format",
        "json",
    ]);
    assert_eq!(code(&out), 1);
    let report = json(&out);
    validate("lint", &report);
    assert_eq!(report["issues"][0]["kind"], "vacuous_antecedent");
    let text = stdout(&run(&["lint", &fixture("request_response.mitl")]));
    assert!(text.contains("vacuous_antecedent at /0"));
    assert!(text.contains(report["formula"].as_str().unwrap()));
    for line in report["issues"][0]["witness_csv"].as_str().unwrap().lines() {
        assert!(text.contains(line));
    }
    assert!(!text.contains('\x1b'));
}

#[test]
fn lint_input_errors() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.mitl");
    std::fs::write(&bad, "G[0,5]\n  (req -> )\n").unwrap();
    let out = run(&["lint", bad.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains(":2:11"), "{}", stderr(&out));
    assert_eq!(code(&run(&["lint", "/nonexistent.mitl"])), 2);
    assert_eq!(
        code(&run(&[
            "lint",
            &fixture("request_response.mitl"),
            "--delta",
            "2"
        ])),
        2
    );
    assert_eq!(code(&run(&["lint"])), 2);
}

#[test]
fn lint_accepts_template_literals() {
    let out = run(&[
        "lint",
        "template:settling(x,ref=1,r=0.1,ts=20,H=40)",
        "--format",
        "json",
    ]);
    assert_eq!(code(&out), 0);
    assert_eq!(
        json(&out)["formula"],
        "(G[20,40] ((x > 0.9) and (x < 1.1)))"
    );
    assert_eq!(
        code(&run(&["lint", "template:settling(x,ref=1,r=0,ts=20,H=40)"])),
        2
    );
}

#[test]
fn monitor_exit_codes() {
    let out = run(&[
        "monitor",
        &fixture("request_response.mitl"),
        &fixture("req_silent.csv"),
        "--format",
        "json",
    ]);
    assert_eq!(code(&out), 4);
    let verdict = json(&out);
    validate("monitor", &verdict);
    assert_eq!(verdict["vacuity"][0]["verdict"], "vacuous");

    let out = run(&[
        "monitor",
        &fixture("request_response.mitl"),
        &fixture("req_answered.csv"),
        "--format",
        "json",
    ]);
    assert_eq!(code(&out), 0);
    assert_eq!(json(&out)["vacuity"][0]["verdict"], "non_vacuous");

    let out = run(&[
        "monitor",
        &fixture("speed.mitl"),
        &fixture("speed_120.csv"),
        "--format",
        "json",
    ]);
    assert_eq!(code(&out), 0);
    assert_eq!(json(&out)["robustness"], 20.0);
    let text = stdout(&run(&[
        "monitor",
        &fixture("speed.mitl"),
        &fixture("speed_120.csv"),
    ]));
    assert!(text.contains("robustness: 20"));
    assert!(text.contains("status: satisfied"));

    let dir = tempfile::tempdir().unwrap();
    let slow = dir.path().join("slow.csv");
    std::fs::write(&slow, "time,v\n0,90\n30,120\n").unwrap();
    assert_eq!(
        code(&run(&[
            "monitor",
            &fixture("speed.mitl"),
            slow.to_str().unwrap()
        ])),
        1
    );

    let short = dir.path().join("short.csv");
    std::fs::write(&short, "time,v\n0,120\n20,120\n").unwrap();
    let out = run(&["monitor", &fixture("speed.mitl"), short.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("missing 10"), "{}", stderr(&out));
}

#[test]
fn falsify_exit_codes_and_dump() {
    let dir = tempfile::tempdir().unwrap();
    let dump = dir.path().join("best.csv");
    let mut args = overshoot_falsify_args();
    args.extend([
        "--dump-trace".to_string(),
        dump.to_string_lossy().into_owned(),
    ]);
    let out = run_owned(&args);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let result = json(&out);
    validate("falsify", &result);
    assert_eq!(result["status"], "falsified");
    let csv = std::fs::read_to_string(&dump).unwrap();
    assert!(csv.starts_with("time,u,x\n"));
    assert_eq!(csv.lines().count(), 402);

    let dir_true = tempfile::tempdir().unwrap();
    let spec = dir_true.path().join("true.mitl");
    std::fs::write(&spec, "true").unwrap();
    let grid = fixture("grid5.json");
    let out = run(&[
        "falsify",
        spec.to_str().unwrap(),
        "--model",
        "secondorder",
        "--grid",
        &grid,
        "--budget",
        "10",
        "--format",
        "json",
    ]);
    assert_eq!(code(&out), 3);
    let result = json(&out);
    validate("falsify", &result);
    assert_eq!(result["simulations_used"], 10);

    let out = run(&[
        "falsify",
        spec.to_str().unwrap(),
        "--model",
        "pendulum",
        "--grid",
        &grid,
    ]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("pendulum"));
    assert_eq!(
        code(&run(&[
            "falsify",
            spec.to_str().unwrap(),
            "--model",
            "secondorder",
            "--grid",
            &grid,
            "--budget",
            "0"
        ])),
        2
    );
}

#[test]
fn falsify_output_file_and_text() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("result.json");
    let mut args = overshoot_falsify_args();
    args.extend(["--output".to_string(), path.to_string_lossy().into_owned()]);
    let out = run_owned(&args);
    assert_eq!(code(&out), 0);
    assert!(out.stdout.is_empty());
    let written: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(written, json(&run_owned(&overshoot_falsify_args())));

    let text_args: Vec<String> = overshoot_falsify_args()
        .into_iter()
        .filter(|a| a != "--format" && a != "json")
        .collect();
    let text = stdout(&run_owned(&text_args));
    assert!(text.contains("status: falsified"));
    assert!(text.contains(&format!("best_robustness: {}", written["best_robustness"])));
}

#[test]
fn jobs_do_not_change_results() {
    let mut parallel = overshoot_falsify_args();
    parallel.extend(["--jobs".to_string(), "4".to_string()]);
    assert_eq!(
        run_owned(&parallel).stdout,
        run_owned(&overshoot_falsify_args()).stdout
    );
}

#[test]
fn mine_exit_codes() {
    let out = run_owned(&mining_args("6"));
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let result = json(&out);
    validate("mine", &result);
    let value = result["value_f64"].as_f64().unwrap();
    assert!(value > 0.50 && value < 0.60, "{value}");

    let out = run_owned(&mining_args("0"));
    assert_eq!(code(&out), 0);
    assert_eq!(json(&out)["value"], "1");

    let mut non_monotone = mining_args("3");
    non_monotone[3] = "H".into();
    let out = run_owned(&non_monotone);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("not monotone"));

    let mut plain_file = mining_args("3");
    plain_file[1] = fixture("overshoot.mitl");
    assert_eq!(code(&run_owned(&plain_file)), 2);
}

#[test]
fn template_catalog() {
    let out = run(&["templates", "--format", "json"]);
    assert_eq!(code(&out), 0);
    let catalog = json(&out);
    validate("templates", &catalog);
    let ids: Vec<&str> = catalog
        .as_array()
        .unwrap()
        .iter()
        .map(|t| t["id"].as_str().unwrap())
        .collect();
    assert_eq!(ids, ["settling", "overshoot"]);
    assert!(stdout(&run(&["templates"])).contains("template:settling(x,ref=1,r=0.1,ts=20,H=40)"));
}

#[test]
fn external_model_through_cli() {
    let dir = tempfile::tempdir().unwrap();
    let script = dir.path().join("model.sh");
    std::fs::write(
        &script,
        "read request\necho '{\"protocol\":1,\"times\":[0,20,40],\"signals\":{\"x\":[0,1.3,1]}}'\n",
    )
    .unwrap();
    let model = format!("external:sh {}", script.display());
    let out = run(&[
        "falsify",
        &fixture("overshoot.mitl"),
        "--model",
        &model,
        "--grid",
        &fixture("step_grid.json"),
        "--format",
        "json",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let robustness = json(&out)["best_robustness"].as_f64().unwrap();
    assert!((robustness + 0.1).abs() < 1e-12);
}
