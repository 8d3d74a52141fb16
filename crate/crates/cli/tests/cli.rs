use std::io::Write;
use std::path::Path;
use std::process::{Command, Output, Stdio};

use serde_json::{json, Value};

fn voterlab(args: &[&str], stdin: Option<&str>, env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_voterlab"));
    cmd.args(args).env_remove("VOTERLAB_SEED").stdout(Stdio::piped()).stderr(Stdio::piped());
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.stdin(if stdin.is_some() { Stdio::piped() } else { Stdio::null() });
    let mut child = cmd.spawn().expect("spawn voterlab");
    if let Some(text) = stdin {
        child.stdin.take().unwrap().write_all(text.as_bytes()).unwrap();
    }
    child.wait_with_output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout_json(o: &Output) -> Value {
    assert_eq!(code(o), 0, "stderr: {}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).expect("stdout is JSON")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn schema() -> Value {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("schema/summary.schema.json");
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// Validator for the subset of JSON Schema the shipped schema uses.
fn validate(v: &Value, s: &Value, root: &Value, at: &str) -> Result<(), String> {
    if let Some(r) = s.get("$ref").and_then(Value::as_str) {
        let name = r.strip_prefix("#/$defs/").ok_or_else(|| format!("unsupported ref {r}"))?;
        return validate(v, &root["$defs"][name], root, at);
    }
    if let Some(alts) = s.get("anyOf").and_then(Value::as_array) {
        if !alts.iter().any(|a| validate(v, a, root, at).is_ok()) {
            return Err(format!("{at}: no anyOf branch matches"));
        }
    }
    if let Some(t) = s.get("type") {
        let types: Vec<&str> = match t {
            Value::String(x) => vec![x.as_str()],
            Value::Array(xs) => xs.iter().filter_map(Value::as_str).collect(),
            _ => vec![],
        };
        let ok = types.iter().any(|t| match *t {
            "object" => v.is_object(),
            "array" => v.is_array(),
            "string" => v.is_string(),
            "boolean" => v.is_boolean(),
            "null" => v.is_null(),
            "number" => v.is_number(),
            "integer" => v.is_u64() || v.is_i64(),
            _ => false,
        });
        if !ok {
            return Err(format!("{at}: {v} is not of type {types:?}"));
        }
    }
    if let Some(options) = s.get("enum").and_then(Value::as_array) {
        if !options.contains(v) {
            return Err(format!("{at}: {v} not in enum"));
        }
    }
    if let Some(x) = v.as_f64() {
        if s.get("minimum").and_then(Value::as_f64).is_some_and(|m| x < m) {
            return Err(format!("{at}: {x} below minimum"));
        }
        if s.get("maximum").and_then(Value::as_f64).is_some_and(|m| x > m) {
            return Err(format!("{at}: {x} above maximum"));
        }
    }
    if let Some(obj) = v.as_object() {
        for req in s.get("required").and_then(Value::as_array).into_iter().flatten() {
            let key = req.as_str().unwrap();
            if !obj.contains_key(key) {
                return Err(format!("{at}: missing required key {key}"));
            }
        }
        let props = s.get("properties").and_then(Value::as_object);
        for (key, val) in obj {
            match props.and_then(|p| p.get(key)) {
                Some(sub) => validate(val, sub, root, &format!("{at}.{key}"))?,
                None if s.get("additionalProperties") == Some(&Value::Bool(false)) => {
                    return Err(format!("{at}: unexpected key {key}"))
                }
                None => {}
            }
        }
    }
    if let (Some(items), Some(arr)) = (s.get("items"), v.as_array()) {
        for (i, x) in arr.iter().enumerate() {
            validate(x, items, root, &format!("{at}[{i}]"))?;
        }
    }
    Ok(())
}

fn assert_valid_summary(v: &Value) {
    let s = schema();
    validate(v, &s, &s, "$").unwrap_or_else(|e| panic!("schema violation: {e}\n{v:#}"));
}

#[test]
fn validator_rejects_bad_documents() {
    let s = schema();
    assert!(validate(&json!({"method": "monte-carlo"}), &s, &s, "$").is_err());
    let mut good = stdout_json(&voterlab(&["simulate", "--quiet"], Some(r#"{"graph":{"n":5},"init":{"k":2},"run":{"trials":20}}"#), &[]));
    assert!(validate(&good, &s, &s, "$").is_ok());
    good["fixation1_freq"] = json!(1.5);
    assert!(validate(&good, &s, &s, "$").is_err());
    good["fixation1_freq"] = json!(0.5);
    good["extra"] = json!(1);
    assert!(validate(&good, &s, &s, "$").is_err());
}

#[test]
fn simulate_clique_summary_matches_schema() {
    let cfg = r#"{"model":{"alpha01":0.5,"alpha10":0.5},"graph":{"kind":"clique","n":12},"init":{"k":4},"run":{"trials":400}}"#;
    let v = stdout_json(&voterlab(&["simulate", "--quiet"], Some(cfg), &[]));
    assert_valid_summary(&v);
    assert!(v["fixation1_freq"].is_number());
    assert_eq!(v["seed"], json!(42));
    assert_eq!(v["config"]["run"]["seed"], json!(42));
    assert_eq!(v["completed"].as_u64().unwrap() + v["censored"].as_u64().unwrap(), 400);
}

#[test]
fn zero_initial_ones_fixes_zero_immediately() {
    let v = stdout_json(&voterlab(
        &["simulate", "--quiet", "--set", "graph.kind=cycle", "--set", "graph.n=6", "--set", "init.k=0"],
        None,
        &[],
    ));
    assert_valid_summary(&v);
    assert_eq!(v["fixation1_freq"], json!(0.0));
    assert_eq!(v["mean_steps"], json!(0.0));
    assert_eq!(v["stderr_steps"], json!(0.0));
}

#[test]
fn sync_m2_with_bias_is_a_config_error() {
    let cfg = r#"{"model":{"schedule":"sync-m2","alpha01":0.2,"alpha10":0.6},"graph":{"n":5},"init":{"k":2}}"#;
    let o = voterlab(&["simulate"], Some(cfg), &[]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("sync-m2") && stderr(&o).contains("unbiased"), "{}", stderr(&o));
}

#[test]
fn config_errors_name_the_key() {
    let cases = [
        (r#"{"graph":{"n":5,"colour":"red"},"init":{"k":1}}"#, "colour"),
        (r#"{"graph":{"n":5},"init":{"k":1},"run":{"trials":-3}}"#, "run.trials"),
        (r#"{"graph":{"n":5},"init":{"k":1},"model":{"alpha10":1.5}}"#, "model.alpha10"),
        (r#"{"graph":{"n":5}}"#, "init"),
        (r#"{"graph":{"n":5},"init":{"bits":"0101"}}"#, "init.bits"),
        (r#"{"graph":{"kind":"star"},"init":{"k":1}}"#, "graph.n"),
        ("not json", "JSON"),
    ];
    for (cfg, key) in cases {
        let o = voterlab(&["simulate"], Some(cfg), &[]);
        assert_eq!(code(&o), 2, "{cfg}");
        assert!(stderr(&o).contains(key), "{cfg}: {}", stderr(&o));
    }
    let o = voterlab(&["simulate", "--set", "oops"], None, &[]);
    assert_eq!(code(&o), 2);
    let o = voterlab(&["simulate", "--config", "/nonexistent/config.json"], None, &[]);
    assert_eq!(code(&o), 2);
    let o = voterlab(&["frobnicate"], None, &[]);
    assert_eq!(code(&o), 2);
}

#[test]
fn runtime_failure_exits_one() {
    let o = voterlab(
        &["simulate", "--set", "graph.n=4", "--set", "init.k=1", "--set", "output.path=\"/nonexistent/dir/out.json\""],
        None,
        &[],
    );
    assert_eq!(code(&o), 1, "{}", stderr(&o));
}

#[test]
fn config_file_env_seed_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.json");
    std::fs::write(&path, r#"{"graph":{"n":6},"init":{"nodes":[1,3]},"run":{"trials":50,"seed":5}}"#).unwrap();
    let p = path.to_str().unwrap();
    let v = stdout_json(&voterlab(&["simulate", "--quiet", "--config", p], None, &[]));
    assert_eq!(v["seed"], json!(5));
    let v = stdout_json(&voterlab(&["simulate", "--quiet", "--config", p], None, &[("VOTERLAB_SEED", "99")]));
    assert_eq!(v["seed"], json!(99));
    let v = stdout_json(&voterlab(&["simulate", "--quiet", "--config", p, "--set", "run.seed=7"], None, &[("VOTERLAB_SEED", "99")]));
    assert_eq!(v["seed"], json!(7));
    let o = voterlab(&["simulate", "--config", p], None, &[("VOTERLAB_SEED", "abc")]);
    assert_eq!(code(&o), 2);
}

fn strip_timing(mut v: Value) -> Value {
    v["wallclock_seconds"] = Value::Null;
    v
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let cfg = r#"{"model":{"alpha01":0.9,"alpha10":0.4},"graph":{"kind":"cycle","n":9},"init":{"k":4},"run":{"trials":300,"seed":3}}"#;
    let one = stdout_json(&voterlab(&["simulate", "--quiet", "--threads", "1"], Some(cfg), &[]));
    let four = stdout_json(&voterlab(&["simulate", "--quiet", "--threads", "4"], Some(cfg), &[]));
    assert_eq!(strip_timing(one), strip_timing(four));
}

#[test]
fn csv_and_json_carry_identical_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let json_path = dir.path().join("s.json");
    let csv_path = dir.path().join("s.csv");
    let base = r#"{"model":{"alpha01":1.0,"alpha10":0.5},"graph":{"n":10},"init":{"k":3},"run":{"trials":500,"seed":11}}"#;
    for (path, fmt) in [(&json_path, "json"), (&csv_path, "csv")] {
        let o = voterlab(
            &[
                "simulate",
                "--quiet",
                "--set",
                &format!("output.path=\"{}\"", path.display()),
                "--set",
                &format!("output.format={fmt}"),
                "--set",
                "output.per_trial=true",
            ],
            Some(base),
            &[],
        );
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    let j: Value = serde_json::from_str(&std::fs::read_to_string(&json_path).unwrap()).unwrap();
    assert_valid_summary(&j);
    let text = std::fs::read_to_string(&csv_path).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert!(lines.next().is_none());
    let field = |name: &str| row[header.iter().position(|h| *h == name).unwrap()];
    let same = |csv_name: &str, v: &Value| {
        let parsed: f64 = field(csv_name).parse().unwrap();
        assert_eq!(parsed, v.as_f64().unwrap(), "{csv_name}");
        // shortest round-trip text is identical too
        assert_eq!(field(csv_name), format!("{}", v.as_f64().unwrap()));
    };
    same("fixation1_freq", &j["fixation1_freq"]);
    same("ci95_fixation_lo", &j["ci95_fixation"]["lo"]);
    same("ci95_fixation_hi", &j["ci95_fixation"]["hi"]);
    same("mean_steps", &j["mean_steps"]);
    same("stderr_steps", &j["stderr_steps"]);
    same("ci95_steps_lo", &j["ci95_steps"]["lo"]);
    same("ci95_steps_hi", &j["ci95_steps"]["hi"]);
    assert_eq!(field("censored"), j["censored"].to_string());
    assert_eq!(field("seed"), "11");

    let trials_csv = std::fs::read_to_string(dir.path().join("s.trials.csv")).unwrap();
    let mut tl = trials_csv.lines();
    assert_eq!(tl.next().unwrap(), "trial,outcome,steps");
    let rows: Vec<&str> = tl.collect();
    assert_eq!(rows.len(), 500);
    let fixed1 = rows.iter().filter(|r| r.split(',').nth(1) == Some("fixed1")).count();
    assert_eq!(fixed1 as f64 / 500.0, j["fixation1_freq"].as_f64().unwrap());
    let trials_json: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("s.trials.json")).unwrap()).unwrap();
    let steps_json: Vec<u64> = trials_json.as_array().unwrap().iter().map(|r| r["steps"].as_u64().unwrap()).collect();
    let steps_csv: Vec<u64> = rows.iter().map(|r| r.split(',').nth(2).unwrap().parse().unwrap()).collect();
    assert_eq!(steps_json, steps_csv);
}

#[test]
fn exact_fixation_unbiased_clique() {
    let v = stdout_json(&voterlab(&["exact", "--quantity", "fixation", "--set", "graph.n=10", "--set", "init.k=3"], None, &[]));
    assert_eq!(v["method"], json!("closed-form"));
    assert!((v["value"].as_f64().unwrap() - 0.3).abs() < 1e-15);
}

#[test]
fn exact_time_unbiased_clique_is_harmonic() {
    let v = stdout_json(&voterlab(&["exact", "--quantity", "time", "--set", "graph.n=100", "--set", "init.k=50"], None, &[]));
    assert_eq!(v["method"], json!("closed-form"));
    // (n-1)((n-k)(H_{n-1} - H_{n-k}) + k(H_{n-1} - H_{k-1})), summed directly
    let h = |m: usize| (1..=m).map(|i| 1.0 / i as f64).sum::<f64>();
    let expected = 99.0 * (50.0 * (h(99) - h(50)) + 50.0 * (h(99) - h(49)));
    assert!((v["value"].as_f64().unwrap() - expected).abs() < 1e-9 * expected);
    assert_eq!(v["cross_check"]["method"], json!("tridiagonal"));
}

#[test]
fn exact_fixation_star_hub_uses_oracle() {
    let v = stdout_json(&voterlab(
        &["exact", "--quantity", "fixation"],
        Some(r#"{"model":{"schedule":"sync-m2","alpha01":0.5,"alpha10":0.5},"graph":{"kind":"star","n":4},"init":{"nodes":[0]}}"#),
        &[],
    ));
    assert_eq!(v["method"], json!("oracle"));
    assert!((v["value"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    assert_eq!(v["cross_check"]["value"], json!(0.5));
}

#[test]
fn exact_other_quantities() {
    let v = stdout_json(&voterlab(
        &["exact", "--quantity", "drift-bound"],
        Some(r#"{"model":{"schedule":"sync-m1","alpha01":0.9,"alpha10":1.0},"graph":{"n":100},"init":{"k":10}}"#),
        &[],
    ));
    assert!((v["value"].as_f64().unwrap() - 1000.0 / 9.9).abs() < 1e-9);
    let v = stdout_json(&voterlab(&["exact", "--quantity", "walk", "--set", "graph.kind=cycle", "--set", "graph.n=6", "--set", "init.k=1"], None, &[]));
    assert_eq!(v["method"], json!("walk"));
    assert!((v["walk"]["stationary"][0].as_f64().unwrap() - 1.0 / 6.0).abs() < 1e-15);
    let v = stdout_json(&voterlab(&["exact", "--quantity", "time", "--set", "graph.n=12", "--set", "init.k=4", "--set", "model.alpha10=0.5"], None, &[]));
    assert_eq!(v["method"], json!("glaz"));
    assert!((v["value"].as_f64().unwrap() - v["cross_check"]["value"].as_f64().unwrap()).abs() < 1e-9 * v["value"].as_f64().unwrap());
    let o = voterlab(&["exact", "--quantity", "diffusion", "--set", "graph.n=50", "--set", "init.k=25", "--set", "output.format=csv"], None, &[]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "quantity,method,value,cross_check_method,cross_check_value");
    let fields: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(&fields[..2], &["diffusion", "closed-form"]);
    // n^2 h(1/2) = 2500 ln 2
    assert!((fields[2].parse::<f64>().unwrap() - 2500.0 * 2f64.ln()).abs() < 1e-9);
}

#[test]
fn exact_unsupported_combinations_exit_two() {
    let o = voterlab(
        &["exact", "--quantity", "fixation"],
        Some(r#"{"model":{"schedule":"sync-m1","alpha01":0.3,"alpha10":0.9},"graph":{"kind":"cycle","n":40},"init":{"k":5}}"#),
        &[],
    );
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    let o = voterlab(
        &["exact", "--quantity", "drift-bound"],
        Some(r#"{"model":{"schedule":"sync-m1","alpha01":0.5,"alpha10":0.5},"graph":{"n":10},"init":{"k":5}}"#),
        &[],
    );
    assert_eq!(code(&o), 2);
    let o = voterlab(&["exact", "--quantity", "diffusion", "--set", "graph.kind=cycle", "--set", "graph.n=8", "--set", "init.k=2"], None, &[]);
    assert_eq!(code(&o), 2);
}

#[test]
fn check_suites_report_and_exit() {
    let dir = tempfile::tempdir().unwrap();
    for suite in ["equivalence", "oracle-agreement", "cut-ratio"] {
        let out = dir.path().join(format!("{suite}.json"));
        let o = voterlab(&["check", suite, "--quiet", "--out", out.to_str().unwrap()], None, &[]);
        assert_eq!(code(&o), 0, "{suite}: {}", stderr(&o));
        let report: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
        assert_eq!(report["pass"], json!(true));
        assert!(!report["items"].as_array().unwrap().is_empty());
    }
    let v = stdout_json(&voterlab(&["check", "drift", "--trials", "500", "--quiet"], None, &[]));
    assert_eq!(v["pass"], json!(true));
    assert_eq!(v["items"].as_array().unwrap().len(), 3);
    assert_eq!(code(&voterlab(&["check", "drift", "--eps", "0"], None, &[])), 2);
    assert_eq!(code(&voterlab(&["check", "equivalence", "--eps", "0.1"], None, &[])), 2);
}

#[test]
fn sweep_reproduces_entropy_curve() {
    let n = 60.0;
    let o = voterlab(
        &["sweep", "--exact-only", "--param", "k=1..60", "--set", "graph.n=60", "--set", "init.k=1", "--set", "output.format=csv"],
        None,
        &[],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = |name: &str| header.iter().position(|h| *h == name).unwrap();
    let rows: Vec<Vec<String>> = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    assert_eq!(rows.len(), 59);
    for r in &rows {
        let k: f64 = r[col("k")].parse().unwrap();
        let t: f64 = r[col("exact_time")].parse().unwrap();
        let p = k / n;
        let h = -p * p.ln() - (1.0 - p) * (1.0 - p).ln();
        assert!((t - n * n * h).abs() / n <= 5.0, "k = {k}");
        assert_eq!(r[col("exact_time_method")], "closed-form");
        assert!(r[col("fixation1_freq")].is_empty());
    }
}

#[test]
fn sweep_grid_with_simulation() {
    let v = stdout_json(&voterlab(
        &["sweep", "--quiet", "--param", "alpha01=0.5,1", "--param", "n=6,8", "--set", "init.k=2", "--set", "run.trials=200", "--set", "model.alpha10=1"],
        None,
        &[],
    ));
    let rows = v.as_array().unwrap();
    assert_eq!(rows.len(), 4);
    let fix: Vec<f64> = rows.iter().map(|r| r["exact_fixation"].as_f64().unwrap()).collect();
    // fixation is increasing in alpha01 at fixed n
    assert!(fix[0] < fix[2] && fix[1] < fix[3]);
    for r in rows {
        let (lo, hi) = (r["ci95_fixation_lo"].as_f64().unwrap(), r["ci95_fixation_hi"].as_f64().unwrap());
        assert!(lo <= hi && r["censored"] == json!(0));
    }
}

#[test]
fn sweep_errors_exit_two() {
    assert_eq!(code(&voterlab(&["sweep", "--param", "k=", "--set", "graph.n=5", "--set", "init.k=1"], None, &[])), 2);
    assert_eq!(code(&voterlab(&["sweep", "--param", "seed=1,2", "--set", "graph.n=5", "--set", "init.k=1"], None, &[])), 2);
    assert_eq!(code(&voterlab(&["sweep", "--param", "alpha01=x", "--set", "graph.n=5", "--set", "init.k=1"], None, &[])), 2);
    assert_eq!(code(&voterlab(&["sweep"], None, &[])), 2);
}
