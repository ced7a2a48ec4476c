use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const BASE: [&str; 12] = [
    "--w", "35", "--lambda", "2.2", "--mean", "1.3", "--ch", "3", "--cr", "1", "--cd", "80",
];

fn bulkq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bulkq"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json_of(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}",
            String::from_utf8_lossy(&out.stdout)
        )
    })
}

fn stderr_record(out: &Output) -> Value {
    serde_json::from_slice(&out.stderr).expect("stderr carries a JSON error record")
}

fn floats(v: &Value) -> Vec<f64> {
    v.as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_f64().unwrap())
        .collect()
}

fn with(base: &[&str], extra: &[&'static str]) -> Vec<String> {
    base.iter().chain(extra).map(|s| s.to_string()).collect()
}

fn run(args: &[String]) -> Output {
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    bulkq(&refs)
}

#[test]
fn solve_matches_the_library() {
    let out = bulkq(&[
        "solve", "--v", "1", "--w", "5", "--lambda", "0.5", "--mean", "1",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let doc = json_of(&out);
    let pi1 = floats(&doc["result"]["pi1"]);
    let d = bulkq_core::PostingDistribution::exponential(1.0).unwrap();
    let p = bulkq_core::SystemParams::new(1, 5, 0.5, d).unwrap();
    let e = bulkq_core::embedded_p(&p, 1e-12).unwrap();
    let lim = bulkq_core::limiting_pi(&p, &e).unwrap();
    assert_eq!(pi1, lim.pi1);
    assert_eq!(doc["result"]["root"].as_f64().unwrap(), e.root.unwrap());
    assert_eq!(doc["result"]["model_type"], "type1");
    assert_eq!(doc["config"]["system"]["v"], 1);
    assert!(doc["result"]["diagnostics"]["tpm_stationary_gap"].is_number());
}

#[test]
fn reference_instance_solution_is_complete() {
    let out = run(&with(&["solve", "--v", "33"], &BASE));
    assert_eq!(out.status.code(), Some(0));
    let pi1 = floats(&json_of(&out)["result"]["pi1"]);
    assert_eq!(pi1.len(), 36);
    assert!((pi1.iter().sum::<f64>() - 1.0).abs() < 1e-10);
}

#[test]
fn batch_larger_than_capacity_is_a_config_error() {
    let out = bulkq(&[
        "solve", "--v", "6", "--w", "5", "--lambda", "1", "--mean", "1",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let rec = stderr_record(&out);
    assert_eq!(rec["error"]["kind"], "config");
    assert_eq!(rec["error"]["exit_code"], 2);
    assert!(rec["error"]["message"]
        .as_str()
        .unwrap()
        .contains("1 ≤ v ≤ w"));
    assert!(out.stdout.is_empty());
}

#[test]
fn negative_pi_exits_with_status_one_and_still_emits() {
    let out = run(&with(&["solve", "--v", "3"], &BASE));
    assert_eq!(out.status.code(), Some(1));
    let doc = json_of(&out);
    assert_eq!(doc["result"]["valid"], false);
    assert!(!doc["result"]["negative_entries"]
        .as_array()
        .unwrap()
        .is_empty());
}

#[test]
fn unstable_load_is_a_config_error() {
    let out = bulkq(&[
        "solve", "--v", "1", "--w", "5", "--lambda", "2", "--mean", "1",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_record(&out)["error"]["message"]
        .as_str()
        .unwrap()
        .contains("load"));
}

#[test]
fn optimize_emits_the_whole_curve() {
    let out = run(&with(&["optimize"], &BASE));
    assert_eq!(out.status.code(), Some(0));
    let doc = json_of(&out);
    let curve = doc["result"]["curve"].as_array().unwrap();
    assert_eq!(curve.len(), 35);
    assert_eq!(curve[0]["status"], "no_root");
    let v0 = doc["result"]["v0"].as_u64().unwrap() as usize;
    let best = curve[v0 - 1]["total"].as_f64().unwrap();
    assert_eq!(best, doc["result"]["phi_min"].as_f64().unwrap());
    for p in curve.iter().filter(|p| p["status"] == "ok") {
        assert!(p["total"].as_f64().unwrap() >= best);
    }
    assert_eq!(doc["config"]["search"]["v_max"], 35);
}

#[test]
fn optimize_single_candidate() {
    let out = bulkq(&[
        "optimize", "--w", "6", "--lambda", "0.2", "--mean", "1", "--ch", "1", "--vmax", "1",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json_of(&out)["result"]["v0"], 1);
}

#[test]
fn posting_cost_alone_picks_the_largest_batch() {
    let out = bulkq(&[
        "optimize", "--w", "35", "--lambda", "2.2", "--mean", "1.3", "--cd", "80",
    ]);
    assert_eq!(json_of(&out)["result"]["v0"], 35);
}

#[test]
fn optimize_with_nothing_valid_exits_one() {
    // v = 1 and v = 2 have no root here
    let out = run(&with(&["optimize", "--vmax", "2"], &BASE));
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr_record(&out)["error"]["kind"], "analytic_invalid");
}

#[test]
fn sweep_csv_layout() {
    let out = bulkq(&[
        "sweep", "--lambda", "2.2", "--mean", "1.3", "--ch", "3", "--cr", "1", "--cd", "80",
        "--vmax", "4", "--wmin", "3", "--wmax", "5", "--format", "csv",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let body: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(
        body[0],
        "v,w,holding,reserve,posting,total,valid,capability,status"
    );
    assert_eq!(body.len(), 1 + 4 * 3);
    assert!(body[1].starts_with("1,3,"));
    assert!(body[4].starts_with("4,3,") && body[4].ends_with("infeasible"));
    assert!(text.lines().any(|l| l.starts_with("# config = {")));
}

#[test]
fn csv_numbers_round_trip() {
    let args = [
        "solve", "--v", "2", "--w", "7", "--lambda", "0.9", "--mean", "1.1",
    ];
    let doc = json_of(&bulkq(&args));
    let mut csv_args = args.to_vec();
    csv_args.extend(["--format", "csv"]);
    let text = String::from_utf8(bulkq(&csv_args).stdout).unwrap();
    let body: String = text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| format!("{l}\n"))
        .collect();
    let mut rdr = csv::Reader::from_reader(body.as_bytes());
    let pi1 = floats(&doc["result"]["pi1"]);
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec.unwrap();
        assert_eq!(rec[3].parse::<f64>().unwrap().to_bits(), pi1[k].to_bits());
    }
}

#[test]
fn unknown_keys_are_named() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.json");
    std::fs::write(
        &path,
        r#"{"system": {"v": 2, "w": 5, "lambda": 1.0}, "posting": {"mean": 1.0, "rate": 3}}"#,
    )
    .unwrap();
    let out = bulkq(&["solve", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_record(&out)["error"]["message"]
        .as_str()
        .unwrap()
        .contains("`rate`"));
}

#[test]
fn flags_override_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.toml");
    std::fs::write(&path, "[system]\nv = 2\nw = 5\nlambda = 1.0\n\n[posting]\ndist = \"erlang\"\nshape = 2\nmean = 1.0\n").unwrap();
    let doc = json_of(&bulkq(&[
        "solve",
        "--config",
        path.to_str().unwrap(),
        "--w",
        "9",
    ]));
    assert_eq!(doc["config"]["system"]["w"], 9);
    assert_eq!(doc["config"]["posting"]["dist"], "erlang");
    assert_eq!(doc["result"]["pi1"].as_array().unwrap().len(), 10);
}

#[test]
fn missing_settings_are_named() {
    let out = bulkq(&["solve", "--v", "2", "--w", "5", "--mean", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_record(&out)["error"]["message"]
        .as_str()
        .unwrap()
        .contains("system.lambda"));
}

#[test]
fn documents_reproduce_themselves() {
    let dir = tempfile::tempdir().unwrap();
    let first = bulkq(&[
        "simulate",
        "--v",
        "2",
        "--w",
        "6",
        "--lambda",
        "1.1",
        "--mean",
        "1",
        "--postings",
        "20000",
        "--seed",
        "9",
    ]);
    let doc = json_of(&first);
    assert_eq!(doc["config"]["sim"]["seed"], 9);
    assert_eq!(doc["result"]["runs"][0]["seed"], 9);
    let path = dir.path().join("echo.json");
    std::fs::write(&path, doc["config"].to_string()).unwrap();
    let again = json_of(&bulkq(&["simulate", "--config", path.to_str().unwrap()]));
    assert_eq!(again, doc);
}

#[test]
fn compare_reports_both_policies() {
    let out = bulkq(&[
        "compare",
        "--v",
        "3",
        "--w",
        "10",
        "--lambda",
        "1.5",
        "--mean",
        "1",
        "--ch",
        "3",
        "--cr",
        "1",
        "--cd",
        "80",
        "--postings",
        "50000",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let doc = json_of(&out);
    let reports = doc["result"]["reports"].as_array().unwrap();
    assert_eq!(reports.len(), 2);
    assert_eq!(reports[0]["policy"], "clip");
    assert_eq!(reports[1]["policy"], "reject");
    for r in reports {
        for key in [
            "tv_time_avg",
            "tv_embedded",
            "max_abs_delta",
            "cost_rel_error",
        ] {
            assert!(r[key].as_f64().unwrap().is_finite(), "{key}");
        }
    }
    for s in doc["result"]["simulations"].as_array().unwrap() {
        assert!((floats(&s["time_avg_dist"]).iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn compare_flags_invalid_analytics() {
    let out = run(&with(
        &[
            "compare",
            "--v",
            "3",
            "--postings",
            "2000",
            "--policy",
            "clip",
        ],
        &BASE,
    ));
    assert_eq!(out.status.code(), Some(1));
    let doc = json_of(&out);
    assert_eq!(doc["result"]["analytic"]["valid"], false);
    assert_eq!(doc["result"]["reports"].as_array().unwrap().len(), 1);
}

#[test]
fn writes_to_the_requested_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.csv");
    let out = bulkq(&[
        "solve",
        "--v",
        "2",
        "--w",
        "4",
        "--lambda",
        "1",
        "--mean",
        "1",
        "--format",
        "csv",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(Path::new(&path)).unwrap();
    assert!(text.contains("k,p,pi,pi1"));
}

#[test]
fn enforce_capability_is_echoed() {
    let mut args = with(&["optimize", "--enforce-capability"], &BASE);
    args.push("--vmax".into());
    args.push("35".into());
    let doc = json_of(&run(&args));
    assert_eq!(doc["config"]["search"]["enforce_capability"], true);
}
