use serde_json::Value;
use std::process::{Command, Output};

fn pfrmt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pfrmt"))
        .args(args)
        .env("PFRMT_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json_out(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("json on stdout")
}

#[test]
fn verify_small_ensemble_passes() {
    let o = pfrmt(&["verify", "--n", "2", "--nu", "1", "--flavors", "0,2"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json_out(&o);
    assert_eq!(v["schema"], "pfaffian-rmt/1");
    assert_eq!(v["result"]["pass"], true);
    assert!(v["result"]["checks"].as_array().unwrap().len() >= 3);
}

#[test]
fn zero_samples_is_a_validation_error() {
    let o = pfrmt(&["partition", "--method", "mc", "--samples", "0"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(o.stdout.is_empty());
    let e: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(e["error"]["kind"], "validation");
}

#[test]
fn micro_grid_writes_csv_rows() {
    let o = pfrmt(&["micro", "--flavors", "1,1", "--nu", "0", "--grid", "0.5:5:10"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let mut r = csv::Reader::from_reader(o.stdout.as_slice());
    assert_eq!(r.headers().unwrap().iter().collect::<Vec<_>>(), ["x", "value_re", "value_im", "det_re", "det_im", "rel_diff"]);
    let rows: Vec<csv::StringRecord> = r.records().map(|x| x.unwrap()).collect();
    assert_eq!(rows.len(), 10);
    for row in rows {
        let f: Vec<f64> = row.iter().map(|s| s.parse().unwrap()).collect();
        assert!(f.iter().all(|x| x.is_finite()));
        assert!(f[5] < 1e-8, "det and Pfaffian forms disagree: {row:?}");
    }
}

#[test]
fn converge_table() {
    let o = pfrmt(&["converge", "--x-grid", "1:3:2", "--n-list", "20,40"]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    let mut lines = s.lines();
    assert_eq!(lines.next(), Some("n,x,deviation_p,deviation_phat"));
    assert_eq!(lines.count(), 4);
}

#[test]
fn partition_document_and_rerun() {
    let dir = std::env::temp_dir().join(format!("pfrmt-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("run.json");
    let o = pfrmt(&[
        "partition", "--n", "3", "--nu", "1", "--bosonic", "0.5+0.7i", "--fermionic", "0.6,-1.3+0.2i",
        "--method", "all", "--samples", "20000", "--seed", "7", "--output", path.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let first = std::fs::read_to_string(&path).unwrap();
    let v: Value = serde_json::from_str(&first).unwrap();
    assert_eq!(v["command"], "partition");
    assert_eq!(v["provenance"]["seed"], 7);
    assert_eq!(v["provenance"]["threads"], 2);
    let results = v["result"]["results"].as_array().unwrap();
    let methods: Vec<&str> = results.iter().map(|r| r["method"].as_str().unwrap()).collect();
    assert_eq!(methods, ["det", "pfaffian", "quad", "mc"]);
    let re = |i: usize| results[i]["value"]["re"].as_f64().unwrap();
    assert!((re(0) - re(1)).abs() < 1e-8 * re(1).abs());
    assert!((re(2) - re(1)).abs() < 1e-7 * re(1).abs());

    // the stored request reproduces the document exactly
    let again = pfrmt(&["--request", path.to_str().unwrap()]);
    assert_eq!(again.status.code(), Some(0));
    assert_eq!(stdout(&again), first);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn wilson_reports_checks() {
    let o = pfrmt(&["wilson", "--nu", "0", "--a-hat", "0.1", "--masses", "0.5,1.5"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json_out(&o);
    let ratio = v["result"]["checks"]["continuum_ratio"].as_f64().unwrap();
    assert!((ratio - 1.0).abs() < 0.1, "{ratio}");
}

#[test]
fn bad_inputs_exit_one() {
    for args in [
        vec!["partition", "--flavors", "1,2,3"],
        vec!["partition", "--flavors", "0,2", "--fermionic", "0.5"],
        vec!["partition", "--bosonic", "not-a-number"],
        vec!["partition", "--alpha", "-1"],
        vec!["wilson", "--a-hat", "0.1", "--masses", "1,2,3"],
        vec!["micro", "--grid", "1:2"],
        vec!["nonsense"],
        vec!["wilson", "--masses", "1,2", "--a-hat", "0.1", "--format", "csv"],
    ] {
        let o = pfrmt(&args);
        assert_eq!(o.status.code(), Some(1), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn kpoint_methods_agree() {
    let o = pfrmt(&["kpoint", "--n", "3", "--nu", "2", "--x", "0.4,1.3"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json_out(&o);
    let vals = &v["result"]["values"];
    let (d, p, q) = (vals["det"].as_f64().unwrap(), vals["pfaffian"].as_f64().unwrap(), vals["quad"].as_f64().unwrap());
    assert!((d - p).abs() < 1e-10 * d.abs() && (d - q).abs() < 1e-7 * d.abs());
}
