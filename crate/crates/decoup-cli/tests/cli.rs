use serde_json::Value;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::Instant;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_decoup"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("decoup-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str], out: &Path) -> Output {
    bin().args(args).arg("--out").arg(out).output().unwrap()
}

fn lines(path: &Path) -> Vec<Value> {
    std::fs::read_to_string(path).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

#[test]
fn oracle_verify_small_sizes_pass_quickly() {
    let out = scratch("oracle");
    let t0 = Instant::now();
    let o = run(&["oracle-verify", "--config", configs_dir().join("oracle-verify.json").to_str().unwrap()], &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(t0.elapsed().as_secs_f64() < 10.0);
    let recs = lines(&out.join("oracle-verify.jsonl"));
    assert_eq!(recs[0]["record"], "header");
    assert_eq!(recs[0]["seeds"].as_array().unwrap().len(), 20);
    let rows: Vec<&Value> = recs.iter().filter(|r| r["record"] == "row").collect();
    assert_eq!(rows.len(), 4 * 21);
    let two = rows.iter().find(|r| r["n"] == 2 && r["source"] == "all-ones").unwrap();
    assert_eq!(two["integer_count"], 20);
    assert_eq!(two["oracle"], 20.0);
    assert!(rows.iter().all(|r| r["rel_gap"].as_f64().unwrap() <= 1e-8));
    assert_eq!(recs.last().unwrap()["all_pass"], true);
}

#[test]
fn strichartz_growth_table_is_monotone() {
    let out = scratch("growth");
    let o = run(&["strichartz-growth", "--n", "16,32,64,128,256,512,1024", "--plot"], &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let recs = lines(&out.join("strichartz-growth.jsonl"));
    let d: Vec<f64> = recs.iter().filter(|r| r["record"] == "row").map(|r| r["ratio"].as_f64().unwrap()).collect();
    assert_eq!(d.len(), 7);
    assert!(d.windows(2).all(|w| w[1] >= w[0]), "{d:?}");
    let summary = recs.last().unwrap();
    let fit = &summary["fits"]["all-ones"];
    assert!(fit["power_exponent"].as_f64().unwrap() < 0.1);
    assert_eq!(fit["polylog_better"], true);
    let csv = std::fs::read_to_string(out.join("strichartz-growth.csv")).unwrap();
    let header = csv.lines().next().unwrap();
    assert!(["n", "source", "method", "ratio", "polylog_bound", "pass"].iter().all(|c| header.split(',').any(|h| h == *c)));
    assert_eq!(csv.lines().count(), 8);
    assert!(out.join("strichartz-growth.svg").exists());
}

#[test]
fn empty_sweep_is_a_config_error() {
    let dir = scratch("empty");
    let cfg = dir.join("c.json");
    std::fs::write(&cfg, r#"{"n": []}"#).unwrap();
    let o = run(&["oracle-verify", "--config", cfg.to_str().unwrap()], &dir.join("out"));
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("empty"));
    std::fs::write(&cfg, r#"{"r": []}"#).unwrap();
    let o = run(&["refined-lab", "--config", cfg.to_str().unwrap()], &dir.join("out"));
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["oracle-verify", "--no-all-ones"], &dir.join("out"));
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn invalid_configs_are_rejected() {
    let dir = scratch("invalid");
    let cfg = dir.join("c.json");
    std::fs::write(&cfg, r#"{"n": [4], "bogus": 1}"#).unwrap();
    assert_eq!(run(&["oracle-verify", "--config", cfg.to_str().unwrap()], &dir).status.code(), Some(2));
    std::fs::write(&cfg, r#"{"experiment": "refined-lab"}"#).unwrap();
    assert_eq!(run(&["oracle-verify", "--config", cfg.to_str().unwrap()], &dir).status.code(), Some(2));
    let o = run(&["oracle-verify", "--n", "128"], &dir);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("infeasible"));
    assert_eq!(run(&["refined-lab", "--example", "random"], &dir).status.code(), Some(2));
    assert_eq!(run(&["oracle-verify", "--p", "5"], &dir).status.code(), Some(2));
}

#[test]
fn flags_override_config_keys() {
    let dir = scratch("override");
    let cfg = dir.join("c.json");
    std::fs::write(&cfg, r#"{"n": [2, 4, 8], "seeds": [1]}"#).unwrap();
    let o = run(&["oracle-verify", "--config", cfg.to_str().unwrap(), "--n", "4", "--seed", "7,8"], &dir);
    assert!(o.status.success());
    let recs = lines(&dir.join("oracle-verify.jsonl"));
    let sources: Vec<&str> = recs.iter().filter(|r| r["record"] == "row").map(|r| r["source"].as_str().unwrap()).collect();
    assert_eq!(sources, ["all-ones", "seed-7", "seed-8"]);
    assert_eq!(recs[0]["config"]["n"], serde_json::json!([4]));
}

#[test]
fn reports_are_byte_reproducible() {
    let dir = scratch("repro");
    let args = ["refined-lab", "--example", "random", "--seed", "3,9", "--r", "64,256", "--jobs", "2"];
    assert!(run(&args, &dir.join("a")).status.success());
    assert!(run(&args, &dir.join("b")).status.success());
    for f in ["refined-lab.jsonl", "refined-lab.csv"] {
        let a = std::fs::read(dir.join("a").join(f)).unwrap();
        let b = std::fs::read(dir.join("b").join(f)).unwrap();
        assert_eq!(a, b, "{f}");
    }
    let rows: Vec<Value> = lines(&dir.join("a/refined-lab.jsonl")).into_iter().filter(|r| r["record"] == "row").collect();
    let order: Vec<(u64, u64)> = rows.iter().map(|r| (r["r"].as_u64().unwrap(), r["seed"].as_u64().unwrap())).collect();
    assert_eq!(order, [(64, 3), (64, 9), (256, 3), (256, 9)]);
    assert!(rows.iter().all(|r| r["chain_ok"] == true && r["decoupling_ratio"].as_f64().unwrap() <= 8.0));
}

#[test]
fn plots_regenerate_from_csv() {
    let out = scratch("plot");
    assert!(run(&["refined-lab", "--config", configs_dir().join("refined-bush.json").to_str().unwrap()], &out).status.success());
    let svg = std::fs::read_to_string(out.join("refined-lab.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("polyline"));
    let again = out.join("again.svg");
    let o = bin()
        .args(["plot", "--x", "r", "--y", "ratio", "--group", "example", "--log-x", "--log-y", "--title", "refined-lab"])
        .arg("--csv")
        .arg(out.join("refined-lab.csv"))
        .arg("--out")
        .arg(&again)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(std::fs::read_to_string(again).unwrap(), svg);
    let summary = lines(&out.join("refined-lab.jsonl")).pop().unwrap();
    assert!(summary["fitted_exponent"].as_f64().unwrap().abs() <= 0.1);
}

#[test]
fn remaining_experiments_pass() {
    let dir = scratch("rest");
    for name in ["highlow-pipeline.json", "wavepacket-exact.json", "refined-random.json", "strichartz-growth.json"] {
        let cfg = configs_dir().join(name);
        let kind = serde_json::from_str::<Value>(&std::fs::read_to_string(&cfg).unwrap()).unwrap()["experiment"]
            .as_str()
            .unwrap()
            .to_string();
        let o = run(&[kind.as_str(), "--config", cfg.to_str().unwrap()], &dir.join(name));
        assert!(o.status.success(), "{name}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let o = run(&["wavepacket-checks", "--r", "64", "--seed", "1,2"], &dir.join("real"));
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = run(&["highlow-pipeline", "--n", "512"], &dir.join("big"));
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn exit_code_follows_summary() {
    let dir = scratch("exit");
    for (i, args) in [
        vec!["wavepacket-checks", "--r", "16", "--seed", "0,1,2,3"],
        vec!["highlow-pipeline", "--n", "16", "--c", "0.5", "--seed", "4"],
        vec!["refined-lab", "--d", "2", "--r", "16", "--example", "bush"],
    ]
    .into_iter()
    .enumerate()
    {
        let out = dir.join(i.to_string());
        let o = run(&args, &out);
        let kind = args[0];
        let recs = lines(&out.join(format!("{kind}.jsonl")));
        let summary = recs.last().unwrap();
        assert_eq!(summary["record"], "summary");
        let all_pass = summary["all_pass"].as_bool().unwrap();
        let rows_pass = recs.iter().filter(|r| r["record"] == "row").all(|r| r["pass"] == true);
        assert_eq!(all_pass, rows_pass && summary["failed_rows"] == 0);
        assert_eq!(o.status.code(), Some(if all_pass { 0 } else { 1 }), "{args:?}");
    }
}
