use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn qcbf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qcbf"))
        .args(args)
        .env_remove("QCBF_WORKERS")
        .output()
        .expect("spawn qcbf")
}

fn code_of(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn gen_code(dir: &Path, r: usize, v: usize, seed: u64) -> PathBuf {
    let path = dir.join(format!("code-{r}-{v}-{seed}.json"));
    let out = qcbf(&[
        "gen-code",
        "--r",
        &r.to_string(),
        "--v",
        &v.to_string(),
        "--seed",
        &seed.to_string(),
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code_of(&out), 0, "{}", stderr(&out));
    path
}

fn supports(path: &Path) -> (Vec<u64>, Vec<u64>) {
    let doc: Value = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    let get = |k: &str| {
        doc[k]
            .as_array()
            .unwrap()
            .iter()
            .map(|x| x.as_u64().unwrap())
            .collect()
    };
    (get("h1_support"), get("h2_support"))
}

fn join(xs: &[u64]) -> String {
    xs.iter().map(u64::to_string).collect::<Vec<_>>().join(",")
}

#[test]
fn gen_code_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let a = gen_code(dir.path(), 2003, 15, 1);
    let b = dir.path().join("again.json");
    let out = qcbf(&[
        "gen-code",
        "--r",
        "2003",
        "--v",
        "15",
        "--seed",
        "1",
        "--out",
        b.to_str().unwrap(),
    ]);
    assert_eq!(code_of(&out), 0);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let c = gen_code(dir.path(), 2003, 15, 2);
    assert_ne!(fs::read(&a).unwrap(), fs::read(&c).unwrap());
}

#[test]
fn gen_code_rejects_even_r() {
    let out = qcbf(&["gen-code", "--r", "2004", "--v", "15", "--seed", "1"]);
    assert_eq!(code_of(&out), 2);
    assert!(stderr(&out).contains("odd"), "{}", stderr(&out));
}

#[test]
fn gen_code_bike_shape() {
    let dir = TempDir::new().unwrap();
    let path = gen_code(dir.path(), 12323, 71, 3);
    let (h1, h2) = supports(&path);
    assert_eq!((h1.len(), h2.len()), (71, 71));
    assert!(h1.iter().chain(&h2).all(|&i| i < 12323));
    assert!(h1.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn decode_zero_syndrome() {
    let dir = TempDir::new().unwrap();
    let code = gen_code(dir.path(), 2003, 15, 1);
    let out = qcbf(&[
        "decode",
        "--code",
        code.to_str().unwrap(),
        "--syndrome",
        "",
        "--json",
    ]);
    assert_eq!(code_of(&out), 0, "{}", stderr(&out));
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["status"], "success");
    assert_eq!(doc["iterations"], 0);
    assert_eq!(doc["estimate"], Value::Array(vec![]));
}

#[test]
fn decode_small_error_and_human_output() {
    let dir = TempDir::new().unwrap();
    let code = gen_code(dir.path(), 2003, 15, 1);
    let out = qcbf(&[
        "decode",
        "--code",
        code.to_str().unwrap(),
        "--error",
        "5,77,2500",
    ]);
    assert_eq!(code_of(&out), 0, "{}", stderr(&out));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("success after 3 iterations"), "{text}");
    assert!(text.contains("estimate: 5,77,2500"), "{text}");
}

#[test]
fn decode_failure_exits_one() {
    let dir = TempDir::new().unwrap();
    let code = gen_code(dir.path(), 2003, 15, 1);
    let out = qcbf(&[
        "decode",
        "--code",
        code.to_str().unwrap(),
        "--error",
        "1,2,3,4,5",
        "--iter-max",
        "1",
        "--json",
    ]);
    assert_eq!(code_of(&out), 1, "{}", stderr(&out));
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["status"], "failure");
}

#[test]
fn decode_rejects_malformed_input() {
    let dir = TempDir::new().unwrap();
    let code = gen_code(dir.path(), 2003, 15, 1);
    let c = code.to_str().unwrap();
    for args in [
        vec!["decode", "--code", c, "--error", "1,x"],
        vec!["decode", "--code", c, "--error", "4006"],
        vec!["decode", "--code", c, "--error", "3,3"],
        vec!["decode", "--code", c, "--syndrome", "2003"],
        vec!["decode", "--code", c, "--syndrome", "1,2"],
        vec!["decode", "--code", c, "--error", "1", "--syndrome", "1"],
        vec!["decode", "--code", c],
        vec![
            "decode",
            "--code",
            c,
            "--error",
            "1",
            "--decoder",
            "oop-affine",
        ],
        vec!["decode", "--code", "/nonexistent/code.json", "--error", "1"],
    ] {
        let out = qcbf(&args);
        assert_ne!(code_of(&out), 0, "{args:?}");
        assert_ne!(code_of(&out), 1, "{args:?}");
    }
}

#[test]
fn decode_reads_support_files() {
    let dir = TempDir::new().unwrap();
    let code = gen_code(dir.path(), 2003, 15, 1);
    let list = dir.path().join("e.txt");
    fs::write(&list, "12\n900 3000,\n").unwrap();
    let at = format!("@{}", list.display());
    let out = qcbf(&[
        "decode",
        "--code",
        code.to_str().unwrap(),
        "--error",
        &at,
        "--json",
    ]);
    assert_eq!(code_of(&out), 0, "{}", stderr(&out));
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["estimate"], serde_json::json!([12, 900, 3000]));
}

#[test]
fn decode_other_variants() {
    let dir = TempDir::new().unwrap();
    let code = gen_code(dir.path(), 2003, 9, 1);
    let c = code.to_str().unwrap();
    for extra in [
        vec!["--decoder", "mld"],
        vec!["--decoder", "oop-fixed"],
        vec!["--decoder", "oop-fixed", "--thresholds", "6,6,5,5,5"],
        vec!["--decoder", "oop-affine", "--affine", "0.01,3.5,5"],
    ] {
        let mut args = vec![
            "decode",
            "--code",
            c,
            "--error",
            "10,400,1500,2100",
            "--json",
        ];
        args.extend(extra.iter());
        let out = qcbf(&args);
        assert_eq!(code_of(&out), 0, "{extra:?}: {}", stderr(&out));
    }
}

// Planting m_i = x^i h1 for 100 different (i, seed) pairs. BF-Max walks the
// syndrome down to a near-codeword syndrome within a couple of iterations,
// so the table hit is expected on essentially every run.
#[test]
fn planted_near_codeword_hits_table() {
    let dir = TempDir::new().unwrap();
    let code = gen_code(dir.path(), 2003, 15, 1);
    let table = dir.path().join("nc.tbl");
    let out = qcbf(&[
        "build-table",
        "--code",
        code.to_str().unwrap(),
        "--out",
        table.to_str().unwrap(),
    ]);
    assert_eq!(code_of(&out), 0, "{}", stderr(&out));
    let (h1, h2) = supports(&code);
    let mut hits = 0;
    for seed in 0..100u64 {
        let shift = (seed * 37) % 2003;
        let (block, base) = if seed % 2 == 0 { (&h1, 0) } else { (&h2, 2003) };
        let mut e: Vec<u64> = block.iter().map(|&j| base + (j + shift) % 2003).collect();
        e.sort_unstable();
        let out = qcbf(&[
            "decode",
            "--code",
            code.to_str().unwrap(),
            "--table",
            table.to_str().unwrap(),
            "--error",
            &join(&e),
            "--nc-aware",
            "--seed",
            &seed.to_string(),
            "--json",
        ]);
        let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
        if code_of(&out) == 0 && doc["nc_hit"] == true {
            hits += 1;
        }
    }
    assert!(hits >= 95, "{hits}/100 runs hit the table");
}

#[test]
fn table_for_other_code_is_rejected() {
    let dir = TempDir::new().unwrap();
    let a = gen_code(dir.path(), 101, 5, 1);
    let b = gen_code(dir.path(), 101, 5, 2);
    let table = dir.path().join("a.tbl");
    assert_eq!(
        code_of(&qcbf(&[
            "build-table",
            "--code",
            a.to_str().unwrap(),
            "--out",
            table.to_str().unwrap()
        ])),
        0
    );
    let out = qcbf(&[
        "decode",
        "--code",
        b.to_str().unwrap(),
        "--error",
        "1",
        "--nc-aware",
        "--table",
        table.to_str().unwrap(),
    ]);
    assert_eq!(code_of(&out), 2);
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

const HEADER: &str = "experiment,decoder,nc_aware,r,v,t,u,trials,failures,dfr,ci_low,ci_high,nc_hits,mean_iters,seed";

#[test]
fn fig2a_style_config_gives_four_row_groups() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "f2a.json",
        r#"{
            "experiment": "dfr_sweep",
            "code": [
                {"r": 2003, "v": 9, "key_seed": 1},
                {"r": 2003, "v": 11, "key_seed": 1},
                {"r": 2003, "v": 13, "key_seed": 1},
                {"r": 2003, "v": 15, "key_seed": 1}
            ],
            "decoders": [{"variant": "bf-max", "iter_max": "2t"}],
            "t_values": [30, 60],
            "stopping": {"min_failures": 30, "max_trials": 50},
            "master_seed": 11,
            "output": "out.csv"
        }"#,
    );
    let out = qcbf(&["dfr", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code_of(&out), 0, "{}", stderr(&out));
    let csv = dir.path().join("out.csv");
    let text = fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().next(), Some(HEADER));
    let rows = csv_rows(&csv);
    assert_eq!(rows.len(), 8);
    let mut vs: Vec<&str> = rows.iter().map(|r| r[4].as_str()).collect();
    vs.dedup();
    assert_eq!(vs, ["9", "11", "13", "15"]);
    assert!(rows.iter().all(|r| r[7] == "50"));
    // Resolved config is echoed and stored next to the output.
    assert!(stderr(&out).contains("\"iter_max\": \"2t\""));
    let sidecar: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out.csv.json")).unwrap())
            .unwrap();
    assert_eq!(sidecar["config"]["master_seed"], 11);
    assert_eq!(sidecar["codes"].as_array().unwrap().len(), 4);
}

#[test]
fn sweep_output_is_reproducible_across_workers() {
    let dir = TempDir::new().unwrap();
    let body = |out: &str| {
        format!(
            r#"{{
                "experiment": "dfr_sweep",
                "code": {{"r": 2003, "v": 15, "key_seed": 1}},
                "decoders": [{{"variant": "bf-max"}}, {{"variant": "bf-max", "nc_aware": true}}],
                "t_values": [95],
                "stopping": {{"min_failures": 3, "max_trials": 400}},
                "master_seed": 5,
                "output": "{out}"
            }}"#
        )
    };
    let c1 = write_config(dir.path(), "a.json", &body("a.csv"));
    let c2 = write_config(dir.path(), "b.json", &body("b.csv"));
    assert_eq!(
        code_of(&qcbf(&["dfr", "--config", c1.to_str().unwrap()])),
        0
    );
    let out = Command::new(env!("CARGO_BIN_EXE_qcbf"))
        .args(["dfr", "--config", c2.to_str().unwrap()])
        .env("QCBF_WORKERS", "3")
        .output()
        .unwrap();
    assert_eq!(code_of(&out), 0, "{}", stderr(&out));
    assert!(stderr(&out).contains("\"workers\": 3"));
    let a = fs::read(dir.path().join("a.csv")).unwrap();
    assert_eq!(a, fs::read(dir.path().join("b.csv")).unwrap());
    assert_eq!(
        code_of(&qcbf(&[
            "dfr",
            "--config",
            c1.to_str().unwrap(),
            "--workers",
            "2"
        ])),
        0
    );
    assert_eq!(a, fs::read(dir.path().join("a.csv")).unwrap());
}

#[test]
fn almost_nc_config_rows_per_u_and_decoder() {
    let dir = TempDir::new().unwrap();
    let code = gen_code(dir.path(), 2003, 15, 4);
    let cfg = write_config(
        dir.path(),
        "f3.json",
        &format!(
            r#"{{
                "experiment": "almost_nc_sweep",
                "code": {{"file": "{}"}},
                "decoders": [{{"variant": "bf-max"}}, {{"variant": "bf-max", "nc_aware": true}}],
                "t": 40,
                "u_values": [9, 11, 13],
                "stopping": {{"max_trials": 30}},
                "master_seed": 2
            }}"#,
            code.file_name().unwrap().to_str().unwrap()
        ),
    );
    let out = qcbf(&["almost-nc", "--config", cfg.to_str().unwrap(), "--json"]);
    assert_eq!(code_of(&out), 0, "{}", stderr(&out));
    let rows: Value = serde_json::from_slice(&out.stdout).unwrap();
    let keys: Vec<(u64, bool)> = rows
        .as_array()
        .unwrap()
        .iter()
        .map(|r| (r["u"].as_u64().unwrap(), r["nc_aware"].as_bool().unwrap()))
        .collect();
    assert_eq!(
        keys,
        [
            (9, false),
            (9, true),
            (11, false),
            (11, true),
            (13, false),
            (13, true)
        ]
    );
}

#[test]
fn table1_oop_fixed_config_is_accepted() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "t1.json",
        r#"{
            "experiment": "dfr_sweep",
            "code": {"r": 2003, "v": 9, "key_seed": 3},
            "decoders": [{"variant": "oop-fixed",
                          "thresholds": [6, 6, 6, 5, 5, 5, 5, 5, 5, 5, 5, 5, 5, 5, 5]}],
            "t_values": [40],
            "stopping": {"max_trials": 20},
            "master_seed": 1
        }"#,
    );
    let out = qcbf(&["dfr", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code_of(&out), 0, "{}", stderr(&out));
    assert!(
        stderr(&out).contains("\"iter_max\": 15"),
        "{}",
        stderr(&out)
    );
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.starts_with(HEADER));
    assert!(stdout.contains("dfr_sweep,oop-fixed,false,2003,9,40,,20,"));
}

#[test]
fn counters_dist_writes_histogram() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "f1.json",
        r#"{
            "experiment": "counter_dist",
            "code": {"r": 2003, "v": 15, "key_seed": 1},
            "t": 13, "u": 13, "samples": 20,
            "master_seed": 1,
            "output": "hist.csv"
        }"#,
    );
    let out = qcbf(&["counters-dist", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code_of(&out), 0, "{}", stderr(&out));
    let text = fs::read_to_string(dir.path().join("hist.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("value,bad_frac,susp_frac"));
    let (mut bad, mut susp) = (0.0, 0.0);
    for line in lines {
        let f: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        bad += f[1];
        susp += f[2];
    }
    assert!((bad - 1.0).abs() < 1e-9 && (susp - 1.0).abs() < 1e-9);
}

#[test]
fn config_errors_exit_two_with_location() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "bad.json",
        "{\n  \"experiment\": \"dfr_sweep\",\n  \"code\": {\"r\": 2003, \"v\": 9, \"key_seed\": 3},\n  \"t_valuez\": [1],\n  \"master_seed\": 1\n}\n",
    );
    let out = qcbf(&["dfr", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code_of(&out), 2);
    assert!(stderr(&out).contains("line 4"), "{}", stderr(&out));

    let hist = write_config(
        dir.path(),
        "hist.json",
        r#"{"experiment": "counter_dist", "code": {"r": 101, "v": 5, "key_seed": 1}, "t": 3, "u": 3, "master_seed": 1}"#,
    );
    let out = qcbf(&["dfr", "--config", hist.to_str().unwrap()]);
    assert_eq!(code_of(&out), 2);
    assert!(stderr(&out).contains("counter_dist"), "{}", stderr(&out));
}
