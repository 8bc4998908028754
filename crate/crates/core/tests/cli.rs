use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_sdfe");

fn run(dir: &Path, args: &[&str]) -> Output {
    let out = Command::new(BIN).current_dir(dir).args(args).output().unwrap();
    assert!(
        out.status.success(),
        "sdfe {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

const TREES: &str = r#"[
  {"split": {"feature": 0, "threshold": 1,
    "le": {"leaf": {"accept": false}},
    "gt": {"split": {"feature": 1, "threshold": 2,
      "le": {"leaf": {"accept": true}}, "gt": {"leaf": {"accept": false}}}}}},
  {"split": {"feature": 1, "threshold": 0,
    "le": {"leaf": {"accept": false}}, "gt": {"leaf": {"accept": true}}}}
]"#;

fn oracle_decision(dir: &Path, model: &str, input: &str) -> String {
    let o = run(dir, &["oracle", "--model", model, "--input", input]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    v["decision"].as_str().unwrap().to_string()
}

#[test]
fn hbc_file_exchange_end_to_end() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path();
    std::fs::write(p.join("trees.json"), TREES).unwrap();
    std::fs::write(p.join("x.json"), "[3, 1]").unwrap();
    run(p, &["keygen", "--group", "ristretto", "--seed", "1", "--out", "keys.json"]);
    run(p, &[
        "compile-model", "--trees", "trees.json", "--mode", "binary", "--delta", "2", "--nu", "2",
        "--tau", "2", "--chi", "3", "--seed", "2", "--out", "model.json",
    ]);
    run(p, &["encode-model", "--model", "model.json", "--keys", "keys.json", "--out", "art.bin"]);
    run(p, &["eval", "--artifact", "art.bin", "--input", "x.json", "--exchange-file", "req.bin"]);
    let o = run(p, &["serve", "--model", "model.json", "--keys", "keys.json", "--exchange-file", "req.bin"]);
    let report: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(report["decision"], oracle_decision(p, "model.json", "x.json"));
    assert_eq!(report["decision"], "accept");
}

#[test]
fn malicious_tcp_end_to_end() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path();
    std::fs::write(p.join("trees.json"), TREES).unwrap();
    std::fs::write(p.join("x.json"), "[3, 1]").unwrap();
    run(p, &["keygen", "--group", "toy", "--seed", "1", "--out", "server.json"]);
    run(p, &["keygen", "--group", "toy", "--seed", "2", "--out", "client.json"]);
    run(p, &[
        "compile-model", "--trees", "trees.json", "--mode", "ternary", "--delta", "2", "--nu", "2",
        "--always-accepting", "1", "--seed", "3", "--out", "model.json",
    ]);
    run(p, &["encode-model", "--model", "model.json", "--keys", "server.json", "--width", "16", "--out", "art.bin"]);

    let port = std::net::TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let addr = format!("127.0.0.1:{port}");
    let server = Command::new(BIN)
        .current_dir(p)
        .args([
            "serve", "--model", "model.json", "--keys", "server.json", "--artifact", "art.bin",
            "--width", "16", "--sessions", "2", "--listen", &addr,
        ])
        .stdout(std::process::Stdio::piped())
        .spawn()
        .unwrap();
    let connect = |args: &[&str]| {
        for _ in 0..100 {
            let o = Command::new(BIN).current_dir(p).args(args).output().unwrap();
            if o.status.success() {
                return o;
            }
            std::thread::sleep(std::time::Duration::from_millis(50));
        }
        panic!("server never answered");
    };
    connect(&["fetch-artifact", "--connect", &addr, "--out", "fetched.bin"]);
    assert_eq!(std::fs::read(p.join("fetched.bin")).unwrap(), std::fs::read(p.join("art.bin")).unwrap());
    run(p, &[
        "eval", "--artifact", "fetched.bin", "--input", "x.json", "--connect", &addr, "--keys", "client.json",
        "--transcript", "t.jsonl",
    ]);
    let out = server.wait_with_output().unwrap();
    let lines: Vec<serde_json::Value> = stdout(&out).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[1]["decision"], oracle_decision(p, "model.json", "x.json"));
    let transcript = std::fs::read_to_string(p.join("t.jsonl")).unwrap();
    assert_eq!(transcript.lines().count(), 7);
}

#[test]
fn bench_prints_formula_table() {
    let d = tempfile::tempdir().unwrap();
    let s = stdout(&run(d.path(), &["bench"]));
    for cell in ["3.13 KB", "12.5 KB", "712.5 KB", "2.8 MB", "800 KB"] {
        assert!(s.contains(cell), "{cell} missing:\n{s}");
    }
}

#[test]
fn attack_reports_exact_tail() {
    let d = tempfile::tempdir().unwrap();
    let s = stdout(&run(d.path(), &["attack", "--trials", "1000", "--seed", "1"]));
    assert!(s.contains("4.120374e-2"), "{s}");
}

#[test]
fn oracle_metrics_over_csv() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path();
    std::fs::write(p.join("trees.json"), TREES).unwrap();
    run(p, &["compile-model", "--trees", "trees.json", "--mode", "binary", "--delta", "2", "--nu", "2", "--tau", "1", "--out", "m.json"]);
    // Accepts iff x0 > 1 and x1 <= 2, or x1 > 0.
    std::fs::write(p.join("data.csv"), "f0,f1,label\n0,0,0\n3,1,1\n0,3,1\n3,0,0\n").unwrap();
    let s = stdout(&run(p, &["oracle", "--model", "m.json", "--csv", "data.csv"]));
    assert!(s.contains("FPR      0.5000"), "{s}");
    assert!(s.contains("FNR      0.0000"), "{s}");
}

#[test]
fn bad_inputs_fail_cleanly() {
    let d = tempfile::tempdir().unwrap();
    let o = Command::new(BIN).current_dir(d.path()).args(["encode-model", "--model", "missing.json", "--keys", "k.json", "--out", "a"]).output().unwrap();
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("missing.json"));
}
