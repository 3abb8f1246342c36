use std::path::PathBuf;
use std::process::{Command, Output};

fn corpus(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_appl-moments")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn analyze_prints_rdwalk_bounds() {
    let p = corpus("rdwalk.appl");
    let out = stdout(&run(&["analyze", p.to_str().unwrap(), "--moment", "2", "--eval", "d=10"]));
    assert!(out.contains("E[X^1] <= 2*d + 4  [= 24]"), "{out}");
    assert!(out.contains("E[X^2] <= 4*d^2 + 22*d + 28  [= 648]"), "{out}");
    assert!(out.contains("soundness: pass"));
}

#[test]
fn analyze_json_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let p = corpus("coupon11.appl");
    stdout(&run(&["analyze", p.to_str().unwrap(), "--moment", "4", "--json", path.to_str().unwrap()]));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["moments"][1]["upper_at_gamma0"], 201);
    assert_eq!(v["central"][0]["exact"], 32);
    assert_eq!(v["soundness"]["sound"], true);
}

#[test]
fn analyze_with_simulation() {
    let p = corpus("geo.appl");
    let out = stdout(&run(&["analyze", p.to_str().unwrap(), "--trials", "20000", "--seed", "3", "--json", "-"]));
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["simulation"]["trials"], 20000);
    assert_eq!(v["simulation"]["within_4se"], serde_json::json!([true, true]));
}

#[test]
fn export_solver_prints_lp() {
    let p = corpus("rdwalk.appl");
    let out = stdout(&run(&["analyze", p.to_str().unwrap(), "--solver", "export", "--eval", "d=10"]));
    assert!(out.contains("Minimize"));
    assert!(out.contains("Subject To"));
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rdwalk.lp");
    stdout(&run(&["export-lp", p.to_str().unwrap(), "--degree", "1", "-o", path.to_str().unwrap()]));
    assert!(std::fs::read_to_string(path).unwrap().trim_end().ends_with("End"));
}

#[test]
fn simulate_is_reproducible() {
    let p = corpus("walk21.appl");
    let args = ["simulate", p.to_str().unwrap(), "--eval", "x=2", "--trials", "5000", "--seed", "9"];
    let a = stdout(&run(&args));
    assert_eq!(a, stdout(&run(&args)));
    let v: serde_json::Value = serde_json::from_str(&a).unwrap();
    let mean = v["moments"][0]["raw"].as_f64().unwrap();
    assert!((mean - 40.0).abs() < 3.0, "{mean}");
}

#[test]
fn tail_writes_csv() {
    let p = corpus("rdwalk.appl");
    let out = stdout(&run(&["tail", p.to_str().unwrap(), "--eval", "d=20", "--from", "40", "--to", "80", "--step", "20"]));
    let mut rdr = csv::Reader::from_reader(out.as_bytes());
    let headers = rdr.headers().unwrap().clone();
    assert_eq!(headers.iter().collect::<Vec<_>>(), ["a", "markov1", "markov2", "cantelli", "chebyshev4", "min"]);
    let rows: Vec<_> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 3);
    assert_eq!(&rows[0][0], "40");
}

#[test]
fn bench_passes_on_corpus() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus");
    let out = stdout(&run(&["bench", dir.to_str().unwrap()]));
    assert!(out.contains("rdwalk"));
    assert!(!out.contains("FAIL"), "{out}");
}

#[test]
fn bench_fails_on_violated_expectation() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::copy(corpus("tick3.appl"), dir.path().join("tick3.appl")).unwrap();
    std::fs::write(dir.path().join("tick3.expect.json"), r#"{"m": 1, "upper": {"1": 2}}"#).unwrap();
    std::fs::copy(corpus("skip.appl"), dir.path().join("skip.appl")).unwrap();
    let o = run(&["bench", dir.path().to_str().unwrap()]);
    assert!(!o.status.success());
    let out = String::from_utf8_lossy(&o.stdout);
    assert!(out.contains("upper 1: 3 > 2"), "{out}");
    assert!(String::from_utf8_lossy(&o.stderr).contains("skip.appl has no sidecar"));
}

#[test]
fn bad_input_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.appl");
    std::fs::write(&path, "func main() begin tick( end").unwrap();
    let o = run(&["analyze", path.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("parse"));
    let p = corpus("rdwalk.appl");
    let o = run(&["analyze", p.to_str().unwrap(), "--eval", "nope=1"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown variable"));
}
