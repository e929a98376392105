use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(rel)
}

fn run(args: &[&dyn AsRef<std::ffi::OsStr>]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_interbound"))
        .args(args.iter().map(|a| a.as_ref()))
        .output()
        .expect("binary runs")
}

fn stdout_json(o: &Output) -> serde_json::Value {
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).expect("json on stdout")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn ex(dir: &str) -> (PathBuf, PathBuf) {
    (
        fixture(&format!("{dir}/rts.json")),
        fixture(&format!("{dir}/events.json")),
    )
}

#[test]
fn bound_exact_and_coarse() {
    let (r, e) = ex("example1");
    let q = fixture("example1/simplemax.req.json");
    let exact = stdout_json(&run(&[&"bound", &r, &e, &q]));
    assert_eq!(exact["bound"], 18);
    assert_eq!(exact["manifest"]["inputs"].as_array().unwrap().len(), 3);
    let coarse = stdout_json(&run(&[&"bound", &"--coarse", &r, &e, &q]));
    assert_eq!(coarse["bound"], 23);
}

#[test]
fn eventless_job_needs_force() {
    let (r, e) = ex("example3_eventless");
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("a");
    let strict = run(&[&"abstract", &r, &e, &"-o", &out]);
    assert_eq!(strict.status.code(), Some(1));
    assert!(stderr(&strict).contains("produces no event"));
    assert!(!out.exists());

    let forced = run(&[&"abstract", &"--force", &r, &e, &"-o", &out]);
    assert_eq!(forced.status.code(), Some(0), "{}", stderr(&forced));
    assert!(stderr(&forced).contains("warning"));
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert!(m["disclaimer"].as_str().unwrap().contains("force"));
    assert_eq!(m["inputs"][0]["sha256"].as_str().unwrap().len(), 64);
}

fn network_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.to_string_lossy().ends_with(".ta.json") || p.ends_with("intervals.json"))
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(&p).unwrap(),
            )
        })
        .collect();
    out.sort();
    out
}

#[test]
fn abstract_is_deterministic() {
    let (r, e) = ex("example3");
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(run(&[&"abstract", &r, &e, &"-o", &a]).status.success());
    assert!(run(&[&"--jobs", &"1", &"abstract", &r, &e, &"-o", &b]).status.success());
    let fa = network_files(&a);
    assert_eq!(fa.len(), 6, "{:?}", fa.iter().map(|f| &f.0).collect::<Vec<_>>());
    assert_eq!(fa, network_files(&b));
}

#[test]
fn xta_reuse_gives_identical_results() {
    let (r, e) = ex("example1");
    let q = fixture("example1/simplemax.req.json");
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(run(&[&"abstract", &r, &e, &"-o", &a]).status.success());
    let reuse = run(&[&"abstract", &r, &e, &"-o", &b, &"--xta", &a]);
    assert!(reuse.status.success(), "{}", stderr(&reuse));
    assert_eq!(network_files(&a), network_files(&b));
    let via = stdout_json(&run(&[&"bound", &r, &e, &q, &"--xta", &a]));
    assert_eq!(via["bound"], 18);

    let missing = run(&[&"bound", &r, &e, &q, &"--xta", &dir.path()]);
    assert_eq!(missing.status.code(), Some(1));
}

#[test]
fn schedulability_report() {
    let (r, _) = ex("example1");
    let o = run(&[&"schedulability", &r, &"--core", &"c2"]);
    assert!(o.status.success());
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("tau3 period 20 wcrt 18 ok"), "{text}");
    assert!(text.contains("tau4 period 40 wcrt 40 ok"), "{text}");
    assert!(!text.contains("c1"));
}

#[test]
fn intervals_file() {
    let (r, e) = ex("example2");
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("iv.json");
    let o = run(&[&"intervals", &"--verbose", &r, &e, &"-o", &out]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).contains("instance 2 {[20,23],[30,35]}"));
    let t: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(t["cores"].as_array().unwrap().len(), 2);
}

#[test]
fn oracle_agrees() {
    let (r, e) = ex("example1");
    let q = fixture("example1/simplemax.req.json");
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("events.csv");
    let v = stdout_json(&run(&[&"oracle", &r, &e, &q, &"--csv", &csv]));
    assert_eq!(v["bound"], 18);
    assert_eq!(v["horizon"], 240);
    assert_eq!(v["intervals_match_symbolic"], true);
    assert!(fs::read_to_string(&csv).unwrap().starts_with("event,time,automaton\n"));
}

#[test]
fn input_errors_exit_one() {
    let (r, e) = ex("example1");
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(&r).unwrap();
    let bad = dir.path().join("rts.json");
    fs::write(&bad, text.replacen("\"period\": 20", "\"period\": 0", 1)).unwrap();
    let o = run(&[&"validate", &bad]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("/period"), "{}", stderr(&o));

    let events = dir.path().join("events.json");
    fs::write(&events, fs::read_to_string(&e).unwrap().replace("\"s5\"", "\"s99\"")).unwrap();
    let o = run(&[&"validate", &r, &events]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("no segment s99"), "{}", stderr(&o));

    assert!(run(&[&"validate", &r, &e]).status.success());
}

#[test]
fn budget_exhaustion_exits_two() {
    let (r, e) = ex("example1");
    let q = fixture("example1/simplemax.req.json");
    let o = run(&[&"--state-budget", &"10", &"bound", &r, &e, &q]);
    assert_eq!(o.status.code(), Some(2));
}
