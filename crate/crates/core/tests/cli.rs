use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use pipkit::io::{read_array, read_graph, ARRAY_MAGIC};

fn pipkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pipkit")).args(args).env_remove("PIP_SEED").output().expect("spawn pipkit")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

struct TempDir(PathBuf);

impl TempDir {
    fn new(tag: &str) -> Self {
        let p = std::env::temp_dir().join(format!("pipkit-cli-{tag}-{}", std::process::id()));
        std::fs::create_dir_all(&p).unwrap();
        TempDir(p)
    }
    fn file(&self, name: &str) -> String {
        self.0.join(name).to_string_lossy().into_owned()
    }
}

impl Drop for TempDir {
    fn drop(&mut self) {
        let _ = std::fs::remove_dir_all(&self.0);
    }
}

#[test]
fn empty_array_has_valid_header() {
    let d = TempDir::new("empty");
    let f = d.file("e.pipa");
    assert_eq!(pipkit(&["gen-array", "--size", "0", "-o", &f]).status.code(), Some(0));
    let bytes = std::fs::read(&f).unwrap();
    assert_eq!(bytes.len(), 12);
    assert_eq!(bytes[..4], ARRAY_MAGIC);
    assert!(read_array(Path::new(&f)).unwrap().is_empty());
}

#[test]
fn seeds_reproduce_and_env_overrides_default() {
    let d = TempDir::new("seed");
    let (a, b, c) = (d.file("a"), d.file("b"), d.file("c"));
    pipkit(&["--seed", "9", "gen-array", "--size", "500", "-o", &a]);
    pipkit(&["--seed", "9", "gen-array", "--size", "500", "-o", &b]);
    let env = Command::new(env!("CARGO_BIN_EXE_pipkit"))
        .args(["gen-array", "--size", "500", "-o", &c])
        .env("PIP_SEED", "9")
        .status()
        .unwrap();
    assert!(env.success());
    let bytes = std::fs::read(&a).unwrap();
    assert_eq!(bytes, std::fs::read(&b).unwrap());
    assert_eq!(bytes, std::fs::read(&c).unwrap());
    let mut keys = read_array(Path::new(&a)).unwrap();
    keys.sort_unstable();
    keys.dedup();
    assert_eq!(keys.len(), 500);
}

#[test]
fn merge_and_shuffle_verify() {
    let d = TempDir::new("merge");
    let (a, m) = (d.file("a"), d.file("m"));
    pipkit(&["gen-array", "--size", "20001", "--kind", "sorted-pair", "-o", &a]);
    for extra in [&[][..], &["--tuned"][..]] {
        let mut args = vec!["merge", "-i", &a, "--verify", "-o", &m];
        args.extend_from_slice(extra);
        let o = pipkit(&args);
        assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
        assert!(stdout(&o).contains("verify: ok"));
    }
    let merged = read_array(Path::new(&m)).unwrap();
    assert!(merged.windows(2).all(|w| w[0] < w[1]));
    for variant in ["parallel", "buffered", "sequential"] {
        let o = pipkit(&["shuffle", "-i", &m, "--variant", variant, "--verify", "--threads", "2"]);
        assert_eq!(o.status.code(), Some(0), "{variant}: {}", stdout(&o));
    }
}

#[test]
fn graph_commands() {
    let d = TempDir::new("graph");
    let p = d.file("p.pipg");
    assert!(pipkit(&["gen-graph", "--n", "3", "--kind", "path", "-o", &p]).status.success());
    let words = read_graph(Path::new(&p)).unwrap();
    let g = pipkit::graph_oracle::CsrGraph::from_words(words).unwrap();
    assert_eq!((0..3).map(|v| g.degree(v)).collect::<Vec<_>>(), [1, 2, 1]);

    // Two components; the heavier triangle edge is the only non-forest edge.
    let t = d.file("t.txt");
    std::fs::write(&t, "1 2 1\n2 3 2\n1 3 5\n4 5 3\n").unwrap();
    let q =
        |u: &str, v: &str| stdout(&pipkit(&["graph", "query-msf", "-i", &t, "--u", u, "--v", v])).trim().to_string();
    assert_eq!(q("1", "2"), "true");
    assert_eq!(q("3", "1"), "false");
    assert_eq!(q("5", "4"), "true");
    let conn = |v: &str| stdout(&pipkit(&["graph", "query-conn", "-i", &t, "--v", v])).trim().to_string();
    assert_eq!(conn("1"), conn("3"));
    assert_ne!(conn("1"), conn("4"));
    assert_eq!(conn("4"), conn("5"));

    assert_eq!(pipkit(&["graph", "query-msf", "-i", &t, "--u", "1", "--v", "4"]).status.code(), Some(2));
    assert_eq!(pipkit(&["graph", "query-conn", "-i", &t, "--v", "0"]).status.code(), Some(2));

    let big = d.file("g.pipg");
    pipkit(&["gen-graph", "--n", "400", "--m", "1200", "--max-weight", "9", "-o", &big]);
    let v = pipkit(&["graph", "verify", "-i", &big, "--against-kruskal"]);
    assert_eq!(v.status.code(), Some(0), "{}", stdout(&v));
    let b = pipkit(&["graph", "build", "-i", &big]);
    assert!(stdout(&b).contains("\"boruvka_rounds\""));
}

#[test]
fn bench_csv() {
    let o =
        pipkit(&["bench", "--algo", "merge,shuffle-parallel", "--sizes", "5000", "--thread-counts", "1,2", "--verify"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("algo,size,block,threads,seed,us,heap_peak,scratch_peak,verified"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 4);
    for r in &rows {
        assert_eq!(r.len(), 9);
        assert!(r[5].parse::<u64>().unwrap() > 0);
        assert_eq!(r[8], "pass");
    }
    assert_eq!(pipkit(&["bench"]).status.code(), Some(2));
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(pipkit(&[]).status.code(), Some(2));
    assert_eq!(pipkit(&["merge"]).status.code(), Some(2));
    assert_eq!(pipkit(&["merge", "-i", "/nonexistent/file"]).status.code(), Some(2));
    assert_eq!(pipkit(&["--threads", "0", "gen-array", "--size", "1", "-o", "/dev/null"]).status.code(), Some(2));
}

#[test]
fn verify_all_reports_and_catches_faults() {
    let ok = pipkit(&["verify-all", "--scale", "smoke", "--only", "1,2,12"]);
    let text = stdout(&ok);
    assert_eq!(ok.status.code(), Some(0), "{text}");
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 3);

    let bad = pipkit(&["verify-all", "--scale", "smoke", "--only", "12", "--inject-fault"]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(stdout(&bad).starts_with("FAIL [12]"));
}
