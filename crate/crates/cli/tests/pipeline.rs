use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_qcvv");

struct Sandbox {
    dir: tempfile::TempDir,
}

impl Sandbox {
    fn new() -> Self {
        Self {
            dir: tempfile::tempdir().unwrap(),
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn run(&self, args: &[&str]) -> Output {
        Command::new(BIN)
            .args(args)
            .current_dir(self.dir.path())
            .output()
            .unwrap()
    }

    fn ok(&self, args: &[&str]) {
        let out = self.run(args);
        assert!(
            out.status.success(),
            "qcvv {args:?} failed: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }

    fn json(&self, name: &str) -> Value {
        read_json(&self.path(name))
    }
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn n_circuits(doc: &Value) -> usize {
    doc["payload"]["circuits"].as_array().unwrap().len()
}

#[test]
fn design_sizes() {
    let s = Sandbox::new();
    s.ok(&["design", "--protocol", "state_tomo", "--out", "st.json"]);
    assert_eq!(n_circuits(&s.json("st.json")), 3);

    s.ok(&[
        "design",
        "--protocol",
        "rb",
        "--lengths",
        "1,2,4,8",
        "--k",
        "10",
        "--out",
        "rb.json",
    ]);
    let rb = s.json("rb.json");
    assert_eq!(n_circuits(&rb), 40);
    for c in rb["payload"]["circuits"].as_array().unwrap() {
        let layers = c["layers"].as_array().unwrap();
        let m: usize = c["id"].as_str().unwrap().split(':').nth(1).unwrap()[1..]
            .parse()
            .unwrap();
        assert_eq!(layers.len(), m + 1);
    }

    s.ok(&[
        "design",
        "--protocol",
        "qv",
        "--qubits",
        "3",
        "--circuits",
        "100",
        "--out",
        "qv.json",
    ]);
    let qv = s.json("qv.json");
    let blocks = qv["payload"]["qv_circuits"].as_array().unwrap();
    assert_eq!(blocks.len(), 100);
    assert!(blocks
        .iter()
        .all(|c| c["layers"].as_array().unwrap().len() == 3));
}

#[test]
fn rb_pipeline_recovers_error_rate() {
    let s = Sandbox::new();
    s.ok(&[
        "design",
        "--protocol",
        "rb",
        "--lengths",
        "1,2,4,8,16",
        "--k",
        "5",
        "--seed",
        "3",
        "--out",
        "d.json",
    ]);
    s.ok(&[
        "simulate",
        "--design",
        "d.json",
        "--noise",
        "depolarizing:0.02",
        "--exact",
        "--out",
        "c.json",
    ]);
    s.ok(&[
        "analyze",
        "--design",
        "d.json",
        "--counts",
        "c.json",
        "--protocol",
        "rb",
        "--out",
        "r.json",
    ]);
    let fit = &s.json("r.json")["payload"]["result"]["fit"];
    assert!((fit["r"].as_f64().unwrap() - 0.010).abs() < 1e-6, "{fit}");
}

#[test]
fn state_tomo_of_plus_state() {
    let s = Sandbox::new();
    s.ok(&[
        "design",
        "--protocol",
        "state_tomo",
        "--prep",
        "H:0",
        "--out",
        "d.json",
    ]);
    s.ok(&[
        "simulate", "--design", "d.json", "--exact", "--out", "c.json",
    ]);
    for method in ["linear", "mle"] {
        s.ok(&[
            "analyze", "--design", "d.json", "--counts", "c.json", "--method", method, "--target",
            "X", "--out", "r.json",
        ]);
        let r = &s.json("r.json")["payload"]["result"];
        assert!(
            r["target"]["fidelity"].as_f64().unwrap() >= 1.0 - 1e-6,
            "{method}: {r}"
        );
        assert_eq!(r["physical"], Value::Bool(true));
    }
}

#[test]
fn process_tomo_of_depolarized_hadamard() {
    let s = Sandbox::new();
    s.ok(&[
        "design",
        "--protocol",
        "process_tomo",
        "--gate",
        "H:0",
        "--out",
        "d.json",
    ]);
    s.ok(&[
        "simulate",
        "--design",
        "d.json",
        "--exact",
        "--noise",
        "depolarizing:0.1",
        "--out",
        "c.json",
    ]);
    s.ok(&[
        "analyze", "--design", "d.json", "--counts", "c.json", "--method", "linear", "--out",
        "r.json",
    ]);
    let r = &s.json("r.json")["payload"]["result"];
    // every gate in the circuit carries the noise, so only bounds are clean here
    let f = r["process_fidelity_to_ideal"].as_f64().unwrap();
    assert!(f < 0.925 + 1e-9 && f > 0.5, "{f}");
}

#[test]
fn qv_pipeline_noiseless_passes() {
    let s = Sandbox::new();
    s.ok(&[
        "design",
        "--protocol",
        "qv",
        "--qubits",
        "2",
        "--circuits",
        "100",
        "--seed",
        "9",
        "--out",
        "d.json",
    ]);
    s.ok(&[
        "simulate", "--design", "d.json", "--exact", "--out", "c.json",
    ]);
    s.ok(&[
        "analyze", "--design", "d.json", "--counts", "c.json", "--out", "r.json",
    ]);
    let r = &s.json("r.json")["payload"]["result"];
    assert_eq!(r["levels"][0]["pass"], Value::Bool(true), "{r}");
    assert_eq!(r["qv"], 4);
}

#[test]
fn identical_invocations_are_byte_identical() {
    let s = Sandbox::new();
    let mut reports = Vec::new();
    for tag in ["a", "b"] {
        let d = format!("d{tag}.json");
        let c = format!("c{tag}.json");
        let r = format!("r{tag}.json");
        s.ok(&[
            "design",
            "--protocol",
            "rb",
            "--lengths",
            "1,4,16",
            "--k",
            "4",
            "--seed",
            "5",
            "--out",
            &d,
        ]);
        s.ok(&[
            "simulate",
            "--design",
            &d,
            "--shots",
            "200",
            "--seed",
            "8",
            "--noise",
            "depolarizing:0.05",
            "--out",
            &c,
        ]);
        // file names differ between the runs, so compare results rather than whole files
        s.ok(&["analyze", "--design", &d, "--counts", &c, "--out", &r]);
        reports.push((
            std::fs::read(s.path(&d)).unwrap(),
            std::fs::read(s.path(&c)).unwrap(),
            s.json(&r)["payload"]["result"].clone(),
        ));
    }
    assert_eq!(reports[0].0, reports[1].0);
    assert_eq!(reports[0].2, reports[1].2);

    let first = s.run(&[
        "simulate", "--design", "da.json", "--shots", "50", "--seed", "1",
    ]);
    let second = s.run(&[
        "simulate", "--design", "da.json", "--shots", "50", "--seed", "1",
    ]);
    assert!(first.status.success());
    assert_eq!(first.stdout, second.stdout);
}

#[test]
fn empty_design_gives_empty_counts() {
    let s = Sandbox::new();
    let empty = r#"{"format_version":"1","kind":"design","payload":{"protocol":"state_tomo","n_qubits":1,"params":{},"circuits":[]}}"#;
    std::fs::write(s.path("d.json"), empty).unwrap();
    s.ok(&["simulate", "--design", "d.json", "--out", "c.json"]);
    assert_eq!(
        s.json("c.json")["payload"]["records"]
            .as_array()
            .unwrap()
            .len(),
        0
    );
}

#[test]
fn negative_count_names_the_circuit() {
    let s = Sandbox::new();
    s.ok(&["design", "--protocol", "state_tomo", "--out", "d.json"]);
    s.ok(&[
        "simulate", "--design", "d.json", "--shots", "10", "--out", "c.json",
    ]);
    let mut counts = s.json("c.json");
    let rec = &mut counts["payload"]["records"][1];
    let id = rec["circuit_id"].as_str().unwrap().to_string();
    rec["counts"]["0"] = Value::from(-3);
    std::fs::write(s.path("c.json"), serde_json::to_string(&counts).unwrap()).unwrap();
    let out = s.run(&["analyze", "--design", "d.json", "--counts", "c.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains(&id));
}

#[test]
fn schema_errors_point_at_the_field() {
    let s = Sandbox::new();
    std::fs::write(
        s.path("d.json"),
        "{\"format_version\":\"1\",\"kind\":\"design\",\n\"payload\":{\"protocol\":\"rb\",\"n_qubits\":\"one\"}}",
    )
    .unwrap();
    let out = s.run(&["simulate", "--design", "d.json"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(
        err.contains("payload.n_qubits") && err.contains("line 2"),
        "{err}"
    );
}

#[test]
fn misaligned_counts_are_rejected() {
    let s = Sandbox::new();
    s.ok(&[
        "design",
        "--protocol",
        "rb",
        "--lengths",
        "1,2,4",
        "--k",
        "2",
        "--seed",
        "1",
        "--out",
        "d1.json",
    ]);
    s.ok(&[
        "design",
        "--protocol",
        "rb",
        "--lengths",
        "1,2,8",
        "--k",
        "2",
        "--seed",
        "1",
        "--out",
        "d2.json",
    ]);
    s.ok(&[
        "simulate", "--design", "d2.json", "--exact", "--out", "c.json",
    ]);
    let out = s.run(&["analyze", "--design", "d1.json", "--counts", "c.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("rb:m8"));
}

#[test]
fn rb_fit_needs_three_lengths() {
    let s = Sandbox::new();
    s.ok(&[
        "design",
        "--protocol",
        "rb",
        "--lengths",
        "1,2",
        "--k",
        "3",
        "--out",
        "d.json",
    ]);
    s.ok(&[
        "simulate", "--design", "d.json", "--exact", "--out", "c.json",
    ]);
    let out = s.run(&["analyze", "--design", "d.json", "--counts", "c.json"]);
    assert_ne!(out.status.code(), Some(0));
}

#[test]
fn metrics_examples() {
    let s = Sandbox::new();
    s.ok(&[
        "gateset",
        "--gate",
        "G=I",
        "--gate",
        "X:0",
        "--out",
        "ideal.json",
    ]);
    s.ok(&[
        "gateset",
        "--gate",
        "G=I",
        "--gate",
        "X:0",
        "--out",
        "same.json",
    ]);
    s.ok(&["gateset", "--gate", "G=Z:0", "--out", "z.json"]);
    s.ok(&[
        "gateset",
        "--gate",
        "G=I",
        "--gate",
        "X:0",
        "--noise",
        "depolarizing:0.1",
        "--out",
        "dep.json",
    ]);

    s.ok(&["metrics", "ideal.json", "same.json", "--out", "m.json"]);
    let gates = s.json("m.json")["payload"]["result"]["gates"].clone();
    for g in ["G", "X:0"] {
        assert!((gates[g]["process_fidelity"].as_f64().unwrap() - 1.0).abs() < 1e-12);
        let b = &gates[g]["diamond_bounds"];
        assert!(
            b["lower"].as_f64().unwrap().abs() < 1e-9 && b["upper"].as_f64().unwrap().abs() < 1e-9,
            "{b}"
        );
    }

    s.ok(&[
        "metrics",
        "z.json",
        "ideal.json",
        "--which",
        "diamond_bounds",
        "--out",
        "m.json",
    ]);
    let b = s.json("m.json")["payload"]["result"]["gates"]["G"]["diamond_bounds"].clone();
    assert!(
        (b["lower"].as_f64().unwrap() - 1.0).abs() < 1e-9
            && (b["upper"].as_f64().unwrap() - 1.0).abs() < 1e-9
    );

    s.ok(&[
        "metrics",
        "dep.json",
        "ideal.json",
        "--which",
        "process_fidelity,avg_gate_fidelity",
        "--out",
        "m.json",
    ]);
    let gates = s.json("m.json")["payload"]["result"]["gates"].clone();
    for g in ["G", "X:0"] {
        assert!((gates[g]["process_fidelity"].as_f64().unwrap() - 0.925).abs() < 1e-9);
        assert!((gates[g]["avg_gate_fidelity"].as_f64().unwrap() - 0.95).abs() < 1e-9);
    }
}

#[test]
fn metrics_reject_kind_mismatch() {
    let s = Sandbox::new();
    s.ok(&["gateset", "--gate", "G=I", "--out", "g.json"]);
    s.ok(&[
        "design",
        "--protocol",
        "process_tomo",
        "--gate",
        "X:0",
        "--out",
        "d.json",
    ]);
    s.ok(&[
        "simulate", "--design", "d.json", "--exact", "--out", "c.json",
    ]);
    s.ok(&[
        "analyze",
        "--design",
        "d.json",
        "--counts",
        "c.json",
        "--method",
        "linear",
        "--out",
        "proc.json",
    ]);
    let out = s.run(&[
        "metrics",
        "proc.json",
        "g.json",
        "--which",
        "state_fidelity",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("kind mismatch"));
    let out = s.run(&["metrics", "d.json", "g.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn canonical_files_round_trip() {
    let s = Sandbox::new();
    s.ok(&[
        "design",
        "--protocol",
        "qv",
        "--qubits",
        "2",
        "--circuits",
        "3",
        "--out",
        "d.json",
    ]);
    s.ok(&[
        "simulate", "--design", "d.json", "--shots", "20", "--out", "c.json",
    ]);
    s.ok(&[
        "analyze", "--design", "d.json", "--counts", "c.json", "--out", "r.json",
    ]);
    for name in ["d.json", "c.json", "r.json"] {
        let text = std::fs::read_to_string(s.path(name)).unwrap();
        assert_eq!(
            qcvv_cli::artifact::canonicalize(&text).unwrap(),
            text,
            "{name}"
        );
    }
}

#[test]
fn exit_codes() {
    let s = Sandbox::new();
    assert_eq!(
        s.run(&["design", "--protocol", "nope"]).status.code(),
        Some(2)
    );
    assert_eq!(
        s.run(&["design", "--protocol", "rb", "--lengths", "4,2"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        s.run(&["simulate", "--design", "missing.json"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(s.run(&["--help"]).status.code(), Some(0));
    let out = Command::new(BIN)
        .args(["design", "--protocol", "state_tomo"])
        .env("QCVV_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = Command::new(BIN)
        .args(["design", "--protocol", "state_tomo"])
        .env("QCVV_THREADS", "2")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("\"kind\": \"design\""));
}
