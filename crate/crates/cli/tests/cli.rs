use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use proptest::prelude::*;
use tempfile::TempDir;
use tfsim_cli::circuit::{CircuitSpec, GateKind, InputKind, InputSpec, OpSpec, Params, SCHEMA};
use tfsim_cli::parse_circuit;

fn tfsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tfsim"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn tfsim_env(args: &[&str], key: &str, value: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tfsim"))
        .args(args)
        .env(key, value)
        .output()
        .expect("binary runs")
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stderr_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stderr)
        .unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stderr)))
}

const SQUEEZED_PAIR: &str = r#"{
  "schema": "tfsim/1",
  "modes": 2,
  "inputs": [{"type": "gaussian", "width": 1.4}, {"type": "gaussian", "width": 0.7}],
  "ops": [
    {"gate": "fbs", "targets": [0, 1]},
    {"gate": "frft", "targets": [1], "params": {"phi": 0.3}}
  ]
}"#;

#[test]
fn hom_reports_zero_coincidence_and_half_marginals() {
    let out = tfsim(&["hom", "--n", "1"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["coincidence"]["pattern"], serde_json::json!([1, 1]));
    assert_eq!(v["coincidence"]["probability"].as_f64().unwrap(), 0.0);
    for arm in ["marginal_a", "marginal_b"] {
        let m: Vec<f64> = v[arm]
            .as_array()
            .unwrap()
            .iter()
            .map(|x| x.as_f64().unwrap())
            .collect();
        assert!(
            (m[0] - 0.5).abs() < 1e-12 && m[1].abs() < 1e-12 && (m[2] - 0.5).abs() < 1e-12,
            "{arm}: {m:?}"
        );
    }
}

#[test]
fn vacuum_pattern_has_unit_probability() {
    let dir = TempDir::new().unwrap();
    let c = write(
        &dir,
        "vac.json",
        r#"{"modes":1,"inputs":[{"type":"gaussian","width":1.0}],"ops":[]}"#,
    );
    let out = tfsim(&["fgbs", "prob", "--circuit", s(&c), "--pattern", "0"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["probability"].as_f64().unwrap(), 1.0);
}

#[test]
fn sampling_is_byte_identical_for_a_seed() {
    let dir = TempDir::new().unwrap();
    let c = write(&dir, "c.json", SQUEEZED_PAIR);
    let a = dir.path().join("a.jsonl");
    let b = dir.path().join("b.jsonl");
    for path in [&a, &b] {
        let out = tfsim(&[
            "fgbs",
            "sample",
            "--circuit",
            s(&c),
            "--shots",
            "500",
            "--seed",
            "9",
            "--cutoff",
            "8",
            "--out",
            s(path),
        ]);
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    let first = std::fs::read(&a).unwrap();
    assert_eq!(first, std::fs::read(&b).unwrap());
    let other = tfsim(&[
        "fgbs",
        "sample",
        "--circuit",
        s(&c),
        "--shots",
        "500",
        "--seed",
        "10",
        "--cutoff",
        "8",
    ]);
    assert_ne!(first, other.stdout);

    let lines: Vec<serde_json::Value> = first
        .split(|&b| b == b'\n')
        .filter(|l| !l.is_empty())
        .map(|l| serde_json::from_slice(l).unwrap())
        .collect();
    assert_eq!(lines.len(), 500);
    assert_eq!(lines[7]["shot"], 7);
    for l in &lines {
        let total: u64 = l["pattern"]
            .as_array()
            .unwrap()
            .iter()
            .map(|x| x.as_u64().unwrap())
            .sum();
        assert_eq!(total % 2, 0);
    }
}

#[test]
fn table_is_deterministic_csv() {
    let dir = TempDir::new().unwrap();
    let c = write(&dir, "c.json", SQUEEZED_PAIR);
    let a = tfsim(&["fgbs", "table", "--circuit", s(&c), "--cutoff", "4"]);
    let b = tfsim(&["fgbs", "table", "--circuit", s(&c), "--cutoff", "4"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("pattern,probability"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 25);
    assert!(rows[0].starts_with("0 0,"));
}

#[test]
fn metrology_sweep_matches_library() {
    let out = tfsim(&["metrology", "--photons", "2..20", "--estimator", "fisher"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<(f64, f64)> = text
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            assert_eq!(f[2], "fisher");
            (f[0].parse().unwrap(), f[3].parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 10);
    let lib = tfsim::metrology::sweep(
        &(2..=20).step_by(2).collect::<Vec<_>>(),
        None,
        tfsim::metrology::Estimator::Fisher,
    )
    .unwrap();
    for ((n, d), r) in rows.iter().zip(&lib) {
        assert_eq!(*n as usize, r.photons);
        assert_eq!(*d, r.precision.delta_phi);
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = rows.iter().map(|(n, d)| (n.ln(), d.ln())).unzip();
    let mx = xs.iter().sum::<f64>() / 10.0;
    let my = ys.iter().sum::<f64>() / 10.0;
    let slope = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (x - mx) * (y - my))
        .sum::<f64>()
        / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    assert!((slope - tfsim::metrology::log_log_slope(&lib)).abs() < 1e-12);
}

#[test]
fn wigner_grid_csv() {
    let dir = TempDir::new().unwrap();
    let c = write(&dir, "c.json", SQUEEZED_PAIR);
    // Q is a density over alpha, and d^2 alpha = d omega dt / 2
    for (kind, mass) in [("wigner", 1.0), ("husimi", 2.0)] {
        let out = tfsim(&[
            "wigner",
            "--circuit",
            s(&c),
            "--mode",
            "1",
            "--grid",
            "-6:6:61,-6:6:41",
            "--kind",
            kind,
        ]);
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        let text = String::from_utf8(out.stdout).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("omega,t,value"));
        let values: Vec<f64> = lines
            .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
            .collect();
        assert_eq!(values.len(), 61 * 41);
        let integral: f64 = values.iter().sum::<f64>() * 0.2 * 0.3;
        assert!((integral - mass).abs() < 1e-3, "{kind}: {integral}");
    }
}

#[test]
fn hafnian_bench_csv() {
    let out = tfsim(&["hafnian-bench", "--sizes", "2,4,6", "--repeats", "1"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let sizes: Vec<&str> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap())
        .collect();
    assert_eq!(text.lines().next(), Some("n,seconds"));
    assert_eq!(sizes, ["2", "4", "6"]);
}

#[test]
fn unknown_gate_is_a_schema_error() {
    let dir = TempDir::new().unwrap();
    let c = write(
        &dir,
        "bad.json",
        r#"{"modes":2,"inputs":[{"type":"gaussian","width":1.0},{"type":"gaussian","width":1.0}],
"ops":[{"gate":"beamsplitter","targets":[0,1]}]}"#,
    );
    let out = tfsim(&["fgbs", "prob", "--circuit", s(&c), "--pattern", "0,0"]);
    assert_eq!(out.status.code(), Some(4));
    assert!(out.stdout.is_empty());
    let e = stderr_json(&out);
    assert_eq!(e["error"], "unknown-gate");
    assert_eq!(e["path"], "ops[0].gate");
    assert_eq!(e["line"], 2);
}

#[test]
fn missing_file_and_cost_guard_have_their_own_codes() {
    let out = tfsim(&[
        "fgbs",
        "prob",
        "--circuit",
        "/nonexistent/c.json",
        "--pattern",
        "0",
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(stderr_json(&out)["error"], "file-not-found");

    let dir = TempDir::new().unwrap();
    let c = write(&dir, "c.json", SQUEEZED_PAIR);
    let out = tfsim_env(
        &["fgbs", "table", "--circuit", s(&c), "--cutoff", "8"],
        "TFSIM_MAX_COST",
        "10",
    );
    assert_eq!(out.status.code(), Some(5));
    assert_eq!(stderr_json(&out)["error"], "cost-guard");

    let out = tfsim_env(
        &["wigner", "--circuit", s(&c), "--grid", "-1:1:100,-1:1:100"],
        "TFSIM_MAX_COST",
        "10",
    );
    assert_eq!(out.status.code(), Some(5));

    let out = tfsim(&["fgbs", "prob", "--circuit", s(&c), "--pattern", "1,2,3"]);
    assert_eq!(out.status.code(), Some(6));
}

#[test]
fn canonical_form_is_a_fixed_point() {
    let dir = TempDir::new().unwrap();
    let c = write(&dir, "c.json", SQUEEZED_PAIR);
    let first = tfsim(&["circuit", s(&c)]);
    assert!(first.status.success());
    let again = write(
        &dir,
        "canon.json",
        std::str::from_utf8(&first.stdout).unwrap(),
    );
    let second = tfsim(&["circuit", s(&again)]);
    assert_eq!(first.stdout, second.stdout);
    assert_eq!(
        parse_circuit(std::str::from_utf8(&first.stdout).unwrap()).unwrap(),
        parse_circuit(SQUEEZED_PAIR).unwrap()
    );
}

fn arb_circuit() -> impl Strategy<Value = CircuitSpec> {
    (1usize..=4).prop_flat_map(|modes| {
        let inputs = prop::collection::vec(0.1f64..5.0, modes);
        let op = (
            0usize..4,
            0..modes,
            0..modes,
            -10.0f64..10.0,
            -10.0f64..10.0,
        )
            .prop_filter_map("fbs needs two modes", move |(kind, a, b, x, y)| {
                let (gate, targets, params) = match kind {
                    0 if a != b => (GateKind::Fbs, vec![a, b], Params::default()),
                    0 => return None,
                    1 => (
                        GateKind::Frft,
                        vec![a],
                        Params {
                            phi: Some(x),
                            ..Params::default()
                        },
                    ),
                    2 => (
                        GateKind::Scale,
                        vec![a],
                        Params {
                            s: Some(x.abs() + 0.01),
                            ..Params::default()
                        },
                    ),
                    _ => (
                        GateKind::Displace,
                        vec![a],
                        Params {
                            omega0: Some(x),
                            t0: Some(y),
                            ..Params::default()
                        },
                    ),
                };
                Some(OpSpec {
                    gate,
                    targets,
                    params,
                })
            });
        (inputs, prop::collection::vec(op, 0..8)).prop_map(move |(widths, ops)| CircuitSpec {
            schema: SCHEMA.to_string(),
            modes,
            inputs: widths
                .into_iter()
                .map(|width| InputSpec {
                    kind: InputKind::Gaussian,
                    width,
                })
                .collect(),
            ops,
        })
    })
}

proptest! {
    #[test]
    fn canonical_serialization_round_trips(spec in arb_circuit()) {
        spec.validate().unwrap();
        let text = spec.to_canonical();
        let back = parse_circuit(&text).unwrap();
        prop_assert_eq!(&back, &spec);
        prop_assert_eq!(back.to_canonical(), text);
    }
}
