//! The binary against the library: same inputs, same answers.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use fqdist::harness::{load_pointset, run_sweep, search_extremal, ExperimentConfig};
use fqdist::spectra::SpectrumMeta;
use fqdist::{distance_set, field_of_order, generate, spectrum, theorem_check_distpinned, Engine, FieldElement, Generator, Metric, PinSpec};

fn fqdist(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fqdist")).args(args).current_dir(cwd).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn field_info_f9() {
    let dir = tempfile::tempdir().unwrap();
    let o = fqdist(&["field-info", "--p", "3", "--k", "2"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("q=9\n"));
    assert!(out.contains("modulus=x^2 + 1\n"));
    let j: serde_json::Value = serde_json::from_str(&stdout(&fqdist(&["--json", "field-info", "--q", "9"], dir.path()))).unwrap();
    assert_eq!(j["modulus"], serde_json::json!([1, 0, 1]));
}

#[test]
fn isotropic_line_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(fqdist(&["gen", "--kind", "line", "--q", "5", "--out", "z.fqset"], dir.path()).status.code(), Some(0));
    let z = load_pointset(dir.path().join("z.fqset")).unwrap();
    let f = field_of_order(5).unwrap();
    assert_eq!(z, generate(&f, 2, &Generator::IsotropicLine, 0).unwrap());
    assert_eq!(stdout(&fqdist(&["delta", "--in", "z.fqset"], dir.path())), "support_size=1 support=[0]\n");
}

#[test]
fn full_space_delta() {
    let dir = tempfile::tempdir().unwrap();
    let o = fqdist(&["delta", "--gen", "full", "--q", "7", "--d", "2"], dir.path());
    assert!(stdout(&o).starts_with("support_size=7 "));
    let conv = fqdist(&["delta", "--gen", "full", "--q", "7", "--d", "2", "--engine", "conv"], dir.path());
    assert_eq!(stdout(&o), stdout(&conv));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(fqdist(&["no-such-command"], dir.path()).status.code(), Some(64));
    assert_eq!(fqdist(&["delta"], dir.path()).status.code(), Some(64));
    assert_eq!(fqdist(&["gen", "--kind", "random", "--q", "5", "--out", "x.fqset"], dir.path()).status.code(), Some(64));
    assert_eq!(fqdist(&["--help"], dir.path()).status.code(), Some(0));
    assert_eq!(fqdist(&["--version"], dir.path()).status.code(), Some(0));
    let missing = fqdist(&["delta", "--in", "missing.fqset"], dir.path());
    assert_eq!(missing.status.code(), Some(1));
    assert!(!missing.stderr.is_empty());
    assert_eq!(fqdist(&["field-info", "--q", "6"], dir.path()).status.code(), Some(1));
    fqdist(&["gen", "--kind", "full", "--q", "5", "--out", "f.fqset"], dir.path());
    let zero_pin = fqdist(&["verify", "--check", "dot", "--in", "f.fqset", "--pin", "2,0"], dir.path());
    assert_eq!(zero_pin.status.code(), Some(1));
}

#[test]
fn verify_matches_library() {
    let dir = tempfile::tempdir().unwrap();
    fqdist(&["gen", "--kind", "random", "--q", "13", "--n", "60", "--seed", "3", "--out", "e.fqset"], dir.path());
    let o = fqdist(&["--json", "verify", "--check", "distpinned", "--in", "e.fqset", "--pin", "2,3"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let cli: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let e = load_pointset(dir.path().join("e.fqset")).unwrap();
    let lib = theorem_check_distpinned(&e, PinSpec::new(2, FieldElement(3))).unwrap();
    assert_eq!(cli, serde_json::to_value(&lib).unwrap());
    let text = stdout(&fqdist(&["verify", "--check", "distpinned", "--in", "e.fqset", "--pin", "2,3"], dir.path()));
    assert!(text.contains("guarantee_derived: "));
    assert!(text.ends_with("passed: true\n"));
}

#[test]
fn spectrum_matches_library() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["spectrum", "--gen", "random", "--q", "9", "--d", "2", "--n", "30", "--seed", "5", "--metric", "dot"];
    let o = fqdist(&args, dir.path());
    let f = field_of_order(9).unwrap();
    let e = generate(&f, 2, &Generator::Random { n: 30 }, 5).unwrap();
    let s = spectrum(&e, &e, Metric::Dot, Engine::Direct).unwrap();
    let mut want = Vec::new();
    let meta = SpectrumMeta { d: 2, f_size: 30, e_size: 30, metric: Metric::Dot, engine: Engine::Direct, seed: Some(5) };
    s.write_csv(&mut want, &meta).unwrap();
    assert_eq!(o.stdout, want);
}

#[test]
fn seed_determines_output() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["a.fqset", "b.fqset"] {
        fqdist(&["gen", "--kind", "product", "--q", "11", "--d", "3", "--sizes", "3,4,5", "--seed", "9", "--out", name], dir.path());
    }
    fqdist(&["gen", "--kind", "product", "--q", "11", "--d", "3", "--sizes", "3,4,5", "--seed", "10", "--out", "c.fqset"], dir.path());
    let read = |n: &str| fs::read(dir.path().join(n)).unwrap();
    assert_eq!(read("a.fqset"), read("b.fqset"));
    assert_ne!(read("a.fqset"), read("c.fqset"));
    assert_eq!(load_pointset(dir.path().join("a.fqset")).unwrap().len(), 60);
}

#[test]
fn fmt_convert_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    fqdist(&["gen", "--kind", "sphere", "--q", "9", "--d", "3", "--t", "4", "--out", "s.fqset"], dir.path());
    assert_eq!(fqdist(&["fmt-convert", "--in", "s.fqset", "--out", "s.jsonl"], dir.path()).status.code(), Some(0));
    assert_eq!(fqdist(&["fmt-convert", "--in", "s.jsonl", "--out", "t.fqset"], dir.path()).status.code(), Some(0));
    assert_eq!(fs::read(dir.path().join("s.fqset")).unwrap(), fs::read(dir.path().join("t.fqset")).unwrap());
    let first = fs::read_to_string(dir.path().join("s.jsonl")).unwrap();
    assert!(first.starts_with("{\"format\":\"fqset\""));
    // Commands accept the JSON-lines form directly.
    let a = stdout(&fqdist(&["delta", "--in", "s.jsonl"], dir.path()));
    assert_eq!(a, stdout(&fqdist(&["delta", "--in", "s.fqset"], dir.path())));
}

#[test]
fn sweep_matches_library() {
    let dir = tempfile::tempdir().unwrap();
    let config = r#"
fields = [[5, 1], [7, 1]]
dims = [2]
family = "random"
sizes = [10]
alphas = [1.5]
checks = ["cs_chain", "bound", "distpinned", "dot"]
seeds = { count = 2, base = 3 }
"#;
    fs::write(dir.path().join("c.toml"), config).unwrap();
    let o = fqdist(&["sweep", "--config", "c.toml", "--out", "r.csv", "--jsonl", "r.jsonl"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let cfg = ExperimentConfig::from_toml_str(config).unwrap();
    let lib_out = dir.path().join("lib.csv");
    run_sweep(&cfg, &lib_out, None).unwrap();
    let cli_csv = fs::read(dir.path().join("r.csv")).unwrap();
    assert_eq!(cli_csv, fs::read(&lib_out).unwrap());
    assert_eq!(fs::read_to_string(dir.path().join("r.jsonl")).unwrap().lines().count(), 32);

    // Re-running resumes: nothing new is appended.
    let again = fqdist(&["sweep", "--config", "c.toml", "--out", "r.csv"], dir.path());
    assert!(stdout(&again).contains("cells_resumed=8 rows_written=0"));
    assert_eq!(fs::read(dir.path().join("r.csv")).unwrap(), cli_csv);

    let threaded = Command::new(env!("CARGO_BIN_EXE_fqdist"))
        .args(["sweep", "--config", "c.toml", "--out", "one.csv"])
        .current_dir(dir.path())
        .env("FQDIST_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(threaded.status.code(), Some(0));
    assert_eq!(fs::read(dir.path().join("one.csv")).unwrap(), cli_csv);
}

#[test]
fn sweep_cap_is_operational_error() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.toml"), "fields = [[3, 1]]\ndims = [2]\nfamily = \"random\"\nsizes = [20]\nchecks = [\"cs_chain\"]\n").unwrap();
    let o = fqdist(&["sweep", "--config", "c.toml", "--out", "r.csv"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("p3-k1-d2-n20-s0"));
}

#[test]
fn search_matches_library() {
    let dir = tempfile::tempdir().unwrap();
    let o = fqdist(&["--json", "search", "--q", "13", "--d", "2", "--target", "16", "--steps", "600", "--seed", "4", "--out", "best.fqset", "--trail", "t.jsonl"], dir.path());
    let cli: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let f = field_of_order(13).unwrap();
    let lib = search_extremal(&f, 2, 16, 600, 4).unwrap();
    assert_eq!(cli["delta_size"], lib.delta_size);
    assert_eq!(cli["initial_delta_size"], lib.initial_delta_size);
    let best = load_pointset(dir.path().join("best.fqset")).unwrap();
    assert_eq!(best, lib.set(&f).unwrap());
    assert_eq!(distance_set(&best, Engine::Direct).unwrap().len(), lib.delta_size);
    assert_eq!(fs::read_to_string(dir.path().join("t.jsonl")).unwrap().lines().count(), lib.trail.len());
    let bad = fqdist(&["search", "--q", "13", "--d", "2", "--target", "17"], dir.path());
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn pins_lists_projections() {
    let dir = tempfile::tempdir().unwrap();
    let o = fqdist(&["pins", "--gen", "product", "--q", "7", "--sizes", "2,3"], dir.path());
    let lines: Vec<String> = stdout(&o).lines().map(String::from).collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("j=1 projection_size=3 valid_z=["));
    assert!(lines[1].starts_with("j=2 projection_size=2 valid_z=["));
}
