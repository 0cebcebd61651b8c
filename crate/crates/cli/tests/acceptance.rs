//! Acceptance battery: one PASS/FAIL line per criterion, all criteria in a
//! single test so the timing limits are measured without interference.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use fqdist::harness::{run_criterion, write_suite, CriterionOutcome, SuiteOutcome};

struct Line {
    id: u32,
    name: String,
    passed: bool,
    note: String,
}

fn library_criterion(id: u32, limit: Option<Duration>) -> (Line, CriterionOutcome) {
    let outcome = run_criterion(id, 7).expect("criterion runs");
    let mut passed = outcome.passed;
    let mut note = format!("{}/{} ok, {:.3}s; {}", outcome.instances - outcome.failures, outcome.instances, outcome.elapsed.as_secs_f64(), outcome.detail);
    if let Some(limit) = limit {
        if outcome.elapsed >= limit {
            passed = false;
            note.push_str(&format!(" [limit {}s exceeded]", limit.as_secs_f64()));
        }
    }
    for row in outcome.rows.iter().filter(|r| !r.passed()).take(3) {
        note.push_str(&format!(" | failed {} flags={} err={:?}", row.cell_id, row.flags, row.error));
    }
    (Line { id, name: outcome.name.to_string(), passed, note }, outcome)
}

fn run_cli_suite(out: &Path) -> (bool, Duration) {
    let started = Instant::now();
    let status = Command::new(env!("CARGO_BIN_EXE_fqdist"))
        .args(["verify", "--suite", "paper", "--seed", "7", "--out"])
        .arg(out)
        .output()
        .expect("binary runs");
    (status.status.code() == Some(0), started.elapsed())
}

#[test]
fn acceptance_criteria() {
    let mut lines = Vec::new();
    let limits: [(u32, Option<u64>); 10] = [(1, Some(5)), (2, Some(1)), (3, None), (4, Some(60)), (5, None), (6, None), (7, None), (8, None), (9, Some(10)), (10, None)];
    for (id, limit) in limits {
        let (mut line, outcome) = library_criterion(id, limit.map(Duration::from_secs));
        if id == 5 {
            // The κ_emp distribution lands in kappa.csv.
            let dir = tempfile::tempdir().unwrap();
            write_suite(dir.path(), &SuiteOutcome { seed: 7, criteria: vec![outcome.clone()] }).unwrap();
            let kappa = std::fs::read_to_string(dir.path().join("kappa.csv")).unwrap();
            let rows = kappa.lines().count().saturating_sub(1);
            line.note.push_str(&format!("; kappa.csv rows = {rows}"));
            line.passed &= rows == outcome.kappa.len() && rows == outcome.instances;
        }
        lines.push(line);
    }

    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let (ok_a, t_a) = run_cli_suite(&a);
    let (ok_b, t_b) = run_cli_suite(&b);
    let files = ["suite.csv", "criteria.csv", "kappa.csv"];
    let identical = files.iter().all(|f| std::fs::read(a.join(f)).ok().is_some_and(|x| Some(x) == std::fs::read(b.join(f)).ok()));
    let limit = Duration::from_secs(300);
    lines.push(Line {
        id: 11,
        name: "determinism".into(),
        passed: ok_a && ok_b && identical && t_a < limit && t_b < limit,
        note: format!("exit 0: {}/{}, byte-identical CSVs: {identical}, runs {:.1}s and {:.1}s (limit 300s)", ok_a, ok_b, t_a.as_secs_f64(), t_b.as_secs_f64()),
    });

    println!();
    for l in &lines {
        println!("[{}] criterion {:>2} {:<24} {}", if l.passed { "PASS" } else { "FAIL" }, l.id, l.name, l.note);
    }
    let failed: Vec<u32> = lines.iter().filter(|l| !l.passed).map(|l| l.id).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
