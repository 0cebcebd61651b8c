use std::collections::HashSet;
use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;

use super::config::{ExperimentConfig, Family, PinPolicy, SweepCheck};
use super::row::{Provenance, ResultRow, RowStatus};
use super::HarnessError;
use crate::analysis::{
    best_slice, check_ir_threshold, check_sumproduct, cs_chain_with_engine, second_moment_bound, second_moment_identity, theorem_check_distpinned,
    theorem_check_dot, AnalysisError, DiagnosticsReport,
};
use crate::field::make_field;
use crate::rng::derive_seed;
use crate::space::{generate, pin_slice, projection_size, valid_pins, Generator, PinSpec, PointSet, SpaceError};
use crate::spectra::{Engine, Metric, SpectrumError};

/// One work item: a field, dimension, target size and seed index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cell {
    pub p: u32,
    pub k: u32,
    pub d: usize,
    pub size: Option<u64>,
    pub seed_index: u32,
    pub id: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SweepSummary {
    pub cells_total: usize,
    pub cells_resumed: usize,
    pub rows_written: usize,
    pub rows_failed: usize,
}

/// Cells in output order: fields, then dimensions, then sizes, then seeds.
pub fn plan(config: &ExperimentConfig) -> Result<Vec<Cell>, HarnessError> {
    config.validate()?;
    let mut cells = Vec::new();
    for &(p, k) in &config.fields {
        let q = make_field(p as u64, k)?.q();
        for &d in &config.dims {
            let sizes: Vec<Option<u64>> = if config.family.uses_size() { config.sizes_for(q, d).into_iter().map(Some).collect() } else { vec![None] };
            for size in sizes {
                for seed_index in 0..config.seeds.count {
                    let n = size.map_or("all".to_string(), |n| n.to_string());
                    let id = format!("p{p}-k{k}-d{d}-n{n}-s{seed_index}");
                    cells.push(Cell { p, k, d, size, seed_index, id });
                }
            }
        }
    }
    Ok(cells)
}

fn cap(cell: &Cell, reason: impl ToString) -> HarnessError {
    HarnessError::CapExceeded { cell: cell.id.clone(), reason: reason.to_string() }
}

fn build_set(config: &ExperimentConfig, cell: &Cell, stream: u64) -> Result<Result<PointSet, String>, HarnessError> {
    let field = make_field(cell.p as u64, cell.k)?;
    let root = |n: u64| ((n as f64).powf(1.0 / cell.d as f64).round() as u32).clamp(1, field.q());
    let generator = match config.family {
        Family::Random => Generator::Random { n: cell.size.expect("sized family") },
        Family::Product => Generator::RandomProduct { sizes: vec![root(cell.size.expect("sized family")) as usize; cell.d] },
        Family::FullSpace => Generator::FullSpace,
        Family::IsotropicLine => Generator::IsotropicLine,
        Family::IntervalGrid => Generator::IntervalGrid { m: root(cell.size.expect("sized family")) },
    };
    match generate(&field, cell.d, &generator, stream) {
        Ok(set) => Ok(Ok(set)),
        Err(e @ (SpaceError::SizeTooLarge { .. } | SpaceError::SpaceTooLarge { .. })) => Err(cap(cell, e)),
        Err(e) => Ok(Err(e.to_string())),
    }
}

/// The pin with the largest slice (smallest `j`, then smallest valid `z`),
/// restricted to nonzero `z` when asked.
fn best_pin(e: &PointSet, nonzero: bool) -> Result<Option<PinSpec>, SpaceError> {
    let mut best: Option<(PinSpec, usize)> = None;
    for j in 1..=e.dim() {
        let Some(z) = valid_pins(e, j)?.into_iter().find(|z| !nonzero || !z.is_zero()) else { continue };
        let size = if nonzero { pin_slice(e, PinSpec::new(j, z))?.len() } else { projection_size(e, j)? };
        if best.is_none_or(|(_, s)| size > s) {
            best = Some((PinSpec::new(j, z), size));
        }
    }
    Ok(best.map(|(pin, _)| pin))
}

fn pins_for(config: &ExperimentConfig, e: &PointSet, check: SweepCheck) -> Result<Vec<PinSpec>, SpaceError> {
    Ok(match config.pins {
        PinPolicy::All => (1..=e.dim()).flat_map(|j| e.field().elements().map(move |z| PinSpec::new(j, z))).collect(),
        PinPolicy::Best => best_pin(e, check == SweepCheck::Dot || (config.metric == Metric::Dot && check != SweepCheck::Distpinned))?.into_iter().collect(),
        PinPolicy::Fixed(pin) => vec![pin],
    })
}

enum Verdict {
    Row(DiagnosticsReport),
    NotRun(RowStatus, String),
}

fn classify(cell: &Cell, err: AnalysisError) -> Result<Verdict, HarnessError> {
    match err {
        AnalysisError::EmptySet | AnalysisError::EvenCharacteristic | AnalysisError::ZeroPin => Ok(Verdict::NotRun(RowStatus::Skipped, err.to_string())),
        AnalysisError::Spectrum(SpectrumError::UnsupportedEngine(_)) | AnalysisError::Space(SpaceError::BadDimension(_)) => {
            Ok(Verdict::NotRun(RowStatus::Skipped, err.to_string()))
        }
        AnalysisError::ToleranceExceeded { .. } => Ok(Verdict::NotRun(RowStatus::Fail, err.to_string())),
        AnalysisError::BudgetExceeded { .. } | AnalysisError::Overflow | AnalysisError::Spectrum(SpectrumError::MemoryCap { .. }) => Err(cap(cell, err)),
        other => Err(HarnessError::Analysis(other)),
    }
}

fn run_check(config: &ExperimentConfig, e: &PointSet, check: SweepCheck, pin: Option<PinSpec>) -> Result<DiagnosticsReport, AnalysisError> {
    let metric = config.metric;
    let pin = || pin.expect("pinned check has a pin");
    match check {
        SweepCheck::CsChain => {
            let engine = if metric == Metric::Dot { Engine::Direct } else { config.engine };
            let mut report = cs_chain_with_engine(&pin_slice(e, pin())?, e, metric, engine)?;
            report.pin = Some(pin());
            Ok(report)
        }
        SweepCheck::Identity => second_moment_identity(e, pin(), metric),
        SweepCheck::Bound => second_moment_bound(e, pin(), metric),
        SweepCheck::Distpinned => theorem_check_distpinned(e, pin()),
        SweepCheck::Dot => theorem_check_dot(e, pin()),
        SweepCheck::Corollary => best_slice(e).map(|(_, r)| r),
        SweepCheck::IrThreshold => check_ir_threshold(e),
        SweepCheck::Sumproduct => {
            if e.dim() != 1 {
                return Err(AnalysisError::Space(SpaceError::BadDimension("the sum-product check takes A ⊆ F_q (d = 1)".into())));
            }
            check_sumproduct(e)
        }
    }
}

fn check_name(check: SweepCheck) -> String {
    match check {
        SweepCheck::Identity => "second_moment_identity".into(),
        SweepCheck::Bound => "second_moment_bound".into(),
        other => other.to_string(),
    }
}

/// Runs every configured check on one cell.
pub fn run_cell(config: &ExperimentConfig, config_hash: &str, cell: &Cell) -> Result<Vec<ResultRow>, HarnessError> {
    let seed = config.seeds.base + cell.seed_index as u64;
    let stream = derive_seed(&[config_hash, &cell.id, &seed.to_string()]);
    let prov = Provenance {
        config_hash: config_hash.to_string(),
        cell_id: cell.id.clone(),
        seed,
        engine: config.engine,
        timestamp: config.record_timestamp.then(|| SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())),
        family: config.family.to_string(),
        target_size: cell.size,
    };
    let blank = |check: SweepCheck, pin: Option<PinSpec>| {
        let mut r = DiagnosticsReport::new(&check_name(check), cell.p, cell.k, cell.d);
        r.pin = pin;
        if check.is_pinned() || check == SweepCheck::Corollary {
            r.metric = Some(if check == SweepCheck::Dot { Metric::Dot } else if check == SweepCheck::Distpinned { Metric::Distance } else { config.metric });
        }
        r
    };

    let set = build_set(config, cell, stream)?;
    let mut rows = Vec::new();
    for &check in &config.checks {
        let e = match &set {
            Ok(e) => e,
            Err(why) => {
                rows.push(ResultRow::not_run(&prov, &blank(check, None), RowStatus::Skipped, why.clone()));
                continue;
            }
        };
        let pins: Vec<Option<PinSpec>> = if check.is_pinned() {
            let pins = pins_for(config, e, check).map_err(|err| cap(cell, err))?;
            if pins.is_empty() {
                rows.push(ResultRow::not_run(&prov, &blank(check, None), RowStatus::Skipped, "no admissible pin".into()));
                continue;
            }
            pins.into_iter().map(Some).collect()
        } else {
            vec![None]
        };
        for pin in pins {
            let mut row = match run_check(config, e, check, pin).map_or_else(|err| classify(cell, err), |r| Ok(Verdict::Row(r)))? {
                Verdict::Row(mut report) => {
                    report.check = check_name(check);
                    ResultRow::from_report(&prov, &report)
                }
                Verdict::NotRun(status, why) => ResultRow::not_run(&prov, &blank(check, pin), status, why),
            };
            if row.size_e == 0 {
                row.size_e = e.len() as u64;
            }
            rows.push(row);
        }
    }
    Ok(rows)
}

/// All rows of the sweep, in plan order. Stops at the first cell that
/// exceeds a cap.
pub fn sweep(config: &ExperimentConfig) -> Result<Vec<ResultRow>, HarnessError> {
    let hash = config.hash();
    let cells = plan(config)?;
    let results: Vec<Result<Vec<ResultRow>, HarnessError>> = cells.par_iter().map(|c| run_cell(config, &hash, c)).collect();
    let mut rows = Vec::new();
    for r in results {
        rows.extend(r?);
    }
    Ok(rows)
}

fn completed_cells(path: &Path, hash: &str) -> Result<HashSet<String>, HarnessError> {
    let mut done = HashSet::new();
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name).ok_or_else(|| HarnessError::BadHeader(format!("{} has no '{name}' column", path.display())));
    let (hash_col, cell_col) = (col("config_hash")?, col("cell_id")?);
    for record in reader.records() {
        let record = record?;
        if record.get(hash_col) == Some(hash) {
            done.insert(record.get(cell_col).unwrap_or_default().to_string());
        }
    }
    Ok(done)
}

fn open_append(path: &Path) -> Result<(File, bool), HarnessError> {
    let fresh = std::fs::metadata(path).map_or(true, |m| m.len() == 0);
    Ok((OpenOptions::new().create(true).append(true).open(path)?, fresh))
}

/// Runs the sweep into `out` (CSV) and optionally a JSON-lines mirror.
///
/// Cells already present in `out` under the same config hash are skipped
/// and new rows are appended. Cells run in parallel in batches; each batch
/// is written in plan order, so output bytes do not depend on the thread
/// count. On a cap violation every row before the offending cell is
/// flushed and the error names that cell.
pub fn run_sweep(config: &ExperimentConfig, out: &Path, jsonl: Option<&Path>) -> Result<SweepSummary, HarnessError> {
    let hash = config.hash();
    let cells = plan(config)?;
    let done = if out.exists() && std::fs::metadata(out)?.len() > 0 { completed_cells(out, &hash)? } else { HashSet::new() };
    let todo: Vec<&Cell> = cells.iter().filter(|c| !done.contains(&c.id)).collect();
    let mut summary = SweepSummary { cells_total: cells.len(), cells_resumed: cells.len() - todo.len(), ..Default::default() };

    let (file, fresh) = open_append(out)?;
    let mut writer = csv::WriterBuilder::new().has_headers(fresh).from_writer(file);
    let mut mirror = match jsonl {
        Some(p) => Some(BufWriter::new(open_append(p)?.0)),
        None => None,
    };

    let batch = rayon::current_num_threads().max(1) * 4;
    for chunk in todo.chunks(batch) {
        let results: Vec<Result<Vec<ResultRow>, HarnessError>> = chunk.par_iter().map(|c| run_cell(config, &hash, c)).collect();
        for result in results {
            let rows = match result {
                Ok(rows) => rows,
                Err(e) => {
                    writer.flush()?;
                    if let Some(m) = mirror.as_mut() {
                        m.flush()?;
                    }
                    return Err(e);
                }
            };
            for row in &rows {
                writer.serialize(row)?;
                if let Some(m) = mirror.as_mut() {
                    serde_json::to_writer(&mut *m, row)?;
                    m.write_all(b"\n")?;
                }
                summary.rows_written += 1;
                summary.rows_failed += !row.passed() as usize;
            }
        }
        writer.flush()?;
    }
    if let Some(m) = mirror.as_mut() {
        m.flush()?;
    }
    Ok(summary)
}
