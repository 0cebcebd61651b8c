use std::fmt::Write as _;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use fqdist::analysis::{cs_chain, nonzero_pin};
use fqdist::field::poly_to_string;
use fqdist::harness::{
    read_fqset, read_jsonl, run_suite, run_sweep, search_extremal, with_thread_pool, write_fqset, write_jsonl, write_suite, ExperimentConfig, HarnessError,
};
use fqdist::space::{projection_size, valid_pins};
use fqdist::spectra::SpectrumMeta;
use fqdist::{
    best_slice, check_ir_threshold, check_sumproduct, field_of_order, generate, make_field, pin_slice, pinned_distance_set, pinned_dot_set,
    second_moment_bound, second_moment_identity, spectrum, sqrt_minus_one, theorem_check_distpinned, theorem_check_dot, DiagnosticsReport, FieldElement,
    FieldSpec, Generator, Metric, PinSpec, PointSet,
};

use crate::{CheckKind, Cli, Command, FieldArgs, GenParams, Kind, SetArgs, VerifyArgs};

pub const EXIT_OK: u8 = 0;
pub const EXIT_ERROR: u8 = 1;
pub const EXIT_ASSERTION: u8 = 2;
pub const EXIT_USAGE: u8 = 64;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Op(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Op(_) => EXIT_ERROR,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Op(m) => f.write_str(m),
        }
    }
}

macro_rules! op_error {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Op(e.to_string())
            }
        }
    )*};
}

op_error!(io::Error, serde_json::Error, HarnessError, fqdist::FieldError, fqdist::SpaceError, fqdist::SpectrumError, fqdist::AnalysisError);

type Result<T> = std::result::Result<T, CliError>;

pub fn run(cli: &Cli) -> Result<u8> {
    let json = cli.json;
    match &cli.command {
        Command::FieldInfo(args) => field_info(args, json),
        Command::Gen { set, out } => {
            let e = build(set.kind, &set.params)?;
            let mut buf = Vec::new();
            write_fqset(&mut buf, &e)?;
            fs::write(out, buf)?;
            emit(json, &serde_json::json!({ "path": out, "size": e.len() }), || format!("wrote {} points to {}", e.len(), out.display()))
        }
        Command::Spectrum { set, with, metric, engine, out } => {
            let e = load_set(set)?;
            let f = match with {
                Some(path) => read_set(path)?,
                None => e.clone(),
            };
            let s = spectrum(&f, &e, *metric, *engine)?;
            let meta = SpectrumMeta { d: e.dim(), f_size: f.len(), e_size: e.len(), metric: *metric, engine: *engine, seed: set.gen.map(|_| set.params.seed) };
            if json {
                return emit(true, &serde_json::json!({ "metric": metric, "engine": engine, "counts": s.counts() }), String::new);
            }
            match out {
                Some(path) => s.write_csv(BufWriter::new(fs::File::create(path)?), &meta)?,
                None => s.write_csv(io::stdout().lock(), &meta)?,
            }
            Ok(EXIT_OK)
        }
        Command::Delta { set, engine, pin, metric } => {
            let e = load_set(set)?;
            let support: Vec<FieldElement> = match (pin, metric) {
                (None, Metric::Distance) => fqdist::distance_set(&e, *engine)?,
                (None, Metric::Dot) => spectrum(&e, &e, Metric::Dot, fqdist::Engine::Direct)?.support(false),
                (Some(pin), Metric::Distance) => pinned_distance_set(&e, *pin)?,
                (Some(pin), Metric::Dot) => pinned_dot_set(&e, *pin)?,
            };
            let values: Vec<u32> = support.iter().map(|t| t.0).collect();
            emit(json, &serde_json::json!({ "support_size": values.len(), "support": values }), || {
                let list: Vec<String> = values.iter().map(u32::to_string).collect();
                format!("support_size={} support=[{}]", values.len(), list.join(","))
            })
        }
        Command::Pins { set } => pins(&load_set(set)?, json),
        Command::Verify(args) => verify(args, json),
        Command::Sweep { config, out, jsonl } => {
            let config = ExperimentConfig::load(config)?;
            let out = out.clone().or_else(|| config.output.clone()).ok_or_else(|| CliError::Usage("no output path: pass --out or set `output` in the config".into()))?;
            let summary = with_thread_pool(|| run_sweep(&config, &out, jsonl.as_deref()))??;
            let code = if summary.rows_failed > 0 { EXIT_ASSERTION } else { EXIT_OK };
            emit(
                json,
                &serde_json::json!({
                    "cells_total": summary.cells_total,
                    "cells_resumed": summary.cells_resumed,
                    "rows_written": summary.rows_written,
                    "rows_failed": summary.rows_failed,
                }),
                || {
                    format!(
                        "cells_total={} cells_resumed={} rows_written={} rows_failed={}",
                        summary.cells_total, summary.cells_resumed, summary.rows_written, summary.rows_failed
                    )
                },
            )?;
            Ok(code)
        }
        Command::Search { field, d, target, steps, seed, out, trail } => {
            let f = field_from(field)?;
            let outcome = search_extremal(&f, *d, *target, *steps, *seed)?;
            if let Some(path) = out {
                let mut buf = Vec::new();
                write_fqset(&mut buf, &outcome.set(&f)?)?;
                fs::write(path, buf)?;
            }
            if let Some(path) = trail {
                let mut w = BufWriter::new(fs::File::create(path)?);
                for m in &outcome.trail {
                    serde_json::to_writer(&mut w, m)?;
                    w.write_all(b"\n")?;
                }
                w.flush()?;
            }
            let factors: Vec<Vec<u32>> = outcome.factors.iter().map(|a| a.iter().map(|x| x.0).collect()).collect();
            emit(
                json,
                &serde_json::json!({
                    "initial_delta_size": outcome.initial_delta_size,
                    "delta_size": outcome.delta_size,
                    "factors": factors,
                    "moves": outcome.trail.len(),
                }),
                || format!("initial_delta_size={} delta_size={} factors={:?}", outcome.initial_delta_size, outcome.delta_size, factors),
            )
        }
        Command::FmtConvert { input, out } => {
            let from_fqset = input.extension().is_some_and(|e| e == "fqset");
            let set = if from_fqset { read_fqset(fs::File::open(input)?)? } else { read_jsonl(fs::File::open(input)?)? };
            let mut buf = Vec::new();
            if from_fqset {
                write_jsonl(&mut buf, &set)?;
            } else {
                write_fqset(&mut buf, &set)?;
            }
            fs::write(out, buf)?;
            emit(json, &serde_json::json!({ "path": out, "size": set.len() }), || format!("wrote {} points to {}", set.len(), out.display()))
        }
    }
}

fn emit(json: bool, value: &serde_json::Value, text: impl FnOnce() -> String) -> Result<u8> {
    let mut stdout = io::stdout().lock();
    if json {
        writeln!(stdout, "{value}")?;
    } else {
        writeln!(stdout, "{}", text())?;
    }
    Ok(EXIT_OK)
}

fn field_from(args: &FieldArgs) -> Result<FieldSpec> {
    match (args.q, args.p) {
        (Some(q), None) => Ok(field_of_order(q)?),
        (None, Some(p)) => Ok(make_field(p, args.k)?),
        _ => Err(CliError::Usage("give the field as --q Q or --p P [--k K]".into())),
    }
}

fn build(kind: Kind, params: &GenParams) -> Result<PointSet> {
    let field = field_from(&params.field)?;
    let need = |what: &str| CliError::Usage(format!("--{what} is required for this kind"));
    let generator = match kind {
        Kind::Random => Generator::Random { n: params.n.ok_or_else(|| need("n"))? },
        Kind::Product => {
            if params.sizes.is_empty() {
                return Err(need("sizes"));
            }
            Generator::RandomProduct { sizes: params.sizes.clone() }
        }
        Kind::Line => Generator::IsotropicLine,
        Kind::Sphere => Generator::Sphere { t: FieldElement(params.t.ok_or_else(|| need("t"))?) },
        Kind::Full => Generator::FullSpace,
        Kind::Grid => Generator::IntervalGrid { m: params.m.ok_or_else(|| need("m"))? },
    };
    Ok(generate(&field, params.d, &generator, params.seed)?)
}

fn read_set(path: &Path) -> Result<PointSet> {
    let file = fs::File::open(path).map_err(|e| CliError::Op(format!("{}: {e}", path.display())))?;
    Ok(if path.extension().is_some_and(|e| e == "jsonl") { read_jsonl(file)? } else { read_fqset(file)? })
}

fn load_set(args: &SetArgs) -> Result<PointSet> {
    match (&args.input, args.gen) {
        (Some(path), None) => read_set(path),
        (None, Some(kind)) => build(kind, &args.params),
        _ => Err(CliError::Usage("give exactly one of --in FILE or --gen KIND".into())),
    }
}

fn field_info(args: &FieldArgs, json: bool) -> Result<u8> {
    let f = field_from(args)?;
    let root = sqrt_minus_one(&f).map(|r| r.0);
    let value = serde_json::json!({
        "p": f.p(),
        "k": f.k(),
        "q": f.q(),
        "modulus": f.modulus(),
        "modulus_poly": poly_to_string(f.modulus()),
        "sqrt_minus_one": root,
    });
    emit(json, &value, || {
        let mut s = String::new();
        let _ = writeln!(s, "p={}", f.p());
        let _ = writeln!(s, "k={}", f.k());
        let _ = writeln!(s, "q={}", f.q());
        let _ = writeln!(s, "modulus={}", poly_to_string(f.modulus()));
        let digits: Vec<String> = f.modulus().iter().map(u32::to_string).collect();
        let _ = writeln!(s, "modulus_digits={}", digits.join(","));
        let _ = write!(s, "sqrt_minus_one={}", root.map_or("none".to_string(), |r| r.to_string()));
        s
    })
}

fn pins(e: &PointSet, json: bool) -> Result<u8> {
    let mut rows = Vec::new();
    for j in 1..=e.dim() {
        let zs: Vec<u32> = valid_pins(e, j)?.iter().map(|z| z.0).collect();
        rows.push(serde_json::json!({ "j": j, "projection_size": projection_size(e, j)?, "valid_z": zs }));
    }
    emit(json, &serde_json::Value::Array(rows.clone()), || {
        rows.iter()
            .map(|r| {
                let zs: Vec<String> = r["valid_z"].as_array().expect("array").iter().map(|v| v.to_string()).collect();
                format!("j={} projection_size={} valid_z=[{}]", r["j"], r["projection_size"], zs.join(","))
            })
            .collect::<Vec<_>>()
            .join("\n")
    })
}

/// The report a `verify --check` invocation produces, shared with tests.
pub fn check_report(check: CheckKind, e: &PointSet, pin: Option<PinSpec>, metric: Metric) -> Result<DiagnosticsReport> {
    let need_pin = || pin.ok_or_else(|| CliError::Usage("this check needs --pin j,z".into()));
    Ok(match check {
        CheckKind::CsChain => {
            let pin = need_pin()?;
            let mut r = cs_chain(&pin_slice(e, pin)?, e, metric)?;
            r.pin = Some(pin);
            r
        }
        CheckKind::Identity => second_moment_identity(e, need_pin()?, metric)?,
        CheckKind::Bound => second_moment_bound(e, need_pin()?, metric)?,
        CheckKind::Distpinned => theorem_check_distpinned(e, need_pin()?)?,
        CheckKind::Dot => {
            let pin = match pin {
                Some(p) => p,
                None => nonzero_pin(e, e.dim())?.ok_or_else(|| CliError::Usage("no nonzero pin available; pass --pin j,z".into()))?,
            };
            theorem_check_dot(e, pin)?
        }
        CheckKind::Corollary => best_slice(e)?.1,
        CheckKind::IrThreshold => check_ir_threshold(e)?,
        CheckKind::Sumproduct => check_sumproduct(e)?,
    })
}

fn verify(args: &VerifyArgs, json: bool) -> Result<u8> {
    if args.suite.is_some() {
        let outcome = with_thread_pool(|| run_suite(args.seed))??;
        let paths = write_suite(&args.out, &outcome)?;
        let mut stdout = io::stdout().lock();
        for c in &outcome.criteria {
            if json {
                let v = serde_json::json!({
                    "id": c.id,
                    "name": c.name,
                    "passed": c.passed,
                    "instances": c.instances,
                    "failures": c.failures,
                    "seconds": c.elapsed.as_secs_f64(),
                    "detail": c.detail,
                });
                writeln!(stdout, "{v}")?;
            } else {
                let tag = if c.passed { "PASS" } else { "FAIL" };
                writeln!(stdout, "[{tag}] {:>2} {:<24} {:>4}/{:<4} {:>8.3}s  {}", c.id, c.name, c.instances - c.failures, c.instances, c.elapsed.as_secs_f64(), c.detail)?;
            }
        }
        if !json {
            for p in paths {
                writeln!(stdout, "wrote {}", p.display())?;
            }
        }
        return Ok(if outcome.passed() { EXIT_OK } else { EXIT_ASSERTION });
    }
    let check = args.check.expect("clap requires --check without --suite");
    let path = args.input.as_ref().ok_or_else(|| CliError::Usage("--check needs --in FILE".into()))?;
    let e = read_set(path)?;
    let report = check_report(check, &e, args.pin, args.metric)?;
    if json {
        writeln!(io::stdout().lock(), "{}", serde_json::to_string(&report)?)?;
    } else {
        writeln!(io::stdout().lock(), "{}", report.to_text())?;
    }
    Ok(if report.passed() { EXIT_OK } else { EXIT_ASSERTION })
}
