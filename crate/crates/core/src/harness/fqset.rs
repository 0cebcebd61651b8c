//! The `.fqset` point-set file format and its JSON-lines mirror.
//!
//! ```text
//! FQSET 1 <p> <k> <modulus> <d> <n>
//! <x_1> <x_2> … <x_d>
//! …
//! ```
//!
//! `modulus` is the comma-separated coefficient list, low degree first
//! (`1,0,1` for `x² + 1`). Points are written in ascending index order, one
//! per line, as canonical integers; loading rejects duplicates.

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::field::{FieldElement, FieldError, FieldSpec};
use crate::space::PointSet;

pub const FQSET_MAGIC: &str = "FQSET";
pub const FQSET_VERSION: u32 = 1;

pub fn write_fqset<W: Write>(mut out: W, set: &PointSet) -> Result<(), HarnessError> {
    let field = set.field();
    let modulus: Vec<String> = field.modulus().iter().map(u32::to_string).collect();
    writeln!(out, "{FQSET_MAGIC} {FQSET_VERSION} {} {} {} {} {}", field.p(), field.k(), modulus.join(","), set.dim(), set.len())?;
    for p in set.points() {
        let line: Vec<String> = p.iter().map(|c| c.0.to_string()).collect();
        writeln!(out, "{}", line.join(" "))?;
    }
    Ok(())
}

struct Header {
    field: FieldSpec,
    d: usize,
    n: usize,
}

fn parse_header(line: &str) -> Result<Header, HarnessError> {
    let bad = |why: &str| HarnessError::BadHeader(format!("{why}: '{}'", line.trim_end()));
    let parts: Vec<&str> = line.split_whitespace().collect();
    if parts.len() != 7 || parts[0] != FQSET_MAGIC {
        return Err(bad("expected 'FQSET 1 p k modulus d n'"));
    }
    if parts[1] != FQSET_VERSION.to_string() {
        return Err(bad("unsupported version"));
    }
    let p: u32 = parts[2].parse().map_err(|_| bad("p is not an integer"))?;
    let k: u32 = parts[3].parse().map_err(|_| bad("k is not an integer"))?;
    let modulus: Vec<u32> = parts[4]
        .split(',')
        .map(|c| c.parse().map_err(|_| bad("modulus digits are not integers")))
        .collect::<Result<_, _>>()?;
    let d: usize = parts[5].parse().map_err(|_| bad("d is not an integer"))?;
    let n: usize = parts[6].parse().map_err(|_| bad("n is not an integer"))?;
    if modulus.len() != k as usize + 1 {
        return Err(HarnessError::BadModulus(format!("{} coefficients for degree {k}", modulus.len())));
    }
    let field = FieldSpec::with_modulus(p, &modulus).map_err(|e| match e {
        FieldError::BadModulus(m) => HarnessError::BadModulus(format!("{m:?} is not monic irreducible over F_{p}")),
        other => HarnessError::BadHeader(other.to_string()),
    })?;
    Ok(Header { field, d, n })
}

fn parse_point(field: &FieldSpec, d: usize, values: impl Iterator<Item = Option<u64>>, line_no: usize) -> Result<Vec<FieldElement>, HarnessError> {
    let coords: Vec<FieldElement> = values
        .map(|v| match v {
            Some(v) if v < field.q() as u64 => Ok(FieldElement(v as u32)),
            _ => Err(HarnessError::CoordinateOutOfRange { line: line_no }),
        })
        .collect::<Result<_, _>>()?;
    if coords.len() != d {
        return Err(HarnessError::BadHeader(format!("line {line_no}: {} coordinates, expected {d}", coords.len())));
    }
    Ok(coords)
}

pub fn read_fqset<R: Read>(input: R) -> Result<PointSet, HarnessError> {
    let mut lines = BufReader::new(input).lines();
    let header = parse_header(&lines.next().ok_or_else(|| HarnessError::BadHeader("empty file".into()))??)?;
    let mut points = Vec::with_capacity(header.n);
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let values = line.split_whitespace().map(|t| t.parse::<u64>().ok());
        points.push(parse_point(&header.field, header.d, values, i + 2)?);
    }
    finish(&header, points)
}

fn finish(header: &Header, points: Vec<Vec<FieldElement>>) -> Result<PointSet, HarnessError> {
    let found = points.len();
    let set = PointSet::from_points(&header.field, header.d, points)?;
    if found != header.n || set.len() != header.n {
        return Err(HarnessError::SizeMismatch { expected: header.n, found: set.len().min(found) });
    }
    Ok(set)
}

pub fn save_pointset(path: impl AsRef<Path>, set: &PointSet) -> Result<(), HarnessError> {
    let mut buf = Vec::new();
    write_fqset(&mut buf, set)?;
    fs::write(path, buf)?;
    Ok(())
}

pub fn load_pointset(path: impl AsRef<Path>) -> Result<PointSet, HarnessError> {
    read_fqset(fs::File::open(path)?)
}

#[derive(Debug, Serialize, Deserialize)]
struct JsonlHeader {
    format: String,
    version: u32,
    p: u32,
    k: u32,
    modulus: Vec<u32>,
    d: usize,
    n: usize,
}

/// JSON-lines mirror: a header object, then one JSON array per point.
pub fn write_jsonl<W: Write>(mut out: W, set: &PointSet) -> Result<(), HarnessError> {
    let field = set.field();
    let header = JsonlHeader {
        format: "fqset".into(),
        version: FQSET_VERSION,
        p: field.p(),
        k: field.k(),
        modulus: field.modulus().to_vec(),
        d: set.dim(),
        n: set.len(),
    };
    writeln!(out, "{}", serde_json::to_string(&header)?)?;
    for p in set.points() {
        let coords: Vec<u32> = p.iter().map(|c| c.0).collect();
        writeln!(out, "{}", serde_json::to_string(&coords)?)?;
    }
    Ok(())
}

pub fn read_jsonl<R: Read>(input: R) -> Result<PointSet, HarnessError> {
    let mut lines = BufReader::new(input).lines();
    let first = lines.next().ok_or_else(|| HarnessError::BadHeader("empty file".into()))??;
    let h: JsonlHeader = serde_json::from_str(&first).map_err(|e| HarnessError::BadHeader(e.to_string()))?;
    if h.format != "fqset" || h.version != FQSET_VERSION {
        return Err(HarnessError::BadHeader(format!("unsupported format {} v{}", h.format, h.version)));
    }
    let modulus: Vec<String> = h.modulus.iter().map(u32::to_string).collect();
    let header = parse_header(&format!("{FQSET_MAGIC} {} {} {} {} {} {}", h.version, h.p, h.k, modulus.join(","), h.d, h.n))?;
    let mut points = Vec::with_capacity(header.n);
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let values: Vec<serde_json::Value> = serde_json::from_str(&line).map_err(|_| HarnessError::CoordinateOutOfRange { line: i + 2 })?;
        points.push(parse_point(&header.field, header.d, values.iter().map(|v| v.as_u64()), i + 2)?);
    }
    finish(&header, points)
}
