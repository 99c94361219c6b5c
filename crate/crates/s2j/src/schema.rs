//! Versioned JSONL schemas shared by the pipeline stages.
//!
//! Every file starts with a header record naming its schema and version.
//! Readers reject files whose major version is above what they support;
//! minor bumps are backward compatible.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::{Error, Result};

pub const PAIR_SCHEMA: &str = "pair.v1";
pub const SAMPLES_SCHEMA: &str = "samples.v1";
pub const TRAJECTORY_SCHEMA: &str = "trajectory.v1";
pub const REWARD_SCHEMA: &str = "reward.v1";
pub const BATCH_SCHEMA: &str = "batch.v1";
pub const RECORD_SCHEMA: &str = "record.v1";
pub const COMPLETIONS_SCHEMA: &str = "completions.v1";

pub const SUPPORTED_MAJOR: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SchemaHeader {
    pub schema: String,
    pub major: u32,
    pub minor: u32,
    #[serde(flatten, skip_serializing_if = "serde_json::Map::is_empty", default)]
    pub extra: serde_json::Map<String, serde_json::Value>,
}

impl SchemaHeader {
    pub fn new(schema: &str) -> Self {
        Self {
            schema: schema.to_string(),
            major: SUPPORTED_MAJOR,
            minor: 0,
            extra: serde_json::Map::new(),
        }
    }

    pub fn with_extra(mut self, extra: serde_json::Value) -> Self {
        if let serde_json::Value::Object(map) = extra {
            self.extra.extend(map);
        }
        self
    }
}

pub fn write_header<W: Write>(out: &mut W, header: &SchemaHeader) -> Result<()> {
    serde_json::to_writer(&mut *out, header)?;
    out.write_all(b"\n")?;
    Ok(())
}

pub fn write_record<W: Write, T: Serialize>(out: &mut W, record: &T) -> Result<()> {
    serde_json::to_writer(&mut *out, record)?;
    out.write_all(b"\n")?;
    Ok(())
}

/// Writes a whole JSONL file: header first, then one record per line.
pub fn write_jsonl<T: Serialize>(path: &Path, schema: &str, records: &[T]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    write_header(&mut out, &SchemaHeader::new(schema))?;
    for r in records {
        write_record(&mut out, r)?;
    }
    out.flush()?;
    Ok(())
}

/// Reads and validates the header, then deserializes every remaining line.
/// Returns the header (for its extra fields) and the records.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path, schema: &str) -> Result<(SchemaHeader, Vec<T>)> {
    let mut lines = buffered_lines(path)?;
    let header = read_header_line(path, schema, &mut lines)?;
    let mut records = Vec::new();
    for (lineno, line) in lines {
        let record = serde_json::from_str(&line).map_err(|e| {
            Error::Format(format!("{}:{}: {e}", path.display(), lineno))
        })?;
        records.push(record);
    }
    Ok((header, records))
}

/// Like [`read_jsonl`] but skips undecodable lines, returning one diagnostic
/// per skipped line instead of failing. Files that are mostly invalid are
/// still a hard format error.
pub fn read_jsonl_lenient<T: DeserializeOwned>(
    path: &Path,
    schema: &str,
) -> Result<(SchemaHeader, Vec<T>, Vec<String>)> {
    let mut lines = buffered_lines(path)?;
    let header = read_header_line(path, schema, &mut lines)?;
    let mut records = Vec::new();
    let mut diagnostics = Vec::new();
    let mut total = 0usize;
    for (lineno, line) in lines {
        total += 1;
        match serde_json::from_str(&line) {
            Ok(r) => records.push(r),
            Err(e) => diagnostics.push(format!("{}:{}: {e}", path.display(), lineno)),
        }
    }
    if total > 0 && diagnostics.len() * 2 > total {
        return Err(Error::Format(format!(
            "{}: {} of {} lines invalid",
            path.display(),
            diagnostics.len(),
            total
        )));
    }
    Ok((header, records, diagnostics))
}

fn buffered_lines(path: &Path) -> Result<impl Iterator<Item = (usize, String)>> {
    let reader = BufReader::new(File::open(path)?);
    let collected: Vec<String> = reader
        .lines()
        .collect::<std::io::Result<Vec<_>>>()?
        .into_iter()
        .filter(|l| !l.trim().is_empty())
        .collect();
    Ok(collected.into_iter().enumerate().map(|(i, l)| (i + 1, l)))
}

fn read_header_line(
    path: &Path,
    schema: &str,
    lines: &mut impl Iterator<Item = (usize, String)>,
) -> Result<SchemaHeader> {
    let (_, first) = lines
        .next()
        .ok_or_else(|| Error::Format(format!("{}: empty file, missing schema header", path.display())))?;
    let header: SchemaHeader = serde_json::from_str(&first)
        .map_err(|e| Error::Format(format!("{}: bad schema header: {e}", path.display())))?;
    if header.schema != schema {
        return Err(Error::Format(format!(
            "{}: expected schema {schema}, found {}",
            path.display(),
            header.schema
        )));
    }
    if header.major > SUPPORTED_MAJOR {
        return Err(Error::Format(format!(
            "{}: schema {} major version {} is newer than supported {}",
            path.display(),
            header.schema,
            header.major,
            SUPPORTED_MAJOR
        )));
    }
    Ok(header)
}

/// One rollout of a judge over an instance, `trajectory.v1`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub instance_id: String,
    pub rollout_index: usize,
    pub raw_text: String,
    pub self_solution: Option<String>,
    pub verdict: Option<crate::trajectory::Verdict>,
    pub kind: crate::trajectory::TaskKind,
}

/// One scored rollout, `reward.v1`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RewardRecord {
    pub instance_id: String,
    pub rollout_index: usize,
    pub r_solve: f64,
    pub r_judge: f64,
    pub total: f64,
    pub mode: crate::reward::RewardMode,
}

/// Input to pair synthesis, `samples.v1`: one query with its generator
/// responses.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampleRecord {
    pub id: String,
    pub query: String,
    pub ground_truth: String,
    pub responses: Vec<String>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Debug, PartialEq, Serialize, Deserialize)]
    struct Rec {
        x: u32,
    }

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.jsonl");
        write_jsonl(&path, RECORD_SCHEMA, &[Rec { x: 1 }, Rec { x: 2 }]).unwrap();
        let (header, records): (_, Vec<Rec>) = read_jsonl(&path, RECORD_SCHEMA).unwrap();
        assert_eq!(header.schema, RECORD_SCHEMA);
        assert_eq!(records, vec![Rec { x: 1 }, Rec { x: 2 }]);
    }

    #[test]
    fn rejects_wrong_schema() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.jsonl");
        write_jsonl(&path, PAIR_SCHEMA, &[Rec { x: 1 }]).unwrap();
        let err = read_jsonl::<Rec>(&path, RECORD_SCHEMA).unwrap_err();
        assert!(matches!(err, Error::Format(_)));
    }

    #[test]
    fn rejects_newer_major() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.jsonl");
        let mut f = File::create(&path).unwrap();
        writeln!(f, "{{\"schema\":\"record.v1\",\"major\":2,\"minor\":0}}").unwrap();
        let err = read_jsonl::<Rec>(&path, RECORD_SCHEMA).unwrap_err();
        assert!(matches!(err, Error::Format(_)));
    }

    #[test]
    fn accepts_newer_minor() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.jsonl");
        let mut f = File::create(&path).unwrap();
        writeln!(f, "{{\"schema\":\"record.v1\",\"major\":1,\"minor\":9}}").unwrap();
        writeln!(f, "{{\"x\":7}}").unwrap();
        let (_, records): (_, Vec<Rec>) = read_jsonl(&path, RECORD_SCHEMA).unwrap();
        assert_eq!(records, vec![Rec { x: 7 }]);
    }

    #[test]
    fn lenient_skips_and_counts() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.jsonl");
        let mut f = File::create(&path).unwrap();
        writeln!(f, "{{\"schema\":\"record.v1\",\"major\":1,\"minor\":0}}").unwrap();
        writeln!(f, "{{\"x\":1}}").unwrap();
        writeln!(f, "not json").unwrap();
        writeln!(f, "{{\"x\":2}}").unwrap();
        let (_, records, diags): (_, Vec<Rec>, _) = read_jsonl_lenient(&path, RECORD_SCHEMA).unwrap();
        assert_eq!(records.len(), 2);
        assert_eq!(diags.len(), 1);
    }

    #[test]
    fn lenient_majority_invalid_is_format_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.jsonl");
        let mut f = File::create(&path).unwrap();
        writeln!(f, "{{\"schema\":\"record.v1\",\"major\":1,\"minor\":0}}").unwrap();
        writeln!(f, "bad").unwrap();
        writeln!(f, "worse").unwrap();
        writeln!(f, "{{\"x\":1}}").unwrap();
        let err = read_jsonl_lenient::<Rec>(&path, RECORD_SCHEMA).unwrap_err();
        assert!(matches!(err, Error::Format(_)));
    }
}
