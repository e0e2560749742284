//! File formats.
//!
//! A system is a CSV file with one row per point: the point coordinates
//! followed by the function values, where a complex value takes two
//! adjacent columns (real part, imaginary part). A JSON sidecar with the
//! same stem and a `.json` extension carries the header:
//!
//! ```json
//! { "schema_version": "1", "n": 2, "m": 4, "field": "complex",
//!   "point_dim": 1, "weights": "uniform" }
//! ```
//!
//! `weights` is either `"uniform"` or `{ "explicit": [...] }` with decimal
//! strings. Every float
//! is written in its shortest round-trip form, so saving and loading gives
//! back the same bits.
//!
//! Certificates are JSON documents with all floats as decimal strings.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::discretize::{DiscretizationCertificate, PointWeights, SampledSystem};
use crate::error::{Error, Result};
use crate::partition::Strategy;
use crate::scalar::{Field, C64};
use crate::serde_dec;

pub const SCHEMA_VERSION: &str = "1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemHeader {
    pub schema_version: String,
    pub n: usize,
    pub m: usize,
    pub field: Field,
    pub point_dim: usize,
    pub weights: PointWeights,
}

/// Path of the sidecar header for a system CSV.
pub fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

fn parse_err(path: &Path, line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        line,
        column,
        message: message.into(),
    }
}

fn header_columns(h: &SystemHeader) -> Vec<String> {
    let mut cols: Vec<String> = (0..h.point_dim).map(|d| format!("x{d}")).collect();
    for i in 0..h.n {
        match h.field {
            Field::Real => cols.push(format!("u{i}")),
            Field::Complex => {
                cols.push(format!("u{i}_re"));
                cols.push(format!("u{i}_im"));
            }
        }
    }
    cols
}

pub fn save_system(system: &SampledSystem, path: &Path) -> Result<()> {
    let header = SystemHeader {
        schema_version: SCHEMA_VERSION.into(),
        n: system.n(),
        m: system.m(),
        field: system.field(),
        point_dim: system.points()[0].len(),
        weights: system.point_weights().clone(),
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_io)?;
    w.write_record(header_columns(&header)).map_err(csv_io)?;
    for j in 0..system.m() {
        let mut row: Vec<String> = system.points()[j].iter().map(|&x| serde_dec::fmt(x)).collect();
        for i in 0..system.n() {
            let z = system.values()[(i, j)];
            row.push(serde_dec::fmt(z.re));
            if header.field == Field::Complex {
                row.push(serde_dec::fmt(z.im));
            }
        }
        w.write_record(&row).map_err(csv_io)?;
    }
    w.flush()?;
    fs::write(sidecar_path(path), serde_json::to_string_pretty(&header)? + "\n")?;
    Ok(())
}

fn csv_io(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => Error::Io(e),
        other => Error::Io(std::io::Error::other(format!("{other:?}"))),
    }
}

pub fn load_system(path: &Path) -> Result<SampledSystem> {
    let side = sidecar_path(path);
    let text = fs::read_to_string(&side)?;
    let header: SystemHeader = serde_json::from_str(&text)
        .map_err(|e| parse_err(&side, e.line(), e.column(), e.to_string()))?;
    if header.schema_version != SCHEMA_VERSION {
        return Err(parse_err(
            &side,
            1,
            1,
            format!("unsupported schema_version `{}`", header.schema_version),
        ));
    }
    let expected = header_columns(&header);
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_path(path)
        .map_err(csv_io)?;
    let head = rdr.headers().map_err(csv_io)?.clone();
    if head.len() != expected.len() {
        return Err(parse_err(
            path,
            1,
            1,
            format!("header has {} columns, expected {}", head.len(), expected.len()),
        ));
    }
    let per_value = if header.field == Field::Complex { 2 } else { 1 };
    let mut points = Vec::with_capacity(header.m);
    let mut values = DMatrix::<C64>::zeros(header.n, header.m);
    let mut j = 0;
    for rec in rdr.records() {
        let rec = rec.map_err(csv_io)?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        if j >= header.m {
            return Err(parse_err(path, line, 1, format!("more than m = {} rows", header.m)));
        }
        if rec.len() != expected.len() {
            return Err(parse_err(
                path,
                line,
                rec.len().min(expected.len()) + 1,
                format!("row {j} has {} columns, expected {}", rec.len(), expected.len()),
            ));
        }
        let mut nums = Vec::with_capacity(rec.len());
        for (c, field) in rec.iter().enumerate() {
            let x = serde_dec::parse(field)
                .map_err(|msg| parse_err(path, line, c + 1, format!("row {j}: {msg}")))?;
            nums.push(x);
        }
        points.push(nums[..header.point_dim].to_vec());
        for i in 0..header.n {
            let k = header.point_dim + per_value * i;
            let im = if per_value == 2 { nums[k + 1] } else { 0.0 };
            values[(i, j)] = C64::new(nums[k], im);
        }
        j += 1;
    }
    if j != header.m {
        return Err(parse_err(path, j + 2, 1, format!("found {j} rows, expected m = {}", header.m)));
    }
    SampledSystem::new(values, points, header.weights, header.field)
}

/// How a certificate was produced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSettings {
    pub command: String,
    pub seed: u64,
    pub strategy: Strategy,
    pub budget: usize,
    #[serde(with = "crate::serde_dec::opt")]
    pub theta: Option<f64>,
    #[serde(with = "crate::serde_dec::opt")]
    pub delta: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateDocument {
    pub schema_version: String,
    /// Content hash of the system the certificate refers to.
    pub fingerprint: String,
    pub settings: RunSettings,
    /// Where the system came from (a descriptor or a path).
    pub source: String,
    pub certificate: DiscretizationCertificate,
}

impl CertificateDocument {
    pub fn new(certificate: DiscretizationCertificate, settings: RunSettings, source: String) -> Self {
        Self {
            schema_version: SCHEMA_VERSION.into(),
            fingerprint: certificate.system_fingerprint.clone(),
            settings,
            source,
            certificate,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }
}

pub fn save_certificate(doc: &CertificateDocument, path: &Path) -> Result<()> {
    fs::write(path, doc.to_json()?)?;
    Ok(())
}

pub fn load_certificate(path: &Path) -> Result<CertificateDocument> {
    let text = fs::read_to_string(path)?;
    let doc: CertificateDocument = serde_json::from_str(&text)
        .map_err(|e| parse_err(path, e.line(), e.column(), e.to_string()))?;
    if doc.schema_version != SCHEMA_VERSION {
        return Err(parse_err(
            path,
            1,
            1,
            format!("unsupported schema_version `{}`", doc.schema_version),
        ));
    }
    Ok(doc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::{make_system, SystemDescriptor};

    #[test]
    fn round_trip_exact() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("dft.csv");
        let s = make_system(&SystemDescriptor::Dft { n: 3, m: 10 }).unwrap();
        save_system(&s, &p).unwrap();
        assert_eq!(load_system(&p).unwrap(), s);
    }

    #[test]
    fn explicit_weights_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("w.csv");
        let v = DMatrix::from_element(1, 3, C64::new(1.0, 0.0));
        let s = SampledSystem::new(
            v,
            vec![vec![0.0, 1.0], vec![0.5, 0.25], vec![1.0, 0.1]],
            PointWeights::Explicit(vec![0.1, 0.2, 0.7]),
            Field::Real,
        )
        .unwrap();
        save_system(&s, &p).unwrap();
        assert_eq!(load_system(&p).unwrap(), s);
    }

    #[test]
    fn missing_column_names_row() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("w.csv");
        let s = make_system(&SystemDescriptor::Walsh { n: 2, m: 4 }).unwrap();
        save_system(&s, &p).unwrap();
        let text = fs::read_to_string(&p).unwrap();
        let mut lines: Vec<String> = text.lines().map(String::from).collect();
        let cut = lines[3].rfind(',').unwrap();
        lines[3].truncate(cut);
        fs::write(&p, lines.join("\n") + "\n").unwrap();
        let e = load_system(&p).unwrap_err();
        match e {
            Error::Parse { line, message, .. } => {
                assert_eq!(line, 4);
                assert!(message.contains("row 2"), "{message}");
            }
            other => panic!("{other}"),
        }
    }

    #[test]
    fn bad_number_has_column() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("w.csv");
        let s = make_system(&SystemDescriptor::Walsh { n: 2, m: 4 }).unwrap();
        save_system(&s, &p).unwrap();
        let text = fs::read_to_string(&p).unwrap().replacen("-1.0", "oops", 1);
        fs::write(&p, text).unwrap();
        assert!(matches!(load_system(&p), Err(Error::Parse { column: 3.., .. })));
    }
}
