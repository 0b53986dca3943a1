//! On-disk formats.
//!
//! Snapshot: one ASCII header line
//! `MBIONS v1 <dx> <dv> <nx...> <nv...> <t>\n` (cells per spatial axis, then
//! per velocity axis) followed by `f` as little-endian f64 in phase-grid order.
//!
//! Diagnostics: CSV with a leading `#schema=1` comment, a header row and one
//! row per record; absent values are empty fields.

use std::fs;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use crate::diagnostics::DiagnosticsRecord;
use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::kinetics::{PhaseDistribution, Species};

pub const SNAPSHOT_MAGIC: &str = "MBIONS";
pub const SNAPSHOT_VERSION: &str = "v1";
pub const CSV_SCHEMA: &str = "#schema=1";

#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotHeader {
    pub n_space: Vec<usize>,
    pub n_velocity: Vec<usize>,
    pub t: f64,
}

pub fn encode_snapshot(f: &PhaseDistribution, t: f64) -> Vec<u8> {
    let dom = &f.domain;
    let dx = dom.space.dim();
    let dv = dom.velocity_dim();
    let mut header = format!("{SNAPSHOT_MAGIC} {SNAPSHOT_VERSION} {dx} {dv}");
    for n in &dom.space.shape {
        header.push_str(&format!(" {n}"));
    }
    for _ in 0..dv {
        header.push_str(&format!(" {}", dom.velocity.n));
    }
    header.push_str(&format!(" {t:e}\n"));
    let mut out = header.into_bytes();
    out.reserve(8 * f.values.len());
    for v in &f.values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_snapshot(bytes: &[u8]) -> Result<(SnapshotHeader, Vec<f64>)> {
    let bad = |m: &str| Error::Snapshot(m.to_string());
    let end = bytes
        .iter()
        .position(|b| *b == b'\n')
        .ok_or_else(|| bad("missing header line"))?;
    let header = std::str::from_utf8(&bytes[..end]).map_err(|_| bad("header is not UTF-8"))?;
    let tok: Vec<&str> = header.split_whitespace().collect();
    if tok.len() < 4 || tok[0] != SNAPSHOT_MAGIC || tok[1] != SNAPSHOT_VERSION {
        return Err(bad(&format!(
            "expected '{SNAPSHOT_MAGIC} {SNAPSHOT_VERSION} ...', got '{header}'"
        )));
    }
    let int = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| bad(&format!("bad integer '{s}'")))
    };
    let dx = int(tok[2])?;
    let dv = int(tok[3])?;
    if tok.len() != 5 + dx + dv {
        return Err(bad(&format!(
            "header has {} fields, expected {} for dx = {dx}, dv = {dv}",
            tok.len(),
            5 + dx + dv
        )));
    }
    let n_space = tok[4..4 + dx]
        .iter()
        .map(|s| int(s))
        .collect::<Result<Vec<_>>>()?;
    let n_velocity = tok[4 + dx..4 + dx + dv]
        .iter()
        .map(|s| int(s))
        .collect::<Result<Vec<_>>>()?;
    let t: f64 = tok[4 + dx + dv]
        .parse()
        .map_err(|_| bad(&format!("bad time '{}'", tok[4 + dx + dv])))?;
    let count: usize = n_space.iter().chain(&n_velocity).product();
    let data = &bytes[end + 1..];
    if data.len() != 8 * count {
        return Err(bad(&format!(
            "payload has {} bytes, expected {} ({count} values)",
            data.len(),
            8 * count
        )));
    }
    let values = data
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((
        SnapshotHeader {
            n_space,
            n_velocity,
            t,
        },
        values,
    ))
}

pub fn write_snapshot(path: &Path, f: &PhaseDistribution, t: f64) -> Result<()> {
    fs::write(path, encode_snapshot(f, t))?;
    Ok(())
}

/// Reads a snapshot and checks its shape against `domain`.
pub fn read_snapshot(
    path: &Path,
    domain: Arc<Domain>,
    species: Species,
) -> Result<(PhaseDistribution, f64)> {
    let bytes = fs::read(path)?;
    let (h, values) = decode_snapshot(&bytes)?;
    let expect_v = vec![domain.velocity.n; domain.velocity_dim()];
    if h.n_space != domain.space.shape || h.n_velocity != expect_v {
        return Err(Error::Snapshot(format!(
            "{}: grid {:?} x {:?} does not match the domain {:?} x {:?}",
            path.display(),
            h.n_space,
            h.n_velocity,
            domain.space.shape,
            expect_v
        )));
    }
    Ok((PhaseDistribution::new(domain, species, values)?, h.t))
}

fn csv_field(x: Option<f64>) -> String {
    x.map(|v| format!("{v:e}")).unwrap_or_default()
}

/// CSV writer with CRLF records behind a `#schema=1` line.
pub fn csv_writer<W: Write>(mut out: W) -> Result<csv::Writer<W>> {
    out.write_all(CSV_SCHEMA.as_bytes())?;
    out.write_all(b"\r\n")?;
    Ok(csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_writer(out))
}

pub fn diagnostics_csv(records: &[DiagnosticsRecord]) -> Result<String> {
    let mut w = csv_writer(Vec::new())?;
    w.write_record(DiagnosticsRecord::COLUMNS)?;
    for r in records {
        w.write_record(r.values().iter().map(|v| csv_field(*v)))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("CSV output is ASCII"))
}

pub fn write_diagnostics(path: &Path, records: &[DiagnosticsRecord]) -> Result<()> {
    fs::write(path, diagnostics_csv(records)?)?;
    Ok(())
}

/// Inverse of [`diagnostics_csv`]: one `Vec<Option<f64>>` per data row.
pub fn parse_diagnostics_csv(text: &str) -> Result<Vec<Vec<Option<f64>>>> {
    let body = text
        .strip_prefix(CSV_SCHEMA)
        .ok_or_else(|| Error::InvalidInput(format!("diagnostics must start with {CSV_SCHEMA}")))?;
    let mut reader = csv::Reader::from_reader(body.trim_start().as_bytes());
    let header = reader.headers()?.clone();
    if !header.iter().eq(DiagnosticsRecord::COLUMNS) {
        return Err(Error::InvalidInput(format!(
            "unexpected diagnostics header {header:?}"
        )));
    }
    reader
        .records()
        .map(|row| {
            row?.iter()
                .map(|v| {
                    if v.is_empty() {
                        Ok(None)
                    } else {
                        v.parse()
                            .map(Some)
                            .map_err(|_| Error::InvalidInput(format!("bad number '{v}'")))
                    }
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::DomainSpec;

    #[test]
    fn snapshot_round_trip_is_bit_exact() {
        let dom = Domain::new(DomainSpec::periodic_1d(2.0, 8, 3.0, 6)).unwrap();
        let f = PhaseDistribution::from_fn(dom.clone(), Species::Ion, |x, v| {
            (1.0 + x[0]) * (-v[0] * v[0]).exp() / 3.0
        })
        .unwrap();
        let bytes = encode_snapshot(&f, 0.1);
        assert!(bytes.starts_with(b"MBIONS v1 1 1 8 6 1e-1\n"));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.bin");
        write_snapshot(&path, &f, 0.1).unwrap();
        let (g, t) = read_snapshot(&path, dom, Species::Ion).unwrap();
        assert_eq!(t, 0.1);
        assert!(f
            .values
            .iter()
            .zip(&g.values)
            .all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn snapshot_shape_mismatch_is_an_error() {
        let dom = Domain::new(DomainSpec::periodic_1d(2.0, 8, 3.0, 6)).unwrap();
        let f = PhaseDistribution::zeros(dom, Species::Ion);
        let mut bytes = encode_snapshot(&f, 0.0);
        bytes.pop();
        assert!(decode_snapshot(&bytes).is_err());
        let other = Domain::new(DomainSpec::periodic_1d(2.0, 8, 3.0, 8)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.bin");
        write_snapshot(&path, &f, 0.0).unwrap();
        assert!(read_snapshot(&path, other, Species::Ion).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let r = DiagnosticsRecord {
            t: 0.5,
            mass_ion: std::f64::consts::TAU,
            mass_electron: None,
            kinetic_ion: 1.0 / 3.0,
            kinetic_electron: 2.0,
            field_energy: 1e-300,
            total_energy: 3.0,
            beta: Some(1.5),
            beta_invariant: Some(-0.1),
            entropy_ion: 0.0,
            entropy_electron: None,
            relative_entropy: None,
            arnold_functional: None,
            cumulative_mass_loss: 0.0,
            max_speed_bound: 0.25,
        };
        let text = diagnostics_csv(&[r.clone(), r.clone()]).unwrap();
        assert!(text.starts_with("#schema=1\r\nt,mass_ion,"));
        let rows = parse_diagnostics_csv(&text).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0], r.values().to_vec());
    }
}
