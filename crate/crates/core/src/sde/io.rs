//! CSV and binary layouts for trajectories and ensembles.
//!
//! Binary layout (little-endian): magic `STABENS1`, `u32` version, 32-byte SHA-256
//! of the parameter block, `u64` seed, `u64` record count, then records of four
//! `f64`: `path_id, t, x, y`.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::scheme::{Ensemble, Trajectory};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"STABENS1";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Record {
    pub path_id: u64,
    pub t: f64,
    pub x: f64,
    pub y: f64,
}

pub fn trajectory_records(path_id: u64, traj: &Trajectory) -> Vec<Record> {
    traj.times
        .iter()
        .zip(&traj.states)
        .map(|(&t, s)| Record { path_id, t, x: s.x, y: s.y })
        .collect()
}

pub fn ensemble_records(ensembles: &[Ensemble]) -> Vec<Record> {
    ensembles
        .iter()
        .flat_map(|e| {
            e.states
                .iter()
                .enumerate()
                .map(move |(j, s)| Record { path_id: j as u64, t: e.t, x: s.x, y: s.y })
        })
        .collect()
}

/// Full-precision float formatting shared by every CSV writer.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_csv<W: Write>(out: W, records: &[Record]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["path_id", "t", "x", "y"])?;
    for r in records {
        w.write_record([r.path_id.to_string(), fmt_f64(r.t), fmt_f64(r.x), fmt_f64(r.y)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<Record>> {
    let mut r = csv::Reader::from_reader(input);
    let mut out = vec![];
    for row in r.records() {
        let row = row?;
        let field = |i: usize| -> Result<&str> {
            row.get(i).ok_or_else(|| Error::Input(format!("CSV row has fewer than {} fields", i + 1)))
        };
        let num = |i: usize| -> Result<f64> {
            field(i)?.trim().parse::<f64>().map_err(|e| Error::Input(format!("bad number in CSV: {e}")))
        };
        out.push(Record {
            path_id: field(0)?.trim().parse().map_err(|e| Error::Input(format!("bad path_id: {e}")))?,
            t: num(1)?,
            x: num(2)?,
            y: num(3)?,
        });
    }
    Ok(out)
}

/// SHA-256 of the canonical JSON form of `params`.
pub fn params_hash<T: Serialize>(params: &T) -> Result<[u8; 32]> {
    let bytes = serde_json::to_vec(params)?;
    Ok(Sha256::digest(&bytes).into())
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct BinaryEnsemble {
    pub params_hash: [u8; 32],
    pub seed: u64,
    pub records: Vec<Record>,
}

pub fn encode_binary(params_hash: [u8; 32], seed: u64, records: &[Record]) -> Vec<u8> {
    let mut buf = Vec::with_capacity(60 + 32 * records.len());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    buf.extend_from_slice(&params_hash);
    buf.extend_from_slice(&seed.to_le_bytes());
    buf.extend_from_slice(&(records.len() as u64).to_le_bytes());
    for r in records {
        for v in [r.path_id as f64, r.t, r.x, r.y] {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    buf
}

pub fn decode_binary(bytes: &[u8]) -> Result<BinaryEnsemble> {
    let bad = |what: &str| Error::Input(format!("malformed ensemble file: {what}"));
    if bytes.len() < 60 || &bytes[..8] != MAGIC {
        return Err(bad("missing magic"));
    }
    let u64_at = |o: usize| u64::from_le_bytes(bytes[o..o + 8].try_into().expect("8 bytes"));
    let version = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes"));
    if version != FORMAT_VERSION {
        return Err(bad(&format!("unsupported version {version}")));
    }
    let params_hash: [u8; 32] = bytes[12..44].try_into().expect("32 bytes");
    let seed = u64_at(44);
    let count = u64_at(52) as usize;
    if bytes.len() != 60 + 32 * count {
        return Err(bad("length does not match record count"));
    }
    let f = |o: usize| f64::from_bits(u64_at(o));
    let records = (0..count)
        .map(|i| {
            let o = 60 + 32 * i;
            Record { path_id: f(o) as u64, t: f(o + 8), x: f(o + 16), y: f(o + 24) }
        })
        .collect();
    Ok(BinaryEnsemble { params_hash, seed, records })
}

/// Writes `bytes` to a temporary sibling and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path.file_name().ok_or_else(|| Error::Input(format!("not a file path: {}", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })?;
    Ok(())
}
