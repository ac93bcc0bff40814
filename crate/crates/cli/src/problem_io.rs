//! Problem directories written by `qrk gen`.
//!
//! A directory holds `matrix`, `labels`, `truth` and `support` in one of two
//! formats, a `problem.toml` describing how they were generated, and a
//! `manifest.sha256` in `sha256sum` format covering all of them.
//!
//! Binary (`.bin`) layout, all little-endian:
//!
//! | offset | size | content |
//! |---|---|---|
//! | 0 | 8 | magic `QRKMAT01` (reals) or `QRKIDX01` (indices) |
//! | 8 | 8 | `u64` rows |
//! | 16 | 8 | `u64` cols (1 for vectors and indices) |
//! | 24 | 8·rows·cols | `f64` row-major, or `u64` indices |
//!
//! CSV (`.csv`) fallback: one matrix row per line, comma-separated, values in
//! shortest round-trip decimal form; vectors and indices one per line.

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use qrk_core::{Outcome, System};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const MATRIX_MAGIC: &[u8; 8] = b"QRKMAT01";
pub const INDEX_MAGIC: &[u8; 8] = b"QRKIDX01";
pub const MANIFEST: &str = "manifest.sha256";
pub const META: &str = "problem.toml";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FileFormat {
    Bin,
    Csv,
}

impl FileFormat {
    fn ext(self) -> &'static str {
        match self {
            Self::Bin => "bin",
            Self::Csv => "csv",
        }
    }
}

/// Contents of `problem.toml`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemMeta {
    pub kind: String,
    pub m: usize,
    pub n: usize,
    pub format: FileFormat,
    pub problem_seed: Option<u64>,
    pub corruption: String,
    pub beta: f64,
    pub corruption_seed: u64,
    pub corrupted_rows: usize,
}

pub fn encode_matrix(data: &[f64], rows: usize, cols: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(24 + 8 * data.len());
    out.extend_from_slice(MATRIX_MAGIC);
    out.extend_from_slice(&(rows as u64).to_le_bytes());
    out.extend_from_slice(&(cols as u64).to_le_bytes());
    for v in data {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn encode_indices(idx: &[usize]) -> Vec<u8> {
    let mut out = Vec::with_capacity(24 + 8 * idx.len());
    out.extend_from_slice(INDEX_MAGIC);
    out.extend_from_slice(&(idx.len() as u64).to_le_bytes());
    out.extend_from_slice(&1u64.to_le_bytes());
    for &i in idx {
        out.extend_from_slice(&(i as u64).to_le_bytes());
    }
    out
}

fn decode_header<'a>(bytes: &'a [u8], magic: &[u8; 8]) -> Result<(usize, usize, &'a [u8]), String> {
    if bytes.len() < 24 || &bytes[..8] != magic {
        return Err(format!("missing {} header", String::from_utf8_lossy(magic)));
    }
    let word = |at: usize| u64::from_le_bytes(bytes[at..at + 8].try_into().expect("8 bytes"));
    let (rows, cols) = (word(8) as usize, word(16) as usize);
    let body = &bytes[24..];
    if rows.checked_mul(cols).and_then(|c| c.checked_mul(8)) != Some(body.len()) {
        return Err(format!(
            "{rows}x{cols} header but {} data bytes",
            body.len()
        ));
    }
    Ok((rows, cols, body))
}

/// `(data, rows, cols)`.
pub fn decode_matrix(bytes: &[u8]) -> Result<(Vec<f64>, usize, usize), String> {
    let (rows, cols, body) = decode_header(bytes, MATRIX_MAGIC)?;
    let data = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    Ok((data, rows, cols))
}

pub fn decode_indices(bytes: &[u8]) -> Result<Vec<usize>, String> {
    let (_, cols, body) = decode_header(bytes, INDEX_MAGIC)?;
    if cols != 1 {
        return Err(format!("index file with {cols} columns"));
    }
    Ok(body
        .chunks_exact(8)
        .map(|c| u64::from_le_bytes(c.try_into().expect("8 bytes")) as usize)
        .collect())
}

fn csv_matrix(data: &[f64], cols: usize) -> Vec<u8> {
    let mut out = String::new();
    for row in data.chunks(cols.max(1)) {
        let line: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out.into_bytes()
}

fn parse_csv_matrix(text: &str) -> Result<(Vec<f64>, usize, usize), String> {
    let mut data = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for (i, line) in text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
    {
        let values = line
            .split(',')
            .map(|c| c.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| format!("line {}: {e}", i + 1))?;
        if *cols.get_or_insert(values.len()) != values.len() {
            return Err(format!("line {}: ragged row", i + 1));
        }
        data.extend(values);
        rows += 1;
    }
    Ok((data, rows, cols.unwrap_or(0)))
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex(&Sha256::digest(bytes))
}

/// Files for one corrupted problem, ready to write.
pub fn encode_problem(
    outcome: &Outcome,
    meta: &ProblemMeta,
) -> Result<Vec<(String, Vec<u8>)>, CliError> {
    let sys = &outcome.system;
    let ext = meta.format.ext();
    let mut files = match meta.format {
        FileFormat::Bin => vec![
            (
                format!("matrix.{ext}"),
                encode_matrix(sys.rows(), sys.m(), sys.n()),
            ),
            (
                format!("labels.{ext}"),
                encode_matrix(sys.labels(), sys.m(), 1),
            ),
            (
                format!("truth.{ext}"),
                encode_matrix(&outcome.truth, sys.n(), 1),
            ),
            (format!("support.{ext}"), encode_indices(&outcome.support)),
        ],
        FileFormat::Csv => {
            let support: String = outcome.support.iter().map(|i| format!("{i}\n")).collect();
            vec![
                (format!("matrix.{ext}"), csv_matrix(sys.rows(), sys.n())),
                (format!("labels.{ext}"), csv_matrix(sys.labels(), 1)),
                (format!("truth.{ext}"), csv_matrix(&outcome.truth, 1)),
                (format!("support.{ext}"), support.into_bytes()),
            ]
        }
    };
    let meta_text = toml::to_string(meta).map_err(|e| CliError::Numeric(e.to_string()))?;
    files.push((META.to_string(), meta_text.into_bytes()));
    Ok(files)
}

/// `sha256sum`-compatible manifest text.
pub fn manifest(files: &[(String, Vec<u8>)]) -> String {
    files
        .iter()
        .map(|(name, bytes)| format!("{}  {name}\n", sha256_hex(bytes)))
        .collect()
}

/// Writes the problem files and manifest; returns the manifest text.
pub fn write_problem(
    dir: &Path,
    outcome: &Outcome,
    meta: &ProblemMeta,
) -> Result<String, CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let files = encode_problem(outcome, meta)?;
    for (name, bytes) in &files {
        let path = dir.join(name);
        std::fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
    }
    let text = manifest(&files);
    let path = dir.join(MANIFEST);
    std::fs::write(&path, &text).map_err(|e| CliError::io(&path, e))?;
    Ok(text)
}

fn read(path: &Path) -> Result<Vec<u8>, CliError> {
    std::fs::read(path).map_err(|e| CliError::io(path, e))
}

fn verify_manifest(dir: &Path) -> Result<(), CliError> {
    let path = dir.join(MANIFEST);
    let text = String::from_utf8(read(&path)?).map_err(|e| CliError::io(&path, e))?;
    for line in text.lines().filter(|l| !l.is_empty()) {
        let (digest, name) = line
            .split_once("  ")
            .ok_or_else(|| CliError::io(&path, format!("malformed line {line:?}")))?;
        let file = dir.join(name);
        if sha256_hex(&read(&file)?) != digest {
            return Err(CliError::io(&file, "checksum does not match manifest"));
        }
    }
    Ok(())
}

/// Reads a directory written by [`write_problem`], verifying checksums.
pub fn read_problem(dir: &Path) -> Result<(Outcome, ProblemMeta), CliError> {
    verify_manifest(dir)?;
    let meta_path = dir.join(META);
    let meta_text =
        String::from_utf8(read(&meta_path)?).map_err(|e| CliError::io(&meta_path, e))?;
    let meta: ProblemMeta =
        toml::from_str(&meta_text).map_err(|e| CliError::io(&meta_path, e.message()))?;
    let ext = meta.format.ext();
    let path = |stem: &str| -> PathBuf { dir.join(format!("{stem}.{ext}")) };
    let load = |stem: &str| -> Result<(Vec<f64>, usize, usize), CliError> {
        let p = path(stem);
        let bytes = read(&p)?;
        match meta.format {
            FileFormat::Bin => decode_matrix(&bytes),
            FileFormat::Csv => parse_csv_matrix(&String::from_utf8_lossy(&bytes)),
        }
        .map_err(|e| CliError::io(&p, e))
    };
    let (rows, m, n) = load("matrix")?;
    let (labels, lm, _) = load("labels")?;
    let (truth, tn, _) = load("truth")?;
    let support_path = path("support");
    let support_bytes = read(&support_path)?;
    let support = match meta.format {
        FileFormat::Bin => decode_indices(&support_bytes),
        FileFormat::Csv => String::from_utf8_lossy(&support_bytes)
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| l.trim().parse::<usize>().map_err(|e| e.to_string()))
            .collect(),
    }
    .map_err(|e| CliError::io(&support_path, e))?;
    if lm != m || tn != n || support.iter().any(|&i| i >= m) {
        return Err(CliError::io(
            dir,
            format!("inconsistent shapes: matrix {m}x{n}, labels {lm}, truth {tn}"),
        ));
    }
    let system = System::from_raw(&rows, n, &labels)?;
    let clean_labels = system.apply(&truth);
    Ok((
        Outcome {
            system,
            clean_labels,
            truth,
            support,
        },
        meta,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn binary_matrix_round_trip(rows in 0usize..6, cols in 1usize..5, seed in any::<u64>()) {
            let mut rng = qrk_core::RngStream::new(seed);
            let data: Vec<f64> = (0..rows * cols).map(|_| rng.standard_normal() * 1e3).collect();
            let bytes = encode_matrix(&data, rows, cols);
            prop_assert_eq!(bytes.len(), 24 + 8 * rows * cols);
            prop_assert_eq!(decode_matrix(&bytes).unwrap(), (data.clone(), rows, cols));
            let (back, r, c) = parse_csv_matrix(std::str::from_utf8(&csv_matrix(&data, cols)).unwrap()).unwrap();
            prop_assert_eq!(back, data);
            prop_assert_eq!((r, c), (rows, if rows == 0 { 0 } else { cols }));
        }
    }

    #[test]
    fn header_is_little_endian() {
        let bytes = encode_matrix(&[1.0], 1, 1);
        assert_eq!(&bytes[..8], b"QRKMAT01");
        assert_eq!(&bytes[8..16], &[1, 0, 0, 0, 0, 0, 0, 0]);
        assert_eq!(&bytes[24..], &1.0f64.to_le_bytes());
        assert!(decode_matrix(&bytes[..30]).is_err());
        assert_eq!(
            decode_indices(&encode_indices(&[3, 1])).unwrap(),
            vec![3, 1]
        );
    }

    #[test]
    fn sha256_known_vector() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
