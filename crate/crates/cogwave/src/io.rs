//! On-disk formats.
//!
//! Tables are CSV with a header row; floats use the shortest text that
//! parses back to the same `f64`, so a file written twice from the same
//! values is byte-identical. Masks and reports are JSON.

use std::fs;
use std::path::Path;

use cogwave_core::{band_to_bins, PhaseAlphabet, SequenceSet, SpectralMask, StopBand};
use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

fn show(path: &Path) -> String {
    path.display().to_string()
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|source| Error::Io { path: show(dir), source })?;
    }
    fs::write(path, bytes).map_err(|source| Error::Io { path: show(path), source })
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io { path: show(path), source })
}

/// Write `rows` as CSV; the header comes from the record's field names.
pub fn write_csv<R: Serialize>(path: &Path, rows: impl IntoIterator<Item = R>) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row).map_err(|e| Error::format(show(path), e))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::format(show(path), e))?;
    write_bytes(path, &bytes)
}

pub fn read_csv<R: DeserializeOwned>(path: &Path) -> Result<Vec<R>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::format(show(path), e))?;
    r.deserialize()
        .enumerate()
        .map(|(i, row)| row.map_err(|e| Error::format(show(path), format!("row {}: {e}", i + 1))))
        .collect()
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| Error::format(show(path), e))?;
    bytes.push(b'\n');
    write_bytes(path, &bytes)
}

/// Parse JSON, reporting the field path of the first schema violation.
pub fn parse_json<T: DeserializeOwned>(text: &str, origin: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        Error::format(origin, format!("at `{path}`: {}", e.into_inner()))
    })
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    parse_json(&read_text(path)?, &show(path))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceRecord {
    pub m: usize,
    pub n: usize,
    pub re: f64,
    pub im: f64,
    /// Grid index for PSK sets.
    pub phase_index: Option<u32>,
    /// PSK alphabet size; empty for continuous phase.
    pub levels: Option<u32>,
}

pub fn write_sequences(path: &Path, set: &SequenceSet) -> Result<()> {
    let levels = set.alphabet().levels();
    write_csv(
        path,
        (0..set.m()).flat_map(|m| {
            (0..set.n()).map(move |n| {
                let z = set.get(m, n);
                SequenceRecord {
                    m,
                    n,
                    re: z.re,
                    im: z.im,
                    phase_index: set.phase_index(m, n),
                    levels,
                }
            })
        }),
    )
}

/// Load a set written by [`write_sequences`]; entries must be unimodular
/// and, for PSK sets, consistent with their indices.
pub fn read_sequences(path: &Path) -> Result<SequenceSet> {
    let rows: Vec<SequenceRecord> = read_csv(path)?;
    let bad = |reason: String| Error::format(show(path), reason);
    if rows.is_empty() {
        return Err(bad("no entries".into()));
    }
    let m = rows.iter().map(|r| r.m).max().unwrap_or(0) + 1;
    let n = rows.iter().map(|r| r.n).max().unwrap_or(0) + 1;
    if rows.len() != m * n {
        return Err(bad(format!("{} rows for a {m}x{n} set", rows.len())));
    }
    let levels = rows[0].levels;
    let mut entries = vec![None; m * n];
    let mut indices = vec![0u32; m * n];
    for r in &rows {
        if r.levels != levels {
            return Err(bad(format!("entry ({}, {}) changes the alphabet", r.m, r.n)));
        }
        let slot = &mut entries[r.m * n + r.n];
        if slot.is_some() {
            return Err(bad(format!("entry ({}, {}) repeated", r.m, r.n)));
        }
        *slot = Some(Complex64::new(r.re, r.im));
        if levels.is_some() {
            indices[r.m * n + r.n] = r
                .phase_index
                .ok_or_else(|| bad(format!("entry ({}, {}) lacks a phase index", r.m, r.n)))?;
        }
    }
    let entries: Vec<Complex64> = entries.into_iter().map(|e| e.expect("every slot counted")).collect();
    match levels {
        None => Ok(SequenceSet::checked(m, n, PhaseAlphabet::Continuous, entries)?),
        Some(l) => {
            let set = SequenceSet::from_phase_indices(m, n, l, indices)?;
            if let Some(i) = set.entries().iter().zip(&entries).position(|(a, b)| (a - b).norm() > 1e-9) {
                return Err(bad(format!("entry ({}, {}) disagrees with its phase index", i / n, i % n)));
            }
            Ok(set)
        }
    }
}

/// Spectral mask as exchanged between `sense`, `design` and `evaluate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaskFile {
    pub n: usize,
    /// Normalized `[lo, hi]` stopbands on `[0, 1]`.
    pub stopbands: Vec<[f64; 2]>,
    /// Bins the stopbands cover.
    pub undesired: Vec<usize>,
    /// No desired bins remain.
    pub degenerate: bool,
}

impl MaskFile {
    pub fn from_mask(mask: &SpectralMask) -> Self {
        Self {
            n: mask.n(),
            stopbands: mask.stopbands().iter().map(|s| [s.lo, s.hi]).collect(),
            undesired: mask.undesired().to_vec(),
            degenerate: mask.is_degenerate(),
        }
    }

    pub fn stopbands(&self) -> Result<Vec<StopBand>> {
        Ok(self
            .stopbands
            .iter()
            .map(|&[lo, hi]| StopBand::new(lo, hi))
            .collect::<std::result::Result<_, _>>()?)
    }

    /// Rebuild the mask and check the stored bins against it.
    pub fn to_mask(&self, origin: &str) -> Result<SpectralMask> {
        let mask = band_to_bins(&self.stopbands()?, self.n)?;
        if mask.undesired() != self.undesired.as_slice() {
            return Err(Error::format(origin, "undesired bins do not match the stopbands"));
        }
        Ok(mask)
    }

    pub fn to_json(&self) -> Vec<u8> {
        let mut bytes = serde_json::to_vec_pretty(self).expect("mask serializes");
        bytes.push(b'\n');
        bytes
    }
}

pub fn write_mask(path: &Path, mask: &SpectralMask) -> Result<String> {
    let bytes = MaskFile::from_mask(mask).to_json();
    write_bytes(path, &bytes)?;
    Ok(sha256_hex(&bytes))
}

pub fn read_mask(path: &Path) -> Result<SpectralMask> {
    let file: MaskFile = read_json(path)?;
    file.to_mask(&show(path))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub sweep: usize,
    pub g: f64,
    pub g_s: f64,
    pub g_c: f64,
    /// Empty for the initial point.
    pub delta_fro: Option<f64>,
}

pub fn write_trace(path: &Path, result: &cogwave_core::DesignResult) -> Result<()> {
    write_csv(
        path,
        result.component_trace.iter().enumerate().map(|(i, c)| TraceRecord {
            sweep: i,
            g: c.g,
            g_s: c.g_s,
            g_c: c.g_c,
            delta_fro: i.checked_sub(1).map(|j| result.delta_trace[j]),
        }),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsdRecord {
    pub bin: usize,
    pub freq_norm: f64,
    pub db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationRecord {
    pub lag: isize,
    pub abs_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RangeDopplerRecord {
    pub range_cell: usize,
    pub doppler_bin: usize,
    pub mag_db: f64,
}

pub fn write_power_grid(path: &Path, grid: &crate::sim::PowerGrid) -> Result<()> {
    write_csv(
        path,
        (0..grid.ranges).flat_map(|r| {
            (0..grid.dopplers).map(move |d| RangeDopplerRecord {
                range_cell: r,
                doppler_bin: d,
                mag_db: 10.0 * grid.get(r, d).log10(),
            })
        }),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRecord {
    pub trial: usize,
    pub metric: String,
    pub value_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub re: f64,
    pub im: f64,
}

pub fn read_signal(path: &Path) -> Result<Vec<Complex64>> {
    Ok(read_csv::<SampleRecord>(path)?
        .into_iter()
        .map(|s| Complex64::new(s.re, s.im))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use cogwave_core::{random_phase_set, RngSpec};

    #[test]
    fn sequences_survive_a_file_exactly() {
        let dir = tempfile::tempdir().unwrap();
        for alphabet in [PhaseAlphabet::Continuous, PhaseAlphabet::Discrete { levels: 16 }] {
            let set = random_phase_set(3, 20, alphabet, RngSpec::new(5, 0)).unwrap();
            let path = dir.path().join("s.csv");
            write_sequences(&path, &set).unwrap();
            assert_eq!(read_sequences(&path).unwrap(), set);
        }
    }

    #[test]
    fn malformed_sequence_files_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        for text in [
            "m,n,re,im,phase_index,levels\n0,0,1,0,,\n0,2,1,0,,\n",
            "m,n,re,im,phase_index,levels\n0,0,2,0,,\n",
            "m,n,re,im,phase_index,levels\n0,0,1,zero,,\n",
            "m,n,re,im,phase_index,levels\n0,0,1,0,1,4\n",
        ] {
            fs::write(&path, text).unwrap();
            assert!(read_sequences(&path).is_err(), "{text}");
        }
    }

    #[test]
    fn mask_file_checks_its_bins() {
        let mask = band_to_bins(&[StopBand::new(0.1, 0.2).unwrap()], 50).unwrap();
        let mut file = MaskFile::from_mask(&mask);
        assert_eq!(file.to_mask("m").unwrap(), mask);
        file.undesired.pop();
        assert!(file.to_mask("m").is_err());
    }

    #[test]
    fn json_errors_name_the_field() {
        #[derive(Debug, Deserialize)]
        #[allow(dead_code)]
        struct Inner {
            theta: f64,
        }
        #[derive(Debug, Deserialize)]
        #[allow(dead_code)]
        struct Outer {
            design: Inner,
        }
        let err = parse_json::<Outer>(r#"{"design": {"theta": "high"}}"#, "cfg").unwrap_err();
        assert!(err.to_string().contains("design.theta"), "{err}");
    }
}
