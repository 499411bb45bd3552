//! The `.bsd` container: dictionaries and planted instances on disk.
//!
//! Layout (in order):
//!
//! | part    | content                                                      |
//! |---------|--------------------------------------------------------------|
//! | magic   | ASCII line `BSD1`                                            |
//! | header  | one JSON line: D, n, sizes, dims, dtype, sections, checksum  |
//! | payload | raw little-endian float64, column-major, per named section   |
//!
//! Sections for a dictionary: `matrix` (D×N) and `bases` (D×Σd_i, the
//! per-block orthonormal bases concatenated). An instance appends `signal`
//! (D×1) and `truth` (N×1), plus support/k/seed fields in the header.
//! The checksum is SHA-256 over the payload bytes; round-trips are bit-exact
//! because floats are stored in their native binary encoding.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::{BlockSparseCoefficients, Dictionary, PlantedInstance};

const MAGIC: &str = "BSD1";
const DTYPE: &str = "f64le";

#[derive(Debug, Serialize, Deserialize)]
struct Section {
    name: String,
    rows: usize,
    cols: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    kind: String,
    #[serde(rename = "D")]
    ambient_dim: usize,
    n: usize,
    sizes: Vec<usize>,
    dims: Vec<usize>,
    dtype: String,
    sections: Vec<Section>,
    checksum: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    support: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
}

/// Writes `bytes` to `path` atomically: a temp file in the same directory is
/// fully written, then renamed over the target.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let mut tmp = match dir {
        Some(d) => {
            fs::create_dir_all(d)?;
            tempfile::NamedTempFile::new_in(d)?
        }
        None => tempfile::NamedTempFile::new_in(".")?,
    };
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

fn floats_to_le_bytes(out: &mut Vec<u8>, data: &[f64]) {
    out.reserve(data.len() * 8);
    for v in data {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

fn le_bytes_to_floats(bytes: &[u8]) -> Vec<f64> {
    bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect()
}

fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut hex = String::with_capacity(64);
    for b in digest {
        hex.push_str(&format!("{b:02x}"));
    }
    hex
}

fn malformed(path: &Path, reason: impl Into<String>) -> Error {
    Error::MalformedFile {
        path: path.display().to_string(),
        reason: reason.into(),
    }
}

fn header_and_payload(
    dict: &Dictionary,
    extra: Option<(&DVector<f64>, &BlockSparseCoefficients, &[usize], usize, u64)>,
) -> (Header, Vec<u8>) {
    let dd = dict.ambient_dim();
    let total_dim: usize = dict.subspace_dims().iter().sum();
    let mut sections = vec![
        Section {
            name: "matrix".into(),
            rows: dd,
            cols: dict.total_cols(),
        },
        Section {
            name: "bases".into(),
            rows: dd,
            cols: total_dim,
        },
    ];
    let mut payload = Vec::new();
    floats_to_le_bytes(&mut payload, dict.matrix().as_slice());
    for i in 0..dict.n_blocks() {
        floats_to_le_bytes(&mut payload, dict.basis(i).as_slice());
    }

    let (kind, k, support, seed) = match extra {
        None => ("dictionary".to_string(), None, None, None),
        Some((signal, truth, support, k, seed)) => {
            sections.push(Section {
                name: "signal".into(),
                rows: dd,
                cols: 1,
            });
            sections.push(Section {
                name: "truth".into(),
                rows: dict.total_cols(),
                cols: 1,
            });
            floats_to_le_bytes(&mut payload, signal.as_slice());
            floats_to_le_bytes(&mut payload, truth.values().as_slice());
            (
                "instance".to_string(),
                Some(k),
                Some(support.to_vec()),
                Some(seed),
            )
        }
    };

    let header = Header {
        kind,
        ambient_dim: dd,
        n: dict.n_blocks(),
        sizes: dict.structure().sizes().to_vec(),
        dims: dict.subspace_dims(),
        dtype: DTYPE.into(),
        sections,
        checksum: sha256_hex(&payload),
        k,
        support,
        seed,
    };
    (header, payload)
}

fn encode(header: &Header, payload: &[u8]) -> Result<Vec<u8>> {
    let mut bytes = Vec::with_capacity(payload.len() + 512);
    bytes.extend_from_slice(MAGIC.as_bytes());
    bytes.push(b'\n');
    serde_json::to_writer(&mut bytes, header)?;
    bytes.push(b'\n');
    bytes.extend_from_slice(payload);
    Ok(bytes)
}

/// Serializes a dictionary to `path` (atomically).
pub fn save_dictionary(dict: &Dictionary, path: &Path) -> Result<()> {
    let (header, payload) = header_and_payload(dict, None);
    atomic_write(path, &encode(&header, &payload)?)
}

/// Serializes a planted instance to `path` (atomically).
pub fn save_instance(inst: &PlantedInstance, path: &Path) -> Result<()> {
    let (header, payload) = header_and_payload(
        inst.dictionary(),
        Some((
            inst.signal(),
            inst.truth(),
            inst.support(),
            inst.k(),
            inst.seed(),
        )),
    );
    atomic_write(path, &encode(&header, &payload)?)
}

struct Parsed {
    header: Header,
    payload: Vec<u8>,
}

fn parse_file(path: &Path) -> Result<Parsed> {
    let bytes = fs::read(path)?;
    let magic_end = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| malformed(path, "missing magic line"))?;
    if &bytes[..magic_end] != MAGIC.as_bytes() {
        return Err(malformed(path, "bad magic (not a .bsd file)"));
    }
    let rest = &bytes[magic_end + 1..];
    let header_end = rest
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| malformed(path, "missing header line"))?;
    let header: Header = serde_json::from_slice(&rest[..header_end])
        .map_err(|e| malformed(path, format!("bad header JSON: {e}")))?;
    if header.dtype != DTYPE {
        return Err(malformed(
            path,
            format!("unsupported dtype '{}'", header.dtype),
        ));
    }
    let payload = rest[header_end + 1..].to_vec();
    let expected: usize = header.sections.iter().map(|s| s.rows * s.cols * 8).sum();
    if payload.len() != expected {
        return Err(malformed(
            path,
            format!("payload holds {} bytes, sections need {expected}", payload.len()),
        ));
    }
    if sha256_hex(&payload) != header.checksum {
        return Err(Error::ChecksumMismatch {
            path: path.display().to_string(),
        });
    }
    Ok(Parsed { header, payload })
}

fn section_floats<'a>(parsed: &'a Parsed, name: &str, path: &Path) -> Result<(&'a Section, Vec<f64>)> {
    let mut offset = 0usize;
    for s in &parsed.header.sections {
        let len = s.rows * s.cols * 8;
        if s.name == name {
            return Ok((s, le_bytes_to_floats(&parsed.payload[offset..offset + len])));
        }
        offset += len;
    }
    Err(malformed(path, format!("missing section '{name}'")))
}

fn dictionary_from_parsed(parsed: &Parsed, path: &Path) -> Result<Dictionary> {
    let h = &parsed.header;
    let n_cols: usize = h.sizes.iter().sum();
    if h.sizes.len() != h.n || h.dims.len() != h.n {
        return Err(malformed(path, "sizes/dims length disagrees with n"));
    }
    let (msec, mdata) = section_floats(parsed, "matrix", path)?;
    if msec.rows != h.ambient_dim || msec.cols != n_cols {
        return Err(Error::DimensionMismatch(format!(
            "matrix section is {}×{} but header declares D = {}, Σ sizes = {}",
            msec.rows, msec.cols, h.ambient_dim, n_cols
        )));
    }
    let matrix = DMatrix::from_column_slice(msec.rows, msec.cols, &mdata);

    let dim_total: usize = h.dims.iter().sum();
    let (bsec, bdata) = section_floats(parsed, "bases", path)?;
    if bsec.rows != h.ambient_dim || bsec.cols != dim_total {
        return Err(Error::DimensionMismatch(format!(
            "bases section is {}×{} but header declares D = {}, Σ dims = {}",
            bsec.rows, bsec.cols, h.ambient_dim, dim_total
        )));
    }
    let stacked = DMatrix::from_column_slice(bsec.rows, bsec.cols, &bdata);
    let mut bases = Vec::with_capacity(h.n);
    let mut col = 0usize;
    for &d_i in &h.dims {
        bases.push(stacked.columns(col, d_i).clone_owned());
        col += d_i;
    }

    let structure = crate::model::BlockStructure::new(h.sizes.clone())?;
    Dictionary::new(matrix, structure, bases)
}

/// Reads a dictionary from a `.bsd` file, verifying checksum and invariants.
pub fn load_dictionary(path: &Path) -> Result<Dictionary> {
    let parsed = parse_file(path)?;
    if parsed.header.kind != "dictionary" {
        return Err(malformed(
            path,
            format!("expected kind 'dictionary', found '{}'", parsed.header.kind),
        ));
    }
    dictionary_from_parsed(&parsed, path)
}

/// Reads a planted instance from a `.bsd` file.
pub fn load_instance(path: &Path) -> Result<PlantedInstance> {
    let parsed = parse_file(path)?;
    if parsed.header.kind != "instance" {
        return Err(malformed(
            path,
            format!("expected kind 'instance', found '{}'", parsed.header.kind),
        ));
    }
    let dict = dictionary_from_parsed(&parsed, path)?;
    let (_, signal) = section_floats(&parsed, "signal", path)?;
    let (_, truth) = section_floats(&parsed, "truth", path)?;
    let support = parsed
        .header
        .support
        .clone()
        .ok_or_else(|| malformed(path, "instance header lacks support"))?;
    let k = parsed
        .header
        .k
        .ok_or_else(|| malformed(path, "instance header lacks k"))?;
    let seed = parsed
        .header
        .seed
        .ok_or_else(|| malformed(path, "instance header lacks seed"))?;
    let truth = BlockSparseCoefficients::new(
        DVector::from_vec(truth),
        dict.structure().clone(),
    )?;
    PlantedInstance::new(dict, DVector::from_vec(signal), truth, support, k, seed)
}

impl Dictionary {
    /// See [`save_dictionary`].
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        save_dictionary(self, path.as_ref())
    }

    /// See [`load_dictionary`].
    pub fn load(path: impl AsRef<Path>) -> Result<Dictionary> {
        load_dictionary(path.as_ref())
    }
}

impl PlantedInstance {
    /// See [`save_instance`].
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        save_instance(self, path.as_ref())
    }

    /// See [`load_instance`].
    pub fn load(path: impl AsRef<Path>) -> Result<PlantedInstance> {
        load_instance(path.as_ref())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{generate_dictionary, plant_signal};

    #[test]
    fn dictionary_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("dict.bsd");
        let dict = generate_dictionary(12, 4, 2, 3, 17).unwrap();
        dict.save(&path).unwrap();
        let loaded = Dictionary::load(&path).unwrap();
        assert_eq!(dict.matrix().as_slice(), loaded.matrix().as_slice());
        assert_eq!(dict.structure(), loaded.structure());
        for i in 0..dict.n_blocks() {
            assert_eq!(dict.basis(i).as_slice(), loaded.basis(i).as_slice());
        }
    }

    #[test]
    fn instance_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("inst.bsd");
        let dict = generate_dictionary(12, 4, 2, 3, 18).unwrap();
        let inst = plant_signal(&dict, 2, 99).unwrap();
        inst.save(&path).unwrap();
        let loaded = PlantedInstance::load(&path).unwrap();
        assert_eq!(inst.signal().as_slice(), loaded.signal().as_slice());
        assert_eq!(
            inst.truth().values().as_slice(),
            loaded.truth().values().as_slice()
        );
        assert_eq!(inst.support(), loaded.support());
        assert_eq!(inst.seed(), loaded.seed());
    }

    #[test]
    fn truncated_payload_is_malformed() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("dict.bsd");
        let dict = generate_dictionary(10, 3, 2, 2, 5).unwrap();
        dict.save(&path).unwrap();
        let mut bytes = fs::read(&path).unwrap();
        bytes.truncate(bytes.len() - 16);
        fs::write(&path, &bytes).unwrap();
        assert!(matches!(
            Dictionary::load(&path),
            Err(Error::MalformedFile { .. })
        ));
    }

    #[test]
    fn corrupted_payload_fails_checksum() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("dict.bsd");
        let dict = generate_dictionary(10, 3, 2, 2, 6).unwrap();
        dict.save(&path).unwrap();
        let mut bytes = fs::read(&path).unwrap();
        let last = bytes.len() - 1;
        bytes[last] ^= 0xFF;
        fs::write(&path, &bytes).unwrap();
        assert!(matches!(
            Dictionary::load(&path),
            Err(Error::ChecksumMismatch { .. })
        ));
    }

    #[test]
    fn header_size_mismatch_is_dimension_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("dict.bsd");
        let dict = generate_dictionary(10, 3, 2, 2, 7).unwrap();
        dict.save(&path).unwrap();
        // Tamper with the declared sizes so Σ m_i disagrees with the matrix
        // section (same byte length keeps the header parseable).
        let mut bytes = fs::read(&path).unwrap();
        let needle = b"\"sizes\":[2,2,2]".as_slice();
        let pos = bytes
            .windows(needle.len())
            .position(|w| w == needle)
            .unwrap();
        bytes[pos..pos + needle.len()].copy_from_slice(b"\"sizes\":[2,2,4]");
        fs::write(&path, &bytes).unwrap();
        assert!(Dictionary::load(&path).is_err());
    }

    #[test]
    fn wrong_magic_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("not.bsd");
        fs::write(&path, b"NOPE\n{}\n").unwrap();
        assert!(matches!(
            Dictionary::load(&path),
            Err(Error::MalformedFile { .. })
        ));
    }
}
