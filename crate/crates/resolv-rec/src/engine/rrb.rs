//! Single-file `.rrb` bundle archive: a JSON manifest followed by named
//! little-endian f64 sections, everything CRC64-checksummed.
//!
//! Layout:
//! ```text
//! magic "RRB\0" | u32 LE format version | u64 LE manifest length
//! manifest JSON | u64 LE manifest CRC64 | section data in manifest order
//! ```
//! The manifest is the bundle itself with every large float matrix stripped;
//! the matrices travel as raw binary sections for bit-exact round trips.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ModelBundle;
use crate::error::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;
const MAGIC: &[u8; 4] = b"RRB\0";

/// CRC-64/XZ (reflected ECMA-182 polynomial).
pub fn crc64(data: &[u8]) -> u64 {
    const POLY: u64 = 0xC96C_5795_D787_0F42;
    let mut crc = !0u64;
    for &byte in data {
        crc ^= byte as u64;
        for _ in 0..8 {
            crc = if crc & 1 == 1 {
                (crc >> 1) ^ POLY
            } else {
                crc >> 1
            };
        }
    }
    !crc
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SectionMeta {
    name: String,
    rows: usize,
    cols: usize,
    crc64: u64,
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    format_version: u32,
    bundle: ModelBundle,
    sections: Vec<SectionMeta>,
}

struct Section {
    name: String,
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

fn take_matrix(name: &str, matrix: &mut Vec<Vec<f64>>, out: &mut Vec<Section>) {
    let rows = matrix.len();
    let cols = matrix.first().map_or(0, Vec::len);
    let data = matrix.iter().flatten().copied().collect();
    matrix.clear();
    out.push(Section {
        name: name.to_string(),
        rows,
        cols,
        data,
    });
}

fn take_vector(name: &str, vector: &mut Vec<f64>, out: &mut Vec<Section>) {
    let data = std::mem::take(vector);
    out.push(Section {
        name: name.to_string(),
        rows: 1,
        cols: data.len(),
        data,
    });
}

fn restore_matrix(section: &Section) -> Vec<Vec<f64>> {
    if section.cols == 0 {
        return vec![Vec::new(); section.rows];
    }
    section
        .data
        .chunks(section.cols)
        .map(<[f64]>::to_vec)
        .collect()
}

/// Splits the bundle into a stripped manifest copy plus its float sections,
/// in a fixed section order.
fn strip(bundle: &ModelBundle) -> (ModelBundle, Vec<Section>) {
    let mut stripped = bundle.clone();
    let mut sections = Vec::new();
    for (i, layer) in stripped.mlp.layers.iter_mut().enumerate() {
        take_matrix(&format!("mlp.w{i}"), &mut layer.weights, &mut sections);
        take_vector(&format!("mlp.b{i}"), &mut layer.bias, &mut sections);
    }
    {
        let rows = stripped.prototypes.prototypes.len();
        let cols = stripped
            .prototypes
            .prototypes
            .values()
            .next()
            .map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows * cols);
        for v in stripped.prototypes.prototypes.values_mut() {
            data.extend(v.drain(..));
        }
        sections.push(Section {
            name: "prototypes".into(),
            rows,
            cols,
            data,
        });
    }
    take_matrix(
        "indexembed.issues",
        &mut stripped.indexembed.issue_embeddings,
        &mut sections,
    );
    take_matrix(
        "indexembed.resolutions",
        &mut stripped.indexembed.resolution_embeddings,
        &mut sections,
    );
    take_matrix("logreg.w", &mut stripped.logreg.weights, &mut sections);
    take_vector("logreg.b", &mut stripped.logreg.bias, &mut sections);
    {
        let rows = stripped.train_embeddings.len();
        let cols = stripped
            .train_embeddings
            .first()
            .map_or(0, |(_, v)| v.len());
        let mut data = Vec::with_capacity(rows * cols);
        for (_, v) in &mut stripped.train_embeddings {
            data.extend(v.drain(..));
        }
        sections.push(Section {
            name: "train.embeddings".into(),
            rows,
            cols,
            data,
        });
    }
    take_vector("drift.baseline", &mut stripped.drift_baseline, &mut sections);
    {
        let rows = stripped.word_vectors.word_vectors.len();
        let cols = stripped
            .word_vectors
            .word_vectors
            .values()
            .next()
            .map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows * cols);
        for v in stripped.word_vectors.word_vectors.values_mut() {
            data.extend(v.drain(..));
        }
        sections.push(Section {
            name: "wordvec".into(),
            rows,
            cols,
            data,
        });
    }
    (stripped, sections)
}

fn section_bytes(section: &Section) -> Vec<u8> {
    let mut bytes = Vec::with_capacity(section.data.len() * 8);
    for &v in &section.data {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    bytes
}

/// Writes a bundle as an `.rrb` archive.
pub fn save_bundle<W: Write>(bundle: &ModelBundle, sink: &mut W) -> Result<()> {
    let (stripped, sections) = strip(bundle);
    let payloads: Vec<Vec<u8>> = sections.iter().map(section_bytes).collect();
    let manifest = Manifest {
        format_version: FORMAT_VERSION,
        bundle: stripped,
        sections: sections
            .iter()
            .zip(&payloads)
            .map(|(s, bytes)| SectionMeta {
                name: s.name.clone(),
                rows: s.rows,
                cols: s.cols,
                crc64: crc64(bytes),
            })
            .collect(),
    };
    let manifest_bytes = serde_json::to_vec(&manifest)?;
    sink.write_all(MAGIC)?;
    sink.write_all(&FORMAT_VERSION.to_le_bytes())?;
    sink.write_all(&(manifest_bytes.len() as u64).to_le_bytes())?;
    sink.write_all(&manifest_bytes)?;
    sink.write_all(&crc64(&manifest_bytes).to_le_bytes())?;
    for bytes in &payloads {
        sink.write_all(bytes)?;
    }
    sink.flush()?;
    Ok(())
}

pub fn save_bundle_path(bundle: &ModelBundle, path: &Path) -> Result<()> {
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    save_bundle(bundle, &mut file)
}

fn read_exact_checked<R: Read>(source: &mut R, len: usize, what: &str) -> Result<Vec<u8>> {
    let mut buf = vec![0u8; len];
    source
        .read_exact(&mut buf)
        .map_err(|_| Error::BundleFormat(format!("truncated while reading {what}")))?;
    Ok(buf)
}

/// Reads and checksum-verifies an `.rrb` archive.
pub fn load_bundle<R: Read>(source: &mut R) -> Result<ModelBundle> {
    let magic = read_exact_checked(source, 4, "magic")?;
    if magic != MAGIC {
        return Err(Error::BundleFormat("bad magic".into()));
    }
    let version_bytes = read_exact_checked(source, 4, "format version")?;
    let version = u32::from_le_bytes(version_bytes.try_into().unwrap());
    if version > FORMAT_VERSION || version == 0 {
        return Err(Error::BundleVersion(version));
    }
    let len_bytes = read_exact_checked(source, 8, "manifest length")?;
    let manifest_len = u64::from_le_bytes(len_bytes.try_into().unwrap()) as usize;
    let manifest_bytes = read_exact_checked(source, manifest_len, "manifest")?;
    let crc_bytes = read_exact_checked(source, 8, "manifest checksum")?;
    let expected = u64::from_le_bytes(crc_bytes.try_into().unwrap());
    if crc64(&manifest_bytes) != expected {
        return Err(Error::BundleCorrupt("manifest".into()));
    }
    let manifest: Manifest = serde_json::from_slice(&manifest_bytes)
        .map_err(|e| Error::BundleFormat(format!("manifest parse: {e}")))?;
    if manifest.format_version > FORMAT_VERSION {
        return Err(Error::BundleVersion(manifest.format_version));
    }

    let mut sections = Vec::with_capacity(manifest.sections.len());
    for meta in &manifest.sections {
        let bytes = read_exact_checked(source, meta.rows * meta.cols * 8, &meta.name)?;
        if crc64(&bytes) != meta.crc64 {
            return Err(Error::BundleCorrupt(meta.name.clone()));
        }
        let data: Vec<f64> = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        sections.push(Section {
            name: meta.name.clone(),
            rows: meta.rows,
            cols: meta.cols,
            data,
        });
    }

    let mut bundle = manifest.bundle;
    let find = |name: &str| -> Result<&Section> {
        sections
            .iter()
            .find(|s| s.name == name)
            .ok_or_else(|| Error::BundleFormat(format!("missing section `{name}`")))
    };
    for i in 0..bundle.mlp.layers.len() {
        let w = find(&format!("mlp.w{i}"))?;
        let b = find(&format!("mlp.b{i}"))?;
        bundle.mlp.layers[i].weights = restore_matrix(w);
        bundle.mlp.layers[i].bias = b.data.clone();
    }
    {
        let s = find("prototypes")?;
        if s.rows != bundle.prototypes.prototypes.len() {
            return Err(Error::BundleFormat("prototype count mismatch".into()));
        }
        for (v, chunk) in bundle
            .prototypes
            .prototypes
            .values_mut()
            .zip(restore_matrix(s))
        {
            *v = chunk;
        }
    }
    bundle.indexembed.issue_embeddings = restore_matrix(find("indexembed.issues")?);
    bundle.indexembed.resolution_embeddings = restore_matrix(find("indexembed.resolutions")?);
    bundle.logreg.weights = restore_matrix(find("logreg.w")?);
    bundle.logreg.bias = find("logreg.b")?.data.clone();
    {
        let s = find("train.embeddings")?;
        if s.rows != bundle.train_embeddings.len() {
            return Err(Error::BundleFormat("train-embedding count mismatch".into()));
        }
        for ((_, v), chunk) in bundle.train_embeddings.iter_mut().zip(restore_matrix(s)) {
            *v = chunk;
        }
    }
    bundle.drift_baseline = find("drift.baseline")?.data.clone();
    {
        let s = find("wordvec")?;
        if s.rows != bundle.word_vectors.word_vectors.len() {
            return Err(Error::BundleFormat("word-vector count mismatch".into()));
        }
        for (v, chunk) in bundle
            .word_vectors
            .word_vectors
            .values_mut()
            .zip(restore_matrix(s))
        {
            *v = chunk;
        }
    }
    Ok(bundle)
}

pub fn load_bundle_path(path: &Path) -> Result<ModelBundle> {
    let mut file = std::io::BufReader::new(std::fs::File::open(path)?);
    load_bundle(&mut file)
}

#[cfg(test)]
mod tests {
    use super::super::testutil::{shared_outcome, tiny_corpus};
    use super::super::{predict, ModelBundle};
    use super::*;

    fn saved() -> Vec<u8> {
        let mut bytes = Vec::new();
        save_bundle(&shared_outcome().bundle, &mut bytes).unwrap();
        bytes
    }

    #[test]
    fn crc64_known_vector() {
        // CRC-64/XZ check value
        assert_eq!(crc64(b"123456789"), 0x995D_C9BB_DF19_39FA);
    }

    #[test]
    fn round_trip_is_identity() {
        let bytes = saved();
        let loaded = load_bundle(&mut bytes.as_slice()).unwrap();
        assert_eq!(loaded, shared_outcome().bundle);

        let mut again = Vec::new();
        save_bundle(&loaded, &mut again).unwrap();
        assert_eq!(bytes, again, "save(load(save(x))) must be byte-identical");
    }

    #[test]
    fn round_trip_preserves_predictions() {
        let bytes = saved();
        let loaded: ModelBundle = load_bundle(&mut bytes.as_slice()).unwrap();
        let original = &shared_outcome().bundle;
        for record in tiny_corpus().records.iter().take(20) {
            let a = predict(original, record, 0.3, 3, 5).unwrap();
            let b = predict(&loaded, record, 0.3, 3, 5).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn corrupted_section_byte_is_detected() {
        let mut bytes = saved();
        let last = bytes.len() - 5; // inside the final section's data
        bytes[last] ^= 0xFF;
        match load_bundle(&mut bytes.as_slice()) {
            Err(Error::BundleCorrupt(_)) => {}
            other => panic!("expected BundleCorrupt, got {other:?}"),
        }
    }

    #[test]
    fn corrupted_manifest_is_detected() {
        let mut bytes = saved();
        bytes[20] ^= 0x01; // inside the manifest JSON
        match load_bundle(&mut bytes.as_slice()) {
            Err(Error::BundleCorrupt(section)) => assert_eq!(section, "manifest"),
            other => panic!("expected BundleCorrupt(manifest), got {other:?}"),
        }
    }

    #[test]
    fn future_version_is_rejected() {
        let mut bytes = saved();
        bytes[4..8].copy_from_slice(&(FORMAT_VERSION + 1).to_le_bytes());
        match load_bundle(&mut bytes.as_slice()) {
            Err(Error::BundleVersion(v)) => assert_eq!(v, FORMAT_VERSION + 1),
            other => panic!("expected BundleVersion, got {other:?}"),
        }
    }

    #[test]
    fn bad_magic_is_rejected() {
        let mut bytes = saved();
        bytes[0] = b'X';
        assert!(matches!(
            load_bundle(&mut bytes.as_slice()),
            Err(Error::BundleFormat(_))
        ));
    }

    #[test]
    fn truncated_file_is_rejected() {
        let bytes = saved();
        let cut = &bytes[..bytes.len() - 16];
        assert!(matches!(
            load_bundle(&mut &cut[..]),
            Err(Error::BundleFormat(_))
        ));
    }
}
