use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::EmbeddingBag;
use crate::error::{Error, Result};
use crate::tensor::Tensor;
use crate::util::write_atomic;

/// Dataset index: patients, labels and embedding files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub feature_dim: usize,
    pub patients: Vec<ManifestEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stain: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub id: String,
    /// Kept wide so that out-of-range labels get a diagnostic, not a parse error.
    pub label: i64,
    /// Relative paths resolve against the manifest's directory.
    pub path: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EmbeddingHeader {
    rows: usize,
    feature_dim: usize,
    /// `(slide_id, stain)` per row.
    meta: Vec<(String, String)>,
}

impl DatasetManifest {
    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        write_atomic(path, text.as_bytes())
    }
}

/// Row data of one embedding file.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingRows {
    pub slide_ids: Vec<String>,
    pub stains: Vec<String>,
    pub features: Tensor<f64>,
}

/// Binary embedding file: a JSON header line, then little-endian `f64`
/// rows.
pub fn write_embedding_file(path: &Path, slide_ids: &[String], stains: &[String], features: &Tensor<f64>) -> Result<()> {
    let header = EmbeddingHeader {
        rows: features.rows(),
        feature_dim: features.cols(),
        meta: slide_ids.iter().cloned().zip(stains.iter().cloned()).collect(),
    };
    if header.meta.len() != header.rows || slide_ids.len() != stains.len() {
        return Err(Error::Dimension(format!(
            "{} rows but {} slide ids and {} stains",
            header.rows,
            slide_ids.len(),
            stains.len()
        )));
    }
    let mut bytes = serde_json::to_vec(&header).expect("header serializes");
    bytes.push(b'\n');
    bytes.reserve(features.numel() * 8);
    for v in features.data() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    write_atomic(path, &bytes)
}

/// Reads a binary embedding file, or a CSV one (`slide_id,stain,f0,..`)
/// when the extension is `.csv`.
pub fn read_embedding_file(path: &Path) -> Result<EmbeddingRows> {
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        return read_embedding_csv(path);
    }
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let nl = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::format(path, "missing header line"))?;
    let header: EmbeddingHeader =
        serde_json::from_slice(&bytes[..nl]).map_err(|e| Error::format(path, format!("bad header: {e}")))?;
    if header.meta.len() != header.rows {
        return Err(Error::format(
            path,
            format!("header lists {} rows but {} metadata entries", header.rows, header.meta.len()),
        ));
    }
    let payload = &bytes[nl + 1..];
    let expected = header.rows * header.feature_dim * 8;
    if payload.len() != expected {
        return Err(Error::format(
            path,
            format!("payload has {} bytes, header implies {expected}", payload.len()),
        ));
    }
    let data: Vec<f64> = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    let features = Tensor::new(vec![header.rows, header.feature_dim], data).expect("sizes checked");
    let (slide_ids, stains) = header.meta.into_iter().unzip();
    Ok(EmbeddingRows { slide_ids, stains, features })
}

fn read_embedding_csv(path: &Path) -> Result<EmbeddingRows> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::format(path, format!("{other:?}")),
    })?;
    let mut slide_ids = Vec::new();
    let mut stains = Vec::new();
    let mut data = Vec::new();
    let mut width = None;
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::format(path, format!("row {i}: {e}")))?;
        if record.len() < 3 {
            return Err(Error::format(path, format!("row {i}: expected slide_id,stain and features")));
        }
        let f = record.len() - 2;
        if *width.get_or_insert(f) != f {
            return Err(Error::format(path, format!("row {i}: {f} features, earlier rows have {}", width.unwrap())));
        }
        slide_ids.push(record[0].to_string());
        stains.push(record[1].to_string());
        for (j, field) in record.iter().skip(2).enumerate() {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| Error::format(path, format!("row {i}, column {j}: {field:?} is not a number")))?;
            data.push(v);
        }
    }
    let rows = slide_ids.len();
    let features = Tensor::new(vec![rows, width.unwrap_or(0)], data).expect("sizes checked");
    Ok(EmbeddingRows { slide_ids, stains, features })
}

fn resolve(manifest_path: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        manifest_path.parent().unwrap_or(Path::new("")).join(p)
    }
}

/// Loads every patient listed in the manifest, applying its stain filter.
///
/// Diagnostics name the offending patient, and the row where relevant.
pub fn load_bags(manifest_path: &Path) -> Result<Vec<EmbeddingBag>> {
    let manifest = DatasetManifest::read(manifest_path)?;
    load_bags_with(manifest_path, &manifest, manifest.stain.as_deref())
}

/// [`load_bags`] with an explicit stain filter overriding the manifest's.
pub fn load_bags_with(manifest_path: &Path, manifest: &DatasetManifest, stain: Option<&str>) -> Result<Vec<EmbeddingBag>> {
    let bad = |msg: String| Error::format(manifest_path, msg);
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::with_capacity(manifest.patients.len());
    for entry in &manifest.patients {
        if !seen.insert(entry.id.as_str()) {
            return Err(bad(format!("patient {} listed twice", entry.id)));
        }
        let label = match entry.label {
            0 => 0,
            1 => 1,
            other => return Err(bad(format!("patient {}: label {other} is not 0 or 1", entry.id))),
        };
        let path = resolve(manifest_path, &entry.path);
        let rows = read_embedding_file(&path)?;
        if rows.features.rows() == 0 {
            return Err(Error::format(&path, format!("patient {} has no rows", entry.id)));
        }
        if rows.features.cols() != manifest.feature_dim {
            return Err(Error::format(
                &path,
                format!(
                    "patient {}: rows have {} features, manifest says {}",
                    entry.id,
                    rows.features.cols(),
                    manifest.feature_dim
                ),
            ));
        }
        if let Some(pos) = rows.features.data().iter().position(|v| !v.is_finite()) {
            return Err(Error::format(
                &path,
                format!("patient {}: non-finite value in row {}", entry.id, pos / manifest.feature_dim),
            ));
        }
        let bag = EmbeddingBag::new(entry.id.clone(), label, rows.slide_ids, rows.stains, rows.features)?;
        let bag = match stain {
            Some(s) => bag.filter_stain(s)?,
            None => bag,
        };
        out.push(bag);
    }
    Ok(out)
}

/// Writes one binary file per bag plus `manifest.json` into `dir`; returns
/// the manifest path.
pub fn write_dataset(dir: &Path, bags: &[EmbeddingBag], stain: Option<&str>) -> Result<PathBuf> {
    let feature_dim = bags.first().map(EmbeddingBag::feature_dim).unwrap_or(0);
    let mut patients = Vec::with_capacity(bags.len());
    for bag in bags {
        if bag.feature_dim() != feature_dim {
            return Err(Error::Dimension(format!(
                "patient {} has {} features, expected {feature_dim}",
                bag.patient_id,
                bag.feature_dim()
            )));
        }
        let rel = PathBuf::from("embeddings").join(format!("{}.emb", bag.patient_id));
        write_embedding_file(&dir.join(&rel), &bag.slide_ids, &bag.stains, &bag.features)?;
        patients.push(ManifestEntry { id: bag.patient_id.clone(), label: bag.label as i64, path: rel });
    }
    let manifest = DatasetManifest { feature_dim, patients, stain: stain.map(str::to_string) };
    let path = dir.join("manifest.json");
    manifest.write(&path)?;
    Ok(path)
}
