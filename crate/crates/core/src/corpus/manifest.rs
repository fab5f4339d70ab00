//! On-disk layout: one JSON manifest plus one little-endian f32 blob per
//! field (`image`, `mask`). Samples are stored back to back in manifest
//! order; blob paths are relative to the manifest's directory.
//!
//! ```json
//! {
//!   "format": "alseg.manifest.v1",
//!   "name": "synth",
//!   "pixel_spacing": 1.0,
//!   "blobs": { "image": "data.image.f32", "mask": "data.mask.f32" },
//!   "samples": [ { "id": 0, "subject_id": 0, "height": 32, "width": 32 } ],
//!   "splits": { "train": [0], "holdout": [] }
//! }
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde_json::{json, Map, Value};

use super::{DatasetManifest, SliceSample, Splits};
use crate::{Error, Result};

pub const MANIFEST_FORMAT: &str = "alseg.manifest.v1";

fn blob_names(path: &Path) -> (String, String) {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "manifest".to_owned());
    (format!("{stem}.image.f32"), format!("{stem}.mask.f32"))
}

fn parent_dir(path: &Path) -> PathBuf {
    path.parent()
        .filter(|p| !p.as_os_str().is_empty())
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."))
}

pub fn save_manifest(manifest: &DatasetManifest, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    manifest.validate()?;
    let dir = parent_dir(path);
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let (image_name, mask_name) = blob_names(path);

    let total: usize = manifest.samples.iter().map(|s| s.image.len()).sum();
    let mut image_bytes = Vec::with_capacity(total * 4);
    let mut mask_bytes = Vec::with_capacity(total * 4);
    for s in &manifest.samples {
        for &v in s.image.iter() {
            image_bytes.extend_from_slice(&v.to_le_bytes());
        }
        for &v in s.mask.iter() {
            mask_bytes.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }

    let samples: Vec<Value> = manifest
        .samples
        .iter()
        .map(|s| {
            let (h, w) = s.dims();
            json!({ "id": s.id, "subject_id": s.subject_id, "height": h, "width": w })
        })
        .collect();
    let doc = json!({
        "format": MANIFEST_FORMAT,
        "name": manifest.name,
        "pixel_spacing": manifest.pixel_spacing,
        "blobs": { "image": image_name, "mask": mask_name },
        "samples": samples,
        "splits": { "train": manifest.splits.train, "holdout": manifest.splits.holdout },
    });

    let image_path = dir.join(&image_name);
    let mask_path = dir.join(&mask_name);
    fs::write(&image_path, image_bytes).map_err(|e| Error::io(&image_path, e))?;
    fs::write(&mask_path, mask_bytes).map_err(|e| Error::io(&mask_path, e))?;
    let mut text = serde_json::to_string_pretty(&doc)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))?;
    Ok(())
}

fn field<'a>(obj: &'a Map<String, Value>, key: &str, ctx: &str) -> Result<&'a Value> {
    obj.get(key)
        .ok_or_else(|| Error::parse(format!("{ctx}{key}"), "missing"))
}

fn as_usize(v: &Value, name: &str) -> Result<usize> {
    v.as_u64()
        .map(|x| x as usize)
        .ok_or_else(|| Error::parse(name, format!("expected non-negative integer, got {v}")))
}

fn as_str<'a>(v: &'a Value, name: &str) -> Result<&'a str> {
    v.as_str()
        .ok_or_else(|| Error::parse(name, format!("expected string, got {v}")))
}

fn index_list(v: &Value, name: &str) -> Result<Vec<usize>> {
    let arr = v
        .as_array()
        .ok_or_else(|| Error::parse(name, "expected array"))?;
    arr.iter()
        .enumerate()
        .map(|(i, x)| as_usize(x, &format!("{name}[{i}]")))
        .collect()
}

fn read_blob(dir: &Path, rel: &str, name: &str, expected: usize) -> Result<Vec<f32>> {
    let path = dir.join(rel);
    let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
    if bytes.len() != expected * 4 {
        return Err(Error::parse(
            name,
            format!(
                "expected {} f32 values ({} bytes), found {} bytes",
                expected,
                expected * 4,
                bytes.len()
            ),
        ));
    }
    Ok(bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect())
}

pub fn load_manifest(path: impl AsRef<Path>) -> Result<DatasetManifest> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let doc: Value =
        serde_json::from_str(&text).map_err(|e| Error::parse("manifest", e.to_string()))?;
    let root = doc
        .as_object()
        .ok_or_else(|| Error::parse("manifest", "top level must be an object"))?;

    let format = as_str(field(root, "format", "")?, "format")?;
    if format != MANIFEST_FORMAT {
        return Err(Error::parse("format", format!("unsupported format `{format}`")));
    }
    let name = as_str(field(root, "name", "")?, "name")?.to_owned();
    let pixel_spacing = field(root, "pixel_spacing", "")?
        .as_f64()
        .ok_or_else(|| Error::parse("pixel_spacing", "expected number"))?;

    let blobs = field(root, "blobs", "")?
        .as_object()
        .ok_or_else(|| Error::parse("blobs", "expected object"))?;
    let image_rel = as_str(field(blobs, "image", "blobs.")?, "blobs.image")?;
    let mask_rel = as_str(field(blobs, "mask", "blobs.")?, "blobs.mask")?;

    let entries = field(root, "samples", "")?
        .as_array()
        .ok_or_else(|| Error::parse("samples", "expected array"))?;
    let mut shapes = Vec::with_capacity(entries.len());
    for (i, e) in entries.iter().enumerate() {
        let ctx = format!("samples[{i}].");
        let obj = e
            .as_object()
            .ok_or_else(|| Error::parse(format!("samples[{i}]"), "expected object"))?;
        let id = as_usize(field(obj, "id", &ctx)?, &format!("{ctx}id"))?;
        let subject = as_usize(field(obj, "subject_id", &ctx)?, &format!("{ctx}subject_id"))?;
        let h = as_usize(field(obj, "height", &ctx)?, &format!("{ctx}height"))?;
        let w = as_usize(field(obj, "width", &ctx)?, &format!("{ctx}width"))?;
        shapes.push((id, subject, h, w));
    }

    let splits = field(root, "splits", "")?
        .as_object()
        .ok_or_else(|| Error::parse("splits", "expected object"))?;
    let train = index_list(field(splits, "train", "splits.")?, "splits.train")?;
    let holdout = index_list(field(splits, "holdout", "splits.")?, "splits.holdout")?;

    let total: usize = shapes.iter().map(|&(_, _, h, w)| h * w).sum();
    let dir = parent_dir(path);
    let images = read_blob(&dir, image_rel, "blobs.image", total)?;
    let masks = read_blob(&dir, mask_rel, "blobs.mask", total)?;

    let mut samples = Vec::with_capacity(shapes.len());
    let mut offset = 0;
    for (id, subject_id, h, w) in shapes {
        let n = h * w;
        let image = Array2::from_shape_vec((h, w), images[offset..offset + n].to_vec())
            .expect("length checked");
        let mut mask_vals = Vec::with_capacity(n);
        for &v in &masks[offset..offset + n] {
            if v != 0.0 && v != 1.0 {
                return Err(Error::Validation(format!(
                    "sample {id}: mask value {v} is not binary"
                )));
            }
            mask_vals.push(v as u8);
        }
        let mask = Array2::from_shape_vec((h, w), mask_vals).expect("length checked");
        samples.push(SliceSample {
            id,
            subject_id,
            image,
            mask,
        });
        offset += n;
    }

    let manifest = DatasetManifest {
        name,
        samples,
        splits: Splits { train, holdout },
        pixel_spacing,
    };
    manifest.validate()?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{synth_dataset, SynthOptions};

    fn fixture() -> DatasetManifest {
        synth_dataset(&SynthOptions::new(3, 2, 16, 0.1, 5)).unwrap()
    }

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.json");
        let m = fixture();
        save_manifest(&m, &path).unwrap();
        assert_eq!(load_manifest(&path).unwrap(), m);
    }

    #[test]
    fn mask_value_two_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.json");
        save_manifest(&fixture(), &path).unwrap();
        let mask_path = dir.path().join("data.mask.f32");
        let mut bytes = fs::read(&mask_path).unwrap();
        bytes[0..4].copy_from_slice(&2.0f32.to_le_bytes());
        fs::write(&mask_path, bytes).unwrap();
        assert!(matches!(load_manifest(&path), Err(Error::Validation(_))));
    }

    #[test]
    fn truncated_blob_is_a_parse_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.json");
        save_manifest(&fixture(), &path).unwrap();
        let image_path = dir.path().join("data.image.f32");
        let bytes = fs::read(&image_path).unwrap();
        fs::write(&image_path, &bytes[..bytes.len() - 6]).unwrap();
        match load_manifest(&path) {
            Err(Error::Parse { field, .. }) => assert_eq!(field, "blobs.image"),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn malformed_field_is_named() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.json");
        save_manifest(&fixture(), &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        let text = text.replacen("\"height\": 16", "\"height\": \"tall\"", 1);
        fs::write(&path, text).unwrap();
        match load_manifest(&path) {
            Err(Error::Parse { field, .. }) => assert_eq!(field, "samples[0].height"),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn dimension_mismatch_is_a_validation_error() {
        let mut m = fixture();
        m.samples[1].mask = Array2::zeros((16, 17));
        assert!(matches!(m.validate(), Err(Error::Validation(_))));
    }
}
