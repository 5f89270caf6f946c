//! Corpus exchange on disk.
//!
//! Manifest: UTF-8 text, LF line endings, one record per line,
//! `id<TAB>relative_image_path[<TAB>transcription]`. Images are 8-bit
//! grayscale PNG. Paths are resolved against the manifest's directory.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use ndarray::Array2;

use super::{normalize_height, Charset, Corpus, Entry, LineImage, Transcription};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Load a grayscale PNG into [0, 1] intensities.
pub fn load_png<T: Scalar>(path: &Path, id: &str) -> Result<LineImage<T>> {
    let img = image::open(path).map_err(|_| Error::MissingImage(path.to_path_buf()))?;
    let gray = img.to_luma8();
    let (w, h) = gray.dimensions();
    let pixels = Array2::from_shape_fn((h as usize, w as usize), |(y, x)| {
        T::of(gray.get_pixel(x as u32, y as u32).0[0] as f64 / 255.0)
    });
    Ok(LineImage { id: id.to_string(), pixels })
}

/// Write an image as 8-bit grayscale PNG.
pub fn save_png<T: Scalar>(image: &LineImage<T>, path: &Path) -> Result<()> {
    let (h, w) = image.pixels.dim();
    let bytes: Vec<u8> = image
        .pixels
        .iter()
        .map(|v| (v.to_f64c().clamp(0.0, 1.0) * 255.0).round() as u8)
        .collect();
    let buf = image::GrayImage::from_raw(w as u32, h as u32, bytes)
        .expect("buffer length matches dimensions");
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    buf.save(path)?;
    Ok(())
}

/// Read a manifest and its images; every image is height-normalized and
/// the charset is built from the transcriptions present.
pub fn load_manifest<T: Scalar>(path: &Path) -> Result<Corpus<T>> {
    let text = fs::read_to_string(path).map_err(|e| Error::Manifest {
        path: path.to_path_buf(),
        line: 0,
        msg: format!("cannot read manifest: {e}"),
    })?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let mut records: Vec<(String, String, Option<String>)> = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() < 2 || fields.len() > 3 || fields[0].is_empty() || fields[1].is_empty() {
            return Err(Error::Manifest {
                path: path.to_path_buf(),
                line: lineno,
                msg: format!("expected id<TAB>path[<TAB>transcription], got {} fields", fields.len()),
            });
        }
        let id = fields[0].to_string();
        if !seen.insert(id.clone()) {
            return Err(Error::Manifest {
                path: path.to_path_buf(),
                line: lineno,
                msg: format!("duplicate id {id:?}"),
            });
        }
        records.push((id, fields[1].to_string(), fields.get(2).map(|s| s.to_string())));
    }

    let charset = Charset::from_symbols(
        records.iter().filter_map(|r| r.2.as_deref()).flat_map(|t| t.chars()),
    );
    let mut entries = Vec::with_capacity(records.len());
    for (id, rel, transcription) in records {
        let raw = load_png::<T>(&base.join(&rel), &id)?;
        let image = normalize_height(&raw)?;
        let transcription = transcription
            .map(|t| Transcription::new(&t, &charset))
            .transpose()?;
        entries.push(Entry { image, transcription });
    }
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "manifest".to_string());
    Corpus::new(&name, entries, charset)
}

/// Write `corpus` as `manifest.tsv` plus `images/<id>.png` under `dir`.
/// Returns the manifest path.
pub fn write_manifest<T: Scalar>(corpus: &Corpus<T>, dir: &Path) -> Result<std::path::PathBuf> {
    fs::create_dir_all(dir.join("images"))?;
    let mut lines = String::new();
    for e in &corpus.entries {
        let rel = format!("images/{}.png", e.image.id);
        save_png(&e.image, &dir.join(&rel))?;
        match &e.transcription {
            Some(t) => lines.push_str(&format!("{}\t{}\t{}\n", e.image.id, rel, t.text)),
            None => lines.push_str(&format!("{}\t{}\n", e.image.id, rel)),
        }
    }
    let manifest = dir.join("manifest.tsv");
    fs::write(&manifest, lines)?;
    Ok(manifest)
}
