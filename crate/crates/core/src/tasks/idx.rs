//! IDX (MNIST distribution) reader and writer.
//!
//! Images: magic `0x00000803`, then `n`, `rows`, `cols` as big-endian u32,
//! then `n * rows * cols` unsigned bytes. Labels: magic `0x00000801`, then
//! `n`, then `n` bytes.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::DataError;
use crate::scalar::Scalar;
use crate::tasks::Dataset;

pub const IMAGES_MAGIC: u32 = 0x0000_0803;
pub const LABELS_MAGIC: u32 = 0x0000_0801;

struct Cursor<'a> {
    path: &'a Path,
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, len: usize) -> Result<&'a [u8], DataError> {
        let end = self.pos.checked_add(len).filter(|&e| e <= self.bytes.len());
        match end {
            Some(end) => {
                let out = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(out)
            }
            None => Err(DataError::Truncated {
                path: self.path.to_path_buf(),
                needed: self.pos.saturating_add(len),
                found: self.bytes.len(),
            }),
        }
    }

    fn u32(&mut self) -> Result<u32, DataError> {
        let b = self.take(4)?;
        Ok(u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn magic(&mut self, expected: u32) -> Result<(), DataError> {
        let found = self.u32()?;
        if found != expected {
            return Err(DataError::BadMagic {
                path: self.path.to_path_buf(),
                expected,
                found,
            });
        }
        Ok(())
    }
}

fn read(path: &Path) -> Result<Vec<u8>, DataError> {
    fs::read(path).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Loads an IDX image/label pair. Pixels are scaled to `[0, 1]` by `byte / 255`
/// and each image is flattened row-major. The class count is one past the
/// largest label (at least 2).
pub fn load_idx<T: Scalar>(
    images_path: impl AsRef<Path>,
    labels_path: impl AsRef<Path>,
) -> Result<Dataset<T>, DataError> {
    let images_path = images_path.as_ref();
    let labels_path = labels_path.as_ref();

    let image_bytes = read(images_path)?;
    let mut images = Cursor {
        path: images_path,
        bytes: &image_bytes,
        pos: 0,
    };
    images.magic(IMAGES_MAGIC)?;
    let n = images.u32()? as usize;
    let rows = images.u32()? as usize;
    let cols = images.u32()? as usize;
    let pixels = images.take(n * rows * cols)?;

    let label_bytes = read(labels_path)?;
    let mut labels = Cursor {
        path: labels_path,
        bytes: &label_bytes,
        pos: 0,
    };
    labels.magic(LABELS_MAGIC)?;
    let n_labels = labels.u32()? as usize;
    if n_labels != n {
        return Err(DataError::CountMismatch {
            images: n,
            labels: n_labels,
        });
    }
    let label_values: Vec<usize> = labels.take(n)?.iter().map(|&b| b as usize).collect();

    let scale = T::of(255.0);
    let features = pixels.iter().map(|&p| T::of(p as f64) / scale).collect();
    let classes = label_values.iter().copied().max().unwrap_or(0).max(1) + 1;
    Dataset::new(features, label_values, rows * cols, classes)
}

/// Writes `ds` as an IDX pair with `rows x cols` images. Every feature must be
/// a multiple of 1/255 in `[0, 1]` and every label must fit in a byte.
pub fn write_idx<T: Scalar>(
    ds: &Dataset<T>,
    rows: usize,
    cols: usize,
    images_path: impl AsRef<Path>,
    labels_path: impl AsRef<Path>,
) -> Result<(), DataError> {
    let images_path = images_path.as_ref();
    let invalid = |message: String| DataError::Malformed {
        path: images_path.to_path_buf(),
        message,
    };
    if rows * cols != ds.feature_dim() {
        return Err(invalid(format!(
            "{rows}x{cols} images do not match feature dimension {}",
            ds.feature_dim()
        )));
    }

    let mut image_out = Vec::with_capacity(16 + ds.features().len());
    image_out.extend_from_slice(&IMAGES_MAGIC.to_be_bytes());
    for v in [ds.len(), rows, cols] {
        image_out.extend_from_slice(&(v as u32).to_be_bytes());
    }
    for &v in ds.features() {
        let scaled = v.to_f64_lossy() * 255.0;
        let byte = scaled.round();
        if !(0.0..=255.0).contains(&byte) || (scaled - byte).abs() > 1e-6 {
            return Err(invalid(format!("feature {v} is not representable as a byte / 255")));
        }
        image_out.push(byte as u8);
    }

    let mut label_out = Vec::with_capacity(8 + ds.len());
    label_out.extend_from_slice(&LABELS_MAGIC.to_be_bytes());
    label_out.extend_from_slice(&(ds.len() as u32).to_be_bytes());
    for &l in ds.labels() {
        let byte = u8::try_from(l).map_err(|_| invalid(format!("label {l} does not fit in a byte")))?;
        label_out.push(byte);
    }

    write(images_path, &image_out)?;
    write(labels_path.as_ref(), &label_out)
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), DataError> {
    fs::write(path, bytes).map_err(|source| DataError::Io {
        path: PathBuf::from(path),
        source,
    })
}
