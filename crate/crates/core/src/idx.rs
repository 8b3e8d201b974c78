//! IDX files as used for MNIST, optionally gzip-compressed.
//!
//! Images use magic `0x00000803` (u8, three dimensions), labels `0x00000801`.
//! All header integers are big-endian. Parse errors report the byte offset in
//! the decompressed stream.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use flate2::read::GzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

pub const IMAGE_MAGIC: u32 = 0x0000_0803;
pub const LABEL_MAGIC: u32 = 0x0000_0801;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdxImages {
    pub count: usize,
    pub rows: usize,
    pub cols: usize,
    pub pixels: Vec<u8>,
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    let raw = fs::read(path)?;
    if raw.starts_with(&[0x1f, 0x8b]) {
        let mut out = Vec::new();
        GzDecoder::new(raw.as_slice()).read_to_end(&mut out)?;
        Ok(out)
    } else {
        Ok(raw)
    }
}

fn be_u32(bytes: &[u8], offset: usize) -> Result<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| Error::Parse {
            offset: offset as u64,
            message: "truncated header".into(),
        })
}

fn expect_magic(bytes: &[u8], magic: u32) -> Result<()> {
    let found = be_u32(bytes, 0)?;
    if found != magic {
        return Err(Error::Parse {
            offset: 0,
            message: format!("bad magic {found:#010x}, expected {magic:#010x}"),
        });
    }
    Ok(())
}

fn payload(bytes: &[u8], start: usize, len: usize) -> Result<&[u8]> {
    if bytes.len() < start + len {
        return Err(Error::Parse {
            offset: bytes.len() as u64,
            message: format!("truncated payload: expected {len} bytes after offset {start}"),
        });
    }
    Ok(&bytes[start..start + len])
}

pub fn parse_idx_images(bytes: &[u8]) -> Result<IdxImages> {
    expect_magic(bytes, IMAGE_MAGIC)?;
    let count = be_u32(bytes, 4)? as usize;
    let rows = be_u32(bytes, 8)? as usize;
    let cols = be_u32(bytes, 12)? as usize;
    let pixels = payload(bytes, 16, count * rows * cols)?.to_vec();
    Ok(IdxImages {
        count,
        rows,
        cols,
        pixels,
    })
}

pub fn parse_idx_labels(bytes: &[u8]) -> Result<Vec<u8>> {
    expect_magic(bytes, LABEL_MAGIC)?;
    let count = be_u32(bytes, 4)? as usize;
    Ok(payload(bytes, 8, count)?.to_vec())
}

pub fn encode_idx_images(images: &IdxImages) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + images.pixels.len());
    for v in [IMAGE_MAGIC, images.count as u32, images.rows as u32, images.cols as u32] {
        out.extend_from_slice(&v.to_be_bytes());
    }
    out.extend_from_slice(&images.pixels);
    out
}

pub fn encode_idx_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&LABEL_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    out
}

/// Writes `bytes`, gzip-compressed when the path ends in `.gz`.
pub fn write_idx(path: impl AsRef<Path>, bytes: &[u8]) -> Result<()> {
    let path = path.as_ref();
    if path.extension().is_some_and(|e| e == "gz") {
        let mut enc = GzEncoder::new(Vec::new(), Compression::default());
        enc.write_all(bytes)?;
        fs::write(path, enc.finish()?)?;
    } else {
        fs::write(path, bytes)?;
    }
    Ok(())
}

pub fn read_idx_images(path: impl AsRef<Path>) -> Result<IdxImages> {
    parse_idx_images(&read_bytes(path.as_ref())?)
}

pub fn read_idx_labels(path: impl AsRef<Path>) -> Result<Vec<u8>> {
    parse_idx_labels(&read_bytes(path.as_ref())?)
}

/// Images flattened row-major and scaled to `[0, 1]`; ten classes.
pub fn load_mnist_idx(image_path: impl AsRef<Path>, label_path: impl AsRef<Path>) -> Result<Dataset> {
    let images = read_idx_images(image_path)?;
    let labels = read_idx_labels(label_path)?;
    if labels.len() != images.count {
        return Err(Error::Parse {
            offset: 4,
            message: format!(
                "label count {} does not match image count {}",
                labels.len(),
                images.count
            ),
        });
    }
    if let Some(pos) = labels.iter().position(|&l| l > 9) {
        return Err(Error::Parse {
            offset: 8 + pos as u64,
            message: format!("label {} outside 0..10", labels[pos]),
        });
    }
    let d = images.rows * images.cols;
    let data = images.pixels.iter().map(|&p| f64::from(p) / 255.0).collect();
    Dataset::new(
        DenseMatrix::new(images.count, d, data)?,
        labels.into_iter().map(usize::from).collect(),
        10,
    )
}

/// Candidate file names for a split inside an MNIST directory.
fn find_split(dir: &Path, prefix: &str, kind: &str) -> Result<std::path::PathBuf> {
    for name in [
        format!("{prefix}-{kind}-ubyte.gz"),
        format!("{prefix}-{kind}-ubyte"),
        format!("{prefix}-{kind}.gz"),
        format!("{prefix}-{kind}"),
    ] {
        let p = dir.join(&name);
        if p.exists() {
            return Ok(p);
        }
    }
    Err(Error::Io(std::io::Error::new(
        std::io::ErrorKind::NotFound,
        format!("no {prefix}-{kind} file in {}", dir.display()),
    )))
}

/// Standard `train-*` and `t10k-*` files from a directory.
pub fn load_mnist_dir(dir: impl AsRef<Path>) -> Result<(Dataset, Dataset)> {
    let dir = dir.as_ref();
    let train = load_mnist_idx(
        find_split(dir, "train", "images-idx3")?,
        find_split(dir, "train", "labels-idx1")?,
    )?;
    let test = load_mnist_idx(
        find_split(dir, "t10k", "images-idx3")?,
        find_split(dir, "t10k", "labels-idx1")?,
    )?;
    Ok((train, test))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture() -> IdxImages {
        IdxImages {
            count: 2,
            rows: 2,
            cols: 3,
            pixels: vec![0, 1, 2, 3, 4, 255, 9, 8, 7, 6, 5, 128],
        }
    }

    #[test]
    fn roundtrip_plain_and_gz() {
        let dir = tempfile::tempdir().unwrap();
        for name in ["img.idx", "img.idx.gz"] {
            let path = dir.path().join(name);
            let bytes = encode_idx_images(&fixture());
            write_idx(&path, &bytes).unwrap();
            assert_eq!(read_idx_images(&path).unwrap(), fixture());
            assert_eq!(encode_idx_images(&read_idx_images(&path).unwrap()), bytes);
        }
    }

    #[test]
    fn loads_scaled_dataset() {
        let dir = tempfile::tempdir().unwrap();
        let (ip, lp) = (dir.path().join("i"), dir.path().join("l.gz"));
        write_idx(&ip, &encode_idx_images(&fixture())).unwrap();
        write_idx(&lp, &encode_idx_labels(&[3, 9])).unwrap();
        let d = load_mnist_idx(&ip, &lp).unwrap();
        assert_eq!((d.len(), d.dim(), d.num_classes), (2, 6, 10));
        assert_eq!(d.point(0)[5], 1.0);
        assert_eq!(d.labels, vec![3, 9]);
    }

    #[test]
    fn parse_errors_carry_offsets() {
        let mut bytes = encode_idx_images(&fixture());
        bytes[3] = 0x01;
        assert!(matches!(parse_idx_images(&bytes), Err(Error::Parse { offset: 0, .. })));
        let bytes = encode_idx_images(&fixture());
        let cut = &bytes[..bytes.len() - 1];
        assert!(matches!(parse_idx_images(cut), Err(Error::Parse { offset: 27, .. })));
        assert!(matches!(
            parse_idx_labels(&[0, 0, 8, 1, 0]),
            Err(Error::Parse { offset: 4, .. })
        ));
    }

    #[test]
    fn count_mismatch_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let (ip, lp) = (dir.path().join("i"), dir.path().join("l"));
        write_idx(&ip, &encode_idx_images(&fixture())).unwrap();
        write_idx(&lp, &encode_idx_labels(&[1])).unwrap();
        assert!(matches!(load_mnist_idx(&ip, &lp), Err(Error::Parse { .. })));
    }

    #[test]
    fn bundled_subset_loads() {
        let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/mnist-subset");
        let (train, test) = load_mnist_dir(&dir).unwrap();
        assert_eq!((train.len(), test.len(), train.dim()), (7500, 2500, 784));
        assert!(train.inputs.data().iter().all(|v| (0.0..=1.0).contains(v)));
    }
}
