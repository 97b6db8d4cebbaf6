//! MNIST IDX ingestion.
//!
//! Files are looked up under `$ODIN_MNIST_DIR`, falling back to `data/mnist`
//! at the workspace root. Both the plain and the `.gz`-stripped canonical
//! names are accepted (`train-images-idx3-ubyte`, `train-images.idx3-ubyte`).

use std::fs;
use std::path::{Path, PathBuf};

use crate::WorkloadError;

pub const IMAGE_SIDE: usize = 28;
pub const IMAGE_PIXELS: usize = IMAGE_SIDE * IMAGE_SIDE;

const IMAGES_MAGIC: u32 = 0x0000_0803;
const LABELS_MAGIC: u32 = 0x0000_0801;

pub const ENV_DIR: &str = "ODIN_MNIST_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

impl Split {
    fn prefix(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "t10k",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub images: Vec<[u8; IMAGE_PIXELS]>,
    pub labels: Vec<u8>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn truncate(&mut self, n: usize) {
        self.images.truncate(n);
        self.labels.truncate(n);
    }
}

pub fn default_dir() -> PathBuf {
    if let Some(d) = std::env::var_os(ENV_DIR) {
        return PathBuf::from(d);
    }
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/mnist")
}

fn find(dir: &Path, split: Split, kind: &str, idx: &str) -> Result<PathBuf, WorkloadError> {
    let p = split.prefix();
    for name in [format!("{p}-{kind}-{idx}-ubyte"), format!("{p}-{kind}.{idx}-ubyte")] {
        let path = dir.join(name);
        if path.is_file() {
            return Ok(path);
        }
    }
    Err(WorkloadError::DatasetMissing(dir.join(format!("{p}-{kind}-{idx}-ubyte"))))
}

fn be_u32(b: &[u8], at: usize) -> u32 {
    u32::from_be_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]])
}

fn idx_err(path: &Path, msg: impl Into<String>) -> WorkloadError {
    WorkloadError::Idx {
        path: path.to_path_buf(),
        msg: msg.into(),
    }
}

pub fn parse_images(path: &Path, bytes: &[u8]) -> Result<Vec<[u8; IMAGE_PIXELS]>, WorkloadError> {
    if bytes.len() < 16 {
        return Err(idx_err(path, "truncated header"));
    }
    let magic = be_u32(bytes, 0);
    if magic != IMAGES_MAGIC {
        return Err(idx_err(path, format!("bad magic {magic:#010x}")));
    }
    let n = be_u32(bytes, 4) as usize;
    let (rows, cols) = (be_u32(bytes, 8) as usize, be_u32(bytes, 12) as usize);
    if rows != IMAGE_SIDE || cols != IMAGE_SIDE {
        return Err(idx_err(path, format!("expected 28x28 images, got {rows}x{cols}")));
    }
    let body = &bytes[16..];
    if body.len() != n * IMAGE_PIXELS {
        return Err(idx_err(path, format!("{n} images declared, {} bytes of data", body.len())));
    }
    Ok(body
        .chunks_exact(IMAGE_PIXELS)
        .map(|c| c.try_into().expect("chunk size"))
        .collect())
}

pub fn parse_labels(path: &Path, bytes: &[u8]) -> Result<Vec<u8>, WorkloadError> {
    if bytes.len() < 8 {
        return Err(idx_err(path, "truncated header"));
    }
    let magic = be_u32(bytes, 0);
    if magic != LABELS_MAGIC {
        return Err(idx_err(path, format!("bad magic {magic:#010x}")));
    }
    let n = be_u32(bytes, 4) as usize;
    let body = &bytes[8..];
    if body.len() != n {
        return Err(idx_err(path, format!("{n} labels declared, {} bytes of data", body.len())));
    }
    if let Some(bad) = body.iter().find(|&&l| l > 9) {
        return Err(idx_err(path, format!("label {bad} out of range")));
    }
    Ok(body.to_vec())
}

pub fn load(dir: &Path, split: Split) -> Result<Dataset, WorkloadError> {
    let ip = find(dir, split, "images", "idx3")?;
    let lp = find(dir, split, "labels", "idx1")?;
    let images = parse_images(&ip, &fs::read(&ip)?)?;
    let labels = parse_labels(&lp, &fs::read(&lp)?)?;
    if images.len() != labels.len() {
        return Err(idx_err(
            &lp,
            format!("{} labels for {} images", labels.len(), images.len()),
        ));
    }
    Ok(Dataset { images, labels })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn header(magic: u32, dims: &[u32]) -> Vec<u8> {
        let mut v = magic.to_be_bytes().to_vec();
        for d in dims {
            v.extend_from_slice(&d.to_be_bytes());
        }
        v
    }

    #[test]
    fn parses_images_big_endian() {
        let mut b = header(IMAGES_MAGIC, &[2, 28, 28]);
        b.extend((0..2 * IMAGE_PIXELS).map(|i| (i % 251) as u8));
        let imgs = parse_images(Path::new("x"), &b).unwrap();
        assert_eq!(imgs.len(), 2);
        assert_eq!(imgs[1][0], (IMAGE_PIXELS % 251) as u8);
    }

    #[test]
    fn rejects_bad_magic_and_sizes() {
        let b = header(LABELS_MAGIC, &[0, 28, 28]);
        assert!(parse_images(Path::new("x"), &b).is_err());
        let mut b = header(IMAGES_MAGIC, &[1, 28, 28]);
        b.push(0);
        assert!(parse_images(Path::new("x"), &b).is_err());
        let mut b = header(LABELS_MAGIC, &[1]);
        b.push(10);
        assert!(parse_labels(Path::new("x"), &b).is_err());
    }

    #[test]
    fn missing_directory_is_dataset_missing() {
        let err = load(Path::new("/nonexistent/mnist"), Split::Test).unwrap_err();
        assert!(matches!(err, WorkloadError::DatasetMissing(_)));
    }
}
