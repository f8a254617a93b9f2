//! IDX image and label files.

use std::fs;
use std::io;
use std::path::Path;

use crate::error::{Error, Result};
use crate::signal::ImageTensor;

pub const IMAGE_MAGIC: u32 = 2051;
pub const LABEL_MAGIC: u32 = 2049;
pub const SIDE: usize = 28;
pub const IMAGES_FILE: &str = "images-idx3-ubyte";
pub const LABELS_FILE: &str = "labels-idx1-ubyte";

#[derive(Clone, Debug, PartialEq)]
pub struct MnistSet {
    pub images: Vec<ImageTensor>,
    pub labels: Vec<usize>,
}

impl MnistSet {
    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    /// Loads [`IMAGES_FILE`] and [`LABELS_FILE`] from `dir`.
    pub fn load_dir(dir: &Path) -> Result<Self> {
        load_mnist(&dir.join(IMAGES_FILE), &dir.join(LABELS_FILE))
    }

    pub fn image(&self, index: usize) -> Result<&ImageTensor> {
        self.images
            .get(index)
            .ok_or_else(|| Error::Config(format!("image index {index} out of range for {} images", self.len())))
    }
}

fn be_u32(bytes: &[u8], at: usize, file: &str) -> Result<u32> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_be_bytes(b.try_into().expect("four bytes")))
        .ok_or_else(|| Error::Length(format!("{file}: header ends early")))
}

fn check_magic(bytes: &[u8], expected: u32, file: &str) -> Result<()> {
    let magic = be_u32(bytes, 0, file)?;
    if magic != expected {
        return Err(Error::Format(format!("{file}: magic {magic}, expected {expected}")));
    }
    Ok(())
}

fn parse_images(bytes: &[u8]) -> Result<Vec<ImageTensor>> {
    let file = "image file";
    check_magic(bytes, IMAGE_MAGIC, file)?;
    let count = be_u32(bytes, 4, file)? as usize;
    let rows = be_u32(bytes, 8, file)? as usize;
    let cols = be_u32(bytes, 12, file)? as usize;
    if rows != SIDE || cols != SIDE {
        return Err(Error::Dimension(format!("images are {rows}x{cols}, expected {SIDE}x{SIDE}")));
    }
    let body = &bytes[16..];
    let size = SIDE * SIDE;
    if body.len() < count * size {
        return Err(Error::Length(format!("{file}: {} pixel bytes for {count} images", body.len())));
    }
    body.chunks_exact(size)
        .take(count)
        .map(|px| ImageTensor::new(SIDE, SIDE, 1, px.iter().map(|&b| b as f64 / 255.0).collect()))
        .collect()
}

fn parse_labels(bytes: &[u8]) -> Result<Vec<usize>> {
    let file = "label file";
    check_magic(bytes, LABEL_MAGIC, file)?;
    let count = be_u32(bytes, 4, file)? as usize;
    let body = &bytes[8..];
    if body.len() < count {
        return Err(Error::Length(format!("{file}: {} labels for a count of {count}", body.len())));
    }
    body[..count]
        .iter()
        .map(|&l| {
            if l < 10 {
                Ok(l as usize)
            } else {
                Err(Error::Format(format!("label {l} outside 0..=9")))
            }
        })
        .collect()
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| io::Error::new(e.kind(), format!("{}: {e}", path.display())).into())
}

/// Parses big-endian IDX image and label files, scaling pixels by 1/255.
pub fn load_mnist(images_path: &Path, labels_path: &Path) -> Result<MnistSet> {
    let images = parse_images(&read(images_path)?)?;
    let labels = parse_labels(&read(labels_path)?)?;
    if images.len() != labels.len() {
        return Err(Error::Length(format!("{} images but {} labels", images.len(), labels.len())));
    }
    Ok(MnistSet { images, labels })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    /// IDX bytes for `count` images whose pixel `k` of image `i` is
    /// `(7 * i + k) % 256`, labelled `i % 10`.
    pub(crate) fn fixture(count: usize) -> (Vec<u8>, Vec<u8>) {
        let mut images = Vec::new();
        for v in [IMAGE_MAGIC, count as u32, 28, 28] {
            images.extend(v.to_be_bytes());
        }
        for i in 0..count {
            images.extend((0..784).map(|k| ((7 * i + k) % 256) as u8));
        }
        let mut labels = Vec::new();
        for v in [LABEL_MAGIC, count as u32] {
            labels.extend(v.to_be_bytes());
        }
        labels.extend((0..count).map(|i| (i % 10) as u8));
        (images, labels)
    }

    fn load_bytes(images: &[u8], labels: &[u8]) -> Result<MnistSet> {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join(IMAGES_FILE), images).unwrap();
        std::fs::write(dir.path().join(LABELS_FILE), labels).unwrap();
        MnistSet::load_dir(dir.path())
    }

    #[test]
    fn two_image_fixture() {
        let (images, labels) = fixture(2);
        let set = load_bytes(&images, &labels).unwrap();
        assert_eq!(set.len(), 2);
        assert_eq!(set.labels, vec![0, 1]);
        // Image 1, row 3, column 5 is pixel 89: (7 + 89) / 255.
        assert_eq!(set.images[1].get(3, 5, 0), 96.0 / 255.0);
    }

    #[test]
    fn malformed_files() {
        let (images, labels) = fixture(2);
        assert!(matches!(load_bytes(&images, &images), Err(Error::Format(_))));
        assert!(matches!(load_bytes(&images[..1000], &labels), Err(Error::Length(_))));
        assert!(matches!(load_bytes(&images, &labels[..9]), Err(Error::Length(_))));
        let (three, _) = fixture(3);
        assert!(matches!(load_bytes(&three, &labels), Err(Error::Length(_))));
        let mut narrow = images.clone();
        narrow[15] = 27;
        assert!(matches!(load_bytes(&narrow, &labels), Err(Error::Dimension(_))));
        assert!(matches!(load_bytes(&images[..6], &labels), Err(Error::Length(_))));
    }

    #[test]
    fn out_of_range_index_is_config_error() {
        let (images, labels) = fixture(2);
        let set = load_bytes(&images, &labels).unwrap();
        assert!(set.image(2).unwrap_err().is_config());
    }
}
