//! IDX (MNIST/EMNIST) file format: big-endian magic and dimensions, then
//! unsigned-byte payload. Images use magic `0x00000803` with dims
//! `[N, 28, 28]`; labels use `0x00000801` with dims `[N]`.

use std::io::Read;
use std::path::Path;

use byteorder::{BigEndian, ByteOrder};

use crate::data::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::{IMAGE_PIXELS, IMAGE_SIDE, NUM_CLASSES};

pub const IMAGES_MAGIC: u32 = 0x0000_0803;
pub const LABELS_MAGIC: u32 = 0x0000_0801;

/// Load an images/labels IDX pair into a dataset, scaling pixels by 1/255.
pub fn load_idx(images_path: &Path, labels_path: &Path) -> Result<LabeledDataset> {
    let image_bytes = read_file(images_path)?;
    let label_bytes = read_file(labels_path)?;

    let images = parse_images(images_path, &image_bytes)?;
    let labels = parse_labels(labels_path, &label_bytes)?;

    let n_images = images.len() / IMAGE_PIXELS;
    if n_images != labels.len() {
        return Err(Error::IdxCountMismatch {
            images: n_images,
            labels: labels.len(),
        });
    }
    for (index, &label) in labels.iter().enumerate() {
        if label >= NUM_CLASSES {
            return Err(Error::LabelOutOfRange {
                index,
                label,
                num_classes: NUM_CLASSES,
            });
        }
    }
    LabeledDataset::new(images, labels)
}

/// Serialize a dataset back to an IDX pair. Pixels are recovered as
/// `round(v * 255)`, which is exact for data loaded by [`load_idx`].
pub fn write_idx(dataset: &LabeledDataset, images_path: &Path, labels_path: &Path) -> Result<()> {
    let n = dataset.len();
    let mut images = Vec::with_capacity(16 + n * IMAGE_PIXELS);
    images.extend_from_slice(&IMAGES_MAGIC.to_be_bytes());
    images.extend_from_slice(&(n as u32).to_be_bytes());
    images.extend_from_slice(&(IMAGE_SIDE as u32).to_be_bytes());
    images.extend_from_slice(&(IMAGE_SIDE as u32).to_be_bytes());
    for i in 0..n {
        images.extend(dataset.image(i).iter().map(|&v| (v * 255.0).round() as u8));
    }

    let mut labels = Vec::with_capacity(8 + n);
    labels.extend_from_slice(&LABELS_MAGIC.to_be_bytes());
    labels.extend_from_slice(&(n as u32).to_be_bytes());
    labels.extend(dataset.labels().iter().map(|&l| l as u8));

    std::fs::write(images_path, images)
        .map_err(|e| Error::io_at(images_path.display().to_string(), e))?;
    std::fs::write(labels_path, labels)
        .map_err(|e| Error::io_at(labels_path.display().to_string(), e))?;
    Ok(())
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io_at(path.display().to_string(), e))?;
    Ok(bytes)
}

fn parse_images(path: &Path, bytes: &[u8]) -> Result<Vec<f32>> {
    let name = path.display().to_string();
    if bytes.len() < 16 {
        return Err(Error::IdxTruncated {
            path: name,
            expected: 16,
            found: bytes.len(),
        });
    }
    let magic = BigEndian::read_u32(&bytes[0..4]);
    if magic != IMAGES_MAGIC {
        return Err(Error::IdxBadMagic {
            path: name,
            expected: IMAGES_MAGIC,
            found: magic,
        });
    }
    let n = BigEndian::read_u32(&bytes[4..8]) as usize;
    let rows = BigEndian::read_u32(&bytes[8..12]) as usize;
    let cols = BigEndian::read_u32(&bytes[12..16]) as usize;
    if n == 0 {
        return Err(Error::EmptyDataset(format!("{name} holds zero images")));
    }
    if rows != IMAGE_SIDE || cols != IMAGE_SIDE {
        return Err(Error::ShapeMismatch {
            context: format!("{name} image dimensions"),
            expected: vec![IMAGE_SIDE, IMAGE_SIDE],
            found: vec![rows, cols],
        });
    }
    let expected = 16 + n * rows * cols;
    if bytes.len() != expected {
        return Err(Error::IdxTruncated {
            path: name,
            expected,
            found: bytes.len(),
        });
    }
    Ok(bytes[16..].iter().map(|&b| b as f32 / 255.0).collect())
}

fn parse_labels(path: &Path, bytes: &[u8]) -> Result<Vec<usize>> {
    let name = path.display().to_string();
    if bytes.len() < 8 {
        return Err(Error::IdxTruncated {
            path: name,
            expected: 8,
            found: bytes.len(),
        });
    }
    let magic = BigEndian::read_u32(&bytes[0..4]);
    if magic != LABELS_MAGIC {
        return Err(Error::IdxBadMagic {
            path: name,
            expected: LABELS_MAGIC,
            found: magic,
        });
    }
    let n = BigEndian::read_u32(&bytes[4..8]) as usize;
    if n == 0 {
        return Err(Error::EmptyDataset(format!("{name} holds zero labels")));
    }
    let expected = 8 + n;
    if bytes.len() != expected {
        return Err(Error::IdxTruncated {
            path: name,
            expected,
            found: bytes.len(),
        });
    }
    Ok(bytes[8..].iter().map(|&b| b as usize).collect())
}
