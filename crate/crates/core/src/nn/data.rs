//! Image/label datasets in the IDX container format (the standard MNIST
//! file pair: magic 0x0803 for images, 0x0801 for labels, big-endian
//! dimensions, u8 payload).

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

pub const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
pub const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    pub rows: u32,
    pub cols: u32,
    /// Concatenated images, `rows * cols` pixels each.
    pub images: Vec<u8>,
    pub labels: Vec<u8>,
}

impl Dataset {
    pub fn new(rows: u32, cols: u32, images: Vec<u8>, labels: Vec<u8>) -> Result<Dataset> {
        let d = Dataset { rows, cols, images, labels };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        let pix = self.pixels_per_image();
        if pix == 0 {
            return Err(Error::InvalidConfig { reason: "empty image geometry".into() });
        }
        if self.images.len() % pix != 0 {
            return Err(Error::InvalidConfig {
                reason: format!(
                    "image payload {} not a multiple of {}x{}",
                    self.images.len(),
                    self.rows,
                    self.cols
                ),
            });
        }
        if self.images.len() / pix != self.labels.len() {
            return Err(Error::InvalidConfig {
                reason: format!(
                    "{} images but {} labels",
                    self.images.len() / pix,
                    self.labels.len()
                ),
            });
        }
        if let Some(l) = self.labels.iter().find(|l| **l > 9) {
            return Err(Error::InvalidConfig { reason: format!("label {l} out of 0..=9") });
        }
        Ok(())
    }

    pub fn pixels_per_image(&self) -> usize {
        (self.rows * self.cols) as usize
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn image(&self, i: usize) -> &[u8] {
        let pix = self.pixels_per_image();
        &self.images[i * pix..(i + 1) * pix]
    }

    /// Input activations for one image: pixel p maps to p/256 in the
    /// fraction-only 16-bit format, exactly representable as p << 7.
    pub fn activations(&self, i: usize) -> Vec<i16> {
        self.image(i).iter().map(|p| (*p as i16) << 7).collect()
    }

    pub fn load_idx(images_path: &Path, labels_path: &Path) -> Result<Dataset> {
        let img = read_all(images_path)?;
        let lab = read_all(labels_path)?;

        if img.len() < 16 {
            return Err(Error::parse(images_path, "truncated IDX image header"));
        }
        if be32(&img[0..4]) != IDX_IMAGES_MAGIC {
            return Err(Error::parse(images_path, "bad IDX image magic"));
        }
        let n = be32(&img[4..8]) as usize;
        let rows = be32(&img[8..12]);
        let cols = be32(&img[12..16]);
        let expect = 16 + n * (rows * cols) as usize;
        if img.len() != expect {
            return Err(Error::parse(
                images_path,
                format!("image payload is {} bytes, header implies {}", img.len(), expect),
            ));
        }

        if lab.len() < 8 {
            return Err(Error::parse(labels_path, "truncated IDX label header"));
        }
        if be32(&lab[0..4]) != IDX_LABELS_MAGIC {
            return Err(Error::parse(labels_path, "bad IDX label magic"));
        }
        let n_lab = be32(&lab[4..8]) as usize;
        if lab.len() != 8 + n_lab {
            return Err(Error::parse(labels_path, "label payload length mismatch"));
        }
        if n_lab != n {
            return Err(Error::parse(
                labels_path,
                format!("{n_lab} labels for {n} images"),
            ));
        }

        Dataset::new(rows, cols, img[16..].to_vec(), lab[8..].to_vec())
    }

    pub fn save_idx(&self, images_path: &Path, labels_path: &Path) -> Result<()> {
        let n = self.len() as u32;
        let mut img = Vec::with_capacity(16 + self.images.len());
        img.extend_from_slice(&IDX_IMAGES_MAGIC.to_be_bytes());
        img.extend_from_slice(&n.to_be_bytes());
        img.extend_from_slice(&self.rows.to_be_bytes());
        img.extend_from_slice(&self.cols.to_be_bytes());
        img.extend_from_slice(&self.images);
        write_all(images_path, &img)?;

        let mut lab = Vec::with_capacity(8 + self.labels.len());
        lab.extend_from_slice(&IDX_LABELS_MAGIC.to_be_bytes());
        lab.extend_from_slice(&n.to_be_bytes());
        lab.extend_from_slice(&self.labels);
        write_all(labels_path, &lab)
    }
}

fn be32(b: &[u8]) -> u32 {
    u32::from_be_bytes(b.try_into().unwrap())
}

fn read_all(path: &Path) -> Result<Vec<u8>> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    Ok(bytes)
}

fn write_all(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(bytes).map_err(|e| Error::io(path, e))
}
