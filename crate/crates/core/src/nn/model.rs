//! Network container and binary weight-file serialization.
//!
//! Weight file layout, all integers little-endian:
//!
//! ```text
//! magic "VSNN" | version u16 | layer_count u16
//! per layer: in_size u32 | out_size u32 | digit_bits u8 | frac_bits u8
//! per layer, in order: weights i16 × (out·in), row-major by output
//!                      then biases i16 × out
//! ```

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::nn::quant::QuantFormat;

pub const WEIGHT_MAGIC: [u8; 4] = *b"VSNN";
pub const WEIGHT_VERSION: u16 = 1;
/// Weights stored per tile: one 16-bit word per row.
pub const WEIGHTS_PER_BRAM: u32 = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerSpec {
    pub index: u32,
    pub in_size: u32,
    pub out_size: u32,
    pub format: QuantFormat,
}

impl LayerSpec {
    pub fn weight_count(&self) -> u32 {
        self.in_size * self.out_size
    }

    /// Tiles needed to hold this layer's weights.
    pub fn bram_count(&self) -> u32 {
        self.weight_count().div_ceil(WEIGHTS_PER_BRAM)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layer {
    pub spec: LayerSpec,
    /// Row-major by output neuron: weight(o, i) at `o * in_size + i`.
    pub weights: Vec<i16>,
    pub biases: Vec<i16>,
}

impl Layer {
    pub fn weight(&self, out: u32, inp: u32) -> i16 {
        self.weights[(out * self.spec.in_size + inp) as usize]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Network {
    pub layers: Vec<Layer>,
}

impl Network {
    pub fn new(layers: Vec<Layer>) -> Result<Network> {
        if layers.is_empty() {
            return Err(Error::InvalidConfig { reason: "network has no layers".into() });
        }
        for (j, layer) in layers.iter().enumerate() {
            let spec = &layer.spec;
            if spec.index as usize != j {
                return Err(Error::InvalidConfig {
                    reason: format!("layer {j} carries index {}", spec.index),
                });
            }
            if spec.in_size == 0 || spec.out_size == 0 {
                return Err(Error::InvalidConfig {
                    reason: format!("layer {j} has an empty dimension"),
                });
            }
            if layer.weights.len() != spec.weight_count() as usize {
                return Err(Error::InvalidConfig {
                    reason: format!(
                        "layer {j} holds {} weights, spec says {}",
                        layer.weights.len(),
                        spec.weight_count()
                    ),
                });
            }
            if layer.biases.len() != spec.out_size as usize {
                return Err(Error::InvalidConfig {
                    reason: format!("layer {j} bias length mismatch"),
                });
            }
            if j > 0 && layers[j - 1].spec.out_size != spec.in_size {
                return Err(Error::InvalidConfig {
                    reason: format!(
                        "layer {j} input {} does not chain from previous output {}",
                        spec.in_size,
                        layers[j - 1].spec.out_size
                    ),
                });
            }
        }
        Ok(Network { layers })
    }

    pub fn specs(&self) -> Vec<LayerSpec> {
        self.layers.iter().map(|l| l.spec).collect()
    }

    pub fn input_size(&self) -> u32 {
        self.layers[0].spec.in_size
    }

    pub fn output_size(&self) -> u32 {
        self.layers.last().unwrap().spec.out_size
    }

    pub fn total_weights(&self) -> u64 {
        self.layers.iter().map(|l| l.spec.weight_count() as u64).sum()
    }

    pub fn total_blocks(&self) -> u32 {
        self.layers.iter().map(|l| l.spec.bram_count()).sum()
    }

    /// Fraction of zero bits across all weight words.
    pub fn bit_sparsity(&self) -> f64 {
        let mut zeros = 0u64;
        let mut total = 0u64;
        for layer in &self.layers {
            for w in &layer.weights {
                zeros += (*w as u16).count_zeros() as u64;
                total += 16;
            }
        }
        zeros as f64 / total as f64
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::new();
        buf.extend_from_slice(&WEIGHT_MAGIC);
        buf.extend_from_slice(&WEIGHT_VERSION.to_le_bytes());
        buf.extend_from_slice(&(self.layers.len() as u16).to_le_bytes());
        for layer in &self.layers {
            buf.extend_from_slice(&layer.spec.in_size.to_le_bytes());
            buf.extend_from_slice(&layer.spec.out_size.to_le_bytes());
            buf.push(layer.spec.format.digit_bits as u8);
            buf.push(layer.spec.format.frac_bits as u8);
        }
        for layer in &self.layers {
            for w in layer.weights.iter().chain(layer.biases.iter()) {
                buf.extend_from_slice(&w.to_le_bytes());
            }
        }
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(&buf).map_err(|e| Error::io(path, e))?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Network> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)
            .and_then(|mut f| f.read_to_end(&mut bytes))
            .map_err(|e| Error::io(path, e))?;
        let mut r = Cursor { bytes: &bytes, pos: 0, path };

        if r.take(4)? != WEIGHT_MAGIC {
            return Err(Error::parse(path, "bad magic, not a weight file"));
        }
        let version = u16::from_le_bytes(r.take(2)?.try_into().unwrap());
        if version != WEIGHT_VERSION {
            return Err(Error::VersionMismatch {
                path: path.into(),
                found: version as u32,
                expected: WEIGHT_VERSION as u32,
            });
        }
        let count = u16::from_le_bytes(r.take(2)?.try_into().unwrap()) as usize;
        let mut specs = Vec::with_capacity(count);
        for j in 0..count {
            let in_size = u32::from_le_bytes(r.take(4)?.try_into().unwrap());
            let out_size = u32::from_le_bytes(r.take(4)?.try_into().unwrap());
            let digit = r.take(1)?[0] as u32;
            let frac = r.take(1)?[0] as u32;
            let format = QuantFormat::new(digit, frac)
                .map_err(|_| Error::parse(path, format!("layer {j}: bad format code")))?;
            specs.push(LayerSpec { index: j as u32, in_size, out_size, format });
        }
        let mut layers = Vec::with_capacity(count);
        for spec in specs {
            let mut words =
                |n: u32| -> Result<Vec<i16>> {
                    let raw = r.take(2 * n as usize)?;
                    Ok(raw
                        .chunks_exact(2)
                        .map(|c| i16::from_le_bytes([c[0], c[1]]))
                        .collect())
                };
            let weights = words(spec.weight_count())?;
            let biases = words(spec.out_size)?;
            layers.push(Layer { spec, weights, biases });
        }
        if r.pos != bytes.len() {
            return Err(Error::parse(path, "trailing bytes after last layer"));
        }
        Network::new(layers)
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::parse(self.path, "truncated weight file"));
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }
}

/// Layer shapes of the full-scale reference classifier: topology
/// (784, 1024, 512, 256, 128, 10), fraction-only weights except the final
/// layer, which needs a 4-bit integer component.
pub fn reference_specs() -> Vec<LayerSpec> {
    let sizes = [784u32, 1024, 512, 256, 128, 10];
    let q15 = QuantFormat::q15();
    let q4_11 = QuantFormat { digit_bits: 4, frac_bits: 11 };
    sizes
        .windows(2)
        .enumerate()
        .map(|(j, w)| LayerSpec {
            index: j as u32,
            in_size: w[0],
            out_size: w[1],
            format: if j == 4 { q4_11 } else { q15 },
        })
        .collect()
}
