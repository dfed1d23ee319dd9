//! Packs network weights into simulated BRAM tiles and reads them back
//! through a fault mask.
//!
//! Layout is layer-major and row-major within a layer: one 16-bit weight
//! per tile row, `bram_rows` weights per logical tile, logical tiles
//! numbered consecutively across layers. A placement assignment maps each
//! logical tile to a physical tile of the fault map. Biases stay outside
//! the tiles and never fault.
//!
//! In ECC mode every four consecutive rows of a tile form a 64-bit
//! payload (row r contributes bits 16r..16r+15 within its group); the
//! check byte for each group is computed at store time and kept in a
//! fault-free sidecar, so only the payload is exposed to faults.

use crate::bram::BramArray;
use crate::error::{Error, Result};
use crate::fvm::FaultMask;
use crate::nn::model::Network;
use crate::placement::PlacementAssignment;
use crate::profile::PlatformProfile;
use crate::secded::{decode72, encode64, Codeword72, DecodeOutcome};

/// Rows per ECC payload group.
pub const ECC_GROUP_ROWS: u32 = 4;

#[derive(Debug, Clone)]
struct StoredBlock {
    layer: usize,
    phys: u32,
    /// Stored row images: the weight words as raw bits.
    rows: Vec<u16>,
    /// Check byte per 4-row group, computed over the clean payload.
    parity: Vec<u8>,
}

/// A network resident in placed tiles, ready for faulty readback.
#[derive(Debug, Clone)]
pub struct StoredImage {
    rows_per_bram: u32,
    num_brams: u32,
    blocks: Vec<StoredBlock>,
    layer_weight_counts: Vec<usize>,
}

impl StoredImage {
    pub fn store(
        network: &Network,
        assignment: &PlacementAssignment,
        profile: &PlatformProfile,
    ) -> Result<StoredImage> {
        let rows = profile.bram_rows;
        if rows % ECC_GROUP_ROWS != 0 {
            return Err(Error::Geometry {
                reason: format!("tile depth {rows} not divisible by the ECC group size"),
            });
        }
        let mut blocks = Vec::new();
        let mut logical = 0usize;
        for (j, layer) in network.layers.iter().enumerate() {
            for chunk in layer.weights.chunks(rows as usize) {
                let phys = *assignment.mapping.get(logical).ok_or_else(|| {
                    Error::CapacityExceeded {
                        what: "placement mapping".into(),
                        needed: network.total_blocks_for(rows) as usize,
                        available: assignment.mapping.len(),
                    }
                })?;
                if phys >= profile.num_brams {
                    return Err(Error::Geometry {
                        reason: format!(
                            "logical tile {logical} placed at {phys}, chip has {}",
                            profile.num_brams
                        ),
                    });
                }
                let row_bits: Vec<u16> = chunk.iter().map(|w| *w as u16).collect();
                let parity = (0..row_bits.len().div_ceil(ECC_GROUP_ROWS as usize))
                    .map(|g| encode64(group_payload(&row_bits, g)).parity)
                    .collect();
                blocks.push(StoredBlock { layer: j, phys, rows: row_bits, parity });
                logical += 1;
            }
        }
        if logical != assignment.mapping.len() {
            return Err(Error::InvalidConfig {
                reason: format!(
                    "assignment maps {} logical tiles, network needs {logical}",
                    assignment.mapping.len()
                ),
            });
        }
        Ok(StoredImage {
            rows_per_bram: rows,
            num_brams: profile.num_brams,
            blocks,
            layer_weight_counts: network.layers.iter().map(|l| l.weights.len()).collect(),
        })
    }

    pub fn physical_tiles(&self) -> Vec<u32> {
        self.blocks.iter().map(|b| b.phys).collect()
    }

    /// Dense chip image with the weights written at their physical rows
    /// and zeros elsewhere.
    pub fn bram_image(&self, profile: &PlatformProfile) -> BramArray {
        debug_assert_eq!(profile.bram_rows, self.rows_per_bram);
        debug_assert_eq!(profile.num_brams, self.num_brams);
        let mut array = BramArray::new(profile);
        for block in &self.blocks {
            for (r, bits) in block.rows.iter().enumerate() {
                array.write_row(block.phys, r as u16, *bits);
            }
        }
        array
    }

    /// Reads every layer's weights back through the mask.
    ///
    /// With `ecc` set, each 4-row group passes through the 72-bit decoder
    /// using its sidecar check byte: correctable groups come back clean,
    /// detected-uncorrectable groups zero-fill all four weights.
    pub fn read_weights(&self, mask: &FaultMask, ecc: bool) -> Vec<Vec<i16>> {
        let mut layers: Vec<Vec<i16>> = self
            .layer_weight_counts
            .iter()
            .map(|n| Vec::with_capacity(*n))
            .collect();
        for block in &self.blocks {
            let out = &mut layers[block.layer];
            if !ecc {
                for (r, bits) in block.rows.iter().enumerate() {
                    out.push(mask.apply(block.phys, r as u16, *bits) as i16);
                }
                continue;
            }
            for g in 0..block.parity.len() {
                let base = g * ECC_GROUP_ROWS as usize;
                let end = (base + ECC_GROUP_ROWS as usize).min(block.rows.len());
                let mut dirty = false;
                let mut data = 0u64;
                for r in base..end {
                    let read = mask.apply(block.phys, r as u16, block.rows[r]);
                    dirty |= read != block.rows[r];
                    data |= (read as u64) << (16 * (r - base));
                }
                let data = if dirty {
                    let decoded = decode72(Codeword72 { data, parity: block.parity[g] });
                    match decoded.outcome {
                        DecodeOutcome::DoubleDetected => 0,
                        _ => decoded.data,
                    }
                } else {
                    data
                };
                for r in base..end {
                    out.push((data >> (16 * (r - base))) as u16 as i16);
                }
            }
        }
        layers
    }
}

fn group_payload(rows: &[u16], group: usize) -> u64 {
    let base = group * ECC_GROUP_ROWS as usize;
    let mut data = 0u64;
    for r in base..(base + ECC_GROUP_ROWS as usize).min(rows.len()) {
        data |= (rows[r] as u64) << (16 * (r - base));
    }
    data
}

impl Network {
    /// Logical tiles needed at the given tile depth.
    pub fn total_blocks_for(&self, rows_per_bram: u32) -> u32 {
        self.layers
            .iter()
            .map(|l| l.spec.weight_count().div_ceil(rows_per_bram))
            .sum()
    }
}

/// Upper bound check for stored images: every placement index must fit.
pub fn check_capacity(network: &Network, profile: &PlatformProfile) -> Result<()> {
    let needed = network.total_blocks_for(profile.bram_rows) as usize;
    if needed > profile.num_brams as usize {
        return Err(Error::CapacityExceeded {
            what: "physical BRAM tiles".into(),
            needed,
            available: profile.num_brams as usize,
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fvm::MaskEntry;
    use crate::nn::model::{Layer, LayerSpec};
    use crate::nn::quant::QuantFormat;
    use crate::profile::vc707;

    fn small_profile() -> PlatformProfile {
        let mut p = vc707();
        p.num_brams = 16;
        p
    }

    fn two_block_network(rows: u32) -> Network {
        // One layer spanning 1.5 tiles at the given depth.
        let n = rows + rows / 2;
        let layer = Layer {
            spec: LayerSpec {
                index: 0,
                in_size: n,
                out_size: 1,
                format: QuantFormat::q15(),
            },
            weights: (0..n as i16).map(|i| i.wrapping_mul(257)).collect(),
            biases: vec![0],
        };
        Network::new(vec![layer]).unwrap()
    }

    fn empty_mask(rows: u32) -> FaultMask {
        FaultMask::from_entries(540, 50.0, 0, rows, Vec::new())
    }

    #[test]
    fn identity_placement_round_trips_with_empty_mask() {
        let p = small_profile();
        let net = two_block_network(p.bram_rows);
        let a = PlacementAssignment::identity(2);
        let stored = StoredImage::store(&net, &a, &p).unwrap();
        for ecc in [false, true] {
            let layers = stored.read_weights(&empty_mask(p.bram_rows), ecc);
            assert_eq!(layers.len(), 1);
            assert_eq!(layers[0], net.layers[0].weights);
        }
    }

    #[test]
    fn masked_bit_flips_the_read_weight() {
        let p = small_profile();
        let net = two_block_network(p.bram_rows);
        let a = PlacementAssignment::identity(2);
        let stored = StoredImage::store(&net, &a, &p).unwrap();
        // Weight 3 stores 3*257 = 0x0303; stuck-at-0 on bit 0 clears it.
        let mask = FaultMask::from_entries(
            540,
            50.0,
            0,
            p.bram_rows,
            vec![MaskEntry { bram: 0, row: 3, col: 0, stuck: 0 }],
        );
        let layers = stored.read_weights(&mask, false);
        assert_eq!(layers[0][3], 0x0302);
        assert_eq!(layers[0][4], net.layers[0].weights[4]);
    }

    #[test]
    fn ecc_corrects_single_bit_groups() {
        let p = small_profile();
        let net = two_block_network(p.bram_rows);
        let a = PlacementAssignment::identity(2);
        let stored = StoredImage::store(&net, &a, &p).unwrap();
        // One manifested bit per 4-row group, several groups.
        let entries = vec![
            MaskEntry { bram: 0, row: 0, col: 0, stuck: 0 },
            MaskEntry { bram: 0, row: 5, col: 8, stuck: 1 },
            MaskEntry { bram: 1, row: 2, col: 3, stuck: 1 },
        ];
        let mask = FaultMask::from_entries(540, 50.0, 0, p.bram_rows, entries);
        let layers = stored.read_weights(&mask, true);
        assert_eq!(layers[0], net.layers[0].weights);
    }

    #[test]
    fn ecc_zero_fills_detected_groups() {
        let p = small_profile();
        let net = two_block_network(p.bram_rows);
        let a = PlacementAssignment::identity(2);
        let stored = StoredImage::store(&net, &a, &p).unwrap();
        // Two manifested flips in rows 4..8 of tile 0: group 1 detects and
        // zeroes weights 4..8.
        let w = net.layers[0].weights.clone();
        let flip0 = if (w[4] >> 2) & 1 == 1 { 0 } else { 1 };
        let flip1 = if (w[6] >> 9) & 1 == 1 { 0 } else { 1 };
        let entries = vec![
            MaskEntry { bram: 0, row: 4, col: 2, stuck: flip0 },
            MaskEntry { bram: 0, row: 6, col: 9, stuck: flip1 },
        ];
        let mask = FaultMask::from_entries(540, 50.0, 0, p.bram_rows, entries);
        let layers = stored.read_weights(&mask, true);
        assert_eq!(&layers[0][4..8], &[0, 0, 0, 0]);
        assert_eq!(&layers[0][..4], &w[..4]);
        assert_eq!(&layers[0][8..], &w[8..]);
    }

    #[test]
    fn partial_final_group_round_trips() {
        let p = small_profile();
        // 1.5 tiles: block 1 holds rows/2 rows, so its last group may be
        // partial when rows/2 is not a multiple of 4; force that shape.
        let n = p.bram_rows + 2;
        let layer = Layer {
            spec: LayerSpec { index: 0, in_size: n, out_size: 1, format: QuantFormat::q15() },
            weights: (0..n as i16).collect(),
            biases: vec![0],
        };
        let net = Network::new(vec![layer]).unwrap();
        let a = PlacementAssignment::identity(2);
        let stored = StoredImage::store(&net, &a, &p).unwrap();
        let layers = stored.read_weights(&empty_mask(p.bram_rows), true);
        assert_eq!(layers[0], net.layers[0].weights);
    }

    #[test]
    fn wrong_assignment_length_rejected() {
        let p = small_profile();
        let net = two_block_network(p.bram_rows);
        assert!(StoredImage::store(&net, &PlacementAssignment::identity(1), &p).is_err());
        assert!(StoredImage::store(&net, &PlacementAssignment::identity(3), &p).is_err());
    }

    #[test]
    fn out_of_range_physical_tile_rejected() {
        let p = small_profile();
        let net = two_block_network(p.bram_rows);
        let mut a = PlacementAssignment::identity(2);
        a.mapping[1] = p.num_brams;
        assert!(StoredImage::store(&net, &a, &p).is_err());
    }

    #[test]
    fn bram_image_matches_stored_rows() {
        let p = small_profile();
        let net = two_block_network(p.bram_rows);
        let a = PlacementAssignment::identity(2);
        let stored = StoredImage::store(&net, &a, &p).unwrap();
        let image = stored.bram_image(&p);
        assert_eq!(image.stored(0, 3), (3i16.wrapping_mul(257)) as u16);
        assert_eq!(image.stored(1, 0), (p.bram_rows as i16).wrapping_mul(257) as u16);
        assert_eq!(image.stored(2, 0), 0);
    }
}
