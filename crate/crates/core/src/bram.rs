//! Simulated BRAM storage and the faulty read path.
//!
//! The chip's tiles are modeled as one flat vector of 16-bit row words.
//! Writes always store clean data; faults act on the read path only, by
//! forcing masked bits to their stuck values. A fault cell is *manifested*
//! when the value it forces differs from what the row actually stores,
//! which is why stored patterns matter: all-ones rows expose every
//! stuck-at-0 cell, all-zero rows none of them.

use rand::Rng;

use crate::error::{Error, Result};
use crate::fvm::FaultMask;
use crate::profile::PlatformProfile;
use crate::seed;

/// What the array stores before faults apply.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Pattern {
    /// One 16-bit value repeated across every row of every tile.
    Uniform(u16),
    /// Explicit data for all rows, indexed `bram * rows_per_bram + row`.
    PerRow(Vec<u16>),
}

impl Pattern {
    /// Seeded random row data covering `total_rows` rows.
    pub fn random(seed: u64, total_rows: usize) -> Pattern {
        let mut rng = seed::stream(seed::derive(seed, seed::TAG_PATTERN, 0));
        Pattern::PerRow((0..total_rows).map(|_| rng.random::<u16>()).collect())
    }

    /// Parses a CLI pattern spec: a hex word like `ffff` or `aaaa`, or
    /// `random` for seeded per-row data.
    pub fn parse(spec: &str, seed: u64, total_rows: usize) -> Result<Pattern> {
        if spec.eq_ignore_ascii_case("random") {
            return Ok(Pattern::random(seed, total_rows));
        }
        u16::from_str_radix(spec, 16)
            .map(Pattern::Uniform)
            .map_err(|_| Error::InvalidConfig {
                reason: format!("pattern `{spec}` is neither a 16-bit hex word nor `random`"),
            })
    }

    /// Stored word for one global row index.
    pub fn row(&self, global_row: usize) -> u16 {
        match self {
            Pattern::Uniform(w) => *w,
            Pattern::PerRow(v) => v[global_row],
        }
    }
}

/// Flat store of every BRAM row on the chip.
#[derive(Debug, Clone)]
pub struct BramArray {
    num_brams: u32,
    rows: u32,
    col_mask: u16,
    words: Vec<u16>,
}

/// One manifested fault observed during a read-back.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ManifestedFault {
    pub bram: u32,
    pub row: u16,
    pub col: u8,
    pub stored: u8,
    pub read: u8,
}

impl BramArray {
    pub fn new(profile: &PlatformProfile) -> BramArray {
        BramArray {
            num_brams: profile.num_brams,
            rows: profile.bram_rows,
            col_mask: if profile.bram_cols == 16 {
                u16::MAX
            } else {
                (1u16 << profile.bram_cols) - 1
            },
            words: vec![0; profile.num_brams as usize * profile.bram_rows as usize],
        }
    }

    pub fn total_rows(&self) -> usize {
        self.words.len()
    }

    pub fn write_all(&mut self, pattern: &Pattern) -> Result<()> {
        match pattern {
            Pattern::Uniform(w) => self.words.fill(w & self.col_mask),
            Pattern::PerRow(rows) => {
                if rows.len() != self.words.len() {
                    return Err(Error::Geometry {
                        reason: format!(
                            "pattern supplies {} rows, array has {}",
                            rows.len(),
                            self.words.len()
                        ),
                    });
                }
                for (dst, src) in self.words.iter_mut().zip(rows) {
                    *dst = src & self.col_mask;
                }
            }
        }
        Ok(())
    }

    pub fn write_row(&mut self, bram: u32, row: u16, value: u16) {
        let idx = self.index(bram, row);
        self.words[idx] = value & self.col_mask;
    }

    pub fn stored(&self, bram: u32, row: u16) -> u16 {
        self.words[self.index(bram, row)]
    }

    /// Reads one row through the fault mask.
    pub fn read_row(&self, bram: u32, row: u16, mask: &FaultMask) -> u16 {
        mask.apply(bram, row, self.stored(bram, row)) & self.col_mask
    }

    fn index(&self, bram: u32, row: u16) -> usize {
        debug_assert!(bram < self.num_brams && (row as u32) < self.rows);
        bram as usize * self.rows as usize + row as usize
    }

    /// Counts mask cells whose forced value differs from the stored bit.
    ///
    /// Only masked cells can differ, so this never scans the full array.
    pub fn manifested_count(&self, mask: &FaultMask) -> u64 {
        let mut count = 0;
        for e in mask.entries() {
            let stored = (self.stored(e.bram, e.row) >> e.col) & 1;
            if stored as u8 != e.stuck {
                count += 1;
            }
        }
        count
    }

    /// Lists manifested faults in (bram, row, col) order.
    pub fn manifested_faults(&self, mask: &FaultMask) -> Vec<ManifestedFault> {
        let mut out = Vec::new();
        for e in mask.entries() {
            let stored = ((self.stored(e.bram, e.row) >> e.col) & 1) as u8;
            if stored != e.stuck {
                out.push(ManifestedFault {
                    bram: e.bram,
                    row: e.row,
                    col: e.col,
                    stored,
                    read: e.stuck,
                });
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fvm::{FaultMask, MaskEntry};
    use crate::profile::vc707;

    fn tiny_profile() -> PlatformProfile {
        let mut p = vc707();
        p.num_brams = 4;
        p
    }

    fn mask_of(entries: Vec<MaskEntry>) -> FaultMask {
        FaultMask::from_entries(540, 50.0, 0, 1024, entries)
    }

    #[test]
    fn clean_reads_match_stored() {
        let mut a = BramArray::new(&tiny_profile());
        a.write_all(&Pattern::Uniform(0xbeef)).unwrap();
        let empty = mask_of(vec![]);
        assert_eq!(a.read_row(2, 17, &empty), 0xbeef);
        assert_eq!(a.manifested_count(&empty), 0);
    }

    #[test]
    fn stuck_bits_manifest_only_against_opposite_data() {
        let mut a = BramArray::new(&tiny_profile());
        let mask = mask_of(vec![
            MaskEntry { bram: 1, row: 3, col: 5, stuck: 0 },
            MaskEntry { bram: 1, row: 3, col: 9, stuck: 1 },
        ]);

        a.write_all(&Pattern::Uniform(0xffff)).unwrap();
        assert_eq!(a.read_row(1, 3, &mask), 0xffff & !(1 << 5));
        assert_eq!(a.manifested_count(&mask), 1);
        let faults = a.manifested_faults(&mask);
        assert_eq!(faults.len(), 1);
        assert_eq!((faults[0].col, faults[0].stored, faults[0].read), (5, 1, 0));

        a.write_all(&Pattern::Uniform(0x0000)).unwrap();
        assert_eq!(a.read_row(1, 3, &mask), 1 << 9);
        assert_eq!(a.manifested_count(&mask), 1);

        // Stored bits already at the stuck value are silent.
        a.write_all(&Pattern::Uniform(1 << 5)).unwrap();
        assert_eq!(a.manifested_count(&mask), 2);
    }

    #[test]
    fn per_row_pattern_and_length_check() {
        let p = tiny_profile();
        let mut a = BramArray::new(&p);
        assert!(a.write_all(&Pattern::PerRow(vec![0; 7])).is_err());
        let rows = a.total_rows();
        a.write_all(&Pattern::PerRow((0..rows).map(|i| i as u16).collect())).unwrap();
        assert_eq!(a.stored(0, 100), 100);
        assert_eq!(a.stored(1, 0), 1024);
    }

    #[test]
    fn random_pattern_is_seeded() {
        let a = Pattern::random(5, 64);
        let b = Pattern::random(5, 64);
        let c = Pattern::random(6, 64);
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn pattern_parsing() {
        assert_eq!(Pattern::parse("ffff", 0, 8).unwrap(), Pattern::Uniform(0xffff));
        assert_eq!(Pattern::parse("AAAA", 0, 8).unwrap(), Pattern::Uniform(0xaaaa));
        assert_eq!(Pattern::parse("0", 0, 8).unwrap(), Pattern::Uniform(0));
        assert!(matches!(Pattern::parse("random", 3, 8).unwrap(), Pattern::PerRow(_)));
        assert!(Pattern::parse("xyz", 0, 8).is_err());
        assert!(Pattern::parse("12345", 0, 8).is_err());
    }
}
