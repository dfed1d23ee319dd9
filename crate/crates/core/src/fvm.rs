//! Fault variation map: which cells fail, and at what voltage.
//!
//! A chip's vulnerability is synthesized once per (profile, chip_seed,
//! chip_scale) triple. Each BRAM tile gets a vulnerability class, one to
//! three vulnerable columns, and a set of fault cells; each cell carries the
//! grid voltage at which it first fails and its stuck value. Fault sets are
//! fault-inclusion-property (FIP) nested by construction: dropping the
//! supply never removes a fault, it only adds new ones.
//!
//! Realization turns the map plus (voltage, temperature, run_seed) into a
//! concrete `FaultMask`. Run-to-run variation comes from a small Gaussian
//! supply jitter; each cell also owns a fixed sub-step offset below its grid
//! onset, so jitter moves a marginal fringe of cells in and out while exact
//! grid behaviour stays intact. Temperature thins the population with
//! per-cell coins shared across temperatures, keeping hot-run fault sets
//! subsets of cold-run ones.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use rand::distr::Distribution;
use rand::Rng;
use rand_distr::{Geometric, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profile::{PlatformProfile, TempMode};
use crate::seed;

/// Serialized map format version.
pub const FVM_VERSION: u32 = 1;

/// Per-tile vulnerability class, ordered by severity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VulnClass {
    Low,
    Mid,
    High,
}

impl fmt::Display for VulnClass {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        let s = match self {
            VulnClass::Low => "low",
            VulnClass::Mid => "mid",
            VulnClass::High => "high",
        };
        f.write_str(s)
    }
}

/// Chance of a tile having 1, 2, or 3 vulnerable columns.
pub const COL_COUNT_WEIGHTS: [(usize, f64); 3] = [(1, 0.80), (2, 0.17), (3, 0.03)];

/// One vulnerable cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FaultCell {
    pub row: u16,
    pub col: u8,
    /// Highest grid voltage at which this cell fails, millivolts.
    pub onset_mv: u16,
    /// Value the cell reads as once failed (0 or 1).
    pub stuck: u8,
}

/// Fault population of one BRAM tile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BramFaults {
    pub id: u32,
    pub class: VulnClass,
    /// Vulnerable columns, ascending. Cells only ever appear here.
    pub cols: Vec<u8>,
    /// Cells sorted by (row, col).
    pub cells: Vec<FaultCell>,
}

/// Full-chip fault variation map.
#[derive(Debug, Clone, PartialEq)]
pub struct FaultVariationMap {
    profile: PlatformProfile,
    pub chip_seed: u64,
    pub chip_scale: f64,
    pub brams: Vec<BramFaults>,
}

#[derive(Serialize, Deserialize)]
struct FvmFile {
    version: u32,
    profile: String,
    chip_seed: u64,
    chip_scale: f64,
    brams: Vec<BramFaults>,
}

/// Splits `n` slots across shares with largest-remainder rounding.
/// Shares are normalized first; published shares are rounded and may sum
/// slightly off 1.
fn apportion(n: u32, shares: &[f64; 3]) -> [u32; 3] {
    let sum: f64 = shares.iter().sum();
    let mut counts = [0u32; 3];
    let mut fracs: Vec<(usize, f64)> = Vec::new();
    let mut assigned = 0;
    for (i, s) in shares.iter().enumerate() {
        let exact = n as f64 * s / sum;
        counts[i] = exact.floor() as u32;
        assigned += counts[i];
        fracs.push((i, exact - exact.floor()));
    }
    fracs.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    for (i, _) in fracs.into_iter().take((n - assigned) as usize) {
        counts[i] += 1;
    }
    counts
}

fn shuffle<T>(v: &mut [T], rng: &mut impl Rng) {
    for i in (1..v.len()).rev() {
        let j = rng.random_range(0..=i);
        v.swap(i, j);
    }
}

/// Samples `k` distinct values from 0..n by partial shuffle.
fn sample_distinct(n: u32, k: u32, rng: &mut impl Rng) -> Vec<u16> {
    debug_assert!(k <= n);
    let mut idx: Vec<u16> = (0..n as u16).collect();
    for i in 0..k as usize {
        let j = rng.random_range(i..idx.len());
        idx.swap(i, j);
    }
    idx.truncate(k as usize);
    idx
}

impl FaultVariationMap {
    /// Synthesizes the map for one chip.
    ///
    /// Class counts and the zero-fault subset use exact largest-remainder
    /// apportionment with seeded shuffles, so population shares hold tightly
    /// on every seed. Per-class mean cell counts are renormalized so the
    /// chip-wide expectation matches `rate_at_crash * chip_scale`.
    pub fn generate(
        profile: &PlatformProfile,
        chip_seed: u64,
        chip_scale: f64,
    ) -> Result<FaultVariationMap> {
        profile.validate()?;
        if !(chip_scale.is_finite() && chip_scale > 0.0) {
            return Err(Error::InvalidConfig {
                reason: format!("chip_scale {chip_scale} must be finite and positive"),
            });
        }
        let n = profile.num_brams;
        let cells_per_bram = profile.cells_per_bram() as f64;

        let class_counts = apportion(n, &profile.cluster_shares);
        let mut classes = Vec::with_capacity(n as usize);
        for (class, count) in [VulnClass::Low, VulnClass::Mid, VulnClass::High]
            .iter()
            .zip(class_counts.iter())
        {
            classes.extend(std::iter::repeat(*class).take(*count as usize));
        }
        shuffle(&mut classes, &mut seed::stream(seed::derive(chip_seed, seed::TAG_CLASS, 0)));

        // Renormalize class means so the chip-wide expected cell count hits
        // the calibrated total. The published per-class rates and the
        // chip-wide rate were measured independently and disagree by ~10%;
        // the chip-wide rate wins, the class ratios are preserved.
        let target_cells =
            profile.rate_at_crash * profile.total_mbit() * chip_scale;
        let unscaled: f64 = class_counts
            .iter()
            .zip(profile.cluster_mean_rates.iter())
            .map(|(c, r)| *c as f64 * r * cells_per_bram)
            .sum();
        let alpha = target_cells / unscaled;
        let mean_cells: Vec<f64> = profile
            .cluster_mean_rates
            .iter()
            .map(|r| r * cells_per_bram * alpha)
            .collect();

        // Pick which low-class tiles stay fault-free even at crash.
        let mut low_ids: Vec<u32> = classes
            .iter()
            .enumerate()
            .filter(|(_, c)| **c == VulnClass::Low)
            .map(|(i, _)| i as u32)
            .collect();
        let n_zero = ((profile.zero_fault_fraction * n as f64).round() as u32)
            .min(low_ids.len() as u32);
        shuffle(&mut low_ids, &mut seed::stream(seed::derive(chip_seed, seed::TAG_ZERO, 0)));
        let zero_ids: std::collections::HashSet<u32> =
            low_ids.iter().take(n_zero as usize).copied().collect();

        // Mean for tiles that do fault, preserving the low-class total.
        let low_nonzero = (class_counts[0] - n_zero).max(1) as f64;
        let low_mean_nonzero = mean_cells[0] * class_counts[0] as f64 / low_nonzero;

        let onset_levels = profile.onset_levels();
        let growth = profile.growth();
        // Cumulative inclusion probability per onset level, ascending to 1
        // at the crash boundary.
        let onset_cdf: Vec<f64> = onset_levels
            .iter()
            .map(|mv| {
                let steps = (mv - profile.v_crash_mv) as f64 / profile.v_step_mv as f64;
                growth.powf(-steps)
            })
            .collect();

        let mut brams = Vec::with_capacity(n as usize);
        for (b, class) in classes.iter().enumerate() {
            let mut rng = seed::stream(seed::derive(chip_seed, seed::TAG_BRAM, b as u64));

            let raw_count: u64 = match class {
                VulnClass::Low => {
                    if zero_ids.contains(&(b as u32)) {
                        0
                    } else {
                        // Shifted geometric: support {1, 2, ...}, heavy tail.
                        let p = (1.0 / low_mean_nonzero).min(1.0);
                        1 + Geometric::new(p).expect("valid p").sample(&mut rng)
                    }
                }
                VulnClass::Mid | VulnClass::High => {
                    let mean = mean_cells[*class as usize];
                    Poisson::new(mean).expect("valid mean").sample(&mut rng) as u64
                }
            };

            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut n_cols = 1;
            for (k, w) in COL_COUNT_WEIGHTS {
                acc += w;
                if u < acc {
                    n_cols = k;
                    break;
                }
            }
            n_cols = n_cols.min(profile.bram_cols as usize);
            let mut cols: Vec<u8> = sample_distinct(profile.bram_cols, n_cols as u32, &mut rng)
                .into_iter()
                .map(|c| c as u8)
                .collect();
            cols.sort_unstable();

            let capacity = n_cols as u64 * profile.bram_rows as u64;
            let count = raw_count.min(capacity);

            // Spread cells over the vulnerable columns, then draw distinct
            // rows inside each column.
            let mut per_col = vec![0u32; n_cols];
            for _ in 0..count {
                let mut c = rng.random_range(0..n_cols);
                while per_col[c] >= profile.bram_rows {
                    c = (c + 1) % n_cols;
                }
                per_col[c] += 1;
            }
            let mut cells = Vec::with_capacity(count as usize);
            for (ci, &col) in cols.iter().enumerate() {
                for row in sample_distinct(profile.bram_rows, per_col[ci], &mut rng) {
                    let u: f64 = rng.random();
                    let level = onset_cdf
                        .iter()
                        .position(|f| u < *f)
                        .unwrap_or(onset_levels.len() - 1);
                    let stuck = if rng.random::<f64>() < profile.stuck_at_1_fraction {
                        1
                    } else {
                        0
                    };
                    cells.push(FaultCell {
                        row,
                        col,
                        onset_mv: onset_levels[level] as u16,
                        stuck,
                    });
                }
            }
            cells.sort_unstable_by_key(|c| (c.row, c.col));

            brams.push(BramFaults { id: b as u32, class: *class, cols, cells });
        }

        Ok(FaultVariationMap {
            profile: profile.clone(),
            chip_seed,
            chip_scale,
            brams,
        })
    }

    pub fn profile(&self) -> &PlatformProfile {
        &self.profile
    }

    /// Total fault cells that are active at `voltage_mv` on the exact grid
    /// (no jitter, reference temperature).
    pub fn cells_at(&self, voltage_mv: u32) -> u64 {
        self.brams
            .iter()
            .flat_map(|b| b.cells.iter())
            .filter(|c| c.onset_mv as u32 >= voltage_mv)
            .count() as u64
    }

    /// Per-tile fault-cell fraction at the crash boundary, the clustering
    /// feature.
    pub fn crash_rates(&self) -> Vec<f64> {
        let cells = self.profile.cells_per_bram() as f64;
        self.brams.iter().map(|b| b.cells.len() as f64 / cells).collect()
    }

    /// Fraction of tiles with no fault cells at all.
    pub fn zero_fault_fraction(&self) -> f64 {
        let zero = self.brams.iter().filter(|b| b.cells.is_empty()).count();
        zero as f64 / self.brams.len() as f64
    }

    /// Fraction of fault cells that are stuck-at-1.
    pub fn stuck_at_1_fraction(&self) -> f64 {
        let total: usize = self.brams.iter().map(|b| b.cells.len()).sum();
        if total == 0 {
            return 0.0;
        }
        let s1: usize = self
            .brams
            .iter()
            .flat_map(|b| b.cells.iter())
            .filter(|c| c.stuck == 1)
            .count();
        s1 as f64 / total as f64
    }

    /// Checks structural validity and the fault-inclusion property: the
    /// active set at each grid level contains the set at every higher level.
    pub fn verify_fip(&self) -> Result<()> {
        let p = &self.profile;
        if self.brams.len() != p.num_brams as usize {
            return Err(Error::Geometry {
                reason: format!(
                    "map has {} tiles, profile {} expects {}",
                    self.brams.len(),
                    p.name,
                    p.num_brams
                ),
            });
        }
        let levels = p.onset_levels();
        for b in &self.brams {
            if b.cols.is_empty() || b.cols.len() > 3 {
                return Err(Error::Geometry {
                    reason: format!("tile {} lists {} vulnerable columns", b.id, b.cols.len()),
                });
            }
            let mut seen = std::collections::HashSet::new();
            for c in &b.cells {
                if c.row as u32 >= p.bram_rows || c.col as u32 >= p.bram_cols {
                    return Err(Error::Geometry {
                        reason: format!("tile {} cell ({}, {}) out of range", b.id, c.row, c.col),
                    });
                }
                if !b.cols.contains(&c.col) {
                    return Err(Error::Geometry {
                        reason: format!(
                            "tile {} cell ({}, {}) outside vulnerable columns {:?}",
                            b.id, c.row, c.col, b.cols
                        ),
                    });
                }
                if !levels.contains(&(c.onset_mv as u32)) {
                    return Err(Error::Geometry {
                        reason: format!("tile {} onset {} mV off the grid", b.id, c.onset_mv),
                    });
                }
                if c.stuck > 1 {
                    return Err(Error::Geometry {
                        reason: format!("tile {} stuck value {} not a bit", b.id, c.stuck),
                    });
                }
                if !seen.insert((c.row, c.col)) {
                    return Err(Error::Geometry {
                        reason: format!("tile {} duplicates cell ({}, {})", b.id, c.row, c.col),
                    });
                }
            }
        }
        // Nesting across the grid. Onsets are scalars so this holds by
        // construction today; the explicit check pins the property against
        // future representation changes.
        let mut prev: std::collections::HashSet<(u32, u16, u8)> = std::collections::HashSet::new();
        for level in levels {
            let cur: std::collections::HashSet<(u32, u16, u8)> = self
                .brams
                .iter()
                .flat_map(|b| {
                    b.cells
                        .iter()
                        .filter(move |c| c.onset_mv as u32 >= level)
                        .map(move |c| (b.id, c.row, c.col))
                })
                .collect();
            if !prev.is_subset(&cur) {
                return Err(Error::Geometry {
                    reason: format!("fault set shrank stepping down to {level} mV"),
                });
            }
            prev = cur;
        }
        Ok(())
    }

    /// Fixed sub-step offset of one cell below its grid onset, millivolts.
    ///
    /// Offsets occupy the lower half of a grid step, uniformly. The fault
    /// set at an exact grid voltage is untouched, supply jitter thins a
    /// marginal fringe smoothly, and the guardband stays clean for any
    /// jitter below half a step.
    fn latent_offset_mv(&self, cell_index: u64) -> f64 {
        let u = seed::unit_f64(seed::derive(self.chip_seed, seed::TAG_LATENT, cell_index));
        u * self.profile.v_step_mv as f64 * 0.5
    }

    fn cell_index(&self, bram: u32, row: u16, col: u8) -> u64 {
        (bram as u64 * self.profile.bram_rows as u64 + row as u64)
            * self.profile.bram_cols as u64
            + col as u64
    }

    /// Realizes the fault mask for one run.
    ///
    /// Deterministic in (map, voltage, temperature, run_seed); the mask at a
    /// lower voltage or temperature under the same run_seed is a superset.
    pub fn realize(&self, voltage_mv: u32, temp_c: f64, run_seed: u64) -> Result<FaultMask> {
        let p = &self.profile;
        p.check_operable(voltage_mv)?;

        let mut jitter_rng = seed::stream(seed::derive(run_seed, seed::TAG_JITTER, 0));
        let z: f64 = StandardNormal.sample(&mut jitter_rng);
        let mut v_eff = voltage_mv as f64 + p.run_jitter_sigma_mv * z;

        let mut thin = 1.0;
        match p.temp_mode {
            TempMode::Thinning => thin = p.temp_factor(temp_c).min(1.0),
            TempMode::EquivalentVoltage => {
                v_eff += p.temp_mv_per_c * (temp_c - p.temp_ref_c);
            }
        }

        let mut entries = Vec::new();
        for b in &self.brams {
            for c in &b.cells {
                let idx = self.cell_index(b.id, c.row, c.col);
                let latent = c.onset_mv as f64 + self.latent_offset_mv(idx);
                if latent < v_eff {
                    continue;
                }
                if thin < 1.0 {
                    let coin = seed::unit_f64(seed::derive(run_seed, seed::TAG_TEMP, idx));
                    if coin >= thin {
                        continue;
                    }
                }
                entries.push(MaskEntry { bram: b.id, row: c.row, col: c.col, stuck: c.stuck });
            }
        }
        Ok(FaultMask::from_entries(
            voltage_mv,
            temp_c,
            run_seed,
            p.bram_rows,
            entries,
        ))
    }

    /// Writes the canonical JSON form.
    pub fn to_json_file(&self, path: &Path) -> Result<()> {
        let file = FvmFile {
            version: FVM_VERSION,
            profile: self.profile.name.clone(),
            chip_seed: self.chip_seed,
            chip_scale: self.chip_scale,
            brams: self.brams.clone(),
        };
        let text = serde_json::to_string(&file).expect("map serializes");
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    /// Reads a serialized map. Built-in profiles resolve by name; custom
    /// profiles must be supplied explicitly and must match the stored name.
    pub fn from_json_file(path: &Path, profile: Option<&PlatformProfile>) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: FvmFile =
            serde_json::from_str(&text).map_err(|e| Error::parse(path, format!("{e}")))?;
        if file.version != FVM_VERSION {
            return Err(Error::VersionMismatch {
                path: path.into(),
                found: file.version,
                expected: FVM_VERSION,
            });
        }
        let resolved = match profile {
            Some(p) => {
                if p.name != file.profile {
                    return Err(Error::InvalidConfig {
                        reason: format!(
                            "map was generated for profile `{}`, got `{}`",
                            file.profile, p.name
                        ),
                    });
                }
                p.clone()
            }
            None => PlatformProfile::builtin(&file.profile)?,
        };
        let fvm = FaultVariationMap {
            profile: resolved,
            chip_seed: file.chip_seed,
            chip_scale: file.chip_scale,
            brams: file.brams,
        };
        fvm.verify_fip()?;
        Ok(fvm)
    }
}

/// One masked cell for a realized run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaskEntry {
    pub bram: u32,
    pub row: u16,
    pub col: u8,
    pub stuck: u8,
}

/// Realized fault set for one (voltage, temperature, run_seed) triple,
/// indexed for O(1) row lookup during reads.
#[derive(Debug, Clone)]
pub struct FaultMask {
    pub voltage_mv: u32,
    pub temp_c: f64,
    pub run_seed: u64,
    rows_per_bram: u32,
    entries: Vec<MaskEntry>,
    /// bram * rows_per_bram + row -> (force-to-0 bits, force-to-1 bits).
    by_row: HashMap<u64, (u16, u16)>,
}

impl FaultMask {
    pub fn from_entries(
        voltage_mv: u32,
        temp_c: f64,
        run_seed: u64,
        rows_per_bram: u32,
        mut entries: Vec<MaskEntry>,
    ) -> Self {
        entries.sort_unstable_by_key(|e| (e.bram, e.row, e.col));
        entries.dedup();
        let mut by_row: HashMap<u64, (u16, u16)> = HashMap::new();
        for e in &entries {
            let key = e.bram as u64 * rows_per_bram as u64 + e.row as u64;
            let slot = by_row.entry(key).or_insert((0, 0));
            if e.stuck == 0 {
                slot.0 |= 1 << e.col;
            } else {
                slot.1 |= 1 << e.col;
            }
        }
        FaultMask { voltage_mv, temp_c, run_seed, rows_per_bram, entries, by_row }
    }

    pub fn entries(&self) -> &[MaskEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// (force-to-0, force-to-1) bit masks for one row.
    pub fn row_masks(&self, bram: u32, row: u16) -> (u16, u16) {
        let key = bram as u64 * self.rows_per_bram as u64 + row as u64;
        self.by_row.get(&key).copied().unwrap_or((0, 0))
    }

    /// Applies the mask to a stored row word.
    pub fn apply(&self, bram: u32, row: u16, stored: u16) -> u16 {
        let (clear, set) = self.row_masks(bram, row);
        (stored & !clear) | set
    }

    /// True if every entry of `self` also appears in `other`.
    pub fn subset_of(&self, other: &FaultMask) -> bool {
        let set: std::collections::HashSet<(u32, u16, u8)> =
            other.entries.iter().map(|e| (e.bram, e.row, e.col)).collect();
        self.entries.iter().all(|e| set.contains(&(e.bram, e.row, e.col)))
    }
}
