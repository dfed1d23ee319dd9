//! Measurement drivers: voltage sweeps, run-to-run stability, and SECDED
//! coverage of the realized faults.
//!
//! ECC geometry: tiles cascade in groups of five, and each row across a
//! group forms one 72-bit protected word (64 data + 8 check bits). With
//! 16-bit tiles a group spans 80 columns, so the last 8 columns of every
//! fifth tile are padding: their faults count toward raw totals but belong
//! to no word. Word bit `j` lives in tile `group*5 + j/16`, column `j%16`;
//! bits 0..63 are data, 64..71 hold the parity byte (overall parity first).
//!
//! Counting never scans the full array: only masked cells can disagree
//! with the stored pattern, so all statistics derive from mask entries.

use rayon::prelude::*;

use crate::bram::Pattern;
use crate::error::Result;
use crate::fvm::{FaultMask, FaultVariationMap};
use crate::power::PowerCurve;
use crate::profile::PlatformProfile;
use crate::secded::{classify_word, encode64, FaultClass};
use crate::seed;

/// Bits per protected word.
pub const WORD_BITS: u32 = 72;
/// Data bits per protected word.
pub const DATA_BITS: u32 = 64;

/// Sweep parameters beyond what the map itself fixes.
#[derive(Debug, Clone)]
pub struct SweepOptions {
    pub pattern: Pattern,
    pub temp_c: f64,
    pub runs: u32,
    pub ecc: bool,
    /// Root for per-run seeds; runs are reproducible given this value.
    pub base_seed: u64,
}

/// One realized (voltage, run) measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunRecord {
    pub voltage_mv: u32,
    pub run: u32,
    pub faults_total: u64,
    pub faults_per_mbit: f64,
    pub correctable: u64,
    pub detectable: u64,
    pub undetectable: u64,
    pub power_w: f64,
}

/// Full sweep output, ordered by descending voltage then run index.
#[derive(Debug, Clone)]
pub struct SweepResult {
    pub records: Vec<RunRecord>,
}

/// Distribution of per-run fault counts at one voltage.
#[derive(Debug, Clone, Copy)]
pub struct StabilityStats {
    pub mean: f64,
    pub median: f64,
    pub std: f64,
    pub min: u64,
    pub max: u64,
    /// Sample standard deviation over the mean.
    pub rel_std: f64,
}

/// Aggregated SECDED damage classification.
#[derive(Debug, Clone, Copy, Default)]
pub struct CoverageReport {
    pub runs: u32,
    pub words_faulty: u64,
    pub correctable: u64,
    pub detectable: u64,
    pub undetectable: u64,
}

impl CoverageReport {
    pub fn fraction(&self, class: FaultClass) -> f64 {
        if self.words_faulty == 0 {
            return 0.0;
        }
        let n = match class {
            FaultClass::Correctable => self.correctable,
            FaultClass::Detectable => self.detectable,
            FaultClass::Undetectable => self.undetectable,
        };
        n as f64 / self.words_faulty as f64
    }
}

/// Tiles per cascaded word group for this geometry.
pub fn word_span(profile: &PlatformProfile) -> u32 {
    WORD_BITS.div_ceil(profile.bram_cols)
}

/// Stored bit at one cell under the plain (non-ECC) image.
fn pattern_bit(profile: &PlatformProfile, pattern: &Pattern, bram: u32, row: u16, col: u8) -> u8 {
    let global = bram as usize * profile.bram_rows as usize + row as usize;
    ((pattern.row(global) >> col) & 1) as u8
}

/// Counts mask cells whose stuck value differs from the stored pattern.
pub fn manifested_against_pattern(
    profile: &PlatformProfile,
    pattern: &Pattern,
    mask: &FaultMask,
) -> u64 {
    mask.entries()
        .iter()
        .filter(|e| pattern_bit(profile, pattern, e.bram, e.row, e.col) != e.stuck)
        .count() as u64
}

/// Per-run totals under the ECC image: raw manifested cells plus word
/// classification.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EccRunStats {
    pub manifested: u64,
    pub words_faulty: u64,
    pub correctable: u64,
    pub detectable: u64,
    pub undetectable: u64,
}

/// Data word stored at one (group, row) under the ECC image.
fn word_data(profile: &PlatformProfile, pattern: &Pattern, group: u32, row: u16) -> u64 {
    let span = word_span(profile);
    let cols = profile.bram_cols;
    let mut data = 0u64;
    for j in 0..DATA_BITS {
        let bram = group * span + j / cols;
        let col = (j % cols) as u8;
        data |= (pattern_bit(profile, pattern, bram, row, col) as u64) << j;
    }
    data
}

/// Classifies every word touched by the mask and counts manifested cells.
pub fn ecc_run_stats(
    profile: &PlatformProfile,
    pattern: &Pattern,
    mask: &FaultMask,
) -> EccRunStats {
    let span = word_span(profile);
    let cols = profile.bram_cols;
    let num_groups = profile.num_brams / span;

    // Gather mask cells per touched word; padding and leftover tiles are
    // handled inline against the raw pattern.
    let mut by_word: std::collections::HashMap<(u32, u16), Vec<(u8, u8)>> =
        std::collections::HashMap::new();
    let mut stats = EccRunStats::default();
    for e in mask.entries() {
        let group = e.bram / span;
        if group >= num_groups {
            stats.manifested +=
                (pattern_bit(profile, pattern, e.bram, e.row, e.col) != e.stuck) as u64;
            continue;
        }
        let j = (e.bram % span) * cols + e.col as u32;
        if j >= WORD_BITS {
            stats.manifested +=
                (pattern_bit(profile, pattern, e.bram, e.row, e.col) != e.stuck) as u64;
            continue;
        }
        by_word.entry((group, e.row)).or_default().push((j as u8, e.stuck));
    }

    // Deterministic aggregation order is irrelevant here: counts commute.
    for ((group, row), cells) in by_word {
        let data = word_data(profile, pattern, group, row);
        let clean = encode64(data);
        let mut rx = clean;
        let mut touched = false;
        for (j, stuck) in cells {
            let stored = if (j as u32) < DATA_BITS {
                ((clean.data >> j) & 1) as u8
            } else {
                ((clean.parity >> (j as u32 - DATA_BITS)) & 1) as u8
            };
            if stored == stuck {
                continue;
            }
            touched = true;
            stats.manifested += 1;
            if (j as u32) < DATA_BITS {
                rx.data ^= 1u64 << j;
            } else {
                rx.parity ^= 1u8 << (j as u32 - DATA_BITS);
            }
        }
        if !touched {
            continue;
        }
        stats.words_faulty += 1;
        match classify_word(data, rx) {
            FaultClass::Correctable => stats.correctable += 1,
            FaultClass::Detectable => stats.detectable += 1,
            FaultClass::Undetectable => stats.undetectable += 1,
        }
    }
    stats
}

/// Runs the full grid sweep. Per-run seeds derive from `base_seed` and the
/// run index only, so one run index means one jitter draw shared across
/// all voltages, and per-run fault sets nest down the grid.
pub fn run_sweep(fvm: &FaultVariationMap, opts: &SweepOptions) -> Result<SweepResult> {
    let profile = fvm.profile();
    let curve = PowerCurve::from_profile(profile)?;
    let mbit = profile.total_mbit();

    let mut tasks = Vec::new();
    for mv in profile.grid() {
        for run in 0..opts.runs {
            tasks.push((mv, run));
        }
    }
    let records = tasks
        .par_iter()
        .map(|(mv, run)| -> Result<RunRecord> {
            let run_seed = seed::derive(opts.base_seed, seed::TAG_RUN, *run as u64);
            let mask = fvm.realize(*mv, opts.temp_c, run_seed)?;
            let (faults_total, c, d, u) = if opts.ecc {
                let s = ecc_run_stats(profile, &opts.pattern, &mask);
                (s.manifested, s.correctable, s.detectable, s.undetectable)
            } else {
                (manifested_against_pattern(profile, &opts.pattern, &mask), 0, 0, 0)
            };
            let power_w = curve.eval(*mv, opts.ecc, 1.0)?.watts;
            Ok(RunRecord {
                voltage_mv: *mv,
                run: *run,
                faults_total,
                faults_per_mbit: faults_total as f64 / mbit,
                correctable: c,
                detectable: d,
                undetectable: u,
                power_w,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult { records })
}

impl SweepResult {
    /// Fault counts of every run at one voltage.
    pub fn counts_at(&self, voltage_mv: u32) -> Vec<u64> {
        self.records
            .iter()
            .filter(|r| r.voltage_mv == voltage_mv)
            .map(|r| r.faults_total)
            .collect()
    }

    /// Median fault count per grid level, in record order.
    pub fn median_curve(&self) -> Vec<(u32, f64)> {
        let mut levels: Vec<u32> = Vec::new();
        for r in &self.records {
            if !levels.contains(&r.voltage_mv) {
                levels.push(r.voltage_mv);
            }
        }
        levels.into_iter().map(|mv| (mv, median_u64(&self.counts_at(mv)))).collect()
    }

    pub fn stability_at(&self, voltage_mv: u32) -> StabilityStats {
        stability_stats(&self.counts_at(voltage_mv))
    }
}

fn median_u64(counts: &[u64]) -> f64 {
    let mut v = counts.to_vec();
    v.sort_unstable();
    if v.is_empty() {
        return 0.0;
    }
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2] as f64
    } else {
        (v[n / 2 - 1] + v[n / 2]) as f64 / 2.0
    }
}

/// Distribution summary of per-run fault counts.
pub fn stability_stats(counts: &[u64]) -> StabilityStats {
    assert!(!counts.is_empty(), "stability needs at least one run");
    let n = counts.len() as f64;
    let mean = counts.iter().sum::<u64>() as f64 / n;
    let var = if counts.len() > 1 {
        counts.iter().map(|c| (*c as f64 - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    let std = var.sqrt();
    StabilityStats {
        mean,
        median: median_u64(counts),
        std,
        min: *counts.iter().min().unwrap(),
        max: *counts.iter().max().unwrap(),
        rel_std: if mean > 0.0 { std / mean } else { 0.0 },
    }
}

/// Aggregates SECDED damage classes at one voltage over several runs.
pub fn ecc_coverage(
    fvm: &FaultVariationMap,
    voltage_mv: u32,
    temp_c: f64,
    runs: u32,
    pattern: &Pattern,
    base_seed: u64,
) -> Result<CoverageReport> {
    let profile = fvm.profile();
    let per_run = (0..runs)
        .into_par_iter()
        .map(|run| -> Result<EccRunStats> {
            let run_seed = seed::derive(base_seed, seed::TAG_RUN, run as u64);
            let mask = fvm.realize(voltage_mv, temp_c, run_seed)?;
            Ok(ecc_run_stats(profile, pattern, &mask))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut report = CoverageReport { runs, ..Default::default() };
    for s in per_run {
        report.words_faulty += s.words_faulty;
        report.correctable += s.correctable;
        report.detectable += s.detectable;
        report.undetectable += s.undetectable;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fvm::MaskEntry;
    use crate::profile::vc707;

    fn small_profile() -> PlatformProfile {
        let mut p = vc707();
        p.num_brams = 150;
        p
    }

    fn mask_of(entries: Vec<MaskEntry>) -> FaultMask {
        FaultMask::from_entries(540, 50.0, 0, 1024, entries)
    }

    #[test]
    fn word_geometry() {
        assert_eq!(word_span(&vc707()), 5);
        let mut p = vc707();
        p.bram_cols = 8;
        assert_eq!(word_span(&p), 9);
    }

    #[test]
    fn single_flip_per_word_is_correctable() {
        let p = small_profile();
        let pattern = Pattern::Uniform(0xffff);
        let mask = mask_of(vec![
            MaskEntry { bram: 0, row: 10, col: 3, stuck: 0 },
            MaskEntry { bram: 7, row: 20, col: 0, stuck: 0 },
            MaskEntry { bram: 12, row: 30, col: 15, stuck: 0 },
        ]);
        let s = ecc_run_stats(&p, &pattern, &mask);
        assert_eq!(s.manifested, 3);
        assert_eq!(s.words_faulty, 3);
        assert_eq!(s.correctable, 3);
        assert_eq!(s.detectable + s.undetectable, 0);
    }

    #[test]
    fn double_flip_same_word_is_detectable() {
        let p = small_profile();
        let pattern = Pattern::Uniform(0xffff);
        // Same group (tiles 0..4), same row: one word.
        let mask = mask_of(vec![
            MaskEntry { bram: 0, row: 10, col: 3, stuck: 0 },
            MaskEntry { bram: 2, row: 10, col: 9, stuck: 0 },
        ]);
        let s = ecc_run_stats(&p, &pattern, &mask);
        assert_eq!(s.manifested, 2);
        assert_eq!(s.words_faulty, 1);
        assert_eq!(s.detectable, 1);
    }

    #[test]
    fn parity_column_faults_join_their_word() {
        let p = small_profile();
        let pattern = Pattern::Uniform(0xffff);
        // All-ones data encodes to an all-ones parity byte, so a stuck-0
        // cell in a parity column (tile 4, cols 0..7) manifests.
        assert_eq!(encode64(u64::MAX).parity, 0xff);
        let mask = mask_of(vec![MaskEntry { bram: 4, row: 5, col: 2, stuck: 0 }]);
        let s = ecc_run_stats(&p, &pattern, &mask);
        assert_eq!(s.manifested, 1);
        assert_eq!(s.words_faulty, 1);
        assert_eq!(s.correctable, 1);
    }

    #[test]
    fn padding_columns_count_raw_but_form_no_words() {
        let p = small_profile();
        let pattern = Pattern::Uniform(0xffff);
        // Tile 4 cols 8..15 sit past bit 72 of the group word.
        let mask = mask_of(vec![MaskEntry { bram: 4, row: 5, col: 9, stuck: 0 }]);
        let s = ecc_run_stats(&p, &pattern, &mask);
        assert_eq!(s.manifested, 1);
        assert_eq!(s.words_faulty, 0);
    }

    #[test]
    fn silent_cells_do_not_mark_words() {
        let p = small_profile();
        // Stored zeros, stuck-at-0: nothing manifests.
        let pattern = Pattern::Uniform(0x0000);
        let mask = mask_of(vec![
            MaskEntry { bram: 1, row: 10, col: 3, stuck: 0 },
            MaskEntry { bram: 2, row: 10, col: 4, stuck: 0 },
        ]);
        let s = ecc_run_stats(&p, &pattern, &mask);
        assert_eq!(s, EccRunStats::default());
        assert_eq!(manifested_against_pattern(&p, &pattern, &mask), 0);
    }

    #[test]
    fn triple_flip_not_correctable() {
        let p = small_profile();
        let pattern = Pattern::Uniform(0xffff);
        let mask = mask_of(vec![
            MaskEntry { bram: 0, row: 10, col: 3, stuck: 0 },
            MaskEntry { bram: 1, row: 10, col: 9, stuck: 0 },
            MaskEntry { bram: 3, row: 10, col: 14, stuck: 0 },
        ]);
        let s = ecc_run_stats(&p, &pattern, &mask);
        assert_eq!(s.words_faulty, 1);
        assert_eq!(s.correctable, 0);
        assert_eq!(s.detectable + s.undetectable, 1);
    }

    #[test]
    fn sweep_shape_and_guardband() {
        let fvm = FaultVariationMap::generate(&small_profile(), 3, 1.0).unwrap();
        let opts = SweepOptions {
            pattern: Pattern::Uniform(0xffff),
            temp_c: 50.0,
            runs: 5,
            ecc: false,
            base_seed: 1,
        };
        let result = run_sweep(&fvm, &opts).unwrap();
        assert_eq!(result.records.len(), 8 * 5);
        for r in &result.records {
            if r.voltage_mv >= 610 {
                assert_eq!(r.faults_total, 0, "{} mV", r.voltage_mv);
            }
            assert!(r.power_w > 0.0);
        }
        let medians = result.median_curve();
        assert_eq!(medians[0].0, 610);
        for w in medians.windows(2) {
            assert!(w[1].1 >= w[0].1, "median curve must grow as voltage drops");
        }
        assert!(medians.last().unwrap().1 > 0.0);
    }

    #[test]
    fn sweep_is_deterministic() {
        let fvm = FaultVariationMap::generate(&small_profile(), 4, 1.0).unwrap();
        let opts = SweepOptions {
            pattern: Pattern::random(9, 150 * 1024),
            temp_c: 50.0,
            runs: 3,
            ecc: true,
            base_seed: 5,
        };
        let a = run_sweep(&fvm, &opts).unwrap();
        let b = run_sweep(&fvm, &opts).unwrap();
        assert_eq!(a.records, b.records);
    }

    #[test]
    fn per_run_counts_nest_down_the_grid() {
        let fvm = FaultVariationMap::generate(&small_profile(), 6, 1.0).unwrap();
        let opts = SweepOptions {
            pattern: Pattern::Uniform(0xffff),
            temp_c: 50.0,
            runs: 4,
            ecc: false,
            base_seed: 2,
        };
        let result = run_sweep(&fvm, &opts).unwrap();
        for run in 0..4 {
            let counts: Vec<u64> = result
                .records
                .iter()
                .filter(|r| r.run == run)
                .map(|r| r.faults_total)
                .collect();
            for w in counts.windows(2) {
                assert!(w[1] >= w[0], "run {run}: {counts:?}");
            }
        }
    }

    #[test]
    fn stability_stats_basics() {
        let s = stability_stats(&[10, 12, 11, 13, 14]);
        assert_eq!(s.min, 10);
        assert_eq!(s.max, 14);
        assert_eq!(s.median, 12.0);
        assert!((s.mean - 12.0).abs() < 1e-12);
        assert!(s.rel_std > 0.0);

        let even = stability_stats(&[1, 2, 3, 4]);
        assert_eq!(even.median, 2.5);
    }

    #[test]
    fn coverage_aggregates_runs() {
        let fvm = FaultVariationMap::generate(&small_profile(), 8, 1.0).unwrap();
        let pattern = Pattern::Uniform(0xffff);
        let cov = ecc_coverage(&fvm, 540, 50.0, 4, &pattern, 3).unwrap();
        assert_eq!(cov.runs, 4);
        assert!(cov.words_faulty > 0);
        assert_eq!(
            cov.correctable + cov.detectable + cov.undetectable,
            cov.words_faulty
        );
        let sum = cov.fraction(FaultClass::Correctable)
            + cov.fraction(FaultClass::Detectable)
            + cov.fraction(FaultClass::Undetectable);
        assert!((sum - 1.0).abs() < 1e-9);
    }
}
