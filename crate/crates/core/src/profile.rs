//! Platform profiles: chip geometry, voltage envelope, and the calibrated
//! fault-rate curve.
//!
//! A profile freezes everything the synthesizer and simulator need to know
//! about one board: how many BRAM tiles it has, where the guardband and
//! crash voltages sit, how fast faults multiply per 10 mV step, how
//! vulnerability is distributed across tiles, and the measured power points.
//! Two built-in profiles ship with the crate; custom boards load from JSON.
//!
//! Throughout the crate a Mbit is 2^20 bits, matching how the per-Mbit
//! fault rates were calibrated.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Bits per Mbit for all rate reporting.
pub const MBIT: f64 = (1u64 << 20) as f64;

/// How temperature enters the fault model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TempMode {
    /// Fault population is thinned by the linear factor
    /// `max(0, 1 - temp_slope * (T - temp_ref))`.
    Thinning,
    /// Temperature shifts the effective supply voltage by
    /// `temp_mv_per_c * (T - temp_ref)` millivolts instead.
    EquivalentVoltage,
}

/// One calibrated (voltage, power) measurement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerPoint {
    pub mv: u32,
    pub watts: f64,
    pub ecc: bool,
}

/// Fixed description of one board's BRAM population and fault behaviour.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlatformProfile {
    pub name: String,
    pub num_brams: u32,
    pub bram_rows: u32,
    pub bram_cols: u32,
    /// Nominal supply in millivolts.
    pub v_nom_mv: u32,
    /// Guardband boundary: no faults at or above this voltage.
    pub v_min_mv: u32,
    /// Lowest operable voltage; below it reads no longer complete.
    pub v_crash_mv: u32,
    /// Sweep step in millivolts.
    pub v_step_mv: u32,
    /// Faults per Mbit at `v_crash` (all-ones pattern, reference temperature).
    pub rate_at_crash: f64,
    /// Population shares of the low/mid/high vulnerability classes.
    pub cluster_shares: [f64; 3],
    /// Mean fraction of a tile's cells faulty at `v_crash`, per class,
    /// before chip-level renormalization against `rate_at_crash`.
    pub cluster_mean_rates: [f64; 3],
    /// Fraction of tiles that show no faults even at `v_crash`.
    pub zero_fault_fraction: f64,
    /// Fraction of fault cells that read as stuck-at-1 instead of stuck-at-0.
    pub stuck_at_1_fraction: f64,
    /// Run-to-run supply jitter, millivolts (standard deviation).
    pub run_jitter_sigma_mv: f64,
    /// Reference die temperature for the calibrated rates, Celsius.
    pub temp_ref_c: f64,
    /// Fault-count reduction per degree above `temp_ref_c` (thinning mode).
    pub temp_slope_per_c: f64,
    /// Equivalent supply shift per degree (equivalent-voltage mode).
    pub temp_mv_per_c: f64,
    pub temp_mode: TempMode,
    /// Calibrated board power measurements for the BRAM subsystem.
    pub power_points: Vec<PowerPoint>,
}

impl PlatformProfile {
    /// Built-in profile by name (`vc707` or `kc705`).
    pub fn builtin(name: &str) -> Result<Self> {
        match name {
            "vc707" => Ok(vc707()),
            "kc705" => Ok(kc705()),
            other => Err(Error::UnknownProfile { name: other.to_string() }),
        }
    }

    /// Loads and validates a custom profile from JSON.
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let profile: PlatformProfile = serde_json::from_str(&text)
            .map_err(|e| Error::parse(path, format!("{e}")))?;
        profile.validate()?;
        Ok(profile)
    }

    pub fn to_json_file(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("profile serializes");
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |reason: String| Err(Error::InvalidConfig { reason });
        if self.num_brams == 0 || self.bram_rows == 0 || self.bram_cols == 0 {
            return fail("geometry fields must be nonzero".into());
        }
        if self.bram_cols > 16 {
            return fail(format!("bram_cols {} exceeds the 16-bit row width", self.bram_cols));
        }
        if !(self.v_crash_mv < self.v_min_mv && self.v_min_mv < self.v_nom_mv) {
            return fail("need v_crash < v_min < v_nom".into());
        }
        if self.v_step_mv == 0 || (self.v_min_mv - self.v_crash_mv) % self.v_step_mv != 0 {
            return fail("v_step must evenly divide the [v_crash, v_min] span".into());
        }
        if self.rate_at_crash <= 1.0 {
            return fail("rate_at_crash must exceed 1 fault/Mbit".into());
        }
        let share_sum: f64 = self.cluster_shares.iter().sum();
        if (share_sum - 1.0).abs() > 0.01 {
            return fail(format!("cluster_shares sum to {share_sum}, not 1"));
        }
        if !(self.cluster_mean_rates[0] < self.cluster_mean_rates[1]
            && self.cluster_mean_rates[1] < self.cluster_mean_rates[2])
        {
            return fail("cluster_mean_rates must be strictly ascending".into());
        }
        for (what, v) in [
            ("cluster_shares", &self.cluster_shares[..]),
            ("cluster_mean_rates", &self.cluster_mean_rates[..]),
        ] {
            if v.iter().any(|x| !(0.0..=1.0).contains(x)) {
                return fail(format!("{what} must lie in [0, 1]"));
            }
        }
        if !(0.0..=1.0).contains(&self.zero_fault_fraction)
            || self.zero_fault_fraction >= self.cluster_shares[0]
        {
            return fail("zero_fault_fraction must fit inside the low class share".into());
        }
        if !(0.0..=1.0).contains(&self.stuck_at_1_fraction) {
            return fail("stuck_at_1_fraction must lie in [0, 1]".into());
        }
        if self.run_jitter_sigma_mv < 0.0 || self.run_jitter_sigma_mv >= self.v_step_mv as f64 {
            return fail("run jitter sigma must be non-negative and below one step".into());
        }
        Ok(())
    }

    pub fn cells_per_bram(&self) -> u64 {
        self.bram_rows as u64 * self.bram_cols as u64
    }

    pub fn total_bits(&self) -> u64 {
        self.num_brams as u64 * self.cells_per_bram()
    }

    pub fn total_mbit(&self) -> f64 {
        self.total_bits() as f64 / MBIT
    }

    /// Number of 10 mV steps strictly below the guardband.
    pub fn num_steps(&self) -> u32 {
        (self.v_min_mv - self.v_crash_mv) / self.v_step_mv
    }

    /// Per-step fault multiplication factor. Calibrated so the rate decays
    /// from `rate_at_crash` to one fault/Mbit over the guardband span.
    pub fn growth(&self) -> f64 {
        self.rate_at_crash.powf(1.0 / self.num_steps() as f64)
    }

    /// Sweep grid in millivolts, descending from `v_min` to `v_crash`.
    pub fn grid(&self) -> Vec<u32> {
        (0..=self.num_steps())
            .map(|i| self.v_min_mv - i * self.v_step_mv)
            .collect()
    }

    /// Grid levels that can host fault onsets (strictly below `v_min`),
    /// descending toward `v_crash`.
    pub fn onset_levels(&self) -> Vec<u32> {
        self.grid()[1..].to_vec()
    }

    pub fn check_operable(&self, voltage_mv: u32) -> Result<()> {
        if voltage_mv < self.v_crash_mv {
            return Err(Error::CrashRegion {
                voltage_mv,
                crash_mv: self.v_crash_mv,
            });
        }
        if voltage_mv > self.v_nom_mv {
            return Err(Error::VoltageRange {
                voltage_mv,
                lo_mv: self.v_crash_mv,
                hi_mv: self.v_nom_mv,
            });
        }
        Ok(())
    }

    /// Temperature factor on fault counts in thinning mode. 1 at the
    /// reference temperature, reaching 0 where the linear ramp crosses it.
    pub fn temp_factor(&self, temp_c: f64) -> f64 {
        (1.0 - self.temp_slope_per_c * (temp_c - self.temp_ref_c)).max(0.0)
    }

    /// Expected chip-wide fault rate in faults per Mbit.
    ///
    /// Zero at or above the guardband; below it the rate multiplies by
    /// `growth()` per 10 mV step down, reaching `rate_at_crash` at the
    /// crash boundary. `chip_scale` scales the whole curve; temperature
    /// enters via the profile's configured mode.
    pub fn expected_rate(&self, voltage_mv: u32, temp_c: f64, chip_scale: f64) -> Result<f64> {
        self.check_operable(voltage_mv)?;
        let v_eff = match self.temp_mode {
            TempMode::Thinning => voltage_mv as f64,
            TempMode::EquivalentVoltage => {
                voltage_mv as f64 + self.temp_mv_per_c * (temp_c - self.temp_ref_c)
            }
        };
        if v_eff >= self.v_min_mv as f64 {
            return Ok(0.0);
        }
        let steps_above_crash = (v_eff - self.v_crash_mv as f64) / self.v_step_mv as f64;
        let mut rate = self.rate_at_crash * self.growth().powf(-steps_above_crash) * chip_scale;
        if self.temp_mode == TempMode::Thinning {
            rate *= self.temp_factor(temp_c);
        }
        Ok(rate)
    }
}

/// VC707 evaluation board: 2060 BRAM tiles, faults first appear at 600 mV
/// and reach 652 faults/Mbit at the 540 mV crash boundary.
pub fn vc707() -> PlatformProfile {
    PlatformProfile {
        name: "vc707".into(),
        num_brams: 2060,
        bram_rows: 1024,
        bram_cols: 16,
        v_nom_mv: 1000,
        v_min_mv: 610,
        v_crash_mv: 540,
        v_step_mv: 10,
        rate_at_crash: 652.0,
        cluster_shares: [0.886, 0.094, 0.018],
        cluster_mean_rates: [0.0002, 0.0024, 0.0086],
        zero_fault_fraction: 0.389,
        stuck_at_1_fraction: 0.001,
        run_jitter_sigma_mv: 0.16,
        temp_ref_c: 50.0,
        temp_slope_per_c: 0.0222,
        temp_mv_per_c: 0.40,
        temp_mode: TempMode::Thinning,
        power_points: vec![
            PowerPoint { mv: 1000, watts: 2.4, ecc: false },
            PowerPoint { mv: 610, watts: 0.31, ecc: false },
            PowerPoint { mv: 540, watts: 0.198, ecc: false },
            PowerPoint { mv: 540, watts: 0.211, ecc: true },
        ],
    }
}

/// KC705 evaluation board: 890 BRAM tiles, 254 faults/Mbit at crash.
/// Power points are the VC707 curve scaled by the BRAM-count ratio, since
/// only the VC707 BRAM subsystem was measured directly.
pub fn kc705() -> PlatformProfile {
    let scale = 890.0 / 2060.0;
    PlatformProfile {
        name: "kc705".into(),
        num_brams: 890,
        bram_rows: 1024,
        bram_cols: 16,
        v_nom_mv: 1000,
        v_min_mv: 610,
        v_crash_mv: 540,
        v_step_mv: 10,
        rate_at_crash: 254.0,
        cluster_shares: [0.934, 0.057, 0.009],
        cluster_mean_rates: [0.0001, 0.0017, 0.0074],
        zero_fault_fraction: 0.452,
        stuck_at_1_fraction: 0.001,
        run_jitter_sigma_mv: 0.16,
        temp_ref_c: 50.0,
        temp_slope_per_c: 0.0222,
        temp_mv_per_c: 0.40,
        temp_mode: TempMode::Thinning,
        power_points: vec![
            PowerPoint { mv: 1000, watts: 2.4 * scale, ecc: false },
            PowerPoint { mv: 610, watts: 0.31 * scale, ecc: false },
            PowerPoint { mv: 540, watts: 0.198 * scale, ecc: false },
            PowerPoint { mv: 540, watts: 0.211 * scale, ecc: true },
        ],
    }
}

/// Resolves `--platform`: a built-in name or a path to a profile JSON.
pub fn resolve(spec: &str) -> Result<PlatformProfile> {
    match PlatformProfile::builtin(spec) {
        Ok(p) => Ok(p),
        Err(_) if Path::new(spec).exists() => PlatformProfile::from_json_file(Path::new(spec)),
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_validate() {
        vc707().validate().unwrap();
        kc705().validate().unwrap();
    }

    #[test]
    fn growth_matches_calibration() {
        assert!((vc707().growth() - 2.5237).abs() < 0.001, "{}", vc707().growth());
        assert!((kc705().growth() - 2.2061).abs() < 0.001, "{}", kc705().growth());
    }

    #[test]
    fn grid_has_eight_levels() {
        let g = vc707().grid();
        assert_eq!(g, vec![610, 600, 590, 580, 570, 560, 550, 540]);
        assert_eq!(vc707().onset_levels().len(), 7);
    }

    #[test]
    fn rate_zero_at_and_above_guardband() {
        let p = vc707();
        for mv in [610, 620, 700, 1000] {
            assert_eq!(p.expected_rate(mv, 50.0, 1.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn rate_at_crash_is_calibrated() {
        let p = vc707();
        let r = p.expected_rate(540, 50.0, 1.0).unwrap();
        assert!((r - 652.0).abs() < 1e-9, "{r}");
    }

    #[test]
    fn rate_multiplies_per_step() {
        let p = vc707();
        let g = p.growth();
        for mv in [550, 560, 570, 580, 590, 600] {
            let hi = p.expected_rate(mv, 50.0, 1.0).unwrap();
            let lo = p.expected_rate(mv - 10, 50.0, 1.0).unwrap();
            assert!((lo / hi - g).abs() < 1e-9);
        }
    }

    #[test]
    fn rate_monotone_in_voltage_and_temperature() {
        let p = vc707();
        let mut prev = f64::INFINITY;
        for mv in (540..=1000).step_by(10) {
            let r = p.expected_rate(mv, 50.0, 1.0).unwrap();
            assert!(r <= prev);
            prev = r;
        }
        let mut prev = f64::INFINITY;
        for t in [50.0, 60.0, 70.0, 80.0, 90.0] {
            let r = p.expected_rate(540, t, 1.0).unwrap();
            assert!(r <= prev);
            prev = r;
        }
    }

    #[test]
    fn temp_factor_one_third_at_eighty() {
        let f = vc707().temp_factor(80.0);
        assert!((f - 1.0 / 3.0).abs() < 0.01, "{f}");
        assert_eq!(vc707().temp_factor(50.0), 1.0);
        assert_eq!(vc707().temp_factor(200.0), 0.0);
    }

    #[test]
    fn chip_scale_multiplies() {
        let p = kc705();
        let r1 = p.expected_rate(540, 50.0, 1.0).unwrap();
        let r4 = p.expected_rate(540, 50.0, 4.1).unwrap();
        assert!((r4 / r1 - 4.1).abs() < 1e-9);
    }

    #[test]
    fn crash_region_rejected() {
        let p = vc707();
        assert!(matches!(
            p.expected_rate(530, 50.0, 1.0),
            Err(Error::CrashRegion { voltage_mv: 530, crash_mv: 540 })
        ));
        assert!(matches!(p.expected_rate(1010, 50.0, 1.0), Err(Error::VoltageRange { .. })));
    }

    #[test]
    fn json_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("custom.json");
        let mut p = vc707();
        p.name = "bench-a".into();
        p.num_brams = 64;
        p.to_json_file(&path).unwrap();
        let back = PlatformProfile::from_json_file(&path).unwrap();
        assert_eq!(p, back);
    }

    #[test]
    fn invalid_profiles_rejected() {
        let mut p = vc707();
        p.cluster_shares = [0.5, 0.4, 0.2];
        assert!(p.validate().is_err());

        let mut p = vc707();
        p.v_min_mv = 540;
        assert!(p.validate().is_err());

        let mut p = vc707();
        p.cluster_mean_rates = [0.003, 0.002, 0.009];
        assert!(p.validate().is_err());
    }
}
