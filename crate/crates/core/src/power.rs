//! BRAM subsystem power model.
//!
//! Calibrated (voltage, watts) measurements anchor a monotone piecewise
//! cubic (Fritsch-Carlson tangents), so the curve reproduces every
//! measured point exactly and never inverts between them. ECC adds the
//! one calibrated overhead point; away from that voltage the overhead is
//! extrapolated linearly with the voltage ratio and flagged as such.

use std::path::Path;

use crate::error::{Error, Result};
use crate::profile::PlatformProfile;

/// Interpolating curve over the profile's calibrated points.
#[derive(Debug, Clone)]
pub struct PowerCurve {
    /// (mv, watts) without ECC, ascending in mv.
    points: Vec<(f64, f64)>,
    /// Hermite tangents per point.
    tangents: Vec<f64>,
    /// (mv, extra watts) where the ECC overhead was measured.
    ecc_anchor: Option<(f64, f64)>,
}

/// One evaluated power figure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerEstimate {
    pub watts: f64,
    /// True when the ECC overhead had to be extrapolated away from its
    /// calibrated voltage.
    pub ecc_extrapolated: bool,
}

/// Fritsch-Carlson monotone tangents for sorted (x, y) data.
fn monotone_tangents(pts: &[(f64, f64)]) -> Vec<f64> {
    let n = pts.len();
    let h: Vec<f64> = pts.windows(2).map(|w| w[1].0 - w[0].0).collect();
    let d: Vec<f64> = pts.windows(2).map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0)).collect();
    let mut m = vec![0.0; n];
    m[0] = d[0];
    m[n - 1] = d[n - 2];
    for i in 1..n - 1 {
        if d[i - 1] * d[i] <= 0.0 {
            m[i] = 0.0;
        } else {
            let w1 = 2.0 * h[i] + h[i - 1];
            let w2 = h[i] + 2.0 * h[i - 1];
            m[i] = (w1 + w2) / (w1 / d[i - 1] + w2 / d[i]);
        }
    }
    // Clamp endpoint tangents to preserve monotonicity on the end spans.
    for (i, di) in [(0usize, d[0]), (n - 1, d[n - 2])] {
        if m[i] * di <= 0.0 {
            m[i] = 0.0;
        } else if m[i].abs() > 3.0 * di.abs() {
            m[i] = 3.0 * di;
        }
    }
    m
}

impl PowerCurve {
    pub fn from_profile(profile: &PlatformProfile) -> Result<PowerCurve> {
        let mut base: Vec<(f64, f64)> = profile
            .power_points
            .iter()
            .filter(|p| !p.ecc)
            .map(|p| (p.mv as f64, p.watts))
            .collect();
        base.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        if base.len() < 2 {
            return Err(Error::InvalidConfig {
                reason: "power model needs at least two non-ECC calibration points".into(),
            });
        }
        for w in base.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::InvalidConfig {
                    reason: format!("duplicate power calibration at {} mV", w[0].0),
                });
            }
            if w[0].1 > w[1].1 {
                return Err(Error::InvalidConfig {
                    reason: "power must not decrease as voltage rises".into(),
                });
            }
        }

        let mut ecc_anchor = None;
        for p in profile.power_points.iter().filter(|p| p.ecc) {
            let off = base.iter().find(|(mv, _)| *mv == p.mv as f64).ok_or_else(|| {
                Error::InvalidConfig {
                    reason: format!("ECC power point at {} mV has no non-ECC partner", p.mv),
                }
            })?;
            let overhead = p.watts - off.1;
            if overhead < 0.0 {
                return Err(Error::InvalidConfig {
                    reason: format!("ECC power at {} mV below the non-ECC figure", p.mv),
                });
            }
            if ecc_anchor.is_none() {
                ecc_anchor = Some((p.mv as f64, overhead));
            }
        }

        let tangents = monotone_tangents(&base);
        Ok(PowerCurve { points: base, tangents, ecc_anchor })
    }

    fn base_watts(&self, mv: f64) -> Result<f64> {
        let (lo, hi) = (self.points[0].0, self.points[self.points.len() - 1].0);
        if !(lo..=hi).contains(&mv) {
            return Err(Error::VoltageRange {
                voltage_mv: mv as u32,
                lo_mv: lo as u32,
                hi_mv: hi as u32,
            });
        }
        let i = match self.points.iter().position(|(x, _)| mv < *x) {
            Some(j) => j - 1,
            None => self.points.len() - 2,
        };
        let (x0, y0) = self.points[i];
        let (x1, y1) = self.points[i + 1];
        let h = x1 - x0;
        let t = (mv - x0) / h;
        let (t2, t3) = (t * t, t * t * t);
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        Ok(h00 * y0 + h10 * h * self.tangents[i] + h01 * y1 + h11 * h * self.tangents[i + 1])
    }

    /// Power draw at `mv`, optionally with ECC, scaled by a BRAM-count
    /// ratio for chips larger or smaller than the calibrated board.
    pub fn eval(&self, mv: u32, ecc: bool, scale: f64) -> Result<PowerEstimate> {
        let mut watts = self.base_watts(mv as f64)?;
        let mut extrapolated = false;
        if ecc {
            let (anchor_mv, overhead) = self.ecc_anchor.ok_or_else(|| Error::InvalidConfig {
                reason: "profile has no ECC power calibration".into(),
            })?;
            watts += overhead * (mv as f64 / anchor_mv);
            extrapolated = (mv as f64 - anchor_mv).abs() > f64::EPSILON;
        }
        Ok(PowerEstimate { watts: watts * scale, ecc_extrapolated: extrapolated })
    }

    /// Fractional saving moving from `from_mv` down to `to_mv`.
    pub fn saving_fraction(&self, from_mv: u32, to_mv: u32, ecc: bool) -> Result<f64> {
        let from = self.eval(from_mv, ecc, 1.0)?.watts;
        let to = self.eval(to_mv, ecc, 1.0)?.watts;
        Ok(1.0 - to / from)
    }
}

/// Writes `mv,mw,ecc` rows over the sweep grid, both ECC settings.
pub fn write_power_file(path: &Path, profile: &PlatformProfile) -> Result<()> {
    let curve = PowerCurve::from_profile(profile)?;
    let mut text = String::from("mv,mw,ecc\n");
    for ecc in [false, true] {
        for mv in profile.grid() {
            let est = curve.eval(mv, ecc, 1.0)?;
            text.push_str(&format!("{},{:.3},{}\n", mv, est.watts * 1000.0, ecc as u8));
        }
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Parses a power file back into (mv, watts, ecc) rows.
pub fn read_power_file(path: &Path) -> Result<Vec<(u32, f64, bool)>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if lineno == 0 {
            if line != "mv,mw,ecc" {
                return Err(Error::parse(path, format!("unexpected header `{line}`")));
            }
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(Error::parse(path, format!("line {}: need mv,mw,ecc", lineno + 1)));
        }
        let mv: u32 = fields[0]
            .parse()
            .map_err(|e| Error::parse(path, format!("line {}: {e}", lineno + 1)))?;
        let mw: f64 = fields[1]
            .parse()
            .map_err(|e| Error::parse(path, format!("line {}: {e}", lineno + 1)))?;
        let ecc = match fields[2] {
            "0" => false,
            "1" => true,
            other => {
                return Err(Error::parse(
                    path,
                    format!("line {}: ecc flag `{other}`", lineno + 1),
                ))
            }
        };
        rows.push((mv, mw / 1000.0, ecc));
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::{kc705, vc707};
    use proptest::prelude::*;

    #[test]
    fn reproduces_calibration_points_exactly() {
        let c = PowerCurve::from_profile(&vc707()).unwrap();
        assert!((c.eval(1000, false, 1.0).unwrap().watts - 2.4).abs() < 1e-12);
        assert!((c.eval(610, false, 1.0).unwrap().watts - 0.31).abs() < 1e-12);
        assert!((c.eval(540, false, 1.0).unwrap().watts - 0.198).abs() < 1e-12);
        let ecc = c.eval(540, true, 1.0).unwrap();
        assert!((ecc.watts - 0.211).abs() < 1e-12);
        assert!(!ecc.ecc_extrapolated);
    }

    #[test]
    fn guardband_to_crash_saving() {
        let c = PowerCurve::from_profile(&vc707()).unwrap();
        let s = c.saving_fraction(610, 540, false).unwrap();
        assert!((s - 0.361).abs() < 0.005, "{s}");
    }

    #[test]
    fn monotone_between_points() {
        let c = PowerCurve::from_profile(&vc707()).unwrap();
        let mut prev = -1.0;
        for mv in 540..=1000 {
            let w = c.eval(mv, false, 1.0).unwrap().watts;
            assert!(w >= prev - 1e-12, "{mv} mV: {w} < {prev}");
            assert!(w > 0.0);
            prev = w;
        }
    }

    #[test]
    fn ecc_overhead_extrapolates_with_voltage() {
        let c = PowerCurve::from_profile(&vc707()).unwrap();
        let at_crash = c.eval(540, true, 1.0).unwrap();
        let at_min = c.eval(610, true, 1.0).unwrap();
        assert!(at_min.ecc_extrapolated);
        let overhead_crash = at_crash.watts - c.eval(540, false, 1.0).unwrap().watts;
        let overhead_min = at_min.watts - c.eval(610, false, 1.0).unwrap().watts;
        assert!((overhead_crash - 0.013).abs() < 1e-12);
        assert!((overhead_min - 0.013 * 610.0 / 540.0).abs() < 1e-12);
    }

    #[test]
    fn scale_multiplies_watts() {
        let c = PowerCurve::from_profile(&vc707()).unwrap();
        let one = c.eval(700, false, 1.0).unwrap().watts;
        let two = c.eval(700, false, 2.0).unwrap().watts;
        assert!((two / one - 2.0).abs() < 1e-12);
    }

    #[test]
    fn out_of_range_rejected() {
        let c = PowerCurve::from_profile(&vc707()).unwrap();
        assert!(c.eval(500, false, 1.0).is_err());
        assert!(c.eval(1200, false, 1.0).is_err());
    }

    #[test]
    fn kc705_curve_is_scaled_vc707() {
        let a = PowerCurve::from_profile(&vc707()).unwrap();
        let b = PowerCurve::from_profile(&kc705()).unwrap();
        let ratio = b.eval(540, false, 1.0).unwrap().watts / a.eval(540, false, 1.0).unwrap().watts;
        assert!((ratio - 890.0 / 2060.0).abs() < 1e-9);
    }

    #[test]
    fn power_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("power.csv");
        write_power_file(&path, &vc707()).unwrap();
        let rows = read_power_file(&path).unwrap();
        assert_eq!(rows.len(), 16);
        let crash_off = rows.iter().find(|(mv, _, ecc)| *mv == 540 && !ecc).unwrap();
        assert!((crash_off.1 - 0.198).abs() < 1e-6);
        let crash_on = rows.iter().find(|(mv, _, ecc)| *mv == 540 && *ecc).unwrap();
        assert!((crash_on.1 - 0.211).abs() < 1e-6);
    }

    proptest! {
        #[test]
        fn interpolant_stays_monotone(
            ys in proptest::collection::vec(0.01f64..10.0, 3..6)
        ) {
            // Sort the y values ascending to make a monotone dataset over
            // fixed x knots, then sample densely.
            let mut ys = ys;
            ys.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let pts: Vec<(f64, f64)> =
                ys.iter().enumerate().map(|(i, y)| (i as f64 * 100.0, *y)).collect();
            let tangents = monotone_tangents(&pts);
            let curve = PowerCurve { points: pts.clone(), tangents, ecc_anchor: None };
            let mut prev = -f64::INFINITY;
            let hi = (pts.len() - 1) * 100;
            for mv in (0..=hi).step_by(7) {
                let w = curve.base_watts(mv as f64).unwrap();
                prop_assert!(w >= prev - 1e-9);
                prev = w;
            }
            for (x, y) in &pts {
                prop_assert!((curve.base_watts(*x).unwrap() - y).abs() < 1e-9);
            }
        }
    }
}
