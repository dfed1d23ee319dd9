//! 16-bit fixed-point formats Q(sign, d, f): one sign bit, `d` integer
//! bits, `f` fraction bits, always totalling 16.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuantFormat {
    pub digit_bits: u32,
    pub frac_bits: u32,
}

impl QuantFormat {
    pub fn new(digit_bits: u32, frac_bits: u32) -> Result<QuantFormat> {
        if 1 + digit_bits + frac_bits != 16 {
            return Err(Error::InvalidConfig {
                reason: format!(
                    "format Q(1,{digit_bits},{frac_bits}) must total 16 bits"
                ),
            });
        }
        Ok(QuantFormat { digit_bits, frac_bits })
    }

    /// Fraction-only format covering [-1, 1).
    pub const fn q15() -> QuantFormat {
        QuantFormat { digit_bits: 0, frac_bits: 15 }
    }

    pub fn scale(&self) -> f64 {
        (1u32 << self.frac_bits) as f64
    }

    pub fn min_value(&self) -> f64 {
        -((1u64 << self.digit_bits) as f64)
    }

    pub fn max_value(&self) -> f64 {
        (1u64 << self.digit_bits) as f64 - 1.0 / self.scale()
    }

    /// Round to nearest (half away from zero), saturating at the range edges.
    pub fn quantize(&self, value: f64) -> i16 {
        let scaled = (value * self.scale()).round();
        scaled.clamp(i16::MIN as f64, i16::MAX as f64) as i16
    }

    pub fn dequantize(&self, word: i16) -> f64 {
        word as f64 / self.scale()
    }
}

impl std::fmt::Display for QuantFormat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Q(1,{},{})", self.digit_bits, self.frac_bits)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn frozen_examples() {
        let q15 = QuantFormat::q15();
        assert_eq!(q15.quantize(0.5), 0x4000);
        assert_eq!(q15.quantize(1.2), 0x7FFF);
        let q4_11 = QuantFormat::new(4, 11).unwrap();
        assert_eq!(q4_11.quantize(3.5), 0x1C00);
    }

    #[test]
    fn saturation_is_exact_at_range_edges() {
        let q15 = QuantFormat::q15();
        assert_eq!(q15.quantize(-1.0), i16::MIN);
        assert_eq!(q15.quantize(-2.7), i16::MIN);
        assert_eq!(q15.quantize(q15.max_value()), i16::MAX);
        let q4_11 = QuantFormat::new(4, 11).unwrap();
        assert_eq!(q4_11.quantize(16.0), i16::MAX);
        assert_eq!(q4_11.quantize(-16.0), i16::MIN);
        assert_eq!(q4_11.quantize(-100.0), i16::MIN);
    }

    #[test]
    fn rounding_is_half_away_from_zero() {
        let q15 = QuantFormat::q15();
        let half_lsb = 0.5 / q15.scale();
        assert_eq!(q15.quantize(half_lsb), 1);
        assert_eq!(q15.quantize(-half_lsb), -1);
    }

    #[test]
    fn invalid_split_rejected() {
        assert!(QuantFormat::new(4, 12).is_err());
        assert!(QuantFormat::new(0, 14).is_err());
    }

    #[test]
    fn display_names_the_split() {
        assert_eq!(QuantFormat::new(4, 11).unwrap().to_string(), "Q(1,4,11)");
    }

    proptest! {
        #[test]
        fn round_trip_within_half_lsb(
            digit in 0u32..8,
            x in -20.0f64..20.0,
        ) {
            let fmt = QuantFormat::new(digit, 15 - digit).unwrap();
            let clamped = x.clamp(fmt.min_value(), fmt.max_value());
            let back = fmt.dequantize(fmt.quantize(clamped));
            let half_lsb = 0.5 / fmt.scale();
            prop_assert!((back - clamped).abs() <= half_lsb + 1e-12);
        }

        #[test]
        fn quantize_is_monotone(a in -2.0f64..2.0, b in -2.0f64..2.0) {
            let fmt = QuantFormat::q15();
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(fmt.quantize(lo) <= fmt.quantize(hi));
        }
    }
}
