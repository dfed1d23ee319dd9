//! SECDED Hamming (72,64) codec and fault classification.
//!
//! 64 data bits are protected by 7 Hamming parity bits plus one overall
//! parity bit: single-bit errors are corrected, double-bit errors detected.
//! The layout is the classic power-of-two arrangement. Code bits occupy
//! 1-based positions 1..=71; parity bit `p_i` sits at position `2^i` and
//! covers every position whose index has bit `i` set; data bits fill the
//! remaining positions in ascending order. The overall parity bit sits at
//! position 0 and makes the full 72-bit word even-weight.
//!
//! A [`Codeword72`] stores the data word and a parity byte: bit 0 is the
//! overall parity, bits 1..=7 are `p_0..p_6`. Serialized as hex, a codeword
//! is the 64 data bits followed by the parity byte, 18 hex digits total.

use std::fmt;
use std::path::Path;

use crate::error::{Error, Result};

/// 1-based positions of the 64 data bits (every non-power-of-two in 1..=71).
const DATA_POS: [u8; 64] = data_positions();

const fn data_positions() -> [u8; 64] {
    let mut out = [0u8; 64];
    let mut pos = 1u8;
    let mut k = 0;
    while k < 64 {
        if !pos.is_power_of_two() {
            out[k] = pos;
            k += 1;
        }
        pos += 1;
    }
    out
}

/// `COVER[i]`: data bits covered by parity `p_i`.
const COVER: [u64; 7] = cover_masks();

const fn cover_masks() -> [u64; 7] {
    let mut masks = [0u64; 7];
    let mut k = 0;
    while k < 64 {
        let pos = DATA_POS[k];
        let mut i = 0;
        while i < 7 {
            if pos & (1 << i) != 0 {
                masks[i] |= 1 << k;
            }
            i += 1;
        }
        k += 1;
    }
    masks
}

/// Data-bit index for each position, 64 for parity positions.
const POS_TO_DATA: [u8; 72] = pos_to_data();

const fn pos_to_data() -> [u8; 72] {
    let mut inv = [64u8; 72];
    let mut k = 0;
    while k < 64 {
        inv[DATA_POS[k] as usize] = k as u8;
        k += 1;
    }
    inv
}

/// A 72-bit SECDED codeword.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Codeword72 {
    pub data: u64,
    pub parity: u8,
}

/// Result of decoding one received word.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecodeOutcome {
    /// Word is a valid codeword.
    NoError,
    /// One flipped bit at the given 1-based code position was corrected.
    CorrectedSingle { position: u8 },
    /// Only the overall parity bit was flipped; data untouched.
    ParityBitCorrected,
    /// An uncorrectable (even-syndrome or invalid-position) error was
    /// flagged.
    DoubleDetected,
}

/// Decoded word: outcome plus best-effort data.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Decoded {
    pub outcome: DecodeOutcome,
    pub data: u64,
}

/// Effect of a fault pattern on one protected word.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FaultClass {
    /// Decode recovers the original data.
    Correctable,
    /// Decode flags the word as uncorrectable.
    Detectable,
    /// Decode silently returns wrong data.
    Undetectable,
}

impl fmt::Display for FaultClass {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        let s = match self {
            FaultClass::Correctable => "correctable",
            FaultClass::Detectable => "detectable",
            FaultClass::Undetectable => "undetectable",
        };
        f.write_str(s)
    }
}

fn parity64(x: u64) -> u8 {
    (x.count_ones() & 1) as u8
}

/// Encodes 64 data bits into a codeword.
pub fn encode64(data: u64) -> Codeword72 {
    let mut parity = 0u8;
    for (i, mask) in COVER.iter().enumerate() {
        parity |= parity64(data & mask) << (i + 1);
    }
    let overall = parity64(data) ^ ((parity.count_ones() & 1) as u8);
    Codeword72 { data, parity: parity | overall }
}

/// Decodes a received word, correcting a single flipped bit if possible.
pub fn decode72(received: Codeword72) -> Decoded {
    let mut syndrome = 0u8;
    for (i, mask) in COVER.iter().enumerate() {
        let check = parity64(received.data & mask) ^ ((received.parity >> (i + 1)) & 1);
        syndrome |= check << i;
    }
    let odd = (received.data.count_ones() + received.parity.count_ones()) & 1 == 1;

    match (syndrome, odd) {
        (0, false) => Decoded { outcome: DecodeOutcome::NoError, data: received.data },
        (0, true) => Decoded { outcome: DecodeOutcome::ParityBitCorrected, data: received.data },
        (s, true) if (s as usize) < 72 => {
            let mut data = received.data;
            let k = POS_TO_DATA[s as usize];
            if k < 64 {
                data ^= 1 << k;
            }
            Decoded { outcome: DecodeOutcome::CorrectedSingle { position: s }, data }
        }
        // Even parity with a nonzero syndrome is the double-error signature;
        // an odd-parity syndrome pointing past position 71 can only come
        // from >=3 flips and is likewise flagged uncorrectable.
        _ => Decoded { outcome: DecodeOutcome::DoubleDetected, data: received.data },
    }
}

/// Classifies the damage a fault pattern did to a protected word.
pub fn classify_word(original: u64, received: Codeword72) -> FaultClass {
    let decoded = decode72(received);
    match decoded.outcome {
        DecodeOutcome::DoubleDetected => FaultClass::Detectable,
        _ if decoded.data == original => FaultClass::Correctable,
        _ => FaultClass::Undetectable,
    }
}

/// Flips one of the 72 stored bits. Index 0 is the overall parity bit,
/// 1..=71 are code positions.
pub fn flip_bit(cw: Codeword72, index: u8) -> Codeword72 {
    assert!(index < 72, "bit index {index} out of range");
    let mut out = cw;
    if index == 0 {
        out.parity ^= 1;
    } else if index.is_power_of_two() {
        out.parity ^= 1 << (index.trailing_zeros() + 1);
    } else {
        out.data ^= 1 << POS_TO_DATA[index as usize];
    }
    out
}

impl Codeword72 {
    /// 18-hex-digit form: data then parity byte.
    pub fn to_hex(self) -> String {
        format!("{:016x}{:02x}", self.data, self.parity)
    }

    pub fn from_hex(s: &str) -> Option<Codeword72> {
        if s.len() != 18 {
            return None;
        }
        let data = u64::from_str_radix(&s[..16], 16).ok()?;
        let parity = u8::from_str_radix(&s[16..], 16).ok()?;
        Some(Codeword72 { data, parity })
    }
}

/// Writes `data_hex,codeword_hex` lines for cross-implementation checks.
pub fn write_vectors(path: &Path, words: &[u64]) -> Result<()> {
    let mut text = String::new();
    for w in words {
        text.push_str(&format!("{:016x},{}\n", w, encode64(*w).to_hex()));
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Reads a vector file and re-encodes each data word, returning the lines
/// whose codewords disagree with this implementation.
pub fn check_vectors(path: &Path) -> Result<Vec<usize>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut bad = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let (data_hex, cw_hex) = line
            .split_once(',')
            .ok_or_else(|| Error::parse(path, format!("line {}: missing comma", lineno + 1)))?;
        let data = u64::from_str_radix(data_hex, 16)
            .map_err(|e| Error::parse(path, format!("line {}: {e}", lineno + 1)))?;
        let cw = Codeword72::from_hex(cw_hex)
            .ok_or_else(|| Error::parse(path, format!("line {}: bad codeword", lineno + 1)))?;
        if encode64(data) != cw {
            bad.push(lineno + 1);
        }
    }
    Ok(bad)
}
