//! Quantization tables, zigzag ordering and the IJG quality scaling.

use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::transform::BLOCK_LEN;

/// `ZIGZAG_TO_NATURAL[z]` is the row-major index of the `z`-th zigzag entry.
pub const ZIGZAG_TO_NATURAL: [usize; BLOCK_LEN] = [
    0, 1, 8, 16, 9, 2, 3, 10, 17, 24, 32, 25, 18, 11, 4, 5, 12, 19, 26, 33, 40, 48, 41, 34, 27,
    20, 13, 6, 7, 14, 21, 28, 35, 42, 49, 56, 57, 50, 43, 36, 29, 22, 15, 23, 30, 37, 44, 51, 58,
    59, 52, 45, 38, 31, 39, 46, 53, 60, 61, 54, 47, 55, 62, 63,
];

/// `NATURAL_TO_ZIGZAG[n]` is the zigzag position of row-major index `n`.
pub const NATURAL_TO_ZIGZAG: [usize; BLOCK_LEN] = [
    0, 1, 5, 6, 14, 15, 27, 28, 2, 4, 7, 13, 16, 26, 29, 42, 3, 8, 12, 17, 25, 30, 41, 43, 9, 11,
    18, 24, 31, 40, 44, 53, 10, 19, 23, 32, 39, 45, 52, 54, 20, 22, 33, 38, 46, 51, 55, 60, 21, 34,
    37, 47, 50, 56, 59, 61, 35, 36, 48, 49, 57, 58, 62, 63,
];

pub fn zigzag_to_natural<S: Copy>(zigzag: &[S; BLOCK_LEN]) -> [S; BLOCK_LEN] {
    std::array::from_fn(|n| zigzag[NATURAL_TO_ZIGZAG[n]])
}

pub fn natural_to_zigzag<S: Copy>(natural: &[S; BLOCK_LEN]) -> [S; BLOCK_LEN] {
    std::array::from_fn(|z| natural[ZIGZAG_TO_NATURAL[z]])
}

/// Annex K luminance table, row-major.
pub const IJG_LUMINANCE_BASE: [u16; BLOCK_LEN] = [
    16, 11, 10, 16, 24, 40, 51, 61, //
    12, 12, 14, 19, 26, 58, 60, 55, //
    14, 13, 16, 24, 40, 57, 69, 56, //
    14, 17, 22, 29, 51, 87, 80, 62, //
    18, 22, 37, 56, 68, 109, 103, 77, //
    24, 35, 55, 64, 81, 104, 113, 92, //
    49, 64, 78, 87, 103, 121, 120, 101, //
    72, 92, 95, 98, 112, 100, 103, 99,
];

/// 64 positive integer quantization steps in row-major block order
/// (index 0 is the DC step).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<u16>", into = "Vec<u16>")]
pub struct QuantTable {
    steps: [u16; BLOCK_LEN],
}

impl TryFrom<Vec<u16>> for QuantTable {
    type Error = Error;

    fn try_from(v: Vec<u16>) -> Result<Self> {
        Self::from_slice(&v)
    }
}

impl From<QuantTable> for Vec<u16> {
    fn from(t: QuantTable) -> Self {
        t.steps.to_vec()
    }
}

impl QuantTable {
    pub fn new(steps: [u16; BLOCK_LEN]) -> Result<Self> {
        if let Some(i) = steps.iter().position(|&q| q == 0) {
            return Err(Error::InvalidTable(format!("step at index {i} is zero")));
        }
        Ok(Self { steps })
    }

    pub fn from_slice(steps: &[u16]) -> Result<Self> {
        let arr: [u16; BLOCK_LEN] = steps.try_into().map_err(|_| {
            Error::InvalidTable(format!("expected {BLOCK_LEN} steps, got {}", steps.len()))
        })?;
        Self::new(arr)
    }

    pub fn constant(q: u16) -> Result<Self> {
        Self::new([q; BLOCK_LEN])
    }

    /// Table from zigzag-ordered steps, as stored in a DQT segment.
    pub fn from_zigzag(zigzag: &[u16; BLOCK_LEN]) -> Result<Self> {
        Self::new(zigzag_to_natural(zigzag))
    }

    pub fn to_zigzag(&self) -> [u16; BLOCK_LEN] {
        natural_to_zigzag(&self.steps)
    }

    /// IJG-compatible luminance table for quality 1..=100 (baseline-clamped to 255).
    pub fn ijg_luminance(quality: u8) -> Result<Self> {
        if !(1..=100).contains(&quality) {
            return Err(Error::InvalidTable(format!(
                "IJG quality must be in 1..=100, got {quality}"
            )));
        }
        let q = quality as u32;
        let scale = if q < 50 { 5000 / q } else { 200 - 2 * q };
        let steps = IJG_LUMINANCE_BASE.map(|b| ((b as u32 * scale + 50) / 100).clamp(1, 255) as u16);
        Self::new(steps)
    }

    #[inline]
    pub fn step(&self, u: usize) -> u16 {
        self.steps[u]
    }

    pub fn steps(&self) -> &[u16; BLOCK_LEN] {
        &self.steps
    }

    pub fn min_step(&self) -> u16 {
        *self.steps.iter().min().expect("non-empty")
    }

    pub fn max_step(&self) -> u16 {
        *self.steps.iter().max().expect("non-empty")
    }

    pub fn has_unit_step(&self) -> bool {
        self.min_step() == 1
    }

    pub fn is_constant(&self) -> bool {
        self.steps.iter().all(|&q| q == self.steps[0])
    }

    /// Divisible quantization condition towards `next`: every next step is
    /// at least 2 and divides the corresponding step of `self`.
    pub fn divisible_by(&self, next: &QuantTable) -> bool {
        self.steps
            .iter()
            .zip(&next.steps)
            .all(|(&a, &b)| b >= 2 && a % b == 0)
    }

    /// Short stable digest of the steps, used to key per-table settings.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        for q in self.steps {
            h.update(q.to_be_bytes());
        }
        hex::encode(&h.finalize()[..8])
    }
}

impl fmt::Display for QuantTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in self.steps.chunks(8) {
            let line: Vec<String> = row.iter().map(|q| q.to_string()).collect();
            writeln!(f, "{}", line.join(" "))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_step_rejected() {
        let mut s = [1u16; 64];
        s[17] = 0;
        assert!(matches!(QuantTable::new(s), Err(Error::InvalidTable(_))));
        assert!(QuantTable::from_slice(&[1, 2, 3]).is_err());
    }

    #[test]
    fn ijg_quality_landmarks() {
        assert!(QuantTable::ijg_luminance(100).unwrap().steps().iter().all(|&q| q == 1));
        assert_eq!(QuantTable::ijg_luminance(50).unwrap().steps(), &IJG_LUMINANCE_BASE);
        assert!(QuantTable::ijg_luminance(93).unwrap().has_unit_step());
        assert_eq!(QuantTable::ijg_luminance(92).unwrap().min_step(), 2);
        assert_eq!(QuantTable::ijg_luminance(1).unwrap().max_step(), 255);
        assert!(QuantTable::ijg_luminance(0).is_err());
    }

    #[test]
    fn divisibility_condition() {
        let q6 = QuantTable::constant(6).unwrap();
        assert!(q6.divisible_by(&QuantTable::constant(3).unwrap()));
        assert!(!q6.divisible_by(&QuantTable::constant(4).unwrap()));
        assert!(!q6.divisible_by(&QuantTable::constant(1).unwrap()));
    }

    #[test]
    fn zigzag_tables_are_mutually_inverse() {
        for z in 0..64 {
            assert_eq!(NATURAL_TO_ZIGZAG[ZIGZAG_TO_NATURAL[z]], z);
        }
        // third zigzag entry is row 1, col 0
        assert_eq!(ZIGZAG_TO_NATURAL[2], 8);
    }

    #[test]
    fn digest_is_stable_and_discriminating() {
        let a = QuantTable::constant(5).unwrap();
        assert_eq!(a.digest(), QuantTable::constant(5).unwrap().digest());
        assert_ne!(a.digest(), QuantTable::constant(6).unwrap().digest());
        assert_eq!(a.digest().len(), 16);
    }

    proptest! {
        #[test]
        fn zigzag_round_trip(v in proptest::collection::vec(1u16..1000, 64)) {
            let arr: [u16; 64] = v.try_into().unwrap();
            prop_assert_eq!(zigzag_to_natural(&natural_to_zigzag(&arr)), arr);
            prop_assert_eq!(natural_to_zigzag(&zigzag_to_natural(&arr)), arr);
            let t = QuantTable::new(arr).unwrap();
            prop_assert_eq!(QuantTable::from_zigzag(&t.to_zigzag()).unwrap(), t);
        }
    }
}
