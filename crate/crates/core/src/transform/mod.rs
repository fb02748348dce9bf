//! Block transform layer: 8×8 orthonormal DCT, block tiling and the integer
//! rounding operator used by quantization and decoding.

mod dct;
mod plane;

pub use dct::{forward_dct, inverse_dct, Dct8, PixelBlock, SpectrumBlock};
pub use plane::{tile_blocks, untile_blocks, Plane, Tile, BLOCK, BLOCK_LEN};

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

/// Tie-breaking rule of the integer rounding operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rounding {
    /// `x.5` goes to the integer of larger magnitude.
    #[default]
    HalfAwayFromZero,
    /// `x.5` goes to the even neighbour.
    HalfToEven,
}

impl Rounding {
    #[inline]
    pub fn apply<T: Scalar>(self, v: T) -> T {
        match self {
            Rounding::HalfAwayFromZero => v.round(),
            Rounding::HalfToEven => {
                let r = v.round();
                if (v - v.trunc()).abs() == T::of(0.5) && (r / T::of(2.0)).fract() != T::zero() {
                    r - v.signum()
                } else {
                    r
                }
            }
        }
    }
}

/// Nearest integer, halves away from zero.
#[inline]
pub fn round_int<T: Scalar>(v: T) -> T {
    Rounding::HalfAwayFromZero.apply(v)
}

/// [`round_int`] as a machine integer; `None` for non-finite or overflowing input.
pub fn round_to_i64<T: Scalar>(v: T) -> Option<i64> {
    if !v.is_finite() {
        return None;
    }
    round_int(v).to_i64()
}
