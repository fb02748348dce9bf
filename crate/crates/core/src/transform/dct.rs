//! Orthonormal 8×8 type-II DCT by explicit basis-matrix products.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::plane::{BLOCK, BLOCK_LEN};

macro_rules! block_newtype {
    ($(#[$m:meta])* $name:ident) => {
        $(#[$m])*
        #[derive(Debug, Clone, Copy, PartialEq)]
        pub struct $name<T>(pub [T; BLOCK_LEN]);

        impl<T: Scalar> $name<T> {
            pub fn zeros() -> Self {
                Self([T::zero(); BLOCK_LEN])
            }

            pub fn from_fn(f: impl Fn(usize) -> T) -> Self {
                Self(std::array::from_fn(f))
            }

            #[inline]
            pub fn values(&self) -> &[T; BLOCK_LEN] {
                &self.0
            }

            #[inline]
            pub fn at(&self, row: usize, col: usize) -> T {
                self.0[row * BLOCK + col]
            }

            pub fn is_finite(&self) -> bool {
                self.0.iter().all(|v| v.is_finite())
            }

            pub fn energy(&self) -> T {
                self.0.iter().map(|&v| v * v).sum()
            }
        }

        impl<T> std::ops::Index<usize> for $name<T> {
            type Output = T;
            fn index(&self, i: usize) -> &T {
                &self.0[i]
            }
        }

        impl<T> std::ops::IndexMut<usize> for $name<T> {
            fn index_mut(&mut self, i: usize) -> &mut T {
                &mut self.0[i]
            }
        }
    };
}

block_newtype!(
    /// 8×8 pixel-domain samples, row-major.
    PixelBlock
);
block_newtype!(
    /// 8×8 DCT coefficients, row-major; index 0 is DC.
    SpectrumBlock
);

fn basis_f64() -> &'static [[f64; BLOCK]; BLOCK] {
    static BASIS: OnceLock<[[f64; BLOCK]; BLOCK]> = OnceLock::new();
    BASIS.get_or_init(|| {
        let mut c = [[0.0; BLOCK]; BLOCK];
        for (k, row) in c.iter_mut().enumerate() {
            let alpha = if k == 0 {
                (1.0 / BLOCK as f64).sqrt()
            } else {
                (2.0 / BLOCK as f64).sqrt()
            };
            for (n, v) in row.iter_mut().enumerate() {
                *v = alpha
                    * ((2 * n + 1) as f64 * k as f64 * std::f64::consts::PI / (2 * BLOCK) as f64)
                        .cos();
            }
        }
        c
    })
}

/// Precomputed orthonormal DCT-II basis `C[k][n]`; forward is `C X Cᵀ`,
/// inverse is `Cᵀ Y C`.
#[derive(Debug, Clone)]
pub struct Dct8<T> {
    basis: [[T; BLOCK]; BLOCK],
}

impl<T: Scalar> Default for Dct8<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Scalar> Dct8<T> {
    pub fn new() -> Self {
        let b = basis_f64();
        Self {
            basis: std::array::from_fn(|k| std::array::from_fn(|n| T::of(b[k][n]))),
        }
    }

    /// Weight `c[u][m]` of pixel `m` in coefficient `u` (both row-major 0..64).
    pub fn weight(&self, u: usize, m: usize) -> T {
        let (ku, lu) = (u / BLOCK, u % BLOCK);
        let (i, j) = (m / BLOCK, m % BLOCK);
        self.basis[ku][i] * self.basis[lu][j]
    }

    pub fn forward(&self, x: &[T; BLOCK_LEN]) -> [T; BLOCK_LEN] {
        let c = &self.basis;
        // rows: tmp[i][l] = sum_j x[i][j] c[l][j]
        let mut tmp = [T::zero(); BLOCK_LEN];
        for i in 0..BLOCK {
            for l in 0..BLOCK {
                let mut acc = T::zero();
                for j in 0..BLOCK {
                    acc = acc + x[i * BLOCK + j] * c[l][j];
                }
                tmp[i * BLOCK + l] = acc;
            }
        }
        let mut out = [T::zero(); BLOCK_LEN];
        for k in 0..BLOCK {
            for l in 0..BLOCK {
                let mut acc = T::zero();
                for i in 0..BLOCK {
                    acc = acc + c[k][i] * tmp[i * BLOCK + l];
                }
                out[k * BLOCK + l] = acc;
            }
        }
        out
    }

    pub fn inverse(&self, y: &[T; BLOCK_LEN]) -> [T; BLOCK_LEN] {
        let c = &self.basis;
        // tmp[k][j] = sum_l y[k][l] c[l][j]
        let mut tmp = [T::zero(); BLOCK_LEN];
        for k in 0..BLOCK {
            for j in 0..BLOCK {
                let mut acc = T::zero();
                for l in 0..BLOCK {
                    acc = acc + y[k * BLOCK + l] * c[l][j];
                }
                tmp[k * BLOCK + j] = acc;
            }
        }
        let mut out = [T::zero(); BLOCK_LEN];
        for i in 0..BLOCK {
            for j in 0..BLOCK {
                let mut acc = T::zero();
                for k in 0..BLOCK {
                    acc = acc + c[k][i] * tmp[k * BLOCK + j];
                }
                out[i * BLOCK + j] = acc;
            }
        }
        out
    }
}

/// Orthonormal 2-D DCT-II of one block.
pub fn forward_dct<T: Scalar>(block: &PixelBlock<T>) -> Result<SpectrumBlock<T>> {
    if !block.is_finite() {
        return Err(Error::Domain("forward_dct: non-finite pixel".into()));
    }
    Ok(SpectrumBlock(Dct8::new().forward(&block.0)))
}

/// Inverse of [`forward_dct`] (the transpose, since the transform is unitary).
pub fn inverse_dct<T: Scalar>(block: &SpectrumBlock<T>) -> Result<PixelBlock<T>> {
    if !block.is_finite() {
        return Err(Error::Domain("inverse_dct: non-finite coefficient".into()));
    }
    Ok(PixelBlock(Dct8::new().inverse(&block.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Textbook quadruple-sum definition, independent of the separable
    /// matrix path.
    fn naive_dct(x: &[f64; 64]) -> [f64; 64] {
        let pi = std::f64::consts::PI;
        let a = |k: usize| if k == 0 { (0.125f64).sqrt() } else { 0.5 };
        std::array::from_fn(|idx| {
            let (k, l) = (idx / 8, idx % 8);
            let mut s = 0.0;
            for i in 0..8 {
                for j in 0..8 {
                    s += x[i * 8 + j]
                        * ((2 * i + 1) as f64 * k as f64 * pi / 16.0).cos()
                        * ((2 * j + 1) as f64 * l as f64 * pi / 16.0).cos();
                }
            }
            a(k) * a(l) * s
        })
    }

    fn random_block(rng: &mut ChaCha8Rng, scale: f64) -> [f64; 64] {
        std::array::from_fn(|_| rng.random_range(-scale..scale))
    }

    #[test]
    fn zero_block_maps_to_zero_spectrum() {
        let s = forward_dct(&PixelBlock::<f64>::zeros()).unwrap();
        assert!(s.0.iter().all(|&v| v == 0.0));
        let p = inverse_dct(&SpectrumBlock::<f64>::zeros()).unwrap();
        assert!(p.0.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn constant_block_has_only_dc() {
        let c = 37.25f64;
        let s = forward_dct(&PixelBlock([c; 64])).unwrap();
        assert!((s[0] - 8.0 * c).abs() < 1e-12);
        for v in &s.0[1..] {
            assert!(v.abs() < 1e-12);
        }
    }

    #[test]
    fn unit_dc_inverts_to_constant_eighth() {
        let mut s = SpectrumBlock::<f64>::zeros();
        s[0] = 1.0;
        let p = inverse_dct(&s).unwrap();
        for v in p.0 {
            assert!((v - 0.125).abs() < 1e-15);
        }
    }

    #[test]
    fn matches_quadruple_sum_definition() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let b = random_block(&mut rng, 255.0);
            let fast = forward_dct(&PixelBlock(b)).unwrap();
            let slow = naive_dct(&b);
            for (a, e) in fast.0.iter().zip(slow) {
                assert!((a - e).abs() < 1e-10, "{a} vs {e}");
            }
        }
    }

    #[test]
    fn round_trip_over_random_blocks() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let b = random_block(&mut rng, 300.0);
            let back = inverse_dct(&forward_dct(&PixelBlock(b)).unwrap()).unwrap();
            for (a, e) in back.0.iter().zip(b) {
                assert!((a - e).abs() < 1e-9);
            }
            let s = random_block(&mut rng, 2000.0);
            let again = forward_dct(&inverse_dct(&SpectrumBlock(s)).unwrap()).unwrap();
            for (a, e) in again.0.iter().zip(s) {
                assert!((a - e).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn basis_rows_are_orthonormal() {
        let d = Dct8::<f64>::new();
        for u in 0..64 {
            for v in 0..64 {
                let dot: f64 = (0..64).map(|m| d.weight(u, m) * d.weight(v, m)).sum();
                let want = if u == v { 1.0 } else { 0.0 };
                assert!((dot - want).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn non_finite_input_is_a_domain_error() {
        let mut b = PixelBlock::<f64>::zeros();
        b[5] = f64::NAN;
        assert!(matches!(forward_dct(&b), Err(Error::Domain(_))));
        let mut s = SpectrumBlock::<f64>::zeros();
        s[0] = f64::INFINITY;
        assert!(matches!(inverse_dct(&s), Err(Error::Domain(_))));
    }

    #[test]
    fn single_precision_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let b: [f32; 64] = std::array::from_fn(|_| rng.random_range(0.0f32..255.0));
        let back = inverse_dct(&forward_dct(&PixelBlock(b)).unwrap()).unwrap();
        for (a, e) in back.0.iter().zip(b) {
            assert!((a - e).abs() < 1e-3);
        }
    }

    proptest! {
        #[test]
        fn parseval(vals in proptest::array::uniform32(-1000.0f64..1000.0), tail in proptest::array::uniform32(-1000.0f64..1000.0)) {
            let mut b = [0.0; 64];
            b[..32].copy_from_slice(&vals);
            b[32..].copy_from_slice(&tail);
            let e_in: f64 = b.iter().map(|v| v * v).sum();
            let e_out = forward_dct(&PixelBlock(b)).unwrap().energy();
            prop_assert!((e_in - e_out).abs() <= 1e-9 * e_in.max(1e-300));
        }

        #[test]
        fn linearity(a in -10.0f64..10.0, seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let b1 = random_block(&mut rng, 100.0);
            let b2 = random_block(&mut rng, 100.0);
            let mix: [f64; 64] = std::array::from_fn(|i| a * b1[i] + b2[i]);
            let lhs = forward_dct(&PixelBlock(mix)).unwrap();
            let d1 = forward_dct(&PixelBlock(b1)).unwrap();
            let d2 = forward_dct(&PixelBlock(b2)).unwrap();
            for i in 0..64 {
                prop_assert!((lhs[i] - (a * d1[i] + d2[i])).abs() < 1e-9);
            }
        }
    }
}
