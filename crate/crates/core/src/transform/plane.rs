//! Row-major sample grids and their 8×8 block tiling.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const BLOCK: usize = 8;
pub const BLOCK_LEN: usize = BLOCK * BLOCK;

/// A row-major 2-D grid of samples.
///
/// Spectral planes use the same layout: coefficient `u = (row, col)` of block
/// `(bx, by)` lives at pixel `(8 * bx + col, 8 * by + row)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Plane<S> {
    width: usize,
    height: usize,
    data: Vec<S>,
}

impl<S: Copy> Plane<S> {
    pub fn new(width: usize, height: usize, data: Vec<S>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Shape(format!(
                "plane must be non-empty, got {width}x{height}"
            )));
        }
        if data.len() != width * height {
            return Err(Error::Shape(format!(
                "{width}x{height} plane needs {} samples, got {}",
                width * height,
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: S) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> S,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, data)
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> S {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: S) {
        self.data[y * self.width + x] = v;
    }

    pub fn as_slice(&self) -> &[S] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [S] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<S> {
        self.data
    }

    pub fn same_shape<R>(&self, other: &Plane<R>) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub fn map<R: Copy>(&self, f: impl Fn(S) -> R) -> Plane<R> {
        Plane {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Elementwise combination of two equally shaped planes.
    pub fn zip_map<B: Copy, R: Copy>(
        &self,
        other: &Plane<B>,
        f: impl Fn(S, B) -> R,
    ) -> Result<Plane<R>> {
        if !self.same_shape(other) {
            return Err(Error::Shape(format!(
                "plane shapes differ: {}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            )));
        }
        Ok(Plane {
            width: self.width,
            height: self.height,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn is_block_aligned(&self) -> bool {
        self.width.is_multiple_of(BLOCK) && self.height.is_multiple_of(BLOCK)
    }

    pub fn require_block_aligned(&self) -> Result<()> {
        if self.is_block_aligned() {
            Ok(())
        } else {
            Err(Error::Shape(format!(
                "dimensions must be multiples of {BLOCK}, got {}x{}",
                self.width, self.height
            )))
        }
    }

    pub fn blocks_wide(&self) -> usize {
        self.width / BLOCK
    }

    pub fn blocks_high(&self) -> usize {
        self.height / BLOCK
    }

    pub fn block_count(&self) -> usize {
        self.blocks_wide() * self.blocks_high()
    }

    /// Copies out the `w`×`h` window whose top-left corner is `(x0, y0)`.
    pub fn crop(&self, x0: usize, y0: usize, w: usize, h: usize) -> Result<Self> {
        if x0 + w > self.width || y0 + h > self.height {
            return Err(Error::Shape(format!(
                "crop {w}x{h}+{x0}+{y0} exceeds {}x{} plane",
                self.width, self.height
            )));
        }
        Self::from_fn(w, h, |x, y| self.get(x0 + x, y0 + y))
    }

    /// Samples at position `index` (row-major, 0..64) of every block, in
    /// block raster order.
    pub fn block_position_samples(&self, index: usize) -> Vec<S> {
        let (r, c) = (index / BLOCK, index % BLOCK);
        let mut out = Vec::with_capacity(self.block_count());
        for by in 0..self.blocks_high() {
            for bx in 0..self.blocks_wide() {
                out.push(self.get(bx * BLOCK + c, by * BLOCK + r));
            }
        }
        out
    }
}

impl<T: Scalar> Plane<T> {
    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn max_abs_diff(&self, other: &Plane<T>) -> Result<T> {
        let d = self.zip_map(other, |a, b| (a - b).abs())?;
        Ok(d.data.into_iter().fold(T::zero(), T::max))
    }
}

impl Plane<i32> {
    pub fn to_real<T: Scalar>(&self) -> Plane<T> {
        self.map(|v| T::of(v as f64))
    }
}

/// One 8×8 tile cut from a plane, with its block-grid coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Tile<S> {
    pub bx: usize,
    pub by: usize,
    pub values: [S; BLOCK_LEN],
}

/// Cuts a block-aligned plane into non-overlapping 8×8 tiles, row-major.
pub fn tile_blocks<S: Copy + Default>(plane: &Plane<S>) -> Result<Vec<Tile<S>>> {
    plane.require_block_aligned()?;
    let mut tiles = Vec::with_capacity(plane.block_count());
    for by in 0..plane.blocks_high() {
        for bx in 0..plane.blocks_wide() {
            let mut values = [S::default(); BLOCK_LEN];
            for r in 0..BLOCK {
                let row = (by * BLOCK + r) * plane.width + bx * BLOCK;
                values[r * BLOCK..(r + 1) * BLOCK]
                    .copy_from_slice(&plane.data[row..row + BLOCK]);
            }
            tiles.push(Tile { bx, by, values });
        }
    }
    Ok(tiles)
}

/// Reassembles tiles produced by [`tile_blocks`] (in any order).
pub fn untile_blocks<S: Copy + Default>(
    width: usize,
    height: usize,
    tiles: &[Tile<S>],
) -> Result<Plane<S>> {
    let mut plane = Plane::filled(width, height, S::default())?;
    plane.require_block_aligned()?;
    if tiles.len() != plane.block_count() {
        return Err(Error::Shape(format!(
            "{width}x{height} plane needs {} tiles, got {}",
            plane.block_count(),
            tiles.len()
        )));
    }
    for t in tiles {
        if t.bx >= plane.blocks_wide() || t.by >= plane.blocks_high() {
            return Err(Error::Shape(format!(
                "tile ({}, {}) outside {width}x{height} grid",
                t.bx, t.by
            )));
        }
        for r in 0..BLOCK {
            let row = (t.by * BLOCK + r) * width + t.bx * BLOCK;
            plane.data[row..row + BLOCK].copy_from_slice(&t.values[r * BLOCK..(r + 1) * BLOCK]);
        }
    }
    Ok(plane)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sixteen_by_eight_gives_two_blocks() {
        let p = Plane::from_fn(16, 8, |x, y| (x + 16 * y) as i32).unwrap();
        let tiles = tile_blocks(&p).unwrap();
        assert_eq!(tiles.len(), 2);
        assert_eq!((tiles[1].bx, tiles[1].by), (1, 0));
        assert_eq!(tiles[1].values[0], 8);
        assert_eq!(tiles[1].values[9], 8 + 16 + 1);
    }

    #[test]
    fn single_block_plane_is_its_own_tile() {
        let p = Plane::from_fn(8, 8, |x, y| (x * 10 + y) as i32).unwrap();
        let tiles = tile_blocks(&p).unwrap();
        assert_eq!(tiles.len(), 1);
        assert_eq!(&tiles[0].values[..], p.as_slice());
    }

    #[test]
    fn untile_inverts_tile() {
        let p = Plane::from_fn(24, 16, |x, y| (x * 31 + y * 7) as f64 * 0.5).unwrap();
        let back = untile_blocks(24, 16, &tile_blocks(&p).unwrap()).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn misaligned_plane_is_rejected() {
        let p = Plane::filled(12, 8, 0i32).unwrap();
        assert!(matches!(tile_blocks(&p), Err(Error::Shape(_))));
    }

    #[test]
    fn empty_and_mismatched_planes_rejected() {
        assert!(Plane::<i32>::new(0, 8, vec![]).is_err());
        assert!(Plane::new(8, 8, vec![0i32; 63]).is_err());
    }

    #[test]
    fn block_position_samples_walk_the_grid() {
        let p = Plane::from_fn(16, 16, |x, y| (x + 100 * y) as i32).unwrap();
        assert_eq!(p.block_position_samples(9), vec![101, 109, 901, 909]);
    }
}
