//! One and many encode/decode cycles with every intermediate signal kept.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::transform::{
    tile_blocks, untile_blocks, Dct8, Plane, Rounding, SpectrumBlock, Tile, BLOCK_LEN,
};

use super::table::QuantTable;

/// Knobs of the simulated codec. The defaults reproduce the noise model
/// exactly: no clipping, no level shift, half-away-from-zero rounding.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CodecOptions {
    /// Clamp decoded samples to `[0, max_value]` before rounding.
    pub clip: bool,
    pub max_value: i32,
    /// Subtract 128 before the forward DCT and add it back after the inverse.
    pub level_shift: bool,
    pub rounding: Rounding,
}

impl Default for CodecOptions {
    fn default() -> Self {
        Self {
            clip: false,
            max_value: 255,
            level_shift: false,
            rounding: Rounding::HalfAwayFromZero,
        }
    }
}

impl CodecOptions {
    fn shift<T: Scalar>(&self) -> T {
        if self.level_shift {
            T::of(128.0)
        } else {
            T::zero()
        }
    }
}

/// Quantizes one coefficient block: returns `(Ỹ, y)` with
/// `Ỹ_u = [Y_u / q_u]·q_u` and `y_u = Y_u − Ỹ_u`.
pub fn quantize<T: Scalar>(
    spectrum: &SpectrumBlock<T>,
    table: &QuantTable,
) -> (SpectrumBlock<T>, SpectrumBlock<T>) {
    let (deq, _) = quantize_with(spectrum, table, Rounding::HalfAwayFromZero);
    let noise = SpectrumBlock::from_fn(|u| spectrum[u] - deq[u]);
    (deq, noise)
}

/// Dequantized block plus the integer quantization levels.
pub(crate) fn quantize_with<T: Scalar>(
    spectrum: &SpectrumBlock<T>,
    table: &QuantTable,
    rounding: Rounding,
) -> (SpectrumBlock<T>, [i32; BLOCK_LEN]) {
    let mut levels = [0i32; BLOCK_LEN];
    let mut deq = SpectrumBlock::zeros();
    for u in 0..BLOCK_LEN {
        let q = T::of(table.step(u) as f64);
        let level = rounding.apply(spectrum[u] / q);
        levels[u] = level.to_i32().unwrap_or(i32::MAX);
        deq[u] = level * q;
    }
    (deq, levels)
}

/// All signals of one compression cycle `k`, as planes.
///
/// Spectral planes hold coefficient `u` of each block at that block's
/// `u`-th pixel position.
#[derive(Debug, Clone, PartialEq)]
pub struct CycleRecord<T> {
    /// Integer input image X⁽ᵏ⁾.
    pub input: Plane<i32>,
    /// Y⁽ᵏ⁾, coefficients before quantization.
    pub spectrum: Plane<T>,
    /// Ỹ⁽ᵏ⁾, coefficients after dequantization.
    pub dequantized: Plane<T>,
    /// Integer levels Ỹ⁽ᵏ⁾ / q, what a JPEG file would store.
    pub levels: Plane<i32>,
    /// X̃⁽ᵏ⁾, the real-valued decoded image.
    pub decoded: Plane<T>,
    /// X⁽ᵏ⁺¹⁾, the rounded (optionally clipped) decoded image.
    pub output: Plane<i32>,
    pub table: QuantTable,
}

/// The four noise planes of one cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSet<T> {
    /// y⁽ᵏ⁾ = Y⁽ᵏ⁾ − Ỹ⁽ᵏ⁾
    pub quantization: Plane<T>,
    /// x⁽ᵏ→ᵏ⁺¹⁾ = X̃⁽ᵏ⁾ − X⁽ᵏ⁺¹⁾
    pub rounding: Plane<T>,
    /// x⁽ᵏ⁾ = X⁽ᵏ⁾ − X̃⁽ᵏ⁾
    pub aux_spatial: Plane<T>,
    /// y⁽ᵏ→ᵏ⁺¹⁾ = Ỹ⁽ᵏ⁾ − Y⁽ᵏ⁺¹⁾
    pub aux_dct: Plane<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseKind {
    Quantization,
    Rounding,
    AuxSpatial,
    AuxDct,
}

impl NoiseKind {
    pub const ALL: [NoiseKind; 4] = [
        NoiseKind::Quantization,
        NoiseKind::Rounding,
        NoiseKind::AuxSpatial,
        NoiseKind::AuxDct,
    ];

    pub fn name(self) -> &'static str {
        match self {
            NoiseKind::Quantization => "quantization",
            NoiseKind::Rounding => "rounding",
            NoiseKind::AuxSpatial => "aux_spatial",
            NoiseKind::AuxDct => "aux_dct",
        }
    }
}

impl<T> NoiseSet<T> {
    pub fn get(&self, kind: NoiseKind) -> &Plane<T> {
        match kind {
            NoiseKind::Quantization => &self.quantization,
            NoiseKind::Rounding => &self.rounding,
            NoiseKind::AuxSpatial => &self.aux_spatial,
            NoiseKind::AuxDct => &self.aux_dct,
        }
    }
}

/// A K-cycle compression chain.
#[derive(Debug, Clone, PartialEq)]
pub struct CompressionTrace<T> {
    pub source: Plane<i32>,
    pub cycles: Vec<CycleRecord<T>>,
    pub noises: Vec<NoiseSet<T>>,
    pub options: CodecOptions,
}

impl<T> CompressionTrace<T> {
    pub fn len(&self) -> usize {
        self.cycles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cycles.is_empty()
    }

    fn check_cycle(&self, k: usize) -> Result<usize> {
        if k == 0 || k > self.cycles.len() {
            return Err(Error::OutOfRange {
                what: "cycle",
                index: k,
                lo: 1,
                hi: self.cycles.len(),
            });
        }
        Ok(k - 1)
    }

    /// Record of cycle `k` (1-based, as in "the first compression cycle").
    pub fn cycle(&self, k: usize) -> Result<&CycleRecord<T>> {
        let i = self.check_cycle(k)?;
        Ok(&self.cycles[i])
    }

    pub fn noise(&self, k: usize) -> Result<&NoiseSet<T>> {
        let i = self.check_cycle(k)?;
        Ok(&self.noises[i])
    }

    /// Final integer image after the last cycle.
    pub fn final_image(&self) -> &Plane<i32> {
        self.cycles.last().map_or(&self.source, |c| &c.output)
    }
}

fn map_tiles<S, R>(plane: &Plane<S>, f: impl Fn(&Tile<S>) -> R + Send + Sync) -> Result<Vec<R>>
where
    S: Copy + Default + Send + Sync,
    R: Send,
{
    let tiles = tile_blocks(plane)?;
    Ok(tiles.par_iter().map(f).collect())
}

/// Blockwise forward DCT of an integer image under the codec's level shift.
pub fn spectrum_of<T: Scalar>(image: &Plane<i32>, opts: &CodecOptions) -> Result<Plane<T>> {
    let dct = Dct8::<T>::new();
    let shift = opts.shift::<T>();
    let tiles = map_tiles(image, |t| Tile {
        bx: t.bx,
        by: t.by,
        values: dct.forward(&t.values.map(|v| T::of(v as f64) - shift)),
    })?;
    untile_blocks(image.width(), image.height(), &tiles)
}

/// Blockwise inverse DCT of a spectral plane, level shift added back.
pub fn decode_spectrum<T: Scalar>(spectrum: &Plane<T>, opts: &CodecOptions) -> Result<Plane<T>> {
    if !spectrum.all_finite() {
        return Err(Error::Domain("non-finite coefficient in spectral plane".into()));
    }
    let dct = Dct8::<T>::new();
    let shift = opts.shift::<T>();
    let tiles = map_tiles(spectrum, |t| Tile {
        bx: t.bx,
        by: t.by,
        values: dct.inverse(&t.values).map(|v| v + shift),
    })?;
    untile_blocks(spectrum.width(), spectrum.height(), &tiles)
}

struct BlockOut<T> {
    bx: usize,
    by: usize,
    spectrum: [T; BLOCK_LEN],
    dequantized: [T; BLOCK_LEN],
    levels: [i32; BLOCK_LEN],
    decoded: [T; BLOCK_LEN],
    output: [i32; BLOCK_LEN],
}

/// Runs forward DCT → quantize → dequantize → inverse DCT → round on every
/// block of an integer image.
pub fn encode_decode_cycle<T: Scalar>(
    image: &Plane<i32>,
    table: &QuantTable,
    opts: &CodecOptions,
) -> Result<CycleRecord<T>> {
    let dct = Dct8::<T>::new();
    let shift = opts.shift::<T>();
    let (lo, hi) = (T::zero(), T::of(opts.max_value as f64));
    let blocks = map_tiles(image, |t| {
        let spectrum = dct.forward(&t.values.map(|v| T::of(v as f64) - shift));
        let (deq, levels) = quantize_with(&SpectrumBlock(spectrum), table, opts.rounding);
        let decoded = dct.inverse(&deq.0).map(|v| v + shift);
        let output = decoded.map(|v| {
            let v = if opts.clip { v.max(lo).min(hi) } else { v };
            opts.rounding.apply(v).to_i32().unwrap_or(i32::MAX)
        });
        BlockOut {
            bx: t.bx,
            by: t.by,
            spectrum,
            dequantized: deq.0,
            levels,
            decoded,
            output,
        }
    })?;

    let (w, h) = (image.width(), image.height());
    let gather_real = |pick: fn(&BlockOut<T>) -> [T; BLOCK_LEN]| {
        let tiles: Vec<Tile<T>> = blocks
            .iter()
            .map(|b| Tile {
                bx: b.bx,
                by: b.by,
                values: pick(b),
            })
            .collect();
        untile_blocks(w, h, &tiles)
    };
    let gather_int = |pick: fn(&BlockOut<T>) -> [i32; BLOCK_LEN]| {
        let tiles: Vec<Tile<i32>> = blocks
            .iter()
            .map(|b| Tile {
                bx: b.bx,
                by: b.by,
                values: pick(b),
            })
            .collect();
        untile_blocks(w, h, &tiles)
    };

    Ok(CycleRecord {
        input: image.clone(),
        spectrum: gather_real(|b| b.spectrum)?,
        dequantized: gather_real(|b| b.dequantized)?,
        levels: gather_int(|b| b.levels)?,
        decoded: gather_real(|b| b.decoded)?,
        output: gather_int(|b| b.output)?,
        table: *table,
    })
}

/// Computes the four noise planes of a cycle. `next_spectrum` is Y⁽ᵏ⁺¹⁾,
/// the forward DCT of the next cycle's input.
pub fn extract_noises<T: Scalar>(
    record: &CycleRecord<T>,
    next_spectrum: &Plane<T>,
) -> Result<NoiseSet<T>> {
    let input = record.input.to_real::<T>();
    let output = record.output.to_real::<T>();
    Ok(NoiseSet {
        quantization: record.spectrum.zip_map(&record.dequantized, |a, b| a - b)?,
        rounding: record.decoded.zip_map(&output, |a, b| a - b)?,
        aux_spatial: input.zip_map(&record.decoded, |a, b| a - b)?,
        aux_dct: record.dequantized.zip_map(next_spectrum, |a, b| a - b)?,
    })
}

/// Chains one cycle per table, starting from `source`.
pub fn run_cycles<T: Scalar>(
    source: &Plane<i32>,
    tables: &[QuantTable],
    opts: &CodecOptions,
) -> Result<CompressionTrace<T>> {
    if tables.is_empty() {
        return Err(Error::Config("at least one quantization table is required".into()));
    }
    let mut cycles: Vec<CycleRecord<T>> = Vec::with_capacity(tables.len());
    let mut current = source.clone();
    for table in tables {
        let rec = encode_decode_cycle(&current, table, opts)?;
        current = rec.output.clone();
        cycles.push(rec);
    }
    let last_next = spectrum_of::<T>(&current, opts)?;
    let mut noises = Vec::with_capacity(cycles.len());
    for (i, rec) in cycles.iter().enumerate() {
        let next = cycles.get(i + 1).map_or(&last_next, |c| &c.spectrum);
        noises.push(extract_noises(rec, next)?);
    }
    Ok(CompressionTrace {
        source: source.clone(),
        cycles,
        noises,
        options: *opts,
    })
}
