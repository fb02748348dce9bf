//! Synthetic natural-image proxies: a smooth low-frequency field plus
//! blockwise Laplacian AC texture whose spread decays with frequency.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::transform::{Dct8, Plane, BLOCK, BLOCK_LEN};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    /// Mean grey level is drawn from this range.
    pub base: (f64, f64),
    /// Number of random low-frequency cosines in the smooth field.
    pub waves: usize,
    /// Amplitude range of each cosine.
    pub wave_amplitude: (f64, f64),
    /// Spread of the lowest AC coefficients, drawn per image.
    pub texture_amplitude: (f64, f64),
    /// Decay rate of the AC spread along `i + j`.
    pub decay: f64,
    /// Spread added to every AC coefficient, drawn per image.
    pub floor: (f64, f64),
    /// Log-normal spread of per-block texture activity.
    pub activity_sigma: f64,
    /// Standard deviation of white Gaussian pixel noise, drawn per image.
    /// Unlike the texture it does not follow block activity.
    pub pixel_noise: (f64, f64),
    /// Clamp pixels to 0..=255.
    pub clamp: bool,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            base: (80.0, 170.0),
            waves: 6,
            wave_amplitude: (3.0, 8.0),
            texture_amplitude: (8.0, 25.0),
            decay: 0.35,
            floor: (1.0, 2.5),
            activity_sigma: 0.5,
            pixel_noise: (1.0, 2.0),
            clamp: true,
        }
    }
}

/// Seed of the `index`-th item derived from `seed` (splitmix64 finalizer).
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn laplace(rng: &mut ChaCha8Rng, sd: f64) -> f64 {
    let u: f64 = rng.random::<f64>() - 0.5;
    -u.signum() * (1.0 - 2.0 * u.abs()).ln() * sd / std::f64::consts::SQRT_2
}

fn uniform(rng: &mut ChaCha8Rng, (a, b): (f64, f64)) -> f64 {
    if b > a {
        rng.random_range(a..b)
    } else {
        a
    }
}

/// One synthetic integer image; dimensions must be multiples of 8.
pub fn synth_image(width: usize, height: usize, seed: u64, cfg: &SynthConfig) -> Result<Plane<i32>> {
    let mut field = Plane::filled(width, height, 0.0f64)?;
    field.require_block_aligned()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let base = uniform(&mut rng, cfg.base);
    let waves: Vec<(f64, f64, f64, f64)> = (0..cfg.waves)
        .map(|_| {
            let amp = uniform(&mut rng, cfg.wave_amplitude);
            // Periods between 32 and 256 pixels.
            let fx = rng.random_range(-1.0..1.0) * std::f64::consts::TAU / 32.0;
            let fy = rng.random_range(-1.0..1.0) * std::f64::consts::TAU / 32.0;
            let phase = rng.random_range(0.0..std::f64::consts::TAU);
            (amp, fx, fy, phase)
        })
        .collect();
    for y in 0..height {
        for x in 0..width {
            let v: f64 = waves
                .iter()
                .map(|&(a, fx, fy, p)| a * (fx * x as f64 + fy * y as f64 + p).cos())
                .sum();
            field.set(x, y, base + v);
        }
    }

    let amp = uniform(&mut rng, cfg.texture_amplitude);
    let floor = uniform(&mut rng, cfg.floor);
    let sd: [f64; BLOCK_LEN] = std::array::from_fn(|u| {
        let (i, j) = (u / BLOCK, u % BLOCK);
        amp * (-cfg.decay * (i + j) as f64).exp() + floor
    });
    let noise_sd = uniform(&mut rng, cfg.pixel_noise);
    let dct = Dct8::<f64>::new();
    for by in 0..height / BLOCK {
        for bx in 0..width / BLOCK {
            let activity = (cfg.activity_sigma * rng.sample::<f64, _>(StandardNormal)).exp();
            let mut coeffs = [0.0; BLOCK_LEN];
            for (u, c) in coeffs.iter_mut().enumerate().skip(1) {
                *c = laplace(&mut rng, sd[u] * activity);
            }
            let tex = dct.inverse(&coeffs);
            for (m, t) in tex.iter().enumerate() {
                let (x, y) = (bx * BLOCK + m % BLOCK, by * BLOCK + m / BLOCK);
                let n: f64 = rng.sample(StandardNormal);
                field.set(x, y, field.get(x, y) + t + noise_sd * n);
            }
        }
    }
    Ok(field.map(|v| {
        let r = v.round() as i32;
        if cfg.clamp {
            r.clamp(0, 255)
        } else {
            r
        }
    }))
}

/// `count` images generated in parallel with seeds derived from `seed`.
pub fn synth_batch(
    count: usize,
    width: usize,
    height: usize,
    seed: u64,
    cfg: &SynthConfig,
) -> Result<Vec<Plane<i32>>> {
    (0..count)
        .into_par_iter()
        .map(|i| synth_image(width, height, derive_seed(seed, i as u64), cfg))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::{spectrum_of, CodecOptions};

    #[test]
    fn deterministic_and_seed_sensitive() {
        let c = SynthConfig::default();
        let a = synth_image(32, 32, 5, &c).unwrap();
        assert_eq!(a, synth_image(32, 32, 5, &c).unwrap());
        assert_ne!(a, synth_image(32, 32, 6, &c).unwrap());
        assert!(a.as_slice().iter().all(|&v| (0..=255).contains(&v)));
        let batch = synth_batch(3, 16, 16, 9, &c).unwrap();
        assert_eq!(batch[1], synth_image(16, 16, derive_seed(9, 1), &c).unwrap());
    }

    #[test]
    fn ac_spread_decays_with_frequency() {
        let img = synth_image(256, 256, 1, &SynthConfig::default()).unwrap();
        let spectrum = spectrum_of::<f64>(&img, &CodecOptions::default()).unwrap();
        let var = |u: usize| {
            let xs = spectrum.block_position_samples(u);
            xs.iter().map(|x| x * x).sum::<f64>() / xs.len() as f64
        };
        assert!(var(1) > var(9));
        assert!(var(9) > var(63));
        assert!(var(63) > 0.5);
    }

    #[test]
    fn misaligned_rejected() {
        assert!(synth_image(20, 16, 1, &SynthConfig::default()).is_err());
    }
}
