//! The S^var(q) statistic: mean squared requantization noise of the
//! image's own DCT coefficients at each candidate step.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::codec::{spectrum_of, CodecOptions};
use crate::error::{Error, Result};
use crate::transform::{Plane, BLOCK_LEN};

/// Which coefficients feed the statistic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Frequency {
    /// Every coefficient of every block (constant-table mode).
    All,
    /// One in-block index `u`, row-major, 0 = DC.
    Index(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
#[derive(Default)]
pub struct CurveOptions {
    /// Drop coefficients that requantize to level 0 at the candidate step.
    pub exclude_zeros: bool,
    /// Subtract 128 from pixels first, as a JPEG encoder does.
    pub level_shift: bool,
}


/// `S^var(q)` for `q = 1..=q_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarCurve {
    pub q_values: Vec<u16>,
    pub s_var: Vec<f64>,
    /// Local minima, ascending.
    pub minima: Vec<u16>,
    /// Coefficients available per candidate step (before zero exclusion).
    pub samples: usize,
    pub blocks: usize,
}

impl VarCurve {
    /// Builds a curve from raw values at `q = 1, 2, …` and locates its minima.
    pub fn from_values(s_var: Vec<f64>, samples: usize, blocks: usize) -> Result<Self> {
        let q_values = (1..=s_var.len() as u16).collect();
        let mut c = Self {
            q_values,
            s_var,
            minima: Vec::new(),
            samples,
            blocks,
        };
        c.minima = local_minima(&c)?;
        Ok(c)
    }

    pub fn q_max(&self) -> u16 {
        self.q_values.last().copied().unwrap_or(0)
    }

    /// `S^var(q)`, or `None` outside `1..=q_max`.
    pub fn at(&self, q: u16) -> Option<f64> {
        self.s_var.get((q as usize).checked_sub(1)?).copied()
    }

    pub fn is_local_min(&self, q: u16) -> bool {
        self.minima.binary_search(&q).is_ok()
    }
}

/// Coefficients selected by `freq` from the blockwise DCT of `image`.
pub fn coefficients(image: &Plane<i32>, freq: Frequency, level_shift: bool) -> Result<Vec<f64>> {
    if let Frequency::Index(u) = freq {
        if u >= BLOCK_LEN {
            return Err(Error::OutOfRange {
                what: "frequency index",
                index: u,
                lo: 0,
                hi: BLOCK_LEN - 1,
            });
        }
    }
    let opts = CodecOptions {
        level_shift,
        ..Default::default()
    };
    let spectrum = spectrum_of::<f64>(image, &opts)?;
    Ok(match freq {
        Frequency::All => spectrum.into_vec(),
        Frequency::Index(u) => spectrum.block_position_samples(u),
    })
}

/// Mean of `(Y − [Y/q]q)²` over the given coefficients.
pub fn svar_at(coeffs: &[f64], q: u16, exclude_zeros: bool) -> Result<f64> {
    let q = q as f64;
    let (mut sum, mut n) = (0.0, 0usize);
    for &y in coeffs {
        let level = (y / q).round();
        if exclude_zeros && level == 0.0 {
            continue;
        }
        let e = y - level * q;
        sum += e * e;
        n += 1;
    }
    if n == 0 {
        return Err(Error::EmptySampleSet(format!("no coefficients left at q = {q}")));
    }
    Ok(sum / n as f64)
}

/// `S^var` curve of pre-extracted coefficients.
pub fn svar_curve_from_coefficients(
    coeffs: &[f64],
    q_max: u16,
    exclude_zeros: bool,
    blocks: usize,
) -> Result<VarCurve> {
    if q_max < 2 {
        return Err(Error::Config(format!("q_max must be at least 2, got {q_max}")));
    }
    if coeffs.is_empty() {
        return Err(Error::EmptySampleSet("image has no coefficients".into()));
    }
    let s_var = (1..=q_max)
        .into_par_iter()
        .map(|q| svar_at(coeffs, q, exclude_zeros))
        .collect::<Result<Vec<_>>>()?;
    VarCurve::from_values(s_var, coeffs.len(), blocks)
}

/// `S^var(q)` of an integer image for `q = 1..=q_max`.
pub fn svar_curve(
    image: &Plane<i32>,
    freq: Frequency,
    q_max: u16,
    opts: &CurveOptions,
) -> Result<VarCurve> {
    let coeffs = coefficients(image, freq, opts.level_shift)?;
    svar_curve_from_coefficients(&coeffs, q_max, opts.exclude_zeros, image.block_count())
}

/// Local minima among `q ≥ 3`: points strictly below both neighbours. A
/// flat run `[a, b]` strictly below both outside neighbours counts once,
/// at its largest step `b`. The last point has no right neighbour and is
/// never a minimum; `q = 2` is left to the dedicated threshold branch.
pub fn local_minima(curve: &VarCurve) -> Result<Vec<u16>> {
    let s = &curve.s_var;
    if s.len() < 3 {
        return Err(Error::Domain(format!(
            "curve needs at least 3 points, has {}",
            s.len()
        )));
    }
    let mut out = Vec::new();
    let mut i = 1; // index of q = 2
    while i + 1 < s.len() {
        let mut j = i;
        while j + 1 < s.len() && s[j + 1] == s[i] {
            j += 1;
        }
        if j + 1 < s.len() && s[i - 1] > s[i] && s[j + 1] > s[j] {
            let q = (j + 1) as u16;
            if q >= 3 {
                out.push(q);
            }
        }
        i = j + 1;
    }
    Ok(out)
}
