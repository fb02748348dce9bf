//! Identical-recompression detection from the rounding-noise variance of
//! the decoded (pre-rounding) image.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::codec::{decode_spectrum, mean_var, CodecOptions, QuantTable};
use crate::error::{Error, Result};
use crate::transform::Plane;

/// Stored coefficients of one image.
#[derive(Debug, Clone, Copy)]
pub enum Coefficients<'a> {
    /// Integer quantization levels, as entropy-decoded from a file.
    Levels(&'a Plane<i32>),
    /// Dequantized values; each must be an integer multiple of its step.
    Dequantized(&'a Plane<f64>),
}

impl Coefficients<'_> {
    fn dims(&self) -> (usize, usize) {
        match self {
            Coefficients::Levels(p) => (p.width(), p.height()),
            Coefficients::Dequantized(p) => (p.width(), p.height()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Single,
    IdenticalDouble,
    /// No unit step in the table: the two classes share one rounding-noise law.
    OutOfDomain,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Single => "SINGLE",
            Verdict::IdenticalDouble => "IDENTICAL_DOUBLE",
            Verdict::OutOfDomain => "OUT_OF_DOMAIN",
        }
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Largest admissible threshold: the uniform rounding-noise variance.
pub const MAX_THRESHOLD: f64 = 1.0 / 12.0;

/// Threshold from a calibration run on synthetic images compressed with
/// the all-ones (quality 100) table.
pub const DEFAULT_THRESHOLD: f64 = 0.057;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorConfig {
    /// `σ² ≤ threshold` means identical double compression.
    pub threshold: f64,
    /// Per-table overrides keyed by [`QuantTable::digest`].
    pub classes: BTreeMap<String, f64>,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            threshold: DEFAULT_THRESHOLD,
            classes: BTreeMap::new(),
        }
    }
}

fn check_threshold(name: &str, t: f64) -> Result<()> {
    if !(t > 0.0 && t < MAX_THRESHOLD) {
        return Err(Error::Config(format!(
            "threshold {name} = {t} outside (0, 1/12)"
        )));
    }
    Ok(())
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        check_threshold("threshold", self.threshold)?;
        for (k, &t) in &self.classes {
            check_threshold(k, t)?;
        }
        Ok(())
    }

    pub fn threshold_for(&self, table: &QuantTable) -> f64 {
        self.classes
            .get(&table.digest())
            .copied()
            .unwrap_or(self.threshold)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetectionReport {
    pub sigma2_all: f64,
    pub verdict: Verdict,
    pub min_step: u16,
    pub threshold: f64,
    pub table_digest: String,
}

fn dequantize(coeffs: Coefficients, table: &QuantTable) -> Result<Plane<f64>> {
    let (w, h) = coeffs.dims();
    let step = |idx: usize| {
        let (x, y) = (idx % w, idx / w);
        table.step((y % 8) * 8 + x % 8) as f64
    };
    match coeffs {
        Coefficients::Levels(p) => {
            let data = p
                .as_slice()
                .iter()
                .enumerate()
                .map(|(i, &l)| l as f64 * step(i))
                .collect();
            Plane::new(w, h, data)
        }
        Coefficients::Dequantized(p) => {
            for (i, &v) in p.as_slice().iter().enumerate() {
                let q = step(i);
                let level = v / q;
                if !v.is_finite() || (level - level.round()).abs() > 1e-6 {
                    return Err(Error::Integrity(format!(
                        "coefficient {v} at ({}, {}) is not a multiple of step {q}",
                        i % w,
                        i / w
                    )));
                }
            }
            Ok(p.clone())
        }
    }
}

/// Decoded real-valued image `X̃` from stored coefficients.
pub fn decode(coeffs: Coefficients, table: &QuantTable) -> Result<Plane<f64>> {
    let deq = dequantize(coeffs, table)?;
    deq.require_block_aligned()?;
    decode_spectrum(&deq, &CodecOptions::default())
}

/// Pooled variance of `X̃ − [X̃]` over all pixels.
pub fn rounding_noise_stat(coeffs: Coefficients, table: &QuantTable) -> Result<f64> {
    let decoded = decode(coeffs, table)?;
    let noise: Vec<f64> = decoded.as_slice().iter().map(|v| v - v.round()).collect();
    Ok(mean_var(&noise).1)
}

/// Two-branch rule on the rounding-noise variance.
pub fn detect(
    coeffs: Coefficients,
    table: &QuantTable,
    config: &DetectorConfig,
) -> Result<DetectionReport> {
    config.validate()?;
    let sigma2_all = rounding_noise_stat(coeffs, table)?;
    Ok(verdict_for(sigma2_all, table, config))
}

/// Applies the rule to an already computed statistic.
pub fn verdict_for(sigma2_all: f64, table: &QuantTable, config: &DetectorConfig) -> DetectionReport {
    let threshold = config.threshold_for(table);
    let verdict = if !table.has_unit_step() {
        Verdict::OutOfDomain
    } else if sigma2_all > threshold {
        Verdict::Single
    } else {
        Verdict::IdenticalDouble
    };
    DetectionReport {
        sigma2_all,
        verdict,
        min_step: table.min_step(),
        threshold,
        table_digest: table.digest(),
    }
}

/// [`detect`] over many images in parallel.
pub fn detect_batch(
    images: &[Plane<i32>],
    table: &QuantTable,
    config: &DetectorConfig,
) -> Result<Vec<DetectionReport>> {
    images
        .par_iter()
        .map(|levels| detect(Coefficients::Levels(levels), table, config))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorCalibration {
    pub threshold: f64,
    pub balanced_accuracy: f64,
    /// Fraction of double-compressed samples flagged as double.
    pub true_positive_rate: f64,
    /// Fraction of single-compressed samples flagged as single.
    pub true_negative_rate: f64,
}

/// Balanced accuracy of `σ² ≤ t ⇒ double` on labelled statistics.
pub fn balanced_accuracy(singles: &[f64], doubles: &[f64], t: f64) -> (f64, f64, f64) {
    let tpr = doubles.iter().filter(|&&s| s <= t).count() as f64 / doubles.len().max(1) as f64;
    let tnr = singles.iter().filter(|&&s| s > t).count() as f64 / singles.len().max(1) as f64;
    ((tpr + tnr) / 2.0, tpr, tnr)
}

/// Threshold maximizing balanced accuracy over midpoints between
/// consecutive distinct statistics. Ties go to the middle of the optimal
/// candidates.
pub fn calibrate_threshold(singles: &[f64], doubles: &[f64]) -> Result<DetectorCalibration> {
    if singles.is_empty() || doubles.is_empty() {
        return Err(Error::DegenerateTraining(format!(
            "both classes are required ({} single, {} double)",
            singles.len(),
            doubles.len()
        )));
    }
    if singles.iter().chain(doubles).any(|v| !v.is_finite()) {
        return Err(Error::Domain("non-finite training statistic".into()));
    }
    let (ms, _) = mean_var(singles);
    let (md, _) = mean_var(doubles);
    if md >= ms {
        return Err(Error::DegenerateTraining(format!(
            "double-compressed mean {md} is not below single mean {ms}; labels look inverted"
        )));
    }
    let mut all: Vec<f64> = singles.iter().chain(doubles).copied().collect();
    all.sort_by(f64::total_cmp);
    all.dedup();
    let mut cands: Vec<f64> = all.windows(2).map(|w| (w[0] + w[1]) / 2.0).collect();
    if cands.is_empty() {
        cands.push(all[0]);
    }
    let mut best = f64::NEG_INFINITY;
    let mut optimal = Vec::new();
    for &t in &cands {
        let (ba, _, _) = balanced_accuracy(singles, doubles, t);
        if ba > best + 1e-12 {
            best = ba;
            optimal.clear();
        }
        if (ba - best).abs() <= 1e-12 {
            optimal.push(t);
        }
    }
    let threshold = optimal[optimal.len() / 2];
    check_threshold("calibrated threshold", threshold)?;
    let (balanced, tpr, tnr) = balanced_accuracy(singles, doubles, threshold);
    Ok(DetectorCalibration {
        threshold,
        balanced_accuracy: balanced,
        true_positive_rate: tpr,
        true_negative_rate: tnr,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::run_cycles;
    use crate::synth::{synth_image, SynthConfig};

    #[test]
    fn zero_coefficients_give_zero_variance() {
        let z = Plane::filled(16, 16, 0).unwrap();
        let t = QuantTable::constant(1).unwrap();
        assert_eq!(rounding_noise_stat(Coefficients::Levels(&z), &t).unwrap(), 0.0);
    }

    #[test]
    fn levels_and_dequantized_agree() {
        let img = synth_image(32, 32, 3, &SynthConfig::default()).unwrap();
        let t = QuantTable::ijg_luminance(95).unwrap();
        let tr = run_cycles::<f64>(&img, &[t], &CodecOptions::default()).unwrap();
        let a = rounding_noise_stat(Coefficients::Levels(&tr.cycles[0].levels), &t).unwrap();
        let b = rounding_noise_stat(Coefficients::Dequantized(&tr.cycles[0].dequantized), &t).unwrap();
        assert!((a - b).abs() < 1e-12);
        // Equal to the variance of the simulated rounding noise.
        let (_, v) = mean_var(tr.noise(1).unwrap().rounding.as_slice());
        assert!((a - v).abs() < 1e-12);
    }

    #[test]
    fn inconsistent_coefficients_are_integrity_errors() {
        let mut p = Plane::filled(8, 8, 0.0).unwrap();
        p.set(1, 0, 3.0);
        let t = QuantTable::constant(2).unwrap();
        assert!(matches!(
            rounding_noise_stat(Coefficients::Dequantized(&p), &t),
            Err(Error::Integrity(_))
        ));
    }

    #[test]
    fn verdict_rule() {
        let cfg = DetectorConfig {
            threshold: 0.05,
            ..Default::default()
        };
        let t1 = QuantTable::constant(1).unwrap();
        assert_eq!(verdict_for(0.07, &t1, &cfg).verdict, Verdict::Single);
        assert_eq!(verdict_for(0.05, &t1, &cfg).verdict, Verdict::IdenticalDouble);
        let t2 = QuantTable::constant(2).unwrap();
        let r = verdict_for(0.07, &t2, &cfg);
        assert_eq!(r.verdict, Verdict::OutOfDomain);
        assert_eq!(r.min_step, 2);
        assert_eq!(r.sigma2_all, 0.07);
    }

    #[test]
    fn per_table_thresholds() {
        let t = QuantTable::ijg_luminance(98).unwrap();
        let mut cfg = DetectorConfig::default();
        cfg.classes.insert(t.digest(), 0.01);
        assert_eq!(cfg.threshold_for(&t), 0.01);
        assert_eq!(cfg.threshold_for(&QuantTable::constant(1).unwrap()), DEFAULT_THRESHOLD);
        let s = toml::to_string(&cfg).unwrap();
        assert_eq!(toml::from_str::<DetectorConfig>(&s).unwrap(), cfg);
        cfg.classes.insert("x".into(), 0.2);
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn calibration_on_separable_sets() {
        let singles = [0.070, 0.072, 0.068, 0.071];
        let doubles = [0.040, 0.045, 0.050, 0.043];
        let c = calibrate_threshold(&singles, &doubles).unwrap();
        assert_eq!(c.balanced_accuracy, 1.0);
        assert!(c.threshold > 0.05 && c.threshold < 0.068);
        assert!(calibrate_threshold(&doubles, &singles).is_err());
        assert!(calibrate_threshold(&[], &doubles).is_err());
    }

    #[test]
    fn balanced_accuracy_by_hand() {
        let (ba, tpr, tnr) = balanced_accuracy(&[0.07, 0.03], &[0.02, 0.04, 0.08], 0.05);
        assert!((tpr - 2.0 / 3.0).abs() < 1e-15);
        assert!((tnr - 0.5).abs() < 1e-15);
        assert!((ba - 7.0 / 12.0).abs() < 1e-15);
    }
}
