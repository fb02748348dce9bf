//! Threshold rule that turns an S^var curve into a step estimate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::transform::{Plane, BLOCK_LEN};

use super::curve::{
    coefficients, svar_curve_from_coefficients, CurveOptions, Frequency, VarCurve,
};

/// Fewer blocks than this and an estimate is flagged as low confidence.
pub const MIN_CONFIDENT_BLOCKS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimateMode {
    /// One curve over all coefficients; every index gets the same step.
    Pooled,
    /// One curve per frequency index.
    PerFrequency,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimatorConfig {
    pub q_max: u16,
    /// Accept `q = 2` when `S^var(2)` is below this.
    pub t_c: f64,
    /// Local minima count only when `S^var` is below this.
    pub t_xi: f64,
    pub exclude_zeros: bool,
    pub level_shift: bool,
    pub mode: EstimateMode,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            q_max: 64,
            t_c: DEFAULT_T_C,
            t_xi: DEFAULT_T_XI,
            exclude_zeros: false,
            level_shift: false,
            mode: EstimateMode::Pooled,
        }
    }
}

/// Thresholds from a calibration run on synthetic images (steps 1–10,
/// sides 32–256, pooled mode).
pub const DEFAULT_T_C: f64 = 0.13;
pub const DEFAULT_T_XI: f64 = 0.23;

impl EstimatorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.q_max < 3 {
            return Err(Error::Config(format!("q_max must be at least 3, got {}", self.q_max)));
        }
        for (name, v) in [("t_c", self.t_c), ("t_xi", self.t_xi)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    pub fn curve_options(&self) -> CurveOptions {
        CurveOptions {
            exclude_zeros: self.exclude_zeros,
            level_shift: self.level_shift,
        }
    }
}

/// Which branch of the rule produced the estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Branch {
    LocalMinimum,
    SmallStep,
    Unit,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepEstimate {
    pub step: u16,
    pub branch: Branch,
    pub low_confidence: bool,
    /// Local minima that passed the `t_xi` screen.
    pub accepted_minima: Vec<u16>,
}

/// `q̂ = max{q ∈ minima : S^var(q) < t_xi}`; if none, 2 when
/// `S^var(2) < t_c`, else 1.
pub fn estimate_from_curve(curve: &VarCurve, t_c: f64, t_xi: f64) -> StepEstimate {
    let accepted: Vec<u16> = curve
        .minima
        .iter()
        .copied()
        .filter(|&q| curve.at(q).is_some_and(|s| s < t_xi))
        .collect();
    let low_confidence = curve.blocks < MIN_CONFIDENT_BLOCKS;
    let (step, branch) = match accepted.iter().max() {
        Some(&q) if q >= 2 => (q, Branch::LocalMinimum),
        _ if curve.at(2).is_some_and(|s| s < t_c) => (2, Branch::SmallStep),
        _ => (1, Branch::Unit),
    };
    StepEstimate {
        step,
        branch,
        low_confidence,
        accepted_minima: accepted,
    }
}

/// Estimates the first-cycle step of one frequency (or of all, pooled).
pub fn estimate_step(
    image: &Plane<i32>,
    freq: Frequency,
    config: &EstimatorConfig,
) -> Result<(StepEstimate, VarCurve)> {
    config.validate()?;
    let coeffs = coefficients(image, freq, config.level_shift)?;
    let curve =
        svar_curve_from_coefficients(&coeffs, config.q_max, config.exclude_zeros, image.block_count())?;
    Ok((estimate_from_curve(&curve, config.t_c, config.t_xi), curve))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableEstimate {
    pub steps: Vec<u16>,
    pub low_confidence: bool,
    pub mode: EstimateMode,
    /// One estimate in pooled mode, 64 in per-frequency mode.
    pub estimates: Vec<StepEstimate>,
    pub curves: Vec<VarCurve>,
}

/// Estimates all 64 steps in the configured mode.
pub fn estimate_table(image: &Plane<i32>, config: &EstimatorConfig) -> Result<TableEstimate> {
    config.validate()?;
    match config.mode {
        EstimateMode::Pooled => {
            let (est, curve) = estimate_step(image, Frequency::All, config)?;
            Ok(TableEstimate {
                steps: vec![est.step; BLOCK_LEN],
                low_confidence: est.low_confidence,
                mode: config.mode,
                estimates: vec![est],
                curves: vec![curve],
            })
        }
        EstimateMode::PerFrequency => {
            let mut steps = Vec::with_capacity(BLOCK_LEN);
            let mut estimates = Vec::with_capacity(BLOCK_LEN);
            let mut curves = Vec::with_capacity(BLOCK_LEN);
            for u in 0..BLOCK_LEN {
                let (est, curve) = estimate_step(image, Frequency::Index(u), config)?;
                steps.push(est.step);
                estimates.push(est);
                curves.push(curve);
            }
            Ok(TableEstimate {
                steps,
                low_confidence: image.block_count() < MIN_CONFIDENT_BLOCKS,
                mode: config.mode,
                estimates,
                curves,
            })
        }
    }
}

/// Naive comparator: the step in `2..=q_max` with the smallest `S^var`,
/// ties toward the larger step.
pub fn naive_global_min(curve: &VarCurve) -> u16 {
    let mut best = (2u16, f64::INFINITY);
    for (&q, &s) in curve.q_values.iter().zip(&curve.s_var) {
        if q >= 2 && s <= best.1 {
            best = (q, s);
        }
    }
    best.0
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curve(v: &[f64], blocks: usize) -> VarCurve {
        VarCurve::from_values(v.to_vec(), blocks * 64, blocks).unwrap()
    }

    #[test]
    fn rule_branches() {
        // minimum at 5 under threshold, spurious minimum at 3 above it
        let c = curve(&[0.01, 0.3, 0.2, 0.9, 0.05, 1.2, 1.5], 100);
        let e = estimate_from_curve(&c, 0.1, 0.15);
        assert_eq!((e.step, e.branch), (5, Branch::LocalMinimum));
        assert_eq!(e.accepted_minima, vec![5]);
        assert!(!e.low_confidence);

        let c = curve(&[0.01, 0.05, 0.7, 1.2, 2.0], 100);
        let e = estimate_from_curve(&c, 0.1, 0.15);
        assert_eq!((e.step, e.branch), (2, Branch::SmallStep));

        let c = curve(&[0.01, 0.33, 0.75, 1.3, 2.0], 4);
        let e = estimate_from_curve(&c, 0.1, 0.15);
        assert_eq!((e.step, e.branch), (1, Branch::Unit));
        assert!(e.low_confidence);
    }

    #[test]
    fn largest_accepted_minimum_wins() {
        let c = curve(&[0.0, 0.3, 0.05, 0.4, 0.04, 0.5, 0.06, 0.9], 100);
        assert_eq!(c.minima, vec![3, 5, 7]);
        assert_eq!(estimate_from_curve(&c, 0.01, 0.1).step, 7);
        assert_eq!(estimate_from_curve(&c, 0.01, 0.055).step, 5);
    }

    #[test]
    fn naive_picks_global_min() {
        let c = curve(&[0.0, 0.3, 0.05, 0.4, 0.05, 0.5], 10);
        assert_eq!(naive_global_min(&c), 5);
    }

    #[test]
    fn config_validation_and_toml() {
        assert!(EstimatorConfig::default().validate().is_ok());
        let bad = EstimatorConfig {
            t_c: -1.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let c: EstimatorConfig = toml::from_str("q_max = 20\nt_c = 0.1\nt_xi = 0.2\nmode = \"per-frequency\"").unwrap();
        assert_eq!(c.q_max, 20);
        assert_eq!(c.mode, EstimateMode::PerFrequency);
        assert!(toml::from_str::<EstimatorConfig>("bogus = 1").is_err());
    }

    #[test]
    fn single_block_is_low_confidence() {
        let img = Plane::from_fn(8, 8, |x, y| (x * 9 + y * 3) as i32).unwrap();
        let t = estimate_table(&img, &EstimatorConfig::default()).unwrap();
        assert!(t.low_confidence);
        assert_eq!(t.steps.len(), 64);
    }
}
