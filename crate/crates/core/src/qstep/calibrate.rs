//! Grid search for the two estimator thresholds on labelled curves.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::curve::VarCurve;
use super::estimate::estimate_from_curve;

/// Log-spaced threshold grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdGrid {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl Default for ThresholdGrid {
    fn default() -> Self {
        // Upper end: uniform noise variance at q = 2 is 4/12.
        Self {
            lo: 1e-3,
            hi: 1.0 / 3.0,
            points: 64,
        }
    }
}

impl ThresholdGrid {
    pub fn values(&self) -> Result<Vec<f64>> {
        if !(self.lo > 0.0 && self.lo < self.hi && self.points >= 2) {
            return Err(Error::Config(format!("bad threshold grid {self:?}")));
        }
        let (a, b) = (self.lo.ln(), self.hi.ln());
        let n = self.points - 1;
        Ok((0..=n).map(|i| (a + (b - a) * i as f64 / n as f64).exp()).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorCalibration {
    pub t_c: f64,
    pub t_xi: f64,
    pub accuracy: f64,
    pub samples: usize,
    /// Grid pairs that reach the best accuracy.
    pub optimal_pairs: usize,
}

/// Fraction of curves whose estimate equals the label.
pub fn accuracy(samples: &[(VarCurve, u16)], t_c: f64, t_xi: f64) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    let hits = samples
        .iter()
        .filter(|(c, truth)| estimate_from_curve(c, t_c, t_xi).step == *truth)
        .count();
    hits as f64 / samples.len() as f64
}

/// Chooses `t_c < t_xi` on `grid` maximizing training accuracy. Among
/// equally good pairs the one nearest (in log space) to the centroid of
/// all optimal pairs is kept, which favours the middle of a plateau.
pub fn calibrate_thresholds(
    samples: &[(VarCurve, u16)],
    grid: &ThresholdGrid,
) -> Result<EstimatorCalibration> {
    let mut labels: Vec<u16> = samples.iter().map(|s| s.1).collect();
    labels.sort_unstable();
    labels.dedup();
    if labels.len() < 2 || !labels.contains(&1) || !labels.contains(&2) {
        return Err(Error::DegenerateTraining(format!(
            "need labelled steps including 1 and 2, got {labels:?}"
        )));
    }
    let values = grid.values()?;

    // Per curve: S(2) and the ascending minima with their S values, so a
    // pair is scored without re-scanning the curve.
    let prepared: Vec<(f64, Vec<(u16, f64)>, u16)> = samples
        .iter()
        .map(|(c, t)| {
            let mins = c.minima.iter().map(|&q| (q, c.at(q).unwrap_or(f64::INFINITY))).collect();
            (c.at(2).unwrap_or(f64::INFINITY), mins, *t)
        })
        .collect();
    let score = |t_c: f64, t_xi: f64| -> usize {
        prepared
            .iter()
            .filter(|(s2, mins, truth)| {
                let est = match mins.iter().rev().find(|(_, s)| *s < t_xi) {
                    Some(&(q, _)) => q,
                    None if *s2 < t_c => 2,
                    None => 1,
                };
                est == *truth
            })
            .count()
    };

    let mut best = 0usize;
    let mut optimal: Vec<(f64, f64)> = Vec::new();
    for (i, &t_c) in values.iter().enumerate() {
        for &t_xi in &values[i + 1..] {
            let s = score(t_c, t_xi);
            if s > best {
                best = s;
                optimal.clear();
            }
            if s == best {
                optimal.push((t_c, t_xi));
            }
        }
    }
    let n = optimal.len() as f64;
    let (cx, cy) = optimal
        .iter()
        .fold((0.0, 0.0), |(a, b), (x, y)| (a + x.ln() / n, b + y.ln() / n));
    let &(t_c, t_xi) = optimal
        .iter()
        .min_by(|a, b| {
            let d = |p: &(f64, f64)| (p.0.ln() - cx).powi(2) + (p.1.ln() - cy).powi(2);
            d(a).total_cmp(&d(b))
        })
        .expect("grid has at least one pair");
    Ok(EstimatorCalibration {
        t_c,
        t_xi,
        accuracy: best as f64 / samples.len() as f64,
        samples: samples.len(),
        optimal_pairs: optimal.len(),
    })
}
