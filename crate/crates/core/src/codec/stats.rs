//! Per-index moments of noise planes across all blocks.

use serde::Serialize;

use crate::error::Result;
use crate::scalar::Scalar;
use crate::transform::{Plane, BLOCK_LEN};

use super::cycle::{CompressionTrace, NoiseKind};

/// Sample mean and variance for each of the 64 in-block positions
/// (row-major within the block).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndexStats {
    pub means: Vec<f64>,
    /// Unbiased (n − 1) sample variances; zero when a single block exists.
    pub variances: Vec<f64>,
    pub blocks: usize,
}

impl IndexStats {
    /// Variance of all samples pooled together.
    pub fn pooled_variance(&self) -> f64 {
        // Mixture variance: mean of within-index second moments about the grand mean.
        let n = self.blocks as f64;
        if self.blocks == 0 {
            return 0.0;
        }
        let grand = self.means.iter().sum::<f64>() / BLOCK_LEN as f64;
        let within = if self.blocks > 1 { (n - 1.0) / n } else { 0.0 };
        self.variances
            .iter()
            .zip(&self.means)
            .map(|(v, m)| v * within + (m - grand).powi(2))
            .sum::<f64>()
            / BLOCK_LEN as f64
    }
}

/// Moments of one plane, computed per block position.
pub fn plane_index_stats<T: Scalar>(plane: &Plane<T>) -> Result<IndexStats> {
    plane.require_block_aligned()?;
    let blocks = plane.block_count();
    let mut means = vec![0.0; BLOCK_LEN];
    let mut variances = vec![0.0; BLOCK_LEN];
    for u in 0..BLOCK_LEN {
        let xs: Vec<f64> = plane
            .block_position_samples(u)
            .into_iter()
            .map(Scalar::to_f64_lossy)
            .collect();
        let (m, v) = mean_var(&xs);
        means[u] = m;
        variances[u] = v;
    }
    Ok(IndexStats {
        means,
        variances,
        blocks,
    })
}

/// Per-index moments of noise `kind` at cycle `k` (1-based).
pub fn per_index_stats<T: Scalar>(
    trace: &CompressionTrace<T>,
    kind: NoiseKind,
    k: usize,
) -> Result<IndexStats> {
    plane_index_stats(trace.noise(k)?.get(kind))
}

/// Mean and unbiased variance; `(0, 0)` on empty input.
pub fn mean_var(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (m, 0.0);
    }
    let ss: f64 = xs.iter().map(|x| (x - m).powi(2)).sum();
    (m, ss / (n - 1.0))
}
