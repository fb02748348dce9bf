//! Accuracy tables for the step estimator and the re-compression detector
//! over an image corpus at several crop sizes.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::codec::{run_cycles, CodecOptions, QuantTable};
use crate::detect::{balanced_accuracy, calibrate_threshold, rounding_noise_stat, Coefficients};
use crate::dist::welch_t_test;
use crate::error::{Error, Result};
use crate::qstep::{estimate_from_curve, estimate_step, naive_global_min, EstimatorConfig, Frequency, VarCurve};
use crate::IntPlane;

/// Centred `side × side` crop.
pub fn center_crop(image: &IntPlane, side: usize) -> Result<IntPlane> {
    if image.width() < side || image.height() < side {
        return Err(Error::Shape(format!(
            "{}x{} image cannot be cropped to {side}x{side}",
            image.width(),
            image.height()
        )));
    }
    image.crop((image.width() - side) / 2, (image.height() - side) / 2, side, side)
}

fn crops(sources: &[IntPlane], side: usize) -> Result<Vec<IntPlane>> {
    if sources.is_empty() {
        return Err(Error::EmptySampleSet("no source images".into()));
    }
    sources.iter().map(|s| center_crop(s, side)).collect()
}

/// Integer image after one compression cycle with `table`.
pub fn compress_once(image: &IntPlane, table: &QuantTable, opts: &CodecOptions) -> Result<IntPlane> {
    let t = run_cycles::<f64>(image, &[*table], opts)?;
    Ok(t.final_image().clone())
}

/// Pooled S^var curves of every source cropped to `side` and compressed
/// once with the constant table of each step, labelled with the step.
pub fn labelled_curves(
    sources: &[IntPlane],
    side: usize,
    steps: &[u16],
    cfg: &EstimatorConfig,
    opts: &CodecOptions,
) -> Result<Vec<(VarCurve, u16)>> {
    let imgs = crops(sources, side)?;
    let jobs: Vec<(usize, u16)> = steps
        .iter()
        .flat_map(|&q| (0..imgs.len()).map(move |i| (i, q)))
        .collect();
    jobs.par_iter()
        .map(|&(i, q)| {
            let img = compress_once(&imgs[i], &QuantTable::constant(q)?, opts)?;
            let (_, curve) = estimate_step(&img, Frequency::All, cfg)?;
            Ok((curve, q))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorBenchRow {
    pub side: usize,
    pub step: u16,
    pub images: usize,
    pub accuracy: f64,
    pub naive_accuracy: f64,
    pub t_c: f64,
    pub t_xi: f64,
}

/// One row per (side, step) pair, using `t_c`/`t_xi` from `cfg`.
pub fn estimator_rows(curves: &[(VarCurve, u16)], side: usize, cfg: &EstimatorConfig) -> Vec<EstimatorBenchRow> {
    let mut steps: Vec<u16> = curves.iter().map(|c| c.1).collect();
    steps.sort_unstable();
    steps.dedup();
    steps
        .into_iter()
        .map(|q| {
            let of_q: Vec<&VarCurve> = curves.iter().filter(|c| c.1 == q).map(|c| &c.0).collect();
            let n = of_q.len() as f64;
            let hits = of_q
                .iter()
                .filter(|c| estimate_from_curve(c, cfg.t_c, cfg.t_xi).step == q)
                .count();
            let naive = of_q.iter().filter(|c| naive_global_min(c) == q).count();
            EstimatorBenchRow {
                side,
                step: q,
                images: of_q.len(),
                accuracy: hits as f64 / n,
                naive_accuracy: naive as f64 / n,
                t_c: cfg.t_c,
                t_xi: cfg.t_xi,
            }
        })
        .collect()
}

pub fn estimator_benchmark(
    sources: &[IntPlane],
    sides: &[usize],
    steps: &[u16],
    cfg: &EstimatorConfig,
    opts: &CodecOptions,
) -> Result<Vec<EstimatorBenchRow>> {
    cfg.validate()?;
    let mut rows = Vec::new();
    for &side in sides {
        let curves = labelled_curves(sources, side, steps, cfg, opts)?;
        rows.extend(estimator_rows(&curves, side, cfg));
    }
    Ok(rows)
}

/// Rounding-noise statistic of each source after one and after two
/// compressions with the same table, read back from the stored levels.
pub fn detector_statistics(
    images: &[IntPlane],
    table: &QuantTable,
    opts: &CodecOptions,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let pairs: Vec<(f64, f64)> = images
        .par_iter()
        .map(|img| {
            let t = run_cycles::<f64>(img, &[*table, *table], opts)?;
            Ok((
                rounding_noise_stat(Coefficients::Levels(&t.cycles[0].levels), table)?,
                rounding_noise_stat(Coefficients::Levels(&t.cycles[1].levels), table)?,
            ))
        })
        .collect::<Result<_>>()?;
    Ok(pairs.into_iter().unzip())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorBenchRow {
    pub side: usize,
    pub label: String,
    pub min_step: u16,
    pub pairs: usize,
    pub out_of_domain: bool,
    /// Empty when the table is out of domain and detection was not forced,
    /// or when training could not place a threshold.
    pub threshold: Option<f64>,
    pub balanced_accuracy: Option<f64>,
    pub true_positive_rate: Option<f64>,
    pub true_negative_rate: Option<f64>,
    pub mean_single: f64,
    pub mean_double: f64,
    /// Welch test of single against double statistics on the test set.
    pub welch_p: f64,
}

/// Calibrates a threshold on `train` and scores it on `test`, both cropped
/// to `side`. Tables without a unit step are reported as out of domain
/// unless `force` is set.
pub fn detector_row(
    train: &[IntPlane],
    test: &[IntPlane],
    side: usize,
    label: &str,
    table: &QuantTable,
    force: bool,
    opts: &CodecOptions,
) -> Result<DetectorBenchRow> {
    let (ts, td) = detector_statistics(&crops(train, side)?, table, opts)?;
    let (s, d) = detector_statistics(&crops(test, side)?, table, opts)?;
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let out_of_domain = !table.has_unit_step();
    let mut row = DetectorBenchRow {
        side,
        label: label.to_string(),
        min_step: table.min_step(),
        pairs: s.len(),
        out_of_domain,
        threshold: None,
        balanced_accuracy: None,
        true_positive_rate: None,
        true_negative_rate: None,
        mean_single: mean(&s),
        mean_double: mean(&d),
        welch_p: welch_t_test(&s, &d).map_or(f64::NAN, |w| w.p_value),
    };
    if out_of_domain && !force {
        return Ok(row);
    }
    match calibrate_threshold(&ts, &td) {
        Ok(cal) => {
            let (ba, tpr, tnr) = balanced_accuracy(&s, &d, cal.threshold);
            row.threshold = Some(cal.threshold);
            row.balanced_accuracy = Some(ba);
            row.true_positive_rate = Some(tpr);
            row.true_negative_rate = Some(tnr);
        }
        // Forced runs on indistinguishable classes often cannot train at
        // all; chance level is the honest score then.
        Err(Error::DegenerateTraining(_)) if force => {
            row.balanced_accuracy = Some(0.5);
        }
        Err(e) => return Err(e),
    }
    Ok(row)
}

pub fn detector_benchmark(
    train: &[IntPlane],
    test: &[IntPlane],
    sides: &[usize],
    tables: &[(String, QuantTable)],
    force: bool,
    opts: &CodecOptions,
) -> Result<Vec<DetectorBenchRow>> {
    let mut rows = Vec::new();
    for &side in sides {
        for (label, table) in tables {
            rows.push(detector_row(train, test, side, label, table, force, opts)?);
        }
    }
    Ok(rows)
}
