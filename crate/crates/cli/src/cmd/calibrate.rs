use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;

use jpeg_noise::bench::{detector_statistics, labelled_curves};
use jpeg_noise::codec::CodecOptions;
use jpeg_noise::detect::{calibrate_threshold, rounding_noise_stat, Coefficients};
use jpeg_noise::io::AnyPlane;
use jpeg_noise::qstep::{calibrate_thresholds, estimate_step, Frequency, ThresholdGrid};

use super::estimate::estimator_config;
use crate::failure::{CliResult, Failure};
use crate::inputs::{load_image, load_plane, load_table, synthetic, table_files, write_text, FileConfig};
use crate::manifest::RunManifest;

#[derive(Debug, clap::Args)]
pub struct QstepArgs {
    /// Labelled decompressed image, `PATH=STEP`; repeatable.
    #[arg(long = "sample", value_parser = parse_sample)]
    samples: Vec<(PathBuf, u16)>,
    /// Synthetic images per step when no samples are given.
    #[arg(long, default_value_t = 50)]
    images: usize,
    #[arg(long, default_value_t = 256)]
    side: usize,
    /// Steps to train on, e.g. `1..10`; must include 1 and 2.
    #[arg(long, default_value = "1..10")]
    steps: String,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    q_max: Option<u16>,
    #[arg(long)]
    exclude_zeros: bool,
    #[arg(long)]
    level_shift: bool,
    #[arg(long, default_value_t = 64)]
    grid_points: usize,
    /// Clip decoded pixels to [0, 255] when simulating synthetic examples.
    #[arg(long)]
    clip: bool,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

fn parse_sample(s: &str) -> Result<(PathBuf, u16), String> {
    let (p, q) = s.rsplit_once('=').ok_or("expected PATH=STEP")?;
    let q: u16 = q.parse().map_err(|_| format!("bad step '{q}'"))?;
    Ok((PathBuf::from(p), q))
}

pub const DEFAULT_SEED: u64 = 1;

fn codec(clip: bool) -> CodecOptions {
    CodecOptions {
        clip,
        ..CodecOptions::default()
    }
}

fn write_config(out: &Path, name: &str, cfg: &FileConfig) -> CliResult {
    let text = toml::to_string(cfg).map_err(|e| Failure::config(e.to_string()))?;
    write_text(&out.join(name), &text)
}

pub fn run_qstep(a: QstepArgs) -> CliResult {
    let file = FileConfig::load(a.config.as_deref())?;
    let seed = a.seed.or(file.seed).unwrap_or(DEFAULT_SEED);
    let cfg = estimator_config(&file, a.q_max, None, None, a.exclude_zeros, a.level_shift, None)?;
    let grid = ThresholdGrid {
        points: a.grid_points,
        ..ThresholdGrid::default()
    };
    let steps = super::parse_steps(&a.steps).map_err(Failure::config)?;
    let curves = if a.samples.is_empty() {
        let sources = synthetic(a.images, a.side, seed, 1)?;
        labelled_curves(&sources, a.side, &steps, &cfg, &codec(a.clip))?
    } else {
        a.samples
            .iter()
            .map(|(p, q)| Ok((estimate_step(&load_image(p)?, Frequency::All, &cfg)?.1, *q)))
            .collect::<CliResult<Vec<_>>>()?
    };
    let cal = calibrate_thresholds(&curves, &grid)?;
    println!(
        "t_c = {:.6}  t_xi = {:.6}  training accuracy {:.4} over {} curves",
        cal.t_c, cal.t_xi, cal.accuracy, cal.samples
    );
    crate::inputs::ensure_dir(&a.out)?;
    super::write_rows(&a.out, "calibration.csv", std::slice::from_ref(&cal))?;
    let saved = FileConfig {
        q_max: Some(cfg.q_max),
        t_c: Some(cal.t_c),
        t_xi: Some(cal.t_xi),
        exclude_zeros: Some(cfg.exclude_zeros),
        level_shift: Some(cfg.level_shift),
        ..FileConfig::default()
    };
    write_config(&a.out, "qstep.toml", &saved)?;

    #[derive(Serialize)]
    struct Snapshot<'a> {
        estimator: &'a jpeg_noise::qstep::EstimatorConfig,
        grid: ThresholdGrid,
        synthetic: bool,
        images: usize,
        side: usize,
        clip: bool,
        steps: &'a [u16],
    }
    let snap = Snapshot {
        estimator: &cfg,
        grid,
        synthetic: a.samples.is_empty(),
        images: a.images,
        side: a.side,
        clip: a.clip,
        steps: &steps,
    };
    let mut m = RunManifest::new("calibrate-qstep", &snap)?.seed(seed);
    for (p, _) in &a.samples {
        m.input(p)?;
    }
    m.write(&a.out)?;
    Ok(())
}

#[derive(Debug, clap::Args)]
pub struct DetectorArgs {
    /// Coefficient planes of singly compressed images.
    #[arg(long, num_args = 1..)]
    single: Vec<PathBuf>,
    /// Coefficient planes of identically double compressed images.
    #[arg(long, num_args = 1..)]
    double: Vec<PathBuf>,
    /// Quantization table: a table file, a JPEG file, `qf:<n>` or `const:<q>`.
    #[arg(long, default_value = "qf:100")]
    table: String,
    /// Synthetic pairs when no planes are given.
    #[arg(long, default_value_t = 100)]
    images: usize,
    #[arg(long, default_value_t = 128)]
    side: usize,
    /// Clip decoded pixels to [0, 255] when simulating synthetic examples.
    #[arg(long)]
    clip: bool,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

fn plane_stats(paths: &[PathBuf], table: &jpeg_noise::codec::QuantTable) -> CliResult<Vec<f64>> {
    paths
        .iter()
        .map(|p| {
            let plane = load_plane(p)?;
            let c = match &plane {
                AnyPlane::Int(x) => Coefficients::Levels(x),
                AnyPlane::Real(x) => Coefficients::Dequantized(x),
            };
            rounding_noise_stat(c, table).map_err(|e| Failure::from(e).with_context(p))
        })
        .collect()
}

pub fn run_detector(a: DetectorArgs) -> CliResult {
    let file = FileConfig::load(a.config.as_deref())?;
    let seed = a.seed.or(file.seed).unwrap_or(DEFAULT_SEED);
    let table = load_table(&a.table)?;
    let synthetic_run = a.single.is_empty() && a.double.is_empty();
    let (singles, doubles) = if synthetic_run {
        detector_statistics(&synthetic(a.images, a.side, seed, 2)?, &table, &codec(a.clip))?
    } else {
        if a.single.is_empty() || a.double.is_empty() {
            return Err(Failure::config("calibration needs both --single and --double examples"));
        }
        (plane_stats(&a.single, &table)?, plane_stats(&a.double, &table)?)
    };
    if !table.has_unit_step() {
        eprintln!("warning: table has no unit step; the detector will report OUT_OF_DOMAIN for it");
    }
    let cal = calibrate_threshold(&singles, &doubles)?;
    println!(
        "threshold = {:.6}  balanced accuracy {:.4} (TPR {:.4}, TNR {:.4})",
        cal.threshold, cal.balanced_accuracy, cal.true_positive_rate, cal.true_negative_rate
    );
    crate::inputs::ensure_dir(&a.out)?;
    super::write_rows(&a.out, "calibration.csv", std::slice::from_ref(&cal))?;
    let saved = FileConfig {
        threshold: Some(cal.threshold),
        classes: Some(BTreeMap::from([(table.digest(), cal.threshold)])),
        ..FileConfig::default()
    };
    write_config(&a.out, "detector.toml", &saved)?;

    #[derive(Serialize)]
    struct Snapshot {
        table_digest: String,
        synthetic: bool,
        images: usize,
        side: usize,
        clip: bool,
    }
    let snap = Snapshot {
        table_digest: table.digest(),
        synthetic: synthetic_run,
        images: singles.len(),
        side: a.side,
        clip: a.clip,
    };
    let mut m = RunManifest::new("calibrate-detector", &snap)?.seed(seed);
    for p in a.single.iter().chain(&a.double).chain(&table_files(std::slice::from_ref(&a.table))) {
        m.input(p)?;
    }
    m.write(&a.out)?;
    Ok(())
}
