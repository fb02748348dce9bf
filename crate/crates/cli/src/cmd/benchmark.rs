use std::path::PathBuf;

use serde::Serialize;

use jpeg_noise::bench::{detector_benchmark, estimator_rows, labelled_curves};
use jpeg_noise::codec::{CodecOptions, QuantTable};
use jpeg_noise::qstep::{calibrate_thresholds, EstimatorConfig, ThresholdGrid};
use jpeg_noise::IntPlane;

use super::estimate::estimator_config;
use crate::failure::{CliResult, Failure};
use crate::inputs::{load_corpus, load_table, synthetic, table_files, FileConfig};
use crate::manifest::RunManifest;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Estimator,
    Detector,
}

#[derive(Debug, clap::Args)]
pub struct Args {
    #[arg(long, value_enum)]
    task: Task,
    /// Directory of PGM sources; synthetic images are generated when absent.
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Test images (and, for calibration, as many training images).
    #[arg(long, default_value_t = 100)]
    images: usize,
    #[arg(long, default_value = "256,128,64,32,16")]
    sizes: String,
    /// Estimator: true first-cycle steps, e.g. `1..7,10,13`.
    #[arg(long, default_value = "1..7,10,13")]
    steps: String,
    /// Detector: IJG quality factors.
    #[arg(long, default_value = "100,98,95,93,90")]
    qf: String,
    /// Detector: explicit tables instead of quality factors.
    #[arg(long, num_args = 1..)]
    tables: Vec<String>,
    /// Detector: score tables without a unit step instead of reporting OUT_OF_DOMAIN.
    #[arg(long)]
    force_detect: bool,
    /// Estimator: calibrate thresholds per size on a separate training set.
    #[arg(long)]
    calibrate: bool,
    /// Clip decoded pixels to [0, 255] in every simulated cycle.
    #[arg(long)]
    clip: bool,
    #[arg(long)]
    t_c: Option<f64>,
    #[arg(long)]
    t_xi: Option<f64>,
    #[arg(long)]
    q_max: Option<u16>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

pub const DEFAULT_SEED: u64 = 1;

impl Args {
    fn codec(&self) -> CodecOptions {
        CodecOptions {
            clip: self.clip,
            ..CodecOptions::default()
        }
    }
}

/// Test and training sources. A corpus is split in half; synthetic sets use
/// separate seed streams.
fn sources(a: &Args, side: usize, seed: u64) -> CliResult<(Vec<IntPlane>, Vec<IntPlane>)> {
    match &a.corpus {
        Some(dir) => {
            let mut all = load_corpus(dir)?;
            let wanted = if a.task == Task::Detector || a.calibrate { 2 * a.images } else { a.images };
            if all.len() < wanted {
                eprintln!(
                    "warning: corpus has {} images, fewer than the {wanted} requested; running anyway",
                    all.len()
                );
            }
            if all.is_empty() {
                return Err(jpeg_noise::Error::EmptySampleSet("corpus has no PGM images".into()).into());
            }
            all.truncate(wanted);
            if wanted == a.images {
                return Ok((all, Vec::new()));
            }
            let train = all.split_off(all.len().div_ceil(2));
            Ok((all, train))
        }
        None => Ok((synthetic(a.images, side, seed, 0)?, synthetic(a.images, side, seed, 1)?)),
    }
}

fn run_estimator(a: &Args, sizes: &[usize], seed: u64, cfg: &EstimatorConfig) -> CliResult<Vec<jpeg_noise::bench::EstimatorBenchRow>> {
    let steps = super::parse_steps(&a.steps).map_err(Failure::config)?;
    let side = *sizes.iter().max().unwrap();
    let (test, train) = sources(a, side, seed)?;
    let mut rows = Vec::new();
    for &s in sizes {
        let mut used = cfg.clone();
        if a.calibrate {
            let mut train_steps = steps.clone();
            train_steps.extend([1, 2]);
            train_steps.sort_unstable();
            train_steps.dedup();
            let cal = calibrate_thresholds(&labelled_curves(&train, s, &train_steps, cfg, &a.codec())?, &ThresholdGrid::default())?;
            used.t_c = cal.t_c;
            used.t_xi = cal.t_xi;
        }
        let curves = labelled_curves(&test, s, &steps, &used, &a.codec())?;
        rows.extend(estimator_rows(&curves, s, &used));
    }
    for r in &rows {
        println!("side {:>4} step {:>3}: accuracy {:.3} (naive {:.3})", r.side, r.step, r.accuracy, r.naive_accuracy);
    }
    Ok(rows)
}

fn run_detector(a: &Args, sizes: &[usize], seed: u64) -> CliResult<Vec<jpeg_noise::bench::DetectorBenchRow>> {
    let tables: Vec<(String, QuantTable)> = if a.tables.is_empty() {
        super::parse_list::<u8>(&a.qf)
            .map_err(Failure::config)?
            .into_iter()
            .map(|q| Ok((format!("qf{q}"), load_table(&format!("qf:{q}"))?)))
            .collect::<CliResult<_>>()?
    } else {
        a.tables.iter().map(|s| Ok((s.clone(), load_table(s)?))).collect::<CliResult<_>>()?
    };
    let side = *sizes.iter().max().unwrap();
    let (test, train) = sources(a, side, seed)?;
    let rows = detector_benchmark(&train, &test, sizes, &tables, a.force_detect, &a.codec())?;
    for r in &rows {
        let acc = match (r.out_of_domain && !a.force_detect, r.balanced_accuracy) {
            (true, _) => "OUT_OF_DOMAIN".to_string(),
            (false, Some(b)) => format!("{b:.4}"),
            (false, None) => "untrained".to_string(),
        };
        println!("side {:>4} {:>8} (min step {}): {acc}", r.side, r.label, r.min_step);
    }
    Ok(rows)
}

pub fn run(a: Args) -> CliResult {
    let file = FileConfig::load(a.config.as_deref())?;
    let seed = a.seed.or(file.seed).unwrap_or(DEFAULT_SEED);
    let sizes: Vec<usize> = super::parse_list(&a.sizes).map_err(Failure::config)?;
    if sizes.is_empty() || sizes.iter().any(|s| *s == 0 || s % 8 != 0) {
        return Err(Failure::config("sizes must be positive multiples of 8"));
    }
    let cfg = estimator_config(&file, a.q_max, a.t_c, a.t_xi, false, false, None)?;
    let path = match a.task {
        Task::Estimator => super::write_rows(&a.out, "accuracy.csv", &run_estimator(&a, &sizes, seed, &cfg)?)?,
        Task::Detector => super::write_rows(&a.out, "accuracy.csv", &run_detector(&a, &sizes, seed)?)?,
    };

    #[derive(Serialize)]
    struct Snapshot<'a> {
        task: Task,
        images: usize,
        sizes: &'a [usize],
        steps: &'a str,
        qf: &'a str,
        tables: &'a [String],
        force_detect: bool,
        calibrate: bool,
        clip: bool,
        estimator: &'a EstimatorConfig,
        synthetic: bool,
    }
    let snap = Snapshot {
        task: a.task,
        images: a.images,
        sizes: &sizes,
        steps: &a.steps,
        qf: &a.qf,
        tables: &a.tables,
        force_detect: a.force_detect,
        calibrate: a.calibrate,
        clip: a.clip,
        estimator: &cfg,
        synthetic: a.corpus.is_none(),
    };
    let mut m = RunManifest::new("benchmark", &snap)?.seed(seed);
    if let Some(dir) = &a.corpus {
        m.input(dir)?;
    }
    for f in table_files(&a.tables) {
        m.input(&f)?;
    }
    m.write(&a.out)?;
    println!("report {}", path.display());
    Ok(())
}
