use std::path::PathBuf;

use serde::Serialize;

use jpeg_noise::detect::{detect, Coefficients, DetectorConfig, Verdict};
use jpeg_noise::io::AnyPlane;

use crate::failure::CliResult;
use crate::inputs::{load_plane, load_table, table_files, FileConfig};
use crate::manifest::RunManifest;

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Coefficient planes: int32 quantization levels or float64 dequantized values.
    #[arg(long, num_args = 1.., required = true)]
    input: Vec<PathBuf>,
    /// Quantization table of the inputs: a table file, a JPEG file, `qf:<n>` or `const:<q>`.
    #[arg(long)]
    table: String,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

pub fn detector_config(file: &FileConfig, threshold: Option<f64>) -> CliResult<DetectorConfig> {
    let d = DetectorConfig::default();
    let cfg = DetectorConfig {
        threshold: threshold.or(file.threshold).unwrap_or(d.threshold),
        classes: file.classes.clone().unwrap_or_default(),
    };
    cfg.validate()?;
    Ok(cfg)
}

#[derive(Debug, Serialize)]
struct Row {
    input: String,
    sigma2_all: f64,
    verdict: Verdict,
    min_step: u16,
    threshold: f64,
    table_digest: String,
}

pub fn run(a: Args) -> CliResult {
    let file = FileConfig::load(a.config.as_deref())?;
    let cfg = detector_config(&file, a.threshold)?;
    let table = load_table(&a.table)?;
    if !table.has_unit_step() {
        eprintln!(
            "warning: table {} has no unit step (min {}); identical re-compression is not detectable",
            table.digest(),
            table.min_step()
        );
    }
    let mut rows = Vec::new();
    for path in &a.input {
        let plane = load_plane(path)?;
        let coeffs = match &plane {
            AnyPlane::Int(p) => Coefficients::Levels(p),
            AnyPlane::Real(p) => Coefficients::Dequantized(p),
        };
        let r = detect(coeffs, &table, &cfg).map_err(|e| crate::failure::Failure::from(e).with_context(path))?;
        println!("{}\t{}\t{:.6}", path.display(), r.verdict, r.sigma2_all);
        rows.push(Row {
            input: path.display().to_string(),
            sigma2_all: r.sigma2_all,
            verdict: r.verdict,
            min_step: r.min_step,
            threshold: r.threshold,
            table_digest: r.table_digest,
        });
    }
    super::write_rows(&a.out, "detections.csv", &rows)?;
    let mut m = RunManifest::new("detect-recompress", &cfg)?;
    for p in a.input.iter().chain(&table_files(std::slice::from_ref(&a.table))) {
        m.input(p)?;
    }
    m.write(&a.out)?;
    Ok(())
}
