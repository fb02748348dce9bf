use std::path::PathBuf;

use serde::Serialize;

use jpeg_noise::io::load_trace_unchecked;
use jpeg_noise::validate::{run_model_checks, trace_integrity_check, CheckRow, ModelCheckConfig};

use crate::failure::{CliResult, Failure};
use crate::inputs::{load_corpus, synthetic, FileConfig};
use crate::manifest::RunManifest;

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Directory of PGM images; a synthetic corpus is generated when absent.
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    images: usize,
    #[arg(long, default_value_t = 256)]
    side: usize,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Trace directories to re-verify; each adds one integrity row.
    #[arg(long = "trace")]
    traces: Vec<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Exit with the integrity code when any check fails.
    #[arg(long)]
    strict: bool,
}

pub const DEFAULT_SEED: u64 = 1;

pub fn run(a: Args) -> CliResult {
    let file = FileConfig::load(a.config.as_deref())?;
    let seed = a.seed.or(file.seed).unwrap_or(DEFAULT_SEED);
    let mut cfg = ModelCheckConfig::default();
    if let Some(alpha) = a.alpha.or(file.alpha) {
        cfg.alpha = alpha;
    }
    cfg.validate()?;
    let images = match &a.corpus {
        Some(dir) => load_corpus(dir)?,
        None => synthetic(a.images, a.side, seed, 0)?,
    };
    if images.is_empty() {
        return Err(Failure::from(jpeg_noise::Error::EmptySampleSet("corpus has no PGM images".into())));
    }
    let mut rows = run_model_checks(&images, &cfg)?;
    for dir in &a.traces {
        let name = format!("trace_integrity:{}", dir.display());
        rows.push(match load_trace_unchecked(dir) {
            Ok(t) => trace_integrity_check(&name, &t, &cfg),
            Err(e) => CheckRow::failed(name, e.to_string()),
        });
    }
    let path = super::write_rows(&a.out, "checks.csv", &rows)?;

    #[derive(Serialize)]
    struct Snapshot<'a> {
        checks: &'a ModelCheckConfig,
        images: usize,
        side: Option<usize>,
        synthetic: bool,
    }
    let snap = Snapshot {
        checks: &cfg,
        images: images.len(),
        side: a.corpus.is_none().then_some(a.side),
        synthetic: a.corpus.is_none(),
    };
    let mut m = RunManifest::new("validate-model", &snap)?.seed(seed);
    if let Some(dir) = &a.corpus {
        m.input(dir)?;
    }
    for t in &a.traces {
        m.input(t)?;
    }
    m.write(&a.out)?;

    let failed: Vec<&CheckRow> = rows.iter().filter(|r| !r.passed()).collect();
    for r in &rows {
        println!("{:<48} {:>14.6e} {:>12.6e} {:?}", r.name, r.statistic, r.threshold, r.verdict);
    }
    println!("{} of {} checks passed; report {}", rows.len() - failed.len(), rows.len(), path.display());
    if a.strict && !failed.is_empty() {
        return Err(Failure::integrity(format!("{} checks failed", failed.len())));
    }
    Ok(())
}
