use std::path::PathBuf;

use serde::Serialize;

use jpeg_noise::io::curve_rows;
use jpeg_noise::qstep::{estimate_step, estimate_table, naive_global_min, EstimateMode, EstimatorConfig, Frequency};

use crate::failure::CliResult;
use crate::inputs::{load_image, FileConfig};
use crate::manifest::RunManifest;

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Decompressed images (PGM or int32 plane files).
    #[arg(long, num_args = 1.., required = true)]
    input: Vec<PathBuf>,
    /// Estimate a single frequency index (0..64, row-major) instead of the mode.
    #[arg(long)]
    freq: Option<usize>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    #[arg(long)]
    q_max: Option<u16>,
    #[arg(long)]
    t_c: Option<f64>,
    #[arg(long)]
    t_xi: Option<f64>,
    /// Skip zero coefficients when forming S^var.
    #[arg(long)]
    exclude_zeros: bool,
    #[arg(long)]
    level_shift: bool,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum ModeArg {
    Pooled,
    PerFrequency,
}

/// Flags over file values over defaults.
pub fn estimator_config(
    file: &FileConfig,
    q_max: Option<u16>,
    t_c: Option<f64>,
    t_xi: Option<f64>,
    exclude_zeros: bool,
    level_shift: bool,
    mode: Option<ModeArg>,
) -> CliResult<EstimatorConfig> {
    let d = EstimatorConfig::default();
    let cfg = EstimatorConfig {
        q_max: q_max.or(file.q_max).unwrap_or(d.q_max),
        t_c: t_c.or(file.t_c).unwrap_or(d.t_c),
        t_xi: t_xi.or(file.t_xi).unwrap_or(d.t_xi),
        exclude_zeros: exclude_zeros || file.exclude_zeros.unwrap_or(d.exclude_zeros),
        level_shift: level_shift || file.level_shift.unwrap_or(d.level_shift),
        mode: match mode {
            Some(ModeArg::Pooled) => EstimateMode::Pooled,
            Some(ModeArg::PerFrequency) => EstimateMode::PerFrequency,
            None => file.mode.unwrap_or(d.mode),
        },
    };
    cfg.validate()?;
    Ok(cfg)
}

#[derive(Debug, Serialize)]
struct EstimateRow {
    input: String,
    frequency: String,
    step: u16,
    branch: String,
    low_confidence: bool,
    naive_step: u16,
}

#[derive(Debug, Serialize)]
struct CurveRow {
    input: String,
    frequency: String,
    q: u16,
    s_var: f64,
    is_local_min: bool,
}

pub fn run(a: Args) -> CliResult {
    let file = FileConfig::load(a.config.as_deref())?;
    let cfg = estimator_config(&file, a.q_max, a.t_c, a.t_xi, a.exclude_zeros, a.level_shift, a.mode)?;
    if let Some(u) = a.freq {
        if u >= 64 {
            return Err(crate::failure::Failure::config(format!("--freq {u} outside 0..64")));
        }
    }
    let mut est_rows = Vec::new();
    let mut curve_out = Vec::new();
    let single = a.input.len() == 1;
    for path in &a.input {
        let img = load_image(path)?;
        let name = path.display().to_string();
        let (labels, estimates, curves) = match a.freq {
            Some(u) => {
                let (e, c) = estimate_step(&img, Frequency::Index(u), &cfg)?;
                (vec![u.to_string()], vec![e], vec![c])
            }
            None => {
                let t = estimate_table(&img, &cfg)?;
                let labels = match cfg.mode {
                    EstimateMode::Pooled => vec!["all".to_string()],
                    EstimateMode::PerFrequency => (0..64).map(|u| u.to_string()).collect(),
                };
                (labels, t.estimates, t.curves)
            }
        };
        if estimates.iter().any(|e| e.low_confidence) {
            eprintln!("warning: {name}: fewer than 16 blocks, estimate is low confidence");
        }
        let steps: Vec<String> = estimates.iter().map(|e| e.step.to_string()).collect();
        match (single, steps.len()) {
            (true, 1) => println!("{}", steps[0]),
            (false, 1) => println!("{name}\t{}", steps[0]),
            _ => {
                println!("{name}");
                for row in steps.chunks(8) {
                    println!("  {}", row.join(" "));
                }
            }
        }
        for ((label, e), c) in labels.iter().zip(&estimates).zip(&curves) {
            est_rows.push(EstimateRow {
                input: name.clone(),
                frequency: label.clone(),
                step: e.step,
                branch: format!("{:?}", e.branch),
                low_confidence: e.low_confidence,
                naive_step: naive_global_min(c),
            });
            curve_out.extend(curve_rows(c).into_iter().map(|r| CurveRow {
                input: name.clone(),
                frequency: label.clone(),
                q: r.q,
                s_var: r.s_var,
                is_local_min: r.is_local_min,
            }));
        }
    }
    super::write_rows(&a.out, "estimates.csv", &est_rows)?;
    super::write_rows(&a.out, "curves.csv", &curve_out)?;
    let mut m = RunManifest::new("estimate-qstep", &cfg)?;
    for p in &a.input {
        m.input(p)?;
    }
    m.write(&a.out)?;
    Ok(())
}
