use std::path::PathBuf;

use serde::Serialize;

use jpeg_noise::codec::{identity_residuals, run_cycles, CodecOptions};
use jpeg_noise::io::export_trace;
use jpeg_noise::transform::Rounding;
use jpeg_noise::Trace;

use crate::failure::CliResult;
use crate::inputs::{ensure_dir, load_image, load_table, table_files};
use crate::manifest::RunManifest;

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Source image (PGM or int32 plane file).
    #[arg(long)]
    input: PathBuf,
    /// One table per cycle: a table file, a JPEG file, `qf:<n>` or `const:<q>`.
    #[arg(long, num_args = 1.., required = true)]
    tables: Vec<String>,
    /// Output trace directory.
    #[arg(long)]
    out: PathBuf,
    /// Clamp decoded pixels to 0..=max-value before rounding.
    #[arg(long)]
    clip: bool,
    #[arg(long, default_value_t = 255)]
    max_value: i32,
    /// Subtract 128 before the forward DCT.
    #[arg(long)]
    level_shift: bool,
    /// Round exact halves to even instead of away from zero.
    #[arg(long)]
    half_even: bool,
}

#[derive(Debug, Serialize)]
struct CycleRow {
    cycle: usize,
    table_digest: String,
    min_step: u16,
    max_step: u16,
    /// Pixels whose rounded value fell outside 0..=max_value.
    saturated: usize,
    identity_residual: f64,
}

fn rows(trace: &Trace, max_value: i32) -> CliResult<Vec<CycleRow>> {
    let residual = identity_residuals(trace)?.max();
    Ok(trace
        .cycles
        .iter()
        .enumerate()
        .map(|(i, c)| CycleRow {
            cycle: i + 1,
            table_digest: c.table.digest(),
            min_step: c.table.min_step(),
            max_step: c.table.max_step(),
            saturated: c
                .decoded
                .as_slice()
                .iter()
                .filter(|v| {
                    let r = v.round();
                    r < 0.0 || r > max_value as f64
                })
                .count(),
            identity_residual: residual,
        })
        .collect())
}

pub fn run(a: Args) -> CliResult {
    let tables = a.tables.iter().map(|s| load_table(s)).collect::<CliResult<Vec<_>>>()?;
    let source = load_image(&a.input)?;
    let opts = CodecOptions {
        clip: a.clip,
        max_value: a.max_value,
        level_shift: a.level_shift,
        rounding: if a.half_even {
            Rounding::HalfToEven
        } else {
            Rounding::HalfAwayFromZero
        },
    };
    let trace: Trace = run_cycles(&source, &tables, &opts)?;
    ensure_dir(&a.out)?;
    export_trace(&a.out, &trace)?;
    super::write_rows(&a.out, "summary.csv", &rows(&trace, a.max_value)?)?;

    #[derive(Serialize)]
    struct Snapshot<'a> {
        options: CodecOptions,
        tables: &'a [String],
        digests: Vec<String>,
    }
    let snap = Snapshot {
        options: opts,
        tables: &a.tables,
        digests: tables.iter().map(|t| t.digest()).collect(),
    };
    let mut m = RunManifest::new("simulate", &snap)?;
    m.input(&a.input)?;
    for f in table_files(&a.tables) {
        m.input(&f)?;
    }
    m.write(&a.out)?;
    println!("{} cycles written to {}", trace.len(), a.out.display());
    Ok(())
}
