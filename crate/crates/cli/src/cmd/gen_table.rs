use std::path::PathBuf;

use serde::Serialize;

use jpeg_noise::codec::QuantTable;
use jpeg_noise::io::{encode_header_stub, format_table_text, write_table};

use crate::failure::{CliResult, Failure};
use crate::inputs::ensure_dir;
use crate::manifest::RunManifest;

#[derive(Debug, clap::Args)]
pub struct Args {
    /// IJG quality factor, 1..=100.
    #[arg(long)]
    quality: u8,
    /// Output directory for table.txt, table.csv and a header-only JPEG stub.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct Row {
    index: usize,
    row: usize,
    col: usize,
    step: u16,
}

pub fn run(a: Args) -> CliResult {
    let table = QuantTable::ijg_luminance(a.quality).map_err(|e| Failure::config(e.to_string()))?;
    print!("{}", format_table_text(&table));
    let Some(out) = a.out else {
        return Ok(());
    };
    ensure_dir(&out)?;
    write_table(out.join("table.txt"), &table)?;
    let rows: Vec<Row> = (0..64)
        .map(|u| Row {
            index: u,
            row: u / 8,
            col: u % 8,
            step: table.step(u),
        })
        .collect();
    super::write_rows(&out, "table.csv", &rows)?;
    let stub = encode_header_stub(&table, 8, 8)?;
    std::fs::write(out.join("header.jpg"), stub).map_err(|e| crate::manifest::io_failure(&out, e))?;

    #[derive(Serialize)]
    struct Snapshot {
        quality: u8,
        digest: String,
    }
    RunManifest::new(
        "gen-table",
        &Snapshot {
            quality: a.quality,
            digest: table.digest(),
        },
    )?
    .write(&out)?;
    Ok(())
}
