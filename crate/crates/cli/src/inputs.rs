use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use jpeg_noise::codec::QuantTable;
use jpeg_noise::io::{decode_plane, parse_jpeg_markers, parse_pgm, parse_table_text, AnyPlane};
use jpeg_noise::qstep::EstimateMode;
use jpeg_noise::synth::{derive_seed, synth_batch, SynthConfig};
use jpeg_noise::IntPlane;

use crate::failure::{CliResult, Failure};
use crate::manifest::io_failure;

/// Flat key-value settings shared by all subcommands. Flags win over values
/// read from the file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub q_max: Option<u16>,
    pub t_c: Option<f64>,
    pub t_xi: Option<f64>,
    pub exclude_zeros: Option<bool>,
    pub level_shift: Option<bool>,
    pub mode: Option<EstimateMode>,
    pub threshold: Option<f64>,
    pub classes: Option<BTreeMap<String, f64>>,
    pub alpha: Option<f64>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::config(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| Failure::config(format!("{}: {e}", path.display())))
    }
}

pub fn read_bytes(path: &Path) -> CliResult<Vec<u8>> {
    std::fs::read(path).map_err(|e| io_failure(path, e))
}

/// Integer image from a PGM or an int32 plane file.
pub fn load_image(path: &Path) -> CliResult<IntPlane> {
    let bytes = read_bytes(path)?;
    if bytes.starts_with(b"JNPL") {
        return decode_plane(&bytes)?
            .into_int()
            .map_err(|e| Failure::from(e).with_context(path));
    }
    let img = parse_pgm(&bytes).map_err(|e| Failure::from(e).with_context(path))?;
    for w in &img.warnings {
        eprintln!("warning: {}: {w}", path.display());
    }
    Ok(img.plane)
}

pub fn load_plane(path: &Path) -> CliResult<AnyPlane> {
    decode_plane(&read_bytes(path)?).map_err(|e| Failure::from(e).with_context(path))
}

/// `qf:<1..100>` (IJG luminance), `const:<q>`, a JPEG file (its luminance
/// table) or a table text file. Any failure is a configuration error.
pub fn load_table(source: &str) -> CliResult<QuantTable> {
    let bad = |m: String| Failure::config(format!("table '{source}': {m}"));
    if let Some(v) = source.strip_prefix("qf:") {
        let qf: u8 = v.parse().map_err(|_| bad("quality must be an integer".into()))?;
        return QuantTable::ijg_luminance(qf).map_err(|e| bad(e.to_string()));
    }
    if let Some(v) = source.strip_prefix("const:") {
        let q: u16 = v.parse().map_err(|_| bad("step must be an integer".into()))?;
        return QuantTable::constant(q).map_err(|e| bad(e.to_string()));
    }
    let bytes = std::fs::read(source).map_err(|e| bad(e.to_string()))?;
    if bytes.starts_with(&[0xFF, 0xD8]) {
        let info = parse_jpeg_markers(&bytes).map_err(|e| bad(e.to_string()))?;
        return info
            .luma_table()
            .copied()
            .ok_or_else(|| bad("no luminance quantization table".into()));
    }
    let text = String::from_utf8(bytes).map_err(|_| bad("not UTF-8 text".into()))?;
    parse_table_text(&text).map_err(|e| bad(e.to_string()))
}

/// Table specs that name files, for manifest digests.
pub fn table_files(specs: &[String]) -> Vec<PathBuf> {
    specs
        .iter()
        .filter(|s| !s.starts_with("qf:") && !s.starts_with("const:"))
        .map(PathBuf::from)
        .collect()
}

/// All `.pgm` files of a directory, in name order.
pub fn corpus_files(dir: &Path) -> CliResult<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| io_failure(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("pgm")))
        .collect();
    files.sort();
    Ok(files)
}

pub fn load_corpus(dir: &Path) -> CliResult<Vec<IntPlane>> {
    corpus_files(dir)?.iter().map(|p| load_image(p)).collect()
}

/// Synthetic images for one purpose; `stream` separates e.g. training from
/// test sets drawn from the same seed.
pub fn synthetic(count: usize, side: usize, seed: u64, stream: u64) -> CliResult<Vec<IntPlane>> {
    Ok(synth_batch(count, side, side, derive_seed(seed, stream), &SynthConfig::default())?)
}

pub fn write_text(path: &Path, text: &str) -> CliResult {
    std::fs::write(path, text).map_err(|e| io_failure(path, e))
}

pub fn ensure_dir(path: &Path) -> CliResult {
    std::fs::create_dir_all(path).map_err(|e| io_failure(path, e))
}
