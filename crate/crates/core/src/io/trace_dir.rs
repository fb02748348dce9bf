//! Compression traces on disk.
//!
//! ```text
//! trace.toml            cycle count, dimensions, codec options
//! source.plane          int32
//! cycle_<k>/table.txt
//! cycle_<k>/{spectrum,dequantized,decoded}.plane                     float64
//! cycle_<k>/{levels,output}.plane                                    int32
//! cycle_<k>/{quantization,rounding,aux_spatial,aux_dct}_noise.plane  float64
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::plane_file::{read_plane, write_plane, AnyPlane};
use super::table_file::{read_table, write_table};
use crate::codec::{verify_trace, CodecOptions, CycleRecord, NoiseKind, NoiseSet};
use crate::error::{Error, Result};
use crate::Trace;

pub const MANIFEST: &str = "trace.toml";
pub const FORMAT_VERSION: u32 = 1;

/// Tolerance used when re-checking an imported trace.
pub const IMPORT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceManifest {
    pub format_version: u32,
    pub cycles: usize,
    pub width: usize,
    pub height: usize,
    pub table_digests: Vec<String>,
    pub options: CodecOptions,
}

pub fn cycle_dir(root: &Path, k: usize) -> PathBuf {
    root.join(format!("cycle_{k}"))
}

fn noise_file(kind: NoiseKind) -> String {
    format!("{}_noise.plane", kind.name())
}

fn mkdir(p: &Path) -> Result<()> {
    std::fs::create_dir_all(p).map_err(|e| Error::io(p, e))
}

pub fn export_trace(root: impl AsRef<Path>, trace: &Trace) -> Result<TraceManifest> {
    let root = root.as_ref();
    mkdir(root)?;
    let manifest = TraceManifest {
        format_version: FORMAT_VERSION,
        cycles: trace.len(),
        width: trace.source.width(),
        height: trace.source.height(),
        table_digests: trace.cycles.iter().map(|c| c.table.digest()).collect(),
        options: trace.options,
    };
    write_plane(root.join("source.plane"), &trace.source.clone().into())?;
    for (i, (rec, noise)) in trace.cycles.iter().zip(&trace.noises).enumerate() {
        let dir = cycle_dir(root, i + 1);
        mkdir(&dir)?;
        write_table(dir.join("table.txt"), &rec.table)?;
        write_plane(dir.join("spectrum.plane"), &rec.spectrum.clone().into())?;
        write_plane(dir.join("dequantized.plane"), &rec.dequantized.clone().into())?;
        write_plane(dir.join("decoded.plane"), &rec.decoded.clone().into())?;
        write_plane(dir.join("levels.plane"), &rec.levels.clone().into())?;
        write_plane(dir.join("output.plane"), &rec.output.clone().into())?;
        for kind in NoiseKind::ALL {
            write_plane(dir.join(noise_file(kind)), &noise.get(kind).clone().into())?;
        }
    }
    let text = toml::to_string(&manifest).map_err(|e| Error::Config(e.to_string()))?;
    let mpath = root.join(MANIFEST);
    std::fs::write(&mpath, text).map_err(|e| Error::io(&mpath, e))?;
    Ok(manifest)
}

fn real(p: PathBuf) -> Result<crate::ImagePlane> {
    match read_plane(&p)? {
        AnyPlane::Real(x) => Ok(x),
        AnyPlane::Int(_) => Err(Error::parse("plane", format!("{}: expected float64", p.display()))),
    }
}

fn int(p: PathBuf) -> Result<crate::IntPlane> {
    read_plane(&p)?
        .into_int()
        .map_err(|_| Error::parse("plane", format!("{}: expected int32", p.display())))
}

pub fn read_trace_manifest(root: impl AsRef<Path>) -> Result<TraceManifest> {
    let mpath = root.as_ref().join(MANIFEST);
    let text = std::fs::read_to_string(&mpath).map_err(|e| Error::io(&mpath, e))?;
    let m: TraceManifest = toml::from_str(&text).map_err(|e| Error::parse("trace manifest", e.to_string()))?;
    if m.format_version != FORMAT_VERSION {
        return Err(Error::parse("trace manifest", format!("unsupported format_version {}", m.format_version)));
    }
    if m.cycles == 0 || m.table_digests.len() != m.cycles {
        return Err(Error::parse("trace manifest", "cycle count and table list disagree"));
    }
    Ok(m)
}

/// Loads a trace without consistency checks. Planes that were edited on
/// disk come back exactly as stored.
pub fn load_trace_unchecked(root: impl AsRef<Path>) -> Result<Trace> {
    let root = root.as_ref();
    let m = read_trace_manifest(root)?;
    let source = int(root.join("source.plane"))?;
    if (source.width(), source.height()) != (m.width, m.height) {
        return Err(Error::Integrity("source dimensions differ from manifest".into()));
    }
    let mut cycles: Vec<CycleRecord<f64>> = Vec::with_capacity(m.cycles);
    let mut noises = Vec::with_capacity(m.cycles);
    for k in 1..=m.cycles {
        let dir = cycle_dir(root, k);
        let table = read_table(dir.join("table.txt"))?;
        if table.digest() != m.table_digests[k - 1] {
            return Err(Error::Integrity(format!("cycle {k}: table digest differs from manifest")));
        }
        let input = cycles.last().map_or_else(|| source.clone(), |c| c.output.clone());
        cycles.push(CycleRecord {
            input,
            spectrum: real(dir.join("spectrum.plane"))?,
            dequantized: real(dir.join("dequantized.plane"))?,
            levels: int(dir.join("levels.plane"))?,
            decoded: real(dir.join("decoded.plane"))?,
            output: int(dir.join("output.plane"))?,
            table,
        });
        let n = |kind| real(dir.join(noise_file(kind)));
        noises.push(NoiseSet {
            quantization: n(NoiseKind::Quantization)?,
            rounding: n(NoiseKind::Rounding)?,
            aux_spatial: n(NoiseKind::AuxSpatial)?,
            aux_dct: n(NoiseKind::AuxDct)?,
        });
    }
    Ok(Trace {
        source,
        cycles,
        noises,
        options: m.options,
    })
}

/// Loads a trace and re-derives every stored quantity from the source,
/// rejecting the directory on any mismatch.
pub fn import_trace(root: impl AsRef<Path>) -> Result<Trace> {
    let trace = load_trace_unchecked(root)?;
    verify_trace(&trace, IMPORT_TOLERANCE)?;
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::{run_cycles, QuantTable};
    use crate::transform::Plane;

    fn trace() -> Trace {
        let src = Plane::from_fn(16, 16, |x, y| ((x * 11 + y * 5) % 97 + 60) as i32).unwrap();
        let tables = [QuantTable::constant(5).unwrap(), QuantTable::ijg_luminance(90).unwrap()];
        run_cycles(&src, &tables, &CodecOptions::default()).unwrap()
    }

    #[test]
    fn round_trip() {
        let t = trace();
        let dir = tempfile::tempdir().unwrap();
        export_trace(dir.path(), &t).unwrap();
        assert!(dir.path().join("cycle_2/aux_dct_noise.plane").exists());
        assert_eq!(import_trace(dir.path()).unwrap(), t);
    }

    #[test]
    fn tampered_dequantized_is_rejected() {
        let t = trace();
        let dir = tempfile::tempdir().unwrap();
        export_trace(dir.path(), &t).unwrap();
        let p = dir.path().join("cycle_1/dequantized.plane");
        let mut deq = read_plane(&p).unwrap().into_real();
        deq.as_mut_slice()[3] += 1.0;
        write_plane(&p, &deq.into()).unwrap();
        assert!(load_trace_unchecked(dir.path()).is_ok());
        assert!(matches!(import_trace(dir.path()), Err(Error::Integrity(_))));
    }
}
