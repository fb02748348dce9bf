//! CSV reports. Floats are written in shortest round-trip form, so a reader
//! recovers the exact f64 that was written.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qstep::VarCurve;

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w)
}

/// Serializes rows with a header taken from the row type's field names.
pub fn csv_bytes<S: Serialize>(rows: &[S]) -> Result<Vec<u8>> {
    let mut w = writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner()
        .map_err(|e| Error::Domain(format!("csv buffer: {e}")))
}

pub fn write_csv_report<S: Serialize>(path: impl AsRef<Path>, rows: &[S]) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, csv_bytes(rows)?).map_err(|e| Error::io(path, e))
}

pub fn read_csv_rows<D: for<'de> Deserialize<'de>>(path: impl AsRef<Path>) -> Result<Vec<D>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = csv::Reader::from_reader(file);
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub q: u16,
    pub s_var: f64,
    pub is_local_min: bool,
}

pub fn curve_rows(curve: &VarCurve) -> Vec<CurveRow> {
    curve
        .q_values
        .iter()
        .zip(&curve.s_var)
        .map(|(&q, &s)| CurveRow {
            q,
            s_var: s,
            is_local_min: curve.minima.contains(&q),
        })
        .collect()
}

pub fn write_curve_csv(path: impl AsRef<Path>, curve: &VarCurve) -> Result<()> {
    write_csv_report(path, &curve_rows(curve))
}

pub fn read_curve_csv(path: impl AsRef<Path>) -> Result<Vec<CurveRow>> {
    read_csv_rows(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn curve_round_trip_exact() {
        let s = vec![0.1, 1.0 / 3.0, 0.25f64.sqrt() * std::f64::consts::PI, 2.0e-300, 0.3];
        let curve = VarCurve::from_values(s.clone(), 100, 12).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.csv");
        write_curve_csv(&p, &curve).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("q,s_var,is_local_min\n"));
        assert!(!text.contains('\r'));
        let rows = read_curve_csv(&p).unwrap();
        for (r, v) in rows.iter().zip(&s) {
            assert_eq!(r.s_var.to_bits(), v.to_bits());
            assert_eq!(format!("{:.16e}", r.s_var), format!("{:.16e}", v));
        }
        assert_eq!(rows[3].q, 4);
        assert!(rows[3].is_local_min);
    }

    #[test]
    fn missing_dir_reports_path() {
        let err = write_csv_report("/nonexistent-dir/x.csv", &[CurveRow { q: 1, s_var: 0.0, is_local_min: false }])
            .unwrap_err();
        assert!(err.to_string().contains("/nonexistent-dir/x.csv"));
    }
}
