//! File formats: PGM images, JPEG header tables, raw planes, table text,
//! CSV reports and trace directories.

pub mod csv_report;
pub mod jpeg;
pub mod pgm;
pub mod plane_file;
pub mod table_file;
pub mod trace_dir;

pub use csv_report::{
    csv_bytes, curve_rows, read_csv_rows, read_curve_csv, write_csv_report, write_curve_csv, CurveRow,
};
pub use jpeg::{
    encode_dqt, encode_header_stub, parse_jpeg_markers, read_jpeg_header, DqtEntry, FrameComponent,
    FrameInfo, JpegHeaderInfo,
};
pub use pgm::{encode_pgm, parse_pgm, read_pgm, write_pgm, PgmImage};
pub use plane_file::{decode_plane, encode_plane, read_plane, write_plane, AnyPlane, PlaneDtype};
pub use table_file::{format_table_text, parse_table_text, read_table, write_table};
pub use trace_dir::{export_trace, import_trace, load_trace_unchecked, read_trace_manifest, TraceManifest};
