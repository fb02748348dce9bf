//! Minimal JPEG marker walker: enough to pull quantization tables and frame
//! geometry out of a file header. Entropy-coded data is never touched.

use std::path::Path;

use crate::codec::QuantTable;
use crate::error::{Error, Result};
use crate::transform::BLOCK_LEN;

pub const SOI: u8 = 0xD8;
pub const EOI: u8 = 0xD9;
pub const SOS: u8 = 0xDA;
pub const DQT: u8 = 0xDB;
pub const SOF0: u8 = 0xC0;
pub const SOF1: u8 = 0xC1;
pub const SOF2: u8 = 0xC2;

#[derive(Debug, Clone, PartialEq)]
pub struct DqtEntry {
    pub id: u8,
    /// True for 16-bit table entries (Pq = 1).
    pub precision16: bool,
    pub table: QuantTable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameComponent {
    pub id: u8,
    pub h: u8,
    pub v: u8,
    pub table_id: u8,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameInfo {
    pub marker: u8,
    pub precision: u8,
    pub width: u16,
    pub height: u16,
    pub components: Vec<FrameComponent>,
}

impl FrameInfo {
    pub fn progressive(&self) -> bool {
        self.marker == SOF2
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct JpegHeaderInfo {
    /// One entry per table slot, latest definition wins.
    pub quant_tables: Vec<DqtEntry>,
    pub frame: Option<FrameInfo>,
    /// Whether the walk ended at a start-of-scan marker.
    pub reached_sos: bool,
}

impl JpegHeaderInfo {
    pub fn table(&self, id: u8) -> Option<&DqtEntry> {
        self.quant_tables.iter().find(|e| e.id == id)
    }

    /// Table used by the given frame component (0 is luminance in baseline files).
    pub fn table_for_component(&self, index: usize) -> Option<&DqtEntry> {
        let c = self.frame.as_ref()?.components.get(index)?;
        self.table(c.table_id)
    }

    /// Luminance table: via the frame when present, else slot 0.
    pub fn luma_table(&self) -> Option<&QuantTable> {
        self.table_for_component(0)
            .or_else(|| self.table(0))
            .map(|e| &e.table)
    }
}

fn perr(msg: impl Into<String>) -> Error {
    Error::parse("jpeg", msg)
}

fn be16(b: &[u8], at: usize) -> Result<u16> {
    b.get(at..at + 2)
        .map(|s| u16::from_be_bytes([s[0], s[1]]))
        .ok_or_else(|| perr("truncated stream"))
}

fn parse_dqt(seg: &[u8], out: &mut Vec<DqtEntry>) -> Result<()> {
    let mut i = 0;
    while i < seg.len() {
        let pq = seg[i] >> 4;
        let id = seg[i] & 0x0F;
        i += 1;
        if pq > 1 {
            return Err(perr(format!("DQT precision {pq} not 0 or 1")));
        }
        if id > 3 {
            return Err(perr(format!("DQT table id {id} > 3")));
        }
        let width = if pq == 1 { 2 } else { 1 };
        let body = seg
            .get(i..i + BLOCK_LEN * width)
            .ok_or_else(|| perr("DQT length inconsistent with table precision"))?;
        i += BLOCK_LEN * width;
        let mut zz = [0u16; BLOCK_LEN];
        for (k, z) in zz.iter_mut().enumerate() {
            *z = if pq == 1 {
                u16::from_be_bytes([body[2 * k], body[2 * k + 1]])
            } else {
                body[k] as u16
            };
        }
        let table = QuantTable::from_zigzag(&zz)
            .map_err(|e| perr(format!("DQT table {id}: {e}")))?;
        let entry = DqtEntry {
            id,
            precision16: pq == 1,
            table,
        };
        match out.iter_mut().find(|e| e.id == id) {
            Some(slot) => *slot = entry,
            None => out.push(entry),
        }
    }
    Ok(())
}

fn parse_sof(marker: u8, seg: &[u8]) -> Result<FrameInfo> {
    if seg.len() < 6 {
        return Err(perr("SOF segment too short"));
    }
    let n = seg[5] as usize;
    if seg.len() != 6 + 3 * n {
        return Err(perr(format!("SOF length {} inconsistent with {n} components", seg.len())));
    }
    let components = seg[6..]
        .chunks_exact(3)
        .map(|c| FrameComponent {
            id: c[0],
            h: c[1] >> 4,
            v: c[1] & 0x0F,
            table_id: c[2],
        })
        .collect();
    Ok(FrameInfo {
        marker,
        precision: seg[0],
        height: u16::from_be_bytes([seg[1], seg[2]]),
        width: u16::from_be_bytes([seg[3], seg[4]]),
        components,
    })
}

/// Walks marker segments from SOI up to the first SOS (or EOI).
pub fn parse_jpeg_markers(bytes: &[u8]) -> Result<JpegHeaderInfo> {
    if bytes.get(..2) != Some(&[0xFF, SOI][..]) {
        return Err(perr("missing SOI marker"));
    }
    let mut info = JpegHeaderInfo::default();
    let mut pos = 2;
    loop {
        match bytes.get(pos) {
            None => return Err(perr("truncated stream: no SOS or EOI")),
            Some(0xFF) => {}
            Some(b) => return Err(perr(format!("expected marker at byte {pos}, found {b:#04x}"))),
        }
        // Any number of 0xFF fill bytes may precede the marker code.
        while bytes.get(pos) == Some(&0xFF) {
            pos += 1;
        }
        let marker = *bytes.get(pos).ok_or_else(|| perr("truncated stream"))?;
        pos += 1;
        match marker {
            EOI => return Ok(info),
            0x00 | SOI => return Err(perr(format!("unexpected marker {marker:#04x}"))),
            0x01 | 0xD0..=0xD7 => continue,
            _ => {}
        }
        let len = be16(bytes, pos)? as usize;
        if len < 2 {
            return Err(perr(format!("bad segment length {len}")));
        }
        let seg = bytes
            .get(pos + 2..pos + len)
            .ok_or_else(|| perr(format!("truncated segment {marker:#04x}")))?;
        pos += len;
        match marker {
            DQT => parse_dqt(seg, &mut info.quant_tables)?,
            SOF0 | SOF1 | SOF2 => info.frame = Some(parse_sof(marker, seg)?),
            SOS => {
                info.reached_sos = true;
                return Ok(info);
            }
            _ => {}
        }
    }
}

pub fn read_jpeg_header(path: impl AsRef<Path>) -> Result<JpegHeaderInfo> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_jpeg_markers(&bytes)
}

/// One DQT segment (marker included) holding a single table.
pub fn encode_dqt(id: u8, table: &QuantTable, precision16: bool) -> Result<Vec<u8>> {
    if id > 3 {
        return Err(Error::Domain(format!("table id {id} > 3")));
    }
    if !precision16 && table.max_step() > 255 {
        return Err(Error::Domain("8-bit DQT cannot hold steps above 255".into()));
    }
    let body = if precision16 { 128 } else { 64 };
    let mut out = vec![0xFF, DQT];
    out.extend_from_slice(&((3 + body) as u16).to_be_bytes());
    out.push(((precision16 as u8) << 4) | id);
    for z in table.to_zigzag() {
        if precision16 {
            out.extend_from_slice(&z.to_be_bytes());
        } else {
            out.push(z as u8);
        }
    }
    Ok(out)
}

/// Header-only grayscale baseline stream: SOI, DQT, SOF0, SOS, EOI.
/// Useful for exercising table extraction; it carries no scan data.
pub fn encode_header_stub(table: &QuantTable, width: u16, height: u16) -> Result<Vec<u8>> {
    let mut out = vec![0xFF, SOI];
    out.extend(encode_dqt(0, table, table.max_step() > 255)?);
    out.extend_from_slice(&[0xFF, SOF0, 0, 11, 8]);
    out.extend_from_slice(&height.to_be_bytes());
    out.extend_from_slice(&width.to_be_bytes());
    out.extend_from_slice(&[1, 1, 0x11, 0]);
    out.extend_from_slice(&[0xFF, SOS, 0, 8, 1, 1, 0, 0, 63, 0]);
    out.extend_from_slice(&[0xFF, EOI]);
    Ok(out)
}
