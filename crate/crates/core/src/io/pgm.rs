//! Portable graymap (P2 ascii, P5 binary) reading and writing.

use std::path::Path;

use crate::error::{Error, Result};
use crate::transform::{Plane, BLOCK};

#[derive(Debug, Clone, PartialEq)]
pub struct PgmImage {
    pub plane: Plane<i32>,
    pub maxval: u16,
    /// Dimensions as stored in the file, before any crop.
    pub original: (usize, usize),
    pub warnings: Vec<String>,
}

fn perr(msg: impl Into<String>) -> Error {
    Error::parse("pgm", msg)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    /// Skips whitespace and `#` comments.
    fn skip_space(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' || c == b'\r' {
                        break;
                    }
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<u32> {
        self.skip_space();
        let start = self.pos;
        let mut v: u32 = 0;
        while let Some(&b) = self.bytes.get(self.pos) {
            if !b.is_ascii_digit() {
                break;
            }
            v = v
                .checked_mul(10)
                .and_then(|v| v.checked_add((b - b'0') as u32))
                .ok_or_else(|| perr(format!("{what} too large")))?;
            self.pos += 1;
        }
        if self.pos == start {
            return Err(perr(format!("expected {what} at byte {start}")));
        }
        Ok(v)
    }
}

/// Parses a P2 or P5 file. Images whose sides are not multiples of 8 are
/// centre-cropped to the largest aligned region, with a warning.
pub fn parse_pgm(bytes: &[u8]) -> Result<PgmImage> {
    let binary = match bytes.get(..2) {
        Some(b"P5") => true,
        Some(b"P2") => false,
        _ => return Err(perr("missing P2/P5 magic")),
    };
    let mut c = Cursor { bytes, pos: 2 };
    let width = c.number("width")? as usize;
    let height = c.number("height")? as usize;
    let maxval = c.number("maxval")?;
    if width == 0 || height == 0 {
        return Err(perr(format!("zero dimension {width}x{height}")));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(perr(format!("maxval {maxval} outside 1..=65535")));
    }
    let count = width
        .checked_mul(height)
        .ok_or_else(|| perr("dimensions overflow"))?;
    let mut data = Vec::new();
    if binary {
        match bytes.get(c.pos) {
            Some(b) if b.is_ascii_whitespace() => c.pos += 1,
            _ => return Err(perr("missing whitespace after maxval")),
        }
        let bps = if maxval < 256 { 1 } else { 2 };
        let need = count
            .checked_mul(bps)
            .ok_or_else(|| perr("dimensions overflow"))?;
        let payload = bytes
            .get(c.pos..)
            .filter(|p| p.len() >= need)
            .ok_or_else(|| perr(format!("truncated payload: need {need} bytes")))?;
        data.reserve(count);
        for i in 0..count {
            let v = if bps == 1 {
                payload[i] as u32
            } else {
                u16::from_be_bytes([payload[2 * i], payload[2 * i + 1]]) as u32
            };
            if v > maxval {
                return Err(perr(format!("sample {v} exceeds maxval {maxval}")));
            }
            data.push(v as i32);
        }
    } else {
        // Every ascii sample takes at least two bytes; reject early rather
        // than allocate for a header that lies about its size.
        if count > bytes.len() {
            return Err(perr("truncated payload"));
        }
        data.reserve(count);
        for i in 0..count {
            let v = c
                .number("sample")
                .map_err(|_| perr(format!("truncated payload at sample {i}")))?;
            if v > maxval {
                return Err(perr(format!("sample {v} exceeds maxval {maxval}")));
            }
            data.push(v as i32);
        }
    }
    let full = Plane::new(width, height, data)?;
    let (w8, h8) = (width / BLOCK * BLOCK, height / BLOCK * BLOCK);
    if w8 == 0 || h8 == 0 {
        return Err(perr(format!("{width}x{height} image is smaller than one 8x8 block")));
    }
    let mut warnings = Vec::new();
    let plane = if (w8, h8) != (width, height) {
        warnings.push(format!(
            "cropped {width}x{height} to centred {w8}x{h8} (block alignment)"
        ));
        full.crop((width - w8) / 2, (height - h8) / 2, w8, h8)?
    } else {
        full
    };
    Ok(PgmImage {
        plane,
        maxval: maxval as u16,
        original: (width, height),
        warnings,
    })
}

pub fn read_pgm(path: impl AsRef<Path>) -> Result<PgmImage> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_pgm(&bytes)
}

/// Serializes a plane. Samples must lie in `0..=maxval`.
pub fn encode_pgm(plane: &Plane<i32>, maxval: u16, binary: bool) -> Result<Vec<u8>> {
    if maxval == 0 {
        return Err(Error::Domain("maxval must be positive".into()));
    }
    if let Some(v) = plane.as_slice().iter().find(|&&v| v < 0 || v > maxval as i32) {
        return Err(Error::Domain(format!("sample {v} outside 0..={maxval}")));
    }
    let mut out = format!(
        "{}\n{} {}\n{}\n",
        if binary { "P5" } else { "P2" },
        plane.width(),
        plane.height(),
        maxval
    )
    .into_bytes();
    if binary {
        for &v in plane.as_slice() {
            if maxval < 256 {
                out.push(v as u8);
            } else {
                out.extend_from_slice(&(v as u16).to_be_bytes());
            }
        }
    } else {
        for row in plane.as_slice().chunks(plane.width()) {
            let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            out.extend_from_slice(line.join(" ").as_bytes());
            out.push(b'\n');
        }
    }
    Ok(out)
}

pub fn write_pgm(path: impl AsRef<Path>, plane: &Plane<i32>, maxval: u16, binary: bool) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_pgm(plane, maxval, binary)?).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_p5() {
        let mut b = b"P5\n8 8\n255\n".to_vec();
        b.extend(std::iter::repeat_n(128u8, 64));
        let img = parse_pgm(&b).unwrap();
        assert!(img.plane.as_slice().iter().all(|&v| v == 128));
        assert!(img.warnings.is_empty());
    }

    #[test]
    fn p2_and_p5_agree() {
        let p = Plane::from_fn(16, 8, |x, y| ((x * 13 + y * 7) % 256) as i32).unwrap();
        let a = parse_pgm(&encode_pgm(&p, 255, true).unwrap()).unwrap();
        let b = parse_pgm(&encode_pgm(&p, 255, false).unwrap()).unwrap();
        assert_eq!(a.plane, p);
        assert_eq!(b.plane, p);
    }

    #[test]
    fn sixteen_bit_and_comments() {
        let p = Plane::from_fn(8, 8, |x, y| (x * 1000 + y) as i32).unwrap();
        let bytes = encode_pgm(&p, 65535, true).unwrap();
        assert_eq!(parse_pgm(&bytes).unwrap().plane, p);
        let txt = b"P2 # comment\n# another\n8 8 # dims\n9\n".to_vec();
        let mut t = txt.clone();
        t.extend(std::iter::repeat_n(b"3 ".as_slice(), 64).flatten());
        assert!(parse_pgm(&t).unwrap().plane.as_slice().iter().all(|&v| v == 3));
    }

    #[test]
    fn crops_to_block_grid() {
        let p = Plane::from_fn(100, 100, |x, y| ((x + y) % 200) as i32).unwrap();
        let img = parse_pgm(&encode_pgm(&p, 255, true).unwrap()).unwrap();
        assert_eq!((img.plane.width(), img.plane.height()), (96, 96));
        assert_eq!(img.plane.get(0, 0), p.get(2, 2));
        assert_eq!(img.warnings.len(), 1);
        assert_eq!(img.original, (100, 100));
    }

    #[test]
    fn malformed_inputs() {
        for bad in [
            &b""[..],
            b"P6\n8 8\n255\n",
            b"P5\n8 8\n255\n\x00\x01",
            b"P5\n0 8\n255\n",
            b"P5\n8 8\n0\n",
            b"P5\n8 8\n70000\n",
            b"P2\n8 8\n10\n1 2 3",
            b"P2\n4 4\n10\n1 2 3 4 5 6 7 8 9 10 1 2 3 4 5 6",
            b"P5\n99999999999 8\n255\n",
            b"P5\n4294967295 4294967295\n255\n",
        ] {
            assert!(matches!(parse_pgm(bad), Err(Error::Parse { .. }) | Err(Error::Shape(_))), "{bad:?}");
        }
        let mut over = b"P2\n8 8\n10\n".to_vec();
        over.extend(std::iter::repeat_n(b"11 ".as_slice(), 64).flatten());
        assert!(parse_pgm(&over).is_err());
    }
}
