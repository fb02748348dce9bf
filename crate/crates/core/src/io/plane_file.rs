//! Raw plane files.
//!
//! Layout, little-endian throughout:
//!
//! ```text
//! 0  "JNPL"
//! 4  version u8 (= 1)
//! 5  dtype u8   (0 = int32, 1 = float64)
//! 6  reserved [u8; 2] (zero)
//! 8  width u32
//! 12 height u32
//! 16 payload, row-major
//! ```

use std::path::Path;

use crate::error::{Error, Result};
use crate::transform::Plane;

pub const MAGIC: &[u8; 4] = b"JNPL";
pub const VERSION: u8 = 1;
const HEADER_LEN: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlaneDtype {
    Int32 = 0,
    Float64 = 1,
}

impl PlaneDtype {
    pub fn size(self) -> usize {
        match self {
            PlaneDtype::Int32 => 4,
            PlaneDtype::Float64 => 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AnyPlane {
    Int(Plane<i32>),
    Real(Plane<f64>),
}

impl AnyPlane {
    pub fn dtype(&self) -> PlaneDtype {
        match self {
            AnyPlane::Int(_) => PlaneDtype::Int32,
            AnyPlane::Real(_) => PlaneDtype::Float64,
        }
    }

    /// Integer planes are widened; real planes come back as is.
    pub fn into_real(self) -> Plane<f64> {
        match self {
            AnyPlane::Int(p) => p.to_real(),
            AnyPlane::Real(p) => p,
        }
    }

    pub fn into_int(self) -> Result<Plane<i32>> {
        match self {
            AnyPlane::Int(p) => Ok(p),
            AnyPlane::Real(_) => Err(Error::parse("plane", "expected int32 payload, found float64")),
        }
    }
}

impl From<Plane<i32>> for AnyPlane {
    fn from(p: Plane<i32>) -> Self {
        AnyPlane::Int(p)
    }
}

impl From<Plane<f64>> for AnyPlane {
    fn from(p: Plane<f64>) -> Self {
        AnyPlane::Real(p)
    }
}

fn header(dtype: PlaneDtype, w: usize, h: usize) -> Result<Vec<u8>> {
    let (w32, h32) = match (u32::try_from(w), u32::try_from(h)) {
        (Ok(a), Ok(b)) if a > 0 && b > 0 => (a, b),
        _ => return Err(Error::Shape(format!("cannot store a {w}x{h} plane"))),
    };
    let mut out = Vec::with_capacity(HEADER_LEN + w * h * dtype.size());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&[VERSION, dtype as u8, 0, 0]);
    out.extend_from_slice(&w32.to_le_bytes());
    out.extend_from_slice(&h32.to_le_bytes());
    Ok(out)
}

pub fn encode_plane(plane: &AnyPlane) -> Result<Vec<u8>> {
    match plane {
        AnyPlane::Int(p) => {
            let mut out = header(PlaneDtype::Int32, p.width(), p.height())?;
            p.as_slice().iter().for_each(|v| out.extend_from_slice(&v.to_le_bytes()));
            Ok(out)
        }
        AnyPlane::Real(p) => {
            let mut out = header(PlaneDtype::Float64, p.width(), p.height())?;
            p.as_slice().iter().for_each(|v| out.extend_from_slice(&v.to_le_bytes()));
            Ok(out)
        }
    }
}

pub fn decode_plane(bytes: &[u8]) -> Result<AnyPlane> {
    let perr = |m: String| Error::parse("plane", m);
    if bytes.len() < HEADER_LEN {
        return Err(perr(format!("{} bytes is shorter than the header", bytes.len())));
    }
    if &bytes[..4] != MAGIC {
        return Err(perr("bad magic".into()));
    }
    if bytes[4] != VERSION {
        return Err(perr(format!("unsupported version {}", bytes[4])));
    }
    let dtype = match bytes[5] {
        0 => PlaneDtype::Int32,
        1 => PlaneDtype::Float64,
        d => return Err(perr(format!("unknown dtype tag {d}"))),
    };
    if bytes[6..8] != [0, 0] {
        return Err(perr("reserved bytes not zero".into()));
    }
    let w = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let h = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
    if w == 0 || h == 0 {
        return Err(perr(format!("zero-size plane {w}x{h}")));
    }
    let payload = &bytes[HEADER_LEN..];
    let expected = w
        .checked_mul(h)
        .and_then(|n| n.checked_mul(dtype.size()));
    if expected != Some(payload.len()) {
        return Err(perr(format!(
            "payload is {} bytes, {w}x{h} {:?} needs {}",
            payload.len(),
            dtype,
            expected.map_or("overflow".to_string(), |n| n.to_string())
        )));
    }
    Ok(match dtype {
        PlaneDtype::Int32 => AnyPlane::Int(Plane::new(
            w,
            h,
            payload
                .chunks_exact(4)
                .map(|c| i32::from_le_bytes(c.try_into().unwrap()))
                .collect(),
        )?),
        PlaneDtype::Float64 => AnyPlane::Real(Plane::new(
            w,
            h,
            payload
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect(),
        )?),
    })
}

pub fn write_plane(path: impl AsRef<Path>, plane: &AnyPlane) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_plane(plane)?).map_err(|e| Error::io(path, e))
}

pub fn read_plane(path: impl AsRef<Path>) -> Result<AnyPlane> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_plane(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn float_round_trip_is_bit_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut vals: Vec<f64> = (0..24 * 16).map(|_| rng.random::<f64>() * 1e3 - 500.0).collect();
        vals[0] = -0.0;
        vals[1] = f64::MIN_POSITIVE / 3.0;
        vals[2] = f64::NAN;
        let p = AnyPlane::Real(Plane::new(24, 16, vals.clone()).unwrap());
        let back = decode_plane(&encode_plane(&p).unwrap()).unwrap().into_real();
        for (a, b) in vals.iter().zip(back.as_slice()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn int_round_trip_and_header() {
        let p = Plane::from_fn(3, 2, |x, y| x as i32 - 7 * y as i32).unwrap();
        let bytes = encode_plane(&p.clone().into()).unwrap();
        assert_eq!(&bytes[..8], b"JNPL\x01\x00\x00\x00");
        assert_eq!(bytes.len(), 16 + 6 * 4);
        assert_eq!(decode_plane(&bytes).unwrap(), AnyPlane::Int(p));
    }

    #[test]
    fn rejects_bad_files() {
        let good = encode_plane(&AnyPlane::Int(Plane::filled(2, 2, 1).unwrap())).unwrap();
        let mut zero = good.clone();
        zero[8..12].copy_from_slice(&0u32.to_le_bytes());
        let mut short = good.clone();
        short.pop();
        let mut long = good.clone();
        long.push(0);
        let mut tag = good.clone();
        tag[5] = 9;
        let mut huge = good.clone();
        huge[8..16].copy_from_slice(&[0xFF; 8]);
        for b in [&zero, &short, &long, &tag, &huge, &good[..10].to_vec()] {
            assert!(matches!(decode_plane(b), Err(Error::Parse { .. })));
        }
    }
}
