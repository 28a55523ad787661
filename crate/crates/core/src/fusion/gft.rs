//! GFT container, little-endian:
//!
//! ```text
//! "GFT1"                          magic
//! u32  C, u64 H, u64 W
//! u8   dtype (1 = f32)
//! u8   has_transform
//! 6 x f64                         only if has_transform: origin_x, pixel_w,
//!                                 shear_x, origin_y, shear_y, pixel_h
//! u32  provenance length, UTF-8 blob (one line per channel)
//! C*H*W dtype values              channel-major, row-major within a channel
//! ```

use super::{AppliedNorm, FusedTensor, Provenance};
use crate::raster::GeoTransform;
use crate::{Error, Result};

pub const GFT_MAGIC: &[u8; 4] = b"GFT1";
const DTYPE_F32: u8 = 1;

pub fn write_gft(tensor: &FusedTensor) -> Result<Vec<u8>> {
    if tensor.n_channels() == 0 || tensor.width() == 0 || tensor.height() == 0 {
        return Err(Error::format("refusing to write an empty tensor"));
    }
    for (c, ch) in tensor.channels().iter().enumerate() {
        if let Some(i) = ch.iter().position(|v| !v.is_finite()) {
            return Err(Error::format(format!("channel {c} value {i} is not finite")));
        }
    }
    let mut blob = String::new();
    for p in tensor.provenance() {
        blob.push_str(&p.encode()?);
        blob.push('\n');
    }
    let n_channels = u32::try_from(tensor.n_channels()).map_err(|_| Error::format("too many channels"))?;
    let blob_len = u32::try_from(blob.len()).map_err(|_| Error::format("provenance blob too large"))?;

    let payload = tensor.n_channels() * tensor.width() * tensor.height() * 4;
    let mut out = Vec::with_capacity(4 + 4 + 16 + 2 + 48 + 4 + blob.len() + payload);
    out.extend_from_slice(GFT_MAGIC);
    out.extend_from_slice(&n_channels.to_le_bytes());
    out.extend_from_slice(&(tensor.height() as u64).to_le_bytes());
    out.extend_from_slice(&(tensor.width() as u64).to_le_bytes());
    out.push(DTYPE_F32);
    match tensor.transform() {
        Some(t) => {
            out.push(1);
            for v in [t.origin_x, t.pixel_w, t.shear_x, t.origin_y, t.shear_y, t.pixel_h] {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        None => out.push(0),
    }
    out.extend_from_slice(&blob_len.to_le_bytes());
    out.extend_from_slice(blob.as_bytes());
    for ch in tensor.channels() {
        for v in ch {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| Error::format(format!("truncated while reading {what}")))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().expect("8 bytes")))
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().expect("8 bytes")))
    }
}

pub fn read_gft(bytes: &[u8]) -> Result<FusedTensor> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(4, "magic")? != GFT_MAGIC {
        return Err(Error::format("bad magic, not a GFT1 file"));
    }
    let c = r.u32("channel count")? as usize;
    let h = usize::try_from(r.u64("height")?).map_err(|_| Error::format("height overflows"))?;
    let w = usize::try_from(r.u64("width")?).map_err(|_| Error::format("width overflows"))?;
    let dtype = r.u8("dtype")?;
    if dtype != DTYPE_F32 {
        return Err(Error::format(format!("unknown dtype code {dtype}")));
    }
    if c == 0 || h == 0 || w == 0 {
        return Err(Error::format(format!("empty tensor {c}x{h}x{w}")));
    }
    let transform = match r.u8("transform flag")? {
        0 => None,
        1 => {
            let mut v = [0.0; 6];
            for x in &mut v {
                *x = r.f64("transform")?;
            }
            let t = GeoTransform {
                origin_x: v[0],
                pixel_w: v[1],
                shear_x: v[2],
                origin_y: v[3],
                shear_y: v[4],
                pixel_h: v[5],
            };
            t.validate().map_err(|e| Error::format(format!("invalid transform: {e}")))?;
            Some(t)
        }
        f => return Err(Error::format(format!("bad transform flag {f}"))),
    };
    let blob_len = r.u32("provenance length")? as usize;
    let blob = std::str::from_utf8(r.take(blob_len, "provenance")?)
        .map_err(|_| Error::format("provenance blob is not UTF-8"))?;
    let provenance = blob
        .lines()
        .map(Provenance::decode)
        .collect::<Result<Vec<_>>>()?;
    if provenance.len() != c {
        return Err(Error::format(format!(
            "{} provenance lines for {c} channels",
            provenance.len()
        )));
    }

    let plane = h
        .checked_mul(w)
        .ok_or_else(|| Error::format("tensor dimensions overflow"))?;
    let payload = plane
        .checked_mul(c)
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| Error::format("tensor dimensions overflow"))?;
    let raw = r.take(payload, "payload")?;
    if r.pos != bytes.len() {
        return Err(Error::format(format!("{} trailing bytes after payload", bytes.len() - r.pos)));
    }
    let channels = raw
        .chunks_exact(plane * 4)
        .map(|ch| {
            ch.chunks_exact(4)
                .map(|b| f32::from_le_bytes(b.try_into().expect("4 bytes")))
                .collect()
        })
        .collect();
    FusedTensor::new(w, h, transform, channels, provenance)
}

/// Stores a `rows x cols` weight matrix as a one-channel GFT (H = rows, W = cols).
pub fn write_matrix_gft(name: &str, rows: usize, cols: usize, data: &[f64]) -> Result<Vec<u8>> {
    if data.len() != rows * cols {
        return Err(Error::shape(format!("{} values for a {rows}x{cols} matrix", data.len())));
    }
    let tensor = FusedTensor::new(
        cols,
        rows,
        None,
        vec![data.iter().map(|&v| v as f32).collect()],
        vec![Provenance::new(name, AppliedNorm::Identity)],
    )?;
    write_gft(&tensor)
}

/// Reads a one-channel GFT back as `(rows, cols, row-major values)`.
pub fn read_matrix_gft(bytes: &[u8]) -> Result<(usize, usize, Vec<f64>)> {
    let t = read_gft(bytes)?;
    if t.n_channels() != 1 {
        return Err(Error::format(format!("matrix blob has {} channels, expected 1", t.n_channels())));
    }
    Ok((t.height(), t.width(), t.channel(0).iter().map(|&v| v as f64).collect()))
}
