//! Raw planar RGB container: magic "F2PRAW1", little-endian header
//! (width u32, height u32, frame count u32, fs f64), then per frame the
//! R, G and B planes as 8-bit rows.

use crate::error::{Error, Result};
use crate::raster::RgbRaster;
use std::io::{Read, Write};
use std::path::Path;

const MAGIC: &[u8; 7] = b"F2PRAW1";

pub fn write_raw_video(path: &Path, frames: &[RgbRaster], fs: f64) -> Result<()> {
    if frames.is_empty() {
        return Err(Error::InvalidInput("no frames to write".into()));
    }
    let (w, h) = (frames[0].width, frames[0].height);
    for f in frames {
        if f.width != w || f.height != h {
            return Err(Error::InvalidInput("frames differ in size".into()));
        }
    }
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    out.write_all(MAGIC)?;
    out.write_all(&w.to_le_bytes())?;
    out.write_all(&h.to_le_bytes())?;
    out.write_all(&(frames.len() as u32).to_le_bytes())?;
    out.write_all(&fs.to_le_bytes())?;
    let plane = (w * h) as usize;
    let mut buf = vec![0u8; plane];
    for f in frames {
        for c in 0..3 {
            for (i, px) in f.data.chunks_exact(3).enumerate() {
                buf[i] = px[c];
            }
            out.write_all(&buf)?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn read_raw_video(path: &Path) -> Result<(Vec<RgbRaster>, f64)> {
    let mut file = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut magic = [0u8; 7];
    file.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("not a raw video container (bad magic)".into()));
    }
    let mut u32buf = [0u8; 4];
    file.read_exact(&mut u32buf)?;
    let w = u32::from_le_bytes(u32buf);
    file.read_exact(&mut u32buf)?;
    let h = u32::from_le_bytes(u32buf);
    file.read_exact(&mut u32buf)?;
    let count = u32::from_le_bytes(u32buf);
    let mut f64buf = [0u8; 8];
    file.read_exact(&mut f64buf)?;
    let fs = f64::from_le_bytes(f64buf);
    if w == 0 || h == 0 || count == 0 || !(fs > 0.0) {
        return Err(Error::Format(format!("bad raw header: {w}x{h}, {count} frames, fs {fs}")));
    }
    let plane = (w * h) as usize;
    let mut frames = Vec::with_capacity(count as usize);
    let mut planes = vec![0u8; plane * 3];
    for k in 0..count {
        file.read_exact(&mut planes)
            .map_err(|e| Error::Format(format!("truncated raw container at frame {k}: {e}")))?;
        let mut data = vec![0u8; plane * 3];
        for i in 0..plane {
            data[i * 3] = planes[i];
            data[i * 3 + 1] = planes[plane + i];
            data[i * 3 + 2] = planes[2 * plane + i];
        }
        frames.push(RgbRaster { width: w, height: h, data });
    }
    Ok((frames, fs))
}
