//! Frame-directory source: zero-padded 6-digit PNG files plus a `meta`
//! file carrying the sampling rate and dimensions.

use crate::error::{Error, Result};
use crate::raster::RgbRaster;
use std::path::Path;

/// Frame-rate and geometry sidecar.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameMeta {
    pub fs: f64,
    pub width: u32,
    pub height: u32,
}

fn parse_meta(text: &str) -> Result<FrameMeta> {
    let mut fs = None;
    let mut width = None;
    let mut height = None;
    for line in text.lines() {
        let line = line.trim();
        if let Some(v) = line.strip_prefix("fs=") {
            fs = Some(v.parse::<f64>().map_err(|_| Error::Format(format!("bad fs value: {v}")))?);
        } else if let Some(v) = line.strip_prefix("width=") {
            width = Some(v.parse::<u32>().map_err(|_| Error::Format(format!("bad width value: {v}")))?);
        } else if let Some(v) = line.strip_prefix("height=") {
            height = Some(v.parse::<u32>().map_err(|_| Error::Format(format!("bad height value: {v}")))?);
        }
    }
    Ok(FrameMeta {
        fs: fs.ok_or_else(|| Error::Format("meta file missing fs=".into()))?,
        width: width.ok_or_else(|| Error::Format("meta file missing width=".into()))?,
        height: height.ok_or_else(|| Error::Format("meta file missing height=".into()))?,
    })
}

/// Loads `000001.png`.. from a directory in index order. A missing or
/// corrupt frame is a hard error naming the index.
pub fn load_frame_dir(dir: &Path) -> Result<(Vec<RgbRaster>, f64)> {
    let meta_path = dir.join("meta");
    let meta_text = std::fs::read_to_string(&meta_path)
        .map_err(|e| Error::Format(format!("cannot read {}: {e}", meta_path.display())))?;
    let meta = parse_meta(&meta_text)?;

    let mut indices: Vec<u32> = Vec::new();
    for entry in std::fs::read_dir(dir)? {
        let entry = entry?;
        let name = entry.file_name();
        let name = name.to_string_lossy();
        if let Some(stem) = name.strip_suffix(".png") {
            if stem.len() == 6 && stem.chars().all(|c| c.is_ascii_digit()) {
                indices.push(stem.parse().unwrap());
            }
        }
    }
    if indices.is_empty() {
        return Err(Error::Format(format!("no frame files in {}", dir.display())));
    }
    indices.sort_unstable();
    let count = *indices.last().unwrap();
    for expect in 1..=count {
        if !indices.contains(&expect) {
            return Err(Error::Format(format!("missing frame {expect:06}")));
        }
    }

    let mut frames = Vec::with_capacity(count as usize);
    for idx in 1..=count {
        let path = dir.join(format!("{idx:06}.png"));
        let img = image::open(&path)
            .map_err(|e| Error::Format(format!("corrupt frame {idx:06}: {e}")))?
            .into_rgb8();
        if img.width() != meta.width || img.height() != meta.height {
            return Err(Error::Format(format!(
                "frame {idx:06} is {}x{}, meta says {}x{}",
                img.width(),
                img.height(),
                meta.width,
                meta.height
            )));
        }
        frames.push(RgbRaster { width: img.width(), height: img.height(), data: img.into_raw() });
    }
    Ok((frames, meta.fs))
}

/// Writes frames as `000001.png`.. with the `meta` sidecar.
pub fn save_frame_dir(dir: &Path, frames: &[RgbRaster], fs: f64) -> Result<()> {
    if frames.is_empty() {
        return Err(Error::InvalidInput("no frames to save".into()));
    }
    std::fs::create_dir_all(dir)?;
    let (w, h) = (frames[0].width, frames[0].height);
    std::fs::write(dir.join("meta"), format!("fs={fs}\nwidth={w}\nheight={h}\n"))?;
    for (i, f) in frames.iter().enumerate() {
        let img = image::RgbImage::from_raw(f.width, f.height, f.data.clone())
            .ok_or_else(|| Error::InvalidInput("raster buffer size mismatch".into()))?;
        img.save(dir.join(format!("{:06}.png", i + 1)))
            .map_err(|e| Error::Format(format!("cannot save frame {}: {e}", i + 1)))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frames(n: usize) -> Vec<RgbRaster> {
        (0..n)
            .map(|i| {
                let mut f = RgbRaster::new(8, 6);
                f.set_pixel(i as u32 % 8, 0, [255, 0, 0]);
                f
            })
            .collect()
    }

    #[test]
    fn round_trip_preserves_frames_and_rate() {
        let dir = tempfile::tempdir().unwrap();
        let fr = frames(5);
        save_frame_dir(dir.path(), &fr, 30.0).unwrap();
        let (loaded, fs) = load_frame_dir(dir.path()).unwrap();
        assert_eq!(fs, 30.0);
        assert_eq!(loaded.len(), 5);
        for (a, b) in loaded.iter().zip(fr.iter()) {
            assert_eq!(a.data, b.data);
        }
    }

    #[test]
    fn gap_is_reported_by_index() {
        let dir = tempfile::tempdir().unwrap();
        save_frame_dir(dir.path(), &frames(5), 30.0).unwrap();
        std::fs::remove_file(dir.path().join("000003.png")).unwrap();
        match load_frame_dir(dir.path()) {
            Err(Error::Format(msg)) => assert!(msg.contains("000003"), "message: {msg}"),
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn missing_meta_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        save_frame_dir(dir.path(), &frames(2), 30.0).unwrap();
        std::fs::remove_file(dir.path().join("meta")).unwrap();
        assert!(load_frame_dir(dir.path()).is_err());
    }
}
