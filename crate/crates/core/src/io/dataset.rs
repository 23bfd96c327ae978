//! Dataset descriptor types: one entry per video with its frame source,
//! landmark file, reference signal, and scenario tag.

use crate::error::{Error, Result};
use crate::spectral::ReferenceKind;
use std::path::{Path, PathBuf};

/// Frame source location.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FrameSource {
    /// Directory of numbered PNG frames with a `meta` sidecar.
    Directory(PathBuf),
    /// Raw planar RGB container.
    RawVideo(PathBuf),
}

impl FrameSource {
    pub fn path(&self) -> &Path {
        match self {
            FrameSource::Directory(p) | FrameSource::RawVideo(p) => p,
        }
    }

    /// Infers the source kind from the path: containers end in `.raw`.
    pub fn from_path(p: PathBuf) -> Self {
        if p.extension().is_some_and(|e| e == "raw") {
            FrameSource::RawVideo(p)
        } else {
            FrameSource::Directory(p)
        }
    }

    pub fn load(&self) -> Result<(Vec<crate::raster::RgbRaster>, f64)> {
        match self {
            FrameSource::Directory(p) => super::frames::load_frame_dir(p),
            FrameSource::RawVideo(p) => super::rawvid::read_raw_video(p),
        }
    }
}

/// One video of a dataset.
#[derive(Debug, Clone)]
pub struct VideoEntry {
    pub id: String,
    pub frames: FrameSource,
    pub landmarks: PathBuf,
    pub reference: PathBuf,
    pub reference_kind: ReferenceKind,
    pub reference_fs: f64,
    pub scenario: String,
    /// ECG channel index for multi-channel recordings.
    pub ecg_channel: Option<usize>,
}

/// A dataset: videos plus an optional dataset-level alignment override.
#[derive(Debug, Clone)]
pub struct DatasetDescriptor {
    pub name: String,
    pub videos: Vec<VideoEntry>,
    /// Fixed lag in seconds applied instead of per-video estimation.
    pub alignment_lag_s: Option<f64>,
}

impl DatasetDescriptor {
    /// Checks that every referenced file exists and rates are positive.
    pub fn validate(&self) -> Result<()> {
        if self.videos.is_empty() {
            return Err(Error::InvalidInput(format!("dataset {} has no videos", self.name)));
        }
        for v in &self.videos {
            if !v.frames.path().exists() {
                return Err(Error::Format(format!("video {}: frames missing at {}", v.id, v.frames.path().display())));
            }
            if !v.landmarks.exists() {
                return Err(Error::Format(format!("video {}: landmark file missing at {}", v.id, v.landmarks.display())));
            }
            if !v.reference.exists() {
                return Err(Error::Format(format!("video {}: reference missing at {}", v.id, v.reference.display())));
            }
            if !(v.reference_fs > 0.0) {
                return Err(Error::InvalidInput(format!("video {}: reference fs must be positive", v.id)));
            }
        }
        Ok(())
    }
}
