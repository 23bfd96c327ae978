//! Remote photoplethysmography (rPPG) core: extraction of blood-volume-pulse
//! signals and heart-rate series from facial video given per-frame landmarks.
//!
//! The crate is organised around the stages of an unsupervised rPPG pipeline:
//!
//! - [`dsp`] — filtering, detrending, windowing, Welch spectral estimation.
//! - [`facegeom`] — landmark extension, the fixed canonical triangle mesh,
//!   and piecewise-affine warping of each frame onto canonical coordinates.
//! - [`regions`] — grid partitioning of the normalized face, per-region RGB
//!   traces, statistical/fractal quality screening, and dynamic multi-region
//!   selection.
//! - [`rppg`] — the RGB-to-pulse transformation methods (GREEN, ICA, PCA,
//!   CHROM, PBV, 2SR, LAB, POS, LGI, OMIT).
//! - [`spectral`] — per-window heart-rate estimation and heart-rate series
//!   assembly, applied identically to extracted and reference signals.
//! - [`eval`] — series alignment, MAE/RMSE/PCC metrics, and dataset-level
//!   aggregation.
//! - [`io`] — frame sources, landmark and reference readers, dataset
//!   descriptors, and a deterministic synthetic-video generator.

pub mod dsp;
pub mod raster;
pub mod error;
pub mod eval;
pub mod facegeom;
pub mod io;
pub mod regions;
pub mod rppg;
pub mod spectral;

pub use error::{Error, Result};
