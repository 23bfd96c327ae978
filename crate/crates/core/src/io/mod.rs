//! Frame sources, landmark providers, reference-signal readers, dataset
//! descriptors, and the synthetic-video oracle.

mod dataset;
mod frames;
mod landmarks;
mod rawvid;
mod reference;
mod synth;

pub use dataset::{DatasetDescriptor, FrameSource, VideoEntry};
pub use frames::{load_frame_dir, save_frame_dir, FrameMeta};
pub use landmarks::{load_landmarks, parse_landmarks, save_landmarks};
pub use rawvid::{read_raw_video, write_raw_video};
pub use reference::{load_reference, parse_reference, save_reference};
pub use synth::{synth_generate, MotionModel, SyntheticClip, SyntheticSpec};
