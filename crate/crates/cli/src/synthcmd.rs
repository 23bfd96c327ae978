//! The `synth` subcommand: writes a synthetic clip (frames, landmarks,
//! reference, descriptor) ready for `evaluate`.

use anyhow::{Context, Result};
use rppg_core::io::{
    save_frame_dir, save_landmarks, save_reference, synth_generate, write_raw_video, MotionModel,
    SyntheticSpec,
};
use std::path::Path;

#[derive(Debug, Clone)]
pub struct SynthOptions {
    pub duration_s: f64,
    pub fs: f64,
    pub bpm: f64,
    pub amplitude: f64,
    pub noise_sigma: f64,
    pub motion: MotionModel,
    pub count: usize,
    pub raw_container: bool,
}

impl Default for SynthOptions {
    fn default() -> Self {
        Self {
            duration_s: 60.0,
            fs: 30.0,
            bpm: 72.0,
            amplitude: 0.01,
            noise_sigma: 2.0,
            motion: MotionModel::Static,
            count: 1,
            raw_container: false,
        }
    }
}

/// Parses `--motion` values: "static", "translation:vx,vy", "jitter:sigma",
/// or "translation-jitter:vx,vy,sigma".
pub fn parse_motion(s: &str) -> Result<MotionModel> {
    if s == "static" {
        return Ok(MotionModel::Static);
    }
    if let Some(rest) = s.strip_prefix("translation:") {
        let parts: Vec<&str> = rest.split(',').collect();
        anyhow::ensure!(parts.len() == 2, "translation needs vx,vy");
        return Ok(MotionModel::Translation { vx: parts[0].parse()?, vy: parts[1].parse()? });
    }
    if let Some(rest) = s.strip_prefix("jitter:") {
        return Ok(MotionModel::LandmarkJitter { sigma: rest.parse()? });
    }
    if let Some(rest) = s.strip_prefix("translation-jitter:") {
        let parts: Vec<&str> = rest.split(',').collect();
        anyhow::ensure!(parts.len() == 3, "translation-jitter needs vx,vy,sigma");
        return Ok(MotionModel::TranslationJitter {
            vx: parts[0].parse()?,
            vy: parts[1].parse()?,
            sigma: parts[2].parse()?,
        });
    }
    anyhow::bail!("unknown motion model '{s}'")
}

/// Writes `count` synthetic videos under `out_dir` plus a dataset
/// descriptor referencing them.
pub fn run_synth(out_dir: &Path, opts: &SynthOptions, seed: u64) -> Result<()> {
    std::fs::create_dir_all(out_dir)?;
    let mut descriptor = String::new();
    descriptor.push_str("name = \"synthetic\"\nalignment_lag_s = 0.0\n");
    for k in 0..opts.count {
        let id = format!("synth{:02}", k + 1);
        let spec = SyntheticSpec {
            duration_s: opts.duration_s,
            fs: opts.fs,
            hr_trajectory: vec![(0.0, opts.bpm)],
            amplitude: opts.amplitude,
            noise_sigma: opts.noise_sigma,
            motion: opts.motion,
            frame_size: frame_size_for(opts),
            ..Default::default()
        };
        let clip = synth_generate(&spec, seed.wrapping_add(k as u64)).context("generating clip")?;
        let frames_path;
        if opts.raw_container {
            let p = out_dir.join(format!("{id}.raw"));
            write_raw_video(&p, &clip.frames, opts.fs).context("writing raw container")?;
            frames_path = format!("{id}.raw");
        } else {
            let p = out_dir.join(&id);
            save_frame_dir(&p, &clip.frames, opts.fs).context("writing frame directory")?;
            frames_path = id.clone();
        }
        save_landmarks(&out_dir.join(format!("{id}_landmarks.csv")), &clip.landmarks)
            .context("writing landmarks")?;
        save_reference(&out_dir.join(format!("{id}_reference.csv")), &clip.reference)
            .context("writing reference")?;
        descriptor.push_str(&format!(
            "\n[[videos]]\nid = \"{id}\"\nframes = \"{frames_path}\"\nlandmarks = \"{id}_landmarks.csv\"\nreference = \"{id}_reference.csv\"\nreference_kind = \"bvp\"\nreference_fs = 60.0\nscenario = \"synthetic\"\n"
        ));
    }
    std::fs::write(out_dir.join("dataset.toml"), descriptor)?;
    Ok(())
}

fn frame_size_for(opts: &SynthOptions) -> (u32, u32) {
    match opts.motion {
        MotionModel::Translation { vx, vy } | MotionModel::TranslationJitter { vx, vy, .. } => {
            let dx = (vx.abs() * opts.duration_s).ceil() as u32;
            let dy = (vy.abs() * opts.duration_s).ceil() as u32;
            (260 + dx, 260 + dy)
        }
        _ => (260, 260),
    }
}
