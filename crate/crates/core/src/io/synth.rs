//! Deterministic synthetic face video with a known injected pulse; the
//! ground-truth oracle for the end-to-end tests.

use crate::dsp::Signal1D;
use crate::error::{Error, Result};
use crate::facegeom::{canonical_85, CanonicalMesh, LandmarkFrame, CANONICAL_68, CANONICAL_SIZE};
use crate::raster::RgbRaster;
use crate::regions::grid_partition;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// How the face moves across the clip.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MotionModel {
    Static,
    /// Pixels per second.
    Translation { vx: f64, vy: f64 },
    /// Gaussian per-point landmark jitter (pixels); the painted face stays
    /// put, modelling landmark-detector noise.
    LandmarkJitter { sigma: f64 },
    /// Translation plus landmark jitter.
    TranslationJitter { vx: f64, vy: f64, sigma: f64 },
}

/// Synthetic clip description. Everything is deterministic in (spec, seed).
#[derive(Debug, Clone)]
pub struct SyntheticSpec {
    pub duration_s: f64,
    /// Video frame rate.
    pub fs: f64,
    /// Piecewise-constant (start_s, bpm) segments, first entry at 0.
    pub hr_trajectory: Vec<(f64, f64)>,
    /// Pulse amplitude as a fraction of the base color.
    pub amplitude: f64,
    /// Per-channel pulse weights.
    pub pulsatility: [f64; 3],
    /// Canonical 9x9-grid region ids that carry the pulse.
    pub injected_regions: Vec<usize>,
    /// Per-pixel Gaussian noise, 8-bit levels.
    pub noise_sigma: f64,
    /// Fractional amplitude of the global illumination modulation (slow
    /// drift plus frame-rate flicker). Ambient light always varies; a
    /// generator without it makes the pulse the dominant color-variance
    /// direction, which no projection-based method would survive.
    pub illumination_amp: f64,
    pub motion: MotionModel,
    /// Round to 8 bits deterministically; false uses seeded stochastic
    /// rounding (dithers sub-level signals).
    pub quantize: bool,
    pub frame_size: (u32, u32),
    /// Grid the injected region ids refer to.
    pub grid_n: usize,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            duration_s: 60.0,
            fs: 30.0,
            hr_trajectory: vec![(0.0, 72.0)],
            amplitude: 0.01,
            pulsatility: [0.5, 1.0, 0.7],
            injected_regions: (0..81).collect(),
            noise_sigma: 2.0,
            illumination_amp: 0.02,
            motion: MotionModel::Static,
            quantize: true,
            frame_size: (260, 260),
            grid_n: 9,
        }
    }
}

impl SyntheticSpec {
    fn validate(&self) -> Result<()> {
        if !(self.duration_s > 0.0 && self.fs > 0.0) {
            return Err(Error::InvalidInput("duration and fs must be positive".into()));
        }
        if self.hr_trajectory.is_empty() {
            return Err(Error::InvalidInput("hr trajectory must have at least one segment".into()));
        }
        for (_, bpm) in &self.hr_trajectory {
            if !(45.0..=240.0).contains(bpm) {
                return Err(Error::InvalidInput(format!("hr {bpm} bpm outside 45-240")));
            }
        }
        if !(self.amplitude > 0.0) {
            return Err(Error::InvalidInput("amplitude must be positive".into()));
        }
        Ok(())
    }

    /// Accumulated phase at time t (piecewise-constant frequency).
    fn phase_at(&self, t: f64) -> f64 {
        let mut phase = 0.0;
        for (k, (start, bpm)) in self.hr_trajectory.iter().enumerate() {
            let seg_end = self
                .hr_trajectory
                .get(k + 1)
                .map(|(s, _)| *s)
                .unwrap_or(f64::INFINITY)
                .min(t);
            if seg_end > *start {
                phase += 2.0 * std::f64::consts::PI * (bpm / 60.0) * (seg_end - start);
            }
            if t <= seg_end {
                break;
            }
        }
        phase
    }

    /// The pulse waveform: fundamental plus a 0.4-amplitude first harmonic.
    pub fn pulse_at(&self, t: f64) -> f64 {
        let phi = self.phase_at(t);
        phi.sin() + 0.4 * (2.0 * phi).sin()
    }
}

/// Generated clip: frames, per-frame landmarks, and the reference pulse at
/// 60 Hz, sample-aligned with the video at t = 0.
pub struct SyntheticClip {
    pub frames: Vec<RgbRaster>,
    pub landmarks: Vec<Option<LandmarkFrame>>,
    pub reference: Signal1D,
    /// The injected pulse sampled at the video rate (extraction oracle).
    pub video_rate_pulse: Signal1D,
}

const BACKGROUND: [f64; 3] = [40.0, 40.0, 46.0];
const SKIN_BASE: [f64; 3] = [212.0, 158.0, 122.0];
const FEATURE: [f64; 3] = [70.0, 48.0, 40.0];

/// Canonical-coordinate template: base color per pixel plus the per-pixel
/// pulse gain (amplitude * base * pulsatility inside injected regions).
struct Template {
    base: Vec<[f64; 3]>,
    gain: Vec<[f64; 3]>,
    face: Vec<bool>,
    size: u32,
}

fn build_template(spec: &SyntheticSpec, mesh: &CanonicalMesh) -> Result<Template> {
    let side = CANONICAL_SIZE;
    let boxes = grid_partition(side, side, spec.grid_n)?;
    let mut injected_mask = vec![false; (side * side) as usize];
    for id in &spec.injected_regions {
        let b = boxes
            .get(*id)
            .ok_or_else(|| Error::InvalidInput(format!("injected region {id} outside the {0}x{0} grid", spec.grid_n)))?;
        for y in b.y0..b.y1 {
            for x in b.x0..b.x1 {
                injected_mask[(y * side + x) as usize] = true;
            }
        }
    }

    // Face hull occupancy: mesh pixels are skin; hull pixels not covered by
    // the mesh (eye and mouth holes) get the feature color.
    let verts = canonical_85();
    let hull = convex_hull(&verts);
    let mut base = vec![BACKGROUND; (side * side) as usize];
    let mut gain = vec![[0.0; 3]; (side * side) as usize];
    let mut face = vec![false; (side * side) as usize];
    for y in 0..side {
        for x in 0..side {
            let i = (y * side + x) as usize;
            let in_mesh = mesh.triangle_at(x, y).is_some();
            let in_hull = point_in_polygon(&hull, (x as f64, y as f64));
            if in_mesh {
                // Deterministic shading plus a chromatic gradient: real skin
                // has an anisotropic color distribution, which the
                // subspace-rotation method depends on.
                let shade = 1.0 - 0.08 * ((y as f64 / side as f64) - 0.5).abs()
                    + 0.03 * (x as f64 * 0.11).sin();
                let chroma = 6.0 * (x as f64 * 0.07).sin() * (y as f64 * 0.05).cos();
                let chroma_w = [1.0, -0.35, -0.25];
                let mut b = [0.0; 3];
                for c in 0..3 {
                    b[c] = (SKIN_BASE[c] * shade + chroma_w[c] * chroma).clamp(0.0, 255.0);
                }
                base[i] = b;
                face[i] = true;
                if injected_mask[i] {
                    for c in 0..3 {
                        gain[i][c] = spec.amplitude * b[c] * spec.pulsatility[c];
                    }
                }
            } else if in_hull {
                base[i] = FEATURE;
                face[i] = true;
            }
        }
    }
    Ok(Template { base, gain, face, size: side })
}

/// Renders the clip. All randomness (pixel noise, landmark jitter,
/// stochastic rounding) comes from one seeded generator in a fixed order.
pub fn synth_generate(spec: &SyntheticSpec, seed: u64) -> Result<SyntheticClip> {
    spec.validate()?;
    let mesh = CanonicalMesh::builtin();
    let template = build_template(spec, &mesh)?;
    let n_frames = (spec.duration_s * spec.fs).round() as usize;
    let (fw, fh) = spec.frame_size;
    let side = template.size;

    // Base placement: face centred horizontally, with translation starting
    // from the left margin so the face stays in frame.
    let (vx, vy, jitter) = match spec.motion {
        MotionModel::Static => (0.0, 0.0, 0.0),
        MotionModel::Translation { vx, vy } => (vx, vy, 0.0),
        MotionModel::LandmarkJitter { sigma } => (0.0, 0.0, sigma),
        MotionModel::TranslationJitter { vx, vy, sigma } => (vx, vy, sigma),
    };
    let travel_x = vx * spec.duration_s;
    let travel_y = vy * spec.duration_s;
    let ox0 = ((fw as f64 - side as f64 - travel_x.abs()) / 2.0).max(0.0)
        + if travel_x < 0.0 { travel_x.abs() } else { 0.0 };
    let oy0 = ((fh as f64 - side as f64 - travel_y.abs()) / 2.0).max(0.0)
        + if travel_y < 0.0 { travel_y.abs() } else { 0.0 };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = StandardNormal;

    let mut frames = Vec::with_capacity(n_frames);
    let mut landmarks = Vec::with_capacity(n_frames);
    let mut video_pulse = Vec::with_capacity(n_frames);

    for k in 0..n_frames {
        let t = k as f64 / spec.fs;
        let s = spec.pulse_at(t);
        video_pulse.push(s);
        // Global light level: slow drift plus per-frame flicker.
        let light = if spec.illumination_amp > 0.0 {
            let flicker: f64 = normal.sample(&mut rng);
            let drift = 0.4 * (2.0 * std::f64::consts::PI * 0.33 * t).sin()
                + 0.3 * (2.0 * std::f64::consts::PI * 0.11 * t + 1.0).sin();
            1.0 + spec.illumination_amp * (flicker + drift)
        } else {
            1.0
        };
        let ox = ox0 + vx * t;
        let oy = oy0 + vy * t;

        let mut frame = RgbRaster::new(fw, fh);
        // Background fill.
        for px in frame.data.chunks_exact_mut(3) {
            px[0] = BACKGROUND[0] as u8;
            px[1] = BACKGROUND[1] as u8;
            px[2] = BACKGROUND[2] as u8;
        }
        // Paint the face bounding box; integer canonical offset keeps the
        // injected regions aligned with grid cells, fractional part moves
        // the whole face smoothly via the landmark coordinates instead.
        let oxi = ox.round() as i64;
        let oyi = oy.round() as i64;
        for cy in 0..side as i64 {
            let fy = cy + oyi;
            if fy < 0 || fy >= fh as i64 {
                continue;
            }
            for cx in 0..side as i64 {
                let fx = cx + oxi;
                if fx < 0 || fx >= fw as i64 {
                    continue;
                }
                let ci = (cy as u32 * side + cx as u32) as usize;
                if !template.face[ci] {
                    continue;
                }
                let base = template.base[ci];
                let gain = template.gain[ci];
                let mut rgb = [0u8; 3];
                for c in 0..3 {
                    let mut v = (base[c] + gain[c] * s) * light;
                    if spec.noise_sigma > 0.0 {
                        let z: f64 = normal.sample(&mut rng);
                        v += spec.noise_sigma * z;
                    }
                    let q = if spec.quantize {
                        v.round()
                    } else {
                        // Stochastic rounding: dither sub-level structure.
                        let floor = v.floor();
                        let frac = v - floor;
                        if rng.gen::<f64>() < frac {
                            floor + 1.0
                        } else {
                            floor
                        }
                    };
                    rgb[c] = q.clamp(0.0, 255.0) as u8;
                }
                frame.set_pixel(fx as u32, fy as u32, rgb);
            }
        }
        frames.push(frame);

        let mut pts: Vec<(f64, f64)> = CANONICAL_68
            .iter()
            .map(|(x, y)| (x + oxi as f64, y + oyi as f64))
            .collect();
        if jitter > 0.0 {
            for p in &mut pts {
                let dx: f64 = normal.sample(&mut rng);
                let dy: f64 = normal.sample(&mut rng);
                p.0 += jitter * dx;
                p.1 += jitter * dy;
            }
        }
        landmarks.push(Some(LandmarkFrame::new(pts, k)?));
    }

    // Reference at 60 Hz, aligned at t = 0 by construction.
    let ref_fs = 60.0;
    let n_ref = (spec.duration_s * ref_fs).round() as usize;
    let reference =
        Signal1D::new((0..n_ref).map(|k| spec.pulse_at(k as f64 / ref_fs)).collect(), ref_fs)?;

    Ok(SyntheticClip {
        frames,
        landmarks,
        reference,
        video_rate_pulse: Signal1D::new(video_pulse, spec.fs)?,
    })
}

fn point_in_polygon(poly: &[(f64, f64)], q: (f64, f64)) -> bool {
    let mut inside = false;
    let n = poly.len();
    for i in 0..n {
        let (x1, y1) = poly[i];
        let (x2, y2) = poly[(i + 1) % n];
        if (y1 > q.1) != (y2 > q.1) {
            let xin = (x2 - x1) * (q.1 - y1) / (y2 - y1) + x1;
            if q.0 < xin {
                inside = !inside;
            }
        }
    }
    inside
}

fn convex_hull(pts: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut p: Vec<(f64, f64)> = pts.to_vec();
    p.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let cross =
        |o: (f64, f64), a: (f64, f64), b: (f64, f64)| (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0);
    let mut lower: Vec<(f64, f64)> = Vec::new();
    for &pt in &p {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], pt) <= 0.0 {
            lower.pop();
        }
        lower.push(pt);
    }
    let mut upper: Vec<(f64, f64)> = Vec::new();
    for &pt in p.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], pt) <= 0.0 {
            upper.pop();
        }
        upper.push(pt);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::{welch_psd, WelchConfig};

    fn quick_spec() -> SyntheticSpec {
        // Noise and illumination off: these tests isolate the pulse path.
        SyntheticSpec { duration_s: 12.0, noise_sigma: 0.0, illumination_amp: 0.0, ..Default::default() }
    }

    #[test]
    fn reference_peaks_at_the_configured_rate() {
        let clip = synth_generate(&quick_spec(), 1).unwrap();
        let spec = welch_psd(&clip.reference, &WelchConfig::default_for_len(clip.reference.len())).unwrap();
        let k = spec.argmax_in_band(0.5, 5.0).unwrap();
        assert!((spec.freqs[k] - 1.2).abs() < 0.05, "peak at {}", spec.freqs[k]);
    }

    #[test]
    fn injected_region_trace_follows_the_reference() {
        let mut sp = quick_spec();
        sp.amplitude = 0.02;
        let clip = synth_generate(&sp, 2).unwrap();
        // Mean green over an injected region's canonical box (static face).
        let boxes = grid_partition(CANONICAL_SIZE, CANONICAL_SIZE, sp.grid_n).unwrap();
        let b = boxes[40]; // centre region, fully on skin
        let ox = ((sp.frame_size.0 - CANONICAL_SIZE) / 2) as u32;
        let oy = ((sp.frame_size.1 - CANONICAL_SIZE) / 2) as u32;
        let trace: Vec<f64> = clip
            .frames
            .iter()
            .map(|f| {
                let mut sum = 0.0;
                let mut n = 0.0;
                for y in b.y0..b.y1 {
                    for x in b.x0..b.x1 {
                        sum += f.pixel(x + ox, y + oy)[1] as f64;
                        n += 1.0;
                    }
                }
                sum / n
            })
            .collect();
        let pulse = &clip.video_rate_pulse.samples;
        let corr = correlation(&trace, pulse);
        assert!(corr >= 0.99, "trace-pulse correlation {corr}");
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let mut sp = quick_spec();
        sp.noise_sigma = 2.0;
        sp.motion = MotionModel::LandmarkJitter { sigma: 1.0 };
        let a = synth_generate(&sp, 42).unwrap();
        let b = synth_generate(&sp, 42).unwrap();
        for (fa, fb) in a.frames.iter().zip(b.frames.iter()) {
            assert_eq!(fa.data, fb.data);
        }
        for (la, lb) in a.landmarks.iter().zip(b.landmarks.iter()) {
            assert_eq!(la.as_ref().unwrap().points, lb.as_ref().unwrap().points);
        }
        assert_eq!(a.reference.samples, b.reference.samples);
    }

    #[test]
    fn different_seeds_differ() {
        let mut sp = quick_spec();
        sp.noise_sigma = 2.0;
        let a = synth_generate(&sp, 1).unwrap();
        let b = synth_generate(&sp, 2).unwrap();
        assert_ne!(a.frames[0].data, b.frames[0].data);
    }

    #[test]
    fn out_of_range_hr_is_rejected() {
        let mut sp = quick_spec();
        sp.hr_trajectory = vec![(0.0, 30.0)];
        assert!(synth_generate(&sp, 1).is_err());
    }

    fn correlation(a: &[f64], b: &[f64]) -> f64 {
        let n = a.len().min(b.len()) as f64;
        let ma = a.iter().sum::<f64>() / n;
        let mb = b.iter().sum::<f64>() / n;
        let mut sab = 0.0;
        let mut saa = 0.0;
        let mut sbb = 0.0;
        for (x, y) in a.iter().zip(b.iter()) {
            sab += (x - ma) * (y - mb);
            saa += (x - ma) * (x - ma);
            sbb += (y - mb) * (y - mb);
        }
        sab / (saa * sbb).sqrt()
    }
}
