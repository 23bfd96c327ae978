//! End-to-end extraction: landmarks -> mesh normalization -> region traces
//! -> filtering -> RGB-to-pulse conversion -> dynamic selection ->
//! aggregation -> per-window heart rate.

use crate::config::{FilterStage, PipelineConfig, PipelineKind, RegionMode};
use anyhow::{anyhow, bail, Context, Result};
use rayon::prelude::*;
use rppg_core::dsp::{bandpass_fir, detrend, BandpassSpec, Signal1D};
use rppg_core::facegeom::{normalize_sequence, CanonicalMesh, LandmarkFrame, NormalizedFaceStack, CANONICAL_SIZE};
use rppg_core::raster::RgbRaster;
use rppg_core::regions::{
    aggregate_regions, compute_region_stats, extract_traces, fixed_patches, grid_partition, select_regions,
    ChannelMix, PatchMode, RegionBox, RegionStats, RgbTrace,
};
use rppg_core::rppg::{apply_method, ssr_2sr, MethodId, PulseWindow, TraceMatrix};
use rppg_core::spectral::{assemble_series, estimate_hr, HrSeries};

/// In-memory video: frames plus per-frame landmarks.
pub struct VideoData {
    pub frames: Vec<RgbRaster>,
    pub fs: f64,
    pub landmarks: Vec<Option<LandmarkFrame>>,
}

/// Full-length extracted pulse signal.
#[derive(Debug, Clone)]
pub struct BvpSignal {
    pub signal: Signal1D,
    pub method: MethodId,
}

/// One diagnostics row per (window, region).
#[derive(Debug, Clone)]
pub struct WindowDiagnostics {
    pub window_start_s: f64,
    pub region_id: usize,
    pub variance: f64,
    pub kfd: Option<f64>,
    pub dfa_alpha: f64,
    pub snr_db: f64,
    pub psd_energy: f64,
    pub selected: bool,
}

pub struct ExtractOutput {
    pub bvp: BvpSignal,
    pub hr: HrSeries,
    pub diagnostics: Vec<WindowDiagnostics>,
}

/// Normalized stack and per-region traces shared between method runs.
pub struct PreparedVideo {
    fs: f64,
    stack: Option<NormalizedFaceStack>,
    raw_traces: Vec<RgbTrace>,
    filt_traces: Vec<RgbTrace>,
    /// Per-region pixel masks for the 2SR path.
    region_masks: Option<Vec<Vec<bool>>>,
    pipeline: PipelineKind,
}

fn bandpass_spec(cfg: &PipelineConfig, fs: f64) -> BandpassSpec {
    let taps = cfg.bandpass_taps.unwrap_or_else(|| {
        let mut t = (4.2 * fs).round() as usize;
        if t % 2 == 0 {
            t += 1;
        }
        t.max(3)
    });
    BandpassSpec { low_hz: cfg.bandpass_low_hz, high_hz: cfg.bandpass_high_hz, beta: cfg.bandpass_beta, num_taps: taps }
}

/// Detrend + band-pass one channel, keeping its original mean so the
/// conversion methods still see a physically meaningful color level.
fn filter_channel(x: &[f64], fs: f64, cfg: &PipelineConfig) -> Result<Vec<f64>> {
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    let sig = Signal1D::new(x.to_vec(), fs).map_err(|e| anyhow!("{e}"))?;
    let sig = detrend(&sig, cfg.detrend).map_err(|e| anyhow!("{e}"))?;
    let spec = bandpass_spec(cfg, fs);
    let sig = if sig.len() >= spec.num_taps {
        bandpass_fir(&sig, &spec).map_err(|e| anyhow!("{e}"))?
    } else {
        sig
    };
    Ok(sig.samples.iter().map(|v| v + mean).collect())
}

fn filter_trace(trace: &RgbTrace, cfg: &PipelineConfig) -> Result<RgbTrace> {
    Ok(RgbTrace {
        r: filter_channel(&trace.r, trace.fs, cfg)?,
        g: filter_channel(&trace.g, trace.fs, cfg)?,
        b: filter_channel(&trace.b, trace.fs, cfg)?,
        fs: trace.fs,
        region_id: trace.region_id,
    })
}

/// Mean RGB over an arbitrary pixel mask, one trace for the whole face.
fn mask_trace(stack: &NormalizedFaceStack, mask: &[bool], id: usize) -> RgbTrace {
    let mut r = Vec::with_capacity(stack.len());
    let mut g = Vec::with_capacity(stack.len());
    let mut b = Vec::with_capacity(stack.len());
    let count = mask.iter().filter(|m| **m).count().max(1) as f64;
    for frame in &stack.frames {
        let mut sum = [0u64; 3];
        for (pi, keep) in mask.iter().enumerate() {
            if *keep {
                let base = pi * 3;
                sum[0] += frame.data[base] as u64;
                sum[1] += frame.data[base + 1] as u64;
                sum[2] += frame.data[base + 2] as u64;
            }
        }
        r.push(sum[0] as f64 / count);
        g.push(sum[1] as f64 / count);
        b.push(sum[2] as f64 / count);
    }
    RgbTrace { r, g, b, fs: stack.fs, region_id: id }
}

/// Landmark bounding box of the first valid frame, grown 10% per side.
fn fixed_crop_box(data: &VideoData) -> Result<RegionBox> {
    let lm = data
        .landmarks
        .iter()
        .flatten()
        .next()
        .ok_or_else(|| anyhow!("no landmarks available for the fixed crop"))?;
    let (w, h) = (data.frames[0].width as f64, data.frames[0].height as f64);
    let min_x = lm.points.iter().map(|p| p.0).fold(f64::MAX, f64::min);
    let max_x = lm.points.iter().map(|p| p.0).fold(f64::MIN, f64::max);
    let min_y = lm.points.iter().map(|p| p.1).fold(f64::MAX, f64::min);
    let max_y = lm.points.iter().map(|p| p.1).fold(f64::MIN, f64::max);
    let grow_x = 0.1 * (max_x - min_x);
    let grow_y = 0.1 * (max_y - min_y);
    let x0 = (min_x - grow_x).floor().clamp(0.0, w - 2.0) as u32;
    let y0 = (min_y - grow_y).floor().clamp(0.0, h - 2.0) as u32;
    let x1 = (max_x + grow_x).ceil().clamp(1.0, w) as u32;
    let y1 = (max_y + grow_y).ceil().clamp(1.0, h) as u32;
    Ok(RegionBox { id: 0, x0, y0, x1, y1 })
}

/// Normalizes, partitions and traces a video once; method runs share it.
pub fn prepare(data: &VideoData, cfg: &PipelineConfig) -> Result<PreparedVideo> {
    cfg.validate()?;
    if data.frames.is_empty() {
        bail!("video has no frames");
    }
    match cfg.pipeline {
        PipelineKind::Improved => {
            let crop = fixed_crop_box(data)?;
            let pseudo_stack = NormalizedFaceStack {
                frames: data.frames.clone(),
                fs: data.fs,
                validity: vec![true; data.frames.len()],
            };
            let raw = extract_traces(&pseudo_stack, &[crop]).map_err(|e| anyhow!("{e}"))?;
            let filt = raw.iter().map(|t| filter_trace(t, cfg)).collect::<Result<Vec<_>>>()?;
            Ok(PreparedVideo {
                fs: data.fs,
                stack: None,
                raw_traces: raw,
                filt_traces: filt,
                region_masks: None,
                pipeline: cfg.pipeline,
            })
        }
        PipelineKind::NormalizedSingle | PipelineKind::MultiRegion => {
            let mesh = CanonicalMesh::builtin();
            let stack = normalize_sequence(&data.frames, &data.landmarks, &mesh, data.fs)
                .map_err(|e| anyhow!("normalization: {e}"))?;

            // Disabling DMRS in grid mode collapses the multi-region
            // pipeline to the whole-face single region.
            let whole_face = cfg.pipeline == PipelineKind::NormalizedSingle
                || (!cfg.dmrs && cfg.region_mode == RegionMode::Grid);
            let boxes: Vec<RegionBox> = if whole_face {
                vec![RegionBox { id: 0, x0: 0, y0: 0, x1: CANONICAL_SIZE, y1: CANONICAL_SIZE }]
            } else {
                match cfg.region_mode {
                    RegionMode::Grid => {
                        grid_partition(CANONICAL_SIZE, CANONICAL_SIZE, cfg.selection.grid_n)
                            .map_err(|e| anyhow!("{e}"))?
                    }
                    RegionMode::Forehead | RegionMode::Cheeks | RegionMode::Combined => {
                        let lm = LandmarkFrame::new(rppg_core::facegeom::canonical_85(), 0)
                            .map_err(|e| anyhow!("{e}"))?;
                        let mode = match cfg.region_mode {
                            RegionMode::Forehead => PatchMode::Forehead,
                            RegionMode::Cheeks => PatchMode::Cheeks,
                            _ => PatchMode::Combined,
                        };
                        fixed_patches(&lm, mode, (CANONICAL_SIZE, CANONICAL_SIZE)).map_err(|e| anyhow!("{e}"))?
                    }
                }
            };

            // Whole-face trace uses the mesh mask; grid/patch traces use
            // their boxes.
            let mesh_mask = rppg_core::rppg::mesh_skin_mask(&mesh);
            let raw: Vec<RgbTrace> = if whole_face {
                vec![mask_trace(&stack, &mesh_mask, 0)]
            } else {
                extract_traces(&stack, &boxes).map_err(|e| anyhow!("{e}"))?
            };
            let filt = raw.iter().map(|t| filter_trace(t, cfg)).collect::<Result<Vec<_>>>()?;

            let region_masks = if cfg.method.needs_pixels() {
                Some(if whole_face {
                    vec![mesh_mask]
                } else {
                    boxes
                        .iter()
                        .map(|b| {
                            let mut m = vec![false; (CANONICAL_SIZE * CANONICAL_SIZE) as usize];
                            for y in b.y0..b.y1 {
                                for x in b.x0..b.x1 {
                                    let i = (y * CANONICAL_SIZE + x) as usize;
                                    m[i] = mesh_mask[i];
                                }
                            }
                            m
                        })
                        .collect()
                })
            } else {
                None
            };

            Ok(PreparedVideo {
                fs: data.fs,
                stack: Some(stack),
                raw_traces: raw,
                filt_traces: filt,
                region_masks,
                pipeline: cfg.pipeline,
            })
        }
    }
}

fn trace_window(trace: &RgbTrace, start: usize, len: usize) -> TraceMatrix {
    TraceMatrix::new(
        trace.r[start..start + len].to_vec(),
        trace.g[start..start + len].to_vec(),
        trace.b[start..start + len].to_vec(),
        trace.fs,
    )
    .expect("window length validated upstream")
}

/// Runs the configured method over one window of one region.
fn region_pulse(
    prep: &PreparedVideo,
    cfg: &PipelineConfig,
    region_idx: usize,
    start: usize,
    len: usize,
) -> Result<PulseWindow> {
    if cfg.method.needs_pixels() {
        let stack = prep.stack.as_ref().ok_or_else(|| anyhow!("2sr needs the normalized stack"))?;
        let masks = prep.region_masks.as_ref().unwrap();
        let (w, _) = ssr_2sr(stack, &masks[region_idx], start..start + len).map_err(|e| anyhow!("{e}"))?;
        return Ok(w);
    }
    // lab needs real colors: its input is never pre-filtered.
    let use_filtered = matches!(cfg.pre_post_filter, FilterStage::Pre | FilterStage::Both)
        && cfg.method != MethodId::Lab;
    let trace = if use_filtered { &prep.filt_traces[region_idx] } else { &prep.raw_traces[region_idx] };
    let c = trace_window(trace, start, len);
    apply_method(cfg.method, &c, &cfg.method_options).map_err(|e| anyhow!("{e}"))
}

/// Whether the aggregate gets band-passed after conversion.
fn post_filter_applies(cfg: &PipelineConfig) -> bool {
    matches!(cfg.pre_post_filter, FilterStage::Post | FilterStage::Both)
        || cfg.method == MethodId::Lab
        || cfg.method.needs_pixels()
}

/// Extraction over a prepared video.
pub fn run_on_prepared(prep: &PreparedVideo, cfg: &PipelineConfig) -> Result<ExtractOutput> {
    let fs = prep.fs;
    let n = prep.raw_traces[0].len();
    let win_len = (cfg.spectral.win_s * fs).round() as usize;
    if win_len < 2 || n < win_len {
        bail!("video shorter than one analysis window");
    }
    let n_regions = prep.raw_traces.len();
    let dmrs_on = prep.pipeline == PipelineKind::MultiRegion && cfg.dmrs && n_regions > 1;

    // Window grid shared with the spectral module.
    let mut starts = Vec::new();
    let mut k = 0usize;
    loop {
        let t0 = k as f64 * cfg.spectral.step_s;
        let start = (t0 * fs).round() as usize;
        if start + win_len > n {
            break;
        }
        starts.push((t0, start));
        k += 1;
    }

    struct WindowResult {
        t0: f64,
        bpm: Option<f64>,
        pulse: Option<Vec<f64>>,
        start: usize,
        diags: Vec<WindowDiagnostics>,
    }

    let post_spec = bandpass_spec(cfg, fs);
    let results: Vec<WindowResult> = starts
        .par_iter()
        .map(|&(t0, start)| -> Result<WindowResult> {
            // Quality battery on the filtered green channel.
            let stats: Vec<RegionStats> = (0..n_regions)
                .map(|r| {
                    let filt_w = RgbTrace {
                        r: prep.filt_traces[r].r[start..start + win_len].to_vec(),
                        g: prep.filt_traces[r].g[start..start + win_len].to_vec(),
                        b: prep.filt_traces[r].b[start..start + win_len].to_vec(),
                        fs,
                        region_id: prep.filt_traces[r].region_id,
                    };
                    // Variance screen uses the unfiltered trace so dead
                    // regions stay exactly constant.
                    let raw_g = &prep.raw_traces[r].g[start..start + win_len];
                    let mut st = compute_region_stats(&filt_w, ChannelMix::Green, cfg.spectral.band)
                        .map_err(|e| anyhow!("{e}"))?;
                    st.variance = rppg_core::dsp::variance(raw_g);
                    st.std = st.variance.sqrt();
                    Ok(st)
                })
                .collect::<Result<Vec<_>>>()?;

            let ids: Vec<usize> = if dmrs_on {
                select_regions(&stats, &cfg.selection)
            } else {
                stats.iter().map(|s| s.region_id).collect()
            };

            let mut diags = Vec::with_capacity(n_regions);
            for s in &stats {
                diags.push(WindowDiagnostics {
                    window_start_s: t0,
                    region_id: s.region_id,
                    variance: s.variance,
                    kfd: s.kfd,
                    dfa_alpha: s.dfa_alpha,
                    snr_db: s.snr_db,
                    psd_energy: s.psd_energy,
                    selected: ids.contains(&s.region_id),
                });
            }

            // Convert the selected regions and aggregate.
            let mut pulses: Vec<(usize, Vec<f64>)> = Vec::with_capacity(ids.len());
            for &id in &ids {
                let region_idx = prep
                    .raw_traces
                    .iter()
                    .position(|t| t.region_id == id)
                    .ok_or_else(|| anyhow!("region {id} has no trace"))?;
                let w = region_pulse(prep, cfg, region_idx, start, win_len)?;
                if !w.flat {
                    pulses.push((id, w.samples));
                }
            }
            if pulses.is_empty() {
                return Ok(WindowResult { t0, bpm: None, pulse: None, start, diags });
            }
            let kept_ids: Vec<usize> = pulses.iter().map(|(id, _)| *id).collect();
            let agg = aggregate_regions(&pulses, &kept_ids, fs).map_err(|e| anyhow!("{e}"))?;

            let mut samples = agg.signal.samples;
            if post_filter_applies(cfg) && samples.len() >= post_spec.num_taps {
                let sig = Signal1D::new(samples, fs).map_err(|e| anyhow!("{e}"))?;
                samples = bandpass_fir(&sig, &post_spec).map_err(|e| anyhow!("{e}"))?.samples;
            }
            let window = PulseWindow { samples: samples.clone(), fs, method: cfg.method, flat: agg.flat };
            let bpm = estimate_hr(&window, &cfg.spectral);
            Ok(WindowResult { t0, bpm, pulse: Some(samples), start, diags })
        })
        .collect::<Result<Vec<_>>>()?;

    // Overlap-add the per-window pulses into a full-length signal.
    let mut acc = vec![0.0f64; n];
    let mut cover = vec![0u32; n];
    for r in &results {
        if let Some(p) = &r.pulse {
            for (i, v) in p.iter().enumerate() {
                acc[r.start + i] += v;
                cover[r.start + i] += 1;
            }
        }
    }
    for (a, c) in acc.iter_mut().zip(cover.iter()) {
        if *c > 0 {
            *a /= *c as f64;
        }
    }

    let times: Vec<f64> = results.iter().map(|r| r.t0).collect();
    let raw_bpm: Vec<Option<f64>> = results.iter().map(|r| r.bpm).collect();
    let hr = assemble_series(times, raw_bpm);
    let diagnostics = results.into_iter().flat_map(|r| r.diags).collect();

    Ok(ExtractOutput {
        bvp: BvpSignal { signal: Signal1D::new(acc, fs).context("bvp assembly")?, method: cfg.method },
        hr,
        diagnostics,
    })
}

/// One-shot extraction.
pub fn run_extract(data: &VideoData, cfg: &PipelineConfig) -> Result<ExtractOutput> {
    let prep = prepare(data, cfg)?;
    run_on_prepared(&prep, cfg)
}

/// Diagnostics CSV header.
pub const DIAGNOSTICS_CSV_HEADER: &str =
    "window_start,region_id,variance,kfd,dfa_alpha,snr_db,psd_energy,selected";

pub fn diagnostics_csv_row(d: &WindowDiagnostics) -> String {
    format!(
        "{:.3},{},{:.9},{},{:.6},{:.3},{:.9},{}",
        d.window_start_s,
        d.region_id,
        d.variance,
        d.kfd.map_or("nan".to_string(), |k| format!("{k:.6}")),
        d.dfa_alpha,
        d.snr_db,
        d.psd_energy,
        if d.selected { 1 } else { 0 }
    )
}
