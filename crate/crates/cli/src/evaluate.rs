//! Dataset evaluation: per-video extraction, reference processing,
//! alignment, metrics, and report emission.

use crate::config::PipelineConfig;
use crate::pipeline::{self, VideoData};
use anyhow::{anyhow, Context, Result};
use rayon::prelude::*;
use rppg_core::dsp::{bandpass_fir, detrend, BandpassSpec, DetrendMethod};
use rppg_core::eval::{
    aggregate_dataset, compute_metrics, estimate_alignment, report_csv_row, AlignmentParams, GroupBy,
    MetricsReport, ReportMeta, REPORT_CSV_HEADER,
};
use rppg_core::io::{load_landmarks, load_reference, DatasetDescriptor, VideoEntry};
use rppg_core::rppg::MethodId;
use rppg_core::spectral::{apply_gap_mask, mask_reference_gaps, reference_hr, HrSeries, ReferenceKind};
use serde::Deserialize;
use std::path::{Path, PathBuf};

/// Parsed dataset descriptor file (TOML).
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DescriptorFile {
    name: String,
    #[serde(default)]
    alignment_lag_s: Option<f64>,
    #[serde(default)]
    videos: Vec<VideoFile>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct VideoFile {
    id: String,
    frames: PathBuf,
    landmarks: PathBuf,
    reference: PathBuf,
    reference_kind: String,
    reference_fs: f64,
    #[serde(default)]
    scenario: String,
    #[serde(default)]
    ecg_channel: Option<usize>,
}

/// Loads a dataset descriptor, resolving relative paths against the file's
/// directory.
pub fn load_descriptor(path: &Path) -> Result<DatasetDescriptor> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let file: DescriptorFile = toml::from_str(&text).context("parsing dataset descriptor")?;
    let base = path.parent().unwrap_or(Path::new("."));
    let resolve = |p: &PathBuf| if p.is_absolute() { p.clone() } else { base.join(p) };
    let videos = file
        .videos
        .iter()
        .map(|v| {
            Ok(VideoEntry {
                id: v.id.clone(),
                frames: rppg_core::io::FrameSource::from_path(resolve(&v.frames)),
                landmarks: resolve(&v.landmarks),
                reference: resolve(&v.reference),
                reference_kind: match v.reference_kind.as_str() {
                    "bvp" => ReferenceKind::Bvp,
                    "ecg" => ReferenceKind::Ecg,
                    other => anyhow::bail!("video {}: unknown reference kind '{other}'", v.id),
                },
                reference_fs: v.reference_fs,
                scenario: v.scenario.clone(),
                ecg_channel: v.ecg_channel,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DatasetDescriptor { name: file.name, videos, alignment_lag_s: file.alignment_lag_s })
}

/// Evaluation run options.
#[derive(Debug, Clone)]
pub struct EvaluateOptions {
    pub methods: Vec<MethodId>,
    pub grid_sweep: bool,
    pub jobs: usize,
    pub out_dir: PathBuf,
}

/// Summary of a finished run.
#[derive(Debug)]
pub struct RunSummary {
    pub reports: Vec<MetricsReport>,
    pub aggregates: Vec<MetricsReport>,
    pub exclusions: Vec<String>,
}

fn load_video(entry: &VideoEntry) -> Result<VideoData> {
    let (frames, fs) = entry.frames.load().map_err(|e| anyhow!("video {}: {e}", entry.id))?;
    let mut landmarks = load_landmarks(&entry.landmarks).map_err(|e| anyhow!("video {}: {e}", entry.id))?;
    if landmarks.len() < frames.len() {
        landmarks.resize(frames.len(), None);
    }
    Ok(VideoData { frames, fs, landmarks })
}

/// The reference side runs through the identical spectral path as the
/// extracted signal: same detrend, same band-pass, same Welch windows.
fn reference_series(entry: &VideoEntry, cfg: &PipelineConfig) -> Result<HrSeries> {
    let reference = load_reference(&entry.reference, entry.reference_fs)
        .map_err(|e| anyhow!("video {}: {e}", entry.id))?;
    let mask = mask_reference_gaps(&reference);
    let prepared = match entry.reference_kind {
        ReferenceKind::Bvp => {
            let sig = detrend(&reference, DetrendMethod::Linear).map_err(|e| anyhow!("{e}"))?;
            let spec = BandpassSpec {
                low_hz: cfg.bandpass_low_hz,
                high_hz: cfg.bandpass_high_hz,
                beta: cfg.bandpass_beta,
                num_taps: {
                    let mut t = (4.2 * sig.fs).round() as usize;
                    if t % 2 == 0 {
                        t += 1;
                    }
                    t
                },
            };
            if sig.len() >= spec.num_taps {
                bandpass_fir(&sig, &spec).map_err(|e| anyhow!("{e}"))?
            } else {
                sig
            }
        }
        ReferenceKind::Ecg => reference.clone(),
    };
    let mut series =
        reference_hr(&prepared, entry.reference_kind, &cfg.spectral).map_err(|e| anyhow!("{e}"))?;
    apply_gap_mask(&mut series, &mask, reference.fs, &cfg.spectral, 0.2);
    Ok(series)
}

struct VideoOutcome {
    report: MetricsReport,
    hr_rows: String,
    diag_rows: String,
}

fn evaluate_video(
    entry: &VideoEntry,
    cfg: &PipelineConfig,
    dataset_lag: Option<f64>,
) -> Result<VideoOutcome> {
    let data = load_video(entry)?;
    let out = pipeline::run_extract(&data, cfg)?;
    let ref_series = reference_series(entry, cfg)?;

    let align = match dataset_lag {
        Some(lag) => AlignmentParams { lag_s: lag, ..AlignmentParams::zero() },
        None => match estimate_alignment(&ref_series, &out.hr, 3.0) {
            Ok(a) => a,
            Err(_) => AlignmentParams::zero(),
        },
    };
    let meta = ReportMeta {
        video_id: entry.id.clone(),
        scenario_tag: entry.scenario.clone(),
        method: cfg.method.name().to_string(),
        pipeline: cfg.pipeline.name().to_string(),
        grid_n: cfg.selection.grid_n,
    };
    let report = compute_metrics(&ref_series, &out.hr, &align, meta).map_err(|e| anyhow!("{e}"))?;

    // Per-window HR rows for the overlay plots.
    let mut hr_rows = String::from("t,ref_bpm,est_bpm,ref_valid,est_valid\n");
    let lag_steps = (align.lag_s / ref_series.step_s()).round() as i64;
    for i in 0..ref_series.len() as i64 {
        let j = i - lag_steps;
        if j < 0 || j >= out.hr.len() as i64 {
            continue;
        }
        let (iu, ju) = (i as usize, j as usize);
        hr_rows.push_str(&format!(
            "{:.3},{:.4},{:.4},{},{}\n",
            ref_series.times[iu],
            ref_series.bpm[iu],
            out.hr.bpm[ju],
            ref_series.valid[iu] as u8,
            out.hr.valid[ju] as u8
        ));
    }

    let mut diag_rows = String::from(pipeline::DIAGNOSTICS_CSV_HEADER);
    diag_rows.push('\n');
    for d in &out.diagnostics {
        diag_rows.push_str(&pipeline::diagnostics_csv_row(d));
        diag_rows.push('\n');
    }

    Ok(VideoOutcome { report, hr_rows, diag_rows })
}

/// Runs the evaluation matrix over a dataset and writes reports to the
/// output directory. Per-video failures are logged and excluded; the run
/// continues.
pub fn run_evaluate(
    descriptor: &DatasetDescriptor,
    base_cfg: &PipelineConfig,
    opts: &EvaluateOptions,
) -> Result<RunSummary> {
    descriptor.validate().map_err(|e| anyhow!("{e}"))?;
    std::fs::create_dir_all(&opts.out_dir)?;

    // Configuration matrix: methods x grid sizes.
    let grids: Vec<usize> = if opts.grid_sweep { (6..=11).collect() } else { vec![base_cfg.selection.grid_n] };
    let mut configs = Vec::new();
    for &method in &opts.methods {
        for &g in &grids {
            let mut cfg = base_cfg.clone();
            cfg.method = method;
            cfg.selection.grid_n = g;
            cfg.validate()?;
            configs.push(cfg);
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs.max(1))
        .build()
        .context("building worker pool")?;

    let mut reports = Vec::new();
    let mut exclusions = Vec::new();
    for cfg in &configs {
        let outcomes: Vec<(String, Result<VideoOutcome>)> = pool.install(|| {
            descriptor
                .videos
                .par_iter()
                .map(|v| (v.id.clone(), evaluate_video(v, cfg, descriptor.alignment_lag_s)))
                .collect()
        });
        for (id, outcome) in outcomes {
            match outcome {
                Ok(o) => {
                    let tag = format!("{}_{}_{}x{}", id, cfg.method.name(), cfg.selection.grid_n, cfg.selection.grid_n);
                    std::fs::write(opts.out_dir.join(format!("hr_{tag}.csv")), &o.hr_rows)?;
                    std::fs::write(opts.out_dir.join(format!("diag_{tag}.csv")), &o.diag_rows)?;
                    reports.push(o.report);
                }
                Err(e) => exclusions.push(format!("{id} [{}]: {e}", cfg.method.name())),
            }
        }
    }

    if reports.is_empty() {
        anyhow::bail!("no video produced a report ({} exclusions)", exclusions.len());
    }

    // Per-video rows.
    let mut csv = String::from(REPORT_CSV_HEADER);
    csv.push('\n');
    for r in &reports {
        csv.push_str(&report_csv_row(r));
        csv.push('\n');
    }
    std::fs::write(opts.out_dir.join("reports.csv"), &csv)?;

    // Aggregates: per method, plus per grid when sweeping, plus per
    // scenario when tags exist.
    let mut aggregates = Vec::new();
    for &method in &opts.methods {
        let of_method: Vec<MetricsReport> =
            reports.iter().filter(|r| r.method == method.name()).cloned().collect();
        if of_method.is_empty() {
            continue;
        }
        if opts.grid_sweep {
            aggregates.extend(aggregate_dataset(&of_method, GroupBy::GridN).map_err(|e| anyhow!("{e}"))?);
        } else {
            aggregates.extend(aggregate_dataset(&of_method, GroupBy::None).map_err(|e| anyhow!("{e}"))?);
        }
        if of_method.iter().any(|r| !r.scenario_tag.is_empty()) {
            aggregates.extend(aggregate_dataset(&of_method, GroupBy::Scenario).map_err(|e| anyhow!("{e}"))?);
        }
    }
    let mut agg_csv = String::from(REPORT_CSV_HEADER);
    agg_csv.push('\n');
    for r in &aggregates {
        agg_csv.push_str(&report_csv_row(r));
        agg_csv.push('\n');
    }
    std::fs::write(opts.out_dir.join("aggregates.csv"), &agg_csv)?;

    // JSON summary.
    let summary = serde_json::json!({
        "dataset": descriptor.name,
        "videos": descriptor.videos.len(),
        "methods": opts.methods.iter().map(|m| m.name()).collect::<Vec<_>>(),
        "grid_sweep": opts.grid_sweep,
        "reports": reports.len(),
        "exclusions": exclusions,
        "aggregates": aggregates.iter().map(|a| {
            serde_json::json!({
                "group": a.video_id,
                "method": a.method,
                "mae_bpm": a.mae_bpm,
                "mae_sd_bpm": a.mae_sd_bpm,
                "pcc": a.pcc,
                "rmse_bpm": a.rmse_bpm,
            })
        }).collect::<Vec<_>>(),
    });
    std::fs::write(opts.out_dir.join("summary.json"), serde_json::to_string_pretty(&summary)?)?;

    Ok(RunSummary { reports, aggregates, exclusions })
}
