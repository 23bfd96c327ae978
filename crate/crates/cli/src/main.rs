use anyhow::{anyhow, Context, Result};
use clap::{Parser, Subcommand};
use rppg_cli::config::{load_config, PipelineConfig, PipelineKind};
use rppg_cli::evaluate::{load_descriptor, run_evaluate, EvaluateOptions};
use rppg_cli::pipeline::{run_extract, VideoData, DIAGNOSTICS_CSV_HEADER};
use rppg_cli::plots::run_plots;
use rppg_cli::synthcmd::{parse_motion, run_synth, SynthOptions};
use rppg_core::rppg::MethodId;
use std::path::PathBuf;
use std::process::ExitCode;

/// Remote photoplethysmography: pulse and heart-rate extraction from
/// facial video with precomputed landmarks.
#[derive(Parser)]
#[command(name = "rppg", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extract a pulse signal and heart-rate series from one video.
    Extract {
        /// Frame directory (PNG + meta) or .raw container.
        #[arg(long)]
        frames: PathBuf,
        /// Landmark CSV (68- or 85-point rows).
        #[arg(long)]
        landmarks: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        method: Option<String>,
        #[arg(long)]
        pipeline: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate one or more methods over a dataset descriptor.
    Evaluate {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Comma-separated method list (default: the configured method).
        #[arg(long)]
        methods: Option<String>,
        #[arg(long)]
        pipeline: Option<String>,
        /// Sweep grid sizes 6x6 through 11x11.
        #[arg(long)]
        grid_sweep: bool,
        /// Parallel video workers.
        #[arg(long, default_value_t = 4)]
        jobs: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a synthetic benchmark dataset.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        count: usize,
        #[arg(long, default_value_t = 60.0)]
        duration: f64,
        #[arg(long, default_value_t = 30.0)]
        fs: f64,
        #[arg(long, default_value_t = 72.0)]
        bpm: f64,
        #[arg(long, default_value_t = 0.01)]
        amplitude: f64,
        #[arg(long, default_value_t = 2.0)]
        noise: f64,
        /// static | translation:vx,vy | jitter:sigma | translation-jitter:vx,vy,sigma
        #[arg(long, default_value = "static")]
        motion: String,
        /// Write one .raw container per clip instead of frame directories.
        #[arg(long)]
        raw: bool,
    },
    /// Render overlay and box plots for a finished evaluate run.
    Plots {
        #[arg(long)]
        run: PathBuf,
        /// Log-scale MAE box plot.
        #[arg(long)]
        log_scale: bool,
    },
}

fn load_pipeline_config(
    config: &Option<PathBuf>,
    method: &Option<String>,
    pipeline: &Option<String>,
) -> Result<PipelineConfig> {
    let mut cfg = match config {
        Some(p) => load_config(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(m) = method {
        cfg.method = MethodId::from_name(m).map_err(|e| anyhow!("{e}"))?;
    }
    if let Some(p) = pipeline {
        cfg.pipeline = PipelineKind::from_name(p)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn cmd_extract(
    frames: &PathBuf,
    landmarks: &PathBuf,
    config: &Option<PathBuf>,
    method: &Option<String>,
    pipeline: &Option<String>,
    out: &PathBuf,
) -> Result<()> {
    let cfg = load_pipeline_config(config, method, pipeline)?;
    let source = rppg_core::io::FrameSource::from_path(frames.clone());
    let (video_frames, fs) = source.load().map_err(|e| anyhow!("{e}"))?;
    let mut lms = rppg_core::io::load_landmarks(landmarks).map_err(|e| anyhow!("{e}"))?;
    if lms.len() < video_frames.len() {
        lms.resize(video_frames.len(), None);
    }
    let data = VideoData { frames: video_frames, fs, landmarks: lms };
    let result = run_extract(&data, &cfg)?;

    std::fs::create_dir_all(out)?;
    let mut bvp_csv = String::from("t,value\n");
    for (i, v) in result.bvp.signal.samples.iter().enumerate() {
        bvp_csv.push_str(&format!("{:.4},{v:.8}\n", i as f64 / fs));
    }
    std::fs::write(out.join("bvp.csv"), bvp_csv)?;
    let mut hr_csv = String::from("t,bpm,valid\n");
    for i in 0..result.hr.len() {
        hr_csv.push_str(&format!(
            "{:.3},{:.4},{}\n",
            result.hr.times[i], result.hr.bpm[i], result.hr.valid[i] as u8
        ));
    }
    std::fs::write(out.join("hr.csv"), hr_csv)?;
    let mut diag = String::from(DIAGNOSTICS_CSV_HEADER);
    diag.push('\n');
    for d in &result.diagnostics {
        diag.push_str(&rppg_cli::pipeline::diagnostics_csv_row(d));
        diag.push('\n');
    }
    std::fs::write(out.join("diagnostics.csv"), diag)?;
    println!(
        "extracted {} windows with {} / {}; outputs in {}",
        result.hr.len(),
        cfg.pipeline.name(),
        cfg.method.name(),
        out.display()
    );
    Ok(())
}

fn run() -> Result<i32> {
    let cli = Cli::parse();
    match &cli.command {
        Command::Extract { frames, landmarks, config, method, pipeline, out } => {
            cmd_extract(frames, landmarks, config, method, pipeline, out).map(|_| 0)
        }
        Command::Evaluate { dataset, config, methods, pipeline, grid_sweep, jobs, out } => {
            let cfg = load_pipeline_config(config, &None, pipeline)?;
            let methods: Vec<MethodId> = match methods {
                Some(list) => list
                    .split(',')
                    .map(|m| MethodId::from_name(m.trim()).map_err(|e| anyhow!("{e}")))
                    .collect::<Result<Vec<_>>>()?,
                None => vec![cfg.method],
            };
            let descriptor = load_descriptor(dataset)?;
            let opts = EvaluateOptions {
                methods,
                grid_sweep: *grid_sweep,
                jobs: *jobs,
                out_dir: out.clone(),
            };
            let summary = run_evaluate(&descriptor, &cfg, &opts)
                .context("evaluation failed")?;
            for agg in &summary.aggregates {
                println!(
                    "{} {}: MAE {:.2} +- {:.2} bpm, PCC {}, RMSE {:.2} bpm",
                    agg.video_id,
                    agg.method,
                    agg.mae_bpm,
                    agg.mae_sd_bpm,
                    agg.pcc.map_or("n/a".to_string(), |p| format!("{p:.2}")),
                    agg.rmse_bpm
                );
            }
            for e in &summary.exclusions {
                eprintln!("excluded: {e}");
            }
            Ok(if summary.exclusions.is_empty() { 0 } else { 4 })
        }
        Command::Synth { out, seed, count, duration, fs, bpm, amplitude, noise, motion, raw } => {
            let opts = SynthOptions {
                duration_s: *duration,
                fs: *fs,
                bpm: *bpm,
                amplitude: *amplitude,
                noise_sigma: *noise,
                motion: parse_motion(motion)?,
                count: *count,
                raw_container: *raw,
            };
            run_synth(out, &opts, *seed)?;
            println!("wrote {} synthetic clip(s) to {}", count, out.display());
            Ok(0)
        }
        Command::Plots { run, log_scale } => {
            let written = run_plots(run, *log_scale)?;
            for p in &written {
                println!("{}", p.display());
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            // Config and validation problems exit 2; data problems exit 3.
            let msg = format!("{e:#}");
            if msg.contains("config") || msg.contains("unknown") || msg.contains("must") {
                ExitCode::from(2)
            } else {
                ExitCode::from(3)
            }
        }
    }
}
